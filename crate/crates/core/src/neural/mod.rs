//! Two-branch feedforward classifier.
//!
//! Input `x1` (names) and input `x2` (title and source) each pass through
//! their own stack of ReLU layers. The two branch outputs are concatenated
//! and pass through the merged ReLU stack, then a softmax output layer with
//! one unit per author. Inverted dropout is applied to the final hidden
//! layer during training.
//!
//! Gradients are computed by hand for this fixed topology. All parameters
//! live in one flat list of dense layers ordered branch 1, branch 2,
//! merged, output; gradients and optimizer moments use the same order.

mod adam;
mod checkpoint;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::encoders::FeatureVectorPair;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed;

/// Floor applied to the true-class probability inside the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub x1_dim: usize,
    pub x2_dim: usize,
    pub branch1_hidden: Vec<usize>,
    pub branch2_hidden: Vec<usize>,
    pub merged_hidden: Vec<usize>,
    pub n_classes: usize,
    pub dropout_rate: f64,
    /// Also drop units of the last layer of each branch.
    pub dropout_branches: bool,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(n_classes: usize) -> Self {
        ModelConfig {
            x1_dim: 2 * crate::encoders::NAME_DIM,
            x2_dim: crate::encoders::TEXT_DIM,
            branch1_hidden: vec![256],
            branch2_hidden: vec![256],
            merged_hidden: vec![256, 128],
            n_classes,
            dropout_rate: 0.5,
            dropout_branches: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let widths = self
            .branch1_hidden
            .iter()
            .chain(&self.branch2_hidden)
            .chain(&self.merged_hidden);
        if self.x1_dim == 0 || self.x2_dim == 0 {
            return Err(Error::Config("input widths must be at least 1".into()));
        }
        if widths.into_iter().any(|&w| w == 0) {
            return Err(Error::Config("hidden widths must be at least 1".into()));
        }
        if self.n_classes == 0 {
            return Err(Error::Config("at least one class is required".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    /// (fan_in, fan_out) of every dense layer in parameter order.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::new();
        let mut chain = |input: usize, widths: &[usize]| -> usize {
            let mut prev = input;
            for &w in widths {
                shapes.push((prev, w));
                prev = w;
            }
            prev
        };
        let d1 = chain(self.x1_dim, &self.branch1_hidden);
        let d2 = chain(self.x2_dim, &self.branch2_hidden);
        let dm = chain(d1 + d2, &self.merged_hidden);
        shapes.push((dm, self.n_classes));
        shapes
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o)| i * o + o).sum()
    }
}

/// One fully connected layer. `w` is `fan_in x fan_out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub w: Array2<T>,
    pub b: Array1<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            w: Array2::zeros((fan_in, fan_out)),
            b: Array1::zeros(fan_out),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Dense::zeros(self.w.nrows(), self.w.ncols())
    }

    fn values(&self) -> impl Iterator<Item = &T> {
        self.w.iter().chain(self.b.iter())
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.w.iter_mut().chain(self.b.iter_mut())
    }
}

/// Gradients, shaped like the network's layers.
pub type Gradients<T> = Vec<Dense<T>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    config: ModelConfig,
    layers: Vec<Dense<T>>,
}

/// Activations kept for the backward pass.
struct Trace<T> {
    /// Input of every layer.
    inputs: Vec<Array2<T>>,
    /// Pre-activations of hidden layers.
    pre: Vec<Array2<T>>,
    /// Scaled dropout masks, per hidden layer.
    masks: Vec<Option<Array2<T>>>,
    probs: Array2<T>,
}

fn relu<T: Real>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows<T: Real>(logits: &mut Array2<T>) {
    for mut row in logits.rows_mut() {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: T = row.iter().copied().sum();
        row.mapv_inplace(|v| v / sum);
    }
}

impl<T: Real> Network<T> {
    /// Fan-in scaled normal initialization (std = sqrt(2 / fan_in)), zero biases.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = seed::rng(config.seed, "init");
        let layers = config
            .layer_shapes()
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
                let w = Array2::from_shape_fn((fan_in, fan_out), |_| T::from_f64_lossy(normal.sample(&mut rng)));
                Dense {
                    w,
                    b: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Network { config, layers })
    }

    /// Builds a network from explicit layers, checking shapes against the config.
    pub fn from_layers(config: ModelConfig, layers: Vec<Dense<T>>) -> Result<Self> {
        config.validate()?;
        let shapes = config.layer_shapes();
        if shapes.len() != layers.len() {
            return Err(Error::Config(format!(
                "expected {} layers, got {}",
                shapes.len(),
                layers.len()
            )));
        }
        for ((fi, fo), l) in shapes.iter().zip(&layers) {
            if l.w.dim() != (*fi, *fo) || l.b.len() != *fo {
                return Err(Error::Config(format!(
                    "layer shape {:?}/{} does not match {fi}x{fo}",
                    l.w.dim(),
                    l.b.len()
                )));
            }
        }
        Ok(Network { config, layers })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn n_classes(&self) -> usize {
        self.config.n_classes
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Every parameter in layer order, weights before biases.
    pub fn flat_params(&self) -> Vec<T> {
        self.layers.iter().flat_map(|l| l.values().copied()).collect()
    }

    pub fn set_flat_params(&mut self, values: &[T]) {
        assert_eq!(values.len(), self.param_count());
        let mut it = values.iter();
        for l in &mut self.layers {
            for v in l.values_mut() {
                *v = *it.next().unwrap();
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.values().all(|v| v.is_finite()))
    }

    fn ranges(&self) -> (std::ops::Range<usize>, std::ops::Range<usize>, std::ops::Range<usize>) {
        let n1 = self.config.branch1_hidden.len();
        let n2 = self.config.branch2_hidden.len();
        let nm = self.config.merged_hidden.len();
        (0..n1, n1..n1 + n2, n1 + n2..n1 + n2 + nm)
    }

    fn output_index(&self) -> usize {
        self.layers.len() - 1
    }

    /// Hidden layers whose output gets dropout in training.
    fn dropout_layers(&self) -> Vec<usize> {
        let (b1, b2, m) = self.ranges();
        let mut out = Vec::new();
        if let Some(last) = m.clone().last() {
            out.push(last);
        }
        if self.config.dropout_branches || m.is_empty() {
            out.extend(b1.last());
            out.extend(b2.last());
        }
        out
    }

    fn check_dims(&self, x1: usize, x2: usize) -> Result<()> {
        if x1 != self.config.x1_dim {
            return Err(Error::Dimension {
                expected: self.config.x1_dim,
                actual: x1,
            });
        }
        if x2 != self.config.x2_dim {
            return Err(Error::Dimension {
                expected: self.config.x2_dim,
                actual: x2,
            });
        }
        Ok(())
    }

    fn run<R: Rng + ?Sized>(&self, x1: ArrayView2<T>, x2: ArrayView2<T>, mut rng: Option<&mut R>) -> Trace<T> {
        let n_layers = self.layers.len();
        let mut trace = Trace {
            inputs: Vec::with_capacity(n_layers),
            pre: Vec::with_capacity(n_layers),
            masks: vec![None; n_layers],
            probs: Array2::zeros((0, 0)),
        };
        let drop_at = self.dropout_layers();
        let rate = self.config.dropout_rate;

        let mut chain = |range: std::ops::Range<usize>, mut a: Array2<T>, trace: &mut Trace<T>| -> Array2<T> {
            for l in range {
                let layer = &self.layers[l];
                let z = a.dot(&layer.w) + &layer.b;
                let mut out = z.mapv(relu);
                if let Some(rng) = rng.as_deref_mut() {
                    if rate > 0.0 && drop_at.contains(&l) {
                        let scale = T::lit(1.0 / (1.0 - rate));
                        let mask = Array2::from_shape_fn(out.dim(), |_| {
                            if rng.random::<f64>() < rate {
                                T::zero()
                            } else {
                                scale
                            }
                        });
                        out = out * &mask;
                        trace.masks[l] = Some(mask);
                    }
                }
                trace.inputs.push(a);
                trace.pre.push(z);
                a = out;
            }
            a
        };

        let (b1, b2, m) = self.ranges();
        let h1 = chain(b1, x1.to_owned(), &mut trace);
        let h2 = chain(b2, x2.to_owned(), &mut trace);
        let joined = ndarray::concatenate(Axis(1), &[h1.view(), h2.view()]).expect("same batch size");
        let h = chain(m, joined, &mut trace);

        let out = &self.layers[self.output_index()];
        let mut logits = h.dot(&out.w) + &out.b;
        trace.inputs.push(h);
        softmax_rows(&mut logits);
        trace.probs = logits;
        trace
    }

    /// Class probabilities for a batch, one row per sample. Deterministic.
    pub fn predict_batch(&self, x1: ArrayView2<T>, x2: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_dims(x1.ncols(), x2.ncols())?;
        Ok(self.run::<seed::Rng>(x1, x2, None).probs)
    }

    /// Class probabilities for one sample. `Train` mode samples a dropout mask.
    pub fn forward<R: Rng + ?Sized>(&self, pair: &FeatureVectorPair<T>, mode: Mode, rng: &mut R) -> Result<Vec<T>> {
        let (x1, x2) = single_batch(pair);
        self.check_dims(x1.ncols(), x2.ncols())?;
        let rng = match mode {
            Mode::Train => Some(rng),
            Mode::Infer => None,
        };
        Ok(self.run(x1.view(), x2.view(), rng).probs.row(0).to_vec())
    }

    pub fn predict(&self, pair: &FeatureVectorPair<T>) -> Result<Vec<T>> {
        let (x1, x2) = single_batch(pair);
        Ok(self.predict_batch(x1.view(), x2.view())?.row(0).to_vec())
    }

    /// Activations of the final hidden layer, after dropout in `Train` mode.
    pub fn final_hidden<R: Rng + ?Sized>(
        &self,
        pair: &FeatureVectorPair<T>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Vec<T>> {
        let (x1, x2) = single_batch(pair);
        self.check_dims(x1.ncols(), x2.ncols())?;
        let rng = match mode {
            Mode::Train => Some(rng),
            Mode::Infer => None,
        };
        let trace = self.run(x1.view(), x2.view(), rng);
        Ok(trace.inputs[self.output_index()].row(0).to_vec())
    }

    /// Mean weighted cross-entropy over the batch and its gradients.
    ///
    /// Sample `i` contributes `-weights[i] * ln(max(p_i[targets[i]], 1e-12))`.
    pub fn loss_and_gradients_batch<R: Rng + ?Sized>(
        &self,
        x1: ArrayView2<T>,
        x2: ArrayView2<T>,
        targets: &[usize],
        weights: &[T],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(T, Gradients<T>)> {
        self.check_dims(x1.ncols(), x2.ncols())?;
        let batch = x1.nrows();
        if x2.nrows() != batch || targets.len() != batch || weights.len() != batch {
            return Err(Error::Dimension {
                expected: batch,
                actual: targets.len(),
            });
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= self.config.n_classes) {
            return Err(Error::Config(format!("class {t} out of range")));
        }
        let rng = match mode {
            Mode::Train => Some(rng),
            Mode::Infer => None,
        };
        let trace = self.run(x1, x2, rng);

        let inv_b = T::one() / T::from_usize(batch.max(1)).unwrap();
        let floor = T::lit(PROB_FLOOR);
        let mut loss = T::zero();
        let mut delta = trace.probs.clone();
        for (i, (&t, &w)) in targets.iter().zip(weights).enumerate() {
            loss = loss - w * trace.probs[[i, t]].max(floor).ln();
            delta[[i, t]] = delta[[i, t]] - T::one();
            let scale = w * inv_b;
            delta.row_mut(i).mapv_inplace(|v| v * scale);
        }
        loss = loss * inv_b;

        let mut grads: Gradients<T> = self.layers.iter().map(Dense::zeros_like).collect();
        let out = self.output_index();
        grads[out].w = trace.inputs[out].t().dot(&delta);
        grads[out].b = delta.sum_axis(Axis(0));
        let mut upstream = delta.dot(&self.layers[out].w.t());

        let (b1, b2, m) = self.ranges();
        let back = |range: std::ops::Range<usize>,
                    mut da: Array2<T>,
                    grads: &mut Gradients<T>,
                    need_input: bool|
         -> Option<Array2<T>> {
            let first = range.start;
            for l in range.rev() {
                if let Some(mask) = &trace.masks[l] {
                    da = da * mask;
                }
                Zip::from(&mut da).and(&trace.pre[l]).for_each(|d, &z| {
                    if z <= T::zero() {
                        *d = T::zero();
                    }
                });
                grads[l].w = trace.inputs[l].t().dot(&da);
                grads[l].b = da.sum_axis(Axis(0));
                if l == first && !need_input {
                    return None;
                }
                da = da.dot(&self.layers[l].w.t());
            }
            Some(da)
        };

        upstream = back(m, upstream, &mut grads, true).expect("merged input gradient");
        let d1 = self.config.branch1_hidden.last().copied().unwrap_or(self.config.x1_dim);
        let up1 = upstream.slice(s![.., ..d1]).to_owned();
        let up2 = upstream.slice(s![.., d1..]).to_owned();
        back(b1, up1, &mut grads, false);
        back(b2, up2, &mut grads, false);
        Ok((loss, grads))
    }

    /// Weighted cross-entropy of one sample and its gradients.
    pub fn loss_and_gradients<R: Rng + ?Sized>(
        &self,
        pair: &FeatureVectorPair<T>,
        true_class: usize,
        class_weight: T,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(T, Gradients<T>)> {
        if true_class >= self.config.n_classes {
            return Err(Error::Config(format!("class {true_class} out of range")));
        }
        let (x1, x2) = single_batch(pair);
        self.loss_and_gradients_batch(x1.view(), x2.view(), &[true_class], &[class_weight], mode, rng)
    }

    /// Mean weighted loss without gradients, in inference mode.
    pub fn loss_batch(&self, x1: ArrayView2<T>, x2: ArrayView2<T>, targets: &[usize], weights: &[T]) -> Result<T> {
        let probs = self.predict_batch(x1, x2)?;
        let floor = T::lit(PROB_FLOOR);
        let mut loss = T::zero();
        for (i, (&t, &w)) in targets.iter().zip(weights).enumerate() {
            loss = loss - w * probs[[i, t]].max(floor).ln();
        }
        Ok(loss / T::from_usize(targets.len().max(1)).unwrap())
    }
}

fn single_batch<T: Real>(pair: &FeatureVectorPair<T>) -> (Array2<T>, Array2<T>) {
    let x1 = Array2::from_shape_vec((1, pair.x1.len()), pair.x1.clone()).expect("row vector");
    let x2 = Array2::from_shape_vec((1, pair.x2.len()), pair.x2.clone()).expect("row vector");
    (x1, x2)
}

/// Stacks samples into the two input matrices.
pub fn stack<T: Real>(pairs: &[&FeatureVectorPair<T>]) -> (Array2<T>, Array2<T>) {
    let d1 = pairs.first().map_or(0, |p| p.x1.len());
    let d2 = pairs.first().map_or(0, |p| p.x2.len());
    let mut x1 = Array2::zeros((pairs.len(), d1));
    let mut x2 = Array2::zeros((pairs.len(), d2));
    for (i, p) in pairs.iter().enumerate() {
        x1.row_mut(i).assign(&ndarray::ArrayView1::from(&p.x1[..]));
        x2.row_mut(i).assign(&ndarray::ArrayView1::from(&p.x2[..]));
    }
    (x1, x2)
}

/// Per-class loss weights `N / (L * n_l)` from per-class sample counts.
pub fn class_weights(counts: &[usize]) -> Result<Vec<f64>> {
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass { class });
    }
    let total: usize = counts.iter().sum();
    let classes = counts.len() as f64;
    Ok(counts.iter().map(|&n| total as f64 / (classes * n as f64)).collect())
}
