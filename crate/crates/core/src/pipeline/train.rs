use std::io::Write;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::samples::{generate_training_samples, TrainingSample};
use super::split::{Split, SplitAssignment};
use crate::blocking::Block;
use crate::encoders::{Encoders, EncodingCache};
use crate::error::{Error, Result};
use crate::neural::{class_weights, AdamConfig, AdamState, Mode, ModelConfig, Network};
use crate::scalar::Real;
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRunConfig {
    pub max_epochs: usize,
    /// Epochs without a strictly lower validation loss before stopping.
    pub patience: usize,
    /// Every this many epochs the random co-author `j` is redrawn.
    pub reassign_interval: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        TrainRunConfig {
            max_epochs: 1000,
            patience: 50,
            reassign_interval: 10,
            batch_size: 64,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainRunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patience == 0 || self.reassign_interval == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config(
                "max_epochs, patience, reassign_interval and batch_size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub checkpointed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned (1-based).
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainingHistory {
    pub fn best_accuracy(&self) -> f64 {
        self.epochs
            .iter()
            .find(|e| e.epoch == self.best_epoch)
            .map_or(0.0, |e| e.val_accuracy)
    }

    /// One JSON object per epoch.
    pub fn write_jsonl<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for e in &self.epochs {
            serde_json::to_writer(&mut *out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// What the epoch loop needs from a model under training.
pub trait EpochModel {
    type Snapshot;
    /// Runs one training epoch (1-based) and returns its mean loss.
    fn train_epoch(&mut self, epoch: usize) -> Result<f64>;
    /// Validation loss and accuracy of the current parameters.
    fn validate(&mut self) -> Result<(f64, f64)>;
    fn snapshot(&self) -> Self::Snapshot;
}

/// Trains until validation loss has failed to strictly improve for
/// `patience` epochs in a row, or `max_epochs`. Returns the snapshot of the
/// epoch with the highest validation accuracy; ties keep the earlier epoch.
pub fn run_training<M: EpochModel>(model: &mut M, config: &TrainRunConfig) -> Result<(M::Snapshot, TrainingHistory)> {
    config.validate()?;
    let mut history = TrainingHistory::default();
    let mut best: Option<(f64, M::Snapshot)> = None;
    let mut best_loss = f64::INFINITY;
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        let train_loss = model.train_epoch(epoch)?;
        if !train_loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss {train_loss} at epoch {epoch}")));
        }
        let (val_loss, val_accuracy) = model.validate()?;
        if !val_loss.is_finite() {
            return Err(Error::NonFinite(format!("validation loss {val_loss} at epoch {epoch}")));
        }
        let checkpointed = best.as_ref().is_none_or(|(acc, _)| val_accuracy > *acc);
        if checkpointed {
            best = Some((val_accuracy, model.snapshot()));
            history.best_epoch = epoch;
        }
        if val_loss < best_loss {
            best_loss = val_loss;
            stale = 0;
        } else {
            stale += 1;
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
            checkpointed,
        });
        if stale >= config.patience {
            history.stopped_early = true;
            break;
        }
    }
    let (_, snapshot) = best.expect("at least one epoch runs");
    Ok((snapshot, history))
}

/// Encoded samples as two input matrices plus labels.
struct SampleSet<T> {
    x1: Array2<T>,
    x2: Array2<T>,
    labels: Vec<usize>,
}

impl<T: Real> SampleSet<T> {
    fn encode(samples: &[TrainingSample], cache: &mut EncodingCache<'_, T>) -> Self {
        let d1 = cache.x1_dim();
        let d2 = cache.x2_dim();
        let mut x1 = Array2::zeros((samples.len(), d1));
        let mut x2 = Array2::zeros((samples.len(), d2));
        for (i, s) in samples.iter().enumerate() {
            let f = cache.features(&s.target_first_name, &s.coauthor_p, &s.coauthor_j, &s.title, &s.source);
            x1.row_mut(i).assign(&ndarray::ArrayView1::from(&f.x1[..]));
            x2.row_mut(i).assign(&ndarray::ArrayView1::from(&f.x2[..]));
        }
        SampleSet {
            x1,
            x2,
            labels: samples.iter().map(|s| s.label).collect(),
        }
    }

    fn len(&self) -> usize {
        self.labels.len()
    }
}

fn argmax_row<T: Real>(row: ndarray::ArrayView1<T>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Samples for every entry in `entries`, drawing `j` from `rng`.
fn samples_for<R: rand::Rng>(block: &Block, entries: &[usize], rng: &mut R) -> Vec<TrainingSample> {
    entries
        .iter()
        .flat_map(|&i| {
            let e = &block.entries[i];
            generate_training_samples(block.record_of(e), e.position, e.class, rng)
        })
        .collect()
}

/// Trains one block model on mini-batches of the TRAIN entries.
pub struct BlockTrainer<'a, T: Real> {
    pub network: Network<T>,
    pub adam: AdamState<T>,
    block: &'a Block,
    config: TrainRunConfig,
    cache: EncodingCache<'a, T>,
    train_entries: Vec<usize>,
    train: Option<SampleSet<T>>,
    class_weight: Vec<T>,
    val: SampleSet<T>,
    shuffle_rng: seed::Rng,
    dropout_rng: seed::Rng,
    /// Validation fell back to TRAIN entries because VAL is empty.
    pub validating_on_train: bool,
}

impl<'a, T: Real> BlockTrainer<'a, T> {
    pub fn new(
        block: &'a Block,
        split: &SplitAssignment,
        model: &ModelConfig,
        config: &TrainRunConfig,
        encoders: &'a Encoders<T>,
    ) -> Result<Self> {
        config.validate()?;
        if split.labels.len() != block.entries.len() {
            return Err(Error::LengthMismatch(split.labels.len(), block.entries.len()));
        }
        if model.n_classes != block.n_classes() {
            return Err(Error::ModelMismatch(format!(
                "model has {} classes, block `{}` has {}",
                model.n_classes,
                block.variate_key,
                block.n_classes()
            )));
        }
        if model.x1_dim != encoders.x1_dim() || model.x2_dim != encoders.x2_dim() {
            return Err(Error::Dimension {
                expected: model.x1_dim + model.x2_dim,
                actual: encoders.x1_dim() + encoders.x2_dim(),
            });
        }
        let train_entries = split.entries(Split::Train);
        if train_entries.is_empty() {
            return Err(Error::Empty(format!("TRAIN set of block `{}`", block.variate_key)));
        }

        // Each entry yields 2ω samples regardless of the draw of j.
        let mut counts = vec![0usize; block.n_classes()];
        for &i in &train_entries {
            let e = &block.entries[i];
            counts[e.class] += 2 * block.record_of(e).omega();
        }
        let class_weight = class_weights(&counts)?.into_iter().map(T::lit).collect();

        let mut val_entries = split.entries(Split::Val);
        let validating_on_train = val_entries.is_empty();
        if validating_on_train {
            val_entries = train_entries.clone();
        }
        let mut cache = EncodingCache::new(encoders);
        let val_samples = samples_for(block, &val_entries, &mut seed::rng(config.seed, "validation"));
        let val = SampleSet::encode(&val_samples, &mut cache);

        let mut model = model.clone();
        model.seed = seed::derive(config.seed, "model");
        let network = Network::init(model)?;
        let adam = AdamState::new(&network, config.adam);
        Ok(BlockTrainer {
            network,
            adam,
            block,
            config: config.clone(),
            cache,
            train_entries,
            train: None,
            class_weight,
            val,
            shuffle_rng: seed::rng(config.seed, "shuffle"),
            dropout_rng: seed::rng(config.seed, "dropout"),
            validating_on_train,
        })
    }
}

impl<T: Real> EpochModel for BlockTrainer<'_, T> {
    type Snapshot = Network<T>;

    fn train_epoch(&mut self, epoch: usize) -> Result<f64> {
        if self.train.is_none() || (epoch - 1).is_multiple_of(self.config.reassign_interval) {
            let round = ((epoch - 1) / self.config.reassign_interval) as u64;
            let mut rng = seed::rng_indexed(self.config.seed, "reassign", round);
            let samples = samples_for(self.block, &self.train_entries, &mut rng);
            self.train = Some(SampleSet::encode(&samples, &mut self.cache));
        }
        let train = self.train.as_ref().expect("samples generated");

        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut self.shuffle_rng);
        let mut total = 0.0;
        for batch in order.chunks(self.config.batch_size) {
            let x1 = train.x1.select(Axis(0), batch);
            let x2 = train.x2.select(Axis(0), batch);
            let targets: Vec<usize> = batch.iter().map(|&i| train.labels[i]).collect();
            let weights: Vec<T> = targets.iter().map(|&t| self.class_weight[t]).collect();
            let (loss, grads) = self.network.loss_and_gradients_batch(
                x1.view(),
                x2.view(),
                &targets,
                &weights,
                Mode::Train,
                &mut self.dropout_rng,
            )?;
            let loss = loss.to_f64_exact();
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("batch loss {loss} at epoch {epoch}")));
            }
            self.adam.step(&mut self.network, &grads)?;
            total += loss * batch.len() as f64;
        }
        Ok(total / train.len() as f64)
    }

    fn validate(&mut self) -> Result<(f64, f64)> {
        let probs = self.network.predict_batch(self.val.x1.view(), self.val.x2.view())?;
        let floor = crate::neural::PROB_FLOOR;
        let mut loss = 0.0;
        let mut hits = 0;
        for (row, &t) in probs.outer_iter().zip(&self.val.labels) {
            loss -= row[t].to_f64_exact().max(floor).ln();
            if argmax_row(row) == t {
                hits += 1;
            }
        }
        let n = self.val.len().max(1) as f64;
        Ok((loss / n, hits as f64 / n))
    }

    fn snapshot(&self) -> Network<T> {
        self.network.clone()
    }
}

/// A trained block model and how it got there.
#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    /// Parameters of the best-validation-accuracy epoch.
    pub network: Network<T>,
    pub history: TrainingHistory,
    pub validating_on_train: bool,
    /// Classes with no VAL entries; they take part in training only.
    pub unvalidated_classes: Vec<usize>,
}

pub fn train_block_model<T: Real>(
    block: &Block,
    split: &SplitAssignment,
    model: &ModelConfig,
    config: &TrainRunConfig,
    encoders: &Encoders<T>,
) -> Result<TrainOutcome<T>> {
    let mut trainer = BlockTrainer::new(block, split, model, config, encoders)?;
    let (network, history) = run_training(&mut trainer, config)?;
    let unvalidated_classes = split
        .class_counts(block, Split::Val)
        .iter()
        .enumerate()
        .filter(|(_, &n)| n == 0)
        .map(|(c, _)| c)
        .collect();
    Ok(TrainOutcome {
        network,
        history,
        validating_on_train: trainer.validating_on_train,
        unvalidated_classes,
    })
}
