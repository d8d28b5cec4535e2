use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::{Dense, Gradients, Network};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Step count and first/second moment estimates for every parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<Dense<T>>,
    pub v: Vec<Dense<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(network: &Network<T>, config: AdamConfig) -> Self {
        let zeros: Vec<Dense<T>> = network.layers().iter().map(Dense::zeros_like).collect();
        AdamState {
            config,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// One bias-corrected Adam update. Non-finite gradients are rejected
    /// before anything is modified.
    pub fn step(&mut self, network: &mut Network<T>, grads: &Gradients<T>) -> Result<()> {
        if grads.len() != network.layers().len() {
            return Err(Error::Dimension {
                expected: network.layers().len(),
                actual: grads.len(),
            });
        }
        for (g, p) in grads.iter().zip(network.layers()) {
            if g.w.dim() != p.w.dim() || g.b.len() != p.b.len() {
                return Err(Error::Dimension {
                    expected: p.w.len(),
                    actual: g.w.len(),
                });
            }
            if g.w.iter().chain(g.b.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("gradient".into()));
            }
        }

        self.t += 1;
        let c = self.config;
        let t = self.t as i32;
        let b1 = T::lit(c.beta1);
        let b2 = T::lit(c.beta2);
        let one = T::one();
        let lr = T::lit(c.learning_rate);
        let eps = T::lit(c.epsilon);
        let corr1 = T::lit(1.0 - c.beta1.powi(t));
        let corr2 = T::lit(1.0 - c.beta2.powi(t));

        let update = |p: &mut T, m: &mut T, v: &mut T, g: T| {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m / corr1;
            let v_hat = *v / corr2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        };

        for (((p, m), v), g) in network
            .layers_mut()
            .iter_mut()
            .zip(&mut self.m)
            .zip(&mut self.v)
            .zip(grads)
        {
            Zip::from(&mut p.w)
                .and(&mut m.w)
                .and(&mut v.w)
                .and(&g.w)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut p.b)
                .and(&mut m.b)
                .and(&mut v.b)
                .and(&g.b)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
        Ok(())
    }
}
