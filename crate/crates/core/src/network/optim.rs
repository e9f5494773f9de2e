use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Gradients, MlpModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub clip_norm: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 0.05,
            momentum: 0.0,
            clip_norm: 1.0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) {
            return Err(Error::Config(format!("learning_rate must be >= 0, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::Config(format!("clip_norm must be > 0, got {}", self.clip_norm)));
        }
        Ok(())
    }
}

/// Rescales all gradients by `clip_norm / g` when their global L2 norm `g`
/// exceeds `clip_norm`.
pub fn clip_global_norm(mut grads: Gradients, clip_norm: f64) -> Gradients {
    let norm = grads.global_norm();
    if norm > clip_norm {
        grads.scale(clip_norm / norm);
    }
    grads
}

/// Stochastic gradient descent. With zero momentum no buffer is allocated and
/// the update is exactly `w ← w − lr·g`.
#[derive(Clone, Debug)]
pub struct Sgd {
    cfg: SgdConfig,
    velocity: Option<Gradients>,
}

impl Sgd {
    pub fn new(cfg: SgdConfig) -> Self {
        Sgd { cfg, velocity: None }
    }

    pub fn config(&self) -> &SgdConfig {
        &self.cfg
    }

    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients) -> Result<()> {
        let lr = self.cfg.learning_rate;
        let update = if self.cfg.momentum > 0.0 {
            let v = self.velocity.get_or_insert_with(|| Gradients::zeros_like(model));
            v.scale(self.cfg.momentum);
            for (vw, gw) in v.weights.iter_mut().zip(&grads.weights) {
                vw.add_scaled(gw, 1.0)?;
            }
            for (vb, gb) in v.biases.iter_mut().zip(&grads.biases) {
                vb.iter_mut().zip(gb).for_each(|(a, b)| *a += b);
            }
            &*v
        } else {
            grads
        };
        for (w, g) in model.weights_mut().iter_mut().zip(&update.weights) {
            w.add_scaled(g, -lr)?;
        }
        for (b, g) in model.biases_mut().iter_mut().zip(&update.biases) {
            b.iter_mut().zip(g).for_each(|(x, d)| *x -= lr * d);
        }
        Ok(())
    }
}
