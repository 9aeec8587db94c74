//! Adam with L2-in-loss regularization.

use serde::{Deserialize, Serialize};

use super::params::{GradSet, ModelParams};
use super::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 weight, applied as an additive gradient term `wd * theta` on decay
    /// tensors (weights and attention vectors, not biases).
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

/// One Adam update with bias correction. The L2 term enters the gradient
/// before the moment updates (L2-in-loss, not decoupled decay).
pub fn adam_step<T: Real>(model: &mut ModelParams<T>, grads: &GradSet<T>, cfg: &AdamConfig) -> Result<()> {
    if cfg.lr <= 0.0 {
        return Err(Error::Config(format!("learning rate must be positive, got {}", cfg.lr)));
    }
    model.step += 1;
    let t = model.step as i32;
    let lr = T::from_f64(cfg.lr);
    let b1 = T::from_f64(cfg.beta1);
    let b2 = T::from_f64(cfg.beta2);
    let eps = T::from_f64(cfg.eps);
    let wd = T::from_f64(cfg.weight_decay);
    let one = T::one();
    let bc1 = one - b1.powi(t);
    let bc2 = one - b2.powi(t);

    let ModelParams { params, adam_m, adam_v, .. } = model;
    let mut thetas = params.tensors_mut();
    let gs = grads.tensors();
    let mut ms = adam_m.tensors_mut();
    let mut vs = adam_v.tensors_mut();
    assert_eq!(thetas.len(), gs.len());
    for idx in 0..thetas.len() {
        let (meta, theta) = &mut thetas[idx];
        let (gmeta, g) = &gs[idx];
        debug_assert_eq!(meta.name, gmeta.name);
        let m = &mut ms[idx].1;
        let v = &mut vs[idx].1;
        let decay = meta.decay && cfg.weight_decay != 0.0;
        for i in 0..theta.len() {
            let mut gi = g[i];
            if decay {
                gi += wd * theta[i];
            }
            m[i] = b1 * m[i] + (one - b1) * gi;
            v[i] = b2 * v[i] + (one - b2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
