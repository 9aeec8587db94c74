//! Sigmoid and binary cross entropy with probability clamping.

use super::Real;
use crate::error::{Error, Result};

/// Probabilities are clamped into `[PROB_EPS, 1 - PROB_EPS]` before any log.
pub const PROB_EPS: f64 = 1e-7;

pub fn sigmoid<T: Real>(z: T) -> T {
    let one = T::one();
    if z >= T::zero() {
        one / (one + (-z).exp())
    } else {
        let e = z.exp();
        e / (one + e)
    }
}

pub fn clamp_prob<T: Real>(p: T) -> T {
    let lo = T::from_f64(PROB_EPS);
    let hi = T::one() - lo;
    p.max(lo).min(hi)
}

/// Mean negative log likelihood over the batch, with clamped probabilities.
pub fn bce<T: Real>(probs: &[T], labels: &[bool]) -> Result<T> {
    if probs.is_empty() {
        return Err(Error::Contract("bce over an empty batch".into()));
    }
    if probs.len() != labels.len() {
        return Err(Error::Contract(format!(
            "bce length mismatch: {} probs vs {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let mut total = T::zero();
    for (&p, &y) in probs.iter().zip(labels) {
        let p = clamp_prob(p);
        total += if y { -p.ln() } else { -(T::one() - p).ln() };
    }
    Ok(total / T::from_f64(probs.len() as f64))
}

/// BCE plus its gradient with respect to the pre-sigmoid logits.
///
/// For unclamped probabilities the logit gradient of the mean loss is
/// `(p - y) / B`. Where the clamp is active the loss is locally constant in
/// the logit, so the gradient is exactly zero; this keeps the analytic
/// gradient consistent with finite differences of the actual forward loss.
pub fn bce_with_grad<T: Real>(probs: &[T], labels: &[bool]) -> Result<(T, Vec<T>)> {
    let loss = bce(probs, labels)?;
    let lo = T::from_f64(PROB_EPS);
    let hi = T::one() - lo;
    let inv_b = T::one() / T::from_f64(probs.len() as f64);
    let grad = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            if p <= lo || p >= hi {
                T::zero()
            } else {
                let target = if y { T::one() } else { T::zero() };
                (p - target) * inv_b
            }
        })
        .collect();
    Ok((loss, grad))
}
