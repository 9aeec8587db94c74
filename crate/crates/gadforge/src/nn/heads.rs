//! Detection heads: linear-ReLU-linear scorers over embedding rows.

use super::loss::{clamp_prob, sigmoid};
use super::matrix::{axpy, dot, Mat};
use super::params::HeadMlp;
use super::Real;

/// Forward activations for one head over one batch.
#[derive(Debug, Clone)]
pub struct HeadCache<T> {
    pub nodes: Vec<u32>,
    /// Batch rows of the embedding matrix.
    pub input: Mat<T>,
    /// Hidden layer before ReLU.
    pub hidden_pre: Mat<T>,
    /// Pre-sigmoid scalars.
    pub logits: Vec<T>,
    /// Probabilities, clamped into `[eps, 1-eps]`.
    pub probs: Vec<T>,
}

/// Score the embedding rows of `nodes` with one head.
pub fn head_forward<T: Real>(head: &HeadMlp<T>, embeddings: &Mat<T>, nodes: &[u32]) -> HeadCache<T> {
    let hidden = head.b1.len();
    let mut input = Mat::zeros(nodes.len(), embeddings.cols);
    for (i, &v) in nodes.iter().enumerate() {
        input.row_mut(i).copy_from_slice(embeddings.row(v as usize));
    }
    let mut hidden_pre = input.matmul(&head.w1);
    for i in 0..nodes.len() {
        for (x, b) in hidden_pre.row_mut(i).iter_mut().zip(&head.b1) {
            *x += *b;
        }
    }
    let mut logits = Vec::with_capacity(nodes.len());
    let mut probs = Vec::with_capacity(nodes.len());
    let mut relu_row = vec![T::zero(); hidden];
    for i in 0..nodes.len() {
        for (r, &x) in relu_row.iter_mut().zip(hidden_pre.row(i)) {
            *r = if x > T::zero() { x } else { T::zero() };
        }
        let z = dot(&relu_row, &head.w2) + head.b2;
        logits.push(z);
        probs.push(clamp_prob(sigmoid(z)));
    }
    HeadCache { nodes: nodes.to_vec(), input, hidden_pre, logits, probs }
}

/// Backward through one head given `d_logits = dL/dz` per batch item.
/// Parameter gradients accumulate into `grads`; embedding-row gradients
/// accumulate into `d_embeddings` (rows may repeat in a batch).
pub fn head_backward<T: Real>(
    head: &HeadMlp<T>,
    cache: &HeadCache<T>,
    d_logits: &[T],
    grads: &mut HeadMlp<T>,
    d_embeddings: &mut Mat<T>,
) {
    let hidden = head.b1.len();
    let mut relu_row = vec![T::zero(); hidden];
    let mut d_hidden = vec![T::zero(); hidden];
    for (i, (&v, &dz)) in cache.nodes.iter().zip(d_logits).enumerate() {
        let pre = cache.hidden_pre.row(i);
        for (r, &x) in relu_row.iter_mut().zip(pre) {
            *r = if x > T::zero() { x } else { T::zero() };
        }
        axpy(&mut grads.w2, dz, &relu_row);
        grads.b2 += dz;
        for j in 0..hidden {
            d_hidden[j] = if pre[j] > T::zero() { head.w2[j] * dz } else { T::zero() };
        }
        axpy(&mut grads.b1, T::one(), &d_hidden);
        let x = cache.input.row(i);
        for (k, &xk) in x.iter().enumerate() {
            if xk != T::zero() {
                axpy(grads.w1.row_mut(k), xk, &d_hidden);
            }
        }
        let d_row = d_embeddings.row_mut(v as usize);
        for (k, slot) in d_row.iter_mut().enumerate() {
            *slot += dot(head.w1.row(k), &d_hidden);
        }
    }
}
