//! Two-layer attention encoder with separated ego and neighbor transforms.
//!
//! Per layer and node `v`: the ego message is `W_self^T h_v`; each neighbor
//! `u` contributes `W_nbr^T h_u`, weighted by attention
//! `softmax_u(LeakyReLU(a_self . m_self(v) + a_nbr . m_nbr(u)))`. The ego
//! message is added outside the softmax, which keeps the ego and neighborhood
//! signals separated. ReLU follows layer 1 only; the final embedding stays
//! signed. Neighbor reductions run in ascending node-id order, so the forward
//! pass is bit-deterministic.
//!
//! The backward pass is hand-derived reverse mode through the softmax and
//! LeakyReLU paths and is verified against central finite differences.

use super::matrix::{axpy, dot, Mat};
use super::params::{LayerParams, ParamSet};
use super::Real;
use crate::graph::Graph;

const LEAKY_SLOPE: f64 = 0.2;

/// Forward activations of one layer, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerCache<T> {
    pub input: Mat<T>,
    pub m_self: Mat<T>,
    pub m_nbr: Mat<T>,
    /// Pre-LeakyReLU attention logits, one per CSR slot.
    pub raw_logits: Vec<T>,
    /// Normalized attention coefficients, one per CSR slot.
    pub att: Vec<T>,
    /// Layer output before the optional ReLU.
    pub pre_act: Mat<T>,
    pub relu: bool,
}

/// Caches for both layers plus the final embedding matrix.
#[derive(Debug, Clone)]
pub struct EncodeCache<T> {
    pub layer1: LayerCache<T>,
    pub layer2: LayerCache<T>,
    pub output: Mat<T>,
}

/// Graph features as a dense matrix in the engine's precision.
pub fn features_mat<T: Real>(g: &Graph) -> Mat<T> {
    Mat {
        rows: g.node_count(),
        cols: g.feature_dim(),
        data: g.features().iter().map(|&x| T::from_f64(x)).collect(),
    }
}

fn leaky<T: Real>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::from_f64(LEAKY_SLOPE) * x
    }
}

fn leaky_grad<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else {
        T::from_f64(LEAKY_SLOPE)
    }
}

/// One attention layer. Consumes `input` (kept in the cache); returns the
/// cache and the layer output.
pub fn forward_layer<T: Real>(
    g: &Graph,
    params: &LayerParams<T>,
    input: Mat<T>,
    relu: bool,
) -> (LayerCache<T>, Mat<T>) {
    let n = g.node_count();
    let out_dim = params.w_self.cols;
    let m_self = input.matmul(&params.w_self);
    let m_nbr = input.matmul(&params.w_nbr);

    let ego_score: Vec<T> = (0..n).map(|v| dot(&params.a_self, m_self.row(v))).collect();
    let nbr_score: Vec<T> = (0..n).map(|u| dot(&params.a_nbr, m_nbr.row(u))).collect();

    let mut raw_logits = vec![T::zero(); g.total_slots()];
    let mut att = vec![T::zero(); g.total_slots()];
    let mut pre_act = Mat::zeros(n, out_dim);
    for v in 0..n as u32 {
        let slots = g.slot_range(v);
        let nbrs = g.neighbors(v);
        for (slot, &u) in slots.clone().zip(nbrs) {
            raw_logits[slot] = ego_score[v as usize] + nbr_score[u as usize];
        }
        if !nbrs.is_empty() {
            // softmax over this neighborhood, max-subtracted
            let mut max = T::neg_infinity();
            for slot in slots.clone() {
                max = max.max(leaky(raw_logits[slot]));
            }
            let mut total = T::zero();
            for slot in slots.clone() {
                let e = (leaky(raw_logits[slot]) - max).exp();
                att[slot] = e;
                total += e;
            }
            for slot in slots.clone() {
                att[slot] /= total;
            }
        }
        let row = pre_act.row_mut(v as usize);
        row.copy_from_slice(m_self.row(v as usize));
        for (slot, &u) in slots.zip(nbrs) {
            axpy(row, att[slot], m_nbr.row(u as usize));
        }
        for (x, b) in row.iter_mut().zip(&params.bias) {
            *x += *b;
        }
    }

    let mut output = pre_act.clone();
    if relu {
        for x in &mut output.data {
            if *x < T::zero() {
                *x = T::zero();
            }
        }
    }
    let cache = LayerCache { input, m_self, m_nbr, raw_logits, att, pre_act, relu };
    (cache, output)
}

/// Full two-layer forward with caches.
pub fn encode_with_cache<T: Real>(g: &Graph, params: &ParamSet<T>) -> EncodeCache<T> {
    let x = features_mat(g);
    let (layer1, h1) = forward_layer(g, &params.layer1, x, true);
    let (layer2, output) = forward_layer(g, &params.layer2, h1, false);
    EncodeCache { layer1, layer2, output }
}

/// Embedding matrix only.
pub fn encode<T: Real>(g: &Graph, params: &ParamSet<T>) -> Mat<T> {
    encode_with_cache(g, params).output
}

/// Reverse-mode pass through one layer. `d_output` is the gradient at the
/// layer output (post-ReLU when the layer has one). Accumulates parameter
/// gradients into `grads` and returns the gradient at the layer input.
pub fn backward_layer<T: Real>(
    g: &Graph,
    params: &LayerParams<T>,
    cache: &LayerCache<T>,
    mut d_output: Mat<T>,
    grads: &mut LayerParams<T>,
) -> Mat<T> {
    let n = g.node_count();
    let out_dim = params.w_self.cols;
    let in_dim = params.w_self.rows;

    if cache.relu {
        for (dx, &pre) in d_output.data.iter_mut().zip(&cache.pre_act.data) {
            if pre <= T::zero() {
                *dx = T::zero();
            }
        }
    }
    let d_pre = d_output;

    for v in 0..n {
        for (b, &dx) in grads.bias.iter_mut().zip(d_pre.row(v)) {
            *b += dx;
        }
    }

    let mut d_m_self = d_pre.clone();
    let mut d_m_nbr = Mat::zeros(n, out_dim);
    let mut d_nbr_score = vec![T::zero(); n];

    let mut d_alpha: Vec<T> = Vec::new();
    let mut d_raw: Vec<T> = Vec::new();
    for v in 0..n as u32 {
        let slots = g.slot_range(v);
        let nbrs = g.neighbors(v);
        if nbrs.is_empty() {
            continue;
        }
        let dv = d_pre.row(v as usize);

        d_alpha.clear();
        for &u in nbrs {
            d_alpha.push(dot(dv, cache.m_nbr.row(u as usize)));
        }
        for (slot, &u) in slots.clone().zip(nbrs) {
            axpy(d_m_nbr.row_mut(u as usize), cache.att[slot], dv);
        }

        // softmax backward: d_e = att * (d_alpha - sum(att * d_alpha))
        let mut weighted = T::zero();
        for (i, slot) in slots.clone().enumerate() {
            weighted += cache.att[slot] * d_alpha[i];
        }
        d_raw.clear();
        let mut d_ego_score = T::zero();
        for (i, slot) in slots.clone().enumerate() {
            let d_e = cache.att[slot] * (d_alpha[i] - weighted);
            let dz = d_e * leaky_grad(cache.raw_logits[slot]);
            d_raw.push(dz);
            d_ego_score += dz;
        }
        for (i, &u) in nbrs.iter().enumerate() {
            d_nbr_score[u as usize] += d_raw[i];
        }

        axpy(&mut grads.a_self, d_ego_score, cache.m_self.row(v as usize));
        axpy(d_m_self.row_mut(v as usize), d_ego_score, &params.a_self);
    }

    for u in 0..n {
        let du = d_nbr_score[u];
        if du != T::zero() {
            axpy(&mut grads.a_nbr, du, cache.m_nbr.row(u));
            axpy(d_m_nbr.row_mut(u), du, &params.a_nbr);
        }
    }

    // linear transforms: dW += input^T dM, d_input = dM W^T
    let mut d_input = Mat::zeros(n, in_dim);
    for v in 0..n {
        let x = cache.input.row(v);
        let dms = d_m_self.row(v);
        let dmn = d_m_nbr.row(v);
        for i in 0..in_dim {
            let xi = x[i];
            if xi != T::zero() {
                axpy(grads.w_self.row_mut(i), xi, dms);
                axpy(grads.w_nbr.row_mut(i), xi, dmn);
            }
        }
        let di = d_input.row_mut(v);
        for i in 0..in_dim {
            di[i] = dot(params.w_self.row(i), dms) + dot(params.w_nbr.row(i), dmn);
        }
    }
    d_input
}

/// Reverse-mode pass through both layers. `d_output` is the gradient at the
/// final embedding; parameter gradients accumulate into `grads`.
pub fn encoder_backward<T: Real>(
    g: &Graph,
    params: &ParamSet<T>,
    cache: &EncodeCache<T>,
    d_output: Mat<T>,
    grads: &mut ParamSet<T>,
) {
    let d_h1 = backward_layer(g, &params.layer2, &cache.layer2, d_output, &mut grads.layer2);
    let _dx = backward_layer(g, &params.layer1, &cache.layer1, d_h1, &mut grads.layer1);
}
