//! Trainable tensors and their Adam state.
//!
//! Parameters are plain structs; [`ParamSet::tensors`] flattens them into a
//! fixed-order list of named slices so the optimizer, checkpointing and the
//! finite-difference checker all walk the same layout.

use rand::Rng;

use super::matrix::Mat;
use super::Real;
use crate::error::{Error, Result};

/// Architecture sizes. `hidden_dim` is both the embedding width and the head
/// hidden width; `synth_heads` is the number of synthetic-task heads (one per
/// enabled anomaly type, or one shared head).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub synth_heads: usize,
}

/// One attention layer: separate self and neighbor transforms, one attention
/// vector for each, plus an output bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub w_self: Mat<T>,
    pub w_nbr: Mat<T>,
    pub a_self: Vec<T>,
    pub a_nbr: Vec<T>,
    pub bias: Vec<T>,
}

/// Two-layer scoring head: hidden ReLU layer then a scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadMlp<T> {
    pub w1: Mat<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: T,
}

/// Every trainable tensor of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T> {
    pub layer1: LayerParams<T>,
    pub layer2: LayerParams<T>,
    pub synth_heads: Vec<HeadMlp<T>>,
    pub real_head: HeadMlp<T>,
}

/// Gradients share the parameter layout exactly.
pub type GradSet<T> = ParamSet<T>;

/// Name and regularization class of one tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorMeta {
    pub name: String,
    /// Whether L2 regularization applies (weights yes, biases no).
    pub decay: bool,
}

fn meta(name: impl Into<String>, decay: bool) -> TensorMeta {
    TensorMeta { name: name.into(), decay }
}

impl<T: Real> LayerParams<T> {
    fn zeros(input: usize, output: usize) -> Self {
        Self {
            w_self: Mat::zeros(input, output),
            w_nbr: Mat::zeros(input, output),
            a_self: vec![T::zero(); output],
            a_nbr: vec![T::zero(); output],
            bias: vec![T::zero(); output],
        }
    }
}

impl<T: Real> HeadMlp<T> {
    fn zeros(hidden: usize) -> Self {
        Self {
            w1: Mat::zeros(hidden, hidden),
            b1: vec![T::zero(); hidden],
            w2: vec![T::zero(); hidden],
            b2: T::zero(),
        }
    }
}

fn glorot<T: Real, R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> impl FnMut() -> T + '_ {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    move || T::from_f64(rng.gen_range(-bound..=bound))
}

impl<T: Real> ParamSet<T> {
    pub fn zeros(dims: &ModelDims) -> Self {
        Self {
            layer1: LayerParams::zeros(dims.input_dim, dims.hidden_dim),
            layer2: LayerParams::zeros(dims.hidden_dim, dims.hidden_dim),
            synth_heads: (0..dims.synth_heads).map(|_| HeadMlp::zeros(dims.hidden_dim)).collect(),
            real_head: HeadMlp::zeros(dims.hidden_dim),
        }
    }

    /// Glorot-uniform weights and attention vectors, zero biases. Draw order
    /// is fixed: layer 1 tensors, layer 2, real head, synthetic heads — the
    /// real head comes before the synthetic heads so its initialization does
    /// not depend on how many synthetic heads a variant carries.
    pub fn init<R: Rng>(dims: &ModelDims, rng: &mut R) -> Self {
        let mut set = Self::zeros(dims);
        {
            let h = dims.hidden_dim;
            for (input, layer) in [(dims.input_dim, &mut set.layer1), (h, &mut set.layer2)] {
                let mut draw = glorot(input, h, rng);
                for x in &mut layer.w_self.data {
                    *x = draw();
                }
                for x in &mut layer.w_nbr.data {
                    *x = draw();
                }
                drop(draw);
                let mut draw = glorot(h, 1, rng);
                for x in layer.a_self.iter_mut().chain(layer.a_nbr.iter_mut()) {
                    *x = draw();
                }
            }
            for head in std::iter::once(&mut set.real_head).chain(set.synth_heads.iter_mut()) {
                let mut draw = glorot(h, h, rng);
                for x in &mut head.w1.data {
                    *x = draw();
                }
                drop(draw);
                let mut draw = glorot(h, 1, rng);
                for x in &mut head.w2 {
                    *x = draw();
                }
            }
        }
        set
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            input_dim: self.layer1.w_self.rows,
            hidden_dim: self.layer1.w_self.cols,
            synth_heads: self.synth_heads.len(),
        }
    }

    /// Fixed-order named views over every tensor.
    pub fn tensors(&self) -> Vec<(TensorMeta, &[T])> {
        let mut out = Vec::new();
        for (tag, layer) in [("enc1", &self.layer1), ("enc2", &self.layer2)] {
            out.push((meta(format!("{tag}.w_self"), true), layer.w_self.data.as_slice()));
            out.push((meta(format!("{tag}.w_nbr"), true), layer.w_nbr.data.as_slice()));
            out.push((meta(format!("{tag}.a_self"), true), layer.a_self.as_slice()));
            out.push((meta(format!("{tag}.a_nbr"), true), layer.a_nbr.as_slice()));
            out.push((meta(format!("{tag}.bias"), false), layer.bias.as_slice()));
        }
        let heads = self
            .synth_heads
            .iter()
            .enumerate()
            .map(|(k, head)| (format!("head_s{k}"), head))
            .chain(std::iter::once(("head_real".to_string(), &self.real_head)));
        for (tag, head) in heads {
            out.push((meta(format!("{tag}.w1"), true), head.w1.data.as_slice()));
            out.push((meta(format!("{tag}.b1"), false), head.b1.as_slice()));
            out.push((meta(format!("{tag}.w2"), true), head.w2.as_slice()));
            out.push((meta(format!("{tag}.b2"), false), std::slice::from_ref(&head.b2)));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(TensorMeta, &mut [T])> {
        let ParamSet { layer1, layer2, synth_heads, real_head } = self;
        let mut out: Vec<(TensorMeta, &mut [T])> = Vec::new();
        for (tag, layer) in [("enc1", layer1), ("enc2", layer2)] {
            let LayerParams { w_self, w_nbr, a_self, a_nbr, bias } = layer;
            out.push((meta(format!("{tag}.w_self"), true), w_self.data.as_mut_slice()));
            out.push((meta(format!("{tag}.w_nbr"), true), w_nbr.data.as_mut_slice()));
            out.push((meta(format!("{tag}.a_self"), true), a_self.as_mut_slice()));
            out.push((meta(format!("{tag}.a_nbr"), true), a_nbr.as_mut_slice()));
            out.push((meta(format!("{tag}.bias"), false), bias.as_mut_slice()));
        }
        let heads = synth_heads
            .iter_mut()
            .enumerate()
            .map(|(k, head)| (format!("head_s{k}"), head))
            .chain(std::iter::once(("head_real".to_string(), real_head)));
        for (tag, head) in heads {
            let HeadMlp { w1, b1, w2, b2 } = head;
            out.push((meta(format!("{tag}.w1"), true), w1.data.as_mut_slice()));
            out.push((meta(format!("{tag}.b1"), false), b1.as_mut_slice()));
            out.push((meta(format!("{tag}.w2"), true), w2.as_mut_slice()));
            out.push((meta(format!("{tag}.b2"), false), std::slice::from_mut(b2)));
        }
        out
    }

    /// `self += a * other`, tensor by tensor.
    pub fn axpy(&mut self, a: T, other: &Self) {
        let mut mine = self.tensors_mut();
        let theirs = other.tensors();
        assert_eq!(mine.len(), theirs.len());
        for ((ma, xs), (mb, ys)) in mine.iter_mut().zip(theirs.iter()) {
            debug_assert_eq!(ma.name, mb.name);
            super::matrix::axpy(xs, a, ys);
        }
    }

    /// Largest relative coordinate difference versus `other`.
    pub fn max_rel_diff(&self, other: &Self, floor: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for ((_, xs), (_, ys)) in self.tensors().iter().zip(other.tensors().iter()) {
            for (x, y) in xs.iter().zip(ys.iter()) {
                let (x, y) = (x.as_f64(), y.as_f64());
                let denom = x.abs().max(y.abs()).max(floor);
                worst = worst.max((x - y).abs() / denom);
            }
        }
        worst
    }

    /// Error naming the first tensor holding a non-finite value.
    pub fn check_finite(&self) -> Result<()> {
        for (meta, xs) in self.tensors() {
            if xs.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!("non-finite values in tensor {}", meta.name)));
            }
        }
        Ok(())
    }

    pub fn coord_count(&self) -> usize {
        self.tensors().iter().map(|(_, xs)| xs.len()).sum()
    }
}

/// Parameters plus optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub params: ParamSet<T>,
    pub adam_m: ParamSet<T>,
    pub adam_v: ParamSet<T>,
    pub step: u64,
}

impl<T: Real> ModelParams<T> {
    /// Fresh model with seeded Glorot init and zeroed moments.
    pub fn init<R: Rng>(dims: &ModelDims, rng: &mut R) -> Self {
        Self {
            params: ParamSet::init(dims, rng),
            adam_m: ParamSet::zeros(dims),
            adam_v: ParamSet::zeros(dims),
            step: 0,
        }
    }

    pub fn dims(&self) -> ModelDims {
        self.params.dims()
    }
}
