//! Numeric substrate: dense kernels, the attention encoder, detection heads,
//! losses, Adam, gradient verification and checkpointing.
//!
//! Everything is generic over [`Real`] so training can run in f32 while
//! gradient verification runs in f64.

mod adam;
mod checkpoint;
mod encoder;
mod gradcheck;
mod heads;
mod loss;
mod matrix;
mod params;

pub use adam::{adam_step, AdamConfig};
pub use checkpoint::{
    checkpoint_bytes, checkpoint_from_bytes, load_checkpoint, save_checkpoint, Checkpoint,
};
pub use encoder::{encode, encode_with_cache, encoder_backward, EncodeCache, LayerCache};
pub use gradcheck::{finite_diff_report, GradCheckReport, GroupReport};
pub use heads::{head_backward, head_forward, HeadCache};
pub use loss::{bce, bce_with_grad, clamp_prob, sigmoid, PROB_EPS};
pub use matrix::Mat;
pub use params::{
    GradSet, HeadMlp, LayerParams, ModelDims, ModelParams, ParamSet, TensorMeta,
};

/// Scalar type the engine runs in: f32 for training, f64 for verification.
pub trait Real:
    num_traits::Float
    + num_traits::NumAssign
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Precision tag written into checkpoints.
    const BITS: u8;
    const BYTE_WIDTH: usize;

    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl Real for f32 {
    const BITS: u8 = 32;
    const BYTE_WIDTH: usize = 4;

    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes[..4].try_into().unwrap())
    }
}

impl Real for f64 {
    const BITS: u8 = 64;
    const BYTE_WIDTH: usize = 8;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn as_f64(self) -> f64 {
        self
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().unwrap())
    }
}
