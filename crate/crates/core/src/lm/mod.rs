//! A small causal transformer language model with hand-written
//! backpropagation.
//!
//! Every sequence starts with the begin-of-sentence id, so the token with
//! 1-based sentence id `k` sits at model position `k`, and the logits at
//! position `k - 1` score it.

mod checkpoint;
mod config;
mod model;
mod params;
mod train;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use config::{ModelConfig, REFERENCE_VOCAB};
pub use model::{ForwardTrace, TransformerLM};
pub use params::{LayerParams, Params};
pub use train::{
    encode_corpus, learning_rate, perplexity, train, train_with_callback, EpochStats, LossCurve, TrainHyperparams,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LmError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("sequence of length {len} exceeds max_len {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("token id {id} outside vocabulary of size {vocab}")]
    OutOfVocabId { id: u32, vocab: usize },
    #[error("empty input sequence")]
    EmptySequence,
    #[error("no candidates to score")]
    NoCandidates,
    #[error("loss became non-finite at epoch {epoch}, step {step}")]
    DivergenceDetected { epoch: usize, step: usize },
    #[error("nothing to score: empty corpus")]
    EmptyCorpus,
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for LmError {
    fn from(e: std::io::Error) -> Self {
        LmError::Io(e.to_string())
    }
}

/// Floating-point element type of model parameters.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + ndarray::LinalgScalar
    + ndarray::ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Byte width, used as the checkpoint dtype tag.
    const WIDTH: u8;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;

    fn of(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("finite constant")
    }
}

impl Scalar for f32 {
    const WIDTH: u8 = 4;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

impl Scalar for f64 {
    const WIDTH: u8 = 8;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}
