//! Emotion lexicon expansion over calibrated embedding similarity.
//!
//! The pipeline: load an NRC-style [`lexicon`] and an [`embeddings`] table,
//! fit a PCA + Gaussian mixture [`cluster`] model on the lexicon words,
//! collect per-cluster similarity statistics ([`calibrate`]), then assign
//! emotions to candidate words whose calibrated similarity to the nearest
//! lexicon word of an emotion exceeds a threshold ([`expand`]). The
//! [`features`] and [`corpus`] modules turn a lexicon and stance corpora into
//! inputs for a downstream classifier.

pub mod calibrate;
pub mod cluster;
pub mod corpus;
pub mod embeddings;
pub mod emotion;
pub mod error;
pub mod expand;
pub mod features;
pub mod lexicon;
pub mod model;

pub use emotion::{Emotion, EmotionVector, EMOTIONS, NUM_EMOTIONS};
pub use error::{Error, Result};
pub use model::FittedModel;
