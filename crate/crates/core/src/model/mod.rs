//! The extractor network.
//!
//! Tokens are encoded as `[word; pos; entity-type]` rows. A one-hidden-layer
//! MLP classifies every token into an event type (or NONE). Each
//! trigger-entity pair is pruned to its contextual sub-tree, run through an
//! `L`-layer GCN and classified into an argument role (or NONE) from the
//! pooled sub-tree, trigger and entity representations.

mod extractor;

pub use extractor::{
    combine_losses, gold_pairs, joint_loss, merge_trigger_runs, ArgumentScores, Extraction, ExtractorModel,
    GoldPair, PairDecision, TokenFeatures, TriggerPrediction,
};

use alloc::string::String;

use thiserror::Error;

use crate::deptree::TreeError;
use crate::embeddings::EmbeddingError;
use crate::ndgrad::ShapeError;

/// Pooling `f` used for the sub-tree, trigger and entity vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Pooling {
    #[default]
    Max,
    Avg,
    Sum,
}

/// GCN non-linearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    #[default]
    Sigmoid,
    Relu,
}

/// Architecture hyperparameters.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EncoderConfig {
    pub word_dim: usize,
    pub pos_dim: usize,
    pub entity_dim: usize,
    pub gcn_layers: usize,
    pub gcn_hidden: usize,
    pub trigger_hidden: usize,
    pub pooling: Pooling,
    pub activation: Activation,
    /// Pruning distance; negative keeps the whole tree.
    pub dist: i32,
    /// Weight of the argument loss in the joint objective.
    pub beta: f64,
    /// When false the entity-type channel sees `O` for every token.
    pub entity_channel: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            word_dim: 768,
            pos_dim: 50,
            entity_dim: 50,
            gcn_layers: 2,
            gcn_hidden: 200,
            trigger_hidden: 200,
            pooling: Pooling::Max,
            activation: Activation::Sigmoid,
            dist: 1,
            beta: 2.0,
            entity_channel: true,
        }
    }
}

impl EncoderConfig {
    pub fn input_dim(&self) -> usize {
        self.word_dim + self.pos_dim + self.entity_dim
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            ("word_dim", self.word_dim),
            ("pos_dim", self.pos_dim),
            ("entity_dim", self.entity_dim),
            ("gcn_layers", self.gcn_layers),
            ("gcn_hidden", self.gcn_hidden),
            ("trigger_hidden", self.trigger_hidden),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(alloc::format!("{name} must be positive")));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(ModelError::Config(alloc::format!("beta must be non-negative, got {}", self.beta)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("parameter {name}: {reason}")]
    Parameter { name: String, reason: String },
}
