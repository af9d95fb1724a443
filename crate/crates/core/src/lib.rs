//! Joint event trigger and argument-role extraction with a graph
//! convolutional network running over pruned dependency trees.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and
//! anything else touching the filesystem live in the `evgcn` crate.
//!
//! Layout:
//!
//! - [`corpus`]: annotated sentences, label vocabularies, BIO encoding and
//!   document-level splitting.
//! - [`deptree`]: dependency trees, lowest common ancestors, contextual
//!   sub-tree pruning and adjacency matrices.
//! - [`ndgrad`]: a small dense tensor tape with reverse-mode gradients and
//!   the Adam optimizer.
//! - [`model`]: the extractor network (token encoder, trigger classifier,
//!   GCN stack and argument-role head).
//! - [`embeddings`]: pluggable per-token word-vector providers.
//! - [`pipeline`]: training loop and the evaluation scorer.
//! - [`synthetic`]: a seeded template corpus used by tests and demos.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod deptree;
pub mod embeddings;
pub mod labels;
pub mod model;
pub mod ndgrad;
pub mod pipeline;
pub mod synthetic;

pub use corpus::{
    Argument, EntityMention, EventMention, LabelVocab, Sentence, Span, Token, ValidationError,
};
pub use deptree::{AdjMatrix, DepTree, SubTree, TreeError};
pub use embeddings::{EmbeddingError, EmbeddingProvider, StaticTable};
pub use model::{Activation, EncoderConfig, ExtractorModel, ModelError, Pooling};
pub use ndgrad::{Adam, AdamConfig, ParamStore, Tape, Tensor, Var};
pub use pipeline::{evaluate, train, MetricsReport, TrainConfig, TrainError};
pub use synthetic::CUE_ROLES;
