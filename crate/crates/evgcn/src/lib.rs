//! File formats, experiment runner and command-line front end for
//! `evgcn-core`.
//!
//! - [`corpus_json`]: one JSON document per file, sentences inline.
//! - [`conllu`]: CoNLL-U reader for bare dependency parses.
//! - [`embeddings_io`]: text word-vector tables and the binary contextual
//!   vector file.
//! - [`checkpoint`]: binary parameter files plus their JSON sidecar.
//! - [`experiment`]: JSON experiment configs, split/train/evaluate runs and
//!   their on-disk artifacts.

pub mod checkpoint;
pub mod conllu;
pub mod corpus_json;
pub mod embeddings_io;
pub mod experiment;

pub use checkpoint::{load_model, read_params, save_model, write_params, CheckpointError, ModelSidecar};
pub use corpus_json::{load_corpus, write_corpus, CorpusError};
pub use embeddings_io::{load_static, ContextualVectorFile, EmbeddingFileError};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentError, Provider};
