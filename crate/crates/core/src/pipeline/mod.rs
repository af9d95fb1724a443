//! Training loop and evaluation.

mod metrics;
mod train;

pub use metrics::{score, MetricsReport, Prf};
pub use train::{
    batch_loss, evaluate, extract_all, prepare, train, train_with, EpochReport, PreparedPair, PreparedSentence,
    TrainConfig, TrainError, TrainOutcome,
};
