//! Model assembly, the training loop and checkpoints.

pub mod checkpoint;
mod config;
pub mod gradcheck;
mod model;
mod train;

use thiserror::Error;

pub use checkpoint::{CheckpointError, CHECKPOINT_FILE};
pub use gradcheck::{gradcheck_graph, model_gradcheck, DEFAULT_GRADCHECK_EPS, DEFAULT_GRADCHECK_TOL};
pub use config::{TrainConfig, Variant, CONFIG_KEYS};
pub use model::{ForwardOutput, HaGnn, ModelDims, ModelState, Prediction};
pub use train::{
    split_metrics, train, train_log_header, train_state, write_train_log, EpochLog, TrainOutcome, TRAIN_LOG_FILE,
};

use crate::fusion::LossError;
use crate::graph::GraphError;
use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("config: {0}")]
    Config(String),
    #[error("unknown variant `{0}` (expected FULL, V1, V2 or F)")]
    UnknownVariant(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("{0}")]
    Io(String),
    #[error("numeric failure at epoch {epoch}: {source}")]
    Numeric {
        epoch: usize,
        source: TensorError,
        last_good: Box<TrainOutcome>,
    },
}
