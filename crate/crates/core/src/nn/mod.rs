//! Dense-network machinery: models, losses, optimizer and scheduler.

mod loss;
mod model;
mod optim;
mod train;

pub use loss::{
    check_simplex, cross_entropy_from_logits, cross_entropy_loss, kd_from_logits, kd_loss, log_softmax, softmax,
    SIMPLEX_TOLERANCE,
};
pub use model::{Activation, Logits, Model, ModelSpec};
pub use optim::{apply_update, OptimizerKind, OptimizerState, SchedulerKind, SchedulerState};
pub use train::run_epoch;
pub(crate) use train::gather_rows;
