//! Learning a reference by differentiating through unrolled GS iterations.

mod adam;
mod grad;
mod gradcheck;
mod trace;
mod train;

pub use adam::{adam_step, AdamState};
pub use grad::{loss_and_grad_u, loss_and_grad_u_end_to_end, loss_and_grad_u_variant, VjpVariant};
pub use gradcheck::{gradcheck, GradcheckConfig, GradcheckReport, TrialResult};
pub use trace::{unrolled_forward, unrolled_forward_eps, UnrollTrace};
pub use train::{
    initial_reference, train_reference, train_reference_from, validation_mse, HistoryRecord,
    StopReason, TrainConfig, TrainOutcome,
};
