//! Deterministic laboratory for fine-tuning based machine unlearning.
//!
//! The linear half works with over-parameterized least squares: a model
//! pretrained on all data, a model fine-tuned on part of the remaining data,
//! and a golden model retrained on the remaining data alone. Measured losses
//! are compared against closed-form predictions. The classifier half runs
//! naive and regularized fine-tuning on a toy class-wise forgetting task.

pub mod classifier;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod scenario;
pub mod solvers;

pub use error::{LabError, Result};
