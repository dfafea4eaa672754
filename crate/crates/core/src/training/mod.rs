//! Optimiser, losses, data preparation, training loop and complexity accounting.

mod adam;
mod complexity;
mod cv;
mod data;
mod init;
mod loss;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use complexity::{
    analytic_flops, closed_form_parameters, count_complexity, estimated_time, memory_mb, ComplexityReport,
    HardwareProfile,
};
pub use cv::{fold_blocks, k_fold_cross_validate, CvOutcome};
pub use data::{
    chronological_split, fit_standardization, standardize, standardize_with, window_starts, Part, StandardizedData,
};
pub use init::{fans, glorot_bound, glorot_uniform, init_glorot};
pub use loss::{mse_loss, nmse, nmse_batch, nmse_complex, to_db, Nmse, NMSE_DB_FLOOR};
pub use train::{
    assemble_batch, evaluate, train, train_on_ranges, train_separate, train_step, Evaluation, TrainConfig,
    TrainReport,
};
