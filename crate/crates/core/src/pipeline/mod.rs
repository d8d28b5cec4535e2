//! Per-author splits, training samples and the block training loop.

mod samples;
mod split;
mod train;

pub use samples::{first_name_form, generate_training_samples, name_form, TrainingSample, VariateMode};
pub use split::{split_per_author, split_sizes, Split, SplitAssignment};
pub use train::{
    run_training, train_block_model, BlockTrainer, EpochModel, EpochRecord, TrainOutcome, TrainRunConfig,
    TrainingHistory,
};
