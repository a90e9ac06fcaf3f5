//! Datasets, non-IID client partitions and the shared public pool.

mod csv_io;
mod dataset;
mod partition;
mod public;
mod shift;
mod synthetic;

pub use csv_io::{load_csv, read_csv};
pub use dataset::{ClientPartition, LabeledDataset, PublicDataset, RoundBatch, ShiftKind, ShiftTag};
pub use partition::{partition_non_iid, MIN_CLIENT_SAMPLES};
pub use public::{build_public_dataset, select_round_batch};
pub use shift::{apply_covariate_shift, FeatureShift};
pub use synthetic::{class_center, generate_synthetic};
