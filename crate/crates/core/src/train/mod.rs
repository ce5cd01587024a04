//! Optimization, the epoch loop, and windowed inference.

pub mod config;
pub mod optim;
pub mod predict;
pub mod trainer;

pub use config::TrainConfig;
pub use optim::{PlateauSchedule, SgdMomentum};
pub use predict::{evaluate_split, predict_video, read_traces, write_traces, EvalRows, PredictionRecord, PredictionTrace};
pub use trainer::{epoch_batches, load_cubes, train, write_epoch_log, CubeSet, EpochReport, Trainer};
