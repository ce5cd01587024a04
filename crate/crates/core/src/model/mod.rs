//! Network definition, checkpoints and the shape audit.

pub mod arch;
pub mod audit;
pub mod checkpoint;
pub mod net;

pub use arch::{compact_layers, gradcheck_layers, table1_layers, LayerSpec, DEFAULT_NUM_CLASSES, TABLE1_INPUT};
pub use audit::{shape_audit, Column, Deviation, ShapeAudit};
pub use checkpoint::{
    load_checkpoint, load_pretrained, read_checkpoint, save_checkpoint, Checkpoint, LayerLoadStatus, LoadPolicy,
    LoadReport, TrainingMeta,
};
pub use net::{build_model, AnomalyNet, ForwardCache, InitSpec, Layer, LayerKind, ParamGrads, TraceRow};
