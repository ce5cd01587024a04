//! From raw frames to labelled cubes: ingestion, resizing, flips,
//! annotations, window assembly, manifests, statistics and a synthetic
//! fixture generator.

pub mod annotation;
pub mod cube;
pub mod frames;
pub mod label;
pub mod manifest;
pub mod stats;
pub mod synth;

pub use annotation::{frame_labels, load_annotations, save_annotations, validate_annotations, AnnotationRecord};
pub use cube::{assemble_cubes, majority_label, window_labels, Cube};
pub use frames::{
    augment_flips, ingest_frames, preprocess, resize_bilinear, write_ppm, write_ppm_dir, FrameSequence,
    PreprocessConfig, DEFAULT_FRAME_RATE,
};
pub use label::ClassLabel;
pub use manifest::{DatasetManifest, ManifestEntry, Multiplicity, Origin, Split};
pub use stats::{collect_video_info, dataset_stats, DatasetStats, VideoInfo};
pub use synth::{synth_fixture, SynthConfig, SynthFixture};
