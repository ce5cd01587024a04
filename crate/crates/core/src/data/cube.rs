//! Fixed-length cubes cut from a frame sequence.

use super::annotation::{frame_labels, AnnotationRecord};
use super::frames::FrameSequence;
use super::label::ClassLabel;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct Cube {
    /// `window × H × W × 3`
    pub data: Tensor<f32>,
    pub label: ClassLabel,
    pub video_id: String,
    pub start_frame: usize,
}

/// Majority label of a window. Ties go to the label that appears first in
/// the window.
pub fn majority_label(labels: &[ClassLabel]) -> ClassLabel {
    let mut counts = [0usize; ClassLabel::COUNT];
    let mut first_seen = [usize::MAX; ClassLabel::COUNT];
    for (i, l) in labels.iter().enumerate() {
        counts[l.index()] += 1;
        first_seen[l.index()] = first_seen[l.index()].min(i);
    }
    let best = (0..ClassLabel::COUNT)
        .filter(|&c| counts[c] > 0)
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(first_seen[b].cmp(&first_seen[a])))
        .unwrap_or(ClassLabel::Normal.index());
    ClassLabel::ALL[best]
}

/// Window labels for non-overlapping windows `[0, window)`, `[window, 2·window)`, …;
/// a trailing partial window is dropped.
pub fn window_labels(records: &[AnnotationRecord], frames: usize, window: usize) -> Result<Vec<ClassLabel>> {
    if window == 0 {
        return Err(Error::Config("cube window must be positive".into()));
    }
    let labels = frame_labels(records, frames)?;
    Ok(labels.chunks_exact(window).map(majority_label).collect())
}

pub fn assemble_cubes(seq: &FrameSequence, records: &[AnnotationRecord], window: usize) -> Result<Vec<Cube>> {
    let labels = window_labels(records, seq.len(), window)?;
    let per_frame = seq.height() * seq.width() * 3;
    let dims = [window, seq.height(), seq.width(), 3];
    labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let start = i * window;
            let data = seq.frames.data()[start * per_frame..(start + window) * per_frame].to_vec();
            Ok(Cube {
                data: Tensor::from_vec(&dims, data)?,
                label,
                video_id: seq.video_id.clone(),
                start_frame: start,
            })
        })
        .collect()
}
