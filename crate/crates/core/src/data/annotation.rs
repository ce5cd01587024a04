//! Frame-level annotations and their CSV form
//! (`video_id,start_frame,end_frame,label`).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::label::ClassLabel;
use crate::error::{Error, Result};

/// Inclusive, 0-based frame range of one labelled event.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub video_id: String,
    pub start_frame: usize,
    pub end_frame: usize,
    pub label: ClassLabel,
}

impl AnnotationRecord {
    pub fn new(video_id: impl Into<String>, start_frame: usize, end_frame: usize, label: ClassLabel) -> Self {
        Self {
            video_id: video_id.into(),
            start_frame,
            end_frame,
            label,
        }
    }

    pub fn len(&self) -> usize {
        self.end_frame + 1 - self.start_frame
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, frame: usize) -> bool {
        (self.start_frame..=self.end_frame).contains(&frame)
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    video_id: String,
    start_frame: usize,
    end_frame: usize,
    label: String,
}

pub fn read_annotations(r: impl Read) -> Result<Vec<AnnotationRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["video_id", "start_frame", "end_frame", "label"] {
        return Err(Error::format(
            "annotation header",
            format!("expected video_id,start_frame,end_frame,label, found {}", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(csv_err)?;
        let label = row
            .label
            .parse()
            .map_err(|_| Error::format(format!("annotation row {}", line + 1), format!("unknown label `{}`", row.label)))?;
        out.push(AnnotationRecord::new(row.video_id, row.start_frame, row.end_frame, label));
    }
    Ok(out)
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>> {
    read_annotations(std::fs::File::open(path)?)
}

pub fn write_annotations(records: &[AnnotationRecord], w: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        wtr.serialize(Row {
            video_id: r.video_id.clone(),
            start_frame: r.start_frame,
            end_frame: r.end_frame,
            label: r.label.name().to_string(),
        })
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_annotations(records: &[AnnotationRecord], path: impl AsRef<Path>) -> Result<()> {
    write_annotations(records, std::fs::File::create(path)?)
}

fn csv_err(e: csv::Error) -> Error {
    let field = match e.position() {
        Some(p) => format!("annotation line {}", p.line()),
        None => "annotations".to_string(),
    };
    Error::format(field, e.to_string())
}

/// Checks one video's records: `start ≤ end`, `end < frames`, and no overlap.
pub fn validate_annotations(records: &[AnnotationRecord], frames: usize) -> Result<()> {
    let mut sorted: Vec<&AnnotationRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.start_frame, r.end_frame));
    for r in &sorted {
        if r.start_frame > r.end_frame {
            return Err(Error::Validation(format!(
                "{}: start frame {} after end frame {}",
                r.video_id, r.start_frame, r.end_frame
            )));
        }
        if r.end_frame >= frames {
            return Err(Error::Validation(format!(
                "{}: range {}..={} exceeds {frames} frames",
                r.video_id, r.start_frame, r.end_frame
            )));
        }
    }
    for pair in sorted.windows(2) {
        if pair[1].start_frame <= pair[0].end_frame {
            return Err(Error::Validation(format!(
                "{}: ranges {}..={} and {}..={} overlap",
                pair[0].video_id, pair[0].start_frame, pair[0].end_frame, pair[1].start_frame, pair[1].end_frame
            )));
        }
    }
    Ok(())
}

/// Groups records by video id.
pub fn by_video(records: &[AnnotationRecord]) -> BTreeMap<&str, Vec<AnnotationRecord>> {
    let mut map: BTreeMap<&str, Vec<AnnotationRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.video_id.as_str()).or_default().push(r.clone());
    }
    map
}

/// Per-frame labels; frames outside every record are `Normal`.
pub fn frame_labels(records: &[AnnotationRecord], frames: usize) -> Result<Vec<ClassLabel>> {
    validate_annotations(records, frames)?;
    let mut labels = vec![ClassLabel::Normal; frames];
    for r in records {
        labels[r.start_frame..=r.end_frame].fill(r.label);
    }
    Ok(labels)
}
