//! Per-split video counts and durations.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;

use super::annotation::AnnotationRecord;
use super::manifest::{DatasetManifest, Split};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct VideoInfo {
    pub video_id: String,
    pub split: Split,
    pub frames: usize,
    pub frame_rate: f64,
    pub anomalous: bool,
}

impl VideoInfo {
    pub fn seconds(&self) -> f64 {
        self.frames as f64 / self.frame_rate
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GroupStats {
    pub videos: usize,
    pub total_secs: f64,
    pub min_secs: f64,
    pub max_secs: f64,
    pub mean_secs: f64,
}

impl GroupStats {
    fn from_lengths(lengths: &[f64]) -> Self {
        if lengths.is_empty() {
            return Self::default();
        }
        let total: f64 = lengths.iter().sum();
        Self {
            videos: lengths.len(),
            total_secs: total,
            min_secs: lengths.iter().cloned().fold(f64::INFINITY, f64::min),
            max_secs: lengths.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            mean_secs: total / lengths.len() as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SplitStats {
    pub anomalous: GroupStats,
    pub normal: GroupStats,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DatasetStats {
    pub train: SplitStats,
    pub test: SplitStats,
}

pub fn dataset_stats(videos: &[VideoInfo]) -> DatasetStats {
    let group = |split: Split, anomalous: bool| {
        let lengths: Vec<f64> = videos
            .iter()
            .filter(|v| v.split == split && v.anomalous == anomalous)
            .map(VideoInfo::seconds)
            .collect();
        GroupStats::from_lengths(&lengths)
    };
    DatasetStats {
        train: SplitStats {
            anomalous: group(Split::Train, true),
            normal: group(Split::Train, false),
        },
        test: SplitStats {
            anomalous: group(Split::Test, true),
            normal: group(Split::Test, false),
        },
    }
}

/// Frame count from a `.vten` header or a PPM directory listing, without
/// decoding pixels.
pub fn frame_count(path: &Path) -> Result<usize> {
    if path.is_dir() {
        return Ok(fs::read_dir(path)?
            .filter_map(|e| e.ok())
            .filter(|e| {
                let n = e.file_name();
                let n = n.to_string_lossy();
                n.starts_with("frame_") && n.ends_with(".ppm")
            })
            .count());
    }
    let mut head = [0u8; 9];
    fs::File::open(path)?
        .read_exact(&mut head)
        .map_err(|_| Error::format("header", format!("{} is too short", path.display())))?;
    if &head[..4] != b"VTN1" {
        return Err(Error::format("magic", format!("{} is not a .vten container", path.display())));
    }
    Ok(u32::from_le_bytes(head[5..9].try_into().unwrap()) as usize)
}

/// One [`VideoInfo`] per manifest entry. A video is anomalous when any of
/// its source's annotations carries a non-Normal label.
pub fn collect_video_info(
    manifest: &DatasetManifest,
    annotations: &[AnnotationRecord],
    base: &Path,
    frame_rate: f64,
) -> Result<Vec<VideoInfo>> {
    let anomalous: HashSet<&str> = annotations
        .iter()
        .filter(|a| a.label.is_anomalous())
        .map(|a| a.video_id.as_str())
        .collect();
    let mut counts: HashMap<&Path, usize> = HashMap::new();
    manifest
        .entries
        .iter()
        .map(|e| {
            let frames = match counts.get(e.path.as_path()) {
                Some(&n) => n,
                None => {
                    let n = frame_count(&base.join(&e.path))?;
                    counts.insert(&e.path, n);
                    n
                }
            };
            Ok(VideoInfo {
                video_id: e.video_id.clone(),
                split: e.split,
                frames,
                frame_rate,
                anomalous: anomalous.contains(e.source_id()),
            })
        })
        .collect()
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, s) in [("train", &self.train), ("test", &self.test)] {
            writeln!(f, "[{name}]")?;
            writeln!(f, "{:<22}{:>14}{:>14}", "", "Anomalous", "Normal")?;
            let (a, n) = (&s.anomalous, &s.normal);
            writeln!(f, "{:<22}{:>14}{:>14}", "Number of videos", a.videos, n.videos)?;
            writeln!(f, "{:<22}{:>14.2}{:>14.2}", "Total length (sec)", a.total_secs, n.total_secs)?;
            let mm = |g: &GroupStats| format!("{:.2}/{:.2}", g.min_secs, g.max_secs);
            writeln!(f, "{:<22}{:>14}{:>14}", "Min/Max length (sec)", mm(a), mm(n))?;
            writeln!(f, "{:<22}{:>14.2}{:>14.2}", "Average length (sec)", a.mean_secs, n.mean_secs)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::frames::FrameSequence;
    use crate::data::label::ClassLabel;
    use crate::data::manifest::{ManifestEntry, Multiplicity, Origin};
    use crate::tensor::Tensor;

    fn info(id: &str, frames: usize, anomalous: bool) -> VideoInfo {
        VideoInfo {
            video_id: id.into(),
            split: Split::Train,
            frames,
            frame_rate: 30.0,
            anomalous,
        }
    }

    #[test]
    fn empty_manifest_gives_zeros() {
        assert_eq!(dataset_stats(&[]), DatasetStats::default());
    }

    #[test]
    fn lengths_come_from_frame_rate() {
        let s = dataset_stats(&[info("a", 300, true), info("b", 18, true), info("n", 60, false)]);
        assert_eq!(s.train.anomalous.videos, 2);
        assert_eq!(s.train.anomalous.max_secs, 10.0);
        assert_eq!(s.train.anomalous.min_secs, 0.6);
        assert!((s.train.anomalous.mean_secs - 5.3).abs() < 1e-12);
        assert_eq!(s.train.normal.total_secs, 2.0);
        assert_eq!(s.test.normal.videos, 0);
    }

    #[test]
    fn reference_report_layout() {
        // published augmented training-set figures, used to pin the report format
        let s = DatasetStats {
            train: SplitStats {
                anomalous: GroupStats {
                    videos: 1040,
                    total_secs: 86.34,
                    min_secs: 0.6,
                    max_secs: 1165.0,
                    mean_secs: 56.60,
                },
                normal: GroupStats {
                    videos: 80,
                    total_secs: 7.627,
                    min_secs: 7.62,
                    max_secs: 3600.0,
                    mean_secs: 184.90,
                },
            },
            test: SplitStats::default(),
        };
        let text = s.to_string();
        assert!(text.contains("Number of videos                1040            80"), "{text}");
        assert!(text.contains("0.60/1165.00"));
        assert!(text.contains("7.62/3600.00"));
    }

    #[test]
    fn collects_from_files() {
        let dir = tempfile::tempdir().unwrap();
        let seq = FrameSequence::new("a", Tensor::new(&[45, 2, 2, 3], 0.5).unwrap()).unwrap();
        seq.frames.save_vten(dir.path().join("a.vten")).unwrap();
        seq.frames.save_vten(dir.path().join("n.vten")).unwrap();
        let m = DatasetManifest::new(vec![
            ManifestEntry {
                video_id: "a".into(),
                path: "a.vten".into(),
                split: Split::Train,
                origin: Origin::Original,
            },
            ManifestEntry {
                video_id: "n".into(),
                path: "n.vten".into(),
                split: Split::Train,
                origin: Origin::Original,
            },
        ])
        .unwrap()
        .augment(Multiplicity::Three)
        .unwrap();
        let ann = [AnnotationRecord::new("a", 0, 10, ClassLabel::Fight)];
        let infos = collect_video_info(&m, &ann, dir.path(), 30.0).unwrap();
        let s = dataset_stats(&infos);
        assert_eq!((s.train.anomalous.videos, s.train.normal.videos), (3, 3));
        assert_eq!(s.train.anomalous.max_secs, 1.5);
    }
}
