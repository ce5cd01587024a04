//! Synthetic stand-in dataset: a bright block drifting over a noisy
//! background, one drift direction per class.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::annotation::{save_annotations, AnnotationRecord};
use super::frames::FrameSequence;
use super::label::ClassLabel;
use super::manifest::{DatasetManifest, ManifestEntry, Origin, Split};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const ANNOTATIONS_FILE: &str = "annotations.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthConfig {
    pub seed: u64,
    pub num_classes: usize,
    pub clips_per_class: usize,
    /// Extra clips per class placed in the test split.
    pub test_clips_per_class: usize,
    /// Frame height and width.
    pub resolution: usize,
    /// Frames per clip.
    pub length: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            num_classes: 4,
            clips_per_class: 8,
            test_clips_per_class: 0,
            resolution: 32,
            length: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthFixture {
    pub manifest: DatasetManifest,
    pub videos: Vec<FrameSequence>,
    pub annotations: Vec<AnnotationRecord>,
}

/// Velocity in pixels per frame `(dy, dx)` for class `c` of `k`.
pub fn class_velocity(c: usize, k: usize, resolution: usize) -> (f64, f64) {
    let speed = (resolution as f64 / 16.0).max(1.0);
    let angle = TAU * c as f64 / k as f64;
    (speed * angle.sin(), speed * angle.cos())
}

fn render(rng: &mut ChaCha8Rng, velocity: (f64, f64), res: usize, length: usize) -> Result<Tensor<f32>> {
    let block = (res / 4).max(2) as i64;
    let n = res as i64;
    let (y0, x0) = (rng.random_range(0.0..res as f64), rng.random_range(0.0..res as f64));
    let mut data = Vec::with_capacity(length * res * res * 3);
    for t in 0..length {
        let py = (y0 + velocity.0 * t as f64).round() as i64;
        let px = (x0 + velocity.1 * t as f64).round() as i64;
        for y in 0..n {
            let in_y = (y - py).rem_euclid(n) < block;
            for x in 0..n {
                let lit = in_y && (x - px).rem_euclid(n) < block;
                let base = if lit { 0.85 } else { 0.0 };
                for _ in 0..3 {
                    data.push(base + rng.random_range(0.0f32..0.15));
                }
            }
        }
    }
    Tensor::from_vec(&[length, res, res, 3], data)
}

/// Deterministic fixture: clips are numbered per class, every clip is fully
/// annotated with its class, and the same seed gives bit-identical data.
pub fn synth_fixture(cfg: &SynthConfig) -> Result<SynthFixture> {
    if cfg.num_classes < 2 || cfg.num_classes > ClassLabel::COUNT {
        return Err(Error::Config(format!("synthetic classes must be 2..=14, got {}", cfg.num_classes)));
    }
    if cfg.resolution < 4 || cfg.length == 0 || cfg.clips_per_class == 0 {
        return Err(Error::Config("synthetic clips need resolution ≥ 4, length ≥ 1 and ≥ 1 clip per class".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut entries, mut videos, mut annotations) = (Vec::new(), Vec::new(), Vec::new());
    for c in 0..cfg.num_classes {
        let label = ClassLabel::ALL[c];
        let velocity = class_velocity(c, cfg.num_classes, cfg.resolution);
        for k in 0..cfg.clips_per_class + cfg.test_clips_per_class {
            let split = if k < cfg.clips_per_class { Split::Train } else { Split::Test };
            let id = format!("{}_{k:03}", label.name());
            let frames = render(&mut rng, velocity, cfg.resolution, cfg.length)?;
            videos.push(FrameSequence::new(id.clone(), frames)?);
            annotations.push(AnnotationRecord::new(id.clone(), 0, cfg.length - 1, label));
            entries.push(ManifestEntry {
                path: format!("{id}.vten").into(),
                video_id: id,
                split,
                origin: Origin::Original,
            });
        }
    }
    Ok(SynthFixture {
        manifest: DatasetManifest::new(entries)?,
        videos,
        annotations,
    })
}

impl SynthFixture {
    /// Writes one `.vten` per clip plus `manifest.tsv` and `annotations.csv`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (entry, video) in self.manifest.entries.iter().zip(&self.videos) {
            video.frames.save_vten(dir.join(&entry.path))?;
        }
        self.manifest.save(dir.join(MANIFEST_FILE))?;
        save_annotations(&self.annotations, dir.join(ANNOTATIONS_FILE))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::annotation::validate_annotations;

    /// Displacement estimate from the first moment of consecutive frame
    /// differences, taking the median over time to shrug off wrap-around.
    fn motion_feature(seq: &FrameSequence) -> (f64, f64) {
        let (t, h, w) = (seq.len(), seq.height(), seq.width());
        let f = seq.frames.data();
        let lum = |ti: usize, y: usize, x: usize| f[((ti * h + y) * w + x) * 3] as f64;
        let mut dys = Vec::new();
        let mut dxs = Vec::new();
        for ti in 0..t - 1 {
            let (mut my, mut mx, mut mass) = (0.0, 0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let d = lum(ti + 1, y, x) - lum(ti, y, x);
                    my += y as f64 * d;
                    mx += x as f64 * d;
                    mass += lum(ti, y, x).max(0.5) - 0.5;
                }
            }
            dys.push(my / mass.max(1e-9));
            dxs.push(mx / mass.max(1e-9));
        }
        let median = |mut v: Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[v.len() / 2]
        };
        (median(dys), median(dxs))
    }

    #[test]
    fn same_seed_same_bits() {
        let cfg = SynthConfig {
            clips_per_class: 2,
            length: 8,
            ..Default::default()
        };
        let a = synth_fixture(&cfg).unwrap();
        assert_eq!(a, synth_fixture(&cfg).unwrap());
        assert_ne!(a.videos[0], synth_fixture(&SynthConfig { seed: 1, ..cfg }).unwrap().videos[0]);
        assert!(a.videos.iter().all(|v| v.frames.data().iter().all(|&p| (0.0..=1.0).contains(&p))));
    }

    #[test]
    fn annotations_validate() {
        let fx = synth_fixture(&SynthConfig {
            num_classes: 14,
            clips_per_class: 1,
            test_clips_per_class: 1,
            length: 20,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(fx.manifest.entries.len(), 28);
        assert_eq!(fx.manifest.split(Split::Test).count(), 14);
        for (v, a) in fx.videos.iter().zip(&fx.annotations) {
            validate_annotations(std::slice::from_ref(a), v.len()).unwrap();
        }
    }

    #[test]
    fn classes_separate_under_nearest_centroid() {
        let fx = synth_fixture(&SynthConfig {
            clips_per_class: 6,
            length: 24,
            ..Default::default()
        })
        .unwrap();
        let feats: Vec<(f64, f64)> = fx.videos.iter().map(motion_feature).collect();
        let labels: Vec<usize> = fx.annotations.iter().map(|a| a.label.index()).collect();
        let mut centroids = [(0.0, 0.0, 0usize); 4];
        for (f, &l) in feats.iter().zip(&labels) {
            centroids[l].0 += f.0;
            centroids[l].1 += f.1;
            centroids[l].2 += 1;
        }
        let correct = feats
            .iter()
            .zip(&labels)
            .filter(|(f, &l)| {
                let nearest = (0..4)
                    .min_by(|&a, &b| {
                        let d = |c: usize| {
                            let (cy, cx) = (centroids[c].0 / centroids[c].2 as f64, centroids[c].1 / centroids[c].2 as f64);
                            (f.0 - cy).powi(2) + (f.1 - cx).powi(2)
                        };
                        d(a).partial_cmp(&d(b)).unwrap()
                    })
                    .unwrap();
                nearest == l
            })
            .count();
        let acc = correct as f64 / feats.len() as f64;
        assert!(acc > 0.5, "nearest-centroid accuracy {acc}");
    }

    #[test]
    fn fixture_files_load_back() {
        let dir = tempfile::tempdir().unwrap();
        let fx = synth_fixture(&SynthConfig {
            clips_per_class: 1,
            length: 4,
            resolution: 8,
            ..Default::default()
        })
        .unwrap();
        fx.write(dir.path()).unwrap();
        let m = DatasetManifest::load(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(m, fx.manifest);
        let v = m.entries[2].load(dir.path()).unwrap();
        assert_eq!(v, fx.videos[2]);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(synth_fixture(&SynthConfig { num_classes: 15, ..Default::default() }).is_err());
        assert!(synth_fixture(&SynthConfig { resolution: 2, ..Default::default() }).is_err());
    }
}
