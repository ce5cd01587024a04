//! Frame sequences: ingestion from PPM directories or `.vten` containers,
//! bilinear resizing and spatial flips.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DEFAULT_FRAME_RATE: f64 = 30.0;

/// A video as one `T × H × W × 3` tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    pub video_id: String,
    pub frames: Tensor<f32>,
    pub frame_rate: f64,
}

impl FrameSequence {
    pub fn new(video_id: impl Into<String>, frames: Tensor<f32>) -> Result<Self> {
        let d = frames.dims();
        if d.len() != 4 || d[3] != 3 {
            return Err(Error::InvalidShape {
                dims: d.to_vec(),
                reason: "frame sequence must be T×H×W×3".into(),
            });
        }
        Ok(Self {
            video_id: video_id.into(),
            frames,
            frame_rate: DEFAULT_FRAME_RATE,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.dims()[0]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn height(&self) -> usize {
        self.frames.dims()[1]
    }

    pub fn width(&self) -> usize {
        self.frames.dims()[2]
    }

    pub fn frame(&self, t: usize) -> Result<Tensor<f32>> {
        self.frames.outer(t)
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.frame_rate
    }

    pub fn hflip(&self) -> Self {
        self.with_frames(self.frames.flip(2).expect("rank 4"))
    }

    pub fn vflip(&self) -> Self {
        self.with_frames(self.frames.flip(1).expect("rank 4"))
    }

    fn with_frames(&self, frames: Tensor<f32>) -> Self {
        Self {
            video_id: self.video_id.clone(),
            frames,
            frame_rate: self.frame_rate,
        }
    }
}

/// Original, horizontally flipped and vertically flipped copies, with ids
/// suffixed `_hflip` / `_vflip`. Frame order is untouched.
pub fn augment_flips(seq: &FrameSequence) -> [FrameSequence; 3] {
    let mut h = seq.hflip();
    h.video_id = format!("{}_hflip", seq.video_id);
    let mut v = seq.vflip();
    v.video_id = format!("{}_vflip", seq.video_id);
    [seq.clone(), h, v]
}

fn ppm_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::format(format!("ppm header of {}", path.display()), detail)
}

/// Parses a binary P6 image with maxval 255 into `H × W × 3` values in `[0, 1]`.
pub fn decode_ppm(bytes: &[u8], path: &Path) -> Result<Tensor<f32>> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(ppm_err(path, "truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P6" {
        return Err(ppm_err(path, format!("magic `{}`, expected P6", fields[0])));
    }
    let num = |i: usize, what: &str| -> Result<usize> {
        fields[i]
            .parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| ppm_err(path, format!("{what} `{}` is not a positive integer", fields[i])))
    };
    let (w, h, maxval) = (num(1, "width")?, num(2, "height")?, num(3, "maxval")?);
    if maxval != 255 {
        return Err(ppm_err(path, format!("maxval {maxval}, only 255 is supported")));
    }
    pos += 1; // single whitespace byte before the raster
    let need = w * h * 3;
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| ppm_err(path, format!("raster has {} bytes, expected {need}", bytes.len().saturating_sub(pos))))?;
    let data = raster.iter().map(|&p| p as f32 / 255.0).collect();
    Tensor::from_vec(&[h, w, 3], data)
}

/// Writes an `H × W × 3` frame in `[0, 1]` as P6, rounding to 8 bits.
pub fn write_ppm(frame: &Tensor<f32>, path: impl AsRef<Path>) -> Result<()> {
    let d = frame.dims();
    if d.len() != 3 || d[2] != 3 {
        return Err(Error::InvalidShape {
            dims: d.to_vec(),
            reason: "PPM frame must be H×W×3".into(),
        });
    }
    let mut out = Vec::with_capacity(16 + frame.numel());
    write!(out, "P6\n{} {}\n255\n", d[1], d[0])?;
    out.extend(frame.data().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    fs::write(path, out)?;
    Ok(())
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.ppm")
}

fn frame_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".ppm")?;
    (digits.len() == 6 && digits.bytes().all(|b| b.is_ascii_digit())).then(|| digits.parse().ok())?
}

/// Loads a video from a directory of `frame_NNNNNN.ppm` files (numbered
/// contiguously from 0 or 1) or from a rank-4 `.vten` container.
pub fn ingest_frames(path: impl AsRef<Path>) -> Result<FrameSequence> {
    let path = path.as_ref();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    if path.is_dir() {
        return FrameSequence::new(id, read_ppm_dir(path)?);
    }
    let t = Tensor::load_vten(path)?;
    if t.rank() != 4 || t.dims()[3] != 3 {
        return Err(Error::format("extents", format!("{} must be T×H×W×3, got {}", path.display(), t.shape())));
    }
    if t.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::format("payload", format!("{} has values outside [0, 1]", path.display())));
    }
    FrameSequence::new(id, t)
}

fn read_ppm_dir(dir: &Path) -> Result<Tensor<f32>> {
    let mut indices: Vec<usize> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| frame_index(&e.file_name().to_string_lossy()))
        .collect();
    indices.sort_unstable();
    let Some(&last) = indices.last() else {
        return Err(Error::MissingFrame {
            dir: dir.to_path_buf(),
            index: 0,
        });
    };
    let first = if indices[0] == 0 { 0 } else { 1 };
    for (expected, &found) in (first..).zip(&indices) {
        if found != expected {
            return Err(Error::MissingFrame {
                dir: dir.to_path_buf(),
                index: expected,
            });
        }
    }

    let mut frames = Vec::with_capacity(indices.len());
    for i in first..=last {
        let p = dir.join(frame_file_name(i));
        let f = decode_ppm(&fs::read(&p)?, &p)?;
        if let Some(first) = frames.first() {
            let first: &Tensor<f32> = first;
            if first.dims() != f.dims() {
                return Err(Error::ShapeMismatch(format!(
                    "{} is {}, earlier frames are {}",
                    p.display(),
                    f.shape(),
                    first.shape()
                )));
            }
        }
        frames.push(f);
    }
    let refs: Vec<_> = frames.iter().collect();
    Tensor::stack(&refs)
}

/// Writes every frame of `seq` into `dir` as `frame_000000.ppm`, ….
pub fn write_ppm_dir(seq: &FrameSequence, dir: impl AsRef<Path>) -> Result<()> {
    fs::create_dir_all(dir.as_ref())?;
    for t in 0..seq.len() {
        write_ppm(&seq.frame(t)?, dir.as_ref().join(frame_file_name(t)))?;
    }
    Ok(())
}

/// Bilinear resize of an `H × W × C` frame with half-pixel centres, source
/// coordinates clamped to the border.
pub fn resize_bilinear(frame: &Tensor<f32>, out_h: usize, out_w: usize) -> Result<Tensor<f32>> {
    let d = frame.dims();
    if d.len() != 3 || d[0] < 2 || d[1] < 2 || out_h == 0 || out_w == 0 {
        return Err(Error::InvalidShape {
            dims: d.to_vec(),
            reason: format!("resize needs an H×W×C source of at least 2×2 and a positive target, target {out_h}×{out_w}"),
        });
    }
    let (h, w, c) = (d[0], d[1], d[2]);
    let taps = |out: usize, inp: usize| -> Vec<(usize, usize, f32)> {
        let scale = inp as f64 / out as f64;
        (0..out)
            .map(|o| {
                let src = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (inp - 1) as f64);
                let lo = src.floor() as usize;
                let hi = (lo + 1).min(inp - 1);
                (lo, hi, (src - lo as f64) as f32)
            })
            .collect()
    };
    let (ys, xs) = (taps(out_h, h), taps(out_w, w));
    let src = frame.data();
    let mut out = Vec::with_capacity(out_h * out_w * c);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for ch in 0..c {
                let p = |y: usize, x: usize| src[(y * w + x) * c + ch];
                let top = lerp(p(y0, x0), p(y0, x1), fx);
                let bottom = lerp(p(y1, x0), p(y1, x1), fx);
                out.push(lerp(top, bottom, fy));
            }
        }
    }
    Tensor::from_vec(&[out_h, out_w, c], out)
}

/// Exact at `f = 0` and whenever `a == b`.
fn lerp(a: f32, b: f32, f: f32) -> f32 {
    a + (b - a) * f
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreprocessConfig {
    pub height: usize,
    pub width: usize,
    /// Subtract each channel's mean over the whole sequence. Off by default;
    /// values then leave `[0, 1]`.
    pub subtract_mean: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            height: crate::model::arch::FRAME_SIZE,
            width: crate::model::arch::FRAME_SIZE,
            subtract_mean: false,
        }
    }
}

/// Resizes every frame and optionally mean-centres each channel.
pub fn preprocess(seq: &FrameSequence, cfg: &PreprocessConfig) -> Result<FrameSequence> {
    let mut frames = Vec::with_capacity(seq.len());
    for t in 0..seq.len() {
        frames.push(resize_bilinear(&seq.frame(t)?, cfg.height, cfg.width)?);
    }
    let refs: Vec<_> = frames.iter().collect();
    let mut out = Tensor::stack(&refs)?;
    if cfg.subtract_mean {
        let n = (out.numel() / 3) as f64;
        let mut mean = [0f64; 3];
        for (i, v) in out.data().iter().enumerate() {
            mean[i % 3] += *v as f64 / n;
        }
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v -= mean[i % 3] as f32;
        }
    }
    Ok(seq.with_frames(out))
}
