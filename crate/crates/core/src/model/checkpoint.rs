//! `.vckpt` checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "VCK1" | version u32 | entry count u32 |
//!   per entry: name length u16 | UTF-8 name | rank u8 | rank × u32 extents | f32 payload
//! ```
//!
//! Parameter entries are named `layer/suffix`. Entries under `meta/` carry
//! the input extents, the layer list (one `meta/layer/NNN/kind/name` entry
//! per layer, payload holding its numeric settings) and training metadata,
//! so a checkpoint alone is enough to rebuild the network.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use super::arch::LayerSpec;
use super::net::AnomalyNet;
use crate::error::{Error, Result};
use crate::nn::Pool3dConfig;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"VCK1";
pub const VERSION: u32 = 1;
pub const META_PREFIX: &str = "meta/";

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrainingMeta {
    pub epoch: usize,
    pub learning_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub entries: Vec<(String, Tensor<f32>)>,
}

impl Checkpoint {
    pub fn get(&self, name: &str) -> Option<&Tensor<f32>> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Parameter entries only (no `meta/`).
    pub fn parameters(&self) -> impl Iterator<Item = (&str, &Tensor<f32>)> {
        self.entries
            .iter()
            .filter(|(n, _)| !n.starts_with(META_PREFIX))
            .map(|(n, t)| (n.as_str(), t))
    }

    pub fn from_net(net: &AnomalyNet<f32>, meta: TrainingMeta) -> Self {
        let mut entries = Vec::new();
        let scalar = |v: f32| Tensor::from_vec(&[1], vec![v]).unwrap();
        let input = net.input_dims().iter().map(|&d| d as f32).collect();
        entries.push(("meta/input".to_string(), Tensor::from_vec(&[4], input).unwrap()));
        for (i, spec) in net.specs().iter().enumerate() {
            let (kind, payload): (&str, Vec<f32>) = match spec {
                LayerSpec::Conv { out_channels, kernel, .. } => (
                    "conv",
                    vec![*out_channels as f32, kernel[0] as f32, kernel[1] as f32, kernel[2] as f32],
                ),
                LayerSpec::BatchNorm { .. } => ("batchnorm", vec![0.0]),
                LayerSpec::Relu { .. } => ("relu", vec![0.0]),
                LayerSpec::MaxPool { config, .. } => (
                    "maxpool",
                    config
                        .window
                        .iter()
                        .chain(&config.stride)
                        .map(|&v| v as f32)
                        .chain([if config.ceil_mode { 1.0 } else { 0.0 }])
                        .collect(),
                ),
                LayerSpec::Flatten { .. } => ("flatten", vec![0.0]),
                LayerSpec::Dense { outputs, .. } => ("dense", vec![*outputs as f32]),
                LayerSpec::Dropout { rate, .. } => ("dropout", vec![*rate as f32]),
            };
            let n = payload.len();
            entries.push((
                format!("meta/layer/{i:03}/{kind}/{}", spec.name()),
                Tensor::from_vec(&[n], payload).unwrap(),
            ));
        }
        entries.push(("meta/epoch".into(), scalar(meta.epoch as f32)));
        entries.push(("meta/learning_rate".into(), scalar(meta.learning_rate as f32)));
        for (name, t) in net.named_tensors() {
            entries.push((name, t.clone()));
        }
        Self { entries }
    }

    pub fn meta(&self) -> TrainingMeta {
        let first = |name: &str| self.get(name).map(|t| decimal(t.data()[0]));
        TrainingMeta {
            epoch: first("meta/epoch").unwrap_or(0.0) as usize,
            learning_rate: first("meta/learning_rate").unwrap_or(0.0),
        }
    }

    fn architecture(&self) -> Result<([usize; 4], Vec<LayerSpec>)> {
        let input = self
            .get("meta/input")
            .filter(|t| t.numel() == 4)
            .ok_or_else(|| Error::format("meta/input", "missing or not 4 extents"))?;
        let input = [0, 1, 2, 3].map(|i| input.data()[i] as usize);

        let mut layers = BTreeMap::new();
        for (name, t) in &self.entries {
            let Some(rest) = name.strip_prefix("meta/layer/") else { continue };
            let bad = |detail: &str| Error::format(name.clone(), detail.to_string());
            let mut parts = rest.splitn(3, '/');
            let (Some(idx), Some(kind), Some(lname)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad("expected meta/layer/<index>/<kind>/<name>"));
            };
            let idx: usize = idx.parse().map_err(|_| bad("layer index is not a number"))?;
            let p = t.data();
            let need = |n: usize| if p.len() < n { Err(bad(&format!("payload needs {n} values"))) } else { Ok(()) };
            let spec = match kind {
                "conv" => {
                    need(4)?;
                    LayerSpec::Conv {
                        name: lname.into(),
                        out_channels: p[0] as usize,
                        kernel: [p[1] as usize, p[2] as usize, p[3] as usize],
                    }
                }
                "batchnorm" => LayerSpec::bn(lname),
                "relu" => LayerSpec::relu(lname),
                "maxpool" => {
                    need(7)?;
                    let u = |i: usize| p[i] as usize;
                    let config = Pool3dConfig::new([u(0), u(1), u(2)], [u(3), u(4), u(5)], p[6] != 0.0)
                        .map_err(|e| bad(&e.to_string()))?;
                    LayerSpec::pool(lname, config)
                }
                "flatten" => LayerSpec::Flatten { name: lname.into() },
                "dense" => {
                    need(1)?;
                    LayerSpec::dense(lname, p[0] as usize)
                }
                "dropout" => {
                    need(1)?;
                    LayerSpec::dropout(lname, decimal(p[0]))
                }
                other => return Err(bad(&format!("unknown layer kind `{other}`"))),
            };
            if layers.insert(idx, spec).is_some() {
                return Err(bad("duplicate layer index"));
            }
        }
        if layers.is_empty() {
            return Err(Error::format("meta/layer", "no layer entries"));
        }
        if layers.keys().enumerate().any(|(i, &k)| i != k) {
            return Err(Error::format("meta/layer", "layer indices are not contiguous from 0"));
        }
        Ok((input, layers.into_values().collect()))
    }

    /// Rebuilds the network. Every parameter must be present exactly once
    /// with the right shape, and nothing else may be present.
    pub fn to_net(&self) -> Result<AnomalyNet<f32>> {
        let (input, specs) = self.architecture()?;
        let mut net = AnomalyNet::from_specs(input, &specs).map_err(|e| Error::format("meta/layer", e.to_string()))?;
        let mut params: HashMap<&str, &Tensor<f32>> = HashMap::new();
        for (name, t) in self.parameters() {
            if params.insert(name, t).is_some() {
                return Err(Error::format(name, "duplicate entry"));
            }
        }
        for (name, slot) in net.named_tensors_mut() {
            let src = params
                .remove(name.as_str())
                .ok_or_else(|| Error::format(name.clone(), "missing from checkpoint"))?;
            if src.dims() != slot.dims() {
                return Err(Error::format(
                    name.clone(),
                    format!("shape {} does not match architecture {}", src.shape(), slot.shape()),
                ));
            }
            *slot = src.clone();
        }
        if let Some(extra) = params.keys().next() {
            return Err(Error::format(*extra, "not a parameter of the recorded architecture"));
        }
        Ok(net)
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let payload: usize = self.entries.iter().map(|(n, t)| 3 + n.len() + 4 * t.rank() + 4 * t.numel()).sum();
        let mut buf = Vec::with_capacity(12 + payload);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        let count = u32::try_from(self.entries.len()).map_err(|_| Error::format("entry count", "exceeds u32"))?;
        buf.extend_from_slice(&count.to_le_bytes());
        for (name, t) in &self.entries {
            let len = u16::try_from(name.len()).map_err(|_| Error::format(name.clone(), "name longer than 65535 bytes"))?;
            buf.extend_from_slice(&len.to_le_bytes());
            buf.extend_from_slice(name.as_bytes());
            buf.push(t.rank() as u8);
            for &d in t.dims() {
                let d = u32::try_from(d).map_err(|_| Error::format(name.clone(), "extent exceeds u32"))?;
                buf.extend_from_slice(&d.to_le_bytes());
            }
            for v in t.data() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(buf)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::format("magic", format!("expected VCK1, found {magic:?}")));
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(Error::format("version", format!("unsupported version {version}, expected {VERSION}")));
        }
        let count = r.u32("entry count")? as usize;
        let mut entries = Vec::with_capacity(count.min(1 << 16));
        for i in 0..count {
            let field = |what: &str| format!("entry[{i}].{what}");
            let len = u16::from_le_bytes(r.take(2, &field("name length"))?.try_into().unwrap()) as usize;
            let name = std::str::from_utf8(r.take(len, &field("name"))?)
                .map_err(|_| Error::format(field("name"), "not UTF-8"))?
                .to_string();
            let rank = r.take(1, &field("rank"))?[0] as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(r.u32(&format!("{name}.extents"))? as usize);
            }
            let numel = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
            let numel = numel.ok_or_else(|| Error::format(format!("{name}.extents"), "element count overflows"))?;
            let raw = r.take(
                numel.checked_mul(4).ok_or_else(|| Error::format(format!("{name}.payload"), "too large"))?,
                &format!("{name}.payload"),
            )?;
            let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
            let t = Tensor::from_vec(&dims, data).map_err(|e| Error::format(format!("{name}.extents"), e.to_string()))?;
            entries.push((name, t));
        }
        if r.pos != bytes.len() {
            return Err(Error::format("trailer", format!("{} unexpected bytes after last entry", bytes.len() - r.pos)));
        }
        Ok(Self { entries })
    }
}

/// Widens an f32 that was narrowed from a short decimal (rates, learning
/// rates) back to that decimal rather than its exact binary value.
fn decimal(v: f32) -> f64 {
    v.to_string().parse().unwrap_or(v as f64)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, field: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| {
            Error::format(
                field,
                format!("truncated: need {n} bytes at offset {}, file has {}", self.pos, self.bytes.len()),
            )
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self, field: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, field)?.try_into().unwrap()))
    }
}

pub fn save_checkpoint(net: &AnomalyNet<f32>, meta: TrainingMeta, path: impl AsRef<Path>) -> Result<()> {
    let bytes = Checkpoint::from_net(net, meta).encode()?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::decode(&std::fs::read(path)?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(AnomalyNet<f32>, TrainingMeta)> {
    let ckpt = read_checkpoint(path)?;
    Ok((ckpt.to_net()?, ckpt.meta()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LoadPolicy {
    /// Copy tensors whose names match; leave the rest at their current values.
    #[default]
    ByNamePartial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerLoadStatus {
    Loaded,
    Partial,
    Initialized,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// One entry per parameterized layer, in network order.
    pub layers: Vec<(String, LayerLoadStatus)>,
    /// Checkpoint parameters with no counterpart in the network.
    pub unused: Vec<String>,
}

impl LoadReport {
    pub fn status(&self, layer: &str) -> Option<LayerLoadStatus> {
        self.layers.iter().find(|(n, _)| n == layer).map(|(_, s)| *s)
    }
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, status) in &self.layers {
            let s = match status {
                LayerLoadStatus::Loaded => "loaded",
                LayerLoadStatus::Partial => "partially loaded",
                LayerLoadStatus::Initialized => "initialized",
            };
            writeln!(f, "{name}: {s}")?;
        }
        for name in &self.unused {
            writeln!(f, "{name}: unused")?;
        }
        Ok(())
    }
}

/// Transfers name-matched tensors from `ckpt` into `net`. A name match with
/// a different shape is a [`Error::Conflict`] and leaves `net` untouched.
pub fn load_pretrained(net: &mut AnomalyNet<f32>, ckpt: &Checkpoint, _policy: LoadPolicy) -> Result<LoadReport> {
    let source: HashMap<&str, &Tensor<f32>> = ckpt.parameters().collect();
    for (name, slot) in net.named_tensors() {
        if let Some(src) = source.get(name.as_str()) {
            if src.dims() != slot.dims() {
                return Err(Error::Conflict {
                    name,
                    expected: slot.dims().to_vec(),
                    found: src.dims().to_vec(),
                });
            }
        }
    }

    let mut per_layer: Vec<(String, usize, usize)> = Vec::new();
    let mut used = std::collections::HashSet::new();
    for (name, slot) in net.named_tensors_mut() {
        let layer = name.split('/').next().unwrap_or(&name).to_string();
        if per_layer.last().map(|(l, _, _)| l != &layer).unwrap_or(true) {
            per_layer.push((layer, 0, 0));
        }
        let entry = per_layer.last_mut().unwrap();
        entry.2 += 1;
        if let Some(src) = source.get(name.as_str()) {
            *slot = (*src).clone();
            entry.1 += 1;
            used.insert(name);
        }
    }
    let layers = per_layer
        .into_iter()
        .map(|(l, hit, total)| {
            let status = match hit {
                0 => LayerLoadStatus::Initialized,
                h if h == total => LayerLoadStatus::Loaded,
                _ => LayerLoadStatus::Partial,
            };
            (l, status)
        })
        .collect();
    let unused = ckpt
        .parameters()
        .map(|(n, _)| n.to_string())
        .filter(|n| !used.contains(n))
        .collect();
    Ok(LoadReport { layers, unused })
}
