use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::arch::{self, LayerSpec};
use crate::error::{Error, Result};
use crate::nn::{
    dropout_backward, dropout_train, maxpool3d_backward, maxpool3d_forward, relu, relu_backward, ArgmaxRecord,
    BatchNorm, BatchNormCache, Conv3d, Dense, DropoutConfig, DropoutMask, Mode, Pool3dConfig,
};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub enum LayerKind<T> {
    Conv(Conv3d<T>),
    BatchNorm(BatchNorm<T>),
    Relu,
    MaxPool(Pool3dConfig),
    Flatten,
    Dense(Dense<T>),
    Dropout(DropoutConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub name: String,
    pub kind: LayerKind<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn output_dims(&self, input: &[usize]) -> Result<Vec<usize>> {
        match &self.kind {
            LayerKind::Conv(c) => c.output_dims(input),
            LayerKind::MaxPool(p) => p.output_dims(input),
            LayerKind::Dense(d) => d.output_dims(input),
            LayerKind::Flatten => Ok(vec![input[0], input[1..].iter().product()]),
            LayerKind::BatchNorm(bn) => {
                if input.last() != Some(&bn.features()) {
                    return Err(Error::ShapeMismatch(format!(
                        "{}: batch norm over {} features, input {input:?}",
                        self.name,
                        bn.features()
                    )));
                }
                Ok(input.to_vec())
            }
            LayerKind::Relu | LayerKind::Dropout(_) => Ok(input.to_vec()),
        }
    }

    /// Learnable tensors with their suffixes, in checkpoint order.
    fn learnable(&self) -> Vec<(&'static str, &Tensor<T>)> {
        match &self.kind {
            LayerKind::Conv(c) => vec![("kernel", &c.kernel), ("bias", &c.bias)],
            LayerKind::BatchNorm(bn) => vec![("gamma", &bn.gamma), ("beta", &bn.beta)],
            LayerKind::Dense(d) => vec![("weight", &d.weight), ("bias", &d.bias)],
            _ => Vec::new(),
        }
    }

    fn learnable_mut(&mut self) -> Vec<&mut Tensor<T>> {
        match &mut self.kind {
            LayerKind::Conv(c) => vec![&mut c.kernel, &mut c.bias],
            LayerKind::BatchNorm(bn) => vec![&mut bn.gamma, &mut bn.beta],
            LayerKind::Dense(d) => vec![&mut d.weight, &mut d.bias],
            _ => Vec::new(),
        }
    }

    fn state(&self) -> Vec<(&'static str, &Tensor<T>)> {
        match &self.kind {
            LayerKind::BatchNorm(bn) => vec![("running_mean", &bn.running_mean), ("running_var", &bn.running_var)],
            _ => Vec::new(),
        }
    }

    fn state_mut(&mut self) -> Vec<(&'static str, &mut Tensor<T>)> {
        match &mut self.kind {
            LayerKind::Conv(c) => vec![("kernel", &mut c.kernel), ("bias", &mut c.bias)],
            LayerKind::BatchNorm(bn) => vec![
                ("gamma", &mut bn.gamma),
                ("beta", &mut bn.beta),
                ("running_mean", &mut bn.running_mean),
                ("running_var", &mut bn.running_var),
            ],
            LayerKind::Dense(d) => vec![("weight", &mut d.weight), ("bias", &mut d.bias)],
            _ => Vec::new(),
        }
    }
}

/// Weight initialization: conv kernels and dense weights drawn from
/// `Normal(0, std²)`, biases zero, batch norms reset to identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitSpec {
    pub seed: u64,
    pub std: f64,
}

impl InitSpec {
    pub const DEFAULT_STD: f64 = 0.01;

    pub fn new(seed: u64, std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::Config(format!("init std must be positive, got {std}")));
        }
        Ok(Self { seed, std })
    }
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            std: Self::DEFAULT_STD,
        }
    }
}

/// Per-layer state saved by a train-mode forward pass.
#[derive(Clone, Debug)]
pub enum LayerCache<T> {
    Conv { input: Tensor<T> },
    BatchNorm(BatchNormCache<T>),
    Relu { input: Tensor<T> },
    MaxPool(ArgmaxRecord),
    Flatten { input_dims: Vec<usize> },
    Dense { input: Tensor<T> },
    Dropout(DropoutMask<T>),
}

#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    layers: Vec<LayerCache<T>>,
}

/// Gradients for every learnable tensor, in [`AnomalyNet::learnable`] order,
/// plus the gradient with respect to the network input.
#[derive(Clone, Debug)]
pub struct ParamGrads<T> {
    pub names: Vec<String>,
    pub grads: Vec<Tensor<T>>,
    pub input: Tensor<T>,
}

/// A sequential 3D ConvNet: conv / batch-norm / ReLU / max-pool feature
/// stack, flatten, and a dense head ending in class logits.
#[derive(Clone, Debug, PartialEq)]
pub struct AnomalyNet<T = f32> {
    input: [usize; 4],
    layers: Vec<Layer<T>>,
}

/// The fine-tuned C3D for `16×170×170×3` cubes, zero-initialized.
pub fn build_model(num_classes: usize) -> Result<AnomalyNet<f32>> {
    AnomalyNet::from_specs(arch::TABLE1_INPUT, &arch::table1_layers(num_classes))
}

/// `(layer name, input dims, output dims)` from [`AnomalyNet::forward_trace`].
pub type TraceRow = (String, Vec<usize>, Vec<usize>);

impl<T: Scalar> AnomalyNet<T> {
    /// Instantiates layer specs for cubes of `input = [T, H, W, C]`. Channel
    /// and feature counts are inferred along the chain; all parameters start
    /// at zero (batch norms at identity).
    pub fn from_specs(input: [usize; 4], specs: &[LayerSpec]) -> Result<Self> {
        if input.contains(&0) {
            return Err(Error::InvalidShape {
                dims: input.to_vec(),
                reason: "input extents must be positive".into(),
            });
        }
        let mut dims = vec![1, input[0], input[1], input[2], input[3]];
        let mut layers = Vec::with_capacity(specs.len());
        let mut seen = std::collections::HashSet::new();
        for spec in specs {
            if !seen.insert(spec.name().to_string()) {
                return Err(Error::Config(format!("duplicate layer name `{}`", spec.name())));
            }
            let kind = match spec {
                LayerSpec::Conv { out_channels, kernel, .. } => {
                    if dims.len() != 5 {
                        return Err(Error::Config(format!("{} needs a rank-5 input", spec.name())));
                    }
                    LayerKind::Conv(Conv3d::zeros(*kernel, dims[4], *out_channels)?)
                }
                LayerSpec::BatchNorm { .. } => LayerKind::BatchNorm(BatchNorm::new(*dims.last().unwrap())?),
                LayerSpec::Relu { .. } => LayerKind::Relu,
                LayerSpec::MaxPool { config, .. } => LayerKind::MaxPool(*config),
                LayerSpec::Flatten { .. } => LayerKind::Flatten,
                LayerSpec::Dense { outputs, .. } => {
                    if dims.len() != 2 {
                        return Err(Error::Config(format!("{} needs a flattened input", spec.name())));
                    }
                    LayerKind::Dense(Dense::zeros(dims[1], *outputs)?)
                }
                LayerSpec::Dropout { rate, .. } => LayerKind::Dropout(DropoutConfig::new(*rate, 0)?),
            };
            let layer = Layer {
                name: spec.name().to_string(),
                kind,
            };
            dims = layer.output_dims(&dims)?;
            layers.push(layer);
        }
        if dims.len() != 2 || dims[1] < 2 {
            return Err(Error::Config(format!(
                "network must end in N×C logits with C ≥ 2, ends in {dims:?}"
            )));
        }
        Ok(Self { input, layers })
    }

    pub fn input_dims(&self) -> [usize; 4] {
        self.input
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layer(&self, name: &str) -> Option<&Layer<T>> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn layer_mut(&mut self, name: &str) -> Option<&mut Layer<T>> {
        self.layers.iter_mut().find(|l| l.name == name)
    }

    pub fn num_classes(&self) -> usize {
        self.output_dims(1).map(|d| d[1]).unwrap_or(0)
    }

    pub fn output_dims(&self, batch: usize) -> Result<Vec<usize>> {
        let mut dims = vec![batch, self.input[0], self.input[1], self.input[2], self.input[3]];
        for layer in &self.layers {
            dims = layer.output_dims(&dims)?;
        }
        Ok(dims)
    }

    /// Reconstructs the layer specs this net was built from.
    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers
            .iter()
            .map(|l| {
                let name = l.name.clone();
                match &l.kind {
                    LayerKind::Conv(c) => {
                        let kd = c.kernel.dims();
                        LayerSpec::Conv {
                            name,
                            out_channels: c.out_channels(),
                            kernel: [kd[0], kd[1], kd[2]],
                        }
                    }
                    LayerKind::BatchNorm(_) => LayerSpec::BatchNorm { name },
                    LayerKind::Relu => LayerSpec::Relu { name },
                    LayerKind::MaxPool(config) => LayerSpec::MaxPool { name, config: *config },
                    LayerKind::Flatten => LayerSpec::Flatten { name },
                    LayerKind::Dense(d) => LayerSpec::Dense {
                        name,
                        outputs: d.outputs(),
                    },
                    LayerKind::Dropout(cfg) => LayerSpec::Dropout { name, rate: cfg.rate },
                }
            })
            .collect()
    }

    /// Names and tensors of every learnable parameter (`layer/suffix`).
    pub fn learnable(&self) -> Vec<(String, &Tensor<T>)> {
        self.layers
            .iter()
            .flat_map(|l| l.learnable().into_iter().map(move |(s, t)| (format!("{}/{s}", l.name), t)))
            .collect()
    }

    pub fn learnable_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers.iter_mut().flat_map(|l| l.learnable_mut()).collect()
    }

    /// Every persisted tensor: learnable parameters followed, per batch-norm
    /// layer, by its running statistics. Ordered by layer.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        self.layers
            .iter()
            .flat_map(|l| {
                l.learnable()
                    .into_iter()
                    .chain(l.state())
                    .map(move |(s, t)| (format!("{}/{s}", l.name), t))
            })
            .collect()
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                let name = l.name.clone();
                l.state_mut().into_iter().map(move |(s, t)| (format!("{name}/{s}"), t))
            })
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.learnable().iter().map(|(_, t)| t.numel()).sum()
    }

    /// Sets every dropout layer's rate and mask seed.
    pub fn set_dropout(&mut self, rate: f64, seed: u64) -> Result<()> {
        let cfg = DropoutConfig::new(rate, seed)?;
        for l in &mut self.layers {
            if let LayerKind::Dropout(d) = &mut l.kind {
                *d = cfg;
            }
        }
        Ok(())
    }

    pub fn init_weights(&mut self, spec: InitSpec) -> Result<()> {
        let spec = InitSpec::new(spec.seed, spec.std)?;
        let normal = Normal::new(0.0, spec.std).map_err(|e| Error::Config(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for layer in &mut self.layers {
            match &mut layer.kind {
                LayerKind::Conv(c) => {
                    c.kernel.data_mut().iter_mut().for_each(|v| *v = T::from_f64(normal.sample(&mut rng)));
                    c.bias.data_mut().fill(T::zero());
                }
                LayerKind::Dense(d) => {
                    d.weight.data_mut().iter_mut().for_each(|v| *v = T::from_f64(normal.sample(&mut rng)));
                    d.bias.data_mut().fill(T::zero());
                }
                LayerKind::BatchNorm(bn) => reset_bn(bn),
                _ => {}
            }
        }
        Ok(())
    }

    /// All weights and biases zero, batch norms at identity.
    pub fn zero_parameters(&mut self) {
        for layer in &mut self.layers {
            match &mut layer.kind {
                LayerKind::Conv(c) => {
                    c.kernel.data_mut().fill(T::zero());
                    c.bias.data_mut().fill(T::zero());
                }
                LayerKind::Dense(d) => {
                    d.weight.data_mut().fill(T::zero());
                    d.bias.data_mut().fill(T::zero());
                }
                LayerKind::BatchNorm(bn) => reset_bn(bn),
                _ => {}
            }
        }
    }

    pub fn cast<U: Scalar>(&self) -> AnomalyNet<U> {
        let layers = self
            .layers
            .iter()
            .map(|l| Layer {
                name: l.name.clone(),
                kind: match &l.kind {
                    LayerKind::Conv(c) => LayerKind::Conv(Conv3d {
                        kernel: c.kernel.cast(),
                        bias: c.bias.cast(),
                    }),
                    LayerKind::BatchNorm(bn) => LayerKind::BatchNorm(BatchNorm {
                        gamma: bn.gamma.cast(),
                        beta: bn.beta.cast(),
                        running_mean: bn.running_mean.cast(),
                        running_var: bn.running_var.cast(),
                        epsilon: U::from_f64(bn.epsilon.as_f64()),
                        stat_momentum: U::from_f64(bn.stat_momentum.as_f64()),
                    }),
                    LayerKind::Dense(d) => LayerKind::Dense(Dense {
                        weight: d.weight.cast(),
                        bias: d.bias.cast(),
                    }),
                    LayerKind::Relu => LayerKind::Relu,
                    LayerKind::MaxPool(p) => LayerKind::MaxPool(*p),
                    LayerKind::Flatten => LayerKind::Flatten,
                    LayerKind::Dropout(d) => LayerKind::Dropout(*d),
                },
            })
            .collect();
        AnomalyNet {
            input: self.input,
            layers,
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        let d = x.dims();
        if d.len() != 5 || d[1..] != self.input {
            return Err(Error::ShapeMismatch(format!(
                "network expects N×{}×{}×{}×{}, got {}",
                self.input[0],
                self.input[1],
                self.input[2],
                self.input[3],
                x.shape()
            )));
        }
        Ok(())
    }

    /// Deterministic inference: running batch-norm statistics, no dropout,
    /// nothing cached.
    pub fn forward_eval(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &self.layers {
            h = match &layer.kind {
                LayerKind::Conv(c) => c.forward(&h)?,
                LayerKind::BatchNorm(bn) => bn.forward_eval(&h)?,
                LayerKind::Relu => relu(&h),
                LayerKind::MaxPool(p) => maxpool3d_forward(p, &h)?.0,
                LayerKind::Flatten => flatten(h)?,
                LayerKind::Dense(d) => d.forward(&h)?,
                LayerKind::Dropout(_) => h,
            };
        }
        Ok(h)
    }

    /// Per-layer output extents (batch axis included) of an actual forward pass.
    pub fn forward_trace(&self, x: &Tensor<T>) -> Result<Vec<TraceRow>> {
        self.check_input(x)?;
        let mut trace = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let before = h.dims().to_vec();
            h = match &layer.kind {
                LayerKind::Conv(c) => c.forward(&h)?,
                LayerKind::BatchNorm(bn) => bn.forward_eval(&h)?,
                LayerKind::Relu => relu(&h),
                LayerKind::MaxPool(p) => maxpool3d_forward(p, &h)?.0,
                LayerKind::Flatten => flatten(h)?,
                LayerKind::Dense(d) => d.forward(&h)?,
                LayerKind::Dropout(_) => h,
            };
            trace.push((layer.name.clone(), before, h.dims().to_vec()));
        }
        Ok(trace)
    }

    /// Forward pass in either mode. `Mode::Train` updates running
    /// statistics and draws dropout masks from stream `step`.
    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode, step: u64) -> Result<Tensor<T>> {
        match mode {
            Mode::Eval => self.forward_eval(x),
            Mode::Train => Ok(self.forward_train(x, step)?.0),
        }
    }

    /// Train-mode forward pass that caches what [`backward`](Self::backward)
    /// needs: batch statistics, dropout masks from stream `step`. Running
    /// statistics are left alone (see [`apply_batch_stats`](Self::apply_batch_stats)).
    pub fn forward_cached(&self, x: &Tensor<T>, step: u64) -> Result<(Tensor<T>, ForwardCache<T>)> {
        self.check_input(x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let (out, cache) = match &layer.kind {
                LayerKind::Conv(c) => (c.forward(&h)?, LayerCache::Conv { input: h }),
                LayerKind::BatchNorm(bn) => {
                    let (y, cache) = bn.forward_train(&h)?;
                    (y, LayerCache::BatchNorm(cache))
                }
                LayerKind::Relu => (relu(&h), LayerCache::Relu { input: h }),
                LayerKind::MaxPool(p) => {
                    let (y, rec) = maxpool3d_forward(p, &h)?;
                    (y, LayerCache::MaxPool(rec))
                }
                LayerKind::Flatten => {
                    let dims = h.dims().to_vec();
                    (flatten(h)?, LayerCache::Flatten { input_dims: dims })
                }
                LayerKind::Dense(d) => (d.forward(&h)?, LayerCache::Dense { input: h }),
                LayerKind::Dropout(cfg) => {
                    let stream = step.wrapping_mul(1 << 16).wrapping_add(i as u64);
                    let (y, mask) = dropout_train(cfg, &h, stream)?;
                    (y, LayerCache::Dropout(mask))
                }
            };
            h = out;
            caches.push(cache);
        }
        Ok((h, ForwardCache { layers: caches }))
    }

    /// Folds the batch statistics of a train-mode pass into every batch
    /// norm's running mean and variance.
    pub fn apply_batch_stats(&mut self, cache: &ForwardCache<T>) -> Result<()> {
        if cache.layers.len() != self.layers.len() {
            return Err(Error::State("forward cache does not belong to this network".into()));
        }
        for (layer, c) in self.layers.iter_mut().zip(&cache.layers) {
            if let (LayerKind::BatchNorm(bn), LayerCache::BatchNorm(bc)) = (&mut layer.kind, c) {
                bn.update_running_stats(bc);
            }
        }
        Ok(())
    }

    /// Train-mode forward that also updates running statistics.
    pub fn forward_train(&mut self, x: &Tensor<T>, step: u64) -> Result<(Tensor<T>, ForwardCache<T>)> {
        let (y, cache) = self.forward_cached(x, step)?;
        self.apply_batch_stats(&cache)?;
        Ok((y, cache))
    }

    pub fn backward(&self, cache: &ForwardCache<T>, grad_logits: &Tensor<T>) -> Result<ParamGrads<T>> {
        if cache.layers.len() != self.layers.len() {
            return Err(Error::State("backward needs the cache of a forward pass through this network".into()));
        }
        let mut g = grad_logits.clone();
        let mut per_layer: Vec<Vec<Tensor<T>>> = Vec::with_capacity(self.layers.len());
        for (layer, c) in self.layers.iter().zip(&cache.layers).rev() {
            let mismatch = || Error::State(format!("cache entry for `{}` has the wrong kind", layer.name));
            let (grad_in, params) = match (&layer.kind, c) {
                (LayerKind::Conv(conv), LayerCache::Conv { input }) => {
                    let r = conv.backward(input, &g)?;
                    (r.input, vec![r.kernel, r.bias])
                }
                (LayerKind::BatchNorm(bn), LayerCache::BatchNorm(bc)) => {
                    let r = bn.backward(bc, &g)?;
                    (r.input, vec![r.gamma, r.beta])
                }
                (LayerKind::Relu, LayerCache::Relu { input }) => (relu_backward(input, &g)?, vec![]),
                (LayerKind::MaxPool(_), LayerCache::MaxPool(rec)) => (maxpool3d_backward(rec, &g)?, vec![]),
                (LayerKind::Flatten, LayerCache::Flatten { input_dims }) => (g.into_reshaped(input_dims)?, vec![]),
                (LayerKind::Dense(d), LayerCache::Dense { input }) => {
                    let r = d.backward(input, &g)?;
                    (r.input, vec![r.weight, r.bias])
                }
                (LayerKind::Dropout(_), LayerCache::Dropout(mask)) => (dropout_backward(mask, &g)?, vec![]),
                _ => return Err(mismatch()),
            };
            g = grad_in;
            per_layer.push(params);
        }
        per_layer.reverse();
        let names = self.learnable().into_iter().map(|(n, _)| n).collect();
        Ok(ParamGrads {
            names,
            grads: per_layer.into_iter().flatten().collect(),
            input: g,
        })
    }
}

fn reset_bn<T: Scalar>(bn: &mut BatchNorm<T>) {
    bn.gamma.data_mut().fill(T::one());
    bn.beta.data_mut().fill(T::zero());
    bn.running_mean.data_mut().fill(T::zero());
    bn.running_var.data_mut().fill(T::one());
}

fn flatten<T: Scalar>(h: Tensor<T>) -> Result<Tensor<T>> {
    let n = h.dims()[0];
    let rest = h.numel() / n;
    h.into_reshaped(&[n, rest])
}
