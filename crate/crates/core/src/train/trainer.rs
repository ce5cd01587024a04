//! The epoch loop.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::optim::{PlateauSchedule, SgdMomentum};
use crate::data::{assemble_cubes, preprocess, AnnotationRecord, DatasetManifest, PreprocessConfig, Split};
use crate::error::{Error, Result};
use crate::model::net::{AnomalyNet, InitSpec};
use crate::nn::softmax_cross_entropy;
use crate::tensor::Tensor;

/// Labelled cubes held in memory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CubeSet {
    pub cubes: Vec<Tensor<f32>>,
    pub labels: Vec<usize>,
}

impl CubeSet {
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn batch(&self, indices: &[usize]) -> Result<(Tensor<f32>, Vec<usize>)> {
        let refs: Vec<&Tensor<f32>> = indices.iter().map(|&i| &self.cubes[i]).collect();
        Ok((Tensor::stack(&refs)?, indices.iter().map(|&i| self.labels[i]).collect()))
    }
}

/// Loads, resizes and cuts every entry of `split` into labelled cubes.
/// Flipped entries reuse their source video's annotations.
pub fn load_cubes(
    manifest: &DatasetManifest,
    annotations: &[AnnotationRecord],
    base: &Path,
    split: Split,
    input: [usize; 4],
) -> Result<CubeSet> {
    let pre = PreprocessConfig {
        height: input[1],
        width: input[2],
        subtract_mean: false,
    };
    let mut set = CubeSet::default();
    for entry in manifest.split(split) {
        let mut seq = entry.load(base)?;
        if seq.height() != input[1] || seq.width() != input[2] {
            seq = preprocess(&seq, &pre)?;
        }
        let records: Vec<AnnotationRecord> = annotations
            .iter()
            .filter(|a| a.video_id == entry.source_id())
            .cloned()
            .collect();
        for cube in assemble_cubes(&seq, &records, input[0])? {
            set.labels.push(cube.label.index());
            set.cubes.push(cube.data);
        }
    }
    Ok(set)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochReport {
    /// 1-based.
    pub epoch: usize,
    pub loss: f64,
    /// Fraction of training cubes whose train-mode prediction was correct.
    pub accuracy: f64,
    /// Learning rate used during this epoch.
    pub learning_rate: f64,
}

impl EpochReport {
    pub const CSV_HEADER: &'static str = "epoch,loss,acc,lr";

    pub fn csv_line(&self) -> String {
        format!("{},{},{},{}", self.epoch, self.loss, self.accuracy, self.learning_rate)
    }
}

/// Shuffled mini-batches for one epoch. A trailing batch of one sample is
/// folded into the previous batch, since batch norm over dense features
/// needs two samples.
pub fn epoch_batches(n: usize, batch_size: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    order.shuffle(&mut rng);
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size).map(<[usize]>::to_vec).collect();
    if batches.len() > 1 && batches.last().map(Vec::len) == Some(1) {
        let last = batches.pop().unwrap();
        batches.last_mut().unwrap().extend(last);
    }
    batches
}

pub struct Trainer {
    pub config: TrainConfig,
    pub optimizer: SgdMomentum<f32>,
    pub schedule: PlateauSchedule,
    pub history: Vec<EpochReport>,
    step: u64,
}

impl Trainer {
    /// Validates the config, initializes `net` from the seed and sets its
    /// dropout layers.
    pub fn new(net: &mut AnomalyNet<f32>, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        net.init_weights(InitSpec::new(config.seed, config.init_std)?)?;
        Self::resume(net, config)
    }

    /// Like [`new`](Self::new) but keeps the current weights.
    pub fn resume(net: &mut AnomalyNet<f32>, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        net.set_dropout(config.dropout_rate, config.seed)?;
        let optimizer = SgdMomentum::new(net.learnable().into_iter().map(|(_, t)| t));
        let schedule = PlateauSchedule::new(
            config.learning_rate,
            config.plateau_factor,
            config.plateau_patience_epochs,
            config.plateau_threshold,
        );
        Ok(Self {
            config,
            optimizer,
            schedule,
            history: Vec::new(),
            step: 0,
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.schedule.lr
    }

    /// Runs one epoch over `data`.
    pub fn run_epoch(&mut self, net: &mut AnomalyNet<f32>, data: &CubeSet) -> Result<EpochReport> {
        if data.is_empty() {
            return Err(Error::Config("training set has no cubes".into()));
        }
        let epoch = self.history.len() + 1;
        let lr = self.schedule.lr;
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (b, idx) in epoch_batches(data.len(), self.config.batch_size, self.config.seed, epoch).iter().enumerate() {
            let (x, labels) = data.batch(idx)?;
            let (logits, cache) = net.forward_cached(&x, self.step)?;
            let (loss, grad) = softmax_cross_entropy(&logits, &labels)?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: b + 1,
                    loss,
                });
            }
            let grads = net.backward(&cache, &grad)?;
            self.optimizer
                .step(&mut net.learnable_mut(), &grads.grads, lr, self.config.momentum)?;
            net.apply_batch_stats(&cache)?;
            loss_sum += loss * labels.len() as f64;
            correct += logits.argmax_rows().iter().zip(&labels).filter(|(p, l)| p == l).count();
            self.step += 1;
        }
        let report = EpochReport {
            epoch,
            loss: loss_sum / data.len() as f64,
            accuracy: correct as f64 / data.len() as f64,
            learning_rate: lr,
        };
        self.schedule.update(report.loss);
        self.history.push(report);
        Ok(report)
    }

    /// Runs up to `max_epochs`, calling `on_epoch` after each one. Stops
    /// early when `on_epoch` returns `false`.
    pub fn fit(
        &mut self,
        net: &mut AnomalyNet<f32>,
        data: &CubeSet,
        mut on_epoch: impl FnMut(&EpochReport) -> bool,
    ) -> Result<Vec<EpochReport>> {
        for _ in 0..self.config.max_epochs {
            let r = self.run_epoch(net, data)?;
            if !on_epoch(&r) {
                break;
            }
        }
        Ok(self.history.clone())
    }
}

/// Initializes `net` and trains it for `config.max_epochs`.
pub fn train(net: &mut AnomalyNet<f32>, data: &CubeSet, config: &TrainConfig) -> Result<Vec<EpochReport>> {
    Trainer::new(net, config.clone())?.fit(net, data, |_| true)
}

pub fn write_epoch_log(reports: &[EpochReport], mut w: impl Write) -> Result<()> {
    writeln!(w, "{}", EpochReport::CSV_HEADER)?;
    for r in reports {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}
