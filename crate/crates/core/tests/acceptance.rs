//! End-to-end acceptance checks, one test per criterion. Each prints a
//! single `criterion N: PASS|FAIL ...` line. The tests share one lock so the
//! wall-clock budgets are measured without interference.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cube3d::data::{augment_flips, synth_fixture, DatasetManifest, FrameSequence, Multiplicity, Split, SynthConfig};
use cube3d::gradcheck::{central_difference, random_tensor, rel_err};
use cube3d::metrics::{precision_recall_f1, roc_curve, ConfusionMatrix, NormalizedConfusion};
use cube3d::model::arch::TABLE1_REFERENCE;
use cube3d::model::{
    build_model, compact_layers, gradcheck_layers, load_checkpoint, read_checkpoint, save_checkpoint, shape_audit,
    AnomalyNet, Column, InitSpec, ShapeAudit, TrainingMeta, TABLE1_INPUT,
};
use cube3d::nn::{maxpool3d_forward, softmax_cross_entropy, BatchNorm, Conv3d, Pool3dConfig};
use cube3d::train::{load_cubes, predict_video, CubeSet, TrainConfig, Trainer};
use cube3d::Tensor;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Writes to the raw stdout handle so the line shows without `--nocapture`.
fn report(n: usize, ok: bool, detail: &str) {
    let line = format!("criterion {n}: {} {detail}\n", if ok { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

#[test]
fn criterion_1_shape_audit() {
    let _g = serial();
    let start = Instant::now();
    let mut net = build_model(14).unwrap();
    net.init_weights(InitSpec::new(1, 0.01).unwrap()).unwrap();
    let x = random_tensor::<f32>(&[1, 16, 170, 170, 3], 2).map(|v| v.abs());
    let trace = net.forward_trace(&x).unwrap();
    let elapsed = start.elapsed();

    // every published Output row is reproduced by the executed forward pass
    let mut output_mismatch = Vec::new();
    for r in TABLE1_REFERENCE.iter().filter(|r| r.name != "Input") {
        match trace.iter().find(|(name, _, _)| name == r.name) {
            Some((_, _, out)) if out[1..] == *r.output => {}
            _ => output_mismatch.push(r.name),
        }
    }
    let flatten = trace.iter().find(|(n, _, _)| n == "flatten").map(|t| t.2.clone());

    let audit = shape_audit(&net, TABLE1_INPUT).unwrap();
    let devs = audit.compare_table1();
    let mut layers: Vec<&str> = devs.iter().map(|d| d.layer.as_str()).collect();
    layers.sort();
    let all_input_self_inconsistent = devs
        .iter()
        .all(|d| d.column == Column::Input && d.documented() && ShapeAudit::is_table_inconsistency(d, TABLE1_REFERENCE));
    let pool5 = devs.iter().find(|d| d.layer == "pool5");
    let pool5_ok = pool5.is_some_and(|d| d.published == [2, 13, 13, 512] && d.computed == [2, 11, 11, 512]);

    // The published Input column contradicts its own Output column in three
    // places (conv1, pool2, pool5); only pool5 affects any computed shape.
    // The deviation set is pinned exactly.
    let ok = output_mismatch.is_empty()
        && flatten == Some(vec![1, 18432])
        && layers == ["conv1", "pool2", "pool5"]
        && all_input_self_inconsistent
        && pool5_ok
        && audit.missing(TABLE1_REFERENCE).is_empty()
        && elapsed < Duration::from_secs(120);
    report(
        1,
        ok,
        &format!(
            "all {} Output rows match, flatten {:?}; documented Input-column deviations: {} (pool5 2×13×13 vs computed 2×11×11; conv1 and pool2 are further self-inconsistencies of the published table, so exactly-one is not attainable against it); forward {:.1}s",
            TABLE1_REFERENCE.len() - 1,
            flatten.unwrap_or_default(),
            layers.join(", "),
            elapsed.as_secs_f64()
        ),
    );
    assert!(output_mismatch.is_empty(), "output rows differ: {output_mismatch:?}");
    assert!(ok, "{devs:?}");
}

fn loss_of(net: &AnomalyNet<f64>, x: &Tensor<f64>, labels: &[usize]) -> f64 {
    let (logits, _) = net.forward_cached(x, 0).unwrap();
    softmax_cross_entropy(&logits, labels).unwrap().0
}

#[test]
fn criterion_2_gradient_integrity() {
    let _g = serial();
    let start = Instant::now();
    let mut net = AnomalyNet::<f64>::from_specs([4, 16, 16, 3], &gradcheck_layers(5)).unwrap();
    net.init_weights(InitSpec::new(21, 0.2).unwrap()).unwrap();
    let x = random_tensor::<f64>(&[1, 4, 16, 16, 3], 22);
    let labels = [3];
    let (logits, cache) = net.forward_cached(&x, 0).unwrap();
    let (_, g) = softmax_cross_entropy(&logits, &labels).unwrap();
    let grads = net.backward(&cache, &g).unwrap();

    let mut worst = (String::new(), 0.0f64);
    for (i, name) in grads.names.iter().enumerate() {
        let at = net.learnable()[i].1.clone();
        let num = central_difference(&at, 1e-5, |p| {
            let mut probe = net.clone();
            *probe.learnable_mut()[i] = p.clone();
            loss_of(&probe, &x, &labels)
        });
        let e = rel_err(&grads.grads[i], &num);
        if e >= worst.1 {
            worst = (name.clone(), e);
        }
    }
    let num = central_difference(&x, 1e-5, |xp| loss_of(&net, xp, &labels));
    let e = rel_err(&grads.input, &num);
    if e >= worst.1 {
        worst = ("input".into(), e);
    }
    let elapsed = start.elapsed();
    let ok = worst.1 <= 1e-4 && elapsed < Duration::from_secs(60);
    report(
        2,
        ok,
        &format!(
            "{} parameter tensors + input, worst rel err {:.2e} ({}), {:.1}s",
            grads.names.len(),
            worst.1,
            worst.0,
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok);
}

/// Direct six-deep loop, zero padding outside the input.
fn conv_oracle(x: &Tensor<f64>, k: &Tensor<f64>, bias: &Tensor<f64>) -> Tensor<f64> {
    let [n, t, h, w, _] = <[usize; 5]>::try_from(x.dims()).unwrap();
    let [kt, kh, kw, cin, cout] = <[usize; 5]>::try_from(k.dims()).unwrap();
    let (pt, ph, pw) = ((kt / 2) as isize, (kh / 2) as isize, (kw / 2) as isize);
    Tensor::from_shape_fn(&[n, t, h, w, cout], |o| {
        let mut acc = bias.data()[o[4]];
        for a in 0..kt {
            for b in 0..kh {
                for c in 0..kw {
                    let (ti, hi, wi) = (
                        o[1] as isize + a as isize - pt,
                        o[2] as isize + b as isize - ph,
                        o[3] as isize + c as isize - pw,
                    );
                    if ti < 0 || hi < 0 || wi < 0 || ti >= t as isize || hi >= h as isize || wi >= w as isize {
                        continue;
                    }
                    for ci in 0..cin {
                        acc += x.at(&[o[0], ti as usize, hi as usize, wi as usize, ci]) * k.at(&[a, b, c, ci, o[4]]);
                    }
                }
            }
        }
        acc
    })
    .unwrap()
}

/// Enumerates window starts `0, s, 2s, …` while they lie inside the input
/// (and, in floor mode, while the whole window fits).
fn pool_oracle(x: &Tensor<f64>, win: [usize; 3], stride: [usize; 3], ceil: bool) -> Tensor<f64> {
    let d = x.dims();
    let starts = |axis: usize| -> Vec<usize> {
        let len = d[axis + 1];
        let mut v: Vec<usize> = (0..len).step_by(stride[axis]).filter(|&s| ceil || s + win[axis] <= len).collect();
        if v.is_empty() {
            v.push(0);
        }
        // in ceil mode a trailing start is kept only if the previous window did not already reach the end
        if ceil {
            while v.len() > 1 && v[v.len() - 2] + win[axis] >= len {
                v.pop();
            }
        }
        v
    };
    let (st, sh, sw) = (starts(0), starts(1), starts(2));
    Tensor::from_shape_fn(&[d[0], st.len(), sh.len(), sw.len(), d[4]], |o| {
        let mut best = f64::NEG_INFINITY;
        for a in st[o[1]]..(st[o[1]] + win[0]).min(d[1]) {
            for b in sh[o[2]]..(sh[o[2]] + win[1]).min(d[2]) {
                for c in sw[o[3]]..(sw[o[3]] + win[2]).min(d[3]) {
                    best = best.max(x.at(&[o[0], a, b, c, o[4]]));
                }
            }
        }
        best
    })
    .unwrap()
}

/// Two-pass mean and biased variance per feature, then the affine map.
fn bn_oracle(x: &Tensor<f64>, gamma: &[f64], beta: &[f64]) -> Vec<f64> {
    let f = gamma.len();
    let m = x.numel() / f;
    let mut out = vec![0.0; x.numel()];
    for c in 0..f {
        let vals: Vec<f64> = (0..m).map(|i| x.data()[i * f + c]).collect();
        let mean = vals.iter().sum::<f64>() / m as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m as f64;
        for (i, v) in vals.iter().enumerate() {
            out[i * f + c] = gamma[c] * (v - mean) / (var + 1e-5).sqrt() + beta[c];
        }
    }
    out
}

fn all_pairs_auc(s: &[(f64, bool)]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for a in s.iter().filter(|p| p.1) {
        for b in s.iter().filter(|p| !p.1) {
            pairs += 1.0;
            if a.0 > b.0 {
                wins += 1.0;
            } else if a.0 == b.0 {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn criterion_3_oracle_equivalence() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let instances = 60;
    let (mut conv_worst, mut pool_worst, mut bn_worst) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..instances {
        let seed = 1000 + i as u64;
        let dims = [
            rng.random_range(1..3),
            rng.random_range(1..6),
            rng.random_range(1..7),
            rng.random_range(1..7),
            rng.random_range(1..4),
        ];
        let odd = |r: &mut ChaCha8Rng| [1, 3][r.random_range(0..2)];
        let kdims = [odd(&mut rng), odd(&mut rng), odd(&mut rng), dims[4], rng.random_range(1..5)];
        let x = random_tensor::<f64>(&dims, seed);
        let conv = Conv3d::new(random_tensor(&kdims, seed + 1), random_tensor(&[kdims[4]], seed + 2)).unwrap();
        let y = conv.forward(&x).unwrap();
        conv_worst = conv_worst.max(max_diff(y.data(), conv_oracle(&x, &conv.kernel, &conv.bias).data()));

        let win = [rng.random_range(1..4), rng.random_range(1..4), rng.random_range(1..4)];
        let stride = [rng.random_range(1..4), rng.random_range(1..4), rng.random_range(1..4)];
        let ceil = i % 3 != 0;
        let cfg = Pool3dConfig::new(win, stride, ceil).unwrap();
        let pooled = match maxpool3d_forward(&cfg, &x) {
            Ok((p, _)) => p,
            // floor mode rejects windows larger than the input; retry in ceil mode
            Err(_) => maxpool3d_forward(&Pool3dConfig::new(win, stride, true).unwrap(), &x).unwrap().0,
        };
        let expect = pool_oracle(&x, win, stride, ceil || cfg.output_dims(x.dims()).is_err());
        pool_worst = pool_worst.max(if pooled.dims() == expect.dims() {
            max_diff(pooled.data(), expect.data())
        } else {
            f64::INFINITY
        });

        let mut bn = BatchNorm::<f64>::new(dims[4]).unwrap();
        bn.gamma = random_tensor(&[dims[4]], seed + 3);
        bn.beta = random_tensor(&[dims[4]], seed + 4);
        let bx = random_tensor::<f64>(&[dims[0] + 1, dims[1], dims[2], dims[3], dims[4]], seed + 5);
        let (by, _) = bn.forward_train(&bx).unwrap();
        bn_worst = bn_worst.max(max_diff(by.data(), &bn_oracle(&bx, bn.gamma.data(), bn.beta.data())));
    }

    let mut roc_exact = true;
    for r in 0..10 {
        let s: Vec<(f64, bool)> = (0..500)
            .map(|_| (rng.random_range(0..40) as f64 / 40.0, rng.random_bool(0.2 + 0.06 * r as f64)))
            .collect();
        roc_exact &= roc_curve(&s).auc == Some(all_pairs_auc(&s));
    }

    let ok = conv_worst <= 1e-5 && pool_worst <= 1e-5 && bn_worst <= 1e-5 && roc_exact;
    report(
        3,
        ok,
        &format!(
            "{instances} instances each: conv {conv_worst:.1e}, pool {pool_worst:.1e}, batch norm {bn_worst:.1e}; ROC on 10×500 tied samples exact: {roc_exact}"
        ),
    );
    assert!(ok);
}

/// Criterion 4 settings. The default learning rate and momentum are far too
/// small to move a fresh network within 200 epochs; these are recorded here
/// and in the README.
fn learning_config() -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        learning_rate: 0.01,
        momentum: 0.9,
        dropout_rate: 0.2,
        max_epochs: 200,
        seed: 7,
        ..Default::default()
    }
}

fn eval_accuracy(net: &AnomalyNet<f32>, data: &CubeSet) -> f64 {
    let mut correct = 0;
    for chunk in (0..data.len()).collect::<Vec<_>>().chunks(32) {
        let (x, labels) = data.batch(chunk).unwrap();
        let pred = net.forward_eval(&x).unwrap().argmax_rows();
        correct += pred.iter().zip(&labels).filter(|(p, l)| p == l).count();
    }
    correct as f64 / data.len() as f64
}

fn first_batch_loss(classes: usize, data: &CubeSet) -> f64 {
    let mut net = AnomalyNet::from_specs([16, 32, 32, 3], &compact_layers(classes)).unwrap();
    net.zero_parameters();
    let (x, _) = data.batch(&(0..16).collect::<Vec<_>>()).unwrap();
    let labels: Vec<usize> = (0..16).map(|i| i % classes).collect();
    let (logits, _) = net.forward_cached(&x, 0).unwrap();
    softmax_cross_entropy(&logits, &labels).unwrap().0
}

#[test]
fn criterion_4_learning_capability() {
    let _g = serial();
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let fx = synth_fixture(&SynthConfig::default()).unwrap();
    fx.write(dir.path()).unwrap();
    let data = load_cubes(&fx.manifest, &fx.annotations, dir.path(), Split::Train, [16, 32, 32, 3]).unwrap();
    assert_eq!(data.len(), 4 * 8 * 4);

    let l4 = first_batch_loss(4, &data);
    let l14 = first_batch_loss(14, &data);

    let mut net = AnomalyNet::from_specs([16, 32, 32, 3], &compact_layers(4)).unwrap();
    let cfg = learning_config();
    let mut trainer = Trainer::new(&mut net, cfg.clone()).unwrap();
    let (mut reached, mut acc) = (None, 0.0);
    for epoch in 1..=cfg.max_epochs {
        trainer.run_epoch(&mut net, &data).unwrap();
        acc = eval_accuracy(&net, &data);
        if acc >= 0.95 {
            reached = Some(epoch);
            break;
        }
        if start.elapsed() > Duration::from_secs(600) {
            break;
        }
    }
    let elapsed = start.elapsed();
    let (d4, d14) = ((l4 - 4f64.ln()).abs(), (l14 - 14f64.ln()).abs());
    let ok = reached.is_some() && elapsed < Duration::from_secs(600) && d4 <= 1e-3 && d14 <= 1e-3;
    report(
        4,
        ok,
        &format!(
            "train accuracy {:.3} (eval mode) at epoch {} of {}, {:.0}s; zero-init loss ln4 off by {d4:.1e}, ln14 off by {d14:.1e}; lr {} momentum {} dropout {} batch {}",
            acc,
            reached.map(|e| e.to_string()).unwrap_or_else(|| "none".into()),
            cfg.max_epochs,
            elapsed.as_secs_f64(),
            cfg.learning_rate,
            cfg.momentum,
            cfg.dropout_rate,
            cfg.batch_size
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_5_pipeline_invariants() {
    let _g = serial();
    let fx = synth_fixture(&SynthConfig {
        clips_per_class: 3,
        test_clips_per_class: 1,
        length: 20,
        resolution: 8,
        ..Default::default()
    })
    .unwrap();
    let train_n = fx.manifest.split(Split::Train).count();
    let aug = fx.manifest.augment(Multiplicity::Three).unwrap();
    let tripled = aug.split(Split::Train).count() == 3 * train_n
        && aug.split(Split::Test).count() == fx.manifest.split(Split::Test).count();
    let reparsed = DatasetManifest::parse_tsv(&aug.to_tsv()).unwrap() == aug;

    let mut involution = true;
    for v in &fx.videos {
        let [orig, h, vf] = augment_flips(v);
        involution &= h.hflip().frames == orig.frames && vf.vflip().frames == orig.frames;
        involution &= h.frames != orig.frames && vf.frames != orig.frames;
    }

    let mut net = AnomalyNet::from_specs([16, 8, 8, 3], &gradcheck_layers(14)).unwrap();
    net.init_weights(InitSpec::new(5, 0.3).unwrap()).unwrap();
    let video = FrameSequence::new("long", random_tensor::<f32>(&[810, 8, 8, 3], 6).map(|v| v.abs())).unwrap();
    let trace = predict_video(&net, &video).unwrap();
    let worst_sum = trace
        .records
        .iter()
        .map(|r| (r.probs.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let contiguous = trace.records.iter().enumerate().all(|(i, r)| r.start_frame == 16 * i && r.end_frame == 16 * i + 15);

    let ok = tripled && reparsed && involution && trace.records.len() == 50 && contiguous && worst_sum <= 1e-6;
    report(
        5,
        ok,
        &format!(
            "train entries {train_n} -> {}; flips are involutions: {involution}; 810 frames -> {} records; worst softmax row-sum error {worst_sum:.1e}",
            aug.split(Split::Train).count(),
            trace.records.len()
        ),
    );
    assert!(ok);
}

/// Normalized rows of the published 14-class confusion matrix.
const TABLE5: [[f64; 14]; 14] = [
    [0.61, 0.0, 0.072, 0.023, 0.01, 0.057, 0.0, 0.021, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0],
    [0.048, 0.0, 0.066, 0.047, 0.034, 0.0, 0.18, 0.0102, 0.17, 0.01, 0.13, 0.0, 0.0, 0.0],
    [0.023, 0.0, 0.30, 0.0, 0.014, 0.0, 0.01, 0.11, 0.0, 0.12, 0.21, 0.048, 0.0, 0.091],
    [0.024, 0.0, 0.031, 0.26, 0.0, 0.0, 0.28, 0.026, 0.0, 0.0, 0.01, 0.0, 0.0, 0.0],
    [0.0, 0.13, 0.0, 0.0, 0.053, 0.0, 0.015, 0.0, 0.1, 0.23, 0.02, 0.12, 0.21, 0.069],
    [0.0, 0.0, 0.058, 0.0, 0.0, 0.60, 0.0, 0.0, 0.12, 0.0, 0.11, 0.0, 0.0, 0.004],
    [0.012, 0.0, 0.0, 0.015, 0.17, 0.0, 0.66, 0.0, 0.0, 0.0, 0.0, 0.0063, 0.0, 0.0],
    [0.0133, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.78, 0.0, 0.0, 0.0, 0.023, 0.0, 0.23],
    [0.062, 0.0, 0.0, 0.016, 0.016, 0.016, 0.041, 0.033, 0.60, 0.078, 0.0, 0.0, 0.016, 0.0],
    [0.0, 0.0, 0.011, 0.0, 0.0, 0.011, 0.094, 0.0, 0.009, 0.50, 0.0, 0.29, 0.0, 0.0084],
    [0.0, 0.0, 0.0046, 0.0046, 0.0, 0.027, 0.003, 0.1, 0.06, 0.0, 0.27, 0.0, 0.0, 0.0066],
    [0.0, 0.0, 0.096, 0.0, 0.0, 0.0, 0.008, 0.0, 0.0, 0.11, 0.0, 0.80, 0.0031, 0.0],
    [0.0, 0.0, 0.036, 0.009, 0.0, 0.0, 0.019, 0.0, 0.0, 0.24, 0.0, 0.21, 0.30, 0.0],
    [0.0, 0.0, 0.025, 0.0, 0.0, 0.0, 0.012, 0.0, 0.23, 0.0, 0.0, 0.0, 0.0406, 0.60],
];

#[test]
fn criterion_6_metrics_fidelity() {
    let _g = serial();
    let rows = NormalizedConfusion::from_rows(TABLE5.iter().map(|r| r.to_vec()).collect()).unwrap();
    let avg = rows.average_accuracy().unwrap();

    let labels: Vec<usize> = (0..14).flat_map(|c| std::iter::repeat_n(c, 3)).collect();
    let cm = ConfusionMatrix::from_labels(&labels, &labels, 14).unwrap();
    let prf = precision_recall_f1(&cm);
    let perfect = prf.per_class.iter().all(|s| s.precision == 1.0 && s.recall == 1.0 && s.f1 == 1.0)
        && (prf.avg_precision, prf.avg_recall, prf.avg_f1) == (1.0, 1.0, 1.0);

    let ok = (avg - 0.452).abs() <= 1e-3 && perfect;
    report(6, ok, &format!("published diagonal average {avg:.5}; identity matrix gives P = R = F1 = 1: {perfect}"));
    assert!(ok);
}

fn cli_train(dir: &Path, out: &str) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_cube3d"))
        .args(["train", "--manifest"])
        .arg(dir.join("manifest.tsv"))
        .args(["--arch", "compact", "--classes", "4", "--seed", "7", "--epochs", "2"])
        .args(["--batch-size", "16", "--learning-rate", "0.01", "--momentum", "0.9", "--out"])
        .arg(dir.join(out))
        .env_remove("CUBE3D_SEED")
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    fs::read(dir.join(out)).unwrap()
}

#[test]
fn criterion_7_reproducibility() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    synth_fixture(&SynthConfig::default()).unwrap().write(dir.path()).unwrap();
    let a = cli_train(dir.path(), "a.vckpt");
    let b = cli_train(dir.path(), "b.vckpt");
    let identical = a == b;
    let log_identical = fs::read(dir.path().join("a.csv")).unwrap() == fs::read(dir.path().join("b.csv")).unwrap();

    // save → load → save is bit-exact, including running statistics
    let (net, meta) = load_checkpoint(dir.path().join("a.vckpt")).unwrap();
    let again = dir.path().join("again.vckpt");
    save_checkpoint(&net, meta, &again).unwrap();
    let reloaded = load_checkpoint(&again).unwrap().0;
    let bits = |n: &AnomalyNet<f32>| -> Vec<(String, Vec<u32>)> {
        n.named_tensors().into_iter().map(|(k, t)| (k, t.data().iter().map(|v| v.to_bits()).collect())).collect()
    };
    let round_trip = fs::read(&again).unwrap() == a
        && bits(&reloaded) == bits(&net)
        && read_checkpoint(&again).unwrap().meta() == TrainingMeta { epoch: 2, ..meta };

    let ok = identical && log_identical && round_trip;
    report(
        7,
        ok,
        &format!("two seeded train runs byte-identical: {identical} ({} bytes); save/load round trip bit-exact: {round_trip}", a.len()),
    );
    assert!(ok);
}
