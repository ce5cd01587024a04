//! Windowed inference over whole videos.

use std::io::{Read, Write};
use std::path::Path;

use crate::data::{
    frame_labels, majority_label, preprocess, AnnotationRecord, ClassLabel, DatasetManifest, FrameSequence,
    PreprocessConfig, Split,
};
use crate::error::{Error, Result};
use crate::model::net::AnomalyNet;
use crate::nn::softmax;
use crate::tensor::Tensor;

/// Cubes per eval forward pass.
const INFERENCE_BATCH: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRecord {
    pub start_frame: usize,
    /// Inclusive.
    pub end_frame: usize,
    pub probs: Vec<f64>,
    pub label: usize,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionTrace {
    pub video_id: String,
    pub records: Vec<PredictionRecord>,
}

impl PredictionTrace {
    /// Predicted class of every covered frame; frames past the last full
    /// window are not covered.
    pub fn frame_predictions(&self) -> Vec<usize> {
        self.records
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.label, r.end_frame + 1 - r.start_frame))
            .collect()
    }
}

fn class_name(c: usize) -> String {
    ClassLabel::from_index(c).map(|l| l.name().to_string()).unwrap_or_else(|_| c.to_string())
}

fn record_from_probs(start: usize, window: usize, probs: Vec<f64>) -> PredictionRecord {
    let mut label = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[label] {
            label = i;
        }
    }
    PredictionRecord {
        start_frame: start,
        end_frame: start + window - 1,
        prob: probs[label],
        label,
        probs,
    }
}

/// Softmax scores for every non-overlapping window of `seq`, in eval mode.
/// `seq` must already match the network's frame size.
pub fn predict_video(net: &AnomalyNet<f32>, seq: &FrameSequence) -> Result<PredictionTrace> {
    let [window, h, w, c] = net.input_dims();
    if seq.len() < window {
        return Err(Error::TooShort {
            frames: seq.len(),
            window,
        });
    }
    if seq.height() != h || seq.width() != w || c != 3 {
        return Err(Error::ShapeMismatch(format!(
            "video {} is {}×{}, network expects {h}×{w}",
            seq.video_id,
            seq.height(),
            seq.width()
        )));
    }
    let n = seq.len() / window;
    let cube_len = window * h * w * 3;
    let mut records = Vec::with_capacity(n);
    for chunk_start in (0..n).step_by(INFERENCE_BATCH) {
        let count = INFERENCE_BATCH.min(n - chunk_start);
        let data = seq.frames.data()[chunk_start * cube_len..(chunk_start + count) * cube_len].to_vec();
        let x = Tensor::from_vec(&[count, window, h, w, 3], data)?;
        let probs = softmax(&net.forward_eval(&x)?.cast::<f64>())?;
        let k = probs.dims()[1];
        for (i, row) in probs.data().chunks(k).enumerate() {
            records.push(record_from_probs((chunk_start + i) * window, window, row.to_vec()));
        }
    }
    Ok(PredictionTrace {
        video_id: seq.video_id.clone(),
        records,
    })
}

pub fn write_traces(traces: &[PredictionTrace], w: impl Write) -> Result<()> {
    let k = traces.iter().flat_map(|t| t.records.first()).map(|r| r.probs.len()).next().unwrap_or(ClassLabel::COUNT);
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["video_id", "start_frame", "end_frame", "pred_label", "pred_prob"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..k).map(|i| format!("p_{i}")));
    wtr.write_record(&header).map_err(csv_err)?;
    for t in traces {
        for r in &t.records {
            let mut row = vec![
                t.video_id.clone(),
                r.start_frame.to_string(),
                r.end_frame.to_string(),
                class_name(r.label),
                r.prob.to_string(),
            ];
            row.extend(r.probs.iter().map(|p| p.to_string()));
            wtr.write_record(&row).map_err(csv_err)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Parses trace CSV back into per-video traces, in file order.
pub fn read_traces(r: impl Read) -> Result<Vec<PredictionTrace>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let fixed = ["video_id", "start_frame", "end_frame", "pred_label", "pred_prob"];
    if header.len() < fixed.len() + 2 || header.iter().take(5).ne(fixed) {
        return Err(Error::format("trace header", "expected video_id,start_frame,end_frame,pred_label,pred_prob,p_0,…"));
    }
    let k = header.len() - fixed.len();
    let mut traces: Vec<PredictionTrace> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let field = || format!("trace row {}", i + 1);
        let num = |j: usize| -> Result<f64> { row[j].parse().map_err(|_| Error::format(field(), format!("bad number `{}`", &row[j]))) };
        let int = |j: usize| -> Result<usize> { row[j].parse().map_err(|_| Error::format(field(), format!("bad index `{}`", &row[j]))) };
        let probs = (0..k).map(|j| num(5 + j)).collect::<Result<Vec<_>>>()?;
        let (start, end) = (int(1)?, int(2)?);
        if end < start {
            return Err(Error::format(field(), "end_frame before start_frame"));
        }
        let rec = record_from_probs(start, end + 1 - start, probs);
        match traces.last_mut() {
            Some(t) if t.video_id == row[0] => t.records.push(rec),
            _ => traces.push(PredictionTrace {
                video_id: row[0].to_string(),
                records: vec![rec],
            }),
        }
    }
    Ok(traces)
}

fn csv_err(e: csv::Error) -> Error {
    Error::format("trace csv", e.to_string())
}

/// Aligned per-cube rows for the metrics module.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalRows {
    pub video_ids: Vec<String>,
    pub true_labels: Vec<usize>,
    pub scores: Vec<Vec<f64>>,
}

impl EvalRows {
    pub fn predicted(&self) -> Vec<usize> {
        self.scores.iter().map(|s| record_from_probs(0, 1, s.clone()).label).collect()
    }

    /// Pairs each trace window with the majority annotation label over the
    /// same frames. Every video must have at least one annotation record.
    pub fn from_traces(traces: &[PredictionTrace], annotations: &[AnnotationRecord]) -> Result<Self> {
        let mut rows = Self::default();
        for t in traces {
            let recs: Vec<AnnotationRecord> = annotations.iter().filter(|a| a.video_id == t.video_id).cloned().collect();
            if recs.is_empty() {
                return Err(Error::Validation(format!("video `{}` has no annotation records", t.video_id)));
            }
            let frames = t
                .records
                .iter()
                .map(|r| r.end_frame + 1)
                .chain(recs.iter().map(|a| a.end_frame + 1))
                .max()
                .unwrap_or(0);
            let labels = frame_labels(&recs, frames)?;
            for r in &t.records {
                rows.video_ids.push(t.video_id.clone());
                rows.true_labels.push(majority_label(&labels[r.start_frame..=r.end_frame]).index());
                rows.scores.push(r.probs.clone());
            }
        }
        Ok(rows)
    }
}

/// Predicts every test entry of `manifest` (never augmented) and aligns
/// the scores with annotation labels.
pub fn evaluate_split(
    net: &AnomalyNet<f32>,
    manifest: &DatasetManifest,
    annotations: &[AnnotationRecord],
    base: &Path,
) -> Result<(Vec<PredictionTrace>, EvalRows)> {
    let [_, h, w, _] = net.input_dims();
    let pre = PreprocessConfig {
        height: h,
        width: w,
        subtract_mean: false,
    };
    let mut traces = Vec::new();
    for entry in manifest.split(Split::Test) {
        if !annotations.iter().any(|a| a.video_id == entry.source_id()) {
            return Err(Error::Validation(format!("test video `{}` has no annotation records", entry.video_id)));
        }
        let mut seq = entry.load(base)?;
        if seq.height() != h || seq.width() != w {
            seq = preprocess(&seq, &pre)?;
        }
        let mut trace = predict_video(net, &seq)?;
        trace.video_id = entry.source_id().to_string();
        traces.push(trace);
    }
    let rows = EvalRows::from_traces(&traces, annotations)?;
    Ok((traces, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::random_tensor;
    use crate::model::arch::gradcheck_layers;
    use crate::model::net::InitSpec;

    fn net(seed: u64) -> AnomalyNet<f32> {
        let mut n = AnomalyNet::from_specs([16, 8, 8, 3], &gradcheck_layers(14)).unwrap();
        n.init_weights(InitSpec::new(seed, 0.2).unwrap()).unwrap();
        n
    }

    fn video(frames: usize, seed: u64) -> FrameSequence {
        FrameSequence::new("v", random_tensor::<f32>(&[frames, 8, 8, 3], seed).map(|v| v.abs())).unwrap()
    }

    #[test]
    fn one_record_per_full_window() {
        let n = net(1);
        for frames in [16, 17, 31, 32, 50, 100] {
            let t = predict_video(&n, &video(frames, frames as u64)).unwrap();
            assert_eq!(t.records.len(), frames / 16);
            assert_eq!(t.frame_predictions().len(), 16 * (frames / 16));
            for r in &t.records {
                assert!((r.probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            }
        }
        assert!(matches!(predict_video(&n, &video(15, 0)), Err(Error::TooShort { frames: 15, window: 16 })));
    }

    #[test]
    fn zero_net_predicts_first_class_uniformly() {
        let mut n = net(0);
        n.zero_parameters();
        let t = predict_video(&n, &video(48, 3)).unwrap();
        for r in &t.records {
            assert_eq!(r.label, 0);
            assert!((r.prob - 1.0 / 14.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_single_cube_forward() {
        let n = net(2);
        let v = video(100, 4);
        let t = predict_video(&n, &v).unwrap();
        for (i, r) in t.records.iter().enumerate() {
            let cube = v.frames.crop(&[i * 16, 0, 0, 0], &[16, 8, 8, 3]).unwrap().into_reshaped(&[1, 16, 8, 8, 3]).unwrap();
            let p = softmax(&n.forward_eval(&cube).unwrap().cast::<f64>()).unwrap();
            for (a, b) in r.probs.iter().zip(p.data()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn trace_csv_round_trip() {
        let n = net(5);
        let traces = vec![predict_video(&n, &video(40, 1)).unwrap(), {
            let mut t = predict_video(&n, &video(20, 2)).unwrap();
            t.video_id = "w".into();
            t
        }];
        let mut buf = Vec::new();
        write_traces(&traces, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("video_id,start_frame,end_frame,pred_label,pred_prob,p_0,"));
        assert!(text.lines().next().unwrap().ends_with(",p_13"));
        assert_eq!(read_traces(buf.as_slice()).unwrap(), traces);
    }

    #[test]
    fn rows_need_annotations() {
        let t = predict_video(&net(1), &video(32, 1)).unwrap();
        assert!(matches!(EvalRows::from_traces(std::slice::from_ref(&t), &[]), Err(Error::Validation(_))));
        let ann = [AnnotationRecord::new("v", 0, 9, ClassLabel::Fight)];
        let rows = EvalRows::from_traces(&[t], &ann).unwrap();
        assert_eq!(rows.true_labels, vec![ClassLabel::Fight.index(), ClassLabel::Normal.index()]);
    }
}
