use crate::error::{Error, Result};

/// Raw counts, rows = true class, columns = predicted class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

/// Row-normalized view. Rows with no support are all zero and flagged.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedConfusion {
    pub rows: Vec<Vec<f64>>,
    pub zero_support: Vec<bool>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; num_classes]; num_classes],
        }
    }

    pub fn from_labels(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Validation(format!(
                "{} true labels vs {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut cm = Self::new(num_classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= num_classes || p >= num_classes {
                return Err(Error::Validation(format!(
                    "label pair ({t}, {p}) out of range for {num_classes} classes"
                )));
            }
            cm.counts[t][p] += 1;
        }
        Ok(cm)
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted_total(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }

    pub fn normalized(&self) -> NormalizedConfusion {
        let mut zero_support = Vec::with_capacity(self.num_classes());
        let rows = self
            .counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                zero_support.push(total == 0);
                row.iter()
                    .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                    .collect()
            })
            .collect();
        NormalizedConfusion { rows, zero_support }
    }

    /// Mean of the normalized diagonal over classes with support.
    pub fn average_accuracy(&self) -> Result<f64> {
        self.normalized().average_accuracy()
    }
}

impl NormalizedConfusion {
    /// Takes already-normalized rows as given (e.g. a published table whose
    /// rows need not sum exactly to one).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Validation("normalized confusion rows must form a non-empty square".into()));
        }
        let zero_support = rows.iter().map(|r| r.iter().all(|&v| v == 0.0)).collect();
        Ok(Self { rows, zero_support })
    }

    pub fn average_accuracy(&self) -> Result<f64> {
        let diag: Vec<f64> = (0..self.rows.len())
            .filter(|&i| !self.zero_support[i])
            .map(|i| self.rows[i][i])
            .collect();
        if diag.is_empty() {
            return Err(Error::Undefined("average accuracy of a matrix with no supported rows".into()));
        }
        Ok(diag.iter().sum::<f64>() / diag.len() as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub f1_defined: bool,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PrfReport {
    pub per_class: Vec<ClassScores>,
    /// Unweighted means over the classes where each metric is defined.
    pub avg_precision: f64,
    pub avg_recall: f64,
    pub avg_f1: f64,
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Per-class precision, recall and F1. A zero denominator gives 0 and
/// clears the matching `*_defined` flag; a class that is predicted but never
/// true (or the reverse) still has a defined F1 of 0.
pub fn precision_recall_f1(cm: &ConfusionMatrix) -> PrfReport {
    let per_class: Vec<ClassScores> = (0..cm.num_classes())
        .map(|c| {
            let tp = cm.counts[c][c] as f64;
            let (pred, support) = (cm.predicted_total(c), cm.support(c));
            let precision = if pred == 0 { 0.0 } else { tp / pred as f64 };
            let recall = if support == 0 { 0.0 } else { tp / support as f64 };
            // F1 is undefined only for a class absent from both truth and predictions
            let f1_defined = pred > 0 || support > 0;
            ClassScores {
                precision,
                recall,
                f1: f1(precision, recall),
                precision_defined: pred > 0,
                recall_defined: support > 0,
                f1_defined,
            }
        })
        .collect();
    let mean = |get: fn(&ClassScores) -> Option<f64>| {
        let v: Vec<f64> = per_class.iter().filter_map(get).collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    PrfReport {
        avg_precision: mean(|s| s.precision_defined.then_some(s.precision)),
        avg_recall: mean(|s| s.recall_defined.then_some(s.recall)),
        avg_f1: mean(|s| s.f1_defined.then_some(s.f1)),
        per_class,
    }
}

/// Collapses per-cube rows to one (true, predicted) pair per video by
/// majority vote, ties to the lower class index. Videos keep first-seen order.
pub fn video_majority(video_ids: &[String], truth: &[usize], predicted: &[usize], num_classes: usize) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<&str> = Vec::new();
    let mut votes: std::collections::HashMap<&str, (Vec<u64>, Vec<u64>)> = Default::default();
    for ((id, &t), &p) in video_ids.iter().zip(truth).zip(predicted) {
        let e = votes.entry(id).or_insert_with(|| {
            order.push(id);
            (vec![0; num_classes], vec![0; num_classes])
        });
        e.0[t] += 1;
        e.1[p] += 1;
    }
    let winner = |v: &[u64]| (0..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best });
    order.iter().map(|id| (winner(&votes[id].0), winner(&votes[id].1))).unzip()
}
