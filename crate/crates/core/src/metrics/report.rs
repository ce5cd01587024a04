//! Evaluation summary and its on-disk artifacts.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::confusion::{precision_recall_f1, video_majority, ConfusionMatrix, PrfReport};
use super::roc::{micro_macro_auc, roc_auc, RocCurve};
use crate::data::ClassLabel;
use crate::error::{Error, Result};
use crate::train::EvalRows;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassReport {
    pub name: String,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub f1_defined: bool,
    /// `None` when the class has no positives or no negatives.
    pub auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub cubes: usize,
    pub videos: usize,
    pub average_accuracy: f64,
    pub video_average_accuracy: f64,
    pub avg_precision: f64,
    pub avg_recall: f64,
    pub avg_f1: f64,
    /// `None` when no class has both positives and negatives.
    pub micro_auc: Option<f64>,
    pub macro_auc: Option<f64>,
    pub classes: Vec<ClassReport>,
    #[serde(skip)]
    pub confusion: ConfusionMatrix,
    #[serde(skip)]
    pub curves: Vec<RocCurve>,
}

pub fn class_names(k: usize) -> Vec<String> {
    (0..k)
        .map(|c| match ClassLabel::from_index(c) {
            Ok(l) => l.name().to_string(),
            Err(_) => format!("class_{c}"),
        })
        .collect()
}

impl MetricsReport {
    pub fn from_rows(rows: &EvalRows) -> Result<Self> {
        if rows.scores.is_empty() {
            return Err(Error::Undefined("no evaluation rows".into()));
        }
        let k = rows.scores[0].len();
        let predicted = rows.predicted();
        let confusion = ConfusionMatrix::from_labels(&rows.true_labels, &predicted, k)?;
        let prf: PrfReport = precision_recall_f1(&confusion);
        let curves = roc_auc(&rows.scores, &rows.true_labels)?;
        let (micro_auc, macro_auc) = match micro_macro_auc(&rows.scores, &rows.true_labels) {
            Ok((mi, ma)) => (Some(mi), Some(ma)),
            Err(Error::Undefined(_)) => (None, None),
            Err(e) => return Err(e),
        };
        let (vt, vp) = video_majority(&rows.video_ids, &rows.true_labels, &predicted, k);
        let video_cm = ConfusionMatrix::from_labels(&vt, &vp, k)?;
        let classes = class_names(k)
            .into_iter()
            .zip(&prf.per_class)
            .zip(&curves)
            .enumerate()
            .map(|(c, ((name, s), curve))| ClassReport {
                name,
                support: confusion.support(c),
                precision: s.precision,
                recall: s.recall,
                f1: s.f1,
                precision_defined: s.precision_defined,
                recall_defined: s.recall_defined,
                f1_defined: s.f1_defined,
                auc: curve.auc,
            })
            .collect();
        Ok(Self {
            cubes: rows.scores.len(),
            videos: vt.len(),
            average_accuracy: confusion.average_accuracy()?,
            video_average_accuracy: video_cm.average_accuracy()?,
            avg_precision: prf.avg_precision,
            avg_recall: prf.avg_recall,
            avg_f1: prf.avg_f1,
            micro_auc,
            macro_auc,
            classes,
            confusion,
            curves,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::format("metrics json", e.to_string()))
    }

    /// Raw counts, a blank line, then the row-normalized matrix.
    pub fn write_confusion(&self, mut w: impl Write) -> Result<()> {
        let names = class_names(self.confusion.num_classes());
        writeln!(w, "true\\pred,{}", names.join(","))?;
        for (name, row) in names.iter().zip(&self.confusion.counts) {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(w, "{name},{}", cells.join(","))?;
        }
        writeln!(w)?;
        writeln!(w, "true\\pred,{}", names.join(","))?;
        for (name, row) in names.iter().zip(&self.confusion.normalized().rows) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
            writeln!(w, "{name},{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Writes `metrics.json`, `confusion.csv` and one `roc_<class>.csv` per
    /// class with a defined curve.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("metrics.json"), self.to_json()? + "\n")?;
        self.write_confusion(fs::File::create(dir.join("confusion.csv"))?)?;
        for (class, curve) in self.classes.iter().zip(&self.curves) {
            if curve.auc.is_none() {
                continue;
            }
            let mut f = fs::File::create(dir.join(format!("roc_{}.csv", class.name)))?;
            writeln!(f, "fpr,tpr")?;
            for (x, y) in &curve.points {
                writeln!(f, "{x},{y}")?;
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "cubes {}  videos {}", self.cubes, self.videos)?;
        writeln!(f, "average accuracy        {:.4}", self.average_accuracy)?;
        writeln!(f, "video average accuracy  {:.4}", self.video_average_accuracy)?;
        writeln!(f, "precision / recall / F1 {:.4} / {:.4} / {:.4}", self.avg_precision, self.avg_recall, self.avg_f1)?;
        let fmt_auc = |a: Option<f64>| a.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
        writeln!(f, "AUC micro / macro       {} / {}", fmt_auc(self.micro_auc), fmt_auc(self.macro_auc))?;
        for c in &self.classes {
            let auc = fmt_auc(c.auc);
            writeln!(f, "  {:<14} n={:<5} P={:.3} R={:.3} F1={:.3} AUC={auc}", c.name, c.support, c.precision, c.recall, c.f1)?;
        }
        Ok(())
    }
}
