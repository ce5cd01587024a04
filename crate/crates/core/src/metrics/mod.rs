//! Confusion matrices, precision/recall/F1 and ROC/AUC.

pub mod confusion;
pub mod report;
pub mod roc;

pub use confusion::{f1, precision_recall_f1, video_majority, ClassScores, ConfusionMatrix, NormalizedConfusion, PrfReport};
pub use report::{class_names, ClassReport, MetricsReport};
pub use roc::{micro_macro_auc, pairwise_auc, roc_auc, roc_curve, RocCurve};
