//! One-vs-rest ROC curves and AUC by the trapezoid rule over tie blocks.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`; empty when undefined.
    pub points: Vec<(f64, f64)>,
    /// `None` when there are no positives or no negatives.
    pub auc: Option<f64>,
}

/// ROC of `(score, is_positive)` pairs. Equal scores form one block and
/// contribute one point; the area is accumulated in integers and divided
/// once, so it equals the pairwise count `(#{s⁺ > s⁻} + ½·#{s⁺ = s⁻}) / (P·N)`
/// up to a single rounding.
pub fn roc_curve(samples: &[(f64, bool)]) -> RocCurve {
    let pos = samples.iter().filter(|s| s.1).count() as u64;
    let neg = samples.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return RocCurve {
            points: Vec::new(),
            auc: None,
        };
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut twice_area: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let (mut dtp, mut dfp) = (0u64, 0u64);
        let score = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == score {
            if sorted[i].1 {
                dtp += 1;
            } else {
                dfp += 1;
            }
            i += 1;
        }
        twice_area += dfp as u128 * (2 * tp + dtp) as u128;
        tp += dtp;
        fp += dfp;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    RocCurve {
        points,
        auc: Some(twice_area as f64 / (2 * pos as u128 * neg as u128) as f64),
    }
}

/// Per-class one-vs-rest curves from score rows.
pub fn roc_auc(scores: &[Vec<f64>], truth: &[usize]) -> Result<Vec<RocCurve>> {
    let k = check(scores, truth)?;
    Ok((0..k)
        .map(|c| {
            let samples: Vec<(f64, bool)> = scores.iter().zip(truth).map(|(s, &t)| (s[c], t == c)).collect();
            roc_curve(&samples)
        })
        .collect())
}

fn check(scores: &[Vec<f64>], truth: &[usize]) -> Result<usize> {
    if scores.len() != truth.len() {
        return Err(Error::Validation(format!("{} score rows vs {} labels", scores.len(), truth.len())));
    }
    let k = scores.first().map(Vec::len).unwrap_or(0);
    if scores.iter().any(|s| s.len() != k) {
        return Err(Error::Validation("score rows differ in length".into()));
    }
    if let Some(&t) = truth.iter().find(|&&t| t >= k) {
        return Err(Error::Validation(format!("label {t} out of range for {k} score columns")));
    }
    Ok(k)
}

/// `(micro, macro)`: micro pools every `(score, is_positive)` pair of all
/// one-vs-rest problems; macro averages the defined per-class AUCs.
pub fn micro_macro_auc(scores: &[Vec<f64>], truth: &[usize]) -> Result<(f64, f64)> {
    let curves = roc_auc(scores, truth)?;
    let defined: Vec<f64> = curves.iter().filter_map(|c| c.auc).collect();
    if defined.is_empty() {
        return Err(Error::Undefined("macro AUC: no class has both positives and negatives".into()));
    }
    let macro_auc = defined.iter().sum::<f64>() / defined.len() as f64;
    let pooled: Vec<(f64, bool)> = scores
        .iter()
        .zip(truth)
        .flat_map(|(s, &t)| s.iter().enumerate().map(move |(c, &v)| (v, c == t)))
        .collect();
    let micro = roc_curve(&pooled)
        .auc
        .ok_or_else(|| Error::Undefined("micro AUC over an empty problem".into()))?;
    Ok((micro, macro_auc))
}

/// All-pairs reference: `(#{s⁺ > s⁻} + ½·#{s⁺ = s⁻}) / (P·N)`.
pub fn pairwise_auc(samples: &[(f64, bool)]) -> Option<f64> {
    let pos: Vec<f64> = samples.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = samples.iter().filter(|s| !s.1).map(|s| s.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut twice: u128 = 0;
    for &p in &pos {
        for &n in &neg {
            twice += if p > n {
                2
            } else if p == n {
                1
            } else {
                0
            };
        }
    }
    Some(twice as f64 / (2 * pos.len() as u128 * neg.len() as u128) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separable_and_constant_cases() {
        let sep = [(0.9, true), (0.8, true), (0.3, false), (0.1, false)];
        assert_eq!(roc_curve(&sep).auc, Some(1.0));
        let flat = [(0.5, true), (0.5, false), (0.5, false)];
        let c = roc_curve(&flat);
        assert_eq!(c.auc, Some(0.5));
        assert_eq!(c.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(roc_curve(&[(0.2, true)]).auc, None);
    }

    #[test]
    fn matches_pairwise_on_random_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let s: Vec<(f64, bool)> = (0..200).map(|_| (rng.random_range(0..20) as f64 / 20.0, rng.random_bool(0.3))).collect();
            assert_eq!(roc_curve(&s).auc, pairwise_auc(&s));
        }
    }

    #[test]
    fn perfect_classifier_micro_macro() {
        let scores: Vec<Vec<f64>> = (0..12).map(|i| (0..3).map(|c| if c == i % 3 { 0.8 } else { 0.1 }).collect()).collect();
        let truth: Vec<usize> = (0..12).map(|i| i % 3).collect();
        assert_eq!(micro_macro_auc(&scores, &truth).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn two_class_hand_enumeration() {
        // class-1 scores of positives {0.9, 0.4}, negatives {0.6, 0.4, 0.2}:
        // pairs won 1+1+1 (0.9) + 0+0.5+1 (0.4) = 4.5 of 6
        let p1 = [0.9, 0.6, 0.4, 0.4, 0.2];
        let truth = vec![1, 0, 1, 0, 0];
        let scores: Vec<Vec<f64>> = p1.iter().map(|&p| vec![1.0 - p, p]).collect();
        let curves = roc_auc(&scores, &truth).unwrap();
        assert_eq!(curves[1].auc, Some(0.75));
        assert_eq!(curves[0].auc, Some(0.75));
        let pooled: Vec<(f64, bool)> = scores
            .iter()
            .zip(&truth)
            .flat_map(|(s, &t)| vec![(s[0], t == 0), (s[1], t == 1)])
            .collect();
        let (micro, macro_auc) = micro_macro_auc(&scores, &truth).unwrap();
        assert_eq!(macro_auc, 0.75);
        assert_eq!(Some(micro), pairwise_auc(&pooled));
    }

    #[test]
    fn single_class_input_has_no_macro() {
        let scores = vec![vec![0.7, 0.3]; 4];
        assert!(matches!(micro_macro_auc(&scores, &[0, 0, 0, 0]), Err(Error::Undefined(_))));
    }

    proptest! {
        #[test]
        fn curve_is_monotone_and_anchored(raw in proptest::collection::vec((0u8..10, any::<bool>()), 2..80)) {
            let s: Vec<(f64, bool)> = raw.iter().map(|&(v, b)| (v as f64, b)).collect();
            let c = roc_curve(&s);
            if let Some(auc) = c.auc {
                prop_assert!((0.0..=1.0).contains(&auc));
                prop_assert_eq!(c.points[0], (0.0, 0.0));
                prop_assert_eq!(*c.points.last().unwrap(), (1.0, 1.0));
                for w in c.points.windows(2) {
                    prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
                }
            }
        }

        #[test]
        fn negation_complements_without_ties(vals in proptest::collection::hash_set(0u32..100_000, 4..60), flags in proptest::collection::vec(any::<bool>(), 60)) {
            let s: Vec<(f64, bool)> = vals.iter().zip(&flags).map(|(&v, &b)| (v as f64, b)).collect();
            let neg: Vec<(f64, bool)> = s.iter().map(|&(v, b)| (-v, b)).collect();
            if let (Some(a), Some(b)) = (roc_curve(&s).auc, roc_curve(&neg).auc) {
                prop_assert!((a + b - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn macro_between_class_extremes(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let truth: Vec<usize> = (0..60).map(|_| rng.random_range(0..4)).collect();
            let scores: Vec<Vec<f64>> = (0..60).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
            if let Ok((_, m)) = micro_macro_auc(&scores, &truth) {
                let aucs: Vec<f64> = roc_auc(&scores, &truth).unwrap().iter().filter_map(|c| c.auc).collect();
                let lo = aucs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = aucs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(m >= lo - 1e-12 && m <= hi + 1e-12);
            }
        }
    }
}
