use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::par::{self, Execution};

fn check_inputs(scores: &[f64], y_true: &[bool]) -> Result<(u64, u64)> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("no scores".into()));
    }
    if scores.len() != y_true.len() {
        return Err(invalid("scores and labels differ in length"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(invalid("non-finite score"));
    }
    let n_pos = y_true.iter().filter(|&&y| y).count() as u64;
    Ok((n_pos, y_true.len() as u64 - n_pos))
}

/// Indices ordered by descending score (stable among ties).
fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Walks tie groups in descending score order, yielding
/// `(score, positives in group, negatives in group)`.
fn tie_groups<'a>(
    scores: &'a [f64],
    y_true: &'a [bool],
    order: &'a [usize],
) -> impl Iterator<Item = (f64, u64, u64)> + 'a {
    let mut i = 0;
    std::iter::from_fn(move || {
        if i >= order.len() {
            return None;
        }
        let s = scores[order[i]];
        let (mut pos, mut neg) = (0, 0);
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] {
                pos += 1;
            } else {
                neg += 1;
            }
            i += 1;
        }
        Some((s, pos, neg))
    })
}

/// Area under the ROC curve as the Mann-Whitney statistic: the probability
/// that a random positive outscores a random negative, ties counting one half.
pub fn auc_roc(scores: &[f64], y_true: &[bool]) -> Result<f64> {
    let (n_pos, n_neg) = check_inputs(scores, y_true)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass("auc_roc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Doubled mid-ranks keep every quantity an exact integer.
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let s = scores[order[start]];
        let mut end = start;
        while end < order.len() && scores[order[end]] == s {
            end += 1;
        }
        let pos = order[start..end].iter().filter(|&&i| y_true[i]).count() as u128;
        doubled_rank_sum += pos * (start as u128 + end as u128 + 1);
        start = end;
    }
    let n_pos = n_pos as u128;
    let u2 = doubled_rank_sum - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg as u128) as f64)
}

/// Area under the precision-recall curve by the step-wise rule
/// `sum_k (R_k - R_{k-1}) * P_k` over distinct thresholds, highest first.
pub fn auc_prc(scores: &[f64], y_true: &[bool]) -> Result<f64> {
    let (n_pos, _) = check_inputs(scores, y_true)?;
    if n_pos == 0 {
        return Err(Error::SingleClass("auc_prc needs at least one positive".into()));
    }
    let order = descending_order(scores);
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut area = 0.0;
    for (_, pos, neg) in tie_groups(scores, y_true, &order) {
        tp += pos;
        fp += neg;
        if pos > 0 {
            area += (pos as f64 / n_pos as f64) * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(area)
}

/// One empirical ROC operating point: predict positive iff `score >= threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
    pub true_positives: u64,
    pub false_positives: u64,
}

/// Empirical ROC vertices: `(0, 0)` at an infinite threshold, then one point
/// per distinct score in decreasing order, ending at `(1, 1)`.
pub fn roc_curve(scores: &[f64], y_true: &[bool]) -> Result<Vec<RocPoint>> {
    let (n_pos, n_neg) = check_inputs(scores, y_true)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass("roc_curve needs both classes".into()));
    }
    let order = descending_order(scores);
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
        true_positives: 0,
        false_positives: 0,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    for (s, pos, neg) in tie_groups(scores, y_true, &order) {
        tp += pos;
        fp += neg;
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            true_positives: tp,
            false_positives: fp,
        });
    }
    Ok(points)
}

/// Trapezoidal area under a polyline of ROC points.
pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultilabelAuc {
    /// Unweighted mean of per-label AUCs over labels with both classes.
    pub macro_auc: f64,
    /// AUC over all (sample, label) pairs flattened.
    pub micro_auc: f64,
    pub per_label: Vec<Option<f64>>,
    pub warnings: Vec<String>,
}

/// Macro and micro ROC AUC of a samples-by-labels score matrix.
pub fn multilabel_auc(scores: &[Vec<f64>], y_true: &[Vec<bool>]) -> Result<MultilabelAuc> {
    multilabel_auc_with(scores, y_true, Execution::default())
}

pub fn multilabel_auc_with(
    scores: &[Vec<f64>],
    y_true: &[Vec<bool>],
    exec: Execution,
) -> Result<MultilabelAuc> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("no samples".into()));
    }
    if scores.len() != y_true.len() {
        return Err(invalid("score and label matrices differ in row count"));
    }
    let n_labels = scores[0].len();
    if n_labels < 2 {
        return Err(invalid("multilabel AUC needs at least two labels"));
    }
    if scores.iter().zip(y_true).any(|(s, y)| s.len() != n_labels || y.len() != n_labels) {
        return Err(invalid("ragged score or label matrix"));
    }

    let per_label: Vec<Option<f64>> = par::try_map_range(n_labels, exec, |j| {
        let s: Vec<f64> = scores.iter().map(|r| r[j]).collect();
        let y: Vec<bool> = y_true.iter().map(|r| r[j]).collect();
        match auc_roc(&s, &y) {
            Ok(v) => Ok(Some(v)),
            Err(Error::SingleClass(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })?;

    let warnings: Vec<String> = per_label
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_none())
        .map(|(j, _)| format!("label {j} has a single class and is excluded from the macro average"))
        .collect();
    let defined: Vec<f64> = per_label.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::SingleClass("every label column has a single class".into()));
    }
    let macro_auc = defined.iter().sum::<f64>() / defined.len() as f64;

    let flat_scores: Vec<f64> = scores.iter().flatten().copied().collect();
    let flat_labels: Vec<bool> = y_true.iter().flatten().copied().collect();
    let micro_auc = auc_roc(&flat_scores, &flat_labels)?;

    Ok(MultilabelAuc { macro_auc, micro_auc, per_label, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&x| x == 1).collect()
    }

    /// All positive/negative pairs, ties counting one half.
    fn pairwise_auc(scores: &[f64], y: &[bool]) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if y[i] && !y[j] {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    /// Precision-weighted recall increments over every distinct threshold.
    fn brute_force_ap(scores: &[f64], y: &[bool]) -> f64 {
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let n_pos = y.iter().filter(|&&v| v).count() as f64;
        let mut prev_recall = 0.0;
        let mut ap = 0.0;
        for t in thresholds {
            let tp = scores.iter().zip(y).filter(|(&s, &l)| s >= t && l).count() as f64;
            let predicted = scores.iter().filter(|&&s| s >= t).count() as f64;
            let recall = tp / n_pos;
            ap += (recall - prev_recall) * (tp / predicted);
            prev_recall = recall;
        }
        ap
    }

    #[test]
    fn roc_auc_examples() {
        assert_eq!(auc_roc(&[0.1, 0.2, 0.8, 0.9], &labels(&[0, 0, 1, 1])).unwrap(), 1.0);
        assert_eq!(auc_roc(&[0.3; 4], &labels(&[0, 1, 0, 1])).unwrap(), 0.5);
        let s = [0.1, 0.4, 0.35, 0.8];
        let y = labels(&[0, 0, 1, 1]);
        assert_eq!(pairwise_auc(&s, &y), 0.75);
        assert_eq!(auc_roc(&s, &y).unwrap(), 0.75);
    }

    #[test]
    fn roc_auc_single_class_is_an_error() {
        assert!(matches!(auc_roc(&[0.1, 0.2], &labels(&[1, 1])), Err(Error::SingleClass(_))));
    }

    #[test]
    fn prc_examples() {
        assert_eq!(auc_prc(&[0.1, 0.2, 0.8, 0.9], &labels(&[0, 0, 1, 1])).unwrap(), 1.0);
        // thresholds 0.9: P=1 R=1/2; 0.8: P=1/2 R=1/2; 0.7: P=2/3 R=1
        let s = [0.9, 0.8, 0.7];
        let y = labels(&[1, 0, 1]);
        let oracle = brute_force_ap(&s, &y);
        assert!((oracle - 5.0 / 6.0).abs() < 1e-15);
        assert!((auc_prc(&s, &y).unwrap() - oracle).abs() < 1e-15);
        assert!(matches!(auc_prc(&[0.3], &[false]), Err(Error::SingleClass(_))));
    }

    #[test]
    fn prc_positives_last() {
        // a lone positive ranked last: precision at its threshold is the base rate
        let s = [0.9, 0.8, 0.7, 0.1];
        let y = labels(&[0, 0, 0, 1]);
        assert_eq!(auc_prc(&s, &y).unwrap(), 0.25);
        // several positives ranked last agree with threshold enumeration
        let s = [0.9, 0.8, 0.3, 0.2, 0.1];
        let y = labels(&[0, 0, 1, 1, 1]);
        assert!((auc_prc(&s, &y).unwrap() - brute_force_ap(&s, &y)).abs() < 1e-15);
        // fully tied scores give the base rate
        assert_eq!(auc_prc(&[0.5; 4], &labels(&[0, 1, 0, 0])).unwrap(), 0.25);
    }

    #[test]
    fn roc_curve_examples() {
        let pts = roc_curve(&[0.1, 0.2, 0.8, 0.9], &labels(&[0, 0, 1, 1])).unwrap();
        let xy: Vec<(f64, f64)> = pts.iter().map(|p| (p.fpr, p.tpr)).collect();
        for want in [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            assert!(xy.contains(&want));
        }
        let pts = roc_curve(&[0.4; 5], &labels(&[0, 1, 1, 0, 0])).unwrap();
        let xy: Vec<(f64, f64)> = pts.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(xy, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn roc_curve_matches_threshold_sweep() {
        let s = [0.2, 0.7, 0.7, 0.4, 0.9, 0.1];
        let y = labels(&[0, 1, 0, 1, 1, 0]);
        let mut thresholds: Vec<f64> = s.to_vec();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let mut sweep = vec![(0.0, 0.0)];
        for t in thresholds {
            let tp = s.iter().zip(&y).filter(|(&v, &l)| v >= t && l).count() as f64;
            let fp = s.iter().zip(&y).filter(|(&v, &l)| v >= t && !l).count() as f64;
            sweep.push((fp / 3.0, tp / 3.0));
        }
        let got: Vec<(f64, f64)> = roc_curve(&s, &y).unwrap().iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(got, sweep);
    }

    #[test]
    fn multilabel_examples() {
        let scores = vec![vec![0.9, 0.1], vec![0.1, 0.9], vec![0.8, 0.2]];
        let y = vec![vec![true, false], vec![false, true], vec![true, false]];
        let m = multilabel_auc(&scores, &y).unwrap();
        assert_eq!((m.macro_auc, m.micro_auc), (1.0, 1.0));

        // one positive among six: it outranks 3 of 5 negatives in label 0, 4 of 5 in label 1
        let s = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let y0 = labels(&[0, 0, 0, 1, 0, 0]);
        let y1 = labels(&[0, 0, 0, 0, 1, 0]);
        let a0 = pairwise_auc(&s, &y0);
        let a1 = pairwise_auc(&s, &y1);
        assert!((a0 - 0.6).abs() < 1e-15 && (a1 - 0.8).abs() < 1e-15);
        let scores: Vec<Vec<f64>> = (0..6).map(|i| vec![s[i], s[i]]).collect();
        let y: Vec<Vec<bool>> = (0..6).map(|i| vec![y0[i], y1[i]]).collect();
        let m = multilabel_auc(&scores, &y).unwrap();
        assert!((m.macro_auc - 0.7).abs() < 1e-15);
    }

    #[test]
    fn multilabel_excludes_single_class_labels() {
        let scores = vec![vec![0.9, 0.1], vec![0.1, 0.9], vec![0.8, 0.2]];
        let y = vec![vec![true, false], vec![false, false], vec![true, false]];
        let m = multilabel_auc(&scores, &y).unwrap();
        assert_eq!(m.per_label, vec![Some(1.0), None]);
        assert_eq!(m.macro_auc, 1.0);
        assert_eq!(m.warnings.len(), 1);
        assert!(multilabel_auc(&[vec![0.1]], &[vec![true]]).is_err());
    }

    proptest! {
        #[test]
        fn rank_auc_equals_pairwise(rows in prop::collection::vec((0u8..20, any::<bool>()), 2..60)) {
            let s: Vec<f64> = rows.iter().map(|r| r.0 as f64 / 20.0).collect();
            let y: Vec<bool> = rows.iter().map(|r| r.1).collect();
            prop_assume!(y.iter().any(|&v| v) && y.iter().any(|&v| !v));
            let auc = auc_roc(&s, &y).unwrap();
            prop_assert!((auc - pairwise_auc(&s, &y)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&auc));
            let flipped: Vec<bool> = y.iter().map(|v| !v).collect();
            prop_assert!((auc_roc(&s, &flipped).unwrap() - (1.0 - auc)).abs() < 1e-15);
            let curve = roc_curve(&s, &y).unwrap();
            prop_assert!((trapezoid_area(&curve) - auc).abs() < 1e-12);
            prop_assert!(curve.windows(2).all(|w| w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr));
        }

        #[test]
        fn auc_invariant_under_increasing_transform(rows in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..60)) {
            let s: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let y: Vec<bool> = rows.iter().map(|r| r.1).collect();
            prop_assume!(y.iter().any(|&v| v) && y.iter().any(|&v| !v));
            let t: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
            prop_assert_eq!(auc_roc(&s, &y).unwrap(), auc_roc(&t, &y).unwrap());
        }

        #[test]
        fn prc_matches_enumeration(rows in prop::collection::vec((0u8..10, any::<bool>()), 1..40)) {
            let s: Vec<f64> = rows.iter().map(|r| r.0 as f64 / 10.0).collect();
            let y: Vec<bool> = rows.iter().map(|r| r.1).collect();
            prop_assume!(y.iter().any(|&v| v));
            let ap = auc_prc(&s, &y).unwrap();
            prop_assert!((ap - brute_force_ap(&s, &y)).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&ap));
        }
    }
}
