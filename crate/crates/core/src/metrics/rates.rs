use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LabeledPredictions;
use crate::error::{Error, Result};

/// Confusion rates of one group. A rate is `None` when its denominator
/// (positives for tpr/fnr, negatives for tnr/fpr) is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n_pos: u64,
    pub n_neg: u64,
    pub tpr: Option<f64>,
    pub fnr: Option<f64>,
    pub tnr: Option<f64>,
    pub fpr: Option<f64>,
}

impl GroupStats {
    pub fn from_counts(true_pos: u64, n_pos: u64, true_neg: u64, n_neg: u64) -> Self {
        let tpr = (n_pos > 0).then(|| true_pos as f64 / n_pos as f64);
        let tnr = (n_neg > 0).then(|| true_neg as f64 / n_neg as f64);
        Self {
            n_pos,
            n_neg,
            tpr,
            fnr: (n_pos > 0).then(|| (n_pos - true_pos) as f64 / n_pos as f64),
            tnr,
            fpr: (n_neg > 0).then(|| (n_neg - true_neg) as f64 / n_neg as f64),
        }
    }

    /// Stats from (possibly fractional, expected) positive-prediction rates.
    pub fn from_rates(tpr: f64, fpr: f64, n_pos: u64, n_neg: u64) -> Self {
        Self {
            n_pos,
            n_neg,
            tpr: (n_pos > 0).then_some(tpr),
            fnr: (n_pos > 0).then(|| 1.0 - tpr),
            tnr: (n_neg > 0).then(|| 1.0 - fpr),
            fpr: (n_neg > 0).then_some(fpr),
        }
    }

    pub fn is_defined(&self) -> bool {
        self.tpr.is_some() && self.fpr.is_some()
    }

    /// `(fpr, tpr)` when both are defined.
    pub fn operating_point(&self) -> Option<(f64, f64)> {
        Some((self.fpr?, self.tpr?))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupRates {
    pub groups: BTreeMap<String, GroupStats>,
}

impl GroupRates {
    pub fn get(&self, group: &str) -> Option<&GroupStats> {
        self.groups.get(group)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &GroupStats)> {
        self.groups.iter()
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn total_samples(&self) -> u64 {
        self.groups.values().map(|g| g.n_pos + g.n_neg).sum()
    }

    /// Range of false-positive rates over groups where it is defined.
    pub fn fpr_range(&self) -> Option<f64> {
        range(self.groups.values().filter_map(|g| g.fpr))
    }
}

/// Per-group confusion rates of the hard predictions (see
/// [`LabeledPredictions::hard_labels`]). Every group of the universe is
/// reported, including empty ones.
pub fn confusion_rates(preds: &LabeledPredictions) -> Result<GroupRates> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("no samples".into()));
    }
    let k = preds.universe().len();
    // tp, n_pos, tn, n_neg
    let mut counts = vec![[0u64; 4]; k];
    let y_hat = preds.hard_labels();
    for ((&g, &y), &p) in preds.group_indices().iter().zip(preds.y_true()).zip(y_hat.iter()) {
        let c = &mut counts[g];
        if y {
            c[1] += 1;
            c[0] += p as u64;
        } else {
            c[3] += 1;
            c[2] += (!p) as u64;
        }
    }
    let groups = preds
        .universe()
        .iter()
        .zip(&counts)
        .map(|(name, c)| (name.clone(), GroupStats::from_counts(c[0], c[1], c[2], c[3])))
        .collect();
    Ok(GroupRates { groups })
}

fn range(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    (lo <= hi).then(|| hi - lo)
}

/// `(tpr_range, tnr_range)`: max minus min over groups whose rate is defined.
pub fn gap_ranges(rates: &GroupRates) -> Result<(f64, f64)> {
    let tpr = range(rates.groups.values().filter_map(|g| g.tpr));
    let tnr = range(rates.groups.values().filter_map(|g| g.tnr));
    match (tpr, tnr) {
        (Some(t), Some(n)) => Ok((t, n)),
        _ => Err(Error::UndefinedRates("<all groups>".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn preds(y_true: &[u8], y_hat: &[u8], groups: &[&str]) -> LabeledPredictions {
        LabeledPredictions::new(
            (0..y_true.len()).map(|i| i.to_string()).collect(),
            y_true.iter().map(|&v| v == 1).collect(),
            groups.iter().map(|g| g.to_string()).collect(),
            None,
            None,
            Some(y_hat.iter().map(|&v| v == 1).collect()),
        )
        .unwrap()
    }

    #[test]
    fn perfect_predictor() {
        let p = preds(&[1, 0, 1, 0], &[1, 0, 1, 0], &["a", "a", "b", "b"]);
        let r = confusion_rates(&p).unwrap();
        for g in ["a", "b"] {
            assert_eq!(r.get(g).unwrap().tpr, Some(1.0));
            assert_eq!(r.get(g).unwrap().tnr, Some(1.0));
        }
        assert_eq!(gap_ranges(&r).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn constant_zero_predictor() {
        let p = preds(&[1, 0, 0, 0], &[0, 0, 0, 0], &["a", "a", "b", "b"]);
        let r = confusion_rates(&p).unwrap();
        assert_eq!(r.get("a").unwrap().tpr, Some(0.0));
        assert_eq!(r.get("a").unwrap().tnr, Some(1.0));
        // group b has no positives
        assert_eq!(r.get("b").unwrap().tpr, None);
        assert_eq!(r.get("b").unwrap().fnr, None);
        assert_eq!(r.get("b").unwrap().tnr, Some(1.0));
    }

    #[test]
    fn eight_sample_table_matches_hand_tally() {
        // group a: (y, yhat) = (1,1) (1,0) (0,0) (0,1) (0,0)
        // group b: (1,1) (1,1) (0,1)
        let p = preds(
            &[1, 1, 0, 0, 0, 1, 1, 0],
            &[1, 0, 0, 1, 0, 1, 1, 1],
            &["a", "a", "a", "a", "a", "b", "b", "b"],
        );
        let r = confusion_rates(&p).unwrap();
        let a = r.get("a").unwrap();
        assert_eq!((a.n_pos, a.n_neg), (2, 3));
        assert_eq!(a.tpr, Some(0.5));
        assert_eq!(a.fnr, Some(0.5));
        assert_eq!(a.tnr, Some(2.0 / 3.0));
        assert_eq!(a.fpr, Some(1.0 / 3.0));
        let b = r.get("b").unwrap();
        assert_eq!((b.n_pos, b.n_neg), (2, 1));
        assert_eq!(b.tpr, Some(1.0));
        assert_eq!(b.tnr, Some(0.0));
        let (t, n) = gap_ranges(&r).unwrap();
        assert_eq!(t, 0.5);
        assert!((n - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ranges_arithmetic() {
        let mut rates = GroupRates::default();
        for (g, t) in [("x", 0.6), ("y", 0.8), ("z", 0.9)] {
            rates.groups.insert(g.into(), GroupStats::from_rates(t, 0.1, 10, 10));
        }
        let (t, n) = gap_ranges(&rates).unwrap();
        assert!((t - 0.3).abs() < 1e-15);
        assert_eq!(n, 0.0);

        let mut single = GroupRates::default();
        single.groups.insert("only".into(), GroupStats::from_rates(0.4, 0.2, 3, 3));
        assert_eq!(gap_ranges(&single).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn no_defined_group_is_an_error() {
        let mut rates = GroupRates::default();
        rates.groups.insert("a".into(), GroupStats::from_counts(0, 0, 1, 2));
        assert!(matches!(gap_ranges(&rates), Err(Error::UndefinedRates(_))));
    }

    proptest! {
        #[test]
        fn counts_and_complements(rows in prop::collection::vec((0u8..2, 0u8..2, 0usize..4), 1..80)) {
            let names = ["g0", "g1", "g2", "g3"];
            let y: Vec<u8> = rows.iter().map(|r| r.0).collect();
            let h: Vec<u8> = rows.iter().map(|r| r.1).collect();
            let g: Vec<&str> = rows.iter().map(|r| names[r.2]).collect();
            let r = confusion_rates(&preds(&y, &h, &g)).unwrap();
            prop_assert_eq!(r.total_samples(), rows.len() as u64);
            for s in r.groups.values() {
                if let (Some(t), Some(f)) = (s.tpr, s.fnr) { prop_assert!((t + f - 1.0).abs() < 1e-12); }
                if let (Some(t), Some(f)) = (s.tnr, s.fpr) { prop_assert!((t + f - 1.0).abs() < 1e-12); }
            }
        }

        #[test]
        fn ranges_ignore_group_names(rates in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..6), shift in 1usize..5) {
            let mut a = GroupRates::default();
            let mut b = GroupRates::default();
            let n = rates.len();
            for (i, &(t, f)) in rates.iter().enumerate() {
                a.groups.insert(format!("g{i}"), GroupStats::from_rates(t, f, 5, 5));
                b.groups.insert(format!("h{}", (i + shift) % n), GroupStats::from_rates(t, f, 5, 5));
            }
            prop_assert_eq!(gap_ranges(&a).unwrap(), gap_ranges(&b).unwrap());
        }
    }
}
