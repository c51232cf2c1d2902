use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{intersect_regions, LossSpec};
use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, OperatingPoint};
use crate::metrics::{confusion_rates, GroupRates, GroupStats, LabeledPredictions};
use crate::par::{self, Execution};
use crate::rng::unit_draw;

/// Randomization of one group's hard predictions:
/// `P(y~ = 1 | y^ = 0) = p0` and `P(y~ = 1 | y^ = 1) = p1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardGroupParams {
    pub p0: f64,
    pub p1: f64,
    pub base_fpr: f64,
    pub base_tpr: f64,
    pub n_pos: u64,
    pub n_neg: u64,
}

impl HardGroupParams {
    pub fn identity(base_fpr: f64, base_tpr: f64) -> Self {
        Self { p0: 0.0, p1: 1.0, base_fpr, base_tpr, n_pos: 0, n_neg: 0 }
    }

    /// Derived `(fpr, tpr)` when applied to a classifier with the given rates.
    pub fn derive(&self, fpr: f64, tpr: f64) -> OperatingPoint {
        OperatingPoint::new(
            self.p0 * (1.0 - fpr) + self.p1 * fpr,
            self.p0 * (1.0 - tpr) + self.p1 * tpr,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardDerivedPredictor {
    pub groups: BTreeMap<String, HardGroupParams>,
    /// Common operating point shared by every group after post-processing.
    pub target: OperatingPoint,
    pub loss: LossSpec,
    /// Expected loss at the target.
    pub objective: f64,
    /// Expected loss of the base predictions.
    pub base_loss: f64,
    /// Best expected loss reachable when each group optimizes on its own.
    pub unconstrained_loss: f64,
}

/// Points reachable by randomizing a classifier with rates `(fpr, tpr)`:
/// the parallelogram spanned by it, its negation and the two constant
/// predictors.
pub fn hard_region(fpr: f64, tpr: f64) -> ConvexPolygon {
    ConvexPolygon::hull_of(&[
        OperatingPoint::new(0.0, 0.0),
        OperatingPoint::new(1.0, 1.0),
        OperatingPoint::new(fpr, tpr),
        OperatingPoint::new(1.0 - fpr, 1.0 - tpr),
    ])
}

/// Solves `derive(fpr, tpr) = target` for `(p0, p1)`, clamped to `[0, 1]`.
fn solve_params(fpr: f64, tpr: f64, target: OperatingPoint) -> (f64, f64) {
    let det = tpr - fpr;
    if det.abs() < 1e-12 {
        // the region is the diagonal
        let p = (0.5 * (target.fpr + target.tpr)).clamp(0.0, 1.0);
        return (p, p);
    }
    let diff = (target.tpr - target.fpr) / det;
    let p0 = target.fpr - diff * fpr;
    (p0.clamp(0.0, 1.0), (p0 + diff).clamp(0.0, 1.0))
}

/// Fits the equalized-odds derived predictor over hard predictions.
pub fn fit_eo_hard(preds: &LabeledPredictions, loss: &LossSpec) -> Result<HardDerivedPredictor> {
    fit_eo_hard_from_rates(&confusion_rates(preds)?, loss)
}

/// Same as [`fit_eo_hard`], from already tallied base rates.
pub fn fit_eo_hard_from_rates(base: &GroupRates, loss: &LossSpec) -> Result<HardDerivedPredictor> {
    if base.len() < 2 {
        return Err(Error::InvalidInput("equalized-odds fitting needs at least two groups".into()));
    }
    let mut points = BTreeMap::new();
    for (g, s) in base.iter() {
        let p = s.operating_point().ok_or_else(|| Error::UndefinedRates(g.clone()))?;
        points.insert(g.clone(), p);
    }
    let weights = loss.resolve_weights(base)?;
    let regions: Vec<ConvexPolygon> = points.values().map(|&(f, t)| hard_region(f, t)).collect();
    let feasible = intersect_regions(&regions)?;
    let (a, b) = loss.shared_point_coefficients(&weights);
    let target = feasible
        .minimize_linear(a, -b)
        .ok_or_else(|| Error::Degenerate("empty feasible region".into()))?;

    let mut groups = BTreeMap::new();
    let mut unconstrained_loss = 0.0;
    for ((g, &(f, t)), region) in points.iter().zip(&regions) {
        let (p0, p1) = solve_params(f, t, target);
        let s = &base.groups[g];
        groups.insert(g.clone(), HardGroupParams { p0, p1, base_fpr: f, base_tpr: t, n_pos: s.n_pos, n_neg: s.n_neg });
        let w = weights[g];
        unconstrained_loss += region
            .vertices()
            .iter()
            .map(|v| loss.group_loss(w, v.fpr, v.tpr))
            .fold(f64::INFINITY, f64::min);
    }

    Ok(HardDerivedPredictor {
        groups,
        target,
        loss: loss.clone(),
        objective: a * target.fpr - b * target.tpr + b,
        base_loss: loss.expected_loss(base)?,
        unconstrained_loss,
    })
}

impl HardDerivedPredictor {
    /// Closed-form derived rates for base predictions with the given rates.
    pub fn expected_rates(&self, base: &GroupRates) -> Result<GroupRates> {
        let mut out = GroupRates::default();
        for (g, s) in base.iter() {
            let params = self.groups.get(g).ok_or_else(|| Error::UnknownGroup(g.clone()))?;
            let (f, t) = s.operating_point().ok_or_else(|| Error::UndefinedRates(g.clone()))?;
            let d = params.derive(f, t);
            out.groups.insert(g.clone(), GroupStats::from_rates(d.tpr, d.fpr, s.n_pos, s.n_neg));
        }
        Ok(out)
    }

    /// Expected rates at the base rates seen during fitting.
    pub fn fitted_rates(&self) -> GroupRates {
        let groups = self
            .groups
            .iter()
            .map(|(g, p)| {
                let d = p.derive(p.base_fpr, p.base_tpr);
                (g.clone(), GroupStats::from_rates(d.tpr, d.fpr, p.n_pos, p.n_neg))
            })
            .collect();
        GroupRates { groups }
    }

    pub fn apply(&self, preds: &LabeledPredictions, seed: u64) -> Result<Vec<bool>> {
        self.apply_with(preds, seed, Execution::default())
    }

    /// Randomized predictions; each sample's coin is keyed by `(seed, id)`.
    pub fn apply_with(&self, preds: &LabeledPredictions, seed: u64, exec: Execution) -> Result<Vec<bool>> {
        let params: Vec<&HardGroupParams> = preds
            .universe()
            .iter()
            .map(|g| self.groups.get(g).ok_or_else(|| Error::UnknownGroup(g.clone())))
            .collect::<Result<_>>()?;
        let y_hat = preds.hard_labels();
        let groups = preds.group_indices();
        let ids = preds.ids();
        Ok(par::map_range(preds.len(), exec, |i| {
            let p = params[groups[i]];
            let prob = if y_hat[i] { p.p1 } else { p.p0 };
            if prob <= 0.0 {
                false
            } else if prob >= 1.0 {
                true
            } else {
                unit_draw(seed, "eo-hard", &ids[i]) < prob
            }
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rates(groups: &[(&str, f64, f64, u64, u64)]) -> GroupRates {
        let mut r = GroupRates::default();
        for &(g, tpr, fpr, n_pos, n_neg) in groups {
            r.groups.insert(g.into(), GroupStats::from_rates(tpr, fpr, n_pos, n_neg));
        }
        r
    }

    #[test]
    fn already_fair_is_identity() {
        let base = rates(&[("a", 0.8, 0.1, 40, 60), ("b", 0.8, 0.1, 20, 80)]);
        let dp = fit_eo_hard_from_rates(&base, &LossSpec::default()).unwrap();
        for p in dp.groups.values() {
            assert_eq!((p.p0, p.p1), (0.0, 1.0));
        }
        assert!((dp.objective - dp.base_loss).abs() < 1e-15);
        let exp = dp.expected_rates(&base).unwrap();
        assert_eq!(exp, base);
    }

    #[test]
    fn duplicated_group_is_identity() {
        let base = rates(&[("a", 0.7, 0.2, 30, 70), ("a_copy", 0.7, 0.2, 30, 70)]);
        let dp = fit_eo_hard_from_rates(&base, &LossSpec::default()).unwrap();
        assert!(dp.groups.values().all(|p| p.p0 == 0.0 && p.p1 == 1.0));
    }

    #[test]
    fn fitted_groups_share_the_target() {
        let base = rates(&[("a", 0.9, 0.2, 50, 50), ("b", 0.6, 0.3, 50, 50)]);
        let dp = fit_eo_hard_from_rates(&base, &LossSpec::default()).unwrap();
        let exp = dp.expected_rates(&base).unwrap();
        let a = exp.get("a").unwrap();
        let b = exp.get("b").unwrap();
        assert!((a.tpr.unwrap() - b.tpr.unwrap()).abs() <= 1e-9);
        assert!((a.fpr.unwrap() - b.fpr.unwrap()).abs() <= 1e-9);
        assert!(dp.objective >= dp.unconstrained_loss - 1e-9);
    }

    #[test]
    fn undefined_group_is_rejected() {
        let base = rates(&[("a", 0.9, 0.2, 50, 50), ("b", 0.6, 0.3, 0, 50)]);
        assert!(matches!(
            fit_eo_hard_from_rates(&base, &LossSpec::default()),
            Err(Error::UndefinedRates(g)) if g == "b"
        ));
        let one = rates(&[("a", 0.9, 0.2, 50, 50)]);
        assert!(fit_eo_hard_from_rates(&one, &LossSpec::default()).is_err());
    }

    #[test]
    fn all_ones_params() {
        let p = HardGroupParams { p0: 1.0, p1: 1.0, base_fpr: 0.3, base_tpr: 0.7, n_pos: 1, n_neg: 1 };
        assert_eq!(p.derive(0.3, 0.7), OperatingPoint::new(1.0, 1.0));
        let id = HardGroupParams::identity(0.3, 0.7);
        assert_eq!(id.derive(0.3, 0.7), OperatingPoint::new(0.3, 0.7));
    }
}
