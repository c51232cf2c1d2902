use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{intersect_regions, threshold_serde, LossSpec};
use crate::error::{invalid, Error, Result};
use crate::geometry::{convex_decomposition, convex_hull_indices, ConvexPolygon, OperatingPoint};
use crate::metrics::{confusion_rates, roc_curve, GroupRates, GroupStats, LabeledPredictions, RocPoint};
use crate::par::{self, Execution};
use crate::rng::unit_draw;

/// One threshold rule in a group's mixture: predict positive iff
/// `score >= threshold`, used with probability `weight`. `(fpr, tpr)` is the
/// rule's empirical operating point on the fitting data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdComponent {
    #[serde(with = "threshold_serde")]
    pub threshold: f64,
    pub weight: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftGroupRule {
    /// One to three components, weights summing to one.
    pub components: Vec<ThresholdComponent>,
    pub n_pos: u64,
    pub n_neg: u64,
}

impl SoftGroupRule {
    pub fn expected_point(&self) -> OperatingPoint {
        let (f, t) = self
            .components
            .iter()
            .fold((0.0, 0.0), |(f, t), c| (f + c.weight * c.fpr, t + c.weight * c.tpr));
        OperatingPoint::new(f, t)
    }

    /// A rule with one threshold consumes no randomness.
    pub fn is_deterministic(&self) -> bool {
        self.components.len() == 1
    }

    /// `(t_lo, t_hi, lambda)`: use `t_lo` with probability `lambda`, else
    /// `t_hi`. Available when the rule mixes at most two thresholds.
    pub fn two_threshold_form(&self) -> Option<(f64, f64, f64)> {
        match self.components.as_slice() {
            [c] => Some((c.threshold, c.threshold, 1.0)),
            [a, b] => {
                let (lo, hi) = if a.threshold <= b.threshold { (a, b) } else { (b, a) };
                Some((lo.threshold, hi.threshold, lo.weight))
            }
            _ => None,
        }
    }

    /// Prediction for one score; `draw` is called only for mixed rules.
    pub fn predict(&self, score: f64, draw: impl FnOnce() -> f64) -> bool {
        let chosen = if self.is_deterministic() {
            &self.components[0]
        } else {
            let u = draw();
            let mut acc = 0.0;
            self.components
                .iter()
                .find(|c| {
                    acc += c.weight;
                    u < acc
                })
                .unwrap_or_else(|| self.components.last().expect("non-empty rule"))
        };
        score >= chosen.threshold
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftDerivedPredictor {
    pub groups: BTreeMap<String, SoftGroupRule>,
    pub target: OperatingPoint,
    pub loss: LossSpec,
    pub objective: f64,
    /// Expected loss of the base hard predictions.
    pub base_loss: f64,
    pub unconstrained_loss: f64,
}

/// Empirical ROC vertices of every group, in universe order.
fn group_curves(preds: &LabeledPredictions) -> Result<Vec<Vec<RocPoint>>> {
    let scores = preds
        .scores()
        .ok_or_else(|| invalid("soft equalized-odds fitting needs prediction scores"))?;
    let k = preds.universe().len();
    let mut per_group: Vec<(Vec<f64>, Vec<bool>)> = vec![(Vec::new(), Vec::new()); k];
    for ((&g, &s), &y) in preds.group_indices().iter().zip(scores).zip(preds.y_true()) {
        per_group[g].0.push(s);
        per_group[g].1.push(y);
    }
    per_group
        .iter()
        .zip(preds.universe())
        .map(|((s, y), name)| {
            roc_curve(s, y).map_err(|e| match e {
                Error::SingleClass(_) | Error::EmptyInput(_) => Error::UndefinedRates(name.clone()),
                other => other,
            })
        })
        .collect()
}

/// Fits the equalized-odds derived predictor over probability scores.
pub fn fit_eo_soft(preds: &LabeledPredictions, loss: &LossSpec) -> Result<SoftDerivedPredictor> {
    if preds.universe().len() < 2 {
        return Err(invalid("equalized-odds fitting needs at least two groups"));
    }
    let curves = group_curves(preds)?;
    let base = confusion_rates(preds)?;
    let weights = loss.resolve_weights(&base)?;

    struct Region {
        roc: Vec<RocPoint>,
        hull: Vec<usize>,
        polygon: ConvexPolygon,
    }
    let regions: Vec<Region> = curves
        .into_iter()
        .map(|roc| {
            let pts: Vec<OperatingPoint> = roc.iter().map(|p| OperatingPoint::new(p.fpr, p.tpr)).collect();
            let hull = convex_hull_indices(&pts);
            let polygon = ConvexPolygon::hull_of(&pts);
            Region { roc, hull, polygon }
        })
        .collect();

    let polygons: Vec<ConvexPolygon> = regions.iter().map(|r| r.polygon.clone()).collect();
    let feasible = intersect_regions(&polygons)?;
    let (a, b) = loss.shared_point_coefficients(&weights);
    let target = feasible
        .minimize_linear(a, -b)
        .ok_or_else(|| Error::Degenerate("empty feasible region".into()))?;

    let mut groups = BTreeMap::new();
    let mut unconstrained_loss = 0.0;
    for (name, region) in preds.universe().iter().zip(&regions) {
        let hull_pts: Vec<OperatingPoint> =
            region.hull.iter().map(|&i| OperatingPoint::new(region.roc[i].fpr, region.roc[i].tpr)).collect();
        let components = convex_decomposition(&hull_pts, target)
            .into_iter()
            .map(|(v, weight)| {
                let p = region.roc[region.hull[v]];
                ThresholdComponent { threshold: p.threshold, weight, fpr: p.fpr, tpr: p.tpr }
            })
            .collect();
        let s = &base.groups[name];
        groups.insert(name.clone(), SoftGroupRule { components, n_pos: s.n_pos, n_neg: s.n_neg });
        let w = weights[name];
        unconstrained_loss += hull_pts
            .iter()
            .map(|p| loss.group_loss(w, p.fpr, p.tpr))
            .fold(f64::INFINITY, f64::min);
    }

    Ok(SoftDerivedPredictor {
        groups,
        target,
        loss: loss.clone(),
        objective: a * target.fpr - b * target.tpr + b,
        base_loss: loss.expected_loss(&base)?,
        unconstrained_loss,
    })
}

impl SoftDerivedPredictor {
    /// Expected rates per group of `base`; the operating points come from the
    /// fitted mixtures, `base` supplies the groups and their class counts.
    pub fn expected_rates(&self, base: &GroupRates) -> Result<GroupRates> {
        let mut out = GroupRates::default();
        for (g, s) in base.iter() {
            let rule = self.groups.get(g).ok_or_else(|| Error::UnknownGroup(g.clone()))?;
            let p = rule.expected_point();
            out.groups.insert(g.clone(), GroupStats::from_rates(p.tpr, p.fpr, s.n_pos, s.n_neg));
        }
        Ok(out)
    }

    pub fn fitted_rates(&self) -> GroupRates {
        let groups = self
            .groups
            .iter()
            .map(|(g, r)| {
                let p = r.expected_point();
                (g.clone(), GroupStats::from_rates(p.tpr, p.fpr, r.n_pos, r.n_neg))
            })
            .collect();
        GroupRates { groups }
    }

    pub fn apply(&self, preds: &LabeledPredictions, seed: u64) -> Result<Vec<bool>> {
        self.apply_with(preds, seed, Execution::default())
    }

    pub fn apply_with(&self, preds: &LabeledPredictions, seed: u64, exec: Execution) -> Result<Vec<bool>> {
        let scores = preds.scores().ok_or_else(|| invalid("soft derived predictor needs prediction scores"))?;
        let rules: Vec<&SoftGroupRule> = preds
            .universe()
            .iter()
            .map(|g| self.groups.get(g).ok_or_else(|| Error::UnknownGroup(g.clone())))
            .collect::<Result<_>>()?;
        let groups = preds.group_indices();
        let ids = preds.ids();
        Ok(par::map_range(preds.len(), exec, |i| {
            rules[groups[i]].predict(scores[i], || unit_draw(seed, "eo-soft", &ids[i]))
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn component(threshold: f64, weight: f64) -> ThresholdComponent {
        ThresholdComponent { threshold, weight, fpr: 0.0, tpr: 0.0 }
    }

    #[test]
    fn zero_threshold_predicts_all_ones() {
        let rule = SoftGroupRule { components: vec![component(0.0, 1.0)], n_pos: 1, n_neg: 1 };
        assert!(rule.predict(0.0, || panic!("no draw for a single threshold")));
        assert!(rule.predict(0.7, || unreachable!()));
        assert_eq!(rule.two_threshold_form(), Some((0.0, 0.0, 1.0)));
    }

    #[test]
    fn mixture_picks_by_cumulative_weight() {
        let rule = SoftGroupRule {
            components: vec![component(0.2, 0.25), component(0.8, 0.75)],
            n_pos: 1,
            n_neg: 1,
        };
        assert!(rule.predict(0.5, || 0.1));
        assert!(!rule.predict(0.5, || 0.3));
        assert_eq!(rule.two_threshold_form(), Some((0.2, 0.8, 0.25)));
    }

    #[test]
    fn infinite_threshold_round_trips_through_json() {
        let c = component(f64::INFINITY, 1.0);
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"inf\""));
        let back: ThresholdComponent = serde_json::from_str(&json).unwrap();
        assert_eq!(back.threshold, f64::INFINITY);
        assert!(!SoftGroupRule { components: vec![back], n_pos: 1, n_neg: 1 }.predict(1.0, || 0.0));
    }
}
