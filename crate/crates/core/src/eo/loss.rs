use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metrics::GroupRates;

/// Prior mass of a group's negatives and positives in the loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub negative: f64,
    pub positive: f64,
}

/// Expected weighted 0-1 loss:
/// `sum_a cost_fp * w_neg[a] * fpr[a] + cost_fn * w_pos[a] * (1 - tpr[a])`.
///
/// Without explicit group weights, `w_neg[a]` and `w_pos[a]` are the
/// fractions of all samples that are negatives (positives) of group `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub cost_fp: f64,
    pub cost_fn: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_weights: Option<BTreeMap<String, ClassWeights>>,
}

impl Default for LossSpec {
    fn default() -> Self {
        Self { cost_fp: 1.0, cost_fn: 1.0, group_weights: None }
    }
}

impl LossSpec {
    pub fn new(cost_fp: f64, cost_fn: f64) -> Result<Self> {
        let spec = Self { cost_fp, cost_fn, group_weights: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |c: f64| c.is_finite() && c >= 0.0;
        if !ok(self.cost_fp) || !ok(self.cost_fn) {
            return Err(invalid("loss costs must be finite and non-negative"));
        }
        if self.cost_fp == 0.0 && self.cost_fn == 0.0 {
            return Err(invalid("cost_fp and cost_fn cannot both be zero"));
        }
        if let Some(w) = &self.group_weights {
            if w.values().any(|c| !ok(c.negative) || !ok(c.positive)) {
                return Err(invalid("group weights must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// Class weights per group of `rates`, explicit or empirical.
    pub fn resolve_weights(&self, rates: &GroupRates) -> Result<BTreeMap<String, ClassWeights>> {
        self.validate()?;
        match &self.group_weights {
            Some(w) => rates
                .iter()
                .map(|(g, _)| {
                    w.get(g)
                        .map(|c| (g.clone(), *c))
                        .ok_or_else(|| invalid(format!("no loss weights for group `{g}`")))
                })
                .collect(),
            None => {
                let total = rates.total_samples();
                if total == 0 {
                    return Err(Error::EmptyInput("no samples to weight".into()));
                }
                Ok(rates
                    .iter()
                    .map(|(g, s)| {
                        let w = ClassWeights {
                            negative: s.n_neg as f64 / total as f64,
                            positive: s.n_pos as f64 / total as f64,
                        };
                        (g.clone(), w)
                    })
                    .collect())
            }
        }
    }

    /// Expected loss of per-group operating points in `rates`.
    pub fn expected_loss(&self, rates: &GroupRates) -> Result<f64> {
        let weights = self.resolve_weights(rates)?;
        let mut loss = 0.0;
        for (g, s) in rates.iter() {
            let w = weights[g];
            if w.negative > 0.0 {
                let fpr = s.fpr.ok_or_else(|| Error::UndefinedRates(g.clone()))?;
                loss += self.cost_fp * w.negative * fpr;
            }
            if w.positive > 0.0 {
                let tpr = s.tpr.ok_or_else(|| Error::UndefinedRates(g.clone()))?;
                loss += self.cost_fn * w.positive * (1.0 - tpr);
            }
        }
        Ok(loss)
    }

    /// Loss of a single group's point, under that group's weights.
    pub(crate) fn group_loss(&self, w: ClassWeights, fpr: f64, tpr: f64) -> f64 {
        self.cost_fp * w.negative * fpr + self.cost_fn * w.positive * (1.0 - tpr)
    }

    /// When every group sits at the same `(fpr, tpr)`, the loss is
    /// `a * fpr - b * tpr + b`; returns `(a, b)`.
    pub(crate) fn shared_point_coefficients(&self, weights: &BTreeMap<String, ClassWeights>) -> (f64, f64) {
        let neg: f64 = weights.values().map(|w| w.negative).sum();
        let pos: f64 = weights.values().map(|w| w.positive).sum();
        (self.cost_fp * neg, self.cost_fn * pos)
    }
}
