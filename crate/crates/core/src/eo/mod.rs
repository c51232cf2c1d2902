//! Equalized-odds post-processing.
//!
//! Both variants solve the same two-dimensional linear program: every group
//! contributes the convex region of `(fpr, tpr)` points it can reach by
//! randomizing its classifier, the regions are intersected, and the expected
//! loss (linear in the shared operating point) is minimized over the vertices
//! of the intersection. Each group then realizes the optimum with its own
//! randomization.
//!
//! * Hard: the region of a hard classifier is the parallelogram spanned by
//!   its point, its negation and the two constant predictors. The
//!   randomization is `(p0, p1)`.
//! * Soft: the region of a scorer is the convex hull of its empirical ROC
//!   vertices. The randomization mixes at most three thresholds (two when the
//!   optimum lies on the group's ROC boundary).

mod hard;
mod loss;
mod soft;

use serde::{Deserialize, Serialize};

pub use hard::{fit_eo_hard, fit_eo_hard_from_rates, hard_region, HardDerivedPredictor, HardGroupParams};
pub use loss::{ClassWeights, LossSpec};
pub use soft::{fit_eo_soft, SoftDerivedPredictor, SoftGroupRule, ThresholdComponent};

use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, OperatingPoint};
use crate::metrics::{GroupRates, LabeledPredictions};
use crate::par::Execution;

fn intersect_regions(regions: &[ConvexPolygon]) -> Result<ConvexPolygon> {
    let (first, rest) = regions
        .split_first()
        .ok_or_else(|| Error::EmptyInput("no groups to intersect".into()))?;
    let out = rest.iter().fold(first.clone(), |acc, r| acc.intersect(r));
    if out.is_empty() {
        // every region contains the diagonal, so this is a numerical failure
        return Err(Error::Degenerate("group regions have an empty intersection".into()));
    }
    Ok(out)
}

/// A fitted derived predictor of either variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum DerivedPredictor {
    Hard(HardDerivedPredictor),
    Soft(SoftDerivedPredictor),
}

impl DerivedPredictor {
    pub fn target(&self) -> OperatingPoint {
        match self {
            DerivedPredictor::Hard(h) => h.target,
            DerivedPredictor::Soft(s) => s.target,
        }
    }

    pub fn objective(&self) -> f64 {
        match self {
            DerivedPredictor::Hard(h) => h.objective,
            DerivedPredictor::Soft(s) => s.objective,
        }
    }

    pub fn base_loss(&self) -> f64 {
        match self {
            DerivedPredictor::Hard(h) => h.base_loss,
            DerivedPredictor::Soft(s) => s.base_loss,
        }
    }

    pub fn group_names(&self) -> Vec<&str> {
        match self {
            DerivedPredictor::Hard(h) => h.groups.keys().map(String::as_str).collect(),
            DerivedPredictor::Soft(s) => s.groups.keys().map(String::as_str).collect(),
        }
    }

    pub fn expected_rates(&self, base: &GroupRates) -> Result<GroupRates> {
        match self {
            DerivedPredictor::Hard(h) => h.expected_rates(base),
            DerivedPredictor::Soft(s) => s.expected_rates(base),
        }
    }

    pub fn fitted_rates(&self) -> GroupRates {
        match self {
            DerivedPredictor::Hard(h) => h.fitted_rates(),
            DerivedPredictor::Soft(s) => s.fitted_rates(),
        }
    }

    pub fn apply(&self, preds: &LabeledPredictions, seed: u64) -> Result<Vec<bool>> {
        self.apply_with(preds, seed, Execution::default())
    }

    pub fn apply_with(&self, preds: &LabeledPredictions, seed: u64, exec: Execution) -> Result<Vec<bool>> {
        match self {
            DerivedPredictor::Hard(h) => h.apply_with(preds, seed, exec),
            DerivedPredictor::Soft(s) => s.apply_with(preds, seed, exec),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl From<HardDerivedPredictor> for DerivedPredictor {
    fn from(h: HardDerivedPredictor) -> Self {
        DerivedPredictor::Hard(h)
    }
}

impl From<SoftDerivedPredictor> for DerivedPredictor {
    fn from(s: SoftDerivedPredictor) -> Self {
        DerivedPredictor::Soft(s)
    }
}

/// Serializes `+inf` thresholds as the string `"inf"`.
mod threshold_serde {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(D::Error::custom(format!("invalid threshold `{s}`"))),
        }
    }
}
