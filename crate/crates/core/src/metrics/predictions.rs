use std::borrow::Cow;
use std::collections::{HashMap, HashSet};

use crate::error::{invalid, Error, Result};

/// Threshold used to turn scores into hard labels when no `y_hat` is given.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Per-sample audit input: identifiers, ground truth, group membership and
/// at least one of scores or hard predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPredictions {
    ids: Vec<String>,
    y_true: Vec<bool>,
    groups: Vec<usize>,
    universe: Vec<String>,
    scores: Option<Vec<f64>>,
    y_hat: Option<Vec<bool>>,
}

impl LabeledPredictions {
    /// Builds and validates a prediction table.
    ///
    /// `universe` declares the admissible group labels. When `None`, the
    /// universe is the sorted set of labels that occur.
    pub fn new(
        ids: Vec<String>,
        y_true: Vec<bool>,
        group_labels: Vec<String>,
        universe: Option<Vec<String>>,
        scores: Option<Vec<f64>>,
        y_hat: Option<Vec<bool>>,
    ) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::EmptyInput("prediction table has no samples".into()));
        }
        if y_true.len() != n || group_labels.len() != n {
            return Err(invalid("ids, y_true and groups must have equal length"));
        }
        if scores.is_none() && y_hat.is_none() {
            return Err(invalid("at least one of scores or y_hat is required"));
        }
        if let Some(s) = &scores {
            if s.len() != n {
                return Err(invalid("scores length differs from ids"));
            }
            if let Some((i, v)) = s
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
            {
                return Err(invalid(format!("score {v} of sample `{}` is outside [0, 1]", ids[i])));
            }
        }
        if let Some(h) = &y_hat {
            if h.len() != n {
                return Err(invalid("y_hat length differs from ids"));
            }
        }
        let mut seen = HashSet::with_capacity(n);
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(invalid(format!("duplicate sample id `{dup}`")));
        }

        let universe = match universe {
            Some(u) => {
                let mut check = HashSet::new();
                if let Some(d) = u.iter().find(|g| !check.insert(g.as_str())) {
                    return Err(invalid(format!("group `{d}` declared twice")));
                }
                u
            }
            None => {
                let mut u: Vec<String> = group_labels.iter().cloned().collect::<HashSet<_>>().into_iter().collect();
                u.sort();
                u
            }
        };
        let lookup: HashMap<&str, usize> =
            universe.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
        let groups = group_labels
            .iter()
            .map(|g| lookup.get(g.as_str()).copied().ok_or_else(|| Error::UnknownGroup(g.clone())))
            .collect::<Result<Vec<_>>>()?;

        Ok(Self { ids, y_true, groups, universe, scores, y_hat })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn y_true(&self) -> &[bool] {
        &self.y_true
    }

    /// Group index of every sample, into [`Self::universe`].
    pub fn group_indices(&self) -> &[usize] {
        &self.groups
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn group_of(&self, sample: usize) -> &str {
        &self.universe[self.groups[sample]]
    }

    pub fn scores(&self) -> Option<&[f64]> {
        self.scores.as_deref()
    }

    pub fn y_hat(&self) -> Option<&[bool]> {
        self.y_hat.as_deref()
    }

    /// Hard predictions: `y_hat` when present, otherwise scores thresholded
    /// at [`DEFAULT_THRESHOLD`] (`score >= 0.5` is positive).
    pub fn hard_labels(&self) -> Cow<'_, [bool]> {
        match (&self.y_hat, &self.scores) {
            (Some(h), _) => Cow::Borrowed(h),
            (None, Some(s)) => Cow::Owned(s.iter().map(|&v| v >= DEFAULT_THRESHOLD).collect()),
            (None, None) => unreachable!("validated at construction"),
        }
    }

    /// Values to rank by for AUCs: scores when present, else hard labels as 0/1.
    pub fn ranking_values(&self) -> Cow<'_, [f64]> {
        match (&self.scores, &self.y_hat) {
            (Some(s), _) => Cow::Borrowed(s),
            (None, Some(h)) => Cow::Owned(h.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()),
            (None, None) => unreachable!("validated at construction"),
        }
    }

    /// Same samples with hard predictions replaced.
    pub fn with_y_hat(&self, y_hat: Vec<bool>) -> Result<Self> {
        if y_hat.len() != self.len() {
            return Err(invalid("y_hat length differs from ids"));
        }
        Ok(Self { y_hat: Some(y_hat), ..self.clone() })
    }

    /// Same samples with scores replaced (and `y_hat` dropped).
    pub fn with_scores(&self, scores: Vec<f64>) -> Result<Self> {
        Self::new(
            self.ids.clone(),
            self.y_true.clone(),
            self.groups.iter().map(|&g| self.universe[g].clone()).collect(),
            Some(self.universe.clone()),
            Some(scores),
            None,
        )
    }

    /// Keeps the samples for which `keep` returns true.
    pub fn filter(&self, keep: impl Fn(usize) -> bool) -> Result<Self> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        Self::new(
            idx.iter().map(|&i| self.ids[i].clone()).collect(),
            idx.iter().map(|&i| self.y_true[i]).collect(),
            idx.iter().map(|&i| self.universe[self.groups[i]].clone()).collect(),
            Some(self.universe.clone()),
            self.scores.as_ref().map(|s| idx.iter().map(|&i| s[i]).collect()),
            self.y_hat.as_ref().map(|h| idx.iter().map(|&i| h[i]).collect()),
        )
    }
}
