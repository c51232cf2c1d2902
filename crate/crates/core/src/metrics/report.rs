use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{auc_prc, auc_roc, confusion_rates, gap_ranges, GroupRates, LabeledPredictions};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub task: String,
    pub seed: Option<u64>,
    pub timestamp: Option<String>,
    #[serde(default)]
    pub notes: BTreeMap<String, String>,
}

impl Default for ReportMetadata {
    fn default() -> Self {
        Self { task: "unnamed".into(), seed: None, timestamp: None, notes: BTreeMap::new() }
    }
}

impl ReportMetadata {
    pub fn for_task(task: impl Into<String>) -> Self {
        Self { task: task.into(), ..Self::default() }
    }

    pub fn note(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.notes.insert(key.into(), value.into());
        self
    }
}

/// Closed-form rates of a derived predictor, reported next to the realized ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedFairness {
    pub group_rates: GroupRates,
    pub tpr_range: f64,
    pub tnr_range: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub metadata: ReportMetadata,
    pub n_samples: usize,
    pub group_rates: GroupRates,
    pub tpr_range: f64,
    pub tnr_range: f64,
    pub auc_roc_overall: f64,
    pub auc_prc_overall: f64,
    pub auc_roc_per_group: BTreeMap<String, Option<f64>>,
    /// `"score"` when AUCs rank probability scores, `"y_hat"` when only hard
    /// predictions were available.
    pub ranking_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<ExpectedFairness>,
}

impl FairnessReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn build_report(
    preds: &LabeledPredictions,
    expected_rates: Option<&GroupRates>,
    metadata: ReportMetadata,
) -> Result<FairnessReport> {
    let group_rates = confusion_rates(preds)?;
    let (tpr_range, tnr_range) = gap_ranges(&group_rates)?;
    let ranking = preds.ranking_values();
    let y = preds.y_true();
    let auc_roc_overall = auc_roc(&ranking, y)?;
    let auc_prc_overall = auc_prc(&ranking, y)?;

    let mut auc_roc_per_group = BTreeMap::new();
    for (gi, name) in preds.universe().iter().enumerate() {
        let (s, l): (Vec<f64>, Vec<bool>) = preds
            .group_indices()
            .iter()
            .enumerate()
            .filter(|(_, &g)| g == gi)
            .map(|(i, _)| (ranking[i], y[i]))
            .unzip();
        let auc = match auc_roc(&s, &l) {
            Ok(v) => Some(v),
            Err(Error::SingleClass(_)) | Err(Error::EmptyInput(_)) => None,
            Err(e) => return Err(e),
        };
        auc_roc_per_group.insert(name.clone(), auc);
    }

    let expected = match expected_rates {
        Some(r) => {
            let (t, n) = gap_ranges(r)?;
            Some(ExpectedFairness { group_rates: r.clone(), tpr_range: t, tnr_range: n })
        }
        None => None,
    };

    Ok(FairnessReport {
        metadata,
        n_samples: preds.len(),
        group_rates,
        tpr_range,
        tnr_range,
        auc_roc_overall,
        auc_prc_overall,
        auc_roc_per_group,
        ranking_source: if preds.scores().is_some() { "score" } else { "y_hat" }.into(),
        expected,
    })
}

/// One row of tidy plot data: `(classifier, group, metric, value)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub classifier: String,
    pub group: String,
    pub metric: String,
    pub value: f64,
}

/// Per-group TPR/TNR/AUC points plus their ranges, ready for range plots.
pub fn plot_rows(report: &FairnessReport, classifier: &str) -> Vec<PlotRow> {
    let row = |group: &str, metric: &str, value: f64| PlotRow {
        classifier: classifier.to_string(),
        group: group.to_string(),
        metric: metric.to_string(),
        value,
    };
    let mut rows = Vec::new();
    for (g, s) in report.group_rates.iter() {
        if let Some(v) = s.tpr {
            rows.push(row(g, "tpr", v));
        }
        if let Some(v) = s.tnr {
            rows.push(row(g, "tnr", v));
        }
        if let Some(Some(v)) = report.auc_roc_per_group.get(g) {
            rows.push(row(g, "auc_roc", *v));
        }
    }
    rows.push(row("*", "tpr_range", report.tpr_range));
    rows.push(row("*", "tnr_range", report.tnr_range));
    rows.push(row("*", "auc_roc", report.auc_roc_overall));
    rows.push(row("*", "auc_prc", report.auc_prc_overall));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perfect() -> LabeledPredictions {
        LabeledPredictions::new(
            (0..4).map(|i| i.to_string()).collect(),
            vec![true, false, true, false],
            vec!["a".into(), "a".into(), "b".into(), "b".into()],
            None,
            Some(vec![0.9, 0.1, 0.8, 0.3]),
            None,
        )
        .unwrap()
    }

    #[test]
    fn perfect_predictor_report() {
        let r = build_report(&perfect(), None, ReportMetadata::default()).unwrap();
        assert_eq!((r.tpr_range, r.tnr_range), (0.0, 0.0));
        assert_eq!(r.auc_roc_overall, 1.0);
        assert_eq!(r.auc_prc_overall, 1.0);
        assert_eq!(r.metadata.task, "unnamed");
        assert_eq!(r.ranking_source, "score");
        let json = r.to_json().unwrap();
        let back: FairnessReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(json.contains("\"tpr_range\""));
    }

    #[test]
    fn single_class_group_has_no_auc() {
        let p = LabeledPredictions::new(
            (0..4).map(|i| i.to_string()).collect(),
            vec![true, false, true, true],
            vec!["a".into(), "a".into(), "b".into(), "b".into()],
            None,
            Some(vec![0.9, 0.1, 0.8, 0.3]),
            None,
        )
        .unwrap();
        let r = build_report(&p, None, ReportMetadata::for_task("ihm")).unwrap();
        assert_eq!(r.auc_roc_per_group["b"], None);
        assert_eq!(r.auc_roc_per_group["a"], Some(1.0));
        let rows = plot_rows(&r, "base");
        assert!(rows.iter().any(|x| x.group == "*" && x.metric == "tpr_range"));
    }

    #[test]
    fn single_class_overall_propagates() {
        let p = LabeledPredictions::new(
            vec!["0".into(), "1".into()],
            vec![true, true],
            vec!["a".into(), "b".into()],
            None,
            None,
            Some(vec![true, false]),
        )
        .unwrap();
        assert!(build_report(&p, None, ReportMetadata::default()).is_err());
    }
}
