//! CSV formats for prediction tables and ensemble feature tables.
//!
//! A prediction table has the columns `id`, `y_true`, a group column
//! (default `group`) and at least one of `score` and `y_hat`. Feature tables
//! replace `score` with one `score_<model>` column per constituent model and
//! may carry a `split` column. Unknown columns are ignored on read.

use std::io::{Read, Write};

use crate::error::{invalid, Error, Result};
use crate::metrics::{LabeledPredictions, PlotRow};
use crate::synth::Cohort;

pub const DEFAULT_GROUP_COL: &str = "group";
const SCORE_PREFIX: &str = "score_";

fn parse_bool(s: &str, line: usize, col: &str) -> Result<bool> {
    match s.trim() {
        "1" | "true" | "True" | "TRUE" => Ok(true),
        "0" | "false" | "False" | "FALSE" => Ok(false),
        other => Err(Error::Parse { line, message: format!("{col}: expected 0/1, got {other:?}") }),
    }
}

fn parse_f64(s: &str, line: usize, col: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse { line, message: format!("{col}: expected a number, got {s:?}") })
}

fn fmt_bool(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if headers.iter().all(|h| h.is_empty()) {
            return Err(Error::EmptyInput("file has no header".into()));
        }
        let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
        if rows.is_empty() {
            return Err(Error::EmptyInput("file has a header but no rows".into()));
        }
        Ok(Table { headers, rows })
    }

    fn col(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.col(name).ok_or_else(|| Error::Parse { line: 1, message: format!("missing column {name:?}") })
    }

    /// Records start on line 2, after the header.
    fn cells<'a>(&'a self, idx: usize) -> impl Iterator<Item = (usize, &'a str)> + 'a {
        self.rows.iter().enumerate().map(move |(r, rec)| (r + 2, rec.get(idx).unwrap_or("")))
    }

    fn strings(&self, idx: usize) -> Vec<String> {
        self.cells(idx).map(|(_, s)| s.to_string()).collect()
    }

    fn bools(&self, idx: usize) -> Result<Vec<bool>> {
        let name = &self.headers[idx];
        self.cells(idx).map(|(l, s)| parse_bool(s, l, name)).collect()
    }

    fn floats(&self, idx: usize) -> Result<Vec<f64>> {
        let name = &self.headers[idx];
        self.cells(idx).map(|(l, s)| parse_f64(s, l, name)).collect()
    }
}

/// Reads a prediction table, taking groups from `group_col` verbatim.
pub fn read_predictions<R: Read>(reader: R, group_col: &str) -> Result<LabeledPredictions> {
    let t = Table::read(reader)?;
    let ids = t.strings(t.require("id")?);
    let y_true = t.bools(t.require("y_true")?)?;
    let groups = t.strings(t.require(group_col)?);
    let scores = t.col("score").map(|i| t.floats(i)).transpose()?;
    let y_hat = t.col("y_hat").map(|i| t.bools(i)).transpose()?;
    if scores.is_none() && y_hat.is_none() {
        return Err(Error::Parse { line: 1, message: "need a score or y_hat column".into() });
    }
    LabeledPredictions::new(ids, y_true, groups, None, scores, y_hat)
}

/// Writes `id,<group_col>,y_true[,score][,y_hat]`.
pub fn write_predictions<W: Write>(writer: W, preds: &LabeledPredictions, group_col: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id", group_col, "y_true"];
    if preds.scores().is_some() {
        header.push("score");
    }
    if preds.y_hat().is_some() {
        header.push("y_hat");
    }
    w.write_record(&header)?;
    for i in 0..preds.len() {
        let mut rec = vec![preds.ids()[i].clone(), preds.group_of(i).to_string(), fmt_bool(preds.y_true()[i]).into()];
        if let Some(s) = preds.scores() {
            rec.push(s[i].to_string());
        }
        if let Some(h) = preds.y_hat() {
            rec.push(fmt_bool(h[i]).into());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-sample constituent-model probabilities with labels and groups.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub y_true: Vec<bool>,
    pub group_col: String,
    pub groups: Vec<String>,
    /// Model names without the `score_` prefix.
    pub model_names: Vec<String>,
    /// Sample-major rows, one value per model.
    pub features: Vec<Vec<f64>>,
    pub split: Option<Vec<String>>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Column of one model's scores.
    pub fn model_scores(&self, model: &str) -> Option<Vec<f64>> {
        let k = self.model_names.iter().position(|m| m == model)?;
        Some(self.features.iter().map(|r| r[k]).collect())
    }

    /// Row indices whose split equals `name`.
    pub fn split_rows(&self, name: &str) -> Result<Vec<usize>> {
        let split = self.split.as_ref().ok_or_else(|| invalid("feature table has no split column"))?;
        Ok(split.iter().enumerate().filter(|(_, s)| *s == name).map(|(i, _)| i).collect())
    }

    pub fn subset(&self, rows: &[usize]) -> FeatureTable {
        FeatureTable {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            y_true: rows.iter().map(|&i| self.y_true[i]).collect(),
            group_col: self.group_col.clone(),
            groups: rows.iter().map(|&i| self.groups[i].clone()).collect(),
            model_names: self.model_names.clone(),
            features: rows.iter().map(|&i| self.features[i].clone()).collect(),
            split: self.split.as_ref().map(|s| rows.iter().map(|&i| s[i].clone()).collect()),
        }
    }

    /// Prediction table using `scores` as the score column.
    pub fn to_predictions(&self, scores: Vec<f64>) -> Result<LabeledPredictions> {
        LabeledPredictions::new(self.ids.clone(), self.y_true.clone(), self.groups.clone(), None, Some(scores), None)
    }
}

pub fn read_feature_table<R: Read>(reader: R, group_col: &str) -> Result<FeatureTable> {
    let t = Table::read(reader)?;
    let ids = t.strings(t.require("id")?);
    let y_true = t.bools(t.require("y_true")?)?;
    let groups = t.strings(t.require(group_col)?);
    let model_cols: Vec<(usize, String)> = t
        .headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix(SCORE_PREFIX).map(|m| (i, m.to_string())))
        .collect();
    if model_cols.is_empty() {
        return Err(Error::Parse { line: 1, message: "no score_<model> columns".into() });
    }
    let columns = model_cols.iter().map(|(i, _)| t.floats(*i)).collect::<Result<Vec<_>>>()?;
    let features = (0..ids.len()).map(|r| columns.iter().map(|c| c[r]).collect()).collect();
    Ok(FeatureTable {
        ids,
        y_true,
        group_col: group_col.to_string(),
        groups,
        model_names: model_cols.into_iter().map(|(_, m)| m).collect(),
        features,
        split: t.col("split").map(|i| t.strings(i)),
    })
}

/// Writes `id,<group_col>,y_true,score_<model>..[,split]`.
pub fn write_feature_table<W: Write>(writer: W, table: &FeatureTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string(), table.group_col.clone(), "y_true".to_string()];
    header.extend(table.model_names.iter().map(|m| format!("{SCORE_PREFIX}{m}")));
    if table.split.is_some() {
        header.push("split".into());
    }
    w.write_record(&header)?;
    for i in 0..table.len() {
        let mut rec = vec![table.ids[i].clone(), table.groups[i].clone(), fmt_bool(table.y_true[i]).to_string()];
        rec.extend(table.features[i].iter().map(|x| x.to_string()));
        if let Some(s) = &table.split {
            rec.push(s[i].clone());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

impl FeatureTable {
    /// One `score_<modality>` column per generated modality, no split.
    pub fn from_cohort(cohort: &Cohort) -> FeatureTable {
        let first = &cohort.modalities[0].1;
        let n = first.len();
        let columns: Vec<&[f64]> =
            cohort.modalities.iter().map(|(_, p)| p.scores().expect("generated cohorts carry scores")).collect();
        FeatureTable {
            ids: first.ids().to_vec(),
            y_true: first.y_true().to_vec(),
            group_col: cohort.attribute.clone(),
            groups: (0..n).map(|i| first.group_of(i).to_string()).collect(),
            model_names: cohort.modalities.iter().map(|(m, _)| m.clone()).collect(),
            features: (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect(),
            split: None,
        }
    }
}

/// Writes tidy plot rows as `classifier,group,metric,value`.
pub fn write_plot_rows<W: Write>(writer: W, rows: &[PlotRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["classifier", "group", "metric", "value"])?;
    for r in rows {
        w.write_record([r.classifier.as_str(), r.group.as_str(), r.metric.as_str(), &r.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Multilabel table: `id`, then `label_<k>` and `score_<k>` for each label.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilabelTable {
    pub ids: Vec<String>,
    pub labels: Vec<String>,
    pub y_true: Vec<Vec<bool>>,
    pub scores: Vec<Vec<f64>>,
}

pub fn read_multilabel<R: Read>(reader: R) -> Result<MultilabelTable> {
    let t = Table::read(reader)?;
    let ids = t.strings(t.require("id")?);
    let labels: Vec<String> =
        t.headers.iter().filter_map(|h| h.strip_prefix("label_")).map(str::to_string).collect();
    if labels.is_empty() {
        return Err(Error::Parse { line: 1, message: "no label_<name> columns".into() });
    }
    let mut y_cols = Vec::with_capacity(labels.len());
    let mut s_cols = Vec::with_capacity(labels.len());
    for l in &labels {
        y_cols.push(t.bools(t.require(&format!("label_{l}"))?)?);
        s_cols.push(t.floats(t.require(&format!("{SCORE_PREFIX}{l}"))?)?);
    }
    let n = ids.len();
    Ok(MultilabelTable {
        ids,
        labels,
        y_true: (0..n).map(|i| y_cols.iter().map(|c| c[i]).collect()).collect(),
        scores: (0..n).map(|i| s_cols.iter().map(|c| c[i]).collect()).collect(),
    })
}

pub fn write_multilabel<W: Write>(writer: W, table: &MultilabelTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    for l in &table.labels {
        header.push(format!("label_{l}"));
        header.push(format!("{SCORE_PREFIX}{l}"));
    }
    w.write_record(&header)?;
    for (i, id) in table.ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        for k in 0..table.labels.len() {
            rec.push(fmt_bool(table.y_true[i][k]).to_string());
            rec.push(table.scores[i][k].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
