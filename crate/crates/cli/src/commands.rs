use std::collections::BTreeMap;
use std::path::Path;

use equifair::debias::{hard_debias, load_embeddings, save_embeddings, NeutralPolicy};
use equifair::eo::{fit_eo_hard, fit_eo_soft, DerivedPredictor, LossSpec};
use equifair::ensemble::{fit_ensemble, EnsembleModel};
use equifair::io::{self, FeatureTable, MultilabelTable};
use equifair::metrics::{build_report, multilabel_auc, plot_rows, FairnessReport, LabeledPredictions, ReportMetadata};
use equifair::synth::{
    generate_cohort, generate_embeddings, generate_multilabel, CohortConfig, EmbeddingPlantConfig, MultilabelConfig,
    PlantSets,
};
use equifair::Error;
use serde::Serialize;

use crate::args::*;
use crate::error::{CliError, CliResult, WithPath};
use crate::util::*;

pub fn read_predictions(path: &Path, group_col: &str) -> CliResult<LabeledPredictions> {
    io::read_predictions(read_bytes(path)?.as_slice(), group_col).at(path)
}

pub fn read_features(path: &Path, group_col: &str) -> CliResult<FeatureTable> {
    io::read_feature_table(read_bytes(path)?.as_slice(), group_col).at(path)
}

pub fn predictions_csv(preds: &LabeledPredictions, group_col: &str) -> CliResult<Vec<u8>> {
    render(|b| io::write_predictions(b, preds, group_col))
}

pub fn load_dp(path: &Path) -> CliResult<DerivedPredictor> {
    DerivedPredictor::from_json(&read_string(path)?).at(path)
}

pub fn loss_spec(c: &CostArgs) -> CliResult<LossSpec> {
    Ok(LossSpec::new(c.cost_fp, c.cost_fn)?)
}

pub fn fit_dp(preds: &LabeledPredictions, variant: Variant, loss: &LossSpec) -> CliResult<DerivedPredictor> {
    Ok(match variant {
        Variant::Hard => fit_eo_hard(preds, loss)?.into(),
        Variant::Soft => fit_eo_soft(preds, loss)?.into(),
    })
}

/// Planted gender-axis embeddings used when no embedding file is supplied.
pub fn planted_embeddings(seed: u64) -> CliResult<equifair::synth::PlantedEmbeddings> {
    Ok(generate_embeddings(&EmbeddingPlantConfig {
        vocab_size: 200,
        dim: 50,
        classes: 2,
        sets: PlantSets::Explicit(equifair::debias::EqualitySets::gender()),
        sigma: 0.01,
        leakage: 0.3,
        seed,
    })?)
}

pub fn synth(a: &SynthArgs) -> CliResult<()> {
    let cfg = CohortConfig::preset(a.attribute.into()).with_samples(a.samples).with_seed(a.seed.seed);
    let cohort = generate_cohort(&cfg)?;
    let mut out = OutputDir::new(&a.out)?;
    let table = FeatureTable::from_cohort(&cohort);
    out.write("features.csv", &render(|b| io::write_feature_table(b, &table))?)?;
    for (name, preds) in &cohort.modalities {
        out.write(&format!("predictions.{name}.csv"), &predictions_csv(preds, &cohort.attribute)?)?;
    }
    out.write("truth.json", cohort.truth.to_json()?.as_bytes())?;
    if a.with_embeddings {
        let plant = planted_embeddings(a.seed.seed)?;
        out.write("embeddings.txt", &render(|b| plant.embeddings.write_text(b))?)?;
    }
    if a.multilabel {
        let cfg = MultilabelConfig { seed: a.seed.seed, ..MultilabelConfig::default() };
        let (scores, y_true) = generate_multilabel(&cfg)?;
        let table = MultilabelTable {
            ids: (0..scores.len()).map(equifair::synth::sample_id).collect(),
            labels: (1..=cfg.n_labels).map(|k| format!("p{k:02}")).collect(),
            y_true,
            scores,
        };
        out.write("multilabel.csv", &render(|b| io::write_multilabel(b, &table))?)?;
    }
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => write_bytes(p, bytes),
        None => {
            print!("{}", String::from_utf8_lossy(bytes));
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct MultilabelReport {
    task: String,
    labels: Vec<String>,
    #[serde(flatten)]
    auc: equifair::metrics::MultilabelAuc,
}

pub fn metrics(a: &MetricsArgs) -> CliResult<()> {
    if a.multilabel {
        let t = io::read_multilabel(read_bytes(&a.input)?.as_slice()).at(&a.input)?;
        let auc = multilabel_auc(&t.scores, &t.y_true)?;
        let report = MultilabelReport { task: a.task.clone(), labels: t.labels, auc };
        return emit(a.out.as_deref(), &to_json(&report)?);
    }
    let preds = read_predictions(&a.input, &a.group_col)?;
    let report = build_report(&preds, None, ReportMetadata::for_task(&a.task))?;
    emit(a.out.as_deref(), report.to_json()?.as_bytes())
}

pub fn eo_fit(a: &EoFitArgs) -> CliResult<()> {
    let preds = read_predictions(&a.input, &a.group_col)?;
    let dp = fit_dp(&preds, a.variant, &loss_spec(&a.costs)?)?;
    write_bytes(&a.out, dp.to_json()?.as_bytes())
}

pub fn eo_apply(a: &EoApplyArgs) -> CliResult<()> {
    let dp = load_dp(&a.model)?;
    let preds = read_predictions(&a.input, &a.group_col)?;
    let y = dp.apply(&preds, a.seed.seed)?;
    write_bytes(&a.out, &predictions_csv(&preds.with_y_hat(y)?, &a.group_col)?)
}

#[derive(Serialize)]
struct DebiasSummary<'a> {
    k: usize,
    explained_variance: &'a [f64],
    #[serde(flatten)]
    report: &'a equifair::debias::DebiasReport,
}

pub fn debias(a: &DebiasArgs) -> CliResult<()> {
    let emb = load_embeddings(&a.embeddings).at(&a.embeddings)?;
    let sets = load_sets(&a.equality_sets)?;
    let k = a.k.unwrap_or_else(|| default_rank(&sets));
    let outcome = hard_debias(&emb, &sets, &NeutralPolicy::default(), k)?;
    save_embeddings(&outcome.embeddings, &a.out).at(&a.out)?;
    if let Some(path) = &a.report {
        let summary =
            DebiasSummary { k, explained_variance: &outcome.subspace.explained_variance, report: &outcome.report };
        write_bytes(path, &to_json(&summary)?)?;
    }
    Ok(())
}

pub fn select_rows(table: &FeatureTable, split: &str) -> CliResult<FeatureTable> {
    if split == "all" {
        return Ok(table.clone());
    }
    let rows = table.split_rows(split)?;
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!("no rows in split {split:?}")).into());
    }
    Ok(table.subset(&rows))
}

pub fn ensemble_fit(a: &EnsembleFitArgs) -> CliResult<()> {
    let table = read_features(&a.input, &a.group_col)?;
    let train = select_rows(&table, &a.fit_split)?;
    let model = fit_ensemble(&train.features, &train.y_true, a.c)?.with_feature_names(train.model_names.clone());
    write_bytes(&a.out, model.to_json()?.as_bytes())
}

/// Ensemble scores as a prediction table with `y_hat` at threshold 0.5.
pub fn ensemble_predictions(model: &EnsembleModel, table: &FeatureTable) -> CliResult<LabeledPredictions> {
    if !model.feature_names.is_empty() && model.feature_names != table.model_names {
        return Err(CliError::new(
            "invalid-input",
            format!("model expects columns {:?}, table has {:?}", model.feature_names, table.model_names),
        ));
    }
    let scores = model.predict_proba(&table.features)?;
    let y_hat = scores.iter().map(|&s| s >= equifair::metrics::DEFAULT_THRESHOLD).collect();
    Ok(table.to_predictions(scores)?.with_y_hat(y_hat)?)
}

pub fn ensemble_predict(a: &EnsemblePredictArgs) -> CliResult<()> {
    let model = EnsembleModel::from_json(&read_string(&a.model)?).at(&a.model)?;
    let mut table = read_features(&a.input, &a.group_col)?;
    if let Some(split) = &a.split {
        table = select_rows(&table, split)?;
    }
    let preds = ensemble_predictions(&model, &table)?;
    write_bytes(&a.out, &predictions_csv(&preds, &table.group_col)?)
}

/// Classifier name and path from `name=path`, or the file stem.
fn named_input(spec: &str) -> (String, &Path) {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), Path::new(path)),
        _ => {
            let p = Path::new(spec);
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.to_string());
            (stem, p)
        }
    }
}

pub fn write_reports(
    out_json: &Path,
    plot: Option<&Path>,
    reports: &BTreeMap<String, FairnessReport>,
) -> CliResult<(Vec<u8>, Option<Vec<u8>>)> {
    let json = to_json(reports)?;
    write_bytes(out_json, &json)?;
    let csv = match plot {
        Some(p) => {
            let rows: Vec<_> = reports.iter().flat_map(|(name, r)| plot_rows(r, name)).collect();
            let bytes = render(|b| io::write_plot_rows(b, &rows))?;
            write_bytes(p, &bytes)?;
            Some(bytes)
        }
        None => None,
    };
    Ok((json, csv))
}

pub fn report(a: &ReportArgs) -> CliResult<()> {
    let dp = a.dp.as_deref().map(load_dp).transpose()?;
    let mut reports = BTreeMap::new();
    for spec in &a.input {
        let (name, path) = named_input(spec);
        let preds = read_predictions(path, &a.group_col)?;
        let expected = dp.as_ref().map(DerivedPredictor::fitted_rates);
        let r = build_report(&preds, expected.as_ref(), ReportMetadata::for_task(&a.task))?;
        if reports.insert(name.clone(), r).is_some() {
            return Err(CliError::usage(format!("classifier name {name:?} given twice")));
        }
    }
    write_reports(&a.out, a.plot_data.as_deref(), &reports)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_inputs() {
        assert_eq!(named_input("base=a/b.csv"), ("base".to_string(), Path::new("a/b.csv")));
        assert_eq!(named_input("dir/preds.eo.csv"), ("preds.eo".to_string(), Path::new("dir/preds.eo.csv")));
    }
}
