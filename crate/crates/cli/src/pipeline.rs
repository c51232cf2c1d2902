//! `pipeline`: ingest or synthesize, optional debias, ensemble, optional
//! equalized-odds post-processing, then reports and a manifest.

use std::collections::BTreeMap;
use std::path::PathBuf;

use equifair::debias::{hard_debias, load_embeddings, NeutralPolicy};
use equifair::ensemble::{fit_ensemble, DEFAULT_C};
use equifair::io::{self, FeatureTable};
use equifair::metrics::{build_report, confusion_rates, LabeledPredictions, ReportMetadata, DEFAULT_THRESHOLD};
use equifair::rng::unit_draw;
use equifair::synth::{generate_cohort, CohortConfig};
use serde::Serialize;

use crate::args::{Intervention, PipelineArgs, Variant};
use crate::commands::{
    ensemble_predictions, fit_dp, loss_spec, planted_embeddings, predictions_csv, read_features, select_rows,
};
use crate::error::{CliError, CliResult, WithPath};
use crate::util::*;

pub const TRAIN: &str = "train";
pub const TEST: &str = "test";

#[derive(Serialize)]
struct ManifestConfig {
    task: String,
    source: String,
    group_col: String,
    attribute: Option<String>,
    samples: Option<usize>,
    interventions: Vec<&'static str>,
    allow_composition: bool,
    cost_fp: f64,
    cost_fn: f64,
    test_fraction: f64,
    equality_sets: Option<String>,
    ensemble_c: f64,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    seed: u64,
    config: ManifestConfig,
    /// sha256 of every input file, keyed by the path as given.
    inputs: BTreeMap<String, String>,
    /// sha256 of every output file, keyed by name inside the output directory.
    outputs: BTreeMap<String, String>,
}

/// Files written by a pipeline run.
#[derive(Debug)]
pub struct PipelineOutcome {
    pub out: PathBuf,
    pub files: Vec<String>,
}

fn check_interventions(a: &PipelineArgs) -> CliResult<Vec<Intervention>> {
    let mut list = a.intervention.clone();
    list.sort();
    list.dedup();
    if list.len() > 1 && list.contains(&Intervention::None) {
        return Err(CliError::usage("`none` cannot be combined with another intervention"));
    }
    if list.contains(&Intervention::EoHard) && list.contains(&Intervention::EoSoft) {
        return Err(CliError::usage("equalized-odds post-processing runs at most once per pipeline"));
    }
    if list.len() > 1 && !a.allow_composition {
        return Err(CliError::new(
            "invalid-input",
            "fairness interventions are mutually exclusive; pass --allow-composition to combine them",
        ));
    }
    Ok(list)
}

/// Deterministic train/test assignment from the sample id.
pub fn assign_split(table: &mut FeatureTable, seed: u64, test_fraction: f64) {
    if table.split.is_some() {
        return;
    }
    table.split = Some(
        table
            .ids
            .iter()
            .map(|id| if unit_draw(seed, "split", id) < test_fraction { TEST } else { TRAIN }.to_string())
            .collect(),
    );
}

fn hard_labels(preds: LabeledPredictions) -> CliResult<LabeledPredictions> {
    let y = preds.scores().map(|s| s.iter().map(|&v| v >= DEFAULT_THRESHOLD).collect());
    match y {
        Some(y) => Ok(preds.with_y_hat(y)?),
        None => Ok(preds),
    }
}

pub fn run(a: &PipelineArgs) -> CliResult<PipelineOutcome> {
    let interventions = check_interventions(a)?;
    if !(a.test_fraction > 0.0 && a.test_fraction < 1.0) {
        return Err(CliError::usage("--test-fraction must lie in (0, 1)"));
    }
    let seed = a.seed.seed;
    let loss = loss_spec(&a.costs)?;
    let mut out = OutputDir::new(&a.out)?;
    let mut inputs = BTreeMap::new();
    let mut notes: BTreeMap<String, String> = BTreeMap::new();
    let names: Vec<&'static str> = interventions.iter().map(|i| i.name()).collect();
    notes.insert("intervention".into(), names.join("+"));
    if interventions.len() > 1 {
        notes.insert("composition".into(), "multiple interventions in one run (outside the single-intervention protocol)".into());
    }

    // ingest or synthesize
    let (mut table, source, attribute) = match &a.input {
        Some(path) => {
            let group_col = a.group_col.clone().unwrap_or_else(|| io::DEFAULT_GROUP_COL.to_string());
            inputs.insert(path.display().to_string(), sha256_hex(&read_bytes(path)?));
            (read_features(path, &group_col)?, path.display().to_string(), None)
        }
        None => {
            let cfg = CohortConfig::preset(a.attribute.into()).with_samples(a.samples).with_seed(seed);
            let cohort = generate_cohort(&cfg)?;
            out.write("truth.json", cohort.truth.to_json()?.as_bytes())?;
            let mut table = FeatureTable::from_cohort(&cohort);
            if let Some(col) = &a.group_col {
                table.group_col = col.clone();
            }
            (table, "synthetic".to_string(), Some(cohort.attribute.clone()))
        }
    };
    assign_split(&mut table, seed, a.test_fraction);
    out.write("features.csv", &render(|b| io::write_feature_table(b, &table))?)?;
    let group_col = table.group_col.clone();

    let mut sets_spec = None;
    if interventions.contains(&Intervention::Debias) {
        let emb = match &a.embeddings {
            Some(path) => {
                inputs.insert(path.display().to_string(), sha256_hex(&read_bytes(path)?));
                load_embeddings(path).at(path)?
            }
            None => {
                let plant = planted_embeddings(seed)?;
                out.write("embeddings.txt", &render(|b| plant.embeddings.write_text(b))?)?;
                plant.embeddings
            }
        };
        let sets = load_sets(&a.equality_sets)?;
        if !a.equality_sets.starts_with("preset:") {
            let p = PathBuf::from(&a.equality_sets);
            inputs.insert(a.equality_sets.clone(), sha256_hex(&read_bytes(&p)?));
        }
        sets_spec = Some(a.equality_sets.clone());
        let outcome = hard_debias(&emb, &sets, &NeutralPolicy::default(), default_rank(&sets))?;
        out.write("embeddings.debiased.txt", &render(|b| outcome.embeddings.write_text(b))?)?;
        out.write("debias_report.json", &to_json(&outcome.report)?)?;
        notes.insert(
            "debias".into(),
            "debiased embeddings written for downstream text models; constituent scores are used as given".into(),
        );
    }

    let train = select_rows(&table, TRAIN)?;
    let test = select_rows(&table, TEST)?;
    let model = fit_ensemble(&train.features, &train.y_true, DEFAULT_C)?.with_feature_names(table.model_names.clone());
    out.write("ensemble.json", model.to_json()?.as_bytes())?;
    let ensemble_test = ensemble_predictions(&model, &test)?;
    out.write("predictions.ensemble.csv", &predictions_csv(&ensemble_test, &group_col)?)?;

    let meta = |classifier: &str| {
        let mut m = ReportMetadata::for_task(&a.task);
        m.seed = Some(seed);
        m.notes = notes.clone();
        m.notes.insert("classifier".into(), classifier.into());
        m.notes.insert("split".into(), TEST.into());
        m
    };
    let mut reports = BTreeMap::new();
    for name in &table.model_names {
        let scores = test.model_scores(name).expect("column exists");
        let preds = hard_labels(test.to_predictions(scores)?)?;
        reports.insert(name.clone(), build_report(&preds, None, meta(name))?);
    }
    reports.insert("ensemble".to_string(), build_report(&ensemble_test, None, meta("ensemble"))?);

    let variant = interventions.iter().find_map(|i| match i {
        Intervention::EoHard => Some(Variant::Hard),
        Intervention::EoSoft => Some(Variant::Soft),
        _ => None,
    });
    if let Some(variant) = variant {
        let ensemble_train = ensemble_predictions(&model, &train)?;
        let dp = fit_dp(&ensemble_train, variant, &loss)?;
        out.write("eo.json", dp.to_json()?.as_bytes())?;
        let y = dp.apply(&ensemble_test, seed)?;
        let post = ensemble_test.with_y_hat(y)?;
        out.write("predictions.eo.csv", &predictions_csv(&post, &group_col)?)?;
        // a test group missing a class has no base rates; fall back to the fit-time point
        let expected = match dp.expected_rates(&confusion_rates(&ensemble_test)?) {
            Ok(r) => r,
            Err(equifair::Error::UndefinedRates(_)) => dp.fitted_rates(),
            Err(e) => return Err(e.into()),
        };
        let name = format!("ensemble+{}", if variant == Variant::Hard { "eo-hard" } else { "eo-soft" });
        reports.insert(name.clone(), build_report(&post, Some(&expected), meta(&name))?);
    }

    let report_json = to_json(&reports)?;
    out.write("report.json", &report_json)?;
    let rows: Vec<_> =
        reports.iter().flat_map(|(name, r)| equifair::metrics::plot_rows(r, name)).collect();
    out.write("plot_data.csv", &render(|b| io::write_plot_rows(b, &rows))?)?;

    let manifest = Manifest {
        tool: "equifair",
        version: env!("CARGO_PKG_VERSION"),
        core_version: equifair::VERSION,
        seed,
        config: ManifestConfig {
            task: a.task.clone(),
            source,
            group_col,
            attribute,
            samples: a.input.is_none().then_some(a.samples),
            interventions: names,
            allow_composition: a.allow_composition,
            cost_fp: a.costs.cost_fp,
            cost_fn: a.costs.cost_fn,
            test_fraction: a.test_fraction,
            equality_sets: sets_spec,
            ensemble_c: DEFAULT_C,
        },
        inputs,
        outputs: out.hashes.clone(),
    };
    let mut files: Vec<String> = out.hashes.keys().cloned().collect();
    out.write("manifest.json", &to_json(&manifest)?)?;
    files.push("manifest.json".into());
    Ok(PipelineOutcome { out: a.out.clone(), files })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_a_function_of_id_and_seed() {
        let mut t = FeatureTable {
            ids: (0..1000).map(|i| format!("s{i}")).collect(),
            y_true: vec![false; 1000],
            group_col: "g".into(),
            groups: vec!["a".into(); 1000],
            model_names: vec!["m".into()],
            features: vec![vec![0.5]; 1000],
            split: None,
        };
        let mut u = t.clone();
        assign_split(&mut t, 3, 0.3);
        assign_split(&mut u, 3, 0.3);
        assert_eq!(t.split, u.split);
        let tests = t.split.as_ref().unwrap().iter().filter(|s| *s == TEST).count();
        assert!((200..400).contains(&tests));
    }
}
