use equifair::metrics::confusion_rates;
use equifair::synth::{generate_cohort, Attribute, CohortConfig, DEFAULT_PREVALENCE};

/// Female share of the in-hospital mortality test set and the training
/// positive rate.
#[test]
fn default_config_matches_cohort_statistics() {
    let cfg = CohortConfig::default();
    let female = cfg.groups.iter().find(|g| g.name == "F").unwrap();
    assert_eq!(female.proportion, 0.44);
    assert_eq!(DEFAULT_PREVALENCE, 0.131);
    assert_eq!(cfg.prevalence, 0.131);
    assert_eq!(cfg.attribute, "sex");
}

#[test]
fn group_proportions_concentrate() {
    for attr in [Attribute::Sex, Attribute::Ethnicity, Attribute::Insurance] {
        let cfg = CohortConfig::preset(attr).with_samples(100_000).with_seed(12);
        let preds = generate_cohort(&cfg).unwrap().modalities.remove(0).1;
        let n = preds.len() as f64;
        for (k, g) in cfg.groups.iter().enumerate() {
            let count = preds.group_indices().iter().filter(|&&i| i == k).count() as f64;
            let sd = (n * g.proportion * (1.0 - g.proportion)).sqrt();
            assert!((count - n * g.proportion).abs() <= 3.0 * sd, "{}: {count}", g.name);
        }
        let pos = preds.y_true().iter().filter(|&&b| b).count() as f64;
        let sd = (n * 0.131 * 0.869).sqrt();
        assert!((pos - n * 0.131).abs() <= 3.0 * sd);
    }
}

#[test]
fn analytic_rates_match_large_samples() {
    let cfg = CohortConfig::preset(Attribute::Sex).with_samples(200_000).with_seed(1);
    let cohort = generate_cohort(&cfg).unwrap();
    for (name, preds) in &cohort.modalities {
        let empirical = confusion_rates(preds).unwrap();
        for (g, truth) in cohort.truth.rates[name].iter() {
            let e = empirical.get(g).unwrap();
            let t = truth.tpr.unwrap();
            let sd = (t * (1.0 - t) / e.n_pos as f64).sqrt();
            assert!((e.tpr.unwrap() - t).abs() <= 4.0 * sd, "{name}/{g}");
            let f = truth.fpr.unwrap();
            let sd = (f * (1.0 - f) / e.n_neg as f64).sqrt();
            assert!((e.fpr.unwrap() - f).abs() <= 4.0 * sd, "{name}/{g}");
        }
    }
}

#[test]
fn ethnicity_preset_plants_a_tpr_gap() {
    let cfg = CohortConfig::preset(Attribute::Ethnicity);
    let rates = &cfg.analytic_rates()["physio"];
    let tprs: Vec<f64> = rates.iter().map(|(_, s)| s.tpr.unwrap()).collect();
    let range = tprs.iter().cloned().fold(f64::MIN, f64::max) - tprs.iter().cloned().fold(f64::MAX, f64::min);
    assert!(range >= 0.15);
}
