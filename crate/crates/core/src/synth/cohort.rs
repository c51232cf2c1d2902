use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};

use crate::ensemble::sigmoid;
use crate::error::{invalid, Result};
use crate::metrics::{GroupRates, GroupStats, LabeledPredictions, DEFAULT_THRESHOLD};

/// Positive rate of the in-hospital mortality training set.
pub const DEFAULT_PREVALENCE: f64 = 0.131;
/// Size of the in-hospital mortality test set.
pub const DEFAULT_SAMPLES: usize = 3193;

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Class-conditional Gaussians on the logit scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogitModel {
    pub neg_mean: f64,
    pub neg_sd: f64,
    pub pos_mean: f64,
    pub pos_sd: f64,
}

impl LogitModel {
    /// Equal-variance model whose sigmoid scores are calibrated probabilities
    /// for base rate `prevalence`: means `logit(p) -/+ v/2`, variance `v`.
    pub fn calibrated(prevalence: f64, separation: f64) -> Self {
        let mid = logit(prevalence);
        let sd = separation.sqrt();
        LogitModel { neg_mean: mid - separation / 2.0, neg_sd: sd, pos_mean: mid + separation / 2.0, pos_sd: sd }
    }

    /// Pushes the means away from their midpoint by `scale` and the standard
    /// deviations by `sqrt(scale)`; keeps calibrated models calibrated.
    pub fn scaled(&self, scale: f64) -> Self {
        let mid = (self.neg_mean + self.pos_mean) / 2.0;
        let r = scale.sqrt();
        LogitModel {
            neg_mean: mid + scale * (self.neg_mean - mid),
            neg_sd: self.neg_sd * r,
            pos_mean: mid + scale * (self.pos_mean - mid),
            pos_sd: self.pos_sd * r,
        }
    }

    fn midpoint(&self) -> f64 {
        (self.neg_mean + self.pos_mean) / 2.0
    }

    /// `(fpr, tpr)` of the rule `logit >= 0`.
    pub fn rates_at_half(&self) -> (f64, f64) {
        (upper_tail(self.neg_mean, self.neg_sd), upper_tail(self.pos_mean, self.pos_sd))
    }
}

fn upper_tail(mean: f64, sd: f64) -> f64 {
    NormalDist::new(0.0, 1.0).expect("standard normal").cdf(mean / sd)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    pub proportion: f64,
    /// Overrides the cohort base rate for this group.
    #[serde(default)]
    pub prevalence: Option<f64>,
    pub model: LogitModel,
}

/// Which samples a modality carries signal for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InformativeMask {
    All,
    /// Sample `i` is informative when `i % parts == index`.
    Partition { parts: usize, index: usize },
}

impl InformativeMask {
    pub fn covers(&self, sample: usize) -> bool {
        match *self {
            InformativeMask::All => true,
            InformativeMask::Partition { parts, index } => sample % parts == index,
        }
    }

    fn fraction(&self) -> f64 {
        match *self {
            InformativeMask::All => 1.0,
            InformativeMask::Partition { parts, .. } => 1.0 / parts as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalitySpec {
    pub name: String,
    pub mask: InformativeMask,
    pub separation_scale: f64,
}

impl ModalitySpec {
    pub fn new(name: impl Into<String>, mask: InformativeMask, separation_scale: f64) -> Self {
        ModalitySpec { name: name.into(), mask, separation_scale }
    }
}

/// Sensitive attributes with shipped group proportions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attribute {
    #[default]
    Sex,
    Ethnicity,
    Insurance,
}

impl Attribute {
    pub fn name(self) -> &'static str {
        match self {
            Attribute::Sex => "sex",
            Attribute::Ethnicity => "ethnicity",
            Attribute::Insurance => "insurance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sex" => Some(Attribute::Sex),
            "ethnicity" => Some(Attribute::Ethnicity),
            "insurance" => Some(Attribute::Insurance),
            _ => None,
        }
    }

    /// `(group, percent of test set, logit separation)`.
    fn table(self) -> &'static [(&'static str, f64, f64)] {
        match self {
            Attribute::Sex => &[("F", 44.0, 6.0), ("M", 56.0, 8.0)],
            Attribute::Ethnicity => &[
                ("ASIAN", 1.9, 4.0),
                ("BLACK", 8.9, 6.0),
                ("HISPANIC", 3.3, 5.0),
                ("OTHER", 14.4, 7.0),
                ("WHITE", 71.5, 9.0),
            ],
            Attribute::Insurance => &[
                ("Government", 2.3, 6.0),
                ("Medicaid", 6.4, 5.0),
                ("Medicare", 55.0, 8.0),
                ("Private", 29.2, 7.0),
                ("Self Pay", 1.0, 4.0),
                ("UNKNOWN", 6.1, 6.0),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    /// Name of the group column.
    pub attribute: String,
    pub groups: Vec<GroupSpec>,
    pub prevalence: f64,
    pub modalities: Vec<ModalitySpec>,
    /// Standard deviation of the class-independent logit drawn where a
    /// modality is uninformative.
    pub noise_sd: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig::preset(Attribute::default())
    }
}

impl CohortConfig {
    /// Calibrated cohort over one attribute's shipped groups with two fully
    /// informative modalities of different strength.
    pub fn preset(attr: Attribute) -> Self {
        let groups = attr
            .table()
            .iter()
            .map(|&(name, pct, sep)| GroupSpec {
                name: name.to_string(),
                proportion: pct / 100.0,
                prevalence: None,
                model: LogitModel::calibrated(DEFAULT_PREVALENCE, sep),
            })
            .collect();
        CohortConfig {
            attribute: attr.name().to_string(),
            groups,
            prevalence: DEFAULT_PREVALENCE,
            modalities: vec![
                ModalitySpec::new("physio", InformativeMask::All, 1.0),
                ModalitySpec::new("notes", InformativeMask::All, 0.6),
            ],
            noise_sd: 1.0,
            n_samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_modalities(mut self, modalities: Vec<ModalitySpec>) -> Self {
        self.modalities = modalities;
        self
    }

    pub fn group_prevalence(&self, g: &GroupSpec) -> f64 {
        g.prevalence.unwrap_or(self.prevalence)
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(invalid("cohort needs at least one group"));
        }
        let total: f64 = self.groups.iter().map(|g| g.proportion).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("group proportions sum to {total}, expected 1")));
        }
        let mut names: Vec<&str> = self.groups.iter().map(|g| g.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("duplicate group name"));
        }
        for g in &self.groups {
            let p = self.group_prevalence(g);
            if !(p > 0.0 && p < 1.0) {
                return Err(invalid(format!("base rate for {} must lie in (0, 1)", g.name)));
            }
            if !(g.proportion >= 0.0) {
                return Err(invalid(format!("negative proportion for {}", g.name)));
            }
            let m = &g.model;
            if ![m.neg_mean, m.pos_mean].iter().all(|x| x.is_finite()) || !(m.neg_sd > 0.0 && m.pos_sd > 0.0) {
                return Err(invalid(format!("invalid logit model for {}", g.name)));
            }
        }
        if self.n_samples == 0 {
            return Err(invalid("sample count must be at least 1"));
        }
        if self.modalities.is_empty() {
            return Err(invalid("cohort needs at least one modality"));
        }
        for m in &self.modalities {
            if !(m.separation_scale > 0.0 && m.separation_scale.is_finite()) {
                return Err(invalid(format!("separation scale of {} must be positive", m.name)));
            }
            if let InformativeMask::Partition { parts, index } = m.mask {
                if parts == 0 || index >= parts {
                    return Err(invalid(format!("bad informative mask on {}", m.name)));
                }
            }
        }
        if !(self.noise_sd > 0.0) {
            return Err(invalid("noise_sd must be positive"));
        }
        Ok(())
    }

    /// Expected `(fpr, tpr)` at threshold 0.5 per modality and group.
    pub fn analytic_rates(&self) -> BTreeMap<String, GroupRates> {
        self.modalities
            .iter()
            .map(|m| {
                let groups = self
                    .groups
                    .iter()
                    .map(|g| {
                        let (fi, ti) = g.model.scaled(m.separation_scale).rates_at_half();
                        let noise = upper_tail(g.model.midpoint(), self.noise_sd);
                        let f = m.mask.fraction();
                        let p = self.group_prevalence(g);
                        let n = self.n_samples as f64 * g.proportion;
                        let stats = GroupStats::from_rates(
                            f * ti + (1.0 - f) * noise,
                            f * fi + (1.0 - f) * noise,
                            (n * p).round() as u64,
                            (n * (1.0 - p)).round() as u64,
                        );
                        (g.name.clone(), stats)
                    })
                    .collect();
                (m.name.clone(), GroupRates { groups })
            })
            .collect()
    }
}

/// Generated cohort: shared ids, labels and groups with one score column per modality.
#[derive(Clone, Debug, PartialEq)]
pub struct Cohort {
    pub attribute: String,
    pub modalities: Vec<(String, LabeledPredictions)>,
    pub truth: CohortTruth,
}

/// Analytic ground truth written alongside generated data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortTruth {
    pub attribute: String,
    pub seed: u64,
    pub n_samples: usize,
    pub proportions: BTreeMap<String, f64>,
    pub prevalence: BTreeMap<String, f64>,
    /// Per modality, per group rates at threshold 0.5.
    pub rates: BTreeMap<String, GroupRates>,
}

impl CohortTruth {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

impl Cohort {
    pub fn modality(&self, name: &str) -> Option<&LabeledPredictions> {
        self.modalities.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }
}

/// Sample id with a fixed width so lexical and numeric order agree.
pub fn sample_id(i: usize) -> String {
    format!("s{i:07}")
}

/// Draws a cohort. Samples are generated in order from a single ChaCha8
/// stream, so output depends only on the configuration.
pub fn generate_cohort(cfg: &CohortConfig) -> Result<Cohort> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("standard normal");
    let cumulative: Vec<f64> = cfg
        .groups
        .iter()
        .scan(0.0, |acc, g| {
            *acc += g.proportion;
            Some(*acc)
        })
        .collect();
    let models: Vec<Vec<LogitModel>> = cfg
        .modalities
        .iter()
        .map(|m| cfg.groups.iter().map(|g| g.model.scaled(m.separation_scale)).collect())
        .collect();

    let n = cfg.n_samples;
    let mut ids = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut scores = vec![Vec::with_capacity(n); cfg.modalities.len()];
    for i in 0..n {
        let u: f64 = rng.random();
        let g = cumulative.iter().position(|&c| u < c).unwrap_or(cfg.groups.len() - 1);
        let spec = &cfg.groups[g];
        let positive = rng.random::<f64>() < cfg.group_prevalence(spec);
        for (k, m) in cfg.modalities.iter().enumerate() {
            let z: f64 = std_normal.sample(&mut rng);
            let x = if m.mask.covers(i) {
                let lm = &models[k][g];
                if positive {
                    lm.pos_mean + lm.pos_sd * z
                } else {
                    lm.neg_mean + lm.neg_sd * z
                }
            } else {
                spec.model.midpoint() + cfg.noise_sd * z
            };
            scores[k].push(sigmoid(x));
        }
        ids.push(sample_id(i));
        y.push(positive);
        labels.push(spec.name.clone());
    }

    let universe: Vec<String> = cfg.groups.iter().map(|g| g.name.clone()).collect();
    let modalities = cfg
        .modalities
        .iter()
        .zip(scores)
        .map(|(m, s)| {
            let y_hat = s.iter().map(|&p| p >= DEFAULT_THRESHOLD).collect();
            let preds =
                LabeledPredictions::new(ids.clone(), y.clone(), labels.clone(), Some(universe.clone()), Some(s), Some(y_hat))?;
            Ok((m.name.clone(), preds))
        })
        .collect::<Result<Vec<_>>>()?;

    let truth = CohortTruth {
        attribute: cfg.attribute.clone(),
        seed: cfg.seed,
        n_samples: n,
        proportions: cfg.groups.iter().map(|g| (g.name.clone(), g.proportion)).collect(),
        prevalence: cfg.groups.iter().map(|g| (g.name.clone(), cfg.group_prevalence(g))).collect(),
        rates: cfg.analytic_rates(),
    };
    Ok(Cohort { attribute: cfg.attribute.clone(), modalities, truth })
}

/// Multilabel score matrix with geometrically decaying label prevalence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultilabelConfig {
    pub n_samples: usize,
    pub n_labels: usize,
    /// Prevalence of the most common label.
    pub first_prevalence: f64,
    /// Ratio between consecutive label prevalences.
    pub decay: f64,
    pub separation: f64,
    pub seed: u64,
}

impl Default for MultilabelConfig {
    fn default() -> Self {
        MultilabelConfig { n_samples: 2000, n_labels: 25, first_prevalence: 0.3, decay: 0.9, separation: 3.0, seed: 0 }
    }
}

impl MultilabelConfig {
    pub fn prevalences(&self) -> Vec<f64> {
        (0..self.n_labels).map(|k| self.first_prevalence * self.decay.powi(k as i32)).collect()
    }
}

/// Returns `(scores, labels)` as sample-major rows.
pub fn generate_multilabel(cfg: &MultilabelConfig) -> Result<(Vec<Vec<f64>>, Vec<Vec<bool>>)> {
    if cfg.n_samples == 0 || cfg.n_labels == 0 {
        return Err(invalid("multilabel generator needs samples and labels"));
    }
    if !(cfg.first_prevalence > 0.0 && cfg.first_prevalence < 1.0 && cfg.decay > 0.0 && cfg.decay <= 1.0) {
        return Err(invalid("prevalence profile must stay inside (0, 1)"));
    }
    if !(cfg.separation > 0.0) {
        return Err(invalid("separation must be positive"));
    }
    let models: Vec<LogitModel> =
        cfg.prevalences().into_iter().map(|p| LogitModel::calibrated(p, cfg.separation)).collect();
    let prev = cfg.prevalences();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut scores = Vec::with_capacity(cfg.n_samples);
    let mut labels = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        let mut s = Vec::with_capacity(cfg.n_labels);
        let mut l = Vec::with_capacity(cfg.n_labels);
        for (m, &p) in models.iter().zip(&prev) {
            let pos = rng.random::<f64>() < p;
            let z: f64 = std_normal.sample(&mut rng);
            let x = if pos { m.pos_mean + m.pos_sd * z } else { m.neg_mean + m.neg_sd * z };
            s.push(sigmoid(x));
            l.push(pos);
        }
        scores.push(s);
        labels.push(l);
    }
    Ok((scores, labels))
}
