use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "equifair", version, about = "Fairness audits and mitigations for clinical risk predictions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic cohort (and optionally embeddings or a multilabel table).
    Synth(SynthArgs),
    /// Group fairness and AUC metrics for one prediction file.
    Metrics(MetricsArgs),
    /// Fit an equalized-odds derived predictor.
    EoFit(EoFitArgs),
    /// Apply a fitted derived predictor to predictions.
    EoApply(EoApplyArgs),
    /// Hard-debias a word embedding file.
    Debias(DebiasArgs),
    /// Fit the logistic ensemble over constituent model scores.
    EnsembleFit(EnsembleFitArgs),
    /// Score a feature table with a fitted ensemble.
    EnsemblePredict(EnsemblePredictArgs),
    /// Reports and plot data for one or more classifiers.
    Report(ReportArgs),
    /// Ingest or synthesize, optionally debias, ensemble, optionally post-process, report.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args, Clone)]
pub struct SeedArg {
    /// Random seed.
    #[arg(long, env = "EQUIFAIR_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AttributeArg {
    Sex,
    Ethnicity,
    Insurance,
}

impl From<AttributeArg> for equifair::synth::Attribute {
    fn from(a: AttributeArg) -> Self {
        match a {
            AttributeArg::Sex => Self::Sex,
            AttributeArg::Ethnicity => Self::Ethnicity,
            AttributeArg::Insurance => Self::Insurance,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = AttributeArg::Sex)]
    pub attribute: AttributeArg,
    #[arg(long, default_value_t = equifair::synth::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a planted-bias embedding file.
    #[arg(long)]
    pub with_embeddings: bool,
    /// Also write a 25-label multilabel table.
    #[arg(long)]
    pub multilabel: bool,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = equifair::io::DEFAULT_GROUP_COL)]
    pub group_col: String,
    /// Input is a multilabel table; report macro/micro AUC.
    #[arg(long)]
    pub multilabel: bool,
    #[arg(long, default_value = "unnamed")]
    pub task: String,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Hard,
    Soft,
}

#[derive(Debug, Args, Clone)]
pub struct CostArgs {
    #[arg(long, default_value_t = 1.0)]
    pub cost_fp: f64,
    #[arg(long, default_value_t = 1.0)]
    pub cost_fn: f64,
}

#[derive(Debug, Args)]
pub struct EoFitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = equifair::io::DEFAULT_GROUP_COL)]
    pub group_col: String,
    #[arg(long, value_enum)]
    pub variant: Variant,
    #[command(flatten)]
    pub costs: CostArgs,
    /// Derived predictor JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EoApplyArgs {
    /// Derived predictor JSON from `eo-fit`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = equifair::io::DEFAULT_GROUP_COL)]
    pub group_col: String,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Prediction CSV with the post-processed `y_hat`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DebiasArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    /// JSON list of word lists, or `preset:gender` / `preset:race`.
    #[arg(long, default_value = "preset:gender")]
    pub equality_sets: String,
    /// Subspace rank; defaults to the equality-set size minus one.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the JSON skip report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleFitArgs {
    /// Feature table with `score_<model>` columns.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = equifair::io::DEFAULT_GROUP_COL)]
    pub group_col: String,
    /// Value of the `split` column to fit on, or `all`.
    #[arg(long)]
    pub fit_split: String,
    #[arg(long, default_value_t = equifair::ensemble::DEFAULT_C)]
    pub c: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnsemblePredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = equifair::io::DEFAULT_GROUP_COL)]
    pub group_col: String,
    /// Only score rows of this split.
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Prediction CSV, optionally `name=path`; repeatable.
    #[arg(long, required = true)]
    pub input: Vec<String>,
    #[arg(long, default_value = equifair::io::DEFAULT_GROUP_COL)]
    pub group_col: String,
    /// Derived predictor whose expected rates are reported next to the realized ones.
    #[arg(long)]
    pub dp: Option<PathBuf>,
    #[arg(long, default_value = "unnamed")]
    pub task: String,
    /// Report JSON keyed by classifier.
    #[arg(long)]
    pub out: PathBuf,
    /// Tidy plot CSV.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Intervention {
    None,
    EoHard,
    EoSoft,
    Debias,
}

impl Intervention {
    pub fn name(self) -> &'static str {
        match self {
            Intervention::None => "none",
            Intervention::EoHard => "eo-hard",
            Intervention::EoSoft => "eo-soft",
            Intervention::Debias => "debias",
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct PipelineArgs {
    /// Feature table to ingest; a synthetic cohort is generated when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Group column of the input; defaults to the attribute name for synthetic data.
    #[arg(long)]
    pub group_col: Option<String>,
    #[arg(long, value_enum, default_value_t = AttributeArg::Sex)]
    pub attribute: AttributeArg,
    #[arg(long, default_value_t = equifair::synth::DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Fairness intervention; repeat only together with --allow-composition.
    #[arg(long, value_enum, default_values_t = [Intervention::None])]
    pub intervention: Vec<Intervention>,
    /// Permit more than one intervention per run.
    #[arg(long)]
    pub allow_composition: bool,
    #[command(flatten)]
    pub costs: CostArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Fraction of samples held out for testing when the input has no split column.
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    /// Embedding file for the debias intervention; a planted one is generated when absent.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value = "preset:gender")]
    pub equality_sets: String,
    #[arg(long, default_value = "ihm")]
    pub task: String,
    #[arg(long)]
    pub out: PathBuf,
}
