//! Group-conditional confusion rates, ROC/PRC areas and fairness reports.

mod auc;
mod predictions;
mod rates;
mod report;

pub use auc::{
    auc_prc, auc_roc, multilabel_auc, multilabel_auc_with, roc_curve, trapezoid_area, MultilabelAuc, RocPoint,
};
pub use predictions::{LabeledPredictions, DEFAULT_THRESHOLD};
pub use rates::{confusion_rates, gap_ranges, GroupRates, GroupStats};
pub use report::{build_report, plot_rows, ExpectedFairness, FairnessReport, PlotRow, ReportMetadata};
