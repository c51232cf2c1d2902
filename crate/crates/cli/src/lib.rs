//! Command-line front end for the equifair toolkit.

pub mod args;
mod commands;
pub mod error;
pub mod pipeline;
mod util;

pub use args::Cli;
pub use error::{CliError, CliResult};

use args::Command;

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::EoFit(a) => commands::eo_fit(a),
        Command::EoApply(a) => commands::eo_apply(a),
        Command::Debias(a) => commands::debias(a),
        Command::EnsembleFit(a) => commands::ensemble_fit(a),
        Command::EnsemblePredict(a) => commands::ensemble_predict(a),
        Command::Report(a) => commands::report(a),
        Command::Pipeline(a) => pipeline::run(a).map(|_| ()),
    }
}
