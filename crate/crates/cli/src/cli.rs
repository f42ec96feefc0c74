//! Argument grammar and dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands;
use crate::config::ConfigFile;
use crate::{CliError, Phase};

#[derive(Debug, Parser)]
#[command(
    name = "trilatent",
    version,
    about = "Multimodal autoencoder pipeline: synthesize data, train, embed, run baselines, cluster, and project"
)]
pub struct Cli {
    /// Key-value run configuration file; explicit flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic aligned dataset and write it with manifests.
    Synth(commands::synth::SynthArgs),
    /// Train the multimodal autoencoder; writes checkpoint, history, stats.
    Train(commands::train::TrainArgs),
    /// Extract latent embeddings from a checkpoint.
    Embed(commands::embed::EmbedArgs),
    /// Linear baselines: single-modality PCA and weighted fusion PCA + K-Means.
    Baseline(commands::baseline::BaselineArgs),
    /// Cluster an embedding file over a grid of k and score against labels.
    Cluster(commands::cluster::ClusterArgs),
    /// Project an embedding file to 2-D (t-SNE or PCA) with SVG + CSV output.
    Project(commands::project::ProjectArgs),
    /// Merge stage report CSVs into one summary; refuses mixed seeds.
    Report(commands::report::ReportArgs),
    /// Run gradient checks and metric oracles; nonzero exit on failure.
    Verify(commands::verify::VerifyArgs),
}

/// Parse argv and run; returns the process exit code.
pub fn run_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.report());
            e.exit_code()
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let config = ConfigFile::load(cli.config.as_deref()).validation()?;
    match &cli.command {
        Command::Synth(args) => commands::synth::run(args, &config),
        Command::Train(args) => commands::train::run(args, &config),
        Command::Embed(args) => commands::embed::run(args, &config),
        Command::Baseline(args) => commands::baseline::run(args, &config),
        Command::Cluster(args) => commands::cluster::run(args, &config),
        Command::Project(args) => commands::project::run(args, &config),
        Command::Report(args) => commands::report::run(args, &config),
        Command::Verify(args) => commands::verify::run(args, &config),
    }
}
