//! `newsweave` — weekly news-narrative pipeline over entity co-occurrence
//! graphs: ingest, graph construction, centrality, fuzzy communities,
//! narrative chains, node embeddings, market dislocation labels, feature
//! assembly, and logistic regression, with per-stage artifact caching.

mod artifacts;
mod config;
mod exec;
mod hash;
mod manifest;
mod stage;
mod steps;

use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

use newsweave::embedding::cluster_word_vectors;
use newsweave::embedding::wordvec::load_word_vectors;
use newsweave::report::{pca_coordinates, pca_csv};

use crate::config::ConfigArgs;
use crate::stage::{Stage, ALL_STAGES};

#[derive(Parser)]
#[command(
    name = "newsweave",
    version,
    about = "Weekly narrative analysis over entity co-occurrence graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one pipeline stage; its upstream stages must already be up to
    /// date in the output directory.
    Run {
        #[arg(value_enum)]
        stage: Stage,
        #[command(flatten)]
        config: ConfigArgs,
        /// Overwrite artifacts produced under a different configuration.
        #[arg(long)]
        force: bool,
    },
    /// Run every stage in dependency order, skipping up-to-date ones.
    RunAll {
        #[command(flatten)]
        config: ConfigArgs,
        /// Overwrite artifacts produced under a different configuration.
        #[arg(long)]
        force: bool,
    },
    /// Cluster a word-vector file (token followed by whitespace-separated
    /// components, one per line) by average-linkage cosine distance.
    ClusterVectors {
        /// Word-vector file to cluster.
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        /// Cophenetic distance cutoff, strictly between 0 and 2.
        #[arg(long)]
        d_coph: f64,
        /// Write the cluster JSON here instead of stdout.
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
        /// Also write a two-component projection CSV of the vectors.
        #[arg(long, value_name = "PATH")]
        pca: Option<PathBuf>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    stage::check_dag()?;
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            stage,
            config,
            force,
        } => {
            let cfg = config::resolve(&config)?;
            cfg.ensure_inputs([stage])?;
            exec::Runner::new(&cfg, force)?.run(stage)?;
        }
        Command::RunAll { config, force } => {
            let cfg = config::resolve(&config)?;
            cfg.ensure_inputs(ALL_STAGES)?;
            exec::Runner::new(&cfg, force)?.run_all()?;
        }
        Command::ClusterVectors {
            input,
            d_coph,
            output,
            pca,
        } => cluster_vectors(&input, d_coph, output.as_deref(), pca.as_deref())?,
    }
    Ok(())
}

fn cluster_vectors(
    input: &std::path::Path,
    d_coph: f64,
    output: Option<&std::path::Path>,
    pca: Option<&std::path::Path>,
) -> Result<()> {
    let set = load_word_vectors(input)?;
    let clusters = cluster_word_vectors(&set, d_coph)?;
    if clusters.all_singletons {
        eprintln!("note: no tokens merged below the cutoff; every cluster was a singleton");
    }
    let mut text = serde_json::to_string_pretty(&clusters)?;
    text.push('\n');
    match output {
        Some(path) => artifacts::write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    if let Some(path) = pca {
        let projection = pca_coordinates(set.vectors())?;
        artifacts::write_atomic(path, pca_csv(&projection).as_bytes())?;
    }
    Ok(())
}
