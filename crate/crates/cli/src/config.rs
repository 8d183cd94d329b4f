//! Pipeline configuration: built-in defaults, an optional TOML/JSON file, and
//! command-line overrides, merged in that order (flags win).

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

use newsweave::community::{K_RANGE_DEFAULT, STABILITY_THRESHOLD};
use newsweave::embedding::WalkConfig;
use newsweave::feature::default_start_date;
use newsweave::graph::EDGE_WEIGHT_THRESHOLD;
use newsweave::ingest::week_label;
use newsweave::market::{DISLOCATION_MEAN_THRESHOLD, INDEX_NAMES};
use newsweave::model::{Experiment, DEFAULT_ALPHA};

use crate::stage::Stage;

/// The fully resolved configuration every stage runs against. Stage cache
/// hashes are computed from slices of this structure plus input file
/// contents, so identical configurations reuse identical artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub corpus_path: Option<PathBuf>,
    /// vix, vixfx, mri, move — in that order.
    pub index_csv_paths: Option<[PathBuf; 4]>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub exclude_weeks: Vec<NaiveDate>,
    pub start_date: NaiveDate,
    pub k_range: (usize, usize),
    pub beta: f64,
    pub walk: WalkConfig,
    pub alpha: f64,
    pub experiments: Vec<Experiment>,
    pub stability_threshold: f64,
    pub edge_threshold: (i64, i64),
    pub dislocation_mean_threshold: f64,
}

impl PipelineConfig {
    pub fn corpus(&self) -> Result<&Path> {
        self.corpus_path
            .as_deref()
            .ok_or_else(|| anyhow!("a corpus is required: pass --corpus or set corpus_path"))
    }

    pub fn indices(&self) -> Result<&[PathBuf; 4]> {
        self.index_csv_paths.as_ref().ok_or_else(|| {
            anyhow!(
                "the four index series are required: pass --index-vix/--index-vixfx/\
                 --index-mri/--index-move or set index_csv_paths"
            )
        })
    }

    /// Checks that the inputs needed by `stages` (and everything they depend
    /// on) are present before any work starts.
    pub fn ensure_inputs<I: IntoIterator<Item = Stage>>(&self, stages: I) -> Result<()> {
        let mut needed = std::collections::BTreeSet::new();
        for stage in stages {
            needed.extend(stage.closure());
        }
        if needed.contains(&Stage::Ingest) {
            self.corpus()?;
        }
        if needed.contains(&Stage::Market) {
            self.indices()?;
        }
        Ok(())
    }
}

/// On-disk layer: every field optional, mirroring [`PipelineConfig`].
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    corpus_path: Option<PathBuf>,
    index_csv_paths: Option<Vec<PathBuf>>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
    exclude_weeks: Option<Vec<NaiveDate>>,
    start_date: Option<NaiveDate>,
    k_range: Option<(usize, usize)>,
    beta: Option<f64>,
    walk: Option<FileWalkConfig>,
    alpha: Option<f64>,
    experiments: Option<Vec<String>>,
    stability_threshold: Option<f64>,
    edge_threshold: Option<(i64, i64)>,
    dislocation_mean_threshold: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileWalkConfig {
    dims: Option<usize>,
    walk_length: Option<usize>,
    walks_per_node: Option<usize>,
    p: Option<f64>,
    q: Option<f64>,
    window: Option<usize>,
    negatives: Option<usize>,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
}

fn load_file(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text)
            .with_context(|| format!("config file {} is not valid JSON", path.display()))
    } else {
        toml::from_str(&text)
            .with_context(|| format!("config file {} is not valid TOML", path.display()))
    }
}

/// Command-line selection of a regression experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentArg {
    Contemporaneous,
    Predictive,
}

impl From<ExperimentArg> for Experiment {
    fn from(arg: ExperimentArg) -> Experiment {
        match arg {
            ExperimentArg::Contemporaneous => Experiment::Contemporaneous,
            ExperimentArg::Predictive => Experiment::Predictive,
        }
    }
}

/// Configuration flags shared by `run` and `run-all`. Every value falls back
/// to the config file (if given), then to the built-in defaults.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// TOML or JSON configuration file mirroring the pipeline config.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Newline-delimited JSON article corpus.
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<PathBuf>,

    /// Weekly VIX index CSV (week_end,value).
    #[arg(long, value_name = "PATH")]
    pub index_vix: Option<PathBuf>,

    /// Weekly FX-volatility index CSV.
    #[arg(long, value_name = "PATH")]
    pub index_vixfx: Option<PathBuf>,

    /// Weekly market-risk index CSV.
    #[arg(long, value_name = "PATH")]
    pub index_mri: Option<PathBuf>,

    /// Weekly bond-volatility index CSV.
    #[arg(long, value_name = "PATH")]
    pub index_move: Option<PathBuf>,

    /// Directory all stage artifacts are written under.
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,

    /// Master seed; every randomized stage derives its own sub-seed from it.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Comma-separated week-end dates (YYYY-MM-DD) to drop at ingest.
    #[arg(long, value_delimiter = ',', value_name = "DATE,...")]
    pub exclude_weeks: Option<Vec<NaiveDate>>,

    /// First week (YYYY-MM-DD) eligible for the feature matrix.
    #[arg(long, value_name = "DATE")]
    pub start_date: Option<NaiveDate>,

    /// Smallest community count tried by model-order selection.
    #[arg(long, value_name = "K")]
    pub k_lo: Option<usize>,

    /// Largest community count tried by model-order selection.
    #[arg(long, value_name = "K")]
    pub k_hi: Option<usize>,

    /// Diffusion-kernel inverse temperature.
    #[arg(long)]
    pub beta: Option<f64>,

    /// Embedding dimensionality.
    #[arg(long)]
    pub dims: Option<usize>,

    /// Nodes per random walk.
    #[arg(long)]
    pub walk_length: Option<usize>,

    /// Walks started from each node.
    #[arg(long)]
    pub walks_per_node: Option<usize>,

    /// node2vec return parameter.
    #[arg(long)]
    pub p: Option<f64>,

    /// node2vec in-out parameter.
    #[arg(long)]
    pub q: Option<f64>,

    /// Skip-gram context radius.
    #[arg(long)]
    pub window: Option<usize>,

    /// Negative samples per positive pair.
    #[arg(long)]
    pub negatives: Option<usize>,

    /// Skip-gram training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,

    /// Initial skip-gram learning rate (decays linearly).
    #[arg(long)]
    pub learning_rate: Option<f64>,

    /// Significance level for recursive feature elimination.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Regression experiment to run; repeat the flag for several. Default:
    /// both.
    #[arg(long = "experiment", value_enum)]
    pub experiments: Vec<ExperimentArg>,

    /// Membership-ratio bound below which a node's community assignment
    /// counts as unstable.
    #[arg(long)]
    pub stability_threshold: Option<f64>,

    /// Co-occurrence weight threshold as a fraction, e.g. "1/6".
    #[arg(long, value_name = "NUM/DEN")]
    pub edge_threshold: Option<String>,

    /// Mean z-score a dislocation week must strictly exceed.
    #[arg(long)]
    pub dislocation_mean: Option<f64>,
}

fn parse_fraction(text: &str) -> Result<(i64, i64)> {
    let (num, den) = text
        .split_once('/')
        .ok_or_else(|| anyhow!("edge threshold must look like \"1/6\", got {text:?}"))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<i64>()
            .with_context(|| format!("{s:?} is not an integer"))
    };
    Ok((parse(num)?, parse(den)?))
}

fn parse_experiments(names: &[String]) -> Result<Vec<Experiment>> {
    names
        .iter()
        .map(|n| {
            n.parse::<Experiment>()
                .map_err(|e| anyhow!("bad experiment name {n:?}: {e}"))
        })
        .collect()
}

/// Merges flags over the optional config file over the defaults, then
/// validates the result.
pub fn resolve(args: &ConfigArgs) -> Result<PipelineConfig> {
    let file = match &args.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };

    let file_indices: Option<[PathBuf; 4]> = match file.index_csv_paths {
        Some(paths) => Some(<[PathBuf; 4]>::try_from(paths).map_err(|got| {
            anyhow!(
                "index_csv_paths must list exactly 4 files ({} order), got {}",
                INDEX_NAMES.join("/"),
                got.len()
            )
        })?),
        None => None,
    };
    let flag_indices = [
        args.index_vix.clone(),
        args.index_vixfx.clone(),
        args.index_mri.clone(),
        args.index_move.clone(),
    ];
    let index_csv_paths = if flag_indices.iter().all(Option::is_some) {
        Some(flag_indices.map(Option::unwrap))
    } else if flag_indices.iter().all(Option::is_none) {
        file_indices
    } else {
        let mut base = file_indices.ok_or_else(|| {
            anyhow!("either pass all four --index-* flags or set index_csv_paths in the config")
        })?;
        for (slot, flag) in base.iter_mut().zip(flag_indices) {
            if let Some(path) = flag {
                *slot = path;
            }
        }
        Some(base)
    };

    let default_walk = WalkConfig::default();
    let file_walk = file.walk.unwrap_or_default();
    let walk = WalkConfig {
        dims: args.dims.or(file_walk.dims).unwrap_or(default_walk.dims),
        walk_length: args
            .walk_length
            .or(file_walk.walk_length)
            .unwrap_or(default_walk.walk_length),
        walks_per_node: args
            .walks_per_node
            .or(file_walk.walks_per_node)
            .unwrap_or(default_walk.walks_per_node),
        p: args.p.or(file_walk.p).unwrap_or(default_walk.p),
        q: args.q.or(file_walk.q).unwrap_or(default_walk.q),
        window: args
            .window
            .or(file_walk.window)
            .unwrap_or(default_walk.window),
        negatives: args
            .negatives
            .or(file_walk.negatives)
            .unwrap_or(default_walk.negatives),
        epochs: args
            .epochs
            .or(file_walk.epochs)
            .unwrap_or(default_walk.epochs),
        learning_rate: args
            .learning_rate
            .or(file_walk.learning_rate)
            .unwrap_or(default_walk.learning_rate),
    };
    walk.validate()
        .map_err(|e| anyhow!("bad walk configuration: {e}"))?;

    let k_range = match (args.k_lo, args.k_hi) {
        (None, None) => file.k_range.unwrap_or(K_RANGE_DEFAULT),
        (lo, hi) => {
            let base = file.k_range.unwrap_or(K_RANGE_DEFAULT);
            (lo.unwrap_or(base.0), hi.unwrap_or(base.1))
        }
    };
    if k_range.0 < 2 || k_range.0 > k_range.1 {
        bail!(
            "k_range must satisfy 2 <= lo <= hi, got [{}, {}]",
            k_range.0,
            k_range.1
        );
    }

    let beta = args.beta.or(file.beta).unwrap_or(1.0);
    if !beta.is_finite() || beta < 0.0 {
        bail!("beta must be finite and non-negative, got {beta}");
    }
    let alpha = args.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA);
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("alpha must lie strictly between 0 and 1, got {alpha}");
    }

    let mut experiments: Vec<Experiment> = if !args.experiments.is_empty() {
        args.experiments.iter().map(|&a| a.into()).collect()
    } else if let Some(names) = &file.experiments {
        parse_experiments(names)?
    } else {
        vec![Experiment::Contemporaneous, Experiment::Predictive]
    };
    experiments.dedup();
    if experiments.is_empty() {
        bail!("at least one regression experiment must be selected");
    }

    let mut exclude_weeks: Vec<NaiveDate> = args
        .exclude_weeks
        .clone()
        .or(file.exclude_weeks)
        .unwrap_or_default()
        .into_iter()
        .map(week_label)
        .collect();
    exclude_weeks.sort();
    exclude_weeks.dedup();

    // The thresholds are constants of the method; the config records them so
    // the manifest hash covers them, and any attempt to change them is
    // rejected rather than silently ignored.
    let stability_threshold = args
        .stability_threshold
        .or(file.stability_threshold)
        .unwrap_or(STABILITY_THRESHOLD);
    if stability_threshold != STABILITY_THRESHOLD {
        bail!(
            "stability_threshold is fixed at {STABILITY_THRESHOLD} in this build; \
             remove the override"
        );
    }
    let edge_threshold = match &args.edge_threshold {
        Some(text) => parse_fraction(text)?,
        None => file.edge_threshold.unwrap_or(EDGE_WEIGHT_THRESHOLD),
    };
    if edge_threshold != EDGE_WEIGHT_THRESHOLD {
        bail!(
            "edge_threshold is fixed at {}/{} in this build; remove the override",
            EDGE_WEIGHT_THRESHOLD.0,
            EDGE_WEIGHT_THRESHOLD.1
        );
    }
    let dislocation_mean_threshold = args
        .dislocation_mean
        .or(file.dislocation_mean_threshold)
        .unwrap_or(DISLOCATION_MEAN_THRESHOLD);
    if dislocation_mean_threshold != DISLOCATION_MEAN_THRESHOLD {
        bail!(
            "dislocation_mean_threshold is fixed at {DISLOCATION_MEAN_THRESHOLD} \
             in this build; remove the override"
        );
    }

    Ok(PipelineConfig {
        corpus_path: args.corpus.clone().or(file.corpus_path),
        index_csv_paths,
        output_dir: args
            .output
            .clone()
            .or(file.output_dir)
            .unwrap_or_else(|| PathBuf::from("newsweave-out")),
        seed: args.seed.or(file.seed).unwrap_or(42),
        exclude_weeks,
        start_date: args
            .start_date
            .or(file.start_date)
            .unwrap_or_else(default_start_date),
        k_range,
        beta,
        walk,
        alpha,
        experiments,
        stability_threshold,
        edge_threshold,
        dislocation_mean_threshold,
    })
}
