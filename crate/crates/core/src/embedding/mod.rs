//! node2vec embeddings of weekly graphs (biased walks + skip-gram with
//! negative sampling), the embedding-dispersion feature derived from them,
//! and the word-vector clustering benchmark.

pub mod sgns;
pub mod walks;
pub mod wordvec;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::WeeklyGraph;

pub use sgns::{pair_gradients, pair_loss, train_embedding, TrainStats};
pub use walks::generate_walks;
pub use wordvec::{cluster_word_vectors, WordCluster, WordClusters, WordVectorSet};

/// Histogram supports snap their endpoints to this grid.
pub const SUPPORT_GRID: f64 = 0.1;

/// Histogram bin width used for the embedding-dispersion feature.
pub const ENTROPY_BIN_WIDTH: f64 = 0.1;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("invalid walk configuration: {0}")]
    InvalidConfig(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid histogram support: {0}")]
    InvalidSupport(String),
    #[error("training loss became non-finite in epoch {epoch}")]
    NanLoss { epoch: usize },
    #[error("failed to read {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed vector file: {0}")]
    MalformedVectors(String),
}

/// Sampling and training parameters for node2vec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Embedding dimensionality.
    pub dims: usize,
    /// Nodes per walk (the start node counts).
    pub walk_length: usize,
    pub walks_per_node: usize,
    /// Return parameter: revisiting the previous node is reweighted by 1/p.
    pub p: f64,
    /// In-out parameter: moving beyond the previous node's neighborhood is
    /// reweighted by 1/q.
    pub q: f64,
    /// Skip-gram context radius within a walk.
    pub window: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            dims: 8,
            walk_length: 20,
            walks_per_node: 20,
            p: 1.0,
            q: 1.0,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |msg: String| Err(EmbeddingError::InvalidConfig(msg));
        if self.dims == 0 {
            return bad("dims must be at least 1".to_string());
        }
        if self.walk_length < 2 {
            return bad("walk_length must be at least 2".to_string());
        }
        if self.walks_per_node == 0 {
            return bad("walks_per_node must be at least 1".to_string());
        }
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !v.is_finite() || v <= 0.0 {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.window == 0 {
            return bad("window must be at least 1".to_string());
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1".to_string());
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return bad(format!(
                "learning_rate must be positive and finite, got {}",
                self.learning_rate
            ));
        }
        Ok(())
    }
}

/// Input-side vectors of one week's trained embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEmbedding {
    pub week_end: NaiveDate,
    pub dims: usize,
    /// Node name -> vector of length `dims`; covers every node of the graph.
    pub vectors: BTreeMap<String, Vec<f64>>,
}

/// Runs the full node2vec pipeline on one weekly graph: biased walks, then
/// skip-gram training, returning the input vectors keyed by node name.
pub fn embed_graph(
    g: &WeeklyGraph,
    cfg: &WalkConfig,
    seed: u64,
) -> Result<(NodeEmbedding, TrainStats), EmbeddingError> {
    let walks = generate_walks(g, cfg, seed)?;
    let (matrix, stats) = train_embedding(&walks, g.node_count(), cfg, seed)?;
    let vectors = g
        .nodes()
        .iter()
        .cloned()
        .zip(matrix)
        .collect::<BTreeMap<String, Vec<f64>>>();
    Ok((
        NodeEmbedding {
            week_end: g.week_end(),
            dims: cfg.dims,
            vectors,
        },
        stats,
    ))
}

/// A histogram support: `nbins = round((hi - lo) / width)` equal bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSupport {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

impl BinSupport {
    pub fn nbins(&self) -> usize {
        let raw = (self.hi - self.lo) / self.width;
        if raw <= 0.0 {
            0
        } else {
            raw.round() as usize
        }
    }
}

/// The tightest support whose endpoints sit on multiples of `grid` and which
/// contains every value; bins are `grid` wide.
pub fn snapped_support(values: &[f64], grid: f64) -> Result<BinSupport, EmbeddingError> {
    if values.is_empty() {
        return Err(EmbeddingError::EmptyInput(
            "cannot build a support over no values".to_string(),
        ));
    }
    if !grid.is_finite() || grid <= 0.0 {
        return Err(EmbeddingError::InvalidSupport(format!(
            "grid must be positive and finite, got {grid}"
        )));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        if !v.is_finite() {
            return Err(EmbeddingError::InvalidSupport(format!(
                "non-finite value {v}"
            )));
        }
        min = min.min(v);
        max = max.max(v);
    }
    Ok(BinSupport {
        lo: (min / grid).floor() * grid,
        hi: (max / grid).ceil() * grid,
        width: grid,
    })
}

/// KL divergence of the binned empirical distribution from the uniform
/// distribution over the same bins: sum of p * ln(p * nbins), with
/// 0 * ln 0 = 0. A support with no bins (degenerate span) contributes 0.
/// All values must lie inside the support.
pub fn kl_divergence_from_uniform(
    values: &[f64],
    support: &BinSupport,
) -> Result<f64, EmbeddingError> {
    if values.is_empty() {
        return Err(EmbeddingError::EmptyInput(
            "cannot histogram no values".to_string(),
        ));
    }
    if !support.width.is_finite() || support.width <= 0.0 {
        return Err(EmbeddingError::InvalidSupport(format!(
            "bin width must be positive, got {}",
            support.width
        )));
    }
    let nbins = support.nbins();
    if nbins == 0 {
        return Ok(0.0);
    }
    let mut counts = vec![0usize; nbins];
    for &v in values {
        if v < support.lo || v > support.hi || !v.is_finite() {
            return Err(EmbeddingError::InvalidSupport(format!(
                "value {v} outside support [{}, {}]",
                support.lo, support.hi
            )));
        }
        let idx = (((v - support.lo) / support.width).floor() as usize).min(nbins - 1);
        counts[idx] += 1;
    }
    let n = values.len() as f64;
    let mut divergence = 0.0;
    for &c in &counts {
        if c > 0 {
            let p = c as f64 / n;
            divergence += p * (p * nbins as f64).ln();
        }
    }
    Ok(divergence)
}

/// Mean per-dimension KL divergence of the embedding coordinates from
/// uniform, using width-0.1 bins over each dimension's snapped min/max span.
/// Larger values mean the coordinates are more concentrated (lower entropy).
pub fn n2v_entropy(e: &NodeEmbedding) -> Result<f64, EmbeddingError> {
    if e.vectors.len() < 2 {
        return Err(EmbeddingError::EmptyInput(format!(
            "embedding dispersion needs at least 2 nodes, got {}",
            e.vectors.len()
        )));
    }
    if e.dims == 0 {
        return Err(EmbeddingError::InvalidConfig(
            "embedding has zero dimensions".to_string(),
        ));
    }
    let mut total = 0.0;
    for d in 0..e.dims {
        let values: Vec<f64> = e.vectors.values().map(|v| v[d]).collect();
        let support = snapped_support(&values, SUPPORT_GRID)?;
        total += kl_divergence_from_uniform(
            &values,
            &BinSupport {
                lo: support.lo,
                hi: support.hi,
                width: ENTROPY_BIN_WIDTH,
            },
        )?;
    }
    Ok(total / e.dims as f64)
}
