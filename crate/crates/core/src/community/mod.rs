//! Community structure on weekly graphs: modularity, Louvain partitions,
//! fuzzy diffusion/factorization communities, partition agreement, model-order
//! selection, and the stability-based article filter.

pub mod kernel;
pub mod louvain;
pub mod nmf;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::WeeklyGraph;
use crate::ingest::WeeklyCorpus;

/// Nodes whose top-to-runner-up membership ratio is at or below this are
/// considered unstable assignments.
pub const STABILITY_THRESHOLD: f64 = 2.0;

/// Runner-up memberships below this count as zero, making the node's
/// assignment perfectly stable.
const STABILITY_EPS: f64 = 1e-12;

/// Default community-count search range (inclusive); the upper end is clamped
/// to n - 1 on small graphs.
pub const K_RANGE_DEFAULT: (usize, usize) = (2, 14);

/// Article entities with rank at or below this act as the article's anchors
/// in [`stable_article_filter`].
pub const ANCHOR_RANK_MAX: u8 = 3;

#[derive(Debug, Error)]
pub enum CommunityError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("k = {k} is out of range (valid up to {limit})")]
    InvalidK { k: usize, limit: usize },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),
    #[error("label vector has length {got}, graph has {expected} nodes")]
    LabelLengthMismatch { expected: usize, got: usize },
}

/// Newman modularity of a hard partition over the weighted graph, summing
/// over ordered node pairs: Q = sum_c [ in_c/(2W) - (tot_c/(2W))^2 ] where
/// in_c counts intra-community ordered-pair weight and tot_c sums degrees.
pub fn modularity(g: &WeeklyGraph, labels: &[usize]) -> Result<f64, CommunityError> {
    let n = g.node_count();
    if labels.len() != n {
        return Err(CommunityError::LabelLengthMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    let two_w = 2.0 * g.total_weight();
    let n_comms = labels.iter().max().map_or(0, |&m| m + 1);
    let mut internal = vec![0.0; n_comms];
    let mut total = vec![0.0; n_comms];
    for &(u, v, w) in g.edges() {
        if labels[u] == labels[v] {
            internal[labels[u]] += 2.0 * w;
        }
    }
    for (i, &c) in labels.iter().enumerate() {
        total[c] += g.degree(i);
    }
    let mut q = 0.0;
    for c in 0..n_comms {
        q += internal[c] / two_w - (total[c] / two_w).powi(2);
    }
    Ok(q)
}

fn comb2(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same nodes. Returns 1.0
/// when the correction denominator vanishes (both partitions degenerate in
/// the same way, e.g. both all-singletons).
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64, CommunityError> {
    if a.len() != b.len() {
        return Err(CommunityError::LabelLengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(CommunityError::InvalidParameter(
            "cannot compare empty labelings".to_string(),
        ));
    }
    let mut contingency: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *contingency.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    let n = a.len() as u64;
    let sum_ij: f64 = contingency.values().map(|&c| comb2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| comb2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| comb2(c)).sum();
    let expected = sum_a * sum_b / comb2(n);
    let max_index = (sum_a + sum_b) / 2.0;
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / denom)
}

/// Soft community assignment of one week's nodes.
///
/// `membership` holds the raw non-negative factor rows (one per node, one
/// column per component). `labels` are the hard assignments — per-row argmax,
/// ties to the lowest column — renumbered to contiguous ids by first
/// appearance in node order, so label values need not match membership
/// column indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyPartition {
    pub k: usize,
    pub labels: Vec<usize>,
    pub membership: Vec<Vec<f64>>,
    /// Per node: top membership divided by runner-up membership; infinite
    /// (serialized as null) when the runner-up is numerically zero.
    #[serde(with = "stability_serde")]
    pub stability: Vec<f64>,
}

mod stability_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(values: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
        let encoded: Vec<Option<f64>> = values
            .iter()
            .map(|&v| if v.is_finite() { Some(v) } else { None })
            .collect();
        encoded.serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<f64>, D::Error> {
        let decoded = Vec::<Option<f64>>::deserialize(deserializer)?;
        Ok(decoded
            .into_iter()
            .map(|v| v.unwrap_or(f64::INFINITY))
            .collect())
    }
}

impl FuzzyPartition {
    /// Derives hard labels and stability ratios from a non-negative
    /// membership matrix (rows = nodes, columns = components).
    pub fn from_membership(membership: &DMatrix<f64>) -> Result<Self, CommunityError> {
        let (n, k) = (membership.nrows(), membership.ncols());
        if n == 0 || k == 0 {
            return Err(CommunityError::InvalidMatrix(
                "membership matrix must be non-empty".to_string(),
            ));
        }
        for j in 0..k {
            for i in 0..n {
                let v = membership[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(CommunityError::InvalidMatrix(format!(
                        "membership ({i}, {j}) = {v}; must be non-negative and finite"
                    )));
                }
            }
        }

        let mut raw_labels = Vec::with_capacity(n);
        let mut stability = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let row: Vec<f64> = (0..k).map(|j| membership[(i, j)]).collect();
            let mut best = 0usize;
            for j in 1..k {
                if row[j] > row[best] {
                    best = j;
                }
            }
            let top = row[best];
            let runner_up = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != best)
                .map(|(_, &v)| v)
                .fold(0.0, f64::max);
            stability.push(if runner_up < STABILITY_EPS {
                f64::INFINITY
            } else {
                top / runner_up
            });
            raw_labels.push(best);
            rows.push(row);
        }

        let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
        let mut next = 0usize;
        let labels = raw_labels
            .iter()
            .map(|&c| {
                *remap.entry(c).or_insert_with(|| {
                    let id = next;
                    next += 1;
                    id
                })
            })
            .collect();

        Ok(FuzzyPartition {
            k,
            labels,
            membership: rows,
            stability,
        })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    /// Number of distinct hard communities actually used.
    pub fn community_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m + 1)
    }

    /// A node is unstable when its top membership fails to dominate the
    /// runner-up by more than [`STABILITY_THRESHOLD`].
    pub fn is_unstable(&self, node: usize) -> bool {
        self.stability[node] <= STABILITY_THRESHOLD
    }

    pub fn unstable_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| self.is_unstable(i))
            .collect()
    }
}

/// Fuzzy communities of one weekly graph: diffusion kernel at `beta`,
/// cosine normalization, and a k-component factorization of the similarity
/// matrix. Requires 2 <= k <= n - 1.
pub fn fuzzy_communities(
    g: &WeeklyGraph,
    k: usize,
    beta: f64,
    seed: u64,
) -> Result<FuzzyPartition, CommunityError> {
    let n = g.node_count();
    if k < 2 || k + 1 > n {
        return Err(CommunityError::InvalidK {
            k,
            limit: n.saturating_sub(1),
        });
    }
    let kern = kernel::diffusion_kernel(g, beta)?;
    let sim = kernel::normalized_kernel(&kern)?;
    let fit = nmf::factorize(&sim, k, seed)?;
    FuzzyPartition::from_membership(&fit.basis)
}

/// Modularity curve and knee for one seed of the k-selection sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCurve {
    pub seed: u64,
    /// (k, modularity of the hard labels at k), ascending in k.
    pub q_by_k: Vec<(usize, f64)>,
    pub knee: usize,
    /// True when the curve was flat or never rose above its chord, in which
    /// case the largest k stands in for a knee.
    pub degenerate: bool,
}

/// Outcome of [`select_k`]: the chosen k plus the per-seed evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k: usize,
    /// True when every seed's curve was degenerate.
    pub degenerate: bool,
    pub curves: Vec<SeedCurve>,
}

/// Knee of an ascending (k, Q) curve: normalize both axes to [0, 1] and take
/// the point farthest above the diagonal chord. Flat curves (or curves never
/// above the chord) are degenerate and yield the largest k.
fn kneedle_knee(points: &[(usize, f64)]) -> (usize, bool) {
    let last = points.last().expect("curve has at least one point");
    if points.len() == 1 {
        return (points[0].0, false);
    }
    let (k_lo, k_hi) = (points[0].0 as f64, last.0 as f64);
    let q_min = points.iter().map(|&(_, q)| q).fold(f64::INFINITY, f64::min);
    let q_max = points
        .iter()
        .map(|&(_, q)| q)
        .fold(f64::NEG_INFINITY, f64::max);
    if q_max - q_min < 1e-12 {
        return (last.0, true);
    }
    let mut best: Option<(usize, f64)> = None;
    for &(k, q) in points {
        let k_norm = (k as f64 - k_lo) / (k_hi - k_lo);
        let q_norm = (q - q_min) / (q_max - q_min);
        let d = q_norm - k_norm;
        // Strict improvement keeps the smallest k on ties.
        if best.map_or(true, |(_, bd)| d > bd) {
            best = Some((k, d));
        }
    }
    let (knee, d) = best.expect("non-empty curve");
    if d < 1e-12 {
        (last.0, true)
    } else {
        (knee, false)
    }
}

/// Sweeps k over `[k_lo, min(k_hi, n-1)]` for each seed, scoring each k by
/// the modularity of the hard labels, and picks the knee of each curve; the
/// final k is the mode of the per-seed knees (ties to the smallest k). The
/// kernel is computed once and shared across the whole sweep.
pub fn select_k(
    g: &WeeklyGraph,
    beta: f64,
    k_lo: usize,
    k_hi: usize,
    seeds: &[u64],
) -> Result<KSelection, CommunityError> {
    if seeds.is_empty() {
        return Err(CommunityError::InvalidParameter(
            "select_k needs at least one seed".to_string(),
        ));
    }
    if k_lo < 2 || k_lo > k_hi {
        return Err(CommunityError::InvalidParameter(format!(
            "invalid k range [{k_lo}, {k_hi}]"
        )));
    }
    let n = g.node_count();
    let k_hi = k_hi.min(n.saturating_sub(1));
    if k_hi < k_lo {
        return Err(CommunityError::InvalidK {
            k: k_lo,
            limit: n.saturating_sub(1),
        });
    }

    let kern = kernel::diffusion_kernel(g, beta)?;
    let sim = kernel::normalized_kernel(&kern)?;

    let mut curves = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut q_by_k = Vec::with_capacity(k_hi - k_lo + 1);
        for k in k_lo..=k_hi {
            let fit = nmf::factorize(&sim, k, seed)?;
            let partition = FuzzyPartition::from_membership(&fit.basis)?;
            let q = modularity(g, &partition.labels)?;
            q_by_k.push((k, q));
        }
        let (knee, degenerate) = kneedle_knee(&q_by_k);
        curves.push(SeedCurve {
            seed,
            q_by_k,
            knee,
            degenerate,
        });
    }

    let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
    for curve in &curves {
        *votes.entry(curve.knee).or_insert(0) += 1;
    }
    // BTreeMap iterates ascending in k, so strict improvement favors the
    // smallest k among tied vote counts.
    let mut k = *votes.keys().next().expect("at least one curve");
    let mut best_votes = 0usize;
    for (&candidate, &count) in &votes {
        if count > best_votes {
            best_votes = count;
            k = candidate;
        }
    }
    let degenerate = curves.iter().all(|c| c.degenerate);
    Ok(KSelection {
        k,
        degenerate,
        curves,
    })
}

/// Selects articles whose anchor entities (rank at most
/// [`ANCHOR_RANK_MAX`]) all sit in the same community and are all stable.
/// Articles with no anchors, with anchors outside the graph, with anchors in
/// different communities, or with an unstable anchor are excluded. Returns
/// sorted article ids.
pub fn stable_article_filter(
    week: &WeeklyCorpus,
    g: &WeeklyGraph,
    partition: &FuzzyPartition,
) -> Result<Vec<String>, CommunityError> {
    if partition.node_count() != g.node_count() {
        return Err(CommunityError::LabelLengthMismatch {
            expected: g.node_count(),
            got: partition.node_count(),
        });
    }
    let mut kept = Vec::new();
    'articles: for article in &week.articles {
        let anchors: Vec<&str> = article
            .entities
            .iter()
            .filter(|m| m.rank <= ANCHOR_RANK_MAX)
            .map(|m| m.text.as_str())
            .collect();
        if anchors.is_empty() {
            continue;
        }
        let mut community = None;
        for anchor in anchors {
            let Some(node) = g.node_index(anchor) else {
                continue 'articles;
            };
            if partition.is_unstable(node) {
                continue 'articles;
            }
            match community {
                None => community = Some(partition.labels[node]),
                Some(c) if c != partition.labels[node] => continue 'articles,
                Some(_) => {}
            }
        }
        kept.push(article.article_id.clone());
    }
    kept.sort();
    Ok(kept)
}
