//! Word-vector files and average-linkage cosine clustering.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EmbeddingError;

/// A set of equal-dimension vectors keyed by token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordVectorSet {
    dims: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl WordVectorSet {
    pub fn new(vectors: BTreeMap<String, Vec<f64>>) -> Result<Self, EmbeddingError> {
        let dims = match vectors.values().next() {
            None => {
                return Err(EmbeddingError::EmptyInput(
                    "word vector set has no vectors".to_string(),
                ))
            }
            Some(first) => first.len(),
        };
        if dims == 0 {
            return Err(EmbeddingError::MalformedVectors(
                "vectors must have at least one dimension".to_string(),
            ));
        }
        for (token, v) in &vectors {
            if v.len() != dims {
                return Err(EmbeddingError::MalformedVectors(format!(
                    "token {token:?} has {} dimensions, expected {dims}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EmbeddingError::MalformedVectors(format!(
                    "token {token:?} has a non-finite component"
                )));
            }
        }
        Ok(WordVectorSet { dims, vectors })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.vectors
    }
}

/// Parses whitespace-separated lines of `token v1 v2 ... vd`. Blank lines are
/// skipped; every row must agree on d, and tokens must be unique.
pub fn parse_word_vectors(text: &str) -> Result<WordVectorSet, EmbeddingError> {
    let mut vectors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap().to_string();
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    EmbeddingError::MalformedVectors(format!(
                        "line {}: {f:?} is not a number",
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<_, _>>()?;
        if values.is_empty() {
            return Err(EmbeddingError::MalformedVectors(format!(
                "line {}: token {token:?} has no components",
                lineno + 1
            )));
        }
        if vectors.insert(token.clone(), values).is_some() {
            return Err(EmbeddingError::MalformedVectors(format!(
                "line {}: duplicate token {token:?}",
                lineno + 1
            )));
        }
    }
    WordVectorSet::new(vectors)
}

pub fn load_word_vectors(path: &Path) -> Result<WordVectorSet, EmbeddingError> {
    let text = std::fs::read_to_string(path).map_err(|source| EmbeddingError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    parse_word_vectors(&text)
}

/// Cosine distance 1 - cos(a, b), clamped into [0, 2]. A zero vector has no
/// direction, so its distance to anything is taken as 1.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    (1.0 - dot / (na * nb)).clamp(0.0, 2.0)
}

/// One merged group of tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordCluster {
    /// The member whose vector is closest to the cluster centroid
    /// (lexicographically first on ties).
    pub representative: String,
    pub members: BTreeSet<String>,
}

/// Clustering output: singleton groups are dropped, so `clusters` can be
/// empty; `all_singletons` flags that case rather than treating it as an
/// error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordClusters {
    pub clusters: Vec<WordCluster>,
    pub all_singletons: bool,
}

/// Agglomerative average-linkage clustering under cosine distance, cut at
/// cophenetic distance `d_coph`.
///
/// Starting from singletons, the closest pair of clusters is merged while the
/// smallest average linkage stays at or below `d_coph` (ties broken by the
/// smallest member tokens involved, making the result independent of input
/// order). Average linkage cannot produce inversions, so this greedy cut
/// equals a dendrogram cut at `d_coph`. Clusters that never merged are
/// discarded; survivors are sorted by representative.
pub fn cluster_word_vectors(
    set: &WordVectorSet,
    d_coph: f64,
) -> Result<WordClusters, EmbeddingError> {
    if !(d_coph > 0.0 && d_coph < 2.0) {
        return Err(EmbeddingError::InvalidSupport(format!(
            "cophenetic cutoff must lie strictly between 0 and 2, got {d_coph}"
        )));
    }
    if set.len() < 2 {
        return Err(EmbeddingError::EmptyInput(
            "clustering needs at least two vectors".to_string(),
        ));
    }

    let tokens: Vec<&String> = set.vectors().keys().collect();
    let vecs: Vec<&Vec<f64>> = set.vectors().values().collect();
    let n = tokens.len();

    // Average linkage between two clusters is (sum of pairwise point
    // distances) / (size product); the sums merge additively, so they are
    // maintained directly instead of recomputing pairs.
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut min_token: Vec<&String> = tokens.clone();
    let mut active: BTreeSet<usize> = (0..n).collect();
    let mut pair_sum: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            pair_sum.insert((i, j), cosine_distance(vecs[i], vecs[j]));
        }
    }

    while active.len() > 1 {
        // Closest active pair; ties resolved by the smaller, then larger, of
        // the two clusters' minimum tokens.
        let mut best: Option<((usize, usize), f64)> = None;
        for (&(a, b), &sum) in &pair_sum {
            let linkage = sum / (members[a].len() * members[b].len()) as f64;
            let better = match best {
                None => true,
                Some(((ba, bb), best_linkage)) => {
                    let key = order_tokens(min_token[a], min_token[b]);
                    let best_key = order_tokens(min_token[ba], min_token[bb]);
                    linkage < best_linkage - f64::EPSILON * 4.0
                        || ((linkage - best_linkage).abs() <= f64::EPSILON * 4.0
                            && key < best_key)
                }
            };
            if better {
                best = Some(((a, b), linkage));
            }
        }
        let ((a, b), linkage) = best.unwrap();
        if linkage > d_coph {
            break;
        }

        // Merge b into a: pairwise sums against every other cluster add up.
        let mut updates: Vec<(usize, f64)> = Vec::new();
        for &other in &active {
            if other == a || other == b {
                continue;
            }
            let to_a = pair_sum[&key_of(a, other)];
            let to_b = pair_sum[&key_of(b, other)];
            updates.push((other, to_a + to_b));
        }
        for &other in &active {
            if other == a || other == b {
                continue;
            }
            pair_sum.remove(&key_of(a, other));
            pair_sum.remove(&key_of(b, other));
        }
        pair_sum.remove(&key_of(a, b));
        for (other, sum) in updates {
            pair_sum.insert(key_of(a, other), sum);
        }
        let absorbed = std::mem::take(&mut members[b]);
        members[a].extend(absorbed);
        if min_token[b] < min_token[a] {
            min_token[a] = min_token[b];
        }
        active.remove(&b);
    }

    let mut clusters = Vec::new();
    for &c in &active {
        if members[c].len() < 2 {
            continue;
        }
        let dims = set.dims();
        let mut centroid = vec![0.0; dims];
        for &i in &members[c] {
            for d in 0..dims {
                centroid[d] += vecs[i][d];
            }
        }
        for x in &mut centroid {
            *x /= members[c].len() as f64;
        }
        let representative = members[c]
            .iter()
            .map(|&i| (cosine_distance(vecs[i], &centroid), tokens[i]))
            .min_by(|(da, ta), (db, tb)| {
                da.partial_cmp(db).unwrap().then_with(|| ta.cmp(tb))
            })
            .map(|(_, t)| t.clone())
            .unwrap();
        clusters.push(WordCluster {
            representative,
            members: members[c].iter().map(|&i| tokens[i].clone()).collect(),
        });
    }
    clusters.sort_by(|a, b| a.representative.cmp(&b.representative));
    let all_singletons = clusters.is_empty();
    Ok(WordClusters {
        clusters,
        all_singletons,
    })
}

fn key_of(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn order_tokens<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}
