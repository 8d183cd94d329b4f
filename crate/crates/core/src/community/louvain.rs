//! Louvain community detection on the weighted weekly graph.
//!
//! The node visit order and the order in which candidate communities are
//! examined are both shuffled from a caller-supplied seed; a node takes the
//! first strictly improving move it sees. Runs with the same seed are
//! bit-for-bit identical.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{modularity, CommunityError};
use crate::graph::WeeklyGraph;

/// A move must beat staying put by more than this (in summed-weight units).
const GAIN_EPS: f64 = 1e-12;

/// Result of a Louvain run over one weekly graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LouvainResult {
    /// Community per node index; contiguous ids starting at 0, numbered by
    /// first appearance in node order.
    pub labels: Vec<usize>,
    /// Modularity of the final partition on the original graph.
    pub modularity: f64,
    /// Number of coarsening levels that performed at least one move.
    pub levels: usize,
}

/// One level of the coarsening hierarchy. Inter-node weights live in `adj`;
/// a node's self-loop stores the ordered-pair weight folded into it (twice
/// the undirected weight absorbed by merging).
struct LevelGraph {
    adj: Vec<BTreeMap<usize, f64>>,
    self_loops: Vec<f64>,
    /// Weighted degree including the self-loop.
    degrees: Vec<f64>,
    /// Total ordered-pair weight (2W); invariant across levels.
    two_w: f64,
}

impl LevelGraph {
    fn from_graph(g: &WeeklyGraph) -> Self {
        let n = g.node_count();
        let mut adj = vec![BTreeMap::new(); n];
        for &(u, v, w) in g.edges() {
            adj[u].insert(v, w);
            adj[v].insert(u, w);
        }
        let degrees: Vec<f64> = (0..n).map(|i| g.degree(i)).collect();
        let two_w = 2.0 * g.total_weight();
        LevelGraph {
            adj,
            self_loops: vec![0.0; n],
            degrees,
            two_w,
        }
    }

    fn len(&self) -> usize {
        self.degrees.len()
    }
}

/// Local-move phase. Returns the community of each level-node and whether any
/// node moved at all.
fn one_level(graph: &LevelGraph, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let n = graph.len();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut tot: Vec<f64> = graph.degrees.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut any_move = false;
    loop {
        let mut moved = false;
        for &i in &order {
            let old = comm[i];
            let mut k_to: BTreeMap<usize, f64> = BTreeMap::new();
            k_to.insert(old, 0.0);
            for (&j, &w) in &graph.adj[i] {
                *k_to.entry(comm[j]).or_insert(0.0) += w;
            }
            let d_i = graph.degrees[i];
            tot[old] -= d_i;
            // Gain of joining community c, up to the shared 1/(2W) factor:
            // k_{i,c} - tot_c * d_i / (2W).
            let gain = |c: usize, k: f64| k - tot[c] * d_i / graph.two_w;
            let staying = gain(old, k_to[&old]);

            let mut candidates: Vec<(usize, f64)> = k_to
                .iter()
                .filter(|&(&c, _)| c != old)
                .map(|(&c, &k)| (c, k))
                .collect();
            candidates.shuffle(rng);
            let mut target = old;
            for (c, k) in candidates {
                if gain(c, k) > staying + GAIN_EPS {
                    target = c;
                    break;
                }
            }
            tot[target] += d_i;
            if target != old {
                comm[i] = target;
                moved = true;
                any_move = true;
            }
        }
        if !moved {
            break;
        }
    }
    (comm, any_move)
}

/// Renumbers labels to contiguous ids ordered by first appearance.
fn dense_relabel(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut next = 0usize;
    let dense = labels
        .iter()
        .map(|&c| {
            *map.entry(c).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect();
    (dense, next)
}

/// Collapses each community into a single node, folding intra-community
/// weight into self-loops (as ordered-pair weight).
fn aggregate(graph: &LevelGraph, dense: &[usize], n_comms: usize) -> LevelGraph {
    let mut adj = vec![BTreeMap::new(); n_comms];
    let mut self_loops = vec![0.0; n_comms];
    for i in 0..graph.len() {
        self_loops[dense[i]] += graph.self_loops[i];
    }
    for i in 0..graph.len() {
        for (&j, &w) in &graph.adj[i] {
            if j < i {
                continue; // visit each undirected pair once
            }
            let (ci, cj) = (dense[i], dense[j]);
            if ci == cj {
                self_loops[ci] += 2.0 * w;
            } else {
                *adj[ci].entry(cj).or_insert(0.0) += w;
                *adj[cj].entry(ci).or_insert(0.0) += w;
            }
        }
    }
    let degrees: Vec<f64> = (0..n_comms)
        .map(|c| self_loops[c] + adj[c].values().sum::<f64>())
        .collect();
    LevelGraph {
        adj,
        self_loops,
        degrees,
        two_w: graph.two_w,
    }
}

/// Runs the full coarsening hierarchy and reports the flat partition of the
/// original nodes.
pub fn louvain(g: &WeeklyGraph, seed: u64) -> Result<LouvainResult, CommunityError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = LevelGraph::from_graph(g);
    let mut node_comm: Vec<usize> = (0..g.node_count()).collect();
    let mut levels = 0usize;

    loop {
        let (comm, moved) = one_level(&level, &mut rng);
        if !moved {
            break;
        }
        levels += 1;
        let (dense, n_comms) = dense_relabel(&comm);
        for c in node_comm.iter_mut() {
            *c = dense[*c];
        }
        if n_comms == level.len() {
            break;
        }
        level = aggregate(&level, &dense, n_comms);
    }

    let (labels, _) = dense_relabel(&node_comm);
    let q = modularity(g, &labels)?;
    Ok(LouvainResult {
        labels,
        modularity: q,
        levels,
    })
}
