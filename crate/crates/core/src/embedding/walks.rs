//! Second-order biased random walks over a weekly graph.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::WeeklyGraph;
use crate::rng::sub_seed;

use super::{EmbeddingError, WalkConfig};

/// Generates `walks_per_node` walks of `walk_length` nodes from every node.
///
/// Each start node gets its own generator seeded from (seed, node index), so
/// walks for a node are reproducible regardless of how many other nodes the
/// graph holds. The first step is drawn proportionally to edge weights; later
/// steps reweight each candidate `z` by the return/in-out parameters given the
/// previous node `t`: weight/p when z == t, weight when z neighbors t, and
/// weight/q otherwise.
pub fn generate_walks(
    g: &WeeklyGraph,
    cfg: &WalkConfig,
    seed: u64,
) -> Result<Vec<Vec<usize>>, EmbeddingError> {
    cfg.validate()?;
    if g.node_count() == 0 {
        return Err(EmbeddingError::EmptyInput(
            "cannot walk an empty graph".to_string(),
        ));
    }
    debug_assert!(
        g.is_connected(),
        "walks expect a single connected component"
    );
    let mut walks = Vec::with_capacity(g.node_count() * cfg.walks_per_node);
    for node in 0..g.node_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, node as u64));
        for _ in 0..cfg.walks_per_node {
            walks.push(single_walk(g, cfg, node, &mut rng));
        }
    }
    Ok(walks)
}

fn single_walk(
    g: &WeeklyGraph,
    cfg: &WalkConfig,
    start: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    let mut weights: Vec<f64> = Vec::new();
    while walk.len() < cfg.walk_length {
        let current = *walk.last().unwrap();
        let neighbors = g.neighbors(current);
        if neighbors.is_empty() {
            break;
        }
        weights.clear();
        if walk.len() == 1 {
            weights.extend(neighbors.iter().map(|&(_, w)| w));
        } else {
            let previous = walk[walk.len() - 2];
            weights.extend(neighbors.iter().map(|&(z, w)| {
                if z == previous {
                    w / cfg.p
                } else if g.has_edge(previous, z) {
                    w
                } else {
                    w / cfg.q
                }
            }));
        }
        debug_assert!({
            let total: f64 = weights.iter().sum();
            let prob_sum: f64 = weights.iter().map(|w| w / total).sum();
            (prob_sum - 1.0).abs() < 1e-9
        });
        let next = neighbors[weighted_choice(&weights, rng)].0;
        walk.push(next);
    }
    walk
}

/// Draws an index with probability proportional to its weight.
fn weighted_choice(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0 && total.is_finite());
    let mut remaining = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        remaining -= w;
        if remaining <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date() -> chrono::NaiveDate {
        "2021-01-10".parse().unwrap()
    }

    #[test]
    fn walks_have_the_configured_shape() {
        let g = WeeklyGraph::from_weighted_edges(
            date(),
            &[("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)],
        )
        .unwrap();
        let mut cfg = WalkConfig::default();
        cfg.walk_length = 10;
        cfg.walks_per_node = 3;
        let walks = generate_walks(&g, &cfg, 7).unwrap();
        assert_eq!(walks.len(), 3 * 3);
        for (i, walk) in walks.iter().enumerate() {
            assert_eq!(walk.len(), 10);
            assert_eq!(walk[0], i / 3, "walk {i} starts at its source node");
            for step in walk.windows(2) {
                assert!(g.has_edge(step[0], step[1]), "steps follow edges");
            }
        }
    }

    #[test]
    fn a_single_edge_forces_alternation() {
        let g = WeeklyGraph::from_weighted_edges(date(), &[("a", "b", 2.0)]).unwrap();
        let mut cfg = WalkConfig::default();
        cfg.walk_length = 8;
        cfg.walks_per_node = 2;
        let walks = generate_walks(&g, &cfg, 1).unwrap();
        for walk in walks {
            for (i, &node) in walk.iter().enumerate() {
                assert_eq!(node, (walk[0] + i) % 2);
            }
        }
    }

    #[test]
    fn same_seed_reproduces_walks_exactly() {
        let g = WeeklyGraph::from_weighted_edges(
            date(),
            &[
                ("a", "b", 1.0),
                ("b", "c", 0.5),
                ("c", "d", 2.0),
                ("d", "a", 1.5),
                ("a", "c", 0.25),
            ],
        )
        .unwrap();
        let cfg = WalkConfig::default();
        let w1 = generate_walks(&g, &cfg, 99).unwrap();
        let w2 = generate_walks(&g, &cfg, 99).unwrap();
        assert_eq!(w1, w2);
        let w3 = generate_walks(&g, &cfg, 100).unwrap();
        assert_ne!(w1, w3);
    }

    #[test]
    fn first_order_step_frequencies_match_edge_weights() {
        // Star with unequal weights: from the hub, each spoke should be
        // visited proportionally to its edge weight.
        let g = WeeklyGraph::from_weighted_edges(
            date(),
            &[("hub", "x", 1.0), ("hub", "y", 2.0), ("hub", "z", 5.0)],
        )
        .unwrap();
        let hub = g.node_index("hub").unwrap();
        let mut cfg = WalkConfig::default();
        cfg.walk_length = 2;
        cfg.walks_per_node = 40_000;
        let walks = generate_walks(&g, &cfg, 5).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for walk in &walks {
            if walk[0] == hub {
                *counts.entry(walk[1]).or_insert(0usize) += 1;
            }
        }
        let total: usize = counts.values().sum();
        assert_eq!(total, 40_000);
        for (name, expected) in [("x", 1.0 / 8.0), ("y", 2.0 / 8.0), ("z", 5.0 / 8.0)] {
            let idx = g.node_index(name).unwrap();
            let freq = counts[&idx] as f64 / total as f64;
            assert!(
                (freq - expected).abs() < 0.01,
                "{name}: {freq} vs {expected}"
            );
        }
    }

    #[test]
    fn return_and_inout_parameters_bias_the_second_step() {
        // Path a - b - c with unit weights. Standing at b having arrived from
        // a, with p = 4 and q = 0.5 the unnormalized weights are 1/4 (back to
        // a) and 2 (on to c), i.e. probabilities 1/9 and 8/9.
        let g =
            WeeklyGraph::from_weighted_edges(date(), &[("a", "b", 1.0), ("b", "c", 1.0)]).unwrap();
        let a = g.node_index("a").unwrap();
        let b = g.node_index("b").unwrap();
        let c = g.node_index("c").unwrap();
        let mut cfg = WalkConfig::default();
        cfg.p = 4.0;
        cfg.q = 0.5;
        cfg.walk_length = 3;
        cfg.walks_per_node = 60_000;
        let walks = generate_walks(&g, &cfg, 12).unwrap();
        let mut back = 0usize;
        let mut forward = 0usize;
        for walk in &walks {
            if walk[0] == a && walk[1] == b {
                match walk[2] {
                    z if z == a => back += 1,
                    z if z == c => forward += 1,
                    _ => unreachable!(),
                }
            }
        }
        let total = (back + forward) as f64;
        assert!(total > 10_000.0, "enough a->b transitions observed");
        let p_back = back as f64 / total;
        assert!((p_back - 1.0 / 9.0).abs() < 0.01, "return prob {p_back}");
        assert!(
            (forward as f64 / total - 8.0 / 9.0).abs() < 0.01,
            "in-out prob"
        );
    }

    #[test]
    fn unbiased_transition_frequencies_match_weights_per_edge() {
        // With p = q = 1 the walk is first-order: from any node the next hop
        // follows edge weights regardless of history. Checked against a long
        // single walk on a weighted 5-node graph.
        let g = WeeklyGraph::from_weighted_edges(
            date(),
            &[
                ("a", "b", 1.0),
                ("a", "c", 2.0),
                ("b", "c", 1.0),
                ("c", "d", 3.0),
                ("d", "e", 1.0),
                ("e", "a", 2.0),
            ],
        )
        .unwrap();
        let mut cfg = WalkConfig::default();
        cfg.walk_length = 100_000;
        cfg.walks_per_node = 1;
        let walks = generate_walks(&g, &cfg, 3).unwrap();
        let walk = &walks[0];

        // Empirical conditional frequencies out of each node.
        let n = g.node_count();
        let mut counts = vec![vec![0usize; n]; n];
        for step in walk.windows(2) {
            counts[step[0]][step[1]] += 1;
        }
        for u in 0..n {
            let out: usize = counts[u].iter().sum();
            if out == 0 {
                continue;
            }
            let degree: f64 = g.neighbors(u).iter().map(|&(_, w)| w).sum();
            for &(v, w) in g.neighbors(u) {
                let expected = w / degree;
                let observed = counts[u][v] as f64 / out as f64;
                assert!(
                    (observed - expected).abs() < 0.02,
                    "transition {u}->{v}: observed {observed}, expected {expected}"
                );
            }
        }
    }
}
