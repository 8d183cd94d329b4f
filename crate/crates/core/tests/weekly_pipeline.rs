//! End-to-end pass over a synthetic six-week corpus: articles to weekly
//! graphs, graphs to partitions and cross-week chains, and signals joined
//! with a market panel into the feature matrix and its transforms. The
//! corpus plants two persistent topics — one drifting a member per week —
//! plus a one-week disconnected aside and a one-week connected side story,
//! so community counts, chain shapes, and drop diagnostics can be pinned
//! exactly.

use std::collections::BTreeSet;

use chrono::{Days, NaiveDate};

use newsweave::community::louvain::louvain;
use newsweave::embedding::{embed_graph, n2v_entropy, WalkConfig};
use newsweave::feature::{
    assemble_features, correlation_matrix, eigen_first_and_ratio, features_csv, restore,
    sentiment_summary, standardize, WeekSignals, FEATURE_CSV_HEADER, FEATURE_NAMES,
    NETWORK_FEATURES,
};
use newsweave::graph::{avg_clustering_coefficient, build_graph, centrality_report, WeeklyGraph};
use newsweave::ingest::{article_sentiment, ArticleRecord, EntityMention, WeeklyCorpus};
use newsweave::market::{build_panel, IndexSeries};
use newsweave::narrative::{all_chains, CommunityPartition};

const WEEKS: usize = 6;

fn week(i: usize) -> NaiveDate {
    "2021-04-11".parse::<NaiveDate>().unwrap() + Days::new(7 * i as u64)
}

/// Alpha roster of week `w`: a six-name window sliding one name per week.
fn alpha_roster(w: usize) -> Vec<String> {
    (w..w + 6).map(|i| format!("alpha{i:02}")).collect()
}

fn beta_roster() -> Vec<String> {
    (0..5).map(|i| format!("beta{i}")).collect()
}

fn article(id: String, week_end: NaiveDate, mentions: &[(&str, u8)], overall: f64) -> ArticleRecord {
    ArticleRecord {
        article_id: id,
        week_end,
        entities: mentions
            .iter()
            .map(|&(text, rank)| EntityMention {
                text: text.to_string(),
                rank,
                sentiment: overall,
            })
            .collect(),
        summary: String::new(),
        abstract_text: String::new(),
        overall_sentiment: overall,
    }
}

/// One week of articles. Both topics are covered by lead-plus-neighbors
/// pieces dense enough that accumulated pair weights make each roster a
/// clique; a single rank-1 x rank-5 story (weight 1/5) links the topics
/// without pulling them together. Week 2 adds a two-entity aside that stays
/// disconnected; week 3 adds a three-entity side story tied on by another
/// 1/5 link.
fn corpus_week(w: usize) -> WeeklyCorpus {
    let week_end = week(w);
    let alpha = alpha_roster(w);
    let beta = beta_roster();
    let mut articles = Vec::new();
    let overall = |idx: usize| 0.02 * w as f64 + 0.07 * (idx as f64 - 3.0);

    for i in 0..6 {
        let mentions: Vec<(&str, u8)> = (0..4)
            .map(|o| (alpha[(i + o) % 6].as_str(), o as u8 + 1))
            .collect();
        articles.push(article(
            format!("{week_end}-alpha{i}"),
            week_end,
            &mentions,
            overall(articles.len()),
        ));
    }
    for i in 0..5 {
        let mentions: Vec<(&str, u8)> = (0..3)
            .map(|o| (beta[(i + o) % 5].as_str(), o as u8 + 1))
            .collect();
        articles.push(article(
            format!("{week_end}-beta{i}"),
            week_end,
            &mentions,
            overall(articles.len()),
        ));
    }
    articles.push(article(
        format!("{week_end}-bridge"),
        week_end,
        &[(alpha[0].as_str(), 1), ("beta0", 5)],
        overall(articles.len()),
    ));
    if w == 2 {
        articles.push(article(
            format!("{week_end}-aside"),
            week_end,
            &[("gamma0", 1), ("gamma1", 2)],
            overall(articles.len()),
        ));
    }
    if w == 3 {
        articles.push(article(
            format!("{week_end}-side"),
            week_end,
            &[("delta0", 1), ("delta1", 2), ("delta2", 3)],
            overall(articles.len()),
        ));
        articles.push(article(
            format!("{week_end}-side-bridge"),
            week_end,
            &[("delta0", 1), ("beta0", 5)],
            overall(articles.len()),
        ));
    }
    WeeklyCorpus { week_end, articles }
}

fn weekly_graphs() -> Vec<(WeeklyCorpus, WeeklyGraph)> {
    (0..WEEKS)
        .map(|w| {
            let corpus = corpus_week(w);
            let graph = build_graph(&corpus).expect("every fixture week builds");
            (corpus, graph)
        })
        .collect()
}

fn walk_config() -> WalkConfig {
    WalkConfig {
        dims: 4,
        walk_length: 10,
        walks_per_node: 10,
        p: 1.0,
        q: 1.0,
        window: 3,
        negatives: 3,
        epochs: 2,
        learning_rate: 0.025,
    }
}

/// Four synthetic weekly indices covering week(-4) .. week(6): strictly
/// varying so no trailing window is ever flat.
fn index_panel(window: usize) -> Vec<newsweave::market::DislocationWeek> {
    let first = week(0) - Days::new(28);
    let series: Vec<IndexSeries> = (0..4)
        .map(|k| {
            let points: Vec<(NaiveDate, f64)> = (0..11)
                .map(|t| {
                    let date = first + Days::new(7 * t as u64);
                    let value =
                        18.0 + 2.5 * k as f64 + 0.9 * t as f64 + 0.35 * ((t * (k + 2)) % 4) as f64;
                    (date, value)
                })
                .collect();
            IndexSeries::new(&format!("idx{k}"), points).unwrap()
        })
        .collect();
    let series: [IndexSeries; 4] = series.try_into().unwrap();
    build_panel(&series, window).unwrap()
}

#[test]
fn weekly_graphs_follow_the_corpus() {
    for (w, (corpus, g)) in weekly_graphs().iter().enumerate() {
        let alpha = alpha_roster(w);
        let beta = beta_roster();

        // The week-2 aside is dropped with the giant-component reduction;
        // the week-3 side story stays because of its bridge.
        let expected_nodes = if w == 3 { 14 } else { 11 };
        assert_eq!(g.node_count(), expected_nodes, "week {w} node count");
        let expected_ratio = if w == 2 { 11.0 / 13.0 } else { 1.0 };
        assert!(
            (g.giant_ratio() - expected_ratio).abs() < 1e-12,
            "week {w} giant ratio {}",
            g.giant_ratio()
        );
        assert!(g.node_index("gamma0").is_none(), "aside never enters a graph");
        for name in alpha.iter().chain(&beta) {
            assert!(g.node_index(name).is_some(), "week {w} misses {name}");
        }

        // The bridge is the only alpha-beta contact: a lone 1/5 co-mention.
        let u = g.node_index(&alpha[0]).unwrap();
        let v = g.node_index("beta0").unwrap();
        let bridge = g.weight_between(u, v).expect("bridge edge survives");
        assert!((bridge - 0.2).abs() < 1e-15, "bridge weight {bridge}");
        let key = (alpha[0].clone(), "beta0".to_string());
        let sources = g.provenance().get(&key).expect("bridge edge has provenance");
        assert_eq!(
            sources.iter().collect::<Vec<_>>(),
            vec![&format!("{}-bridge", week(w))]
        );

        // Accumulated in-roster weights: neighbors at offset 1 collect
        // 1/2 + 1/6 + 1/12 across the three articles that pair them.
        let a0 = g.node_index(&alpha[0]).unwrap();
        let a1 = g.node_index(&alpha[1]).unwrap();
        let w01 = g.weight_between(a0, a1).unwrap();
        assert!((w01 - 0.75).abs() < 1e-12, "alpha offset-1 weight {w01}");

        let report = centrality_report(g).unwrap();
        assert_eq!(report.eigenvector.len(), g.node_count());
        assert!(report.eigenvector.values().all(|&c| c > 0.0));
        assert_eq!(report.top_degree.len(), 3);
        let (first, ratio) = eigen_first_and_ratio(&report.eigenvector).unwrap();
        assert!(first > 0.0 && ratio >= 1.0);

        let clust = avg_clustering_coefficient(g);
        assert!((0.0..=1.0).contains(&clust), "clustering {clust}");

        let sentiments: Vec<f64> = corpus.articles.iter().map(article_sentiment).collect();
        let (avg, std) = sentiment_summary(&sentiments).unwrap();
        assert!(avg.is_finite() && std > 0.0);
    }
}

#[test]
fn communities_chain_across_weeks() {
    let graphs = weekly_graphs();
    let mut partitions = Vec::new();
    for (w, (_, g)) in graphs.iter().enumerate() {
        let result = louvain(g, 41 + w as u64).unwrap();
        let partition = CommunityPartition::from_labels(g, &result.labels).unwrap();
        let expected = if w == 3 { 3 } else { 2 };
        assert_eq!(partition.len(), expected, "week {w} community count");

        // Both topics come out whole: the roster sets are communities.
        let alpha: BTreeSet<String> = alpha_roster(w).into_iter().collect();
        let beta: BTreeSet<String> = beta_roster().into_iter().collect();
        let alpha_id = partition.community_of(alpha.iter().next().unwrap()).unwrap();
        let beta_id = partition.community_of("beta0").unwrap();
        assert_eq!(partition.communities[alpha_id], alpha, "week {w} alpha");
        assert_eq!(partition.communities[beta_id], beta, "week {w} beta");
        assert!(result.modularity > 0.0);
        partitions.push(partition);
    }

    let chains = all_chains(&partitions).unwrap();
    assert_eq!(chains.len(), 3, "two long chains plus the week-3 side story");

    let member_at = |chain: &newsweave::narrative::NarrativeChain, name: &str| {
        let link = &chain.links[0];
        let p = partitions
            .iter()
            .find(|p| p.week_end == link.week_end)
            .unwrap();
        p.communities[link.community].contains(name)
    };

    let alpha_chain = chains
        .iter()
        .find(|c| member_at(c, "alpha00"))
        .expect("a chain starts at the drifting topic");
    assert_eq!(alpha_chain.start_week, week(0));
    assert_eq!(alpha_chain.links.len(), WEEKS);
    assert_eq!(alpha_chain.broken_at, None);
    for (w, link) in alpha_chain.links.iter().enumerate() {
        let members = &partitions[w].communities[link.community];
        let roster: BTreeSet<String> = alpha_roster(w).into_iter().collect();
        assert_eq!(*members, roster, "week {w} roster");
        if w == 0 {
            assert!(link.overlap.is_empty());
        } else {
            // One name rotates out per week, so five survive the handoff.
            let held: BTreeSet<String> = alpha_roster(w - 1)
                .into_iter()
                .filter(|n| roster.contains(n))
                .collect();
            assert_eq!(link.overlap, held, "week {w} overlap");
            assert_eq!(link.overlap.len(), 5);
        }
    }

    let beta_chain = chains
        .iter()
        .find(|c| member_at(c, "beta0"))
        .expect("a chain starts at the stable topic");
    assert_eq!(beta_chain.links.len(), WEEKS);
    assert_eq!(beta_chain.broken_at, None);
    let beta: BTreeSet<String> = beta_roster().into_iter().collect();
    for link in &beta_chain.links[1..] {
        assert_eq!(link.overlap, beta, "stable topic hands over everything");
    }

    let side_chain = chains
        .iter()
        .find(|c| member_at(c, "delta0"))
        .expect("the side story forms its own chain");
    assert_eq!(side_chain.start_week, week(3));
    assert_eq!(side_chain.links.len(), 1);
    assert_eq!(side_chain.broken_at, Some(week(4)));
}

#[test]
fn features_assemble_standardize_and_restore() {
    let graphs = weekly_graphs();
    let cfg = walk_config();
    let mut signals = Vec::new();
    for (w, (corpus, g)) in graphs.iter().enumerate() {
        let result = louvain(g, 41 + w as u64).unwrap();
        let partition = CommunityPartition::from_labels(g, &result.labels).unwrap();
        let report = centrality_report(g).unwrap();
        let (embedding, _) = embed_graph(g, &cfg, 100 + w as u64).unwrap();
        assert_eq!(embedding.vectors.len(), g.node_count());
        assert!(embedding.vectors.values().all(|v| v.len() == cfg.dims));
        let entropy = n2v_entropy(&embedding).unwrap();
        assert!(entropy.is_finite() && entropy > -1e-12, "entropy {entropy}");

        let sentiments: Vec<f64> = corpus.articles.iter().map(article_sentiment).collect();
        let (avg_sent, std_sent) = sentiment_summary(&sentiments).unwrap();
        signals.push(WeekSignals {
            week_end: corpus.week_end,
            avg_sent,
            std_sent,
            giant_ratio: g.giant_ratio(),
            clust_coeff: avg_clustering_coefficient(g),
            eig: eigen_first_and_ratio(&report.eigenvector),
            comm: partition.len(),
            n2v_entropy: entropy,
        });
    }

    // Two doomed extras: week 6 has a panel row but no successor, week 7 has
    // no panel row at all.
    signals.push(WeekSignals {
        week_end: week(6),
        ..signals[5].clone()
    });
    signals.push(WeekSignals {
        week_end: week(7),
        ..signals[5].clone()
    });

    let panel = index_panel(3);
    let assembly = assemble_features(&signals, &panel, week(0)).unwrap();
    let matrix = &assembly.matrix;
    assert_eq!(matrix.rows.len(), WEEKS);
    for (w, row) in matrix.rows.iter().enumerate() {
        assert_eq!(row.week_end, week(w));
        assert!(row.values.iter().all(|v| v.is_finite()));
    }
    assert_eq!(assembly.dropped.len(), 2);
    assert!(assembly.dropped[0].contains("no next-week panel row"));
    assert!(assembly.dropped[1].contains("no market panel row"));

    let csv = features_csv(matrix);
    assert!(csv.starts_with(FEATURE_CSV_HEADER));
    assert_eq!(csv.lines().count(), 1 + WEEKS);

    // Standardized columns sit at mean 0, population std 1; restoring
    // brings back the raw values.
    let standardized = standardize(matrix).unwrap();
    let stats = standardized.standardization.as_ref().unwrap();
    assert_eq!(stats.len(), FEATURE_NAMES.len());
    for (idx, s) in stats.iter().enumerate() {
        assert_eq!(s.name, FEATURE_NAMES[idx]);
        let col = standardized.column(idx);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / col.len() as f64;
        assert!(mean.abs() < 1e-10, "{} mean {mean}", s.name);
        assert!((var.sqrt() - 1.0).abs() < 1e-10, "{} std {}", s.name, var.sqrt());
    }
    let restored = restore(&standardized).unwrap();
    assert!(restored.standardization.is_none());
    for (orig, back) in matrix.rows.iter().zip(&restored.rows) {
        for (a, b) in orig.values.iter().zip(&back.values) {
            assert!((a - b).abs() < 1e-12, "restore drifted: {a} vs {b}");
        }
    }

    let corr = correlation_matrix(matrix).unwrap();
    assert_eq!(corr.names, NETWORK_FEATURES);
    for i in 0..corr.names.len() {
        assert_eq!(corr.matrix[i][i], 1.0);
        for j in 0..corr.names.len() {
            assert_eq!(corr.matrix[i][j], corr.matrix[j][i]);
            assert!(corr.matrix[i][j].abs() <= 1.0 + 1e-12);
        }
    }
}
