//! The ten pipeline stages. Each stage reads its inputs — raw input files or
//! upstream artifacts — writes its artifacts under the output directory, and
//! returns the relative paths it wrote, in order. Weekly graphs are rebuilt
//! from the ingested corpus where needed; construction is deterministic, so
//! every stage sees byte-identical structures.

use anyhow::{anyhow, Context, Result};
use chrono::NaiveDate;
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use newsweave::community::louvain::louvain;
use newsweave::community::{
    fuzzy_communities, modularity, select_k, stable_article_filter, FuzzyPartition,
};
use newsweave::embedding::{embed_graph, n2v_entropy, NodeEmbedding, TrainStats};
use newsweave::feature::{
    assemble_features, correlation_csv, correlation_matrix, eigen_first_and_ratio, features_csv,
    sentiment_summary, standardize, FeatureError, FeatureMatrix, WeekSignals,
};
use newsweave::graph::{
    avg_clustering_coefficient, build_graph, centrality_csv, centrality_report, to_graphml,
    CentralityReport, GraphError, WeeklyGraph,
};
use newsweave::ingest::{article_sentiment, load_corpus, WeeklyCorpus};
use newsweave::market::{
    build_panel, load_index_csv, panel_csv, DislocationWeek, IndexSeries, INDEX_NAMES,
    ZSCORE_WINDOW,
};
use newsweave::model::{evaluate, rfe, Experiment, ModelError, DEFAULT_K_NEIGHBORS};
use newsweave::narrative::{
    all_chains, chains_csv, jaccard_csv, jaccard_matrix, CommunityPartition, NarrativeChain,
};
use newsweave::report::{
    pca_coordinates, pca_csv, term_frequencies, timeline_csv, top_entities_timeline,
    MIN_TIMELINE_APPEARANCES,
};

use crate::artifacts::{
    read_json, write_atomic, write_json, ChainSummary, GraphWeekSummary, LouvainSummary,
    RegressReport, ReportSummary, WeekCommunities, WeekTopics,
};
use crate::config::PipelineConfig;
use crate::hash::sub_seed;
use crate::stage::Stage;

/// Seeds drawn per week for the model-order sweep.
const CURVE_SEEDS: usize = 10;

pub fn execute(stage: Stage, cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    match stage {
        Stage::Ingest => ingest(cfg, out),
        Stage::Graph => graph(cfg, out),
        Stage::Centrality => centrality(cfg, out),
        Stage::Communities => communities(cfg, out),
        Stage::Narratives => narratives(cfg, out),
        Stage::Embed => embed(cfg, out),
        Stage::Market => market(cfg, out),
        Stage::Features => features(cfg, out),
        Stage::Regress => regress(cfg, out),
        Stage::Report => report(cfg, out),
    }
}

/// Reads the ingested weeks back from `ingest/weeks.ndjson`.
pub fn load_weeks(out: &Path) -> Result<Vec<WeeklyCorpus>> {
    let path = out.join("ingest/weeks.ndjson");
    let text =
        fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line)
                .with_context(|| format!("bad week record on line {} of {}", i + 1, path.display()))
        })
        .collect()
}

/// Builds every week's graph; a week where no co-occurrence survives the
/// weight threshold yields `None` instead of failing the stage.
fn build_graphs(weeks: &[WeeklyCorpus]) -> Result<Vec<Option<WeeklyGraph>>> {
    weeks
        .iter()
        .map(|w| match build_graph(w) {
            Ok(g) => Ok(Some(g)),
            Err(GraphError::DegenerateWeek { .. }) => Ok(None),
            Err(e) => {
                Err(anyhow!(e).context(format!("building the graph of week {}", w.week_end)))
            }
        })
        .collect()
}

fn ingest(cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let load = load_corpus(cfg.corpus()?, &cfg.exclude_weeks)?;
    let mut ndjson = String::new();
    for week in &load.weeks {
        ndjson.push_str(&serde_json::to_string(week)?);
        ndjson.push('\n');
    }
    write_atomic(&out.join("ingest/weeks.ndjson"), ndjson.as_bytes())?;
    let mut diagnostics = load.diagnostics.join("\n");
    if !diagnostics.is_empty() {
        diagnostics.push('\n');
    }
    write_atomic(&out.join("ingest/diagnostics.txt"), diagnostics.as_bytes())?;
    log::info!(
        "ingested {} weeks ({} lines rejected)",
        load.weeks.len(),
        load.diagnostics.len()
    );
    Ok(vec![
        "ingest/weeks.ndjson".to_string(),
        "ingest/diagnostics.txt".to_string(),
    ])
}

fn graph(_cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let weeks = load_weeks(out)?;
    let graphs = build_graphs(&weeks)?;
    let mut artifacts = Vec::new();
    let mut summary = Vec::new();
    for (week, maybe_g) in weeks.iter().zip(&graphs) {
        let Some(g) = maybe_g else { continue };
        let rel = format!("graph/{}.graphml", week.week_end);
        write_atomic(&out.join(&rel), to_graphml(g).as_bytes())?;
        artifacts.push(rel);
        summary.push(GraphWeekSummary {
            week_end: week.week_end.to_string(),
            nodes: g.node_count(),
            edges: g.edges().len(),
            total_entities: g.total_entities(),
            giant_ratio: g.giant_ratio(),
            avg_clustering: avg_clustering_coefficient(g),
        });
    }
    write_json(&out.join("graph/summary.json"), &summary)?;
    artifacts.push("graph/summary.json".to_string());
    Ok(artifacts)
}

fn centrality(_cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let weeks = load_weeks(out)?;
    let graphs = build_graphs(&weeks)?;
    let reports = graphs
        .iter()
        .flatten()
        .map(centrality_report)
        .collect::<Result<Vec<_>, _>>()?;
    write_json(&out.join("centrality/reports.json"), &reports)?;
    write_atomic(
        &out.join("centrality/centrality.csv"),
        centrality_csv(&reports).as_bytes(),
    )?;
    Ok(vec![
        "centrality/reports.json".to_string(),
        "centrality/centrality.csv".to_string(),
    ])
}

fn communities(cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let weeks = load_weeks(out)?;
    let graphs = build_graphs(&weeks)?;
    let stage_seed = sub_seed(cfg.seed, "communities");
    let (k_lo, k_hi) = cfg.k_range;

    let results: Result<Vec<WeekCommunities>> = weeks
        .par_iter()
        .zip(graphs.par_iter())
        .map(|(week, maybe_g)| {
            let week_end = week.week_end.to_string();
            let Some(g) = maybe_g else {
                return Ok(WeekCommunities {
                    week_end,
                    nodes: Vec::new(),
                    skipped: Some("no co-occurrence above the weight threshold".to_string()),
                    k: None,
                    selection: None,
                    fuzzy: None,
                    fuzzy_modularity: None,
                    louvain: None,
                    members: None,
                });
            };
            let week_seed = sub_seed(stage_seed, &week_end);
            let lv = louvain(g, sub_seed(week_seed, "louvain"))?;
            let louvain_summary = LouvainSummary {
                labels: lv.labels,
                modularity: lv.modularity,
                levels: lv.levels,
            };
            let n = g.node_count();
            if n < k_lo + 1 {
                return Ok(WeekCommunities {
                    week_end,
                    nodes: g.nodes().to_vec(),
                    skipped: Some(format!(
                        "{n} nodes cannot support a {k_lo}-component factorization"
                    )),
                    k: None,
                    selection: None,
                    fuzzy: None,
                    fuzzy_modularity: None,
                    louvain: Some(louvain_summary),
                    members: None,
                });
            }
            let curve_seeds: Vec<u64> = (0..CURVE_SEEDS)
                .map(|i| sub_seed(week_seed, &format!("curve-{i}")))
                .collect();
            let selection = select_k(g, cfg.beta, k_lo, k_hi, &curve_seeds)?;
            let fuzzy = fuzzy_communities(g, selection.k, cfg.beta, sub_seed(week_seed, "partition"))?;
            let fuzzy_q = modularity(g, &fuzzy.labels)?;
            let partition = CommunityPartition::from_fuzzy(g, &fuzzy)?;
            let members: Vec<Vec<String>> = partition
                .communities
                .iter()
                .map(|c| c.iter().cloned().collect())
                .collect();
            Ok(WeekCommunities {
                week_end,
                nodes: g.nodes().to_vec(),
                skipped: None,
                k: Some(selection.k),
                selection: Some(selection),
                fuzzy: Some(fuzzy),
                fuzzy_modularity: Some(fuzzy_q),
                louvain: Some(louvain_summary),
                members: Some(members),
            })
        })
        .collect();

    write_json(&out.join("communities/partitions.json"), &results?)?;
    Ok(vec!["communities/partitions.json".to_string()])
}

/// Rebuilds [`CommunityPartition`]s from the stored membership lists.
fn partitions_from_artifact(doc: &[WeekCommunities]) -> Result<Vec<CommunityPartition>> {
    let mut partitions = Vec::new();
    for wc in doc {
        let Some(members) = &wc.members else { continue };
        let week_end: NaiveDate = wc
            .week_end
            .parse()
            .with_context(|| format!("bad week label {:?}", wc.week_end))?;
        let communities: Vec<BTreeSet<String>> = members
            .iter()
            .map(|m| m.iter().cloned().collect())
            .collect();
        partitions.push(CommunityPartition::new(week_end, communities)?);
    }
    Ok(partitions)
}

fn narratives(_cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let doc: Vec<WeekCommunities> = read_json(&out.join("communities/partitions.json"))?;
    let partitions = partitions_from_artifact(&doc)?;
    let chains = all_chains(&partitions)?;
    write_json(&out.join("narratives/chains.json"), &chains)?;
    write_atomic(
        &out.join("narratives/chains.csv"),
        chains_csv(&chains).as_bytes(),
    )?;
    let mut artifacts = vec![
        "narratives/chains.json".to_string(),
        "narratives/chains.csv".to_string(),
    ];
    for pair in partitions.windows(2) {
        if (pair[1].week_end - pair[0].week_end).num_days() != 7 {
            continue;
        }
        let m = jaccard_matrix(&pair[0], &pair[1]);
        let rel = format!("narratives/jaccard-{}.csv", pair[1].week_end);
        write_atomic(&out.join(&rel), jaccard_csv(&m).as_bytes())?;
        artifacts.push(rel);
    }
    Ok(artifacts)
}

fn embed(cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let weeks = load_weeks(out)?;
    let graphs = build_graphs(&weeks)?;
    let stage_seed = sub_seed(cfg.seed, "embed");
    let built: Vec<(String, &WeeklyGraph)> = weeks
        .iter()
        .zip(&graphs)
        .filter_map(|(w, g)| g.as_ref().map(|g| (w.week_end.to_string(), g)))
        .collect();

    let results: Result<Vec<(String, NodeEmbedding, TrainStats, f64)>> = built
        .par_iter()
        .map(|(date, g)| {
            let (embedding, stats) = embed_graph(g, &cfg.walk, sub_seed(stage_seed, date))?;
            let entropy = n2v_entropy(&embedding)
                .map_err(|e| anyhow!(e).context(format!("entropy of week {date}")))?;
            Ok((date.clone(), embedding, stats, entropy))
        })
        .collect();
    let results = results?;

    let mut ndjson = String::new();
    let mut vectors = format!(
        "week_end,node,{}\n",
        (0..cfg.walk.dims)
            .map(|i| format!("v{i}"))
            .collect::<Vec<_>>()
            .join(",")
    );
    let mut entropy_csv = String::from("week_end,n2v_entropy\n");
    let mut stats_by_week: BTreeMap<String, TrainStats> = BTreeMap::new();
    for (date, embedding, stats, entropy) in &results {
        ndjson.push_str(&serde_json::to_string(embedding)?);
        ndjson.push('\n');
        for (node, v) in &embedding.vectors {
            let joined = v
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",");
            writeln!(vectors, "{date},{node},{joined}").expect("string write");
        }
        writeln!(entropy_csv, "{date},{entropy}").expect("string write");
        stats_by_week.insert(date.clone(), stats.clone());
    }
    write_atomic(&out.join("embed/embeddings.ndjson"), ndjson.as_bytes())?;
    write_atomic(&out.join("embed/vectors.csv"), vectors.as_bytes())?;
    write_atomic(&out.join("embed/entropy.csv"), entropy_csv.as_bytes())?;
    write_json(&out.join("embed/train-stats.json"), &stats_by_week)?;
    Ok(vec![
        "embed/embeddings.ndjson".to_string(),
        "embed/vectors.csv".to_string(),
        "embed/entropy.csv".to_string(),
        "embed/train-stats.json".to_string(),
    ])
}

fn market(cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let paths = cfg.indices()?;
    let loaded: Vec<IndexSeries> = paths
        .iter()
        .zip(INDEX_NAMES)
        .map(|(path, name)| {
            load_index_csv(path, name)
                .map_err(|e| anyhow!(e).context(format!("loading {}", path.display())))
        })
        .collect::<Result<_>>()?;
    let series: [IndexSeries; 4] = loaded
        .try_into()
        .unwrap_or_else(|_| unreachable!("exactly four paths were zipped"));
    let panel = build_panel(&series, ZSCORE_WINDOW)?;
    write_json(&out.join("market/panel.json"), &panel)?;
    write_atomic(&out.join("market/panel.csv"), panel_csv(&panel).as_bytes())?;
    Ok(vec![
        "market/panel.json".to_string(),
        "market/panel.csv".to_string(),
    ])
}

fn parse_entropy_csv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut by_week = BTreeMap::new();
    for line in text.lines().skip(1) {
        let (week, value) = line
            .split_once(',')
            .ok_or_else(|| anyhow!("bad entropy row {line:?}"))?;
        by_week.insert(
            week.to_string(),
            value
                .parse::<f64>()
                .with_context(|| format!("bad entropy value in {line:?}"))?,
        );
    }
    Ok(by_week)
}

fn features(cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let weeks = load_weeks(out)?;
    let graphs = build_graphs(&weeks)?;
    let reports: Vec<CentralityReport> = read_json(&out.join("centrality/reports.json"))?;
    let eig_by_week: BTreeMap<NaiveDate, Option<(f64, f64)>> = reports
        .iter()
        .map(|r| (r.week_end, eigen_first_and_ratio(&r.eigenvector)))
        .collect();
    let comms: Vec<WeekCommunities> = read_json(&out.join("communities/partitions.json"))?;
    let comm_by_week: BTreeMap<&str, usize> = comms
        .iter()
        .filter_map(|wc| {
            wc.members
                .as_ref()
                .map(|m| (wc.week_end.as_str(), m.len()))
        })
        .collect();
    let entropy_by_week = parse_entropy_csv(&out.join("embed/entropy.csv"))?;
    let panel: Vec<DislocationWeek> = read_json(&out.join("market/panel.json"))?;

    let mut signals: Vec<WeekSignals> = Vec::new();
    let mut pre_dropped: Vec<String> = Vec::new();
    for (week, maybe_g) in weeks.iter().zip(&graphs) {
        let date = week.week_end;
        let key = date.to_string();
        let Some(g) = maybe_g else {
            pre_dropped.push(format!("{date}: graph below the co-occurrence threshold"));
            continue;
        };
        let Some(&comm) = comm_by_week.get(key.as_str()) else {
            pre_dropped.push(format!("{date}: no community analysis for the week"));
            continue;
        };
        let Some(&entropy) = entropy_by_week.get(&key) else {
            pre_dropped.push(format!("{date}: no embedding entropy for the week"));
            continue;
        };
        let sentiments: Vec<f64> = week.articles.iter().map(article_sentiment).collect();
        let Some((avg_sent, std_sent)) = sentiment_summary(&sentiments) else {
            pre_dropped.push(format!("{date}: no article sentiments"));
            continue;
        };
        signals.push(WeekSignals {
            week_end: date,
            avg_sent,
            std_sent,
            giant_ratio: g.giant_ratio(),
            clust_coeff: avg_clustering_coefficient(g),
            eig: eig_by_week.get(&date).copied().flatten(),
            comm,
            n2v_entropy: entropy,
        });
    }

    let assembly = assemble_features(&signals, &panel, cfg.start_date)?;
    write_json(&out.join("features/matrix.json"), &assembly.matrix)?;
    write_atomic(
        &out.join("features/features.csv"),
        features_csv(&assembly.matrix).as_bytes(),
    )?;
    let mut dropped = pre_dropped;
    dropped.extend(assembly.dropped.iter().cloned());
    let mut dropped_text = dropped.join("\n");
    if !dropped_text.is_empty() {
        dropped_text.push('\n');
    }
    write_atomic(&out.join("features/dropped.txt"), dropped_text.as_bytes())?;
    let mut artifacts = vec![
        "features/matrix.json".to_string(),
        "features/features.csv".to_string(),
        "features/dropped.txt".to_string(),
    ];
    match correlation_matrix(&assembly.matrix) {
        Ok(corr) => {
            write_atomic(
                &out.join("features/correlation.csv"),
                correlation_csv(&corr).as_bytes(),
            )?;
            artifacts.push("features/correlation.csv".to_string());
        }
        Err(FeatureError::TooFewRows { .. }) => {
            log::warn!("too few feature rows for a correlation table; skipping it");
        }
        Err(e) => return Err(e.into()),
    }
    Ok(artifacts)
}

fn model_status(e: &ModelError) -> &'static str {
    match e {
        ModelError::TooFewRows { .. } | ModelError::OneClass | ModelError::TooFewMinority { .. } => {
            "insufficient_data"
        }
        ModelError::AllEliminated { .. } => "no_significant_features",
        _ => "fit_failed",
    }
}

fn run_experiment(
    matrix: &FeatureMatrix,
    experiment: Experiment,
    alpha: f64,
    seed: u64,
) -> RegressReport {
    let mut report = RegressReport {
        experiment: experiment.name().to_string(),
        status: String::new(),
        detail: String::new(),
        balanced_rows: None,
        eliminated: Vec::new(),
        model: None,
        evaluation: None,
    };
    let y: Vec<u8> = matrix
        .rows
        .iter()
        .map(|r| {
            if experiment.targets_next_week() {
                r.label_next
            } else {
                r.label
            }
        })
        .collect();

    // Standardized columns keep the solver and the oversampler on one scale.
    let standardized = match standardize(matrix) {
        Ok(m) => m,
        Err(e) => {
            report.status = "insufficient_data".to_string();
            report.detail = e.to_string();
            return report;
        }
    };
    let names: Vec<String> = experiment
        .candidate_features()
        .iter()
        .map(|s| s.to_string())
        .collect();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| FeatureMatrix::feature_index(n).expect("candidates are known columns"))
        .collect();
    let x: Vec<Vec<f64>> = standardized
        .rows
        .iter()
        .map(|r| idx.iter().map(|&i| r.values[i]).collect())
        .collect();

    match rfe(&x, &y, &names, alpha, DEFAULT_K_NEIGHBORS, seed) {
        Ok(outcome) => {
            let surviving: Vec<String> = outcome.model.slope_names().to_vec();
            let keep: Vec<usize> = surviving
                .iter()
                .map(|n| {
                    names
                        .iter()
                        .position(|m| m == n)
                        .expect("survivors came from the candidate list")
                })
                .collect();
            let eval_x: Vec<Vec<f64>> = x
                .iter()
                .map(|row| keep.iter().map(|&i| row[i]).collect())
                .collect();
            report.balanced_rows = Some(outcome.balanced_rows);
            report.eliminated = outcome.trace;
            match evaluate(&outcome.model, &surviving, &eval_x, &y) {
                Ok(evaluation) => {
                    report.status = "fitted".to_string();
                    report.detail = format!("{} features survive elimination", surviving.len());
                    report.model = Some(outcome.model);
                    report.evaluation = Some(evaluation);
                }
                Err(e) => {
                    report.status = "fit_failed".to_string();
                    report.detail = format!("evaluation failed: {e}");
                    report.model = Some(outcome.model);
                }
            }
        }
        Err(e) => {
            report.status = model_status(&e).to_string();
            report.detail = e.to_string();
            if let ModelError::AllEliminated { trace } = e {
                report.eliminated = trace;
            }
        }
    }
    report
}

fn regress(cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let matrix: FeatureMatrix = read_json(&out.join("features/matrix.json"))?;
    let stage_seed = sub_seed(cfg.seed, "regress");
    let mut artifacts = Vec::new();
    for &experiment in &cfg.experiments {
        let report = run_experiment(
            &matrix,
            experiment,
            cfg.alpha,
            sub_seed(stage_seed, experiment.name()),
        );
        log::info!("experiment {}: {}", report.experiment, report.status);
        let rel = format!("regress/{}.json", experiment.name());
        write_json(&out.join(&rel), &report)?;
        artifacts.push(rel);
    }
    Ok(artifacts)
}

fn report(cfg: &PipelineConfig, out: &Path) -> Result<Vec<String>> {
    let weeks = load_weeks(out)?;
    let graphs = build_graphs(&weeks)?;
    let reports: Vec<CentralityReport> = read_json(&out.join("centrality/reports.json"))?;
    let comms: Vec<WeekCommunities> = read_json(&out.join("communities/partitions.json"))?;
    let graph_summary: Vec<GraphWeekSummary> = read_json(&out.join("graph/summary.json"))?;
    let chains: Vec<NarrativeChain> = read_json(&out.join("narratives/chains.json"))?;
    let matrix: FeatureMatrix = read_json(&out.join("features/matrix.json"))?;
    let dropped_lines = fs::read_to_string(out.join("features/dropped.txt"))
        .map(|t| t.lines().count())
        .unwrap_or(0);
    let entropy_by_week = parse_entropy_csv(&out.join("embed/entropy.csv"))?;
    let mut artifacts = Vec::new();

    // Timeline of top central entities, annotated with node sentiment.
    let sentiment_by_week: BTreeMap<NaiveDate, BTreeMap<String, f64>> = weeks
        .iter()
        .zip(&graphs)
        .filter_map(|(w, g)| g.as_ref().map(|g| (w.week_end, g)))
        .map(|(date, g)| {
            let by_node = g
                .nodes()
                .iter()
                .cloned()
                .zip(g.sentiments().iter().copied())
                .collect();
            (date, by_node)
        })
        .collect();
    let timeline_weeks: Vec<(CentralityReport, BTreeMap<String, f64>)> = reports
        .iter()
        .map(|r| {
            (
                r.clone(),
                sentiment_by_week.get(&r.week_end).cloned().unwrap_or_default(),
            )
        })
        .collect();
    let (timeline_text, timeline_entries) = if timeline_weeks.len() >= MIN_TIMELINE_APPEARANCES {
        let series = top_entities_timeline(&timeline_weeks, MIN_TIMELINE_APPEARANCES)?;
        let entries = series.entries.len();
        (timeline_csv(&series), entries)
    } else {
        // Too few weeks for the appearance filter to mean anything.
        ("week_end,metric,slot,entity,value,sentiment\n".to_string(), 0)
    };
    write_atomic(&out.join("report/timeline.csv"), timeline_text.as_bytes())?;
    artifacts.push("report/timeline.csv".to_string());

    // One row per built week joining the structural series.
    let comm_by_week: BTreeMap<&str, &WeekCommunities> =
        comms.iter().map(|wc| (wc.week_end.as_str(), wc)).collect();
    let mut network = String::from(
        "week_end,nodes,edges,total_entities,giant_ratio,avg_clustering,\
         louvain_modularity,k,fuzzy_modularity,n2v_entropy\n",
    );
    for row in &graph_summary {
        let wc = comm_by_week.get(row.week_end.as_str());
        let louvain_q = wc
            .and_then(|wc| wc.louvain.as_ref())
            .map(|l| l.modularity.to_string())
            .unwrap_or_default();
        let k = wc
            .and_then(|wc| wc.k)
            .map(|k| k.to_string())
            .unwrap_or_default();
        let fuzzy_q = wc
            .and_then(|wc| wc.fuzzy_modularity)
            .map(|q| q.to_string())
            .unwrap_or_default();
        let entropy = entropy_by_week
            .get(&row.week_end)
            .map(|e| e.to_string())
            .unwrap_or_default();
        writeln!(
            network,
            "{},{},{},{},{},{},{},{},{},{}",
            row.week_end,
            row.nodes,
            row.edges,
            row.total_entities,
            row.giant_ratio,
            row.avg_clustering,
            louvain_q,
            k,
            fuzzy_q,
            entropy
        )
        .expect("string write");
    }
    write_atomic(&out.join("report/network-series.csv"), network.as_bytes())?;
    artifacts.push("report/network-series.csv".to_string());

    // Model-order evidence: every seed's modularity curve.
    let mut q_curves = String::from("week_end,seed,k,q,knee,degenerate\n");
    for wc in &comms {
        let Some(selection) = &wc.selection else {
            continue;
        };
        for curve in &selection.curves {
            for &(k, q) in &curve.q_by_k {
                writeln!(
                    q_curves,
                    "{},{},{},{},{},{}",
                    wc.week_end, curve.seed, k, q, curve.knee, curve.degenerate
                )
                .expect("string write");
            }
        }
    }
    write_atomic(&out.join("report/q-curves.csv"), q_curves.as_bytes())?;
    artifacts.push("report/q-curves.csv".to_string());

    // Two-component projections of each week's embedding.
    let embeddings_text = fs::read_to_string(out.join("embed/embeddings.ndjson"))
        .context("cannot read embed/embeddings.ndjson")?;
    let mut pca_variance = String::from("week_end,pc1_explained,pc2_explained\n");
    for line in embeddings_text.lines() {
        let embedding: NodeEmbedding = serde_json::from_str(line)?;
        match pca_coordinates(&embedding.vectors) {
            Ok(projection) => {
                let rel = format!("report/pca/{}.csv", embedding.week_end);
                write_atomic(&out.join(&rel), pca_csv(&projection).as_bytes())?;
                artifacts.push(rel);
                writeln!(
                    pca_variance,
                    "{},{},{}",
                    embedding.week_end, projection.explained[0], projection.explained[1]
                )
                .expect("string write");
            }
            Err(_) => continue, // too few nodes for a 2-D projection
        }
    }
    write_atomic(&out.join("report/pca-variance.csv"), pca_variance.as_bytes())?;
    artifacts.push("report/pca-variance.csv".to_string());

    // Weekly topics over the stably attributed articles.
    let fuzzy_by_week: BTreeMap<&str, &FuzzyPartition> = comms
        .iter()
        .filter_map(|wc| wc.fuzzy.as_ref().map(|f| (wc.week_end.as_str(), f)))
        .collect();
    let mut topics = Vec::new();
    for (week, maybe_g) in weeks.iter().zip(&graphs) {
        let Some(g) = maybe_g else { continue };
        let key = week.week_end.to_string();
        let Some(fuzzy) = fuzzy_by_week.get(key.as_str()) else {
            continue;
        };
        let kept = stable_article_filter(week, g, fuzzy)?;
        let kept_set: BTreeSet<&str> = kept.iter().map(String::as_str).collect();
        let texts: Vec<&str> = week
            .articles
            .iter()
            .filter(|a| kept_set.contains(a.article_id.as_str()))
            .flat_map(|a| [a.summary.as_str(), a.abstract_text.as_str()])
            .collect();
        topics.push(WeekTopics {
            week_end: key,
            kept_articles: kept,
            terms: term_frequencies(texts),
        });
    }
    write_json(&out.join("report/topics.json"), &topics)?;
    artifacts.push("report/topics.json".to_string());

    // Roll-up of the whole run.
    let mut experiments = BTreeMap::new();
    for &experiment in &cfg.experiments {
        let rel = format!("regress/{}.json", experiment.name());
        let report: RegressReport = read_json(&out.join(&rel))?;
        let survivors = report
            .model
            .as_ref()
            .map(|m| m.slope_names().to_vec())
            .unwrap_or_default();
        experiments.insert(
            report.experiment.clone(),
            crate::artifacts::ExperimentSummary {
                status: report.status.clone(),
                detail: report.detail.clone(),
                selected_features: survivors,
            },
        );
    }
    let longest_chain = chains
        .iter()
        .max_by_key(|c| (c.length(), std::cmp::Reverse(c.start_week)))
        .map(|c| ChainSummary {
            start_week: c.start_week.to_string(),
            length: c.length(),
            broken_at: c.broken_at.map(|d| d.to_string()),
        });
    let summary = ReportSummary {
        weeks_ingested: weeks.len(),
        weeks_built: graphs.iter().flatten().count(),
        articles: weeks.iter().map(|w| w.articles.len()).sum(),
        feature_rows: matrix.rows.len(),
        dropped_weeks: dropped_lines,
        chains: chains.len(),
        longest_chain,
        experiments,
        timeline_entries,
    };
    write_json(&out.join("report/summary.json"), &summary)?;
    artifacts.push("report/summary.json".to_string());
    Ok(artifacts)
}
