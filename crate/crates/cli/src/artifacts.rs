//! Artifact I/O helpers and the JSON document shapes the stages write.
//! Everything goes through [`write_atomic`] so a crash never leaves a
//! half-written file behind, and no artifact embeds a timestamp: rerunning a
//! stage under the same configuration reproduces the bytes exactly.

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use newsweave::community::{FuzzyPartition, KSelection};
use newsweave::model::{EvalReport, LogitModel};

/// Writes `bytes` to `path` via a temporary sibling file and a rename, so
/// readers only ever observe complete artifacts.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .with_context(|| format!("{} has no parent directory", path.display()))?;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create temp file in {}", dir.display()))?;
    std::io::Write::write_all(&mut tmp, bytes)
        .with_context(|| format!("cannot write {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("cannot finalize {}", path.display()))?;
    Ok(())
}

/// Pretty-printed JSON with a trailing newline, written atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .with_context(|| format!("cannot serialize {}", path.display()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

/// One row of `graph/summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphWeekSummary {
    pub week_end: String,
    pub nodes: usize,
    pub edges: usize,
    pub total_entities: usize,
    pub giant_ratio: f64,
    pub avg_clustering: f64,
}

/// Serialized flat view of a Louvain run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LouvainSummary {
    pub labels: Vec<usize>,
    pub modularity: f64,
    pub levels: usize,
}

/// One week of `communities/partitions.json`. A week that could not be
/// fully analyzed carries a `skipped` reason; the other fields are filled in
/// as far as the analysis got.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeekCommunities {
    pub week_end: String,
    pub nodes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<KSelection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuzzy: Option<FuzzyPartition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuzzy_modularity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub louvain: Option<LouvainSummary>,
    /// Hard community membership by entity name, one inner list per
    /// community, each sorted; communities ordered by size descending then
    /// first member.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<Vec<String>>>,
}

/// One `regress/<experiment>.json` document. `status` is always present;
/// the optional blocks fill in as far as the fit got.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressReport {
    pub experiment: String,
    /// "fitted", "insufficient_data", "no_significant_features", or
    /// "fit_failed".
    pub status: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balanced_rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eliminated: Vec<newsweave::model::Elimination>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<LogitModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvalReport>,
}

/// One week of `report/topics.json`: the stably attributed articles and the
/// most frequent terms of their summaries and abstracts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeekTopics {
    pub week_end: String,
    pub kept_articles: Vec<String>,
    pub terms: Vec<(String, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSummary {
    pub start_week: String,
    pub length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub broken_at: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub status: String,
    pub detail: String,
    pub selected_features: Vec<String>,
}

/// The `report/summary.json` roll-up of one full run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportSummary {
    pub weeks_ingested: usize,
    pub weeks_built: usize,
    pub articles: usize,
    pub feature_rows: usize,
    pub dropped_weeks: usize,
    pub chains: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longest_chain: Option<ChainSummary>,
    pub experiments: std::collections::BTreeMap<String, ExperimentSummary>,
    pub timeline_entries: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_writes_create_parents_and_replace() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        // No leftover temp files.
        let names: Vec<_> = fs::read_dir(path.parent().unwrap())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names, ["out.txt"]);
    }

    #[test]
    fn json_round_trip_ends_with_newline() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("doc.json");
        let doc = GraphWeekSummary {
            week_end: "2021-01-10".to_string(),
            nodes: 5,
            edges: 7,
            total_entities: 9,
            giant_ratio: 5.0 / 9.0,
            avg_clustering: 0.25,
        };
        write_json(&path, &doc).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.ends_with('\n'));
        let back: GraphWeekSummary = read_json(&path).unwrap();
        assert_eq!(back.nodes, 5);
        assert_eq!(back.week_end, doc.week_end);
    }
}
