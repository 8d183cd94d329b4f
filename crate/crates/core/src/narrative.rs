//! Cross-week narrative tracking: Jaccard similarity between consecutive
//! weeks' communities, mutual-maximum matching, chain assembly, and
//! keyword-anchored community lookup.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::FuzzyPartition;
use crate::graph::WeeklyGraph;
use crate::ingest::normalize_entity;

#[derive(Debug, Error)]
pub enum NarrativeError {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("weeks must be strictly ascending: {0}")]
    WeekOrder(String),
    #[error("week {week} has no community {community}")]
    UnknownCommunity { week: NaiveDate, community: usize },
    #[error("no partition for week {0}")]
    UnknownWeek(NaiveDate),
}

/// A hard community structure for one week, as node-name sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    pub week_end: NaiveDate,
    /// Index = community id; members sorted, pairwise disjoint, non-empty.
    pub communities: Vec<BTreeSet<String>>,
}

impl CommunityPartition {
    pub fn new(
        week_end: NaiveDate,
        communities: Vec<BTreeSet<String>>,
    ) -> Result<Self, NarrativeError> {
        if communities.is_empty() {
            return Err(NarrativeError::InvalidPartition(format!(
                "week {week_end} has no communities"
            )));
        }
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for (id, members) in communities.iter().enumerate() {
            if members.is_empty() {
                return Err(NarrativeError::InvalidPartition(format!(
                    "community {id} of week {week_end} is empty"
                )));
            }
            for node in members {
                if !seen.insert(node) {
                    return Err(NarrativeError::InvalidPartition(format!(
                        "node {node:?} appears in multiple communities of week {week_end}"
                    )));
                }
            }
        }
        Ok(CommunityPartition {
            week_end,
            communities,
        })
    }

    /// Groups a graph's nodes by the hard labels of a fuzzy partition.
    pub fn from_fuzzy(g: &WeeklyGraph, partition: &FuzzyPartition) -> Result<Self, NarrativeError> {
        Self::from_labels(g, &partition.labels)
    }

    /// Groups a graph's nodes by an arbitrary label vector.
    pub fn from_labels(g: &WeeklyGraph, labels: &[usize]) -> Result<Self, NarrativeError> {
        if labels.len() != g.node_count() {
            return Err(NarrativeError::InvalidPartition(format!(
                "{} labels for {} nodes",
                labels.len(),
                g.node_count()
            )));
        }
        let n_comms = labels.iter().max().map_or(0, |&m| m + 1);
        let mut communities = vec![BTreeSet::new(); n_comms];
        for (i, &c) in labels.iter().enumerate() {
            communities[c].insert(g.node_name(i).to_string());
        }
        Self::new(g.week_end(), communities)
    }

    pub fn community_of(&self, node: &str) -> Option<usize> {
        self.communities.iter().position(|c| c.contains(node))
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }
}

/// Jaccard similarities between the communities of two (consecutive) weeks.
/// Entries whose intersection holds at most one node are forced to zero: a
/// single shared entity is not evidence of continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaccardMatrix {
    pub week_pair: (NaiveDate, NaiveDate),
    /// Rows = communities of the first week, columns = the second week's.
    pub matrix: Vec<Vec<f64>>,
}

/// Pairwise Jaccard between two weeks' communities.
pub fn jaccard_matrix(p1: &CommunityPartition, p2: &CommunityPartition) -> JaccardMatrix {
    let matrix = p1
        .communities
        .iter()
        .map(|a| {
            p2.communities
                .iter()
                .map(|b| {
                    let intersection = a.intersection(b).count();
                    if intersection <= 1 {
                        0.0
                    } else {
                        intersection as f64 / a.union(b).count() as f64
                    }
                })
                .collect()
        })
        .collect();
    JaccardMatrix {
        week_pair: (p1.week_end, p2.week_end),
        matrix,
    }
}

/// Mutual-maximum matching: (i, j) is matched iff entry (i, j) is positive
/// and is simultaneously the unique maximum of row i and of column j. The
/// result is an injective partial mapping; ties yield no match.
pub fn match_communities(m: &JaccardMatrix) -> BTreeMap<usize, usize> {
    let rows = m.matrix.len();
    let cols = m.matrix.first().map_or(0, Vec::len);
    let mut out = BTreeMap::new();
    for i in 0..rows {
        for j in 0..cols {
            let v = m.matrix[i][j];
            if v <= 0.0 {
                continue;
            }
            let unique_row_max = (0..cols).all(|j2| j2 == j || m.matrix[i][j2] < v);
            let unique_col_max = (0..rows).all(|i2| i2 == i || m.matrix[i2][j] < v);
            if unique_row_max && unique_col_max {
                out.insert(i, j);
            }
        }
    }
    out
}

/// One week of a narrative chain. The first link of a chain has an empty
/// overlap (there is no previous week to overlap with); every later link
/// records the nodes shared with the previous link's community, which the
/// matching rule guarantees number at least two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub week_end: NaiveDate,
    pub community: usize,
    pub overlap: BTreeSet<String>,
}

/// A maximal run of matched communities over consecutive weeks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeChain {
    pub start_week: NaiveDate,
    pub links: Vec<ChainLink>,
    /// The first week with no continuation: the week after the last link.
    /// Absent when the chain runs through the final covered week.
    pub broken_at: Option<NaiveDate>,
}

impl NarrativeChain {
    /// Number of weeks covered.
    pub fn length(&self) -> usize {
        self.links.len()
    }
}

fn validate_week_order(partitions: &[CommunityPartition]) -> Result<(), NarrativeError> {
    for pair in partitions.windows(2) {
        if pair[1].week_end <= pair[0].week_end {
            return Err(NarrativeError::WeekOrder(format!(
                "{} does not follow {}",
                pair[1].week_end, pair[0].week_end
            )));
        }
    }
    Ok(())
}

/// Matchings between each consecutive pair of partitions; `None` where the
/// weeks are not exactly seven days apart.
fn consecutive_matchings(partitions: &[CommunityPartition]) -> Vec<Option<BTreeMap<usize, usize>>> {
    partitions
        .windows(2)
        .map(|pair| {
            if pair[1].week_end == pair[0].week_end + Days::new(7) {
                Some(match_communities(&jaccard_matrix(&pair[0], &pair[1])))
            } else {
                None
            }
        })
        .collect()
}

fn follow_chain(
    partitions: &[CommunityPartition],
    matchings: &[Option<BTreeMap<usize, usize>>],
    start_idx: usize,
    start_community: usize,
) -> NarrativeChain {
    let start_week = partitions[start_idx].week_end;
    let mut links = vec![ChainLink {
        week_end: start_week,
        community: start_community,
        overlap: BTreeSet::new(),
    }];
    let mut idx = start_idx;
    let mut community = start_community;
    loop {
        if idx + 1 >= partitions.len() {
            return NarrativeChain {
                start_week,
                links,
                broken_at: None,
            };
        }
        let next = match &matchings[idx] {
            Some(map) => map.get(&community).copied(),
            None => None, // calendar gap: no matching exists
        };
        let Some(next_community) = next else {
            return NarrativeChain {
                start_week,
                links,
                broken_at: Some(partitions[idx].week_end + Days::new(7)),
            };
        };
        let overlap: BTreeSet<String> = partitions[idx].communities[community]
            .intersection(&partitions[idx + 1].communities[next_community])
            .cloned()
            .collect();
        idx += 1;
        community = next_community;
        links.push(ChainLink {
            week_end: partitions[idx].week_end,
            community,
            overlap,
        });
    }
}

/// Follows the chain that starts at (`start_week`, `start_community`) until
/// the matching runs out or the covered span ends.
pub fn build_chains(
    partitions: &[CommunityPartition],
    start_week: NaiveDate,
    start_community: usize,
) -> Result<NarrativeChain, NarrativeError> {
    validate_week_order(partitions)?;
    let idx = partitions
        .iter()
        .position(|p| p.week_end == start_week)
        .ok_or(NarrativeError::UnknownWeek(start_week))?;
    if start_community >= partitions[idx].len() {
        return Err(NarrativeError::UnknownCommunity {
            week: start_week,
            community: start_community,
        });
    }
    let matchings = consecutive_matchings(partitions);
    Ok(follow_chain(partitions, &matchings, idx, start_community))
}

/// Every maximal chain: one chain per community that is not the continuation
/// of an earlier community. Each (week, community) pair appears in exactly
/// one chain.
pub fn all_chains(partitions: &[CommunityPartition]) -> Result<Vec<NarrativeChain>, NarrativeError> {
    validate_week_order(partitions)?;
    let matchings = consecutive_matchings(partitions);
    let mut chains = Vec::new();
    for (idx, partition) in partitions.iter().enumerate() {
        let continued: BTreeSet<usize> = if idx == 0 {
            BTreeSet::new()
        } else {
            match &matchings[idx - 1] {
                Some(map) => map.values().copied().collect(),
                None => BTreeSet::new(),
            }
        };
        for community in 0..partition.len() {
            if !continued.contains(&community) {
                chains.push(follow_chain(partitions, &matchings, idx, community));
            }
        }
    }
    Ok(chains)
}

/// One week's sighting of a tracked keyword.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordEntry {
    pub week_end: NaiveDate,
    pub community: usize,
    pub members: BTreeSet<String>,
}

/// The community containing `keyword` (normalized the same way entities are)
/// in each week where it appears as a node.
pub fn track_keyword(partitions: &[CommunityPartition], keyword: &str) -> Vec<KeywordEntry> {
    let needle = normalize_entity(keyword);
    partitions
        .iter()
        .filter_map(|p| {
            p.community_of(&needle).map(|community| KeywordEntry {
                week_end: p.week_end,
                community,
                members: p.communities[community].clone(),
            })
        })
        .collect()
}

/// CSV rendering of chains: `start_week,week,community,overlap_nodes`, one
/// row per link, overlap members joined by `|`.
pub fn chains_csv(chains: &[NarrativeChain]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["start_week", "week", "community", "overlap_nodes"])
        .expect("writing to memory cannot fail");
    for chain in chains {
        for link in &chain.links {
            let overlap: Vec<&str> = link.overlap.iter().map(String::as_str).collect();
            writer
                .write_record([
                    chain.start_week.to_string(),
                    link.week_end.to_string(),
                    link.community.to_string(),
                    overlap.join("|"),
                ])
                .expect("writing to memory cannot fail");
        }
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

/// CSV rendering of one Jaccard matrix as a grid: header names the target
/// communities, each row starts with the source community id.
pub fn jaccard_csv(m: &JaccardMatrix) -> String {
    let cols = m.matrix.first().map_or(0, Vec::len);
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["community".to_string()];
    header.extend((0..cols).map(|j| j.to_string()));
    writer.write_record(&header).expect("writing to memory cannot fail");
    for (i, row) in m.matrix.iter().enumerate() {
        let mut record = vec![i.to_string()];
        record.extend(row.iter().map(|v| v.to_string()));
        writer.write_record(&record).expect("writing to memory cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}
