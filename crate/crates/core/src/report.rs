//! Machine-readable series behind the figures: centrality timelines, PCA
//! projections of embeddings, and summary term frequencies.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::CentralityReport;
use crate::linalg::sym_eigen_desc;

/// An entity must sit in a weekly top-3 at least this often to be plotted.
pub const MIN_TIMELINE_APPEARANCES: usize = 5;
/// Entities reported per metric per week.
pub const TOP_SLOTS: usize = 3;
/// Terms kept by [`term_frequencies`].
pub const TOP_TERMS: usize = 20;

/// Filler words excluded from term counts.
const STOPWORDS: [&str; 32] = [
    "the", "and", "for", "that", "with", "from", "this", "was", "were", "are", "has", "have",
    "had", "but", "not", "its", "his", "her", "they", "their", "will", "would", "could", "been",
    "after", "over", "into", "about", "more", "than", "also", "said",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("need at least {needed} weeks of reports, got {got}")]
    TooFewWeeks { needed: usize, got: usize },
    #[error("need at least {needed} vectors, got {got}")]
    TooFewVectors { needed: usize, got: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// One plotted point: entity `entity` held rank `slot` (0-based) under
/// `metric` in the given week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub week_end: NaiveDate,
    pub metric: String,
    pub slot: usize,
    pub entity: String,
    pub value: f64,
    pub sentiment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineSeries {
    pub min_appearances: usize,
    pub entries: Vec<TimelineEntry>,
}

/// Flattens weekly top-3 centrality tables into one filtered series.
///
/// Each week contributes its top three entities per metric (degree and
/// eigenvector), annotated with the week's node sentiment. An entity that
/// makes a metric's weekly top-3 fewer than `min_appearances` times across
/// the span is dropped from that metric's series. Weeks whose graphs were
/// empty simply contribute no rows.
pub fn top_entities_timeline(
    weeks: &[(CentralityReport, BTreeMap<String, f64>)],
    min_appearances: usize,
) -> Result<TimelineSeries, ReportError> {
    if weeks.len() < min_appearances {
        return Err(ReportError::TooFewWeeks {
            needed: min_appearances,
            got: weeks.len(),
        });
    }
    let mut seen = std::collections::BTreeSet::new();
    for (report, _) in weeks {
        if !seen.insert(report.week_end) {
            return Err(ReportError::InvalidInput(format!(
                "duplicate week {}",
                report.week_end
            )));
        }
    }

    // Appearance counts per (metric, entity) across the span.
    let mut appearances: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for (report, _) in weeks {
        for (metric, top) in [
            ("degree", &report.top_degree),
            ("eigenvector", &report.top_eigenvector),
        ] {
            for (entity, _) in top.iter().take(TOP_SLOTS) {
                *appearances.entry((metric, entity)).or_insert(0) += 1;
            }
        }
    }

    let mut entries = Vec::new();
    let mut ordered: Vec<&(CentralityReport, BTreeMap<String, f64>)> = weeks.iter().collect();
    ordered.sort_by_key(|(r, _)| r.week_end);
    for (report, sentiments) in ordered {
        for (metric, top) in [
            ("degree", &report.top_degree),
            ("eigenvector", &report.top_eigenvector),
        ] {
            for (slot, (entity, value)) in top.iter().take(TOP_SLOTS).enumerate() {
                if appearances[&(metric, entity.as_str())] < min_appearances {
                    continue;
                }
                entries.push(TimelineEntry {
                    week_end: report.week_end,
                    metric: metric.to_string(),
                    slot,
                    entity: entity.clone(),
                    value: *value,
                    sentiment: sentiments.get(entity).copied().unwrap_or(0.0),
                });
            }
        }
    }
    Ok(TimelineSeries {
        min_appearances,
        entries,
    })
}

pub fn timeline_csv(series: &TimelineSeries) -> String {
    let mut out = String::from("week_end,metric,slot,entity,value,sentiment\n");
    for e in &series.entries {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.week_end,
            e.metric,
            e.slot,
            csv_field(&e.entity),
            e.value,
            e.sentiment
        ));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A centered 2-D principal-component projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    pub labels: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    /// Fraction of total variance captured by each component.
    pub explained: [f64; 2],
    /// The two component loading vectors (unit length, largest-magnitude
    /// loading made positive).
    pub components: [Vec<f64>; 2],
}

/// Projects labeled vectors onto their top two principal components.
///
/// The data is centered, the population covariance eigendecomposed, and the
/// two leading eigenvectors kept. Each component's sign is fixed by making
/// its largest-magnitude loading positive, so the projection is deterministic.
pub fn pca_coordinates(
    vectors: &BTreeMap<String, Vec<f64>>,
) -> Result<PcaProjection, ReportError> {
    let n = vectors.len();
    if n < 3 {
        return Err(ReportError::TooFewVectors { needed: 3, got: n });
    }
    let d = vectors.values().next().unwrap().len();
    if d < 2 {
        return Err(ReportError::InvalidInput(format!(
            "need at least 2 dimensions for a 2-D projection, got {d}"
        )));
    }
    for (label, v) in vectors {
        if v.len() != d {
            return Err(ReportError::InvalidInput(format!(
                "vector {label:?} has {} dimensions, expected {d}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ReportError::InvalidInput(format!(
                "vector {label:?} has a non-finite component"
            )));
        }
    }

    let labels: Vec<String> = vectors.keys().cloned().collect();
    let mut centered = DMatrix::from_fn(n, d, |i, j| vectors[&labels[i]][j]);
    for j in 0..d {
        let mean = centered.column(j).sum() / n as f64;
        for i in 0..n {
            centered[(i, j)] -= mean;
        }
    }
    let covariance = centered.transpose() * &centered / n as f64;
    let (eigenvalues, eigenvectors) = sym_eigen_desc(covariance);
    let total: f64 = eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    if total <= 0.0 {
        return Err(ReportError::DegenerateData(
            "all vectors are identical; no variance to project".to_string(),
        ));
    }

    let mut components: [Vec<f64>; 2] = [vec![0.0; d], vec![0.0; d]];
    for c in 0..2 {
        let mut v: Vec<f64> = eigenvectors[c].iter().copied().collect();
        // Largest-magnitude loading positive; first index wins magnitude ties.
        let pivot = (0..d)
            .max_by(|&a, &b| {
                v[a].abs()
                    .partial_cmp(&v[b].abs())
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .unwrap();
        if v[pivot] < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        components[c] = v;
    }

    let coords: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let row = centered.row(i);
            let project = |comp: &[f64]| row.iter().zip(comp).map(|(x, c)| x * c).sum::<f64>();
            [project(&components[0]), project(&components[1])]
        })
        .collect();

    Ok(PcaProjection {
        labels,
        coords,
        explained: [
            eigenvalues[0].max(0.0) / total,
            eigenvalues[1].max(0.0) / total,
        ],
        components,
    })
}

pub fn pca_csv(p: &PcaProjection) -> String {
    let mut out = String::from("label,pc1,pc2\n");
    for (label, [x, y]) in p.labels.iter().zip(&p.coords) {
        out.push_str(&format!("{},{},{}\n", csv_field(label), x, y));
    }
    out
}

/// Lowercased counts of alphanumeric terms (length ≥ 3, stopwords removed)
/// across the texts, most frequent first, ties alphabetical, truncated to
/// [`TOP_TERMS`].
pub fn term_frequencies<'a, I>(texts: I) -> Vec<(String, usize)>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for text in texts {
        for raw in text.split(|c: char| !c.is_alphanumeric()) {
            if raw.len() < 3 {
                continue;
            }
            let term = raw.to_lowercase();
            if STOPWORDS.contains(&term.as_str()) {
                continue;
            }
            *counts.entry(term).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(TOP_TERMS);
    ranked
}

pub fn terms_csv(terms: &[(String, usize)]) -> String {
    let mut out = String::from("term,count\n");
    for (term, count) in terms {
        out.push_str(&format!("{},{}\n", csv_field(term), count));
    }
    out
}
