//! Weekly feature-matrix assembly, standardization, and the correlation
//! export used for the multicollinearity check.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::DislocationWeek;

/// Feature columns, in CSV order.
pub const FEATURE_NAMES: [&str; 10] = [
    "z-vols",
    "z-volsD",
    "N-avgSent",
    "N-stdSent",
    "giantRatio",
    "clustCoeff",
    "eigFirst",
    "eigRatio",
    "comm",
    "n2v-entropy",
];

/// The two features read off the market panel rather than the news graph.
pub const MARKET_FEATURES: [&str; 2] = ["z-vols", "z-volsD"];

/// The eight graph/text-derived features (everything except the market pair).
pub const NETWORK_FEATURES: [&str; 8] = [
    "N-avgSent",
    "N-stdSent",
    "giantRatio",
    "clustCoeff",
    "eigFirst",
    "eigRatio",
    "comm",
    "n2v-entropy",
];

pub const FEATURE_CSV_HEADER: &str =
    "week_end,z-vols,z-volsD,N-avgSent,N-stdSent,giantRatio,clustCoeff,eigFirst,eigRatio,comm,n2v-entropy,label,label_next";

/// Weeks before this date never enter the feature matrix.
pub fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 6, 1).unwrap()
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("feature matrix is empty: {0}")]
    Empty(String),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("column {name} is constant and cannot be standardized")]
    ConstantColumn { name: String },
    #[error("matrix carries no standardization parameters to undo")]
    NotStandardized,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Per-week network and sentiment measurements, one value per non-market
/// feature. `eig` is `(eigFirst, eigRatio)`, absent when the graph has fewer
/// than two nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekSignals {
    pub week_end: NaiveDate,
    pub avg_sent: f64,
    pub std_sent: f64,
    pub giant_ratio: f64,
    pub clust_coeff: f64,
    pub eig: Option<(f64, f64)>,
    /// Community count of the week's partition.
    pub comm: usize,
    pub n2v_entropy: f64,
}

/// One assembled week: feature values in [`FEATURE_NAMES`] order plus the
/// current and next-week dislocation labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub week_end: NaiveDate,
    pub values: [f64; 10],
    pub label: u8,
    pub label_next: u8,
}

/// Mean/population-std recorded for one standardized column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<FeatureRow>,
    /// Present after [`standardize`]; holds the raw-column parameters.
    pub standardization: Option<Vec<ColumnStats>>,
}

impl FeatureMatrix {
    pub fn feature_index(name: &str) -> Option<usize> {
        FEATURE_NAMES.iter().position(|&f| f == name)
    }

    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.values[idx]).collect()
    }
}

/// Everything assembly produces: the matrix plus one line per dropped week.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureAssembly {
    pub matrix: FeatureMatrix,
    pub dropped: Vec<String>,
}

/// Highest eigenvector centrality and its ratio to the runner-up; `None` for
/// graphs with fewer than two nodes, where the ratio is undefined.
pub fn eigen_first_and_ratio(eigenvector: &BTreeMap<String, f64>) -> Option<(f64, f64)> {
    let mut values: Vec<f64> = eigenvector.values().copied().collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if values.len() < 2 || values[1] <= 0.0 {
        return None;
    }
    Some((values[0], values[0] / values[1]))
}

/// Mean and population standard deviation of per-article sentiments; `None`
/// for an empty week.
pub fn sentiment_summary(article_sentiments: &[f64]) -> Option<(f64, f64)> {
    if article_sentiments.is_empty() {
        return None;
    }
    let n = article_sentiments.len() as f64;
    let mean = article_sentiments.iter().sum::<f64>() / n;
    let var = article_sentiments
        .iter()
        .map(|s| (s - mean).powi(2))
        .sum::<f64>()
        / n;
    Some((mean, var.sqrt()))
}

/// Joins weekly signals with the market panel into one row per usable week.
///
/// A week is dropped (with a diagnostic naming the reason) when it predates
/// `start`, any signal value is missing or out of range, the panel lacks the
/// week / the previous week / the next week, or a needed z-mean is undefined.
/// Producing no rows at all is an error.
pub fn assemble_features(
    signals: &[WeekSignals],
    panel: &[DislocationWeek],
    start: NaiveDate,
) -> Result<FeatureAssembly, FeatureError> {
    let mut by_week: BTreeMap<NaiveDate, &WeekSignals> = BTreeMap::new();
    for s in signals {
        if by_week.insert(s.week_end, s).is_some() {
            return Err(FeatureError::InvalidInput(format!(
                "duplicate signals for week {}",
                s.week_end
            )));
        }
    }
    let panel_by_week: BTreeMap<NaiveDate, &DislocationWeek> =
        panel.iter().map(|w| (w.week_end, w)).collect();

    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    let drop = |week: NaiveDate, why: &str, dropped: &mut Vec<String>| {
        dropped.push(format!("{week}: {why}"));
    };

    for (&week, s) in &by_week {
        if week < start {
            drop(week, "before the configured start date", &mut dropped);
            continue;
        }
        let Some(panel_row) = panel_by_week.get(&week) else {
            drop(week, "no market panel row", &mut dropped);
            continue;
        };
        let Some(z_mean) = panel_row.z_mean else {
            drop(week, "z-vols undefined (flat index window)", &mut dropped);
            continue;
        };
        let prev_week = week - Days::new(7);
        let Some(prev) = panel_by_week.get(&prev_week).and_then(|p| p.z_mean) else {
            drop(
                week,
                "z-volsD undefined (no previous-week z mean)",
                &mut dropped,
            );
            continue;
        };
        let next_week = week + Days::new(7);
        let Some(next) = panel_by_week.get(&next_week) else {
            drop(week, "no next-week panel row for label_next", &mut dropped);
            continue;
        };
        let Some((eig_first, eig_ratio)) = s.eig else {
            drop(week, "eigRatio undefined (fewer than two nodes)", &mut dropped);
            continue;
        };
        if s.comm < 2 {
            drop(week, "fewer than two communities", &mut dropped);
            continue;
        }
        if !(s.giant_ratio > 0.0 && s.giant_ratio <= 1.0) {
            drop(week, "giant ratio outside (0, 1]", &mut dropped);
            continue;
        }
        let values = [
            z_mean,
            z_mean - prev,
            s.avg_sent,
            s.std_sent,
            s.giant_ratio,
            s.clust_coeff,
            eig_first,
            eig_ratio,
            s.comm as f64,
            s.n2v_entropy,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            drop(week, "non-finite feature value", &mut dropped);
            continue;
        }
        rows.push(FeatureRow {
            week_end: week,
            values,
            label: panel_row.label,
            label_next: next.label,
        });
    }

    if rows.is_empty() {
        return Err(FeatureError::Empty(format!(
            "no week survived assembly ({} dropped)",
            dropped.len()
        )));
    }
    Ok(FeatureAssembly {
        matrix: FeatureMatrix {
            rows,
            standardization: None,
        },
        dropped,
    })
}

/// Centers and scales every feature column to mean 0, population std 1,
/// recording the raw parameters so [`restore`] can undo the transform.
pub fn standardize(m: &FeatureMatrix) -> Result<FeatureMatrix, FeatureError> {
    if m.rows.len() < 2 {
        return Err(FeatureError::TooFewRows {
            needed: 2,
            got: m.rows.len(),
        });
    }
    let n = m.rows.len() as f64;
    let mut stats = Vec::with_capacity(FEATURE_NAMES.len());
    for (idx, name) in FEATURE_NAMES.iter().enumerate() {
        let col = m.column(idx);
        let mean = col.iter().sum::<f64>() / n;
        let std = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        if std == 0.0 {
            return Err(FeatureError::ConstantColumn {
                name: name.to_string(),
            });
        }
        stats.push(ColumnStats {
            name: name.to_string(),
            mean,
            std,
        });
    }
    let rows = m
        .rows
        .iter()
        .map(|r| {
            let mut values = r.values;
            for (idx, s) in stats.iter().enumerate() {
                values[idx] = (values[idx] - s.mean) / s.std;
            }
            FeatureRow { values, ..r.clone() }
        })
        .collect();
    Ok(FeatureMatrix {
        rows,
        standardization: Some(stats),
    })
}

/// Undoes [`standardize`] using the recorded column parameters.
pub fn restore(m: &FeatureMatrix) -> Result<FeatureMatrix, FeatureError> {
    let stats = m
        .standardization
        .as_ref()
        .ok_or(FeatureError::NotStandardized)?;
    let rows = m
        .rows
        .iter()
        .map(|r| {
            let mut values = r.values;
            for (idx, s) in stats.iter().enumerate() {
                values[idx] = values[idx] * s.std + s.mean;
            }
            FeatureRow { values, ..r.clone() }
        })
        .collect();
    Ok(FeatureMatrix {
        rows,
        standardization: None,
    })
}

/// Pearson correlations between the eight non-market features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

/// Correlates the non-market feature columns. The diagonal is exactly 1; a
/// zero-variance column correlates 0 with everything else (no linear
/// association is measurable).
pub fn correlation_matrix(m: &FeatureMatrix) -> Result<CorrelationMatrix, FeatureError> {
    if m.rows.len() < 3 {
        return Err(FeatureError::TooFewRows {
            needed: 3,
            got: m.rows.len(),
        });
    }
    let n = m.rows.len() as f64;
    let cols: Vec<Vec<f64>> = NETWORK_FEATURES
        .iter()
        .map(|name| m.column(FeatureMatrix::feature_index(name).unwrap()))
        .collect();
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let stds: Vec<f64> = cols
        .iter()
        .zip(&means)
        .map(|(c, mu)| (c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    let k = cols.len();
    let mut matrix = vec![vec![0.0; k]; k];
    for i in 0..k {
        matrix[i][i] = 1.0;
        for j in i + 1..k {
            let r = if stds[i] == 0.0 || stds[j] == 0.0 {
                0.0
            } else {
                let cov = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .map(|(a, b)| (a - means[i]) * (b - means[j]))
                    .sum::<f64>()
                    / n;
                cov / (stds[i] * stds[j])
            };
            matrix[i][j] = r;
            matrix[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: NETWORK_FEATURES.iter().map(|s| s.to_string()).collect(),
        matrix,
    })
}

/// Renders the matrix in the canonical CSV layout (header byte-for-byte
/// [`FEATURE_CSV_HEADER`]).
pub fn features_csv(m: &FeatureMatrix) -> String {
    let mut out = String::from(FEATURE_CSV_HEADER);
    out.push('\n');
    for r in &m.rows {
        out.push_str(&r.week_end.to_string());
        for v in r.values {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push_str(&format!(",{},{}\n", r.label, r.label_next));
    }
    out
}

/// Renders a correlation matrix as CSV: `feature` column then one column per
/// feature.
pub fn correlation_csv(c: &CorrelationMatrix) -> String {
    let mut out = String::from("feature");
    for name in &c.names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (name, row) in c.names.iter().zip(&c.matrix) {
        out.push_str(name);
        for v in row {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}
