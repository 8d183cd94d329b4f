//! Market stress indices, rolling z-scores, and the weekly dislocation label.
//!
//! Four weekly volatility/stress indices are z-scored against a trailing
//! window (the window excludes the current week). A week is labeled a
//! dislocation when all four z-scores are strictly positive and their mean
//! exceeds 0.5.

use std::io::Read;
use std::path::Path;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Trailing window length, in weeks, used for the rolling z-scores.
pub const ZSCORE_WINDOW: usize = 13;

/// Mean z-score a dislocation week must strictly exceed.
pub const DISLOCATION_MEAN_THRESHOLD: f64 = 0.5;

/// Canonical order of the four stress indices throughout the crate.
pub const INDEX_NAMES: [&str; 4] = ["vix", "vixfx", "mri", "move"];

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("index {name}: {reason}")]
    InvalidSeries { name: String, reason: String },
    #[error("index {name}: {len} observations, need more than the window of {window}")]
    TooShort {
        name: String,
        len: usize,
        window: usize,
    },
    #[error("index {name} is not aligned with {reference}: weeks differ")]
    Misaligned { name: String, reference: String },
    #[error("failed to read {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {reason}")]
    Malformed { path: String, reason: String },
}

/// One weekly index: strictly increasing dates, exactly seven days apart,
/// finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSeries {
    name: String,
    points: Vec<(NaiveDate, f64)>,
}

impl IndexSeries {
    pub fn new(name: &str, points: Vec<(NaiveDate, f64)>) -> Result<Self, MarketError> {
        let invalid = |reason: String| MarketError::InvalidSeries {
            name: name.to_string(),
            reason,
        };
        if points.is_empty() {
            return Err(invalid("empty series".to_string()));
        }
        for (date, value) in &points {
            if !value.is_finite() {
                return Err(invalid(format!("non-finite value at {date}")));
            }
        }
        for pair in points.windows(2) {
            let expected = pair[0].0 + Days::new(7);
            if pair[1].0 != expected {
                return Err(invalid(format!(
                    "expected weekly spacing, got {} after {}",
                    pair[1].0, pair[0].0
                )));
            }
        }
        Ok(IndexSeries {
            name: name.to_string(),
            points,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.points.iter().map(|&(d, _)| d)
    }
}

/// Reads a weekly index from a CSV file with header `week_end,value`.
pub fn load_index_csv(path: &Path, name: &str) -> Result<IndexSeries, MarketError> {
    let display = path.display().to_string();
    let mut raw = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut raw))
        .map_err(|source| MarketError::Unreadable {
            path: display.clone(),
            source,
        })?;
    let malformed = |reason: String| MarketError::Malformed {
        path: display.clone(),
        reason,
    };

    let mut reader = csv::Reader::from_reader(raw.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| malformed(e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "week_end" || &headers[1] != "value" {
        return Err(malformed(format!(
            "expected header week_end,value, got {headers:?}"
        )));
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        let date: NaiveDate = record[0]
            .parse()
            .map_err(|e| malformed(format!("bad date {:?}: {e}", &record[0])))?;
        let value: f64 = record[1]
            .parse()
            .map_err(|e| malformed(format!("bad value {:?}: {e}", &record[1])))?;
        points.push((date, value));
    }
    IndexSeries::new(name, points)
}

/// One week's rolling z-score. `z` is `None` when the trailing window has
/// zero variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScoreObs {
    pub week_end: NaiveDate,
    pub value: f64,
    pub z: Option<f64>,
}

/// Rolling z-scores against the trailing `window` observations, current week
/// excluded; population standard deviation. The first `window` weeks carry no
/// observation at all, so the result has `len - window` entries and a series
/// no longer than the window is an error.
pub fn rolling_zscores(series: &IndexSeries, window: usize) -> Result<Vec<ZScoreObs>, MarketError> {
    if window == 0 {
        return Err(MarketError::InvalidSeries {
            name: series.name.clone(),
            reason: "window must be positive".to_string(),
        });
    }
    if series.len() <= window {
        return Err(MarketError::TooShort {
            name: series.name.clone(),
            len: series.len(),
            window,
        });
    }
    let points = series.points();
    let mut out = Vec::with_capacity(points.len() - window);
    for t in window..points.len() {
        let trailing: Vec<f64> = points[t - window..t].iter().map(|&(_, v)| v).collect();
        let mean = trailing.iter().sum::<f64>() / window as f64;
        let variance = trailing.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / window as f64;
        let sigma = variance.sqrt();
        let (date, value) = points[t];
        let z = if sigma > 0.0 {
            Some((value - mean) / sigma)
        } else {
            None
        };
        out.push(ZScoreObs {
            week_end: date,
            value,
            z,
        });
    }
    Ok(out)
}

/// Joint label outcome for a week's four z-scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelOutcome {
    /// Mean of the four z-scores; `None` when any is undefined.
    pub z_mean: Option<f64>,
    /// 1 for a dislocation week, 0 otherwise.
    pub label: u8,
    /// False when any z-score was undefined: the 0 label is then a fallback,
    /// not a measurement.
    pub reliable: bool,
}

/// Labels one week: 1 iff all four z-scores are defined, strictly positive,
/// and their mean strictly exceeds [`DISLOCATION_MEAN_THRESHOLD`].
pub fn label_from_z(z: [Option<f64>; 4]) -> LabelOutcome {
    if z.iter().any(Option::is_none) {
        return LabelOutcome {
            z_mean: None,
            label: 0,
            reliable: false,
        };
    }
    let values: Vec<f64> = z.iter().map(|v| v.unwrap()).collect();
    let mean = values.iter().sum::<f64>() / 4.0;
    let label = u8::from(values.iter().all(|&v| v > 0.0) && mean > DISLOCATION_MEAN_THRESHOLD);
    LabelOutcome {
        z_mean: Some(mean),
        label,
        reliable: true,
    }
}

/// One labeled week of the market panel. Z-scores follow [`INDEX_NAMES`]
/// order: vix, vixfx, mri, move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DislocationWeek {
    pub week_end: NaiveDate,
    pub z: [Option<f64>; 4],
    pub z_mean: Option<f64>,
    pub label: u8,
    pub reliable: bool,
}

/// Builds the labeled weekly panel from the four indices (in [`INDEX_NAMES`]
/// order). All series must cover exactly the same weeks; the panel starts at
/// the first week with a full trailing window.
pub fn build_panel(
    series: &[IndexSeries; 4],
    window: usize,
) -> Result<Vec<DislocationWeek>, MarketError> {
    let reference = &series[0];
    for s in &series[1..] {
        if s.len() != reference.len() || !s.dates().eq(reference.dates()) {
            return Err(MarketError::Misaligned {
                name: s.name.clone(),
                reference: reference.name.clone(),
            });
        }
    }
    let mut columns = Vec::with_capacity(4);
    for s in series {
        columns.push(rolling_zscores(s, window)?);
    }
    let mut panel = Vec::with_capacity(columns[0].len());
    for i in 0..columns[0].len() {
        let z = [
            columns[0][i].z,
            columns[1][i].z,
            columns[2][i].z,
            columns[3][i].z,
        ];
        let outcome = label_from_z(z);
        panel.push(DislocationWeek {
            week_end: columns[0][i].week_end,
            z,
            z_mean: outcome.z_mean,
            label: outcome.label,
            reliable: outcome.reliable,
        });
    }
    Ok(panel)
}

fn opt_to_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV rendering of the panel:
/// `week_end,z_vix,z_vixfx,z_mri,z_move,z_mean,label`; undefined z-scores
/// become empty fields.
pub fn panel_csv(panel: &[DislocationWeek]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["week_end", "z_vix", "z_vixfx", "z_mri", "z_move", "z_mean", "label"])
        .expect("writing to memory cannot fail");
    for week in panel {
        writer
            .write_record([
                week.week_end.to_string(),
                opt_to_field(week.z[0]),
                opt_to_field(week.z[1]),
                opt_to_field(week.z[2]),
                opt_to_field(week.z[3]),
                opt_to_field(week.z_mean),
                week.label.to_string(),
            ])
            .expect("writing to memory cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}
