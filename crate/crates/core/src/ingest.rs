//! Corpus ingestion: newline-delimited JSON article records, weekly grouping,
//! entity normalization, and rank-weighted sentiment.
//!
//! Every article carries up to five ranked entities (rank 1 = most important)
//! with per-entity sentiment in [-1, +1]. A mention's contribution is scaled
//! by the inverse of its rank, and an article-level score is the rescaled,
//! clipped mean of those contributions.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The rescale constant applied to mean weighted sentiment. The upstream
/// extraction convention treats 0.6 as the attainable ceiling of the mean,
/// so article scores are multiplied by its inverse and clipped to [-1, +1].
pub const SENTIMENT_RESCALE: f64 = 0.6;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read corpus file {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus contains no valid articles")]
    NoValidArticles,
    #[error("duplicated article_id {0:?}")]
    DuplicateArticleId(String),
}

/// One ranked entity extracted from an article.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityMention {
    /// Normalized entity text (see [`normalize_entity`]).
    pub text: String,
    /// Importance rank within the article, 1 (most important) through 5.
    pub rank: u8,
    /// Sentiment toward the entity in [-1, +1].
    pub sentiment: f64,
}

/// One article as emitted by the upstream extraction pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub article_id: String,
    /// Label of the week the article belongs to (the Sunday ending the week).
    pub week_end: NaiveDate,
    /// Ranked entities; between 1 and 5, with distinct ranks and distinct texts.
    pub entities: Vec<EntityMention>,
    pub summary: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    /// Whole-article sentiment from the extractor, in [-1, +1].
    pub overall_sentiment: f64,
}

/// All valid articles of one week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklyCorpus {
    pub week_end: NaiveDate,
    pub articles: Vec<ArticleRecord>,
}

/// Result of [`load_corpus`]: weeks sorted ascending, plus one diagnostic line
/// per rejected input line.
#[derive(Debug, Clone)]
pub struct CorpusLoad {
    pub weeks: Vec<WeeklyCorpus>,
    pub diagnostics: Vec<String>,
}

/// Snaps a date to the label of its week: the Sunday on or after it.
pub fn week_label(date: NaiveDate) -> NaiveDate {
    let ahead = (7 - date.weekday().num_days_from_sunday()) % 7;
    date + Days::new(u64::from(ahead))
}

/// Canonical form of an entity string: ends stripped of punctuation and
/// whitespace, lowercased, internal whitespace runs collapsed to one space.
/// No stemming — distinct named entities must stay distinct.
pub fn normalize_entity(raw: &str) -> String {
    let stripped = raw.trim_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation());
    stripped
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Sentiment of one mention scaled by the inverse of its rank.
pub fn weighted_entity_sentiment(mention: &EntityMention) -> f64 {
    mention.sentiment / f64::from(mention.rank)
}

/// Article-level sentiment: the mean of [`weighted_entity_sentiment`] over the
/// article's present entities, rescaled by 1/0.6 and clipped to [-1, +1].
pub fn article_sentiment(article: &ArticleRecord) -> f64 {
    let n = article.entities.len();
    debug_assert!(n > 0, "validated articles carry at least one entity");
    let mean = article
        .entities
        .iter()
        .map(weighted_entity_sentiment)
        .sum::<f64>()
        / n as f64;
    (mean / SENTIMENT_RESCALE).clamp(-1.0, 1.0)
}

/// Checks one parsed record, normalizing entity texts and snapping `week_end`
/// to its Sunday label in place. Returns a human-readable reason on rejection.
fn validate_article(article: &mut ArticleRecord) -> Result<(), String> {
    if article.entities.is_empty() {
        return Err("no entities".to_string());
    }
    if article.entities.len() > 5 {
        return Err(format!("{} entities, at most 5 allowed", article.entities.len()));
    }
    let mut ranks = HashSet::new();
    let mut texts = HashSet::new();
    for entity in &mut article.entities {
        if !(1..=5).contains(&entity.rank) {
            return Err(format!("rank {} out of range 1..=5", entity.rank));
        }
        if !entity.sentiment.is_finite() || !(-1.0..=1.0).contains(&entity.sentiment) {
            return Err(format!(
                "entity sentiment {} outside [-1, +1]",
                entity.sentiment
            ));
        }
        entity.text = normalize_entity(&entity.text);
        if entity.text.is_empty() {
            return Err("entity text empty after normalization".to_string());
        }
        if !ranks.insert(entity.rank) {
            return Err(format!("duplicate rank {}", entity.rank));
        }
        if !texts.insert(entity.text.clone()) {
            return Err(format!("duplicate entity text {:?}", entity.text));
        }
    }
    if !article.overall_sentiment.is_finite()
        || !(-1.0..=1.0).contains(&article.overall_sentiment)
    {
        return Err(format!(
            "overall sentiment {} outside [-1, +1]",
            article.overall_sentiment
        ));
    }
    article.week_end = week_label(article.week_end);
    Ok(())
}

/// Loads a newline-delimited JSON corpus and groups it into weeks.
///
/// Malformed lines and articles that violate the record invariants are
/// rejected individually with a diagnostic; the file as a whole only fails
/// when unreadable, empty of valid articles, or carrying a duplicated
/// `article_id`. Weeks listed in `exclude_weeks` (snapped to their Sunday
/// label) are removed after grouping.
pub fn load_corpus(path: &Path, exclude_weeks: &[NaiveDate]) -> Result<CorpusLoad, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Unreadable {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut diagnostics = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut by_week: BTreeMap<NaiveDate, Vec<ArticleRecord>> = BTreeMap::new();

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| IngestError::Unreadable {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut article: ArticleRecord = match serde_json::from_str(&line) {
            Ok(article) => article,
            Err(err) => {
                diagnostics.push(format!("line {}: unparsable record: {err}", lineno + 1));
                continue;
            }
        };
        if let Err(reason) = validate_article(&mut article) {
            diagnostics.push(format!(
                "line {}: article {:?} rejected: {reason}",
                lineno + 1,
                article.article_id
            ));
            continue;
        }
        if !seen_ids.insert(article.article_id.clone()) {
            return Err(IngestError::DuplicateArticleId(article.article_id));
        }
        by_week.entry(article.week_end).or_default().push(article);
    }

    let excluded: HashSet<NaiveDate> = exclude_weeks.iter().map(|&d| week_label(d)).collect();
    for week in &excluded {
        if by_week.remove(week).is_some() {
            diagnostics.push(format!("week {week} excluded by configuration"));
        }
    }

    if by_week.is_empty() {
        return Err(IngestError::NoValidArticles);
    }

    let weeks = by_week
        .into_iter()
        .map(|(week_end, articles)| WeeklyCorpus { week_end, articles })
        .collect();
    Ok(CorpusLoad { weeks, diagnostics })
}
