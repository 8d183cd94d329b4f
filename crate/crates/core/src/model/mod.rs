//! Class balancing, logistic regression, recursive feature elimination, and
//! the evaluation metrics reported for each experiment.

pub mod logit;
pub mod smote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature::{FEATURE_NAMES, NETWORK_FEATURES};

pub use logit::{fit_logit, fit_logit_traced, predict, rfe, Elimination, LogitModel, RfeOutcome};
pub use smote::smote;

/// Significance level for feature elimination.
pub const DEFAULT_ALPHA: f64 = 0.05;
/// SMOTE neighborhood size.
pub const DEFAULT_K_NEIGHBORS: usize = 5;
/// Oversampled-minority to majority ratio.
pub const DEFAULT_TARGET_RATIO: f64 = 1.0;
/// A coefficient beyond this magnitude on standardized data signals perfect
/// separation.
pub const COEF_MAGNITUDE_LIMIT: f64 = 30.0;
/// IRLS stops when no coefficient moves more than this.
pub const IRLS_TOL: f64 = 1e-8;
pub const IRLS_MAX_ITER: usize = 100;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("minority class has {got} rows; oversampling needs at least 2")]
    TooFewMinority { got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("labels contain a single class; a classifier needs both")]
    OneClass,
    #[error("{rows} rows cannot support {params} parameters")]
    TooFewRows { rows: usize, params: usize },
    #[error("perfect separation suspected: |{feature}| exceeded {COEF_MAGNITUDE_LIMIT}")]
    Separation { feature: String },
    #[error("observed information matrix is singular")]
    SingularInformation,
    #[error("IRLS did not converge within {iterations} iterations")]
    DidNotConverge { iterations: usize },
    #[error("feature mismatch: {0}")]
    FeatureMismatch(String),
    #[error("elimination removed every feature: {}", format_trace(trace))]
    AllEliminated { trace: Vec<Elimination> },
}

fn format_trace(trace: &[Elimination]) -> String {
    trace
        .iter()
        .map(|e| format!("{} (p={:.4})", e.feature, e.p_value))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Precision/recall/F1 for one class, with 0/0 taken as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Confusion counts and derived metrics over the evaluated rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub true_negatives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_positives: usize,
    pub accuracy: f64,
    pub class0: ClassMetrics,
    pub class1: ClassMetrics,
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.true_negatives + self.false_positives + self.false_negatives + self.true_positives
    }
}

fn ratio_or_zero(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_metrics(tp: usize, fp: usize, fn_: usize) -> ClassMetrics {
    let precision = ratio_or_zero(tp, tp + fp);
    let recall = ratio_or_zero(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
    }
}

/// Scores the model on raw (never oversampled) rows.
pub fn evaluate(
    model: &LogitModel,
    feature_names: &[String],
    x: &[Vec<f64>],
    y: &[u8],
) -> Result<EvalReport, ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::InvalidInput(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(ModelError::InvalidInput("no rows to evaluate".to_string()));
    }
    let predictions = predict(model, feature_names, x)?;
    let (mut tn, mut fp, mut fn_, mut tp) = (0usize, 0usize, 0usize, 0usize);
    for (&truth, &(_, predicted)) in y.iter().zip(&predictions) {
        match (truth, predicted) {
            (0, 0) => tn += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            (1, 1) => tp += 1,
            _ => {
                return Err(ModelError::InvalidInput(format!(
                    "label {truth} is not binary"
                )))
            }
        }
    }
    Ok(EvalReport {
        true_negatives: tn,
        false_positives: fp,
        false_negatives: fn_,
        true_positives: tp,
        accuracy: ratio_or_zero(tn + tp, tn + fp + fn_ + tp),
        class0: class_metrics(tn, fn_, fp),
        class1: class_metrics(tp, fp, fn_),
    })
}

/// The two reported regression setups: explaining this week's dislocation
/// from news features alone, and predicting next week's from everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Contemporaneous,
    Predictive,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Contemporaneous => "contemporaneous",
            Experiment::Predictive => "predictive",
        }
    }

    /// Candidate feature columns: the contemporaneous setup may not look at
    /// the market, the predictive one may use every column.
    pub fn candidate_features(&self) -> Vec<&'static str> {
        match self {
            Experiment::Contemporaneous => NETWORK_FEATURES.to_vec(),
            Experiment::Predictive => FEATURE_NAMES.to_vec(),
        }
    }

    /// Which label column the experiment targets.
    pub fn targets_next_week(&self) -> bool {
        matches!(self, Experiment::Predictive)
    }
}

impl std::str::FromStr for Experiment {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "contemporaneous" => Ok(Experiment::Contemporaneous),
            "predictive" => Ok(Experiment::Predictive),
            other => Err(ModelError::InvalidInput(format!(
                "unknown experiment {other:?} (expected contemporaneous or predictive)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intercept_only(beta0: f64) -> LogitModel {
        LogitModel {
            feature_names: vec!["intercept".to_string()],
            coefficients: vec![beta0],
            standard_errors: vec![0.1],
            z_stats: vec![0.0],
            p_values: vec![1.0],
            conf_low: vec![beta0],
            conf_high: vec![beta0],
            log_likelihood: 0.0,
            null_log_likelihood: 0.0,
            pseudo_r2: 0.0,
            aic: 0.0,
            bic: 0.0,
            n: 0,
            iterations: 0,
        }
    }

    #[test]
    fn all_negative_predictor_on_the_reported_split() {
        // 152 negatives, 23 positives; a model that always says 0.
        let model = intercept_only(-10.0);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..152 {
            x.push(vec![]);
            y.push(0u8);
        }
        for _ in 0..23 {
            x.push(vec![]);
            y.push(1u8);
        }
        let report = evaluate(&model, &[], &x, &y).unwrap();
        assert_eq!(report.true_negatives, 152);
        assert_eq!(report.false_negatives, 23);
        assert_eq!(report.total(), 175);
        assert_eq!(report.accuracy, 152.0 / 175.0);
        assert_eq!(report.class1.recall, 0.0);
        assert_eq!(report.class1.precision, 0.0);
        assert_eq!(report.class1.f1, 0.0);
        // Class 0 catches everything but mislabels the positives.
        assert_eq!(report.class0.recall, 1.0);
        assert_eq!(report.class0.precision, 152.0 / 175.0);
    }

    #[test]
    fn reported_precision_and_recall_arithmetic() {
        // One strong feature deciding the label at x > 0; data arranged to
        // land TP=10, FP=2, FN=13, TN=5.
        let model = LogitModel {
            feature_names: vec!["intercept".to_string(), "x".to_string()],
            coefficients: vec![0.0, 8.0],
            ..intercept_only(0.0)
        };
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..10 {
            x.push(vec![1.0]);
            y.push(1);
        }
        for _ in 0..2 {
            x.push(vec![1.0]);
            y.push(0);
        }
        for _ in 0..13 {
            x.push(vec![-1.0]);
            y.push(1);
        }
        for _ in 0..5 {
            x.push(vec![-1.0]);
            y.push(0);
        }
        let names = vec!["x".to_string()];
        let report = evaluate(&model, &names, &x, &y).unwrap();
        assert_eq!(report.true_positives, 10);
        assert_eq!(report.false_positives, 2);
        assert_eq!(report.false_negatives, 13);
        assert_eq!(report.true_negatives, 5);
        assert_eq!(report.class1.precision, 10.0 / 12.0);
        assert_eq!(report.class1.recall, 10.0 / 23.0);
        let p = 10.0 / 12.0;
        let r = 10.0 / 23.0;
        assert!((report.class1.f1 - 2.0 * p * r / (p + r)).abs() < 1e-15);
    }

    #[test]
    fn perfect_classifier_has_unit_metrics() {
        let model = LogitModel {
            feature_names: vec!["intercept".to_string(), "x".to_string()],
            coefficients: vec![0.0, 9.0],
            ..intercept_only(0.0)
        };
        let x = vec![vec![1.0], vec![-1.0], vec![1.0], vec![-1.0]];
        let y = vec![1, 0, 1, 0];
        let names = vec!["x".to_string()];
        let report = evaluate(&model, &names, &x, &y).unwrap();
        for metrics in [&report.class0, &report.class1] {
            assert_eq!(metrics.precision, 1.0);
            assert_eq!(metrics.recall, 1.0);
            assert_eq!(metrics.f1, 1.0);
        }
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn experiments_select_columns_and_targets() {
        let contemporaneous = Experiment::Contemporaneous;
        assert!(!contemporaneous.candidate_features().contains(&"z-vols"));
        assert!(!contemporaneous.targets_next_week());
        let predictive = Experiment::Predictive;
        assert!(predictive.candidate_features().contains(&"z-vols"));
        assert_eq!(predictive.candidate_features().len(), 10);
        assert!(predictive.targets_next_week());
        assert_eq!(
            "contemporaneous".parse::<Experiment>().unwrap(),
            Experiment::Contemporaneous
        );
        assert!("sideways".parse::<Experiment>().is_err());
    }
}
