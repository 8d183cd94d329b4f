//! Maximum-likelihood logistic regression (IRLS) and recursive feature
//! elimination on SMOTE-balanced data.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{
    smote, ModelError, COEF_MAGNITUDE_LIMIT, DEFAULT_TARGET_RATIO, IRLS_MAX_ITER, IRLS_TOL,
};

/// A fitted logistic model. `feature_names[0]` is always `"intercept"`; all
/// vectors are indexed alike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitModel {
    pub feature_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub z_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    /// 95% confidence bounds.
    pub conf_low: Vec<f64>,
    pub conf_high: Vec<f64>,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub pseudo_r2: f64,
    pub aic: f64,
    pub bic: f64,
    pub n: usize,
    pub iterations: usize,
}

impl LogitModel {
    /// Slope names, i.e. everything after the intercept.
    pub fn slope_names(&self) -> &[String] {
        &self.feature_names[1..]
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Bernoulli log-likelihood of coefficients `beta` on the design matrix.
fn log_likelihood(design: &DMatrix<f64>, y: &[u8], beta: &DVector<f64>) -> f64 {
    let eta = design * beta;
    eta.iter()
        .zip(y)
        .map(|(&e, &yi)| f64::from(yi) * e - softplus(e))
        .sum()
}

/// Fits by Newton-Raphson on the log-likelihood (IRLS), with step halving so
/// the likelihood never decreases. `x` holds slope columns only; the
/// intercept is added internally. An empty feature list fits the intercept
/// alone.
pub fn fit_logit(
    x: &[Vec<f64>],
    y: &[u8],
    feature_names: &[String],
) -> Result<LogitModel, ModelError> {
    fit_logit_traced(x, y, feature_names).map(|(model, _)| model)
}

/// Like [`fit_logit`], but also returns the log-likelihood recorded at the
/// zero coefficients and after every accepted Newton step. Step halving makes
/// the series non-decreasing; the trace exposes that for diagnostics.
pub fn fit_logit_traced(
    x: &[Vec<f64>],
    y: &[u8],
    feature_names: &[String],
) -> Result<(LogitModel, Vec<f64>), ModelError> {
    let n = x.len();
    if n == 0 || n != y.len() {
        return Err(ModelError::InvalidInput(format!(
            "{n} rows against {} labels",
            y.len()
        )));
    }
    let d = feature_names.len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(ModelError::InvalidInput(format!(
                "row {i} has {} features, expected {d}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidInput(format!(
                "row {i} has a non-finite feature"
            )));
        }
    }
    if y.iter().any(|&v| v > 1) {
        return Err(ModelError::InvalidInput(
            "labels must be 0 or 1".to_string(),
        ));
    }
    let positives = y.iter().filter(|&&v| v == 1).count();
    if positives == 0 || positives == n {
        return Err(ModelError::OneClass);
    }
    let params = d + 1;
    if n <= params {
        return Err(ModelError::TooFewRows { rows: n, params });
    }
    for (j, name) in feature_names.iter().enumerate() {
        let first = x[0][j];
        if x.iter().all(|row| row[j] == first) {
            return Err(ModelError::InvalidInput(format!(
                "feature {name} is constant; it duplicates the intercept"
            )));
        }
    }

    let design = DMatrix::from_fn(n, params, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
    let all_names: Vec<String> = std::iter::once("intercept".to_string())
        .chain(feature_names.iter().cloned())
        .collect();

    let mut beta = DVector::zeros(params);
    let mut ll = log_likelihood(&design, y, &beta);
    let mut trace = vec![ll];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < IRLS_MAX_ITER {
        iterations += 1;
        let eta = &design * &beta;
        let p: DVector<f64> = eta.map(sigmoid);
        let gradient = design.transpose()
            * DVector::from_iterator(n, p.iter().zip(y).map(|(&pi, &yi)| f64::from(yi) - pi));
        // Observed information X^T W X with W = diag(p(1-p)).
        let mut info = DMatrix::zeros(params, params);
        for i in 0..n {
            let w = p[i] * (1.0 - p[i]);
            let row = design.row(i);
            for a in 0..params {
                for b in a..params {
                    info[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..params {
            for b in 0..a {
                info[(a, b)] = info[(b, a)];
            }
        }
        let chol = info
            .clone()
            .cholesky()
            .ok_or(ModelError::SingularInformation)?;
        let mut delta = chol.solve(&gradient);

        // Halve the Newton step until the likelihood stops decreasing. The
        // slack keeps rounding noise near the optimum from eating the step.
        let mut candidate = &beta + &delta;
        let mut ll_new = log_likelihood(&design, y, &candidate);
        let mut halvings = 0;
        while ll_new < ll - 1e-12 * (1.0 + ll.abs()) && halvings < 40 {
            delta *= 0.5;
            candidate = &beta + &delta;
            ll_new = log_likelihood(&design, y, &candidate);
            halvings += 1;
        }
        debug_assert!(
            ll_new >= ll - 1e-9 * (1.0 + ll.abs()),
            "likelihood decreased: {ll} -> {ll_new}"
        );
        beta = candidate;
        ll = ll_new;
        trace.push(ll);

        if let Some(j) = (0..params).find(|&j| beta[j].abs() > COEF_MAGNITUDE_LIMIT) {
            return Err(ModelError::Separation {
                feature: all_names[j].clone(),
            });
        }
        if delta.amax() < IRLS_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(ModelError::DidNotConverge {
            iterations: IRLS_MAX_ITER,
        });
    }

    // Standard errors from the inverse information at the optimum.
    let eta = &design * &beta;
    let p: DVector<f64> = eta.map(sigmoid);
    let mut info: DMatrix<f64> = DMatrix::zeros(params, params);
    for i in 0..n {
        let w = p[i] * (1.0 - p[i]);
        let row = design.row(i);
        for a in 0..params {
            for b in a..params {
                info[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    for a in 0..params {
        for b in 0..a {
            info[(a, b)] = info[(b, a)];
        }
    }
    let covariance = info
        .cholesky()
        .ok_or(ModelError::SingularInformation)?
        .inverse();
    let standard_errors: Vec<f64> = (0..params).map(|j| covariance[(j, j)].sqrt()).collect();

    let normal = Normal::new(0.0, 1.0).unwrap();
    let z975 = normal.inverse_cdf(0.975);
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let z_stats: Vec<f64> = coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(b, se)| b / se)
        .collect();
    let p_values: Vec<f64> = z_stats
        .iter()
        .map(|z| 2.0 * (1.0 - normal.cdf(z.abs())))
        .collect();
    let conf_low: Vec<f64> = coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(b, se)| b - z975 * se)
        .collect();
    let conf_high: Vec<f64> = coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(b, se)| b + z975 * se)
        .collect();

    // Null model: intercept only, which has the closed form ln(pbar/(1-pbar)).
    let pbar = positives as f64 / n as f64;
    let null_log_likelihood = n as f64 * (pbar * pbar.ln() + (1.0 - pbar) * (1.0 - pbar).ln());
    let k = params as f64;

    let model = LogitModel {
        feature_names: all_names,
        coefficients,
        standard_errors,
        z_stats,
        p_values,
        conf_low,
        conf_high,
        log_likelihood: ll,
        null_log_likelihood,
        pseudo_r2: 1.0 - ll / null_log_likelihood,
        aic: 2.0 * k - 2.0 * ll,
        bic: (n as f64).ln() * k - 2.0 * ll,
        n,
        iterations,
    };
    Ok((model, trace))
}

/// Probabilities and hard labels for rows whose columns are `feature_names`,
/// which must match the model's slopes exactly (same names, same order).
/// Only a probability strictly above 0.5 maps to label 1.
pub fn predict(
    model: &LogitModel,
    feature_names: &[String],
    x: &[Vec<f64>],
) -> Result<Vec<(f64, u8)>, ModelError> {
    let slopes = model.slope_names();
    if feature_names != slopes {
        return Err(ModelError::FeatureMismatch(format!(
            "model was fitted on {slopes:?}, given {feature_names:?}"
        )));
    }
    x.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != slopes.len() {
                return Err(ModelError::InvalidInput(format!(
                    "row {i} has {} features, expected {}",
                    row.len(),
                    slopes.len()
                )));
            }
            let eta = model.coefficients[0]
                + row
                    .iter()
                    .zip(&model.coefficients[1..])
                    .map(|(x, b)| x * b)
                    .sum::<f64>();
            let probability = sigmoid(eta);
            Ok((probability, u8::from(probability > 0.5)))
        })
        .collect()
}

/// One elimination step: the dropped feature and the p-value that doomed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elimination {
    pub feature: String,
    pub p_value: f64,
}

/// What recursive elimination produced: the surviving model, the drops in
/// order, and how many rows the balanced training matrix had.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeOutcome {
    pub model: LogitModel,
    pub trace: Vec<Elimination>,
    pub balanced_rows: usize,
}

/// Recursive feature elimination at significance `alpha`.
///
/// The class imbalance is corrected once up front: the minority class is
/// SMOTE-oversampled to parity on the full candidate columns, and every refit
/// drops columns from that same balanced matrix. Starting from all
/// candidates, the slope with the largest p-value ≥ alpha is removed and the
/// model refitted until every remaining slope is significant. The intercept
/// is never tested or dropped.
pub fn rfe(
    x: &[Vec<f64>],
    y: &[u8],
    feature_names: &[String],
    alpha: f64,
    k_neighbors: usize,
    seed: u64,
) -> Result<RfeOutcome, ModelError> {
    if feature_names.is_empty() {
        return Err(ModelError::InvalidInput(
            "elimination needs at least one candidate feature".to_string(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ModelError::InvalidInput(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if x.len() != y.len() || x.is_empty() {
        return Err(ModelError::InvalidInput(format!(
            "{} rows against {} labels",
            x.len(),
            y.len()
        )));
    }

    // Balance once on the full candidate set.
    let positives: Vec<Vec<f64>> = x
        .iter()
        .zip(y)
        .filter(|(_, &l)| l == 1)
        .map(|(r, _)| r.clone())
        .collect();
    let negatives: Vec<Vec<f64>> = x
        .iter()
        .zip(y)
        .filter(|(_, &l)| l == 0)
        .map(|(r, _)| r.clone())
        .collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(ModelError::OneClass);
    }
    let (minority, minority_label, majority_len) = if positives.len() <= negatives.len() {
        (&positives, 1u8, negatives.len())
    } else {
        (&negatives, 0u8, positives.len())
    };
    let synthetic = smote(
        minority,
        majority_len,
        k_neighbors,
        DEFAULT_TARGET_RATIO,
        seed,
    )?;
    let mut rows: Vec<Vec<f64>> = x.to_vec();
    let mut labels: Vec<u8> = y.to_vec();
    rows.extend(synthetic);
    labels.resize(rows.len(), minority_label);
    let balanced_rows = rows.len();

    // Eliminate until everything left is significant.
    let mut kept: Vec<usize> = (0..feature_names.len()).collect();
    let mut trace = Vec::new();
    loop {
        let sub_rows: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| kept.iter().map(|&j| r[j]).collect())
            .collect();
        let sub_names: Vec<String> = kept.iter().map(|&j| feature_names[j].clone()).collect();
        let model = fit_logit(&sub_rows, &labels, &sub_names)?;

        // Largest slope p-value (intercept is index 0 and exempt).
        let (worst_slot, worst_p) = model.p_values[1..]
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (i, &p)| {
                if p > acc.1 {
                    (i, p)
                } else {
                    acc
                }
            });
        if worst_p < alpha {
            return Ok(RfeOutcome {
                model,
                trace,
                balanced_rows,
            });
        }
        trace.push(Elimination {
            feature: sub_names[worst_slot].clone(),
            p_value: worst_p,
        });
        kept.remove(worst_slot);
        if kept.is_empty() {
            return Err(ModelError::AllEliminated { trace });
        }
    }
}
