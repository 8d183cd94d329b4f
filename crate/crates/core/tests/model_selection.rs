//! The modeling path end to end on a planted matrix: standardization,
//! balanced recursive elimination, and evaluation of the surviving model on
//! the raw (never oversampled) rows. Two columns carry a real effect; the
//! elimination must keep both, every drop must name an insignificant
//! column, and the fitted model must beat guessing by a wide margin.

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use newsweave::feature::{standardize, FeatureMatrix, FeatureRow, FEATURE_NAMES};
use newsweave::model::{evaluate, rfe};

const ROWS: usize = 240;
const ALPHA: f64 = 0.05;
/// Planted effects by column index: z-volsD pushes the label up,
/// n2v-entropy pulls it down. Everything else is noise.
const SIGNAL: [(usize, f64); 2] = [(1, 1.8), (9, -1.5)];
const INTERCEPT: f64 = -2.2;

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Weekly rows with ten near-unit-variance columns and a label drawn from
/// the planted log-odds. The negative intercept keeps positives scarce, so
/// the elimination has to rebalance before fitting.
fn planted_matrix(seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: NaiveDate = "2020-01-05".parse().unwrap();
    let rows = (0..ROWS)
        .map(|i| {
            let mut values = [0.0; 10];
            for v in &mut values {
                *v = rng.random_range(-1.732..1.732);
            }
            let eta = INTERCEPT
                + SIGNAL
                    .iter()
                    .map(|&(idx, beta)| beta * values[idx])
                    .sum::<f64>();
            let label_next = u8::from(rng.random::<f64>() < sigmoid(eta));
            FeatureRow {
                week_end: start + Days::new(7 * i as u64),
                values,
                label: 0,
                label_next,
            }
        })
        .collect();
    FeatureMatrix {
        rows,
        standardization: None,
    }
}

#[test]
fn elimination_keeps_the_planted_columns_and_the_model_scores() {
    let matrix = planted_matrix(20_260_816);
    let standardized = standardize(&matrix).unwrap();
    let x: Vec<Vec<f64>> = standardized.rows.iter().map(|r| r.values.to_vec()).collect();
    let y: Vec<u8> = standardized.rows.iter().map(|r| r.label_next).collect();
    let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();

    let positives = y.iter().filter(|&&l| l == 1).count();
    assert!(
        positives * 3 < ROWS,
        "the fixture should be imbalanced, got {positives}/{ROWS} positives"
    );

    let outcome = rfe(&x, &y, &names, ALPHA, 5, 4242).unwrap();

    // Oversampling to parity doubles the majority side.
    let majority = ROWS - positives;
    assert_eq!(outcome.balanced_rows, 2 * majority);

    // Both planted columns survive; every drop names a noise column that
    // was insignificant when it fell.
    let survivors = outcome.model.slope_names();
    for (idx, _) in SIGNAL {
        assert!(
            survivors.contains(&FEATURE_NAMES[idx].to_string()),
            "planted column {} was eliminated",
            FEATURE_NAMES[idx]
        );
    }
    assert_eq!(survivors.len() + outcome.trace.len(), FEATURE_NAMES.len());
    for drop in &outcome.trace {
        assert!(drop.p_value >= ALPHA, "{} fell at p={}", drop.feature, drop.p_value);
        assert!(!survivors.contains(&drop.feature));
        assert!(
            SIGNAL.iter().all(|&(idx, _)| FEATURE_NAMES[idx] != drop.feature),
            "a planted column was dropped: {}",
            drop.feature
        );
    }
    for &p in &outcome.model.p_values[1..] {
        assert!(p < ALPHA, "an insignificant slope survived at p={p}");
    }

    // Score on the raw rows, restricted to the surviving columns in model
    // order.
    let kept: Vec<usize> = survivors
        .iter()
        .map(|n| FeatureMatrix::feature_index(n).unwrap())
        .collect();
    let x_eval: Vec<Vec<f64>> = x
        .iter()
        .map(|row| kept.iter().map(|&j| row[j]).collect())
        .collect();
    let report = evaluate(&outcome.model, survivors, &x_eval, &y).unwrap();

    assert_eq!(report.total(), ROWS);
    let by_hand = (report.true_negatives + report.true_positives) as f64 / ROWS as f64;
    assert!((report.accuracy - by_hand).abs() < 1e-15);

    // Balanced training trades a little accuracy for recall on the rare
    // class; both should still sit far above chance for this much signal.
    assert!(report.accuracy > 0.70, "accuracy {}", report.accuracy);
    assert!(report.class1.recall > 0.55, "recall {}", report.class1.recall);
    assert!(
        report.class1.precision > 0.35,
        "precision {}",
        report.class1.precision
    );
    let p = report.class1.precision;
    let r = report.class1.recall;
    assert!((report.class1.f1 - 2.0 * p * r / (p + r)).abs() < 1e-12);
}
