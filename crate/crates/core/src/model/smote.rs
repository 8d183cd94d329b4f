//! Synthetic minority oversampling on standardized feature rows.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ModelError;

/// Generates synthetic minority rows until the minority class would reach
/// `target_ratio` times the majority count, i.e.
/// `round(majority_count * target_ratio) - minority.len()` new rows (none if
/// that is not positive).
///
/// Each synthetic point is `x_i + u * (x_nn - x_i)` with `u ~ Uniform(0,1)`,
/// where bases cycle through the minority rows in order and `x_nn` is drawn
/// among the `k_neighbors` nearest other minority rows (Euclidean distance;
/// the neighborhood shrinks to `len - 1` when the class is small). Distances
/// are only meaningful on standardized features.
pub fn smote(
    minority: &[Vec<f64>],
    majority_count: usize,
    k_neighbors: usize,
    target_ratio: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>, ModelError> {
    let m = minority.len();
    if m < 2 {
        return Err(ModelError::TooFewMinority { got: m });
    }
    if k_neighbors == 0 {
        return Err(ModelError::InvalidInput(
            "k_neighbors must be at least 1".to_string(),
        ));
    }
    if !target_ratio.is_finite() || target_ratio <= 0.0 {
        return Err(ModelError::InvalidInput(format!(
            "target_ratio must be positive, got {target_ratio}"
        )));
    }
    let dims = minority[0].len();
    for (i, row) in minority.iter().enumerate() {
        if row.len() != dims {
            return Err(ModelError::InvalidInput(format!(
                "minority row {i} has {} features, expected {dims}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidInput(format!(
                "minority row {i} has a non-finite feature"
            )));
        }
    }

    let wanted = (majority_count as f64 * target_ratio).round() as i64 - m as i64;
    if wanted <= 0 {
        return Ok(Vec::new());
    }
    let wanted = wanted as usize;
    let k = k_neighbors.min(m - 1);

    // k nearest minority neighbors of each row, ties broken by index.
    let neighbors: Vec<Vec<usize>> = (0..m)
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..m)
                .filter(|&j| j != i)
                .map(|j| (euclidean(&minority[i], &minority[j]), j))
                .collect();
            others.sort_by(|a, b| a.partial_cmp(b).unwrap());
            others.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut synthetic = Vec::with_capacity(wanted);
    for t in 0..wanted {
        let i = t % m;
        let nn = neighbors[i][rng.random_range(0..k)];
        let u: f64 = rng.random();
        let row: Vec<f64> = minority[i]
            .iter()
            .zip(&minority[nn])
            .map(|(&a, &b)| a + u * (b - a))
            .collect();
        synthetic.push(row);
    }
    Ok(synthetic)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}
