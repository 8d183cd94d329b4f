//! Skip-gram with negative sampling over node walks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rng::sub_seed;

use super::{EmbeddingError, WalkConfig};

/// Learning rate never decays below this fraction of its starting value.
const MIN_LR_FRACTION: f64 = 1e-4;
/// Negative-sampling distribution flattens unigram counts by this power.
const UNIGRAM_POWER: f64 = 0.75;

const SALT_INIT: u64 = 0x696e6974; // "init"
const SALT_NEG: u64 = 0x6e6567; // "neg"

/// Bookkeeping from one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    /// Center/context pairs per epoch.
    pub total_pairs: usize,
    /// Mean pair loss of each epoch, in order.
    pub epoch_mean_loss: Vec<f64>,
}

/// Negative-sampling loss of one positive pair:
/// -ln sigma(u.v) - sum_i ln sigma(-u.n_i).
pub fn pair_loss(center: &[f64], positive: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let mut loss = softplus(-dot(center, positive));
    for negative in negatives {
        loss += softplus(dot(center, negative));
    }
    loss
}

/// Analytic gradients of [`pair_loss`] with respect to the center vector,
/// the positive context vector, and each negative vector, in that order.
pub fn pair_gradients(
    center: &[f64],
    positive: &[f64],
    negatives: &[Vec<f64>],
) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let dims = center.len();
    let mut d_center = vec![0.0; dims];
    let pos_score = sigmoid(dot(center, positive)) - 1.0;
    let d_positive: Vec<f64> = center.iter().map(|&u| pos_score * u).collect();
    for (g, &v) in d_center.iter_mut().zip(positive) {
        *g += pos_score * v;
    }
    let mut d_negatives = Vec::with_capacity(negatives.len());
    for negative in negatives {
        let neg_score = sigmoid(dot(center, negative));
        d_negatives.push(center.iter().map(|&u| neg_score * u).collect());
        for (g, &v) in d_center.iter_mut().zip(negative) {
            *g += neg_score * v;
        }
    }
    (d_center, d_positive, d_negatives)
}

/// Trains input/output vectors over the walks and returns the input vectors,
/// one per node, along with loss statistics.
///
/// Initialization, negative sampling, and pair order are fully determined by
/// `seed`; with zero epochs the result is exactly the initialization.
pub fn train_embedding(
    walks: &[Vec<usize>],
    node_count: usize,
    cfg: &WalkConfig,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, TrainStats), EmbeddingError> {
    cfg.validate()?;
    if node_count == 0 || walks.is_empty() {
        return Err(EmbeddingError::EmptyInput(
            "training needs at least one node and one walk".to_string(),
        ));
    }

    // Input vectors start uniform in (-0.5/dims, 0.5/dims); output vectors
    // start at zero so the first gradient steps are driven by the inputs.
    let dims = cfg.dims;
    let mut init_rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, SALT_INIT));
    let mut input: Vec<Vec<f64>> = (0..node_count)
        .map(|_| {
            (0..dims)
                .map(|_| (init_rng.random::<f64>() - 0.5) / dims as f64)
                .collect()
        })
        .collect();
    let mut output: Vec<Vec<f64>> = vec![vec![0.0; dims]; node_count];

    let pairs = collect_pairs(walks, node_count, cfg.window)?;
    let stats_shell = TrainStats {
        total_pairs: pairs.len(),
        epoch_mean_loss: Vec::new(),
    };
    if cfg.epochs == 0 {
        return Ok((input, stats_shell));
    }
    if pairs.is_empty() {
        return Err(EmbeddingError::EmptyInput(
            "walks yielded no training pairs".to_string(),
        ));
    }

    let sampler = UnigramTable::from_walks(walks, node_count);
    let mut neg_rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, SALT_NEG));
    let total_updates = (pairs.len() * cfg.epochs) as f64;
    let mut epoch_mean_loss = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;
    let mut negatives: Vec<usize> = Vec::with_capacity(cfg.negatives);

    for epoch in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        for &(center, context) in &pairs {
            // Draw the full quota, then drop any that collide with the
            // positive context, so the sample stream does not depend on
            // vector values.
            negatives.clear();
            for _ in 0..cfg.negatives {
                let candidate = sampler.sample(&mut neg_rng);
                if candidate != context {
                    negatives.push(candidate);
                }
            }

            let lr = cfg.learning_rate
                * (1.0 - step as f64 / total_updates).max(MIN_LR_FRACTION);

            let loss = update_pair(&mut input, &mut output, center, context, &negatives, lr);
            if !loss.is_finite() {
                return Err(EmbeddingError::NanLoss { epoch });
            }
            loss_sum += loss;
            step += 1;
        }
        epoch_mean_loss.push(loss_sum / pairs.len() as f64);
    }

    Ok((
        input,
        TrainStats {
            total_pairs: pairs.len(),
            epoch_mean_loss,
        },
    ))
}

/// One SGD step on a positive pair plus its negatives; returns the pair loss
/// before the step. The center gradient is accumulated across the positive
/// and all negatives before being applied.
fn update_pair(
    input: &mut [Vec<f64>],
    output: &mut [Vec<f64>],
    center: usize,
    context: usize,
    negatives: &[usize],
    lr: f64,
) -> f64 {
    let dims = input[center].len();
    let mut d_center = vec![0.0; dims];
    let mut loss;
    {
        let u = &input[center];
        let v = &output[context];
        let score = dot(u, v);
        loss = softplus(-score);
        let coeff = sigmoid(score) - 1.0;
        for d in 0..dims {
            d_center[d] += coeff * v[d];
        }
        let grad_v: Vec<f64> = u.iter().map(|&x| coeff * x).collect();
        let v = &mut output[context];
        for d in 0..dims {
            v[d] -= lr * grad_v[d];
        }
    }
    for &negative in negatives {
        let u = &input[center];
        let n = &output[negative];
        let score = dot(u, n);
        loss += softplus(score);
        let coeff = sigmoid(score);
        for d in 0..dims {
            d_center[d] += coeff * n[d];
        }
        let grad_n: Vec<f64> = u.iter().map(|&x| coeff * x).collect();
        let n = &mut output[negative];
        for d in 0..dims {
            n[d] -= lr * grad_n[d];
        }
    }
    let u = &mut input[center];
    for d in 0..dims {
        u[d] -= lr * d_center[d];
    }
    loss
}

/// Expands walks into (center, context) pairs in walk order, using a
/// symmetric window and skipping the center itself.
fn collect_pairs(
    walks: &[Vec<usize>],
    node_count: usize,
    window: usize,
) -> Result<Vec<(usize, usize)>, EmbeddingError> {
    let mut pairs = Vec::new();
    for walk in walks {
        for (i, &center) in walk.iter().enumerate() {
            if center >= node_count {
                return Err(EmbeddingError::EmptyInput(format!(
                    "walk references node {center} outside 0..{node_count}"
                )));
            }
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(walk.len() - 1);
            for j in lo..=hi {
                if j != i {
                    pairs.push((center, walk[j]));
                }
            }
        }
    }
    Ok(pairs)
}

/// Cumulative table for sampling nodes proportionally to count^0.75.
struct UnigramTable {
    cumulative: Vec<f64>,
}

impl UnigramTable {
    fn from_walks(walks: &[Vec<usize>], node_count: usize) -> Self {
        let mut counts = vec![0usize; node_count];
        for walk in walks {
            for &node in walk {
                counts[node] += 1;
            }
        }
        let mut cumulative = Vec::with_capacity(node_count);
        let mut acc = 0.0;
        for &c in &counts {
            acc += (c as f64).powf(UNIGRAM_POWER);
            cumulative.push(acc);
        }
        UnigramTable { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let r = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= r)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// ln(1 + e^x), stable for large |x|.
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}
