//! Diffusion (heat) kernel over a weekly graph.
//!
//! With H = A - D (negative weighted Laplacian), the kernel K = exp(beta * H)
//! measures how heat injected at one node spreads to the others; its rows sum
//! to one because H annihilates the constant vector. The normalized kernel
//! K_ij / sqrt(K_ii * K_jj) is the similarity matrix handed to the
//! factorization.

use nalgebra::DMatrix;

use super::CommunityError;
use crate::graph::WeeklyGraph;
use crate::linalg::inf_norm;

/// Default diffusion time.
pub const DEFAULT_BETA: f64 = 1.0;

/// Taylor terms stop once the next term's max-norm falls below this.
const TAYLOR_EPS: f64 = 1e-16;
const MAX_TAYLOR_TERMS: usize = 200;

/// Matrix exponential by scaling-and-squaring: the argument is halved until
/// its max-norm is at most 1/2, the Taylor series is summed to convergence,
/// and the result squared back up.
fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = inf_norm(m);
    let squarings: u32 = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings as i32);

    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=MAX_TAYLOR_TERMS {
        term = (&term * &scaled) / k as f64;
        if inf_norm(&term) < TAYLOR_EPS {
            break;
        }
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Heat kernel exp(beta * (A - D)), symmetrized against floating-point drift.
/// beta must be finite and non-negative; beta = 0 yields the exact identity.
pub fn diffusion_kernel(g: &WeeklyGraph, beta: f64) -> Result<DMatrix<f64>, CommunityError> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(CommunityError::InvalidParameter(format!(
            "beta must be finite and non-negative, got {beta}"
        )));
    }
    let n = g.node_count();
    let mut h = g.adjacency_matrix();
    for i in 0..n {
        h[(i, i)] -= g.degree(i);
    }
    let k = expm(&(h * beta));
    Ok((&k + &k.transpose()) * 0.5)
}

/// Cosine-style normalization K_ij / sqrt(K_ii * K_jj); unit diagonal.
/// Fails if any diagonal entry is not strictly positive, which a genuine heat
/// kernel cannot produce.
pub fn normalized_kernel(k: &DMatrix<f64>) -> Result<DMatrix<f64>, CommunityError> {
    let n = k.nrows();
    let mut scale = Vec::with_capacity(n);
    for i in 0..n {
        let d = k[(i, i)];
        if d <= 0.0 || !d.is_finite() {
            return Err(CommunityError::DegenerateKernel(format!(
                "diagonal entry {i} is {d}, expected strictly positive"
            )));
        }
        scale.push(d.sqrt());
    }
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = k[(i, j)] / (scale[i] * scale[j]);
        }
    }
    Ok(out)
}
