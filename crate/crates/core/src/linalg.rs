//! Small shared helpers over nalgebra types.

use nalgebra::{DMatrix, DVector};

/// Symmetric eigendecomposition with eigenpairs sorted by descending eigenvalue.
///
/// nalgebra does not promise an ordering, so callers that need "top-k" pairs
/// (NNDSVD, PCA) go through this.
pub fn sym_eigen_desc(m: DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues of a real symmetric matrix are finite")
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (values, vectors)
}

/// Maximum absolute row sum (the induced infinity norm).
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
