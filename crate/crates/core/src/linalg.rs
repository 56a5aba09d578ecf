//! Dense symmetric eigen helpers shared by the oracle and the baselines.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::embedding::Embedding;

/// Eigenvalues below this fraction of the largest one are treated as zero.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Eigenpairs of a symmetric matrix sorted by decreasing eigenvalue.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Number of leading eigenvalues above `EIGEN_CLAMP * max(lambda_max, 0)`.
pub fn retained(values: &[f64]) -> usize {
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let floor = EIGEN_CLAMP * top;
    values.iter().take_while(|&&v| v > floor && v > 0.0).count()
}

/// Rows of `U D^{1/2}` for a PSD matrix `K = U D U^T`, keeping only the
/// retained eigenvalues. Row distances equal kernel distances.
pub fn psd_embedding(k: &DMatrix<f64>) -> Embedding {
    let (values, vectors) = sorted_eigen(k);
    let r = retained(&values);
    let n = k.nrows();
    let mut out = Vec::with_capacity(n * r);
    for i in 0..n {
        for j in 0..r {
            out.push(vectors[(i, j)] * values[j].sqrt());
        }
    }
    Embedding::new(n, r, out).expect("shape is consistent")
}

/// `U_r D_r^{-1/2}` for the retained eigenpairs; right-multiplying a column
/// block `K_MB` by it gives a Nystrom embedding.
pub fn inverse_sqrt_factor(k_bb: &DMatrix<f64>) -> DMatrix<f64> {
    let (values, vectors) = sorted_eigen(k_bb);
    let r = retained(&values);
    let mut w = vectors.columns(0, r).into_owned();
    for (j, mut col) in w.column_iter_mut().enumerate() {
        col /= values[j].sqrt();
    }
    w
}

/// Moore-Penrose pseudo-inverse of a PSD matrix through its eigenpairs.
pub fn psd_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let w = inverse_sqrt_factor(m);
    &w * w.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 1.0]);
        let (v, u) = sorted_eigen(&m);
        assert_eq!(v, vec![5.0, 2.0, 1.0]);
        assert!((u[(1, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn embedding_reproduces_matrix() {
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.5, -1.0, 3.0, 0.0]);
        let k = &b * b.transpose();
        let e = psd_embedding(&k);
        assert_eq!(e.cols(), 2);
        let m = e.to_matrix();
        assert!((&m * m.transpose() - k).abs().max() < 1e-12);
    }

    #[test]
    fn pinv_of_singular_matrix() {
        let k = DMatrix::from_element(2, 2, 1.0);
        let p = psd_pinv(&k);
        assert!((p - DMatrix::from_element(2, 2, 0.25)).abs().max() < 1e-14);
    }
}
