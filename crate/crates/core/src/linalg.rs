//! Small dense helpers shared by the simplex and pencil code.

use nalgebra::{DMatrix, DVector};

/// Orthonormal basis of the complement of the all-ones vector in `R^n`,
/// as the `n × (n−1)` matrix of columns `2..n` of the Householder
/// reflection that sends `e₁` to `𝟙/√n`.
pub fn ones_complement_basis(n: usize) -> DMatrix<f64> {
    assert!(n >= 1);
    let s = 1.0 / (n as f64).sqrt();
    // w = e₁ − 𝟙/√n, H = I − 2wwᵀ/(wᵀw)
    let mut w = DVector::from_element(n, -s);
    w[0] += 1.0;
    let ww = w.dot(&w);
    let mut h = DMatrix::identity(n, n);
    if ww > 0.0 {
        h -= (&w * w.transpose()) * (2.0 / ww);
    }
    h.columns(1, n - 1).into_owned()
}

/// Lower Cholesky factor with pivots required to stay above `min_pivot`.
pub fn cholesky(a: &DMatrix<f64>, min_pivot: f64) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for p in 0..j {
            d -= l[(j, p)] * l[(j, p)];
        }
        if d.is_nan() || d <= min_pivot {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_basis_is_orthonormal_and_orthogonal_to_ones() {
        for n in [1usize, 2, 3, 7, 20] {
            let u = ones_complement_basis(n);
            assert_eq!(u.ncols(), n - 1);
            let gram = u.transpose() * &u;
            assert!((gram - DMatrix::identity(n - 1, n - 1)).amax() < 1e-13);
            for c in 0..n - 1 {
                assert!(u.column(c).sum().abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0]);
        let l = cholesky(&a, 1e-12).unwrap();
        assert!((&l * l.transpose() - &a).amax() < 1e-13);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(cholesky(&singular, 1e-12).is_none());
    }
}
