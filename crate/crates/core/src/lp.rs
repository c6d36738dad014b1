//! Dense primal simplex method for tiny standard-form linear programs.
//!
//! Solves `min cᵀx` subject to `Ax = b`, `x ≥ 0`, starting from a caller
//! supplied feasible basis. Bland's rule guarantees termination.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;

pub(crate) struct LpSolution {
    pub x: DVector<f64>,
    #[allow(dead_code)]
    pub objective: f64,
}

/// `basis` lists one column per row of `a`; the corresponding basic
/// solution must be feasible.
pub(crate) fn solve_from_basis(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    basis: &[usize],
) -> Result<LpSolution> {
    let m = a.nrows();
    let nvar = a.ncols();
    debug_assert_eq!(basis.len(), m);
    let bmat = DMatrix::from_fn(m, m, |i, j| a[(i, basis[j])]);
    let inv = bmat
        .try_inverse()
        .ok_or_else(|| Error::NoConvergence("singular starting basis".into()))?;
    // tableau rows: B⁻¹[A | b]
    let mut tab = DMatrix::zeros(m, nvar + 1);
    tab.columns_mut(0, nvar).copy_from(&(&inv * a));
    tab.column_mut(nvar).copy_from(&(&inv * b));
    let mut basis = basis.to_vec();

    let max_iters = 50 * (m + nvar);
    for _ in 0..max_iters {
        // reduced costs c_j − c_Bᵀ B⁻¹ a_j
        let mut entering = None;
        for j in 0..nvar {
            if basis.contains(&j) {
                continue;
            }
            let mut rc = c[j];
            for i in 0..m {
                rc -= c[basis[i]] * tab[(i, j)];
            }
            if rc < -PIVOT_TOL {
                entering = Some(j);
                break;
            }
        }
        let Some(q) = entering else {
            let mut x = DVector::zeros(nvar);
            for i in 0..m {
                x[basis[i]] = tab[(i, nvar)].max(0.0);
            }
            let objective = c.dot(&x);
            return Ok(LpSolution { x, objective });
        };
        // ratio test, ties broken by smallest basic index (Bland)
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let d = tab[(i, q)];
            if d > PIVOT_TOL {
                let ratio = tab[(i, nvar)].max(0.0) / d;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[i] < basis[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leave else {
            return Err(Error::NoConvergence("linear program is unbounded".into()));
        };
        let piv = tab[(r, q)];
        let row_r = tab.row(r) / piv;
        tab.set_row(r, &row_r);
        for i in 0..m {
            if i != r {
                let f = tab[(i, q)];
                if f != 0.0 {
                    let row_i = tab.row(i) - &row_r * f;
                    tab.set_row(i, &row_i);
                }
            }
        }
        basis[r] = q;
    }
    Err(Error::NoConvergence("simplex iteration limit".into()))
}
