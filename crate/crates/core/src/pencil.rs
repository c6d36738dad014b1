//! Generalized eigenvalues and condition number of a pair of Laplacians.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{LaplacianKind, LaplacianMatrix};
use crate::linalg::{cholesky, ones_complement_basis};
use crate::perm::Permutation;
use crate::rng::rng_from;
use crate::spectral::sym_eig;

pub const DEFAULT_SHIFT: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaMethod {
    ExactProjected,
    Shifted(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KappaResult {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub method: KappaMethod,
}

/// Generalized eigenpairs of `L_G x = λ L_H x` restricted to `𝟙⊥`.
#[derive(Clone, Debug)]
pub struct PencilEigen {
    /// Ascending, length `n − 1`.
    pub values: Vec<f64>,
    /// `n × (n−1)`; column `i` is orthogonal to `𝟙` and `L_H`-normalized.
    pub vectors: DMatrix<f64>,
}

fn check_pair(lg: &LaplacianMatrix, lh: &LaplacianMatrix) -> Result<usize> {
    let n = lg.n();
    if lh.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: lh.n() });
    }
    if lg.kind != LaplacianKind::Combinatorial || lh.kind != LaplacianKind::Combinatorial {
        return Err(Error::InvalidArgument("pencils need combinatorial Laplacians".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("pencils need at least two vertices".into()));
    }
    Ok(n)
}

fn min_pivot(m: &DMatrix<f64>) -> f64 {
    1e-12 * m.trace().abs().max(f64::MIN_POSITIVE)
}

/// Solves `(A, B)` for symmetric `A` and positive definite `B` through
/// `B = R Rᵀ`: eigenpairs of `R⁻¹ A R⁻ᵀ`, mapped back by `R⁻ᵀ`.
fn definite_pencil(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let r = cholesky(b, min_pivot(b)).ok_or(Error::Disconnected)?;
    let ra = r.solve_lower_triangular(a).ok_or(Error::NotPositiveDefinite)?;
    let c = r
        .solve_lower_triangular(&ra.transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = sym_eig(&c)?;
    let x = r
        .transpose()
        .solve_upper_triangular(&eig.vectors)
        .ok_or(Error::NotPositiveDefinite)?;
    Ok((eig.values, x))
}

pub fn generalized_eigen(lg: &LaplacianMatrix, lh: &LaplacianMatrix) -> Result<PencilEigen> {
    let n = check_pair(lg, lh)?;
    let u = ones_complement_basis(n);
    let a = u.transpose() * &lg.entries * &u;
    let b = u.transpose() * &lh.entries * &u;
    let (values, y) = definite_pencil(&a, &b)?;
    let floor = 1e-12 * values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if values.first().is_none_or(|&v| v <= floor) {
        return Err(Error::Disconnected);
    }
    Ok(PencilEigen { values, vectors: u * y })
}

/// Ascending nontrivial generalized eigenvalues, `n − 1` of them.
pub fn generalized_eigenvalues(lg: &LaplacianMatrix, lh: &LaplacianMatrix) -> Result<Vec<f64>> {
    Ok(generalized_eigen(lg, lh)?.values)
}

pub fn kappa(lg: &LaplacianMatrix, lh: &LaplacianMatrix) -> Result<KappaResult> {
    let values = generalized_eigenvalues(lg, lh)?;
    let lambda_min = values[0];
    let lambda_max = values[values.len() - 1];
    Ok(KappaResult {
        lambda_min,
        lambda_max,
        kappa: lambda_max / lambda_min,
        method: KappaMethod::ExactProjected,
    })
}

/// Condition number through the shifted matrices `L + ε𝟙𝟙ᵀ/n`.
///
/// Both shifted matrices map `𝟙` to `ε𝟙`, which adds the eigenvalue 1
/// along `𝟙`. That eigenvalue is removed (the one whose unit eigenvector
/// has the largest component along `𝟙`, above 0.99 unless the eigenvalue 1
/// is repeated) before taking the ratio of the extremes.
pub fn kappa_shifted(lg: &LaplacianMatrix, lh: &LaplacianMatrix, epsilon: f64) -> Result<KappaResult> {
    let n = check_pair(lg, lh)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("shift {epsilon} must be positive")));
    }
    let shift = DMatrix::from_element(n, n, epsilon / n as f64);
    let a = &lg.entries + &shift;
    let b = &lh.entries + &shift;
    let (values, x) = definite_pencil(&a, &b)?;
    let along_ones = |c: usize| {
        let col = x.column(c);
        col.sum().abs() / ((n as f64).sqrt() * col.norm())
    };
    let drop = (0..n)
        .max_by(|&p, &q| along_ones(p).total_cmp(&along_ones(q)).then(q.cmp(&p)))
        .unwrap_or(0);
    let rest: Vec<f64> = values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != drop)
        .map(|(_, &v)| v)
        .collect();
    let lambda_min = rest[0];
    let lambda_max = rest[rest.len() - 1];
    if !(lambda_min > 0.0) {
        return Err(Error::Disconnected);
    }
    Ok(KappaResult {
        lambda_min,
        lambda_max,
        kappa: lambda_max / lambda_min,
        method: KappaMethod::Shifted(epsilon),
    })
}

/// Checks `λ_min xᵀL_Hx ≤ xᵀL_Gx ≤ λ_max xᵀL_Hx` for random unit vectors
/// orthogonal to `𝟙`, with slack `1e−9` relative to the form values.
pub fn rayleigh_bounds_check(lg: &LaplacianMatrix, lh: &LaplacianMatrix, trials: usize, seed: u64) -> Result<bool> {
    let k = kappa(lg, lh)?;
    let n = lg.n();
    let mut rng = rng_from(seed);
    for _ in 0..trials {
        let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mean = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        if !rayleigh_holds(lg, lh, &k, &x) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Both inequalities of the Rayleigh bound at one vector.
pub fn rayleigh_holds(lg: &LaplacianMatrix, lh: &LaplacianMatrix, k: &KappaResult, x: &[f64]) -> bool {
    let a = lg.quadratic_form(x);
    let b = lh.quadratic_form(x);
    let slack = 1e-9 * (1.0 + a.abs() + b.abs());
    k.lambda_min * b <= a + slack && a <= k.lambda_max * b + slack
}

/// `P L Pᵀ`: the Laplacian after renaming vertex `v` to `σ(v)`.
pub fn permute_laplacian(l: &LaplacianMatrix, sigma: &Permutation) -> Result<LaplacianMatrix> {
    let n = l.n();
    if sigma.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: sigma.len() });
    }
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(sigma.apply(i), sigma.apply(j))] = l.entries[(i, j)];
        }
    }
    Ok(LaplacianMatrix { entries: out, kind: l.kind })
}
