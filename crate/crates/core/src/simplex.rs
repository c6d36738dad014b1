//! k-simplexes in `R^k`: volume, log-volume gradient, barycentric
//! coordinates, and the L1 projection used for mixture coefficients.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::solve_from_basis;

/// A k-simplex stored as the `k × (k+1)` matrix of vertex columns
/// `[v₀ | … | v_k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Simplex {
    vertices: DMatrix<f64>,
}

/// The fixed `(k+1) × k` incidence matrix Γ with `KΓ = [v₁−v₀ | … | v_k−v₀]`.
pub fn incidence(k: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(k + 1, k);
    for j in 0..k {
        g[(0, j)] = -1.0;
        g[(j + 1, j)] = 1.0;
    }
    g
}

/// `ln k!`
fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

impl Simplex {
    pub fn new(vertices: DMatrix<f64>) -> Result<Simplex> {
        let k = vertices.nrows();
        if vertices.ncols() != k + 1 {
            return Err(Error::DimensionMismatch {
                expected: k + 1,
                got: vertices.ncols(),
            });
        }
        if k == 0 {
            return Err(Error::InvalidArgument("simplex dimension must be >= 1".into()));
        }
        Ok(Simplex { vertices })
    }

    pub fn from_vertices(points: &[Vec<f64>]) -> Result<Simplex> {
        let k = points.len().saturating_sub(1);
        if points.iter().any(|p| p.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: points.iter().map(|p| p.len()).find(|&l| l != k).unwrap_or(0),
            });
        }
        Simplex::new(DMatrix::from_fn(k, k + 1, |i, j| points[j][i]))
    }

    pub fn dim(&self) -> usize {
        self.vertices.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.vertices
    }

    pub fn vertex(&self, j: usize) -> Vec<f64> {
        self.vertices.column(j).iter().copied().collect()
    }

    pub fn vertex_list(&self) -> Vec<Vec<f64>> {
        (0..=self.dim()).map(|j| self.vertex(j)).collect()
    }

    pub fn centroid(&self) -> Vec<f64> {
        let k = self.dim();
        (0..k)
            .map(|i| self.vertices.row(i).sum() / (k + 1) as f64)
            .collect()
    }

    /// Edge Gram matrix `Q = ΓᵀKᵀKΓ`.
    pub fn edge_gram(&self) -> DMatrix<f64> {
        let e = &self.vertices * incidence(self.dim());
        e.transpose() * e
    }

    fn checked_gram(&self) -> Result<(DMatrix<f64>, f64)> {
        let k = self.dim();
        let q = self.edge_gram();
        let det = q.determinant();
        let scale = (q.trace() / k as f64).powi(k as i32);
        if !(det > 1e-14 * scale) || !det.is_finite() {
            return Err(Error::DegenerateSimplex { det });
        }
        Ok((q, det))
    }

    /// `ln vol = ln c_k + ½ ln det Q` with `c_k = 1/k!`.
    pub fn log_volume(&self) -> Result<f64> {
        let (_, det) = self.checked_gram()?;
        Ok(0.5 * det.ln() - ln_factorial(self.dim()))
    }

    pub fn volume(&self) -> Result<f64> {
        self.log_volume().map(f64::exp)
    }

    /// Gradient of `ln vol` with respect to every entry of the vertex matrix.
    ///
    /// `d(½ ln det Q) = tr(Q⁻¹ Γᵀ Kᵀ dK Γ)`, so the gradient is `K Γ Q⁻¹ Γᵀ`.
    pub fn log_volume_gradient(&self) -> Result<DMatrix<f64>> {
        let k = self.dim();
        let (q, det) = self.checked_gram()?;
        let qinv = q
            .cholesky()
            .ok_or(Error::DegenerateSimplex { det })?
            .inverse();
        let gamma = incidence(k);
        Ok(&self.vertices * &gamma * qinv * gamma.transpose())
    }

    /// Reusable solver for affine coordinates with respect to this simplex.
    pub fn barycentric_solver(&self) -> Result<BarycentricSolver> {
        self.checked_gram()?;
        let k = self.dim();
        let mut m = DMatrix::zeros(k + 1, k + 1);
        m.rows_mut(0, k).copy_from(&self.vertices);
        m.row_mut(k).fill(1.0);
        Ok(BarycentricSolver { lu: m.lu(), k })
    }

    /// Unique `θ` with `Kθ = x`, `𝟙ᵀθ = 1`.
    pub fn barycentric(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.barycentric_solver()?.solve(x)
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.barycentric(x)?.iter().all(|&t| t >= 0.0))
    }

    /// `Kθ`
    pub fn combine(&self, theta: &[f64]) -> Vec<f64> {
        let t = DVector::from_column_slice(theta);
        (&self.vertices * t).iter().copied().collect()
    }

    /// Mixture weights minimizing `|x − Kθ|₁` over the probability simplex.
    pub fn solve_theta_l1(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let solver = self.barycentric_solver()?;
        solve_theta_l1_with(self, &solver, x)
    }
}

pub struct BarycentricSolver {
    lu: LU<f64, Dyn, Dyn>,
    k: usize,
}

impl BarycentricSolver {
    pub fn solve(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: x.len(),
            });
        }
        let mut rhs = DVector::zeros(self.k + 1);
        rhs.rows_mut(0, self.k).copy_from_slice(x);
        rhs[self.k] = 1.0;
        let sol = self
            .lu
            .solve(&rhs)
            .ok_or(Error::DegenerateSimplex { det: 0.0 })?;
        Ok(sol.iter().copied().collect())
    }
}

/// Variables are `[θ (k+1) | r⁺ (k) | r⁻ (k)]` with rows `Kθ + r⁺ − r⁻ = x`
/// and `𝟙ᵀθ = 1`.
pub(crate) fn solve_theta_l1_with(
    s: &Simplex,
    solver: &BarycentricSolver,
    x: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let theta = solver.solve(x)?;
    if theta.iter().all(|&t| t >= 0.0) {
        return Ok((theta, 0.0));
    }
    let k = s.dim();
    let kmat = s.matrix();
    let nvar = 3 * k + 1;
    let mut a = DMatrix::zeros(k + 1, nvar);
    a.view_mut((0, 0), (k, k + 1)).copy_from(kmat);
    for d in 0..k {
        a[(d, k + 1 + d)] = 1.0;
        a[(d, 2 * k + 1 + d)] = -1.0;
    }
    for j in 0..=k {
        a[(k, j)] = 1.0;
    }
    let mut b = DVector::zeros(k + 1);
    b.rows_mut(0, k).copy_from_slice(x);
    b[k] = 1.0;
    let mut c = DVector::zeros(nvar);
    c.rows_mut(k + 1, 2 * k).fill(1.0);

    // start at the vertex nearest to x in L1; residual signs pick r⁺ or r⁻
    let start = (0..=k)
        .map(|j| {
            let d: f64 = (0..k).map(|i| (x[i] - kmat[(i, j)]).abs()).sum();
            (j, d)
        })
        .fold((0, f64::INFINITY), |acc, (j, d)| if d < acc.1 { (j, d) } else { acc })
        .0;
    let mut basis = Vec::with_capacity(k + 1);
    for d in 0..k {
        if x[d] - kmat[(d, start)] >= 0.0 {
            basis.push(k + 1 + d);
        } else {
            basis.push(2 * k + 1 + d);
        }
    }
    basis.push(start);
    let sol = solve_from_basis(&a, &b, &c, &basis)?;
    let mut theta: Vec<f64> = (0..=k).map(|j| sol.x[j].max(0.0)).collect();
    let sum: f64 = theta.iter().sum();
    theta.iter_mut().for_each(|t| *t /= sum);
    let fitted = s.combine(&theta);
    let residual = x.iter().zip(&fitted).map(|(a, b)| (a - b).abs()).sum();
    Ok((theta, residual))
}

/// Per-vertex mixture coefficients; row `i` is `θᵢ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixtureTable {
    pub theta: Vec<Vec<f64>>,
}

impl MixtureTable {
    pub fn new(theta: Vec<Vec<f64>>) -> Result<MixtureTable> {
        let width = theta.first().map_or(0, |r| r.len());
        for row in &theta {
            if row.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    got: row.len(),
                });
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&t| t < -1e-9) || (sum - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidArgument(format!(
                    "mixture row is not a probability vector: {row:?}"
                )));
            }
        }
        Ok(MixtureTable { theta })
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn width(&self) -> usize {
        self.theta.first().map_or(0, |r| r.len())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.theta[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_triangle() -> Simplex {
        Simplex::from_vertices(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    fn random_simplex(rng: &mut impl Rng, k: usize) -> Simplex {
        loop {
            let m = DMatrix::from_fn(k, k + 1, |_, _| rng.random_range(-2.0..2.0));
            let s = Simplex::new(m).unwrap();
            if s.edge_gram().determinant() > 1e-3 {
                return s;
            }
        }
    }

    fn fd_gradient(s: &Simplex, h: f64) -> DMatrix<f64> {
        let k = s.dim();
        DMatrix::from_fn(k, k + 1, |i, j| {
            let mut p = s.matrix().clone();
            let mut m = s.matrix().clone();
            p[(i, j)] += h;
            m[(i, j)] -= h;
            let fp = Simplex::new(p).unwrap().log_volume().unwrap();
            let fm = Simplex::new(m).unwrap().log_volume().unwrap();
            (fp - fm) / (2.0 * h)
        })
    }

    #[test]
    fn volume_examples() {
        assert!((unit_triangle().volume().unwrap() - 0.5).abs() < 1e-15);
        let scaled = Simplex::new(unit_triangle().matrix() * 3.0).unwrap();
        assert!((scaled.volume().unwrap() - 4.5).abs() < 1e-12);
        let flat = Simplex::from_vertices(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]])
            .unwrap();
        assert!(matches!(flat.volume(), Err(Error::DegenerateSimplex { .. })));
        assert!(flat.log_volume_gradient().is_err());
        assert!(flat.barycentric(&[0.0, 0.0]).is_err());
        // unit cube corner simplex in 3d has volume 1/6
        let tet = Simplex::new(DMatrix::from_row_slice(
            3,
            4,
            &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ))
        .unwrap();
        assert!((tet.volume().unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences_on_unit_triangle() {
        let s = unit_triangle();
        let g = s.log_volume_gradient().unwrap();
        let fd = fd_gradient(&s, 1e-5);
        assert!((&g - &fd).norm() / g.norm() <= 1e-6);
    }

    #[test]
    fn gradient_directional_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 1..6 {
            let s = random_simplex(&mut rng, k);
            let g = s.log_volume_gradient().unwrap();
            // scaling K ↦ (1+t)K changes ln vol at rate k
            assert!((g.dot(s.matrix()) - k as f64).abs() < 1e-9);
            // uniform translation leaves the volume unchanged
            for i in 0..k {
                assert!(g.row(i).sum().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gradient_matches_fd_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let k = rng.random_range(2..7);
            let s = random_simplex(&mut rng, k);
            let g = s.log_volume_gradient().unwrap();
            let fd = fd_gradient(&s, 1e-5);
            assert!((&g - &fd).norm() / g.norm() <= 1e-5);
        }
    }

    #[test]
    fn barycentric_examples() {
        let s = unit_triangle();
        let c = s.barycentric(&s.centroid()).unwrap();
        assert!(c.iter().all(|t| (t - 1.0 / 3.0).abs() < 1e-14));
        let v0 = s.barycentric(&[0.0, 0.0]).unwrap();
        assert!((v0[0] - 1.0).abs() < 1e-14 && v0[1].abs() < 1e-14 && v0[2].abs() < 1e-14);
        let t = s.barycentric(&[0.25, 0.25]).unwrap();
        for (a, b) in t.iter().zip([0.5, 0.25, 0.25]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(s.contains(&[0.2, 0.2]).unwrap());
        assert!(!s.contains(&[1.0, 1.0]).unwrap());
    }

    /// Dense grid over the probability simplex as an independent oracle.
    fn grid_min_l1(s: &Simplex, x: &[f64], steps: usize) -> f64 {
        let mut best = f64::INFINITY;
        for a in 0..=steps {
            for b in 0..=steps - a {
                let th = [
                    a as f64 / steps as f64,
                    b as f64 / steps as f64,
                    (steps - a - b) as f64 / steps as f64,
                ];
                let f = s.combine(&th);
                let r: f64 = x.iter().zip(&f).map(|(p, q)| (p - q).abs()).sum();
                best = best.min(r);
            }
        }
        best
    }

    #[test]
    fn theta_l1_examples() {
        let s = unit_triangle();
        let (th, r) = s.solve_theta_l1(&[0.2, 0.3]).unwrap();
        assert_eq!(r, 0.0);
        assert!((th[0] - 0.5).abs() < 1e-14);
        let (th, r) = s.solve_theta_l1(&[2.0, 0.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!((th[1] - 1.0).abs() < 1e-12);
        assert!((grid_min_l1(&s, &[2.0, 0.0], 200) - 1.0).abs() < 1e-12);
        let (th, r) = s.solve_theta_l1(&[0.0, 1.0]).unwrap();
        assert!(r.abs() < 1e-14 && (th[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn theta_l1_matches_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let s = random_simplex(&mut rng, 2);
            let x = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
            let (th, r) = s.solve_theta_l1(&x).unwrap();
            assert!(th.iter().all(|&t| t >= 0.0));
            assert!(((th.iter().sum::<f64>()) - 1.0).abs() < 1e-12);
            let grid = grid_min_l1(&s, &x, 400);
            // LP optimum can only beat the grid, and the grid is fine enough
            assert!(r <= grid + 1e-9);
            assert!(grid - r < 0.05);
        }
    }

    #[test]
    fn theta_l1_higher_dim_not_worse_than_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for k in 3..6 {
            let s = random_simplex(&mut rng, k);
            for _ in 0..20 {
                let x: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
                let (th, r) = s.solve_theta_l1(&x).unwrap();
                let f = s.combine(&th);
                let direct: f64 = x.iter().zip(&f).map(|(a, b)| (a - b).abs()).sum();
                assert!((direct - r).abs() < 1e-9);
                for j in 0..=k {
                    let v = s.vertex(j);
                    let dv: f64 = x.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
                    assert!(r <= dv + 1e-9);
                }
                // random feasible θ never beats the LP
                for _ in 0..20 {
                    let mut w: Vec<f64> = (0..=k).map(|_| rng.random::<f64>()).collect();
                    let sw: f64 = w.iter().sum();
                    w.iter_mut().for_each(|t| *t /= sw);
                    let f = s.combine(&w);
                    let rw: f64 = x.iter().zip(&f).map(|(a, b)| (a - b).abs()).sum();
                    assert!(r <= rw + 1e-9);
                }
            }
        }
    }

    #[test]
    fn mixture_table_validation() {
        assert!(MixtureTable::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).is_ok());
        assert!(MixtureTable::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(MixtureTable::new(vec![vec![1.1, -0.1]]).is_err());
        assert!(MixtureTable::new(vec![vec![1.0], vec![0.5, 0.5]]).is_err());
    }

    proptest! {
        #[test]
        fn barycentric_reconstructs_interior_points(
            seed in 0u64..1000, k in 1usize..6, w in proptest::collection::vec(0.01f64..1.0, 6)
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_simplex(&mut rng, k);
            let sum: f64 = w[..=k].iter().sum();
            let theta: Vec<f64> = w[..=k].iter().map(|t| t / sum).collect();
            let x = s.combine(&theta);
            let back = s.barycentric(&x).unwrap();
            let x2 = s.combine(&back);
            for (a, b) in x.iter().zip(&x2) {
                prop_assert!((a - b).abs() < 1e-8);
            }
            for (a, b) in theta.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }

        #[test]
        fn vertex_permutation_equivariance(
            seed in 0u64..1000,
            perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_simplex(&mut rng, 3);
            let permuted = Simplex::new(DMatrix::from_fn(3, 4, |i, j| s.matrix()[(i, perm[j])])).unwrap();
            prop_assert!((s.volume().unwrap() - permuted.volume().unwrap()).abs() < 1e-9);
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let a = s.barycentric(&x).unwrap();
            let b = permuted.barycentric(&x).unwrap();
            for j in 0..4 {
                prop_assert!((b[j] - a[perm[j]]).abs() < 1e-9);
            }
        }
    }
}
