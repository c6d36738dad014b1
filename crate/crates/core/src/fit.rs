//! Minimum-volume enclosing simplex fitting with an L1 data term.
//!
//! Minimizes `Σᵢ min_θ |xᵢ − Kθ|₁ + γ ln vol(K)` over the vertex matrix `K`,
//! with each `θ` constrained to the probability simplex.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::ones_complement_basis;
use crate::simplex::{solve_theta_l1_with, MixtureTable, Simplex};
use crate::spectral::sym_eig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Stop when the relative objective change falls below this.
    pub tol: f64,
    /// Initial line-search step as a fraction of the data diameter.
    pub step: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iters: 500,
            tol: 1e-6,
            step: 0.1,
            armijo: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub objective_trace: Vec<f64>,
    pub residual_l1: f64,
    pub log_volume: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct SimplexFit {
    pub simplex: Simplex,
    pub mixture: MixtureTable,
    pub report: FitReport,
}

/// JSON dump `{K, theta, objective_trace, residual_l1, log_volume}`.
#[derive(Debug, Serialize)]
pub struct FitDump<'a> {
    #[serde(rename = "K")]
    pub k_matrix: Vec<Vec<f64>>,
    pub theta: &'a [Vec<f64>],
    pub objective_trace: &'a [f64],
    pub residual_l1: f64,
    pub log_volume: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SimplexFit {
    pub fn final_objective(&self) -> f64 {
        *self.report.objective_trace.last().expect("trace holds the start")
    }

    pub fn dump(&self) -> FitDump<'_> {
        let m = self.simplex.matrix();
        FitDump {
            k_matrix: (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect(),
            theta: &self.mixture.theta,
            objective_trace: &self.report.objective_trace,
            residual_l1: self.report.residual_l1,
            log_volume: self.report.log_volume,
            iterations: self.report.iterations,
            converged: self.report.converged,
        }
    }
}

fn check_cloud(points: &[Vec<f64>]) -> Result<usize> {
    let k = points.first().map_or(0, |p| p.len());
    if k == 0 {
        return Err(Error::InvalidArgument("empty point cloud".into()));
    }
    if let Some(p) = points.iter().find(|p| p.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: p.len(),
        });
    }
    Ok(k)
}

fn mean(points: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut m = vec![0.0; k];
    for p in points {
        for (a, b) in m.iter_mut().zip(p) {
            *a += b;
        }
    }
    m.iter_mut().for_each(|a| *a /= points.len() as f64);
    m
}

/// Rank of the sample covariance, counting eigenvalues above `1e−10` of the
/// largest.
fn covariance_rank(points: &[Vec<f64>], k: usize) -> Result<usize> {
    let mu = mean(points, k);
    let mut cov = DMatrix::zeros(k, k);
    for p in points {
        for i in 0..k {
            for j in 0..k {
                cov[(i, j)] += (p[i] - mu[i]) * (p[j] - mu[j]);
            }
        }
    }
    let eig = sym_eig(&cov)?;
    let top = eig.values.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(0);
    }
    Ok(eig.values.iter().filter(|&&v| v > 1e-10 * top).count())
}

/// Largest pairwise Euclidean distance.
fn diameter(points: &[Vec<f64>]) -> f64 {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            points[i + 1..]
                .iter()
                .map(|q| p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
        .sqrt()
}

/// Regular simplex centered at the data mean whose inscribed ball is the
/// bounding ball of the data (about the mean) inflated by 10%.
pub fn init_enclosing_simplex(points: &[Vec<f64>]) -> Result<Simplex> {
    let k = check_cloud(points)?;
    let rank = covariance_rank(points, k)?;
    if rank < k {
        return Err(Error::RankDeficient { rank, k });
    }
    let mu = mean(points, k);
    let radius = points
        .iter()
        .map(|p| {
            p.iter()
                .zip(&mu)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    // unit vectors to the vertices of a regular simplex: centered standard
    // basis of R^{k+1}, written in an orthonormal basis of 𝟙⊥
    let basis = ones_complement_basis(k + 1);
    let circumradius = k as f64 * 1.1 * radius;
    let scale = circumradius / (k as f64 / (k + 1) as f64).sqrt();
    let mut m = DMatrix::zeros(k, k + 1);
    for j in 0..=k {
        for i in 0..k {
            // basis columns are orthogonal to 𝟙, so Bᵀ(e_j − 𝟙/(k+1)) = row j of B
            m[(i, j)] = mu[i] + scale * basis[(j, i)];
        }
    }
    Simplex::new(m)
}

struct Evaluation {
    /// Affine coordinates of each point (may be negative).
    affine: Vec<Vec<f64>>,
    theta: Vec<Vec<f64>>,
    residuals: Vec<Vec<f64>>,
    residual_l1: f64,
    log_volume: f64,
    objective: f64,
}

fn evaluate(s: &Simplex, points: &[Vec<f64>], gamma: f64) -> Result<Evaluation> {
    let log_volume = s.log_volume()?;
    let solver = s.barycentric_solver()?;
    let solved: Vec<(Vec<f64>, Vec<f64>, f64)> = points
        .par_iter()
        .map(|x| {
            let affine = solver.solve(x)?;
            let (th, r) = solve_theta_l1_with(s, &solver, x)?;
            Ok((affine, th, r))
        })
        .collect::<Result<_>>()?;
    let mut residual_l1 = 0.0;
    let mut affine = Vec::with_capacity(points.len());
    let mut theta = Vec::with_capacity(points.len());
    let mut residuals = Vec::with_capacity(points.len());
    // summed in index order so the result does not depend on scheduling
    for (x, (aff, th, r)) in points.iter().zip(solved) {
        residual_l1 += r;
        let fitted = if r > 0.0 { s.combine(&th) } else { x.clone() };
        residuals.push(x.iter().zip(&fitted).map(|(a, b)| a - b).collect());
        theta.push(th);
        affine.push(aff);
    }
    Ok(Evaluation {
        affine,
        theta,
        residuals,
        residual_l1,
        log_volume,
        objective: residual_l1 + gamma * log_volume,
    })
}

/// Descent direction from the ε-subdifferential of the objective.
///
/// Points at least `eps` (in affine coordinates) outside the simplex add
/// their L1 subgradient `−sign(xᵢ − Kθᵢ) θᵢᵀ`. A point within `eps` of the
/// hyperplane of facet `j` contributes the hinge `max(0, −βⱼ) wⱼ`, where
/// `βⱼ` is its affine coordinate and `wⱼ` converts it to L1 distance; the
/// hinge enters with an unknown weight in `[0, 1]`. Returns the
/// minimum-norm element of the resulting set, whose negation is the
/// steepest ε-descent direction.
fn min_norm_subgradient(
    s: &Simplex,
    eval: &Evaluation,
    gamma: f64,
    eps: f64,
    zero_tol: f64,
) -> Result<DMatrix<f64>> {
    let k = s.dim();
    let mut m = DMatrix::zeros(k + 1, k + 1);
    m.rows_mut(0, k).copy_from(s.matrix());
    m.row_mut(k).fill(1.0);
    let minv = m
        .try_inverse()
        .ok_or(Error::DegenerateSimplex { det: 0.0 })?;
    let weights: Vec<f64> = (0..=k)
        .map(|j| {
            let a = (0..k).map(|c| minv[(j, c)].abs()).fold(0.0, f64::max);
            1.0 / a
        })
        .collect();

    let mut fixed = s.log_volume_gradient()? * gamma;
    let mut hinges: Vec<DMatrix<f64>> = Vec::new();
    let mut mu: Vec<f64> = Vec::new();
    for ((beta, th), r) in eval.affine.iter().zip(&eval.theta).zip(&eval.residuals) {
        if beta.iter().any(|&b| b <= -eps) {
            for d in 0..k {
                let sign = if r[d] > zero_tol {
                    1.0
                } else if r[d] < -zero_tol {
                    -1.0
                } else {
                    continue;
                };
                for j in 0..=k {
                    fixed[(d, j)] -= sign * th[j];
                }
            }
            continue;
        }
        for (j, &bj) in beta.iter().enumerate() {
            if bj.abs() < eps {
                // −wⱼ ∂βⱼ/∂K with ∂βⱼ/∂K_ab = −(M⁻¹)_ja β_b
                let h = DMatrix::from_fn(k, k + 1, |a, b| weights[j] * minv[(j, a)] * beta[b]);
                hinges.push(h);
                mu.push(if bj < 0.0 { 1.0 } else { 0.0 });
            }
        }
    }

    let mut acc = fixed;
    for (h, &w) in hinges.iter().zip(&mu) {
        if w != 0.0 {
            acc += h * w;
        }
    }
    let sq: Vec<f64> = hinges.iter().map(|h| h.norm_squared()).collect();
    for _sweep in 0..200 {
        let mut moved = 0.0f64;
        for (i, h) in hinges.iter().enumerate() {
            if sq[i] == 0.0 {
                continue;
            }
            let target = (mu[i] - acc.dot(h) / sq[i]).clamp(0.0, 1.0);
            let delta = target - mu[i];
            if delta != 0.0 {
                acc += h * delta;
                mu[i] = target;
                moved = moved.max(delta.abs() * sq[i].sqrt());
            }
        }
        if moved <= 1e-12 * (1.0 + acc.norm()) {
            break;
        }
    }
    Ok(acc)
}

/// Enclosing simplex built from data points: `k+1` points of large
/// spanned volume (greedy pick, then single-vertex swaps while the volume
/// grows), with every facet pushed out just far enough to contain the data.
pub fn extreme_point_simplex(points: &[Vec<f64>]) -> Result<Simplex> {
    let k = check_cloud(points)?;
    let rank = covariance_rank(points, k)?;
    if rank < k {
        return Err(Error::RankDeficient { rank, k });
    }
    let mu = mean(points, k);
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let first = (0..points.len())
        .max_by(|&a, &b| sq(&points[a], &mu).total_cmp(&sq(&points[b], &mu)).then(b.cmp(&a)))
        .unwrap_or(0);
    let mut chosen = vec![first];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while chosen.len() <= k {
        let origin = &points[chosen[0]];
        let off_hull = |x: &Vec<f64>| {
            let mut r: Vec<f64> = x.iter().zip(origin).map(|(a, b)| a - b).collect();
            for q in &basis {
                let d: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
                r.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
            }
            r
        };
        let (best, r) = points
            .iter()
            .enumerate()
            .map(|(i, x)| (i, off_hull(x)))
            .max_by(|(a, ra), (b, rb)| {
                let na: f64 = ra.iter().map(|v| v * v).sum();
                let nb: f64 = rb.iter().map(|v| v * v).sum();
                na.total_cmp(&nb).then(b.cmp(a))
            })
            .ok_or(Error::EmptyInput)?;
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::RankDeficient { rank: chosen.len() - 1, k });
        }
        basis.push(r.iter().map(|v| v / norm).collect());
        chosen.push(best);
    }
    let vertices = |idx: &[usize]| DMatrix::from_fn(k, k + 1, |i, j| points[idx[j]][i]);
    let mut simplex = Simplex::new(vertices(&chosen))?;
    // replacing vertex j by x scales the volume by |βⱼ(x)|
    for _pass in 0..10 {
        let mut improved = false;
        for j in 0..=k {
            let solver = simplex.barycentric_solver()?;
            let mut best = (1.0 + 1e-9, None);
            for (i, x) in points.iter().enumerate() {
                let b = solver.solve(x)?[j].abs();
                if b > best.0 {
                    best = (b, Some(i));
                }
            }
            if let (_, Some(i)) = best {
                chosen[j] = i;
                simplex = Simplex::new(vertices(&chosen))?;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    let solver = simplex.barycentric_solver()?;
    let mut low = vec![0.0f64; k + 1];
    for x in points {
        for (l, b) in low.iter_mut().zip(solver.solve(x)?) {
            *l = l.min(b);
        }
    }
    // new vertex j has old affine coordinates low + (1 − Σ low) e_j
    let total: f64 = low.iter().sum();
    let old = simplex.matrix().clone();
    let mut m = DMatrix::zeros(k, k + 1);
    for j in 0..=k {
        let mut w = low.clone();
        w[j] += 1.0 - total;
        m.set_column(j, &(&old * nalgebra::DVector::from_vec(w)));
    }
    Simplex::new(m)
}

/// Fits from [`init_enclosing_simplex`] and from [`extreme_point_simplex`]
/// and keeps the result with the lower final objective (the first on ties).
pub fn fit_min_volume_simplex(points: &[Vec<f64>], gamma: f64, opts: &FitOptions) -> Result<SimplexFit> {
    let start = init_enclosing_simplex(points)?;
    let mut best = fit_from(points, start, gamma, opts)?;
    if let Ok(other) = extreme_point_simplex(points).and_then(|s| fit_from(points, s, gamma, opts)) {
        if other.final_objective() < best.final_objective() {
            best = other;
        }
    }
    Ok(best)
}

const EPS_START: f64 = 1e-2;
const EPS_MIN: f64 = 1e-8;

/// Alternating descent from a given simplex.
///
/// The mixture weights are the exact L1 projections at the current simplex.
/// The vertex step backtracks along the normalized steepest ε-descent
/// direction (see [`min_norm_subgradient`]), re-solving the weights at every
/// trial, until the Armijo condition holds. The first trial moves the vertex
/// matrix by `opts.step` times the data diameter in Frobenius norm. When no
/// step is accepted the band `ε` shrinks; the fit has converged once it
/// reaches its floor.
pub fn fit_from(points: &[Vec<f64>], start: Simplex, gamma: f64, opts: &FitOptions) -> Result<SimplexFit> {
    let k = check_cloud(points)?;
    if start.dim() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: start.dim(),
        });
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} must be >= 0")));
    }
    let diam = diameter(points).max(f64::MIN_POSITIVE);
    let step0 = opts.step * diam;
    let min_step = 1e-10 * diam;
    let zero_tol = 1e-12 * diam;

    let mut simplex = start;
    let mut eval = evaluate(&simplex, points, gamma)?;
    let mut trace = vec![eval.objective];
    let mut converged = false;
    let mut iterations = 0;
    let mut eps = EPS_START;

    while iterations < opts.max_iters {
        iterations += 1;
        let grad = min_norm_subgradient(&simplex, &eval, gamma, eps, zero_tol)?;
        let gnorm = grad.norm();
        let mut accepted = None;
        if gnorm > 0.0 {
            let direction = &grad / gnorm;
            let mut t = step0;
            while t >= min_step {
                let trial = Simplex::new(simplex.matrix() - &direction * t)?;
                // degenerate trials are rejected like any failed step
                if let Ok(trial_eval) = evaluate(&trial, points, gamma) {
                    if trial_eval.objective <= eval.objective - opts.armijo * t * gnorm {
                        accepted = Some((trial, trial_eval));
                        break;
                    }
                }
                t *= 0.5;
            }
        }
        let Some((next, next_eval)) = accepted else {
            if eps > EPS_MIN {
                eps *= 0.1;
                continue;
            }
            converged = true;
            break;
        };
        let change = eval.objective - next_eval.objective;
        let scale = eval.objective.abs().max(1.0);
        simplex = next;
        eval = next_eval;
        trace.push(eval.objective);
        if change < opts.tol * scale {
            if eps > EPS_MIN {
                eps *= 0.1;
                continue;
            }
            converged = true;
            break;
        }
    }

    let mixture = MixtureTable::new(eval.theta)?;
    Ok(SimplexFit {
        simplex,
        mixture,
        report: FitReport {
            objective_trace: trace,
            residual_l1: eval.residual_l1,
            log_volume: eval.log_volume,
            iterations,
            converged,
        },
    })
}

/// Sum over vertices of the distance to the matched reference vertex,
/// minimized over all vertex matchings.
pub fn vertex_recovery_error(fitted: &Simplex, truth: &Simplex) -> f64 {
    use itertools::Itertools;
    let k = truth.dim();
    let f = fitted.vertex_list();
    let t = truth.vertex_list();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    (0..=k)
        .permutations(k + 1)
        .map(|p| (0..=k).map(|j| dist(&f[p[j]], &t[j])).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}
