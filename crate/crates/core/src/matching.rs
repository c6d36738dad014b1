//! Alignment search over vertex permutations: greedy transposition descent,
//! the Metropolis chain on the symmetric group, and exhaustive search.

use std::collections::HashMap;

use itertools::Itertools;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::LaplacianMatrix;
use crate::pencil::{kappa, permute_laplacian};
use crate::perm::Permutation;
use crate::rng::rng_from;

pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_TOLERANCE: f64 = 0.0;
/// Condition numbers this close to 1 count as an exact alignment.
pub const KAPPA_ONE_TOL: f64 = 1e-9;
pub const BRUTE_FORCE_MAX_N: usize = 9;
const MEMO_LIMIT: usize = 1 << 17;

/// `κ(L_G, L_{H^{(σ)}})`.
pub fn kappa_at(lg: &LaplacianMatrix, lh: &LaplacianMatrix, sigma: &Permutation) -> Result<f64> {
    Ok(kappa(lg, &permute_laplacian(lh, sigma)?)?.kappa)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    MaxIters,
    KappaOne,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStep {
    pub kappa: f64,
    pub transposition: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchResult {
    pub sigma: Permutation,
    pub kappa: f64,
    pub initial_kappa: f64,
    /// Neighborhood sweeps performed, accepted or not.
    pub iterations: usize,
    /// One entry per accepted step.
    pub trace: Vec<TraceStep>,
    pub stopped_by: StopReason,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainSample {
    pub step_index: usize,
    pub sigma: Permutation,
    pub f_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForceResult {
    pub sigma: Permutation,
    pub kappa: f64,
    pub minimizer_count: usize,
}

struct Objective<'a> {
    lg: &'a LaplacianMatrix,
    lh: &'a LaplacianMatrix,
    memo: HashMap<Vec<usize>, f64>,
}

impl<'a> Objective<'a> {
    fn new(lg: &'a LaplacianMatrix, lh: &'a LaplacianMatrix) -> Result<Self> {
        if lg.n() != lh.n() {
            return Err(Error::DimensionMismatch { expected: lg.n(), got: lh.n() });
        }
        Ok(Objective { lg, lh, memo: HashMap::new() })
    }

    fn eval(&mut self, sigma: &Permutation) -> Result<f64> {
        if let Some(&v) = self.memo.get(sigma.as_slice()) {
            return Ok(v);
        }
        let v = kappa_at(self.lg, self.lh, sigma)?;
        self.remember(sigma, v);
        Ok(v)
    }

    fn remember(&mut self, sigma: &Permutation, v: f64) {
        if self.memo.len() < MEMO_LIMIT {
            self.memo.insert(sigma.as_slice().to_vec(), v);
        }
    }

    /// Best neighbor `σ∘(i j)`; ties go to the lexicographically smallest
    /// pair.
    fn best_neighbor(&mut self, sigma: &Permutation) -> Result<(Permutation, f64, (usize, usize))> {
        let n = sigma.len();
        if n < 2 {
            return Err(Error::InvalidArgument("need at least two vertices".into()));
        }
        let pairs: Vec<(usize, usize)> = (0..n).tuple_combinations().collect();
        let neighbors: Vec<Permutation> = pairs
            .iter()
            .map(|&(i, j)| sigma.apply_transposition(i, j))
            .collect::<Result<_>>()?;
        let cached: Vec<Option<f64>> = neighbors.iter().map(|p| self.memo.get(p.as_slice()).copied()).collect();
        let (lg, lh) = (self.lg, self.lh);
        let values: Vec<f64> = neighbors
            .par_iter()
            .zip(cached.par_iter())
            .map(|(p, c)| match c {
                Some(v) => Ok(*v),
                None => kappa_at(lg, lh, p),
            })
            .collect::<Result<_>>()?;
        let mut best = 0;
        for (idx, (p, &v)) in neighbors.iter().zip(&values).enumerate() {
            self.remember(p, v);
            if v < values[best] {
                best = idx;
            }
        }
        Ok((neighbors[best].clone(), values[best], pairs[best]))
    }
}

/// The transposition neighbor of `σ` with the smallest condition number,
/// and the improvement `κ(σ) − κ(σ*)` (possibly negative).
pub fn best_transposition(
    lg: &LaplacianMatrix,
    lh: &LaplacianMatrix,
    sigma: &Permutation,
) -> Result<(Permutation, f64)> {
    let mut f = Objective::new(lg, lh)?;
    check_len(lg, sigma)?;
    let here = f.eval(sigma)?;
    let (best, v, _) = f.best_neighbor(sigma)?;
    Ok((best, here - v))
}

fn check_len(lg: &LaplacianMatrix, sigma: &Permutation) -> Result<()> {
    if sigma.len() != lg.n() {
        return Err(Error::DimensionMismatch { expected: lg.n(), got: sigma.len() });
    }
    Ok(())
}

/// Greedy descent over single transpositions starting at `sigma0`.
pub fn cond_sim_grad_descent(
    lg: &LaplacianMatrix,
    lh: &LaplacianMatrix,
    q: usize,
    epsilon: f64,
    sigma0: &Permutation,
) -> Result<MatchResult> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be >= 0")));
    }
    check_len(lg, sigma0)?;
    let mut f = Objective::new(lg, lh)?;
    let mut sigma = sigma0.clone();
    let mut current = f.eval(&sigma)?;
    let initial_kappa = current;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut stopped_by = StopReason::MaxIters;
    if current <= 1.0 + KAPPA_ONE_TOL {
        stopped_by = StopReason::KappaOne;
    } else {
        while iterations < q {
            iterations += 1;
            let (next, value, pair) = f.best_neighbor(&sigma)?;
            if current - value <= epsilon {
                stopped_by = StopReason::Tolerance;
                break;
            }
            sigma = next;
            current = value;
            trace.push(TraceStep { kappa: value, transposition: pair });
            if current <= 1.0 + KAPPA_ONE_TOL {
                stopped_by = StopReason::KappaOne;
                break;
            }
        }
    }
    Ok(MatchResult {
        sigma,
        kappa: current,
        initial_kappa,
        iterations,
        trace,
        stopped_by,
    })
}

/// Metropolis chain with uniform transposition proposals and acceptance
/// probability `min(1, λ^{f(cur) − f(new)})`. Returns the state after every
/// step, numbered from 1.
pub fn metropolis_chain(
    lg: &LaplacianMatrix,
    lh: &LaplacianMatrix,
    lambda: f64,
    steps: usize,
    seed: u64,
    sigma0: &Permutation,
) -> Result<Vec<ChainSample>> {
    if !(lambda >= 1.0) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be >= 1")));
    }
    check_len(lg, sigma0)?;
    let n = sigma0.len();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two vertices".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..n).tuple_combinations().collect();
    let mut f = Objective::new(lg, lh)?;
    let mut rng = rng_from(seed);
    let mut sigma = sigma0.clone();
    let mut current = f.eval(&sigma)?;
    let mut out = Vec::with_capacity(steps);
    for step in 1..=steps {
        let (i, j) = pairs[rng.random_range(0..pairs.len())];
        let proposal = sigma.apply_transposition(i, j)?;
        let value = f.eval(&proposal)?;
        let u: f64 = rng.random();
        if value <= current || u < lambda.powf(current - value) {
            sigma = proposal;
            current = value;
        }
        out.push(ChainSample { step_index: step, sigma: sigma.clone(), f_value: current });
    }
    Ok(out)
}

/// Exhaustive minimum over all of `S_n`, `n ≤ 9`.
///
/// Permutations within `1e−6` of the minimum count as minimizers; the
/// reported one is the lexicographically smallest of them.
pub fn brute_force_min_kappa(lg: &LaplacianMatrix, lh: &LaplacianMatrix) -> Result<BruteForceResult> {
    let n = lg.n();
    if lh.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: lh.n() });
    }
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge(format!("{n}! permutations (limit n <= {BRUTE_FORCE_MAX_N})")));
    }
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let values: Vec<f64> = perms
        .par_iter()
        .map(|p| kappa_at(lg, lh, &Permutation::new(p.clone())?))
        .collect::<Result<_>>()?;
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut first = None;
    let mut count = 0;
    for (i, &v) in values.iter().enumerate() {
        if v <= best + 1e-6 {
            count += 1;
            first.get_or_insert(i);
        }
    }
    let idx = first.ok_or_else(|| Error::InvalidArgument("empty permutation set".into()))?;
    Ok(BruteForceResult {
        sigma: Permutation::new(perms[idx].clone())?,
        kappa: best,
        minimizer_count: count,
    })
}
