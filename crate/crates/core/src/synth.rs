//! Synthetic inputs: random graphs, stratified networks, noisy simplex
//! clouds, and uniform permutations with a prescribed number of cycles.

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::perm::Permutation;
use crate::rng::{rng_from, split};
use crate::simplex::Simplex;

/// Default R-MAT quadrant probabilities `(a, b, c, d)`.
pub const RMAT_DEFAULT: [f64; 4] = [0.55, 0.1, 0.1, 0.25];

/// Erdős–Rényi–Gilbert `G(n, p)`.
pub fn gen_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} not in [0, 1]")));
    }
    let mut rng = rng_from(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Raw directed R-MAT endpoints before symmetrization and cleanup.
pub fn rmat_attempts(
    levels: u32,
    attempts: usize,
    probs: [f64; 4],
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || probs.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "R-MAT probabilities must be nonnegative and sum to 1 (sum = {sum})"
        )));
    }
    let [a, b, c, _] = probs;
    let mut rng = rng_from(seed);
    let mut out = Vec::with_capacity(attempts);
    for _ in 0..attempts {
        let (mut row, mut col) = (0usize, 0usize);
        for _ in 0..levels {
            let r: f64 = rng.random();
            let (rb, cb) = if r < a {
                (0, 0)
            } else if r < a + b {
                (0, 1)
            } else if r < a + b + c {
                (1, 0)
            } else {
                (1, 1)
            };
            row = (row << 1) | rb;
            col = (col << 1) | cb;
        }
        out.push((row, col));
    }
    Ok(out)
}

/// R-MAT graph on `2^levels` vertices; multi-edges collapse and self-loops
/// are dropped.
pub fn gen_rmat(levels: u32, edge_attempts: usize, probs: [f64; 4], seed: u64) -> Result<Graph> {
    let n = 1usize << levels;
    Graph::from_edges(n, rmat_attempts(levels, edge_attempts, probs, seed)?)
}

/// Stratified network: each vertex gets an age uniform in `1..=10`, and each
/// pair is joined with probability `p0·exp(−α·|Δage|)`.
pub fn gen_stratified(n: usize, alpha: f64, p0: f64, seed: u64) -> Result<(Graph, Vec<u32>)> {
    if !(0.0..=1.0).contains(&p0) || alpha < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= p0 <= 1 and alpha >= 0 (p0 = {p0}, alpha = {alpha})"
        )));
    }
    let mut rng = rng_from(seed);
    let ages: Vec<u32> = (0..n).map(|_| rng.random_range(1..=10)).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(stratified_probability(ages[u], ages[v], alpha, p0)) {
                edges.push((u, v));
            }
        }
    }
    Ok((Graph::from_edges(n, edges)?, ages))
}

pub fn stratified_probability(age_a: u32, age_b: u32, alpha: f64, p0: f64) -> f64 {
    p0 * (-alpha * age_a.abs_diff(age_b) as f64).exp()
}

/// Points drawn uniformly from a random simplex, plus Gaussian noise.
#[derive(Clone, Debug)]
pub struct SimplexCloud {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub true_simplex: Simplex,
    pub sigma_noise: f64,
}

/// Vertices are uniform in `[0, 10]^k`, redrawn until `det Q ≥ 0.1`.
/// Weights are normalized unit-rate exponentials (uniform on the standard
/// simplex).
pub fn gen_simplex_cloud(k: usize, n_points: usize, sigma_noise: f64, seed: u64) -> Result<SimplexCloud> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if !(sigma_noise >= 0.0) {
        return Err(Error::InvalidArgument("noise must be nonnegative".into()));
    }
    let mut rng = rng_from(seed);
    let true_simplex = loop {
        let m = DMatrix::from_fn(k, k + 1, |_, _| rng.random_range(0.0..10.0));
        let s = Simplex::new(m)?;
        if s.edge_gram().determinant() >= 0.1 {
            break s;
        }
    };
    let noise = Normal::new(0.0, sigma_noise.max(0.0)).expect("valid std");
    let mut points = Vec::with_capacity(n_points);
    let mut weights = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let mut w: Vec<f64> = (0..=k).map(|_| Exp1.sample(&mut rng)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|t| *t /= s);
        let mut x = true_simplex.combine(&w);
        if sigma_noise > 0.0 {
            x.iter_mut().for_each(|c| *c += noise.sample(&mut rng));
        }
        points.push(x);
        weights.push(w);
    }
    Ok(SimplexCloud {
        points,
        weights,
        true_simplex,
        sigma_noise,
    })
}

/// Table of unsigned Stirling numbers of the first kind `c(m, j)` for
/// `0 ≤ j ≤ m ≤ n`.
pub fn stirling_table(n: usize) -> Vec<Vec<BigUint>> {
    let mut t: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
    for m in 1..=n {
        let prev = &t[m - 1];
        let row: Vec<BigUint> = (0..=m)
            .map(|j| {
                let mut c = BigUint::zero();
                if j >= 1 {
                    c += &prev[j - 1];
                }
                if j < m {
                    c += &prev[j] * BigUint::from(m - 1);
                }
                c
            })
            .collect();
        t.push(row);
    }
    t
}

/// `c(n, k)`: number of permutations of `n` elements with exactly `k` cycles.
pub fn stirling_first(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    stirling_table(n)[n][k].clone()
}

/// Uniform integer in `[0, bound)` by rejection on the bit length.
fn uniform_below<R: Rng + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero());
    let bits = bound.bits();
    let words = bits.div_ceil(32) as usize;
    let top_bits = bits - 32 * (words as u64 - 1);
    let top_mask: u32 = if top_bits == 32 { u32::MAX } else { (1u32 << top_bits) - 1 };
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.random()).collect();
        digits[words - 1] &= top_mask;
        let candidate = BigUint::new(digits);
        if &candidate < bound {
            return candidate;
        }
    }
}

/// Uniformly random permutation of `0..n` with exactly `k` cycles.
///
/// Walking down from the largest element, element `m` opens its own cycle
/// with probability `c(m−1, j−1)/c(m, j)` (`j` cycles still to place). The
/// permutation is then built upward: an element that does not open a cycle
/// is spliced in after a uniformly chosen earlier element.
pub fn random_permutation_k_cycles(n: usize, k: usize, seed: u64) -> Result<Permutation> {
    if k < 1 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cycle count {k} must be in 1..={n}"
        )));
    }
    let table = stirling_table(n);
    let mut rng = rng_from(seed);
    let mut opens = vec![false; n];
    let mut remaining = k;
    for m in (1..=n).rev() {
        let draw = uniform_below(&mut rng, &table[m][remaining]);
        if draw < table[m - 1][remaining - 1] {
            opens[m - 1] = true;
            remaining -= 1;
        }
    }
    debug_assert_eq!(remaining, 0);
    let mut map: Vec<usize> = Vec::with_capacity(n);
    for m in 0..n {
        map.push(m);
        if !opens[m] {
            let j = rng.random_range(0..m);
            map[m] = map[j];
            map[j] = m;
        }
    }
    Permutation::new(map)
}

/// Retries `make(attempt_seed)` until the graph is connected.
pub fn regenerate_until_connected<F>(seed: u64, max_retries: usize, mut make: F) -> Result<Graph>
where
    F: FnMut(u64) -> Result<Graph>,
{
    for attempt in 0..max_retries {
        let g = make(split(seed, attempt as u64))?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::NoConvergence(format!(
        "no connected graph after {max_retries} draws"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use std::collections::HashMap;

    #[test]
    fn er_extremes() {
        assert!(gen_er(6, 1.0, 1).unwrap().same_edges(&Graph::complete(6)));
        assert_eq!(gen_er(6, 0.0, 1).unwrap().num_edges(), 0);
        assert!(gen_er(6, 1.5, 1).is_err());
        assert_eq!(gen_er(10, 0.5, 9).unwrap(), gen_er(10, 0.5, 9).unwrap());
    }

    #[test]
    fn er_mean_edge_count() {
        let seeds = 1000;
        let total: usize = (0..seeds).map(|s| gen_er(8, 0.5, s).unwrap().num_edges()).sum();
        let mean = total as f64 / seeds as f64;
        // Binomial(28, 1/2): variance 7, standard error of the mean √(7/1000)
        let se = (7.0f64 / seeds as f64).sqrt();
        assert!((mean - 14.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn rmat_examples() {
        let g = gen_rmat(4, 100, [1.0, 0.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(g.num_edges(), 0);
        assert!(gen_rmat(4, 10, [0.5, 0.1, 0.1, 0.1], 3).is_err());
        let g = gen_rmat(5, 256, RMAT_DEFAULT, 3).unwrap();
        assert_eq!(g.n(), 32);
        assert!(g.edges().iter().all(|&(u, v)| u < v && v < 32));
    }

    #[test]
    fn rmat_quadrant_bias() {
        let (mut first, mut last) = (0usize, 0usize);
        for seed in 0..1000 {
            for (r, c) in rmat_attempts(3, 64, RMAT_DEFAULT, seed).unwrap() {
                first += (r == 0) as usize + (c == 0) as usize;
                last += (r == 7) as usize + (c == 7) as usize;
            }
        }
        // per-level marginal of bit 0 is a+b = 0.65 vs bit 1 is c+d = 0.35
        assert!(first > last);
        let attempts = 2.0 * 64.0 * 1000.0;
        let p_first = 0.65f64.powi(3);
        assert!(((first as f64 / attempts) - p_first).abs() < 0.01);
    }

    #[test]
    fn stratified_probabilities() {
        assert_eq!(stratified_probability(4, 4, 0.8, 0.1), 0.1);
        let p1 = stratified_probability(3, 4, 0.8, 0.1);
        assert!((p1 - 0.1 * (-0.8f64).exp()).abs() < 1e-15);
        assert!((p1 - 0.04493).abs() < 1e-5);
        assert!(gen_stratified(10, 0.8, 1.5, 0).is_err());
    }

    #[test]
    fn stratified_same_age_frequency() {
        let (mut pairs, mut hits) = (0usize, 0usize);
        for seed in 0..200 {
            let (g, ages) = gen_stratified(60, 0.8, 0.1, seed).unwrap();
            assert!(ages.iter().all(|a| (1..=10).contains(a)));
            for u in 0..60 {
                for v in u + 1..60 {
                    if ages[u] == ages[v] {
                        pairs += 1;
                        hits += g.has_edge(u, v) as usize;
                    }
                }
            }
        }
        let freq = hits as f64 / pairs as f64;
        let se = (0.1 * 0.9 / pairs as f64).sqrt();
        assert!((freq - 0.1).abs() < 3.0 * se, "freq {freq}");
    }

    #[test]
    fn cloud_without_noise_is_enclosed() {
        for k in 1..6 {
            let c = gen_simplex_cloud(k, 200, 0.0, k as u64).unwrap();
            assert!(c.true_simplex.edge_gram().determinant() >= 0.1);
            for p in &c.points {
                let th = c.true_simplex.barycentric(p).unwrap();
                assert!(th.iter().all(|&t| t >= -1e-9));
            }
        }
    }

    #[test]
    fn cloud_weights_centered() {
        let k = 3;
        let n = 20000;
        let c = gen_simplex_cloud(k, n, 0.0, 11).unwrap();
        for j in 0..=k {
            let mean: f64 = c.weights.iter().map(|w| w[j]).sum::<f64>() / n as f64;
            // Dirichlet(1,..,1) marginal variance: (k)/((k+1)²(k+2))
            let var = k as f64 / (((k + 1) * (k + 1) * (k + 2)) as f64);
            let se = (var / n as f64).sqrt();
            assert!((mean - 0.25).abs() < 3.0 * se);
        }
    }

    #[test]
    fn cloud_grid_generates() {
        for k in 2..=8 {
            for sigma in [0.01, 0.5, 1.0, 5.0, 10.0] {
                let c = gen_simplex_cloud(k, 1000, sigma, 7).unwrap();
                assert_eq!(c.points.len(), 1000);
                assert!(c.points.iter().all(|p| p.len() == k && p.iter().all(|v| v.is_finite())));
            }
        }
    }

    #[test]
    fn stirling_values() {
        for n in 0..10 {
            assert_eq!(stirling_first(n, n), BigUint::one());
        }
        let mut fact = BigUint::one();
        for n in 1..12usize {
            assert_eq!(stirling_first(n, 1), fact);
            fact *= BigUint::from(n);
        }
        // enumerate S_3 by cycle count
        let mut counts = [0usize; 4];
        for p in (0..3).permutations(3) {
            counts[Permutation::new(p).unwrap().num_cycles()] += 1;
        }
        assert_eq!(counts[2], 3);
        assert_eq!(stirling_first(3, 2), BigUint::from(3u32));
        assert_eq!(stirling_first(3, 4), BigUint::zero());
    }

    #[test]
    fn stirling_rows_sum_to_factorial() {
        let t = stirling_table(10);
        let mut fact = BigUint::one();
        for n in 1..=10usize {
            fact *= BigUint::from(n);
            let s: BigUint = t[n].iter().sum();
            assert_eq!(s, fact);
        }
    }

    #[test]
    fn k_cycle_permutations() {
        assert!(random_permutation_k_cycles(4, 4, 0).unwrap().is_identity());
        assert!(random_permutation_k_cycles(4, 0, 0).is_err());
        assert!(random_permutation_k_cycles(4, 5, 0).is_err());
        for s in 0..1000u64 {
            let n = 1 + (s % 15) as usize;
            let k = 1 + (split(s, 1) % n as u64) as usize;
            let p = random_permutation_k_cycles(n, k, s).unwrap();
            assert_eq!(p.num_cycles(), k);
        }
    }

    #[test]
    fn k_cycle_uniform_on_transpositions() {
        let draws = 30000;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for s in 0..draws {
            let p = random_permutation_k_cycles(3, 2, split(99, s)).unwrap();
            *counts.entry(p.as_slice().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 3);
        let e = draws as f64 / 3.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // χ²(2) critical value at 0.01
        assert!(chi2 < 9.210, "chi2 {chi2}");
    }

    #[test]
    fn k_cycle_uniform_larger_class() {
        // c(5, 2) = 50 permutations; all should appear with similar frequency
        let draws = 50000;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for s in 0..draws {
            let p = random_permutation_k_cycles(5, 2, split(5, s)).unwrap();
            *counts.entry(p.as_slice().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 50);
        let e = draws as f64 / 50.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // χ²(49) critical value at 0.01 is 74.92
        assert!(chi2 < 74.92, "chi2 {chi2}");
    }

    #[test]
    fn uniform_below_range() {
        let mut rng = rng_from(1);
        let bound = BigUint::from(1_000_000_007u64) * BigUint::from(3u32);
        for _ in 0..100 {
            assert!(uniform_below(&mut rng, &bound) < bound);
        }
        assert_eq!(uniform_below(&mut rng, &BigUint::one()), BigUint::zero());
    }

    #[test]
    fn connected_regeneration() {
        let g = regenerate_until_connected(3, 50, |s| gen_er(8, 0.5, s)).unwrap();
        assert!(g.is_connected());
        assert!(regenerate_until_connected(3, 5, |s| gen_er(8, 0.0, s)).is_err());
    }
}
