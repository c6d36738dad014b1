//! End-to-end experiment protocols with their pass/fail bounds.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::fit::{fit_min_volume_simplex, vertex_recovery_error, FitOptions};
use crate::graph::Graph;
use crate::matching::{brute_force_min_kappa, cond_sim_grad_descent, KAPPA_ONE_TOL};
use crate::pencil::{kappa, kappa_shifted, permute_laplacian, DEFAULT_SHIFT};
use crate::perm::Permutation;
use crate::rng::{rng_from, split};
use crate::simquery::pair_distance;
use crate::spectral::{embed, sym_eig};
use crate::synth::{
    gen_er, gen_rmat, gen_simplex_cloud, gen_stratified, random_permutation_k_cycles,
    regenerate_until_connected, RMAT_DEFAULT,
};

pub const MAX_RETRIES: usize = 1000;

/// Connected Erdős–Rényi draw; redraws with derived seeds when needed.
pub fn connected_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    regenerate_until_connected(seed, MAX_RETRIES, |s| gen_er(n, p, s))
}

/// Connected R-MAT draw with `8n` edge attempts.
pub fn connected_rmat(levels: u32, seed: u64) -> Result<Graph> {
    let attempts = 8 << levels;
    regenerate_until_connected(seed, MAX_RETRIES, |s| gen_rmat(levels, attempts, RMAT_DEFAULT, s))
}

pub fn random_permutation(n: usize, seed: u64) -> Permutation {
    use rand::seq::SliceRandom;
    let mut map: Vec<usize> = (0..n).collect();
    map.shuffle(&mut rng_from(seed));
    Permutation::new(map).expect("shuffled identity")
}

// ---- simplex recovery ----

pub const RECOVERY_BOUND: f64 = 0.25;

#[derive(Clone, Debug, Serialize)]
pub struct RecoveryRow {
    pub k: usize,
    pub seed: u64,
    pub sigma: f64,
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoveryReport {
    pub n_points: usize,
    pub gamma: f64,
    pub bound: f64,
    pub rows: Vec<RecoveryRow>,
    pub pass: bool,
}

/// Fits noisy uniform clouds on random simplexes and measures the summed
/// vertex error against the generating simplex.
pub fn simplex_recovery(
    ks: &[usize],
    sigma: f64,
    seeds: &[u64],
    n_points: usize,
    gamma: f64,
) -> Result<RecoveryReport> {
    let cells: Vec<(usize, u64)> = ks.iter().flat_map(|&k| seeds.iter().map(move |&s| (k, s))).collect();
    let rows: Vec<RecoveryRow> = cells
        .par_iter()
        .map(|&(k, seed)| {
            let cloud = gen_simplex_cloud(k, n_points, sigma, seed)?;
            let fit = fit_min_volume_simplex(&cloud.points, gamma, &FitOptions::default())?;
            let error = vertex_recovery_error(&fit.simplex, &cloud.true_simplex);
            Ok(RecoveryRow {
                k,
                seed,
                sigma,
                error,
                iterations: fit.report.iterations,
                converged: fit.report.converged,
                pass: error <= RECOVERY_BOUND,
            })
        })
        .collect::<Result<_>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(RecoveryReport { n_points, gamma, bound: RECOVERY_BOUND, rows, pass })
}

// ---- stratified similarity ----

#[derive(Clone, Debug, Serialize)]
pub struct StratifiedRow {
    pub seed: u64,
    pub vertices: usize,
    pub same_age_mean: f64,
    pub far_age_mean: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StratifiedReport {
    pub n: usize,
    pub alpha: f64,
    pub p0: f64,
    pub k: usize,
    pub gamma: f64,
    pub rows: Vec<StratifiedRow>,
    pub pass: bool,
}

/// Vertex similarity on stratified networks: mean mixture distance over
/// same-age pairs against pairs whose ages differ by at least 3. Works on
/// the largest connected component.
pub fn stratified_similarity(
    n: usize,
    alpha: f64,
    p0: f64,
    k: usize,
    gamma: f64,
    seeds: &[u64],
) -> Result<StratifiedReport> {
    let rows: Vec<StratifiedRow> = seeds
        .par_iter()
        .map(|&seed| {
            let (g, ages) = gen_stratified(n, alpha, p0, seed)?;
            let keep = g.largest_component_vertices();
            let big = g.induced_subgraph(&keep);
            let kept_ages: Vec<u32> = keep.iter().map(|&v| ages[v]).collect();
            let emb = embed(&big, k)?;
            let fit = fit_min_volume_simplex(&emb.points(), gamma, &FitOptions::default())?;
            let (mut same, mut same_n, mut far, mut far_n) = (0.0, 0usize, 0.0, 0usize);
            for i in 0..big.n() {
                for j in i + 1..big.n() {
                    let d = pair_distance(&fit.mixture, i, j)?;
                    let gap = kept_ages[i].abs_diff(kept_ages[j]);
                    if gap == 0 {
                        same += d;
                        same_n += 1;
                    } else if gap >= 3 {
                        far += d;
                        far_n += 1;
                    }
                }
            }
            let same_age_mean = same / same_n.max(1) as f64;
            let far_age_mean = far / far_n.max(1) as f64;
            Ok(StratifiedRow {
                seed,
                vertices: big.n(),
                same_age_mean,
                far_age_mean,
                pass: same_n > 0 && far_n > 0 && same_age_mean < far_age_mean,
            })
        })
        .collect::<Result<_>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(StratifiedReport { n, alpha, p0, k, gamma, rows, pass })
}

// ---- alignment recovery over cycle counts ----

#[derive(Clone, Debug, Serialize)]
pub struct AlignmentCell {
    pub batch: u64,
    pub cycles: usize,
    pub seed: u64,
    pub initial_kappa: f64,
    pub final_kappa: f64,
    pub iterations: usize,
    pub success: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlignmentReport {
    pub n: usize,
    pub graph_type: String,
    pub q: usize,
    pub epsilon: f64,
    pub cells: Vec<AlignmentCell>,
    /// Successes per batch, in batch order.
    pub successes: Vec<usize>,
    pub min_successes: usize,
    pub min_batches: usize,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphType {
    ErdosRenyi,
    Rmat,
}

/// For each batch and each cycle count `1..n`, a fresh connected graph `G`
/// and `H = relabel(G, σ)` with `σ` a uniform permutation with that many
/// cycles; the descent from the identity succeeds when it reaches `κ = 1`.
/// Passes when at least `min_batches` batches reach `min_successes`.
#[allow(clippy::too_many_arguments)]
pub fn alignment_by_cycles(
    n: usize,
    graph_type: GraphType,
    q: usize,
    epsilon: f64,
    batches: u64,
    seed: u64,
    min_successes: usize,
    min_batches: usize,
) -> Result<AlignmentReport> {
    let cells: Vec<(u64, usize)> = (0..batches).flat_map(|b| (1..n).map(move |c| (b, c))).collect();
    let results: Vec<AlignmentCell> = cells
        .par_iter()
        .map(|&(batch, cycles)| {
            let cell_seed = split(split(seed, batch), cycles as u64);
            let g = match graph_type {
                GraphType::ErdosRenyi => connected_er(n, 0.5, split(cell_seed, 0))?,
                GraphType::Rmat => connected_rmat(n.next_power_of_two().trailing_zeros(), split(cell_seed, 0))?,
            };
            let nn = g.n();
            let sigma = random_permutation_k_cycles(nn, cycles.min(nn), split(cell_seed, 1))?;
            let h = g.relabel(&sigma)?;
            let r = cond_sim_grad_descent(&g.laplacian(), &h.laplacian(), q, epsilon, &Permutation::identity(nn))?;
            Ok(AlignmentCell {
                batch,
                cycles,
                seed: cell_seed,
                initial_kappa: r.initial_kappa,
                final_kappa: r.kappa,
                iterations: r.iterations,
                success: r.kappa <= 1.0 + KAPPA_ONE_TOL,
            })
        })
        .collect::<Result<_>>()?;
    let successes: Vec<usize> = (0..batches)
        .map(|b| results.iter().filter(|c| c.batch == b && c.success).count())
        .collect();
    let good = successes.iter().filter(|&&s| s >= min_successes).count();
    Ok(AlignmentReport {
        n,
        graph_type: match graph_type {
            GraphType::ErdosRenyi => "er".into(),
            GraphType::Rmat => "rmat".into(),
        },
        q,
        epsilon,
        cells: results,
        successes,
        min_successes,
        min_batches,
        pass: good >= min_batches,
    })
}

// ---- shift heuristic ----

pub const SHIFT_BOUND: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct ShiftRow {
    pub name: String,
    pub n: usize,
    pub kappa_exact: f64,
    pub kappa_shifted: f64,
    pub relative_gap: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftReport {
    pub epsilon: f64,
    pub bound: f64,
    pub rows: Vec<ShiftRow>,
    pub pass: bool,
}

fn shift_row(name: String, g: &Graph, sigma: &Permutation, epsilon: f64) -> Result<ShiftRow> {
    let lg = g.laplacian();
    let lh = permute_laplacian(&lg, sigma)?;
    let e = kappa(&lg, &lh)?.kappa;
    let s = kappa_shifted(&lg, &lh, epsilon)?.kappa;
    let gap = (s - e).abs() / e;
    Ok(ShiftRow {
        name,
        n: g.n(),
        kappa_exact: e,
        kappa_shifted: s,
        relative_gap: gap,
        pass: gap <= SHIFT_BOUND,
    })
}

/// Exact against shifted condition numbers for graphs paired with random
/// relabelings of themselves: `pairs` generated graphs (Erdős–Rényi and
/// R-MAT, at most 100 vertices) plus any supplied graphs.
pub fn shift_accuracy(pairs: usize, seed: u64, extra: &[(String, Graph)]) -> Result<ShiftReport> {
    let sizes = [10usize, 20, 40, 70, 100];
    let mut rows: Vec<ShiftRow> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let s = split(seed, i as u64);
            let (name, g) = if i % 2 == 0 {
                let n = sizes[(i / 2) % sizes.len()];
                (format!("er-{n}-{i}"), connected_er(n, 0.5, s)?)
            } else {
                let levels = 3 + ((i / 2) % 4) as u32;
                (format!("rmat-{}-{i}", 1 << levels), connected_rmat(levels, s)?)
            };
            let sigma = random_permutation(g.n(), split(s, 1));
            shift_row(name, &g, &sigma, DEFAULT_SHIFT)
        })
        .collect::<Result<_>>()?;
    for (j, (name, g)) in extra.iter().enumerate() {
        let sigma = random_permutation(g.n(), split(seed, (pairs + j) as u64));
        rows.push(shift_row(name.clone(), g, &sigma, DEFAULT_SHIFT)?);
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(ShiftReport { epsilon: DEFAULT_SHIFT, bound: SHIFT_BOUND, rows, pass })
}

// ---- cospectral pair ----

/// Two non-isomorphic connected graphs on 6 vertices and 7 edges with the
/// same Laplacian spectrum `{0, 3−√5, 2, 3, 3, 3+√5}`.
pub const COSPECTRAL_A: [(usize, usize); 7] = [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (3, 5), (4, 5)];
pub const COSPECTRAL_B: [(usize, usize); 7] = [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (2, 4), (2, 5)];
pub const COSPECTRAL_KAPPA: f64 = 6.1852;
pub const COSPECTRAL_TOL: f64 = 0.01;

pub fn cospectral_pair() -> (Graph, Graph) {
    (
        Graph::from_edges(6, COSPECTRAL_A).expect("valid fixture"),
        Graph::from_edges(6, COSPECTRAL_B).expect("valid fixture"),
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct CospectralReport {
    pub edges_a: Vec<(usize, usize)>,
    pub edges_b: Vec<(usize, usize)>,
    pub spectrum_a: Vec<f64>,
    pub spectrum_b: Vec<f64>,
    pub min_kappa: f64,
    pub argmin: Permutation,
    pub minimizer_count: usize,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn cospectral() -> Result<CospectralReport> {
    let (a, b) = cospectral_pair();
    let spectrum_a = sym_eig(&a.laplacian().entries)?.values;
    let spectrum_b = sym_eig(&b.laplacian().entries)?.values;
    let r = brute_force_min_kappa(&a.laplacian(), &b.laplacian())?;
    let same = spectrum_a.iter().zip(&spectrum_b).all(|(x, y)| (x - y).abs() < 1e-9);
    Ok(CospectralReport {
        edges_a: a.edges().to_vec(),
        edges_b: b.edges().to_vec(),
        spectrum_a,
        spectrum_b,
        min_kappa: r.kappa,
        argmin: r.sigma,
        minimizer_count: r.minimizer_count,
        expected: COSPECTRAL_KAPPA,
        tolerance: COSPECTRAL_TOL,
        pass: same && (r.kappa - COSPECTRAL_KAPPA).abs() <= COSPECTRAL_TOL,
    })
}
