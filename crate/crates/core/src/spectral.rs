//! Dense symmetric eigendecomposition and the normalized-Laplacian embedding.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Eigenpairs with ascending eigenvalues; `vectors` holds unit columns in the
/// same order.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

const SYMMETRY_TOL: f64 = 1e-10;

/// Full eigendecomposition of a symmetric matrix.
///
/// Backed by nalgebra's Householder tridiagonalization with implicit QR.
/// Eigenvalues are sorted ascending; each eigenvector is flipped so that its
/// largest-magnitude entry (first on ties) is positive.
pub fn sym_eig(m: &DMatrix<f64>) -> Result<EigenDecomposition> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    if n == 0 {
        return Ok(EigenDecomposition {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let pivot = col.iter().enumerate().fold(0, |best, (i, v)| {
            if v.abs() > col[best].abs() {
                i
            } else {
                best
            }
        });
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Vertex coordinates from the `k` smallest nontrivial eigenvectors of the
/// normalized Laplacian; row `i` is the point for vertex `i`.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub coords: DMatrix<f64>,
    pub k: usize,
    /// Eigenvalues of the selected columns, ascending.
    pub eigenvalues: Vec<f64>,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn point(&self, v: usize) -> Vec<f64> {
        self.coords.row(v).iter().copied().collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|v| self.point(v)).collect()
    }
}

/// JSON shape for plotting: `{k, vertices, coords}`.
#[derive(Debug, Serialize)]
pub struct EmbeddingDump {
    pub k: usize,
    pub vertices: Vec<String>,
    pub coords: Vec<Vec<f64>>,
}

impl EmbeddingDump {
    pub fn new(g: &Graph, emb: &Embedding) -> Self {
        EmbeddingDump {
            k: emb.k,
            vertices: (0..g.n()).map(|v| g.label(v)).collect(),
            coords: emb.points(),
        }
    }
}

pub fn embed(g: &Graph, k: usize) -> Result<Embedding> {
    let n = g.n();
    if k < 1 || k + 2 > n {
        return Err(Error::InvalidArgument(format!(
            "embedding dimension k = {k} must satisfy 1 <= k <= n - 2 = {}",
            n as isize - 2
        )));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let lap = g.normalized_laplacian()?;
    let eig = sym_eig(&lap.entries)?;
    let trace: f64 = (0..n).map(|i| lap.entries[(i, i)]).sum();
    if eig.values[0].abs() > 1e-8 * trace || eig.values[1] <= 1e-8 * trace {
        return Err(Error::NoConvergence(
            "normalized Laplacian does not have a simple zero eigenvalue".into(),
        ));
    }
    let coords = eig.vectors.columns(1, k).into_owned();
    Ok(Embedding {
        coords,
        k,
        eigenvalues: eig.values[1..=k].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::Permutation;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn check_invariants(m: &DMatrix<f64>, e: &EigenDecomposition) {
        let n = m.nrows();
        let fro = m.norm();
        for i in 0..n {
            let v = e.vectors.column(i);
            let r = m * v - v * e.values[i];
            assert!(r.norm() <= 1e-8 * fro.max(1.0));
        }
        let gram = e.vectors.transpose() * &e.vectors;
        assert!((gram - DMatrix::identity(n, n)).amax() < 1e-8);
        let recon = &e.vectors * DMatrix::from_diagonal(&e.values.clone().into()) * e.vectors.transpose();
        assert!((recon - m).norm() <= 1e-7 * fro.max(1.0));
    }

    #[test]
    fn sym_eig_examples() {
        let e = sym_eig(&DMatrix::identity(3, 3)).unwrap();
        assert!(close(&e.values, &[1.0, 1.0, 1.0], 1e-12));
        let e = sym_eig(&Graph::path(3).laplacian().entries).unwrap();
        // characteristic polynomial of the path Laplacian: -λ(λ-1)(λ-3)
        assert!(close(&e.values, &[0.0, 1.0, 3.0], 1e-12));
        let e = sym_eig(&dmatrix![2.0, 0.0; 0.0, -1.0]).unwrap();
        assert!(close(&e.values, &[-1.0, 2.0], 1e-12));
        assert!(matches!(
            sym_eig(&dmatrix![1.0, 2.0; 0.0, 1.0]),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn sym_eig_random_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 2, 5, 17, 40] {
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let m = &a + a.transpose();
            let e = sym_eig(&m).unwrap();
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            check_invariants(&m, &e);
        }
    }

    #[test]
    fn normalized_laplacian_of_triangle() {
        let l = Graph::complete(3).normalized_laplacian().unwrap();
        let e = sym_eig(&l.entries).unwrap();
        assert!(close(&e.values, &[0.0, 1.5, 1.5], 1e-12));
    }

    #[test]
    fn dropped_vector_is_degree_direction() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 4), (0, 2)])
            .unwrap();
        let l = g.normalized_laplacian().unwrap();
        let e = sym_eig(&l.entries).unwrap();
        assert!(e.values[0].abs() <= 1e-8);
        let mut d: Vec<f64> = g.degrees().iter().map(|&d| (d as f64).sqrt()).collect();
        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        d.iter_mut().for_each(|x| *x /= norm);
        let dot: f64 = d.iter().zip(e.vectors.column(0).iter()).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn embed_path_three() {
        // eigenvalue 1 of the normalized P3 Laplacian has eigenvector (1, 0, -1)/√2
        let emb = embed(&Graph::path(3), 1).unwrap();
        let c = emb.coords.column(0);
        assert!((emb.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!(c[1].abs() < 1e-12);
        assert!(c[0] * c[2] < 0.0);
        assert!((c[0].abs() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn embed_star_degenerate_block() {
        // K_{1,3}: spectrum {0, 1, 1, 2}; the eigenvalue-1 space lives on the
        // leaves with zero sum and zero at the hub.
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let emb = embed(&g, 2).unwrap();
        assert!(close(&emb.eigenvalues, &[1.0, 1.0], 1e-12));
        assert!(emb.coords.row(0).amax() < 1e-12);
        for col in 0..2 {
            let s: f64 = (1..4).map(|v| emb.coords[(v, col)]).sum();
            assert!(s.abs() < 1e-12);
        }
        // the three leaf rows are distinct points of an orthonormal frame
        // scaled onto the zero-sum plane, so pairwise distances are equal
        let d = |a: usize, b: usize| (emb.coords.row(a) - emb.coords.row(b)).norm();
        assert!((d(1, 2) - d(1, 3)).abs() < 1e-10 && (d(1, 2) - d(2, 3)).abs() < 1e-10);
    }

    #[test]
    fn embed_errors() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(embed(&g, 1).unwrap_err(), Error::Disconnected);
        assert!(matches!(embed(&Graph::path(3), 2), Err(Error::InvalidArgument(_))));
        assert!(matches!(embed(&Graph::path(3), 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn embedding_distances_invariant_under_relabeling() {
        let g = Graph::from_edges(
            7,
            [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (0, 3), (2, 5), (1, 6)],
        )
        .unwrap();
        let sigma = Permutation::new(vec![4, 2, 6, 0, 1, 5, 3]).unwrap();
        let h = g.relabel(&sigma).unwrap();
        let k = 3;
        let eg = embed(&g, k).unwrap();
        let eh = embed(&h, k).unwrap();
        assert!(close(&eg.eigenvalues, &eh.eigenvalues, 1e-10));
        for a in 0..7 {
            for b in 0..7 {
                let dg = (eg.coords.row(a) - eg.coords.row(b)).norm();
                let dh = (eh.coords.row(sigma.apply(a)) - eh.coords.row(sigma.apply(b))).norm();
                assert!((dg - dh).abs() < 1e-6);
            }
        }
    }
}
