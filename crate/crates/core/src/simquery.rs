//! Nearest and farthest vertex queries over mixture coefficients.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simplex::MixtureTable;

/// Euclidean distance between rows `i` and `j`.
pub fn pair_distance(table: &MixtureTable, i: usize, j: usize) -> Result<f64> {
    let n = table.n();
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, size: n });
        }
    }
    Ok(euclid(table.row(i), table.row(j)))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Neighbor {
    pub vertex: usize,
    pub distance: f64,
}

const LEAF_SIZE: usize = 8;

#[derive(Debug)]
enum NodeKind {
    Leaf(Vec<usize>),
    Split { left: usize, right: usize },
}

#[derive(Debug)]
struct Node {
    lo: Vec<f64>,
    hi: Vec<f64>,
    kind: NodeKind,
}

/// Exact kd-tree over the rows of a table. Equal distances are ordered by
/// vertex index, lower first, in both query directions.
#[derive(Debug)]
pub struct SimilarityIndex {
    points: Vec<Vec<f64>>,
    nodes: Vec<Node>,
}

impl SimilarityIndex {
    pub fn from_table(table: &MixtureTable) -> Result<SimilarityIndex> {
        SimilarityIndex::new(table.theta.clone())
    }

    pub fn new(points: Vec<Vec<f64>>) -> Result<SimilarityIndex> {
        let dim = points.first().map_or(0, |p| p.len());
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        let mut index = SimilarityIndex { points, nodes: Vec::new() };
        if !index.points.is_empty() {
            let all: Vec<usize> = (0..index.points.len()).collect();
            index.build(all, 0);
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, v: usize) -> &[f64] {
        &self.points[v]
    }

    fn build(&mut self, mut idx: Vec<usize>, depth: usize) -> usize {
        let dim = self.points[0].len();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &idx {
            for (d, &x) in self.points[i].iter().enumerate() {
                lo[d] = lo[d].min(x);
                hi[d] = hi[d].max(x);
            }
        }
        let id = self.nodes.len();
        if idx.len() <= LEAF_SIZE || dim == 0 {
            self.nodes.push(Node { lo, hi, kind: NodeKind::Leaf(idx) });
            return id;
        }
        let axis = depth % dim;
        let pts = &self.points;
        idx.sort_by(|&a, &b| pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b)));
        let right_idx = idx.split_off(idx.len() / 2);
        self.nodes.push(Node { lo, hi, kind: NodeKind::Leaf(Vec::new()) });
        let left = self.build(idx, depth + 1);
        let right = self.build(right_idx, depth + 1);
        self.nodes[id].kind = NodeKind::Split { left, right };
        id
    }

    fn check(&self, v: usize, t: usize) -> Result<()> {
        let n = self.points.len();
        if v >= n {
            return Err(Error::IndexOutOfRange { index: v, size: n });
        }
        if t == 0 || t >= n {
            return Err(Error::InvalidArgument(format!("t = {t} must be in 1..={}", n.saturating_sub(1))));
        }
        Ok(())
    }

    /// The `t` vertices closest to `v`, excluding `v`, nearest first.
    pub fn most_similar(&self, v: usize, t: usize) -> Result<Vec<Neighbor>> {
        self.check(v, t)?;
        let mut best = Vec::with_capacity(t + 1);
        self.search(0, v, t, false, &mut best);
        Ok(best)
    }

    /// The `t` vertices farthest from `v`, farthest first.
    pub fn most_dissimilar(&self, v: usize, t: usize) -> Result<Vec<Neighbor>> {
        self.check(v, t)?;
        let mut best = Vec::with_capacity(t + 1);
        self.search(0, v, t, true, &mut best);
        Ok(best)
    }

    fn search(&self, node: usize, v: usize, t: usize, far: bool, best: &mut Vec<Neighbor>) {
        let q = &self.points[v];
        let nd = &self.nodes[node];
        if best.len() == t {
            let worst = best[t - 1].distance;
            // strict comparisons keep subtrees that could win a tie on index
            let slack = 1e-12 * (1.0 + worst);
            if far {
                if box_max_dist(q, &nd.lo, &nd.hi) < worst - slack {
                    return;
                }
            } else if box_min_dist(q, &nd.lo, &nd.hi) > worst + slack {
                return;
            }
        }
        match &nd.kind {
            NodeKind::Leaf(idx) => {
                for &i in idx {
                    if i != v {
                        let cand = Neighbor { vertex: i, distance: euclid(q, &self.points[i]) };
                        insert(best, cand, t, far);
                    }
                }
            }
            NodeKind::Split { left, right } => {
                let (l, r) = (*left, *right);
                let dl = self.order_key(l, q, far);
                let dr = self.order_key(r, q, far);
                let (first, second) = if dr < dl { (r, l) } else { (l, r) };
                self.search(first, v, t, far, best);
                self.search(second, v, t, far, best);
            }
        }
    }

    fn order_key(&self, node: usize, q: &[f64], far: bool) -> f64 {
        let nd = &self.nodes[node];
        if far {
            -box_max_dist(q, &nd.lo, &nd.hi)
        } else {
            box_min_dist(q, &nd.lo, &nd.hi)
        }
    }
}

fn cmp_neighbor(a: &Neighbor, b: &Neighbor, far: bool) -> Ordering {
    let by_dist = if far {
        b.distance.total_cmp(&a.distance)
    } else {
        a.distance.total_cmp(&b.distance)
    };
    by_dist.then(a.vertex.cmp(&b.vertex))
}

fn insert(best: &mut Vec<Neighbor>, cand: Neighbor, t: usize, far: bool) {
    let pos = best.partition_point(|b| cmp_neighbor(b, &cand, far) == Ordering::Less);
    if pos < t {
        best.insert(pos, cand);
        best.truncate(t);
    }
}

fn box_min_dist(q: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    q.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&x, (&l, &h))| {
            let d = if x < l { l - x } else if x > h { x - h } else { 0.0 };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn box_max_dist(q: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    q.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&x, (&l, &h))| {
            let d = (x - l).abs().max((h - x).abs());
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Reference answer by sorting every other vertex.
pub fn linear_scan(points: &[Vec<f64>], v: usize, t: usize, far: bool) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = (0..points.len())
        .filter(|&i| i != v)
        .map(|i| Neighbor { vertex: i, distance: euclid(&points[v], &points[i]) })
        .collect();
    all.sort_by(|a, b| cmp_neighbor(a, b, far));
    all.truncate(t);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use proptest::prelude::*;
    use rand::Rng;

    fn table(rows: &[&[f64]]) -> MixtureTable {
        MixtureTable::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn ids(v: &[Neighbor]) -> Vec<usize> {
        v.iter().map(|n| n.vertex).collect()
    }

    #[test]
    fn pair_distance_examples() {
        let t = table(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0]]);
        assert_eq!(pair_distance(&t, 0, 2).unwrap(), 0.0);
        assert!((pair_distance(&t, 0, 1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(pair_distance(&t, 0, 3).is_err());
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        let mut rng = rng_from(3);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| {
                let w: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|x| x / s).collect()
            })
            .collect();
        let t = MixtureTable::new(rows).unwrap();
        for _ in 0..100 {
            let (a, b, c) = (rng.random_range(0..30), rng.random_range(0..30), rng.random_range(0..30));
            let ab = pair_distance(&t, a, b).unwrap();
            let bc = pair_distance(&t, b, c).unwrap();
            let ac = pair_distance(&t, a, c).unwrap();
            assert!(ac <= ab + bc + 1e-12);
            assert_eq!(ab, pair_distance(&t, b, a).unwrap());
        }
    }

    #[test]
    fn small_queries() {
        let t = table(&[&[0.0, 0.0, 1.0], &[0.0, 0.1, 0.9], &[1.0, 0.0, 0.0]]);
        let idx = SimilarityIndex::from_table(&t).unwrap();
        assert_eq!(ids(&idx.most_similar(0, 1).unwrap()), vec![1]);

        let t = table(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.5, 0.5, 0.0]]);
        let idx = SimilarityIndex::from_table(&t).unwrap();
        assert_eq!(ids(&idx.most_dissimilar(0, 1).unwrap()), vec![1]);
        assert_eq!(ids(&idx.most_dissimilar(0, 2).unwrap()), vec![1, 2]);
        assert!(idx.most_similar(0, 0).is_err());
        assert!(idx.most_similar(0, 3).is_err());
        assert!(idx.most_similar(5, 1).is_err());
    }

    #[test]
    fn duplicate_row_comes_first() {
        let t = table(&[&[0.2, 0.8], &[0.9, 0.1], &[0.5, 0.5], &[0.9, 0.1]]);
        let idx = SimilarityIndex::from_table(&t).unwrap();
        let r = idx.most_similar(3, 2).unwrap();
        assert_eq!(r[0], Neighbor { vertex: 1, distance: 0.0 });
    }

    #[test]
    fn random_table_top5_matches_scan() {
        let mut rng = rng_from(11);
        let pts: Vec<Vec<f64>> = (0..200).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let idx = SimilarityIndex::new(pts.clone()).unwrap();
        for v in 0..200 {
            assert_eq!(idx.most_similar(v, 5).unwrap(), linear_scan(&pts, v, 5, false));
            assert_eq!(idx.most_dissimilar(v, 5).unwrap(), linear_scan(&pts, v, 5, true));
        }
    }

    #[test]
    fn full_lists_are_reverses_under_distinct_distances() {
        let mut rng = rng_from(5);
        let pts: Vec<Vec<f64>> = (0..40).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
        let idx = SimilarityIndex::new(pts).unwrap();
        let mut near = ids(&idx.most_similar(7, 39).unwrap());
        near.reverse();
        assert_eq!(near, ids(&idx.most_dissimilar(7, 39).unwrap()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn index_matches_scan_with_ties(
            dim in 3usize..=6,
            n in 2usize..60,
            seed in any::<u64>(),
            t_frac in 0.0f64..1.0,
        ) {
            let mut rng = rng_from(seed);
            // coarse grid coordinates force many equal distances
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.random_range(0..3) as f64 * 0.5).collect())
                .collect();
            let idx = SimilarityIndex::new(pts.clone()).unwrap();
            let t = 1 + ((n - 1) as f64 * t_frac) as usize;
            let t = t.min(n - 1);
            for v in 0..n {
                prop_assert_eq!(idx.most_similar(v, t).unwrap(), linear_scan(&pts, v, t, false));
                prop_assert_eq!(idx.most_dissimilar(v, t).unwrap(), linear_scan(&pts, v, t, true));
            }
        }
    }
}
