//! Undirected simple graphs, their Laplacians, and edge-list I/O.

use std::collections::{BTreeSet, HashMap, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;

/// Undirected simple graph on vertices `0..n`.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct GraphRepr {
    n: usize,
    edges: Vec<(usize, usize)>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;

    fn try_from(r: GraphRepr) -> Result<Graph> {
        let g = Graph::from_edges(r.n, r.edges)?;
        match r.labels {
            Some(l) => g.with_labels(l),
            None => Ok(g),
        }
    }
}

/// Counts of entries silently dropped while loading an edge list.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub lines: usize,
    pub self_loops: usize,
    pub duplicates: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    Combinatorial,
    Normalized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianMatrix {
    pub entries: DMatrix<f64>,
    pub kind: LaplacianKind,
}

impl LaplacianMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// `xᵀ L x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.entries[(i, j)] * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }
}

impl Graph {
    /// Builds a graph, dropping self-loops and duplicate edges.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::IndexOutOfRange { index: x, size: n });
                }
            }
            if u != v {
                set.insert((u.min(v), u.max(v)));
            }
        }
        Ok(Graph {
            n,
            edges: set.into_iter().collect(),
            labels: None,
        })
    }

    pub fn empty(n: usize) -> Graph {
        Graph {
            n,
            edges: Vec::new(),
            labels: None,
        }
    }

    pub fn complete(n: usize) -> Graph {
        let edges = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Graph {
            n,
            edges,
            labels: None,
        }
    }

    pub fn path(n: usize) -> Graph {
        Graph {
            n,
            edges: (1..n).map(|v| (v - 1, v)).collect(),
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Graph> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// The external label of vertex `v`, or its index when unlabeled.
    pub fn label(&self, v: usize) -> String {
        match &self.labels {
            Some(l) => l[v].clone(),
            None => v.to_string(),
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    /// Combinatorial Laplacian `D − A`.
    pub fn laplacian(&self) -> LaplacianMatrix {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            l[(u, v)] -= 1.0;
            l[(v, u)] -= 1.0;
            l[(u, u)] += 1.0;
            l[(v, v)] += 1.0;
        }
        LaplacianMatrix {
            entries: l,
            kind: LaplacianKind::Combinatorial,
        }
    }

    /// `I − D^{-1/2} A D^{-1/2}`; fails on the first isolated vertex.
    pub fn normalized_laplacian(&self) -> Result<LaplacianMatrix> {
        let deg = self.degrees();
        if let Some(v) = deg.iter().position(|&d| d == 0) {
            return Err(Error::IsolatedVertex(v));
        }
        let inv_sqrt: Vec<f64> = deg.iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
        let mut l = DMatrix::identity(self.n, self.n);
        for &(u, v) in &self.edges {
            let w = inv_sqrt[u] * inv_sqrt[v];
            l[(u, v)] = -w;
            l[(v, u)] = -w;
        }
        Ok(LaplacianMatrix {
            entries: l,
            kind: LaplacianKind::Normalized,
        })
    }

    /// Component id per vertex, ids assigned in order of smallest member.
    pub fn components(&self) -> Vec<usize> {
        let adj = self.adjacency_lists();
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[u] {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// Sorted vertices of the largest component; ties go to the component
    /// containing the smallest vertex index.
    pub fn largest_component_vertices(&self) -> Vec<usize> {
        let comp = self.components();
        let num = comp.iter().copied().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; num];
        for &c in &comp {
            sizes[c] += 1;
        }
        // component ids are ordered by smallest member, so the first max wins
        let best = sizes
            .iter()
            .enumerate()
            .fold((0, 0), |acc, (c, &s)| if s > acc.1 { (c, s) } else { acc })
            .0;
        (0..self.n).filter(|&v| comp[v] == best).collect()
    }

    /// Induced subgraph on [`Graph::largest_component_vertices`]. Labels are
    /// carried over.
    pub fn largest_component(&self) -> Graph {
        self.induced_subgraph(&self.largest_component_vertices())
    }

    /// Induced subgraph on `vertices` (must be sorted and distinct), reindexed
    /// in that order.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.n];
        for (new, &old) in vertices.iter().enumerate() {
            index[old] = new;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(u, v)| index[u] != usize::MAX && index[v] != usize::MAX)
            .map(|&(u, v)| (index[u], index[v]));
        let mut g = Graph::from_edges(vertices.len(), edges).expect("indices in range");
        if let Some(labels) = &self.labels {
            g.labels = Some(vertices.iter().map(|&v| labels[v].clone()).collect());
        }
        g
    }

    /// Renames every vertex `v` to `σ(v)`.
    ///
    /// The Laplacian of the result is `P L Pᵀ` with `P` the permutation
    /// matrix of `σ`. Labels move with their vertices.
    pub fn relabel(&self, sigma: &Permutation) -> Result<Graph> {
        if sigma.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: sigma.len(),
            });
        }
        let mut g = Graph::from_edges(
            self.n,
            self.edges
                .iter()
                .map(|&(u, v)| (sigma.apply(u), sigma.apply(v))),
        )?;
        if let Some(labels) = &self.labels {
            let mut moved = vec![String::new(); self.n];
            for (v, l) in labels.iter().enumerate() {
                moved[sigma.apply(v)] = l.clone();
            }
            g.labels = Some(moved);
        }
        Ok(g)
    }

    /// Same vertex count and edge set, ignoring labels.
    pub fn same_edges(&self, other: &Graph) -> bool {
        self.n == other.n && self.edges == other.edges
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for &(u, v) in &self.edges {
            out.push_str(&format!("{} {}\n", self.label(u), self.label(v)));
        }
        out
    }
}

/// Parses whitespace-separated `u v` lines; `#` starts a comment.
///
/// Tokens become dense indices in order of first appearance. Self-loops and
/// duplicate edges are dropped and counted in the report.
pub fn load_edge_list_with_report(text: &str) -> Result<(Graph, LoadReport)> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges = BTreeSet::new();
    let mut report = LoadReport::default();

    let mut intern = |tok: &str, labels: &mut Vec<String>| -> usize {
        if let Some(&i) = index.get(tok) {
            return i;
        }
        let i = labels.len();
        index.insert(tok.to_string(), i);
        labels.push(tok.to_string());
        i
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected 2 tokens, found {}", toks.len()),
            });
        }
        report.lines += 1;
        let u = intern(toks[0], &mut labels);
        let v = intern(toks[1], &mut labels);
        if u == v {
            report.self_loops += 1;
            continue;
        }
        if !edges.insert((u.min(v), u.max(v))) {
            report.duplicates += 1;
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = labels.len();
    let g = Graph {
        n,
        edges: edges.into_iter().collect(),
        labels: Some(labels),
    };
    Ok((g, report))
}

pub fn load_edge_list(text: &str) -> Result<Graph> {
    load_edge_list_with_report(text).map(|(g, _)| g)
}
