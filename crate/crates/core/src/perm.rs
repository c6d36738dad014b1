//! Permutations of `0..n` stored as image vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bijection on `0..n`; `map[i]` is the image of `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n).collect(),
        }
    }

    /// Validates that `map` is a bijection on `0..map.len()`.
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n {
                return Err(Error::InvalidPermutation(format!(
                    "image {v} out of range for length {n}"
                )));
            }
            if seen[v] {
                return Err(Error::InvalidPermutation(format!("image {v} repeated")));
            }
            seen[v] = true;
        }
        Ok(Permutation { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// Returns `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Permutation {
            map: other.map.iter().map(|&j| self.map[j]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { map: inv }
    }

    /// Cycles in order of their smallest element, each starting there.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cycle.push(cur);
                cur = self.map[cur];
            }
            out.push(cycle);
        }
        out
    }

    pub fn num_cycles(&self) -> usize {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cur = self.map[cur];
            }
        }
        count
    }

    pub fn num_fixed_points(&self) -> usize {
        self.map.iter().enumerate().filter(|(i, &v)| *i == v).count()
    }

    /// Swaps the images of `i` and `j`, giving `self ∘ (i j)`.
    pub fn apply_transposition(&self, i: usize, j: usize) -> Result<Permutation> {
        let n = self.len();
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, size: n });
            }
        }
        let mut map = self.map.clone();
        map.swap(i, j);
        Ok(Permutation { map })
    }

    /// Parses an alignment file: one `i j` pair per line meaning `i ↦ j`.
    ///
    /// Vertices missing from the file are assigned to the unused images in
    /// increasing order, so a partial external alignment still yields a
    /// permutation. Blank lines and `#` comments are skipped.
    pub fn from_alignment_text(text: &str, n: usize) -> Result<Permutation> {
        let mut map: Vec<Option<usize>> = vec![None; n];
        let mut used = vec![false; n];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            let mut toks = line.split_whitespace();
            let (a, b) = match (toks.next(), toks.next(), toks.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => return Err(parse_err("expected two integers")),
            };
            let i: usize = a.parse().map_err(|_| parse_err("invalid source index"))?;
            let j: usize = b.parse().map_err(|_| parse_err("invalid target index"))?;
            if i >= n || j >= n {
                return Err(parse_err(&format!("index out of range for n = {n}")));
            }
            if map[i].is_some() {
                return Err(parse_err(&format!("vertex {i} assigned twice")));
            }
            if used[j] {
                return Err(parse_err(&format!("target {j} assigned twice")));
            }
            map[i] = Some(j);
            used[j] = true;
        }
        let mut free = (0..n).filter(|&j| !used[j]);
        let map = map
            .into_iter()
            .map(|m| m.unwrap_or_else(|| free.next().expect("counts match")))
            .collect();
        Permutation::new(map)
    }

    pub fn to_alignment_text(&self) -> String {
        self.map
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{i} {v}\n"))
            .collect()
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(map: Vec<usize>) -> Result<Self> {
        Permutation::new(map)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.map
    }
}
