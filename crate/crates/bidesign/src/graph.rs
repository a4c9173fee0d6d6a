//! Bipartite interference graph between intervention and outcome units.
//!
//! Unit ids are zero-based inside the library; the file formats in [`crate::io`]
//! use one-based ids and translate at the boundary.

use crate::error::{Error, Result};
use serde::Serialize;

/// Sparse bipartite graph stored as adjacency lists in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    /// For each outcome unit, the sorted intervention units it listens to.
    in_sets: Vec<Vec<usize>>,
    /// For each intervention unit, the sorted outcome units it reaches.
    out_sets: Vec<Vec<usize>>,
    n_edges: usize,
}

impl BipartiteGraph {
    /// Builds a graph from `(intervention, outcome)` edge pairs.
    ///
    /// Ids must be in range and edges must be distinct. Outcome units with no
    /// edges are allowed; they experience every assignment identically.
    pub fn new(n_intervention: usize, n_outcome: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut in_sets = vec![Vec::new(); n_outcome];
        let mut out_sets = vec![Vec::new(); n_intervention];
        for &(n, m) in edges {
            if n >= n_intervention {
                return Err(Error::InvalidInput(format!(
                    "edge ({n}, {m}): intervention unit {n} out of range (have {n_intervention})"
                )));
            }
            if m >= n_outcome {
                return Err(Error::InvalidInput(format!(
                    "edge ({n}, {m}): outcome unit {m} out of range (have {n_outcome})"
                )));
            }
            in_sets[m].push(n);
            out_sets[n].push(m);
        }
        for (m, set) in in_sets.iter_mut().enumerate() {
            set.sort_unstable();
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput(format!(
                    "duplicate edge into outcome unit {m}"
                )));
            }
        }
        for set in &mut out_sets {
            set.sort_unstable();
        }
        Ok(Self {
            in_sets,
            out_sets,
            n_edges: edges.len(),
        })
    }

    pub fn n_intervention(&self) -> usize {
        self.out_sets.len()
    }

    pub fn n_outcome(&self) -> usize {
        self.in_sets.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    /// Intervention units whose treatments outcome unit `m` experiences.
    pub fn intervention_set(&self, m: usize) -> &[usize] {
        &self.in_sets[m]
    }

    /// Outcome units reached by intervention unit `n`.
    pub fn outcome_set(&self, n: usize) -> &[usize] {
        &self.out_sets[n]
    }

    /// Outcome units with an empty intervention set.
    pub fn isolated_outcome_units(&self) -> Vec<usize> {
        (0..self.n_outcome())
            .filter(|&m| self.in_sets[m].is_empty())
            .collect()
    }

    /// Sorted union of the intervention sets of two outcome units.
    pub fn union_set(&self, m1: usize, m2: usize) -> Vec<usize> {
        let (a, b) = (&self.in_sets[m1], &self.in_sets[m2]);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        out
    }

    /// Number of intervention units shared by two outcome units.
    pub fn overlap(&self, m1: usize, m2: usize) -> usize {
        let (a, b) = (&self.in_sets[m1], &self.in_sets[m2]);
        let (mut i, mut j, mut k) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    k += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        k
    }

    /// True when the two outcome units share at least one intervention unit.
    pub fn overlaps(&self, m1: usize, m2: usize) -> bool {
        self.overlap(m1, m2) > 0
    }

    /// Summary statistics of the interference structure.
    pub fn stats(&self) -> GraphStats {
        let n = self.n_intervention();
        let m = self.n_outcome();
        let mut max_in = 0usize;
        let mut max_out = 0usize;
        for s in &self.in_sets {
            max_in = max_in.max(s.len());
        }
        for s in &self.out_sets {
            max_out = max_out.max(s.len());
        }

        // One pass per outcome unit over its neighbours' outcome sets gives
        // both the overlap counts and the overlapping-pair tally.
        let mut shared = vec![0usize; m];
        let mut touched = Vec::new();
        let mut max_overlap = 0usize;
        let mut ordered_pairs = 0usize;
        for m1 in 0..m {
            for &unit in &self.in_sets[m1] {
                for &m2 in &self.out_sets[unit] {
                    if m2 == m1 {
                        continue;
                    }
                    if shared[m2] == 0 {
                        touched.push(m2);
                    }
                    shared[m2] += 1;
                }
            }
            ordered_pairs += touched.len();
            for &m2 in &touched {
                max_overlap = max_overlap.max(shared[m2]);
                shared[m2] = 0;
            }
            touched.clear();
        }

        GraphStats {
            n_intervention: n,
            n_outcome: m,
            n_edges: self.n_edges,
            density_pct: if n * m == 0 {
                0.0
            } else {
                100.0 * self.n_edges as f64 / (n * m) as f64
            },
            avg_intervention_set_size: if m == 0 {
                0.0
            } else {
                self.n_edges as f64 / m as f64
            },
            max_intervention_set_size: max_in,
            avg_outcome_set_size: if n == 0 {
                0.0
            } else {
                self.n_edges as f64 / n as f64
            },
            max_outcome_set_size: max_out,
            n_isolated_outcome_units: self.isolated_outcome_units().len(),
            max_pairwise_overlap: max_overlap,
            n_overlapping_pairs: ordered_pairs,
        }
    }
}

/// Interference-structure summary; pair counts are over ordered pairs of
/// distinct outcome units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub n_intervention: usize,
    pub n_outcome: usize,
    pub n_edges: usize,
    pub density_pct: f64,
    pub avg_intervention_set_size: f64,
    pub max_intervention_set_size: usize,
    pub avg_outcome_set_size: f64,
    pub max_outcome_set_size: usize,
    pub n_isolated_outcome_units: usize,
    pub max_pairwise_overlap: usize,
    pub n_overlapping_pairs: usize,
}
