//! Coherent-group detection by weighted modularity maximization.
//!
//! A coherency matrix is turned into a nonnegative weight graph ([`preprocess`]), then
//! [`cluster`] agglomerates singleton groups greedily by largest modularity gain and returns
//! the partition with the highest modularity seen along the way. Neither the number of groups
//! nor a coupling threshold is an input.
//!
//! Modularity for weights `w`, strengths `s_i = Σ_j w_ij` and `2m = Σ_ij w_ij`:
//!
//! ```text
//! Q = (1/2m) Σ_ij [ w_ij − s_i s_j / 2m ] · [c_i = c_j]
//! ```

mod exact;
mod greedy;

use serde::Serialize;

pub use exact::{brute_force_best, BRUTE_FORCE_MAX_DIM};
pub use greedy::{cluster, MergeStep, MergeTrace};

use crate::error::{check_dim, Error, Result};
use crate::model::SymmetricMatrix;

/// Nonnegative, zero-diagonal weights with cached strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGraph {
    w: SymmetricMatrix,
    strength: Vec<f64>,
    total: f64,
}

impl WeightGraph {
    /// Wraps weights that already satisfy the graph invariants.
    pub fn new(w: SymmetricMatrix) -> Result<Self> {
        let n = w.dim();
        for i in 0..n {
            if w.get(i, i) != 0.0 {
                return Err(Error::invalid(format!("nonzero self-weight at node {i}")));
            }
            for j in 0..i {
                let v = w.get(i, j);
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::invalid(format!(
                        "weight ({i}, {j}) = {v} is not a finite nonnegative number"
                    )));
                }
            }
        }
        let strength: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
        let total: f64 = strength.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("no positive coupling"));
        }
        Ok(Self { w, strength, total })
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w.get(i, j)
    }

    pub fn weights(&self) -> &SymmetricMatrix {
        &self.w
    }

    pub fn strength(&self, i: usize) -> f64 {
        self.strength[i]
    }

    /// `2m`, the sum of all entries of the full matrix.
    pub fn total(&self) -> f64 {
        self.total
    }
}

/// Clamps negative couplings to zero and clears the diagonal.
pub fn preprocess(m: &SymmetricMatrix) -> Result<WeightGraph> {
    if m.packed().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("coherency matrix has non-finite entries"));
    }
    let w = SymmetricMatrix::from_fn(
        m.dim(),
        |i, j| {
            if i == j {
                0.0
            } else {
                m.get(i, j).max(0.0)
            }
        },
    );
    WeightGraph::new(w)
}

/// Group assignment with canonical labels: groups are numbered in ascending order of their
/// lowest member index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Partition {
    assign: Vec<usize>,
    n_groups: usize,
}

impl Partition {
    /// Relabels arbitrary group keys canonically.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let assign = labels
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        Self {
            assign,
            n_groups: map.len(),
        }
    }

    pub fn from_groups(n: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (g, members) in groups.iter().enumerate() {
            for &i in members {
                if i >= n || labels[i] != usize::MAX {
                    return Err(Error::invalid(format!(
                        "member {i} out of range or listed twice"
                    )));
                }
                labels[i] = g;
            }
        }
        if labels.contains(&usize::MAX) {
            return Err(Error::invalid("partition leaves a member unassigned"));
        }
        Ok(Self::from_labels(&labels))
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            assign: (0..n).collect(),
            n_groups: n,
        }
    }

    pub fn single_group(n: usize) -> Self {
        Self {
            assign: vec![0; n],
            n_groups: usize::from(n > 0),
        }
    }

    pub fn len(&self) -> usize {
        self.assign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assign.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn group_of(&self, i: usize) -> usize {
        self.assign[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assign
    }

    /// Member indices of each group, ascending.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_groups];
        for (i, &g) in self.assign.iter().enumerate() {
            out[g].push(i);
        }
        out
    }

    pub fn labeled_groups(&self, labels: &[String]) -> Vec<Vec<String>> {
        self.groups()
            .into_iter()
            .map(|g| g.into_iter().map(|i| labels[i].clone()).collect())
            .collect()
    }

    /// Groups as sets, independent of label order. Useful for comparing partitions.
    pub fn group_sets(&self) -> std::collections::BTreeSet<Vec<usize>> {
        self.groups().into_iter().collect()
    }
}

pub fn modularity(g: &WeightGraph, p: &Partition) -> Result<f64> {
    check_dim("partition", g.dim(), p.len())?;
    let two_m = g.total();
    let mut inside = vec![0.0; p.n_groups()];
    let mut strength = vec![0.0; p.n_groups()];
    for i in 0..g.dim() {
        let gi = p.group_of(i);
        strength[gi] += g.strength(i);
        for j in 0..i {
            if p.group_of(j) == gi {
                inside[gi] += 2.0 * g.weight(i, j);
            }
        }
    }
    Ok(inside
        .iter()
        .zip(&strength)
        .map(|(&w_in, &s)| w_in / two_m - (s / two_m) * (s / two_m))
        .sum())
}
