use super::{Partition, WeightGraph};
use crate::error::{Error, Result};

/// Largest graph accepted by [`brute_force_best`]; Bell(12) ≈ 4.2 million partitions.
pub const BRUTE_FORCE_MAX_DIM: usize = 12;

/// Exact modularity maximizer by enumeration of every set partition.
///
/// Partitions are visited as restricted growth strings, so the first maximizer found is
/// already canonically labeled. Intended as a test oracle for small graphs.
pub fn brute_force_best(g: &WeightGraph, max_n: usize) -> Result<(Partition, f64)> {
    let n = g.dim();
    let cap = max_n.min(BRUTE_FORCE_MAX_DIM);
    if n > cap {
        return Err(Error::invalid(format!(
            "exhaustive search limited to {cap} nodes, graph has {n}"
        )));
    }
    let two_m = g.total();
    let strength: Vec<f64> = (0..n).map(|i| g.strength(i) / two_m).collect();
    let mut search = Search {
        g,
        two_m,
        strength,
        assign: vec![0; n],
        group_strength: Vec::with_capacity(n),
        best_q: f64::NEG_INFINITY,
        best: Vec::new(),
    };
    search.descend(0, 0.0);
    let q = search.best_q;
    Ok((Partition::from_labels(&search.best), q))
}

struct Search<'a> {
    g: &'a WeightGraph,
    two_m: f64,
    strength: Vec<f64>,
    assign: Vec<usize>,
    group_strength: Vec<f64>,
    best_q: f64,
    best: Vec<usize>,
}

impl Search<'_> {
    fn descend(&mut self, v: usize, q: f64) {
        let n = self.assign.len();
        if v == n {
            if q > self.best_q {
                self.best_q = q;
                self.best = self.assign.clone();
            }
            return;
        }
        let groups = self.group_strength.len();
        let sv = self.strength[v];
        for grp in 0..=groups {
            let link: f64 = (0..v)
                .filter(|&u| self.assign[u] == grp)
                .map(|u| self.g.weight(u, v))
                .sum();
            let s_old = if grp < groups {
                self.group_strength[grp]
            } else {
                0.0
            };
            let s_new = s_old + sv;
            let gain = 2.0 * link / self.two_m - (s_new * s_new - s_old * s_old);
            self.assign[v] = grp;
            if grp == groups {
                self.group_strength.push(s_new);
            } else {
                self.group_strength[grp] = s_new;
            }
            self.descend(v + 1, q + gain);
            if grp == groups {
                self.group_strength.pop();
            } else {
                self.group_strength[grp] = s_old;
            }
        }
    }
}
