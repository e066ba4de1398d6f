use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;

use super::{Partition, WeightGraph};

/// One agglomeration: group `b` merged into group `a`, where groups are identified by their
/// lowest member index (so `a < b` always).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MergeStep {
    pub a: usize,
    pub b: usize,
    pub delta_q: f64,
    pub q_after: f64,
}

/// Full greedy dendrogram, from singletons down to one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeTrace {
    pub n: usize,
    /// Modularity of the all-singletons partition.
    pub q_initial: f64,
    pub steps: Vec<MergeStep>,
    /// Index into `steps` of the first step attaining the maximum `q_after`.
    pub best_step: usize,
}

impl MergeTrace {
    pub fn best_q(&self) -> f64 {
        self.steps[self.best_step].q_after
    }

    /// Partition after the first `merges` steps have been applied.
    pub fn partition_after(&self, merges: usize) -> Partition {
        let mut label: Vec<usize> = (0..self.n).collect();
        for s in &self.steps[..merges.min(self.steps.len())] {
            for l in label.iter_mut() {
                if *l == s.b {
                    *l = s.a;
                }
            }
        }
        Partition::from_labels(&label)
    }

    /// Partition with exactly `k` groups, if `1 <= k <= n`.
    pub fn partition_with_groups(&self, k: usize) -> Option<Partition> {
        (1..=self.n)
            .contains(&k)
            .then(|| self.partition_after(self.n - k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dq: f64,
    a: usize,
    b: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // Max-heap on ΔQ; equal ΔQ prefers the lexicographically smallest pair.
    fn cmp(&self, other: &Self) -> Ordering {
        self.dq
            .total_cmp(&other.dq)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn better(x: &Candidate, y: &Candidate) -> bool {
    x.cmp(y) == Ordering::Greater
}

struct Agglomeration {
    /// ΔQ of merging two adjacent groups, keyed both ways.
    dq: Vec<BTreeMap<usize, f64>>,
    /// Fraction of edge ends attached to each group.
    frac: Vec<f64>,
    alive: Vec<bool>,
    heap: BinaryHeap<Candidate>,
}

impl Agglomeration {
    fn new(g: &WeightGraph) -> Self {
        let n = g.dim();
        let two_m = g.total();
        let frac: Vec<f64> = (0..n).map(|i| g.strength(i) / two_m).collect();
        let mut dq = vec![BTreeMap::new(); n];
        let mut heap = BinaryHeap::new();
        for i in 0..n {
            for j in 0..i {
                let w = g.weight(i, j);
                if w > 0.0 {
                    let d = 2.0 * (w / two_m - frac[i] * frac[j]);
                    dq[i].insert(j, d);
                    dq[j].insert(i, d);
                    heap.push(Candidate { dq: d, a: j, b: i });
                }
            }
        }
        Self {
            dq,
            frac,
            alive: vec![true; n],
            heap,
        }
    }

    fn best_adjacent(&mut self) -> Option<Candidate> {
        while let Some(c) = self.heap.peek().copied() {
            let current = self.dq[c.a].get(&c.b).copied();
            if self.alive[c.a]
                && self.alive[c.b]
                && current.map(f64::to_bits) == Some(c.dq.to_bits())
            {
                return Some(c);
            }
            self.heap.pop();
        }
        None
    }

    /// Best pair over all live groups, adjacent or not. Non-adjacent pairs gain
    /// `−2 a_i a_j`, which is never positive.
    fn best_any(&self) -> Option<Candidate> {
        let live: Vec<usize> = (0..self.alive.len()).filter(|&i| self.alive[i]).collect();
        let mut best: Option<Candidate> = None;
        for (x, &a) in live.iter().enumerate() {
            for &b in &live[x + 1..] {
                let dq = self.dq[a]
                    .get(&b)
                    .copied()
                    .unwrap_or(-2.0 * self.frac[a] * self.frac[b]);
                let c = Candidate { dq, a, b };
                if best.is_none_or(|bst| better(&c, &bst)) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn merge(&mut self, a: usize, b: usize) {
        debug_assert!(a < b);
        let row_a = std::mem::take(&mut self.dq[a]);
        let row_b = std::mem::take(&mut self.dq[b]);
        let (fa, fb) = (self.frac[a], self.frac[b]);
        let mut merged = BTreeMap::new();
        let neighbours: std::collections::BTreeSet<usize> = row_a
            .keys()
            .chain(row_b.keys())
            .copied()
            .filter(|&k| k != a && k != b)
            .collect();
        for k in neighbours {
            let d = match (row_a.get(&k), row_b.get(&k)) {
                (Some(x), Some(y)) => x + y,
                (Some(x), None) => x - 2.0 * fb * self.frac[k],
                (None, Some(y)) => y - 2.0 * fa * self.frac[k],
                (None, None) => unreachable!(),
            };
            merged.insert(k, d);
            self.dq[k].remove(&b);
            self.dq[k].insert(a, d);
            self.heap.push(Candidate {
                dq: d,
                a: a.min(k),
                b: a.max(k),
            });
        }
        self.dq[a] = merged;
        self.frac[a] = fa + fb;
        self.frac[b] = 0.0;
        self.alive[b] = false;
    }
}

/// Greedy agglomerative modularity maximization.
///
/// Starts from singletons and repeatedly merges the pair of groups with the largest modularity
/// gain until one group remains; equal gains go to the smallest `(a, b)` pair. Gains are kept
/// per adjacent pair and updated locally after each merge, with a lazily invalidated heap
/// selecting the best. Once no adjacent merge has a positive gain, the remaining merges are
/// chosen by a scan over all live pairs, since a non-adjacent pair can then be the best.
///
/// Returns the partition at the step of maximum modularity, canonically labeled.
pub fn cluster(g: &WeightGraph) -> (Partition, MergeTrace) {
    let n = g.dim();
    let mut agg = Agglomeration::new(g);
    let q_initial: f64 = -agg.frac.iter().map(|a| a * a).sum::<f64>();
    let mut q = q_initial;
    let mut steps = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let pick = match agg.best_adjacent() {
            Some(c) if c.dq > 0.0 => Some(c),
            _ => agg.best_any(),
        };
        let Some(c) = pick else { break };
        agg.merge(c.a, c.b);
        q += c.dq;
        steps.push(MergeStep {
            a: c.a,
            b: c.b,
            delta_q: c.dq,
            q_after: q,
        });
    }
    let best_step = steps
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (k, s)| match best {
            Some((_, bq)) if bq >= s.q_after => best,
            _ => Some((k, s.q_after)),
        })
        .map_or(0, |(k, _)| k);
    let trace = MergeTrace {
        n,
        q_initial,
        steps,
        best_step,
    };
    let partition = if trace.steps.is_empty() {
        Partition::singletons(n)
    } else {
        trace.partition_after(best_step + 1)
    };
    (partition, trace)
}
