//! Group-level coherency (KSGM) and the grid integrity indices derived from it.
//!
//! For a partition into `N` groups the KSGM is the `N × N` matrix whose diagonal holds the
//! mean pairwise coupling inside each group and whose off-diagonal holds the mean coupling
//! across each pair of groups. From it:
//!
//! * GCI, the connectivity index: mean of the diagonal (within-group strength),
//! * GSI, the splitting index: mean of the upper off-diagonal (cross-group coupling),
//! * SI = GCI / GSI, the separation index; it grows as groups drift apart.

use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::{cluster, preprocess, Partition};
use crate::coherency::{cc_matrix_at, ks_matrix, DEFAULT_CC_WINDOW};
use crate::error::{check_dim, Error, Result};
use crate::model::{MachineSet, NetworkSchedule, SymmetricMatrix, Trajectory};

/// `N × N` group coherency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Ksgm {
    m: SymmetricMatrix,
    group_sizes: Vec<usize>,
}

impl Ksgm {
    /// Wraps a precomputed group matrix, e.g. a reference one.
    pub fn from_parts(m: SymmetricMatrix, group_sizes: Vec<usize>) -> Result<Self> {
        check_dim("group sizes", m.dim(), group_sizes.len())?;
        Ok(Self { m, group_sizes })
    }

    pub fn n_groups(&self) -> usize {
        self.m.dim()
    }

    pub fn get(&self, g: usize, h: usize) -> f64 {
        self.m.get(g, h)
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.m
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    /// Singleton groups have no internal pairs; their diagonal entry is 0 and carries no meaning.
    pub fn is_singleton(&self, g: usize) -> bool {
        self.group_sizes[g] < 2
    }
}

pub fn ksgm(ks: &impl AsRef<SymmetricMatrix>, p: &Partition) -> Result<Ksgm> {
    let ks = ks.as_ref();
    check_dim("partition", ks.dim(), p.len())?;
    let n_groups = p.n_groups();
    let mut sum = SymmetricMatrix::zeros(n_groups);
    let mut count = SymmetricMatrix::zeros(n_groups);
    for i in 0..ks.dim() {
        let gi = p.group_of(i);
        for j in 0..i {
            let gj = p.group_of(j);
            sum.set(gi, gj, sum.get(gi, gj) + ks.get(i, j));
            count.set(gi, gj, count.get(gi, gj) + 1.0);
        }
    }
    let m = SymmetricMatrix::from_fn(n_groups, |g, h| {
        let c = count.get(g, h);
        if c > 0.0 {
            sum.get(g, h) / c
        } else {
            0.0
        }
    });
    let mut group_sizes = vec![0; n_groups];
    for &g in p.assignment() {
        group_sizes[g] += 1;
    }
    Ok(Ksgm { m, group_sizes })
}

/// Mean within-group coupling over the non-singleton groups.
pub fn gci(k: &Ksgm) -> Result<f64> {
    let diag: Vec<f64> = (0..k.n_groups())
        .filter(|&g| !k.is_singleton(g))
        .map(|g| k.get(g, g))
        .collect();
    if diag.is_empty() {
        return Err(Error::invalid("GCI undefined: every group is a singleton"));
    }
    Ok(diag.iter().sum::<f64>() / diag.len() as f64)
}

/// Mean cross-group coupling over all group pairs.
pub fn gsi(k: &Ksgm) -> Result<f64> {
    let n = k.n_groups();
    if n < 2 {
        return Err(Error::invalid("GSI undefined for one group"));
    }
    let mut total = 0.0;
    for g in 0..n {
        for h in g + 1..n {
            total += k.get(g, h);
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// GCI / GSI; `+inf` when the groups are completely uncoupled.
pub fn si(gci_v: f64, gsi_v: f64) -> f64 {
    if gsi_v == 0.0 {
        f64::INFINITY
    } else {
        gci_v / gsi_v
    }
}

/// Indices at one instant. Undefined GCI or GSI (one group, or only singletons) is NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrityIndices {
    pub t: f64,
    pub gci: f64,
    pub gsi: f64,
    pub si: f64,
    pub n_groups: usize,
}

impl IntegrityIndices {
    pub fn from_ksgm(t: f64, k: &Ksgm) -> Self {
        let gci_v = gci(k).unwrap_or(f64::NAN);
        let gsi_v = gsi(k).unwrap_or(f64::NAN);
        let si_v = if gci_v.is_nan() || gsi_v.is_nan() {
            f64::NAN
        } else {
            si(gci_v, gsi_v)
        };
        Self {
            t,
            gci: gci_v,
            gsi: gsi_v,
            si: si_v,
            n_groups: k.n_groups(),
        }
    }
}

/// Everything derived from one coherency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotAnalysis {
    pub indices: IntegrityIndices,
    pub partition: Partition,
    /// Modularity of `partition`.
    pub q: f64,
    pub ksgm: Ksgm,
}

/// Clusters one coherency matrix and evaluates the indices on it.
pub fn analyze_matrix(t: f64, m: &impl AsRef<SymmetricMatrix>) -> Result<SnapshotAnalysis> {
    let m = m.as_ref();
    let graph = preprocess(m)?;
    let (partition, trace) = cluster(&graph);
    let k = ksgm(m, &partition)?;
    Ok(SnapshotAnalysis {
        indices: IntegrityIndices::from_ksgm(t, &k),
        q: trace.best_q(),
        partition,
        ksgm: k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Synchronization coefficient at each sample.
    #[default]
    Ks,
    /// Rotor-angle correlation over a trailing window of this many samples.
    Cc(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeriesOptions {
    pub method: Method,
    /// Analyze every `stride`-th sample.
    pub stride: usize,
    /// Worker threads; 1 runs inline.
    pub jobs: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            method: Method::Ks,
            stride: 1,
            jobs: 1,
        }
    }
}

impl SeriesOptions {
    pub fn cc(window: Option<usize>) -> Self {
        Self {
            method: Method::Cc(window.unwrap_or(DEFAULT_CC_WINDOW)),
            ..Self::default()
        }
    }
}

/// Sample indices analyzed under `opts`.
pub fn series_sample_indices(traj: &Trajectory, opts: &SeriesOptions) -> Result<Vec<usize>> {
    if opts.stride == 0 {
        return Err(Error::invalid("stride must be at least 1"));
    }
    let first = match opts.method {
        Method::Ks => 0,
        Method::Cc(n) => {
            if n < 2 {
                return Err(Error::invalid(
                    "correlation window must be at least 2 samples",
                ));
            }
            if traj.len() < n {
                return Err(Error::invalid(format!(
                    "correlation window of {n} samples exceeds trajectory length {}",
                    traj.len()
                )));
            }
            n - 1
        }
    };
    Ok((first..traj.len()).step_by(opts.stride).collect())
}

/// Coherency matrix → clustering → KSGM → indices for each analyzed sample, in time order.
///
/// With the KS method each sample uses the network active at its timestamp. Results do not
/// depend on `jobs`.
pub fn indices_series(
    traj: &Trajectory,
    machines: &MachineSet,
    schedule: &NetworkSchedule,
    opts: &SeriesOptions,
) -> Result<Vec<SnapshotAnalysis>> {
    check_dim("trajectory generators", machines.len(), traj.dim())?;
    if matches!(opts.method, Method::Ks) {
        check_dim("network schedule", machines.len(), schedule.dim())?;
    }
    let picks = series_sample_indices(traj, opts)?;
    let one = |k: usize| -> Result<SnapshotAnalysis> {
        let snap = &traj.samples()[k];
        match opts.method {
            Method::Ks => {
                let seg = schedule.at(snap.t)?;
                let ks = ks_matrix(snap, machines, &seg.net)?;
                analyze_matrix(snap.t, &ks)
            }
            Method::Cc(n) => {
                let cc = cc_matrix_at(traj, k, n)?;
                analyze_matrix(cc.t_end, &cc)
            }
        }
    };
    if opts.jobs <= 1 {
        return picks.into_iter().map(one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| picks.into_par_iter().map(one).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ReducedNetwork, RotorSnapshot};

    fn reference_ksgm() -> Ksgm {
        let rows = [
            [4.371, 0.008, 0.388, 0.000],
            [0.008, 6.124, 0.202, 0.000],
            [0.388, 0.202, 8.521, 3.133],
            [0.000, 0.000, 3.133, 14.105],
        ];
        Ksgm::from_parts(
            SymmetricMatrix::from_fn(4, |i, j| rows[i][j]),
            vec![6, 5, 5, 3],
        )
        .unwrap()
    }

    #[test]
    fn indices_from_reference_group_matrix() {
        let k = reference_ksgm();
        let g = gci(&k).unwrap();
        let s = gsi(&k).unwrap();
        // (4.371 + 6.124 + 8.521 + 14.105) / 4 and (0.008 + 0.388 + 0 + 0.202 + 0 + 3.133) / 6
        assert!((g - 8.280_25).abs() < 1e-12);
        assert!((s - 3.731 / 6.0).abs() < 1e-12);
        assert!((si(g, s) - 13.315_867_06).abs() < 1e-6);
    }

    #[test]
    fn small_group_counts() {
        let one = Ksgm::from_parts(SymmetricMatrix::from_fn(1, |_, _| 2.5), vec![3]).unwrap();
        assert_eq!(gci(&one).unwrap(), 2.5);
        assert!(gsi(&one).unwrap_err().to_string().contains("one group"));

        let two = Ksgm::from_parts(
            SymmetricMatrix::from_fn(2, |i, j| [[1.0, 0.25], [0.25, 3.0]][i][j]),
            vec![2, 2],
        )
        .unwrap();
        assert_eq!(gci(&two).unwrap(), 2.0);
        assert_eq!(gsi(&two).unwrap(), 0.25);

        let zero = Ksgm::from_parts(
            SymmetricMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 0.0 }),
            vec![2, 2],
        )
        .unwrap();
        assert_eq!(gsi(&zero).unwrap(), 0.0);
    }

    #[test]
    fn singletons_excluded_from_gci() {
        let k = Ksgm::from_parts(
            SymmetricMatrix::from_fn(3, |i, j| {
                [[4.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]][i][j]
            }),
            vec![3, 1, 1],
        )
        .unwrap();
        assert_eq!(gci(&k).unwrap(), 4.0);
        let all_single = Ksgm::from_parts(SymmetricMatrix::zeros(2), vec![1, 1]).unwrap();
        assert!(gci(&all_single)
            .unwrap_err()
            .to_string()
            .contains("GCI undefined"));
    }

    #[test]
    fn si_sentinels() {
        assert_eq!(si(3.0, 0.0), f64::INFINITY);
        assert_eq!(si(0.0, 2.0), 0.0);
        assert_eq!(si(6.0, 2.0), 3.0);
    }

    #[test]
    fn ksgm_of_constant_matrix() {
        let m = SymmetricMatrix::from_fn(6, |i, j| if i == j { 0.0 } else { 2.5 });
        let p = Partition::from_labels(&[0, 1, 0, 2, 1, 2]);
        let k = ksgm(&m, &p).unwrap();
        for g in 0..3 {
            for h in 0..3 {
                assert_eq!(k.get(g, h), 2.5);
            }
        }
    }

    #[test]
    fn ksgm_means_over_pairs() {
        // Group {0,1,2} holds pairs 1, 2, 3; group {3} is a singleton.
        let rows = [
            [0.0, 1.0, 2.0, 10.0],
            [1.0, 0.0, 3.0, 20.0],
            [2.0, 3.0, 0.0, 30.0],
            [10.0, 20.0, 30.0, 0.0],
        ];
        let m = SymmetricMatrix::from_fn(4, |i, j| rows[i][j]);
        let k = ksgm(&m, &Partition::from_labels(&[0, 0, 0, 1])).unwrap();
        assert_eq!(k.get(0, 0), 2.0);
        assert_eq!(k.get(0, 1), 20.0);
        assert_eq!(k.get(1, 1), 0.0);
        assert!(k.is_singleton(1));
        assert!(ksgm(&m, &Partition::singletons(3)).is_err());
    }

    fn two_area(cross: f64) -> ReducedNetwork {
        let mut b = SymmetricMatrix::zeros(4);
        b.set(0, 1, 10.0);
        b.set(2, 3, 8.0);
        b.set(0, 2, cross);
        b.set(1, 3, cross);
        ReducedNetwork::lossless(b)
    }

    fn constant_traj(len: usize) -> Trajectory {
        let ids: Vec<String> = (1..=4).map(|i| format!("G{i}")).collect();
        let samples = (0..len)
            .map(|k| RotorSnapshot::new(k as f64 * 0.1, vec![0.1, 0.05, -0.2, -0.25]))
            .collect();
        Trajectory::new(ids, samples).unwrap()
    }

    fn machines() -> MachineSet {
        MachineSet::uniform((1..=4).map(|i| format!("G{i}")).collect()).unwrap()
    }

    #[test]
    fn equilibrium_gives_constant_indices() {
        let traj = constant_traj(20);
        let sched = NetworkSchedule::constant("base", two_area(0.5));
        let out = indices_series(&traj, &machines(), &sched, &SeriesOptions::default()).unwrap();
        assert_eq!(out.len(), 20);
        assert!(out.iter().all(|a| a.partition == out[0].partition));
        assert!(out.iter().all(|a| a.indices.si == out[0].indices.si));
        assert_eq!(out[0].partition.n_groups(), 2);
    }

    #[test]
    fn si_rises_as_cross_coupling_decays() {
        let traj = constant_traj(10);
        let segments = (0..10)
            .map(|k| crate::model::NetworkSegment {
                t_start: k as f64 * 0.1,
                t_end: (k + 1) as f64 * 0.1,
                name: format!("n{k}"),
                net: std::sync::Arc::new(two_area(1.0 - 0.09 * k as f64)),
            })
            .collect();
        let sched = NetworkSchedule::new(segments).unwrap();
        let out = indices_series(&traj, &machines(), &sched, &SeriesOptions::default()).unwrap();
        for w in out.windows(2) {
            assert!(w[1].indices.si > w[0].indices.si);
        }
    }

    #[test]
    fn stride_and_jobs_do_not_change_results() {
        let traj = constant_traj(30);
        let sched = NetworkSchedule::constant("base", two_area(0.7));
        let base = indices_series(&traj, &machines(), &sched, &SeriesOptions::default()).unwrap();
        let opts = SeriesOptions {
            stride: 3,
            jobs: 4,
            ..SeriesOptions::default()
        };
        let strided = indices_series(&traj, &machines(), &sched, &opts).unwrap();
        assert_eq!(strided.len(), 10);
        for (k, a) in strided.iter().enumerate() {
            assert_eq!(a, &base[3 * k]);
        }
    }

    #[test]
    fn cc_window_longer_than_trajectory() {
        let traj = constant_traj(10);
        let sched = NetworkSchedule::constant("base", two_area(0.7));
        assert!(indices_series(&traj, &machines(), &sched, &SeriesOptions::cc(Some(20))).is_err());
        let ok = indices_series(&traj, &machines(), &sched, &SeriesOptions::cc(Some(5))).unwrap();
        assert_eq!(ok.len(), 6);
    }
}
