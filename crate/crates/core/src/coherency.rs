//! Pairwise coherency measures between generators.
//!
//! The synchronization coefficient `KS_ij = |E'_i| |E'_j| B_ij cos(δ_i − δ_j)` is an
//! instantaneous stiffness of the electrical coupling between two machines; the rotor-angle
//! correlation `CC_ij` is the Pearson correlation of two angle histories over a trailing window.

use crate::error::{check_dim, Error, Result};
use crate::model::{MachineSet, ReducedNetwork, RotorSnapshot, SymmetricMatrix, Trajectory};

/// Window length used when none is given.
pub const DEFAULT_CC_WINDOW: usize = 100;

/// Synchronization coefficient matrix at one instant. Diagonal is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct KsMatrix {
    pub t: f64,
    pub m: SymmetricMatrix,
}

/// Rotor-angle correlation matrix over the `window_len` samples ending at `t_end`.
/// Diagonal is exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct CcMatrix {
    pub t_end: f64,
    pub window_len: usize,
    pub m: SymmetricMatrix,
}

impl AsRef<SymmetricMatrix> for KsMatrix {
    fn as_ref(&self) -> &SymmetricMatrix {
        &self.m
    }
}

impl AsRef<SymmetricMatrix> for CcMatrix {
    fn as_ref(&self) -> &SymmetricMatrix {
        &self.m
    }
}

#[inline]
pub fn ks_pair(e_i: f64, e_j: f64, b_ij: f64, delta_i: f64, delta_j: f64) -> f64 {
    e_i * e_j * b_ij * (delta_i - delta_j).cos()
}

/// KS for every generator pair, the reference machine included. EMFs come from the snapshot
/// override when it carries one, otherwise from `machines`.
pub fn ks_matrix(
    snapshot: &RotorSnapshot,
    machines: &MachineSet,
    net: &ReducedNetwork,
) -> Result<KsMatrix> {
    let n = machines.len();
    check_dim("snapshot angles", n, snapshot.dim())?;
    check_dim("reduced network", n, net.dim())?;
    let emf = match &snapshot.emf {
        Some(e) => {
            check_dim("snapshot emf", n, e.len())?;
            e.as_slice()
        }
        None => machines.emf(),
    };
    let delta = &snapshot.delta;
    let b = net.b();
    let m = SymmetricMatrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            ks_pair(emf[i], emf[j], b.get(i, j), delta[i], delta[j])
        }
    });
    Ok(KsMatrix { t: snapshot.t, m })
}

/// Pearson correlation of two equal-length series.
///
/// Evaluated in centered form, which is algebraically the raw-moment formula but does not
/// cancel catastrophically when angles sit far from zero. When either series is constant the
/// ratio is 0/0: two constant series give 1.0, one constant series gives 0.0.
pub fn cc_pair(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim("correlation series", x.len(), y.len())?;
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "correlation needs at least 2 samples, got {n}"
        )));
    }
    let flat = |s: &[f64]| s.iter().all(|&v| v == s[0]);
    match (flat(x), flat(y)) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        // Distinct values that underflow to zero spread.
        return Ok(0.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation matrix over the last `n` samples at or before `t_end`.
pub fn cc_matrix(traj: &Trajectory, t_end: f64, n: usize) -> Result<CcMatrix> {
    let end = traj
        .index_at_or_before(t_end)
        .ok_or_else(|| Error::invalid(format!("no samples at or before t = {t_end}")))?;
    cc_matrix_at(traj, end, n)
}

/// Correlation matrix over the `n` samples ending at sample index `end` (inclusive).
pub fn cc_matrix_at(traj: &Trajectory, end: usize, n: usize) -> Result<CcMatrix> {
    if n < 2 {
        return Err(Error::invalid(
            "correlation window must be at least 2 samples",
        ));
    }
    if end >= traj.len() || end + 1 < n {
        return Err(Error::invalid(format!(
            "insufficient samples: window of {n} needs {n} samples ending at index {end}"
        )));
    }
    let range = end + 1 - n..end + 1;
    let series: Vec<Vec<f64>> = (0..traj.dim())
        .map(|i| traj.angles(i, range.clone()))
        .collect();
    let mut m = SymmetricMatrix::zeros(traj.dim());
    for i in 0..traj.dim() {
        m.set(i, i, 1.0);
        for j in 0..i {
            m.set(i, j, cc_pair(&series[i], &series[j])?);
        }
    }
    Ok(CcMatrix {
        t_end: traj.samples()[end].t,
        window_len: n,
        m,
    })
}
