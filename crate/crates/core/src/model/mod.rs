//! Domain types shared by every stage, plus file ingestion and serialization.
//!
//! Generator order is fixed by the input file (CSV header or `ids` array) and is carried
//! unchanged into every matrix downstream.

mod io;
mod matrix;
mod schedule;

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use io::{
    load_indices_series, load_matrix, load_network, load_trajectory, save_indices_series,
    save_matrix, save_network, save_trajectory, write_float, MatrixFormat, TrajectoryFormat,
};
pub use matrix::{SymmetricMatrix, ASYMMETRY_TOLERANCE};
pub(crate) use schedule::MatricesJson;
pub use schedule::{load_network_schedule, save_segment_manifest, NetworkSchedule, NetworkSegment};

use crate::error::{check_dim, Error, Result};

/// Relative tolerance on sample spacing for a trajectory to count as uniformly sampled.
pub const UNIFORM_SPACING_TOLERANCE: f64 = 1e-9;

/// Per-generator constants of the classical machine model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMachineSet", into = "RawMachineSet")]
pub struct MachineSet {
    ids: Arc<[String]>,
    inertia: Vec<f64>,
    damping: Vec<f64>,
    mech_power: Vec<f64>,
    emf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMachineSet {
    ids: Vec<String>,
    inertia: Vec<f64>,
    damping: Vec<f64>,
    mech_power: Vec<f64>,
    emf: Vec<f64>,
}

impl TryFrom<RawMachineSet> for MachineSet {
    type Error = Error;

    fn try_from(r: RawMachineSet) -> Result<Self> {
        MachineSet::new(r.ids, r.inertia, r.damping, r.mech_power, r.emf)
    }
}

impl From<MachineSet> for RawMachineSet {
    fn from(m: MachineSet) -> Self {
        RawMachineSet {
            ids: m.ids.to_vec(),
            inertia: m.inertia,
            damping: m.damping,
            mech_power: m.mech_power,
            emf: m.emf,
        }
    }
}

impl MachineSet {
    pub fn new(
        ids: Vec<String>,
        inertia: Vec<f64>,
        damping: Vec<f64>,
        mech_power: Vec<f64>,
        emf: Vec<f64>,
    ) -> Result<Self> {
        let n = ids.len();
        if n < 2 {
            return Err(Error::invalid(format!(
                "a machine set needs at least 2 generators, got {n}"
            )));
        }
        check_dim("inertia", n, inertia.len())?;
        check_dim("damping", n, damping.len())?;
        check_dim("mech_power", n, mech_power.len())?;
        check_dim("emf", n, emf.len())?;
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("duplicate generator id {id:?}")));
            }
        }
        for (i, id) in ids.iter().enumerate() {
            if !(inertia[i] > 0.0 && inertia[i].is_finite()) {
                return Err(Error::invalid(format!(
                    "non-positive inertia {} for {id}",
                    inertia[i]
                )));
            }
            if !(emf[i] > 0.0 && emf[i].is_finite()) {
                return Err(Error::invalid(format!(
                    "non-positive emf {} for {id}",
                    emf[i]
                )));
            }
            if !(damping[i] >= 0.0 && damping[i].is_finite()) {
                return Err(Error::invalid(format!(
                    "negative damping {} for {id}",
                    damping[i]
                )));
            }
            if !mech_power[i].is_finite() {
                return Err(Error::invalid(format!("non-finite mech_power for {id}")));
            }
        }
        Ok(Self {
            ids: ids.into(),
            inertia,
            damping,
            mech_power,
            emf,
        })
    }

    /// Unit inertia, no damping, zero mechanical power, unit EMF.
    pub fn uniform(ids: Vec<String>) -> Result<Self> {
        let n = ids.len();
        Self::new(ids, vec![1.0; n], vec![0.0; n], vec![0.0; n], vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub(crate) fn shared_ids(&self) -> Arc<[String]> {
        Arc::clone(&self.ids)
    }

    pub fn inertia(&self) -> &[f64] {
        &self.inertia
    }

    pub fn damping(&self) -> &[f64] {
        &self.damping
    }

    pub fn mech_power(&self) -> &[f64] {
        &self.mech_power
    }

    pub fn emf(&self) -> &[f64] {
        &self.emf
    }

    /// Copy with a replaced mechanical power vector.
    pub fn with_mech_power(&self, mech_power: Vec<f64>) -> Result<Self> {
        Self::new(
            self.ids.to_vec(),
            self.inertia.clone(),
            self.damping.clone(),
            mech_power,
            self.emf.clone(),
        )
    }
}

/// Admittance seen between generator internal nodes after eliminating every other node.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedNetwork {
    g: SymmetricMatrix,
    b: SymmetricMatrix,
}

impl ReducedNetwork {
    pub fn new(g: SymmetricMatrix, b: SymmetricMatrix) -> Result<Self> {
        check_dim("conductance vs susceptance", b.dim(), g.dim())?;
        if g.packed().iter().chain(b.packed()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite admittance entry"));
        }
        Ok(Self { g, b })
    }

    /// Builds from full square matrices, symmetrizing asymmetries up to [`ASYMMETRY_TOLERANCE`].
    pub fn from_rows(g: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        let g = SymmetricMatrix::from_rows(g, ASYMMETRY_TOLERANCE, "conductance")?;
        let b = SymmetricMatrix::from_rows(b, ASYMMETRY_TOLERANCE, "susceptance")?;
        Self::new(g, b)
    }

    /// Purely reactive network.
    pub fn lossless(b: SymmetricMatrix) -> Self {
        Self {
            g: SymmetricMatrix::zeros(b.dim()),
            b,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn g(&self) -> &SymmetricMatrix {
        &self.g
    }

    pub fn b(&self) -> &SymmetricMatrix {
        &self.b
    }
}

/// Rotor state of every generator at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct RotorSnapshot {
    pub t: f64,
    /// Rotor angles, radians.
    pub delta: Vec<f64>,
    /// Speed deviation from synchronous, rad/s.
    pub speed: Option<Vec<f64>>,
    /// Per-snapshot internal EMF magnitudes overriding the machine constants.
    pub emf: Option<Vec<f64>>,
}

impl RotorSnapshot {
    pub fn new(t: f64, delta: Vec<f64>) -> Self {
        Self {
            t,
            delta,
            speed: None,
            emf: None,
        }
    }

    pub fn with_speed(mut self, speed: Vec<f64>) -> Self {
        self.speed = Some(speed);
        self
    }

    pub fn dim(&self) -> usize {
        self.delta.len()
    }
}

/// Uniformly sampled rotor-angle history for a fixed set of generators.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    ids: Arc<[String]>,
    samples: Vec<RotorSnapshot>,
    dt: f64,
}

impl Trajectory {
    /// Validates dimensions, finiteness, and strictly increasing, uniformly spaced timestamps.
    /// Errors name the offending 1-based sample (the header, if any, is not counted).
    pub fn new(ids: impl Into<Arc<[String]>>, samples: Vec<RotorSnapshot>) -> Result<Self> {
        let ids = ids.into();
        let n = ids.len();
        if n == 0 {
            return Err(Error::invalid("trajectory has no generators"));
        }
        if samples.is_empty() {
            return Err(Error::invalid("trajectory has no samples"));
        }
        for (k, s) in samples.iter().enumerate() {
            let row = k + 1;
            if s.delta.len() != n {
                return Err(Error::invalid(format!(
                    "sample {row}: {} angles for {n} generators",
                    s.delta.len()
                )));
            }
            if !s.t.is_finite() {
                return Err(Error::invalid(format!("sample {row}: non-finite time")));
            }
            if s.delta.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("sample {row}: non-finite angle")));
            }
            for (what, extra) in [("speed", &s.speed), ("emf", &s.emf)] {
                if let Some(v) = extra {
                    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::invalid(format!("sample {row}: malformed {what}")));
                    }
                }
            }
            if k > 0 && s.t <= samples[k - 1].t {
                return Err(Error::invalid(format!("non-increasing time at row {row}")));
            }
        }
        let dt = if samples.len() > 1 {
            (samples[samples.len() - 1].t - samples[0].t) / (samples.len() - 1) as f64
        } else {
            0.0
        };
        for k in 1..samples.len() {
            let step = samples[k].t - samples[k - 1].t;
            if (step - dt).abs() > UNIFORM_SPACING_TOLERANCE * dt {
                return Err(Error::invalid(format!(
                    "non-uniform sample spacing at row {}: {step} vs nominal {dt}",
                    k + 1
                )));
            }
        }
        Ok(Self { ids, samples, dt })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.ids.len()
    }

    pub fn samples(&self) -> &[RotorSnapshot] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Nominal sample spacing; 0 for a single-sample trajectory.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Index of the last sample with `t <= t_end`, with a relative slack of 1e-6 samples so
    /// that `t_end` typed as decimal text still hits the sample it names.
    pub fn index_at_or_before(&self, t_end: f64) -> Option<usize> {
        let slack = self.dt * 1e-6;
        let idx = self.samples.partition_point(|s| s.t <= t_end + slack);
        idx.checked_sub(1)
    }

    /// Angle history of generator `i` over samples `range`.
    pub fn angles(&self, i: usize, range: std::ops::Range<usize>) -> Vec<f64> {
        self.samples[range].iter().map(|s| s.delta[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("G{i}")).collect()
    }

    #[test]
    fn machine_set_validation() {
        assert!(MachineSet::uniform(ids(1)).is_err());
        let dup = vec!["G1".to_string(), "G1".to_string()];
        assert!(MachineSet::uniform(dup).is_err());
        let bad_m = MachineSet::new(
            ids(2),
            vec![1.0, 0.0],
            vec![0.0; 2],
            vec![0.0; 2],
            vec![1.0; 2],
        );
        assert!(bad_m.unwrap_err().to_string().contains("inertia"));
        let bad_e = MachineSet::new(
            ids(2),
            vec![1.0; 2],
            vec![0.0; 2],
            vec![0.0; 2],
            vec![1.0, -1.0],
        );
        assert!(bad_e.unwrap_err().to_string().contains("emf"));
        let short = MachineSet::new(
            ids(2),
            vec![1.0; 3],
            vec![0.0; 2],
            vec![0.0; 2],
            vec![1.0; 2],
        );
        assert!(matches!(short, Err(Error::Dimension { .. })));
    }

    #[test]
    fn trajectory_rejects_repeated_time() {
        let s = |t| RotorSnapshot::new(t, vec![0.0, 0.0]);
        let err = Trajectory::new(ids(2), vec![s(0.0), s(0.01), s(0.01)]).unwrap_err();
        assert_eq!(err.to_string(), "non-increasing time at row 3");
    }

    #[test]
    fn trajectory_rejects_gaps() {
        let s = |t| RotorSnapshot::new(t, vec![0.0, 0.0]);
        assert!(Trajectory::new(ids(2), vec![s(0.0), s(0.01), s(0.03)]).is_err());
    }

    #[test]
    fn index_lookup() {
        let samples = (0..5)
            .map(|k| RotorSnapshot::new(k as f64 * 0.1, vec![0.0; 2]))
            .collect();
        let tr = Trajectory::new(ids(2), samples).unwrap();
        assert_eq!(tr.index_at_or_before(0.3), Some(3));
        assert_eq!(tr.index_at_or_before(0.35), Some(3));
        assert_eq!(tr.index_at_or_before(10.0), Some(4));
        assert_eq!(tr.index_at_or_before(-1.0), None);
    }
}
