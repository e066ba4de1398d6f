//! Classical multi-machine swing-equation simulator.
//!
//! Each machine obeys `M_i δ̈_i = P_mi − P_ei(δ) − D_i δ̇_i` behind a constant EMF, integrated
//! with fixed-step RK4. Disturbances are scripted as events: network swaps (fault on, fault
//! cleared) and changes to the mechanical power schedule.

mod kron;
mod power;
mod scenario;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use kron::{kron_reduce, FullNetwork, KronReduction};
pub use power::{
    balanced_mech_power, electrical_power, find_equilibrium, power_jacobian, transient_energy,
    EQUILIBRIUM_TOLERANCE,
};
pub use scenario::{InitSpec, Scenario};

use crate::error::{check_dim, Error, Result};
use crate::model::{
    MachineSet, NetworkSchedule, NetworkSegment, ReducedNetwork, RotorSnapshot, Trajectory,
};

/// Speed deviation beyond which the integration is declared unstable, rad/s.
pub const BLOW_UP_SPEED: f64 = 1e4;
pub const MAX_STEP: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedNetwork {
    pub name: String,
    pub net: Arc<ReducedNetwork>,
}

impl NamedNetwork {
    pub fn new(name: impl Into<String>, net: ReducedNetwork) -> Self {
        Self {
            name: name.into(),
            net: Arc::new(net),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventAction {
    SetNetwork(NamedNetwork),
    /// Multiplies every machine's mechanical power.
    ScaleMechPower(f64),
    SetMechPower(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub action: EventAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub t_end: f64,
    /// Integration step, seconds.
    pub h: f64,
    /// Record every `sample_every`-th step.
    pub sample_every: usize,
    /// Synchronous speed, rad/s. Only used to express speeds in per unit for diagnostics;
    /// inertia is given directly in swing-equation units.
    pub omega_s: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_end: 30.0,
            h: 0.005,
            sample_every: 2,
            omega_s: 2.0 * PI * 60.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h <= MAX_STEP) {
            return Err(Error::invalid(format!(
                "integration step {} must lie in (0, {MAX_STEP}]",
                self.h
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end must be positive"));
        }
        if self.sample_every == 0 {
            return Err(Error::invalid("sample_every must be at least 1"));
        }
        if self.omega_s.is_nan() || self.omega_s <= 0.0 {
            return Err(Error::invalid("omega_s must be positive"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.h).round() as usize
    }

    /// Step index at which an event scheduled for `t` takes effect: the first step boundary
    /// at or after `t`.
    pub fn event_step(&self, t: f64) -> usize {
        ((t / self.h) - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub trajectory: Trajectory,
    /// Which network was active over which time range.
    pub schedule: NetworkSchedule,
    /// Non-fatal notices, e.g. events past the horizon.
    pub warnings: Vec<String>,
}

/// Time of step `k`, snapped to whole nanoseconds so that recorded times print cleanly
/// (`29.99` rather than `29.990000000000002`).
fn grid_time(k: usize, h: f64) -> f64 {
    (k as f64 * h * 1e9).round() / 1e9
}

struct Dynamics<'a> {
    machines: &'a MachineSet,
    pm: Vec<f64>,
    net: Arc<ReducedNetwork>,
    pe: Vec<f64>,
}

impl Dynamics<'_> {
    /// State layout: angles then speed deviations.
    fn rhs(&mut self, state: &[f64], out: &mut [f64]) {
        let n = self.machines.len();
        let (delta, omega) = state.split_at(n);
        power::electrical_power_into(delta, self.machines.emf(), &self.net, &mut self.pe);
        let (m, d) = (self.machines.inertia(), self.machines.damping());
        for i in 0..n {
            out[i] = omega[i];
            out[n + i] = (self.pm[i] - self.pe[i] - d[i] * omega[i]) / m[i];
        }
    }
}

struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(len: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; len]),
            tmp: vec![0.0; len],
        }
    }

    fn step(&mut self, dynamics: &mut Dynamics<'_>, state: &mut [f64], h: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        dynamics.rhs(state, k1);
        for (t, (s, k)) in tmp.iter_mut().zip(state.iter().zip(k1.iter())) {
            *t = s + 0.5 * h * k;
        }
        dynamics.rhs(tmp, k2);
        for (t, (s, k)) in tmp.iter_mut().zip(state.iter().zip(k2.iter())) {
            *t = s + 0.5 * h * k;
        }
        dynamics.rhs(tmp, k3);
        for (t, (s, k)) in tmp.iter_mut().zip(state.iter().zip(k3.iter())) {
            *t = s + h * k;
        }
        dynamics.rhs(tmp, k4);
        for (i, s) in state.iter_mut().enumerate() {
            *s += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

fn validate_events(machines: &MachineSet, events: &[Event]) -> Result<()> {
    let n = machines.len();
    for (k, e) in events.iter().enumerate() {
        if !e.t.is_finite() || e.t < 0.0 {
            return Err(Error::invalid(format!(
                "event {k} has invalid time {}",
                e.t
            )));
        }
        if k > 0 && e.t < events[k - 1].t {
            return Err(Error::invalid(format!("event {k} is out of time order")));
        }
        match &e.action {
            EventAction::SetNetwork(nn) => check_dim("event network", n, nn.net.dim())?,
            EventAction::ScaleMechPower(f) => {
                if !(*f > 0.0 && f.is_finite()) {
                    return Err(Error::invalid(format!(
                        "event {k}: mechanical power factor {f} must be positive"
                    )));
                }
            }
            EventAction::SetMechPower(p) => {
                check_dim("event mechanical power", n, p.len())?;
                if p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid(format!("event {k}: non-finite power")));
                }
            }
        }
    }
    Ok(())
}

/// Integrates the swing equations from `init`.
///
/// Events take effect at the first step boundary at or after their time (at most one step
/// late) and events past `t_end` are dropped with a warning. A sample is recorded every
/// `cfg.sample_every` steps, including `t = 0`, after that step's events are applied.
pub fn simulate(
    machines: &MachineSet,
    net0: &NamedNetwork,
    events: &[Event],
    cfg: &SimConfig,
    init: &RotorSnapshot,
) -> Result<SimOutput> {
    cfg.validate()?;
    let n = machines.len();
    check_dim("initial network", n, net0.net.dim())?;
    check_dim("initial angles", n, init.dim())?;
    if let Some(w) = &init.speed {
        check_dim("initial speeds", n, w.len())?;
    }
    validate_events(machines, events)?;

    let n_steps = cfg.n_steps();
    let t_end = grid_time(n_steps, cfg.h);
    let mut warnings = Vec::new();
    let mut pending: Vec<(usize, &Event)> = Vec::with_capacity(events.len());
    for e in events {
        if e.t > t_end + 1e-9 * cfg.h {
            warnings.push(format!(
                "event at t = {} lies beyond t_end = {t_end} and is ignored",
                e.t
            ));
        } else {
            pending.push((cfg.event_step(e.t).min(n_steps), e));
        }
    }

    let mut dynamics = Dynamics {
        machines,
        pm: machines.mech_power().to_vec(),
        net: Arc::clone(&net0.net),
        pe: vec![0.0; n],
    };
    let mut segments = vec![NetworkSegment {
        t_start: 0.0,
        t_end,
        name: net0.name.clone(),
        net: Arc::clone(&net0.net),
    }];
    let mut state: Vec<f64> = init
        .delta
        .iter()
        .copied()
        .chain(init.speed.clone().unwrap_or_else(|| vec![0.0; n]))
        .collect();
    let mut rk4 = Rk4::new(2 * n);
    let mut samples = Vec::with_capacity(n_steps / cfg.sample_every + 1);
    let mut next_event = 0;

    for k in 0..=n_steps {
        let t = grid_time(k, cfg.h);
        while next_event < pending.len() && pending[next_event].0 == k {
            match &pending[next_event].1.action {
                EventAction::SetNetwork(nn) => {
                    let last = segments.last_mut().expect("at least one segment");
                    if last.t_start == t {
                        last.name = nn.name.clone();
                        last.net = Arc::clone(&nn.net);
                    } else {
                        last.t_end = t;
                        segments.push(NetworkSegment {
                            t_start: t,
                            t_end,
                            name: nn.name.clone(),
                            net: Arc::clone(&nn.net),
                        });
                    }
                    dynamics.net = Arc::clone(&nn.net);
                }
                EventAction::ScaleMechPower(f) => {
                    dynamics.pm.iter_mut().for_each(|p| *p *= f);
                }
                EventAction::SetMechPower(p) => dynamics.pm.clone_from(p),
            }
            next_event += 1;
        }
        if k % cfg.sample_every == 0 {
            let (delta, omega) = state.split_at(n);
            samples.push(RotorSnapshot::new(t, delta.to_vec()).with_speed(omega.to_vec()));
        }
        if k == n_steps {
            break;
        }
        rk4.step(&mut dynamics, &mut state, cfg.h);
        if let Some(i) = (0..n).find(|&i| {
            !state[n + i].is_finite() || state[n + i].abs() > BLOW_UP_SPEED || !state[i].is_finite()
        }) {
            return Err(Error::Numeric(format!(
                "integration blew up at t = {:.4} s: machine {} speed deviation {:e} rad/s \
                 ({:.3e} pu)",
                (k + 1) as f64 * cfg.h,
                machines.ids()[i],
                state[n + i],
                state[n + i] / cfg.omega_s
            )));
        }
    }

    let trajectory = Trajectory::new(machines.shared_ids(), samples)?;
    Ok(SimOutput {
        trajectory,
        schedule: NetworkSchedule::new(segments)?,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SymmetricMatrix;

    fn ids(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("G{i}")).collect()
    }

    fn pair(b12: f64) -> NamedNetwork {
        let mut b = SymmetricMatrix::zeros(2);
        b.set(0, 1, b12);
        NamedNetwork::new("pair", ReducedNetwork::lossless(b))
    }

    fn two_machines(pm: [f64; 2], d: f64) -> MachineSet {
        MachineSet::new(
            ids(2),
            vec![0.1, 0.2],
            vec![d, d],
            pm.to_vec(),
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn defaults_give_3001_samples() {
        let m = two_machines([0.0, 0.0], 0.0);
        let out = simulate(
            &m,
            &pair(5.0),
            &[],
            &SimConfig::default(),
            &RotorSnapshot::new(0.0, vec![0.0; 2]),
        )
        .unwrap();
        assert_eq!(out.trajectory.len(), 3001);
        assert!((out.trajectory.dt() - 0.01).abs() < 1e-12);
        assert_eq!(out.trajectory.samples().last().unwrap().t, 30.0);
    }

    #[test]
    fn config_validation() {
        let bad = [
            SimConfig {
                h: 0.0,
                ..SimConfig::default()
            },
            SimConfig {
                h: 0.03,
                ..SimConfig::default()
            },
            SimConfig {
                t_end: -1.0,
                ..SimConfig::default()
            },
            SimConfig {
                sample_every: 0,
                ..SimConfig::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn events_snap_to_step_boundaries() {
        let cfg = SimConfig {
            t_end: 1.0,
            h: 0.01,
            sample_every: 1,
            ..SimConfig::default()
        };
        assert_eq!(cfg.event_step(0.0), 0);
        assert_eq!(cfg.event_step(0.3), 30);
        assert_eq!(cfg.event_step(0.301), 31);
        assert_eq!(cfg.event_step(0.3049), 31);
    }

    #[test]
    fn segments_follow_network_events() {
        let m = two_machines([0.0, 0.0], 0.1);
        let cfg = SimConfig {
            t_end: 1.0,
            h: 0.01,
            sample_every: 1,
            ..SimConfig::default()
        };
        let events = vec![
            Event {
                t: 0.3,
                action: EventAction::SetNetwork(NamedNetwork {
                    name: "fault".into(),
                    ..pair(1.0)
                }),
            },
            Event {
                t: 0.5,
                action: EventAction::SetNetwork(NamedNetwork {
                    name: "post".into(),
                    ..pair(4.0)
                }),
            },
            Event {
                t: 2.0,
                action: EventAction::ScaleMechPower(1.5),
            },
        ];
        let out = simulate(
            &m,
            &pair(5.0),
            &events,
            &cfg,
            &RotorSnapshot::new(0.0, vec![0.0; 2]),
        )
        .unwrap();
        let names: Vec<&str> = out
            .schedule
            .segments()
            .iter()
            .map(|s| s.name.as_str())
            .collect();
        assert_eq!(names, ["pair", "fault", "post"]);
        assert_eq!(out.schedule.segments()[1].t_start, 0.3);
        assert_eq!(out.schedule.segments()[1].t_end, 0.5);
        assert_eq!(out.schedule.segments()[2].t_end, 1.0);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("ignored"));
    }

    #[test]
    fn invalid_events_rejected() {
        let m = two_machines([0.0, 0.0], 0.0);
        let init = RotorSnapshot::new(0.0, vec![0.0; 2]);
        let unsorted = vec![
            Event {
                t: 0.5,
                action: EventAction::ScaleMechPower(1.1),
            },
            Event {
                t: 0.2,
                action: EventAction::ScaleMechPower(1.1),
            },
        ];
        assert!(simulate(&m, &pair(5.0), &unsorted, &SimConfig::default(), &init).is_err());
        let zero = vec![Event {
            t: 0.5,
            action: EventAction::ScaleMechPower(0.0),
        }];
        assert!(simulate(&m, &pair(5.0), &zero, &SimConfig::default(), &init).is_err());
        let dims = vec![Event {
            t: 0.5,
            action: EventAction::SetMechPower(vec![1.0]),
        }];
        assert!(simulate(&m, &pair(5.0), &dims, &SimConfig::default(), &init).is_err());
    }

    #[test]
    fn unstable_transfer_blows_up() {
        // Mechanical power far above what the tie can carry: the angle runs away.
        let m = two_machines([50.0, -50.0], 0.0);
        let cfg = SimConfig {
            t_end: 30.0,
            h: 0.02,
            ..SimConfig::default()
        };
        let err = simulate(
            &m,
            &pair(1.0),
            &[],
            &cfg,
            &RotorSnapshot::new(0.0, vec![0.0; 2]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn common_shift_shifts_trajectory() {
        let m = two_machines([0.4, -0.4], 0.05);
        let cfg = SimConfig {
            t_end: 2.0,
            ..SimConfig::default()
        };
        let a = simulate(
            &m,
            &pair(5.0),
            &[],
            &cfg,
            &RotorSnapshot::new(0.0, vec![0.3, -0.1]),
        )
        .unwrap();
        let b = simulate(
            &m,
            &pair(5.0),
            &[],
            &cfg,
            &RotorSnapshot::new(0.0, vec![1.3, 0.9]),
        )
        .unwrap();
        for (sa, sb) in a.trajectory.samples().iter().zip(b.trajectory.samples()) {
            for i in 0..2 {
                assert!((sb.delta[i] - sa.delta[i] - 1.0).abs() < 1e-9);
            }
        }
    }
}
