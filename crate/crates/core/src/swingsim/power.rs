use nalgebra::{DMatrix, DVector};

use crate::coherency::ks_pair;
use crate::error::{check_dim, Error, Result};
use crate::model::{MachineSet, ReducedNetwork, RotorSnapshot};

/// Residual below which an equilibrium is accepted, per unit.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;

/// Classical-model electrical power out of each internal node:
/// `P_i = Σ_j E_i E_j (G_ij cos δ_ij + B_ij sin δ_ij)`.
pub fn electrical_power(delta: &[f64], emf: &[f64], net: &ReducedNetwork) -> Vec<f64> {
    let mut p = vec![0.0; delta.len()];
    electrical_power_into(delta, emf, net, &mut p);
    p
}

pub(crate) fn electrical_power_into(
    delta: &[f64],
    emf: &[f64],
    net: &ReducedNetwork,
    out: &mut [f64],
) {
    let n = delta.len();
    let (g, b) = (net.g(), net.b());
    for (i, o) in out.iter_mut().enumerate() {
        *o = emf[i] * emf[i] * g.get(i, i);
    }
    for i in 0..n {
        for j in 0..i {
            let d = delta[i] - delta[j];
            let (s, c) = d.sin_cos();
            let ee = emf[i] * emf[j];
            let (gij, bij) = (g.get(i, j), b.get(i, j));
            out[i] += ee * (gij * c + bij * s);
            out[j] += ee * (gij * c - bij * s);
        }
    }
}

/// `∂P_i/∂δ_k`. Off-diagonal entries are `E_i E_k (G_ik sin δ_ik − B_ik cos δ_ik)`, i.e.
/// `−KS_ik + E_i E_k G_ik sin δ_ik`; each row sums to zero.
pub fn power_jacobian(delta: &[f64], emf: &[f64], net: &ReducedNetwork) -> Vec<Vec<f64>> {
    let n = delta.len();
    let (g, b) = (net.g(), net.b());
    let mut jac = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let ks = ks_pair(emf[i], emf[k], b.get(i, k), delta[i], delta[k]);
            let v = -ks + emf[i] * emf[k] * g.get(i, k) * (delta[i] - delta[k]).sin();
            jac[i][k] = v;
            jac[i][i] -= v;
        }
    }
    jac
}

/// Mechanical power that holds `delta` in equilibrium, `P_m = P_e(δ)`.
pub fn balanced_mech_power(
    machines: &MachineSet,
    net: &ReducedNetwork,
    delta: &[f64],
) -> Result<Vec<f64>> {
    check_dim("angles", machines.len(), delta.len())?;
    check_dim("network", machines.len(), net.dim())?;
    Ok(electrical_power(delta, machines.emf(), net))
}

/// Newton iteration on `P_m − P_e(δ) = 0` with the reference angle held at its guess.
///
/// The reference machine's own balance equation is dropped from the iteration and checked
/// afterwards, so an unbalanced power schedule is reported rather than absorbed.
pub fn find_equilibrium(
    machines: &MachineSet,
    net: &ReducedNetwork,
    guess: &[f64],
    reference: usize,
) -> Result<RotorSnapshot> {
    let n = machines.len();
    check_dim("equilibrium guess", n, guess.len())?;
    check_dim("network", n, net.dim())?;
    if reference >= n {
        return Err(Error::invalid(format!(
            "reference machine {reference} out of range for {n} machines"
        )));
    }
    let free: Vec<usize> = (0..n).filter(|&i| i != reference).collect();
    let emf = machines.emf();
    let pm = machines.mech_power();
    let mut delta = guess.to_vec();
    let mismatch = |delta: &[f64]| -> Vec<f64> {
        let pe = electrical_power(delta, emf, net);
        pm.iter().zip(pe).map(|(m, e)| m - e).collect()
    };
    for _ in 0..=NEWTON_MAX_ITER {
        let r = mismatch(&delta);
        let worst_free = free.iter().map(|&i| r[i].abs()).fold(0.0, f64::max);
        if !worst_free.is_finite() {
            return Err(Error::Numeric("equilibrium iteration diverged".into()));
        }
        if worst_free < EQUILIBRIUM_TOLERANCE {
            if r[reference].abs() >= EQUILIBRIUM_TOLERANCE {
                return Err(Error::Numeric(format!(
                    "mechanical power is unbalanced: reference machine {} is left with a \
                     mismatch of {:e} pu",
                    machines.ids()[reference],
                    r[reference]
                )));
            }
            return Ok(RotorSnapshot::new(0.0, delta).with_speed(vec![0.0; n]));
        }
        let jac = power_jacobian(&delta, emf, net);
        let m = free.len();
        let a = DMatrix::from_fn(m, m, |x, y| jac[free[x]][free[y]]);
        let rhs = DVector::from_fn(m, |x, _| r[free[x]]);
        // P_m − P_e(δ + Δ) ≈ r − J Δ = 0
        let step = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numeric("singular power-flow Jacobian".into()))?;
        for (x, &i) in free.iter().enumerate() {
            delta[i] += step[x];
        }
    }
    Err(Error::Numeric(format!(
        "equilibrium not found within {NEWTON_MAX_ITER} Newton iterations"
    )))
}

/// Transient energy of a lossless network:
/// `Σ M_i ω_i²/2 − Σ P_mi δ_i − Σ_{i<j} E_i E_j B_ij cos δ_ij`.
/// Conserved along trajectories when there is no damping and `G = 0`.
pub fn transient_energy(
    machines: &MachineSet,
    net: &ReducedNetwork,
    delta: &[f64],
    speed: &[f64],
) -> f64 {
    let (m, pm, e) = (machines.inertia(), machines.mech_power(), machines.emf());
    let b = net.b();
    let mut energy = 0.0;
    for i in 0..delta.len() {
        energy += 0.5 * m[i] * speed[i] * speed[i] - pm[i] * delta[i];
        for j in 0..i {
            energy -= e[i] * e[j] * b.get(i, j) * (delta[i] - delta[j]).cos();
        }
    }
    energy
}
