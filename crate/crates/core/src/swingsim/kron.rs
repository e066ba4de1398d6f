use nalgebra::{Complex, DMatrix};

use crate::error::{check_dim, Error, Result};
use crate::model::{ReducedNetwork, SymmetricMatrix};

type C64 = Complex<f64>;

const SYMMETRY_TOLERANCE: f64 = 1e-9;
/// Condition numbers above this are treated as singular.
const MAX_CONDITION: f64 = 1e14;

/// Bus admittance matrix with the buses that host generators.
#[derive(Debug, Clone, PartialEq)]
pub struct FullNetwork {
    y_bus: DMatrix<C64>,
    gen_buses: Vec<usize>,
}

impl FullNetwork {
    pub fn new(y_bus: DMatrix<C64>, gen_buses: Vec<usize>) -> Result<Self> {
        if !y_bus.is_square() {
            return Err(Error::invalid("bus admittance matrix is not square"));
        }
        let n = y_bus.nrows();
        if y_bus.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid(
                "bus admittance matrix has non-finite entries",
            ));
        }
        let scale = y_bus.iter().map(|v| v.norm()).fold(1.0, f64::max);
        for i in 0..n {
            for j in 0..i {
                if (y_bus[(i, j)] - y_bus[(j, i)]).norm() > SYMMETRY_TOLERANCE * scale {
                    return Err(Error::invalid(format!(
                        "asymmetric bus admittance at ({i}, {j})"
                    )));
                }
            }
        }
        let mut seen = vec![false; n];
        for &k in &gen_buses {
            if k >= n || std::mem::replace(&mut seen[k], true) {
                return Err(Error::invalid(format!(
                    "generator bus {k} is out of range or repeated"
                )));
            }
        }
        if gen_buses.is_empty() {
            return Err(Error::invalid("no generator buses"));
        }
        Ok(Self { y_bus, gen_buses })
    }

    /// From conductance and susceptance rows.
    pub fn from_parts(g: &[Vec<f64>], b: &[Vec<f64>], gen_buses: Vec<usize>) -> Result<Self> {
        let n = g.len();
        check_dim("bus susceptance rows", n, b.len())?;
        for (rg, rb) in g.iter().zip(b) {
            check_dim("bus conductance row", n, rg.len())?;
            check_dim("bus susceptance row", n, rb.len())?;
        }
        Self::new(
            DMatrix::from_fn(n, n, |i, j| C64::new(g[i][j], b[i][j])),
            gen_buses,
        )
    }

    pub fn n_buses(&self) -> usize {
        self.y_bus.nrows()
    }

    pub fn gen_buses(&self) -> &[usize] {
        &self.gen_buses
    }

    pub fn y_bus(&self) -> &DMatrix<C64> {
        &self.y_bus
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KronReduction {
    pub network: ReducedNetwork,
    /// 1-norm condition number of the eliminated block; 1 when nothing was eliminated.
    pub condition: f64,
}

/// Eliminates every node except the retained ones.
///
/// With `x_d_prime`, an internal EMF node is attached to each generator bus through `j x'_d`
/// and all physical buses are eliminated, leaving the admittance between internal nodes.
/// Without it, non-generator buses are eliminated and generator buses are retained.
pub fn kron_reduce(full: &FullNetwork, x_d_prime: Option<&[f64]>) -> Result<KronReduction> {
    let (y, keep): (DMatrix<C64>, Vec<usize>) = match x_d_prime {
        None => (full.y_bus.clone(), full.gen_buses.clone()),
        Some(xd) => {
            check_dim("transient reactances", full.gen_buses.len(), xd.len())?;
            let n_gen = full.gen_buses.len();
            let n_bus = full.n_buses();
            let size = n_gen + n_bus;
            let mut y = DMatrix::from_element(size, size, C64::new(0.0, 0.0));
            y.view_mut((n_gen, n_gen), (n_bus, n_bus))
                .copy_from(&full.y_bus);
            for (i, (&bus, &x)) in full.gen_buses.iter().zip(xd).enumerate() {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(Error::invalid(format!(
                        "transient reactance {x} must be positive"
                    )));
                }
                let yi = C64::new(0.0, -1.0 / x);
                let k = n_gen + bus;
                y[(i, i)] += yi;
                y[(k, k)] += yi;
                y[(i, k)] -= yi;
                y[(k, i)] -= yi;
            }
            (y, (0..n_gen).collect())
        }
    };
    let size = y.nrows();
    let mut is_kept = vec![false; size];
    for &k in &keep {
        is_kept[k] = true;
    }
    let drop: Vec<usize> = (0..size).filter(|&k| !is_kept[k]).collect();
    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| y[(rows[i], cols[j])])
    };
    let y_kk = pick(&keep, &keep);
    let (reduced, condition) = if drop.is_empty() {
        (y_kk, 1.0)
    } else {
        let y_dd = pick(&drop, &drop);
        let inv = y_dd
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("eliminated admittance block is singular".into()))?;
        let condition = norm1(&y_dd) * norm1(&inv);
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::Numeric(format!(
                "eliminated admittance block is singular (condition {condition:e})"
            )));
        }
        let y_kd = pick(&keep, &drop);
        let y_dk = pick(&drop, &keep);
        (y_kk - y_kd * inv * y_dk, condition)
    };
    let n = keep.len();
    let re: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| reduced[(i, j)].re).collect())
        .collect();
    let im: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| reduced[(i, j)].im).collect())
        .collect();
    let scale = reduced.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let tol = SYMMETRY_TOLERANCE * scale;
    let network = ReducedNetwork::new(
        SymmetricMatrix::from_rows(&re, tol, "reduced conductance")?,
        SymmetricMatrix::from_rows(&im, tol, "reduced susceptance")?,
    )?;
    Ok(KronReduction { network, condition })
}

fn norm1(m: &DMatrix<C64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
