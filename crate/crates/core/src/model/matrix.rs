use crate::error::{Error, Result};

/// Largest absolute asymmetry `|a_ij - a_ji|` that is silently averaged away on ingestion.
pub const ASYMMETRY_TOLERANCE: f64 = 1e-6;

/// Dense symmetric matrix stored as its lower triangle (diagonal included), row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

#[inline]
fn tri_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    /// Builds the matrix from `f(i, j)` evaluated for `j <= i` only.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Accepts a full square matrix. Mirror pairs that differ by at most `tol` are replaced by
    /// their mean; anything larger is rejected and `what` names the offending quantity.
    pub fn from_rows(rows: &[Vec<f64>], tol: f64, what: &str) -> Result<Self> {
        let dim = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "{what}: row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{what}: non-finite entry at ({i}, {j})"
                )));
            }
        }
        let mut worst = (0.0_f64, 0, 0);
        let m = Self::from_fn(dim, |i, j| {
            let (a, b) = (rows[i][j], rows[j][i]);
            let gap = (a - b).abs();
            if gap > worst.0 {
                worst = (gap, i, j);
            }
            if a == b {
                a
            } else {
                0.5 * (a + b)
            }
        });
        if worst.0 > tol {
            return Err(Error::invalid(format!(
                "asymmetric {what}: entries ({}, {}) differ by {:e}",
                worst.1, worst.2, worst.0
            )));
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[tri_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.data[tri_index(i, j)] = v;
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim).map(move |j| self.get(i, j))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).collect()).collect()
    }

    /// Lower-triangle entries, diagonal included.
    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Reorders rows and columns so that new index `k` holds old index `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.dim);
        Self::from_fn(self.dim, |i, j| self.get(perm[i], perm[j]))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl AsRef<SymmetricMatrix> for SymmetricMatrix {
    fn as_ref(&self) -> &SymmetricMatrix {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_by_construction() {
        let mut m = SymmetricMatrix::zeros(3);
        m.set(0, 2, 4.5);
        assert_eq!(m.get(2, 0), 4.5);
        assert_eq!(m.to_rows()[0], vec![0.0, 0.0, 4.5]);
    }

    #[test]
    fn small_asymmetry_is_averaged() {
        let rows = vec![vec![0.0, 5.000_000_4], vec![5.0, 0.0]];
        let m = SymmetricMatrix::from_rows(&rows, ASYMMETRY_TOLERANCE, "susceptance").unwrap();
        assert!((m.get(0, 1) - 5.000_000_2).abs() < 1e-15);
    }

    #[test]
    fn large_asymmetry_is_rejected() {
        let rows = vec![vec![0.0, 5.0], vec![4.0, 0.0]];
        let err = SymmetricMatrix::from_rows(&rows, ASYMMETRY_TOLERANCE, "susceptance")
            .unwrap_err()
            .to_string();
        assert!(err.contains("asymmetric susceptance"), "{err}");
    }

    #[test]
    fn ragged_and_nan_rejected() {
        assert!(SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0]], 1e-6, "m").is_err());
        assert!(
            SymmetricMatrix::from_rows(&[vec![0.0, f64::NAN], vec![f64::NAN, 0.0]], 1e-6, "m")
                .is_err()
        );
    }

    #[test]
    fn permutation_moves_entries() {
        let m = SymmetricMatrix::from_fn(3, |i, j| (10 * i + j) as f64);
        let p = m.permuted(&[2, 0, 1]);
        assert_eq!(p.get(0, 1), m.get(2, 0));
        assert_eq!(p.get(1, 2), m.get(0, 1));
        assert_eq!(p.get(0, 0), m.get(2, 2));
    }
}
