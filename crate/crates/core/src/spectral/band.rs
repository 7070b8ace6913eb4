//! Banded Cholesky factorization for shift-and-invert solves.

use crate::error::{Error, Result};
use crate::operator::DiscreteHamiltonian;

/// `L Lᵀ = H − σ I` with `L` lower triangular of bandwidth `p`.
///
/// Row `i` of `L` is stored densely over columns `i − p ..= i`.
pub(crate) struct BandCholesky {
    n: usize,
    p: usize,
    rows: Vec<f64>,
}

impl BandCholesky {
    pub(crate) fn factor(op: &DiscreteHamiltonian, sigma: f64) -> Result<Self> {
        let n = op.dim();
        let p = op.bandwidth();
        let w = p + 1;
        let mut rows = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in op.row(i) {
                if j <= i {
                    rows[i * w + (j + p - i)] = if i == j { v - sigma } else { v };
                }
            }
        }
        for i in 0..n {
            let first = i.saturating_sub(p);
            for j in first..=i {
                // L[i][k] for k in max(first, j−p)..j dotted with L[j][k]
                let k0 = first.max(j.saturating_sub(p));
                let mut acc = 0.0;
                let ri = i * w + p - i;
                let rj = j * w + p - j;
                for k in k0..j {
                    acc += rows[ri + k] * rows[rj + k];
                }
                let a = rows[ri + j] - acc;
                if i == j {
                    if !(a > 0.0) {
                        return Err(Error::SolverFailure(format!(
                            "shifted operator is not positive definite (pivot {a} at row {i})"
                        )));
                    }
                    rows[ri + i] = a.sqrt();
                } else {
                    rows[ri + j] = a / rows[rj + j];
                }
            }
        }
        Ok(BandCholesky { n, p, rows })
    }

    /// Overwrite `x` with `(H − σ)⁻¹ x`.
    pub(crate) fn solve_in_place(&self, x: &mut [f64]) {
        let (n, p, w) = (self.n, self.p, self.p + 1);
        for i in 0..n {
            let first = i.saturating_sub(p);
            let row = &self.rows[i * w + p - i + first..i * w + p + 1];
            let (off, diag) = row.split_at(i - first);
            let acc: f64 = off.iter().zip(&x[first..i]).map(|(l, v)| l * v).sum();
            x[i] = (x[i] - acc) / diag[0];
        }
        for i in (0..n).rev() {
            let first = i.saturating_sub(p);
            let row = &self.rows[i * w + p - i + first..i * w + p + 1];
            let (off, diag) = row.split_at(i - first);
            let xi = x[i] / diag[0];
            x[i] = xi;
            for (v, l) in x[first..i].iter_mut().zip(off) {
                *v -= l * xi;
            }
        }
    }
}
