//! Block Lanczos with full reorthogonalization for the largest eigenvalues
//! of a symmetric operator `B`.
//!
//! Callers map the wanted end of the Hamiltonian's spectrum to the top of
//! `B`'s spectrum (`B = −H` or `B = (H − σ)⁻¹`). Convergence is confirmed
//! on `H` itself through explicit residuals of Rayleigh quotients.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::seeding::{trial_rng, Stream};

/// Columns whose norm drops below this fraction after orthogonalization are
/// treated as linearly dependent.
const DEFLATION: f64 = 1e-10;

/// Norm retention below which Gram–Schmidt is repeated.
const REORTH: f64 = 0.7;

pub(crate) enum Target {
    /// The `k` largest eigenvalues of `B`.
    Count(usize),
    /// All eigenvalues of `B` at or above the cutoff.
    AtLeast(f64),
}

pub(crate) struct Pair {
    pub theta: f64,
    pub vector: Vec<f64>,
}

pub(crate) struct Outcome {
    pub pairs: Vec<Pair>,
    /// True when the checks for the wanted set all succeeded.
    pub converged: bool,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

struct Basis {
    n: usize,
    cols: Vec<f64>,
}

impl Basis {
    fn len(&self) -> usize {
        self.cols.len() / self.n
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }

    /// Classical Gram–Schmidt with a second pass whenever the first one
    /// cancels more than `REORTH` of the norm; returns the accumulated
    /// coefficients against every basis column.
    fn orthogonalize(&self, w: &mut [f64]) -> Vec<f64> {
        let m = self.len();
        let mut total = vec![0.0; m];
        let mut norm = dot(w, w).sqrt();
        for _ in 0..3 {
            let h: Vec<f64> = (0..m).map(|j| dot(self.col(j), w)).collect();
            for (j, hj) in h.iter().enumerate() {
                axpy(-hj, self.col(j), w);
                total[j] += hj;
            }
            let after = dot(w, w).sqrt();
            if after > REORTH * norm {
                break;
            }
            norm = after;
        }
        total
    }

    fn push(&mut self, v: &[f64]) {
        self.cols.extend_from_slice(v);
    }
}

pub(crate) struct Config {
    pub block: usize,
    pub max_basis: usize,
    pub seed: u64,
}

/// Run block Lanczos on `apply_b` until `accept` confirms the wanted Ritz
/// pairs or the basis budget is exhausted.
///
/// `gate(theta, estimate)` is a cheap screen on the Lanczos residual
/// estimate; `accept(theta, vector)` performs the explicit check.
pub(crate) fn largest<A, G, C>(
    n: usize,
    mut apply_b: A,
    target: Target,
    cfg: &Config,
    gate: G,
    mut accept: C,
) -> Outcome
where
    A: FnMut(&[f64], &mut [f64]),
    G: Fn(f64, f64) -> bool,
    C: FnMut(f64, &[f64]) -> bool,
{
    let cap = cfg.max_basis.min(n).max(1);
    let mut rng = trial_rng(cfg.seed, Stream::Solver, 0);
    let mut basis = Basis { n, cols: Vec::with_capacity(n * cap) };
    let mut t = vec![0.0; cap * cap];

    // start block
    let b0 = cfg.block.max(1).min(cap);
    add_block(&mut basis, Vec::new(), b0, &mut rng);
    let mut block_start = 0;

    let want_hint = match target {
        Target::Count(k) => k,
        Target::AtLeast(_) => cfg.block,
    };
    let mut next_check = (want_hint + cfg.block).max(4 * cfg.block).min(cap);
    let mut y = vec![0.0; n];

    loop {
        let m = basis.len();
        // apply B to the newest block and orthogonalize against everything
        let mut residuals = Vec::with_capacity(m - block_start);
        for c in block_start..m {
            apply_b(basis.col(c), &mut y);
            let mut w = y.clone();
            let h = basis.orthogonalize(&mut w);
            for (i, hi) in h.iter().enumerate() {
                t[i * cap + c] = *hi;
                t[c * cap + i] = *hi;
            }
            residuals.push(w);
        }
        let bb = m - block_start;
        // QR of the residual block; `coupling[j][i]` is the coefficient of
        // new column j in residual i
        let (fresh, coupling) = qr_block(&basis, residuals);

        let exhausted = m == n;
        if exhausted || m >= next_check || m + fresh.len().max(1) > cap {
            let tm = DMatrix::from_fn(m, m, |i, j| 0.5 * (t[i * cap + j] + t[j * cap + i]));
            let eig = SymmetricEigen::new(tm);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let estimate = |idx: usize| -> f64 {
                let s = eig.eigenvectors.column(idx);
                let mut acc = 0.0;
                for row in &coupling {
                    let v: f64 = (0..bb).map(|i| row[i] * s[block_start + i]).sum();
                    acc += v * v;
                }
                acc.sqrt()
            };
            let wanted: Option<usize> = match target {
                Target::Count(k) => (k <= m).then_some(k),
                Target::AtLeast(cut) => {
                    let above = order.iter().take_while(|&&i| eig.eigenvalues[i] >= cut).count();
                    if exhausted {
                        Some(above)
                    } else {
                        // one extra converged value below the cutoff witnesses completeness
                        (above < m).then_some(above + 1)
                    }
                }
            };
            if let Some(w) = wanted {
                let screened = exhausted || order[..w].iter().all(|&i| gate(eig.eigenvalues[i], estimate(i)));
                if screened {
                    let pairs = ritz_pairs(&basis, &eig, &order[..w]);
                    let mut ok = true;
                    for p in &pairs {
                        ok &= accept(p.theta, &p.vector);
                    }
                    if ok || exhausted {
                        return Outcome { pairs, converged: ok };
                    }
                }
            }
            if exhausted || m >= cap {
                let take = match target {
                    Target::Count(k) => k.min(m),
                    Target::AtLeast(cut) => order.iter().take_while(|&&i| eig.eigenvalues[i] >= cut).count(),
                };
                let pairs = ritz_pairs(&basis, &eig, &order[..take]);
                return Outcome { pairs, converged: false };
            }
            next_check = (m + (m / 4).max(cfg.block)).min(cap);
        }
        block_start = m;
        let room = cap - m;
        add_block(&mut basis, fresh, cfg.block.min(room), &mut rng);
        if basis.len() == m {
            return Outcome { pairs: Vec::new(), converged: false };
        }
    }
}

fn ritz_pairs(basis: &Basis, eig: &SymmetricEigen<f64, nalgebra::Dyn>, idx: &[usize]) -> Vec<Pair> {
    let m = basis.len();
    idx.iter()
        .map(|&i| {
            let s = eig.eigenvectors.column(i);
            let mut v = vec![0.0; basis.n];
            for j in 0..m {
                axpy(s[j], basis.col(j), &mut v);
            }
            Pair { theta: eig.eigenvalues[i], vector: v }
        })
        .collect()
}

/// Orthonormalize the residual block against the basis and itself.
/// Returns the new orthonormal columns and the coupling coefficients.
fn qr_block(basis: &Basis, residuals: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let bb = residuals.len();
    let mut fresh: Vec<Vec<f64>> = Vec::new();
    let mut coupling: Vec<Vec<f64>> = Vec::new();
    let scale = residuals
        .iter()
        .map(|r| dot(r, r).sqrt())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for (i, mut w) in residuals.into_iter().enumerate() {
        let mut coeff = vec![0.0; fresh.len()];
        let mut norm = dot(&w, &w).sqrt();
        for _ in 0..3 {
            for (j, q) in fresh.iter().enumerate() {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
                coeff[j] += c;
            }
            let after = dot(&w, &w).sqrt();
            if after > REORTH * norm {
                break;
            }
            // heavy cancellation: restore orthogonality to the basis as well
            basis.orthogonalize(&mut w);
            norm = after;
        }
        let norm = dot(&w, &w).sqrt();
        for (j, c) in coeff.into_iter().enumerate() {
            coupling[j][i] = c;
        }
        if norm > DEFLATION * scale && norm > 1e-300 {
            w.iter_mut().for_each(|x| *x /= norm);
            let mut row = vec![0.0; bb];
            row[i] = norm;
            coupling.push(row);
            fresh.push(w);
        }
    }
    (fresh, coupling)
}

/// Append up to `size` columns: the supplied fresh columns first, then
/// random vectors orthogonalized against the basis.
fn add_block<R: Rng>(
    basis: &mut Basis,
    fresh: Vec<Vec<f64>>,
    size: usize,
    rng: &mut R,
) {
    let n = basis.n;
    let start = basis.len();
    for v in fresh.into_iter().take(size) {
        basis.push(&v);
    }
    let mut attempts = 0;
    while basis.len() - start < size && basis.len() < n && attempts < 4 * size + 8 {
        attempts += 1;
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let before = dot(&v, &v).sqrt();
        basis.orthogonalize(&mut v);
        let after = dot(&v, &v).sqrt();
        if after > 1e-8 * before {
            v.iter_mut().for_each(|x| *x /= after);
            basis.push(&v);
        }
    }
}
