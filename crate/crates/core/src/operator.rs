//! Finite-difference Dirichlet Hamiltonians `−Σ_j (1/2m_j) Δ_j + U + V`.
//!
//! The box is covered by a tensor grid of spacing `h`; nodes on the
//! boundary carry the Dirichlet condition and are dropped, so only strictly
//! interior nodes become unknowns. Nodes are numbered lexicographically
//! with the last axis fastest; for two-particle boxes the first `d` axes
//! belong to particle one.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{Cube, IntervalUnion, Site, TwoParticleBox};
use crate::random_field::{AmplitudeEnsemble, BumpProfile, FieldRealization};

/// Relative tolerance for `h` dividing an edge length.
const SPACING_TOLERANCE: f64 = 1e-12;

/// Configuration space of one or two particles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    OneParticle(Cube),
    TwoParticle(TwoParticleBox),
}

impl Domain {
    pub fn particles(&self) -> Vec<&Cube> {
        match self {
            Domain::OneParticle(c) => vec![c],
            Domain::TwoParticle(b) => b.factors().to_vec(),
        }
    }

    /// Single-particle dimension `d`.
    pub fn dimension(&self) -> usize {
        self.particles()[0].dimension()
    }

    /// Configuration dimension: `d` or `2d`.
    pub fn configuration_dimension(&self) -> usize {
        self.dimension() * self.particles().len()
    }

    pub fn volume(&self) -> f64 {
        self.particles().iter().map(|c| c.volume()).product()
    }

    /// `|Λ ∩ Z^{D}|`.
    pub fn lattice_count(&self) -> usize {
        self.particles().iter().map(|c| c.lattice_count()).product()
    }

    /// Union of the single-particle projections.
    pub fn shadow(&self) -> IntervalUnion {
        IntervalUnion::new(self.particles().into_iter().cloned().collect())
    }

    /// Lattice sites whose bumps of radius `range` can reach the box.
    pub fn field_sites(&self, range: f64) -> Result<Vec<Site>> {
        let enlarged: Result<Vec<Cube>> = self.particles().iter().map(|c| c.enlarged(range)).collect();
        Ok(IntervalUnion::new(enlarged?).lattice_sites())
    }
}

/// Interior nodes of a tensor grid over a [`Domain`].
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    domain: Domain,
    spacing: f64,
    axis_coords: Vec<Vec<f64>>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn axes(&self) -> usize {
        self.axis_coords.len()
    }

    pub fn nodes_per_axis(&self) -> Vec<usize> {
        self.axis_coords.iter().map(|c| c.len()).collect()
    }

    /// Absolute coordinates of the interior nodes along one axis.
    pub fn axis_coords(&self, axis: usize) -> &[f64] {
        &self.axis_coords[axis]
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        let mut rest = node;
        self.strides
            .iter()
            .map(|&s| {
                let i = rest / s;
                rest %= s;
                i
            })
            .collect()
    }

    pub fn coordinates(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.axis_coords[a][i])
            .collect()
    }
}

pub fn build_grid(domain: &Domain, h: f64) -> Result<Grid> {
    if !(h > 0.0 && h.is_finite()) {
        return invalid(format!("grid spacing must be positive, got {h}"));
    }
    let mut axis_coords = Vec::new();
    for cube in domain.particles() {
        let edge = 2.0 * cube.half_width();
        let cells = (edge / h).round();
        if cells < 2.0 {
            return invalid(format!("spacing {h} too coarse for edge {edge}: no interior node"));
        }
        if (cells * h - edge).abs() > SPACING_TOLERANCE * edge.max(1.0) {
            return invalid(format!("spacing {h} does not divide edge {edge}"));
        }
        for axis in 0..cube.dimension() {
            let lo = cube.lower(axis);
            axis_coords.push((1..cells as usize).map(|i| lo + i as f64 * h).collect::<Vec<f64>>());
        }
    }
    let mut strides = vec![1usize; axis_coords.len()];
    for a in (0..axis_coords.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * axis_coords[a + 1].len();
    }
    let len = axis_coords.iter().map(|c| c.len()).product();
    Ok(Grid { domain: domain.clone(), spacing: h, axis_coords, strides, len })
}

/// Bounded pair interaction `U(x1, x2)` depending on `|x1 − x2|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionSpec {
    #[default]
    Zero,
    /// `strength` when `|x1 − x2| ≤ range`, zero otherwise.
    SquareWell { strength: f64, range: f64 },
    /// `strength · exp(−|x1 − x2|² / range²)`.
    SmoothedCore { strength: f64, range: f64 },
}

impl InteractionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InteractionSpec::Zero => Ok(()),
            InteractionSpec::SquareWell { strength, range } | InteractionSpec::SmoothedCore { strength, range } => {
                if !strength.is_finite() {
                    return invalid("interaction strength must be finite");
                }
                if !(range > 0.0 && range.is_finite()) {
                    return invalid(format!("interaction range must be positive, got {range}"));
                }
                Ok(())
            }
        }
    }

    /// `sup |U|`.
    pub fn sup(&self) -> f64 {
        match *self {
            InteractionSpec::Zero => 0.0,
            InteractionSpec::SquareWell { strength, .. } | InteractionSpec::SmoothedCore { strength, .. } => {
                strength.abs()
            }
        }
    }

    pub fn eval(&self, x1: &[f64], x2: &[f64]) -> f64 {
        let r2: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
        match *self {
            InteractionSpec::Zero => 0.0,
            InteractionSpec::SquareWell { strength, range } => {
                if r2 <= range * range {
                    strength
                } else {
                    0.0
                }
            }
            InteractionSpec::SmoothedCore { strength, range } => strength * (-r2 / (range * range)).exp(),
        }
    }
}

pub fn eval_interaction(spec: &InteractionSpec, x1: &[f64], x2: &[f64]) -> f64 {
    spec.eval(x1, x2)
}

fn unit_masses() -> [f64; 2] {
    [1.0, 1.0]
}

/// Everything needed to assemble a Hamiltonian except the amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub domain: Domain,
    pub spacing: f64,
    #[serde(default = "unit_masses")]
    pub masses: [f64; 2],
    #[serde(default)]
    pub interaction: InteractionSpec,
    pub profile: BumpProfile,
    pub ensemble: AmplitudeEnsemble,
}

impl HamiltonianSpec {
    pub fn new(domain: Domain, spacing: f64, profile: BumpProfile, ensemble: AmplitudeEnsemble) -> Self {
        HamiltonianSpec {
            domain,
            spacing,
            masses: unit_masses(),
            interaction: InteractionSpec::Zero,
            profile,
            ensemble,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.masses.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return invalid(format!("masses must be positive, got {:?}", self.masses));
        }
        self.interaction.validate()?;
        if matches!(self.domain, Domain::OneParticle(_)) && self.interaction != InteractionSpec::Zero {
            return invalid("a one-particle domain has no pair interaction");
        }
        self.ensemble.validate()?;
        build_grid(&self.domain, self.spacing).map(|_| ())
    }

    /// Lattice sites the field must cover for assembly.
    pub fn field_sites(&self) -> Result<Vec<Site>> {
        self.domain.field_sites(self.profile.range())
    }

    /// A priori bound on `sup |U + V|` over the box.
    pub fn potential_bound(&self) -> f64 {
        let particles = self.domain.particles().len() as f64;
        self.interaction.sup()
            + particles * self.ensemble.bound() * self.profile.overlap_bound(self.domain.dimension())
    }
}

/// `(master_seed, trial)` of the field realization an operator was built from.
pub type Provenance = (u64, u64);

/// Sparse symmetric operator in compressed-row form.
#[derive(Clone, Debug)]
pub struct DiscreteHamiltonian {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    bandwidth: usize,
    lower_bound: f64,
    domain: Domain,
    masses: [f64; 2],
    pub provenance: Provenance,
}

impl DiscreteHamiltonian {
    /// Build directly from a dense symmetric matrix (small test operators).
    pub fn from_dense(m: &DMatrix<f64>, domain: Domain) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return invalid("matrix must be square");
        }
        let n = m.nrows();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut bandwidth = 0;
        for i in 0..n {
            for j in 0..n {
                if (m[(i, j)] - m[(j, i)]).abs() > 0.0 {
                    return invalid("matrix is not symmetric");
                }
                if m[(i, j)] != 0.0 || i == j {
                    cols.push(j);
                    vals.push(m[(i, j)]);
                    bandwidth = bandwidth.max(i.abs_diff(j));
                }
            }
            row_ptr.push(cols.len());
        }
        let mut op = DiscreteHamiltonian {
            n,
            row_ptr,
            cols,
            vals,
            bandwidth,
            lower_bound: f64::NEG_INFINITY,
            domain,
            masses: unit_masses(),
            provenance: (0, 0),
        };
        op.lower_bound = op.gershgorin_lower();
        Ok(op)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag));
        let domain = Domain::OneParticle(Cube::new(vec![0.0], 1.0).expect("unit cube"));
        Self::from_dense(&m, domain).expect("diagonal matrices are symmetric")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Largest `|i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Rigorous lower bound on the smallest eigenvalue: the discrete
    /// kinetic ground state plus the minimum of the potential for
    /// assembled operators, the Gershgorin bound otherwise.
    pub fn spectrum_lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn masses(&self) -> [f64; 2] {
        self.masses
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = H x` without allocation. Panics on length mismatch.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    /// Lower Gershgorin bound on the spectrum.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let off: f64 = self.row(i).filter(|&(j, _)| j != i).map(|(_, v)| v.abs()).sum();
                self.get(i, i) - off
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Upper Gershgorin bound on the spectrum.
    pub fn gershgorin_upper(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let off: f64 = self.row(i).filter(|&(j, _)| j != i).map(|(_, v)| v.abs()).sum();
                self.get(i, i) + off
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max |H_ij − H_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Coordinate-format dump: one `row,col,value` line per stored entry.
    pub fn write_coo_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "col", "value"])?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                w.write_record(&[i.to_string(), j.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `y = H v`.
pub fn apply(op: &DiscreteHamiltonian, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != op.dim() {
        return invalid(format!("vector length {} does not match operator size {}", v.len(), op.dim()));
    }
    let mut y = vec![0.0; op.dim()];
    op.apply_into(v, &mut y);
    Ok(y)
}

/// Single-particle potential tabulated on one particle's sub-grid.
fn tabulate_field(
    grid: &Grid,
    first_axis: usize,
    d: usize,
    realization: &FieldRealization,
    profile: &BumpProfile,
) -> Vec<f64> {
    let counts: Vec<usize> = (first_axis..first_axis + d).map(|a| grid.axis_coords(a).len()).collect();
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut x = vec![0.0; d];
    for flat in 0..total {
        let mut rest = flat;
        for k in (0..d).rev() {
            x[k] = grid.axis_coords(first_axis + k)[rest % counts[k]];
            rest /= counts[k];
        }
        out.push(crate::random_field::eval_potential_1p(realization, profile, &x));
    }
    out
}

/// Assemble the Dirichlet Hamiltonian for one field realization.
pub fn assemble(spec: &HamiltonianSpec, realization: &FieldRealization) -> Result<DiscreteHamiltonian> {
    spec.validate()?;
    for s in spec.field_sites()? {
        if !realization.covers(&s) {
            return invalid(format!("field realization does not cover site {s:?} needed by the box"));
        }
    }
    let grid = build_grid(&spec.domain, spec.spacing)?;
    let d = spec.domain.dimension();
    let particles = spec.domain.particles().len();
    let h2 = spec.spacing * spec.spacing;

    // kinetic coupling per axis: 1 / (2 m h²)
    let coupling: Vec<f64> = (0..grid.axes()).map(|a| 1.0 / (2.0 * spec.masses[a / d] * h2)).collect();
    let kinetic_diag: f64 = coupling.iter().map(|c| 2.0 * c).sum();

    let fields: Vec<Vec<f64>> = (0..particles)
        .map(|p| tabulate_field(&grid, p * d, d, realization, &spec.profile))
        .collect();
    // sub-grid size of particle two, used to split a node index
    let second_size: usize = if particles == 2 { fields[1].len() } else { 1 };

    let n = grid.len();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(n * (2 * grid.axes() + 1));
    let mut vals = Vec::with_capacity(n * (2 * grid.axes() + 1));
    row_ptr.push(0);
    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(2 * grid.axes() + 1);
    let mut min_potential = f64::INFINITY;
    for node in 0..n {
        let idx = grid.multi_index(node);
        let mut diag = kinetic_diag;
        if particles == 2 {
            diag += fields[0][node / second_size] + fields[1][node % second_size];
            if spec.interaction != InteractionSpec::Zero {
                let x = grid.coordinates(node);
                diag += spec.interaction.eval(&x[..d], &x[d..]);
            }
        } else {
            diag += fields[0][node];
        }
        min_potential = min_potential.min(diag - kinetic_diag);
        entries.clear();
        entries.push((node, diag));
        for a in 0..grid.axes() {
            if idx[a] > 0 {
                entries.push((node - grid.strides[a], -coupling[a]));
            }
            if idx[a] + 1 < grid.axis_coords[a].len() {
                entries.push((node + grid.strides[a], -coupling[a]));
            }
        }
        entries.sort_by_key(|e| e.0);
        for &(c, v) in &entries {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    let bandwidth = if grid.axes() > 0 && n > grid.strides[0] { grid.strides[0] } else { n.saturating_sub(1) };
    // lowest Dirichlet mode per axis: 2c (1 − cos(π / (N + 1)))
    let kinetic_floor: f64 = (0..grid.axes())
        .map(|a| 2.0 * coupling[a] * (1.0 - (std::f64::consts::PI / (grid.axis_coords[a].len() + 1) as f64).cos()))
        .sum();
    Ok(DiscreteHamiltonian {
        n,
        row_ptr,
        cols,
        vals,
        bandwidth: bandwidth.min(n.saturating_sub(1)),
        lower_bound: kinetic_floor + min_potential,
        domain: spec.domain.clone(),
        masses: spec.masses,
        provenance: realization.provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random_field::{sample_amplitudes, BumpKind};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn interval(lo: f64, hi: f64) -> Domain {
        Domain::OneParticle(Cube::new(vec![0.5 * (lo + hi)], 0.5 * (hi - lo)).unwrap())
    }

    fn pair_box(l: f64) -> Domain {
        Domain::TwoParticle(TwoParticleBox::from_parts(vec![0.0], l, vec![0.0], l).unwrap())
    }

    fn zero_spec(domain: Domain, h: f64) -> HamiltonianSpec {
        HamiltonianSpec::new(domain, h, BumpProfile::unit_tent(), AmplitudeEnsemble::uniform(0.0))
    }

    fn realize(spec: &HamiltonianSpec, seed: u64) -> FieldRealization {
        sample_amplitudes(&spec.ensemble, &spec.field_sites().unwrap(), seed, 0).unwrap()
    }

    #[test]
    fn grid_counts() {
        let g = build_grid(&interval(0.0, PI), PI / 4.0).unwrap();
        assert_eq!(g.len(), 3);
        assert_relative_eq!(g.axis_coords(0)[0], PI / 4.0);
        let g = build_grid(&pair_box(1.0), 0.5).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.nodes_per_axis(), vec![3, 3]);
        assert_eq!(g.coordinates(5), vec![0.0, 0.5]);
        assert!(build_grid(&interval(0.0, 1.0), 2.0).is_err());
        assert!(build_grid(&interval(0.0, 1.0), 0.3).is_err());
        assert!(build_grid(&interval(0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn interaction_examples() {
        let well = InteractionSpec::SquareWell { strength: 5.0, range: 1.0 };
        assert_eq!(eval_interaction(&well, &[0.0], &[0.5]), 5.0);
        assert_eq!(eval_interaction(&well, &[0.0], &[2.0]), 0.0);
        assert_eq!(eval_interaction(&InteractionSpec::Zero, &[0.3], &[0.3]), 0.0);
        let core = InteractionSpec::SmoothedCore { strength: -2.0, range: 0.7 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let a = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let b = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            for u in [well, core] {
                assert!(u.eval(&a, &b).abs() <= u.sup());
                assert_eq!(u.eval(&a, &b), u.eval(&b, &a));
            }
        }
    }

    #[test]
    fn zero_potential_matches_discrete_laplacian() {
        let n = 8;
        let h = PI / n as f64;
        let spec = zero_spec(interval(0.0, PI), h);
        let op = assemble(&spec, &realize(&spec, 0)).unwrap();
        let mut eig: Vec<f64> = op.to_dense().symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        for (k, e) in eig.iter().enumerate() {
            let exact = (1.0 - ((k + 1) as f64 * PI / n as f64).cos()) / (h * h);
            assert_relative_eq!(*e, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn constant_potential_shifts_diagonal() {
        let spec = HamiltonianSpec {
            interaction: InteractionSpec::SquareWell { strength: 1.5, range: 0.8 },
            ..HamiltonianSpec::new(pair_box(2.0), 0.5, BumpProfile::unit_tent(), AmplitudeEnsemble::uniform(1.0))
        };
        let sites = spec.field_sites().unwrap();
        let zero = FieldRealization::from_amplitudes(sites.clone(), vec![0.0; sites.len()], (0, 0)).unwrap();
        let c = 0.75;
        // unit tents sum to one, so amplitude c everywhere is the constant c per particle
        let konst = FieldRealization::from_amplitudes(sites.clone(), vec![c / 2.0; sites.len()], (0, 0)).unwrap();
        let a = assemble(&spec, &zero).unwrap();
        let b = assemble(&spec, &konst).unwrap();
        for i in 0..a.dim() {
            for (j, v) in a.row(i) {
                let expected = if i == j { v + c } else { v };
                assert_relative_eq!(b.get(i, j), expected, max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn heavier_particles_halve_kinetic_spectrum() {
        let spec = zero_spec(pair_box(1.0), 0.25);
        let heavy = HamiltonianSpec { masses: [2.0, 2.0], ..spec.clone() };
        let r = realize(&spec, 0);
        let e1 = assemble(&spec, &r).unwrap().to_dense().symmetric_eigenvalues();
        let e2 = assemble(&heavy, &r).unwrap().to_dense().symmetric_eigenvalues();
        let mut e1: Vec<f64> = e1.iter().copied().collect();
        let mut e2: Vec<f64> = e2.iter().copied().collect();
        e1.sort_by(f64::total_cmp);
        e2.sort_by(f64::total_cmp);
        for (a, b) in e1.iter().zip(&e2) {
            assert_relative_eq!(*b, a / 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn apply_contract() {
        let spec = HamiltonianSpec::new(pair_box(1.5), 0.25, BumpProfile::unit_tent(), AmplitudeEnsemble::uniform(1.0));
        let op = assemble(&spec, &realize(&spec, 3)).unwrap();
        let n = op.dim();
        assert_eq!(apply(&op, &vec![0.0; n]).unwrap(), vec![0.0; n]);
        assert!(apply(&op, &vec![0.0; n + 1]).is_err());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let hv = apply(&op, &v).unwrap();
        let hw = apply(&op, &w).unwrap();
        let a: f64 = hv.iter().zip(&w).map(|(x, y)| x * y).sum();
        let b: f64 = v.iter().zip(&hw).map(|(x, y)| x * y).sum();
        assert_relative_eq!(a, b, max_relative = 1e-12);
        let scaled: Vec<f64> = v.iter().map(|x| 3.5 * x).collect();
        for (x, y) in apply(&op, &scaled).unwrap().iter().zip(&hv) {
            assert_relative_eq!(*x, 3.5 * y, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn assembled_matrix_is_exactly_symmetric() {
        for (domain, h) in [
            (pair_box(2.0), 0.25),
            (Domain::OneParticle(Cube::new(vec![0.5, -0.5], 1.5).unwrap()), 0.5),
            (Domain::TwoParticle(TwoParticleBox::from_parts(vec![0.0], 1.0, vec![3.0], 2.0).unwrap()), 0.5),
        ] {
            let spec = HamiltonianSpec {
                masses: [1.0, 3.0],
                ..HamiltonianSpec::new(domain, h, BumpProfile::unit_tent(), AmplitudeEnsemble::uniform(1.0))
            };
            let spec = if matches!(spec.domain, Domain::TwoParticle(_)) {
                HamiltonianSpec { interaction: InteractionSpec::SmoothedCore { strength: 2.0, range: 0.5 }, ..spec }
            } else {
                spec
            };
            let op = assemble(&spec, &realize(&spec, 5)).unwrap();
            assert_eq!(op.max_asymmetry(), 0.0);
        }
    }

    #[test]
    fn boundary_rows_lose_couplings_only() {
        // Dirichlet truncation removes off-diagonal entries at the boundary but
        // keeps the full kinetic diagonal, so the row sum exceeds the potential
        let spec = zero_spec(pair_box(1.0), 0.25);
        let op = assemble(&spec, &realize(&spec, 0)).unwrap();
        let grid = build_grid(&spec.domain, spec.spacing).unwrap();
        let c = 1.0 / (2.0 * 0.0625);
        for i in 0..op.dim() {
            let idx = grid.multi_index(i);
            let missing = idx.iter().zip(grid.nodes_per_axis()).map(|(&k, m)| (k == 0) as usize + (k + 1 == m) as usize).sum::<usize>();
            let row_sum: f64 = op.row(i).map(|(_, v)| v).sum();
            assert_relative_eq!(row_sum, missing as f64 * c, max_relative = 1e-12, epsilon = 1e-12);
            assert_relative_eq!(op.get(i, i), 4.0 * c, max_relative = 1e-15);
        }
    }

    #[test]
    fn amplitude_shift_is_diagonal_bump_sum() {
        let spec = HamiltonianSpec::new(
            Domain::TwoParticle(TwoParticleBox::from_parts(vec![0.0], 1.5, vec![0.5], 1.0).unwrap()),
            0.25,
            BumpProfile::new(BumpKind::SmoothCompact, 1.2, 0.8).unwrap(),
            AmplitudeEnsemble::uniform(1.0),
        );
        let r = realize(&spec, 8);
        let t = 0.3;
        let shifted = r.shifted(r.sites(), t);
        let a = assemble(&spec, &r).unwrap();
        let b = assemble(&spec, &shifted).unwrap();
        let grid = build_grid(&spec.domain, spec.spacing).unwrap();
        for i in 0..a.dim() {
            let x = grid.coordinates(i);
            let bump_sum: f64 = [&x[..1], &x[1..]]
                .iter()
                .map(|xj| r.sites().iter().map(|s| spec.profile.eval(&[xj[0] - s[0] as f64])).sum::<f64>())
                .sum();
            for (j, v) in a.row(i) {
                let expected = if i == j { v + t * bump_sum } else { v };
                assert_relative_eq!(b.get(i, j), expected, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn missing_sites_are_rejected() {
        let spec = zero_spec(pair_box(2.0), 0.5);
        let partial = FieldRealization::from_amplitudes(vec![vec![0]], vec![0.0], (0, 0)).unwrap();
        assert!(matches!(assemble(&spec, &partial), Err(crate::Error::InvalidArgument(_))));
    }

    #[test]
    fn lower_bound_is_below_spectrum() {
        for seed in 0..4 {
            let spec = HamiltonianSpec {
                interaction: InteractionSpec::SmoothedCore { strength: -1.0, range: 0.6 },
                ..HamiltonianSpec::new(pair_box(1.5), 0.25, BumpProfile::unit_tent(), AmplitudeEnsemble::uniform(1.0))
            };
            let op = assemble(&spec, &realize(&spec, seed)).unwrap();
            let lowest = op.to_dense().symmetric_eigenvalues().min();
            assert!(op.spectrum_lower_bound() <= lowest + 1e-12);
            assert!(op.spectrum_lower_bound() >= op.gershgorin_lower() - 1e-12);
        }
        let zero = zero_spec(interval(0.0, PI), PI / 16.0);
        let op = assemble(&zero, &realize(&zero, 0)).unwrap();
        let lowest = op.to_dense().symmetric_eigenvalues().min();
        assert_relative_eq!(op.spectrum_lower_bound(), lowest, max_relative = 1e-12);
    }

    #[test]
    fn coo_export() {
        let op = DiscreteHamiltonian::from_diagonal(&[3.0, 1.0]);
        let mut buf = Vec::new();
        op.write_coo_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "row,col,value\n0,0,3\n1,1,1\n");
    }
}
