//! Eigenvalue shifts under amplitude perturbations.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::Site;
use crate::operator::{assemble, HamiltonianSpec};
use crate::random_field::{verify_covering, FieldRealization};
use crate::spectral::{lowest_eigenvalues_with, SolverOptions};

/// Sampling step for the covering precondition.
const COVERING_STEP: f64 = 0.1;

/// Which amplitudes a shift acts on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SiteSelection {
    /// Every site of the `R`-enlarged shadow.
    Shadow,
    /// Sites of one `R`-enlarged projection, `particle ∈ {1, 2}`.
    Projection { particle: usize },
    Explicit { sites: Vec<Site> },
}

impl SiteSelection {
    fn describe(&self) -> String {
        match self {
            SiteSelection::Shadow => "shadow".into(),
            SiteSelection::Projection { particle } => format!("projection_{particle}"),
            SiteSelection::Explicit { sites } => format!("explicit_{}", sites.len()),
        }
    }
}

pub fn selection_sites(spec: &HamiltonianSpec, selection: &SiteSelection) -> Result<Vec<Site>> {
    match selection {
        SiteSelection::Shadow => spec.field_sites(),
        SiteSelection::Projection { particle } => {
            let factors = spec.domain.particles();
            match particle.checked_sub(1).and_then(|i| factors.get(i)) {
                Some(c) => Ok(c.enlarged(spec.profile.range())?.lattice_sites()),
                None => invalid(format!("particle must be 1..={}, got {particle}", factors.len())),
            }
        }
        SiteSelection::Explicit { sites } => Ok(sites.clone()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmCheckReport {
    pub shift: f64,
    pub selection: String,
    pub sites: usize,
    /// `E_k(perturbed) − E_k(original)` for the lowest eigenvalues.
    pub deltas: Vec<f64>,
    pub min_delta: f64,
    pub max_delta: f64,
}

fn compare(
    spec: &HamiltonianSpec,
    before: &FieldRealization,
    after: &FieldRealization,
    k: usize,
    solver: &SolverOptions,
) -> Result<(Vec<f64>, f64, f64)> {
    let e0 = lowest_eigenvalues_with(&assemble(spec, before)?, k, solver)?;
    let e1 = lowest_eigenvalues_with(&assemble(spec, after)?, k, solver)?;
    let deltas: Vec<f64> = e1.eigenvalues.iter().zip(&e0.eigenvalues).map(|(a, b)| a - b).collect();
    let min = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let max = deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((deltas, min, max))
}

/// Raise the amplitudes on `selection` by `t` and report how the lowest
/// `k` eigenvalues move.
pub fn dm_shift_check(
    spec: &HamiltonianSpec,
    realization: &FieldRealization,
    selection: &SiteSelection,
    t: f64,
    k: usize,
    solver: &SolverOptions,
) -> Result<DmCheckReport> {
    if !(t >= 0.0 && t.is_finite()) {
        return invalid(format!("shift must be nonnegative, got {t}"));
    }
    for cube in spec.domain.particles() {
        if !verify_covering(&spec.profile, cube, COVERING_STEP)?.covering_holds {
            return Err(Error::Precondition("bump profile does not satisfy the covering condition".into()));
        }
    }
    let sites = selection_sites(spec, selection)?;
    let (deltas, min_delta, max_delta) = compare(spec, realization, &realization.shifted(&sites, t), k, solver)?;
    Ok(DmCheckReport { shift: t, selection: selection.describe(), sites: sites.len(), deltas, min_delta, max_delta })
}

/// Add a site-wise nonnegative perturbation and report the eigenvalue moves.
pub fn dm_perturbation_check(
    spec: &HamiltonianSpec,
    realization: &FieldRealization,
    perturbation: &[(Site, f64)],
    k: usize,
    solver: &SolverOptions,
) -> Result<DmCheckReport> {
    if perturbation.iter().any(|(_, r)| !(*r >= 0.0)) {
        return invalid("perturbation entries must be nonnegative");
    }
    let (deltas, min_delta, max_delta) = compare(spec, realization, &realization.perturbed(perturbation), k, solver)?;
    Ok(DmCheckReport {
        shift: 0.0,
        selection: "perturbation".into(),
        sites: perturbation.len(),
        deltas,
        min_delta,
        max_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TwoParticleBox;
    use crate::operator::Domain;
    use crate::random_field::{sample_amplitudes, AmplitudeEnsemble, BumpKind, BumpProfile};
    use crate::seeding::{trial_rng, Stream};
    use rand::Rng;

    fn spec(profile: BumpProfile) -> HamiltonianSpec {
        HamiltonianSpec::new(
            Domain::TwoParticle(TwoParticleBox::from_parts(vec![0.0], 2.0, vec![3.0], 1.0).unwrap()),
            0.25,
            profile,
            AmplitudeEnsemble::uniform(1.0),
        )
    }

    fn field(spec: &HamiltonianSpec, trial: u64) -> FieldRealization {
        sample_amplitudes(&spec.ensemble, &spec.field_sites().unwrap(), 21, trial).unwrap()
    }

    #[test]
    fn zero_shift_leaves_spectrum() {
        let s = spec(BumpProfile::unit_tent());
        let r = dm_shift_check(&s, &field(&s, 0), &SiteSelection::Shadow, 0.0, 6, &SolverOptions::default()).unwrap();
        assert!(r.deltas.iter().all(|d| d.abs() < 1e-9));
    }

    #[test]
    fn shadow_shift_is_twice_t() {
        let s = spec(BumpProfile::unit_tent());
        let opts = SolverOptions::with_tol(1e-11);
        for trial in 0..3 {
            let r = dm_shift_check(&s, &field(&s, trial), &SiteSelection::Shadow, 0.5, 6, &opts).unwrap();
            assert!(r.deltas.iter().all(|d| (d - 1.0).abs() < 1e-9), "{:?}", r.deltas);
        }
    }

    #[test]
    fn projection_shift_is_at_least_t() {
        let s = spec(BumpProfile::unit_tent());
        let opts = SolverOptions::with_tol(1e-11);
        for particle in [1, 2] {
            let sel = SiteSelection::Projection { particle };
            let r = dm_shift_check(&s, &field(&s, 4), &sel, 0.5, 6, &opts).unwrap();
            assert!(r.min_delta >= 0.5 - 1e-9);
        }
        assert!(selection_sites(&s, &SiteSelection::Projection { particle: 3 }).is_err());
    }

    #[test]
    fn preconditions() {
        let s = spec(BumpProfile::unit_tent());
        let f = field(&s, 0);
        assert!(dm_shift_check(&s, &f, &SiteSelection::Shadow, -0.1, 3, &SolverOptions::default()).is_err());
        let weak = spec(BumpProfile::new(BumpKind::Tent, 1.0, 0.5).unwrap());
        let f = field(&weak, 0);
        assert!(matches!(
            dm_shift_check(&weak, &f, &SiteSelection::Shadow, 0.1, 3, &SolverOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn nonnegative_perturbations_raise_eigenvalues() {
        let s = spec(BumpProfile::new(BumpKind::SmoothCompact, 1.3, 1.0).unwrap());
        let sites = s.field_sites().unwrap();
        for trial in 0..5 {
            let mut rng = trial_rng(9, Stream::Perturbation, trial);
            let pert: Vec<(Site, f64)> = sites.iter().map(|x| (x.clone(), rng.random::<f64>())).collect();
            let r = dm_perturbation_check(&s, &field(&s, trial), &pert, 5, &SolverOptions::default()).unwrap();
            assert!(r.min_delta >= -1e-9);
        }
    }
}
