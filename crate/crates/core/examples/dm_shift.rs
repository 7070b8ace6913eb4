//! Eigenvalue response to raising the amplitudes on the shadow or on one
//! projection of a two-particle box.

use wegner_lab::experiments::{dm_shift_check, SiteSelection};
use wegner_lab::geometry::TwoParticleBox;
use wegner_lab::operator::{Domain, HamiltonianSpec};
use wegner_lab::random_field::{sample_amplitudes, AmplitudeEnsemble, BumpProfile};
use wegner_lab::spectral::SolverOptions;

fn main() -> wegner_lab::Result<()> {
    let domain = Domain::TwoParticle(TwoParticleBox::from_parts(vec![0.0], 2.0, vec![3.0], 1.0)?);
    let spec = HamiltonianSpec::new(domain, 0.25, BumpProfile::unit_tent(), AmplitudeEnsemble::uniform(1.0));
    let sites = spec.field_sites()?;
    let solver = SolverOptions::default();
    for trial in 0..3 {
        let field = sample_amplitudes(&spec.ensemble, &sites, 42, trial)?;
        for sel in [SiteSelection::Shadow, SiteSelection::Projection { particle: 1 }, SiteSelection::Projection { particle: 2 }] {
            let r = dm_shift_check(&spec, &field, &sel, 0.5, 6, &solver)?;
            println!(
                "trial {trial} {:<13} sites {:>2}  min delta {:.12}  max delta {:.12}",
                r.selection, r.sites, r.min_delta, r.max_delta
            );
        }
    }
    Ok(())
}
