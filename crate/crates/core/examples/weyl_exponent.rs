//! Growth of the eigenvalue counting function of a disordered two-particle
//! box, fitted against the exponents `d / 2` and `D / 2 = d`.

use wegner_lab::geometry::TwoParticleBox;
use wegner_lab::operator::{assemble, Domain, HamiltonianSpec};
use wegner_lab::random_field::{sample_amplitudes, AmplitudeEnsemble, BumpProfile};
use wegner_lab::spectral::{count_below, SolverOptions};
use wegner_lab::stats::log_log_slope;

fn main() -> wegner_lab::Result<()> {
    let domain = Domain::TwoParticle(TwoParticleBox::from_parts(vec![0.0], 4.0, vec![0.0], 4.0)?);
    let spec = HamiltonianSpec::new(domain, 0.25, BumpProfile::unit_tent(), AmplitudeEnsemble::uniform(1.0));
    let field = sample_amplitudes(&spec.ensemble, &spec.field_sites()?, 8, 0)?;
    let op = assemble(&spec, &field)?;
    let energies = [2.0, 4.0, 8.0, 16.0];
    let mut counts = Vec::new();
    for &e in &energies {
        let r = count_below(&op, e, &SolverOptions::default())?;
        println!("E = {e:>5}: N(E) = {:>4}  Weyl reference {:.1}", r.count, r.weyl_reference);
        counts.push(r.count as f64);
    }
    let slope = log_log_slope(&energies, &counts).unwrap_or(f64::NAN);
    println!("fitted exponent {slope:.3}  (d/2 = 0.5, D/2 = 1.0)");
    Ok(())
}
