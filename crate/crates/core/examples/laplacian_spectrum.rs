//! Zero-potential spectrum on `[0, π]` against the closed-form discrete
//! eigenvalues and the continuum limit `k² / 2`.

use std::f64::consts::PI;

use wegner_lab::geometry::Cube;
use wegner_lab::operator::{assemble, Domain, HamiltonianSpec};
use wegner_lab::random_field::{sample_amplitudes, AmplitudeEnsemble, BumpProfile};
use wegner_lab::spectral::lowest_eigenvalues;

fn spectrum(intervals: usize, k: usize) -> wegner_lab::Result<(f64, Vec<f64>)> {
    let h = PI / intervals as f64;
    let domain = Domain::OneParticle(Cube::new(vec![PI / 2.0], PI / 2.0)?);
    let spec = HamiltonianSpec::new(domain, h, BumpProfile::unit_tent(), AmplitudeEnsemble::uniform(0.0));
    let field = sample_amplitudes(&spec.ensemble, &spec.field_sites()?, 0, 0)?;
    let op = assemble(&spec, &field)?;
    Ok((h, lowest_eigenvalues(&op, k, 1e-10)?.eigenvalues))
}

fn main() -> wegner_lab::Result<()> {
    let (h, ev) = spectrum(256, 10)?;
    println!("{:>3} {:>20} {:>20} {:>10}", "k", "computed", "closed form", "rel err");
    for (i, e) in ev.iter().enumerate() {
        let k = (i + 1) as f64;
        let exact = (1.0 - (k * PI / 256.0).cos()) / (h * h);
        println!("{:>3} {:>20.12} {:>20.12} {:>10.2e}", i + 1, e, exact, (e - exact).abs() / exact);
    }

    println!("\ncontinuum error of E_3 = 4.5:");
    let mut prev: Option<f64> = None;
    for n in [32, 64, 128] {
        let (h, ev) = spectrum(n, 3)?;
        let err = (ev[2] - 4.5).abs();
        let rate = prev.map(|p| (p / err).log2());
        println!("h = {h:.5}  error = {err:.3e}  order = {}", rate.map_or("-".into(), |r| format!("{r:.3}")));
        prev = Some(err);
    }
    Ok(())
}
