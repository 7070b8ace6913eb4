//! Analytic continuity modulus against its Monte Carlo estimate.

use wegner_lab::random_field::{estimate_nu, nu_bound, AmplitudeEnsemble};

fn main() -> wegner_lab::Result<()> {
    let ensembles = [
        ("uniform [0,1]", AmplitudeEnsemble::uniform(1.0)),
        ("triangular [0,1]", AmplitudeEnsemble::IidBoundedDensity { low: 0.0, high: 1.0 }),
        ("markov [0,1]", AmplitudeEnsemble::MarkovClipped { low: 0.0, high: 1.0, coupling: 0.5, window: 0.25 }),
    ];
    for (label, ens) in &ensembles {
        for eps in [0.1, 0.02] {
            let bound = nu_bound(ens, eps)?;
            let est = estimate_nu(ens, eps, 200_000, 1)?;
            let (lo, hi) = est.ci.unwrap_or((est.value, est.value));
            println!(
                "{label:<18} eps {eps:<5} bound {:.4}  estimate {:.4} [{lo:.4}, {hi:.4}]",
                bound.value, est.value
            );
        }
    }
    Ok(())
}
