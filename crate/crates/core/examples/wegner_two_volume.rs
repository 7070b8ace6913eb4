//! Probability that two distant boxes driven by one field realization have
//! eigenvalues in `I` within ε of each other.

use wegner_lab::experiments::{epsilon_sweep, IntervalChoice, McOptions, SweepTarget, WegnerTwoConfig};
use wegner_lab::geometry::{classify_separation, TwoParticleBox};
use wegner_lab::operator::{Domain, HamiltonianSpec};
use wegner_lab::random_field::{AmplitudeEnsemble, BumpProfile};

fn main() -> wegner_lab::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let first = TwoParticleBox::from_parts(vec![0.0], 4.0, vec![0.0], 4.0)?;
    let second = TwoParticleBox::from_parts(vec![100.0], 4.0, vec![100.0], 4.0)?;
    println!("separation: {:?}", classify_separation(&first, &second, 1.0)?.cases);
    let cfg = WegnerTwoConfig {
        hamiltonian: HamiltonianSpec::new(
            Domain::TwoParticle(first),
            0.25,
            BumpProfile::unit_tent(),
            AmplitudeEnsemble::uniform(1.0),
        ),
        second,
        interval: IntervalChoice::CentralGroundStates { pilot_trials: 200, fraction: 0.5 },
        epsilon: 0.02,
        trials,
        master_seed: 2,
        options: McOptions { margin: Some(0.0), ..Default::default() },
    };
    let table = epsilon_sweep(&SweepTarget::Two(cfg), &[0.02, 0.01, 0.005, 0.0025])?;
    let (a, b) = table.interval.unwrap_or((f64::NAN, f64::NAN));
    println!("I = [{a:.6}, {b:.6}], {trials} trials");
    for r in &table.rows {
        println!(
            "eps {:<7} hits {:>4}  p {:.5} [{:.5}, {:.5}]  dominated {:?}",
            r.epsilon, r.hits, r.estimate, r.ci_low, r.ci_high, r.dominated
        );
    }
    println!("ratios {:?}", table.ratios);
    Ok(())
}
