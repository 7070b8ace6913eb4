//! Probability that a monotone function of i.i.d. uniforms lands in a
//! window of width ε, against the bound `n · c · ε`.

use wegner_lab::experiments::{concentration_check, ConcentrationConfig, DmFunction};

fn main() -> wegner_lab::Result<()> {
    for phi in [DmFunction::Max, DmFunction::Sum, DmFunction::MinPlusMean] {
        for (n, a) in [(2, 0.5), (5, 0.8), (8, 0.9)] {
            let r = concentration_check(&ConcentrationConfig {
                phi,
                n,
                density_bound: 1.0,
                a,
                epsilon: 0.05,
                samples: 100_000,
                seed: 3,
                confidence: 0.95,
            })?;
            let emp = r.empirical.map_or("-".to_string(), |e| format!("{:.5} [{:.5}, {:.5}]", e.estimate, e.ci_low, e.ci_high));
            let exact = r.exact.map_or("-".to_string(), |p| format!("{p:.5}"));
            println!("{phi:?} n={n} a={a}: exact {exact}  empirical {emp}  bound {:.3}  holds {}", r.bound, r.holds);
        }
    }
    Ok(())
}
