//! Monte Carlo estimates of eigenvalue concentration probabilities and
//! direct checks of the ingredients behind the bounds.
//!
//! Trials are scheduled on the current rayon pool; every trial draws from
//! its own stream, so results do not depend on the pool size.

mod concentration;
mod dm;
mod wegner;

pub use concentration::{
    concentration_check, exact_probability, ConcentrationConfig, ConcentrationReport, DmFunction,
};
pub use dm::{dm_perturbation_check, dm_shift_check, selection_sites, DmCheckReport, SiteSelection};
pub use wegner::{
    epsilon_sweep, one_volume_bound, one_volume_probability, two_volume_bound, two_volume_probability,
    EnergyChoice, IntervalChoice, McOptions, ProbabilityEstimate, SweepTable, SweepTarget, WegnerOneConfig,
    WegnerTwoConfig,
};

use rayon::prelude::*;

/// Run `f` inside a dedicated pool of `threads` workers.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

/// `f(trial)` for every trial, collected in trial order.
pub(crate) fn map_trials<T: Send>(trials: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..trials as u64).into_par_iter().map(f).collect()
}
