//! Finite-size checks: random regular signature matrices, their empirical
//! spectra, and Monte Carlo capacity estimates.
//!
//! Trial `t` of a run with master seed `s` draws from ChaCha8 seeded with
//! `s` on stream `t`, so results do not depend on thread scheduling.

mod estimate;
mod signature;
mod spectrum;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use estimate::{
    empirical_capacity_lmmse, empirical_capacity_opt, empirical_capacity_opt_multi, mmse_diagonal, LmmseEstimate,
    McEstimate,
};
pub use signature::{feasible_n, generate_signature, users_for, PhaseScheme, SignatureMatrix};
pub use spectrum::{empirical_spectrum, ks_distance, ks_distance_to, trace_moments, EmpiricalSpectrum};

pub(crate) fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws signature `trial` of a run with master seed `seed`.
pub fn generate_trial_signature(
    n: usize,
    d: u32,
    beta_d: u32,
    scheme: PhaseScheme,
    seed: u64,
    trial: u64,
) -> crate::Result<SignatureMatrix> {
    signature::generate_with_rng(n, d, beta_d, scheme, &mut trial_rng(seed, trial))
}
