use std::f64::consts::LN_2;

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{NomaError, Result};
use crate::params::{Ensemble, SystemConfig};

use super::signature::{generate_with_rng, PhaseScheme, SignatureMatrix};
use super::spectrum::{empirical_spectrum, gram_cols, gram_rows, Weight};
use super::trial_rng;

/// Sample mean over independent signature draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error of the mean; zero for a single trial.
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n < 2 {
            0.0
        } else {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        McEstimate { mean, stderr, trials: n, seed }
    }

    /// `|mean − reference| ≤ max(3·SE, rel·|reference|)`.
    pub fn agrees_with(&self, reference: f64, rel: f64) -> bool {
        (self.mean - reference).abs() <= (3.0 * self.stderr).max(rel * reference.abs())
    }
}

fn run_trials<T, F>(trials: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<T> + Sync,
{
    if trials == 0 {
        return Err(NomaError::Config("trials must be at least 1".into()));
    }
    (0..trials as u64).into_par_iter().map(|t| f(&mut trial_rng(seed, t))).collect()
}

/// Empirical `(1/N)·E log₂ det(I + (snr/d)AA†)` through the eigenvalues.
pub fn empirical_capacity_opt(
    n: usize,
    config: &SystemConfig,
    trials: usize,
    seed: u64,
    scheme: PhaseScheme,
) -> Result<McEstimate> {
    Ok(empirical_capacity_opt_multi(n, config.ensemble, &[config.snr], trials, seed, scheme)?[0])
}

/// As [`empirical_capacity_opt`] at several SNRs, sharing each drawn spectrum.
pub fn empirical_capacity_opt_multi(
    n: usize,
    ensemble: Ensemble,
    snrs: &[f64],
    trials: usize,
    seed: u64,
    scheme: PhaseScheme,
) -> Result<Vec<McEstimate>> {
    for &snr in snrs {
        SystemConfig::from_ensemble(ensemble, snr)?;
    }
    let per_trial = run_trials(trials, seed, |rng| {
        let a = generate_with_rng(n, ensemble.d(), ensemble.beta_d(), scheme, rng)?;
        let spec = empirical_spectrum(&a)?;
        Ok(snrs
            .iter()
            .map(|&snr| spec.eigenvalues.iter().map(|l| (snr * l).ln_1p()).sum::<f64>() / (n as f64 * LN_2))
            .collect::<Vec<_>>())
    })?;
    Ok((0..snrs.len())
        .map(|i| McEstimate::from_samples(&per_trial.iter().map(|v| v[i]).collect::<Vec<_>>(), seed))
        .collect())
}

/// Diagonal of `M = (I_K + (snr/d)A†A)⁻¹` for one realization.
pub fn mmse_diagonal(a: &SignatureMatrix, snr: f64) -> Result<Vec<f64>> {
    if a.is_real() {
        mmse_diagonal_in::<f64>(a, snr)
    } else {
        mmse_diagonal_in::<Complex64>(a, snr)
    }
}

/// Cholesky on the smaller side. For `K ≤ N`, `M_kk = ‖L⁻¹e_k‖²`; for
/// `K > N`, push-through gives `M_kk = 1 − c‖L⁻¹a_k‖²` with
/// `LL† = I_N + c·AA†`, `c = snr/d`.
fn mmse_diagonal_in<T>(a: &SignatureMatrix, snr: f64) -> Result<Vec<f64>>
where
    T: Weight + faer::traits::ComplexField<Real = f64>,
{
    let c = snr / a.d() as f64;
    let small_users = a.k() <= a.n();
    let mut s = if small_users { gram_cols::<T>(a, c) } else { gram_rows::<T>(a, c) };
    let size = s.nrows();
    for i in 0..size {
        s[(i, i)] = T::w_add(s[(i, i)], T::from_weight(Complex64::new(1.0, 0.0)));
    }
    let llt = s
        .llt(Side::Lower)
        .map_err(|e| NomaError::Numerical(format!("Cholesky failed: {e:?}")))?;
    let mut linv = Mat::<T>::from_fn(size, size, |i, j| {
        T::from_weight(Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
    });
    llt.L().solve_lower_triangular_in_place(linv.as_mut());

    let diag = if small_users {
        (0..size).map(|k| (k..size).map(|i| T::w_norm_sqr(linv[(i, k)])).sum()).collect()
    } else {
        let mut y = vec![T::zero_value(); size];
        (0..a.k())
            .map(|k| {
                y.iter_mut().for_each(|v| *v = T::zero_value());
                for (r, w) in a.column(k) {
                    let w = T::from_weight(w);
                    // L⁻¹ is lower triangular: column r is zero above r
                    for i in r..size {
                        y[i] = T::w_add(y[i], T::w_mul(linv[(i, r)], w));
                    }
                }
                1.0 - c * y.iter().map(|v| T::w_norm_sqr(*v)).sum::<f64>()
            })
            .collect()
    };
    Ok(diag)
}

/// LMMSE Monte Carlo summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LmmseEstimate {
    /// `β·(1/K)Σ log₂(1/M_kk)`.
    pub capacity: McEstimate,
    /// Per-user SINR `1/M_kk − 1`, averaged over users then trials.
    pub sinr: McEstimate,
    pub m_min: f64,
    pub m_max: f64,
}

pub fn empirical_capacity_lmmse(
    n: usize,
    config: &SystemConfig,
    trials: usize,
    seed: u64,
    scheme: PhaseScheme,
) -> Result<LmmseEstimate> {
    let (d, bd, snr) = (config.d(), config.beta_d(), config.snr);
    let beta = config.beta();
    let per_trial = run_trials(trials, seed, |rng| {
        let a = generate_with_rng(n, d, bd, scheme, rng)?;
        let m = mmse_diagonal(&a, snr)?;
        let k = m.len() as f64;
        let cap = beta * m.iter().map(|x| -x.log2()).sum::<f64>() / k;
        let sinr = m.iter().map(|x| 1.0 / x - 1.0).sum::<f64>() / k;
        let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((cap, sinr, lo, hi))
    })?;
    let caps: Vec<f64> = per_trial.iter().map(|t| t.0).collect();
    let sinrs: Vec<f64> = per_trial.iter().map(|t| t.1).collect();
    Ok(LmmseEstimate {
        capacity: McEstimate::from_samples(&caps, seed),
        sinr: McEstimate::from_samples(&sinrs, seed),
        m_min: per_trial.iter().map(|t| t.2).fold(f64::INFINITY, f64::min),
        m_max: per_trial.iter().map(|t| t.3).fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::signature::generate_signature;
    use faer::linalg::solvers::DenseSolveCore;

    fn dense_mmse_diag(a: &SignatureMatrix, snr: f64) -> Vec<f64> {
        let m = gram_cols::<Complex64>(a, snr / a.d() as f64);
        let k = a.k();
        let s = Mat::<Complex64>::from_fn(k, k, |i, j| m[(i, j)] + if i == j { 1.0 } else { 0.0 });
        let inv = s.partial_piv_lu().inverse();
        (0..k).map(|i| inv[(i, i)].re).collect()
    }

    #[test]
    fn both_sides_match_direct_inverse() {
        for &(d, bd) in &[(3, 2), (2, 2), (2, 5)] {
            for scheme in [PhaseScheme::Uniform, PhaseScheme::Binary] {
                let a = generate_signature(30, d, bd, scheme, 17).unwrap();
                let fast = mmse_diagonal(&a, 7.0).unwrap();
                let slow = dense_mmse_diag(&a, 7.0);
                for (f, s) in fast.iter().zip(&slow) {
                    assert!((f - s).abs() < 1e-12, "{f} vs {s}");
                }
            }
        }
    }

    #[test]
    fn zero_snr_is_exact() {
        let cfg = SystemConfig::new(3, 6, 0.0).unwrap();
        let e = empirical_capacity_opt(30, &cfg, 4, 1, PhaseScheme::Uniform).unwrap();
        assert_eq!((e.mean, e.stderr), (0.0, 0.0));
        let l = empirical_capacity_lmmse(30, &cfg, 2, 1, PhaseScheme::Binary).unwrap();
        assert_eq!(l.capacity.mean, 0.0);
    }

    #[test]
    fn estimates_are_deterministic() {
        let cfg = SystemConfig::new(3, 2, 5.0).unwrap();
        let a = empirical_capacity_opt(60, &cfg, 6, 42, PhaseScheme::Uniform).unwrap();
        let b = empirical_capacity_opt(60, &cfg, 6, 42, PhaseScheme::Uniform).unwrap();
        assert_eq!(a, b);
        let c = empirical_capacity_opt(60, &cfg, 6, 43, PhaseScheme::Uniform).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn stderr_rules() {
        let e = McEstimate::from_samples(&[1.0], 0);
        assert_eq!(e.stderr, 0.0);
        let e = McEstimate::from_samples(&[1.0, 3.0], 0);
        assert!((e.stderr - 1.0).abs() < 1e-15);
        assert!(e.agrees_with(2.0, 0.0));
        assert!(!e.agrees_with(5.5, 0.0));
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = SystemConfig::new(2, 2, 1.0).unwrap();
        assert!(empirical_capacity_opt(10, &cfg, 0, 0, PhaseScheme::Binary).is_err());
    }
}
