//! Closed-form spectral efficiencies of the optimum and LMMSE receivers.
//!
//! Both closed forms are built from the kernel
//! `F(x, z) = (√(x(1+√z)²+1) − √(x(1−√z)²+1))²` and, for the optimum
//! receiver, the ratio kernel `G(x, y, z)`. Every logarithm is evaluated
//! through quantities that are free of cancellation at both ends of the SNR
//! range:
//!
//! - with `P = x(1+√z)²+1`, `Q = x(1−√z)²+1` and `s = 1 + x(z−1)`,
//!   `η(x, z) := 1 + xz − F(x, z)/4 = (s + √(PQ))/2`, and `PQ − s² = 4x`;
//! - `x − F(x, z)/4 = x/η(x, z)`;
//! - `F(x, z) = F(xz, 1/z)`.

use serde::Serialize;

use crate::error::{NomaError, Result};
use crate::params::{DerivedParams, SystemConfig};
use crate::spectral::{stieltjes, SpectralDensity};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Receiver {
    Optimum,
    Lmmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ClosedForm,
    IntegralOracle,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::ClosedForm => "closed_form",
            Route::IntegralOracle => "integral_oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityResult {
    pub config: SystemConfig,
    pub receiver: Receiver,
    /// Bits per second per Hz per dimension.
    pub spectral_efficiency: f64,
    pub route: Route,
}

/// Limiting per-user LMMSE error `M₁` and output SINR `1/M₁ − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MmseError {
    pub m1: f64,
    pub sinr: f64,
}

/// `F(x, z)`, evaluated as `(4x√z / (√P + √Q))²`.
pub fn kernel_f(x: f64, z: f64) -> f64 {
    let sz = z.sqrt();
    let rp = (x * (1.0 + sz).powi(2) + 1.0).sqrt();
    let rq = (x * (1.0 - sz).powi(2) + 1.0).sqrt();
    let diff = 4.0 * x * sz / (rp + rq);
    diff * diff
}

/// `η(x, z) = 1 + xz − F(x, z)/4` together with `η − 1`.
pub(crate) fn eta(x: f64, z: f64) -> (f64, f64) {
    let sz = z.sqrt();
    let pq = ((x * (1.0 + sz).powi(2) + 1.0) * (x * (1.0 - sz).powi(2) + 1.0)).sqrt();
    if x * (1.0 + z) <= 1.0 {
        // √(PQ) − 1 = (2x(1+z) + x²(1−z)²) / (√(PQ) + 1)
        let pq_m1 = (2.0 * x * (1.0 + z) + x * x * (1.0 - z).powi(2)) / (pq + 1.0);
        let em1 = 0.5 * (x * (z - 1.0) + pq_m1);
        (1.0 + em1, em1)
    } else {
        let s = 1.0 + x * (z - 1.0);
        let e = if s >= 0.0 {
            0.5 * (s + pq)
        } else {
            2.0 * x / (pq - s)
        };
        (e, e - 1.0)
    }
}

/// `G(x, y, z)`; requires `y ≥ (1+√z)²` and `z > 0`.
pub fn kernel_g(x: f64, y: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(NomaError::Domain(format!("G requires z > 0 (got z = {z})")));
    }
    let sz = z.sqrt();
    let v = y - (1.0 + sz).powi(2);
    if !(v >= 0.0) {
        return Err(NomaError::Domain(format!(
            "G requires y >= (1 + sqrt(z))^2 = {} (got y = {y})",
            (1.0 + sz).powi(2)
        )));
    }
    let u = y - (1.0 - sz).powi(2);
    let r = 1.0 + g_ratio_minus_one(x, y, z, u, v);
    Ok(r * r)
}

/// `√G − 1` with `u = y − (1−√z)²`, `v = y − (1+√z)²` supplied by the caller.
///
/// `√G = (xu + Q)(√u + √v) / (√(uP) + √(vQ))` and `xu + Q = 1 + xy`, so the
/// difference from one splits into two non-negative `O(x)` pieces.
fn g_ratio_minus_one(x: f64, y: f64, z: f64, u: f64, v: f64) -> f64 {
    let sz = z.sqrt();
    let p = (1.0 + sz).powi(2);
    let q = (1.0 - sz).powi(2);
    let rp = (x * p + 1.0).sqrt();
    let rq = (x * q + 1.0).sqrt();
    let (su, sv) = (u.sqrt(), v.sqrt());
    let num = su * (x * y - x * p / (1.0 + rp)) + sv * (x * y - x * q / (1.0 + rq));
    num / (su * rp + sv * rq)
}

fn checked_ln_1p(arg_minus_one: f64, what: &str) -> Result<f64> {
    if !(arg_minus_one > -1.0) || !arg_minus_one.is_finite() {
        return Err(NomaError::Domain(format!(
            "log argument of the {what} term is not positive ({})",
            1.0 + arg_minus_one
        )));
    }
    Ok(arg_minus_one.ln_1p())
}

/// Limiting optimum spectral efficiency from the closed form.
pub fn capacity_optimum(config: &SystemConfig) -> Result<CapacityResult> {
    let p = config.ensemble.derive();
    let c = optimum_closed_form(&p, config.snr)?;
    Ok(CapacityResult {
        config: *config,
        receiver: Receiver::Optimum,
        spectral_efficiency: c,
        route: Route::ClosedForm,
    })
}

fn optimum_closed_form(p: &DerivedParams, snr: f64) -> Result<f64> {
    if snr == 0.0 {
        return Ok(0.0);
    }
    let beta = p.beta;
    let d = p.d as f64;
    let bd = p.beta_d as f64;
    let x = p.gamma * snr;
    let z = p.beta_tilde;
    let (_, eta_m1) = eta(x, z);

    // 1 + (γ+α)snr − F/4 = η + x
    let first = (beta * (d - 1.0) + 1.0) / 2.0 * checked_ln_1p(eta_m1 + x, "first")?;
    // 1 + α·snr − F/4 = η
    let second = (beta - 1.0) * checked_ln_1p(eta_m1, "second")?;

    // (β(d−1) − 1)/2 vanishes exactly when βd(d−1) = d
    let third = if (p.beta_d as u64) * (p.d as u64 - 1) == p.d as u64 {
        0.0
    } else {
        let u = p.zeta_margin + 4.0 * z.sqrt();
        let r_m1 = g_ratio_minus_one(x, p.zeta, z, u, p.zeta_margin);
        let ln_g = 2.0 * checked_ln_1p(r_m1, "G")?;
        let ln_num = 2.0 * checked_ln_1p(bd * snr, "third")?;
        (beta * (d - 1.0) - 1.0) / 2.0 * (ln_num - ln_g)
    };

    let nats = first + second - third;
    Ok((nats / std::f64::consts::LN_2).max(0.0))
}

/// `∫ log₂(1 + snr·λ) dμ(λ)` by quadrature against the limiting density.
pub fn capacity_integral_oracle(config: &SystemConfig) -> Result<CapacityResult> {
    let density = SpectralDensity::new(config.ensemble.derive());
    let snr = config.snr;
    let c = if snr == 0.0 {
        0.0
    } else {
        density.integrate(|l| (snr * l).ln_1p())? / std::f64::consts::LN_2
    };
    Ok(CapacityResult {
        config: *config,
        receiver: Receiver::Optimum,
        spectral_efficiency: c,
        route: Route::IntegralOracle,
    })
}

/// Limiting LMMSE spectral efficiency,
/// `β log₂((1 + βd·snr) / (1 + dγ·snr − d·F(γ·snr, β̃)/4))`.
pub fn capacity_lmmse(config: &SystemConfig) -> Result<CapacityResult> {
    let p = config.ensemble.derive();
    let snr = config.snr;
    let c = if snr == 0.0 {
        0.0
    } else {
        let x = p.gamma * snr;
        let (e, _) = eta(x, p.beta_tilde);
        // 1 + d(x − F/4) = 1 + d·x/η
        let den = checked_ln_1p(p.d as f64 * x / e, "LMMSE denominator")?;
        let num = checked_ln_1p(p.beta_d as f64 * snr, "LMMSE numerator")?;
        (p.beta * (num - den) / std::f64::consts::LN_2).max(0.0)
    };
    Ok(CapacityResult {
        config: *config,
        receiver: Receiver::Lmmse,
        spectral_efficiency: c,
        route: Route::ClosedForm,
    })
}

/// `M₁ = (1/snr)·m_R(−1/snr)`, where `m_R` is the Stieltjes transform of the
/// limiting spectrum of `(1/d)A†A`. Its spectrum is that of `(1/d)AA†` with
/// `K − N` zeros added (or removed), so
/// `m_R(z) = m(z)/β − (1 − 1/β)/z`.
pub fn lmmse_error(config: &SystemConfig) -> Result<MmseError> {
    let snr = config.snr;
    if snr == 0.0 {
        return Ok(MmseError { m1: 1.0, sinr: 0.0 });
    }
    let p = config.ensemble.derive();
    let v = stieltjes(&p, Complex64::new(-1.0 / snr, 0.0))?;
    let m = v.m_outer.re;
    let m1 = m / (p.beta * snr) + (1.0 - 1.0 / p.beta);
    if !(m1 > 0.0 && m1 <= 1.0 + 1e-12) {
        return Err(NomaError::Numerical(format!("LMMSE error {m1} outside (0, 1]")));
    }
    let m1 = m1.min(1.0);
    Ok(MmseError { m1, sinr: 1.0 / m1 - 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Direct transcriptions of the kernel definitions, used as oracles.
    fn f_naive(x: f64, z: f64) -> f64 {
        ((x * (1.0 + z.sqrt()).powi(2) + 1.0).sqrt() - (x * (1.0 - z.sqrt()).powi(2) + 1.0).sqrt())
            .powi(2)
    }

    fn g_naive(x: f64, y: f64, z: f64) -> f64 {
        let sz = z.sqrt();
        let a = y - (1.0 - sz).powi(2);
        let b = y - (1.0 + sz).powi(2);
        let num = (a * (x * (1.0 + sz).powi(2) + 1.0)).sqrt() - (b * (x * (1.0 - sz).powi(2) + 1.0)).sqrt();
        let den = a.sqrt() - b.sqrt();
        (num / den).powi(2)
    }

    #[test]
    fn kernel_f_examples() {
        assert_eq!(kernel_f(0.0, 3.7), 0.0);
        assert_eq!(kernel_f(2.5, 0.0), 0.0);
        // 22 − 2√21
        assert!((kernel_f(5.0, 1.0) - 12.83484861008832).abs() < 1e-13);
    }

    #[test]
    fn kernel_f_keeps_digits_at_low_snr() {
        // F = 4x²z·(1 + O(x))
        let (x, z) = (1e-15, 0.5);
        let f = kernel_f(x, z);
        let leading = 4.0 * x * x * z;
        assert!((f / leading - 1.0).abs() < 1e-8);
        // the naive difference of radicals has lost everything here
        assert!((f_naive(x, z) / leading - 1.0).abs() > 1e-4);
    }

    #[test]
    fn kernel_g_examples() {
        assert!((kernel_g(0.0, 9.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((kernel_g(5.0, 4.0, 1.0).unwrap() - 21.0).abs() < 1e-12);
        let z: f64 = 0.3;
        let edge = (1.0 + z.sqrt()).powi(2);
        let x = 2.0;
        let expected = x * edge + 1.0;
        assert!((kernel_g(x, edge, z).unwrap() - expected).abs() < 1e-12);
        // square-root behaviour in y − (1+√z)²
        assert!((kernel_g(x, edge * (1.0 + 1e-12), z).unwrap() - expected).abs() < 1e-5);
    }

    #[test]
    fn kernel_g_domain() {
        assert!(matches!(kernel_g(1.0, 3.9, 1.0), Err(NomaError::Domain(_))));
        assert!(matches!(kernel_g(1.0, 4.0, 0.0), Err(NomaError::Domain(_))));
    }

    #[test]
    fn eta_matches_definition() {
        for &x in &[1e-3, 0.3, 1.0, 7.0, 1e3] {
            for &z in &[0.1, 0.5, 1.0, 2.0, 9.0] {
                let (e, em1) = eta(x, z);
                let naive = 1.0 + x * z - f_naive(x, z) / 4.0;
                assert!((e - naive).abs() < 1e-12 * naive.max(1.0) * (1.0 + x), "{x} {z}");
                assert!((em1 - (e - 1.0)).abs() < 1e-12 * e);
                // x − F/4 = x/η
                assert!((x / e - (x - f_naive(x, z) / 4.0)).abs() < 1e-10 * (1.0 + x));
                // F(x, z) = F(xz, 1/z)
                assert!((kernel_f(x, z) - kernel_f(x * z, 1.0 / z)).abs() < 1e-12 * (1.0 + kernel_f(x, z)));
            }
        }
    }

    #[test]
    fn arcsine_closed_forms() {
        let cfg = SystemConfig::new(2, 2, 10.0).unwrap();
        // ∫ (1/π) log₂(1 + snr(1 + cos θ)) dθ = log₂((a + √(a² − b²))/2), a = 1+snr, b = snr
        let (a, b) = (11.0f64, 10.0f64);
        let oracle = ((a + (a * a - b * b).sqrt()) / 2.0).log2();
        let c = capacity_optimum(&cfg).unwrap().spectral_efficiency;
        assert!((c - oracle).abs() < 1e-12);
        assert!((c - 2.961861815784542).abs() < 1e-12);
        let l = capacity_lmmse(&cfg).unwrap().spectral_efficiency;
        assert!((l - 0.5 * 21f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn zero_snr_is_zero() {
        for &(d, bd) in &[(2, 2), (3, 2), (5, 11)] {
            let cfg = SystemConfig::new(d, bd, 0.0).unwrap();
            assert_eq!(capacity_optimum(&cfg).unwrap().spectral_efficiency, 0.0);
            assert_eq!(capacity_integral_oracle(&cfg).unwrap().spectral_efficiency, 0.0);
            assert_eq!(capacity_lmmse(&cfg).unwrap().spectral_efficiency, 0.0);
            let e = lmmse_error(&cfg).unwrap();
            assert_eq!((e.m1, e.sinr), (1.0, 0.0));
        }
    }

    #[test]
    fn low_snr_first_order() {
        let cfg = SystemConfig::new(3, 2, 1e-6).unwrap();
        let c = capacity_optimum(&cfg).unwrap().spectral_efficiency;
        let first_order = 2.0 / 3.0 * 1e-6 * std::f64::consts::LOG2_E;
        assert!((c / first_order - 1.0).abs() < 1e-4);
        // high-precision quadrature of the integral representation
        assert!((c - 9.617960527288208e-7).abs() < 1e-18);
    }

    #[test]
    fn frozen_reference_values() {
        // 40-digit quadrature of ∫ log₂(1 + snr·λ) dμ and of the LMMSE formula
        let cases = [
            (3, 6, 1.0, 1.47073905817782, 1.045099260078772),
            (4, 2, 10.0, 1.635597533366965, 1.516774931518687),
            (5, 12, 100.0, 7.624098010553435, 1.850271236631168),
            (6, 3, 0.01, 0.007165873517294936, 0.007154113160644171),
            (10, 10, 10.0, 2.763195100474322, 1.934990828260198),
        ];
        for (d, bd, snr, opt, mmse) in cases {
            let cfg = SystemConfig::new(d, bd, snr).unwrap();
            let c = capacity_optimum(&cfg).unwrap().spectral_efficiency;
            let o = capacity_integral_oracle(&cfg).unwrap().spectral_efficiency;
            let l = capacity_lmmse(&cfg).unwrap().spectral_efficiency;
            assert!((c - opt).abs() < 1e-13 * opt.max(1.0), "{d},{bd},{snr}: {c}");
            assert!((o - opt).abs() < 1e-11, "{d},{bd},{snr}: {o}");
            assert!((l - mmse).abs() < 1e-13 * mmse.max(1.0), "{d},{bd},{snr}: {l}");
        }
    }

    #[test]
    fn lmmse_error_examples() {
        let e = lmmse_error(&SystemConfig::new(2, 2, 10.0).unwrap()).unwrap();
        assert!((e.m1 - 1.0 / 21f64.sqrt()).abs() < 1e-14);
        assert!((e.sinr - (21f64.sqrt() - 1.0)).abs() < 1e-12);

        let cfg = SystemConfig::new(3, 6, 10.0).unwrap();
        let e = lmmse_error(&cfg).unwrap();
        let c = capacity_lmmse(&cfg).unwrap().spectral_efficiency;
        assert!((cfg.beta() * (1.0 / e.m1).log2() - c).abs() < 1e-9);

        let tiny = lmmse_error(&SystemConfig::new(3, 6, 1e-9).unwrap()).unwrap();
        assert!((tiny.m1 - 1.0).abs() < 1e-8 && tiny.sinr < 1e-8);
    }

    #[test]
    fn lmmse_dense_limit() {
        // d = βd = 500 against β log₂(1 + snr − F(snr, β)/4) with β = 1
        let cfg = SystemConfig::new(500, 500, 10.0).unwrap();
        let c = capacity_lmmse(&cfg).unwrap().spectral_efficiency;
        let dense = (1.0 + 10.0 - f_naive(10.0, 1.0) / 4.0).log2();
        assert!((c - dense).abs() < 1e-2);
    }

    proptest! {
        #[test]
        fn kernels_agree_with_definitions(x in 0.0f64..50.0, z in 0.05f64..20.0, extra in 0.0f64..10.0) {
            let f = kernel_f(x, z);
            prop_assert!(f >= 0.0);
            prop_assert!((f - f_naive(x, z)).abs() <= 1e-10 * (1.0 + f));
            let y = (1.0 + z.sqrt()).powi(2) + extra;
            let g = kernel_g(x, y, z).unwrap();
            prop_assert!(g >= 1.0 - 1e-15);
            if extra > 1e-3 {
                let gn = g_naive(x, y, z);
                prop_assert!((g - gn).abs() <= 1e-8 * gn, "{} vs {}", g, gn);
            }
        }

        #[test]
        fn optimum_dominates_lmmse(d in 2u32..=8, bd in 2u32..=16, log_snr in -3.0f64..3.0) {
            let cfg = SystemConfig::new(d, bd, 10f64.powf(log_snr)).unwrap();
            let c = capacity_optimum(&cfg).unwrap().spectral_efficiency;
            let l = capacity_lmmse(&cfg).unwrap().spectral_efficiency;
            prop_assert!(c > l && l > 0.0);
        }
    }
}
