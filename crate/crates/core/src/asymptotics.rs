//! Extreme-SNR parameters.
//!
//! Low SNR: `R ≈ (𝒮₀ / 3dB)·(Eb/N0|dB − Eb/N0_min|dB)`.
//! High SNR: `R ≈ 𝒮∞·(log₂ snr − ℒ∞)`.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::capacity::Receiver;
use crate::params::Ensemble;
use crate::units::{linear_to_db, THREE_DB};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowSnrParams {
    /// Minimum `Eb/N0` (linear); `ln 2` for both receivers.
    pub ebn0_min: f64,
    /// Low-SNR slope in bits/s/Hz per 3 dB.
    pub s0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HighSnrParams {
    /// High-SNR slope (multiplexing gain).
    pub s_inf: f64,
    /// High-SNR power offset in 3 dB units; absent when the slope is zero.
    pub l_inf: Option<f64>,
}

pub fn low_snr_optimum(ensemble: Ensemble) -> LowSnrParams {
    let d = ensemble.d() as f64;
    let beta = ensemble.beta();
    LowSnrParams {
        ebn0_min: LN_2,
        s0: 2.0 * beta * d / (d * (beta + 1.0) - 1.0),
    }
}

pub fn high_snr_optimum(ensemble: Ensemble) -> HighSnrParams {
    let d = ensemble.d() as f64;
    let bd = ensemble.beta_d() as f64;
    let beta = ensemble.beta();
    let l_inf = match ensemble.beta_d().cmp(&ensemble.d()) {
        std::cmp::Ordering::Less => {
            (1.0 / beta - 1.0) * (1.0 - beta).log2() - (d - 1.0) * (1.0 - 1.0 / d).log2()
        }
        std::cmp::Ordering::Equal => -(d - 1.0) * (1.0 - 1.0 / d).log2(),
        std::cmp::Ordering::Greater => {
            (beta - 1.0) * (beta - 1.0).log2() - beta * beta.log2() - (bd - 1.0) * (1.0 - 1.0 / bd).log2()
        }
    };
    HighSnrParams {
        s_inf: beta.min(1.0),
        l_inf: Some(l_inf),
    }
}

pub fn low_snr_lmmse(ensemble: Ensemble) -> LowSnrParams {
    let d = ensemble.d() as f64;
    let beta = ensemble.beta();
    LowSnrParams {
        ebn0_min: LN_2,
        s0: 2.0 * beta * d / ((2.0 * beta + 1.0) * d - 2.0),
    }
}

pub fn high_snr_lmmse(ensemble: Ensemble) -> HighSnrParams {
    let d = ensemble.d() as f64;
    let beta = ensemble.beta();
    match ensemble.beta_d().cmp(&ensemble.d()) {
        std::cmp::Ordering::Less => HighSnrParams {
            s_inf: beta,
            l_inf: Some((1.0 / (1.0 - beta)).log2() + ((d - 1.0) / d).log2()),
        },
        std::cmp::Ordering::Equal => HighSnrParams {
            s_inf: 0.5,
            l_inf: Some(((d - 1.0) / d).log2()),
        },
        std::cmp::Ordering::Greater => HighSnrParams { s_inf: 0.0, l_inf: None },
    }
}

pub fn low_snr(receiver: Receiver, ensemble: Ensemble) -> LowSnrParams {
    match receiver {
        Receiver::Optimum => low_snr_optimum(ensemble),
        Receiver::Lmmse => low_snr_lmmse(ensemble),
    }
}

pub fn high_snr(receiver: Receiver, ensemble: Ensemble) -> HighSnrParams {
    match receiver {
        Receiver::Optimum => high_snr_optimum(ensemble),
        Receiver::Lmmse => high_snr_lmmse(ensemble),
    }
}

/// Jumps of the optimum high-SNR offset across full load at degree `d`:
/// `ℒ∞(d, d−1) − ℒ∞(d, d)` and `ℒ∞(d, d+1) − ℒ∞(d, d)`. Both vanish as
/// `d → ∞`, at a rate close to `log₂(d)/d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OffsetJumps {
    pub d: u32,
    pub below: f64,
    pub above: f64,
}

pub fn offset_jumps_at_full_load(d: u32) -> crate::error::Result<OffsetJumps> {
    let l = |bd: u32| -> crate::error::Result<f64> {
        Ok(high_snr_optimum(Ensemble::new(d, bd)?).l_inf.expect("optimum offset is always defined"))
    };
    let at = l(d)?;
    Ok(OffsetJumps { d, below: l(d - 1)? - at, above: l(d + 1)? - at })
}

/// Which affine approximation to evaluate, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Operating point is `Eb/N0` (linear).
    LowSnr(LowSnrParams),
    /// Operating point is `snr` (linear).
    HighSnr(HighSnrParams),
}

/// Affine rate approximation at an operating point. `None` when the
/// high-SNR offset is undefined.
pub fn approx_rate(regime: Regime, operating_point: f64) -> Option<f64> {
    match regime {
        Regime::LowSnr(p) => {
            Some(p.s0 / THREE_DB * (linear_to_db(operating_point) - linear_to_db(p.ebn0_min)))
        }
        Regime::HighSnr(p) => p.l_inf.map(|l| p.s_inf * (operating_point.log2() - l)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ens(d: u32, bd: u32) -> Ensemble {
        Ensemble::new(d, bd).unwrap()
    }

    #[test]
    fn minimum_ebn0_is_ln2() {
        for &(d, bd) in &[(2, 2), (3, 2), (4, 11)] {
            assert_eq!(low_snr_optimum(ens(d, bd)).ebn0_min, LN_2);
            assert_eq!(low_snr_lmmse(ens(d, bd)).ebn0_min, LN_2);
        }
        assert!((linear_to_db(LN_2) + 1.5917).abs() < 1e-4);
    }

    #[test]
    fn optimum_examples() {
        assert!((low_snr_optimum(ens(2, 2)).s0 - 4.0 / 3.0).abs() < 1e-15);
        let hi = high_snr_optimum(ens(3, 2));
        assert!((hi.s_inf - 2.0 / 3.0).abs() < 1e-16);
        assert!((high_snr_optimum(ens(2, 2)).l_inf.unwrap() - 1.0).abs() < 1e-15);
        assert!((high_snr_optimum(ens(2, 4)).l_inf.unwrap() - -0.7548875021634685).abs() < 1e-14);
    }

    #[test]
    fn dense_slope_limit() {
        let beta: f64 = 1.5;
        let d = 100_000u32;
        let s0 = low_snr_optimum(ens(d, (beta * d as f64) as u32)).s0;
        assert!((s0 - 2.0 * beta / (beta + 1.0)).abs() < 1e-4);
    }

    #[test]
    fn offset_jumps_shrink_like_log_d_over_d() {
        let mut last = f64::INFINITY;
        for d in [10u32, 100, 1_000, 10_000, 100_000, (1 << 20) - 1] {
            let j = offset_jumps_at_full_load(d).unwrap();
            let worst = j.below.abs().max(j.above.abs());
            assert!(worst < last);
            last = worst;
            let scaled = worst * d as f64 / (d as f64).log2();
            assert!((0.9..1.6).contains(&scaled), "d = {d}: {scaled}");
        }
        // the largest admissible degree still leaves a jump of about 2e-5
        assert!(last > 1e-6 && last < 3e-5);
        assert!(offset_jumps_at_full_load(2).is_err());
    }

    #[test]
    fn lmmse_examples() {
        assert!((low_snr_lmmse(ens(2, 2)).s0 - 1.0).abs() < 1e-15);
        assert_eq!(high_snr_lmmse(ens(2, 2)).s_inf, 0.5);
        assert!((high_snr_lmmse(ens(3, 2)).l_inf.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(high_snr_lmmse(ens(2, 4)), HighSnrParams { s_inf: 0.0, l_inf: None });
    }

    #[test]
    fn lmmse_slope_below_optimum() {
        for d in 2..=6 {
            for bd in 2..=12 {
                let e = ens(d, bd);
                assert!(low_snr_lmmse(e).s0 < low_snr_optimum(e).s0);
            }
        }
    }

    #[test]
    fn approximation_lines() {
        let lo = low_snr_optimum(ens(2, 2));
        assert_eq!(approx_rate(Regime::LowSnr(lo), LN_2), Some(0.0));
        let r = approx_rate(Regime::LowSnr(lo), 1.0).unwrap();
        assert!((r - 0.7050218305931968).abs() < 1e-12);

        let hi = high_snr_optimum(ens(3, 2));
        let r1 = approx_rate(Regime::HighSnr(hi), 1e3).unwrap();
        let r2 = approx_rate(Regime::HighSnr(hi), 2e3).unwrap();
        assert!((r2 - r1 - hi.s_inf).abs() < 1e-12);
        assert_eq!(approx_rate(Regime::HighSnr(high_snr_lmmse(ens(2, 4))), 1e3), None);
    }
}
