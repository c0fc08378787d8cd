//! Ensemble description and derived constants.
//!
//! Everything that only depends on the integer pair `(d, βd)` is computed
//! here. The rational quantities `α = (d−1)/d`, `γ = (βd−1)/d`,
//! `β̃ = α/γ` and `ζ = βd/γ` are formed exactly before conversion to
//! floating point, and the support edges `λ± = (√α ± √γ)²` are evaluated in
//! forms that stay accurate when `λ⁻` or `βd − λ⁺` vanish.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{NomaError, Result};

/// The `(βd, d)`-semiregular ensemble: every signature has `d` non-zeros and
/// every resource is shared by `βd` users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Ensemble {
    d: u32,
    beta_d: u32,
}

impl Ensemble {
    pub fn new(d: u32, beta_d: u32) -> Result<Self> {
        if d < 2 {
            return Err(NomaError::Config(format!(
                "column degree d must satisfy d >= 2 (got d = {d})"
            )));
        }
        if beta_d < 2 {
            return Err(NomaError::Config(format!(
                "row degree beta_d must satisfy beta_d >= 2 (got beta_d = {beta_d})"
            )));
        }
        // keeps every product below in i64 range
        if d > 1 << 20 || beta_d > 1 << 20 {
            return Err(NomaError::Config(format!(
                "degrees above 2^20 are not supported (got d = {d}, beta_d = {beta_d})"
            )));
        }
        Ok(Self { d, beta_d })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn beta_d(&self) -> u32 {
        self.beta_d
    }

    /// System load `β = βd / d`, recomputed from the integer pair.
    pub fn beta(&self) -> f64 {
        self.beta_d as f64 / self.d as f64
    }

    pub fn beta_exact(&self) -> Ratio<i64> {
        Ratio::new(self.beta_d as i64, self.d as i64)
    }

    pub fn derive(&self) -> DerivedParams {
        DerivedParams::new(*self)
    }
}

/// An ensemble together with the per-user received SNR (linear scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemConfig {
    pub ensemble: Ensemble,
    pub snr: f64,
}

impl SystemConfig {
    pub fn new(d: u32, beta_d: u32, snr: f64) -> Result<Self> {
        Self::from_ensemble(Ensemble::new(d, beta_d)?, snr)
    }

    pub fn from_ensemble(ensemble: Ensemble, snr: f64) -> Result<Self> {
        if !snr.is_finite() || snr < 0.0 {
            return Err(NomaError::Config(format!(
                "snr must be finite and >= 0 (got {snr})"
            )));
        }
        Ok(Self { ensemble, snr })
    }

    pub fn d(&self) -> u32 {
        self.ensemble.d
    }

    pub fn beta_d(&self) -> u32 {
        self.ensemble.beta_d
    }

    pub fn beta(&self) -> f64 {
        self.ensemble.beta()
    }
}

/// Constants of the limiting spectrum and of the closed-form capacities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    #[serde(skip)]
    pub ensemble: Ensemble,
    pub d: u32,
    pub beta_d: u32,
    pub beta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta_tilde: f64,
    pub zeta: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// `βd − λ⁺ = (√p − 1)²/d` with `p = (d−1)(βd−1)`; zero only for `d = βd = 2`.
    pub gap_above: f64,
    /// `ζ − (1 + √β̃)²`, the margin of `ζ` inside the domain of `G`.
    pub zeta_margin: f64,
}

impl DerivedParams {
    pub fn new(ensemble: Ensemble) -> Self {
        let d = ensemble.d as i64;
        let bd = ensemble.beta_d as i64;

        let alpha = Ratio::new(d - 1, d);
        let gamma = Ratio::new(bd - 1, d);
        let beta_tilde = alpha / gamma;
        let zeta = Ratio::from_integer(bd) / gamma;

        // ζ ≥ (1+√β̃)²  ⇔  ζ−1−β̃ ≥ 0  ∧  (ζ−1−β̃)² ≥ 4β̃, decided exactly.
        let excess = zeta - Ratio::from_integer(1) - beta_tilde;
        assert!(
            excess >= Ratio::from_integer(0)
                && excess * excess >= Ratio::from_integer(4) * beta_tilde,
            "zeta = {zeta} violates zeta >= (1 + sqrt(beta_tilde))^2 for (d, beta_d) = ({d}, {bd})"
        );

        let sa = ((d - 1) as f64).sqrt();
        let sb = ((bd - 1) as f64).sqrt();
        let df = d as f64;
        let lambda_plus = (sa + sb).powi(2) / df;
        // (√a − √b)² = (a − b)² / (√a + √b)²
        let lambda_minus = ((d - bd) as f64).powi(2) / ((sa + sb).powi(2) * df);

        let p = (d - 1) * (bd - 1);
        let sp = (p as f64).sqrt();
        let gap_above = ((p - 1) as f64).powi(2) / (df * (sp + 1.0).powi(2));

        // ζ − (1+√β̃)² = ((p−1)²/(βd−1)²) / ((p+1)/(βd−1) + 2√β̃)
        let bt = to_f64(beta_tilde);
        let bm1 = (bd - 1) as f64;
        let zeta_margin =
            ((p - 1) as f64).powi(2) / (bm1 * bm1) / ((p + 1) as f64 / bm1 + 2.0 * bt.sqrt());

        Self {
            ensemble,
            d: ensemble.d,
            beta_d: ensemble.beta_d,
            beta: ensemble.beta(),
            alpha: to_f64(alpha),
            gamma: to_f64(gamma),
            beta_tilde: bt,
            zeta: to_f64(zeta),
            lambda_minus,
            lambda_plus,
            gap_above,
            zeta_margin,
        }
    }

    /// Mass of the atom at zero, `[1 − β]⁺`.
    pub fn point_mass_at_zero(&self) -> f64 {
        let b = self.ensemble.beta_exact();
        if b >= Ratio::from_integer(1) {
            0.0
        } else {
            to_f64(Ratio::from_integer(1) - b)
        }
    }

    /// Width of the continuous support, `λ⁺ − λ⁻ = 4√(αγ)`.
    pub fn support_width(&self) -> f64 {
        4.0 * (self.alpha * self.gamma).sqrt()
    }
}

pub fn derive_params(config: &SystemConfig) -> DerivedParams {
    config.ensemble.derive()
}

fn to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
