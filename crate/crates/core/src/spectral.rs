//! Limiting spectrum of `(1/d)AA†`.
//!
//! The limiting Stieltjes transform is
//!
//! ```text
//! m(z) = −1 / (z − β / (1 + α·𝗆(z))),     𝗆(z) = −1 / (z − γ / (1 + α·𝗆(z)))
//! ```
//!
//! The inner equation is the quadratic `αz·𝗆² + (z − γ + α)·𝗆 + 1 = 0`,
//! whose discriminant factors as `(z − λ⁻)(z − λ⁺)`. Taking
//! `√(z−λ⁻)·√(z−λ⁺)` with principal roots gives a square root that is
//! analytic off `[λ⁻, λ⁺]` and behaves like `z` at infinity, which selects
//! the root that maps the upper half plane into itself and decays like
//! `−1/z` along the negative real axis.
//!
//! The density of the continuous part is
//!
//! ```text
//! ρ_c(λ) = (βd / 2π) · √((λ − λ⁻)(λ⁺ − λ)) / (λ (βd − λ)),   λ ∈ [λ⁻, λ⁺]
//! ```
//!
//! plus an atom `[1 − β]⁺` at zero. Integrals against `ρ_c` are taken in the
//! angle `θ` with `λ = λ⁻ + (λ⁺ − λ⁻) sin²θ`; the square-root factor then
//! cancels against the Jacobian, the integrand becomes an even, `π`-periodic
//! analytic function of `θ`, and the midpoint rule on `[0, π/2]`
//! (Chebyshev–Gauss nodes in `cos 2θ`) converges geometrically.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{NomaError, Result};
use crate::params::DerivedParams;

/// Residual tolerance for the quadratic fixed point.
pub const ROOT_TOLERANCE: f64 = 1e-12;
/// Absolute accuracy target of [`SpectralDensity::integrate`].
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

const MIN_NODES: usize = 64;
const MAX_NODES: usize = 1 << 18;

/// The limiting Stieltjes transform evaluated at `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StieltjesValue {
    pub z: Complex64,
    /// Solution `𝗆(z)` of the inner fixed-point equation.
    pub m_inner: Complex64,
    /// Stieltjes transform of the limiting law of `(1/d)AA†`.
    pub m_outer: Complex64,
}

/// Evaluates the limiting Stieltjes transform at `z`.
///
/// `z` must lie off the support: any `z` with non-zero imaginary part, or a
/// real `z` outside `[λ⁻, λ⁺]` and different from zero.
pub fn stieltjes(params: &DerivedParams, z: Complex64) -> Result<StieltjesValue> {
    stieltjes_branch(params, z, Branch::Physical)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Branch {
    Physical,
    /// The other root of the quadratic; only used for fault injection.
    Flipped,
}

pub(crate) fn stieltjes_branch(
    params: &DerivedParams,
    z: Complex64,
    branch: Branch,
) -> Result<StieltjesValue> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(NomaError::Domain(format!("non-finite evaluation point {z}")));
    }
    if z.im == 0.0 && (z.re == 0.0 || (params.lambda_minus..=params.lambda_plus).contains(&z.re)) {
        return Err(NomaError::Domain(format!(
            "z = {} lies on the support [{}, {}] (or at the origin)",
            z.re, params.lambda_minus, params.lambda_plus
        )));
    }

    let alpha = params.alpha;
    let a = alpha * z;
    let b = z - params.gamma + alpha;
    let mut s = (z - params.lambda_minus).sqrt() * (z - params.lambda_plus).sqrt();
    if branch == Branch::Flipped {
        s = -s;
    }
    // Same root two ways; pick the one without cancellation.
    let plus = -b + s;
    let minus = -b - s;
    let m_inner = if minus.norm() >= plus.norm() {
        2.0 / minus
    } else {
        plus / (2.0 * a)
    };

    let residual = a * m_inner * m_inner + b * m_inner + 1.0;
    let scale = (a * m_inner * m_inner).norm() + (b * m_inner).norm() + 1.0;
    if !(residual.norm() <= ROOT_TOLERANCE * scale) {
        return Err(NomaError::Domain(format!(
            "no admissible root at z = {z}: residual {:.3e}",
            residual.norm()
        )));
    }

    let m_outer = -1.0 / (z - params.beta / (1.0 + alpha * m_inner));
    if !(m_outer.re.is_finite() && m_outer.im.is_finite()) {
        return Err(NomaError::Domain(format!("Stieltjes transform is singular at z = {z}")));
    }
    Ok(StieltjesValue { z, m_inner, m_outer })
}

/// Value of the continuous density at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityEval {
    /// Outside `[λ⁻, λ⁺]`.
    Outside,
    Interior(f64),
    /// At `λ⁻` or `λ⁺`: the one-sided limit, `+∞` where the density has an
    /// inverse-square-root singularity.
    Edge(f64),
}

impl DensityEval {
    pub fn value(self) -> f64 {
        match self {
            DensityEval::Outside => 0.0,
            DensityEval::Interior(v) | DensityEval::Edge(v) => v,
        }
    }

    pub fn is_edge(self) -> bool {
        matches!(self, DensityEval::Edge(_))
    }
}

/// The limiting eigenvalue law of `(1/d)AA†`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralDensity {
    pub params: DerivedParams,
    pub point_mass_at_zero: f64,
}

impl SpectralDensity {
    pub fn new(params: DerivedParams) -> Self {
        Self {
            point_mass_at_zero: params.point_mass_at_zero(),
            params,
        }
    }

    pub fn lambda_minus(&self) -> f64 {
        self.params.lambda_minus
    }

    pub fn lambda_plus(&self) -> f64 {
        self.params.lambda_plus
    }

    /// Continuous part `ρ_c(λ)`; the atom at zero is reported separately.
    pub fn density_at(&self, lambda: f64) -> DensityEval {
        let p = &self.params;
        let (lm, lp) = (p.lambda_minus, p.lambda_plus);
        let bd = p.beta_d as f64;
        if lambda.is_nan() || lambda < lm || lambda > lp {
            return DensityEval::Outside;
        }
        if lambda == lm {
            // (λ − λ⁻)^{1/2} / λ diverges only when λ⁻ = 0
            return DensityEval::Edge(if lm == 0.0 { f64::INFINITY } else { 0.0 });
        }
        if lambda == lp {
            return DensityEval::Edge(if p.gap_above == 0.0 { f64::INFINITY } else { 0.0 });
        }
        let num = ((lambda - lm) * (lp - lambda)).sqrt();
        DensityEval::Interior(bd / (2.0 * PI) * num / (lambda * (bd - lambda)))
    }

    /// Maps an angle to `(λ(θ), ρ_c(λ)·dλ/dθ)`.
    #[inline]
    fn theta_node(&self, theta: f64) -> (f64, f64) {
        let p = &self.params;
        let w = p.lambda_plus - p.lambda_minus;
        let (s, c) = theta.sin_cos();
        let (s2, c2) = (s * s, c * c);
        let lambda = p.lambda_minus + w * s2;
        let above = p.gap_above + w * c2; // βd − λ
        let weight = p.beta_d as f64 / PI * w * w * s2 * c2 / (lambda * above);
        (lambda, weight)
    }

    fn midpoint_sum<F: Fn(f64) -> f64>(&self, f: &F, nodes: usize) -> Result<f64> {
        let h = FRAC_PI_2 / nodes as f64;
        let mut acc = 0.0;
        for j in 0..nodes {
            let (lambda, weight) = self.theta_node((j as f64 + 0.5) * h);
            let v = f(lambda);
            if !v.is_finite() {
                return Err(NomaError::Numerical(format!(
                    "integrand is not finite at lambda = {lambda} (value {v})"
                )));
            }
            acc += weight * v;
        }
        Ok(acc * h)
    }

    /// `∫ f dρ_c` with a fixed number of angular nodes.
    pub fn integrate_continuous_with_nodes<F: Fn(f64) -> f64>(&self, f: F, nodes: usize) -> Result<f64> {
        self.midpoint_sum(&f, nodes.max(1))
    }

    /// `[1−β]⁺·f(0) + ∫ f(λ) ρ_c(λ) dλ`, doubling the node count until two
    /// successive estimates agree well below [`QUADRATURE_TOLERANCE`].
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let atom = if self.point_mass_at_zero > 0.0 {
            let f0 = f(0.0);
            if !f0.is_finite() {
                return Err(NomaError::Numerical(format!(
                    "integrand is not finite at the atom lambda = 0 (value {f0})"
                )));
            }
            self.point_mass_at_zero * f0
        } else {
            0.0
        };

        let mut nodes = MIN_NODES;
        let mut prev = self.midpoint_sum(&f, nodes)?;
        while nodes < MAX_NODES {
            nodes *= 2;
            let cur = self.midpoint_sum(&f, nodes)?;
            if (cur - prev).abs() <= 1e-2 * QUADRATURE_TOLERANCE * cur.abs().max(1.0) {
                return Ok(atom + cur);
            }
            prev = cur;
        }
        Err(NomaError::Numerical(format!(
            "quadrature did not converge with {MAX_NODES} nodes"
        )))
    }

    /// Precomputes the cumulative distribution function.
    pub fn cdf(&self) -> SpectralCdf {
        SpectralCdf::new(*self)
    }
}

pub fn density_at(density: &SpectralDensity, lambda: f64) -> DensityEval {
    density.density_at(lambda)
}

pub fn integrate_against_density<F: Fn(f64) -> f64>(density: &SpectralDensity, f: F) -> Result<f64> {
    density.integrate(f)
}

/// CDF of the limiting law (atom plus integrated `ρ_c`).
///
/// The angular integrand `h(θ)` is even and `π`-periodic, so it is expanded
/// as `Σ c_k cos 2kθ` from its values on the midpoint nodes, and integrated
/// term by term.
#[derive(Debug, Clone)]
pub struct SpectralCdf {
    density: SpectralDensity,
    coeffs: Vec<f64>,
    continuous_mass: f64,
}

impl SpectralCdf {
    const MAX_TERMS: usize = 1 << 14;

    pub fn new(density: SpectralDensity) -> Self {
        let mut m = 128;
        loop {
            let coeffs = Self::cosine_coefficients(&density, m);
            let tail = coeffs[m / 2..].iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
            if tail < 1e-13 || m >= Self::MAX_TERMS {
                let continuous_mass = coeffs[0] * FRAC_PI_2;
                return Self { density, coeffs, continuous_mass };
            }
            m *= 2;
        }
    }

    fn cosine_coefficients(density: &SpectralDensity, m: usize) -> Vec<f64> {
        // φ_j = 2θ_j are Chebyshev–Gauss angles; cos(kφ_j) = T_k(x_j).
        let mut coeffs = vec![0.0; m];
        for j in 0..m {
            let phi = (j as f64 + 0.5) * PI / m as f64;
            let (_, h) = density.theta_node(phi / 2.0);
            let x = phi.cos();
            let (mut t_prev, mut t) = (1.0, x);
            coeffs[0] += h;
            for c in coeffs.iter_mut().skip(1) {
                *c += h * t;
                let next = 2.0 * x * t - t_prev;
                t_prev = t;
                t = next;
            }
        }
        coeffs[0] /= m as f64;
        for c in coeffs.iter_mut().skip(1) {
            *c *= 2.0 / m as f64;
        }
        coeffs
    }

    pub fn density(&self) -> &SpectralDensity {
        &self.density
    }

    /// Mass of the continuous part as resolved by the expansion.
    pub fn continuous_mass(&self) -> f64 {
        self.continuous_mass
    }

    /// `P(Λ ≤ x)`.
    pub fn at(&self, x: f64) -> f64 {
        let p = &self.density.params;
        let atom = self.density.point_mass_at_zero;
        if x < 0.0 {
            return 0.0;
        }
        if x <= p.lambda_minus {
            return atom;
        }
        if x >= p.lambda_plus {
            return atom + self.continuous_mass;
        }
        let w = p.lambda_plus - p.lambda_minus;
        let theta = ((x - p.lambda_minus) / w).sqrt().min(1.0).asin();
        // Σ_{k≥1} c_k sin(2kθ) / (2k) via rotation recurrence.
        let (s1, c1) = (2.0 * theta).sin_cos();
        let (mut sk, mut ck) = (s1, c1);
        let mut acc = self.coeffs[0] * theta;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            acc += c * sk / (2.0 * k as f64);
            let s_next = sk * c1 + ck * s1;
            ck = ck * c1 - sk * s1;
            sk = s_next;
        }
        (atom + acc.clamp(0.0, self.continuous_mass)).min(1.0)
    }

    /// `P(Λ < x)`; differs from [`SpectralCdf::at`] only at the atom.
    pub fn before(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            self.at(x)
        }
    }
}
