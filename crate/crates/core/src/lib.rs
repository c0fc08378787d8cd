//! Large-system spectral efficiency of regular sparse NOMA.
//!
//! A regular sparse NOMA system multiplexes `K` users over `N` orthogonal
//! resources through an `N × K` signature matrix `A` whose columns carry
//! exactly `d` unit-modulus non-zeros and whose rows carry exactly `βd`.
//! As `N → ∞` the eigenvalue distribution of `(1/d)AA†` converges to a
//! deterministic law with a closed-form density, and both the optimum
//! (sum-capacity) and LMMSE spectral efficiencies have explicit
//! expressions.
//!
//! The crate is organised as follows:
//!
//! - [`params`]: the admissible ensemble `(d, βd)`, SNR, and the derived
//!   constants `α, γ, β̃, ζ, λ±`, computed from exact rationals.
//! - [`spectral`]: the limiting Stieltjes transform, the spectral density
//!   and quadrature/CDF against it.
//! - [`capacity`]: the `F`/`G` kernels and the closed-form optimum and
//!   LMMSE spectral efficiencies, plus the integral route used as an oracle.
//! - [`asymptotics`]: low- and high-SNR parameters of both receivers.
//! - [`baselines`]: dense RS-CDMA, orthogonal and Cover–Wyner references,
//!   the fixed-`Eb/N0` rate solver, time-sharing envelopes and load sweeps.
//! - [`montecarlo`]: finite-`N` signature sampling, empirical spectra and
//!   capacity estimates.
//! - [`validation`]: the invariant suite run by `sparse-noma validate`.
//!
//! ```
//! use sparse_noma::{capacity, SystemConfig};
//!
//! let cfg = SystemConfig::new(2, 2, 10.0).unwrap();
//! let c = capacity::capacity_optimum(&cfg).unwrap();
//! assert!((c.spectral_efficiency - ((11.0 + 21f64.sqrt()) / 2.0).log2()).abs() < 1e-12);
//! ```

// NaN inputs must fail the `!(x > 0.0)` style guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod baselines;
pub mod capacity;
pub mod error;
pub mod montecarlo;
pub mod params;
pub mod spectral;
pub mod units;
pub mod validation;

pub use error::{NomaError, Result};
pub use params::{DerivedParams, Ensemble, SystemConfig};
pub use spectral::{SpectralDensity, StieltjesValue};
