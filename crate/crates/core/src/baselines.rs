//! Reference curves, fixed-`Eb/N0` operating points, and load sweeps.
//!
//! At a fixed `Eb/N0` the rate `R` and the SNR are tied by
//! `β·snr = R·Eb/N0`, so a scheme with rate function `C(snr)` operates at
//! the fixed point `R = C(R·Eb/N0/β)`.

use std::f64::consts::{LN_2, LOG2_E};

use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::{capacity_lmmse, capacity_optimum, eta, kernel_f};
use crate::error::{NomaError, Result};
use crate::params::{Ensemble, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SparseOpt,
    SparseLmmse,
    RsCdmaOpt,
    RsCdmaLmmse,
    Orthogonal,
    CoverWyner,
    TimeshareEnvelope,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::SparseOpt => "sparse_opt",
            Scheme::SparseLmmse => "sparse_lmmse",
            Scheme::RsCdmaOpt => "rs_cdma_opt",
            Scheme::RsCdmaLmmse => "rs_cdma_lmmse",
            Scheme::Orthogonal => "orthogonal",
            Scheme::CoverWyner => "cover_wyner",
            Scheme::TimeshareEnvelope => "timeshare_envelope",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dense (non-sparse) reference schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Baseline {
    RsCdmaOpt,
    RsCdmaLmmse,
    Orthogonal,
    CoverWyner,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [
        Baseline::RsCdmaOpt,
        Baseline::RsCdmaLmmse,
        Baseline::Orthogonal,
        Baseline::CoverWyner,
    ];

    pub fn scheme(self) -> Scheme {
        match self {
            Baseline::RsCdmaOpt => Scheme::RsCdmaOpt,
            Baseline::RsCdmaLmmse => Scheme::RsCdmaLmmse,
            Baseline::Orthogonal => Scheme::Orthogonal,
            Baseline::CoverWyner => Scheme::CoverWyner,
        }
    }

    pub fn supports(self, beta: f64) -> bool {
        self != Baseline::Orthogonal || beta <= 1.0
    }
}

/// Spectral efficiency of a dense reference scheme at load `beta`.
pub fn baseline_rate(scheme: Baseline, beta: f64, snr: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(NomaError::Domain(format!("load must be positive (got {beta})")));
    }
    if !(snr >= 0.0 && snr.is_finite()) {
        return Err(NomaError::Domain(format!("snr must be finite and >= 0 (got {snr})")));
    }
    if snr == 0.0 {
        return if scheme.supports(beta) {
            Ok(0.0)
        } else {
            Err(orthogonal_overload(beta))
        };
    }
    let rate = match scheme {
        Baseline::CoverWyner => (beta * snr).ln_1p() / LN_2,
        Baseline::Orthogonal => {
            if beta > 1.0 {
                return Err(orthogonal_overload(beta));
            }
            beta * snr.ln_1p() / LN_2
        }
        // 1 + snr − F(snr, β)/4 = η(β·snr, 1/β)
        Baseline::RsCdmaLmmse => beta * eta(beta * snr, 1.0 / beta).1.ln_1p() / LN_2,
        Baseline::RsCdmaOpt => {
            let per_user = eta(beta * snr, 1.0 / beta).1.ln_1p();
            let sum = eta(snr, beta).1.ln_1p();
            (beta * per_user + sum) / LN_2 - kernel_f(snr, beta) / (4.0 * snr) * LOG2_E
        }
    };
    Ok(rate.max(0.0))
}

fn orthogonal_overload(beta: f64) -> NomaError {
    NomaError::Domain(format!("orthogonal transmission requires beta <= 1 (got {beta})"))
}

/// Solution of `R = rate_fn(R·Eb/N0/β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolvedRate {
    pub rate: f64,
    pub snr: f64,
    /// `Eb/N0 ≤ ln 2`: no positive rate exists.
    pub below_threshold: bool,
}

/// Finds the positive fixed point `R = rate_fn(R·ebn0/β)` by doubling an
/// upper bracket from one and bisecting.
pub fn solve_rate_at_ebn0<F>(rate_fn: F, beta: f64, ebn0: f64) -> Result<SolvedRate>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(beta > 0.0) {
        return Err(NomaError::Domain(format!("load must be positive (got {beta})")));
    }
    if !(ebn0 > LN_2) {
        return Ok(SolvedRate { rate: 0.0, snr: 0.0, below_threshold: true });
    }
    let gap = |r: f64| -> Result<f64> { Ok(rate_fn(r * ebn0 / beta)? - r) };

    let mut hi = 1.0;
    while gap(hi)? >= 0.0 {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(NomaError::Numerical(format!(
                "no sign change of R - C(R*ebn0/beta) below R = {hi:e}"
            )));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rate = 0.5 * (lo + hi);
    let snr = rate * ebn0 / beta;
    let residual = (rate_fn(snr)? - rate).abs();
    if !(residual < 1e-10) {
        return Err(NomaError::Numerical(format!("fixed-point residual {residual:e}")));
    }
    Ok(SolvedRate { rate, snr, below_threshold: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub beta: f64,
    pub d: Option<u32>,
    pub beta_d: Option<u32>,
    pub scheme: Scheme,
    pub rate: f64,
    /// Linear `Eb/N0`.
    pub ebn0: f64,
    /// Linear SNR at the operating point.
    pub snr: f64,
    /// For envelope rows, the scheme whose lattice points generate it.
    pub envelope_of: Option<Scheme>,
}

/// Rows of a load sweep, grouped by scheme and increasing in `β` within
/// each scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub d: Option<u32>,
    pub ebn0: f64,
    pub rows: Vec<RatePoint>,
}

impl SweepTable {
    pub fn series(&self, scheme: Scheme) -> Vec<RatePoint> {
        self.rows.iter().filter(|r| r.scheme == scheme).copied().collect()
    }

    /// Envelope rows generated by `scheme`.
    pub fn envelope(&self, scheme: Scheme) -> Vec<RatePoint> {
        self.rows.iter().filter(|r| r.envelope_of == Some(scheme)).copied().collect()
    }

    /// Rate of `scheme` at exactly `beta`, if present.
    pub fn rate(&self, scheme: Scheme, beta: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && (r.beta - beta).abs() < 1e-12)
            .map(|r| r.rate)
    }
}

/// Upper concave envelope of `(β, R)` points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    /// The retained generators, increasing in `β`.
    pub vertices: Vec<RatePoint>,
    /// Fewer than two distinct loads were supplied; `vertices` is the input.
    pub degenerate: bool,
}

impl Envelope {
    /// Envelope value at `beta` by linear interpolation between generators.
    pub fn rate_at(&self, beta: f64) -> Option<f64> {
        let v = &self.vertices;
        let first = v.first()?;
        let last = v.last()?;
        if beta < first.beta - 1e-12 || beta > last.beta + 1e-12 {
            return None;
        }
        if v.len() == 1 {
            return Some(first.rate);
        }
        let i = v.partition_point(|p| p.beta < beta).clamp(1, v.len() - 1);
        let (a, b) = (&v[i - 1], &v[i]);
        let t = (beta - a.beta) / (b.beta - a.beta);
        Some(a.rate + t * (b.rate - a.rate))
    }

    /// Envelope rows at the given loads, as [`Scheme::TimeshareEnvelope`] points.
    pub fn sample(&self, betas: &[f64], ebn0: f64, d: Option<u32>) -> Vec<RatePoint> {
        let envelope_of = self.vertices.first().map(|v| v.scheme);
        betas
            .iter()
            .filter_map(|&beta| {
                self.rate_at(beta).map(|rate| RatePoint {
                    beta,
                    d,
                    beta_d: None,
                    scheme: Scheme::TimeshareEnvelope,
                    rate,
                    ebn0,
                    snr: rate * ebn0 / beta,
                    envelope_of,
                })
            })
            .collect()
    }
}

/// Time-sharing closure of a set of operating points.
pub fn timeshare_envelope(points: &[RatePoint]) -> Envelope {
    let mut sorted: Vec<RatePoint> = points.to_vec();
    sorted.sort_by(|a, b| a.beta.total_cmp(&b.beta).then(b.rate.total_cmp(&a.rate)));
    sorted.dedup_by(|later, kept| later.beta == kept.beta);
    if sorted.len() < 2 {
        return Envelope { vertices: points.to_vec(), degenerate: true };
    }
    let mut hull: Vec<RatePoint> = Vec::with_capacity(sorted.len());
    for p in sorted {
        while hull.len() >= 2 {
            let (a, b) = (&hull[hull.len() - 2], &hull[hull.len() - 1]);
            let cross = (b.beta - a.beta) * (p.rate - a.rate) - (b.rate - a.rate) * (p.beta - a.beta);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    Envelope { vertices: hull, degenerate: false }
}

/// Envelope over the points of `scheme` pooled from several tables (e.g.
/// different `d`), i.e. time sharing across column degrees as well.
pub fn pooled_envelope(tables: &[SweepTable], scheme: Scheme) -> Envelope {
    let pts: Vec<RatePoint> = tables.iter().flat_map(|t| t.series(scheme)).collect();
    timeshare_envelope(&pts)
}

fn solve_sparse(ensemble: Ensemble, scheme: Scheme, ebn0: f64) -> Result<RatePoint> {
    let rate_fn = |snr: f64| -> Result<f64> {
        let cfg = SystemConfig::from_ensemble(ensemble, snr)?;
        Ok(match scheme {
            Scheme::SparseOpt => capacity_optimum(&cfg)?.spectral_efficiency,
            _ => capacity_lmmse(&cfg)?.spectral_efficiency,
        })
    };
    let beta = ensemble.beta();
    let s = solve_rate_at_ebn0(rate_fn, beta, ebn0)?;
    Ok(RatePoint {
        beta,
        d: Some(ensemble.d()),
        beta_d: Some(ensemble.beta_d()),
        scheme,
        rate: s.rate,
        ebn0,
        snr: s.snr,
        envelope_of: None,
    })
}

fn solve_baseline(baseline: Baseline, beta: f64, ebn0: f64) -> Result<RatePoint> {
    let s = solve_rate_at_ebn0(|snr| baseline_rate(baseline, beta, snr), beta, ebn0)?;
    Ok(RatePoint {
        beta,
        d: None,
        beta_d: None,
        scheme: baseline.scheme(),
        rate: s.rate,
        ebn0,
        snr: s.snr,
        envelope_of: None,
    })
}

/// Admissible row degrees `βd ≥ 2` with `β` inside `[beta_min, beta_max]`.
pub fn lattice(d: u32, beta_min: f64, beta_max: f64) -> Vec<u32> {
    let lo = ((beta_min * d as f64) - 1e-9).ceil().max(2.0) as u32;
    let hi = ((beta_max * d as f64) + 1e-9).floor();
    if hi < lo as f64 {
        return Vec::new();
    }
    (lo..=hi as u32).collect()
}

/// Sparse closed forms at the lattice points, their envelopes, and the
/// dense baselines at every grid load, all at a fixed `Eb/N0` (linear).
///
/// Sparse closed forms are only evaluated at integer `βd`; intermediate
/// loads are covered by the time-sharing envelope.
pub fn sweep_load(d: u32, ebn0: f64, beta_grid: &[f64]) -> Result<SweepTable> {
    Ensemble::new(d, 2)?;
    if beta_grid.is_empty() {
        return Err(NomaError::Config("empty load grid".into()));
    }
    if beta_grid.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(NomaError::Config("loads must be positive and finite".into()));
    }
    if beta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NomaError::Config("load grid must be strictly increasing".into()));
    }
    let (bmin, bmax) = (beta_grid[0], beta_grid[beta_grid.len() - 1]);
    let lat = lattice(d, bmin, bmax);
    if lat.is_empty() {
        return Err(NomaError::Config(format!(
            "no admissible beta_d >= 2 with beta in [{bmin}, {bmax}] for d = {d}"
        )));
    }

    let mut rows = Vec::new();
    for scheme in [Scheme::SparseOpt, Scheme::SparseLmmse] {
        let pts = lat
            .par_iter()
            .map(|&bd| solve_sparse(Ensemble::new(d, bd)?, scheme, ebn0))
            .collect::<Result<Vec<_>>>()?;
        rows.extend(pts);
    }

    let lat_betas: Vec<f64> = lat.iter().map(|&bd| bd as f64 / d as f64).collect();
    let (lo, hi) = (lat_betas[0], lat_betas[lat_betas.len() - 1]);
    let mut env_betas: Vec<f64> = lat_betas
        .iter()
        .copied()
        .chain(beta_grid.iter().copied().filter(|b| *b >= lo && *b <= hi))
        .collect();
    env_betas.sort_by(f64::total_cmp);
    env_betas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    for scheme in [Scheme::SparseOpt, Scheme::SparseLmmse] {
        let generators: Vec<RatePoint> = rows.iter().filter(|r| r.scheme == scheme).copied().collect();
        rows.extend(timeshare_envelope(&generators).sample(&env_betas, ebn0, Some(d)));
    }

    for baseline in Baseline::ALL {
        let pts = beta_grid
            .par_iter()
            .filter(|&&b| baseline.supports(b))
            .map(|&b| solve_baseline(baseline, b, ebn0))
            .collect::<Result<Vec<_>>>()?;
        rows.extend(pts);
    }
    Ok(SweepTable { d: Some(d), ebn0, rows })
}
