use std::f64::consts::TAU;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{NomaError, Result};
use crate::params::Ensemble;

use super::trial_rng;

/// How the unit-modulus weights on the nonzero positions are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseScheme {
    /// I.i.d. uniform phases on the unit circle.
    Uniform,
    /// Equiprobable ±1.
    #[default]
    Binary,
    /// All weights +1.
    Repetition,
}

impl PhaseScheme {
    pub const ALL: [PhaseScheme; 3] = [PhaseScheme::Uniform, PhaseScheme::Binary, PhaseScheme::Repetition];

    pub fn as_str(self) -> &'static str {
        match self {
            PhaseScheme::Uniform => "uniform",
            PhaseScheme::Binary => "binary",
            PhaseScheme::Repetition => "repetition",
        }
    }

    pub fn is_real(self) -> bool {
        self != PhaseScheme::Uniform
    }

    fn draw(self, rng: &mut ChaCha8Rng) -> Complex64 {
        match self {
            PhaseScheme::Uniform => Complex64::from_polar(1.0, TAU * rng.random::<f64>()),
            PhaseScheme::Binary => Complex64::new(if rng.random_bool(0.5) { 1.0 } else { -1.0 }, 0.0),
            PhaseScheme::Repetition => Complex64::new(1.0, 0.0),
        }
    }
}

impl FromStr for PhaseScheme {
    type Err = NomaError;

    fn from_str(s: &str) -> Result<Self> {
        PhaseScheme::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| NomaError::Config(format!("unknown phase scheme '{s}' (uniform, binary, repetition)")))
    }
}

impl std::fmt::Display for PhaseScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sparse `N × K` signature matrix with exactly `d` nonzeros per column and
/// `βd` per row. Column `k` occupies `rows[k·d .. (k+1)·d]`, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureMatrix {
    n: usize,
    k: usize,
    d: usize,
    beta_d: usize,
    scheme: PhaseScheme,
    rows: Vec<u32>,
    weights: Vec<Complex64>,
}

impl SignatureMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn beta_d(&self) -> usize {
        self.beta_d
    }

    pub fn scheme(&self) -> PhaseScheme {
        self.scheme
    }

    pub fn beta(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// All weights are real (binary or repetition phases).
    pub fn is_real(&self) -> bool {
        self.scheme.is_real()
    }

    /// `(row, weight)` pairs of column `k`.
    pub fn column(&self, k: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = k * self.d..(k + 1) * self.d;
        self.rows[span.clone()].iter().map(|&r| r as usize).zip(self.weights[span].iter().copied())
    }

    /// `(column, weight)` pairs of every row.
    pub fn rows(&self) -> Vec<Vec<(usize, Complex64)>> {
        let mut out = vec![Vec::with_capacity(self.beta_d); self.n];
        for k in 0..self.k {
            for (r, w) in self.column(k) {
                out[r].push((k, w));
            }
        }
        out
    }

    pub fn column_degrees(&self) -> Vec<usize> {
        (0..self.k).map(|k| self.column(k).count()).collect()
    }

    pub fn row_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &r in &self.rows {
            deg[r as usize] += 1;
        }
        deg
    }

    /// No repeated row within any column.
    pub fn is_simple(&self) -> bool {
        self.rows.chunks(self.d).all(|c| c.windows(2).all(|w| w[0] < w[1]))
    }

    /// `max |(|A_nk| − 1)|` over the nonzeros.
    pub fn max_modulus_error(&self) -> f64 {
        self.weights.iter().map(|w| (w.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Dense row-major copy, for tests and small inspections.
    #[allow(clippy::needless_range_loop)]
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut a = vec![vec![Complex64::new(0.0, 0.0); self.k]; self.n];
        for k in 0..self.k {
            for (r, w) in self.column(k) {
                a[r][k] = w;
            }
        }
        a
    }
}

/// Number of users `K = N·βd/d` if `(N, d, βd)` admits a simple
/// `(βd, d)`-regular bipartite pattern.
pub fn users_for(n: usize, d: u32, beta_d: u32) -> Result<usize> {
    Ensemble::new(d, beta_d)?;
    let (d, bd) = (d as usize, beta_d as usize);
    if n == 0 || !(n * bd).is_multiple_of(d) {
        return Err(NomaError::Config(format!(
            "N*beta_d must be divisible by d (N = {n}, d = {d}, beta_d = {bd})"
        )));
    }
    let k = n * bd / d;
    if n < d || k < bd {
        return Err(NomaError::Config(format!(
            "no simple pattern: need N >= d and K >= beta_d (N = {n}, K = {k}, d = {d}, beta_d = {bd})"
        )));
    }
    Ok(k)
}

/// Smallest admissible `N ≥ target`.
pub fn feasible_n(target: usize, d: u32, beta_d: u32) -> Result<usize> {
    Ensemble::new(d, beta_d)?;
    let step = d as usize / gcd(d as usize, beta_d as usize);
    let mut n = target.max(1).div_ceil(step) * step;
    while users_for(n, d, beta_d).is_err() {
        n += step;
    }
    Ok(n)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

const MAX_RESAMPLES: usize = 50;

/// Draws a `(βd, d)`-regular signature matrix; identical seeds give
/// identical matrices.
///
/// The pattern comes from the configuration model, with multi-edges removed
/// by random 2-swaps. This is close to, but not exactly, uniform over simple
/// regular bipartite graphs.
pub fn generate_signature(n: usize, d: u32, beta_d: u32, scheme: PhaseScheme, seed: u64) -> Result<SignatureMatrix> {
    generate_with_rng(n, d, beta_d, scheme, &mut trial_rng(seed, 0))
}

/// Configuration-model stub matching followed by random 2-swap repair of
/// repeated positions. The repair is capped at `100·E` swap attempts, after
/// which the matching is redrawn.
pub(crate) fn generate_with_rng(
    n: usize,
    d: u32,
    beta_d: u32,
    scheme: PhaseScheme,
    rng: &mut ChaCha8Rng,
) -> Result<SignatureMatrix> {
    let k = users_for(n, d, beta_d)?;
    let (d, bd) = (d as usize, beta_d as usize);
    let edges = k * d;
    let cap = 100 * edges;

    let mut rows: Vec<u32> = (0..n as u32).flat_map(|r| std::iter::repeat_n(r, bd)).collect();
    for _attempt in 0..MAX_RESAMPLES {
        rows.shuffle(rng);
        if repair(&mut rows, d, cap, rng) {
            for col in rows.chunks_mut(d) {
                col.sort_unstable();
            }
            let weights = (0..edges).map(|_| scheme.draw(rng)).collect();
            return Ok(SignatureMatrix { n, k, d, beta_d: bd, scheme, rows, weights });
        }
    }
    Err(NomaError::Generation(format!(
        "no simple pattern after {MAX_RESAMPLES} matchings with {cap} repair swaps each (N = {n}, K = {k}, d = {d}, beta_d = {bd})"
    )))
}

fn repair(rows: &mut [u32], d: usize, cap: usize, rng: &mut ChaCha8Rng) -> bool {
    let edges = rows.len();
    let is_repeat = |rows: &[u32], e: usize| {
        let c = e / d;
        (c * d..(c + 1) * d).any(|f| f != e && rows[f] == rows[e])
    };
    let mut bad: Vec<usize> = (0..edges).filter(|&e| is_repeat(rows, e)).collect();
    let mut attempts = 0;
    while let Some(&e1) = bad.last() {
        if !is_repeat(rows, e1) {
            bad.pop();
            continue;
        }
        if attempts == cap {
            return false;
        }
        attempts += 1;
        let e2 = rng.random_range(0..edges);
        let (c1, c2) = (e1 / d, e2 / d);
        if c1 == c2 {
            continue;
        }
        let (r1, r2) = (rows[e1], rows[e2]);
        let clash1 = (c1 * d..(c1 + 1) * d).any(|f| f != e1 && rows[f] == r2);
        let clash2 = (c2 * d..(c2 + 1) * d).any(|f| f != e2 && rows[f] == r1);
        if !clash1 && !clash2 {
            rows.swap(e1, e2);
            bad.pop();
        }
    }
    true
}
