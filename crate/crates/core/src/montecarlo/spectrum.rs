use faer::{Mat, Side};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{NomaError, Result};
use crate::spectral::{SpectralCdf, SpectralDensity};

use super::signature::SignatureMatrix;

/// Scalar field the dense Gram matrices are built over: `f64` for real
/// phase schemes, `c64` otherwise.
pub(crate) trait Weight: faer::traits::ComplexField + Copy + Send + Sync {
    fn from_weight(w: Complex64) -> Self;
    fn zero_value() -> Self;
    /// `a · conj(b)`
    fn w_mul_conj(a: Self, b: Self) -> Self;
    fn w_mul(a: Self, b: Self) -> Self;
    fn w_add(a: Self, b: Self) -> Self;
    fn w_scale(a: Self, s: f64) -> Self;
    fn w_norm_sqr(a: Self) -> f64;
}

impl Weight for f64 {
    fn from_weight(w: Complex64) -> Self {
        w.re
    }
    fn zero_value() -> Self {
        0.0
    }
    fn w_mul_conj(a: Self, b: Self) -> Self {
        a * b
    }
    fn w_mul(a: Self, b: Self) -> Self {
        a * b
    }
    fn w_add(a: Self, b: Self) -> Self {
        a + b
    }
    fn w_scale(a: Self, s: f64) -> Self {
        a * s
    }
    fn w_norm_sqr(a: Self) -> f64 {
        a * a
    }
}

impl Weight for Complex64 {
    fn from_weight(w: Complex64) -> Self {
        w
    }
    fn zero_value() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn w_mul_conj(a: Self, b: Self) -> Self {
        a * b.conj()
    }
    fn w_mul(a: Self, b: Self) -> Self {
        a * b
    }
    fn w_add(a: Self, b: Self) -> Self {
        a + b
    }
    fn w_scale(a: Self, s: f64) -> Self {
        a * s
    }
    fn w_norm_sqr(a: Self) -> f64 {
        a.norm_sqr()
    }
}

/// `scale · AA†` (N × N).
pub(crate) fn gram_rows<T: Weight>(a: &SignatureMatrix, scale: f64) -> Mat<T> {
    let mut g = Mat::<T>::from_fn(a.n(), a.n(), |_, _| T::zero_value());
    for k in 0..a.k() {
        let col: Vec<(usize, T)> = a.column(k).map(|(r, w)| (r, T::from_weight(w))).collect();
        for &(i, wi) in &col {
            for &(j, wj) in &col {
                g[(i, j)] = T::w_add(g[(i, j)], T::w_scale(T::w_mul_conj(wi, wj), scale));
            }
        }
    }
    g
}

/// `scale · A†A` (K × K).
pub(crate) fn gram_cols<T: Weight>(a: &SignatureMatrix, scale: f64) -> Mat<T> {
    let mut g = Mat::<T>::from_fn(a.k(), a.k(), |_, _| T::zero_value());
    for row in a.rows() {
        let row: Vec<(usize, T)> = row.into_iter().map(|(c, w)| (c, T::from_weight(w))).collect();
        for &(k, wk) in &row {
            for &(l, wl) in &row {
                // (A†A)_kl = Σ_n conj(A_nk) A_nl
                g[(k, l)] = T::w_add(g[(k, l)], T::w_scale(T::w_mul_conj(wl, wk), scale));
            }
        }
    }
    g
}

fn eigenvalues_of<T>(a: &SignatureMatrix) -> Result<Vec<f64>>
where
    T: Weight + faer::traits::ComplexField<Real = f64>,
{
    let scale = 1.0 / a.d() as f64;
    let g = if a.k() >= a.n() { gram_rows::<T>(a, scale) } else { gram_cols::<T>(a, scale) };
    g.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| NomaError::Numerical(format!("eigensolver failed: {e:?}")))
}

/// Eigenvalues of `(1/d)AA†`, ascending, length `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSpectrum {
    pub eigenvalues: Vec<f64>,
    pub beta: f64,
}

impl EmpiricalSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `(1/N) Σ λᵢᵖ`
    pub fn moment(&self, p: i32) -> f64 {
        self.eigenvalues.iter().map(|l| l.powi(p)).sum::<f64>() / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// Density histogram on `[lo, hi]` as `(bin center, density)` pairs.
    pub fn histogram(&self, lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64)> {
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &l in &self.eigenvalues {
            if l >= lo && l <= hi {
                let b = (((l - lo) / width) as usize).min(bins - 1);
                counts[b] += 1;
            }
        }
        let total = self.len() as f64 * width;
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (lo + (i as f64 + 0.5) * width, c as f64 / total))
            .collect()
    }
}

/// Dense Hermitian eigendecomposition on the smaller Gram side; when
/// `K < N` the `N − K` structural zeros are padded in.
pub fn empirical_spectrum(a: &SignatureMatrix) -> Result<EmpiricalSpectrum> {
    let mut ev = if a.is_real() { eigenvalues_of::<f64>(a)? } else { eigenvalues_of::<Complex64>(a)? };
    for l in &mut ev {
        *l = l.max(0.0);
    }
    let mut eigenvalues = vec![0.0; a.n() - ev.len()];
    eigenvalues.extend(ev);
    eigenvalues.sort_by(f64::total_cmp);
    Ok(EmpiricalSpectrum { eigenvalues, beta: a.beta() })
}

/// Sup-norm distance between the empirical CDF and the limiting CDF.
pub fn ks_distance(spectrum: &EmpiricalSpectrum, cdf: &SpectralCdf) -> f64 {
    let ev = &spectrum.eigenvalues;
    let n = ev.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < ev.len() {
        let x = ev[i];
        let mut j = i;
        while j < ev.len() && ev[j] == x {
            j += 1;
        }
        // Empirical CDF jumps from i/n to j/n at x.
        worst = worst.max((cdf.before(x) - i as f64 / n).abs());
        worst = worst.max((cdf.at(x) - j as f64 / n).abs());
        i = j;
    }
    if ev.first().is_none_or(|&x| x > 0.0) {
        worst = worst.max(cdf.at(0.0));
    }
    worst
}

/// [`ks_distance`] against the CDF of `density`.
pub fn ks_distance_to(spectrum: &EmpiricalSpectrum, density: &SpectralDensity) -> f64 {
    ks_distance(spectrum, &density.cdf())
}

/// First two moments of `(1/d)AA†` from the sparse structure:
/// `(1/N) tr(·)` and `(1/N) tr(·²)`.
pub fn trace_moments(a: &SignatureMatrix) -> (f64, f64) {
    let scale = 1.0 / a.d() as f64;
    let n = a.n();
    let rows = a.rows();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    let mut touched = Vec::new();
    let (mut tr1, mut tr2) = (0.0, 0.0);
    for row in &rows {
        for &(k, w) in row {
            for (m, wm) in a.column(k) {
                if acc[m] == Complex64::new(0.0, 0.0) {
                    touched.push(m);
                }
                acc[m] += w * wm.conj();
            }
        }
        for &(_, w) in row {
            tr1 += w.norm_sqr();
        }
        for &m in &touched {
            tr2 += acc[m].norm_sqr();
            acc[m] = Complex64::new(0.0, 0.0);
        }
        touched.clear();
    }
    (tr1 * scale / n as f64, tr2 * scale * scale / n as f64)
}
