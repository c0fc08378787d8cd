//! Decibel helpers.

/// `3dB ≜ 10·log₁₀2`, the unit in which low-SNR slopes and high-SNR
/// power offsets are expressed.
pub const THREE_DB: f64 = 10.0 * std::f64::consts::LOG10_2;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
