//! Wave-plate factor of the balanced ellipsometry detection and the three
//! real coefficients that weight the vacuum and source-radiation terms.

use std::f64::consts::{PI, SQRT_2, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Reduce an angle to `[0, 2 pi)` and check `cos(theta) <= 0`.
///
/// A small slack absorbs the rounding in inputs such as `1.5708`.
pub fn normalize_angle(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::AngleDomain { theta });
    }
    let t = theta.rem_euclid(TAU);
    if t.cos() > 1e-4 {
        return Err(Error::AngleDomain { theta });
    }
    Ok(t)
}

/// `P(theta) = sqrt(-cos theta) + i sqrt(2) cos(theta / 2)`.
pub fn waveplate_factor(theta: f64) -> Result<Complex64> {
    let t = normalize_angle(theta)?;
    let re = (-t.cos()).max(0.0).sqrt();
    let im = SQRT_2 * (0.5 * t).cos();
    Ok(Complex64::new(re, im))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavePlateCoeffs {
    pub p1: Complex64,
    pub p2: Complex64,
    /// `Im p1 * Im p2`, weight of the vacuum correlation term.
    pub p_vac: f64,
    /// `Im(p1 p2)`, weight of the reactive response term.
    pub p_s_prime: f64,
    /// `Im(p1 conj(p2))`, weight of the dissipative response term.
    pub p_s_dprime: f64,
}

impl WavePlateCoeffs {
    pub fn from_factors(p1: Complex64, p2: Complex64) -> Self {
        Self {
            p1,
            p2,
            p_vac: p1.im * p2.im,
            p_s_prime: (p1 * p2).im,
            p_s_dprime: (p1 * p2.conj()).im,
        }
    }
}

pub fn coefficients(theta1: f64, theta2: f64) -> Result<WavePlateCoeffs> {
    Ok(WavePlateCoeffs::from_factors(
        waveplate_factor(theta1)?,
        waveplate_factor(theta2)?,
    ))
}

/// Angle pairs that isolate one contribution each.
pub mod settings {
    use super::PI;

    pub const VACUUM: (f64, f64) = (PI / 2.0, PI / 2.0);
    pub const SOURCE: (f64, f64) = (PI / 2.0, PI);
    pub const SOURCE_SWAPPED: (f64, f64) = (PI, PI / 2.0);
    pub const REACTIVE_PLUS: (f64, f64) = (2.0 * PI / 3.0, 2.0 * PI / 3.0);
    pub const REACTIVE_MINUS: (f64, f64) = (4.0 * PI / 3.0, 4.0 * PI / 3.0);
}
