//! Internal unit system.
//!
//! Lengths are in micrometers, times in femtoseconds and angular
//! frequencies in rad/fs. The vacuum permittivity and the reduced Planck
//! constant are both set to one, which fixes one global arbitrary scale for
//! every signal contribution. The nonlinear susceptibility is also one; it
//! enters every contribution quadratically.

use std::f64::consts::PI;

/// Speed of light in um/fs.
pub const C: f64 = 0.299_792_458;

/// Reduced Planck constant in internal units.
pub const HBAR: f64 = 1.0;

pub const EPS0: f64 = 1.0;

/// Vacuum permeability, `1 / (eps0 c^2)`.
pub const MU0: f64 = 1.0 / (EPS0 * C * C);

/// rad/fs per THz (1 THz = 2 pi * 1e-3 rad/fs).
pub const RAD_PER_FS_PER_THZ: f64 = 2.0 * PI * 1e-3;

pub fn thz_to_rad_fs(f_thz: f64) -> f64 {
    f_thz * RAD_PER_FS_PER_THZ
}

pub fn rad_fs_to_thz(omega: f64) -> f64 {
    omega / RAD_PER_FS_PER_THZ
}

/// Rescale a value by a power of ten through its shortest decimal form.
///
/// Converting `2e-4` m to um by multiplying with `1e6` does not always land
/// on the f64 nearest to `200`; shifting the decimal exponent of the
/// shortest round-trip representation does, so SI-labelled and
/// internal-labelled inputs for the same experiment are bitwise equal.
pub fn shift_decimal(value: f64, exponent: i32) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    let repr = format!("{value:e}");
    let (mantissa, exp) = repr.split_once('e').expect("LowerExp always has an exponent");
    let exp: i32 = exp.parse().expect("LowerExp exponent is an integer");
    format!("{mantissa}e{}", exp + exponent)
        .parse()
        .expect("shifted decimal parses")
}

pub fn meters_to_um(x: f64) -> f64 {
    shift_decimal(x, 6)
}

pub fn seconds_to_fs(x: f64) -> f64 {
    shift_decimal(x, 15)
}
