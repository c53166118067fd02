//! Probe-pulse envelopes inside the crystal and their space-time
//! cross-correlation (the overlap kernel).
//!
//! Every pulse envelope factorises as
//!
//! ```text
//! L(r, t) = X(x - x_i) Y(y - y_i) Z(z) T(t - t_i - (z + L/2) n_g / c)
//! ```
//!
//! with each factor a normalised 1-D density and `Z` the crystal gate on
//! `[-L/2, L/2]`. The shear between `z` and the retarded time survives the
//! correlation, so the overlap kernel is
//!
//! ```text
//! K(rho, tau) = Cx(rho_x - dx) Cy(rho_y - dy) Cz(rho_z) Ct(tau - dt - rho_z n_g / c)
//! ```
//!
//! where every `C` is the 1-D correlation of the two pulses' factors.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::C;

/// FWHM to standard deviation of a Gaussian.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * LN_2).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    #[serde(rename = "rect")]
    Rectangular,
    #[serde(rename = "gauss")]
    Gaussian,
}

/// One normalised 1-D factor of an envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// Uniform density of full width `width`.
    Box { width: f64 },
    /// Gaussian density with full width at half maximum `fwhm`.
    Gauss { fwhm: f64 },
}

impl Gate {
    pub fn value(&self, s: f64) -> f64 {
        match *self {
            Gate::Box { width } => {
                if s.abs() <= 0.5 * width {
                    1.0 / width
                } else {
                    0.0
                }
            }
            Gate::Gauss { fwhm } => gaussian(s, fwhm_to_sigma(fwhm)),
        }
    }
}

fn gaussian(s: f64, sigma: f64) -> f64 {
    (-0.5 * (s / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Correlation of two 1-D gates, an even normalised density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// Correlation of two boxes of widths `a` and `b`: a trapezoid (a
    /// triangle of half-width `a` when `a == b`).
    Boxes { a: f64, b: f64 },
    /// Correlation of two Gaussians, itself Gaussian.
    Gauss { sigma: f64 },
}

impl Profile {
    pub fn correlate(g1: Gate, g2: Gate) -> Result<Self> {
        match (g1, g2) {
            (Gate::Box { width: a }, Gate::Box { width: b }) => Ok(Profile::Boxes { a, b }),
            (Gate::Gauss { fwhm: f1 }, Gate::Gauss { fwhm: f2 }) => Ok(Profile::Gauss {
                sigma: fwhm_to_sigma(f1).hypot(fwhm_to_sigma(f2)),
            }),
            _ => Err(Error::Unsupported("both pulses must share one envelope shape".into())),
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match *self {
            Profile::Boxes { a, b } => {
                let overlap = (0.5 * (a + b) - s.abs()).clamp(0.0, a.min(b));
                overlap / (a * b)
            }
            Profile::Gauss { sigma } => gaussian(s, sigma),
        }
    }

    /// `int value(s) e^{i w s} ds`, real because the profile is even.
    pub fn fourier(&self, omega: f64) -> f64 {
        match *self {
            Profile::Boxes { a, b } => sinc(0.5 * omega * a) * sinc(0.5 * omega * b),
            Profile::Gauss { sigma } => (-0.5 * (omega * sigma).powi(2)).exp(),
        }
    }

    /// Half-width of the support; for Gaussians, where the density falls to
    /// `level` times its peak.
    pub fn half_width(&self, level: f64) -> f64 {
        match *self {
            Profile::Boxes { a, b } => 0.5 * (a + b),
            Profile::Gauss { sigma } => sigma * (2.0 * (1.0 / level).ln()).sqrt(),
        }
    }

    /// Points where the profile is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            Profile::Boxes { a, b } => {
                let o = 0.5 * (a + b);
                let i = 0.5 * (a - b).abs();
                let mut v = vec![-o, -i, i, o];
                v.dedup();
                v
            }
            Profile::Gauss { .. } => vec![],
        }
    }

    /// Second derivative of a piecewise-linear profile as point masses
    /// `(position, weight)`.
    pub fn point_masses(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            Profile::Boxes { a, b } => {
                let o = 0.5 * (a + b);
                let i = 0.5 * (a - b).abs();
                let w = 1.0 / (a * b);
                if i == 0.0 {
                    Some(vec![(-o, w), (0.0, -2.0 * w), (o, w)])
                } else {
                    Some(vec![(-o, w), (-i, -w), (i, -w), (o, w)])
                }
            }
            Profile::Gauss { .. } => None,
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            Profile::Boxes { a, b } => {
                let o = 0.5 * (a + b);
                let i = 0.5 * (a - b).abs();
                let m = s.abs();
                if m > i && m < o {
                    -s.signum() / (a * b)
                } else {
                    0.0
                }
            }
            Profile::Gauss { sigma } => -s / (sigma * sigma) * gaussian(s, sigma),
        }
    }

    /// Pointwise second derivative; the smooth part only for boxes (zero).
    pub fn second_derivative(&self, s: f64) -> f64 {
        match *self {
            Profile::Boxes { .. } => 0.0,
            Profile::Gauss { sigma } => {
                let s2 = sigma * sigma;
                (s * s / s2 - 1.0) / s2 * gaussian(s, sigma)
            }
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Envelope of one probe pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    pub shape: PulseShape,
    /// Transverse full width (rect) or FWHM (gauss), um.
    pub waist: f64,
    /// Temporal full width (rect) or FWHM (gauss), fs.
    pub duration: f64,
    pub x: f64,
    pub y: f64,
    /// Arrival time at the entrance facet, fs.
    pub t0: f64,
    pub crystal_length: f64,
    pub n_g: f64,
    /// Overall normalisation of the envelope.
    #[serde(default = "unit")]
    pub amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

impl PulseEnvelope {
    pub fn transverse_gate(&self) -> Gate {
        match self.shape {
            PulseShape::Rectangular => Gate::Box { width: self.waist },
            PulseShape::Gaussian => Gate::Gauss { fwhm: self.waist },
        }
    }

    pub fn temporal_gate(&self) -> Gate {
        match self.shape {
            PulseShape::Rectangular => Gate::Box { width: self.duration },
            PulseShape::Gaussian => Gate::Gauss { fwhm: self.duration },
        }
    }

    /// Inverse group velocity, fs/um.
    pub fn inv_group_velocity(&self) -> f64 {
        self.n_g / C
    }

    /// Retarded time of the envelope centre at depth `z`.
    pub fn arrival(&self, z: f64) -> f64 {
        self.t0 + (z + 0.5 * self.crystal_length) * self.inv_group_velocity()
    }

    pub fn value(&self, r: [f64; 3], t: f64) -> f64 {
        let l = self.crystal_length;
        if r[2].abs() > 0.5 * l {
            return 0.0;
        }
        let tg = self.transverse_gate();
        self.amplitude * tg.value(r[0] - self.x) * tg.value(r[1] - self.y) / l
            * self.temporal_gate().value(t - self.arrival(r[2]))
    }

    pub fn shifted(&self, dr: [f64; 3], dt: f64) -> Self {
        // The crystal does not move, so a z-shift is absorbed by the launch time.
        Self {
            x: self.x + dr[0],
            y: self.y + dr[1],
            t0: self.t0 + dt,
            ..*self
        }
    }
}

pub fn envelope_value(p: &PulseEnvelope, r: [f64; 3], t: f64) -> f64 {
    p.value(r, t)
}

/// Space-time cross-correlation `K12(rho, tau)` of two envelopes in closed
/// form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapKernel {
    pub x: Profile,
    pub y: Profile,
    pub z: Profile,
    pub t: Profile,
    /// Centre of the kernel in `rho_x`, `x1 - x2`.
    pub delta_x: f64,
    pub delta_y: f64,
    /// `t1 - t2`.
    pub delta_t: f64,
    /// `n_g / c`.
    pub inv_vg: f64,
    /// Product of the two pulse amplitudes.
    pub scale: f64,
}

impl OverlapKernel {
    /// Transverse separation `|r1 - r2|`.
    pub fn delta_r(&self) -> f64 {
        self.delta_x.hypot(self.delta_y)
    }

    /// Centre of the temporal profile at longitudinal offset `rho_z`.
    pub fn tau_center(&self, rho_z: f64) -> f64 {
        self.delta_t + rho_z * self.inv_vg
    }

    pub fn value(&self, rho: [f64; 3], tau: f64) -> f64 {
        self.scale
            * self.x.value(rho[0] - self.delta_x)
            * self.y.value(rho[1] - self.delta_y)
            * self.z.value(rho[2])
            * self.t.value(tau - self.tau_center(rho[2]))
    }

    pub fn with_delay(&self, delta_t: f64) -> Self {
        Self { delta_t, ..*self }
    }

    /// Kernel of the swapped pulse pair.
    pub fn swapped(&self) -> Self {
        let flip = |p: Profile| match p {
            Profile::Boxes { a, b } => Profile::Boxes { a: b, b: a },
            g => g,
        };
        Self {
            x: flip(self.x),
            y: flip(self.y),
            z: flip(self.z),
            t: flip(self.t),
            delta_x: -self.delta_x,
            delta_y: -self.delta_y,
            delta_t: -self.delta_t,
            ..*self
        }
    }

    /// `d^2 K / d tau^2` (smooth profiles only).
    pub fn d2_tau(&self, rho: [f64; 3], tau: f64) -> f64 {
        self.scale
            * self.x.value(rho[0] - self.delta_x)
            * self.y.value(rho[1] - self.delta_y)
            * self.z.value(rho[2])
            * self.t.second_derivative(tau - self.tau_center(rho[2]))
    }

    /// `d^2 K / d rho_x^2` (smooth profiles only).
    pub fn d2_x(&self, rho: [f64; 3], tau: f64) -> f64 {
        self.scale
            * self.x.second_derivative(rho[0] - self.delta_x)
            * self.y.value(rho[1] - self.delta_y)
            * self.z.value(rho[2])
            * self.t.value(tau - self.tau_center(rho[2]))
    }

    /// Second derivatives in `tau` and `rho_x`: analytic for Gaussian
    /// profiles, point masses for piecewise-linear ones.
    pub fn derivatives(&self) -> OverlapDerivatives {
        OverlapDerivatives {
            tau: self.t.point_masses(),
            x: self.x.point_masses(),
        }
    }
}

/// Distributional parts of the kernel's second derivatives. `None` means
/// the derivative is an ordinary function (see [`OverlapKernel::d2_tau`]).
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapDerivatives {
    pub tau: Option<Vec<(f64, f64)>>,
    pub x: Option<Vec<(f64, f64)>>,
}

pub fn overlap_kernel(p1: &PulseEnvelope, p2: &PulseEnvelope) -> Result<OverlapKernel> {
    if p1.crystal_length != p2.crystal_length {
        return Err(Error::Unsupported("pulses must share one crystal length".into()));
    }
    if p1.n_g != p2.n_g {
        return Err(Error::Unsupported("pulses must share one group index".into()));
    }
    let l = p1.crystal_length;
    Ok(OverlapKernel {
        x: Profile::correlate(p1.transverse_gate(), p2.transverse_gate())?,
        y: Profile::correlate(p1.transverse_gate(), p2.transverse_gate())?,
        z: Profile::Boxes { a: l, b: l },
        t: Profile::correlate(p1.temporal_gate(), p2.temporal_gate())?,
        delta_x: p1.x - p2.x,
        delta_y: p1.y - p2.y,
        delta_t: p1.t0 - p2.t0,
        inv_vg: p1.inv_group_velocity(),
        scale: p1.amplitude * p2.amplitude,
    })
}

/// Longitudinal-temporal part of the overlap kernel sampled on a grid,
/// built by FFT cross-correlation of the sampled `(z, t)` envelopes.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedOverlap {
    pub rho_z0: f64,
    pub dz: f64,
    pub nz: usize,
    pub tau0: f64,
    pub dt: f64,
    pub nt: usize,
    /// Row-major, `values[iz * nt + it]`.
    pub values: Vec<f64>,
}

/// Sampling steps for [`gridded_overlap`].
#[derive(Debug, Clone, Copy)]
pub struct OverlapGrid {
    pub dz: f64,
    pub dt: f64,
    pub tau_pad: f64,
}

impl OverlapGrid {
    /// `tau` at `duration / 16`, `z` so one step spans one time step at the
    /// THz phase velocity `c / n`.
    pub fn for_pulse(p: &PulseEnvelope, n: f64, tau_pad: f64) -> Self {
        let dt = p.duration / 16.0;
        Self { dz: C / n * dt, dt, tau_pad }
    }
}

pub fn gridded_overlap(p1: &PulseEnvelope, p2: &PulseEnvelope, grid: OverlapGrid) -> Result<GriddedOverlap> {
    overlap_kernel(p1, p2)?;
    let l = p1.crystal_length;
    let duration = p1.duration.min(p2.duration);
    let per_tau = duration / grid.dt;
    if per_tau < 8.0 {
        return Err(Error::GridResolution { feature: "pulse duration", samples: per_tau });
    }
    // A z-step moves the retarded time by dz / v_g.
    let per_z = duration / (grid.dz * p1.inv_group_velocity());
    if per_z < 8.0 {
        return Err(Error::GridResolution { feature: "retarded time along z", samples: per_z });
    }
    // Cell-centred z nodes: the discrete gate correlation is then the exact
    // triangle at every lag.
    let nz = (l / grid.dz).ceil().max(1.0) as usize;
    let dz = l / nz as f64;
    let z_at = |i: usize| -0.5 * l + (i as f64 + 0.5) * dz;
    let half = |p: &PulseEnvelope| match p.shape {
        PulseShape::Rectangular => 0.5 * p.duration,
        PulseShape::Gaussian => 6.0 * fwhm_to_sigma(p.duration),
    } + grid.tau_pad;
    let t_lo = (p1.arrival(-0.5 * l) - half(p1)).min(p2.arrival(-0.5 * l) - half(p2));
    let t_hi = (p1.arrival(0.5 * l) + half(p1)).max(p2.arrival(0.5 * l) + half(p2));
    let nt = ((t_hi - t_lo) / grid.dt).ceil() as usize + 1;
    let t_at = |j: usize| t_lo + j as f64 * grid.dt;

    // Cell-averaged sampling keeps the discrete gate normalised for boxes.
    let sample = |p: &PulseEnvelope| -> Vec<f64> {
        let gate = p.temporal_gate();
        let mut v = vec![0.0; nz * nt];
        for i in 0..nz {
            let wz = 1.0 / l;
            let c = p.arrival(z_at(i));
            for j in 0..nt {
                let t = t_at(j);
                let val = match gate {
                    Gate::Box { width } => {
                        let lo = (t - 0.5 * grid.dt).max(c - 0.5 * width);
                        let hi = (t + 0.5 * grid.dt).min(c + 0.5 * width);
                        (hi - lo).max(0.0) / (width * grid.dt)
                    }
                    Gate::Gauss { .. } => gate.value(t - c),
                };
                v[i * nt + j] = wz * val;
            }
        }
        v
    };
    let a = sample(p1);
    let b = sample(p2);

    // Zero-padded 2-D cross-correlation: K[k] = sum_m a[m + k] b[m].
    let mz = (2 * nz - 1).next_power_of_two();
    let mt = (2 * nt - 1).next_power_of_two();
    let mut fa = pad(&a, nz, nt, mz, mt);
    let mut fb = pad(&b, nz, nt, mz, mt);
    let mut planner = FftPlanner::new();
    fft2(&mut planner, &mut fa, mz, mt, false);
    fft2(&mut planner, &mut fb, mz, mt, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y.conj();
    }
    fft2(&mut planner, &mut fa, mz, mt, true);
    let scale = p1.amplitude * p2.amplitude * dz * grid.dt / (mz * mt) as f64;

    let (gz, gt) = (2 * nz - 1, 2 * nt - 1);
    let mut values = vec![0.0; gz * gt];
    for iz in 0..gz {
        let kz = (iz as isize - (nz as isize - 1)).rem_euclid(mz as isize) as usize;
        for it in 0..gt {
            let kt = (it as isize - (nt as isize - 1)).rem_euclid(mt as isize) as usize;
            values[iz * gt + it] = fa[kz * mt + kt].re * scale;
        }
    }
    Ok(GriddedOverlap {
        rho_z0: -((nz - 1) as f64) * dz,
        dz,
        nz: gz,
        tau0: -((nt - 1) as f64) * grid.dt,
        dt: grid.dt,
        nt: gt,
        values,
    })
}

fn pad(a: &[f64], nz: usize, nt: usize, mz: usize, mt: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); mz * mt];
    for i in 0..nz {
        for j in 0..nt {
            out[i * mt + j] = Complex64::new(a[i * nt + j], 0.0);
        }
    }
    out
}

fn fft2(planner: &mut FftPlanner<f64>, data: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    let row_fft = if inverse { planner.plan_fft_inverse(cols) } else { planner.plan_fft_forward(cols) };
    for r in data.chunks_mut(cols) {
        row_fft.process(r);
    }
    let col_fft = if inverse { planner.plan_fft_inverse(rows) } else { planner.plan_fft_forward(rows) };
    let mut col = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            col[r] = data[r * cols + c];
        }
        col_fft.process(&mut col);
        for r in 0..rows {
            data[r * cols + c] = col[r];
        }
    }
}

impl GriddedOverlap {
    pub fn rho_z(&self, i: usize) -> f64 {
        self.rho_z0 + i as f64 * self.dz
    }

    pub fn tau(&self, j: usize) -> f64 {
        self.tau0 + j as f64 * self.dt
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nt + j]
    }

    /// Bilinear interpolation, zero outside the grid.
    pub fn value(&self, rho_z: f64, tau: f64) -> f64 {
        let u = (rho_z - self.rho_z0) / self.dz;
        let v = (tau - self.tau0) / self.dt;
        if u < 0.0 || v < 0.0 || u > (self.nz - 1) as f64 || v > (self.nt - 1) as f64 {
            return 0.0;
        }
        let i = (u.floor() as usize).min(self.nz - 2);
        let j = (v.floor() as usize).min(self.nt - 2);
        let (fu, fv) = (u - i as f64, v - j as f64);
        (1.0 - fu) * ((1.0 - fv) * self.at(i, j) + fv * self.at(i, j + 1))
            + fu * ((1.0 - fv) * self.at(i + 1, j) + fv * self.at(i + 1, j + 1))
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dz * self.dt
    }

    /// Spectral second derivative along `tau`, row by row.
    pub fn d2_tau(&self) -> Vec<f64> {
        let n = self.nt.next_power_of_two() * 2;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut out = vec![0.0; self.values.len()];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..self.nz {
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for j in 0..self.nt {
                buf[j] = Complex64::new(self.at(i, j), 0.0);
            }
            fwd.process(&mut buf);
            for (k, c) in buf.iter_mut().enumerate() {
                let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                let w = 2.0 * PI * kk / (n as f64 * self.dt);
                *c *= -w * w / n as f64;
            }
            inv.process(&mut buf);
            for j in 0..self.nt {
                out[i * self.nt + j] = buf[j].re;
            }
        }
        out
    }
}
