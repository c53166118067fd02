//! Vacuum correlation function `C(rho, tau)` and retarded response function
//! `R(rho, tau)` of the xx field component in a homogeneous medium.
//!
//! With `a = |rho| / c_n`, `mu = rho_x^2 / rho^2` and the operator
//! `-d^2/dtau^2 + c_n^2 d^2/drho_x^2` expanded by the chain rule, the
//! dispersionless kernels are sums of light-cone terms
//!
//! ```text
//! R     = mu0/(4 pi)      [w2 delta'' + w1 delta' + w0 delta](tau - a)
//! C     = mu0 hbar/(8pi^2) sum_s s [w2 h'' + s w1 h' + w0 h](tau - s a),  h(u) = -1/u
//! w2 = -(1 - mu)/rho,  w1 = -c_n (1 - 3 mu)/rho^2,  w0 = -c_n^2 (1 - 3 mu)/rho^3
//! ```
//!
//! In frequency space (`R~(w) = int R(tau) e^{i w tau} dtau`)
//!
//! ```text
//! R~ = mu0 w^2 g [(1 - mu) + (1 - 3 mu)(i/(k rho) - 1/(k rho)^2)],  g = e^{i k rho}/(4 pi rho)
//! C~ = hbar sign(w) Im R~
//! ```
//!
//! with `k = w n(w) / c`, which also covers dispersive and absorbing media.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::Medium;
use crate::units::{C, HBAR, MU0};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMode {
    DispersionlessAnalytic,
    DispersiveSpectral,
}

/// Shape of the taper at the top of the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    /// Raised cosine (Tukey window).
    #[default]
    Cosine,
    /// Infinitely smooth Planck taper. Pointwise kernel samples need it:
    /// `R~` grows like `omega^2`, and the jump in the second derivative of
    /// the cosine taper leaves an error of the order of the kernel itself.
    Planck,
}

/// Uniform frequency grid `[0, omega_max]` with a taper over the top
/// `taper` fraction of the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBand {
    /// rad/fs
    pub omega_max: f64,
    pub n_omega: usize,
    pub taper: f64,
    #[serde(default)]
    pub shape: Taper,
}

impl Default for SpectralBand {
    fn default() -> Self {
        Self {
            omega_max: crate::units::thz_to_rad_fs(15.0),
            n_omega: 2048,
            taper: 0.3,
            shape: Taper::Cosine,
        }
    }
}

impl SpectralBand {
    pub fn step(&self) -> f64 {
        self.omega_max / (self.n_omega - 1) as f64
    }

    pub fn omega(&self, i: usize) -> f64 {
        i as f64 * self.step()
    }

    /// Window, one below `(1 - taper) omega_max`.
    pub fn window(&self, omega: f64) -> f64 {
        let w = omega.abs();
        let knee = (1.0 - self.taper) * self.omega_max;
        if w <= knee {
            return 1.0;
        }
        if w >= self.omega_max {
            return 0.0;
        }
        let t = (w - knee) / (self.omega_max - knee);
        match self.shape {
            Taper::Cosine => 0.5 * (1.0 + (PI * t).cos()),
            Taper::Planck => 1.0 / (1.0 + (1.0 / (1.0 - t) - 1.0 / t).exp()),
        }
    }

    /// Trapezoid weight times window for node `i` of a one-sided integral.
    pub fn weight(&self, i: usize) -> f64 {
        let end = if i == 0 || i + 1 == self.n_omega { 0.5 } else { 1.0 };
        end * self.step() * self.window(self.omega(i))
    }
}

/// Which part of the response function an evaluator returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponsePart {
    Full,
    /// `R'(tau) = [R(tau) + R(-tau)] / 2`
    Reactive,
    /// `R''(tau) = [R(tau) - R(-tau)] / 2`
    Dissipative,
}

/// Weighted sum `delta * d(u) + delta1 * d'(u) + delta2 * d''(u)` with
/// `u = tau - at`, prefactors included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeTerm {
    pub at: f64,
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl ConeTerm {
    /// Action on a test function given its value and first two derivatives
    /// at `at`.
    pub fn pair(&self, g: f64, g1: f64, g2: f64) -> f64 {
        self.delta * g - self.delta1 * g1 + self.delta2 * g2
    }

    pub fn is_zero(&self) -> bool {
        self.delta == 0.0 && self.delta1 == 0.0 && self.delta2 == 0.0
    }
}

/// Value of the response function at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ResponseValue {
    /// Distribution supported on the light cone; all weights are zero off it.
    Cone(ConeTerm),
    /// Band-limited sample of the inverse transform.
    Sample(f64),
}

/// Light-cone weights `(w0, w1, w2)` of the operator acting on `F(tau - s a) / rho`.
pub fn cone_weights(rho: [f64; 3], c_n: f64) -> Result<(f64, f64, f64)> {
    let r = norm(rho)?;
    let mu = rho[0] * rho[0] / (r * r);
    let q = 1.0 - 3.0 * mu;
    Ok((-c_n * c_n * q / (r * r * r), -c_n * q / (r * r), -(1.0 - mu) / r))
}

fn norm(rho: [f64; 3]) -> Result<f64> {
    let r = (rho[0] * rho[0] + rho[1] * rho[1] + rho[2] * rho[2]).sqrt();
    if r == 0.0 || !r.is_finite() {
        return Err(Error::Coincidence);
    }
    Ok(r)
}

/// Immutable kernel evaluator for one medium.
#[derive(Debug, Clone)]
pub struct KernelSet {
    medium: Medium,
    mode: KernelMode,
    band: SpectralBand,
    /// Per-frequency factors on the band grid; `None` outside a table's range.
    grid: Vec<Option<GridPoint>>,
}

/// `k = w n(w) / c`, `1 / k` and `mu0 w^2 / (4 pi)` at one grid frequency.
#[derive(Debug, Clone, Copy)]
struct GridPoint {
    k: Complex64,
    inv_k: Complex64,
    pre: f64,
}

impl KernelSet {
    /// Closed form for dispersionless media, spectral otherwise.
    pub fn new(medium: Medium, band: SpectralBand) -> Result<Self> {
        let mode = if medium.is_dispersionless() {
            KernelMode::DispersionlessAnalytic
        } else {
            KernelMode::DispersiveSpectral
        };
        Self::with_mode(medium, band, mode)
    }

    pub fn with_mode(medium: Medium, band: SpectralBand, mode: KernelMode) -> Result<Self> {
        if mode == KernelMode::DispersionlessAnalytic && !medium.is_dispersionless() {
            return Err(Error::Unsupported("closed-form kernels need a dispersionless medium".into()));
        }
        if band.n_omega < 16 || !(band.omega_max > 0.0) || !(0.0..=1.0).contains(&band.taper) {
            return Err(Error::validation(
                "numerics.n_omega",
                band.n_omega,
                "n_omega >= 16, omega_max > 0, taper in [0, 1]",
            ));
        }
        let grid = (0..band.n_omega)
            .map(|i| {
                let w = band.omega(i);
                medium.refractive_index(w).ok().map(|n| {
                    let k = n * w / C;
                    GridPoint {
                        k,
                        inv_k: if w == 0.0 { Complex64::new(0.0, 0.0) } else { 1.0 / k },
                        pre: MU0 * w * w / (4.0 * PI),
                    }
                })
            })
            .collect();
        Ok(Self { medium, mode, band, grid })
    }

    pub fn medium(&self) -> &Medium {
        &self.medium
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    pub fn band(&self) -> &SpectralBand {
        &self.band
    }

    /// Light-cone speed `c / n` (front index for dispersive media).
    pub fn cone_speed(&self) -> f64 {
        C / self.medium.front_index()
    }

    /// `R~(rho, omega)`.
    pub fn response_spectral(&self, rho: [f64; 3], omega: f64) -> Result<Complex64> {
        let r = norm(rho)?;
        let k = if omega == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.medium.refractive_index(omega)? * omega / C
        };
        let n0 = if omega == 0.0 { self.medium.refractive_index(0.0)?.re } else { 0.0 };
        Ok(response_from_wavenumber(rho, r, omega, k, n0))
    }

    /// `C~(rho, omega) = hbar sign(omega) Im R~(rho, omega)`.
    pub fn correlation_spectral(&self, rho: [f64; 3], omega: f64) -> Result<f64> {
        let r = self.response_spectral(rho, omega)?;
        Ok(HBAR * sign(omega) * r.im)
    }

    /// `R~(rho, omega_i)` on the band grid, zero outside a table's range.
    pub fn response_on_grid(&self, rho: [f64; 3]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.band.n_omega];
        self.fill_response(rho, &mut out)?;
        Ok(out)
    }

    /// [`KernelSet::response_on_grid`] into a caller-owned buffer.
    pub fn fill_response(&self, rho: [f64; 3], out: &mut [Complex64]) -> Result<()> {
        let r = norm(rho)?;
        let mu = rho[0] * rho[0] / (r * r);
        let q = 1.0 - 3.0 * mu;
        let n0 = self.medium.refractive_index(0.0).map(|n| n.re).unwrap_or(0.0);
        let i = Complex64::i();
        for (j, (gp, o)) in self.grid.iter().zip(out.iter_mut()).enumerate() {
            *o = match gp {
                None => Complex64::new(0.0, 0.0),
                Some(_) if j == 0 => response_from_wavenumber(rho, r, 0.0, Complex64::new(0.0, 0.0), n0),
                Some(gp) => {
                    let kr = gp.k * r;
                    let phase = Complex64::from_polar((-kr.im).exp(), kr.re);
                    let ikr = gp.inv_k / r;
                    let bracket = (1.0 - mu) + q * (i * ikr - ikr * ikr);
                    gp.pre / r * phase * bracket
                }
            };
        }
        Ok(())
    }

    /// Light-cone distribution of `R` (or one of its parts) at fixed `rho`,
    /// dispersionless mode only.
    pub fn response_distribution(&self, rho: [f64; 3], part: ResponsePart) -> Result<Vec<ConeTerm>> {
        let c_n = self.analytic_speed()?;
        let (w0, w1, w2) = cone_weights(rho, c_n)?;
        let a = norm(rho)? / c_n;
        let pre = MU0 / (4.0 * PI);
        let term = |s: f64, f: f64| ConeTerm {
            at: s * a,
            delta: f * pre * w0,
            delta1: f * pre * s * w1,
            delta2: f * pre * w2,
        };
        Ok(match part {
            ResponsePart::Full => vec![term(1.0, 1.0)],
            ResponsePart::Reactive => vec![term(1.0, 0.5), term(-1.0, 0.5)],
            ResponsePart::Dissipative => vec![term(1.0, 0.5), term(-1.0, -0.5)],
        })
    }

    /// `R(rho, tau)`: symbolic light-cone weights in dispersionless mode (all
    /// zero unless `tau` sits on the cone), a windowed inverse-transform
    /// sample in spectral mode.
    pub fn response_time(&self, rho: [f64; 3], tau: f64) -> Result<ResponseValue> {
        self.response_part_time(ResponsePart::Full, rho, tau)
    }

    pub fn response_part_time(&self, part: ResponsePart, rho: [f64; 3], tau: f64) -> Result<ResponseValue> {
        match self.mode {
            KernelMode::DispersionlessAnalytic => {
                let terms = self.response_distribution(rho, part)?;
                let mut out = ConeTerm { at: tau, delta: 0.0, delta1: 0.0, delta2: 0.0 };
                for t in terms {
                    if on_cone(tau, t.at) {
                        out = ConeTerm { at: t.at, ..t };
                    }
                }
                Ok(ResponseValue::Cone(out))
            }
            KernelMode::DispersiveSpectral => {
                let spec = self.response_on_grid(rho)?;
                let mut sum = 0.0;
                for (i, r) in spec.iter().enumerate() {
                    let w = self.band.omega(i);
                    let (s, c) = (w * tau).sin_cos();
                    let v = match part {
                        ResponsePart::Full => r.re * c + r.im * s,
                        ResponsePart::Reactive => r.re * c,
                        ResponsePart::Dissipative => r.im * s,
                    };
                    sum += self.band.weight(i) * v;
                }
                Ok(ResponseValue::Sample(sum / PI))
            }
        }
    }

    /// Evaluators for `R'` and `R''`.
    pub fn split_response(&self) -> (ResponseEvaluator<'_>, ResponseEvaluator<'_>) {
        (
            ResponseEvaluator { ks: self, part: ResponsePart::Reactive },
            ResponseEvaluator { ks: self, part: ResponsePart::Dissipative },
        )
    }

    /// `C(rho, tau)`. Pointwise closed-form queries on `|tau| = |rho| / c_n`
    /// fail with a light-cone error.
    pub fn correlation_time(&self, rho: [f64; 3], tau: f64) -> Result<f64> {
        match self.mode {
            KernelMode::DispersionlessAnalytic => {
                let c_n = self.analytic_speed()?;
                let (w0, w1, w2) = cone_weights(rho, c_n)?;
                let r = norm(rho)?;
                let a = r / c_n;
                let mut sum = 0.0;
                for s in [1.0, -1.0] {
                    let u = tau - s * a;
                    if on_cone(tau, s * a) {
                        return Err(Error::LightCone { rho: r, tau });
                    }
                    // h = -1/u, h' = 1/u^2, h'' = -2/u^3
                    sum += s * (w2 * (-2.0 / (u * u * u)) + s * w1 / (u * u) + w0 * (-1.0 / u));
                }
                Ok(MU0 * HBAR / (8.0 * PI * PI) * sum)
            }
            KernelMode::DispersiveSpectral => self.correlation_band_limited(rho, tau),
        }
    }

    /// `(1/pi) int_0^omega_max C~ cos(omega tau) W(omega) d omega`, in any mode.
    pub fn correlation_band_limited(&self, rho: [f64; 3], tau: f64) -> Result<f64> {
        let spec = self.response_on_grid(rho)?;
        let mut sum = 0.0;
        for (i, r) in spec.iter().enumerate() {
            sum += self.band.weight(i) * r.im * (self.band.omega(i) * tau).cos();
        }
        Ok(HBAR * sum / PI)
    }

    fn analytic_speed(&self) -> Result<f64> {
        match self.medium {
            Medium::Dispersionless { n, .. } => Ok(C / n),
            _ => Err(Error::Unsupported("closed-form kernels need a dispersionless medium".into())),
        }
    }
}

/// Evaluator bound to one response part.
#[derive(Debug, Clone, Copy)]
pub struct ResponseEvaluator<'a> {
    ks: &'a KernelSet,
    part: ResponsePart,
}

impl ResponseEvaluator<'_> {
    pub fn part(&self) -> ResponsePart {
        self.part
    }

    pub fn eval(&self, rho: [f64; 3], tau: f64) -> Result<ResponseValue> {
        self.ks.response_part_time(self.part, rho, tau)
    }

    pub fn distribution(&self, rho: [f64; 3]) -> Result<Vec<ConeTerm>> {
        self.ks.response_distribution(rho, self.part)
    }
}

fn on_cone(tau: f64, at: f64) -> bool {
    (tau - at).abs() <= 1e-12 * at.abs()
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn response_from_wavenumber(rho: [f64; 3], r: f64, omega: f64, k: Complex64, n0: f64) -> Complex64 {
    let mu = rho[0] * rho[0] / (r * r);
    let q = 1.0 - 3.0 * mu;
    let g = 1.0 / (4.0 * PI * r);
    if omega == 0.0 {
        // static limit: the near-field term survives
        let c_n = C / n0;
        return Complex64::new(-MU0 * q * c_n * c_n * g / (r * r), 0.0);
    }
    let kr = k * r;
    let i = Complex64::i();
    let bracket = (1.0 - mu) + q * (i / kr - 1.0 / (kr * kr));
    MU0 * omega * omega * g * (i * kr).exp() * bracket
}
