//! Averages of the kernels against the overlap kernel.
//!
//! Three angle-independent integrals are computed per geometry,
//!
//! ```text
//! I_C   = int d^3rho dtau K(rho, tau) C(rho, tau)
//! I_R'  = int K R',     I_R'' = int K R''
//! ```
//!
//! and any detector setting is assembled from them as
//! `p_vac I_C - (hbar/2)(p_s' I_R' + p_s'' I_R'')`.
//!
//! Two paths evaluate them. For a dispersionless medium and rectangular
//! pulses the wave operator is moved onto `K` by parts, its second
//! derivatives become point masses and the light-cone delta collapses one
//! integration; every evaluated integrand is then exactly zero in the
//! space-like and time-like regions. Otherwise the kernels go through
//! frequency space: `int dtau K e^{-i w tau}` is analytic, so each spatial
//! node contributes `R~(rho, w)` times a phase and the delay enters only
//! through `e^{-i w dt}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelMode, KernelSet};
use crate::pulses::{overlap_kernel, OverlapKernel, Profile, PulseEnvelope};
use crate::config::ExperimentConfig;
use crate::regions::{classify_kernel, pulse_pair, Region};
use crate::quad::{bracket_root, principal_value, Adaptive, GaussHermite, GaussLegendre};
use crate::units::{HBAR, MU0};
use crate::waveplate::{coefficients, WavePlateCoeffs};

/// The three angle-independent integrals of one geometry.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Integrals {
    pub i_c: f64,
    pub i_r_prime: f64,
    pub i_r_dprime: f64,
}

impl Integrals {
    pub fn g_vac(&self) -> f64 {
        self.i_c
    }

    /// Source-radiation signal `-(hbar/2)(I_R' + I_R'')`.
    pub fn g_s(&self) -> f64 {
        -0.5 * HBAR * (self.i_r_prime + self.i_r_dprime)
    }

    pub fn g_r_prime(&self) -> f64 {
        -0.5 * HBAR * self.i_r_prime
    }

    pub fn g_r_dprime(&self) -> f64 {
        -0.5 * HBAR * self.i_r_dprime
    }

    pub fn assemble(&self, coeffs: &WavePlateCoeffs) -> f64 {
        assemble_signal(coeffs, self.i_c, self.i_r_prime, self.i_r_dprime)
    }
}

/// `p_vac I_C - (hbar/2)(p_s' I_R' + p_s'' I_R'')`.
pub fn assemble_signal(coeffs: &WavePlateCoeffs, i_c: f64, i_r_prime: f64, i_r_dprime: f64) -> f64 {
    coeffs.p_vac * i_c - 0.5 * HBAR * (coeffs.p_s_prime * i_r_prime + coeffs.p_s_dprime * i_r_dprime)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PointStatus {
    Ok,
    Failed(String),
}

impl PointStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, PointStatus::Ok)
    }
}

/// One row of a delay scan. Failed rows carry NaN signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    pub delta_r: f64,
    pub delta_t: f64,
    pub g_vac: f64,
    pub g_s: f64,
    pub g_r_prime: f64,
    pub g_r_dprime: f64,
    /// Signal at the configured wave-plate angles, if any.
    pub g_assembled: Option<f64>,
    pub region: Option<Region>,
    pub path: Path,
    pub status: PointStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    /// Delta collapse and principal values on the light cone.
    ClosedForm,
    /// Frequency-domain quadrature over spatial nodes.
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    /// Relative tolerance of the adaptive closed-form path.
    pub tolerance: f64,
    /// Nodes with `|rho|` below this are dropped (coincidence cutoff), um.
    pub rho_min: f64,
    /// Gauss-Hermite nodes per transverse Gaussian profile; Gauss-Legendre
    /// nodes per linear piece of a trapezoid profile.
    pub transverse_nodes: usize,
    /// Eight-node panels per linear piece of the longitudinal profile.
    pub z_panels: usize,
    /// Interval budget of each outer adaptive level; the innermost level
    /// gets twice as many. A point that runs out is retried once with four
    /// times the budget.
    pub max_intervals: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            rho_min: 0.1,
            transverse_nodes: 20,
            z_panels: 16,
            max_intervals: 60,
        }
    }
}

/// Closed form when the medium is dispersionless and every profile is
/// piecewise linear, spectral otherwise.
pub fn select_path(k12: &OverlapKernel, ks: &KernelSet) -> Path {
    let linear = |p: &Profile| matches!(p, Profile::Boxes { .. });
    if ks.mode() == KernelMode::DispersionlessAnalytic && linear(&k12.x) && linear(&k12.y) && linear(&k12.t) {
        Path::ClosedForm
    } else {
        Path::Spectral
    }
}

/// `I_C` for one geometry.
pub fn integrate_vacuum(k12: &OverlapKernel, ks: &KernelSet, opts: &IntegratorOptions) -> Result<f64> {
    match select_path(k12, ks) {
        Path::ClosedForm => closed_form(k12, ks, opts, |cf| cf.vacuum()),
        Path::Spectral => Ok(SpectralPlan::new(k12, ks, opts)?.integrals(k12.delta_t).i_c),
    }
}

/// `(I_R', I_R'')` for one geometry.
pub fn integrate_source(k12: &OverlapKernel, ks: &KernelSet, opts: &IntegratorOptions) -> Result<(f64, f64)> {
    match select_path(k12, ks) {
        Path::ClosedForm => closed_form(k12, ks, opts, |cf| cf.source()),
        Path::Spectral => {
            let i = SpectralPlan::new(k12, ks, opts)?.integrals(k12.delta_t);
            Ok((i.i_r_prime, i.i_r_dprime))
        }
    }
}

/// All three integrals for one geometry.
pub fn integrate_all(k12: &OverlapKernel, ks: &KernelSet, opts: &IntegratorOptions) -> Result<Integrals> {
    match select_path(k12, ks) {
        Path::ClosedForm => closed_form(k12, ks, opts, |cf| {
            let i_c = cf.vacuum()?;
            let (i_r_prime, i_r_dprime) = cf.source()?;
            Ok(Integrals { i_c, i_r_prime, i_r_dprime })
        }),
        Path::Spectral => Ok(SpectralPlan::new(k12, ks, opts)?.integrals(k12.delta_t)),
    }
}

/// Runs `f` on the closed form, retrying once with a larger interval budget
/// if the adaptive levels ran out of intervals.
fn closed_form<T>(
    k12: &OverlapKernel,
    ks: &KernelSet,
    opts: &IntegratorOptions,
    f: impl Fn(&ClosedForm) -> Result<T>,
) -> Result<T> {
    match f(&ClosedForm::new(k12, ks, opts)?) {
        Err(Error::Convergence { .. }) => {
            let wider = IntegratorOptions { max_intervals: 4 * opts.max_intervals, ..*opts };
            f(&ClosedForm::new(k12, ks, &wider)?)
        }
        r => r,
    }
}

/// Delay scan at the configured separation. Points that fail numerically
/// are kept as marked rows; only setup failures are errors.
pub fn scan_delta_t(cfg: &ExperimentConfig) -> Result<Vec<SignalRecord>> {
    let ks = cfg.kernel_set()?;
    let coeffs = cfg.angles.map(|(t1, t2)| coefficients(t1, t2)).transpose()?;
    let p = cfg.pulse();
    scan_delays(&p, &p, &ks, &cfg.integrator_options(), cfg.delta_r, &cfg.delays(), coeffs.as_ref())
}

/// Delay scan of the pair `(p1, p2)` placed by [`pulse_pair`]. The
/// spectral path builds one plan and reuses it for every delay.
pub fn scan_delays(
    p1: &PulseEnvelope,
    p2: &PulseEnvelope,
    ks: &KernelSet,
    opts: &IntegratorOptions,
    delta_r: f64,
    delays: &[f64],
    coeffs: Option<&WavePlateCoeffs>,
) -> Result<Vec<SignalRecord>> {
    let (q1, q2) = pulse_pair(p1, p2, delta_r, 0.0);
    let base = overlap_kernel(&q1, &q2)?;
    let path = select_path(&base, ks);
    let c_n = ks.cone_speed();
    let record = |dt: f64, r: Result<Integrals>| {
        let k = base.with_delay(dt);
        let region = classify_kernel(&k, c_n).ok().map(|l| l.region);
        match r {
            Ok(i) => SignalRecord {
                delta_r,
                delta_t: dt,
                g_vac: i.g_vac(),
                g_s: i.g_s(),
                g_r_prime: i.g_r_prime(),
                g_r_dprime: i.g_r_dprime(),
                g_assembled: coeffs.map(|c| i.assemble(c)),
                region,
                path,
                status: PointStatus::Ok,
            },
            Err(e) => SignalRecord {
                delta_r,
                delta_t: dt,
                g_vac: f64::NAN,
                g_s: f64::NAN,
                g_r_prime: f64::NAN,
                g_r_dprime: f64::NAN,
                g_assembled: coeffs.map(|_| f64::NAN),
                region,
                path,
                status: PointStatus::Failed(e.to_string()),
            },
        }
    };
    Ok(match path {
        Path::ClosedForm => delays
            .par_iter()
            .map(|&dt| record(dt, integrate_all(&base.with_delay(dt), ks, opts)))
            .collect(),
        Path::Spectral => match SpectralPlan::new(&base, ks, opts) {
            Ok(plan) => delays.iter().map(|&dt| record(dt, Ok(plan.integrals(dt)))).collect(),
            Err(e) => {
                let msg = e.to_string();
                delays.iter().map(|&dt| record(dt, Err(Error::Unsupported(msg.clone())))).collect()
            }
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Delta,
    Pv,
}

/// `x ln|x|`, continuous at zero.
fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.abs().ln()
    }
}

/// Closed-form evaluation for piecewise-linear profiles.
///
/// With `D = -d^2/dtau^2 + c_n^2 d^2/drho_x^2` moved onto `K`,
///
/// ```text
/// int K R(+-tau)      = mu0/(4 pi)       P(+-1, delta)
/// I_C                 = mu0 hbar/(8pi^2) [P(+1, pv) - P(-1, pv)]
/// P(s, kind)          = int d^3rho (1/rho) int dtau (D K)(rho, tau) k_s(tau)
/// ```
///
/// with `k_s = delta(tau - s a)` or `1/(s a - tau)`. The temporal masses of
/// `d^2 K / dtau^2` collapse `tau`, the transverse masses of
/// `d^2 K / drho_x^2` collapse `rho_x`.
struct ClosedForm<'a> {
    k: &'a OverlapKernel,
    c_n: f64,
    half_l: f64,
    rho_min: f64,
    t_masses: Vec<(f64, f64)>,
    x_masses: Vec<(f64, f64)>,
    outer: Adaptive,
    inner: Adaptive,
}

impl<'a> ClosedForm<'a> {
    fn new(k: &'a OverlapKernel, ks: &KernelSet, opts: &IntegratorOptions) -> Result<Self> {
        let masses = |p: &Profile| {
            p.point_masses()
                .ok_or_else(|| Error::Unsupported("closed form needs piecewise-linear profiles".into()))
        };
        let Profile::Boxes { a, b } = k.z else {
            return Err(Error::Unsupported("longitudinal profile must be a crystal gate".into()));
        };
        Ok(Self {
            k,
            c_n: ks.cone_speed(),
            half_l: 0.5 * (a + b),
            rho_min: opts.rho_min,
            t_masses: masses(&k.t)?,
            x_masses: masses(&k.x)?,
            outer: Adaptive { abs_tol: 0.0, rel_tol: opts.tolerance, max_intervals: opts.max_intervals },
            inner: Adaptive { abs_tol: 0.0, rel_tol: 0.1 * opts.tolerance, max_intervals: 2 * opts.max_intervals },
        })
    }

    fn vacuum(&self) -> Result<f64> {
        let p = self.p(1.0, Kind::Pv)? - self.p(-1.0, Kind::Pv)?;
        Ok(MU0 * HBAR / (8.0 * PI * PI) * p)
    }

    fn source(&self) -> Result<(f64, f64)> {
        let fwd = MU0 / (4.0 * PI) * self.p(1.0, Kind::Delta)?;
        let rev = MU0 / (4.0 * PI) * self.p(-1.0, Kind::Delta)?;
        Ok((0.5 * (fwd + rev), 0.5 * (fwd - rev)))
    }

    fn p(&self, s: f64, kind: Kind) -> Result<f64> {
        Ok(self.k.scale * (self.term_tau(s, kind)? + self.term_x(s, kind)?))
    }

    /// `s sqrt(rp2 + z^2) / c_n - t - z / v_g`, decreasing in `z`.
    fn cone_gap(&self, rp2: f64, s: f64, t: f64, z: f64) -> f64 {
        s * (rp2 + z * z).sqrt() / self.c_n - t - z * self.k.inv_vg
    }

    /// Root in `(-L, L)` of [`Self::cone_gap`], if any.
    fn cone_root(&self, rp2: f64, s: f64, t: f64) -> Option<f64> {
        let l = self.half_l;
        if self.cone_gap(rp2, s, t, -l) <= 0.0 || self.cone_gap(rp2, s, t, l) >= 0.0 {
            return None;
        }
        bracket_root(|z| self.cone_gap(rp2, s, t, z), -l, l)
    }

    fn z_points(&self, extra: &[f64]) -> Vec<f64> {
        crate::quad::breakpoints(-self.half_l, self.half_l, &[&[0.0], extra].concat())
    }

    /// Rejects estimates that stopped on the interval budget well short of
    /// the target, measured like the adaptive stop against `int |f|`.
    fn check(&self, e: crate::quad::Estimate) -> Result<f64> {
        let tol = 1e3 * self.outer.rel_tol * e.absolute;
        if e.error > tol && e.error > 1e-300 {
            return Err(Error::Convergence { error: e.error, tolerance: tol });
        }
        Ok(e.value)
    }

    /// `-int d^3rho K_x K_y K_z (1/rho) sum_k m_k k_s(tau_0 + s_k)`.
    fn term_tau(&self, s: f64, kind: Kind) -> Result<f64> {
        let k = self.k;
        let xs = shifted(&k.x, k.delta_x);
        let ys = shifted(&k.y, k.delta_y);
        let est = self.outer.integrate(
            |rx| {
                let kx = k.x.value(rx - k.delta_x);
                if kx == 0.0 {
                    return 0.0;
                }
                let inner = self.outer.integrate(
                    |ry| {
                        let ky = k.y.value(ry - k.delta_y);
                        if ky == 0.0 {
                            return 0.0;
                        }
                        ky * self.tau_collapse(rx * rx + ry * ry, s, kind)
                    },
                    &ys,
                );
                kx * inner.value
            },
            &xs,
        );
        Ok(-self.check(est)?)
    }

    fn tau_collapse(&self, rp2: f64, s: f64, kind: Kind) -> f64 {
        let k = self.k;
        let mut sum = 0.0;
        for &(sk, mk) in &self.t_masses {
            let t = k.delta_t + sk;
            let root = self.cone_root(rp2, s, t);
            match kind {
                Kind::Delta => {
                    let Some(z0) = root else { continue };
                    let rho = (rp2 + z0 * z0).sqrt();
                    if rho < self.rho_min {
                        continue;
                    }
                    let slope = s * z0 / (self.c_n * rho) - k.inv_vg;
                    sum += mk * k.z.value(z0) / (rho * slope.abs());
                }
                Kind::Pv => {
                    let f = |z: f64| {
                        let rho = (rp2 + z * z).sqrt();
                        if rho < self.rho_min {
                            0.0
                        } else {
                            k.z.value(z) / rho
                        }
                    };
                    let u = |z: f64| self.cone_gap(rp2, s, t, z);
                    let v = match root {
                        Some(z0) => {
                            let rho = (rp2 + z0 * z0).sqrt();
                            let slope = s * z0 / (self.c_n * rho) - k.inv_vg;
                            principal_value(f, u, z0, slope, &self.z_points(&[]), &self.inner).value
                        }
                        None => self.inner.integrate(|z| f(z) / u(z), &self.z_points(&[])).value,
                    };
                    sum += mk * v;
                }
            }
        }
        sum
    }

    /// `c_n^2 sum_j d_j int drho_y drho_z K_y K_z (1/rho) [K_t or its PV
    /// transform](s a - tau_0)` at `rho_x = delta_x + x_j`.
    fn term_x(&self, s: f64, kind: Kind) -> Result<f64> {
        let k = self.k;
        let ys = shifted(&k.y, k.delta_y);
        let mut total = 0.0;
        for &(xj, dj) in &self.x_masses {
            let rx = k.delta_x + xj;
            let est = self.outer.integrate(
                |ry| {
                    let ky = k.y.value(ry - k.delta_y);
                    if ky == 0.0 {
                        return 0.0;
                    }
                    let rp2 = rx * rx + ry * ry;
                    let roots: Vec<f64> =
                        self.t_masses.iter().filter_map(|&(sk, _)| self.cone_root(rp2, s, k.delta_t + sk)).collect();
                    let pts = self.z_points(&roots);
                    let v = self.inner.integrate(
                        |z| {
                            let rho = (rp2 + z * z).sqrt();
                            if rho < self.rho_min {
                                return 0.0;
                            }
                            let kz = k.z.value(z);
                            if kz == 0.0 {
                                return 0.0;
                            }
                            let u = s * rho / self.c_n - k.tau_center(z);
                            let g = match kind {
                                Kind::Delta => k.t.value(u),
                                Kind::Pv => self.t_masses.iter().map(|&(sk, mk)| mk * xlogx(u - sk)).sum(),
                            };
                            kz * g / rho
                        },
                        &pts,
                    );
                    ky * v.value
                },
                &ys,
            );
            total += dj * self.check(est)?;
        }
        Ok(self.c_n * self.c_n * total)
    }
}

/// Support breakpoints of a profile centred at `c`.
fn shifted(p: &Profile, c: f64) -> Vec<f64> {
    let mut v: Vec<f64> = p.kinks().iter().map(|k| c + k).collect();
    if !v.contains(&c) {
        v.push(c);
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Nodes `s` and weights `w p(s - c)` for `int p(s - c) f(s) ds`.
///
/// Gaussian profiles use Gauss-Hermite with `n` nodes. Trapezoids use
/// `panels` panels of `n` Gauss-Legendre nodes on each linear piece.
pub fn profile_rule(p: &Profile, c: f64, n: usize, panels: usize) -> Vec<(f64, f64)> {
    match *p {
        Profile::Gauss { sigma } => GaussHermite::new(n).normal(c, sigma),
        Profile::Boxes { .. } => {
            let gl = GaussLegendre::new(n);
            let kinks = p.kinks();
            let mut out = Vec::new();
            for w in kinks.windows(2) {
                for (x, wt) in gl.mapped(w[0], w[1], panels) {
                    out.push((c + x, wt * p.value(x)));
                }
            }
            out
        }
    }
}

/// Frequency-domain evaluation for one transverse offset, reusable for any
/// delay.
///
/// Holds, for `omega_i` on the band grid,
///
/// ```text
/// S_I(w) = N(w) W(w) sum_nodes w_n e^{-i w rho_z / v_g} Im R~(rho_n, w)
/// S_R(w) = same with Re R~
/// ```
///
/// where `N` is the Fourier transform of the temporal profile and `W` the
/// band window times trapezoid weight.
#[derive(Debug, Clone)]
pub struct SpectralPlan {
    omega: Vec<f64>,
    s_i: Vec<Complex64>,
    s_r: Vec<Complex64>,
    nodes: usize,
}

impl SpectralPlan {
    pub fn new(k: &OverlapKernel, ks: &KernelSet, opts: &IntegratorOptions) -> Result<Self> {
        let band = ks.band();
        let n_t = opts.transverse_nodes;
        let xs = profile_rule(&k.x, k.delta_x, n_t, 2);
        let ys = profile_rule(&k.y, k.delta_y, n_t, 2);
        let zs = profile_rule(&k.z, 0.0, 8, opts.z_panels);
        let weights: Vec<f64> = (0..band.n_omega).map(|i| band.weight(i) * k.t.fourier(band.omega(i))).collect();
        let active: Vec<usize> = (0..band.n_omega).filter(|&i| weights[i] != 0.0).collect();
        let omega: Vec<f64> = active.iter().map(|&i| band.omega(i)).collect();
        let m = active.len();

        // one partial spectrum per z node, summed in node order
        let partial: Vec<Result<(Vec<Complex64>, Vec<Complex64>, usize)>> = zs
            .par_iter()
            .map(|&(z, wz)| {
                let mut buf = vec![Complex64::new(0.0, 0.0); band.n_omega];
                let mut a_i = vec![0.0; m];
                let mut a_r = vec![0.0; m];
                let mut used = 0;
                for &(x, wx) in &xs {
                    for &(y, wy) in &ys {
                        let rho = (x * x + y * y + z * z).sqrt();
                        if rho < opts.rho_min {
                            continue;
                        }
                        used += 1;
                        ks.fill_response([x, y, z], &mut buf)?;
                        let w = wx * wy;
                        for (j, &i) in active.iter().enumerate() {
                            a_i[j] += w * buf[i].im;
                            a_r[j] += w * buf[i].re;
                        }
                    }
                }
                let mut s_i = vec![Complex64::new(0.0, 0.0); m];
                let mut s_r = vec![Complex64::new(0.0, 0.0); m];
                for j in 0..m {
                    let ph = Complex64::from_polar(wz, -omega[j] * z * k.inv_vg);
                    s_i[j] = ph * a_i[j];
                    s_r[j] = ph * a_r[j];
                }
                Ok((s_i, s_r, used))
            })
            .collect();

        let mut s_i = vec![Complex64::new(0.0, 0.0); m];
        let mut s_r = vec![Complex64::new(0.0, 0.0); m];
        let mut nodes = 0;
        for p in partial {
            let (pi, pr, used) = p?;
            nodes += used;
            for j in 0..m {
                s_i[j] += pi[j];
                s_r[j] += pr[j];
            }
        }
        for (j, &i) in active.iter().enumerate() {
            s_i[j] *= k.scale * weights[i];
            s_r[j] *= k.scale * weights[i];
        }
        Ok(Self { omega, s_i, s_r, nodes })
    }

    /// Number of spatial nodes that passed the coincidence cutoff.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn integrals(&self, delta_t: f64) -> Integrals {
        let mut zi = Complex64::new(0.0, 0.0);
        let mut zr = Complex64::new(0.0, 0.0);
        for j in 0..self.omega.len() {
            let ph = Complex64::from_polar(1.0, -self.omega[j] * delta_t);
            zi += ph * self.s_i[j];
            zr += ph * self.s_r[j];
        }
        Integrals {
            i_c: HBAR * zi.re / PI,
            i_r_prime: zr.re / PI,
            i_r_dprime: -zi.im / PI,
        }
    }
}

/// `int d^3rho dtau K(rho, tau) f(rho, tau)` for a smooth kernel `f`, by
/// product quadrature over the overlap profiles.
pub fn reduced_integral<F: Fn([f64; 3], f64) -> f64>(k: &OverlapKernel, f: F, n: usize) -> f64 {
    let xs = profile_rule(&k.x, k.delta_x, n, 1);
    let ys = profile_rule(&k.y, k.delta_y, n, 1);
    let zs = profile_rule(&k.z, 0.0, n, 2);
    let mut sum = 0.0;
    for &(z, wz) in &zs {
        let ts = profile_rule(&k.t, k.tau_center(z), n, 1);
        for &(x, wx) in &xs {
            for &(y, wy) in &ys {
                for &(t, wt) in &ts {
                    sum += wx * wy * wz * wt * f([x, y, z], t);
                }
            }
        }
    }
    k.scale * sum
}

/// `int d^4x1 d^4x2 L1(x1) L2(x2) f(r1 - r2, t1 - t2)` by nested product
/// quadrature over both envelopes, `n` nodes per dimension.
pub fn direct_integral<F: Fn([f64; 3], f64) -> f64>(
    p1: &PulseEnvelope,
    p2: &PulseEnvelope,
    f: F,
    n: usize,
) -> f64 {
    let nodes = |p: &PulseEnvelope| {
        let gate = |c: f64, g: crate::pulses::Gate| match g {
            crate::pulses::Gate::Box { width } => GaussLegendre::new(n)
                .mapped(c - 0.5 * width, c + 0.5 * width, 1)
                .into_iter()
                .map(|(x, w)| (x, w / width))
                .collect::<Vec<_>>(),
            crate::pulses::Gate::Gauss { fwhm } => {
                GaussHermite::new(n).normal(c, crate::pulses::fwhm_to_sigma(fwhm))
            }
        };
        let half = 0.5 * p.crystal_length;
        let zs: Vec<(f64, f64)> = GaussLegendre::new(n)
            .mapped(-half, half, 1)
            .into_iter()
            .map(|(z, w)| (z, w / p.crystal_length))
            .collect();
        let mut out = Vec::new();
        for &(x, wx) in &gate(p.x, p.transverse_gate()) {
            for &(y, wy) in &gate(p.y, p.transverse_gate()) {
                for &(z, wz) in &zs {
                    for &(t, wt) in &gate(p.arrival(z), p.temporal_gate()) {
                        out.push(([x, y, z], t, p.amplitude * wx * wy * wz * wt));
                    }
                }
            }
        }
        out
    };
    let a = nodes(p1);
    let b = nodes(p2);
    let mut sum = 0.0;
    for (r1, t1, w1) in &a {
        let mut inner = 0.0;
        for (r2, t2, w2) in &b {
            inner += w2 * f([r1[0] - r2[0], r1[1] - r2[1], r1[2] - r2[2]], t1 - t2);
        }
        sum += w1 * inner;
    }
    sum
}
