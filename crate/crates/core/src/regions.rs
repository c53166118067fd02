//! Causal classification of a pulse pair.
//!
//! Over the support of the overlap kernel the functional
//! `s = c_n |tau| - |rho|` is negative everywhere in region I (completely
//! space-like), positive everywhere in region III (completely time-like) and
//! changes sign in region II, where causal contact is possible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::Medium;
use crate::pulses::{overlap_kernel, OverlapKernel, Profile, PulseEnvelope};
use crate::units::C;

/// Gaussian supports are cut where the kernel falls to this fraction of its
/// peak.
pub const GAUSS_LEVEL: f64 = 0.01;

/// Target precision of the extrema of `s`, um.
const PRECISION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionLabel {
    pub region: Region,
    /// `s_max` in region I, `s_min` in region III, and the distance to the
    /// nearer of the two sign changes (`min(s_max, -s_min)`) in region II.
    pub margin: f64,
    pub s_min: f64,
    pub s_max: f64,
}

impl RegionLabel {
    fn from_extrema(s_min: f64, s_max: f64) -> Self {
        let (region, margin) = if s_max < 0.0 {
            (Region::I, s_max)
        } else if s_min > 0.0 {
            (Region::III, s_min)
        } else {
            (Region::II, s_max.min(-s_min))
        };
        RegionLabel { region, margin, s_min, s_max }
    }
}

/// Place `p1` at transverse offset `delta_r` (along x) and delay `delta_t`
/// relative to `p2`.
pub fn pulse_pair(p1: &PulseEnvelope, p2: &PulseEnvelope, delta_r: f64, delta_t: f64) -> (PulseEnvelope, PulseEnvelope) {
    let q1 = PulseEnvelope {
        x: p2.x + delta_r,
        y: p2.y,
        t0: p2.t0 + delta_t,
        ..*p1
    };
    (q1, *p2)
}

/// Light-cone speed used for classification, `c / n(omega -> 0)`.
pub fn cone_speed(medium: &Medium) -> f64 {
    C / medium.front_index()
}

pub fn classify_numeric(p1: &PulseEnvelope, p2: &PulseEnvelope, medium: &Medium) -> Result<RegionLabel> {
    classify_kernel(&overlap_kernel(p1, p2)?, cone_speed(medium))
}

/// Classify from the support of an overlap kernel.
pub fn classify_kernel(k: &OverlapKernel, c_n: f64) -> Result<RegionLabel> {
    let support = Support::new(k)?;
    let (s_min, s_max) = support.extrema(c_n)?;
    Ok(RegionLabel::from_extrema(s_min, s_max))
}

/// Support of the kernel in `(rho, tau)`: the transverse cross-section at
/// temporal offset `T = tau - tau_center(rho_z)` is a rectangle (boxes) or a
/// disc (Gaussians, cut at [`GAUSS_LEVEL`]).
struct Support {
    centre: (f64, f64),
    half_z: f64,
    half_t: f64,
    delta_t: f64,
    inv_vg: f64,
    section: Section,
}

enum Section {
    Rect { hx: f64, hy: f64 },
    Disc { r0: f64 },
}

impl Support {
    fn new(k: &OverlapKernel) -> Result<Self> {
        let section = match (k.x, k.y, k.t) {
            (Profile::Boxes { .. }, Profile::Boxes { .. }, Profile::Boxes { .. }) => Section::Rect {
                hx: k.x.half_width(GAUSS_LEVEL),
                hy: k.y.half_width(GAUSS_LEVEL),
            },
            (Profile::Gauss { sigma: sx }, Profile::Gauss { sigma: sy }, Profile::Gauss { .. }) if sx == sy => {
                Section::Disc { r0: k.x.half_width(GAUSS_LEVEL) }
            }
            _ => return Err(Error::Unsupported("classification needs equal transverse profiles".into())),
        };
        Ok(Support {
            centre: (k.delta_x, k.delta_y),
            half_z: k.z.half_width(GAUSS_LEVEL),
            half_t: k.t.half_width(GAUSS_LEVEL),
            delta_t: k.delta_t,
            inv_vg: k.inv_vg,
            section,
        })
    }

    /// Nearest and farthest transverse distance from the axis at offset `t`.
    fn transverse_range(&self, t: f64) -> (f64, f64) {
        let (dx, dy) = (self.centre.0.abs(), self.centre.1.abs());
        match self.section {
            Section::Rect { hx, hy } => (
                (dx - hx).max(0.0).hypot((dy - hy).max(0.0)),
                (dx + hx).hypot(dy + hy),
            ),
            Section::Disc { r0 } => {
                let r = r0 * (1.0 - (t / self.half_t).powi(2)).max(0.0).sqrt();
                let d = dx.hypot(dy);
                ((d - r).max(0.0), d + r)
            }
        }
    }

    fn s(&self, c_n: f64, rho_z: f64, t: f64, upper: bool) -> f64 {
        let (near, far) = self.transverse_range(t);
        let d = if upper { near } else { far };
        let tau = self.delta_t + rho_z * self.inv_vg + t;
        c_n * tau.abs() - d.hypot(rho_z)
    }

    fn extrema(&self, c_n: f64) -> Result<(f64, f64)> {
        let lo = self.search(c_n, false, 48)?;
        let hi = self.search(c_n, true, 48)?;
        // An independent coarser search must agree, else sampling missed a
        // narrow extremum.
        let lo2 = self.search(c_n, false, 20)?;
        let hi2 = self.search(c_n, true, 20)?;
        let scale = c_n * (self.delta_t.abs() + self.half_t) + self.half_z + self.centre.0.hypot(self.centre.1);
        let tol = PRECISION * scale.max(1.0);
        if (lo - lo2).abs() > tol || (hi - hi2).abs() > tol {
            return Err(Error::UnresolvedSupport(format!(
                "s extrema disagree between sampling densities: min {lo} vs {lo2}, max {hi} vs {hi2}"
            )));
        }
        Ok((lo, hi))
    }

    /// Extremum of `s` over `(rho_z, T)` as nested 1-D searches split at
    /// the kinks of `|tau|`.
    fn search(&self, c_n: f64, upper: bool, n: usize) -> Result<f64> {
        let sign = if upper { 1.0 } else { -1.0 };
        let (hz, ht) = (self.half_z, self.half_t);
        let inner = |z: f64| {
            let kink = -(self.delta_t + z * self.inv_vg);
            maximize(|t| sign * self.s(c_n, z, t, upper), -ht, ht, n / 2, &[kink, 0.0])
        };
        let kinks: Vec<f64> = [-ht, 0.0, ht]
            .iter()
            .map(|o| (o - self.delta_t) / self.inv_vg)
            .collect();
        let best = maximize(inner, -hz, hz, n, &kinks);
        if !best.is_finite() {
            return Err(Error::UnresolvedSupport("non-finite s on the support".into()));
        }
        Ok(sign * best)
    }
}

/// Maximum of `f` on `[a, b]`, smooth between the given kinks: sampling on
/// each piece, then golden-section refinement around the best sample.
fn maximize<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize, kinks: &[f64]) -> f64 {
    let pts = crate::quad::breakpoints(a, b, kinks);
    let mut best = f64::NEG_INFINITY;
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let h = (hi - lo) / n as f64;
        let mut arg = 0;
        let mut top = f64::NEG_INFINITY;
        for i in 0..=n {
            let v = f(lo + i as f64 * h);
            if v > top {
                top = v;
                arg = i;
            }
        }
        let (mut x0, mut x1) = (lo + arg.saturating_sub(1) as f64 * h, lo + (arg + 1).min(n) as f64 * h);
        const G: f64 = 0.618_033_988_749_895;
        let mut c = x1 - G * (x1 - x0);
        let mut d = x0 + G * (x1 - x0);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..48 {
            if fc > fd {
                x1 = d;
                d = c;
                fd = fc;
                c = x1 - G * (x1 - x0);
                fc = f(c);
            } else {
                x0 = c;
                c = d;
                fc = fd;
                d = x0 + G * (x1 - x0);
                fd = f(d);
            }
        }
        best = best.max(top).max(fc).max(fd);
    }
    best
}

/// Parameters of the analytic boundary formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    pub n: f64,
    pub n_g: f64,
    pub crystal_length: f64,
    pub duration: f64,
    pub waist: f64,
}

impl BoundaryParams {
    pub fn new(p: &PulseEnvelope, medium: &Medium) -> Self {
        BoundaryParams {
            n: medium.front_index(),
            n_g: p.n_g,
            crystal_length: p.crystal_length,
            duration: p.duration,
            waist: p.waist,
        }
    }

    fn c_n(&self) -> f64 {
        C / self.n
    }

    /// Extra group delay of a full crystal pass, as a length: `L n_g / n`.
    fn walk(&self) -> f64 {
        self.crystal_length * self.n_g / self.n
    }
}

/// Signed radicand `sign(a) a^2 - L^2`: the formulas also need `a > 0`.
fn radical(a: f64, l: f64) -> Result<f64> {
    let radicand = a.signum() * a * a - l * l;
    if radicand < 0.0 {
        return Err(Error::BoundaryDomain { radicand });
    }
    Ok(radicand.sqrt())
}

/// Separation above which the pair is completely space-like, valid for
/// `delta_r >> w`.
pub fn boundary_i_ii(delta_t: f64, p: &BoundaryParams) -> Result<f64> {
    let a = p.c_n() * (delta_t + p.duration) + p.walk();
    Ok(p.waist + radical(a, p.crystal_length)?)
}

/// Separation below which the pair is completely time-like, valid for
/// `c_n delta_t >> w` and `delta_r > w`.
pub fn boundary_ii_iii(delta_t: f64, p: &BoundaryParams) -> Result<f64> {
    let a = p.c_n() * (delta_t - p.duration) - p.walk();
    Ok(-p.waist + radical(a, p.crystal_length)?)
}

/// Delay at which [`boundary_i_ii`] reaches `delta_r`.
pub fn delay_i_ii(delta_r: f64, p: &BoundaryParams) -> f64 {
    let l = p.crystal_length;
    ((delta_r - p.waist).hypot(l) - p.walk()) / p.c_n() - p.duration
}

/// Delay at which [`boundary_ii_iii`] reaches `delta_r`.
pub fn delay_ii_iii(delta_r: f64, p: &BoundaryParams) -> f64 {
    let l = p.crystal_length;
    ((delta_r + p.waist).hypot(l) + p.walk()) / p.c_n() + p.duration
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Between regions I and II, where `s_max` vanishes.
    SpaceLike,
    /// Between regions II and III, where `s_min` vanishes.
    TimeLike,
}

/// Separation where the numeric classifier switches across `which` at a
/// fixed delay, by bisection on `delta_r` in `[0, r_max]`.
pub fn numeric_boundary(
    p1: &PulseEnvelope,
    p2: &PulseEnvelope,
    medium: &Medium,
    delta_t: f64,
    which: Boundary,
    r_max: f64,
) -> Result<Option<f64>> {
    let c_n = cone_speed(medium);
    let mut failure = None;
    let mut g = |dr: f64| {
        let (q1, q2) = pulse_pair(p1, p2, dr, delta_t);
        match overlap_kernel(&q1, &q2).and_then(|k| classify_kernel(&k, c_n)) {
            Ok(l) => match which {
                Boundary::SpaceLike => l.s_max,
                Boundary::TimeLike => l.s_min,
            },
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let root = crate::quad::bracket_root(&mut g, 0.0, r_max);
    match failure {
        Some(e) => Err(e),
        None => Ok(root),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundarySample {
    pub delta_t: f64,
    pub i_ii: Option<f64>,
    pub ii_iii: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RegionMap {
    pub delta_r: Vec<f64>,
    pub delta_t: Vec<f64>,
    /// Row-major in `delta_t`, then `delta_r`. Failed cells keep the error
    /// text.
    pub cells: Vec<std::result::Result<RegionLabel, String>>,
    pub boundaries: Vec<BoundarySample>,
}

impl RegionMap {
    pub fn cell(&self, i_t: usize, i_r: usize) -> &std::result::Result<RegionLabel, String> {
        &self.cells[i_t * self.delta_r.len() + i_r]
    }
}

pub fn region_map(p1: &PulseEnvelope, p2: &PulseEnvelope, medium: &Medium, delta_r: &[f64], delta_t: &[f64]) -> RegionMap {
    let c_n = cone_speed(medium);
    let nr = delta_r.len();
    let cells = (0..delta_t.len() * nr)
        .into_par_iter()
        .map(|idx| {
            let (q1, q2) = pulse_pair(p1, p2, delta_r[idx % nr], delta_t[idx / nr]);
            overlap_kernel(&q1, &q2)
                .and_then(|k| classify_kernel(&k, c_n))
                .map_err(|e| e.to_string())
        })
        .collect();
    let params = BoundaryParams::new(p1, medium);
    let boundaries = delta_t
        .iter()
        .map(|&dt| BoundarySample {
            delta_t: dt,
            i_ii: boundary_i_ii(dt, &params).ok(),
            ii_iii: boundary_ii_iii(dt, &params).ok(),
        })
        .collect();
    RegionMap {
        delta_r: delta_r.to_vec(),
        delta_t: delta_t.to_vec(),
        cells,
        boundaries,
    }
}
