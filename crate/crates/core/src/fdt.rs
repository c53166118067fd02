//! Fluctuation-dissipation check on delay scans.
//!
//! The vacuum signal equals twice the Hilbert transform of the dissipative
//! source signal, `G_vac(dt) = 2 H[G_R''](dt)` with
//! `H[f](t) = (1/pi) PV int f(t') / (t - t') dt'`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::SignalRecord;
use crate::quad::GaussLegendre;

/// Fewest samples accepted by the transform.
pub const MIN_SAMPLES: usize = 64;

/// Fraction of the window, centred, on which residuals are reported.
pub const INTERIOR: f64 = 0.6;

/// Largest edge-to-peak ratio of `G_vac` accepted by the verifier.
pub const EDGE_RATIO: f64 = 0.05;

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.abs().ln()
    }
}

/// Product-integration weight of sample `k` for output `i`, `d = i - k`,
/// with the input linear between samples. The PV cell is symmetric, so
/// `w(0) = 0`.
fn weight(d: f64) -> f64 {
    if d.abs() > 64.0 {
        // Second difference of x ln|x| by Taylor series, free of the
        // cancellation in the direct form.
        let u = 1.0 / d;
        let u2 = u * u;
        return u * (1.0 + u2 * (1.0 / 6.0 + u2 * (1.0 / 15.0)));
    }
    xlogx(d + 1.0) + xlogx(d - 1.0) - 2.0 * xlogx(d)
}

/// Half weights for the two window ends, which only have one segment.
fn left_end_weight(d: f64) -> f64 {
    // Segment [0, 1] seen from output index d.
    1.0 + xlogx(d - 1.0) - (d - 1.0) * log_or_zero(d)
}

fn right_end_weight(d: f64) -> f64 {
    // Segment [-1, 0] seen from output index d.
    xlogx(d + 1.0) - (d + 1.0) * log_or_zero(d) - 1.0
}

/// Finite part of `ln|x|` at the window ends.
fn log_or_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().ln()
    }
}

/// Hilbert transform of uniformly spaced samples. The step cancels out of
/// the product-integration weights. Values within a cell of either end are
/// finite parts of a log-divergent integral.
pub fn hilbert_transform(samples: &[f64], step: f64) -> Result<Vec<f64>> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::GridTooCoarse { min: MIN_SAMPLES, got: n });
    }
    if !(step > 0.0) {
        return Err(Error::validation("step", step, "step > 0"));
    }
    let inner: Vec<f64> = (0..n as i64).map(|d| weight(d as f64)).collect();
    let w = |d: i64| if d >= 0 { inner[d as usize] } else { -inner[(-d) as usize] };
    let last = (n - 1) as i64;
    Ok((0..n as i64)
        .map(|i| {
            let mut sum = 0.0;
            for k in 1..last {
                sum += w(i - k) * samples[k as usize];
            }
            sum += left_end_weight(i as f64) * samples[0];
            sum += right_end_weight((i - last) as f64) * samples[last as usize];
            sum / std::f64::consts::PI
        })
        .collect())
}

/// Algebraic tail `A/y + B/y^2` with `y = t - origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tail {
    pub a: f64,
    pub b: f64,
}

impl Tail {
    /// Least-squares fit on the given `(y, f)` samples.
    fn fit(points: &[(f64, f64)]) -> Tail {
        let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(y, f) in points {
            let (u, v) = (1.0 / y, 1.0 / (y * y));
            s11 += u * u;
            s12 += u * v;
            s22 += v * v;
            r1 += u * f;
            r2 += v * f;
        }
        let det = s11 * s22 - s12 * s12;
        if det.abs() < 1e-300 {
            return Tail { a: 0.0, b: 0.0 };
        }
        Tail {
            a: (r1 * s22 - r2 * s12) / det,
            b: (s11 * r2 - s12 * r1) / det,
        }
    }

    /// `(1/pi) int_Y^inf (A/y + B/y^2) / (x - y) dy` for `x < Y`, after
    /// `y = Y/u`.
    fn beyond(&self, x: f64, end: f64, rule: &GaussLegendre) -> f64 {
        let f = |u: f64| (self.a + self.b * u / end) / (x * u - end);
        rule.integrate(f, 0.0, 1.0, 1) / std::f64::consts::PI
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCorrection {
    pub origin: f64,
    pub left: Tail,
    pub right: Tail,
    /// Largest correction applied to an interior sample.
    pub max_interior: f64,
}

/// Hilbert transform with fitted algebraic tails added beyond both window
/// ends. Each tail is fitted on the outer tenth of the window.
pub fn hilbert_transform_with_tail(samples: &[f64], start: f64, step: f64, origin: f64) -> Result<(Vec<f64>, TailCorrection)> {
    let mut out = hilbert_transform(samples, step)?;
    let n = samples.len();
    let m = (n / 10).max(8);
    let y = |i: usize| start + i as f64 * step - origin;
    let left_pts: Vec<(f64, f64)> = (0..m).map(|i| (y(i), samples[i])).collect();
    let right_pts: Vec<(f64, f64)> = (n - m..n).map(|i| (y(i), samples[i])).collect();
    let (left, right) = (Tail::fit(&left_pts), Tail::fit(&right_pts));
    let (y_lo, y_hi) = (y(0), y(n - 1));
    if !(y_lo < 0.0 && y_hi > 0.0) {
        return Err(Error::validation("origin", origin, "strictly inside the window"));
    }
    let rule = GaussLegendre::new(32);
    let (lo, hi) = interior(n);
    let mut max_interior: f64 = 0.0;
    for (i, v) in out.iter_mut().enumerate() {
        let x = y(i);
        // y -> -y maps the left tail onto a right tail with A -> -A, seen
        // from -x, and flips the sign of the integral.
        let mirrored = Tail { a: -left.a, b: left.b };
        let c = right.beyond(x, y_hi, &rule) - mirrored.beyond(-x, -y_lo, &rule);
        *v += c;
        if i >= lo && i < hi {
            max_interior = max_interior.max(c.abs());
        }
    }
    Ok((out, TailCorrection { origin, left, right, max_interior }))
}

/// Index range `[lo, hi)` of the centred interior fraction.
pub fn interior(n: usize) -> (usize, usize) {
    let cut = ((1.0 - INTERIOR) * 0.5 * n as f64).round() as usize;
    (cut, n - cut)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdtReport {
    pub delta_t: Vec<f64>,
    pub g_vac: Vec<f64>,
    pub g_r_dprime: Vec<f64>,
    /// `2 H[G_R'']`, the prediction for `G_vac`.
    pub prediction: Vec<f64>,
    /// `||prediction - g_vac|| / ||g_vac||` over the interior.
    pub l2_relative: f64,
    /// `max |prediction - g_vac| / max |g_vac|` over the interior.
    pub max_relative: f64,
    pub interior: (usize, usize),
    pub edge_ratio: f64,
    pub tail: Option<TailCorrection>,
    pub warnings: Vec<String>,
}

impl FdtReport {
    pub fn residual(&self) -> Vec<f64> {
        self.prediction.iter().zip(&self.g_vac).map(|(p, g)| p - g).collect()
    }
}

/// Check `G_vac = 2 H[G_R'']` on a uniform delay grid.
pub fn verify_fdt_series(delta_t: &[f64], g_vac: &[f64], g_r_dprime: &[f64], tail: bool) -> Result<FdtReport> {
    let n = delta_t.len();
    if g_vac.len() != n || g_r_dprime.len() != n {
        return Err(Error::validation("scan", n, "all series share one grid"));
    }
    if n < MIN_SAMPLES {
        return Err(Error::GridTooCoarse { min: MIN_SAMPLES, got: n });
    }
    let step = (delta_t[n - 1] - delta_t[0]) / (n - 1) as f64;
    for (i, t) in delta_t.iter().enumerate() {
        if (t - (delta_t[0] + i as f64 * step)).abs() > 1e-9 * step.abs().max(1.0) * n as f64 {
            return Err(Error::validation("delta_t", t, "uniform grid"));
        }
    }
    let peak = g_vac.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let edge_ratio = g_vac[0].abs().max(g_vac[n - 1].abs()) / peak;
    if !(edge_ratio < EDGE_RATIO) {
        return Err(Error::WindowTooNarrow { ratio: edge_ratio });
    }
    let (h, tail) = if tail {
        let origin = 0.5 * (delta_t[0] + delta_t[n - 1]);
        let (h, t) = hilbert_transform_with_tail(g_r_dprime, delta_t[0], step, origin)?;
        (h, Some(t))
    } else {
        (hilbert_transform(g_r_dprime, step)?, None)
    };
    let prediction: Vec<f64> = h.iter().map(|v| 2.0 * v).collect();
    let (lo, hi) = interior(n);
    let (mut num, mut den, mut worst, mut top) = (0.0, 0.0, 0.0_f64, 0.0_f64);
    for i in lo..hi {
        let r = prediction[i] - g_vac[i];
        num += r * r;
        den += g_vac[i] * g_vac[i];
        worst = worst.max(r.abs());
        top = top.max(g_vac[i].abs());
    }
    Ok(FdtReport {
        delta_t: delta_t.to_vec(),
        g_vac: g_vac.to_vec(),
        g_r_dprime: g_r_dprime.to_vec(),
        prediction,
        l2_relative: (num / den).sqrt(),
        max_relative: worst / top,
        interior: (lo, hi),
        edge_ratio,
        tail,
        warnings: Vec::new(),
    })
}

/// Check a completed delay scan at one separation. Failed rows are an
/// error since the transform needs every sample.
pub fn verify_fdt_signal(scan: &[SignalRecord], tail: bool) -> Result<FdtReport> {
    if let Some(bad) = scan.iter().find(|r| !r.status.is_ok()) {
        return Err(Error::validation("scan", bad.delta_t, "every row evaluated"));
    }
    let dt: Vec<f64> = scan.iter().map(|r| r.delta_t).collect();
    let vac: Vec<f64> = scan.iter().map(|r| r.g_vac).collect();
    let rdd: Vec<f64> = scan.iter().map(|r| r.g_r_dprime).collect();
    verify_fdt_series(&dt, &vac, &rdd, tail)
}
