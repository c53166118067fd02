//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test -p eosvac --test acceptance [-- 2 5]` runs all criteria or
//! the listed ones. Reference values are rebuilt here from first principles
//! rather than taken from the library.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use eosvac::integrator::{integrate_all, scan_delays, IntegratorOptions, PointStatus, SignalRecord};
use eosvac::kernels::{KernelSet, SpectralBand};
use eosvac::medium::Medium;
use eosvac::pulses::{overlap_kernel, OverlapKernel, PulseEnvelope, PulseShape};
use eosvac::regions::{numeric_boundary, pulse_pair, region_map, Boundary, Region};

const C: f64 = 0.299_792_458;
const W: f64 = 10.0;
const TAU_P: f64 = 185.0;
const L: f64 = 100.0;
const N: f64 = 3.33;
const N_G: f64 = 3.556;
const DELTA_R: f64 = 200.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria = [
        Criterion { id: 1, name: "wave-plate algebra", budget: Duration::from_secs(1), run: c1_waveplate },
        Criterion { id: 2, name: "causality, exact zeros", budget: Duration::from_secs(300), run: c2_causality },
        Criterion { id: 3, name: "space- and time-like correlations", budget: Duration::from_secs(300), run: c3_correlations },
        Criterion { id: 4, name: "region map", budget: Duration::from_secs(120), run: c4_region_map },
        Criterion { id: 5, name: "decay-law contrast", budget: Duration::from_secs(900), run: c5_decay },
        Criterion { id: 6, name: "kernel-level FDT", budget: Duration::from_secs(60), run: c6_kernel_fdt },
        Criterion { id: 7, name: "signal-level FDT", budget: Duration::from_secs(1200), run: c7_signal_fdt },
        Criterion { id: 8, name: "oracle equivalence", budget: Duration::from_secs(600), run: c8_oracles },
        Criterion { id: 9, name: "determinism", budget: Duration::from_secs(600), run: c9_determinism },
    ];
    let mut failed = 0;
    for c in criteria.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let in_time = took <= c.budget;
        let pass = res.pass && in_time;
        if !pass {
            failed += 1;
        }
        let late = if in_time { "" } else { ", over budget" };
        println!(
            "{} criterion {} ({}): {} [{:.1} s of {} s{late}]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            res.detail,
            took.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- fixtures

fn pulse(shape: PulseShape) -> PulseEnvelope {
    PulseEnvelope {
        shape,
        waist: W,
        duration: TAU_P,
        x: 0.0,
        y: 0.0,
        t0: 0.0,
        crystal_length: L,
        n_g: N_G,
        amplitude: 1.0,
    }
}

fn flat_medium() -> Medium {
    Medium::Dispersionless { n: N, n_g: N_G }
}

fn flat() -> KernelSet {
    KernelSet::new(flat_medium(), SpectralBand::default()).unwrap()
}

fn lorentz() -> KernelSet {
    KernelSet::new(Medium::gap_lorentz(N_G), SpectralBand::default()).unwrap()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn kernel_at(shape: PulseShape, dr: f64, dt: f64) -> OverlapKernel {
    let p = pulse(shape);
    let (q1, q2) = pulse_pair(&p, &p, dr, dt);
    overlap_kernel(&q1, &q2).unwrap()
}

/// 100-point rectangular-pulse scan over `[0, 5] ps`, shared by 2 and 3.
fn rect_scan() -> &'static Vec<SignalRecord> {
    static SCAN: OnceLock<Vec<SignalRecord>> = OnceLock::new();
    SCAN.get_or_init(|| {
        let p = pulse(PulseShape::Rectangular);
        let delays = linspace(0.0, 5000.0, 100);
        scan_delays(&p, &p, &flat(), &IntegratorOptions::default(), DELTA_R, &delays, None).unwrap()
    })
}

/// Light-cone speed in the crystal and the transit walk-off as a length.
fn cone() -> (f64, f64) {
    (C / N, L * N_G / N)
}

/// Largest separation at which some event of one pulse can still signal
/// to the other: leading edge leaves the front corner of pulse 1 towards
/// the nearest corner of pulse 2.
fn analytic_i_ii(dt: f64) -> Option<f64> {
    let (c_n, walk) = cone();
    let a = c_n * (dt + TAU_P) + walk;
    let rad = a.signum() * a * a - L * L;
    (rad >= 0.0).then(|| W + rad.sqrt())
}

fn analytic_ii_iii(dt: f64) -> Option<f64> {
    let (c_n, walk) = cone();
    let a = c_n * (dt - TAU_P) - walk;
    let rad = a.signum() * a * a - L * L;
    (rad >= 0.0).then(|| -W + rad.sqrt())
}

/// Delays at which the two boundaries cross `dr`, from the same geometry.
fn analytic_delays(dr: f64) -> (f64, f64) {
    let (c_n, walk) = cone();
    let lo = ((dr - W).hypot(L) - walk) / c_n - TAU_P;
    let hi = ((dr + W).hypot(L) + walk) / c_n + TAU_P;
    (lo, hi)
}

/// Smallest `x` in `(a, b]` with `pred(x)`, given `!pred(a)` and `pred(b)`.
fn bisect(pred: impl Fn(f64) -> bool, mut a: f64, mut b: f64, tol: f64) -> f64 {
    while b - a > tol {
        let m = 0.5 * (a + b);
        if pred(m) {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// ---------------------------------------------------------------- 1

fn c1_waveplate() -> Outcome {
    use eosvac::waveplate::coefficients;
    let eps = 4.0 * f64::EPSILON;
    let co = |a: f64, b: f64| {
        let c = coefficients(a, b).unwrap();
        [c.p_vac, c.p_s_prime, c.p_s_dprime]
    };
    let close = |x: [f64; 3], y: [f64; 3]| x.iter().zip(y).all(|(a, b)| (a - b).abs() <= eps);
    let diff = |x: [f64; 3], y: [f64; 3]| [x[0] - y[0], x[1] - y[1], x[2] - y[2]];

    let vac = co(PI / 2.0, PI / 2.0);
    let src = co(PI / 2.0, PI);
    let re = diff(co(2.0 * PI / 3.0, 2.0 * PI / 3.0), co(4.0 * PI / 3.0, 4.0 * PI / 3.0));
    let im = diff(src, co(PI, PI / 2.0));
    let single = co(2.0 * PI / 3.0, 2.0 * PI / 3.0)[1];

    let checks = [
        ("(pi/2, pi/2)", close(vac, [1.0, 0.0, 0.0])),
        ("(pi/2, pi)", close(src, [0.0, 1.0, 1.0])),
        ("reactive difference", close(re, [0.0, 2.0 * single, 0.0]) && single.abs() > 0.1),
        ("dissipative difference", close(im, [0.0, 0.0, 2.0])),
    ];
    let bad: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(
        bad.is_empty(),
        format!(
            "vac {vac:?}, source {src:?}, reactive diff {re:?}, dissipative diff {im:?}{}",
            if bad.is_empty() { String::new() } else { format!("; off: {bad:?}") }
        ),
    )
}

// ---------------------------------------------------------------- 2

fn c2_causality() -> Outcome {
    let rows = rect_scan();
    if let Some(r) = rows.iter().find(|r| !r.status.is_ok()) {
        return outcome(false, format!("point at {} fs failed: {:?}", r.delta_t, r.status));
    }
    let in_region = |r: &SignalRecord, g: Region| r.region == Some(g);
    let peak = rows.iter().filter(|r| in_region(r, Region::II)).map(|r| r.g_s.abs()).fold(0.0, f64::max);
    let outside: Vec<&SignalRecord> = rows.iter().filter(|r| !in_region(r, Region::II)).collect();
    let off = outside.iter().map(|r| r.g_s.abs()).fold(0.0, f64::max);
    let exact_zeros = outside.iter().filter(|r| r.g_s == 0.0).count();
    if rows.iter().any(|r| r.region.is_none()) || peak == 0.0 {
        return outcome(false, "unlabelled rows or no region II signal");
    }

    let thr = 1e-3 * peak;
    let band: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].g_s.abs() > thr).collect();
    let (first, last) = (band[0], band[band.len() - 1]);
    let contiguous = last - first + 1 == band.len();
    let inside = band.iter().all(|&i| in_region(&rows[i], Region::II));
    if first == 0 || last == rows.len() - 1 {
        return outcome(false, "band touches the scan edge");
    }

    // refine the band and support edges between grid points
    let ks = flat();
    let opts = IntegratorOptions::default();
    let base = kernel_at(PulseShape::Rectangular, DELTA_R, 0.0);
    let g_s = |dt: f64| integrate_all(&base.with_delay(dt), &ks, &opts).unwrap().g_s();
    let t = |i: usize| rows[i].delta_t;
    let lo = bisect(|dt| g_s(dt).abs() > thr, t(first - 1), t(first), 0.5);
    let hi = bisect(|dt| g_s(dt).abs() <= thr, t(last), t(last + 1), 0.5);
    let last_zero = (0..first).rev().find(|&i| rows[i].g_s == 0.0).unwrap_or(0);
    let first_zero = (last + 1..rows.len()).find(|&i| rows[i].g_s == 0.0).unwrap_or(rows.len() - 1);
    let s_lo = bisect(|dt| g_s(dt) != 0.0, t(last_zero), t(last_zero + 1), 0.5);
    let s_hi = bisect(|dt| g_s(dt) == 0.0, t(first_zero - 1), t(first_zero), 0.5);

    let (ref_lo, ref_hi) = analytic_delays(DELTA_R);
    let ok = off < 1e-12 * peak && contiguous && inside && rel(lo, ref_lo) <= 0.05 && rel(hi, ref_hi) <= 0.05;
    outcome(
        ok,
        format!(
            "peak |g_s| {peak:.3e}; outside II max {off:.1e} ({exact_zeros}/{} exactly 0); \
             band contiguous={contiguous} inside II={inside}; band [{lo:.1}, {hi:.1}] fs vs \
             analytic [{ref_lo:.1}, {ref_hi:.1}] ({:+.2}%, {:+.2}%); nonzero support [{s_lo:.1}, {s_hi:.1}] fs",
            outside.len(),
            100.0 * (lo - ref_lo) / ref_lo,
            100.0 * (hi - ref_hi) / ref_hi,
        ),
    )
}

// ---------------------------------------------------------------- 3

fn c3_correlations() -> Outcome {
    let rows = rect_scan();
    if rows.iter().any(|r| r.status != PointStatus::Ok) {
        return outcome(false, "scan has failed points");
    }
    let peak = rows.iter().map(|r| r.g_vac.abs()).fold(0.0, f64::max);
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    let ok = first.region == Some(Region::I)
        && last.region == Some(Region::III)
        && first.g_vac.abs() > 1e-3 * peak
        && last.g_vac.abs() > 1e-3 * peak;
    outcome(
        ok,
        format!(
            "peak |g_vac| {peak:.3e}; g_vac(0 fs, {:?}) = {:.3e} ({:.2} of peak); g_vac(5000 fs, {:?}) = {:.3e} ({:.3} of peak)",
            first.region,
            first.g_vac,
            first.g_vac.abs() / peak,
            last.region,
            last.g_vac,
            last.g_vac.abs() / peak
        ),
    )
}

// ---------------------------------------------------------------- 4

fn c4_region_map() -> Outcome {
    let p = pulse(PulseShape::Rectangular);
    let medium = flat_medium();
    let drs = linspace(0.0, 400.0, 100);
    let dts = linspace(0.0, 5000.0, 100);
    let step = drs[1] - drs[0];
    let tol = step.max(1.0);
    let map = region_map(&p, &p, &medium, &drs, &dts);
    let errors = map.cells.iter().filter(|c| c.is_err()).count();
    if errors > 0 {
        let first = map.cells.iter().find_map(|c| c.as_ref().err()).unwrap();
        return outcome(false, format!("{errors} cells failed, e.g. {first}"));
    }
    let rank = |g: Region| match g {
        Region::III => 0,
        Region::II => 1,
        Region::I => 2,
    };
    let (c_n, _) = cone();
    let mut monotone = true;
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for (it, &dt) in dts.iter().enumerate() {
        let labels: Vec<Region> = (0..drs.len()).map(|ir| map.cell(it, ir).as_ref().unwrap().region).collect();
        monotone &= labels.windows(2).all(|w| rank(w[0]) <= rank(w[1]));
        let first_i = labels.iter().position(|&g| g == Region::I);
        let last_iii = labels.iter().rposition(|&g| g == Region::III);
        let mid = |i: usize| 0.5 * (drs[i] + drs[i + 1]);

        if let Some(b) = analytic_i_ii(dt).filter(|&b| b >= 5.0 * W && b < drs[drs.len() - 1]) {
            compared += 1;
            match first_i.filter(|&i| i > 0) {
                Some(i) => {
                    let e = (mid(i - 1) - b).abs();
                    worst = worst.max(e);
                    if e > tol {
                        misses.push(format!("I/II at {dt:.0} fs off by {e:.2}"));
                    }
                }
                None => misses.push(format!("no I/II transition at {dt:.0} fs")),
            }
        }
        if let Some(b) = analytic_ii_iii(dt).filter(|&b| c_n * dt >= 5.0 * W && b > W && b < drs[drs.len() - 1]) {
            compared += 1;
            match last_iii.filter(|&i| i + 1 < drs.len()) {
                Some(i) => {
                    let e = (mid(i) - b).abs();
                    worst = worst.max(e);
                    if e > tol {
                        misses.push(format!("II/III at {dt:.0} fs off by {e:.2}"));
                    }
                }
                None => misses.push(format!("no II/III transition at {dt:.0} fs")),
            }
        }
    }
    let numeric = numeric_boundary(&p, &p, &medium, 0.0, Boundary::SpaceLike, 400.0).unwrap();
    let analytic = analytic_i_ii(0.0).unwrap();
    let at_zero = numeric.map(|b| rel(b, 82.4) <= 0.02).unwrap_or(false) && rel(analytic, 82.4) <= 0.02;
    let ok = monotone && misses.is_empty() && compared > 0 && at_zero;
    outcome(
        ok,
        format!(
            "{compared} boundary crossings compared, worst {worst:.2} um (tolerance {tol:.2}); ordered={monotone}; \
             I/II at 0 fs numeric {} um, analytic {analytic:.2} um vs 82.4{}",
            numeric.map(|b| format!("{b:.2}")).unwrap_or("none".into()),
            if misses.is_empty() { String::new() } else { format!("; misses: {:?}", &misses[..misses.len().min(4)]) }
        ),
    )
}

// ---------------------------------------------------------------- 5

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

struct DecayFit {
    floor: f64,
    window: (f64, f64),
    points: usize,
    slope_s: f64,
    slope_vac: f64,
    regions_ok: bool,
}

/// Walks `rows` (ordered away from region II) until `|g_s|` stops falling;
/// the largest `|g_s|` from there on is the noise floor. The fit covers the
/// last clean decade above it, `[10, 100] x floor`.
fn decay_fit(rows: &[SignalRecord], region: Region) -> Option<DecayFit> {
    let a: Vec<f64> = rows.iter().map(|r| r.g_s.abs()).collect();
    let onset = (0..a.len() - 1).find(|&k| a[k + 1] >= a[k])?;
    let floor = a[onset..].iter().cloned().fold(0.0, f64::max);
    let pts: Vec<&SignalRecord> = rows[..onset]
        .iter()
        .filter(|r| r.g_s.abs() >= 10.0 * floor && r.g_s.abs() <= 100.0 * floor)
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let x: Vec<f64> = pts.iter().map(|r| r.delta_t).collect();
    let ls: Vec<f64> = pts.iter().map(|r| r.g_s.abs().ln()).collect();
    let lv: Vec<f64> = pts.iter().map(|r| r.g_vac.abs().ln()).collect();
    Some(DecayFit {
        floor,
        window: (x[0], x[x.len() - 1]),
        points: pts.len(),
        slope_s: slope(&x, &ls),
        slope_vac: slope(&x, &lv),
        regions_ok: pts.iter().all(|r| r.region == Some(region)),
    })
}

fn c5_decay() -> Outcome {
    let p = pulse(PulseShape::Gaussian);
    let ks = lorentz();
    let opts = IntegratorOptions::default();
    // towards region I: 1000 fs down to -500 fs; towards III: 3800 up to 6000 fs
    let into_i: Vec<f64> = (0..=300).map(|i| 1000.0 - 5.0 * i as f64).collect();
    let into_iii: Vec<f64> = (0..=440).map(|i| 3800.0 + 5.0 * i as f64).collect();
    let mut details = Vec::new();
    let mut ok = true;
    for (region, delays) in [(Region::I, into_i), (Region::III, into_iii)] {
        let rows = scan_delays(&p, &p, &ks, &opts, DELTA_R, &delays, None).unwrap();
        match decay_fit(&rows, region) {
            Some(f) => {
                let ratio = f.slope_s.abs() / f.slope_vac.abs();
                ok &= ratio >= 3.0 && f.regions_ok;
                details.push(format!(
                    "{region}: floor {:.1e}, fit {}..{} fs ({} pts, labels ok={}), slopes g_s {:.3e}/fs g_vac {:.3e}/fs, ratio {ratio:.1}",
                    f.floor, f.window.0, f.window.1, f.points, f.regions_ok, f.slope_s, f.slope_vac
                ));
            }
            None => {
                ok = false;
                details.push(format!("{region}: no clean decade above the noise floor"));
            }
        }
    }
    outcome(ok, details.join("; "))
}

// ---------------------------------------------------------------- 6

/// `(1/pi) PV int f(t') / (t - t') dt'` for `f` supported on `[lo, hi]`.
fn hilbert(f: &dyn Fn(f64) -> f64, t: f64, lo: f64, hi: f64) -> f64 {
    use eosvac::quad::{principal_value, Adaptive};
    let q = Adaptive::new(1e-14, 1e-11);
    if t <= lo || t >= hi {
        return q.integrate(|s| f(s) / (t - s), &[lo, hi]).value / PI;
    }
    principal_value(f, |s| t - s, t, -1.0, &[lo, hi], &q).value / PI
}

/// `(1 - x^2)^5` on `[c - h, c + h]` and its derivatives, `x = (t - c)/h`.
fn bump(c: f64, h: f64) -> impl Fn(f64, usize) -> f64 {
    move |t: f64, d: usize| {
        let x = (t - c) / h;
        if x.abs() >= 1.0 {
            return 0.0;
        }
        let mut poly = vec![1.0, 0.0, -5.0, 0.0, 10.0, 0.0, -10.0, 0.0, 5.0, 0.0, -1.0];
        for _ in 0..d {
            poly = poly.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).collect();
        }
        poly.iter().rev().fold(0.0, |acc, v| acc * x + v) / h.powi(d as i32)
    }
}

fn c6_kernel_fdt() -> Outcome {
    use eosvac::kernels::{cone_weights, ResponsePart};
    use eosvac::quad::{principal_value, Adaptive};
    use rand::{Rng, SeedableRng};

    // spectral identity, both media, both signs of omega
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut worst_identity: f64 = 0.0;
    for ks in [flat(), lorentz()] {
        let top = ks.band().omega_max;
        for _ in 0..500 {
            let rho = [rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0), rng.gen_range(-100.0..100.0)];
            let w = rng.gen_range(1e-3 * top..top) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let c = ks.correlation_spectral(rho, w).unwrap();
            let r = ks.response_spectral(rho, w).unwrap();
            let expect = w.signum() * r.im;
            worst_identity = worst_identity.max((c - expect).abs() / expect.abs().max(f64::MIN_POSITIVE));
        }
    }

    // int phi C = hbar int (H phi) R'' with the tau-derivatives of C moved
    // onto phi and the PV poles at tau = +-|rho|/c_n
    let ks = flat();
    let (c_n, _) = cone();
    let q = Adaptive::new(1e-14, 1e-11);
    let pre = 1.0 / (C * C) / (8.0 * PI * PI);
    let mut worst_pair: f64 = 0.0;
    let mut cases = 0;
    for rho in [[4.0f64, 9.0, 2.0], [30.0, -12.0, 55.0], [0.0, 150.0, -80.0]] {
        let r = (rho[0] * rho[0] + rho[1] * rho[1] + rho[2] * rho[2]).sqrt();
        let a = r / c_n;
        let (w0, w1, w2) = cone_weights(rho, c_n).unwrap();
        for (c, h) in [(0.3 * a, 0.4 * a), (1.2 * a, 0.5 * a), (-1.8 * a, 0.3 * a), (-a, 0.25 * a)] {
            let phi = bump(c, h);
            let (lo, hi) = (c - h, c + h);
            let mut lhs = 0.0;
            for s in [1.0, -1.0] {
                let b = s * a;
                let g = |t: f64| w2 * phi(t, 2) - s * w1 * phi(t, 1) + w0 * phi(t, 0);
                let pv = if b > lo && b < hi {
                    principal_value(g, |t| t - b, b, 1.0, &[lo, hi], &q).value
                } else {
                    q.integrate(|t| g(t) / (t - b), &[lo, hi]).value
                };
                lhs -= s * pv;
            }
            lhs *= pre;
            let mut rhs = 0.0;
            for t in ks.response_distribution(rho, ResponsePart::Dissipative).unwrap() {
                let hd = |d: usize| hilbert(&|s| phi(s, d), t.at, lo, hi);
                rhs += t.pair(hd(0), hd(1), hd(2));
            }
            worst_pair = worst_pair.max(rel(rhs, lhs));
            cases += 1;
        }
    }
    outcome(
        worst_identity <= 1e-12 && worst_pair <= 1e-2,
        format!(
            "spectral identity worst relative deviation {worst_identity:.1e} over 1000 points; \
             Hilbert pairing worst relative deviation {worst_pair:.1e} over {cases} test functions"
        ),
    )
}

// ---------------------------------------------------------------- 7

fn c7_signal_fdt() -> Outcome {
    use eosvac::fdt::verify_fdt_signal;
    let p = pulse(PulseShape::Gaussian);
    let ks = lorentz();
    let opts = IntegratorOptions::default();
    let half = 8000.0;
    let mut ok = true;
    let mut details = Vec::new();
    for (dr, steps) in [(0.0, [50.0f64, 25.0, 12.5]), (DELTA_R, [100.0, 50.0, 25.0])] {
        let mut residuals = Vec::new();
        let mut control = f64::NAN;
        let mut edge = f64::NAN;
        for (k, &h) in steps.iter().enumerate() {
            let n = (2.0 * half / h).round() as usize + 1;
            let delays = linspace(-half, half, n);
            let rows = scan_delays(&p, &p, &ks, &opts, dr, &delays, None).unwrap();
            match verify_fdt_signal(&rows, true) {
                Ok(rep) => {
                    residuals.push(rep.l2_relative);
                    edge = rep.edge_ratio;
                }
                Err(e) => {
                    ok = false;
                    details.push(format!("dr {dr}: {e}"));
                    break;
                }
            }
            if k == steps.len() - 1 {
                // negative control: the reactive part in place of the dissipative one
                let swapped: Vec<SignalRecord> =
                    rows.iter().map(|r| SignalRecord { g_r_dprime: r.g_r_prime, ..r.clone() }).collect();
                control = verify_fdt_signal(&swapped, true).map(|r| r.l2_relative).unwrap_or(f64::NAN);
            }
        }
        if residuals.len() < steps.len() {
            continue;
        }
        let orders: Vec<f64> = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let finest = residuals[residuals.len() - 1];
        let this = finest < 0.1 && orders.iter().all(|&o| o >= 1.0) && control > 0.5;
        ok &= this;
        details.push(format!(
            "dr {dr} um, window +-{half} fs, edge ratio {edge:.1e}: residuals {} at steps {steps:?} fs, orders {}, control {:.0}%",
            residuals.iter().map(|r| format!("{:.2}%", 100.0 * r)).collect::<Vec<_>>().join(" "),
            orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join(" "),
            100.0 * control
        ));
    }
    outcome(ok, details.join("; "))
}

// ---------------------------------------------------------------- 8

/// One position drawn from the normalised envelope of `p`, with the mean
/// arrival time there. Time is averaged out analytically by the caller.
fn draw(p: &PulseEnvelope, rng: &mut impl rand::Rng) -> ([f64; 3], f64) {
    use eosvac::pulses::{fwhm_to_sigma, Gate};
    use rand_distr::{Distribution, Normal, Uniform};
    let sample = |g: Gate, c: f64, rng: &mut dyn rand::RngCore| match g {
        Gate::Box { width } => Uniform::new(c - 0.5 * width, c + 0.5 * width).sample(rng),
        Gate::Gauss { fwhm } => Normal::new(c, fwhm_to_sigma(fwhm)).unwrap().sample(rng),
    };
    let x = sample(p.transverse_gate(), p.x, rng);
    let y = sample(p.transverse_gate(), p.y, rng);
    let z = Uniform::new(-0.5 * p.crystal_length, 0.5 * p.crystal_length).sample(rng);
    ([x, y, z], p.arrival(z))
}

struct Mean {
    n: f64,
    sum: f64,
    sq: f64,
}

impl Mean {
    fn new() -> Self {
        Mean { n: 0.0, sum: 0.0, sq: 0.0 }
    }
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        self.sum += v;
        self.sq += v * v;
    }
    fn merge(mut self, o: Mean) -> Self {
        self.n += o.n;
        self.sum += o.sum;
        self.sq += o.sq;
        self
    }
    fn mean(&self) -> f64 {
        self.sum / self.n
    }
    fn sigma(&self) -> f64 {
        let m = self.mean();
        ((self.sq / self.n - m * m) / (self.n - 1.0)).sqrt()
    }
}

fn c8_oracles() -> Outcome {
    use eosvac::integrator::{direct_integral, reduced_integral, SpectralPlan};
    use rand::SeedableRng;
    use rayon::prelude::*;

    // quadrature: K-reduced 4-D integral against the 8-D double envelope integral
    let f = |r: [f64; 3], t: f64| {
        (0.05 * r[0] + 0.02 * r[1] + 0.03 * r[2] - 0.004 * t).cos()
            * (-(r[0] * r[0] + r[1] * r[1]) / 1800.0).exp()
            * (1.0 + t / 1000.0)
    };
    let mut quad_worst: f64 = 0.0;
    for shape in [PulseShape::Gaussian, PulseShape::Rectangular] {
        let p1 = PulseEnvelope { waist: 12.0, x: 8.0, t0: 150.0, ..pulse(shape) };
        let p2 = PulseEnvelope { x: -3.0, ..pulse(shape) };
        let k = overlap_kernel(&p1, &p2).unwrap();
        let reduced = reduced_integral(&k, f, 16);
        let direct = direct_integral(&p1, &p2, f, 8);
        quad_worst = quad_worst.max(rel(reduced, direct));
    }

    // Monte Carlo over both envelopes against the spectral plan
    let ks = lorentz();
    let band = *ks.band();
    let p = pulse(PulseShape::Gaussian);
    let dt = 2500.0;
    let (q1, q2) = pulse_pair(&p, &p, DELTA_R, dt);
    let plan = SpectralPlan::new(&overlap_kernel(&q1, &q2).unwrap(), &ks, &IntegratorOptions::default())
        .unwrap()
        .integrals(dt);
    // Gaussian arrival jitter of both pulses: <e^{-i w tau}> = e^{-i w tau0 - w^2 s^2 / 2}
    let eosvac::pulses::Gate::Gauss { fwhm } = p.temporal_gate() else { unreachable!() };
    let s2 = 2.0 * eosvac::pulses::fwhm_to_sigma(fwhm).powi(2);
    let chunks = 128;
    let per_chunk = 1000;
    let stats = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000 + c as u64);
            let mut m = [Mean::new(), Mean::new(), Mean::new()];
            for _ in 0..per_chunk {
                let (r1, t1) = draw(&q1, &mut rng);
                let (r2, t2) = draw(&q2, &mut rng);
                let rho = [r1[0] - r2[0], r1[1] - r2[1], r1[2] - r2[2]];
                let tau = t1 - t2;
                let spec = ks.response_on_grid(rho).unwrap();
                let (mut cc, mut rp, mut rd) = (0.0, 0.0, 0.0);
                for (i, v) in spec.iter().enumerate() {
                    let om = band.omega(i);
                    let w = band.weight(i) * (-0.5 * om * om * s2).exp();
                    cc += w * v.im * (om * tau).cos();
                    rp += w * v.re * (om * tau).cos();
                    rd += w * v.im * (om * tau).sin();
                }
                m[0].push(cc / PI);
                m[1].push(rp / PI);
                m[2].push(rd / PI);
            }
            m
        })
        .reduce(
            || [Mean::new(), Mean::new(), Mean::new()],
            |[a, b, c], [d, e, f]| [a.merge(d), b.merge(e), c.merge(f)],
        );
    let names = ["I_C", "I_R'", "I_R''"];
    let targets = [plan.i_c, plan.i_r_prime, plan.i_r_dprime];
    let mut mc_ok = true;
    let mut parts = Vec::new();
    for k in 0..3 {
        let z = (stats[k].mean() - targets[k]) / stats[k].sigma();
        mc_ok &= z.abs() <= 3.0;
        parts.push(format!(
            "{} plan {:.4e} vs MC {:.4e} +- {:.1e} ({z:+.2} sigma)",
            names[k],
            targets[k],
            stats[k].mean(),
            stats[k].sigma()
        ));
    }
    outcome(
        quad_worst <= 1e-6 && mc_ok,
        format!(
            "reduced vs nested quadrature worst {quad_worst:.1e}; {} samples: {}",
            chunks * per_chunk,
            parts.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 9

const DETERMINISM_RECT: &str = r#"
[experiment]
delta_r_um = 200.0
delta_t_scan = { start = 0.0, stop = 5000.0, step = 250.0 }

[crystal]
model = "dispersionless"
n = 3.33
n_g = 3.556
L_um = 100.0

[pulses]
shape = "rect"
waist_um = 10.0
duration_fs = 185.0

[angles]
theta1_rad = 1.5707963267948966
theta2_rad = 3.141592653589793
"#;

fn c9_determinism() -> Outcome {
    use eosvac::config::load_config;
    use eosvac::integrator::scan_delta_t;
    use eosvac::output::{regions_csv, signal_csv};

    let gauss = DETERMINISM_RECT
        .replace("model = \"dispersionless\"\nn = 3.33\n", "model = \"lorentz\"\n")
        .replace("shape = \"rect\"", "shape = \"gauss\"")
        + "\n[numerics]\ntransverse_nodes = 8\nz_panels = 4\n";
    let run = |text: &str| {
        let cfg = load_config(text).unwrap();
        let scan = signal_csv(&scan_delta_t(&cfg).unwrap(), "fixed");
        let p = cfg.pulse();
        let map = region_map(&p, &p, &cfg.medium().unwrap(), &linspace(0.0, 400.0, 25), &linspace(0.0, 5000.0, 25));
        (scan, regions_csv(&map, "fixed"))
    };
    let mut ok = true;
    let mut details = Vec::new();
    for (name, text) in [("rect", DETERMINISM_RECT.to_string()), ("gauss", gauss)] {
        let a = run(&text);
        let b = run(&text);
        let same = a == b;
        ok &= same;
        details.push(format!(
            "{name}: signal {} bytes, regions {} bytes, identical={same}",
            a.0.len(),
            a.1.len()
        ));
    }
    outcome(ok, details.join("; "))
}
