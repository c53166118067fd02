//! One-dimensional quadrature: Gauss-Legendre rules, adaptive
//! Gauss-Kronrod (7/15) with user breakpoints, principal values through a
//! simple pole, and bracketing root search.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrate over [a, b] split into `panels` equal pieces.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut sum = 0.0;
        for p in 0..panels {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                sum += w * f(mid + 0.5 * h * x);
            }
        }
        0.5 * h * sum
    }

    /// Nodes and weights mapped onto [a, b] split into `panels` pieces.
    pub fn mapped(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.nodes.len());
        for p in 0..panels {
            let mid = a + h * (p as f64 + 0.5);
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Hermite rule for `int e^{-x^2} f(x) dx`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        let m = n.div_ceil(2);
        let mut z: f64 = 0.0;
        for i in 0..m {
            // starting guesses for the largest roots, then the previous roots
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[n - 1],
                3 => 1.91 * z - 0.91 * nodes[n - 2],
                _ => 2.0 * z - nodes[n + 1 - i],
            };
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = hermite_normalised(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = hermite_normalised(n, z);
            if d != 0.0 {
                dp = d;
            }
            nodes[n - 1 - i] = z;
            nodes[i] = -z;
            weights[n - 1 - i] = 2.0 / (dp * dp);
            weights[i] = 2.0 / (dp * dp);
        }
        Self { nodes, weights }
    }

    /// Nodes and weights for the expectation under a normal density with
    /// mean `mu` and standard deviation `sigma`.
    pub fn normal(&self, mu: f64, sigma: f64) -> Vec<(f64, f64)> {
        let scale = std::f64::consts::PI.sqrt().recip();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| (mu + std::f64::consts::SQRT_2 * sigma * x, w * scale))
            .collect()
    }
}

/// Orthonormal Hermite function recursion `p_n(x)` (without the Gaussian
/// factor) and its derivative.
fn hermite_normalised(n: usize, x: f64) -> (f64, f64) {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = x * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    let d = (2.0 * n as f64).sqrt() * p2;
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    /// Estimate of `int |f|`.
    pub absolute: f64,
    pub evaluations: usize,
}

/// Kronrod estimate, error estimate and the Kronrod estimate of `int |f|`.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut absolute = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        kronrod += WGK[j] * (f1 + f2);
        absolute += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs(), absolute * h.abs())
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    absolute: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive Gauss-Kronrod settings.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-8,
            max_intervals: 400,
        }
    }
}

impl Adaptive {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrate `f` over `[points[0], points[last]]`, never placing a node on
    /// an interior breakpoint. Breakpoints must be sorted; duplicates are
    /// ignored.
    ///
    /// The relative tolerance applies to `int |f|`, so integrals that cancel
    /// to nearly zero still terminate.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, points: &[f64]) -> Estimate {
        let mut heap = BinaryHeap::new();
        let mut err = 0.0;
        let mut absolute = 0.0;
        let mut evaluations = 0;
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let (v, e, m) = gk15(&mut f, a, b);
            evaluations += 15;
            err += e;
            absolute += m;
            heap.push(Interval { a, b, value: v, error: e, absolute: m });
        }
        while err > self.abs_tol.max(self.rel_tol * absolute) && heap.len() < self.max_intervals {
            let Some(worst) = heap.pop() else { break };
            let m = 0.5 * (worst.a + worst.b);
            if m <= worst.a || m >= worst.b {
                heap.push(worst);
                break;
            }
            let (v1, e1, m1) = gk15(&mut f, worst.a, m);
            let (v2, e2, m2) = gk15(&mut f, m, worst.b);
            evaluations += 30;
            err += e1 + e2 - worst.error;
            absolute += m1 + m2 - worst.absolute;
            heap.push(Interval { a: worst.a, b: m, value: v1, error: e1, absolute: m1 });
            heap.push(Interval { a: m, b: worst.b, value: v2, error: e2, absolute: m2 });
        }
        // Re-sum to shed accumulated cancellation in the running totals.
        let mut value = 0.0;
        let mut error = 0.0;
        let mut absolute = 0.0;
        for iv in heap.iter() {
            value += iv.value;
            error += iv.error;
            absolute += iv.absolute;
        }
        Estimate { value, error, absolute, evaluations }
    }
}

/// Sort and deduplicate breakpoints, clipped to `[a, b]`.
pub fn breakpoints(a: f64, b: f64, extra: &[f64]) -> Vec<f64> {
    let mut pts = vec![a, b];
    pts.extend(extra.iter().copied().filter(|x| *x > a && *x < b));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Root of a function known to change sign on `[a, b]`, by bisection to
/// full precision. Returns `None` when the endpoint values share a sign.
pub fn bracket_root<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Principal value of `int_a^b f(z) / u(z) dz` where `u` has a single
/// simple root `z0` in `(a, b)` with slope `du0 = u'(z0)`.
///
/// The singular part `f(z0) / (du0 (z - z0))` is subtracted and integrated
/// in closed form; the remainder is smooth and goes through adaptive
/// quadrature with `z0` as a breakpoint.
pub fn principal_value<F, U>(
    mut f: F,
    mut u: U,
    z0: f64,
    du0: f64,
    points: &[f64],
    rule: &Adaptive,
) -> Estimate
where
    F: FnMut(f64) -> f64,
    U: FnMut(f64) -> f64,
{
    let a = points[0];
    let b = *points.last().expect("non-empty breakpoints");
    let q0 = f(z0) / du0;
    let mut pts = points.to_vec();
    pts.push(z0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut inner = rule.integrate(
        |z| {
            let d = z - z0;
            let uz = u(z);
            // a node within rounding of the pole carries no weight
            if d == 0.0 || uz == 0.0 {
                return 0.0;
            }
            f(z) / uz - q0 / d
        },
        &pts,
    );
    if q0 != 0.0 {
        inner.value += q0 * ((b - z0) / (z0 - a)).abs().ln();
    }
    inner
}
