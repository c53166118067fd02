//! Optical response of the crystal in the THz band.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Adaptive};
use crate::units;

/// Natural cubic spline through `(x_i, y_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives.
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let a = h0 / 6.0;
                let b = (h0 + h1) / 3.0;
                let cc = h1 / 6.0;
                let rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
                let denom = b - a * c[i - 1];
                c[i] = cc / denom;
                d[i] = (rhs - a * d[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Self { x, y, m }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => return self.y[i],
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Tabulated permittivity samples with their interpolants. Frequencies are
/// stored in rad/fs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermittivityTable {
    pub omega: Vec<f64>,
    pub re_eps: Vec<f64>,
    pub im_eps: Vec<f64>,
    re_spline: CubicSpline,
    im_spline: CubicSpline,
}

impl PermittivityTable {
    pub fn new(omega: Vec<f64>, re_eps: Vec<f64>, im_eps: Vec<f64>) -> Result<Self> {
        if omega.len() < 8 {
            return Err(Error::validation("crystal.table", omega.len(), "at least 8 samples"));
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("crystal.table", "omega", "strictly increasing"));
        }
        if let Some(i) = im_eps.iter().position(|v| *v < 0.0) {
            return Err(Error::validation("crystal.table", im_eps[i], "Im eps >= 0 (passivity)"));
        }
        let re_spline = CubicSpline::new(omega.clone(), re_eps.clone());
        let im_spline = CubicSpline::new(omega.clone(), im_eps.clone());
        Ok(Self { omega, re_eps, im_eps, re_spline, im_spline })
    }

    pub fn band(&self) -> (f64, f64) {
        (self.omega[0], *self.omega.last().unwrap())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Medium {
    Dispersionless {
        n: f64,
        n_g: f64,
    },
    /// Single-phonon Lorentz oscillator, frequencies in rad/fs.
    Lorentz {
        eps_inf: f64,
        omega_to: f64,
        omega_lo: f64,
        gamma: f64,
        n_g: f64,
    },
    Table {
        table: PermittivityTable,
        n_g: f64,
    },
}

impl Medium {
    /// GaP-like single-phonon parameters with `n(0) ~ 3.31`.
    pub fn gap_lorentz(n_g: f64) -> Self {
        Medium::Lorentz {
            eps_inf: 9.09,
            omega_to: units::thz_to_rad_fs(10.98),
            omega_lo: units::thz_to_rad_fs(12.06),
            gamma: units::thz_to_rad_fs(0.02),
            n_g,
        }
    }

    pub fn group_index(&self) -> f64 {
        match self {
            Medium::Dispersionless { n_g, .. } | Medium::Lorentz { n_g, .. } | Medium::Table { n_g, .. } => *n_g,
        }
    }

    pub fn is_dispersionless(&self) -> bool {
        matches!(self, Medium::Dispersionless { .. })
    }

    /// Band over which `permittivity` is defined, in rad/fs.
    pub fn band(&self) -> (f64, f64) {
        match self {
            Medium::Table { table, .. } => table.band(),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn permittivity(&self, omega: f64) -> Result<Complex64> {
        match self {
            Medium::Dispersionless { n, .. } => Ok(Complex64::new(n * n, 0.0)),
            Medium::Lorentz { eps_inf, omega_to, omega_lo, gamma, .. } => {
                let w = omega.abs();
                let num = Complex64::new(omega_lo * omega_lo - w * w, -gamma * w);
                let den = Complex64::new(omega_to * omega_to - w * w, -gamma * w);
                Ok(*eps_inf * num / den)
            }
            Medium::Table { table, .. } => {
                let (lo, hi) = table.band();
                let w = omega.abs();
                if w < lo || w > hi {
                    return Err(Error::OutOfBand { omega, lo, hi });
                }
                Ok(Complex64::new(table.re_spline.eval(w), table.im_spline.eval(w)))
            }
        }
        .map(|eps| if omega < 0.0 { eps.conj() } else { eps })
    }

    /// Principal root of the permittivity, `Im n >= 0` for passive media.
    pub fn refractive_index(&self, omega: f64) -> Result<Complex64> {
        match self {
            Medium::Dispersionless { n, .. } => Ok(Complex64::new(*n, 0.0)),
            _ => {
                let n = self.permittivity(omega.abs())?.sqrt();
                Ok(if omega < 0.0 { n.conj() } else { n })
            }
        }
    }

    /// Low-frequency phase index, used for the light-cone speed of region
    /// classification.
    pub fn front_index(&self) -> f64 {
        match self {
            Medium::Dispersionless { n, .. } => *n,
            Medium::Lorentz { .. } => self.refractive_index(1e-9).map(|n| n.re).unwrap_or(1.0),
            Medium::Table { table, .. } => self.refractive_index(table.omega[0]).map(|n| n.re).unwrap_or(1.0),
        }
    }

    pub fn validate(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        let mut check = |ok: bool, key: &str, value: f64, constraint: &str| {
            if !ok {
                out.push((key.to_string(), value.to_string(), constraint.to_string()));
            }
        };
        match self {
            Medium::Dispersionless { n, n_g } => {
                check(*n >= 1.0, "crystal.n", *n, "n >= 1");
                check(*n_g >= 1.0, "crystal.n_g", *n_g, "n_g >= 1");
            }
            Medium::Lorentz { eps_inf, omega_to, omega_lo, gamma, n_g } => {
                check(*eps_inf >= 1.0, "crystal.eps_inf", *eps_inf, "eps_inf >= 1");
                check(*omega_to > 0.0, "crystal.omega_to_THz", *omega_to, "omega_TO > 0");
                check(*omega_lo >= *omega_to, "crystal.omega_lo_THz", *omega_lo, "omega_LO >= omega_TO (passivity)");
                check(*gamma >= 0.0, "crystal.gamma_THz", *gamma, "gamma >= 0 (passivity)");
                check(*n_g >= 1.0, "crystal.n_g", *n_g, "n_g >= 1");
            }
            Medium::Table { n_g, .. } => check(*n_g >= 1.0, "crystal.n_g", *n_g, "n_g >= 1"),
        }
        out
    }
}

/// Load a permittivity table with header `omega_THz,re_eps,im_eps`.
pub fn load_permittivity_table(path: &Path, n_g: f64) -> Result<Medium> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_permittivity_table(&text, path, n_g)
}

pub fn parse_permittivity_table(text: &str, path: &Path, n_g: f64) -> Result<Medium> {
    let err = |line: usize, msg: String| Error::Table { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if header.replace(' ', "") != "omega_THz,re_eps,im_eps" {
        return Err(err(1, format!("expected header `omega_THz,re_eps,im_eps`, found `{header}`")));
    }
    let (mut omega, mut re, mut im) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(err(line_no, format!("expected 3 columns, found {}", cols.len())));
        }
        let mut vals = [0.0; 3];
        for (v, c) in vals.iter_mut().zip(&cols) {
            *v = c
                .parse()
                .map_err(|_| err(line_no, format!("`{c}` is not a number")))?;
        }
        if vals[2] < 0.0 {
            return Err(err(line_no, format!("Im eps = {} < 0 violates passivity", vals[2])));
        }
        let w = units::thz_to_rad_fs(vals[0]);
        if let Some(prev) = omega.last() {
            if w <= *prev {
                return Err(err(line_no, "frequencies must be strictly increasing".into()));
            }
        }
        omega.push(w);
        re.push(vals[1]);
        im.push(vals[2]);
    }
    if omega.len() < 8 {
        return Err(err(text.lines().count(), format!("need at least 8 samples, found {}", omega.len())));
    }
    Ok(Medium::Table { table: PermittivityTable::new(omega, re, im)?, n_g })
}

/// Largest relative violation of the Kramers-Kronig relation for `Re eps`
/// over `grid` (rad/fs), with the dispersion integral restricted to the
/// band `[0, omega_top]` (or the tabulated band).
///
/// For tabulated data the high-frequency constant is unknown and is fitted
/// as the mean offset over the grid.
pub fn kramers_kronig_residual(m: &Medium, grid: &[f64], omega_top: f64) -> f64 {
    let (lo, hi) = match m {
        Medium::Dispersionless { .. } => return 0.0,
        Medium::Table { table, .. } => table.band(),
        Medium::Lorentz { .. } => (0.0, omega_top),
    };
    let rule = Adaptive { abs_tol: 1e-12, rel_tol: 1e-9, max_intervals: 2000 };
    let im = |w: f64| m.permittivity(w).map(|e| e.im).unwrap_or(0.0);
    let mut extra: Vec<f64> = match m {
        Medium::Lorentz { omega_to, gamma, .. } => {
            let g = gamma.max(1e-9);
            (-8..=8).map(|k| omega_to + k as f64 * g).collect()
        }
        Medium::Table { table, .. } => table.omega.clone(),
        _ => vec![],
    };
    extra.sort_by(f64::total_cmp);

    let mut rows = Vec::with_capacity(grid.len());
    for &w in grid {
        if w <= lo || w >= hi {
            continue;
        }
        // Omega Im eps / (Omega^2 - w^2) = f(Omega) / (Omega - w)
        let pts = quad::breakpoints(lo, hi, &extra);
        let est = quad::principal_value(|x| x * im(x) / (x + w), |x| x - w, w, 1.0, &pts, &rule);
        let kk = 2.0 / std::f64::consts::PI * est.value;
        let eps = m.permittivity(w).unwrap_or_default();
        rows.push((eps, kk));
    }
    if rows.is_empty() {
        return 0.0;
    }
    let eps_inf = match m {
        Medium::Lorentz { eps_inf, .. } => *eps_inf,
        _ => rows.iter().map(|(e, kk)| e.re - kk).sum::<f64>() / rows.len() as f64,
    };
    rows.iter()
        .map(|(e, kk)| (e.re - eps_inf - kk).abs() / e.norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gap() -> Medium {
        Medium::gap_lorentz(3.556)
    }

    #[test]
    fn dispersionless_values() {
        let m = Medium::Dispersionless { n: 3.33, n_g: 3.556 };
        let e = m.permittivity(0.05).unwrap();
        assert!((e.re - 11.0889).abs() < 1e-12 && e.im == 0.0);
        assert_eq!(m.refractive_index(0.01).unwrap(), Complex64::new(3.33, 0.0));
        assert_eq!(kramers_kronig_residual(&m, &[0.01], 0.1), 0.0);
    }

    #[test]
    fn lorentz_static_limit_and_resonance() {
        let m = gap();
        let e0 = m.permittivity(1e-9).unwrap();
        // eps_inf (w_LO / w_TO)^2
        assert!((e0.re - 9.09 * (12.06f64 / 10.98).powi(2)).abs() < 1e-9);
        let n0 = m.refractive_index(1e-9).unwrap();
        assert!((n0.re - 3.3115).abs() < 1e-3, "{n0}");
        assert!((n0.re - 3.33).abs() / 3.33 < 0.01);
        let Medium::Lorentz { omega_to, .. } = m else { unreachable!() };
        let er = m.permittivity(omega_to).unwrap();
        assert!(er.norm() > 100.0 && er.im > 0.0);
        // high-frequency limit
        let einf = m.permittivity(10.0).unwrap();
        assert!((einf.re - 9.09).abs() < 1e-3);
    }

    #[test]
    fn index_squares_to_permittivity_and_decays() {
        let m = gap();
        for k in 1..200 {
            let w = k as f64 * 5e-4;
            let n = m.refractive_index(w).unwrap();
            let e = m.permittivity(w).unwrap();
            assert!((n * n - e).norm() <= 1e-13 * e.norm());
            assert!(n.im >= 0.0);
        }
        let e = m.permittivity(-0.03).unwrap();
        assert_eq!(e, m.permittivity(0.03).unwrap().conj());
    }

    #[test]
    fn lorentz_is_kramers_kronig_consistent() {
        let m = gap();
        let grid: Vec<f64> = (1..60).map(|k| k as f64 * 0.0015).collect();
        let r = kramers_kronig_residual(&m, &grid, 2.0);
        assert!(r < 0.05, "residual {r}");
    }

    fn table_text(im_zero: bool) -> String {
        let m = gap();
        let mut s = String::from("omega_THz,re_eps,im_eps\n");
        for k in 0..120 {
            let f = 0.5 + k as f64 * 0.2;
            let e = m.permittivity(units::thz_to_rad_fs(f)).unwrap();
            s += &format!("{f},{},{}\n", e.re, if im_zero { 0.0 } else { e.im });
        }
        s
    }

    #[test]
    fn table_round_trips_nodes_and_flags_inconsistency() {
        let p = Path::new("gap.csv");
        let m = parse_permittivity_table(&table_text(false), p, 3.556).unwrap();
        let Medium::Table { table, .. } = &m else { unreachable!() };
        for i in 0..table.omega.len() {
            let e = m.permittivity(table.omega[i]).unwrap();
            assert_eq!(e.re, table.re_eps[i]);
            assert_eq!(e.im, table.im_eps[i]);
        }
        assert!(matches!(m.permittivity(0.5), Err(Error::OutOfBand { .. })));

        let bad = parse_permittivity_table(&table_text(true), p, 3.556).unwrap();
        let grid: Vec<f64> = (1..40).map(|k| units::thz_to_rad_fs(0.5 + k as f64 * 0.5)).collect();
        let r = kramers_kronig_residual(&bad, &grid, 0.0);
        assert!(r > 0.3, "inconsistent table residual only {r}");
    }

    #[test]
    fn table_errors() {
        let p = Path::new("t.csv");
        let mut s = table_text(false);
        s = s.replacen("\n1.1,", "\n1.1,", 1);
        let lines: Vec<&str> = s.lines().collect();
        let neg = format!("{}\n{}\n2.0,10.0,-0.5\n", lines[0], lines[1..5].join("\n"));
        match parse_permittivity_table(&neg, p, 3.5) {
            Err(Error::Table { line, msg, .. }) => {
                assert_eq!(line, 6);
                assert!(msg.contains("passivity"));
            }
            other => panic!("{other:?}"),
        }
        let dup = format!("{}\n{}\n{}\n", lines[0], lines[1], lines[1]);
        match parse_permittivity_table(&dup, p, 3.5) {
            Err(Error::Table { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("increasing"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_permittivity_table("a,b,c\n", p, 3.5).is_err());
    }
}
