//! Experiment configuration.
//!
//! Configs are TOML documents with the sections `[experiment]`,
//! `[crystal]`, `[pulses]`, `[angles]`, `[numerics]` and `[output]`. Keys
//! carry their unit as a suffix. Lengths and times may alternatively be
//! given in SI (`_m`, `_s` suffixes); they are converted by decimal shift,
//! so both spellings of one experiment load to bitwise-equal configs.
//!
//! ```toml
//! [experiment]
//! delta_r_um = 200.0
//! delta_t_scan = { start = -1000.0, stop = 6000.0, step = 70.0 }
//!
//! [crystal]
//! model = "dispersionless"
//! n = 3.33
//! n_g = 3.556
//! L_um = 100.0
//!
//! [pulses]
//! shape = "rect"
//! waist_um = 10.0
//! duration_fs = 185.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::IntegratorOptions;
use crate::kernels::{KernelSet, SpectralBand, Taper};
use crate::medium::{load_permittivity_table, Medium};
use crate::pulses::{PulseEnvelope, PulseShape};
use crate::units::{meters_to_um, rad_fs_to_thz, seconds_to_fs, thz_to_rad_fs};
use crate::waveplate::normalize_angle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayScan {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelaySpec {
    Single(f64),
    Scan(DelayScan),
}

impl DelaySpec {
    /// Delays in scan order; the stop value is included when the grid hits
    /// it to within a millionth of a step.
    pub fn delays(&self) -> Vec<f64> {
        match *self {
            DelaySpec::Single(t) => vec![t],
            DelaySpec::Scan(DelayScan { start, stop, step }) => {
                if !(step > 0.0) || stop < start {
                    return vec![];
                }
                let n = ((stop - start) / step + 1e-6).floor() as usize + 1;
                (0..n).map(|i| start + i as f64 * step).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrystalModel {
    Dispersionless,
    Lorentz,
    Table,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalConfig {
    pub model: CrystalModel,
    pub n: f64,
    pub n_g: f64,
    /// um
    pub length: f64,
    pub eps_inf: f64,
    /// rad/fs
    pub omega_to: f64,
    pub omega_lo: f64,
    pub gamma: f64,
    pub table_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseConfig {
    pub shape: PulseShape,
    /// um
    pub waist: f64,
    /// fs
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub band: SpectralBand,
    pub rho_cutoff: f64,
    pub tau_pad: f64,
    pub tolerance: f64,
    pub transverse_nodes: usize,
    pub z_panels: usize,
    pub max_intervals: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        let opts = IntegratorOptions::default();
        Self {
            band: SpectralBand::default(),
            rho_cutoff: opts.rho_min,
            tau_pad: 2000.0,
            tolerance: opts.tolerance,
            transverse_nodes: opts.transverse_nodes,
            z_panels: opts.z_panels,
            max_intervals: opts.max_intervals,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub path: PathBuf,
    pub format: OutputFormat,
}

/// A fully resolved experiment, every quantity in internal units and every
/// default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub delta_r: f64,
    pub delta_t: DelaySpec,
    pub crystal: CrystalConfig,
    pub pulses: PulseConfig,
    pub angles: Option<(f64, f64)>,
    pub numerics: Numerics,
    pub output: OutputConfig,
}

/// One violated constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub key: String,
    pub value: String,
    pub constraint: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {} (got {})", self.key, self.constraint, self.value)
    }
}

// Document layer: what the TOML file literally says.

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    experiment: RawExperiment,
    crystal: RawCrystal,
    pulses: RawPulses,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angles: Option<RawAngles>,
    #[serde(default)]
    numerics: RawNumerics,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_r_um: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_r_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_t_fs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_t_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_t_scan: Option<DelayScan>,
    /// Scan bounds in seconds.
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_t_scan_s: Option<DelayScan>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCrystal {
    model: Option<CrystalModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<f64>,
    n_g: Option<f64>,
    #[serde(rename = "L_um", skip_serializing_if = "Option::is_none")]
    l_um: Option<f64>,
    #[serde(rename = "L_m", skip_serializing_if = "Option::is_none")]
    l_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps_inf: Option<f64>,
    #[serde(rename = "omega_to_THz", skip_serializing_if = "Option::is_none")]
    omega_to_thz: Option<f64>,
    #[serde(rename = "omega_lo_THz", skip_serializing_if = "Option::is_none")]
    omega_lo_thz: Option<f64>,
    #[serde(rename = "gamma_THz", skip_serializing_if = "Option::is_none")]
    gamma_thz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table_path: Option<PathBuf>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulses {
    shape: Option<PulseShape>,
    #[serde(skip_serializing_if = "Option::is_none")]
    waist_um: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    waist_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration_fs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration_s: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAngles {
    theta1_rad: f64,
    theta2_rad: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    #[serde(rename = "omega_max_THz", skip_serializing_if = "Option::is_none")]
    omega_max_thz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_omega: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    taper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    taper_shape: Option<Taper>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_cutoff_um: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_pad_fs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transverse_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    z_panels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_intervals: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<OutputFormat>,
}

/// Pick the internal-unit key or its SI twin, never both.
fn either(key: &str, internal: Option<f64>, si: Option<f64>, convert: fn(f64) -> f64) -> Result<Option<f64>> {
    match (internal, si) {
        (Some(_), Some(_)) => Err(Error::validation(key, "both unit spellings", "give one of the two")),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(v)) => Ok(Some(convert(v))),
        (None, None) => Ok(None),
    }
}

fn required<T>(key: &str, v: Option<T>) -> Result<T> {
    v.ok_or_else(|| Error::validation(key, "missing", "required key"))
}

/// Parse and validate a config document. Relative table paths stay as
/// written; see [`load_config_file`].
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let cfg = resolve(doc)?;
    if let Some(d) = validate_config(&cfg).into_iter().next() {
        return Err(Error::Validation { key: d.key, value: d.value, constraint: d.constraint });
    }
    Ok(cfg)
}

/// Read a config file; a relative `table_path` is taken relative to the
/// file's directory.
pub fn load_config_file(path: &Path) -> Result<ExperimentConfig> {
    load_config_file_with(path, &[])
}

/// [`load_config_file`] with `section.key=value` assignments applied on
/// top of the file, so they win over both file and defaults.
pub fn load_config_file_with(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut cfg = load_config(&apply_overrides(&text, overrides)?)?;
    if let (Some(t), Some(dir)) = (cfg.crystal.table_path.as_mut(), path.parent()) {
        if t.is_relative() {
            *t = dir.join(&*t);
        }
    }
    Ok(cfg)
}

/// Rewrites `text` with each `section.key=value` set. Values are read as
/// TOML (`150`, `"gauss"`, `{ start = 0, stop = 10, step = 1 }`); anything
/// that does not parse is taken as a bare string.
pub fn apply_overrides(text: &str, overrides: &[String]) -> Result<String> {
    if overrides.is_empty() {
        return Ok(text.to_string());
    }
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    for o in overrides {
        let bad = || Error::validation("override", o, "section.key=value");
        let (path, raw) = o.split_once('=').ok_or_else(bad)?;
        let (section, key) = path.trim().split_once('.').ok_or_else(bad)?;
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let table = doc
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(bad)?;
        table.insert(key.to_string(), value);
    }
    Ok(doc.to_string())
}

fn resolve(doc: Document) -> Result<ExperimentConfig> {
    let e = doc.experiment;
    let delta_r = required("experiment.delta_r_um", either("experiment.delta_r_um", e.delta_r_um, e.delta_r_m, meters_to_um)?)?;
    let single = either("experiment.delta_t_fs", e.delta_t_fs, e.delta_t_s, seconds_to_fs)?;
    let scan_si = e.delta_t_scan_s.map(|s| DelayScan {
        start: seconds_to_fs(s.start),
        stop: seconds_to_fs(s.stop),
        step: seconds_to_fs(s.step),
    });
    let scan = match (e.delta_t_scan, scan_si) {
        (Some(_), Some(_)) => return Err(Error::validation("experiment.delta_t_scan", "both unit spellings", "give one of the two")),
        (a, b) => a.or(b),
    };
    let delta_t = match (single, scan) {
        (Some(t), None) => DelaySpec::Single(t),
        (None, Some(s)) => DelaySpec::Scan(s),
        (None, None) => DelaySpec::Single(0.0),
        (Some(_), Some(_)) => {
            return Err(Error::validation("experiment.delta_t_fs", "both scalar and scan", "give one of delta_t_fs, delta_t_scan"))
        }
    };

    let c = doc.crystal;
    let model = c.model.unwrap_or(CrystalModel::Dispersionless);
    let Medium::Lorentz { eps_inf, omega_to, omega_lo, gamma, .. } = Medium::gap_lorentz(1.0) else {
        unreachable!("gap_lorentz builds a Lorentz medium")
    };
    let n_g = required("crystal.n_g", c.n_g)?;
    let crystal = CrystalConfig {
        model,
        n: match model {
            CrystalModel::Dispersionless => required("crystal.n", c.n)?,
            _ => c.n.unwrap_or(f64::NAN),
        },
        n_g,
        length: required("crystal.L_um", either("crystal.L_um", c.l_um, c.l_m, meters_to_um)?)?,
        eps_inf: c.eps_inf.unwrap_or(eps_inf),
        omega_to: c.omega_to_thz.map(thz_to_rad_fs).unwrap_or(omega_to),
        omega_lo: c.omega_lo_thz.map(thz_to_rad_fs).unwrap_or(omega_lo),
        gamma: c.gamma_thz.map(thz_to_rad_fs).unwrap_or(gamma),
        table_path: c.table_path,
    };
    if model == CrystalModel::Table && crystal.table_path.is_none() {
        return Err(Error::validation("crystal.table_path", "missing", "required for model = \"table\""));
    }

    let p = doc.pulses;
    let pulses = PulseConfig {
        shape: p.shape.unwrap_or(PulseShape::Rectangular),
        waist: required("pulses.waist_um", either("pulses.waist_um", p.waist_um, p.waist_m, meters_to_um)?)?,
        duration: required("pulses.duration_fs", either("pulses.duration_fs", p.duration_fs, p.duration_s, seconds_to_fs)?)?,
    };

    let d = Numerics::default();
    let nm = doc.numerics;
    let numerics = Numerics {
        band: SpectralBand {
            omega_max: nm.omega_max_thz.map(thz_to_rad_fs).unwrap_or(d.band.omega_max),
            n_omega: nm.n_omega.unwrap_or(d.band.n_omega),
            taper: nm.taper.unwrap_or(d.band.taper),
            shape: nm.taper_shape.unwrap_or(d.band.shape),
        },
        rho_cutoff: nm.rho_cutoff_um.unwrap_or(d.rho_cutoff),
        tau_pad: nm.tau_pad_fs.unwrap_or(d.tau_pad),
        tolerance: nm.tolerance.unwrap_or(d.tolerance),
        transverse_nodes: nm.transverse_nodes.unwrap_or(d.transverse_nodes),
        z_panels: nm.z_panels.unwrap_or(d.z_panels),
        max_intervals: nm.max_intervals.unwrap_or(d.max_intervals),
    };

    Ok(ExperimentConfig {
        delta_r,
        delta_t,
        crystal,
        pulses,
        angles: doc.angles.map(|a| (a.theta1_rad, a.theta2_rad)),
        numerics,
        output: OutputConfig {
            path: doc.output.path.unwrap_or_else(|| PathBuf::from("out")),
            format: doc.output.format.unwrap_or(OutputFormat::Csv),
        },
    })
}

/// Every violated invariant; empty when the config is usable.
pub fn validate_config(cfg: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut check = |ok: bool, key: &str, value: String, constraint: &str| {
        if !ok {
            out.push(Diagnostic { key: key.into(), value, constraint: constraint.into() });
        }
    };
    check(cfg.delta_r.is_finite() && cfg.delta_r >= 0.0, "experiment.delta_r_um", cfg.delta_r.to_string(), "delta_r >= 0");
    match cfg.delta_t {
        DelaySpec::Single(t) => check(t.is_finite(), "experiment.delta_t_fs", t.to_string(), "finite"),
        DelaySpec::Scan(s) => {
            check(s.step > 0.0, "experiment.delta_t_scan.step", s.step.to_string(), "step > 0");
            check(s.stop >= s.start, "experiment.delta_t_scan.stop", s.stop.to_string(), "stop >= start");
        }
    }
    let c = &cfg.crystal;
    check(c.length > 0.0, "crystal.L_um", c.length.to_string(), "L > 0");
    check(c.n_g >= 1.0, "crystal.n_g", c.n_g.to_string(), "n_g >= 1");
    match c.model {
        CrystalModel::Dispersionless => check(c.n >= 1.0, "crystal.n", c.n.to_string(), "n >= 1"),
        CrystalModel::Lorentz => {
            for (key, value, constraint) in lorentz(c).validate() {
                check(false, &key, value, &constraint);
            }
        }
        CrystalModel::Table => {}
    }
    let p = &cfg.pulses;
    check(p.waist > 0.0, "pulses.waist_um", p.waist.to_string(), "waist > 0");
    check(p.duration > 0.0, "pulses.duration_fs", p.duration.to_string(), "duration > 0");
    if let Some((t1, t2)) = cfg.angles {
        for (key, t) in [("angles.theta1_rad", t1), ("angles.theta2_rad", t2)] {
            check(normalize_angle(t).is_ok(), key, t.to_string(), "theta outside [pi/2, 3pi/2] (cos theta <= 0)");
        }
    }
    let n = &cfg.numerics;
    check(n.band.omega_max > 0.0, "numerics.omega_max_THz", rad_fs_to_thz(n.band.omega_max).to_string(), "omega_max > 0");
    check(n.band.n_omega >= 16, "numerics.n_omega", n.band.n_omega.to_string(), "n_omega >= 16");
    check((0.0..=1.0).contains(&n.band.taper), "numerics.taper", n.band.taper.to_string(), "taper in [0, 1]");
    check(n.rho_cutoff > 0.0, "numerics.rho_cutoff_um", n.rho_cutoff.to_string(), "rho_cutoff > 0");
    check(n.tau_pad >= 0.0, "numerics.tau_pad_fs", n.tau_pad.to_string(), "tau_pad >= 0");
    check(n.tolerance > 0.0 && n.tolerance < 1.0, "numerics.tolerance", n.tolerance.to_string(), "0 < tolerance < 1");
    check(n.transverse_nodes >= 2, "numerics.transverse_nodes", n.transverse_nodes.to_string(), "transverse_nodes >= 2");
    check(n.z_panels >= 1, "numerics.z_panels", n.z_panels.to_string(), "z_panels >= 1");
    check(n.max_intervals >= 1, "numerics.max_intervals", n.max_intervals.to_string(), "max_intervals >= 1");
    out
}

fn lorentz(c: &CrystalConfig) -> Medium {
    Medium::Lorentz {
        eps_inf: c.eps_inf,
        omega_to: c.omega_to,
        omega_lo: c.omega_lo,
        gamma: c.gamma,
        n_g: c.n_g,
    }
}

impl ExperimentConfig {
    /// Canonical TOML for this config, in internal-unit keys. Loading it
    /// gives back an equal config.
    pub fn to_toml(&self) -> String {
        let c = &self.crystal;
        let (single, scan) = match self.delta_t {
            DelaySpec::Single(t) => (Some(t), None),
            DelaySpec::Scan(s) => (None, Some(s)),
        };
        let lorentz = c.model == CrystalModel::Lorentz;
        let n = &self.numerics;
        let doc = Document {
            experiment: RawExperiment {
                delta_r_um: Some(self.delta_r),
                delta_t_fs: single,
                delta_t_scan: scan,
                ..Default::default()
            },
            crystal: RawCrystal {
                model: Some(c.model),
                n: c.n.is_finite().then_some(c.n),
                n_g: Some(c.n_g),
                l_um: Some(c.length),
                eps_inf: lorentz.then_some(c.eps_inf),
                omega_to_thz: lorentz.then_some(rad_fs_to_thz(c.omega_to)),
                omega_lo_thz: lorentz.then_some(rad_fs_to_thz(c.omega_lo)),
                gamma_thz: lorentz.then_some(rad_fs_to_thz(c.gamma)),
                table_path: c.table_path.clone(),
                ..Default::default()
            },
            pulses: RawPulses {
                shape: Some(self.pulses.shape),
                waist_um: Some(self.pulses.waist),
                duration_fs: Some(self.pulses.duration),
                ..Default::default()
            },
            angles: self.angles.map(|(theta1_rad, theta2_rad)| RawAngles { theta1_rad, theta2_rad }),
            numerics: RawNumerics {
                omega_max_thz: Some(rad_fs_to_thz(n.band.omega_max)),
                n_omega: Some(n.band.n_omega),
                taper: Some(n.band.taper),
                taper_shape: Some(n.band.shape),
                rho_cutoff_um: Some(n.rho_cutoff),
                tau_pad_fs: Some(n.tau_pad),
                tolerance: Some(n.tolerance),
                transverse_nodes: Some(n.transverse_nodes),
                z_panels: Some(n.z_panels),
                max_intervals: Some(n.max_intervals),
            },
            output: RawOutput {
                path: Some(self.output.path.clone()),
                format: Some(self.output.format),
            },
        };
        toml::to_string(&doc).expect("config documents always serialise")
    }

    pub fn medium(&self) -> Result<Medium> {
        let c = &self.crystal;
        match c.model {
            CrystalModel::Dispersionless => Ok(Medium::Dispersionless { n: c.n, n_g: c.n_g }),
            CrystalModel::Lorentz => Ok(lorentz(c)),
            CrystalModel::Table => {
                let path = c.table_path.as_deref().expect("validated: table models carry a path");
                load_permittivity_table(path, c.n_g)
            }
        }
    }

    pub fn kernel_set(&self) -> Result<KernelSet> {
        KernelSet::new(self.medium()?, self.numerics.band)
    }

    pub fn integrator_options(&self) -> IntegratorOptions {
        let n = &self.numerics;
        IntegratorOptions {
            tolerance: n.tolerance,
            rho_min: n.rho_cutoff,
            transverse_nodes: n.transverse_nodes,
            z_panels: n.z_panels,
            max_intervals: n.max_intervals,
        }
    }

    /// The probe pulse centred on the axis at time zero; the other pulse of
    /// a pair is this one moved by `(delta_r, delta_t)`.
    pub fn pulse(&self) -> PulseEnvelope {
        PulseEnvelope {
            shape: self.pulses.shape,
            waist: self.pulses.waist,
            duration: self.pulses.duration,
            x: 0.0,
            y: 0.0,
            t0: 0.0,
            crystal_length: self.crystal.length,
            n_g: self.crystal.n_g,
            amplitude: 1.0,
        }
    }

    pub fn delays(&self) -> Vec<f64> {
        self.delta_t.delays()
    }
}
