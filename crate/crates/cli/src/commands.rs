use rayon::prelude::*;
use serde_json::json;

use eosvac::config::{load_config_file_with, DelaySpec, ExperimentConfig, OutputFormat};
use eosvac::fdt::verify_fdt_signal;
use eosvac::integrator::scan_delta_t;
use eosvac::kernels::{ResponsePart, ResponseValue};
use eosvac::output::{boundaries_csv, fdt_csv, kernel_csv, regions_csv, signal_csv};
use eosvac::pulses::overlap_kernel;
use eosvac::regions::{pulse_pair, region_map};
use eosvac::waveplate::coefficients;
use eosvac::Error;

use crate::grid::Grid;
use crate::manifest::Run;
use crate::{Common, Failure};

fn setup(common: &Common, subcommand: &'static str, parameters: serde_json::Value) -> Result<(ExperimentConfig, Run), Failure> {
    let cfg = load_config_file_with(&common.config, &common.overrides)?;
    if let Some(n) = common.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let n = &cfg.numerics;
    let numerics = json!({
        "integrator": cfg.integrator_options(),
        "band": n.band,
        "tau_pad_fs": n.tau_pad,
    });
    let dir = common.out.clone().unwrap_or_else(|| cfg.output.path.clone());
    let run = Run::new(subcommand, cfg.to_toml(), common.overrides.clone(), numerics, parameters, &dir, common.verbose)?;
    run.log(format!("config {} loaded", common.config.display()));
    Ok((cfg, run))
}

/// Finishes the run and turns `failed` marked rows into exit status 2.
fn close(mut run: Run, failed: usize, total: usize, what: &str) -> Result<(), Failure> {
    if failed == 0 {
        return run.finish();
    }
    let msg = format!("{failed} of {total} {what} failed; see the marked rows");
    run.mark(format!("partial: {msg}"));
    run.finish()?;
    Err(Failure::Numeric(msg))
}

pub fn signal(common: &Common) -> Result<(), Failure> {
    let (cfg, mut run) = setup(common, "signal", json!({}))?;
    let rows = scan_delta_t(&cfg)?;
    run.log(format!("{} delays scanned", rows.len()));
    run.write("signal.csv", &signal_csv(&rows, &run.reference()))?;
    if cfg.output.format == OutputFormat::Json {
        let body = serde_json::to_string_pretty(&rows).expect("records serialise") + "\n";
        run.write("signal.json", &body)?;
    }
    let failed = rows.iter().filter(|r| !r.status.is_ok()).count();
    close(run, failed, rows.len(), "points")
}

pub fn regions(common: &Common, delta_r: &Grid, delta_t: Option<&Grid>) -> Result<(), Failure> {
    let params = json!({ "delta_r_um": delta_r.0, "delta_t_fs": delta_t.map(|g| &g.0) });
    let (cfg, mut run) = setup(common, "regions", params)?;
    let delays = match (delta_t, cfg.delta_t) {
        (Some(g), _) => g.0.clone(),
        (None, DelaySpec::Scan(_)) => cfg.delays(),
        (None, DelaySpec::Single(_)) => Grid::linspace(0.0, 5000.0, 101).0,
    };
    let p = cfg.pulse();
    let map = region_map(&p, &p, &cfg.medium()?, &delta_r.0, &delays);
    run.log(format!("{} cells classified", map.cells.len()));
    run.write("regions.csv", &regions_csv(&map, &run.reference()))?;
    run.write("boundaries.csv", &boundaries_csv(&map, &run.reference()))?;
    let failed = map.cells.iter().filter(|c| c.is_err()).count();
    close(run, failed, map.cells.len(), "cells")
}

pub fn fdt(common: &Common, tail: bool) -> Result<(), Failure> {
    let (cfg, mut run) = setup(common, "fdt", json!({ "tail_correction": tail }))?;
    if !matches!(cfg.delta_t, DelaySpec::Scan(_)) {
        return Err(Failure::Validation("fdt needs experiment.delta_t_scan".into()));
    }
    let rows = scan_delta_t(&cfg)?;
    run.write("fdt_scan.csv", &signal_csv(&rows, &run.reference()))?;
    let failed = rows.iter().filter(|r| !r.status.is_ok()).count();
    if failed > 0 {
        return close(run, failed, rows.len(), "points");
    }
    let report = match verify_fdt_signal(&rows, tail) {
        Ok(r) => r,
        Err(e) => {
            run.mark(format!("failed: {e}"));
            run.finish()?;
            return Err(e.into());
        }
    };
    run.log(format!("interior L2 residual {:.3e}", report.l2_relative));
    run.write("fdt.csv", &fdt_csv(&report, &run.reference()))?;
    let (lo, hi) = report.interior;
    let t = &report.delta_t;
    let summary = json!({
        "manifest": run.reference(),
        "delta_r_um": cfg.delta_r,
        "l2_relative": report.l2_relative,
        "max_relative": report.max_relative,
        "window": { "start_fs": t[0], "stop_fs": t[t.len() - 1], "step_fs": t[1] - t[0], "points": t.len() },
        "interior": { "from_fs": t[lo], "to_fs": t[hi - 1], "points": hi - lo },
        "edge_ratio": report.edge_ratio,
        "tail_correction": report.tail,
        "warnings": report.warnings,
    });
    run.write("fdt_summary.json", &(serde_json::to_string_pretty(&summary).expect("summary serialises") + "\n"))?;
    run.finish()
}

/// Cartesian product in `(x, y, z, tau)` order, `tau` fastest.
fn points(xs: &Grid, ys: &Grid, zs: &Grid, taus: &Grid) -> Vec<([f64; 3], f64)> {
    let mut out = Vec::with_capacity(xs.0.len() * ys.0.len() * zs.0.len() * taus.0.len());
    for &x in &xs.0 {
        for &y in &ys.0 {
            for &z in &zs.0 {
                out.extend(taus.0.iter().map(|&t| ([x, y, z], t)));
            }
        }
    }
    out
}

/// Distributional or singular points become empty cells.
fn dump<F>(pts: &[([f64; 3], f64)], f: F) -> Result<Vec<([f64; 3], f64, Option<f64>)>, Failure>
where
    F: Fn([f64; 3], f64) -> eosvac::Result<Option<f64>> + Sync,
{
    pts.par_iter()
        .map(|&(r, t)| match f(r, t) {
            Ok(v) => Ok((r, t, v)),
            Err(Error::LightCone { .. } | Error::Coincidence) => Ok((r, t, None)),
            Err(e) => Err(Failure::from(e)),
        })
        .collect()
}

pub fn kernels(
    common: &Common,
    overlap: bool,
    rho_x: Option<&Grid>,
    rho_y: &Grid,
    rho_z: &Grid,
    tau: Option<&Grid>,
) -> Result<(), Failure> {
    let params = json!({
        "overlap": overlap,
        "rho_x_um": rho_x.map(|g| &g.0),
        "rho_y_um": rho_y.0,
        "rho_z_um": rho_z.0,
        "tau_fs": tau.map(|g| &g.0),
    });
    let (cfg, mut run) = setup(common, "kernels", params)?;
    let delta_t = cfg.delays().first().copied().unwrap_or(0.0);
    let xs = rho_x.cloned().unwrap_or(Grid(vec![cfg.delta_r]));
    let centre = if overlap { delta_t } else { 0.0 };
    let taus = tau.cloned().unwrap_or_else(|| Grid::linspace(centre - 4000.0, centre + 4000.0, 161));
    let pts = points(&xs, rho_y, rho_z, &taus);
    run.log(format!("{} grid points", pts.len()));
    let reference = run.reference();

    if overlap {
        let p = cfg.pulse();
        let (q1, q2) = pulse_pair(&p, &p, cfg.delta_r, delta_t);
        let k = overlap_kernel(&q1, &q2)?;
        let rows = dump(&pts, |r, t| Ok(Some(k.value(r, t))))?;
        run.write("overlap.csv", &kernel_csv(&rows, &reference))?;
        return run.finish();
    }

    let ks = cfg.kernel_set()?;
    let response = |part: ResponsePart| {
        let ks = &ks;
        move |r: [f64; 3], t: f64| {
            ks.response_part_time(part, r, t).map(|v| match v {
                ResponseValue::Cone(c) if c.is_zero() => Some(0.0),
                ResponseValue::Cone(_) => None,
                ResponseValue::Sample(s) => Some(s),
            })
        }
    };
    let c = dump(&pts, |r, t| ks.correlation_time(r, t).map(Some))?;
    run.write("kernels_c.csv", &kernel_csv(&c, &reference))?;
    let rp = dump(&pts, response(ResponsePart::Reactive))?;
    run.write("kernels_r_prime.csv", &kernel_csv(&rp, &reference))?;
    let rd = dump(&pts, response(ResponsePart::Dissipative))?;
    run.write("kernels_r_dprime.csv", &kernel_csv(&rd, &reference))?;
    run.finish()
}

/// Fixed decimals with trailing zeros and negative zero dropped.
fn short(v: f64, precision: usize) -> String {
    let s = format!("{v:.precision$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.') } else { &s };
    if s == "-0" { "0".into() } else { s.into() }
}

pub fn angles(theta1: f64, theta2: f64, precision: usize) -> Result<(), Failure> {
    let c = coefficients(theta1, theta2)?;
    println!("p_vac={}", short(c.p_vac, precision));
    println!("p_s_prime={}", short(c.p_s_prime, precision));
    println!("p_s_dprime={}", short(c.p_s_dprime, precision));
    Ok(())
}
