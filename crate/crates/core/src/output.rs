//! CSV tables for scans, region maps and FDT reports.
//!
//! Every table opens with one `#` comment line naming the manifest it
//! belongs to, then a header row. Numbers are written in shortest
//! round-trip scientific form, so equal results give equal bytes.

use crate::fdt::FdtReport;
use crate::integrator::{PointStatus, SignalRecord};
use crate::regions::RegionMap;

/// Negative zero prints as zero.
fn num(v: f64) -> String {
    if v == 0.0 {
        return "0e0".into();
    }
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn table(manifest: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = format!("# manifest: {manifest}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header).expect("writing to memory");
        for r in rows {
            w.write_record(&r).expect("writing to memory");
        }
        w.flush().expect("writing to memory");
    }
    String::from_utf8(out).expect("csv output is utf-8")
}

/// Failed rows leave every signal cell empty and explain themselves in the
/// status column.
pub fn signal_csv(rows: &[SignalRecord], manifest: &str) -> String {
    let with_assembled = rows.iter().any(|r| r.g_assembled.is_some());
    let mut header = vec!["delta_r_um", "delta_t_fs", "g_vac", "g_s", "g_r_prime", "g_r_dprime"];
    if with_assembled {
        header.push("g_assembled");
    }
    header.extend(["region", "path", "status"]);
    table(
        manifest,
        &header,
        rows.iter().map(|r| {
            let ok = r.status.is_ok();
            let v = |x: f64| if ok { num(x) } else { String::new() };
            let mut row = vec![num(r.delta_r), num(r.delta_t), v(r.g_vac), v(r.g_s), v(r.g_r_prime), v(r.g_r_dprime)];
            if with_assembled {
                row.push(if ok { opt(r.g_assembled) } else { String::new() });
            }
            row.push(r.region.map(|g| g.to_string()).unwrap_or_default());
            row.push(match r.path {
                crate::integrator::Path::ClosedForm => "closed_form".into(),
                crate::integrator::Path::Spectral => "spectral".into(),
            });
            row.push(match &r.status {
                PointStatus::Ok => "ok".into(),
                PointStatus::Failed(msg) => format!("error: {msg}"),
            });
            row
        }),
    )
}

pub fn regions_csv(map: &RegionMap, manifest: &str) -> String {
    let nr = map.delta_r.len();
    table(
        manifest,
        &["delta_r_um", "delta_t_fs", "label", "margin_um"],
        map.cells.iter().enumerate().map(|(idx, cell)| {
            let (label, margin) = match cell {
                Ok(l) => (l.region.to_string(), num(l.margin)),
                Err(msg) => (format!("error: {msg}"), String::new()),
            };
            vec![num(map.delta_r[idx % nr]), num(map.delta_t[idx / nr]), label, margin]
        }),
    )
}

/// Analytic boundary curves; cells are empty where a formula is undefined.
pub fn boundaries_csv(map: &RegionMap, manifest: &str) -> String {
    table(
        manifest,
        &["delta_t_fs", "delta_r_I_II_um", "delta_r_II_III_um"],
        map.boundaries.iter().map(|b| vec![num(b.delta_t), opt(b.i_ii), opt(b.ii_iii)]),
    )
}

pub fn fdt_csv(report: &FdtReport, manifest: &str) -> String {
    table(
        manifest,
        &["delta_t_fs", "g_vac", "two_g_r_dprime", "hilbert_prediction", "pointwise_residual"],
        (0..report.delta_t.len()).map(|i| {
            vec![
                num(report.delta_t[i]),
                num(report.g_vac[i]),
                num(2.0 * report.g_r_dprime[i]),
                num(report.prediction[i]),
                num(report.prediction[i] - report.g_vac[i]),
            ]
        }),
    )
}

/// Kernel samples `(rho_x, rho_y, rho_z, tau, value)`; `None` values are
/// written as empty cells.
pub fn kernel_csv(rows: &[([f64; 3], f64, Option<f64>)], manifest: &str) -> String {
    table(
        manifest,
        &["rho_x_um", "rho_y_um", "rho_z_um", "tau_fs", "value"],
        rows.iter().map(|(r, t, v)| vec![num(r[0]), num(r[1]), num(r[2]), num(*t), opt(*v)]),
    )
}
