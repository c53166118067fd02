use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eosvac"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn rect_config() -> String {
    configs().join("rect_dispersionless.toml").display().to_string()
}

const SHORT_SCAN: &str = "experiment.delta_t_scan={ start = 0.0, stop = 5000.0, step = 500.0 }";

#[test]
fn angles_prints_the_coefficients() {
    let out = run(&["angles", "--theta1", "1.5708", "--theta2", "3.1416"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "p_vac=0\np_s_prime=1\np_s_dprime=1\n");
}

#[test]
fn angle_outside_domain_is_a_validation_error() {
    let out = run(&["angles", "--theta1", "0.1", "--theta2", "3.1416"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_config_names_the_path() {
    let out = run(&["signal", "--config", "no/such/file.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such/file.toml"));
}

#[test]
fn usage_errors_exit_64() {
    for args in [&["bogus"][..], &["signal", "--config", "x.toml", "--frob"], &["signal"]] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(64), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    }
}

#[test]
fn invalid_config_value_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["signal", "--config", &rect_config(), "--out", dir.path().to_str().unwrap(), "--set", "crystal.L_um=-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("crystal.L_um"));
}

#[test]
fn signal_runs_are_byte_identical_and_reference_the_manifest() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = run(&["signal", "--config", &rect_config(), "--out", d.path().to_str().unwrap(), "--set", SHORT_SCAN, "--threads", "2"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read_to_string(d.path().join(f)).unwrap();
    let (a, b) = (read(&dirs[0], "signal.csv"), read(&dirs[1], "signal.csv"));
    assert_eq!(a, b);

    let manifest: serde_json::Value = serde_json::from_str(&read(&dirs[0], "signal_manifest.json")).unwrap();
    let hash = manifest["hash"].as_str().unwrap();
    let mut lines = a.lines();
    assert_eq!(lines.next().unwrap(), format!("# manifest: signal_manifest.json sha256={hash}"));
    assert!(lines.next().unwrap().starts_with("delta_r_um,delta_t_fs,g_vac,g_s,g_r_prime,g_r_dprime,g_assembled,region"));
    assert_eq!(lines.count(), 11);
    assert_eq!(manifest["status"], "ok");
    assert!(manifest["wall_clock"]["elapsed_s"].as_f64().is_some());
}

#[test]
fn regions_writes_map_and_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "regions", "--config", &rect_config(), "--out", dir.path().to_str().unwrap(),
        "--delta-r-um", "0:400:9", "--delta-t-fs", "0:5000:6",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let map = std::fs::read_to_string(dir.path().join("regions.csv")).unwrap();
    assert_eq!(map.lines().count(), 2 + 9 * 6);
    assert_eq!(map.lines().nth(1).unwrap(), "delta_r_um,delta_t_fs,label,margin_um");
    let curves = std::fs::read_to_string(dir.path().join("boundaries.csv")).unwrap();
    assert!(curves.starts_with("# manifest: regions_manifest.json sha256="));
    assert_eq!(curves.lines().count(), 2 + 6);
}

#[test]
fn narrow_fdt_window_is_a_numeric_failure_with_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "fdt", "--config", &rect_config(), "--out", dir.path().to_str().unwrap(),
        "--set", "experiment.delta_t_scan={ start = 1500.0, stop = 2500.0, step = 15.0 }",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too narrow"));
    assert!(dir.path().join("fdt_scan.csv").exists());
    let manifest = std::fs::read_to_string(dir.path().join("fdt_manifest.json")).unwrap();
    assert!(manifest.contains("\"status\": \"failed:"));
}
