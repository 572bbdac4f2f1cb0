use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tdpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdpt")).args(args).output().expect("binary runs")
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"))
}

fn run_bundled(name: &str, out: &Path) {
    let o = tdpt(&["run", "--config", bundled(name).to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

fn numbers(path: &Path, name: &str) -> Vec<f64> {
    column(path, name).iter().map(|s| s.parse().unwrap()).collect()
}

#[test]
fn magnetic_pulse_dirac_reproduces_zero_transitions_and_norm_growth() {
    let dir = tempfile::tempdir().unwrap();
    run_bundled("magnetic_pulse_dirac", dir.path());
    let p = numbers(&dir.path().join("dirac/first_order.csv"), "probability");
    assert_eq!(p.len(), 44);
    assert!(p.iter().all(|&x| x <= 1e-24), "{p:?}");
    let norms = numbers(&dir.path().join("dirac/euler.csv"), "norm_sqr");
    assert!(norms.windows(2).all(|w| w[1] > w[0]), "{norms:?}");
    let rk4 = numbers(&dir.path().join("dirac/coefficients.csv"), "norm_sqr");
    assert!(rk4.iter().all(|n| (n - 1.0).abs() <= 1e-8));
}

#[test]
fn magnetic_pulse_quasicanon_keeps_energy_constant() {
    let dir = tempfile::tempdir().unwrap();
    run_bundled("magnetic_pulse_quasicanon", dir.path());
    let e = numbers(&dir.path().join("quasicanon/trajectory.csv"), "energy");
    assert!(e.iter().all(|v| (v - e[0]).abs() <= 1e-10));
    let exact = numbers(&dir.path().join("oracle/trajectory.csv"), "energy");
    assert!(exact.iter().all(|v| (v - e[0]).abs() <= 1e-8));
    let residuals = numbers(&dir.path().join("quasicanon/poisson.csv"), "residual");
    assert!(residuals.iter().all(|r| *r <= 1e-8));
    let manifest = std::fs::read_to_string(dir.path().join("quasicanon/manifest.toml")).unwrap();
    assert!(manifest.contains("impulsive"), "rect pulse edges must be flagged");
}

#[test]
fn gauge_paradox_dirac_disagrees_but_oracle_does_not() {
    let dir = tempfile::tempdir().unwrap();
    run_bundled("gauge_paradox", dir.path());
    let rel = numbers(&dir.path().join("dirac/gauge_sensitivity.csv"), "rel_diff");
    assert!(rel[0] >= 0.1);
    // The oracle ran in the vector-potential gauge and reports in the scalar
    // gauge; its P(0->1) must match the scalar-gauge run of the same pulse.
    let cmp = dir.path().join("compare.csv");
    let exact = numbers(&cmp, "exact")[0];
    let scalar_gauge = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(bundled("gauge_paradox")).unwrap();
    let plain = text.split("[[gauge.f]]").next().unwrap().to_string() + "[state]\nindex = 0\n\n[time]\nhorizon = 5.0\ndt = 0.002\n\n[oracle]\n";
    let cfg = scalar_gauge.path().join("scalar.toml");
    std::fs::write(&cfg, plain).unwrap();
    let o = tdpt(&["oracle", "--config", cfg.to_str().unwrap(), "--out", scalar_gauge.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let direct = numbers(&scalar_gauge.path().join("oracle/quantities.csv"), "value")[0];
    assert!((exact - direct).abs() <= 1e-4 * direct, "{exact} vs {direct}");
}

#[test]
fn soperator_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    run_bundled("soperator_magnetic", dir.path().join("m").as_path());
    run_bundled("soperator_electric", dir.path().join("e").as_path());
    let m = column(&dir.path().join("m/soperator/consistency.csv"), "verdict");
    assert!(m.iter().any(|v| v == "unequal"));
    let e = column(&dir.path().join("e/soperator/consistency.csv"), "verdict");
    assert!(!e.is_empty() && e.iter().all(|v| v == "equal"));
}

#[test]
fn forced_oscillator_soperator_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    run_bundled("forced_oscillator", dir.path());
    let cmp = dir.path().join("compare.csv");
    let names = column(&cmp, "quantity");
    let rel = numbers(&cmp, "rel_diff");
    let i = names.iter().position(|n| n == "soperator:P(0->1)").unwrap();
    assert!(rel[i] <= 0.05);
}

#[test]
fn zero_field_compare_has_no_differences() {
    let dir = tempfile::tempdir().unwrap();
    run_bundled("zero_field", dir.path());
    let diffs = numbers(&dir.path().join("compare.csv"), "abs_diff");
    assert!(!diffs.is_empty());
    // Transitions are exactly zero; expectations differ only by round-off.
    assert!(diffs.iter().all(|d| *d <= 1e-12), "{diffs:?}");
}

#[test]
fn identical_configs_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_bundled("forced_oscillator", a.path());
    run_bundled("forced_oscillator", b.path());
    for file in ["dirac/first_order.csv", "dirac/coefficients.csv", "quasicanon/trajectory.csv", "soperator/s_matrix.csv", "oracle/trajectory.csv", "compare.csv"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs");
    }
}

#[test]
fn negative_dt_is_a_config_error_naming_dt() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(bundled("zero_field")).unwrap().replace("dt = 0.001", "dt = -0.001");
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = tdpt(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`time.dt`"));
}

#[test]
fn step_policy_violation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(bundled("zero_field")).unwrap().replace("dt = 0.001", "dt = 0.1");
    let cfg = dir.path().join("coarse.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = tdpt(&["dirac", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rk4_step"));
}

#[test]
fn compare_without_oracle_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = tdpt(&["compare", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing prerequisite"));
}

#[test]
fn sweep_writes_one_directory_per_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = bundled("zero_field");
    let b = bundled("soperator_electric");
    let o = tdpt(&["sweep", "--config", a.to_str().unwrap(), "--config", b.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("zero_field/compare.csv").is_file());
    assert!(dir.path().join("soperator_electric/soperator/consistency.csv").is_file());
}

#[test]
fn manifest_echoes_config_and_versions() {
    let dir = tempfile::tempdir().unwrap();
    let o = tdpt(&["soperator", "--config", bundled("soperator_electric").to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--seed", "7"]);
    assert!(o.status.success());
    let m: toml::Table = std::fs::read_to_string(dir.path().join("soperator/manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(m["run"]["seed"].as_integer(), Some(7));
    assert_eq!(m["config"]["basis"]["n_max"].as_integer(), Some(8));
    assert!(m["tunables"]["consistency_tolerance"].as_float().is_some());
    assert!(m["tool"]["core_version"].as_str().is_some());
}
