use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn switchcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_switchcap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, body: &str) -> String {
    let path = dir.path().join("run.cfg");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn out_path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

/// `(quantity, tc, rho) -> value` for every row with a value.
fn parse_csv(path: &Path) -> HashMap<(String, usize, String), f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rho,quantity,tc,value_bits,stderr_bits,flags"));
    lines
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 6, "{l}");
            let v = f[3].parse().ok()?;
            Some(((f[1].to_string(), f[2].parse().unwrap(), f[0].to_string()), v))
        })
        .collect()
}

#[test]
fn point_reports_closed_form_bounds() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "p_t = 0.9\np_r = 0.9\nrho_grid = 0\npower_db = 10\ntc_list = 1\nquantities = global, rx_full\n",
    );
    let out = out_path(&dir, "point.csv");
    let o = switchcap(&["point", "--config", &cfg, "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(
        csv,
        "rho,quantity,tc,value_bits,stderr_bits,flags\n0,global,1,1.51401,0,closed_form\n0,rx_full,1,1.45730,0,closed_form\n"
    );
}

#[test]
fn empty_quantities_succeed_with_header_only() {
    let o = switchcap(&["point", "--set", "rho_grid=0", "--set", "quantities="]);
    assert!(o.status.success());
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        "rho,quantity,tc,value_bits,stderr_bits,flags\n"
    );
}

#[test]
fn infeasible_rho_fails_and_names_interval() {
    let o = switchcap(&["point", "--set", "p_t=0.9", "--set", "p_r=0.1", "--set", "rho_grid=0.2"]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("InfeasibleCorrelation"), "{err}");
    assert!(err.contains("feasible interval is [-1, 0.111"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn config_errors_point_at_the_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "p_t = 0.9\n\npower = 10\n");
    let o = switchcap(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("run.cfg:3"), "{err}");
    assert!(err.contains("unknown key `power`"), "{err}");

    let o = switchcap(&["sweep", "--set", "tc_list=1,zero"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("--set tc_list=1,zero"));
}

#[test]
fn point_rejects_a_grid() {
    let o = switchcap(&["point", "--set", "rho_grid=0,0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn undefined_cells_give_nonzero_exit_but_still_write_csv() {
    let o = switchcap(&[
        "sweep",
        "--set",
        "p_t=0.5",
        "--set",
        "p_r=0.5",
        "--set",
        "rho_grid=-1,0",
        "--set",
        "tc_list=1",
        "--set",
        "quantities=tx_full_causal",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(
        csv.contains("-1.00000,tx_full_causal,1,,,error=ConditionOnNullEvent"),
        "{csv}"
    );
}

#[test]
fn sweep_is_byte_identical_across_runs_and_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "rho_grid = 0:0.5:1\ntc_list = 1, 3\nquantities = causal, tx_full_causal, noncausal_inner\nmc_samples = 5000\nseed = 42\n",
    );
    let outputs: Vec<String> = [("a.csv", "1"), ("b.csv", "1"), ("c.csv", "3")]
        .iter()
        .map(|(name, workers)| {
            let out = out_path(&dir, name);
            let o = switchcap(&["sweep", "--config", &cfg, "--out", &out, "--workers", workers]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            fs::read_to_string(out).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let out = out_path(&dir, "reseeded.csv");
    assert!(switchcap(&["sweep", "--config", &cfg, "--out", &out, "--seed", "43"])
        .status
        .success());
    assert_ne!(fs::read_to_string(out).unwrap(), outputs[0]);
}

#[test]
fn default_sweep_rows_satisfy_the_ordering_chain() {
    let dir = TempDir::new().unwrap();
    let out = out_path(&dir, "default.csv");
    let o = switchcap(&["sweep", "--set", "tc_list=1", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = parse_csv(Path::new(&out));
    // Deterministic quadrature at tc = 1, so the chain's slack is its floor.
    let eps = 1e-3;
    for i in 0..=10 {
        let rho = match i {
            0 => "0".to_string(),
            10 => "1.00000".to_string(),
            _ => format!("{:.6}", i as f64 / 10.0),
        };
        let get = |q: &str| rows[&(q.to_string(), 1, rho.clone())];
        let (c, nc, rx, g, txc) = (
            get("causal"),
            get("noncausal_inner"),
            get("rx_full"),
            get("global"),
            get("tx_full_causal"),
        );
        // Values are rounded to six significant digits in the CSV.
        let r = 1e-5;
        assert!(c <= nc + eps, "rho {rho}");
        assert!(nc + eps <= rx + 2.0 * eps, "rho {rho}");
        assert!(rx <= g + r, "rho {rho}");
        assert!(c <= txc + r, "rho {rho}");
        assert!(txc <= g + eps, "rho {rho}");
    }
}

#[test]
fn heavy_loading_favors_transmitter_information_at_low_correlation() {
    let o = switchcap(&[
        "sweep",
        "--set",
        "p_t=0.1",
        "--set",
        "p_r=0.1",
        "--set",
        "rho_grid=0:0.1:0.5",
        "--set",
        "tc_list=1",
        "--set",
        "quantities=tx_full_causal,rx_full",
    ]);
    assert!(o.status.success());
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("heavy.csv");
    fs::write(&path, o.stdout).unwrap();
    let rows = parse_csv(&path);
    let rhos: Vec<String> = rows.keys().map(|k| k.2.clone()).collect();
    assert_eq!(rhos.len(), 12);
    for rho in rhos {
        let txc = rows[&("tx_full_causal".to_string(), 1, rho.clone())];
        let rx = rows[&("rx_full".to_string(), 1, rho.clone())];
        assert!(txc > rx, "rho {rho}: {txc} <= {rx}");
    }
}

#[test]
fn validate_passes_and_repeats() {
    let a = switchcap(&["validate", "--seed", "5"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stdout));
    let b = switchcap(&["validate", "--seed", "5", "--workers", "2"]);
    assert_eq!(a.stdout, b.stdout);
    let report = String::from_utf8(a.stdout).unwrap();
    assert!(report.lines().all(|l| !l.starts_with("FAIL")));
    assert!(report.contains("slack="));
}
