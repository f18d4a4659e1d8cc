use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn asymx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asymx")).args(args).output().expect("binary runs")
}

fn recipe(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("recipes").join(name)
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    let base = recipe("base.cfg");
    fs::write(&path, format!("include {}\n{body}", base.display())).unwrap();
    path
}

fn header(csv: &str) -> &str {
    csv.lines().next().unwrap_or("")
}

#[test]
fn cost_table_matches_known_values() {
    let out = asymx(&["cost-table", "--config", recipe("cost_table.cfg").to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(header(&text), "architecture,M,N,epsilon,cost_usd,power_w");
    assert!(text.contains("ADBN,128,16,0.333333333,52432,790.933333"));
    assert!(text.contains("HBFN,128,16,0.333333333,382208,"));
}

#[test]
fn same_seed_writes_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "nmse.cfg", "snr_db = 10\nn_values = 16\nselections = random\ntrials = 30\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let res = asymx(&["transfer-nmse", "--config", cfg.to_str().unwrap(), "--seed", "11", "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let fa = fs::read(a.join("transfer-nmse.csv")).unwrap();
    let fb = fs::read(b.join("transfer-nmse.csv")).unwrap();
    assert_eq!(fa, fb);

    let c = dir.path().join("c");
    let res = asymx(&["transfer-nmse", "--config", cfg.to_str().unwrap(), "--seed", "12", "--out", c.to_str().unwrap()]);
    assert!(res.status.success());
    assert_ne!(fa, fs::read(c.join("transfer-nmse.csv")).unwrap());
}

#[test]
fn se_link_flag_selects_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "se.cfg", "snr_db = 0\ntrials = 4\nk = 4\nselections = random\n");
    let cfg = cfg.to_str().unwrap();
    let up = asymx(&["se", "--config", cfg, "--link", "uplink"]);
    assert!(up.status.success());
    assert_eq!(header(&String::from_utf8(up.stdout).unwrap()), "snr_db,selection,detector,se_bits,se_stderr,trials");
    let down = asymx(&["se", "--config", cfg, "--link", "downlink", "--trials", "3"]);
    assert!(down.status.success(), "{}", String::from_utf8_lossy(&down.stderr));
    let text = String::from_utf8(down.stdout).unwrap();
    assert_eq!(header(&text), "snr_db,system,precoder,transfer_algorithm,se_bits,se_stderr,trials,selection");
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(6) == Some("3")));
}

#[test]
fn single_trial_reports_zero_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "se.cfg", "snr_db = 5\nk = 3\nselections = comb\n");
    let out = asymx(&["se", "--config", cfg.to_str().unwrap(), "--trials", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4], "0");
    assert_eq!(row[5], "1");
}

#[test]
fn remaining_subcommands_emit_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = asymx(&["snr-loss", "--config", recipe("snr_loss.cfg").to_str().unwrap()]);
    assert!(out.status.success());
    assert!(header(&String::from_utf8(out.stdout).unwrap()).starts_with("phase_diff_rad,loss_closed,loss_numeric,resolved_path_count"));
    let cfg = write_cfg(dir.path(), "beam.cfg", "beam_points = 65\nselections = comb\n");
    let out = asymx(&["beam-pattern", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(header(&text), "w,angle_deg,magnitude,magnitude_db,selection");
    assert_eq!(text.lines().count(), 66);
    let cfg = write_cfg(dir.path(), "ee.cfg", "trials = 3\nk = 4\nselections = random\n");
    let out = asymx(&["ee", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(header(&String::from_utf8(out.stdout).unwrap()).starts_with("snr_db,system,power_w,se_uplink,se_downlink,ee_bits_per_joule"));
}

#[test]
fn config_errors_exit_nonzero_with_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "m = 128\nn = lots\n").unwrap();
    let out = asymx(&["cost-table", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.cfg") && err.contains('n'), "{err}");

    fs::write(&bad, "frobnicate = 1\n").unwrap();
    let out = asymx(&["cost-table", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("frobnicate"));

    let cfg = write_cfg(dir.path(), "nm.cfg", "n = 200\n");
    let out = asymx(&["se", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());

    let out = asymx(&["se", "--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("asymx:"));
}
