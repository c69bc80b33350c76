use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mpet(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpet"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn accuracy_single_level_has_empty_orders() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpet(dir.path(), &["accuracy", "--case", "table1", "--levels", "1", "--base", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("accuracy_table1.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("inv_h,field,l2_error[dimensionless]"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.starts_with("4,") && r.ends_with(",,,")));
    assert!(dir.path().join("accuracy_table1.txt").exists());
}

#[test]
fn accuracy_table2_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpet(dir.path(), &["accuracy", "--case", "table2", "--levels", "2", "--base", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("decoupled, 10 iterations"), "{text}");
    assert!(text.contains("dt = 2e-3"), "{text}");
    let csv = fs::read_to_string(dir.path().join("accuracy_table2.csv")).unwrap();
    // second level carries orders
    assert!(csv.lines().filter(|l| l.starts_with("4,")).all(|l| !l.ends_with(",,,")));
}

#[test]
fn accuracy_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = mpet(d.path(), &["accuracy", "--case", "table3", "--levels", "2", "--base", "2"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["accuracy_table3.csv", "accuracy_table3.txt"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn unknown_case_and_bad_overrides_fail_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = mpet(&out, &["accuracy", "--case", "table13"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("table13"));
    let o = mpet(&out, &["accuracy", "--nu", "0.6"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Poisson"));
    let o = mpet(&out, &["accuracy", "--levels", "abc"]);
    assert!(!o.status.success());
    assert!(!out.exists());
}

#[test]
fn custom_case_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("case.toml");
    fs::write(
        &cfg,
        "preset = \"accuracy\"\n[parameters]\npoisson = 0.49999\n[mesh]\nlevels = [2, 4]\n[time]\ndt = 5e-3\nfinal_time = 0.01\n[scheme]\nkind = \"coupled\"\n",
    )
    .unwrap();
    let o = mpet(dir.path(), &["--config", cfg.to_str().unwrap(), "accuracy", "--case", "custom"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("custom: coupled, nu = 0.49999"), "{text}");
    assert!(text.contains("dt = 5e-3"), "{text}");
    let csv = fs::read_to_string(dir.path().join("accuracy_custom.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "preset = \"annulus\"\n").unwrap();
    let o = mpet(dir.path(), &["--config", bad.to_str().unwrap(), "accuracy"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("preset"));
}

#[test]
fn contraction_default_and_degenerate_storage() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpet(dir.path(), &["contraction", "--n", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("C* = 0.77612"));
    let csv = fs::read_to_string(dir.path().join("contraction.csv")).unwrap();
    assert!(csv.starts_with("k,xi_error[L2],alpha_p_error[L2],ratio[1],bound[1]\n0,"));

    let o = mpet(dir.path(), &["contraction", "--n", "4", "--c1", "0", "--c2", "0", "--dt", "1e-2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("C* = 1.00000"), "{text}");
    // monotone decrease: every ratio below one
    let csv = fs::read_to_string(dir.path().join("contraction.csv")).unwrap();
    for line in csv.lines().skip(2) {
        if let Some(r) = line.split(',').nth(3).filter(|r| !r.is_empty()) {
            assert!(r.parse::<f64>().unwrap() < 1.0, "{line}");
        }
    }
}

#[test]
fn contraction_flags_ratio_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpet(dir.path(), &["contraction", "--n", "4", "--k-max", "10", "--slack", "-0.5"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("ratios above"));
}

#[test]
fn energy_ledger_and_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpet(dir.path(), &["energy", "--n", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = mpet(dir.path(), &["--plot", "energy", "--n", "4", "--dt", "1e-3", "--steps", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    assert!(csv.starts_with("step,t[s],stored_J[J]"));
    // header, initial row, one row per step
    assert_eq!(csv.lines().count(), 12);
    let svg = fs::read_to_string(dir.path().join("energy.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.contains("</svg>"));

    let o = mpet(dir.path(), &["energy", "--n", "4", "--threshold", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));

    let o = mpet(dir.path(), &["energy", "--n", "4", "--time-dependent"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("time-constant loads") && err.contains("body force"), "{err}");
}

#[test]
fn annulus_coarse_run_writes_traces_and_reports_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = mpet(
        dir.path(),
        &["--plot", "annulus", "--n-radial", "2", "--n-angular", "16", "--final-time", "1.25", "--snapshots", "0.5,1.25"],
    );
    let text = stdout(&o);
    // exchange lifts p3 above its fixed boundary value, so the envelope
    // check reports it and the exit status says so
    assert_eq!(o.status.code(), Some(1), "{text}\n{}", stderr(&o));
    assert!(text.contains("outside +-50% of their boundary-data envelopes: p3"), "{text}");
    assert!(text.contains("all values finite: ok"));
    for name in [
        "annulus_probes_coupled.csv",
        "annulus_probes_decoupled.csv",
        "annulus_coupled_t0.5000.csv",
        "annulus_decoupled_t1.2500.csv",
        "annulus_probe0_pressures.svg",
        "annulus_displacement.svg",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let probes = fs::read_to_string(dir.path().join("annulus_probes_decoupled.csv")).unwrap();
    assert!(probes.starts_with("time[s],probe0_u_magnitude[mm],probe0_p1[Pa],probe0_p1[mmHg]"));
    // t = 0 plus 20 steps of 0.0625
    assert_eq!(probes.lines().count(), 1 + 21);
}

#[test]
fn annulus_rejects_off_grid_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = mpet(&out, &["annulus", "--snapshots", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("snapshot time 0.3"));
    assert!(!out.exists());
}
