#![allow(clippy::needless_range_loop)]

use std::path::PathBuf;
use std::process::{Command, Output};

fn symperr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symperr")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("symperr-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn numbers(line: &str) -> Vec<f64> {
    line.split(',').filter_map(|x| x.parse().ok()).collect()
}

#[test]
fn trajectory_rows_and_torus_box() {
    for scheme in ["q-implicit", "linear-implicit"] {
        let o = symperr(&["trajectory", "--scheme", scheme, "--steps", "20000", "--stride", "100"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("step,t,q1,q2,q3,p1,p2,p3,H"));
        let rows: Vec<Vec<f64>> = lines.map(numbers).collect();
        assert_eq!(rows.len(), 201);
        // Lengths are in units of 2*pi*R, so the major radius is 1/(2*pi).
        let major = 1.0 / (2.0 * std::f64::consts::PI);
        for r in &rows {
            let rho = r[2].hypot(r[3]);
            assert!(r[4].abs() <= major && (rho - major).abs() <= major, "{scheme} left the box: {r:?}");
        }
    }
}

#[test]
fn jtilde_default_matches_the_printed_structure() {
    let o = symperr(&["jtilde"]);
    assert!(o.status.success());
    let m: Vec<Vec<f64>> =
        stdout(&o).lines().map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(m.len(), 6);
    for i in 0..3 {
        for j in 0..3 {
            assert!(m[i][j].abs() <= 1e-14);
        }
        assert!((m[i][i + 3] - 1.0).abs() <= 1e-9);
        assert!((m[i + 3][i] + 1.0).abs() <= 1e-9);
    }
    // 17 significant digits.
    assert!(stdout(&o).lines().next().unwrap().split_whitespace().all(|x| x
        .split('e')
        .next()
        .unwrap()
        .trim_start_matches('-')
        .len()
        == 18));
}

#[test]
fn optimality_default_grid_within_tolerance() {
    let o = symperr(&["optimality"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(numbers).collect();
    assert_eq!(rows.len(), 18);
    assert!(rows.iter().all(|r| r[3] <= 1e-9));
}

#[test]
fn output_is_deterministic_across_jobs() {
    let dir = scratch("determinism");
    let mut bodies = Vec::new();
    for (k, jobs) in ["1", "1", "4"].iter().enumerate() {
        let path = dir.join(format!("sweep{k}.csv"));
        let o = symperr(&["defect-sweep", "--M", "1,2,3", "--jobs", jobs, "--out", path.to_str().unwrap()]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
        bodies.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[0], bodies[2]);
    let text = String::from_utf8(bodies.remove(0)).unwrap();
    assert!(text.starts_with("scheme,M,M1,M2,h,delta,alpha,skew_residual,det_flow,det_antidiag\n"));
    assert_eq!(text.lines().count(), 31);
}

#[test]
fn config_file_with_flag_override() {
    let dir = scratch("config");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# quadratic run\nhamiltonian = quadratic\nN = 4\nh = 0.3\nsteps = 50\nstride = 5\n").unwrap();
    let o = symperr(&["trajectory", "--config", cfg.to_str().unwrap(), "--h", "0.05"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("step,t,q1,q2,q3,q4,p1,p2,p3,p4,H\n"));
    let last = numbers(text.lines().last().unwrap());
    assert_eq!(last[0], 50.0);
    assert!((last[1] - 2.5).abs() < 1e-12);
}

#[test]
fn validation_errors_exit_2_without_output() {
    let dir = scratch("invalid");
    let out = dir.join("never.csv");
    for args in [
        vec!["trajectory", "--h", "0"],
        vec!["jtilde", "--N", "4"],
        vec!["sv-orders", "--M1", "2", "--M2", "2"],
        vec!["energy-drift", "--steps", "100"],
        vec!["defect-sweep", "--h-count", "3"],
        vec!["trajectory", "--scheme", "leapfrog"],
        vec!["optimality", "--hamiltonian", "tokamak"],
    ] {
        let mut full = args.clone();
        full.extend(["--out", out.to_str().unwrap()]);
        let o = symperr(&full);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!out.exists(), "{args:?} left a file behind");
        assert!(String::from_utf8_lossy(&o.stderr).contains("configuration error"));
    }
    let bad_cfg = dir.join("bad.cfg");
    std::fs::write(&bad_cfg, "colour = blue\n").unwrap();
    assert_eq!(symperr(&["jtilde", "--config", bad_cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn computational_failure_exits_1() {
    // A start point on the symmetry axis, where the potential is singular.
    let dir = scratch("axis");
    let cfg = dir.join("axis.cfg");
    std::fs::write(&cfg, "q0 = 0, 0, 0\n").unwrap();
    let out = dir.join("axis.txt");
    let o = symperr(&["jtilde", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn energy_drift_csv_layout() {
    let o = symperr(&["energy-drift", "--steps", "10000", "--stride", "500"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("scheme,M,step,t,abs_energy_error\n"));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3 * 21);
    assert!(rows[0].starts_with("linear-implicit,,0,"));
    assert!(rows[21].starts_with("q-implicit,2,0,"));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("bounded") || stderr.contains("indeterminate") || stderr.contains("drifting"));
}

#[test]
fn sv_orders_and_volume_tables() {
    let o = symperr(&["sv-orders", "--hamiltonian", "quadratic"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        let slope: f64 = f[4].parse().unwrap();
        let expected: f64 = f[7].parse().unwrap();
        assert!((slope - expected).abs() <= 0.4, "{r}");
    }
    let o = symperr(&["volume", "--scheme", "p-implicit"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("scheme,M,h,det_flow,det_antidiag,discrepancy,abs_det_minus_one\n"));
}

#[test]
fn selftest_passes() {
    let o = symperr(&["selftest"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.contains(" PASS ")));
}
