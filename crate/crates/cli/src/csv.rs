//! CSV and text formats. Floats carry 17 significant digits so that the
//! files round-trip exactly.

use std::fmt::Write;

use symperr::experiments::{DefectRow, DriftSeries};
use symperr::integrators::{SchemeConfig, Trajectory};
use symperr::Matrix;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_header(n: usize) -> String {
    let q: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
    let p: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
    format!("step,t,{},{},H", q.join(","), p.join(","))
}

pub fn trajectory_csv(traj: &Trajectory, n: usize) -> String {
    let mut out = trajectory_header(n);
    out.push('\n');
    for k in 0..traj.len() {
        let s = &traj.states[k];
        let fields: Vec<String> = s.q.iter().chain(&s.p).map(|&x| float(x)).collect();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            traj.steps[k],
            float(traj.times[k]),
            fields.join(","),
            float(traj.energies[k])
        );
    }
    out
}

/// `M`, `M1`, `M2` as written: `M` for the Symplectic Euler families,
/// `M1`/`M2` for Störmer–Verlet, blank where the count does not apply.
fn counts(s: &SchemeConfig) -> (String, String, String) {
    if s.variant.is_sv() {
        (s.m.to_string(), s.m1.to_string(), s.m2.to_string())
    } else if s.variant.uses_fpi() {
        (s.m.to_string(), String::new(), String::new())
    } else {
        Default::default()
    }
}

pub const DEFECT_HEADER: &str = "scheme,M,M1,M2,h,delta,alpha,skew_residual,det_flow,det_antidiag";

pub fn defect_csv(rows: &[DefectRow]) -> String {
    let mut out = String::from(DEFECT_HEADER);
    out.push('\n');
    for r in rows {
        let (m, m1, m2) = counts(&r.scheme);
        let rep = &r.report;
        let _ = writeln!(
            out,
            "{},{m},{m1},{m2},{},{},{},{},{},{}",
            r.scheme.variant,
            float(r.scheme.h),
            float(rep.delta),
            float(rep.alpha),
            float(rep.skew_residual),
            float(rep.det_flow),
            float(rep.det_antidiag)
        );
    }
    out
}

pub const DRIFT_HEADER: &str = "scheme,M,step,t,abs_energy_error";

pub fn drift_csv(series: &[DriftSeries]) -> String {
    let mut out = String::from(DRIFT_HEADER);
    out.push('\n');
    for s in series {
        let (m, _, _) = counts(&s.scheme);
        for k in 0..s.steps.len() {
            let _ = writeln!(
                out,
                "{},{m},{},{},{}",
                s.scheme.variant,
                s.steps[k],
                float(s.times[k]),
                float(s.abs_energy_error[k])
            );
        }
    }
    out
}

/// A matrix as aligned rows of 17-significant-digit entries.
pub fn matrix_text(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&x| format!("{:>24}", float(x))).collect();
        out.push_str(row.join(" ").trim_start());
        out.push('\n');
    }
    out
}

/// Splits a CSV body into header and numeric-or-text cells.
pub fn parse(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("").split(',').map(str::to_string).collect();
    let rows = lines.filter(|l| !l.is_empty()).map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let s = float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(float(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn trajectory_header_layout() {
        assert_eq!(trajectory_header(2), "step,t,q1,q2,p1,p2,H");
    }

    #[test]
    fn matrix_rows() {
        let m = Matrix::from_rows(&[[1.0, -2.0], [0.5, 0.0]]);
        let t = matrix_text(&m);
        let rows: Vec<Vec<f64>> =
            t.lines().map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect()).collect();
        assert_eq!(rows, vec![vec![1.0, -2.0], vec![0.5, 0.0]]);
    }
}
