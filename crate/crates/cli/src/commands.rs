//! The subcommands. Each returns its primary output (CSV or matrix text)
//! and a human-readable summary; nothing is written until the whole
//! computation has succeeded.

use std::fmt::{self, Write};

use symperr::defect::{defect_report, flow_jacobian_ad, DefectReport};
use symperr::experiments::{
    classify_drift, defect_point, drift_stats, energy_drift_run, fit_blocks, summarize, sv_block_orders,
    sv_expected_orders, sweep_configs, DefectRow, DriftSeries, FitResult,
};
use symperr::hamiltonian::{quadratic_model, Hamiltonian};
use symperr::integrators::{integrate, SchemeConfig, Variant};
use symperr::oracle::{componentwise, theorem5_blocks};

use crate::config::{default_state, Command, ConfigError, ModelKind, RunConfig, Settings};
use crate::csv::{self, float};
use crate::parallel::par_map;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Compute(symperr::Error),
    Io(String),
}

impl CliError {
    /// 2 for configuration errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Compute(e) => write!(f, "computation failed: {e}"),
            CliError::Io(e) => write!(f, "output error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<symperr::Error> for CliError {
    fn from(e: symperr::Error) -> Self {
        CliError::Compute(e)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Output {
    /// CSV or matrix text, written to `--out` or stdout.
    pub body: String,
    /// Fit tables and classifications, written to stderr.
    pub summary: String,
}

/// Resolves the configuration and runs one command.
pub fn run(command: Command, settings: &Settings) -> Result<Output, CliError> {
    let cfg = RunConfig::resolve(command, settings)?;
    run_config(&cfg)
}

pub fn run_config(cfg: &RunConfig) -> Result<Output, CliError> {
    match cfg.command {
        Command::Trajectory => trajectory(cfg),
        Command::DefectSweep => defect_sweep(cfg),
        Command::Jtilde => jtilde(cfg),
        Command::EnergyDrift => energy_drift(cfg),
        Command::Optimality => optimality(cfg),
        Command::SvOrders => sv_orders(cfg),
        Command::Volume => volume(cfg),
    }
}

fn fit_cell(fit: &symperr::Result<FitResult>) -> String {
    match fit {
        Ok(f) => format!("{:>9.5} {:>11.4e}", f.slope, f.intercept),
        Err(_) => format!("{:>9} {:>11}", "-", "-"),
    }
}

fn trajectory(cfg: &RunConfig) -> Result<Output, CliError> {
    let model = cfg.model()?;
    let scheme = cfg.scheme_for(cfg.ms[0])?;
    let traj = integrate(&model, &scheme, &cfg.initial, cfg.steps, cfg.stride)?;
    let h0 = traj.energies[0];
    let worst = traj.energies.iter().map(|e| (e - h0).abs()).fold(0.0, f64::max);
    let summary = format!(
        "trajectory: {} {} h={} steps={} samples={} max|H-H0|={:.3e}\n",
        model.name(),
        scheme.variant,
        scheme.h,
        cfg.steps,
        traj.len(),
        worst
    );
    Ok(Output { body: csv::trajectory_csv(&traj, model.dim()), summary })
}

fn sweep_rows(cfg: &RunConfig, family: Variant) -> Result<Vec<DefectRow>, CliError> {
    let model = cfg.model()?;
    let configs = sweep_configs(family, &cfg.ms, &cfg.h_grid)?;
    let rows = par_map(&configs, cfg.jobs, |s| defect_point(&model, s, &cfg.initial));
    Ok(rows.into_iter().collect::<symperr::Result<Vec<_>>>()?)
}

fn defect_sweep(cfg: &RunConfig) -> Result<Output, CliError> {
    let family = cfg.scheme.unwrap_or(Variant::QImplicitSE);
    let rows = sweep_rows(cfg, family)?;
    let mut summary = format!("defect sweep: {} {} ({} step sizes)\n", cfg.model()?.name(), family, cfg.h_grid.len());
    let _ = writeln!(summary, "{:>3} {:>9} {:>11} {:>9} {:>11}", "M", "p_delta", "C_delta", "p_alpha", "C_alpha");
    for f in summarize(&rows) {
        let _ = writeln!(summary, "{:>3} {} {}", f.m, fit_cell(&f.delta), fit_cell(&f.alpha));
    }
    Ok(Output { body: csv::defect_csv(&rows), summary })
}

fn jtilde(cfg: &RunConfig) -> Result<Output, CliError> {
    let model = cfg.model()?;
    let scheme = cfg.scheme_for(cfg.ms[0])?;
    let r: DefectReport = defect_report(&model, &scheme, &cfg.initial)?;
    let summary = format!(
        "J~ for {} {} M={} h={}: delta={:.6e} alpha={:.6e} zero-block={:.3e} skew-residual={:.3e}\n",
        model.name(),
        scheme.variant,
        scheme.m,
        scheme.h,
        r.delta,
        r.alpha,
        r.zero_block_norm(),
        r.skew_residual
    );
    Ok(Output { body: csv::matrix_text(&r.jtilde), summary })
}

/// Without `--scheme`: linear-implicit (tokamak only) and q-implicit for
/// each `M`.
pub fn drift_schemes(cfg: &RunConfig) -> symperr::Result<Vec<SchemeConfig>> {
    let h = cfg.h;
    let mut out = Vec::new();
    match cfg.scheme {
        None => {
            if cfg.hamiltonian == ModelKind::Tokamak {
                out.push(SchemeConfig::linear_implicit(h)?);
            }
            for &m in &cfg.ms {
                out.push(SchemeConfig::q_implicit(h, m)?);
            }
        }
        Some(v) if v.uses_fpi() && !v.is_sv() => {
            for &m in &cfg.ms {
                out.push(SchemeConfig::new(v, h, m, m, m)?);
            }
        }
        Some(_) => out.push(cfg.scheme_for(1)?),
    }
    Ok(out)
}

fn energy_drift(cfg: &RunConfig) -> Result<Output, CliError> {
    let model = cfg.model()?;
    let schemes = drift_schemes(cfg)?;
    let runs = par_map(&schemes, cfg.jobs, |s| energy_drift_run(&model, s, &cfg.initial, cfg.steps, cfg.stride));
    let series: Vec<DriftSeries> = runs.into_iter().collect::<symperr::Result<_>>()?;
    let mut summary = format!("energy drift: {} h={} steps={}\n", model.name(), cfg.h, cfg.steps);
    let _ = writeln!(
        summary,
        "{:<16} {:>3} {:<13} {:>12} {:>12} {:>8}",
        "scheme", "M", "class", "first-decile", "last-decile", "ratio"
    );
    for s in &series {
        let class = classify_drift(s)?;
        let m = if s.scheme.variant.uses_fpi() { s.scheme.m.to_string() } else { "-".into() };
        match drift_stats(s) {
            Ok(st) => {
                let _ = writeln!(
                    summary,
                    "{:<16} {:>3} {:<13} {:>12.4e} {:>12.4e} {:>8.2}",
                    s.scheme.variant.name(),
                    m,
                    class.name(),
                    st.first_decile_mean,
                    st.last_decile_mean,
                    st.last_decile_mean / st.first_decile_mean
                );
            }
            Err(_) => {
                let _ = writeln!(summary, "{:<16} {:>3} {:<13}", s.scheme.variant.name(), m, class.name());
            }
        }
    }
    Ok(Output { body: csv::drift_csv(&series), summary })
}

/// Largest deviations of the measured p-implicit defect from the closed
/// form on the quadratic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityRow {
    pub n: usize,
    pub m: usize,
    pub h: f64,
    pub max_rel: f64,
    pub max_abs_on_zero: f64,
}

pub fn optimality_row(n: usize, m: usize, h: f64) -> symperr::Result<OptimalityRow> {
    let model = quadratic_model(n)?;
    let scheme = SchemeConfig::p_implicit(h, m)?;
    let dphi = flow_jacobian_ad(&model, &scheme, &default_state(n))?;
    let r = DefectReport::for_variant(&dphi, scheme.variant)?;
    let exact = theorem5_blocks(n, m as u32, h)?;
    let d = componentwise(&r.blocks.tl, &exact.diag)?;
    let a = componentwise(&r.blocks.tr, &exact.antidiag)?;
    Ok(OptimalityRow {
        n,
        m,
        h,
        max_rel: d.max_rel.max(a.max_rel),
        max_abs_on_zero: d.max_abs_on_zero.max(a.max_abs_on_zero),
    })
}

fn optimality(cfg: &RunConfig) -> Result<Output, CliError> {
    if cfg.scheme.is_some_and(|v| v != Variant::PImplicitSE) {
        return Err(ConfigError::new("scheme", "the closed form covers the p-implicit scheme").into());
    }
    let ns = if cfg.n_given { vec![cfg.n] } else { vec![2, 3, 5] };
    let hs = if cfg.h_given { vec![cfg.h] } else { vec![0.1, 0.01] };
    let mut points = Vec::new();
    for &n in &ns {
        for &m in &cfg.ms {
            for &h in &hs {
                points.push((n, m, h));
            }
        }
    }
    let rows = par_map(&points, cfg.jobs, |&(n, m, h)| optimality_row(n, m, h))
        .into_iter()
        .collect::<symperr::Result<Vec<_>>>()?;
    let mut body = String::from("N,M,h,max_rel_error,max_abs_on_zero\n");
    for r in &rows {
        let _ = writeln!(body, "{},{},{},{},{}", r.n, r.m, float(r.h), float(r.max_rel), float(r.max_abs_on_zero));
    }
    let worst = rows.iter().map(|r| r.max_rel).fold(0.0, f64::max);
    let worst_zero = rows.iter().map(|r| r.max_abs_on_zero).fold(0.0, f64::max);
    let summary = format!(
        "optimality: {} points, max relative error {worst:.3e}, max absolute error on zero entries {worst_zero:.3e}\n",
        rows.len()
    );
    Ok(Output { body, summary })
}

const BLOCK_NAMES: [&str; 4] = ["P11", "P12", "P21", "P22"];

fn sv_orders(cfg: &RunConfig) -> Result<Output, CliError> {
    let model = cfg.model()?;
    let (m1, m2) = (cfg.m1, cfg.m2);
    let fits = if cfg.jobs == 1 {
        sv_block_orders(&model, m1, m2, &cfg.h_grid, &cfg.initial)?
    } else {
        let mut configs = Vec::new();
        for v in [Variant::SvPq, Variant::SvQp] {
            for &h in &cfg.h_grid {
                configs.push(SchemeConfig::new(v, h, m1.min(m2), m1, m2)?);
            }
        }
        let rows = par_map(&configs, cfg.jobs, |s| defect_point(&model, s, &cfg.initial))
            .into_iter()
            .collect::<symperr::Result<Vec<_>>>()?;
        let (pq, qp) = rows.split_at(cfg.h_grid.len());
        [fit_blocks(Variant::SvPq, pq)?, fit_blocks(Variant::SvQp, qp)?]
    };
    let mut body = String::from("scheme,M1,M2,block,slope,intercept,points_used,expected_order\n");
    let mut summary = format!("Stormer-Verlet block orders: {} M1={m1} M2={m2}\n", model.name());
    for bf in &fits {
        let expected = sv_expected_orders(bf.variant, m1, m2)?;
        for (k, f) in bf.fits.iter().enumerate() {
            let _ = writeln!(
                body,
                "{},{m1},{m2},{},{},{},{},{}",
                bf.variant,
                BLOCK_NAMES[k],
                float(f.slope),
                float(f.intercept),
                f.points_used,
                expected[k]
            );
            let _ = writeln!(
                summary,
                "{:<6} {} slope {:>8.4} (expected {})",
                bf.variant.name(),
                BLOCK_NAMES[k],
                f.slope,
                expected[k]
            );
        }
    }
    Ok(Output { body, summary })
}

fn volume(cfg: &RunConfig) -> Result<Output, CliError> {
    let family = cfg.scheme.unwrap_or(Variant::QImplicitSE);
    let rows = sweep_rows(cfg, family)?;
    let mut body = String::from("scheme,M,h,det_flow,det_antidiag,discrepancy,abs_det_minus_one\n");
    let mut worst = 0.0_f64;
    for r in &rows {
        let rep = &r.report;
        worst = worst.max(rep.volume_discrepancy() / rep.det_antidiag);
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{}",
            r.scheme.variant,
            r.scheme.m,
            float(r.scheme.h),
            float(rep.det_flow),
            float(rep.det_antidiag),
            float(rep.volume_discrepancy()),
            float((rep.det_flow - 1.0).abs())
        );
    }
    let mut summary =
        format!("volume: {} {}, max | |det DPhi| - |det A| | / |det A| = {worst:.3e}\n", cfg.model()?.name(), family);
    if family.is_sv() {
        summary.push_str(
            "note: the determinant identity needs a vanishing diagonal block and does not apply to Stormer-Verlet\n",
        );
    }
    let _ = writeln!(summary, "{:>3} {:>9} {:>11}", "M", "p_vol", "C_vol");
    for f in summarize(&rows) {
        let _ = writeln!(summary, "{:>3} {}", f.m, fit_cell(&f.volume));
    }
    Ok(Output { body, summary })
}
