//! Step-size sweeps, log-log order fits and long-run energy drift.

use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::defect::{defect_report, DefectReport};
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::integrators::{integrate_with, SchemeConfig, Variant};
use crate::linalg::Block2x2;
use crate::state::PhaseState;

/// Measured norms below this are rounding noise and excluded from fits.
pub const ROUNDING_FLOOR: f64 = 1e-13;

/// Default sweep grid: 10 log-spaced step sizes in `[0.02, 0.2]`.
pub const DEFAULT_H_MIN: f64 = 0.02;
pub const DEFAULT_H_MAX: f64 = 0.2;
pub const DEFAULT_H_COUNT: usize = 10;

/// `count` log-spaced points from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && max.is_finite()) || count < 2 {
        return Err(Error::InvalidArgument("log grid needs 0 < min < max and count >= 2"));
    }
    let (a, b) = (libm::log(min), libm::log(max));
    let step = (b - a) / (count - 1) as f64;
    Ok((0..count)
        .map(|k| match k {
            0 => min,
            k if k == count - 1 => max,
            k => libm::exp(a + step * k as f64),
        })
        .collect())
}

/// `log value ≈ slope·log h + log intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in natural-log space.
    pub rms_residual: f64,
    pub points_used: usize,
}

/// Ordinary least squares on `(ln h, ln value)`.
pub fn loglog_fit(pairs: &[(f64, f64)]) -> Result<FitResult> {
    if pairs.len() < 3 {
        return Err(Error::InvalidArgument("log-log fit needs at least 3 points"));
    }
    if pairs.iter().any(|&(h, v)| !(h > 0.0 && v > 0.0 && h.is_finite() && v.is_finite())) {
        return Err(Error::InvalidArgument("log-log fit needs finite positive h and values"));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| libm::log(p.0)).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| libm::log(p.1)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 1e-24) {
        return Err(Error::InvalidArgument("log-log fit needs distinct step sizes"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let b = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - b) * (y - slope * x - b)).sum();
    Ok(FitResult { slope, intercept: libm::exp(b), rms_residual: libm::sqrt(ss / n), points_used: pairs.len() })
}

/// [`loglog_fit`] on the points whose value is at least `floor`.
pub fn fit_above_floor(pairs: &[(f64, f64)], floor: f64) -> Result<FitResult> {
    let kept: Vec<(f64, f64)> = pairs.iter().copied().filter(|&(_, v)| v >= floor).collect();
    if kept.len() < 3 {
        return Err(Error::InvalidArgument("fewer than 3 points above the rounding floor"));
    }
    loglog_fit(&kept)
}

/// One evaluated sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectRow {
    pub scheme: SchemeConfig,
    pub report: DefectReport,
}

/// The sweep configurations of one scheme family, ordered by `(M, h)`.
/// For the Störmer–Verlet variants `M1 = M2 = M`.
pub fn sweep_configs(family: Variant, ms: &[usize], h_grid: &[f64]) -> Result<Vec<SchemeConfig>> {
    let mut ms = ms.to_vec();
    ms.sort_unstable();
    ms.dedup();
    let mut hs = h_grid.to_vec();
    hs.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(ms.len() * hs.len());
    for &m in &ms {
        for &h in &hs {
            out.push(SchemeConfig::new(family, h, m, m, m)?);
        }
    }
    Ok(out)
}

pub fn defect_point<H: Hamiltonian + ?Sized>(model: &H, scheme: &SchemeConfig, at: &PhaseState) -> Result<DefectRow> {
    Ok(DefectRow { scheme: *scheme, report: defect_report(model, scheme, at)? })
}

/// Fits of `delta`, `alpha` and `|det DΦ − 1|` against `h` for one `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub m: usize,
    pub delta: Result<FitResult>,
    pub alpha: Result<FitResult>,
    pub volume: Result<FitResult>,
}

/// Groups rows by `M` (rows must be ordered as [`sweep_configs`] makes
/// them) and fits each quantity above [`ROUNDING_FLOOR`].
pub fn summarize(rows: &[DefectRow]) -> Vec<OrderFit> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let m = rows[start].scheme.m;
        let end = start + rows[start..].iter().take_while(|r| r.scheme.m == m).count();
        let group = &rows[start..end];
        let series = |f: &dyn Fn(&DefectReport) -> f64| -> Vec<(f64, f64)> {
            group.iter().map(|r| (r.scheme.h, f(&r.report))).collect()
        };
        out.push(OrderFit {
            m,
            delta: fit_above_floor(&series(&|r| r.delta), ROUNDING_FLOOR),
            alpha: fit_above_floor(&series(&|r| r.alpha), ROUNDING_FLOOR),
            volume: fit_above_floor(&series(&|r| (r.det_flow - 1.0).abs()), ROUNDING_FLOOR),
        });
        start = end;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectSweep {
    pub rows: Vec<DefectRow>,
    pub fits: Vec<OrderFit>,
}

/// Evaluates every `(M, h)` point of a scheme family at `at` and fits the
/// decay orders.
pub fn defect_sweep<H: Hamiltonian + ?Sized>(
    model: &H,
    family: Variant,
    ms: &[usize],
    h_grid: &[f64],
    at: &PhaseState,
) -> Result<DefectSweep> {
    if h_grid.len() < 6 {
        return Err(Error::InvalidArgument("defect sweep needs at least 6 step sizes"));
    }
    let rows =
        sweep_configs(family, ms, h_grid)?.iter().map(|s| defect_point(model, s, at)).collect::<Result<Vec<_>>>()?;
    let fits = summarize(&rows);
    Ok(DefectSweep { rows, fits })
}

/// Fitted orders of the four blocks `P11, P12, P21, P22` of `J̃ − J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockFits {
    pub variant: Variant,
    pub fits: [FitResult; 4],
}

/// Theoretical orders of `P11, P12, P21, P22`: for `Υ` the lower right
/// block decays like `h^{M2+1}` and the others like `h^{min(M1,M2)+1}`;
/// for `Λ` the upper left block takes the `h^{M2+1}` order.
pub fn sv_expected_orders(variant: Variant, m1: usize, m2: usize) -> Result<[f64; 4]> {
    let lo = (m1.min(m2) + 1) as f64;
    let hi = (m2 + 1) as f64;
    match variant {
        Variant::SvPq => Ok([lo, lo, lo, hi]),
        Variant::SvQp => Ok([hi, lo, lo, lo]),
        _ => Err(Error::InvalidArgument("block orders are defined for the Störmer–Verlet variants")),
    }
}

fn block_norms(report: &DefectReport) -> Result<[f64; 4]> {
    let Block2x2 { tl, tr, bl, br } = report.defect_blocks()?;
    Ok([tl.frobenius_norm(), tr.frobenius_norm(), bl.frobenius_norm(), br.frobenius_norm()])
}

/// Per-block order fits for one Störmer–Verlet variant from evaluated
/// rows (all sharing the variant).
pub fn fit_blocks(variant: Variant, rows: &[DefectRow]) -> Result<BlockFits> {
    let norms = rows.iter().map(|r| Ok((r.scheme.h, block_norms(&r.report)?))).collect::<Result<Vec<_>>>()?;
    let fit = |k: usize| fit_above_floor(&norms.iter().map(|(h, b)| (*h, b[k])).collect::<Vec<_>>(), ROUNDING_FLOOR);
    Ok(BlockFits { variant, fits: [fit(0)?, fit(1)?, fit(2)?, fit(3)?] })
}

/// Block-order fits of `J̃ − J` for `Υ^{[M1,M2]}` and `Λ^{[M1,M2]}`.
pub fn sv_block_orders<H: Hamiltonian + ?Sized>(
    model: &H,
    m1: usize,
    m2: usize,
    h_grid: &[f64],
    at: &PhaseState,
) -> Result<[BlockFits; 2]> {
    let run = |variant: Variant| -> Result<BlockFits> {
        let rows = h_grid
            .iter()
            .map(|&h| defect_point(model, &SchemeConfig::new(variant, h, m1.min(m2), m1, m2)?, at))
            .collect::<Result<Vec<_>>>()?;
        fit_blocks(variant, &rows)
    };
    Ok([run(Variant::SvPq)?, run(Variant::SvQp)?])
}

/// Runs shorter than this are rejected by [`energy_drift_run`].
pub const MIN_DRIFT_STEPS: usize = 10_000;
/// The run stops once `|H − H₀| > BLOW_UP_FACTOR·|H₀|`.
pub const BLOW_UP_FACTOR: f64 = 1e3;

/// `|H(z_n) − H(z_0)|` sampled along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSeries {
    pub scheme: SchemeConfig,
    /// Steps requested; the run may have stopped early.
    pub total_steps: usize,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub abs_energy_error: Vec<f64>,
    pub initial_energy: f64,
    pub blew_up: bool,
}

pub fn energy_drift_run<H: Hamiltonian + ?Sized>(
    model: &H,
    scheme: &SchemeConfig,
    initial: &PhaseState,
    steps: usize,
    stride: usize,
) -> Result<DriftSeries> {
    if steps < MIN_DRIFT_STEPS {
        return Err(Error::InvalidArgument("energy drift runs need at least 1e4 steps"));
    }
    let h0 = model.energy(initial)?;
    let limit = BLOW_UP_FACTOR * h0.abs();
    let mut out = DriftSeries {
        scheme: *scheme,
        total_steps: steps,
        steps: Vec::with_capacity(steps / stride.max(1) + 2),
        times: Vec::new(),
        abs_energy_error: Vec::new(),
        initial_energy: h0,
        blew_up: false,
    };
    integrate_with(model, scheme, initial, steps, stride, |k, _, e| {
        let err = (e - h0).abs();
        out.steps.push(k);
        out.times.push(k as f64 * scheme.h);
        out.abs_energy_error.push(err);
        if err > limit || !err.is_finite() {
            out.blew_up = true;
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftClass {
    Bounded,
    Drifting,
    Indeterminate,
    BlewUp,
}

impl DriftClass {
    pub fn name(self) -> &'static str {
        match self {
            DriftClass::Bounded => "bounded",
            DriftClass::Drifting => "drifting",
            DriftClass::Indeterminate => "indeterminate",
            DriftClass::BlewUp => "blew-up",
        }
    }
}

/// Summary statistics of the samples after the burn-in (the first 1% of
/// the requested steps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftStats {
    pub first_decile_mean: f64,
    pub last_decile_mean: f64,
    pub first_half_max: f64,
    pub last_half_max: f64,
    pub samples: usize,
}

pub fn drift_stats(series: &DriftSeries) -> Result<DriftStats> {
    let burn_in = series.total_steps / 100;
    let errs: Vec<f64> =
        series.steps.iter().zip(&series.abs_energy_error).filter(|(k, _)| **k > burn_in).map(|(_, e)| *e).collect();
    if errs.len() < 20 {
        return Err(Error::InvalidArgument("drift classification needs at least 20 samples after burn-in"));
    }
    let n = errs.len();
    let decile = n / 10;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let max = |s: &[f64]| s.iter().copied().fold(0.0, f64::max);
    Ok(DriftStats {
        first_decile_mean: mean(&errs[..decile]),
        last_decile_mean: mean(&errs[n - decile..]),
        first_half_max: max(&errs[..n / 2]),
        last_half_max: max(&errs[n / 2..]),
        samples: n,
    })
}

/// "drifting" if the last-decile mean is at least 10× the first-decile
/// mean; otherwise "bounded" if the second-half maximum is at most 2× the
/// first-half maximum. The growth test runs first, since a steady linear
/// trend also keeps the two half maxima within a factor of 2.
pub fn classify_drift(series: &DriftSeries) -> Result<DriftClass> {
    if series.blew_up {
        return Ok(DriftClass::BlewUp);
    }
    let s = drift_stats(series)?;
    Ok(if s.last_decile_mean >= 10.0 * s.first_decile_mean {
        DriftClass::Drifting
    } else if s.last_half_max <= 2.0 * s.first_half_max {
        DriftClass::Bounded
    } else {
        DriftClass::Indeterminate
    })
}
