//! The acceptance criteria and the self-test suite, with every tolerance
//! pinned here.
//!
//! Each check evaluates one criterion end to end and reports what it
//! measured. A check that cannot be evaluated (a computation error) is
//! reported as a failure carrying the error.

use std::fmt;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use symperr::autodiff::{finite_difference_jacobian, FD_STEP};
use symperr::defect::{coordinate_swap_check, defect_report, flow_jacobian_ad, flow_jacobian_analytic, DefectReport};
use symperr::experiments::{
    classify_drift, defect_point, drift_stats, energy_drift_run, log_grid, summarize, sv_block_orders,
    sv_expected_orders, BlockFits, DriftClass, DEFAULT_H_COUNT, DEFAULT_H_MAX, DEFAULT_H_MIN,
};
use symperr::hamiltonian::{
    harmonic_oscillator, quadratic_model, tokamak_model, Model, Nondimensionalizer, PhysicalParams,
};
use symperr::integrators::{literal, step_sv_pq, step_sv_qp, SchemeConfig, Side, Variant};
use symperr::oracle::xi_power;
use symperr::{Matrix, PhaseState};

use crate::commands::optimality_row;
use crate::config::{default_state, CI_DRIFT_STEPS, FULL_DRIFT_STEPS};
use crate::parallel::par_map;

pub const ZERO_BLOCK_TOL: f64 = 1e-12;
pub const SKEW_RTOL: f64 = 1e-12;
pub const SLOPE_TOL: f64 = 0.4;
/// Reference least-squares fits of `p_δ` and `p_α` for `M = 1, 2, 3`.
pub const REFERENCE_P_DELTA: [f64; 3] = [1.99997, 3.15148, 4.27162];
pub const REFERENCE_P_ALPHA: [f64; 3] = [2.01280, 2.99401, 4.14529];
pub const ORACLE_RTOL: f64 = 1e-9;
pub const ORACLE_ATOL_ZERO: f64 = 1e-13;
pub const AD_ANALYTIC_RTOL: f64 = 1e-10;
pub const AD_FD_RTOL: f64 = 1e-5;
pub const VOLUME_RTOL: f64 = 1e-12;
pub const SV_LOW_ORDER: (f64, f64) = (1.6, 2.4);
pub const SV_HIGH_ORDER: (f64, f64) = (3.6, 4.4);
pub const SWAP_TOL: f64 = 1e-13;
pub const SWAP_STATES: usize = 20;
pub const COMPOSITION_TOL: f64 = 1e-15;
pub const DRIFT_H: f64 = 0.25;
pub const TOEPLITZ_MAX_N: usize = 8;
pub const TOEPLITZ_MAX_M: u32 = 6;
const SEED: u64 = 0x5e_2024;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {status} {}: {}", self.id, self.title, self.detail)
    }
}

fn check(id: u8, title: &'static str, body: impl FnOnce() -> symperr::Result<(bool, String)>) -> Check {
    match body() {
        Ok((pass, detail)) => Check { id, title, pass, detail },
        Err(e) => Check { id, title, pass: false, detail: format!("could not be evaluated: {e}") },
    }
}

fn default_grid() -> Vec<f64> {
    log_grid(DEFAULT_H_MIN, DEFAULT_H_MAX, DEFAULT_H_COUNT).expect("static grid")
}

fn tokamak() -> symperr::Result<(Model, PhaseState)> {
    let params = PhysicalParams::default();
    let z = Nondimensionalizer::new(&params).nondimensionalize(&PhysicalParams::reference_initial_state());
    Ok((Model::Tokamak(tokamak_model(params)?), z))
}

/// Every model in scope with its evaluation point.
fn models() -> symperr::Result<Vec<(String, Model, PhaseState)>> {
    let mut out = Vec::new();
    for n in [2, 3, 5] {
        out.push((format!("quadratic N={n}"), Model::Quadratic(quadratic_model(n)?), default_state(n)));
    }
    out.push(("harmonic N=3".into(), Model::Harmonic(harmonic_oscillator(3)), default_state(3)));
    let (tok, z) = tokamak()?;
    out.push(("tokamak".into(), tok, z));
    Ok(out)
}

/// States within 5% of the tokamak start, from a fixed seed.
fn tokamak_states(count: usize) -> symperr::Result<Vec<PhaseState>> {
    let (_, z0) = tokamak()?;
    let qs = z0.q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let ps = z0.p.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut rng = StdRng::seed_from_u64(SEED);
    Ok((0..count)
        .map(|_| {
            let q = z0.q.iter().map(|x| x + rng.gen_range(-0.05..0.05) * qs).collect();
            let p = z0.p.iter().map(|x| x + rng.gen_range(-0.05..0.05) * ps).collect();
            PhaseState::new(q, p)
        })
        .collect())
}

fn rel(a: &Matrix, b: &Matrix) -> symperr::Result<f64> {
    Ok(a.sub(b)?.frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE))
}

fn in_range(x: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&x)
}

pub fn zero_blocks() -> Check {
    check(1, "zero diagonal block", || {
        let grid = default_grid();
        let mut worst = (0.0_f64, String::new());
        for (name, model, z) in models()? {
            for v in [Variant::PImplicitSE, Variant::QImplicitSE] {
                for m in 1..=3 {
                    for &h in &grid {
                        let r = defect_report(&model, &SchemeConfig::new(v, h, m, m, m)?, &z)?;
                        if r.zero_block_norm() >= worst.0 {
                            worst = (r.zero_block_norm(), format!("{name} {v} M={m} h={h:.4}"));
                        }
                    }
                }
            }
        }
        Ok((worst.0 <= ZERO_BLOCK_TOL, format!("max norm {:.2e} at {} (tol {ZERO_BLOCK_TOL:.0e})", worst.0, worst.1)))
    })
}

fn all_schemes(model: &Model, h: f64) -> symperr::Result<Vec<SchemeConfig>> {
    let mut out = Vec::new();
    for m in 1..=3 {
        out.push(SchemeConfig::p_implicit(h, m)?);
        out.push(SchemeConfig::q_implicit(h, m)?);
    }
    for (m1, m2) in [(1, 3), (3, 1), (2, 2)] {
        out.push(SchemeConfig::sv_pq(h, m1, m2)?);
        out.push(SchemeConfig::sv_qp(h, m1, m2)?);
    }
    match model {
        Model::Tokamak(_) => out.push(SchemeConfig::linear_implicit(h)?),
        Model::Quadratic(_) => {
            out.push(SchemeConfig::exact_se(h, Side::P)?);
            out.push(SchemeConfig::exact_se(h, Side::Q)?);
        }
        Model::Harmonic(_) => {}
    }
    Ok(out)
}

pub fn skew_symmetry() -> Check {
    check(2, "skew-symmetry of J~", || {
        let mut worst = (0.0_f64, String::new());
        let mut count = 0;
        for (name, model, z) in models()? {
            for &h in &default_grid() {
                for s in all_schemes(&model, h)? {
                    let r = defect_report(&model, &s, &z)?;
                    let ratio = r.skew_residual / r.jtilde.frobenius_norm();
                    count += 1;
                    if ratio >= worst.0 {
                        worst = (ratio, format!("{name} {} h={h:.4}", s.variant));
                    }
                }
            }
        }
        Ok((
            worst.0 <= SKEW_RTOL,
            format!("{count} flows, max |J~ + J~^T| / |J~| = {:.2e} at {} (tol {SKEW_RTOL:.0e})", worst.0, worst.1),
        ))
    })
}

pub fn order_recovery() -> Check {
    check(3, "order recovery on the tokamak", || {
        let (model, z) = tokamak()?;
        let rows = tokamak_q_sweep(&model, &z)?;
        let mut pass = true;
        let mut parts = Vec::new();
        for (k, f) in summarize(&rows).iter().enumerate() {
            let target = f.m as f64 + 1.0;
            let pd = f.delta.clone()?.slope;
            let pa = f.alpha.clone()?.slope;
            pass &= (pd - target).abs() <= SLOPE_TOL && (pa - target).abs() <= SLOPE_TOL;
            parts.push(format!(
                "M={} p_delta={pd:.4} (reference {}) p_alpha={pa:.4} (reference {})",
                f.m, REFERENCE_P_DELTA[k], REFERENCE_P_ALPHA[k]
            ));
        }
        Ok((pass, format!("{}; target M+1 +/- {SLOPE_TOL}", parts.join("; "))))
    })
}

fn tokamak_q_sweep(model: &Model, z: &PhaseState) -> symperr::Result<Vec<symperr::experiments::DefectRow>> {
    let configs = symperr::experiments::sweep_configs(Variant::QImplicitSE, &[1, 2, 3], &default_grid())?;
    par_map(&configs, configs.len(), |s| defect_point(model, s, z)).into_iter().collect()
}

pub fn oracle() -> Check {
    check(4, "closed-form defect on the quadratic model", || {
        let mut worst_rel = 0.0_f64;
        let mut worst_abs = 0.0_f64;
        let mut count = 0;
        for n in [2, 3, 5] {
            for m in 1..=3 {
                for h in [0.1, 0.01] {
                    let r = optimality_row(n, m, h)?;
                    worst_rel = worst_rel.max(r.max_rel);
                    worst_abs = worst_abs.max(r.max_abs_on_zero);
                    count += 1;
                }
            }
        }
        Ok((
            worst_rel <= ORACLE_RTOL && worst_abs <= ORACLE_ATOL_ZERO,
            format!(
                "{count} cases, max relative error {worst_rel:.2e} (tol {ORACLE_RTOL:.0e}), max error on zero entries {worst_abs:.2e} (tol {ORACLE_ATOL_ZERO:.0e})"
            ),
        ))
    })
}

pub fn jacobian_agreement() -> Check {
    check(5, "AD, analytic and finite-difference Jacobians", || {
        let (tok, tz) = tokamak()?;
        let cases = [("quadratic N=3", Model::Quadratic(quadratic_model(3)?), default_state(3)), ("tokamak", tok, tz)];
        let (mut an_worst, mut fd_worst) = (0.0_f64, 0.0_f64);
        let mut count = 0;
        for (_, model, z) in &cases {
            for &h in &[0.02, 0.1, 0.2] {
                for m in 1..=3 {
                    for s in [
                        SchemeConfig::p_implicit(h, m)?,
                        SchemeConfig::q_implicit(h, m)?,
                        SchemeConfig::sv_pq(h, m, m % 3 + 1)?,
                        SchemeConfig::sv_qp(h, m, m % 3 + 1)?,
                    ] {
                        let ad = flow_jacobian_ad(model, &s, z)?;
                        let an = flow_jacobian_analytic(model, &s, z)?;
                        let fd = finite_difference_jacobian(|x| s.step(model, x), z, FD_STEP)?;
                        an_worst = an_worst.max(rel(&an, &ad)?);
                        fd_worst = fd_worst.max(rel(&fd, &ad)?);
                        count += 1;
                    }
                }
            }
        }
        Ok((
            an_worst <= AD_ANALYTIC_RTOL && fd_worst <= AD_FD_RTOL,
            format!(
                "{count} flows, analytic vs AD {an_worst:.2e} (tol {AD_ANALYTIC_RTOL:.0e}), FD vs AD {fd_worst:.2e} (tol {AD_FD_RTOL:.0e})"
            ),
        ))
    })
}

/// With `with_slopes`, also fits `|det DΦ − 1|` on the tokamak sweep.
pub fn volume(with_slopes: bool) -> Check {
    check(6, "volume identity", || {
        let mut worst = 0.0_f64;
        let mut count = 0;
        let grid = default_grid();
        for (_, model, z) in models()? {
            for &h in &grid {
                // The identity rests on a vanishing diagonal block, which
                // the Störmer–Verlet compositions do not have.
                for s in all_schemes(&model, h)?.into_iter().filter(|s| !s.variant.is_sv()) {
                    let r: DefectReport = defect_report(&model, &s, &z)?;
                    worst = worst.max(r.volume_discrepancy() / r.det_antidiag);
                    count += 1;
                }
            }
        }
        let mut pass = worst <= VOLUME_RTOL;
        let mut detail =
            format!("{count} Symplectic Euler flows, max relative discrepancy {worst:.2e} (tol {VOLUME_RTOL:.0e})");
        if with_slopes {
            let (model, z) = tokamak()?;
            let mut slopes = Vec::new();
            for f in summarize(&tokamak_q_sweep(&model, &z)?) {
                let p = f.volume?.slope;
                pass &= (p - (f.m as f64 + 1.0)).abs() <= SLOPE_TOL;
                slopes.push(format!("M={} {p:.4}", f.m));
            }
            detail.push_str(&format!("; |det DPhi - 1| slopes {} (target M+1 +/- {SLOPE_TOL})", slopes.join(", ")));
        }
        Ok((pass, detail))
    })
}

fn sv_split_ok(fits: &[BlockFits; 2], m1: usize, m2: usize) -> symperr::Result<(bool, String)> {
    let mut pass = true;
    let mut parts = Vec::new();
    for bf in fits {
        let expected = sv_expected_orders(bf.variant, m1, m2)?;
        let slopes: Vec<String> = bf.fits.iter().map(|f| format!("{:.3}", f.slope)).collect();
        for (f, e) in bf.fits.iter().zip(expected) {
            let range = if e > (m1.min(m2) + 1) as f64 { SV_HIGH_ORDER } else { SV_LOW_ORDER };
            pass &= in_range(f.slope, range);
        }
        parts.push(format!("{} [{}]", bf.variant, slopes.join(", ")));
    }
    Ok((pass, parts.join(" ")))
}

pub fn sv_block_split() -> Check {
    check(7, "Stormer-Verlet block split, (M1,M2) = (1,3)", || {
        let grid = default_grid();
        let (tok, tz) = tokamak()?;
        let quad = Model::Quadratic(quadratic_model(3)?);
        let (qp, qd) = sv_split_ok(&sv_block_orders(&quad, 1, 3, &grid, &default_state(3))?, 1, 3)?;
        let (tp, td) = sv_split_ok(&sv_block_orders(&tok, 1, 3, &grid, &tz)?, 1, 3)?;
        Ok((
            qp && tp,
            format!(
                "quadratic N=3: {qd}; tokamak: {td}; P11..P22 slopes, low order in [{}, {}], high in [{}, {}]",
                SV_LOW_ORDER.0, SV_LOW_ORDER.1, SV_HIGH_ORDER.0, SV_HIGH_ORDER.1
            ),
        ))
    })
}

pub fn commuting_diagram() -> Check {
    check(8, "coordinate-swap diagram", || {
        let (model, _) = tokamak()?;
        let mut worst = 0.0_f64;
        for z in tokamak_states(SWAP_STATES)? {
            for m in 1..=3 {
                for h in [0.02, 0.1, 0.2] {
                    worst = worst.max(coordinate_swap_check(&model, h, m, &z)?);
                }
            }
        }
        Ok((worst <= SWAP_TOL, format!("{SWAP_STATES} states, max discrepancy {worst:.2e} (tol {SWAP_TOL:.0e})")))
    })
}

pub fn composition() -> Check {
    check(9, "Stormer-Verlet composition form", || {
        let (tok, _) = tokamak()?;
        let quad = Model::Quadratic(quadratic_model(3)?);
        let mut cases: Vec<(&Model, PhaseState)> = tokamak_states(5)?.into_iter().map(|z| (&tok, z)).collect();
        cases.push((&quad, default_state(3)));
        let mut worst = 0.0_f64;
        for (model, z) in &cases {
            for m1 in 1..=3 {
                for m2 in 1..=3 {
                    for h in [0.02, 0.1, 0.2] {
                        let a = step_sv_pq(*model, z, h, m1, m2)?;
                        let b = step_sv_qp(*model, z, h, m1, m2)?;
                        worst = worst.max(a.max_abs_diff(&literal::sv_pq(*model, z, h, m1, m2)?));
                        worst = worst.max(b.max_abs_diff(&literal::sv_qp(*model, z, h, m1, m2)?));
                    }
                }
            }
        }
        Ok((worst <= COMPOSITION_TOL, format!("max componentwise difference {worst:.2e} (tol {COMPOSITION_TOL:.0e})")))
    })
}

pub fn energy_drift(full_scale: bool) -> Check {
    let title = if full_scale { "energy drift (3e6 steps)" } else { "energy drift (3e5 steps)" };
    check(10, title, || {
        let steps = if full_scale { FULL_DRIFT_STEPS } else { CI_DRIFT_STEPS };
        let (model, z) = tokamak()?;
        let schemes = [
            SchemeConfig::linear_implicit(DRIFT_H)?,
            SchemeConfig::q_implicit(DRIFT_H, 2)?,
            SchemeConfig::q_implicit(DRIFT_H, 3)?,
        ];
        let runs = par_map(&schemes, 3, |s| energy_drift_run(&model, s, &z, steps, steps / 1000));
        let runs = runs.into_iter().collect::<symperr::Result<Vec<_>>>()?;
        let classes = runs.iter().map(classify_drift).collect::<symperr::Result<Vec<_>>>()?;
        let stats = runs.iter().map(drift_stats).collect::<symperr::Result<Vec<_>>>()?;
        let ordered = stats[2].last_decile_mean <= stats[1].last_decile_mean;
        let pass = classes[0] == DriftClass::Bounded && classes[1] == DriftClass::Drifting && ordered;
        let describe = |k: usize| {
            format!("{} (late/early {:.2})", classes[k].name(), stats[k].last_decile_mean / stats[k].first_decile_mean)
        };
        Ok((
            pass,
            format!(
                "linear-implicit {} [want bounded]; q-implicit M=2 {} [want drifting]; late drift M=3 {:.3e} vs M=2 {:.3e} [want M=3 <= M=2]",
                describe(0),
                describe(1),
                stats[2].last_decile_mean,
                stats[1].last_decile_mean
            ),
        ))
    })
}

/// With `require_nonsymmetric`, every power must also be non-symmetric.
pub fn toeplitz(require_nonsymmetric: bool) -> Check {
    check(11, "Toeplitz structure of powers of Xi", || {
        let mut symmetric = Vec::new();
        let mut count = 0;
        for n in 2..=TOEPLITZ_MAX_N {
            for m in 1..=TOEPLITZ_MAX_M {
                // Errors if the power is not Toeplitz or breaks the shift relation.
                let x = xi_power(n, m)?;
                count += 1;
                if x.is_symmetric() {
                    symmetric.push(format!("N={n} M={m}"));
                }
            }
        }
        let mut detail = format!("{count} powers Toeplitz with the shift relation");
        if require_nonsymmetric {
            if symmetric.is_empty() {
                detail.push_str(", none symmetric");
            } else {
                detail.push_str(&format!(", symmetric: {}", symmetric.join(", ")));
            }
        }
        Ok((!require_nonsymmetric || symmetric.is_empty(), detail))
    })
}

/// Criteria 1 to 11 in order.
pub fn acceptance_suite(full_scale: bool) -> Vec<Check> {
    vec![
        zero_blocks(),
        skew_symmetry(),
        order_recovery(),
        oracle(),
        jacobian_agreement(),
        volume(true),
        sv_block_split(),
        commuting_diagram(),
        composition(),
        energy_drift(full_scale),
        toeplitz(true),
    ]
}

/// The exact structural identities only: no fitted slopes, no drift
/// classification.
pub fn invariant_suite() -> Vec<Check> {
    vec![
        zero_blocks(),
        skew_symmetry(),
        oracle(),
        jacobian_agreement(),
        volume(false),
        commuting_diagram(),
        composition(),
        toeplitz(false),
    ]
}
