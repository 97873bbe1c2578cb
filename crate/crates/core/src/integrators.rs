//! One-step maps and trajectory integration.
//!
//! The fixed-point iterations run exactly `M` times with no convergence
//! test: the fixed-`M` map is the object under study, and an early exit
//! would change its Jacobian. All step functions are generic over
//! [`Scalar`] so that [`crate::autodiff::jacobian`] differentiates the
//! iteration as executed.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;
use core::ops::ControlFlow;
use core::str::FromStr;

use crate::autodiff::{solve_linear, Scalar};
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::state::PhaseState;

/// Which unknown an exact Symplectic Euler solve is implicit in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    P,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `Φ_h^{[M]}`: FPI in the momentum update.
    PImplicitSE,
    /// `Ψ_h^{[M]}`: FPI in the position update.
    QImplicitSE,
    /// `Υ_h^{[M1,M2]} = Ψ_{h/2}^{[M2]} ∘ Φ_{h/2}^{[M1]}`.
    SvPq,
    /// `Λ_h^{[M1,M2]} = Φ_{h/2}^{[M2]} ∘ Ψ_{h/2}^{[M1]}`.
    SvQp,
    /// p-implicit Euler for `H = ½‖p − A(q)‖²`, solved as a linear system.
    LinearImplicitEM,
    /// Symplectic Euler for the quadratic model with an exact linear solve.
    ExactSEQuadratic(Side),
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::PImplicitSE,
        Variant::QImplicitSE,
        Variant::SvPq,
        Variant::SvQp,
        Variant::LinearImplicitEM,
        Variant::ExactSEQuadratic(Side::P),
        Variant::ExactSEQuadratic(Side::Q),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::PImplicitSE => "p-implicit",
            Variant::QImplicitSE => "q-implicit",
            Variant::SvPq => "sv-pq",
            Variant::SvQp => "sv-qp",
            Variant::LinearImplicitEM => "linear-implicit",
            Variant::ExactSEQuadratic(Side::P) => "exact-p",
            Variant::ExactSEQuadratic(Side::Q) => "exact-q",
        }
    }

    /// Whether the scheme is a composition of two half-steps.
    pub fn is_sv(self) -> bool {
        matches!(self, Variant::SvPq | Variant::SvQp)
    }

    /// Whether the scheme runs a fixed-point iteration at all.
    pub fn uses_fpi(self) -> bool {
        matches!(self, Variant::PImplicitSE | Variant::QImplicitSE | Variant::SvPq | Variant::SvQp)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL.into_iter().find(|v| v.name() == s).ok_or(Error::InvalidArgument("unknown scheme"))
    }
}

/// A one-step map with its step size and iteration counts.
///
/// `m` is used by the Symplectic Euler variants, `m1` and `m2` by the
/// Störmer–Verlet compositions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub variant: Variant,
    pub h: f64,
    pub m: usize,
    pub m1: usize,
    pub m2: usize,
}

impl SchemeConfig {
    pub fn new(variant: Variant, h: f64, m: usize, m1: usize, m2: usize) -> Result<Self> {
        let cfg = Self { variant, h, m, m1, m2 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn p_implicit(h: f64, m: usize) -> Result<Self> {
        Self::new(Variant::PImplicitSE, h, m, m, m)
    }

    pub fn q_implicit(h: f64, m: usize) -> Result<Self> {
        Self::new(Variant::QImplicitSE, h, m, m, m)
    }

    pub fn sv_pq(h: f64, m1: usize, m2: usize) -> Result<Self> {
        Self::new(Variant::SvPq, h, m1.min(m2), m1, m2)
    }

    pub fn sv_qp(h: f64, m1: usize, m2: usize) -> Result<Self> {
        Self::new(Variant::SvQp, h, m1.min(m2), m1, m2)
    }

    pub fn linear_implicit(h: f64) -> Result<Self> {
        Self::new(Variant::LinearImplicitEM, h, 1, 1, 1)
    }

    pub fn exact_se(h: f64, side: Side) -> Result<Self> {
        Self::new(Variant::ExactSEQuadratic(side), h, 1, 1, 1)
    }

    /// The same scheme with another step size.
    pub fn with_h(self, h: f64) -> Result<Self> {
        Self::new(self.variant, h, self.m, self.m1, self.m2)
    }

    /// `h > 0` for integration; `h = 0` is accepted by the step functions
    /// themselves (identity map) but not as a configuration.
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidArgument("step size h must be finite and > 0"));
        }
        if self.m == 0 || self.m1 == 0 || self.m2 == 0 {
            return Err(Error::InvalidArgument("iteration counts must be >= 1"));
        }
        Ok(())
    }

    /// Applies the one-step map.
    pub fn step<H: Hamiltonian + ?Sized, S: Scalar>(&self, model: &H, state: &PhaseState<S>) -> Result<PhaseState<S>> {
        let h = self.h;
        match self.variant {
            Variant::PImplicitSE => step_p_implicit(model, state, h, self.m),
            Variant::QImplicitSE => step_q_implicit(model, state, h, self.m),
            Variant::SvPq => step_sv_pq(model, state, h, self.m1, self.m2),
            Variant::SvQp => step_sv_qp(model, state, h, self.m1, self.m2),
            Variant::LinearImplicitEM => step_linear_implicit_em(model, state, h),
            Variant::ExactSEQuadratic(side) => exact_se_quadratic(model, state, h, side),
        }
    }
}

/// `base + c·v`.
fn axpy<S: Scalar>(base: &[S], c: f64, v: Vec<S>) -> Vec<S> {
    base.iter().cloned().zip(v).map(|(b, x)| b + x * c).collect()
}

fn check_iterate<S: Scalar>(v: &[S], context: &'static str, n: usize) -> Result<()> {
    if v.iter().all(Scalar::is_finite) {
        Ok(())
    } else {
        Err(Error::NonFinite { context, index: n })
    }
}

fn check_state<H: Hamiltonian + ?Sized, S>(model: &H, state: &PhaseState<S>, m: usize) -> Result<()> {
    let n = model.dim();
    if state.q.len() != n || state.p.len() != n {
        return Err(Error::DimensionMismatch { op: "step", left: (n, n), right: (state.q.len(), state.p.len()) });
    }
    if m == 0 {
        return Err(Error::InvalidArgument("iteration count must be >= 1"));
    }
    Ok(())
}

/// The momentum iterates `p_0, …, p_M` of the p-implicit scheme,
/// `p_{n+1} = p − h·H_q(q, p_n)`.
pub fn p_iterates<H: Hamiltonian + ?Sized, S: Scalar>(
    model: &H,
    state: &PhaseState<S>,
    h: f64,
    m: usize,
) -> Result<Vec<Vec<S>>> {
    check_state(model, state, m)?;
    let mut iterates = Vec::with_capacity(m + 1);
    iterates.push(state.p.clone());
    for n in 0..m {
        let next = axpy(&state.p, -h, model.grad_q(&state.q, &iterates[n])?);
        check_iterate(&next, "p-implicit FPI iterate", n + 1)?;
        iterates.push(next);
    }
    Ok(iterates)
}

/// `p̃ = p_M`, `q̃ = q + h·H_p(q, p̃)`.
pub fn step_p_implicit<H: Hamiltonian + ?Sized, S: Scalar>(
    model: &H,
    state: &PhaseState<S>,
    h: f64,
    m: usize,
) -> Result<PhaseState<S>> {
    check_state(model, state, m)?;
    let mut p = state.p.clone();
    for n in 0..m {
        p = axpy(&state.p, -h, model.grad_q(&state.q, &p)?);
        check_iterate(&p, "p-implicit FPI iterate", n + 1)?;
    }
    let q = axpy(&state.q, h, model.grad_p(&state.q, &p)?);
    check_iterate(&q, "p-implicit position update", m)?;
    Ok(PhaseState { q, p })
}

/// `q_{n+1} = q + h·H_p(q_n, p)`, `q̃ = q_M`, `p̃ = p − h·H_q(q̃, p)`.
pub fn step_q_implicit<H: Hamiltonian + ?Sized, S: Scalar>(
    model: &H,
    state: &PhaseState<S>,
    h: f64,
    m: usize,
) -> Result<PhaseState<S>> {
    check_state(model, state, m)?;
    let mut q = state.q.clone();
    for n in 0..m {
        q = axpy(&state.q, h, model.grad_p(&q, &state.p)?);
        check_iterate(&q, "q-implicit FPI iterate", n + 1)?;
    }
    let p = axpy(&state.p, -h, model.grad_q(&q, &state.p)?);
    check_iterate(&p, "q-implicit momentum update", m)?;
    Ok(PhaseState { q, p })
}

/// `Υ_h^{[M1,M2]} = Ψ_{h/2}^{[M2]} ∘ Φ_{h/2}^{[M1]}`.
pub fn step_sv_pq<H: Hamiltonian + ?Sized, S: Scalar>(
    model: &H,
    state: &PhaseState<S>,
    h: f64,
    m1: usize,
    m2: usize,
) -> Result<PhaseState<S>> {
    let half = step_p_implicit(model, state, 0.5 * h, m1)?;
    step_q_implicit(model, &half, 0.5 * h, m2)
}

/// `Λ_h^{[M1,M2]} = Φ_{h/2}^{[M2]} ∘ Ψ_{h/2}^{[M1]}`.
pub fn step_sv_qp<H: Hamiltonian + ?Sized, S: Scalar>(
    model: &H,
    state: &PhaseState<S>,
    h: f64,
    m1: usize,
    m2: usize,
) -> Result<PhaseState<S>> {
    let half = step_q_implicit(model, state, 0.5 * h, m1)?;
    step_p_implicit(model, &half, 0.5 * h, m2)
}

/// p-implicit Euler for `H = ½‖p − A(q)‖²` with the implicit equation
/// solved exactly: `(I − h·D_qA)ᵀ p̃ = p − h·(D_qA)ᵀA`, then
/// `q̃ = q + h·(p̃ − A)`, everything evaluated at `q`.
pub fn step_linear_implicit_em<H: Hamiltonian + ?Sized, S: Scalar>(
    model: &H,
    state: &PhaseState<S>,
    h: f64,
) -> Result<PhaseState<S>> {
    check_state(model, state, 1)?;
    let pot = model
        .vector_potential(&state.q)
        .ok_or(Error::InvalidArgument("linear-implicit scheme needs a vector-potential Hamiltonian"))??;
    let n = state.dim();
    // (I − h·DA)ᵀ: entry (i, j) is δ_ij − h·DA[j][i].
    let lhs: Vec<Vec<S>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = pot.da[j][i].clone() * -h;
                    if i == j {
                        d + 1.0
                    } else {
                        d
                    }
                })
                .collect()
        })
        .collect();
    let rhs: Vec<S> = (0..n)
        .map(|i| (0..n).fold(state.p[i].clone(), |acc, j| acc - pot.da[j][i].clone() * pot.a[j].clone() * h))
        .collect();
    let p = solve_linear(lhs, rhs)?;
    let q: Vec<S> = (0..n).map(|i| state.q[i].clone() + (p[i].clone() - pot.a[i].clone()) * h).collect();
    check_iterate(&q, "linear-implicit update", 1)?;
    Ok(PhaseState { q, p })
}

/// Symplectic Euler for `H = ½‖q‖² + ½‖p‖² + qᵀΞp` with an exact solve.
///
/// `Side::P`: `(I + hΞ)p̃ = p − hq`, `q̃ = q + h(p̃ + Ξᵀq)`.
/// `Side::Q`: `(I − hΞᵀ)q̃ = q + hp`, `p̃ = p − h(q̃ + Ξp)`.
pub fn exact_se_quadratic<H: Hamiltonian + ?Sized, S: Scalar>(
    model: &H,
    state: &PhaseState<S>,
    h: f64,
    side: Side,
) -> Result<PhaseState<S>> {
    check_state(model, state, 1)?;
    let xi =
        model.quadratic_coupling().ok_or(Error::InvalidArgument("exact Symplectic Euler needs the quadratic model"))?;
    let n = state.dim();
    let (q, p) = (&state.q, &state.p);
    let xi_t = |i: usize, v: &[S]| (0..n).fold(S::from_f64(0.0), |acc, j| acc + v[j].clone() * xi[(j, i)]);
    let xi_v = |i: usize, v: &[S]| (0..n).fold(S::from_f64(0.0), |acc, j| acc + v[j].clone() * xi[(i, j)]);
    match side {
        Side::P => {
            let lhs = (0..n)
                .map(|i| (0..n).map(|j| S::from_f64(f64::from(u8::from(i == j)) + h * xi[(i, j)])).collect())
                .collect();
            let rhs = (0..n).map(|i| p[i].clone() - q[i].clone() * h).collect();
            let pn = solve_linear(lhs, rhs)?;
            let qn = (0..n).map(|i| q[i].clone() + (pn[i].clone() + xi_t(i, q)) * h).collect();
            Ok(PhaseState { q: qn, p: pn })
        }
        Side::Q => {
            let lhs = (0..n)
                .map(|i| (0..n).map(|j| S::from_f64(f64::from(u8::from(i == j)) - h * xi[(j, i)])).collect())
                .collect();
            let rhs = (0..n).map(|i| q[i].clone() + p[i].clone() * h).collect();
            let qn = solve_linear(lhs, rhs)?;
            let pn = (0..n).map(|i| p[i].clone() - (qn[i].clone() + xi_v(i, p)) * h).collect();
            Ok(PhaseState { q: qn, p: pn })
        }
    }
}

/// Sampled states of a run. Sample `k` is taken after `steps[k]` steps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub energies: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Runs `steps` steps and calls `visit(step, state, energy)` for step 0
/// and every `stride`-th step (and the last one). Returning
/// `ControlFlow::Break` stops the run; the number of completed steps is
/// returned.
pub fn integrate_with<H, F>(
    model: &H,
    scheme: &SchemeConfig,
    initial: &PhaseState,
    steps: usize,
    stride: usize,
    mut visit: F,
) -> Result<usize>
where
    H: Hamiltonian + ?Sized,
    F: FnMut(usize, &PhaseState, f64) -> ControlFlow<()>,
{
    scheme.validate()?;
    if steps == 0 || stride == 0 {
        return Err(Error::InvalidArgument("steps and stride must be >= 1"));
    }
    let mut state = initial.clone();
    if visit(0, &state, model.energy(&state)?).is_break() {
        return Ok(0);
    }
    for k in 1..=steps {
        state = scheme.step(model, &state).map_err(|e| Error::Step { step: k, source: Box::new(e) })?;
        if k % stride == 0 || k == steps {
            let e = model.energy(&state).map_err(|e| Error::Step { step: k, source: Box::new(e) })?;
            if visit(k, &state, e).is_break() {
                return Ok(k);
            }
        }
    }
    Ok(steps)
}

/// Collects a [`Trajectory`] sampled every `stride` steps.
pub fn integrate<H: Hamiltonian + ?Sized>(
    model: &H,
    scheme: &SchemeConfig,
    initial: &PhaseState,
    steps: usize,
    stride: usize,
) -> Result<Trajectory> {
    let mut traj = Trajectory::default();
    integrate_with(model, scheme, initial, steps, stride, |k, s, e| {
        traj.steps.push(k);
        traj.times.push(k as f64 * scheme.h);
        traj.states.push(s.clone());
        traj.energies.push(e);
        ControlFlow::Continue(())
    })?;
    Ok(traj)
}

/// Störmer–Verlet written out as single schemes with the trapezoidal
/// iteration, as opposed to the compositions used by [`SchemeConfig`].
/// Kept as an independent reference for the composition form.
pub mod literal {
    use super::*;

    /// `p̄` by `M1` iterations of `p̄ = p − h/2·H_q(q, p̄)`, then `M2`
    /// iterations of `q̃ = q + h/2·(H_p(q, p̄) + H_p(q̃, p̄))`, then
    /// `p̃ = p̄ − h/2·H_q(q̃, p̄)`.
    pub fn sv_pq<H: Hamiltonian + ?Sized>(
        model: &H,
        s: &PhaseState,
        h: f64,
        m1: usize,
        m2: usize,
    ) -> Result<PhaseState> {
        check_state(model, s, m1.min(m2))?;
        let hh = 0.5 * h;
        let mut p = s.p.clone();
        for _ in 0..m1 {
            p = axpy(&s.p, -hh, model.grad_q(&s.q, &p)?);
        }
        let bar_p = p;
        let hp0 = model.grad_p(&s.q, &bar_p)?;
        let mut q = axpy(&s.q, hh, hp0.clone());
        for _ in 0..m2 {
            let hp = model.grad_p(&q, &bar_p)?;
            let sum: Vec<f64> = hp0.iter().zip(&hp).map(|(a, b)| a + b).collect();
            q = axpy(&s.q, hh, sum);
        }
        let p = axpy(&bar_p, -hh, model.grad_q(&q, &bar_p)?);
        Ok(PhaseState { q, p })
    }

    /// The mirror image of [`sv_pq`] with the roles of `q` and `p` exchanged.
    pub fn sv_qp<H: Hamiltonian + ?Sized>(
        model: &H,
        s: &PhaseState,
        h: f64,
        m1: usize,
        m2: usize,
    ) -> Result<PhaseState> {
        check_state(model, s, m1.min(m2))?;
        let hh = 0.5 * h;
        let mut q = s.q.clone();
        for _ in 0..m1 {
            q = axpy(&s.q, hh, model.grad_p(&q, &s.p)?);
        }
        let bar_q = q;
        let hq0 = model.grad_q(&bar_q, &s.p)?;
        let mut p = axpy(&s.p, -hh, hq0.clone());
        for _ in 0..m2 {
            let hq = model.grad_q(&bar_q, &p)?;
            let sum: Vec<f64> = hq0.iter().zip(&hq).map(|(a, b)| a + b).collect();
            p = axpy(&s.p, -hh, sum);
        }
        let q = axpy(&bar_q, hh, model.grad_p(&bar_q, &p)?);
        Ok(PhaseState { q, p })
    }
}
