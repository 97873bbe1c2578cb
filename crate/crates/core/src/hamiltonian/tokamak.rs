//! Charged particle in a simplified tokamak field.
//!
//! The vector potential in SI units is
//!
//! ```text
//! A = B0·F(r)/ρ·φ̂ − B0·R·ln(ρ/R)·ẑ,   F(r) = ∫₀ʳ f,   f(r) = r/(R·s(r)),
//! s(r) = (1 + a·r)/(1 + r²)            (safety factor)
//! ```
//!
//! with `ρ` the cylindrical radius and `r` the distance from the magnetic
//! axis (the circle `ρ = R, z = 0`). Dynamics run in Cartesian,
//! nondimensional variables `q' = q/L0`, `p' = p/P0`, for which
//! `H' = ½‖p' − A'(q')‖²` with `A' = A/A0`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::charged::{Charged, PotentialEval, VectorPotential};
use crate::autodiff::{CustomPrimitive, Scalar};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::state::PhaseState;

/// Points with `ρ < AXIS_TOLERANCE·R` are rejected.
pub const AXIS_TOLERANCE: f64 = 1e-9;
/// Gauss–Legendre order used for `F`.
pub const QUADRATURE_ORDER: usize = 32;

/// Physical parameters in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Major radius `R` [m].
    pub major_radius: f64,
    /// Distance parameter `a` of the safety factor.
    pub a: f64,
    /// Field strength `B0` [T].
    pub b0: f64,
    /// Particle mass [kg].
    pub mass: f64,
    /// Particle charge [C].
    pub charge: f64,
}

impl Default for PhysicalParams {
    /// A proton in a 20 mT field of a 5 m tokamak.
    fn default() -> Self {
        Self { major_radius: 5.0, a: 1.0, b0: 20e-3, mass: 1.673e-27, charge: 1.602e-19 }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.major_radius, self.a, self.b0, self.mass, self.charge];
        if all.iter().all(|x| x.is_finite() && *x > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("physical parameters must be finite and strictly positive"))
        }
    }

    /// Reference initial state in SI units: position (5.1, 0, 0.1) m,
    /// momentum (1e-23, 1e-23, 1e-21) kg·m/s.
    pub fn reference_initial_state() -> PhaseState {
        PhaseState::new(vec![5.1, 0.0, 0.1], vec![1e-23, 1e-23, 1e-21])
    }
}

/// Characteristic scales: `L0 = 2πR`, `T0 = m/(Q·B0)`, `P0 = m·L0/T0`,
/// `A0 = P0/Q`, `H0 = P0²/m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nondimensionalizer {
    pub l0: f64,
    pub t0: f64,
    pub p0: f64,
    pub a0: f64,
    pub h0: f64,
}

impl Nondimensionalizer {
    pub fn new(params: &PhysicalParams) -> Self {
        let l0 = 2.0 * PI * params.major_radius;
        let t0 = params.mass / (params.charge * params.b0);
        let p0 = params.mass * l0 / t0;
        let a0 = p0 / params.charge;
        let h0 = p0 * p0 / params.mass;
        Self { l0, t0, p0, a0, h0 }
    }

    pub fn nondimensionalize(&self, si: &PhaseState) -> PhaseState {
        PhaseState { q: si.q.iter().map(|x| x / self.l0).collect(), p: si.p.iter().map(|x| x / self.p0).collect() }
    }

    pub fn dimensionalize(&self, state: &PhaseState) -> PhaseState {
        PhaseState {
            q: state.q.iter().map(|x| x * self.l0).collect(),
            p: state.p.iter().map(|x| x * self.p0).collect(),
        }
    }
}

/// `F(r) = ∫₀ʳ f(λ) dλ` by fixed-order Gauss–Legendre, registered with
/// derivative `f(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FIntegral {
    major_radius: f64,
    a: f64,
    rule: GaussLegendre,
}

impl FIntegral {
    pub fn new(major_radius: f64, a: f64) -> Self {
        Self { major_radius, a, rule: GaussLegendre::new(QUADRATURE_ORDER) }
    }

    /// `s(r) = (1 + a·r)/(1 + r²)`.
    pub fn safety_factor(&self, r: f64) -> f64 {
        (1.0 + self.a * r) / (1.0 + r * r)
    }

    /// Integrand `f(r) = r/(R·s(r))`.
    pub fn integrand(&self, r: f64) -> f64 {
        r * (1.0 + r * r) / (self.major_radius * (1.0 + self.a * r))
    }

    /// `F(r)`, rejecting intervals that contain the pole `1 + aλ = 0`.
    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Domain("F(r) needs a finite r >= 0"));
        }
        if !(1.0 + self.a * r > 0.0) {
            return Err(Error::Domain("integrand pole 1 + a*r = 0 inside [0, r]"));
        }
        Ok(self.rule.integrate(0.0, r, |x| self.integrand(x)))
    }
}

impl CustomPrimitive for FIntegral {
    /// NaN outside the domain; callers check with [`FIntegral::value`].
    fn evaluate(&self, r: f64) -> f64 {
        self.value(r).unwrap_or(f64::NAN)
    }
    fn derivative(&self, r: f64) -> f64 {
        self.integrand(r)
    }
}

/// The tokamak vector potential in nondimensional Cartesian coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TokamakField {
    params: PhysicalParams,
    scales: Nondimensionalizer,
    f: FIntegral,
}

pub type TokamakModel = Charged<TokamakField>;

pub fn tokamak_model(params: PhysicalParams) -> Result<TokamakModel> {
    Ok(Charged::new(TokamakField::new(params)?))
}

impl TokamakField {
    pub fn new(params: PhysicalParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, scales: Nondimensionalizer::new(&params), f: FIntegral::new(params.major_radius, params.a) })
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn scales(&self) -> &Nondimensionalizer {
        &self.scales
    }

    pub fn f_integral(&self) -> &FIntegral {
        &self.f
    }

    /// `A'` at a nondimensional position.
    pub fn potential(&self, q: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval(q)?.a)
    }

    /// `A` in SI units at an SI position, with `∂A_i/∂x_j`.
    pub fn potential_si<S: Scalar>(&self, x: &[S]) -> Result<PotentialEval<S>> {
        if x.len() != 3 {
            return Err(Error::DimensionMismatch { op: "tokamak potential", left: (3, 1), right: (x.len(), 1) });
        }
        let big_r = self.params.major_radius;
        let b0 = self.params.b0;
        let (x0, y0, z0) = (x[0].clone(), x[1].clone(), x[2].clone());

        let rho2 = x0.clone() * x0.clone() + y0.clone() * y0.clone();
        let rho_v = libm::sqrt(rho2.value());
        if !(rho_v >= AXIS_TOLERANCE * big_r) {
            return Err(Error::Domain("cylindrical radius at the symmetry axis"));
        }
        let rho = rho2.clone().sqrt();
        let d = rho.clone() - big_r;
        let r2 = d.clone() * d.clone() + z0.clone() * z0.clone();
        let r = r2.clone().sqrt();
        let big_f_v = self.f.value(r.value())?;
        let big_f = r.clone().apply(&self.f);
        debug_assert_eq!(big_f.value(), big_f_v);

        // f(r)/r = (1 + r²)/(R(1 + a·r)); the chain factor ∂r/∂x_j carries 1/r.
        let g = (r2 + 1.0) / ((r * self.params.a + 1.0) * big_r);
        let f_x = g.clone() * d.clone() * x0.clone() / rho.clone();
        let f_y = g.clone() * d * y0.clone() / rho.clone();
        let f_z = g * z0;

        let inv_rho2 = S::from_f64(1.0) / rho2;
        let two_f_rho4 = big_f.clone() * inv_rho2.clone() * inv_rho2.clone() * 2.0;
        let zero = S::from_f64(0.0);

        let a = vec![
            -(big_f.clone() * y0.clone() * inv_rho2.clone()) * b0,
            big_f.clone() * x0.clone() * inv_rho2.clone() * b0,
            -((rho / big_r).ln() * (b0 * big_r)),
        ];
        let da = vec![
            vec![
                -(y0.clone() * (f_x.clone() * inv_rho2.clone() - two_f_rho4.clone() * x0.clone())) * b0,
                -(big_f.clone() * inv_rho2.clone() + y0.clone() * f_y.clone() * inv_rho2.clone()
                    - two_f_rho4.clone() * y0.clone() * y0.clone())
                    * b0,
                -(y0.clone() * f_z.clone() * inv_rho2.clone()) * b0,
            ],
            vec![
                (big_f * inv_rho2.clone() + x0.clone() * f_x * inv_rho2.clone()
                    - two_f_rho4.clone() * x0.clone() * x0.clone())
                    * b0,
                x0.clone() * (f_y * inv_rho2.clone() - two_f_rho4 * y0.clone()) * b0,
                x0.clone() * f_z * inv_rho2.clone() * b0,
            ],
            vec![-(x0 * inv_rho2.clone()) * (b0 * big_r), -(y0 * inv_rho2) * (b0 * big_r), zero],
        ];
        Ok(PotentialEval { a, da })
    }
}

impl VectorPotential for TokamakField {
    fn dim(&self) -> usize {
        3
    }

    /// `A'(q') = A(L0·q')/A0` and `D_{q'}A' = (L0/A0)·D_xA`.
    fn eval<S: Scalar>(&self, q: &[S]) -> Result<PotentialEval<S>> {
        let l0 = self.scales.l0;
        let a0 = self.scales.a0;
        let x: Vec<S> = q.iter().map(|c| c.clone() * l0).collect();
        let si = self.potential_si(&x)?;
        Ok(PotentialEval {
            a: si.a.into_iter().map(|c| c / a0).collect(),
            da: si.da.into_iter().map(|row| row.into_iter().map(|c| c * (l0 / a0)).collect()).collect(),
        })
    }
}
