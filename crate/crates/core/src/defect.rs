//! Jacobians of one-step maps and the block structure of
//! `J̃ = (DΦ)ᵀ J (DΦ)`.
//!
//! With `DΦ = [[q̃_q, q̃_p], [p̃_q, p̃_p]]`,
//!
//! ```text
//! J̃ = [[ [q̃_q, p̃_q],   A      ],
//!      [ −Aᵀ,          [q̃_p, p̃_p] ]],   A = q̃_qᵀ p̃_p − p̃_qᵀ q̃_p,
//! ```
//!
//! where `[R, S] = RᵀS − SᵀR`. For the p-implicit Euler flow the lower
//! right bracket vanishes identically, for the q-implicit flow the upper
//! left one does.

use alloc::vec::Vec;

use crate::autodiff::jacobian;
use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, Swapped};
use crate::integrators::{p_iterates, step_p_implicit, step_q_implicit, SchemeConfig, Side, Variant};
use crate::linalg::{bracket, symplectic_j, Block2x2, Matrix};
use crate::state::PhaseState;

/// Exact Jacobian of the configured one-step map by forward-mode
/// differentiation of the unrolled scheme.
pub fn flow_jacobian_ad<H: Hamiltonian + ?Sized>(model: &H, scheme: &SchemeConfig, at: &PhaseState) -> Result<Matrix> {
    jacobian(|z| scheme.step(model, z), at)
}

/// Jacobian of `Φ_h^{[M]}` assembled from Hessians at the FPI iterates:
///
/// ```text
/// p̃_q = Σ_{n=1}^{M} (−h)ⁿ (Π_{i=1}^{n−1} H_pq^{[M−i]}) H_qq^{[M−n]}
/// p̃_p = Σ_{n=0}^{M} (−h)ⁿ  Π_{i=1}^{n}   H_pq^{[M−i]}
/// q̃_q = I + h·H_qp^{[M]} + h·H_pp^{[M]}·p̃_q
/// q̃_p = h·H_pp^{[M]}·p̃_p
/// ```
///
/// with `H^{[n]}` evaluated at `(q, p_n)`.
pub fn p_implicit_jacobian_analytic<H: Hamiltonian + ?Sized>(
    model: &H,
    at: &PhaseState,
    h: f64,
    m: usize,
) -> Result<Matrix> {
    let n = model.dim();
    let iterates = p_iterates(model, at, h, m)?;
    let hess = iterates.iter().map(|p| model.hessian(&at.q, p)).collect::<Result<Vec<_>>>()?;

    let mut p_q = Matrix::zeros(n, n);
    let mut p_p = Matrix::identity(n);
    // prod = Π_{i=1}^{k} H_pq^{[M−i]}, grown one factor per term.
    let mut prod = Matrix::identity(n);
    let mut coeff = 1.0;
    for k in 1..=m {
        coeff *= -h;
        p_q = p_q.add(&prod.mat_mul(&hess[m - k].qq)?.scale(coeff))?;
        prod = prod.mat_mul(&hess[m - k].pq)?;
        p_p = p_p.add(&prod.scale(coeff))?;
    }
    let last = &hess[m];
    let q_q = Matrix::identity(n).add(&last.qp.scale(h))?.add(&last.pp.mat_mul(&p_q)?.scale(h))?;
    let q_p = last.pp.mat_mul(&p_p)?.scale(h);
    Ok(Block2x2 { tl: q_q, tr: q_p, bl: p_q, br: p_p }.assemble())
}

/// `Dζ` for `ζ(q, p) = (−p, q)`.
fn d_zeta(n: usize) -> Matrix {
    Matrix::from_fn(2 * n, 2 * n, |i, j| {
        if i < n && j == i + n {
            -1.0
        } else if i >= n && j + n == i {
            1.0
        } else {
            0.0
        }
    })
}

/// Jacobian of `Ψ_h^{[M]}` through `ζ ∘ Ψ = Φ̂ ∘ ζ`, where `Φ̂` is the
/// p-implicit flow of `Ĥ = H ∘ ζ⁻¹`.
pub fn q_implicit_jacobian_analytic<H: Hamiltonian + ?Sized>(
    model: &H,
    at: &PhaseState,
    h: f64,
    m: usize,
) -> Result<Matrix> {
    let n = model.dim();
    let hat = Swapped(model);
    let inner = p_implicit_jacobian_analytic(&hat, &at.swap_coordinates(), h, m)?;
    let dz = d_zeta(n);
    dz.transpose().mat_mul(&inner)?.mat_mul(&dz)
}

/// Jacobian of the configured map from the Hessian recursions; the
/// Störmer–Verlet flows by the chain rule over their two half-steps.
pub fn flow_jacobian_analytic<H: Hamiltonian + ?Sized>(
    model: &H,
    scheme: &SchemeConfig,
    at: &PhaseState,
) -> Result<Matrix> {
    let h = scheme.h;
    match scheme.variant {
        Variant::PImplicitSE => p_implicit_jacobian_analytic(model, at, h, scheme.m),
        Variant::QImplicitSE => q_implicit_jacobian_analytic(model, at, h, scheme.m),
        Variant::SvPq => {
            let mid = step_p_implicit(model, at, 0.5 * h, scheme.m1)?;
            let first = p_implicit_jacobian_analytic(model, at, 0.5 * h, scheme.m1)?;
            q_implicit_jacobian_analytic(model, &mid, 0.5 * h, scheme.m2)?.mat_mul(&first)
        }
        Variant::SvQp => {
            let mid = step_q_implicit(model, at, 0.5 * h, scheme.m1)?;
            let first = q_implicit_jacobian_analytic(model, at, 0.5 * h, scheme.m1)?;
            p_implicit_jacobian_analytic(model, &mid, 0.5 * h, scheme.m2)?.mat_mul(&first)
        }
        Variant::LinearImplicitEM | Variant::ExactSEQuadratic(_) => {
            Err(Error::InvalidArgument("analytic Jacobian is available for the FPI schemes only"))
        }
    }
}

/// Which diagonal block of `J̃` is reported as `delta`.
///
/// Schemes whose last stage is p-implicit have a vanishing lower right
/// block, so `delta` measures the upper left one, and vice versa.
pub fn delta_block(variant: Variant) -> DeltaBlock {
    match variant {
        Variant::PImplicitSE | Variant::SvQp | Variant::LinearImplicitEM | Variant::ExactSEQuadratic(Side::P) => {
            DeltaBlock::TopLeft
        }
        Variant::QImplicitSE | Variant::SvPq | Variant::ExactSEQuadratic(Side::Q) => DeltaBlock::BottomRight,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaBlock {
    TopLeft,
    BottomRight,
}

/// `J̃` of one flow Jacobian and the quantities derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub jtilde: Matrix,
    /// `tl = [q̃_q, p̃_q]`, `tr = A`, `bl = −Aᵀ`, `br = [q̃_p, p̃_p]`.
    pub blocks: Block2x2,
    pub delta_block: DeltaBlock,
    /// Frobenius norm of the designated diagonal block.
    pub delta: f64,
    /// `‖A − I‖_F`.
    pub alpha: f64,
    /// `‖J̃ + J̃ᵀ‖_F`.
    pub skew_residual: f64,
    /// `det DΦ`.
    pub det_flow: f64,
    /// `|det A|`.
    pub det_antidiag: f64,
}

impl DefectReport {
    /// Forms `J̃ = DΦᵀ J DΦ` and its blocks. The diagonal blocks are
    /// computed with [`bracket`] so that they are exactly skew.
    pub fn new(dphi: &Matrix, delta_block: DeltaBlock) -> Result<Self> {
        if !dphi.is_square() || !dphi.rows().is_multiple_of(2) {
            return Err(Error::InvalidArgument("flow Jacobian must be 2N x 2N"));
        }
        let n = dphi.rows() / 2;
        let d = Block2x2::split(dphi)?;
        let (q_q, q_p, p_q, p_p) = (&d.tl, &d.tr, &d.bl, &d.br);
        let tl = bracket(q_q, p_q)?;
        let br = bracket(q_p, p_p)?;
        let a = q_q.transpose().mat_mul(p_p)?.sub(&p_q.transpose().mat_mul(q_p)?)?;
        let blocks = Block2x2::from_blocks(tl, a.clone(), a.transpose().scale(-1.0), br)?;
        let jtilde = blocks.assemble();

        // The direct product, for the skew-symmetry check.
        let direct = dphi.transpose().mat_mul(&symplectic_j(n))?.mat_mul(dphi)?;
        let skew_residual = direct.add(&direct.transpose())?.frobenius_norm();

        let delta = match delta_block {
            DeltaBlock::TopLeft => blocks.tl.frobenius_norm(),
            DeltaBlock::BottomRight => blocks.br.frobenius_norm(),
        };
        let alpha = a.sub(&Matrix::identity(n))?.frobenius_norm();
        Ok(Self {
            jtilde,
            delta_block,
            delta,
            alpha,
            skew_residual,
            det_flow: dphi.determinant()?,
            det_antidiag: a.determinant()?.abs(),
            blocks,
        })
    }

    pub fn for_variant(dphi: &Matrix, variant: Variant) -> Result<Self> {
        Self::new(dphi, delta_block(variant))
    }

    pub fn dim(&self) -> usize {
        self.blocks.dim()
    }

    /// The norm of the diagonal block that is not `delta`.
    pub fn zero_block_norm(&self) -> f64 {
        match self.delta_block {
            DeltaBlock::TopLeft => self.blocks.br.frobenius_norm(),
            DeltaBlock::BottomRight => self.blocks.tl.frobenius_norm(),
        }
    }

    /// The four blocks `P11, P12, P21, P22` of `J̃ − J`.
    pub fn defect_blocks(&self) -> Result<Block2x2> {
        Block2x2::split(&self.jtilde.sub(&symplectic_j(self.dim()))?)
    }

    /// `| |det DΦ| − |det A| |`.
    pub fn volume_discrepancy(&self) -> f64 {
        (self.det_flow.abs() - self.det_antidiag).abs()
    }
}

/// `J̃ = DΦᵀ J DΦ` for a Jacobian, with the upper left block reported as
/// `delta`.
pub fn jtilde(dphi: &Matrix) -> Result<DefectReport> {
    DefectReport::new(dphi, DeltaBlock::TopLeft)
}

/// Determinants behind the volume identity `|det DΦ| = |det A|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeDefect {
    pub det_flow: f64,
    pub det_antidiag: f64,
    pub discrepancy: f64,
}

pub fn volume_defect(report: &DefectReport) -> VolumeDefect {
    VolumeDefect {
        det_flow: report.det_flow,
        det_antidiag: report.det_antidiag,
        discrepancy: report.volume_discrepancy(),
    }
}

/// One full defect evaluation: AD Jacobian of the scheme at `at`.
pub fn defect_report<H: Hamiltonian + ?Sized>(
    model: &H,
    scheme: &SchemeConfig,
    at: &PhaseState,
) -> Result<DefectReport> {
    let dphi = flow_jacobian_ad(model, scheme, at)?;
    DefectReport::for_variant(&dphi, scheme.variant)
}

/// Largest componentwise difference between `ζ(Ψ_h^{[M]}(z))` and
/// `Φ̂_h^{[M]}(ζ(z))`, `Φ̂` being the p-implicit flow of `Ĥ = H ∘ ζ⁻¹`.
pub fn coordinate_swap_check<H: Hamiltonian + ?Sized>(model: &H, h: f64, m: usize, at: &PhaseState) -> Result<f64> {
    let lhs = step_q_implicit(model, at, h, m)?.swap_coordinates();
    let rhs = step_p_implicit(&Swapped(model), &at.swap_coordinates(), h, m)?;
    Ok(lhs.max_abs_diff(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{finite_difference_jacobian, FD_STEP};
    use crate::hamiltonian::{
        harmonic_oscillator, quadratic_model, tokamak_model, Nondimensionalizer, PhysicalParams, TokamakModel,
    };
    use crate::integrators::step_sv_pq;
    use alloc::vec;

    fn tokamak_start() -> (TokamakModel, PhaseState) {
        let params = PhysicalParams::default();
        let s = Nondimensionalizer::new(&params);
        (tokamak_model(params).unwrap(), s.nondimensionalize(&PhysicalParams::reference_initial_state()))
    }

    fn rel(a: &Matrix, b: &Matrix) -> f64 {
        a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm()
    }

    #[test]
    fn identity_jacobian() {
        let r = jtilde(&Matrix::identity(4)).unwrap();
        assert_eq!(r.jtilde, symplectic_j(2));
        assert_eq!((r.delta, r.alpha, r.skew_residual), (0.0, 0.0, 0.0));
        assert_eq!((r.det_flow, r.det_antidiag), (1.0, 1.0));
        assert!(jtilde(&Matrix::identity(3)).is_err());
        assert!(jtilde(&Matrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn block_formula_matches_direct_product() {
        let m = Matrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.5 + if i == j { 1.0 } else { 0.0 });
        let r = jtilde(&m).unwrap();
        let direct = m.transpose().mat_mul(&symplectic_j(3)).unwrap().mat_mul(&m).unwrap();
        assert!(r.jtilde.sub(&direct).unwrap().max_abs() <= 1e-14 * direct.max_abs());
        assert!(r.skew_residual <= 1e-12 * direct.frobenius_norm());
        assert_eq!(r.blocks.assemble(), r.jtilde);
    }

    #[test]
    fn harmonic_step_jacobian_against_hand_result() {
        let ho = harmonic_oscillator(1);
        let at = PhaseState::new(vec![0.7], vec![-0.4]);
        let h = 0.1;
        let s = SchemeConfig::p_implicit(h, 1).unwrap();
        let expected = Matrix::from_rows(&[[1.0 - h * h, h], [-h, 1.0]]);
        assert!(flow_jacobian_ad(&ho, &s, &at).unwrap().sub(&expected).unwrap().max_abs() < 1e-16);
        assert!(flow_jacobian_analytic(&ho, &s, &at).unwrap().sub(&expected).unwrap().max_abs() < 1e-16);
        let fd = finite_difference_jacobian(|z| s.step(&ho, z), &at, FD_STEP).unwrap();
        assert!(fd.sub(&expected).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn analytic_m1_and_quadratic_closed_forms() {
        let quad = quadratic_model(3).unwrap();
        let xi = quad.xi().clone();
        let at = PhaseState::new(vec![0.3, -0.1, 0.7], vec![1.0, 0.2, -0.5]);
        let h = 0.1;
        // M = 1: p̃_p = I − h·Ξ.
        let d = Block2x2::split(&p_implicit_jacobian_analytic(&quad, &at, h, 1).unwrap()).unwrap();
        assert!(d.br.sub(&Matrix::identity(3).sub(&xi.scale(h)).unwrap()).unwrap().max_abs() < 1e-16);
        // General M: p̃_p = Σ (−h)ⁿ Ξⁿ.
        for m in 1..=4 {
            let d = Block2x2::split(&p_implicit_jacobian_analytic(&quad, &at, h, m).unwrap()).unwrap();
            let mut sum = Matrix::zeros(3, 3);
            for k in 0..=m {
                sum = sum.add(&xi.mat_pow(k as u32).unwrap().scale((-h).powi(k as i32))).unwrap();
            }
            assert!(d.br.sub(&sum).unwrap().max_abs() < 1e-15);
        }
    }

    #[test]
    fn ad_analytic_and_fd_agree() {
        let (tok, z) = tokamak_start();
        let quad = quadratic_model(3).unwrap();
        let zq = PhaseState::new(vec![0.3, -0.1, 0.7], vec![1.0, 0.2, -0.5]);
        let schemes = [
            SchemeConfig::p_implicit(0.1, 1).unwrap(),
            SchemeConfig::p_implicit(0.05, 3).unwrap(),
            SchemeConfig::q_implicit(0.1, 2).unwrap(),
            SchemeConfig::q_implicit(0.2, 3).unwrap(),
            SchemeConfig::sv_pq(0.1, 1, 3).unwrap(),
            SchemeConfig::sv_qp(0.1, 3, 1).unwrap(),
        ];
        for s in &schemes {
            let ad = flow_jacobian_ad(&tok, s, &z).unwrap();
            let an = flow_jacobian_analytic(&tok, s, &z).unwrap();
            assert!(rel(&an, &ad) <= 1e-10, "{:?}: {:e}", s.variant, rel(&an, &ad));
            let fd = finite_difference_jacobian(|x| s.step(&tok, x), &z, FD_STEP).unwrap();
            assert!(rel(&fd, &ad) <= 1e-5, "{:?}: {:e}", s.variant, rel(&fd, &ad));

            let ad = flow_jacobian_ad(&quad, s, &zq).unwrap();
            let an = flow_jacobian_analytic(&quad, s, &zq).unwrap();
            assert!(rel(&an, &ad) <= 1e-12);
        }
        assert!(flow_jacobian_analytic(&tok, &SchemeConfig::linear_implicit(0.1).unwrap(), &z).is_err());
    }

    #[test]
    fn chain_rule_over_sv_halves() {
        let (tok, z) = tokamak_start();
        let h = 0.1;
        let full = flow_jacobian_ad(&tok, &SchemeConfig::sv_pq(h, 2, 2).unwrap(), &z).unwrap();
        let first = flow_jacobian_ad(&tok, &SchemeConfig::p_implicit(0.5 * h, 2).unwrap(), &z).unwrap();
        let mid = step_p_implicit(&tok, &z, 0.5 * h, 2).unwrap();
        let second = flow_jacobian_ad(&tok, &SchemeConfig::q_implicit(0.5 * h, 2).unwrap(), &mid).unwrap();
        assert!(rel(&second.mat_mul(&first).unwrap(), &full) <= 1e-12);
        assert_eq!(step_sv_pq(&tok, &z, h, 2, 2).unwrap(), step_q_implicit(&tok, &mid, 0.5 * h, 2).unwrap());
    }

    #[test]
    fn exactly_symplectic_flows() {
        let quad = quadratic_model(2).unwrap();
        let at = PhaseState::new(vec![1.0, 0.0], vec![0.0, 1.0]);
        for side in [Side::P, Side::Q] {
            let r = defect_report(&quad, &SchemeConfig::exact_se(0.1, side).unwrap(), &at).unwrap();
            assert!(r.jtilde.sub(&symplectic_j(2)).unwrap().frobenius_norm() <= 1e-13);
            assert!((r.det_flow - 1.0).abs() <= 1e-12 && (r.det_antidiag - 1.0).abs() <= 1e-12);
        }
        let ho = harmonic_oscillator(3);
        let at = PhaseState::new(vec![0.2, 0.4, -1.0], vec![0.5, 0.0, 0.3]);
        for m in 1..=3 {
            let r = defect_report(&ho, &SchemeConfig::p_implicit(0.2, m).unwrap(), &at).unwrap();
            assert!(r.jtilde.sub(&symplectic_j(3)).unwrap().frobenius_norm() <= 1e-13);
        }
    }

    #[test]
    fn tokamak_matrix_structure() {
        let (tok, z) = tokamak_start();
        let r = defect_report(&tok, &SchemeConfig::q_implicit(0.1, 3).unwrap(), &z).unwrap();
        assert!(r.blocks.tl.max_abs() <= 1e-14, "{:e}", r.blocks.tl.max_abs());
        for i in 0..3 {
            assert!((r.blocks.tr[(i, i)] - 1.0).abs() <= 1e-9);
            assert!((r.jtilde[(3 + i, i)] + 1.0).abs() <= 1e-9);
        }
        assert!(r.skew_residual <= 1e-12 * r.jtilde.frobenius_norm());
        assert_eq!(r.delta, r.blocks.br.frobenius_norm());
    }

    #[test]
    fn zero_blocks() {
        let (tok, z) = tokamak_start();
        for m in 1..=3 {
            let p = defect_report(&tok, &SchemeConfig::p_implicit(0.2, m).unwrap(), &z).unwrap();
            assert!(p.blocks.br.frobenius_norm() <= 1e-12);
            let q = defect_report(&tok, &SchemeConfig::q_implicit(0.2, m).unwrap(), &z).unwrap();
            assert!(q.blocks.tl.frobenius_norm() <= 1e-12);
            assert!(q.volume_discrepancy() <= 1e-12 * q.det_antidiag);
        }
    }

    #[test]
    fn swap_diagram_commutes() {
        let (tok, z) = tokamak_start();
        assert_eq!(coordinate_swap_check(&tok, 0.0, 2, &z).unwrap(), 0.0);
        let ho = harmonic_oscillator(2);
        let zh = PhaseState::new(vec![0.3, 1.0], vec![-0.2, 0.5]);
        assert!(coordinate_swap_check(&ho, 0.1, 3, &zh).unwrap() <= 1e-15);
        for m in 1..=3 {
            assert!(coordinate_swap_check(&tok, 0.05, m, &z).unwrap() <= 1e-13);
        }
    }

    #[test]
    fn defect_blocks_subtract_j() {
        let (tok, z) = tokamak_start();
        let r = defect_report(&tok, &SchemeConfig::sv_pq(0.1, 1, 3).unwrap(), &z).unwrap();
        let p = r.defect_blocks().unwrap();
        assert_eq!(p.tl, r.blocks.tl);
        assert_eq!(p.br, r.blocks.br);
        assert_eq!(p.tr, r.blocks.tr.sub(&Matrix::identity(3)).unwrap());
        let v = volume_defect(&r);
        assert_eq!(v.discrepancy, r.volume_discrepancy());
    }
}
