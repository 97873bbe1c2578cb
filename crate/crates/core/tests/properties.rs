use proptest::prelude::*;
use symperr::autodiff::{finite_difference_jacobian, FD_STEP};
use symperr::defect::{defect_report, flow_jacobian_ad, flow_jacobian_analytic};
use symperr::hamiltonian::{
    harmonic_oscillator, quadratic_model, tokamak_model, Hamiltonian, Nondimensionalizer, PhysicalParams, Swapped,
};
use symperr::integrators::{literal, step_sv_pq, step_sv_qp, SchemeConfig, Variant};
use symperr::linalg::{bracket, skew_part, symplectic_j};
use symperr::{Matrix, PhaseState};

fn matrix(n: usize, range: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-range..range, n * n).prop_map(move |v| Matrix::from_vec(n, n, v).unwrap())
}

fn square_pair() -> impl Strategy<Value = (Matrix, Matrix)> {
    (1usize..=6).prop_flat_map(|n| (matrix(n, 10.0), matrix(n, 10.0)))
}

fn state(n: usize, range: f64) -> impl Strategy<Value = PhaseState> {
    (prop::collection::vec(-range..range, n), prop::collection::vec(-range..range, n))
        .prop_map(|(q, p)| PhaseState::new(q, p))
}

/// A point within a few percent of the nondimensional tokamak start.
fn tokamak_state() -> impl Strategy<Value = PhaseState> {
    let s = Nondimensionalizer::new(&PhysicalParams::default());
    let z0 = s.nondimensionalize(&PhysicalParams::reference_initial_state());
    prop::collection::vec(-0.05..0.05f64, 6).prop_map(move |d| {
        let q = (0..3).map(|i| z0.q[i] + d[i] * z0.q[0]).collect();
        let p = (0..3).map(|i| z0.p[i] * (1.0 + d[3 + i])).collect();
        PhaseState::new(q, p)
    })
}

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric((r, s) in square_pair()) {
        let rs = bracket(&r, &s).unwrap();
        let sr = bracket(&s, &r).unwrap();
        prop_assert_eq!(rs.add(&sr).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn skew_part_is_skew((a, _) in square_pair()) {
        let s = skew_part(&a).unwrap();
        prop_assert!(s.add(&s.transpose()).unwrap().frobenius_norm() <= 1e-15 * a.frobenius_norm());
    }

    #[test]
    fn determinant_is_multiplicative(a in matrix(6, 1.0), b in matrix(6, 1.0)) {
        // Diagonally dominant, hence well conditioned.
        let i6 = Matrix::identity(6).scale(6.0);
        let (a, b) = (a.add(&i6).unwrap(), b.add(&i6).unwrap());
        let lhs = a.mat_mul(&b).unwrap().determinant().unwrap();
        let rhs = a.determinant().unwrap() * b.determinant().unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs());
    }

    #[test]
    fn swapped_model_exchanges_gradients(z in state(3, 2.0)) {
        let h = quadratic_model(3).unwrap();
        let sw = Swapped(&h);
        let zs = z.swap_coordinates();
        let gq = sw.grad_q(&zs.q, &zs.p).unwrap();
        let gp = sw.grad_p(&zs.q, &zs.p).unwrap();
        let oq = h.grad_q(&z.q, &z.p).unwrap();
        let op = h.grad_p(&z.q, &z.p).unwrap();
        for i in 0..3 {
            prop_assert_eq!(gq[i], -op[i]);
            prop_assert_eq!(gp[i], oq[i]);
        }
        prop_assert_eq!(sw.value(&zs.q, &zs.p).unwrap(), h.value(&z.q, &z.p).unwrap());
    }

    #[test]
    fn tokamak_hessian_is_symmetric(z in tokamak_state()) {
        let m = tokamak_model(PhysicalParams::default()).unwrap();
        let hs = m.hessian(&z.q, &z.p).unwrap();
        prop_assert!(hs.qq.sub(&hs.qq.transpose()).unwrap().frobenius_norm() <= 1e-12);
        prop_assert!(hs.pp.sub(&hs.pp.transpose()).unwrap().frobenius_norm() <= 1e-12);
        prop_assert!(hs.qp.sub(&hs.pq.transpose()).unwrap().frobenius_norm() <= 1e-12);
    }

    #[test]
    fn flows_are_identity_at_zero_step(z in state(4, 3.0), m in 1usize..4) {
        let h = quadratic_model(4).unwrap();
        for v in [Variant::PImplicitSE, Variant::QImplicitSE, Variant::SvPq, Variant::SvQp] {
            // `SchemeConfig` rejects h = 0, so the step functions are called directly.
            let out = match v {
                Variant::PImplicitSE => symperr::integrators::step_p_implicit(&h, &z, 0.0, m),
                Variant::QImplicitSE => symperr::integrators::step_q_implicit(&h, &z, 0.0, m),
                Variant::SvPq => step_sv_pq(&h, &z, 0.0, m, m + 1),
                _ => step_sv_qp(&h, &z, 0.0, m + 1, m),
            }
            .unwrap();
            prop_assert_eq!(&out, &z);
        }
    }

    #[test]
    fn separable_flows_ignore_iteration_count(z in state(3, 2.0), h in 0.01..0.5f64) {
        let model = harmonic_oscillator(3);
        for v in [Variant::PImplicitSE, Variant::QImplicitSE] {
            let one = SchemeConfig::new(v, h, 1, 1, 1).unwrap().step(&model, &z).unwrap();
            for m in 2..5 {
                let many = SchemeConfig::new(v, h, m, m, m).unwrap().step(&model, &z).unwrap();
                prop_assert_eq!(&many, &one);
            }
        }
    }

    #[test]
    fn sv_composition_matches_literal(z in tokamak_state(), m1 in 1usize..4, m2 in 1usize..4, h in 0.02..0.2f64) {
        let model = tokamak_model(PhysicalParams::default()).unwrap();
        let a = step_sv_pq(&model, &z, h, m1, m2).unwrap();
        prop_assert!(a.max_abs_diff(&literal::sv_pq(&model, &z, h, m1, m2).unwrap()) <= 1e-15);
        let b = step_sv_qp(&model, &z, h, m1, m2).unwrap();
        prop_assert!(b.max_abs_diff(&literal::sv_qp(&model, &z, h, m1, m2).unwrap()) <= 1e-15);
    }

    #[test]
    fn jtilde_is_skew_with_a_zero_block(z in tokamak_state(), m in 1usize..4, h in 0.02..0.2f64) {
        let model = tokamak_model(PhysicalParams::default()).unwrap();
        for scheme in [SchemeConfig::p_implicit(h, m).unwrap(), SchemeConfig::q_implicit(h, m).unwrap()] {
            let r = defect_report(&model, &scheme, &z).unwrap();
            prop_assert!(r.zero_block_norm() <= 1e-12);
            prop_assert!(r.skew_residual <= 1e-12 * r.jtilde.frobenius_norm());
        }
    }

    #[test]
    fn jacobians_agree(z in tokamak_state(), m in 1usize..4, h in 0.02..0.2f64) {
        let model = tokamak_model(PhysicalParams::default()).unwrap();
        for v in [Variant::PImplicitSE, Variant::QImplicitSE, Variant::SvPq, Variant::SvQp] {
            let scheme = SchemeConfig::new(v, h, m, m, m + 1).unwrap();
            let ad = flow_jacobian_ad(&model, &scheme, &z).unwrap();
            let an = flow_jacobian_analytic(&model, &scheme, &z).unwrap();
            let fd = finite_difference_jacobian(|s| scheme.step(&model, s), &z, FD_STEP).unwrap();
            prop_assert!(rel(&an, &ad) <= 1e-10, "{v}: analytic vs AD {:e}", rel(&an, &ad));
            prop_assert!(rel(&fd, &ad) <= 1e-5, "{v}: FD vs AD {:e}", rel(&fd, &ad));
        }
    }
}

#[test]
fn symplectic_j_squares_to_minus_identity() {
    for n in 1..=8 {
        let j = symplectic_j(n);
        assert_eq!(j.mat_mul(&j).unwrap(), Matrix::identity(2 * n).scale(-1.0));
    }
}
