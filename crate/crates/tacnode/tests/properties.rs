//! Property tests of the algebraic invariants.

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tacnode::hamiltonian::{
    a0_matrix, constraint_project_with, hamiltonian_expanded, hamiltonian_structured,
    vector_field, PQState,
};
use tacnode::kernel::TacnodeParams;
use tacnode::ode::{AsymptoticData, DATA_ENTRIES};
use tacnode::parametrix::{bessel_parametrix, bessel_region, chf_sector, det, ChfSolver};
use tacnode::specfun::kummer::{kummer_m_scaled, kummer_u_scaled};
use tacnode::specfun::legendre::gauss_legendre_rule;
use tacnode::specfun::Beta;

fn params() -> impl Strategy<Value = TacnodeParams> {
    (0.3..3.0f64, 0.3..3.0f64, -2.0..2.0f64, -2.0..2.0f64, -1.0..1.0f64, 0.0..1.0f64).prop_map(
        |(r1, r2, s1, s2, tau, gamma)| TacnodeParams {
            r1,
            r2,
            s1,
            s2,
            tau,
            gamma,
        },
    )
}

fn state(seed: u64) -> PQState {
    PQState::random(&mut ChaCha8Rng::seed_from_u64(seed), 1.0)
}

fn swap_matrix() -> Matrix4<C64> {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    Matrix4::new(z, o, z, z, o, z, z, z, z, z, z, -o, z, z, -o, z)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauss_legendre_exact_for_low_degree(n in 2usize..40, k in 0u32..6, a in -3.0..0.0f64, w in 0.1..4.0f64) {
        let deg = (2 * n - 1).min(k as usize * 7 + 1) as i32;
        let b = a + w;
        let rule = gauss_legendre_rule(n).unwrap();
        let got = rule.integrate(a, b, |x| x.powi(deg));
        let want = (b.powi(deg + 1) - a.powi(deg + 1)) / (deg + 1) as f64;
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()).powi(deg + 1)));
    }

    #[test]
    fn projection_enforces_both_traces(seed in any::<u64>(), slot in 1usize..=4) {
        let st = state(seed);
        if let Ok(p) = constraint_project_with(&st, slot) {
            let scale = p.max_abs().powi(2).max(1.0);
            prop_assert!(p.trace_a1().norm() <= 1e-13 * scale);
            prop_assert!(p.trace_a2().norm() <= 1e-13 * scale);
            // only the chosen p-slot moves
            for k in 0..6 {
                if k != slot - 1 {
                    prop_assert_eq!(p.p[k], st.p[k]);
                    prop_assert_eq!(p.tp[k], st.tp[k]);
                }
                prop_assert_eq!(p.q[k], st.q[k]);
                prop_assert_eq!(p.tq[k], st.tq[k]);
            }
            // idempotent up to rounding
            let again = constraint_project_with(&p, slot).unwrap();
            prop_assert!(again.axpy(C64::new(-1.0, 0.0), &p).max_abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn hamiltonian_forms_agree(seed in any::<u64>(), p in params(), s in 0.2..20.0f64) {
        let st = state(seed);
        let a = hamiltonian_structured(&st, s, &p);
        let b = hamiltonian_expanded(&st, s, &p);
        prop_assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
    }

    #[test]
    fn a0_conjugation(seed in any::<u64>(), p in params()) {
        let st = state(seed);
        let b = swap_matrix();
        let lhs = a0_matrix(&st.tilde_swap(), &p.swapped());
        let rhs = -(b * a0_matrix(&st, &p) * b);
        prop_assert!((lhs - rhs).camax() <= 1e-14 * (1.0 + lhs.camax()));
    }

    #[test]
    fn swap_invariance(seed in any::<u64>(), p in params(), s in 0.2..20.0f64) {
        let st = state(seed);
        let h = hamiltonian_expanded(&st, s, &p);
        let hs = hamiltonian_expanded(&st.tilde_swap(), s, &p.swapped());
        prop_assert!((h - hs).norm() <= 1e-13 * h.norm().max(1.0));
        let f = vector_field(&st, s, &p).unwrap();
        let fs = vector_field(&st.tilde_swap(), s, &p.swapped()).unwrap().tilde_swap();
        prop_assert!(f.axpy(C64::new(-1.0, 0.0), &fs).max_abs() <= 1e-13 * f.max_abs().max(1.0));
    }

    #[test]
    fn data_maps_are_involutions(vals in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 10)) {
        let mut d = AsymptoticData::zero();
        for ((j, k), (re, im)) in DATA_ENTRIES.iter().zip(&vals) {
            d = d.with(*j, *k, C64::new(*re, *im)).unwrap();
        }
        prop_assert_eq!(d.tilde().tilde(), d);
        prop_assert_eq!(d.dot().dot(), d);
        prop_assert_eq!(d.tilde().dot(), d.dot().tilde());
    }

    #[test]
    fn parametrices_are_unimodular(r in 0.05..30.0f64, a in -3.1..3.1f64, nu in -0.45..0.45f64) {
        let z = C64::from_polar(r, a);
        let b = bessel_parametrix(z, bessel_region(z).unwrap()).unwrap();
        prop_assert!((det(&b.matrix) - 1.0).norm() <= 1e-11);
        let chf = ChfSolver::new(Beta::imaginary(nu)).unwrap();
        let v = chf.eval(z, chf_sector(z).unwrap()).unwrap();
        prop_assert!((det(&v.matrix) - 1.0).norm() <= 1e-11);
    }

    #[test]
    fn kummer_continuous_across_method_seam(phi in -3.1..3.1f64, nu in -0.45..0.45f64, shift in 0usize..2) {
        let a = C64::new(shift as f64, nu);
        let d = 1e-9;
        let zi = C64::from_polar(40.0 - d, phi);
        let zo = C64::from_polar(40.0 + d, phi);
        let (mi, mo) = (kummer_m_scaled(a, zi).unwrap(), kummer_m_scaled(a, zo).unwrap());
        let (ui, uo) = (kummer_u_scaled(a, zi).unwrap(), kummer_u_scaled(a, zo).unwrap());
        prop_assert!((mi - mo).norm() <= 1e-7 * mo.norm(), "M: {mi} vs {mo}");
        prop_assert!((ui - uo).norm() <= 1e-7 * uo.norm(), "U: {ui} vs {uo}");
    }
}

#[test]
fn projection_rejects_bad_slot() {
    let err = constraint_project_with(&state(1), 5).unwrap_err().to_string();
    assert!(err.contains("slot"), "{err}");
}
