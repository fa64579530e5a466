//! Invariants of the integrator and of the large-s initial data.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use tacnode::hamiltonian::{q52_residual, vector_field, PQState};
use tacnode::kernel::TacnodeParams;
use tacnode::ode::{init_large_s, integrate, integrate_fixed, AsymptoticData, ORDER};
use tacnode::specfun::Beta;

fn diff(a: &PQState, b: &PQState) -> f64 {
    a.axpy(C64::new(-1.0, 0.0), b).max_abs()
}

fn symmetric_start(s: f64) -> (TacnodeParams, PQState) {
    let p = TacnodeParams::symmetric(0.5);
    let beta = Beta::from_gamma(0.5).unwrap();
    (p, init_large_s(s, &p, beta, &AsymptoticData::zero()).unwrap())
}

#[test]
fn fixed_step_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = TacnodeParams {
        r1: 1.2,
        r2: 0.9,
        s1: 0.1,
        s2: -0.2,
        tau: 0.3,
        gamma: 0.4,
    };
    let st = PQState::random_constrained(&mut rng, 0.5);
    let exact = integrate_fixed(&st, 3.0, 2.0, 1024, &p).unwrap();
    let e8 = diff(&integrate_fixed(&st, 3.0, 2.0, 8, &p).unwrap(), &exact);
    let e16 = diff(&integrate_fixed(&st, 3.0, 2.0, 16, &p).unwrap(), &exact);
    let ratio = e8 / e16;
    let want = 2f64.powi(ORDER);
    assert!((ratio / want - 1.0).abs() < 0.25, "ratio {ratio}, expected about {want}");
}

#[test]
fn large_s_data_satisfies_constraint() {
    for s in [50.0, 100.0, 200.0, 400.0] {
        let (_, st) = symmetric_start(s);
        let scale = st.max_abs().powi(2);
        assert!(st.trace_a1().norm() <= 1e-14 * scale, "s = {s}");
        assert!(st.trace_a2().norm() <= 1e-14 * scale, "s = {s}");
    }
}

#[test]
fn q52_residual_is_conserved() {
    let (p, st) = symmetric_start(200.0);
    let traj = integrate(&st, 200.0, 150.0, &p, 1e-10).unwrap();
    let r0 = q52_residual(&st, &p);
    let scale = traj.states.iter().map(|s| s.max_abs()).fold(1.0, f64::max);
    for (s, y) in traj.s_grid.iter().zip(&traj.states) {
        let r = q52_residual(y, &p);
        assert!((r - r0).norm() <= 1e-7 * scale, "s = {s}: {r} vs {r0}");
    }
}

#[test]
fn q52_envelope_decays_with_launch_point() {
    // the residual oscillates with the phase, so compare its maximum over one period
    let envelope = |s0: f64| {
        let period = PI / s0.sqrt();
        (0..12)
            .map(|k| {
                let s = s0 + period * k as f64 / 12.0;
                let (p, st) = symmetric_start(s);
                q52_residual(&st, &p).norm()
            })
            .fold(0.0, f64::max)
    };
    let e: Vec<f64> = [50.0, 100.0, 200.0].iter().map(|s| envelope(*s)).collect();
    assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
    assert!(e[2] < 0.1, "{e:?}");
}

#[test]
fn reversibility() {
    let (p, st) = symmetric_start(60.0);
    let tol = 1e-10;
    let a = integrate(&st, 60.0, 55.0, &p, tol).unwrap();
    let b = integrate(&a.last().1, 55.0, 60.0, &p, tol).unwrap();
    let dev = diff(&b.last().1, &st);
    assert!(dev <= 1e3 * tol * st.max_abs(), "{dev:e}");
}

#[test]
fn tolerance_controls_error() {
    let (p, st) = symmetric_start(60.0);
    let reference = integrate(&st, 60.0, 58.0, &p, 1e-12).unwrap().last().1;
    let loose = diff(&integrate(&st, 60.0, 58.0, &p, 1e-6).unwrap().last().1, &reference);
    let tight = diff(&integrate(&st, 60.0, 58.0, &p, 1e-10).unwrap().last().1, &reference);
    assert!(tight < loose, "{tight:e} vs {loose:e}");
}

#[test]
fn rejects_bad_input() {
    let (p, st) = symmetric_start(60.0);
    assert!(integrate(&st, 60.0, 58.0, &p, 1e-2).is_err());
    assert!(integrate(&st, 60.0, 58.0, &p, 1e-14).is_err());
    assert!(vector_field(&st, 0.0, &p).is_err());
    let beta = Beta::from_gamma(0.5).unwrap();
    assert!(init_large_s(100.0, &p.with_gamma(1.0), beta, &AsymptoticData::zero()).is_err());
}
