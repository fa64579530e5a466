//! Kernel and determinant properties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tacnode::kernel::{
    airy_kernel, gap_log_probability, small_s_series_check, tacnode_grid, tacnode_kernel, KernelEvalConfig,
    TacnodeParams,
};
use tacnode::quad::{build_grid_on, eigenvalues, fredholm_log_det_doubled, Domain};

fn cfg() -> KernelEvalConfig {
    KernelEvalConfig::default()
}

#[test]
fn tracy_widom_values() {
    // F_2(s) = det(I - K_Ai) on (s, inf); published values F_2(0) = 0.96937, F_2(-2) = 0.41322
    for (s, want) in [(0.0, 0.969_372), (-2.0, 0.413_224)] {
        let r = fredholm_log_det_doubled(|x, y| Ok(airy_kernel(x, y)), Domain::half_line(s), 60, 1.0).unwrap();
        assert!((r.log_det.exp() - want).abs() < 2e-6, "s = {s}: {}", r.log_det.exp());
        assert!(r.doubling_delta < 1e-12);
    }
}

#[test]
fn kernel_does_not_depend_on_gamma() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let (x, y) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        let a = tacnode_kernel(x, y, &TacnodeParams::symmetric(0.2), &cfg()).unwrap();
        let b = tacnode_kernel(x, y, &TacnodeParams::symmetric(0.9), &cfg()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn reflection_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = TacnodeParams::symmetric(0.5);
    for _ in 0..20 {
        let (x, y) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let a = tacnode_kernel(x, y, &p, &cfg()).unwrap();
        let b = tacnode_kernel(-x, -y, &p, &cfg()).unwrap();
        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "({x}, {y}): {a} vs {b}");
    }
}

#[test]
fn inner_grid_self_convergence() {
    let p = TacnodeParams::symmetric(0.5);
    let fine = KernelEvalConfig {
        airy_nodes: 256,
        ..cfg()
    };
    for (x, y) in [(0.0, 0.0), (1.3, -0.7), (-3.0, 2.5)] {
        let a = tacnode_kernel(x, y, &p, &cfg()).unwrap();
        let b = tacnode_kernel(x, y, &p, &fine).unwrap();
        assert!((a - b).abs() <= 1e-8, "({x}, {y}): {a} vs {b}");
    }
}

#[test]
fn reference_values() {
    // from an independent double-precision implementation with a different
    // Airy routine, inner cut and grid sizes
    let cases = [
        (0.5, 4.0, -2.202_763_745_9),
        (0.5, 6.0, -4.162_313_594_0),
        (0.5, 8.0, -6.485_203_979_1),
        (1.0, 4.0, -11.253_580_142_8),
        (1.0, 5.0, -21.476_877_925_9),
        (1.0, 6.0, -36.689_468_102_1),
    ];
    for (g, s, want) in cases {
        let r = gap_log_probability(s, &TacnodeParams::symmetric(g), 48, &cfg()).unwrap();
        assert!((r.log_det - want).abs() < 1e-9 * want.abs(), "gamma {g}, s {s}: {}", r.log_det);
        assert!(r.doubling_delta < 1e-10);
    }
}

#[test]
fn monotone_in_s_and_gamma() {
    let p = TacnodeParams::symmetric(0.5);
    let f2 = gap_log_probability(2.0, &p, 32, &cfg()).unwrap().log_det;
    let f3 = gap_log_probability(3.0, &p, 32, &cfg()).unwrap().log_det;
    assert!(f2 >= f3);
    let mut prev = 0.0;
    for g in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let f = gap_log_probability(3.0, &p.with_gamma(g), 32, &cfg()).unwrap().log_det;
        assert!(f <= prev, "gamma {g}");
        prev = f;
    }
}

#[test]
fn operator_spectrum_in_unit_interval() {
    let grid = tacnode_grid(5.0, &TacnodeParams::symmetric(0.5), 64, &cfg()).unwrap();
    let ev = eigenvalues(&grid);
    assert!(ev[0] >= -1e-8 && ev[ev.len() - 1] <= 1.0 + 1e-8, "{} {}", ev[0], ev[ev.len() - 1]);
}

#[test]
fn small_s_behaviour() {
    let p = TacnodeParams::symmetric(0.5);
    let (_, series, gap) = small_s_series_check(0.05, &p, 24, &cfg()).unwrap();
    assert!(gap <= 1e-6 * series.abs());
    assert_eq!(small_s_series_check(0.05, &p.with_gamma(0.0), 24, &cfg()).unwrap(), (0.0, 0.0, 0.0));
    assert!(small_s_series_check(0.2, &p, 24, &cfg()).is_err());
    let a = gap_log_probability(0.01, &p, 16, &cfg()).unwrap().log_det / 0.01;
    let b = gap_log_probability(0.02, &p, 16, &cfg()).unwrap().log_det / 0.02;
    assert!((a - b).abs() < 0.05 * a.abs(), "{a} {b}");
}

#[test]
fn airy_grid_building_block() {
    // trace of the weighted half-line matrix equals the quadrature of the diagonal
    let g = build_grid_on(|x, y| Ok(airy_kernel(x, y)), Domain::half_line(-1.0), 80).unwrap();
    let direct: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * airy_kernel(*x, *x)).sum();
    assert!((g.sym_matrix.trace() - direct).abs() < 1e-12);
}
