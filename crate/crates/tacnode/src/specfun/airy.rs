//! Airy function `Ai` and its derivative on the real line.
//!
//! Maclaurin series on `|x| <= 2`.  Beyond that we integrate the
//! Laplace-type representation
//!
//! ```text
//! Ai(x)  =  e^{-zeta} x^{-1/4} / (2 sqrt(pi) Gamma(5/6)) * int_0^inf e^{-u} u^{-1/6} (1 + u/(2 zeta))^{-1/6} du
//! Ai'(x) = -e^{-zeta} x^{ 1/4} / (2 sqrt(pi) Gamma(7/6)) * int_0^inf e^{-u} u^{ 1/6} (1 + u/(2 zeta))^{ 1/6} du
//! ```
//!
//! with `zeta = (2/3) x^{3/2}`.  After `u = t^6` the integrand is even and
//! decays like `exp(-t^6)`, so a plain trapezoid rule is spectrally accurate.
//! For `x < 0` the same formula on the ray `arg x = pi` gives half of the
//! (real) answer.

use crate::{Error, Result, C64};

const AI0: f64 = 0.355_028_053_887_817_24;
const AIP0: f64 = 0.258_819_403_792_806_8;
// 1/(2 sqrt(pi) Gamma(5/6)), 1/(2 sqrt(pi) Gamma(7/6))
const PRE_AI: f64 = 0.249_909_667_899_743_99;
const PRE_AIP: f64 = 0.304_073_421_290_121_99;

const SERIES_CUT: f64 = 2.0;
const MIN_X: f64 = -1.0e4;

fn series(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    let (mut f, mut g) = (1.0, x);
    let (mut fp, mut gp) = (0.5 * x * x, 1.0);
    let (mut tf, mut tg, mut tfp, mut tgp) = (1.0, x, 0.5 * x * x, 1.0);
    for k in 0..60 {
        let k3 = 3.0 * k as f64;
        tf *= x3 / ((k3 + 2.0) * (k3 + 3.0));
        tg *= x3 / ((k3 + 3.0) * (k3 + 4.0));
        tgp *= x3 / ((k3 + 1.0) * (k3 + 3.0));
        // f' starts at k = 1
        tfp *= x3 / ((k3 + 3.0) * (k3 + 5.0));
        f += tf;
        g += tg;
        fp += tfp;
        gp += tgp;
        if tf.abs() + tg.abs() + tfp.abs() + tgp.abs() < 1e-18 {
            break;
        }
    }
    (AI0 * f - AIP0 * g, AI0 * fp - AIP0 * gp)
}

// trapezoid for int_0^inf 6 t^{5+6 nu} e^{-t^6} (1 + t^6/(2 zeta))^nu dt,
// nu = -1/6 and nu = +1/6 together
fn laplace_integral(zeta: C64) -> (C64, C64) {
    const H: f64 = 0.04;
    const STEPS: usize = 65; // t in [0, 2.6]
    let inv2z = (2.0 * zeta).inv();
    let mut a = C64::new(0.0, 0.0);
    let mut b = C64::new(0.0, 0.0);
    for j in 1..=STEPS {
        let t = j as f64 * H;
        let t2 = t * t;
        let u = t2 * t2 * t2;
        let e = 6.0 * (-u).exp();
        let l = (C64::new(1.0, 0.0) + u * inv2z).ln() / 6.0;
        a += (-l).exp() * (e * t2 * t2);
        b += l.exp() * (e * u);
    }
    (a * H, b * H)
}

// real version of `laplace_integral` for zeta > 0
fn laplace_integral_real(zeta: f64) -> (f64, f64) {
    const H: f64 = 0.04;
    const STEPS: usize = 65;
    let inv2z = 0.5 / zeta;
    let (mut a, mut b) = (0.0, 0.0);
    for j in 1..=STEPS {
        let t = j as f64 * H;
        let t2 = t * t;
        let u = t2 * t2 * t2;
        let e = 6.0 * (-u).exp();
        let f = (1.0 + u * inv2z).powf(1.0 / 6.0);
        // nu = -1/6: t^4 f^{-1};  nu = 1/6: t^6 f
        a += e * t2 * t2 / f;
        b += e * u * f;
    }
    (a * H, b * H)
}

fn quadrature(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let z = 2.0 / 3.0 * ax.powf(1.5);
    if x > 0.0 {
        let e = (-z).exp();
        let q = ax.powf(0.25);
        let (ia, ib) = laplace_integral_real(z);
        (PRE_AI * e / q * ia, -PRE_AIP * e * q * ib)
    } else {
        let zeta = C64::new(0.0, -z);
        let e = C64::new(0.0, z).exp();
        let q = C64::from_polar(ax.powf(0.25), std::f64::consts::FRAC_PI_4);
        let (ia, ib) = laplace_integral(zeta);
        let a = e / q * ia * PRE_AI;
        let b = -e * q * ib * PRE_AIP;
        (2.0 * a.re, 2.0 * b.re)
    }
}

/// `(Ai(x), Ai'(x))`.
pub fn airy_ai_pair(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("Airy argument {x} not finite")));
    }
    if x < MIN_X {
        return Err(Error::Domain(format!(
            "Airy argument {x} below {MIN_X}: oscillation not resolvable"
        )));
    }
    if x.abs() <= SERIES_CUT {
        Ok(series(x))
    } else if x > 105.0 {
        Ok((0.0, 0.0))
    } else {
        Ok(quadrature(x))
    }
}

/// `Ai(x)` for arguments known to be in range; panics otherwise.
pub(crate) fn ai(x: f64) -> f64 {
    airy_ai_pair(x).expect("Airy argument in range").0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn origin() {
        let (a, b) = airy_ai_pair(0.0).unwrap();
        assert!((a - 0.355_028_053_887_817_24).abs() < 1e-16);
        assert!((b + 0.258_819_403_792_806_8).abs() < 1e-16);
    }

    #[test]
    fn reference_values() {
        // mpmath airyai(x), airyai(x, 1)
        let table = [
            (5.0, 1.083_444_281_360_744_2e-4, -2.474_138_908_684_624_8e-4),
            (-3.0, -0.378_814_293_677_658_07, 0.314_583_769_216_598_8),
            (-10.0, 0.040_241_238_486_443_19, 0.996_265_044_132_790_1),
            (-30.0, -0.087_968_188_456_842_16, 1.228_620_602_637_485_1),
            (1.9, 0.040_594_420_031_529_502, -0.060_436_781_785_756_547),
            (2.1, 0.029_952_602_115_866_52, -0.046_455_994_032_674_59),
            (-2.5, -0.112_325_067_692_966_09, 0.678_852_734_264_794_4),
            (10.0, 1.104_753_255_289_868_6e-10, -3.520_633_676_738_923_6e-10),
            (25.0, 8.116_026_824_691_386_7e-38, -4.066_089_337_243_281e-37),
        ];
        for (x, a, b) in table {
            let (ra, rb) = airy_ai_pair(x).unwrap();
            assert!(rel(ra, a) < 1e-12, "Ai({x}): {ra} vs {a}");
            assert!(rel(rb, b) < 1e-12, "Ai'({x}): {rb} vs {b}");
        }
    }

    #[test]
    fn decay_and_domain() {
        let (a9, _) = airy_ai_pair(9.0).unwrap();
        let (a10, _) = airy_ai_pair(10.0).unwrap();
        assert!(a10 > 0.0 && a9 > a10);
        assert!(airy_ai_pair(-2.0e4).is_err());
        assert!(airy_ai_pair(f64::NAN).is_err());
    }

    #[test]
    fn seam_continuity() {
        let eps = 1e-12;
        let (a, b) = airy_ai_pair(2.0).unwrap();
        let (c, d) = quadrature(2.0);
        assert!(rel(a, c) < 1e-13 && rel(b, d) < 1e-13);
        let (a, b) = airy_ai_pair(-2.0 - eps).unwrap();
        let (c, d) = series(-2.0);
        assert!(rel(a, c) < 1e-11 && rel(b, d) < 1e-11);
    }
}
