//! Modified Bessel functions `I_0, I_1, K_0, K_1` for `Re w >= 0`.
//!
//! * small `|w|`: power series (the `K` series uses compensated summation,
//!   the log term cancels heavily near `w = 0`);
//! * `I_n`, larger `|w|`: periodic trapezoid rule for
//!   `(1/pi) int_0^pi e^{w cos t} cos(n t) dt`;
//! * `K_n`, larger `|w|`: `(1/2) int cosh(n t) e^{-w cosh t} dt` along the
//!   steepest-descent-like path `t = u - i arg(w) tanh(u)`.
//!
//! Scaled variants (`e^{-w} I`, `e^{w} K`) avoid overflow for large `Re w`.

use super::gamma::EULER_GAMMA;
use crate::{Error, Result, C64};
use std::f64::consts::PI;

/// Scaled values `[e^{-w} I0, e^{-w} I1, e^{w} K0, e^{w} K1]`.
#[derive(Debug, Clone, Copy)]
pub struct BesselIK {
    pub i0: C64,
    pub i1: C64,
    pub k0: C64,
    pub k1: C64,
}

#[derive(Default, Clone, Copy)]
struct Neumaier {
    sum: C64,
    comp: C64,
}

impl Neumaier {
    fn add(&mut self, x: C64) {
        let re = two_sum(self.sum.re, x.re);
        let im = two_sum(self.sum.im, x.im);
        self.sum = C64::new(re.0, im.0);
        self.comp += C64::new(re.1, im.1);
    }
    fn value(&self) -> C64 {
        self.sum + self.comp
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let c = if a.abs() >= b.abs() {
        (a - s) + b
    } else {
        (b - s) + a
    };
    (s, c)
}

fn series_i(w: C64) -> (C64, C64) {
    let t = w * w * 0.25;
    let mut a0 = C64::new(1.0, 0.0);
    let mut a1 = C64::new(1.0, 0.0);
    let (mut i0, mut i1) = (a0, a1);
    for k in 1..200 {
        let kf = k as f64;
        a0 *= t / (kf * kf);
        a1 *= t / (kf * (kf + 1.0));
        i0 += a0;
        i1 += a1;
        if a0.norm() < 1e-17 * i0.norm() && a1.norm() < 1e-17 * i1.norm() {
            break;
        }
    }
    (i0, i1 * w * 0.5)
}

fn series_k(w: C64, i0: C64, i1: C64) -> (C64, C64) {
    let t = w * w * 0.25;
    let lw = (w * 0.5).ln();
    let mut s0 = Neumaier::default();
    s0.add(-(lw + EULER_GAMMA) * i0);
    let mut s1 = Neumaier::default();
    let mut a0 = C64::new(1.0, 0.0);
    let mut a1 = C64::new(1.0, 0.0);
    let mut harm = 0.0;
    // k = 0 term of the K1 sum: psi(1) + psi(2) = 1 - 2 gamma
    s1.add(a1 * (1.0 - 2.0 * EULER_GAMMA));
    for k in 1..200 {
        let kf = k as f64;
        harm += 1.0 / kf;
        a0 *= t / (kf * kf);
        a1 *= t / (kf * (kf + 1.0));
        s0.add(a0 * harm);
        let psi_sum = 2.0 * (harm - EULER_GAMMA) + 1.0 / (kf + 1.0);
        let term = a1 * psi_sum;
        s1.add(term);
        if a0.norm() * harm < 1e-18 && term.norm() < 1e-18 {
            break;
        }
    }
    let k1 = w.inv() + lw * i1 - w * 0.25 * s1.value();
    (s0.value(), k1)
}

fn trapezoid_i_scaled(w: C64) -> (C64, C64) {
    let n = (2.0 * w.norm() + 40.0).max(32.0).ceil() as usize;
    let h = PI / n as f64;
    let mut s0 = C64::new(0.0, 0.0);
    let mut s1 = C64::new(0.0, 0.0);
    for j in 0..=n {
        let th = j as f64 * h;
        let wt = if j == 0 || j == n { 0.5 } else { 1.0 };
        let e = (w * (th.cos() - 1.0)).exp() * wt;
        s0 += e;
        s1 += e * th.cos();
    }
    (s0 * (h / PI), s1 * (h / PI))
}

fn path_k_scaled(w: C64) -> (C64, C64) {
    let th = w.arg();
    let aw = w.norm();
    let umax = ((120.0 / aw).ln() + 1.0).max(2.0);
    let h = 0.03;
    let m = (umax / h).ceil() as i64;
    let mut s0 = C64::new(0.0, 0.0);
    let mut s1 = C64::new(0.0, 0.0);
    for j in -m..=m {
        let u = j as f64 * h;
        let t = C64::new(u, -th * u.tanh());
        let sech = 1.0 / u.cosh();
        let dt = C64::new(1.0, -th * sech * sech);
        let ch = t.cosh();
        let e = (-w * (ch - 1.0)).exp() * dt;
        s0 += e;
        s1 += e * ch;
    }
    (s0 * (0.5 * h), s1 * (0.5 * h))
}

/// Scaled `I_0, I_1, K_0, K_1` at complex `w` with `Re w >= 0`, `w != 0`.
pub fn bessel_ik01_scaled(w: C64) -> Result<BesselIK> {
    if w.re < -1e-14 * w.norm() || w.norm() == 0.0 || !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::Domain(format!(
            "Bessel argument {w} must satisfy Re w >= 0, w != 0"
        )));
    }
    let aw = w.norm();
    let ew = (-w).exp();
    let (i0s, i1s) = if aw <= 2.0 {
        let (a, b) = series_i(w);
        (a * ew, b * ew)
    } else {
        trapezoid_i_scaled(w)
    };
    let (k0s, k1s) = if aw < 1.0 {
        let (a, b) = series_i(w);
        let (k0, k1) = series_k(w, a, b);
        let e = w.exp();
        (k0 * e, k1 * e)
    } else {
        path_k_scaled(w)
    };
    Ok(BesselIK {
        i0: i0s,
        i1: i1s,
        k0: k0s,
        k1: k1s,
    })
}

/// Unscaled `[I0, I1, K0, K1]` at complex `w`.
pub fn bessel_ik01(w: C64) -> Result<[C64; 4]> {
    let s = bessel_ik01_scaled(w)?;
    let e = w.exp();
    let ei = (-w).exp();
    let out = [s.i0 * e, s.i1 * e, s.k0 * ei, s.k1 * ei];
    if out.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Domain(format!("Bessel values overflow at w = {w}")));
    }
    Ok(out)
}

/// `(I0(w), K0(w), I0'(w), K0'(w))` for real `w > 0`.
pub fn modified_bessel_i0k0(w: f64) -> Result<(f64, f64, f64, f64)> {
    if !(w > 0.0) {
        return Err(Error::Domain(format!("Bessel argument {w} must be > 0")));
    }
    let v = bessel_ik01(C64::new(w, 0.0))?;
    Ok((v[0].re, v[2].re, v[1].re, -v[3].re))
}

/// `(e^{-w} I0, e^{w} K0, e^{-w} I0', e^{w} K0')` for real `w > 0`; finite for
/// all positive `w`.
pub fn modified_bessel_i0k0_scaled(w: f64) -> Result<(f64, f64, f64, f64)> {
    if !(w > 0.0) {
        return Err(Error::Domain(format!("Bessel argument {w} must be > 0")));
    }
    let v = bessel_ik01_scaled(C64::new(w, 0.0))?;
    Ok((v.i0.re, v.k0.re, v.i1.re, -v.k1.re))
}
