//! The Bessel and confluent hypergeometric (CHF) model RH problems: explicit
//! solutions, jump residuals, behaviour at infinity and at the origin.
//!
//! Bessel rays: `Sigma_1` at `arg z = 2pi/3`, `Sigma_2` on the negative axis,
//! `Sigma_3` at `-2pi/3`, all oriented towards the origin.  Region I is
//! `|arg z| < 2pi/3`, II lies above the negative axis, III below.
//!
//! CHF rays: `Sigma_j` at angles `0, pi/3, 2pi/3, pi, -2pi/3, -pi/3`; the
//! first, second and sixth point outwards, the others inwards.  Sector `j`
//! lies counter-clockwise of `Sigma_j`.  The solution in sector 2 is
//!
//! ```text
//! e^{-zeta/2} [[G(1-b) e^{-i pi b/2} M(1-b, zeta), -G(1-b) e^{-i pi b/2}/G(b) U(1-b, zeta)],
//!              [G(1+b) e^{ i pi b/2} M(-b, zeta),   e^{i pi b/2} U(-b, zeta)]]
//! ```
//!
//! with `zeta = -i z`; the other sectors follow by right multiplication with
//! inverse jumps.  Below the real axis the `U` column is rewritten through
//! `e^{zeta/2} U(., -zeta)` so that no cancellation occurs at large `|z|`.

use crate::specfun::bessel::bessel_ik01_scaled;
use crate::specfun::gamma::{digamma, gamma, rgamma, EULER_GAMMA};
use crate::specfun::kummer::{kummer_m_scaled, kummer_u_scaled};
use crate::specfun::Beta;
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector, Matrix2};
use serde::Serialize;
use std::f64::consts::PI;

/// 2x2 complex matrix.
pub type M2 = Matrix2<C64>;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn m2(a: C64, b: C64, cc: C64, d: C64) -> M2 {
    M2::new(a, b, cc, d)
}

/// Largest entry modulus.
pub fn max_abs(m: &M2) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Regions of the Bessel problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BesselRegion {
    I,
    II,
    III,
}

/// A sector of the CHF problem, `1..=6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChfSector(u8);

impl ChfSector {
    pub fn new(j: u8) -> Result<Self> {
        if (1..=6).contains(&j) {
            Ok(Self(j))
        } else {
            Err(Error::Sector(format!("CHF sector {j} outside 1..=6")))
        }
    }

    pub fn index(&self) -> u8 {
        self.0
    }

    /// Opening angles `(lo, hi)` of the sector.
    pub fn angles(&self) -> (f64, f64) {
        let t = PI / 3.0;
        match self.0 {
            1 => (0.0, t),
            2 => (t, 2.0 * t),
            3 => (2.0 * t, PI),
            4 => (-PI, -2.0 * t),
            5 => (-2.0 * t, -t),
            _ => (-t, 0.0),
        }
    }
}

/// Region tag of a parametrix value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    Bessel(BesselRegion),
    Chf(ChfSector),
}

/// A parametrix evaluated at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParametrixValue {
    pub matrix: M2,
    pub region: Region,
    pub z: C64,
}

// ---------------------------------------------------------------- Bessel

/// Region of `z` (off the rays).
pub fn bessel_region(z: C64) -> Result<BesselRegion> {
    let a = z.arg();
    let t = 2.0 * PI / 3.0;
    if z.norm() == 0.0 || a.abs() == t || (z.im == 0.0 && z.re < 0.0) {
        return Err(Error::Sector(format!("{z} lies on a Bessel jump ray")));
    }
    Ok(if a.abs() < t {
        BesselRegion::I
    } else if a > 0.0 {
        BesselRegion::II
    } else {
        BesselRegion::III
    })
}

// Phi^(Bes) e^{-sqrt(z) sigma3}, assembled from scaled Bessel functions.
fn bessel_scaled(z: C64, region: BesselRegion) -> Result<M2> {
    let w = z.sqrt();
    let b = bessel_ik01_scaled(w)?;
    let col1 = [b.i0, PI * I * w * b.i1];
    let col2 = [I / PI * b.k0, w * b.k1];
    let e2 = (-2.0 * w).exp();
    let sgn = match region {
        BesselRegion::I => 0.0,
        BesselRegion::II => -1.0,
        BesselRegion::III => 1.0,
    };
    Ok(m2(
        col1[0] + sgn * col2[0] * e2,
        col2[0],
        col1[1] + sgn * col2[1] * e2,
        col2[1],
    ))
}

fn check_bessel_region(z: C64, region: BesselRegion) -> Result<()> {
    let actual = bessel_region(z)?;
    if actual != region {
        return Err(Error::Sector(format!(
            "{z} lies in Bessel region {actual:?}, not {region:?}"
        )));
    }
    Ok(())
}

/// The Bessel parametrix in an explicitly named region.
pub fn bessel_parametrix(z: C64, region: BesselRegion) -> Result<ParametrixValue> {
    check_bessel_region(z, region)?;
    let s = bessel_scaled(z, region)?;
    let e = z.sqrt().exp();
    let m = m2(s[(0, 0)] * e, s[(0, 1)] / e, s[(1, 0)] * e, s[(1, 1)] / e);
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Domain(format!("Bessel parametrix overflows at {z}")));
    }
    Ok(ParametrixValue {
        matrix: m,
        region: Region::Bessel(region),
        z,
    })
}

/// Jump matrix on Bessel ray `j`.
pub fn bessel_jump(j: usize) -> Result<M2> {
    match j {
        1 | 3 => Ok(m2(c(1.0), c(0.0), c(1.0), c(1.0))),
        2 => Ok(m2(c(0.0), c(1.0), c(-1.0), c(0.0))),
        _ => Err(Error::Sector(format!("Bessel ray {j} outside 1..=3"))),
    }
}

/// Offset used for boundary values.
pub const BOUNDARY_DELTA: f64 = 1e-7;

// limit of f(delta) as delta -> 0 from f(delta), f(delta/2)
fn richardson<F: Fn(f64) -> Result<M2>>(f: F) -> Result<M2> {
    let a = f(BOUNDARY_DELTA)?;
    let b = f(0.5 * BOUNDARY_DELTA)?;
    Ok(b * c(2.0) - a)
}

fn rotate(z: C64, d: f64) -> C64 {
    z * C64::from_polar(1.0, d)
}

/// `||Phi_+ - Phi_- J||_inf / max(1, ||Phi_-||)` on Bessel ray `j` at radius `r`.
pub fn bessel_jump_residual(j: usize, r: f64) -> Result<f64> {
    let jm = bessel_jump(j)?;
    // (angle, region on + side, region on - side, + side is counter-clockwise)
    let (ang, rp, rm, plus_ccw) = match j {
        1 => (2.0 * PI / 3.0, BesselRegion::I, BesselRegion::II, false),
        2 => (PI, BesselRegion::II, BesselRegion::III, false),
        _ => (-2.0 * PI / 3.0, BesselRegion::III, BesselRegion::I, false),
    };
    let z = C64::from_polar(r, ang);
    let sp = if plus_ccw { 1.0 } else { -1.0 };
    let phi_p = richardson(|d| Ok(bessel_parametrix(rotate(z, sp * d), rp)?.matrix))?;
    let phi_m = richardson(|d| Ok(bessel_parametrix(rotate(z, -sp * d), rm)?.matrix))?;
    Ok(max_abs(&(phi_p - phi_m * jm)) / max_abs(&phi_m).max(1.0))
}

/// Deviations of `Phi^(Bes)` from its behaviour at infinity: `(leading, corrected)`
/// where `corrected` includes the `1/(8 sqrt z)` term.  Both are entrywise
/// maxima of `N(z)^{-1} Phi e^{-sqrt(z) sigma3} - (I [+ correction])`.
pub fn bessel_asymptotic_deviation(z: C64) -> Result<(f64, f64)> {
    let region = bessel_region(z)?;
    let s = bessel_scaled(z, region)?;
    let q = (c(PI * PI) * z).powf(0.25);
    let inv_pref = {
        // ((pi^2 z)^{-sigma3/4} [[1,i],[i,1]]/sqrt2)^{-1} = [[1,-i],[-i,1]]/sqrt2 (pi^2 z)^{sigma3/4}
        let a = m2(c(1.0), -I, -I, c(1.0)) / c(std::f64::consts::SQRT_2);
        a * m2(q, c(0.0), c(0.0), q.inv())
    };
    let n = inv_pref * s;
    let id = M2::identity();
    let corr = m2(c(-1.0), -2.0 * I, -2.0 * I, c(1.0)) / (8.0 * z.sqrt());
    Ok((max_abs(&(n - id)), max_abs(&(n - id - corr))))
}

// ---------------------------------------------------------------- CHF

/// Sector of `z` (off the rays).
pub fn chf_sector(z: C64) -> Result<ChfSector> {
    if z.norm() == 0.0 {
        return Err(Error::Sector("z = 0 is the CHF singular point".into()));
    }
    let a = z.arg();
    for j in 1..=6 {
        let s = ChfSector(j);
        let (lo, hi) = s.angles();
        if a > lo && a < hi {
            return Ok(s);
        }
    }
    Err(Error::Sector(format!("{z} lies on a CHF jump ray")))
}

/// Jump matrices `J_1..J_6`.
pub fn chf_jump(beta: Beta, j: usize) -> Result<M2> {
    let ep = (I * PI * beta.value).exp();
    let em = (-I * PI * beta.value).exp();
    let (o, z) = (c(1.0), c(0.0));
    match j {
        1 => Ok(m2(z, em, -ep, z)),
        2 | 6 => Ok(m2(o, z, ep, o)),
        3 | 5 => Ok(m2(o, z, em, o)),
        4 => Ok(m2(z, ep, -em, z)),
        _ => Err(Error::Sector(format!("CHF ray {j} outside 1..=6"))),
    }
}

fn inv(m: &M2) -> M2 {
    // unimodular jumps: adjugate
    let d = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    m2(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / d
}

/// Constants of the explicit CHF solution for one `beta`.
#[derive(Debug, Clone, Copy)]
pub struct ChfSolver {
    beta: Beta,
    a_coef: C64,
    b_coef: C64,
    c12: C64,
    w2: C64,
    p: [M2; 6],
    // lower half plane: Phi_S = [E, W] q_S
    q: [M2; 6],
}

impl ChfSolver {
    pub fn new(beta: Beta) -> Result<Self> {
        let b = beta.value;
        if b.re != 0.0 || b.im.abs() >= 0.5 {
            return Err(Error::Domain(format!(
                "CHF parametrix needs Re beta = 0 and |Im beta| < 1/2, got {b}"
            )));
        }
        let one = c(1.0);
        let eh = (I * PI * b / 2.0).exp();
        let g1m = gamma(one - b);
        let a_coef = g1m / eh;
        let b_coef = gamma(one + b) * eh;
        let c12 = -a_coef * rgamma(b);
        let w2 = gamma(one + b) * eh * rgamma(-b);
        let j = |k| chf_jump(beta, k).map(|m| inv(&m));
        let (j1, j2, j3, j4, j6) = (j(1)?, j(2)?, j(3)?, j(4)?, j(6)?);
        let id = M2::identity();
        // sector products P_S with Phi_S = Phi_T P_S (sector 5 from its upper half)
        let p = [j2, id, j3, j3 * j4, j2 * j1 * j6, j2 * j1];
        // tri(sigma) p_S in closed form: a rounding error in the (1, 2) entry
        // would mix the dominant column into the recessive one
        let tri = |e: C64| m2(one, c(0.0), e, one);
        let q = [
            M2::zeros(),
            M2::zeros(),
            M2::zeros(),
            tri((-I * PI * b).exp()),
            M2::identity(),
            tri((I * PI * b).exp()),
        ];
        Ok(Self {
            beta,
            a_coef,
            b_coef,
            c12,
            w2,
            p,
            q,
        })
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    /// The sector-2 formula continued to the plane cut along the negative
    /// imaginary axis.
    pub fn phi_top(&self, z: C64) -> Result<M2> {
        let b = self.beta.value;
        let zeta = -I * z;
        let one = c(1.0);
        let m1 = kummer_m_scaled(one - b, zeta)?;
        let m2_ = kummer_m_scaled(-b, zeta)?;
        let u1 = kummer_u_scaled(one - b, zeta)?;
        let u2 = kummer_u_scaled(-b, zeta)?;
        let eh = (I * PI * b / 2.0).exp();
        Ok(m2(self.a_coef * m1, self.c12 * u1, self.b_coef * m2_, eh * u2))
    }

    fn e_col(&self, zeta: C64) -> Result<[C64; 2]> {
        let b = self.beta.value;
        Ok([
            self.a_coef * kummer_m_scaled(c(1.0) - b, zeta)?,
            self.b_coef * kummer_m_scaled(-b, zeta)?,
        ])
    }

    /// `Phi^(CHF)(z)` in the given sector.
    pub fn eval(&self, z: C64, sector: ChfSector) -> Result<ParametrixValue> {
        let actual = chf_sector(z)?;
        if actual != sector {
            return Err(Error::Sector(format!(
                "{z} lies in CHF sector {}, not {}",
                actual.0, sector.0
            )));
        }
        let k = (sector.0 - 1) as usize;
        let matrix = if z.im >= 0.0 {
            self.phi_top(z)? * self.p[k]
        } else {
            let b = self.beta.value;
            let zeta = -I * z;
            let e = self.e_col(zeta)?;
            let eh = (I * PI * b / 2.0).exp();
            let w = [
                -kummer_u_scaled(b, -zeta)? / eh,
                self.w2 * kummer_u_scaled(c(1.0) + b, -zeta)?,
            ];
            m2(e[0], w[0], e[1], w[1]) * self.q[k]
        };
        if matrix.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Domain(format!("CHF parametrix overflows at {z}")));
        }
        Ok(ParametrixValue {
            matrix,
            region: Region::Chf(sector),
            z,
        })
    }

    /// `||Phi_+ - Phi_- J_j|| / max(1, ||Phi_-||)` on ray `j` at radius `r`.
    pub fn jump_residual(&self, j: usize, r: f64) -> Result<f64> {
        let jm = chf_jump(self.beta, j)?;
        let t = PI / 3.0;
        // (angle, sector on the + side, sector on the - side, + side counter-clockwise)
        let (ang, sp, sm, ccw) = match j {
            1 => (0.0, 1, 6, true),
            2 => (t, 2, 1, true),
            3 => (2.0 * t, 2, 3, false),
            4 => (PI, 3, 4, false),
            5 => (-2.0 * t, 4, 5, false),
            _ => (-t, 6, 5, true),
        };
        let z = C64::from_polar(r, ang);
        let dir = if ccw { 1.0 } else { -1.0 };
        let phi_p = richardson(|d| Ok(self.eval(rotate(z, dir * d), ChfSector(sp))?.matrix))?;
        let phi_m = richardson(|d| Ok(self.eval(rotate(z, -dir * d), ChfSector(sm))?.matrix))?;
        Ok(max_abs(&(phi_p - phi_m * jm)) / max_abs(&phi_m).max(1.0))
    }

    /// `max |Phi C^{-1} e^{i z sigma3/2} z^{beta sigma3} - I|`, with
    /// `arg z in (-pi/2, 3pi/2]` for the power.
    pub fn asymptotic_deviation(&self, z: C64) -> Result<f64> {
        let sector = chf_sector(z)?;
        let phi = self.eval(z, sector)?.matrix;
        let b = self.beta.value;
        let mut a = z.arg();
        if a <= -PI / 2.0 {
            a += 2.0 * PI;
        }
        let ep = (I * PI * b).exp();
        let em = (-I * PI * b).exp();
        let (o, zz) = (c(1.0), c(0.0));
        let cm = if a > 0.0 && a < PI {
            M2::identity()
        } else if a > PI {
            m2(zz, -ep, em, zz)
        } else {
            m2(zz, -em, ep, zz)
        };
        let _ = o;
        let lz = C64::new(z.norm().ln(), a);
        let d1 = (I * z / 2.0 + b * lz).exp();
        let d2 = (-I * z / 2.0 - b * lz).exp();
        let n = phi * inv(&cm) * m2(d1, zz, zz, d2);
        Ok(max_abs(&(n - M2::identity())))
    }

    /// `Phi_top(z) e^{-beta pi i sigma3/2} [[1, (gamma/2 pi i) ln(-i z)], [0, 1]]`,
    /// which is analytic at the origin.
    pub fn origin_regular_part(&self, z: C64) -> Result<M2> {
        let b = self.beta.value;
        let g = self.beta.gamma();
        let eh = (I * PI * b / 2.0).exp();
        let phi = self.phi_top(z)?;
        let d = m2(eh.inv(), c(0.0), c(0.0), eh);
        let l = m2(c(1.0), g / (2.0 * PI * I) * (-I * z).ln(), c(0.0), c(1.0));
        Ok(phi * d * l)
    }
}

/// `Phi^(CHF)(z; beta)` in the given sector.
pub fn chf_parametrix(z: C64, beta: Beta, sector: ChfSector) -> Result<ParametrixValue> {
    ChfSolver::new(beta)?.eval(z, sector)
}

/// `(Upsilon_0, (Upsilon_1)_21)` of the expansion at the origin.
pub fn chf_origin_coeffs(beta: Beta) -> Result<(M2, C64)> {
    let b = beta.value;
    if b.re != 0.0 {
        return Err(Error::Domain(format!("origin coefficients need Re beta = 0, got {b}")));
    }
    let one = c(1.0);
    let ep = (I * PI * b).exp();
    let g2 = c(2.0 * EULER_GAMMA);
    // (psi(x) + 2 gE)/Gamma(x) at x = -beta, written without the pole at 0
    let x = -b;
    let e22 = (digamma(one + x) + g2) * rgamma(x) - rgamma(one + x);
    let u0 = m2(
        gamma(one - b) / ep,
        (digamma(one - b) + g2) * rgamma(b),
        gamma(one + b),
        -ep * e22,
    );
    let t = PI * b;
    let ratio = if t.norm() < 1e-4 {
        one + t * t / 6.0 + 7.0 * t.powi(4) / 360.0
    } else {
        t / t.sin()
    };
    Ok((u0, I * ratio / ep))
}

/// Least-squares fit of the regular part at the origin on points of sector 2:
/// returns the fitted `(Upsilon_0, Upsilon_0 Upsilon_1)`.
pub fn chf_origin_fit(beta: Beta, radius: f64) -> Result<(M2, M2)> {
    let solver = ChfSolver::new(beta)?;
    let deg = 6;
    let mut zs = Vec::new();
    for k in 1..=4 {
        let r = radius * k as f64 / 4.0;
        for j in 0..7 {
            let a = PI / 3.0 + PI / 3.0 * (j as f64 + 0.5) / 7.0;
            zs.push(C64::from_polar(r, a));
        }
    }
    let n = zs.len();
    let mut v = DMatrix::<C64>::zeros(n, deg + 1);
    for (i, z) in zs.iter().enumerate() {
        for k in 0..=deg {
            v[(i, k)] = (z / radius).powi(k as i32);
        }
    }
    let svd = v.svd(true, true);
    let mut c0 = M2::zeros();
    let mut c1 = M2::zeros();
    let vals: Vec<M2> = zs
        .iter()
        .map(|z| solver.eval(*z, ChfSector(2)).map(|_| ()).and_then(|_| solver.origin_regular_part(*z)))
        .collect::<Result<_>>()?;
    for a in 0..2 {
        for b in 0..2 {
            let rhs = DVector::from_iterator(n, vals.iter().map(|m| m[(a, b)]));
            let coef = svd
                .solve(&rhs, 1e-14)
                .map_err(|e| Error::Internal(format!("least squares failed: {e}")))?;
            c0[(a, b)] = coef[0];
            c1[(a, b)] = coef[1] / radius;
        }
    }
    Ok((c0, c1))
}

/// Coefficient of `z^{-1}` of the regular part at the origin, by the
/// trapezoid rule on the circle `|z| = radius`; it vanishes when the
/// logarithmic factor has been removed correctly.
pub fn chf_origin_laurent_residue(beta: Beta, radius: f64) -> Result<f64> {
    let solver = ChfSolver::new(beta)?;
    let n = 64;
    let mut acc = M2::zeros();
    for k in 0..n {
        let z = C64::from_polar(radius, 2.0 * PI * (k as f64 + 0.25) / n as f64 - PI);
        acc += solver.origin_regular_part(z)? * z;
    }
    Ok(max_abs(&(acc / c(n as f64))))
}

/// Least-squares slope `-d ln(dev)/d ln(r)`.
pub fn decay_exponent(radii: &[f64], devs: &[f64]) -> f64 {
    let n = radii.len() as f64;
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = devs.iter().map(|d| d.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -num / den
}

/// `det` of a 2x2 matrix.
pub fn det(m: &M2) -> C64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_connection_matches_jump_products() {
        let chf = ChfSolver::new(Beta::from_gamma(0.3).unwrap()).unwrap();
        let b = chf.beta.value;
        let tri = |sigma: f64| m2(c(1.0), (I * PI * b * sigma).exp(), c(0.0), c(1.0));
        for (k, sigma) in [(3, 1.0), (4, -1.0), (5, -1.0)] {
            assert!(max_abs(&(tri(sigma) * chf.p[k] - chf.q[k])) < 1e-14);
        }
    }

    #[test]
    fn bessel_regions() {
        assert_eq!(bessel_region(C64::new(1.0, 0.0)).unwrap(), BesselRegion::I);
        assert_eq!(bessel_region(C64::new(-1.0, 0.1)).unwrap(), BesselRegion::II);
        assert_eq!(bessel_region(C64::new(-1.0, -0.1)).unwrap(), BesselRegion::III);
        assert!(bessel_region(C64::new(-1.0, 0.0)).is_err());
        assert!(bessel_parametrix(C64::new(1.0, 0.0), BesselRegion::II).is_err());
    }

    #[test]
    fn bessel_det_and_jumps() {
        for (r, a) in [(0.3, 0.2), (2.0, 2.5), (7.0, -2.9), (40.0, 1.0)] {
            let z = C64::from_polar(r, a);
            let v = bessel_parametrix(z, bessel_region(z).unwrap()).unwrap();
            assert!((det(&v.matrix) - c(1.0)).norm() < 1e-11, "{z}");
        }
        for j in 1..=3 {
            for r in [0.5, 2.0, 10.0] {
                let res = bessel_jump_residual(j, r).unwrap();
                assert!(res < 1e-10, "ray {j} r {r}: {res:e}");
            }
        }
    }

    #[test]
    fn bessel_infinity() {
        let z = C64::new(1e4, 0.0);
        let (lead, corr) = bessel_asymptotic_deviation(z).unwrap();
        assert!(lead <= 2.0 * 2.0 / (8.0 * 100.0));
        assert!(corr < lead);
    }

    #[test]
    fn chf_sector_consistency() {
        let s = ChfSolver::new(Beta::imaginary(0.13)).unwrap();
        // both representations in sector 5 agree across -pi/2
        let lhs = s.q[4];
        let tri = m2(c(1.0), (I * PI * s.beta.value).exp(), c(0.0), c(1.0));
        let j = |k| inv(&chf_jump(s.beta, k).unwrap());
        let rhs = tri * j(3) * j(4) * j(5);
        assert!(max_abs(&(lhs - rhs)) < 1e-14);
    }

    #[test]
    fn chf_det_jumps() {
        let s = ChfSolver::new(Beta::imaginary(0.13)).unwrap();
        for (r, a) in [(0.5, 0.3), (2.0, 1.4), (10.0, 2.8), (3.0, -2.0), (6.0, -1.2), (1.0, -0.4), (4.0, -1.6)] {
            let z = C64::from_polar(r, a);
            let v = s.eval(z, chf_sector(z).unwrap()).unwrap();
            assert!((det(&v.matrix) - c(1.0)).norm() < 1e-11, "{z}: {}", det(&v.matrix));
        }
        for j in 1..=6 {
            for r in [0.5, 2.0, 10.0] {
                let res = s.jump_residual(j, r).unwrap();
                assert!(res < 1e-9, "ray {j} r {r}: {res:e}");
            }
        }
    }

    #[test]
    fn chf_origin() {
        let (u0, u1) = chf_origin_coeffs(Beta::imaginary(0.0)).unwrap();
        let want = m2(c(1.0), c(0.0), c(1.0), c(1.0));
        assert!(max_abs(&(u0 - want)) < 1e-13, "{u0}");
        assert!((u1 - I).norm() < 1e-15);
        let beta = Beta::imaginary(0.1);
        let (u0, u1) = chf_origin_coeffs(beta).unwrap();
        let (f0, f1) = chf_origin_fit(beta, 0.02).unwrap();
        assert!(max_abs(&(u0 - f0)) < 1e-7, "{}", max_abs(&(u0 - f0)));
        let y1 = inv(&f0) * f1;
        assert!((y1[(1, 0)] - u1).norm() < 1e-5, "{} vs {}", y1[(1, 0)], u1);
        assert!((det(&u0) - det(&f0)).norm() < 1e-8);
        assert!(chf_origin_laurent_residue(beta, 0.5).unwrap() < 1e-10);
    }

    #[test]
    fn chf_infinity() {
        let s = ChfSolver::new(Beta::imaginary(0.13)).unwrap();
        let radii = [100.0, 300.0, 1000.0];
        for a in [0.9, 2.5, 3.0, -2.8, -1.8, -1.3, -0.4] {
            let devs: Vec<f64> = radii
                .iter()
                .map(|r| s.asymptotic_deviation(C64::from_polar(*r, a)).unwrap())
                .collect();
            assert!(decay_exponent(&radii, &devs) >= 0.9, "angle {a}: {devs:?}");
        }
    }
}
