//! Adaptive integration of the 24-dimensional system and the large/small-s
//! asymptotic data of the special solutions.

use crate::asymptotics::theta_phase;
use crate::hamiltonian::{vector_field, PQState, M4};
use crate::kernel::TacnodeParams;
use crate::specfun::{gamma_line, Beta};
use crate::{Error, Result, C64};
use serde::Serialize;
use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::io::Write;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// The residue matrix `M^(1)` entering the asymptotic data.  Entries not
/// supplied by the user are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticData {
    m: M4,
}

impl Default for AsymptoticData {
    fn default() -> Self {
        Self { m: M4::zeros() }
    }
}

/// Index pairs of the user-settable entries.
pub const DATA_ENTRIES: [(usize, usize); 10] = [
    (1, 1),
    (1, 2),
    (1, 3),
    (1, 4),
    (2, 3),
    (2, 4),
    (3, 3),
    (3, 4),
    (4, 3),
    (2, 1),
];

impl AsymptoticData {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Set entry `(j, k)` (1-based).
    pub fn with(mut self, j: usize, k: usize, v: C64) -> Result<Self> {
        if !DATA_ENTRIES.contains(&(j, k)) {
            return Err(Error::Domain(format!("M{j}{k} is not an input entry")));
        }
        self.m[(j - 1, k - 1)] = v;
        Ok(self)
    }

    /// Entry `(j, k)` (1-based).
    pub fn get(&self, j: usize, k: usize) -> C64 {
        self.m[(j - 1, k - 1)]
    }

    pub fn matrix(&self) -> M4 {
        self.m
    }

    /// Variant for the swapped half: `M~_jk = -b_j b_k M_{pi(j) pi(k)}` with
    /// `b = (1, 1, -1, -1)` and `pi = (2, 1, 4, 3)`.
    pub fn tilde(&self) -> Self {
        let b = [1.0, 1.0, -1.0, -1.0];
        let pi = [1, 0, 3, 2];
        Self {
            m: M4::from_fn(|j, k| -b[j] * b[k] * self.m[(pi[j], pi[k])]),
        }
    }

    /// Dotted variant `-Q^{-1} M^T Q`: `M._jk = -c_j c_k M_{sigma(k) sigma(j)}`
    /// with `c = (1, 1, -1, -1)` and `sigma = (3, 4, 1, 2)`.
    pub fn dot(&self) -> Self {
        let c = [1.0, 1.0, -1.0, -1.0];
        let sg = [2, 3, 0, 1];
        Self {
            m: M4::from_fn(|j, k| -c[j] * c[k] * self.m[(sg[k], sg[j])]),
        }
    }
}

// 2 beta X14 sqrt(s) + X12 - 4 beta^2 (X12 + X13 X14 + X14 X24 + X34)
fn p6_part(x: &AsymptoticData, b: C64, rs: f64) -> C64 {
    2.0 * b * x.get(1, 4) * rs + x.get(1, 2)
        - 4.0 * b * b * (x.get(1, 2) + x.get(1, 3) * x.get(1, 4) + x.get(1, 4) * x.get(2, 4) + x.get(3, 4))
}

// 2 beta X13 sqrt(s) - X11 + 4 beta^2 (X11 - X13^2 - X14 X23 - X33)
fn q5_part(x: &AsymptoticData, b: C64, rs: f64) -> C64 {
    2.0 * b * x.get(1, 3) * rs - x.get(1, 1) + 4.0 * b * b * quad_combo(x)
}

fn quad_combo(x: &AsymptoticData) -> C64 {
    x.get(1, 1) - x.get(1, 3) * x.get(1, 3) - x.get(1, 4) * x.get(2, 3) - x.get(3, 3)
}

struct HalfSpec<'a> {
    r: f64,
    s_par: f64,
    r_other: f64,
    m: &'a AsymptoticData,
}

fn large_s_half(s: f64, h: HalfSpec, params: &TacnodeParams, beta: Beta) -> Result<([C64; 6], [C64; 6])> {
    let b = beta.value;
    let gamma = params.gamma;
    let (_, g, _) = gamma_line(beta)?;
    let th = theta_phase(s, h.r, h.s_par, beta)?;
    let phi = th - FRAC_PI_4;
    let (sn, cs) = (phi.sin(), phi.cos());
    let e = (-b * PI * I / 2.0).exp();
    let rs = s.sqrt();
    let s4 = s.powf(0.25);
    let ep = (-params.tau * s).exp();
    let eq = (params.tau * s).exp();
    let m = h.m;
    let md = m.dot();
    let mt = m.tilde();

    let mut p = [ZERO; 6];
    let mut q = [ZERO; 6];
    p[0] = ep * gamma * g * s4 / (SQRT_2 * PI) * e * (sn - 2.0 * I * b * cs);
    p[1] = ep * SQRT_2 * gamma * b * g * m.get(1, 4) / (PI * s4) * e * sn;
    p[2] = ep * I * gamma * g / (SQRT_2 * PI * s4) * e * cs;
    p[4] = I * h.r * (-2.0 * b * rs + m.get(1, 3) + 2.0 * b / rs * quad_combo(m));
    p[5] = I * h.r * p6_part(&md, b, rs) + I * h.r_other * p6_part(&mt, b, rs);
    q[0] = eq * SQRT_2 * g * e * cs / s4;
    q[2] = eq * SQRT_2 * g * e * s4 * (2.0 * b * cs + I * sn);
    q[3] = -2.0 * SQRT_2 * I * b * eq * g * m.get(2, 3) * e * sn / s4;
    q[4] = -4.0 * b * b * s + q5_part(m, b, rs) + q5_part(&md, b, rs);
    q[5] = m.get(1, 4)
        - 2.0 * b / rs
            * (m.get(1, 2) + m.get(1, 3) * m.get(1, 4) + m.get(1, 4) * m.get(2, 4) + m.get(3, 4));
    Ok((p, q))
}

/// Leading-order large-s state of the special solution.
pub fn init_large_s(s: f64, params: &TacnodeParams, beta: Beta, data: &AsymptoticData) -> Result<PQState> {
    params.validate()?;
    if !(params.gamma > 0.0 && params.gamma < 1.0) {
        return Err(Error::Domain(format!(
            "large-s data needs gamma in (0, 1), got {}",
            params.gamma
        )));
    }
    let floor = (params.s1 / params.r1).max(params.s2 / params.r2).max(0.0);
    if !(s > floor) || !s.is_finite() {
        return Err(Error::Domain(format!(
            "large-s data needs s > max(s1/r1, s2/r2, 0) = {floor}, got {s}"
        )));
    }
    let mt = data.tilde();
    let (p, q) = large_s_half(
        s,
        HalfSpec { r: params.r1, s_par: params.s1, r_other: params.r2, m: data },
        params,
        beta,
    )?;
    let (tp, tq) = large_s_half(
        s,
        HalfSpec { r: params.r2, s_par: params.s2, r_other: params.r1, m: &mt },
        params,
        beta,
    )?;
    Ok(PQState { p, q, tp, tq })
}

/// Limits as `s -> 0+`.  `p1..p4`, `q1..q4` are only known to stay bounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallSLimits {
    pub p5: C64,
    pub p6: C64,
    pub q5: C64,
    pub q6: C64,
    pub tp5: C64,
    pub tp6: C64,
    pub tq5: C64,
    pub tq6: C64,
}

/// Small-s limits of `p5, p6, q5, q6` and their tilde partners.
pub fn init_small_s(params: &TacnodeParams, data: &AsymptoticData) -> SmallSLimits {
    let half = |r: f64, r_other: f64, m: &AsymptoticData| {
        let md = m.dot();
        let mt = m.tilde();
        (
            I * r * m.get(1, 3),
            I * r * md.get(1, 2) + I * r_other * mt.get(1, 2),
            -md.get(1, 1) - m.get(1, 1),
            m.get(1, 4),
        )
    };
    let (p5, p6, q5, q6) = half(params.r1, params.r2, data);
    let (tp5, tp6, tq5, tq6) = half(params.r2, params.r1, &data.tilde());
    SmallSLimits { p5, p6, q5, q6, tp5, tp6, tq5, tq6 }
}

/// Step-size statistics of an adaptive run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub h_min: f64,
    pub h_max: f64,
}

/// States at the accepted steps of an adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub s_grid: Vec<f64>,
    pub states: Vec<PQState>,
    pub h_stats: StepStats,
    pub tol: f64,
    /// Set when the run stopped before reaching its target.
    pub failure: Option<String>,
}

impl Trajectory {
    pub fn last(&self) -> (f64, PQState) {
        (*self.s_grid.last().unwrap(), *self.states.last().unwrap())
    }

    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    /// CSV header: `s` followed by the real and imaginary parts of all 24 components.
    pub fn csv_header() -> String {
        let mut cols = vec!["s".to_string()];
        for group in ["p", "q", "tp", "tq"] {
            for k in 1..=6 {
                cols.push(format!("{group}{k}_re"));
                cols.push(format!("{group}{k}_im"));
            }
        }
        cols.join(",")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::csv_header())?;
        for (s, st) in self.s_grid.iter().zip(&self.states) {
            let mut line = format!("{s:.16e}");
            for v in st.to_array() {
                line.push_str(&format!(",{:.16e},{:.16e}", v.re, v.im));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Order of the propagated solution.
pub const ORDER: i32 = 5;

type Y = [C64; 24];

fn eval(y: &Y, s: f64, params: &TacnodeParams) -> Result<Y> {
    Ok(vector_field(&PQState::from_array(y), s, params)?.to_array())
}

/// One Dormand-Prince step of size `h` (signed).  Returns the fifth-order
/// solution and the embedded error estimate.
pub fn rk_step(st: &PQState, s: f64, h: f64, params: &TacnodeParams) -> Result<(PQState, PQState)> {
    let y = st.to_array();
    let (y5, err) = step_raw(&y, s, h, params)?;
    Ok((PQState::from_array(&y5), PQState::from_array(&err)))
}

fn step_raw(y: &Y, s: f64, h: f64, params: &TacnodeParams) -> Result<(Y, Y)> {
    let mut k = [[ZERO; 24]; 7];
    for i in 0..7 {
        let mut yi = *y;
        for (j, kj) in k.iter().enumerate().take(i) {
            let a = A[i][j] * h;
            if a != 0.0 {
                for n in 0..24 {
                    yi[n] += kj[n] * a;
                }
            }
        }
        k[i] = eval(&yi, s + C[i] * h, params)?;
    }
    let mut y5 = *y;
    let mut err = [ZERO; 24];
    for i in 0..7 {
        for n in 0..24 {
            y5[n] += k[i][n] * (B5[i] * h);
            err[n] += k[i][n] * ((B5[i] - B4[i]) * h);
        }
    }
    Ok((y5, err))
}

fn err_norm(y0: &Y, y1: &Y, err: &Y, tol: f64) -> f64 {
    let mut m: f64 = 0.0;
    for n in 0..24 {
        let sc = tol * (1.0 + y0[n].norm().max(y1[n].norm()));
        m = m.max(err[n].norm() / sc);
    }
    m
}

const MAX_STEPS: usize = 2_000_000;

/// Adaptive integration from `s_from` to `s_to` (either direction) with
/// mixed absolute/relative local tolerance `tol`.
pub fn integrate(start: &PQState, s_from: f64, s_to: f64, params: &TacnodeParams, tol: f64) -> Result<Trajectory> {
    if !(s_from > 0.0 && s_to > 0.0) || !s_from.is_finite() || !s_to.is_finite() {
        return Err(Error::Domain(format!(
            "integration endpoints must be positive, got {s_from} -> {s_to}"
        )));
    }
    if !(1e-12..=1e-4).contains(&tol) {
        return Err(Error::Domain(format!("tolerance {tol:e} outside [1e-12, 1e-4]")));
    }
    let dir = if s_to >= s_from { 1.0 } else { -1.0 };
    let span = (s_to - s_from).abs();
    let mut traj = Trajectory {
        s_grid: vec![s_from],
        states: vec![*start],
        h_stats: StepStats { h_min: f64::INFINITY, ..Default::default() },
        tol,
        failure: None,
    };
    if span == 0.0 {
        traj.h_stats.h_min = 0.0;
        return Ok(traj);
    }
    let mut y = start.to_array();
    let mut s = s_from;
    // initial step from the size of the derivative
    let f0 = eval(&y, s, params)?;
    let d0 = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let d1 = f0.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut h = if d1 > 0.0 { 0.01 * (1.0 + d0) / d1 } else { 0.01 * span };
    h = h.min(span).max(1e-10 * span);
    let mut steps = 0;
    while (s_to - s) * dir > 0.0 {
        steps += 1;
        if steps > MAX_STEPS {
            traj.failure = Some(format!("step budget exhausted at s = {s}"));
            break;
        }
        let last = h >= (s_to - s).abs();
        let hs = if last { s_to - s } else { dir * h };
        let (y1, err) = step_raw(&y, s, hs, params)?;
        let en = err_norm(&y, &y1, &err, tol);
        if !en.is_finite() {
            h *= 0.2;
        } else if en <= 1.0 {
            s = if last { s_to } else { s + hs };
            y = y1;
            traj.s_grid.push(s);
            traj.states.push(PQState::from_array(&y));
            let st = &mut traj.h_stats;
            st.accepted += 1;
            st.h_min = st.h_min.min(hs.abs());
            st.h_max = st.h_max.max(hs.abs());
            let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            h = hs.abs() * fac;
        } else {
            traj.h_stats.rejected += 1;
            h = hs.abs() * (0.9 * en.powf(-0.2)).clamp(0.2, 1.0);
        }
        if h < 1e-14 * s.abs().max(1.0) {
            traj.failure = Some(format!("step size underflow at s = {s}"));
            break;
        }
    }
    if traj.h_stats.accepted == 0 {
        traj.h_stats.h_min = 0.0;
    }
    Ok(traj)
}

/// Fixed-step integration with `steps` equal Dormand-Prince steps.
pub fn integrate_fixed(start: &PQState, s_from: f64, s_to: f64, steps: usize, params: &TacnodeParams) -> Result<PQState> {
    if steps == 0 {
        return Err(Error::Domain("need at least one step".into()));
    }
    let h = (s_to - s_from) / steps as f64;
    let mut y = start.to_array();
    for k in 0..steps {
        y = step_raw(&y, s_from + k as f64 * h, h, params)?.0;
    }
    Ok(PQState::from_array(&y))
}
