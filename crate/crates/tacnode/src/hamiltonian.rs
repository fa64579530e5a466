//! Phase space, vector field, Hamiltonian and Lax matrices of the
//! 24-dimensional system (12 functions `p_k, q_k` and their tilde partners).
//!
//! Sign conventions, fixed by requiring `q' = dH/dp`, `p' = -dH/dq` for the
//! expanded Hamiltonian:
//!
//! * `p2'` carries `-(tp1/s) S_p`;
//! * `p4'` carries `-p4 tp5` (not `-p4 tp6`).
//!
//! Here `S_p = p1 tq2 + p2 tq1 - p3 tq4 - p4 tq3` and
//! `S_q = tp2 q1 + tp1 q2 - tp4 q3 - tp3 q4`.

use crate::kernel::TacnodeParams;
use crate::{Error, Result, C64};
use nalgebra::Matrix4;
use rand::Rng;

/// 4x4 complex matrix.
pub type M4 = Matrix4<C64>;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// The 24 phase-space coordinates.  Index `k` of each array is `p_{k+1}` etc.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PQState {
    pub p: [C64; 6],
    pub q: [C64; 6],
    pub tp: [C64; 6],
    pub tq: [C64; 6],
}

impl PQState {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Flatten as `p, q, tp, tq`.
    pub fn to_array(&self) -> [C64; 24] {
        let mut out = [C64::new(0.0, 0.0); 24];
        out[0..6].copy_from_slice(&self.p);
        out[6..12].copy_from_slice(&self.q);
        out[12..18].copy_from_slice(&self.tp);
        out[18..24].copy_from_slice(&self.tq);
        out
    }

    pub fn from_array(a: &[C64; 24]) -> Self {
        let mut s = Self::default();
        s.p.copy_from_slice(&a[0..6]);
        s.q.copy_from_slice(&a[6..12]);
        s.tp.copy_from_slice(&a[12..18]);
        s.tq.copy_from_slice(&a[18..24]);
        s
    }

    /// Exchange the untilde and tilde halves.
    pub fn tilde_swap(&self) -> Self {
        Self {
            p: self.tp,
            q: self.tq,
            tp: self.p,
            tq: self.q,
        }
    }

    /// `self + h * other`.
    pub fn axpy(&self, h: C64, other: &Self) -> Self {
        let a = self.to_array();
        let b = other.to_array();
        let mut out = [C64::new(0.0, 0.0); 24];
        for k in 0..24 {
            out[k] = a[k] + h * b[k];
        }
        Self::from_array(&out)
    }

    /// Largest component modulus.
    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `sum_{k<=4} p_k q_k`.
    pub fn trace_a1(&self) -> C64 {
        (0..4).map(|k| self.p[k] * self.q[k]).sum()
    }

    /// `sum_{k<=4} tp_k tq_k`.
    pub fn trace_a2(&self) -> C64 {
        (0..4).map(|k| self.tp[k] * self.tq[k]).sum()
    }

    /// Uniform random components in the square `[-scale, scale]^2`.
    pub fn random<R: Rng>(rng: &mut R, scale: f64) -> Self {
        let mut a = [C64::new(0.0, 0.0); 24];
        for v in a.iter_mut() {
            *v = C64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
        }
        Self::from_array(&a)
    }

    /// Random state projected onto the constraint surface.
    pub fn random_constrained<R: Rng>(rng: &mut R, scale: f64) -> Self {
        loop {
            let s = Self::random(rng, scale);
            if let Ok(p) = constraint_project(&s) {
                if p.max_abs() <= 20.0 * scale {
                    return p;
                }
            }
        }
    }
}

// Parameters of one half of the system; the tilde half swaps (r1,s1)<->(r2,s2).
#[derive(Clone, Copy)]
struct Half {
    r1: f64,
    r2: f64,
    s1: f64,
    s2: f64,
    tau: f64,
}

fn halves(params: &TacnodeParams) -> (Half, Half) {
    let a = Half {
        r1: params.r1,
        r2: params.r2,
        s1: params.s1,
        s2: params.s2,
        tau: params.tau,
    };
    let b = Half {
        r1: params.r2,
        r2: params.r1,
        s1: params.s2,
        s2: params.s1,
        tau: params.tau,
    };
    (a, b)
}

// d/ds of (p, q) given the partner half (P, Q) = (tp, tq)
fn half_field(
    p: &[C64; 6],
    q: &[C64; 6],
    pt: &[C64; 6],
    qt: &[C64; 6],
    h: Half,
    s: f64,
) -> ([C64; 6], [C64; 6]) {
    let [p1, p2, p3, p4, p5, p6] = *p;
    let [q1, q2, q3, q4, q5, q6] = *q;
    let [tp1, tp2, tp3, tp4, tp5, tp6] = *pt;
    let [tq1, tq2, tq3, tq4, tq5, tq6] = *qt;
    let (r1, r2, s1, s2, tau) = (h.r1, h.r2, h.s1, h.s2, h.tau);
    let sp = p1 * tq2 + p2 * tq1 - p3 * tq4 - p4 * tq3;
    let sq = tp2 * q1 + tp1 * q2 - tp4 * q3 - tp3 * q4;
    let is = 1.0 / s;
    let dp = [
        -I * r1 * s * p3 - p1 * p5 - I * r1 * p2 * tq6 - I * r1 * p3 * q5 + p4 * p6 - tau * p1
            + I * s1 * p3
            - tp2 * is * sp,
        I * r2 * s * p4 + I * r2 * p1 * q6 + p2 * tp5 + p3 * tp6 - I * r2 * p4 * tq5
            + tau * p2
            + I * s2 * p4
            - tp1 * is * sp,
        -I * r1 * p1 + p3 * p5 - I * r2 * p4 * tq6 - tau * p3 + tp4 * is * sp,
        -I * r2 * p2 + I * r1 * p3 * q6 - p4 * tp5 + tau * p4 + tp3 * is * sp,
        -I * r1 * (p3 * q1 + tp4 * tq2),
        I * r1 * (p3 * q4 - tp4 * tq3) + I * r2 * (p1 * q2 - tp2 * tq1),
    ];
    let dq = [
        p5 * q1 - I * r2 * q2 * q6 + I * r1 * q3 + tau * q1 + tq2 * is * sq,
        I * r1 * q1 * tq6 - tp5 * q2 + I * r2 * q4 - tau * q2 + tq1 * is * sq,
        I * r1 * s * q1 + I * r1 * q1 * q5 - tp6 * q2 - p5 * q3 - I * r1 * q4 * q6 - I * s1 * q1
            + tau * q3
            - tq4 * is * sq,
        -I * r2 * s * q2 - p6 * q1 + I * r2 * q2 * tq5 + I * r2 * q3 * tq6 + tp5 * q4
            - I * s2 * q2
            - tau * q4
            - tq3 * is * sq,
        p1 * q1 - p3 * q3 - tp2 * tq2 + tp4 * tq4,
        -p4 * q1 - tp3 * tq2,
    ];
    (dp, dq)
}

fn check_s(s: f64) -> Result<()> {
    if s == 0.0 || !s.is_finite() {
        return Err(Error::Domain(format!(
            "s = {s}: the system is singular at s = 0"
        )));
    }
    Ok(())
}

/// `d/ds` of all 24 components.
pub fn vector_field(state: &PQState, s: f64, params: &TacnodeParams) -> Result<PQState> {
    check_s(s)?;
    Ok(vector_field_unchecked(state, s, params))
}

pub(crate) fn vector_field_unchecked(state: &PQState, s: f64, params: &TacnodeParams) -> PQState {
    let (a, b) = halves(params);
    let (dp, dq) = half_field(&state.p, &state.q, &state.tp, &state.tq, a, s);
    let (dtp, dtq) = half_field(&state.tp, &state.tq, &state.p, &state.q, b, s);
    PQState {
        p: dp,
        q: dq,
        tp: dtp,
        tq: dtq,
    }
}

/// Which pieces of the Hamiltonian to keep; used for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HamiltonianTerms {
    pub inverse_s: bool,
}

impl Default for HamiltonianTerms {
    fn default() -> Self {
        Self { inverse_s: true }
    }
}

/// Expanded form of the Hamiltonian.
pub fn hamiltonian_expanded(st: &PQState, s: f64, params: &TacnodeParams) -> C64 {
    hamiltonian_expanded_terms(st, s, params, HamiltonianTerms::default())
}

fn hamiltonian_expanded_terms(st: &PQState, s: f64, params: &TacnodeParams, terms: HamiltonianTerms) -> C64 {
    let [p1, p2, p3, p4, p5, p6] = st.p;
    let [q1, q2, q3, q4, q5, q6] = st.q;
    let [tp1, tp2, tp3, tp4, tp5, tp6] = st.tp;
    let [tq1, tq2, tq3, tq4, tq5, tq6] = st.tq;
    let TacnodeParams {
        r1, r2, s1, s2, tau, ..
    } = *params;
    let mut h = (I * r1 * (p3 * q1 - tp4 * tq2) + I * r2 * (tp3 * tq1 - p4 * q2)) * s
        + p5 * (p1 * q1 - p3 * q3 - tp2 * tq2 + tp4 * tq4)
        + tp5 * (tp1 * tq1 - tp3 * tq3 - p2 * q2 + p4 * q4)
        - p6 * (tp3 * tq2 + p4 * q1)
        - tp6 * (p3 * q2 + tp4 * tq1)
        + I * r1 * q5 * (p3 * q1 + tp4 * tq2)
        + I * r2 * tq5 * (tp3 * tq1 + p4 * q2)
        + I * r1 * q6 * (tp4 * tq3 - p3 * q4)
        + I * r2 * q6 * (tp2 * tq1 - p1 * q2)
        + I * r1 * tq6 * (p2 * q1 - tp1 * tq2)
        + I * r2 * tq6 * (p4 * q3 - tp3 * tq4)
        + I * r1 * (tp2 * tq4 + p1 * q3)
        + I * r2 * (p2 * q4 + tp1 * tq3)
        + tau
            * (p1 * q1 + p3 * q3 - p2 * q2 - p4 * q4 + tp1 * tq1 + tp3 * tq3
                - tp2 * tq2
                - tp4 * tq4)
        - I * s1 * (p3 * q1 + tp4 * tq2)
        - I * s2 * (tp3 * tq1 + p4 * q2);
    if terms.inverse_s {
        let sq = tp2 * q1 + tp1 * q2 - tp4 * q3 - tp3 * q4;
        let sp = p2 * tq1 + p1 * tq2 - p4 * tq3 - p3 * tq4;
        h += sq * sp / s;
    }
    h
}

/// Constant matrix `i (r1 E_31 - r2 E_42)`.
pub fn leading_matrix(params: &TacnodeParams) -> M4 {
    let mut m = M4::zeros();
    m[(2, 0)] = I * params.r1;
    m[(3, 1)] = -I * params.r2;
    m
}

/// `A_0` from `p5, p6, q5, q6` and their tilde partners.
pub fn a0_matrix(st: &PQState, params: &TacnodeParams) -> M4 {
    let TacnodeParams {
        r1, r2, s1, s2, tau, ..
    } = *params;
    let (p5, p6, q5, q6) = (st.p[4], st.p[5], st.q[4], st.q[5]);
    let (tp5, tp6, tq5, tq6) = (st.tp[4], st.tp[5], st.tq[4], st.tq[5]);
    let z = c(0.0);
    M4::new(
        p5 + tau, -I * r2 * q6, I * r1, z,
        I * r1 * tq6, -tp5 - tau, z, I * r2,
        I * r1 * q5 - I * s1, -tp6, -p5 + tau, -I * r1 * q6,
        -p6, I * r2 * tq5 - I * s2, I * r2 * tq6, tp5 - tau,
    )
}

fn col(v: [C64; 4]) -> nalgebra::Vector4<C64> {
    nalgebra::Vector4::new(v[0], v[1], v[2], v[3])
}

fn a1_vectors(st: &PQState) -> (nalgebra::Vector4<C64>, nalgebra::Vector4<C64>) {
    (
        col([st.q[0], st.q[1], st.q[2], st.q[3]]),
        col([st.p[0], st.p[1], st.p[2], st.p[3]]),
    )
}

fn a2_vectors(st: &PQState) -> (nalgebra::Vector4<C64>, nalgebra::Vector4<C64>) {
    (
        col([st.tq[1], st.tq[0], -st.tq[3], -st.tq[2]]),
        col([st.tp[1], st.tp[0], -st.tp[3], -st.tp[2]]),
    )
}

/// Structured form `p^T (lead s + A0 + A2/2s) q + tp'^T (lead s - A0 + A1/2s) tq'`.
pub fn hamiltonian_structured(st: &PQState, s: f64, params: &TacnodeParams) -> C64 {
    let e = leading_matrix(params) * c(s);
    let a0 = a0_matrix(st, params);
    let (q, p) = a1_vectors(st);
    let (tq, tp) = a2_vectors(st);
    let a1 = q * p.transpose();
    let a2 = tq * tp.transpose();
    let m1 = e + a0 + a2 * c(0.5 / s);
    let m2 = e - a0 + a1 * c(0.5 / s);
    (p.transpose() * m1 * q)[(0, 0)] + (tp.transpose() * m2 * tq)[(0, 0)]
}

/// Hamiltonian; both forms are evaluated and must agree.
pub fn hamiltonian_value(st: &PQState, s: f64, params: &TacnodeParams) -> Result<C64> {
    check_s(s)?;
    let h2 = hamiltonian_expanded(st, s, params);
    let h1 = hamiltonian_structured(st, s, params);
    let m = st.max_abs();
    let scale = 1.0 + h2.norm() + (1.0 + s.abs() + 1.0 / s.abs()) * (m * m + m.powi(4));
    if (h1 - h2).norm() > 1e-12 * scale {
        return Err(Error::Internal(format!(
            "structured and expanded Hamiltonians differ: {h1} vs {h2}"
        )));
    }
    Ok(h2)
}

/// The Lax matrices at one `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaxEval {
    pub a0: M4,
    pub a1: M4,
    pub a2: M4,
    pub lead: M4,
    pub s: f64,
}

impl LaxEval {
    /// `L(z) = lead z + A0 + A1/(z - s) + A2/(z + s)`.
    pub fn l_at(&self, z: C64) -> M4 {
        self.lead * z + self.a0 + self.a1 / (z - self.s) + self.a2 / (z + self.s)
    }

    /// `U(z) = -A1/(z - s) + A2/(z + s)`.
    pub fn u_at(&self, z: C64) -> M4 {
        -self.a1 / (z - self.s) + self.a2 / (z + self.s)
    }
}

/// Assemble `A0, A1, A2`.
pub fn lax_matrices(st: &PQState, s: f64, params: &TacnodeParams) -> Result<LaxEval> {
    check_s(s)?;
    let (q, p) = a1_vectors(st);
    let (tq, tp) = a2_vectors(st);
    Ok(LaxEval {
        a0: a0_matrix(st, params),
        a1: q * p.transpose(),
        a2: tq * tp.transpose(),
        lead: leading_matrix(params),
        s,
    })
}

/// Numerical rank of a 4x4 matrix (singular values above `tol * largest`).
pub fn numerical_rank(m: &M4, tol: f64) -> usize {
    let sv = m.svd(false, false).singular_values;
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|v| **v > tol * top).count()
}

fn commutator(a: &M4, b: &M4) -> M4 {
    a * b - b * a
}

fn max_entry(m: &M4) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `max_z |dL/ds - dU/dz - [U, L]|` over the probes `z in {s/2, 2s, -2s, i s}`;
/// `dL/ds` is assembled exactly from the vector field.
pub fn zero_curvature_residual(st: &PQState, s: f64, params: &TacnodeParams) -> Result<f64> {
    let lax = lax_matrices(st, s, params)?;
    let d = vector_field(st, s, params)?;
    let da0 = a0_matrix(&d, params) - a0_matrix(&PQState::zero(), params);
    let (q, p) = a1_vectors(st);
    let (dq, dp) = a1_vectors(&d);
    let da1 = dq * p.transpose() + q * dp.transpose();
    let (tq, tp) = a2_vectors(st);
    let (dtq, dtp) = a2_vectors(&d);
    let da2 = dtq * tp.transpose() + tq * dtp.transpose();
    let sc = c(s);
    let mut worst: f64 = 0.0;
    for z in [c(0.5 * s), c(2.0 * s), c(-2.0 * s), C64::new(0.0, s)] {
        let zm = z - sc;
        let zp = z + sc;
        let dl_ds = da0 + da1 / zm + lax.a1 / (zm * zm) + da2 / zp - lax.a2 / (zp * zp);
        let du_dz = lax.a1 / (zm * zm) - lax.a2 / (zp * zp);
        let u = lax.u_at(z);
        let l = lax.l_at(z);
        let r = dl_ds - du_dz - commutator(&u, &l);
        worst = worst.max(max_entry(&r));
    }
    Ok(worst)
}

/// Right-hand side of the `dH/ds` identity.
pub fn dh_ds_rhs(st: &PQState, s: f64, params: &TacnodeParams, terms: HamiltonianTerms) -> C64 {
    let [p1, p2, p3, p4, ..] = st.p;
    let [q1, q2, q3, q4, ..] = st.q;
    let [tp1, tp2, tp3, tp4, ..] = st.tp;
    let [tq1, tq2, tq3, tq4, ..] = st.tq;
    let mut v = I * params.r1 * (p3 * q1 - tp4 * tq2) + I * params.r2 * (tp3 * tq1 - p4 * q2);
    if terms.inverse_s {
        let sq = tp2 * q1 + tp1 * q2 - tp4 * q3 - tp3 * q4;
        let sp = p2 * tq1 + p1 * tq2 - p4 * tq3 - p3 * tq4;
        v -= sq * sp / (s * s);
    }
    v
}

// d/ds of g(state(s), s) along the flow, central differences with step h
fn flow_derivative<G: Fn(&PQState, f64) -> C64>(st: &PQState, s: f64, params: &TacnodeParams, g: G) -> C64 {
    let d = vector_field_unchecked(st, s, params);
    // the first derivative along the straight line (y + t y', s + t) equals the
    // derivative along the flow, so a fourth order stencil applies
    // small against both |s| (pole at 0) and the speed |y'|
    let h = 1e-3 * s.abs().min(1.0) / (1.0 + d.max_abs());
    let at = |t: f64| g(&st.axpy(c(t), &d), s + t);
    (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
}

fn tau0_bracket(st: &PQState, s: f64, params: &TacnodeParams) -> C64 {
    let h = hamiltonian_expanded(st, s, params);
    let (p, q, tp, tq) = (&st.p, &st.q, &st.tp, &st.tq);
    h * (2.0 * s) + p[0] * q[0] + p[1] * q[1] + tp[0] * tq[0] + tp[1] * tq[1]
        - 2.0 * p[4] * q[4]
        - 2.0 * tp[4] * tq[4]
        - p[5] * q[5]
        - tp[5] * tq[5]
        + 2.0 * params.s1 / params.r1 * p[4]
        + 2.0 * params.s2 / params.r2 * tp[4]
}

/// `p3 q1 - tp4 tq2 + i r1 q5 + p5^2/(i r1) - i r2 q6 tq6 + i s1`, which
/// vanishes on the special solutions but not at generic states.
pub fn q52_residual(st: &PQState, params: &TacnodeParams) -> C64 {
    let r1 = params.r1;
    st.p[2] * st.q[0] - st.tp[3] * st.tq[1] + I * r1 * st.q[4] + st.p[4] * st.p[4] / (I * r1)
        - I * params.r2 * st.q[5] * st.tq[5]
        + I * params.s1
}

/// Residuals of the three differential identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    pub dh_ds: f64,
    /// `None` when `tau != 0`.
    pub tau0: Option<f64>,
    pub dgamma: f64,
}

/// `(dH/ds, tau = 0, d/dgamma)` identity residuals; see [`identity_residuals_with`].
pub fn identity_residuals(
    st: &PQState,
    d_gamma_state: &PQState,
    s: f64,
    params: &TacnodeParams,
) -> Result<(f64, f64, f64)> {
    if params.tau != 0.0 {
        return Err(Error::Domain(
            "the tau = 0 identity was requested with tau != 0".into(),
        ));
    }
    let r = identity_residuals_with(st, d_gamma_state, s, params, HamiltonianTerms::default())?;
    Ok((r.dh_ds, r.tau0.unwrap_or(0.0), r.dgamma))
}

/// Identity residuals with control over the `1/s` terms of the `dH/ds`
/// right-hand side (dropping it is a negative control).
///
/// Each residual is the absolute gap divided by `1 + |reference side|`, so it
/// stays meaningful when `H` grows with `s`.
pub fn identity_residuals_with(
    st: &PQState,
    d_gamma_state: &PQState,
    s: f64,
    params: &TacnodeParams,
    rhs_terms: HamiltonianTerms,
) -> Result<IdentityResiduals> {
    check_s(s)?;
    let total = flow_derivative(st, s, params, |y, t| hamiltonian_expanded(y, t, params));
    let rhs = dh_ds_rhs(st, s, params, rhs_terms);
    let dh_ds = (total - rhs).norm() / (1.0 + rhs.norm());

    let d = vector_field_unchecked(st, s, params);
    let h = hamiltonian_expanded(st, s, params);
    let tau0 = if params.tau == 0.0 {
        let mut lhs = -h;
        for k in 0..6 {
            lhs += st.p[k] * d.q[k] + st.tp[k] * d.tq[k];
        }
        let dg = flow_derivative(st, s, params, |y, t| tau0_bracket(y, t, params));
        let rhs = h - dg / 3.0;
        // the two sides nearly cancel at large s, so scale by the parts
        Some((lhs - rhs).norm() / (1.0 + h.norm() + dg.norm() / 3.0))
    } else {
        None
    };

    // sum q' dp - p' dq (+ tilde) against the directional derivative of H
    let mut lhs = C64::new(0.0, 0.0);
    for k in 0..6 {
        lhs += d.q[k] * d_gamma_state.p[k] - d.p[k] * d_gamma_state.q[k];
        lhs += d.tq[k] * d_gamma_state.tp[k] - d.tp[k] * d_gamma_state.tq[k];
    }
    let eps = 1e-3 * (1.0 + st.max_abs());
    let at = |t: f64| hamiltonian_expanded(&st.axpy(c(t), d_gamma_state), s, params);
    let fd = (at(-2.0 * eps) - 8.0 * at(-eps) + 8.0 * at(eps) - at(2.0 * eps)) / (12.0 * eps);
    let dgamma = (lhs - fd).norm() / (1.0 + fd.norm());

    Ok(IdentityResiduals { dh_ds, tau0, dgamma })
}

/// Max over all 24 coordinates of `|FD dH/dp_k - q_k'|` and `|FD dH/dq_k + p_k'|`.
pub fn hamilton_gradient_residual(st: &PQState, s: f64, params: &TacnodeParams) -> Result<f64> {
    check_s(s)?;
    let d = vector_field_unchecked(st, s, params).to_array();
    let y = st.to_array();
    let mut worst: f64 = 0.0;
    for k in 0..24 {
        let h = 1e-6 * (1.0 + y[k].norm());
        let mut yp = y;
        let mut ym = y;
        yp[k] += h;
        ym[k] -= h;
        let g = (hamiltonian_expanded(&PQState::from_array(&yp), s, params)
            - hamiltonian_expanded(&PQState::from_array(&ym), s, params))
            / (2.0 * h);
        // partner of slot k: p_j <-> q_j within each half
        let (partner, sign) = match k {
            0..=5 => (k + 6, 1.0),
            6..=11 => (k - 6, -1.0),
            12..=17 => (k + 6, 1.0),
            _ => (k - 6, -1.0),
        };
        // dH/dp = q', dH/dq = -p'
        worst = worst.max((g - d[partner] * sign).norm());
    }
    Ok(worst)
}

/// Enforce `sum p_k q_k = 0` (both halves) by adjusting `p_slot`, `tp_slot`
/// (`slot` is 1-based, in `1..=4`).
pub fn constraint_project_with(st: &PQState, slot: usize) -> Result<PQState> {
    if !(1..=4).contains(&slot) {
        return Err(Error::Domain(format!("constraint slot {slot} outside 1..=4")));
    }
    let j = slot - 1;
    if st.q[j] == C64::new(0.0, 0.0) || st.tq[j] == C64::new(0.0, 0.0) {
        let alt: Vec<usize> = (0..4)
            .filter(|&k| st.q[k] != C64::new(0.0, 0.0) && st.tq[k] != C64::new(0.0, 0.0))
            .map(|k| k + 1)
            .collect();
        return Err(Error::Domain(format!(
            "q{slot} or tq{slot} vanishes; usable slots: {alt:?}"
        )));
    }
    let mut out = *st;
    let rest: C64 = (0..4).filter(|&k| k != j).map(|k| st.p[k] * st.q[k]).sum();
    out.p[j] = -rest / st.q[j];
    let rest: C64 = (0..4).filter(|&k| k != j).map(|k| st.tp[k] * st.tq[k]).sum();
    out.tp[j] = -rest / st.tq[j];
    Ok(out)
}

/// [`constraint_project_with`] on the default slot 4.
pub fn constraint_project(st: &PQState) -> Result<PQState> {
    constraint_project_with(st, 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(r1: f64, r2: f64, s1: f64, s2: f64, tau: f64) -> TacnodeParams {
        TacnodeParams {
            r1,
            r2,
            s1,
            s2,
            tau,
            gamma: 0.5,
        }
    }

    #[test]
    fn zero_state() {
        let pr = params(1.0, 2.0, 0.3, -0.2, 0.1);
        let d = vector_field(&PQState::zero(), 1.3, &pr).unwrap();
        assert_eq!(d, PQState::zero());
        assert_eq!(hamiltonian_value(&PQState::zero(), 1.3, &pr).unwrap(), c(0.0));
        assert_eq!(zero_curvature_residual(&PQState::zero(), 1.3, &pr).unwrap(), 0.0);
        let r = identity_residuals(&PQState::zero(), &PQState::zero(), 1.3, &params(1.0, 2.0, 0.3, -0.2, 0.0)).unwrap();
        assert_eq!(r, (0.0, 0.0, 0.0));
        assert!(vector_field(&PQState::zero(), 0.0, &pr).is_err());
    }

    #[test]
    fn single_q1() {
        let mut st = PQState::zero();
        st.q[0] = c(1.0);
        let pr = params(1.0, 1.0, 0.5, 0.0, 0.0);
        let d = vector_field(&st, 2.0, &pr).unwrap().to_array();
        for (k, v) in d.iter().enumerate() {
            if k == 8 {
                assert!((v - C64::new(0.0, 1.5)).norm() < 1e-15);
            } else {
                assert_eq!(*v, c(0.0), "component {k}");
            }
        }
    }

    #[test]
    fn h_example() {
        let mut st = PQState::zero();
        st.p[2] = c(1.0);
        st.q[0] = c(1.0);
        let pr = params(2.0, 1.0, 0.3, 0.0, 0.0);
        let h = hamiltonian_value(&st, 1.0, &pr).unwrap();
        assert!((h - C64::new(0.0, 1.7)).norm() < 1e-15);
    }

    #[test]
    fn a0_zero_state() {
        let pr = params(1.0, 4.0, 1.0, 2.0, 0.3);
        let l = lax_matrices(&PQState::zero(), 1.0, &pr).unwrap();
        let z = c(0.0);
        let want = M4::new(
            c(0.3), z, I, z,
            z, c(-0.3), z, I * 4.0,
            -I, z, c(0.3), z,
            z, -I * 2.0, z, c(-0.3),
        );
        assert!(max_entry(&(l.a0 - want)) < 1e-15);
        assert_eq!(l.a1, M4::zeros());
        assert_eq!(l.a2, M4::zeros());
    }

    #[test]
    fn hamilton_equations_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pr = params(1.3, 0.7, 0.4, -0.6, 0.25);
        for _ in 0..20 {
            let st = PQState::random_constrained(&mut rng, 1.0);
            let r = hamilton_gradient_residual(&st, 1.7, &pr).unwrap();
            assert!(r < 1e-6, "{r}");
        }
    }

    #[test]
    fn projection() {
        let mut st = PQState::zero();
        st.p[..4].copy_from_slice(&[c(1.0); 4]);
        st.q[..4].copy_from_slice(&[c(1.0), c(1.0), c(1.0), c(-3.0)]);
        st.tp = st.p;
        st.tq = st.q;
        assert_eq!(constraint_project(&st).unwrap(), st);
        let mut st = PQState::zero();
        st.p[0] = c(1.0);
        st.q[0] = c(1.0);
        st.q[3] = c(1.0);
        st.tq[3] = c(1.0);
        let pj = constraint_project(&st).unwrap();
        assert_eq!(pj.p[3], c(-1.0));
        st.q[3] = c(0.0);
        assert!(constraint_project(&st).is_err());
        assert!(constraint_project_with(&st, 1).is_err());
    }
}
