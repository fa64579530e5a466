//! Gauss-Legendre rules by Newton iteration on `P_n`.

use crate::{Error, Result};
use std::f64::consts::PI;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(m + h * x))
            .sum::<f64>()
            * h
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        let x = self.nodes.iter().map(|t| m + h * t).collect();
        let w = self.weights.iter().map(|w| h * w).collect();
        (x, w)
    }
}

// (P_n(x), P_n'(x)) by the three-term recurrence
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre rule of order `n`, `1 <= n <= 4096`.
pub fn gauss_legendre_rule(n: usize) -> Result<QuadratureRule> {
    if !(1..=4096).contains(&n) {
        return Err(Error::Domain(format!("rule order {n} outside 1..=4096")));
    }
    if n == 1 {
        return Ok(QuadratureRule {
            order: 1,
            nodes: vec![0.0],
            weights: vec![2.0],
        });
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for k in 1..=n.div_ceil(2) {
        // k-th largest root
        let mut x = (PI * (k as f64 - 0.25) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - k] = x;
        nodes[k - 1] = -x;
        weights[n - k] = w;
        weights[k - 1] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule {
        order: n,
        nodes,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules() {
        let r = gauss_legendre_rule(1).unwrap();
        assert_eq!((r.nodes[0], r.weights[0]), (0.0, 2.0));
        let r = gauss_legendre_rule(2).unwrap();
        let a = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + a).abs() < 1e-15 && (r.nodes[1] - a).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15 && (r.weights[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degree_nine() {
        let r = gauss_legendre_rule(5).unwrap();
        let v = r.integrate(-1.0, 1.0, |x| x.powi(8));
        assert!((v - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn out_of_range() {
        assert!(gauss_legendre_rule(0).is_err());
        assert!(gauss_legendre_rule(4097).is_err());
    }

    #[test]
    fn exactness_dyadic() {
        let mut n = 1;
        while n <= 256 {
            let r = gauss_legendre_rule(n).unwrap();
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for w in r.nodes.windows(2) {
                assert!(w[0] < w[1]);
            }
            for m in 0..2 * n {
                let v: f64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| w * x.powi(m as i32))
                    .sum();
                let exact = if m % 2 == 1 { 0.0 } else { 2.0 / (m as f64 + 1.0) };
                assert!((v - exact).abs() <= 1e-13, "n={n} m={m} err={}", v - exact);
            }
            n *= 2;
        }
    }
}
