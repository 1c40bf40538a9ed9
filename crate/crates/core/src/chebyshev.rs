//! Chebyshev collocation on Gauss-Lobatto points.

use nalgebra::DMatrix;

use crate::error::{domain, Result};

/// Gauss-Lobatto grid `X_i = -cos(pi i / n)` on `[-1, 1]` with dense
/// differentiation matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevGrid {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
}

impl ChebyshevGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return domain(format!("Chebyshev degree must be at least 2, got {n}"));
        }
        let pi = std::f64::consts::PI;
        let nodes: Vec<f64> = (0..=n)
            .map(|i| {
                // symmetric evaluation keeps the nodes exactly antisymmetric
                let s = (pi * (2.0 * i as f64 - n as f64) / (2.0 * n as f64)).sin();
                if 2 * i == n {
                    0.0
                } else {
                    s
                }
            })
            .collect();
        let m = n + 1;
        let c = |i: usize| if i == 0 || i == n { 2.0 } else { 1.0 };
        let mut d1 = DMatrix::zeros(m, m);
        for i in 0..m {
            let mut row_sum = 0.0;
            for j in 0..m {
                if i != j {
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let v = c(i) / c(j) * sign / (nodes[i] - nodes[j]);
                    d1[(i, j)] = v;
                    row_sum += v;
                }
            }
            d1[(i, i)] = -row_sum;
        }
        let d2 = &d1 * &d1;
        Ok(ChebyshevGrid { n, nodes, d1, d2 })
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Nodes mapped to `ȳ = (X + 1)/2`.
    pub fn ybar(&self) -> Vec<f64> {
        self.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect()
    }

    /// First derivative with respect to `ȳ`.
    pub fn d1_ybar(&self) -> DMatrix<f64> {
        &self.d1 * 2.0
    }

    /// Second derivative with respect to `ȳ`.
    pub fn d2_ybar(&self) -> DMatrix<f64> {
        &self.d2 * 4.0
    }
}

/// Chebyshev polynomial `T_k(X)` and its first two derivatives.
pub fn chebyshev_t(k: usize, x: f64) -> (f64, f64, f64) {
    let (mut t0, mut d0, mut s0) = (1.0, 0.0, 0.0);
    if k == 0 {
        return (t0, d0, s0);
    }
    let (mut t1, mut d1, mut s1) = (x, 1.0, 0.0);
    for _ in 1..k {
        let t2 = 2.0 * x * t1 - t0;
        let d2 = 2.0 * t1 + 2.0 * x * d1 - d0;
        let s2 = 4.0 * d1 + 2.0 * x * s1 - s0;
        t0 = t1;
        d0 = d1;
        s0 = s1;
        t1 = t2;
        d1 = d2;
        s1 = s2;
    }
    (t1, d1, s1)
}

/// Basis function `φ_i` (`i ≥ 1`) with its first two `X`-derivatives:
/// `φ_1 = 1 + X`, `φ_2m = T_2m - 1`, `φ_2m+1 = T_2m+1 - X`.
pub fn basis_phi_jet(i: usize, x: f64) -> (f64, f64, f64) {
    assert!(i >= 1, "basis index starts at 1");
    if i == 1 {
        return (1.0 + x, 1.0, 0.0);
    }
    let (t, d, s) = chebyshev_t(i, x);
    if i % 2 == 0 {
        (t - 1.0, d, s)
    } else {
        (t - x, d - 1.0, s)
    }
}

pub fn basis_phi(i: usize, x: f64) -> f64 {
    basis_phi_jet(i, x).0
}
