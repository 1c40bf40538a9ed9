//! Fourth-order finite differences on uniform streamwise grids.
//!
//! Periodic grids use centred stencils with wrapped indices. Open grids
//! switch to one-sided stencils of the same order near both ends.

use serde::{Deserialize, Serialize};

/// Finite-difference weights for the `m`-th derivative at `x0` from the
/// nodes `xs` (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > m, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

/// Uniform grid. Periodic grids have `x_i = i dx` on `[0, L)`, open grids
/// include both end points.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub n: usize,
    pub dx: f64,
    pub boundary: Boundary,
}

impl Grid1D {
    pub fn periodic(length: f64, n: usize) -> Self {
        Grid1D {
            n,
            dx: length / n as f64,
            boundary: Boundary::Periodic,
        }
    }

    pub fn open(length: f64, n: usize) -> Self {
        Grid1D {
            n,
            dx: length / (n - 1) as f64,
            boundary: Boundary::Open,
        }
    }

    pub fn length(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.dx * self.n as f64,
            Boundary::Open => self.dx * (self.n - 1) as f64,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }
}

/// One row of a derivative operator: weights applied to consecutive
/// (possibly wrapped) indices starting at `start`.
#[derive(Debug, Clone, PartialEq)]
struct Row {
    start: isize,
    weights: Vec<f64>,
}

/// A fourth-order derivative operator on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct DerivOp {
    n: usize,
    periodic: bool,
    half: usize,
    central: Vec<f64>,
    left: Vec<Row>,
    right: Vec<Row>,
}

impl DerivOp {
    /// Derivative of order `m` (1, 2 or 3), fourth-order accurate.
    pub fn new(grid: &Grid1D, m: usize) -> Self {
        assert!((1..=3).contains(&m), "derivative order {m} not supported");
        let half = if m == 3 { 3 } else { 2 };
        let dx = grid.dx;
        let offsets: Vec<f64> = (-(half as isize)..=half as isize)
            .map(|o| o as f64)
            .collect();
        let scale = dx.powi(m as i32);
        let central: Vec<f64> = fornberg_weights(0.0, &offsets, m)
            .into_iter()
            .map(|w| w / scale)
            .collect();
        let mut left = Vec::new();
        let mut right = Vec::new();
        if grid.boundary == Boundary::Open {
            // one-sided stencils with p - m = 4
            let width = m + 4;
            assert!(grid.n >= width + 2 * half, "open grid too small");
            let nodes: Vec<f64> = (0..width).map(|k| k as f64).collect();
            for i in 0..half {
                let w = fornberg_weights(i as f64, &nodes, m)
                    .into_iter()
                    .map(|w| w / scale)
                    .collect();
                left.push(Row {
                    start: 0,
                    weights: w,
                });
            }
            for r in 0..half {
                let i = grid.n - half + r;
                let start = grid.n - width;
                let local = (i - start) as f64;
                let w = fornberg_weights(local, &nodes, m)
                    .into_iter()
                    .map(|w| w / scale)
                    .collect();
                right.push(Row {
                    start: start as isize,
                    weights: w,
                });
            }
        }
        DerivOp {
            n: grid.n,
            periodic: grid.is_periodic(),
            half,
            central,
            left,
            right,
        }
    }

    /// Replaces the one-sided boundary rows of an open grid by central
    /// ones acting on a constant extension of the end values (`f[0]`
    /// upstream, `f[n-1]` downstream). Only first-order accurate at the
    /// end nodes, but stable in time stepping: with the one-sided
    /// fourth-order rows an unforced flat film on a plate grows round-off
    /// by a factor of 3 to 10^4 per step at the ends.
    pub fn with_extension_closure(mut self) -> Self {
        if self.periodic {
            return self;
        }
        let (n, h) = (self.n, self.half);
        self.left = (0..h)
            .map(|i| {
                let mut w = vec![0.0; i + h + 1];
                for (k, c) in self.central.iter().enumerate() {
                    w[(i + k).saturating_sub(h)] += c;
                }
                Row {
                    start: 0,
                    weights: w,
                }
            })
            .collect();
        self.right = (0..h)
            .map(|r| {
                let start = n - 2 * h + r;
                let mut w = vec![0.0; n - start];
                for (k, c) in self.central.iter().enumerate() {
                    w[(start + k).min(n - 1) - start] += c;
                }
                Row {
                    start: start as isize,
                    weights: w,
                }
            })
            .collect();
        self
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Column indices and weights of row `i`.
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        let n = self.n as isize;
        if !self.periodic {
            if i < self.half {
                let r = &self.left[i];
                return r
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(k, &w)| ((r.start + k as isize) as usize, w))
                    .collect();
            }
            if i >= self.n - self.half {
                let r = &self.right[i - (self.n - self.half)];
                return r
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(k, &w)| ((r.start + k as isize) as usize, w))
                    .collect();
            }
        }
        let start = i as isize - self.half as isize;
        self.central
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(k, &w)| ((start + k as isize).rem_euclid(n) as usize, w))
            .collect()
    }

    /// `out = D f`.
    pub fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(f.len(), n);
        debug_assert_eq!(out.len(), n);
        let h = self.half;
        for i in h..n - h {
            let base = i - h;
            let mut acc = 0.0;
            for (k, w) in self.central.iter().enumerate() {
                acc += w * f[base + k];
            }
            out[i] = acc;
        }
        if self.periodic {
            for i in (0..h).chain(n - h..n) {
                let mut acc = 0.0;
                for (k, w) in self.central.iter().enumerate() {
                    let j = (i + n + k - h) % n;
                    acc += w * f[j];
                }
                out[i] = acc;
            }
        } else {
            for (i, r) in self.left.iter().enumerate() {
                out[i] = dot_from(&r.weights, f, r.start as usize);
            }
            for (k, r) in self.right.iter().enumerate() {
                out[n - h + k] = dot_from(&r.weights, f, r.start as usize);
            }
        }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.apply_into(f, &mut out);
        out
    }

    /// Applies the operator along the `x` index of a field stored x-major
    /// with `stride` values per `x` position.
    pub fn apply_strided_into(&self, f: &[f64], stride: usize, out: &mut [f64]) {
        let n = self.n;
        let h = self.half;
        debug_assert_eq!(f.len(), n * stride);
        for i in 0..n {
            let o = &mut out[i * stride..(i + 1) * stride];
            o.iter_mut().for_each(|v| *v = 0.0);
            let (start, weights): (isize, &[f64]) = if !self.periodic && i < h {
                (self.left[i].start, &self.left[i].weights)
            } else if !self.periodic && i >= n - h {
                let r = &self.right[i - (n - h)];
                (r.start, &r.weights)
            } else {
                (i as isize - h as isize, &self.central)
            };
            for (k, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let j = (start + k as isize).rem_euclid(n as isize) as usize;
                let src = &f[j * stride..(j + 1) * stride];
                for (ov, sv) in o.iter_mut().zip(src) {
                    *ov += w * sv;
                }
            }
        }
    }
}

#[inline]
fn dot_from(w: &[f64], f: &[f64], start: usize) -> f64 {
    w.iter()
        .zip(&f[start..start + w.len()])
        .map(|(a, b)| a * b)
        .sum()
}

/// The three derivative operators every solver needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub d1: DerivOp,
    pub d2: DerivOp,
    pub d3: DerivOp,
}

impl Derivatives {
    pub fn new(grid: &Grid1D) -> Self {
        Derivatives {
            d1: DerivOp::new(grid, 1),
            d2: DerivOp::new(grid, 2),
            d3: DerivOp::new(grid, 3),
        }
    }

    /// Operators for time stepping on an open plate, see
    /// [`DerivOp::with_extension_closure`].
    pub fn extended(grid: &Grid1D) -> Self {
        Derivatives {
            d1: DerivOp::new(grid, 1).with_extension_closure(),
            d2: DerivOp::new(grid, 2).with_extension_closure(),
            d3: DerivOp::new(grid, 3).with_extension_closure(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn central_weights_match_textbook() {
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let w1 = fornberg_weights(0.0, &xs, 1);
        let e1 = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w1.iter().zip(e1) {
            assert!((a - b).abs() < 1e-14);
        }
        let w2 = fornberg_weights(0.0, &xs, 2);
        let e2 = [
            -1.0 / 12.0,
            16.0 / 12.0,
            -30.0 / 12.0,
            16.0 / 12.0,
            -1.0 / 12.0,
        ];
        for (a, b) in w2.iter().zip(e2) {
            assert!((a - b).abs() < 1e-13);
        }
        let xs7 = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        let w3 = fornberg_weights(0.0, &xs7, 3);
        let e3 = [
            1.0 / 8.0,
            -1.0,
            13.0 / 8.0,
            0.0,
            -13.0 / 8.0,
            1.0,
            -1.0 / 8.0,
        ];
        for (a, b) in w3.iter().zip(e3) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn max_err(op: &DerivOp, f: &[f64], exact: &[f64]) -> f64 {
        op.apply(f)
            .iter()
            .zip(exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn periodic_fourth_order() {
        let mut errs = Vec::new();
        for n in [32usize, 64] {
            let g = Grid1D::periodic(2.0 * PI, n);
            let d = Derivatives::new(&g);
            let x = g.xs();
            let f: Vec<f64> = x.iter().map(|x| x.sin()).collect();
            let e1: Vec<f64> = x.iter().map(|x| x.cos()).collect();
            let e2: Vec<f64> = x.iter().map(|x| -x.sin()).collect();
            let e3: Vec<f64> = x.iter().map(|x| -x.cos()).collect();
            errs.push([
                max_err(&d.d1, &f, &e1),
                max_err(&d.d2, &f, &e2),
                max_err(&d.d3, &f, &e3),
            ]);
        }
        for k in 0..3 {
            let ratio = errs[0][k] / errs[1][k];
            assert!(
                ratio > 14.0 && ratio < 18.0,
                "order check {k}: ratio {ratio}"
            );
        }
    }

    #[test]
    fn open_one_sided_fourth_order() {
        let mut errs = Vec::new();
        for n in [41usize, 81] {
            let g = Grid1D::open(2.0, n);
            let d = Derivatives::new(&g);
            let x = g.xs();
            let f: Vec<f64> = x.iter().map(|x| (1.3 * x).exp()).collect();
            let e = |m: i32| -> Vec<f64> {
                x.iter().map(|x| 1.3f64.powi(m) * (1.3 * x).exp()).collect()
            };
            errs.push([
                max_err(&d.d1, &f, &e(1)),
                max_err(&d.d2, &f, &e(2)),
                max_err(&d.d3, &f, &e(3)),
            ]);
        }
        for k in 0..3 {
            let ratio = errs[0][k] / errs[1][k];
            assert!(ratio > 12.0, "order check {k}: ratio {ratio}");
        }
    }

    #[test]
    fn rows_agree_with_apply() {
        for (g, ext) in [
            (Grid1D::periodic(3.0, 20), false),
            (Grid1D::open(3.0, 20), false),
            (Grid1D::open(3.0, 20), true),
        ] {
            let d = if ext {
                DerivOp::new(&g, 3).with_extension_closure()
            } else {
                DerivOp::new(&g, 3)
            };
            let f: Vec<f64> = (0..20).map(|i| ((i * 7 % 11) as f64).sin()).collect();
            let a = d.apply(&f);
            for (i, &ai) in a.iter().enumerate() {
                let r: f64 = d.row(i).iter().map(|&(j, w)| w * f[j]).sum();
                assert!((r - ai).abs() < 1e-9 * (1.0 + ai.abs()));
            }
        }
    }

    #[test]
    fn strided_matches_columnwise() {
        let g = Grid1D::open(1.0, 16);
        let d = DerivOp::new(&g, 2);
        let stride = 3;
        let f: Vec<f64> = (0..16 * stride).map(|k| (k as f64 * 0.37).cos()).collect();
        let mut out = vec![0.0; f.len()];
        d.apply_strided_into(&f, stride, &mut out);
        for s in 0..stride {
            let col: Vec<f64> = (0..16).map(|i| f[i * stride + s]).collect();
            let dc = d.apply(&col);
            for i in 0..16 {
                assert!((dc[i] - out[i * stride + s]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn periodic_shift_commutes() {
        let g = Grid1D::periodic(5.0, 24);
        let d = DerivOp::new(&g, 1);
        let f: Vec<f64> = (0..24)
            .map(|i| (i as f64 * 0.9).sin() + 0.1 * i as f64 % 3.0)
            .collect();
        let mut shifted = f.clone();
        shifted.rotate_right(1);
        let mut a = d.apply(&f);
        a.rotate_right(1);
        let b = d.apply(&shifted);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn extension_closure_is_exact_for_flat_ends() {
        // a bump that is flat to all orders near both ends
        let g = Grid1D::open(10.0, 201);
        let x = g.xs();
        let f: Vec<f64> = x.iter().map(|x| (-2.0 * (x - 5.0).powi(2)).exp()).collect();
        let fx: Vec<f64> = x
            .iter()
            .map(|x| -4.0 * (x - 5.0) * (-2.0 * (x - 5.0).powi(2)).exp())
            .collect();
        for m in 1..=3 {
            let a = DerivOp::new(&g, m).with_extension_closure().apply(&f);
            let b = DerivOp::new(&g, m).apply(&f);
            assert!(
                a.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-12),
                "order {m}"
            );
        }
        let d1 = DerivOp::new(&g, 1).with_extension_closure();
        assert!(max_err(&d1, &f, &fx) < 1e-4);
        let ones = vec![1.0; 201];
        for m in 1..=3 {
            assert!(DerivOp::new(&g, m)
                .with_extension_closure()
                .apply(&ones)
                .iter()
                .all(|v| v.abs() < 1e-9));
        }
    }
}
