//! Banded LU with partial pivoting, and a Woodbury wrapper for the
//! wrap-around corners of periodic operators.

use nalgebra::{DMatrix, DVector};

use crate::error::{FilmError, Result};

/// LU factorization of a band matrix with `kl` sub- and `ku`
/// super-diagonals. Pivoting widens the upper band to `ku + kl`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    kuf: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    /// `rows[i]` lists `(column, value)` pairs of row `i`; entries must lie
    /// within the band.
    pub fn factor(n: usize, kl: usize, ku: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let kuf = ku + kl;
        let width = kl + kuf + 1;
        let mut lu = BandLu {
            n,
            kl,
            kuf,
            width,
            data: vec![0.0; n * width],
            piv: vec![0; n],
        };
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                if j + kl < i || j > i + ku {
                    return Err(FilmError::Numerical(format!(
                        "entry ({i},{j}) outside band"
                    )));
                }
                *lu.at(i, j) += v;
            }
        }
        lu.decompose()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.data[k]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    fn decompose(&mut self) -> Result<()> {
        let n = self.n;
        let scale = self
            .data
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > scale * 1e-300) || !best.is_finite() {
                return Err(FilmError::Numerical(format!(
                    "singular banded matrix at column {k}"
                )));
            }
            self.piv[k] = p;
            let cmax = (k + self.kuf).min(n - 1);
            if p != k {
                for j in k..=cmax {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last {
                let l = self.get(i, k) / pivot;
                *self.at(i, k) = l;
                if l != 0.0 {
                    for j in k + 1..=cmax {
                        let u = self.get(k, j);
                        *self.at(i, j) -= l * u;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    b[i] -= self.get(i, k) * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for j in k + 1..=(k + self.kuf).min(n - 1) {
                acc -= self.get(k, j) * b[j];
            }
            b[k] = acc / self.get(k, k);
        }
    }
}

/// Solver for a periodic band matrix: band part factored with [`BandLu`],
/// wrap-around corners handled by a low-rank correction.
#[derive(Debug, Clone)]
pub struct CyclicBandSolver {
    band: BandLu,
    corner_rows: Vec<usize>,
    /// sparse corner entries `(row slot, column, value)`
    corners: Vec<(usize, usize, f64)>,
    z: Vec<Vec<f64>>,
    cap: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl CyclicBandSolver {
    /// `rows[i]` lists `(column, value)`; entries with `|i - j| > n/2` are
    /// treated as wrap-around corners.
    pub fn new(n: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let half = n / 2;
        let mut kl = 0;
        let mut ku = 0;
        let mut band_rows = vec![Vec::new(); n];
        let mut corner_map: Vec<(usize, usize, f64)> = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                if v == 0.0 {
                    continue;
                }
                let wrapped = (j > i && j - i > half) || (i > j && i - j > half);
                if wrapped {
                    corner_map.push((i, j, v));
                } else {
                    if j > i {
                        ku = ku.max(j - i);
                    } else {
                        kl = kl.max(i - j);
                    }
                    band_rows[i].push((j, v));
                }
            }
        }
        let band = BandLu::factor(n, kl, ku, &band_rows)?;
        let mut corner_rows: Vec<usize> = corner_map.iter().map(|c| c.0).collect();
        corner_rows.sort_unstable();
        corner_rows.dedup();
        let corners: Vec<(usize, usize, f64)> = corner_map
            .iter()
            .map(|&(i, j, v)| (corner_rows.binary_search(&i).unwrap(), j, v))
            .collect();
        let r = corner_rows.len();
        let mut z = Vec::with_capacity(r);
        for &row in &corner_rows {
            let mut e = vec![0.0; n];
            e[row] = 1.0;
            band.solve_in_place(&mut e);
            z.push(e);
        }
        let cap = if r > 0 {
            let mut s = DMatrix::<f64>::identity(r, r);
            for &(slot, j, v) in &corners {
                for (c, zc) in z.iter().enumerate() {
                    s[(slot, c)] += v * zc[j];
                }
            }
            let lu = s.lu();
            if !lu.is_invertible() {
                return Err(FilmError::Numerical("singular capacitance matrix".into()));
            }
            Some(lu)
        } else {
            None
        };
        Ok(CyclicBandSolver {
            band,
            corner_rows,
            corners,
            z,
            cap,
        })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.band.solve_in_place(b);
        if let Some(cap) = &self.cap {
            let r = self.corner_rows.len();
            let mut wy = DVector::<f64>::zeros(r);
            for &(slot, j, v) in &self.corners {
                wy[slot] += v * b[j];
            }
            let t = cap
                .solve(&wy)
                .expect("capacitance matrix checked invertible");
            for (c, zc) in self.z.iter().enumerate() {
                let tc = t[c];
                for (bi, zi) in b.iter_mut().zip(zc) {
                    *bi -= tc * zi;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(n: usize, rows: &[Vec<(usize, f64)>], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (i, r) in rows.iter().enumerate() {
            for &(j, v) in r {
                out[i] += v * x[j];
            }
        }
        out
    }

    fn pseudo(i: usize) -> f64 {
        ((i * 2654435761usize) % 1000) as f64 / 500.0 - 1.0
    }

    #[test]
    fn band_solve_needs_pivoting() {
        // zero diagonal forces row swaps
        let n = 30;
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            for d in -2i64..=3 {
                let j = i as i64 + d;
                if j >= 0 && (j as usize) < n {
                    let v = if d == 0 {
                        0.0
                    } else {
                        pseudo(i * 7 + j as usize) + d as f64 * 0.3
                    };
                    rows[i].push((j as usize, v));
                }
            }
        }
        let lu = BandLu::factor(n, 2, 3, &rows).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b = dense_mul(n, &rows, &x);
        lu.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-9, "{a} vs {e}");
        }
    }

    #[test]
    fn cyclic_solve() {
        let n = 40;
        let mut rows = vec![Vec::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            for d in -3i64..=3 {
                let j = (i as i64 + d).rem_euclid(n as i64) as usize;
                let v = if d == 0 { 4.0 } else { pseudo(i * 13 + j) };
                row.push((j, v));
            }
        }
        let s = CyclicBandSolver::new(n, &rows).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
        let mut b = dense_mul(n, &rows, &x);
        s.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_is_reported() {
        let rows = vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0), (1, 1.0)]];
        assert!(BandLu::factor(2, 1, 1, &rows).is_err());
    }
}
