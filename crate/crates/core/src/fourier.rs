//! Fourier equation for the film temperature in mapped coordinates
//! `(x, ȳ = y/h)`: finite differences along the plate, Chebyshev
//! collocation across the film.
//!
//! With `s = ȳ h_x / h` the mapped equation reads
//!
//! ```text
//! T_t = -u T_x + w T_ȳ
//!       + [T_xx - 2 s T_xȳ + (1/h² + s²) T_ȳȳ + ȳ (2 h_x²/h² - h_xx/h) T_ȳ] / (3 Pe)
//! w   = (ȳ h_t + 3 q_x G(ȳ)) / h,   G = ȳ²/2 - ȳ³/6
//! ```
//!
//! with `T = 1` at the wall and the Newton law
//! `(1 + h_x²)/h T_ȳ - h_x T_x + Bi sqrt(1 + h_x²) T = 0` at `ȳ = 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chebyshev::{basis_phi_jet, ChebyshevGrid};
use crate::closure::nusselt_temperature_unchecked;
use crate::error::{domain, FilmError, Result};
use crate::fd::{DerivOp, Derivatives};
use crate::hydro::{HydroDerivs, HydroState};
use crate::params::DimensionlessGroups;

/// Temperature on the tensor grid, stored x-major: `t[i * ny + j]` is the
/// value at streamwise node `i` and Chebyshev node `j` (`j = 0` is the
/// wall).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureField2D {
    pub nx: usize,
    pub ny: usize,
    pub t: Vec<f64>,
}

impl TemperatureField2D {
    /// Conductive (Nusselt) profile in every column.
    pub fn nusselt(h: &[f64], ops: &FourierOps, bi: f64) -> Self {
        let ny = ops.ny();
        let mut t = Vec::with_capacity(h.len() * ny);
        for &hi in h {
            for &y in &ops.ybar {
                t.push(nusselt_temperature_unchecked(y, hi, bi));
            }
        }
        TemperatureField2D { nx: h.len(), ny, t }
    }

    /// Uniform temperature.
    pub fn uniform(nx: usize, ny: usize, value: f64) -> Self {
        TemperatureField2D {
            nx,
            ny,
            t: vec![value; nx * ny],
        }
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.t[i * self.ny..(i + 1) * self.ny]
    }

    pub fn column_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.t[i * self.ny..(i + 1) * self.ny]
    }

    /// Free-surface temperature `θ = T(ȳ = 1)`.
    pub fn surface(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|i| self.t[i * self.ny + self.ny - 1])
            .collect()
    }
}

/// Cross-stream operators shared by every Fourier solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierOps {
    pub cheb: ChebyshevGrid,
    pub ybar: Vec<f64>,
    /// `d/dȳ`
    pub dy: DMatrix<f64>,
    /// `d²/dȳ²`
    pub dyy: DMatrix<f64>,
}

impl FourierOps {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return domain(format!("Chebyshev degree must be at least 4, got {n}"));
        }
        let cheb = ChebyshevGrid::new(n)?;
        let ybar = cheb.ybar();
        let dy = cheb.d1_ybar();
        let dyy = cheb.d2_ybar();
        Ok(FourierOps {
            cheb,
            ybar,
            dy,
            dyy,
        })
    }

    pub fn ny(&self) -> usize {
        self.ybar.len()
    }

    /// `ȳ`-derivative of every column.
    pub fn dybar(&self, f: &TemperatureField2D) -> Vec<f64> {
        let ny = self.ny();
        let mut out = vec![0.0; f.t.len()];
        for i in 0..f.nx {
            let col = f.column(i);
            let o = &mut out[i * ny..(i + 1) * ny];
            for (r, or) in o.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (c, v) in col.iter().enumerate() {
                    acc += self.dy[(r, c)] * v;
                }
                *or = acc;
            }
        }
        out
    }

    /// Spectral radius of `ȳ D_ȳ` restricted to interior nodes (boundary
    /// rows are algebraic). Scales the explicit mixed-derivative term in the
    /// step-size bound; the row-sum norm would be about 3.5x larger.
    pub fn mixed_bound(&self) -> f64 {
        let ny = self.ny();
        let m = DMatrix::from_fn(ny - 2, ny - 2, |r, c| {
            self.ybar[r + 1] * self.dy[(r + 1, c + 1)]
        });
        m.complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

#[inline]
fn g_int(y: f64) -> f64 {
    y * y * (0.5 - y / 6.0)
}

fn check_h(h: &[f64]) -> Result<()> {
    if let Some(i) = h.iter().position(|&v| !(v > 1e-12)) {
        return Err(FilmError::Numerical(format!(
            "mapping singular: h[{i}] = {}",
            h[i]
        )));
    }
    Ok(())
}

/// Explicit part `-u T_x + (T_xx - 2 s T_xȳ) / (3 Pe)` on interior nodes;
/// wall and surface rows are zero.
pub fn fourier_explicit(
    f: &TemperatureField2D,
    hs: &HydroState,
    hd: &HydroDerivs,
    pe: f64,
    ops: &FourierOps,
    d: &Derivatives,
) -> Result<Vec<f64>> {
    check_h(&hs.h)?;
    let ny = ops.ny();
    let nx = f.nx;
    let mut tx = vec![0.0; f.t.len()];
    let mut txx = vec![0.0; f.t.len()];
    d.d1.apply_strided_into(&f.t, ny, &mut tx);
    d.d2.apply_strided_into(&f.t, ny, &mut txx);
    let ty = ops.dybar(f);
    let mut txy = vec![0.0; f.t.len()];
    d.d1.apply_strided_into(&ty, ny, &mut txy);
    let inv = 1.0 / (3.0 * pe);
    let mut out = vec![0.0; f.t.len()];
    for i in 0..nx {
        let h = hs.h[i];
        let r = 3.0 * hs.q[i] / h;
        let hx_h = hd.hx[i] / h;
        for j in 1..ny - 1 {
            let y = ops.ybar[j];
            let k = i * ny + j;
            let u = r * (y - 0.5 * y * y);
            let s = y * hx_h;
            out[k] = -u * tx[k] + (txx[k] - 2.0 * s * txy[k]) * inv;
        }
    }
    Ok(out)
}

/// Implicit part `w T_ȳ + [(1/h² + s²) T_ȳȳ + ȳ (2 h_x²/h² - h_xx/h) T_ȳ] / (3 Pe)`
/// on interior nodes.
pub fn fourier_implicit(
    f: &TemperatureField2D,
    hs: &HydroState,
    hd: &HydroDerivs,
    ht: &[f64],
    pe: f64,
    ops: &FourierOps,
) -> Result<Vec<f64>> {
    check_h(&hs.h)?;
    let ny = ops.ny();
    let mut out = vec![0.0; f.t.len()];
    for i in 0..f.nx {
        let col = f.column(i);
        let (a, b) = column_coefficients(hs.h[i], hd.hx[i], hd.hxx[i], hd.qx[i], ht[i], pe, ops);
        for j in 1..ny - 1 {
            let mut t1 = 0.0;
            let mut t2 = 0.0;
            for (c, v) in col.iter().enumerate() {
                t1 += ops.dy[(j, c)] * v;
                t2 += ops.dyy[(j, c)] * v;
            }
            out[i * ny + j] = a[j] * t2 + b[j] * t1;
        }
    }
    Ok(out)
}

/// Coefficients of `T_ȳȳ` and `T_ȳ` in the implicit operator of one column.
fn column_coefficients(
    h: f64,
    hx: f64,
    hxx: f64,
    qx: f64,
    ht: f64,
    pe: f64,
    ops: &FourierOps,
) -> (Vec<f64>, Vec<f64>) {
    let inv = 1.0 / (3.0 * pe);
    let ny = ops.ny();
    let mut a = vec![0.0; ny];
    let mut b = vec![0.0; ny];
    let curv = 2.0 * hx * hx / (h * h) - hxx / h;
    for j in 0..ny {
        let y = ops.ybar[j];
        let s = y * hx / h;
        let w = (y * ht + 3.0 * qx * g_int(y)) / h;
        a[j] = (1.0 / (h * h) + s * s) * inv;
        b[j] = w + y * curv * inv;
    }
    (a, b)
}

/// Full mapped right-hand side on interior nodes (boundary rows are
/// algebraic and returned as zero).
pub fn mapped_fourier_rhs(
    f: &TemperatureField2D,
    hs: &HydroState,
    ht: &[f64],
    g: &DimensionlessGroups,
    ops: &FourierOps,
    d: &Derivatives,
) -> Result<Vec<f64>> {
    let hd = HydroDerivs::compute(hs, d);
    let mut e = fourier_explicit(f, hs, &hd, g.pe, ops, d)?;
    let i = fourier_implicit(f, hs, &hd, ht, g.pe, ops)?;
    for (a, b) in e.iter_mut().zip(&i) {
        *a += b;
    }
    if e.iter().any(|v| !v.is_finite()) {
        return Err(FilmError::Numerical(
            "non-finite Fourier right-hand side".into(),
        ));
    }
    Ok(e)
}

/// Residuals of the wall and surface conditions per column:
/// `(T(0) - 1, (1 + h_x²)/h T_ȳ - h_x T_x + Bi sqrt(1 + h_x²) T)`.
pub fn boundary_residuals(
    f: &TemperatureField2D,
    hs: &HydroState,
    hd: &HydroDerivs,
    bi: f64,
    ops: &FourierOps,
    d1: &DerivOp,
) -> Vec<(f64, f64)> {
    let ny = ops.ny();
    let top = f.surface();
    let tx = d1.apply(&top);
    (0..f.nx)
        .map(|i| {
            let col = f.column(i);
            let hx = hd.hx[i];
            let h = hs.h[i];
            let ty: f64 = (0..ny).map(|c| ops.dy[(ny - 1, c)] * col[c]).sum();
            let robin =
                (1.0 + hx * hx) / h * ty - hx * tx[i] + bi * (1.0 + hx * hx).sqrt() * col[ny - 1];
            (col[0] - 1.0, robin)
        })
        .collect()
}

/// Solves `T = Z + a f_I(T)` column by column with the wall and Newton
/// rows imposed. The `h_x T_x` coupling of the Newton row is iterated to
/// convergence. `fix` overwrites columns set by streamwise boundary
/// conditions (open domains) after every sweep.
#[allow(clippy::too_many_arguments)]
pub fn implicit_column_solve(
    z: &TemperatureField2D,
    hs: &HydroState,
    hd: &HydroDerivs,
    ht: &[f64],
    a: f64,
    bi: f64,
    pe: f64,
    ops: &FourierOps,
    d1: &DerivOp,
    fix: &dyn Fn(&mut TemperatureField2D),
) -> Result<TemperatureField2D> {
    check_h(&hs.h)?;
    let ny = ops.ny();
    let nx = z.nx;
    let last = ny - 1;
    let mut lus = Vec::with_capacity(nx);
    for i in 0..nx {
        let h = hs.h[i];
        let hx = hd.hx[i];
        let (ca, cb) = column_coefficients(h, hx, hd.hxx[i], hd.qx[i], ht[i], pe, ops);
        let mut m = DMatrix::<f64>::zeros(ny, ny);
        m[(0, 0)] = 1.0;
        for j in 1..last {
            for c in 0..ny {
                m[(j, c)] = -a * (ca[j] * ops.dyy[(j, c)] + cb[j] * ops.dy[(j, c)]);
            }
            m[(j, j)] += 1.0;
        }
        let g = (1.0 + hx * hx) / h;
        for c in 0..ny {
            m[(last, c)] = g * ops.dy[(last, c)];
        }
        m[(last, last)] += bi * (1.0 + hx * hx).sqrt();
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(FilmError::Numerical(format!(
                "singular column operator at x index {i}"
            )));
        }
        lus.push(lu);
    }
    // each column is affine in the surface right-hand side r = hx·Tx:
    // T = base + r·resp, so the fixed point only recombines columns
    let mut base = z.clone();
    let mut resp = TemperatureField2D::uniform(nx, ny, 0.0);
    let mut rhs = DVector::<f64>::zeros(ny);
    let mut unit = DVector::<f64>::zeros(ny);
    unit[last] = 1.0;
    for i in 0..nx {
        let zc = z.column(i);
        rhs[0] = 1.0;
        rhs.as_mut_slice()[1..last].copy_from_slice(&zc[1..last]);
        rhs[last] = 0.0;
        let b = lus[i]
            .solve(&rhs)
            .ok_or_else(|| FilmError::Numerical("column solve failed".into()))?;
        base.column_mut(i).copy_from_slice(b.as_slice());
        let g = lus[i]
            .solve(&unit)
            .ok_or_else(|| FilmError::Numerical("column solve failed".into()))?;
        resp.column_mut(i).copy_from_slice(g.as_slice());
    }
    let mut out = z.clone();
    let mut top = z.surface();
    for iter in 0..50 {
        let tx = d1.apply(&top);
        for i in 0..nx {
            let r = hd.hx[i] * tx[i];
            let (b, g) = (base.column(i), resp.column(i));
            for (o, (bv, gv)) in out.column_mut(i).iter_mut().zip(b.iter().zip(g)) {
                *o = bv + r * gv;
            }
        }
        fix(&mut out);
        let new_top = out.surface();
        let change = new_top
            .iter()
            .zip(&top)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        top = new_top;
        if change < 1e-13 {
            break;
        }
        if iter == 49 {
            return Err(FilmError::Numerical(format!(
                "surface condition iteration stalled (change {change:e})"
            )));
        }
    }
    if out.t.iter().any(|v| !v.is_finite()) {
        return Err(FilmError::Numerical("non-finite temperature".into()));
    }
    Ok(out)
}

/// Restores the wall and surface conditions from the interior values
/// (used after the final combination of a time step).
pub fn impose_boundary_rows(
    f: &mut TemperatureField2D,
    hs: &HydroState,
    hd: &HydroDerivs,
    bi: f64,
    ops: &FourierOps,
    d1: &DerivOp,
    fix: &dyn Fn(&mut TemperatureField2D),
) -> Result<()> {
    let ny = ops.ny();
    let last = ny - 1;
    for i in 0..f.nx {
        f.column_mut(i)[0] = 1.0;
    }
    for _ in 0..50 {
        let top = f.surface();
        let tx = d1.apply(&top);
        for i in 0..f.nx {
            let h = hs.h[i];
            let hx = hd.hx[i];
            let g = (1.0 + hx * hx) / h;
            let col = f.column_mut(i);
            let partial: f64 = (0..last).map(|c| ops.dy[(last, c)] * col[c]).sum();
            let diag = g * ops.dy[(last, last)] + bi * (1.0 + hx * hx).sqrt();
            col[last] = (hx * tx[i] - g * partial) / diag;
        }
        // measured after `fix`: columns it prescribes (inlet) never move
        fix(f);
        let change = f
            .surface()
            .iter()
            .zip(&top)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change < 1e-13 {
            return Ok(());
        }
    }
    Err(FilmError::Numerical(
        "surface condition iteration stalled".into(),
    ))
}

/// Wall heat flux `-(1/h) T_ȳ(0)` per column.
pub fn wall_flux(f: &TemperatureField2D, h: &[f64], ops: &FourierOps) -> Vec<f64> {
    let ny = ops.ny();
    (0..f.nx)
        .map(|i| {
            let col = f.column(i);
            let ty: f64 = (0..ny).map(|c| ops.dy[(0, c)] * col[c]).sum();
            -ty / h[i]
        })
        .collect()
}

/// Steady conduction across a flat film of thickness `h`, expanded on the
/// basis `T = 1 + Σ τ_i φ_i(X)` and closed with the regularized surface row
/// `η T_xx = T_y + Bi T` (the streamwise curvature vanishes on a flat film).
/// Returns `T` at the Gauss-Lobatto nodes, wall first.
pub fn flat_film_steady_cheb(bi: f64, h: f64, n: usize, eta: f64) -> Result<Vec<f64>> {
    if n < 8 {
        return domain(format!("n must be at least 8, got {n}"));
    }
    if !(eta > 0.0) {
        return domain(format!("eta must be positive, got {eta}"));
    }
    if !(h > 0.0) || bi < 0.0 {
        return domain("h must be positive and bi non-negative");
    }
    let cheb = ChebyshevGrid::new(n)?;
    let x = &cheb.nodes;
    // X = 2 y / h - 1: d/dy = (2/h) d/dX
    let dy = 2.0 / h;
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for k in 1..n {
        for i in 1..=n {
            m[(k - 1, i - 1)] = dy * dy * basis_phi_jet(i, x[k]).2;
        }
    }
    // surface row: eta * T_xx (= 0) - T_y - Bi T = 0
    let txx_surface = 0.0;
    for i in 1..=n {
        let (p, dp, _) = basis_phi_jet(i, 1.0);
        m[(n - 1, i - 1)] = dy * dp + bi * p;
    }
    rhs[n - 1] = eta * txx_surface - bi;
    let lu = m.lu();
    let tau = lu
        .solve(&rhs)
        .ok_or_else(|| FilmError::Numerical("singular steady Chebyshev system".into()))?;
    Ok(x.iter()
        .map(|&xk| {
            1.0 + (1..=n)
                .map(|i| tau[i - 1] * basis_phi_jet(i, xk).0)
                .sum::<f64>()
        })
        .collect())
}
