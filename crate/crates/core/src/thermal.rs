//! Averaged heat-transfer models for the free-surface temperature θ (and,
//! for the two-field model, the interfacial curvature φ of the profile).
//!
//! Every model is written pointwise on a [`ThermalJet`] and split into an
//! explicit part and the relaxation terms `∝ 1/h²`, which the integrator
//! treats implicitly.

use serde::{Deserialize, Serialize};

use crate::error::{FilmError, Result};
use crate::fd::Derivatives;
use crate::hydro::{HydroDerivs, HydroState};
use crate::model::ThermalModel;
use crate::params::{theta0, DimensionlessGroups};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub theta: Vec<f64>,
    /// Present only for the θ–φ model.
    pub phi: Option<Vec<f64>>,
}

impl ThermalState {
    /// Conductive equilibrium `θ = θ0(h)`, `φ = 0`.
    pub fn equilibrium(model: ThermalModel, h: &[f64], bi: f64) -> Self {
        let theta = h.iter().map(|&h| theta0(bi, h)).collect();
        let phi = model.has_phi().then(|| vec![0.0; h.len()]);
        ThermalState { theta, phi }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// Local values and streamwise derivatives at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThermalJet {
    pub h: f64,
    pub hx: f64,
    pub hxx: f64,
    pub q: f64,
    pub qx: f64,
    pub theta: f64,
    pub tx: f64,
    pub txx: f64,
    pub phi: f64,
    pub px: f64,
    pub pxx: f64,
}

/// Explicit part of `(∂t θ, ∂t φ)`.
pub fn explicit_point(model: ThermalModel, j: &ThermalJet, bi: f64, pe: f64) -> (f64, f64) {
    let ThermalJet {
        h,
        hx,
        hxx,
        q,
        qx,
        theta: th,
        tx,
        txx,
        phi,
        px,
        pxx,
    } = *j;
    let b = bi * h;
    let r = q / h;
    let inv3pe = 1.0 / (3.0 * pe);
    match model {
        ThermalModel::Theta => {
            let d = 27.0 + 7.0 * b;
            let adv = -3.0 * (82.0 + 19.0 * b) / (7.0 * d) * r * tx
                - 57.0 * b / (7.0 * d) * q * th / (h * h) * hx
                + 3.0 * (11.0 + (-11.0 + 38.0 * b) * th) / (14.0 * d * h) * qx;
            let diff = txx
                + (6.0 + 3.0 * (-2.0 + 7.0 * b) * th) / d * hxx / h
                + (6.0 + 6.0 * (-1.0 + 2.0 * b) * th) / d * hx * hx / (h * h)
                // no factor θ here: with it the slaved state misses
                // conduction on a wavy film at second order
                + 6.0 * (8.0 + 7.0 * b) / d * hx * tx / h;
            (adv + diff * inv3pe, 0.0)
        }
        ThermalModel::Scheid => {
            let adv = -27.0 / 20.0 * r * tx + 7.0 / 40.0 * (1.0 - th) / h * qx;
            let diff =
                txx + (1.0 - th) * hxx / h + (1.0 - th - 1.5 * b) * hx * hx / (h * h) + hx * tx / h;
            (adv + diff * inv3pe, 0.0)
        }
        ThermalModel::LinTruncated => {
            let s = 3.0 + b;
            let adv = -3.0 * (25.0 + 7.0 * b) / (20.0 * s) * r * tx
                - 21.0 * b / (20.0 * s) * q * th / (h * h) * hx
                + 27.0 * bi * th / (20.0 * s) * qx;
            let diff = txx
                + 3.0 * b * th / s * hxx / h
                + 3.0 * b * th / s * hx * hx / (h * h)
                + 6.0 * (1.0 + b) * th / s * hx * tx / h;
            (adv + diff * inv3pe, 0.0)
        }
        ThermalModel::ThetaPhi => {
            let dth = -1.5 * r * tx + (2.0 * bi * hx * tx + bi * th * hxx + txx) * inv3pe;
            let e = -3.0 * (25.0 + 11.0 * b) / 14.0;
            let f = -(66.0 + 9.0 * phi + 6.0 * (38.0 * b - 11.0) * th) / 28.0;
            let g = 57.0 / 7.0 * b;
            let jj = 6.0 - (25.0 + 7.0 * b) * phi + 6.0 * (2.0 * b - 1.0) * th;
            let l = 48.0 - 12.0 * b - 14.0 * b * b;
            // Curvature term needed for the slaved state to match conduction
            // on a wavy film at second order (the hx² terms above already
            // do). It is the θ-model coefficient mapped through the θ row.
            let k = 6.0 - 6.0 * (1.0 + b) * th - 7.0 * b * b * th;
            let adv = -(15.0 / 14.0 * r * px + e * r * tx + f * qx / h + g * q * th / (h * h) * hx);
            let diff =
                jj * hx * hx / (h * h) + k * hxx / h + 4.0 / h * hx * px + l * hx * tx / h + pxx;
            (dth, adv + diff * inv3pe)
        }
    }
}

/// Implicit (relaxation) part of `(∂t θ, ∂t φ)`.
pub fn implicit_point(model: ThermalModel, j: &ThermalJet, bi: f64, pe: f64) -> (f64, f64) {
    let ThermalJet {
        h,
        hx,
        theta: th,
        phi,
        ..
    } = *j;
    let b = bi * h;
    let t0 = theta0(bi, h);
    let c = 1.0 / (3.0 * pe * h * h);
    match model {
        ThermalModel::ThetaPhi => (
            phi * (1.0 + hx * hx) * c,
            (-60.0 * (1.0 + b) * (th - t0) - (27.0 + 7.0 * b) * phi) * c,
        ),
        _ => (-relaxation_rate(model, b) * (th - t0) * c, 0.0),
    }
}

/// Relaxation coefficient of the one-field models.
fn relaxation_rate(model: ThermalModel, b: f64) -> f64 {
    match model {
        ThermalModel::Theta => 60.0 * (1.0 + b) / (27.0 + 7.0 * b),
        ThermalModel::Scheid => 3.0,
        ThermalModel::LinTruncated => 6.0 * (1.0 + b) / (3.0 + b),
        ThermalModel::ThetaPhi => unreachable!("two-field model has a matrix relaxation"),
    }
}

/// Full `(∂t θ, ∂t φ)` at one point.
pub fn rhs_point(model: ThermalModel, j: &ThermalJet, bi: f64, pe: f64) -> (f64, f64) {
    let (a, b) = explicit_point(model, j, bi, pe);
    let (c, d) = implicit_point(model, j, bi, pe);
    (a + c, b + d)
}

/// Solves `y = z + a f_I(y)` pointwise for the relaxation terms; `j`
/// supplies the frozen hydrodynamic values.
pub fn implicit_solve_point(
    model: ThermalModel,
    j: &ThermalJet,
    bi: f64,
    pe: f64,
    a: f64,
    z: (f64, f64),
) -> (f64, f64) {
    let h = j.h;
    let b = bi * h;
    let t0 = theta0(bi, h);
    let c = 1.0 / (3.0 * pe * h * h);
    match model {
        ThermalModel::ThetaPhi => {
            let c1 = (1.0 + j.hx * j.hx) * c;
            let aa = 60.0 * (1.0 + b) * c;
            let bb = (27.0 + 7.0 * b) * c;
            let phi = (z.1 - a * aa * (z.0 - t0)) / (1.0 + a * bb + a * a * aa * c1);
            (z.0 + a * c1 * phi, phi)
        }
        _ => {
            let rc = relaxation_rate(model, b) * c;
            ((z.0 + a * rc * t0) / (1.0 + a * rc), 0.0)
        }
    }
}

/// Streamwise derivatives of the thermal fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThermalDerivs {
    pub tx: Vec<f64>,
    pub txx: Vec<f64>,
    pub px: Vec<f64>,
    pub pxx: Vec<f64>,
}

impl ThermalDerivs {
    pub fn compute(s: &ThermalState, d: &Derivatives) -> Self {
        let (px, pxx) = match &s.phi {
            Some(p) => (d.d1.apply(p), d.d2.apply(p)),
            None => (Vec::new(), Vec::new()),
        };
        ThermalDerivs {
            tx: d.d1.apply(&s.theta),
            txx: d.d2.apply(&s.theta),
            px,
            pxx,
        }
    }
}

pub(crate) fn jet(
    hs: &HydroState,
    hd: &HydroDerivs,
    ts: &ThermalState,
    td: &ThermalDerivs,
    i: usize,
) -> ThermalJet {
    let (phi, px, pxx) = match &ts.phi {
        Some(p) => (p[i], td.px[i], td.pxx[i]),
        None => (0.0, 0.0, 0.0),
    };
    ThermalJet {
        h: hs.h[i],
        hx: hd.hx[i],
        hxx: hd.hxx[i],
        q: hs.q[i],
        qx: hd.qx[i],
        theta: ts.theta[i],
        tx: td.tx[i],
        txx: td.txx[i],
        phi,
        px,
        pxx,
    }
}

fn check_state(model: ThermalModel, hs: &HydroState, ts: &ThermalState) -> Result<()> {
    if ts.theta.len() != hs.len() {
        return Err(FilmError::Domain(
            "thermal and hydrodynamic arrays differ in length".into(),
        ));
    }
    if model.has_phi() != ts.phi.is_some() {
        return Err(FilmError::Usage(format!(
            "model {model} and the presence of φ disagree"
        )));
    }
    if let Some(i) = hs.h.iter().position(|&v| !(v > 0.0)) {
        return Err(FilmError::Domain(format!(
            "h must be positive, h[{i}] = {}",
            hs.h[i]
        )));
    }
    Ok(())
}

/// Full right-hand side on a grid.
pub fn thermal_rhs(
    model: ThermalModel,
    hs: &HydroState,
    ts: &ThermalState,
    g: &DimensionlessGroups,
    d: &Derivatives,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    check_state(model, hs, ts)?;
    let hd = HydroDerivs::compute(hs, d);
    let td = ThermalDerivs::compute(ts, d);
    let n = hs.len();
    let mut dth = vec![0.0; n];
    let mut dph = vec![0.0; n];
    for i in 0..n {
        let (a, b) = rhs_point(model, &jet(hs, &hd, ts, &td, i), g.bi, g.pe);
        dth[i] = a;
        dph[i] = b;
    }
    if dth.iter().chain(&dph).any(|v| !v.is_finite()) {
        return Err(FilmError::Numerical(format!(
            "non-finite {model} right-hand side"
        )));
    }
    Ok((dth, model.has_phi().then_some(dph)))
}

pub fn rhs_theta(
    hs: &HydroState,
    theta: &[f64],
    g: &DimensionlessGroups,
    d: &Derivatives,
) -> Result<Vec<f64>> {
    one_field(ThermalModel::Theta, hs, theta, g, d)
}

pub fn rhs_scheid(
    hs: &HydroState,
    theta: &[f64],
    g: &DimensionlessGroups,
    d: &Derivatives,
) -> Result<Vec<f64>> {
    one_field(ThermalModel::Scheid, hs, theta, g, d)
}

pub fn rhs_lin_truncated(
    hs: &HydroState,
    theta: &[f64],
    g: &DimensionlessGroups,
    d: &Derivatives,
) -> Result<Vec<f64>> {
    one_field(ThermalModel::LinTruncated, hs, theta, g, d)
}

pub fn rhs_theta_phi(
    hs: &HydroState,
    theta: &[f64],
    phi: &[f64],
    g: &DimensionlessGroups,
    d: &Derivatives,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let ts = ThermalState {
        theta: theta.to_vec(),
        phi: Some(phi.to_vec()),
    };
    let (a, b) = thermal_rhs(ThermalModel::ThetaPhi, hs, &ts, g, d)?;
    Ok((a, b.expect("two-field model returns φ")))
}

fn one_field(
    model: ThermalModel,
    hs: &HydroState,
    theta: &[f64],
    g: &DimensionlessGroups,
    d: &Derivatives,
) -> Result<Vec<f64>> {
    let ts = ThermalState {
        theta: theta.to_vec(),
        phi: None,
    };
    Ok(thermal_rhs(model, hs, &ts, g, d)?.0)
}

/// Derivatives of the pointwise right-hand side with respect to the jet
/// entries `(θ, θx, θxx, φ, φx, φxx)`, by central differences. Rows are
/// `(∂t θ, ∂t φ)`.
pub fn jet_jacobian(model: ThermalModel, base: &ThermalJet, bi: f64, pe: f64) -> [[f64; 6]; 2] {
    let mut out = [[0.0; 6]; 2];
    for k in 0..6 {
        let scale = match k {
            0 => base.theta.abs().max(1.0),
            3 => base.phi.abs().max(1.0),
            _ => 1.0,
        };
        let eps = 1e-5 * scale;
        let mut p = *base;
        let mut m = *base;
        {
            let fields: [&mut f64; 6] = [
                &mut p.theta,
                &mut p.tx,
                &mut p.txx,
                &mut p.phi,
                &mut p.px,
                &mut p.pxx,
            ];
            *fields.into_iter().nth(k).unwrap() += eps;
        }
        {
            let fields: [&mut f64; 6] = [
                &mut m.theta,
                &mut m.tx,
                &mut m.txx,
                &mut m.phi,
                &mut m.px,
                &mut m.pxx,
            ];
            *fields.into_iter().nth(k).unwrap() -= eps;
        }
        let fp = rhs_point(model, &p, bi, pe);
        let fm = rhs_point(model, &m, bi, pe);
        out[0][k] = (fp.0 - fm.0) / (2.0 * eps);
        out[1][k] = (fp.1 - fm.1) / (2.0 * eps);
    }
    out
}

/// Flat-film linearization for a perturbation `exp(i k x)`: returns the
/// real (non-advective) part of the symbol scaled by `3 Pe`, as a 2x2
/// matrix (the φ row and column are zero for one-field models).
pub fn flat_symbol_real(model: ThermalModel, bi: f64, pe: f64, k: f64) -> [[f64; 2]; 2] {
    let base = ThermalJet {
        h: 1.0,
        q: 1.0 / 3.0,
        theta: theta0(bi, 1.0),
        ..Default::default()
    };
    let jac = jet_jacobian(model, &base, bi, pe);
    let s = 3.0 * pe;
    let mut c = [[0.0; 2]; 2];
    for r in 0..2 {
        c[r][0] = s * (jac[r][0] - k * k * jac[r][2]);
        c[r][1] = s * (jac[r][3] - k * k * jac[r][5]);
    }
    c
}
