//! Saint-Venant models for the film thickness `h` and flow rate `q`.

use serde::{Deserialize, Serialize};

use crate::error::{FilmError, Result};
use crate::fd::{Derivatives, Grid1D};
use crate::model::HydroModel;
use crate::params::DimensionlessGroups;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroState {
    pub h: Vec<f64>,
    pub q: Vec<f64>,
}

impl HydroState {
    pub fn new(h: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if h.len() != q.len() {
            return Err(FilmError::Domain(format!(
                "h has {} points but q has {}",
                h.len(),
                q.len()
            )));
        }
        if let Some((i, &v)) = h.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(FilmError::Domain(format!(
                "h must be positive, h[{i}] = {v}"
            )));
        }
        Ok(HydroState { h, q })
    }

    /// Flat Nusselt film on `n` points.
    pub fn flat(n: usize) -> Self {
        HydroState {
            h: vec![1.0; n],
            q: vec![1.0 / 3.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// Local derivatives of `(h, q)` at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HydroJet {
    pub h: f64,
    pub hx: f64,
    pub hxx: f64,
    pub hxxx: f64,
    pub q: f64,
    pub qx: f64,
    pub qxx: f64,
}

/// `∂t q` of the weighted-residual (WRIBL) model at one point.
pub fn wribl_qdot(j: &HydroJet, g: &DimensionlessGroups) -> f64 {
    let HydroJet {
        h,
        hx,
        hxx,
        hxxx,
        q,
        qx,
        qxx,
    } = *j;
    let r = q / h;
    let rhs = 5.0 * h / 6.0 - 5.0 * q / (2.0 * h * h)
        + 3.0 * g.re / 7.0 * (9.0 * r * hx - 17.0 * qx) * r
        - 5.0 / 6.0 * g.ct * hx
        + 5.0 / 6.0 * g.we * h * hxxx
        + 4.0 * q * hx * hx / (h * h)
        - 9.0 / (2.0 * h) * hx * qx
        - 6.0 * r * hxx
        + 4.5 * qxx;
    rhs / (3.0 * g.re)
}

/// `∂t q` of the Vila model at one point, with the flux divergence
/// expanded by the chain rule.
pub fn vila_qdot(j: &HydroJet, g: &DimensionlessGroups) -> f64 {
    let HydroJet {
        h, hx, hxxx, q, qx, ..
    } = *j;
    let flux_x = 2.0 * q * qx / h - q * q * hx / (h * h) + 2.0 / 45.0 * h.powi(4) * hx;
    -flux_x + (h - 3.0 * q / (h * h) + g.we * hxxx) / (3.0 * g.re)
}

/// Coefficient `c(h)` of the capillary term `c(h) ∂xxx h` in `∂t q`.
pub fn capillary_coefficient(model: HydroModel, h: f64, g: &DimensionlessGroups) -> f64 {
    match model {
        HydroModel::Wribl => 5.0 / 6.0 * g.we * h / (3.0 * g.re),
        HydroModel::Vila => g.we / (3.0 * g.re),
    }
}

/// `d c / d h`.
pub fn capillary_coefficient_dh(model: HydroModel, g: &DimensionlessGroups) -> f64 {
    match model {
        HydroModel::Wribl => 5.0 / 6.0 * g.we / (3.0 * g.re),
        HydroModel::Vila => 0.0,
    }
}

/// Scratch arrays holding the streamwise derivatives of `(h, q)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HydroDerivs {
    pub hx: Vec<f64>,
    pub hxx: Vec<f64>,
    pub hxxx: Vec<f64>,
    pub qx: Vec<f64>,
    pub qxx: Vec<f64>,
}

impl HydroDerivs {
    pub fn compute(state: &HydroState, d: &Derivatives) -> Self {
        HydroDerivs {
            hx: d.d1.apply(&state.h),
            hxx: d.d2.apply(&state.h),
            hxxx: d.d3.apply(&state.h),
            qx: d.d1.apply(&state.q),
            qxx: d.d2.apply(&state.q),
        }
    }

    pub fn jet(&self, s: &HydroState, i: usize) -> HydroJet {
        HydroJet {
            h: s.h[i],
            hx: self.hx[i],
            hxx: self.hxx[i],
            hxxx: self.hxxx[i],
            q: s.q[i],
            qx: self.qx[i],
            qxx: self.qxx[i],
        }
    }
}

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(FilmError::Numerical(format!(
            "non-finite {name} at index {i}"
        )));
    }
    Ok(())
}

/// Full right-hand side `(∂t h, ∂t q)` of either model.
pub fn hydro_rhs(
    model: HydroModel,
    state: &HydroState,
    g: &DimensionlessGroups,
    d: &Derivatives,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (dh, mut dq) = hydro_rhs_explicit(model, state, g, d)?;
    let hxxx = d.d3.apply(&state.h);
    for i in 0..state.len() {
        dq[i] += capillary_coefficient(model, state.h[i], g) * hxxx[i];
    }
    Ok((dh, dq))
}

/// Everything except the capillary term; `∂t h = -∂x q` is returned as
/// well although the integrator treats it implicitly.
pub fn hydro_rhs_explicit(
    model: HydroModel,
    state: &HydroState,
    g: &DimensionlessGroups,
    d: &Derivatives,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = state.len();
    if let Some(i) = state.h.iter().position(|&v| !(v > 0.0)) {
        return Err(FilmError::Domain(format!(
            "h must be positive, h[{i}] = {}",
            state.h[i]
        )));
    }
    let der = HydroDerivs::compute(state, d);
    let dh: Vec<f64> = der.qx.iter().map(|v| -v).collect();
    let mut dq = vec![0.0; n];
    match model {
        HydroModel::Wribl => {
            for (i, out) in dq.iter_mut().enumerate() {
                let mut j = der.jet(state, i);
                j.hxxx = 0.0;
                *out = wribl_qdot(&j, g);
            }
        }
        HydroModel::Vila => {
            // conservative flux divergence
            let flux: Vec<f64> = state
                .h
                .iter()
                .zip(&state.q)
                .map(|(&h, &q)| q * q / h + 2.0 / 225.0 * h.powi(5))
                .collect();
            let fx = d.d1.apply(&flux);
            for i in 0..n {
                let h = state.h[i];
                let q = state.q[i];
                dq[i] = -fx[i] + (h - 3.0 * q / (h * h)) / (3.0 * g.re);
            }
        }
    }
    check_finite("dh/dt", &dh)?;
    check_finite("dq/dt", &dq)?;
    Ok((dh, dq))
}

pub fn rhs_vila(
    state: &HydroState,
    g: &DimensionlessGroups,
    d: &Derivatives,
) -> Result<(Vec<f64>, Vec<f64>)> {
    hydro_rhs(HydroModel::Vila, state, g, d)
}

pub fn rhs_wribl(
    state: &HydroState,
    g: &DimensionlessGroups,
    d: &Derivatives,
) -> Result<(Vec<f64>, Vec<f64>)> {
    hydro_rhs(HydroModel::Wribl, state, g, d)
}

/// Flow rate imposed at the inlet together with `h`.
pub fn inlet_flowrate(h: f64) -> f64 {
    h * h * h / 3.0
}

/// Flat film with a small sinusoidal thickness perturbation.
pub fn perturbed_flat(grid: &Grid1D, amplitude: f64, modes: usize) -> HydroState {
    let l = grid.length();
    let h: Vec<f64> = grid
        .xs()
        .iter()
        .map(|&x| 1.0 + amplitude * (2.0 * std::f64::consts::PI * modes as f64 * x / l).sin())
        .collect();
    let q = h.iter().map(|&h| inlet_flowrate(h)).collect();
    HydroState { h, q }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DimensionlessGroups;
    use std::f64::consts::PI;

    fn groups() -> DimensionlessGroups {
        DimensionlessGroups::thermal(1.0, 1.0)
    }

    #[test]
    fn flat_film_is_equilibrium() {
        let grid = Grid1D::periodic(10.0, 64);
        let d = Derivatives::new(&grid);
        let s = HydroState::flat(64);
        for m in [HydroModel::Vila, HydroModel::Wribl] {
            let (dh, dq) = hydro_rhs(m, &s, &groups(), &d).unwrap();
            assert!(dh.iter().chain(&dq).all(|v| v.abs() < 1e-12), "{m}");
        }
    }

    #[test]
    fn uniform_relaxation() {
        let g = groups();
        let grid = Grid1D::periodic(10.0, 64);
        let d = Derivatives::new(&grid);
        let s = HydroState {
            h: vec![1.0; 64],
            q: vec![0.5; 64],
        };
        let (_, dq) = rhs_vila(&s, &g, &d).unwrap();
        let expect = (1.0 - 1.5) / (3.0 * g.re);
        assert!(dq.iter().all(|v| (v - expect).abs() < 1e-13));
        let s = HydroState {
            h: vec![1.0; 64],
            q: vec![2.0 / 3.0; 64],
        };
        let (_, dq) = rhs_wribl(&s, &g, &d).unwrap();
        let expect = (5.0 / 6.0 - 5.0 / 3.0) / (3.0 * g.re);
        assert!(dq.iter().all(|v| (v - expect).abs() < 1e-13));
    }

    #[test]
    fn vila_capillary_term() {
        let g = groups();
        let l = 20.0;
        let n = 256;
        let grid = Grid1D::periodic(l, n);
        let d = Derivatives::new(&grid);
        let eps = 1e-6;
        let kx = 2.0 * PI / l;
        let h: Vec<f64> = grid
            .xs()
            .iter()
            .map(|x| 1.0 + eps * (kx * x).sin())
            .collect();
        let s = HydroState {
            h,
            q: vec![1.0 / 3.0; n],
        };
        let (_, full) = rhs_vila(&s, &g, &d).unwrap();
        let (_, expl) = hydro_rhs_explicit(HydroModel::Vila, &s, &g, &d).unwrap();
        for (i, x) in grid.xs().iter().enumerate() {
            let term = (full[i] - expl[i]) * 3.0 * g.re;
            let exact = -eps * g.we * kx.powi(3) * (kx * x).cos();
            assert!((term - exact).abs() < 1e-4 * eps * g.we * kx.powi(3));
        }
    }

    #[test]
    fn mass_form_periodic() {
        let grid = Grid1D::periodic(30.0, 128);
        let d = Derivatives::new(&grid);
        let s = perturbed_flat(&grid, 0.2, 3);
        let (dh, _) = rhs_wribl(&s, &groups(), &d).unwrap();
        let total: f64 = dh.iter().sum::<f64>() * grid.dx;
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn inlet_flow() {
        assert_eq!(inlet_flowrate(1.0), 1.0 / 3.0);
        assert!((inlet_flowrate(1.1) - 0.443_666_666_666_667).abs() < 1e-12);
        assert!((inlet_flowrate(0.9) - 0.243).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_thickness() {
        assert!(HydroState::new(vec![1.0, 0.0], vec![0.3, 0.3]).is_err());
        let grid = Grid1D::periodic(10.0, 16);
        let d = Derivatives::new(&grid);
        let mut s = HydroState::flat(16);
        s.h[3] = -0.1;
        assert!(rhs_vila(&s, &groups(), &d).is_err());
    }
}
