//! Heat fluxes, Nusselt number, H1 norms, wave speed and surface
//! temperature extrema.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::closure::model_wall_flux;
use crate::domain::ResolvedDomain;
use crate::error::{domain, FilmError, Result};
use crate::fd::{DerivOp, Derivatives, Grid1D};
use crate::fourier::{self, FourierOps, TemperatureField2D};
use crate::hydro::HydroState;
use crate::model::ThermalModel;
use crate::params::theta0;
use crate::thermal::ThermalState;

/// Newton-law interfacial flux per unit streamwise length,
/// `Bi θ sqrt(1 + hx²)`.
pub fn interface_flux(h: &[f64], theta: &[f64], hx: &[f64], bi: f64) -> Vec<f64> {
    debug_assert_eq!(h.len(), theta.len());
    theta
        .iter()
        .zip(hx)
        .map(|(t, s)| bi * t * (1.0 + s * s).sqrt())
        .collect()
}

/// Conductive flux through the free surface of the Fourier field, per unit
/// streamwise length: `-(1 + hx²)/h T_ȳ + hx T_x` at `ȳ = 1`. Equal to the
/// Newton-law flux up to the solver tolerance.
pub fn fourier_conductive_flux(
    f: &TemperatureField2D,
    hs: &HydroState,
    ops: &FourierOps,
    d1: &DerivOp,
) -> Vec<f64> {
    let ny = ops.ny();
    let ts = f.surface();
    let tx = d1.apply(&ts);
    let hx = d1.apply(&hs.h);
    (0..f.nx)
        .map(|i| {
            let col = f.column(i);
            let ty: f64 = (0..ny).map(|c| ops.dy[(ny - 1, c)] * col[c]).sum();
            let s = hx[i];
            -(1.0 + s * s) / hs.h[i] * ty + s * tx[i]
        })
        .collect()
}

/// Wall flux of a reduced model from the ansatz derivative.
pub fn model_wall_fluxes(h: &[f64], state: &ThermalState, bi: f64) -> Vec<f64> {
    (0..h.len())
        .map(|i| {
            let phi = state.phi.as_ref().map(|p| p[i]).unwrap_or(0.0);
            model_wall_flux(h[i], state.theta[i], phi, bi)
        })
        .collect()
}

/// Mean flux rescaled by the flat-film value `Bi/(1 + Bi)`.
pub fn nusselt_global(flux: &[f64], bi: f64) -> Result<f64> {
    if flux.is_empty() {
        return domain("empty flux array");
    }
    if !(bi > 0.0) {
        return domain(format!("Nusselt number needs bi > 0, got {bi}"));
    }
    let mean = flux.iter().sum::<f64>() / flux.len() as f64;
    Ok(mean / (bi * theta0(bi, 1.0)))
}

/// `sqrt(Σ (X² + X_x²) dx)` with the solvers' fourth-order `∂x`.
pub fn h1_norm(x: &[f64], grid: &Grid1D) -> f64 {
    let d = DerivOp::new(grid, 1);
    let xx = d.apply(x);
    (x.iter().zip(&xx).map(|(a, b)| a * a + b * b).sum::<f64>() * grid.dx).sqrt()
}

/// Squared H1 norm, for accumulating over snapshots.
fn h1_sq(x: &[f64], d: &DerivOp, dx: f64) -> f64 {
    let xx = d.apply(x);
    x.iter().zip(&xx).map(|(a, b)| a * a + b * b).sum::<f64>() * dx
}

/// `|model − reference|_H1 / |reference|_H1`.
pub fn relative_error_h1(model: &[f64], reference: &[f64], grid: &Grid1D) -> Result<f64> {
    if model.len() != reference.len() || model.len() != grid.n {
        return domain("relative_error_h1: arrays and grid differ in length");
    }
    let r = h1_norm(reference, grid);
    if !(r > 0.0) {
        return domain("reference has zero H1 norm");
    }
    let diff: Vec<f64> = model.iter().zip(reference).map(|(a, b)| a - b).collect();
    Ok(h1_norm(&diff, grid) / r)
}

/// Grid used for diagnostics over the useful region of a domain.
pub fn useful_grid(d: &ResolvedDomain) -> Grid1D {
    if d.is_open() {
        Grid1D::open(d.grid.dx * (d.useful_points - 1) as f64, d.useful_points)
    } else {
        d.grid.clone()
    }
}

/// Propagation speed between two periodic snapshots `dt` apart, from the
/// peak of their circular cross-correlation refined by a parabola.
pub fn wave_speed(a: &[f64], b: &[f64], dt: f64, dx: f64) -> Result<f64> {
    let n = a.len();
    if n != b.len() || n < 3 {
        return domain("wave_speed: snapshots differ in length or are too short");
    }
    if !(dt > 0.0) {
        return domain("wave_speed: dt must be positive");
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (ma, mb) = (mean(a), mean(b));
    let za: Vec<f64> = a.iter().map(|v| v - ma).collect();
    let zb: Vec<f64> = b.iter().map(|v| v - mb).collect();
    let scale = a
        .iter()
        .chain(b)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let var = |z: &[f64]| z.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if var(&za).sqrt() < 1e-12 * scale || var(&zb).sqrt() < 1e-12 * scale {
        return Err(FilmError::Numerical(
            "wave_speed: snapshots carry no signal".into(),
        ));
    }
    // corr[s] = Σ a[i] b[i + s]: b(x) = a(x − c dt) peaks at s = c dt / dx
    let corr: Vec<f64> = (0..n)
        .map(|s| (0..n).map(|i| za[i] * zb[(i + s) % n]).sum())
        .collect();
    let (mut k, mut best) = (0, f64::NEG_INFINITY);
    for (s, &c) in corr.iter().enumerate() {
        if c > best {
            best = c;
            k = s;
        }
    }
    let cm = corr[(k + n - 1) % n];
    let cp = corr[(k + 1) % n];
    let den = cm - 2.0 * best + cp;
    let frac = if den.abs() > 0.0 {
        0.5 * (cm - cp) / den
    } else {
        0.0
    };
    let mut shift = k as f64 + frac;
    if shift > n as f64 / 2.0 {
        shift -= n as f64;
    }
    Ok(shift * dx / dt)
}

pub fn min_theta(theta: &[f64]) -> Result<f64> {
    if theta.is_empty() {
        return domain("min_theta of an empty array");
    }
    Ok(theta.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Which thermal description produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Model(ThermalModel),
    Fourier,
}

impl Source {
    pub fn name(&self) -> &'static str {
        match self {
            Source::Model(m) => m.name(),
            Source::Fourier => "fourier",
        }
    }
}

/// Flux profiles over the useful region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxProfiles {
    pub interface: Vec<f64>,
    pub wall: Vec<f64>,
    /// Free-surface temperature.
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub source: Source,
    pub min_theta: f64,
    pub wave_speed: Option<f64>,
    pub nu_global: Option<f64>,
    pub flux_interface: Vec<f64>,
    pub flux_wall: Vec<f64>,
    /// Relative H1 errors against the paired reference, keyed by
    /// `interface` and `wall`.
    pub h1_errors: BTreeMap<String, f64>,
}

/// Flux profiles of a reduced model, cropped to the useful region.
pub fn model_profiles(
    hs: &HydroState,
    ts: &ThermalState,
    bi: f64,
    dom: &ResolvedDomain,
    d: &Derivatives,
) -> FluxProfiles {
    let hx = d.d1.apply(&hs.h);
    let iface = interface_flux(&hs.h, &ts.theta, &hx, bi);
    let wall = model_wall_fluxes(&hs.h, ts, bi);
    FluxProfiles {
        interface: dom.crop(&iface).to_vec(),
        wall: dom.crop(&wall).to_vec(),
        theta: dom.crop(&ts.theta).to_vec(),
    }
}

/// Flux profiles of the Fourier reference, cropped to the useful region.
pub fn fourier_profiles(
    hs: &HydroState,
    f: &TemperatureField2D,
    bi: f64,
    dom: &ResolvedDomain,
    ops: &FourierOps,
    d: &Derivatives,
) -> FluxProfiles {
    let hx = d.d1.apply(&hs.h);
    let theta = f.surface();
    let iface = interface_flux(&hs.h, &theta, &hx, bi);
    let wall = fourier::wall_flux(f, &hs.h, ops);
    FluxProfiles {
        interface: dom.crop(&iface).to_vec(),
        wall: dom.crop(&wall).to_vec(),
        theta: dom.crop(&theta).to_vec(),
    }
}

impl DiagnosticsRecord {
    pub fn from_profiles(t: f64, source: Source, p: &FluxProfiles, bi: f64) -> Result<Self> {
        Ok(DiagnosticsRecord {
            t,
            source,
            min_theta: min_theta(&p.theta)?,
            wave_speed: None,
            nu_global: if bi > 0.0 {
                Some(nusselt_global(&p.interface, bi)?)
            } else {
                None
            },
            flux_interface: p.interface.clone(),
            flux_wall: p.wall.clone(),
            h1_errors: BTreeMap::new(),
        })
    }

    /// Fills `h1_errors` against a reference record.
    pub fn pair_with(&mut self, reference: &FluxProfiles, grid: &Grid1D) -> Result<()> {
        let e_i = relative_error_h1(&self.flux_interface, &reference.interface, grid)?;
        let e_w = relative_error_h1(&self.flux_wall, &reference.wall, grid)?;
        self.h1_errors.insert("interface".into(), e_i);
        self.h1_errors.insert("wall".into(), e_w);
        Ok(())
    }
}

/// Space-time relative H1 error accumulated over the snapshots of an
/// averaging window: `sqrt(Σ_k |m_k − r_k|²) / sqrt(Σ_k |r_k|²)`.
#[derive(Debug, Clone)]
pub struct WindowError {
    d: DerivOp,
    dx: f64,
    num: f64,
    den: f64,
    pub snapshots: usize,
}

impl WindowError {
    pub fn new(grid: &Grid1D) -> Self {
        WindowError {
            d: DerivOp::new(grid, 1),
            dx: grid.dx,
            num: 0.0,
            den: 0.0,
            snapshots: 0,
        }
    }

    pub fn add(&mut self, model: &[f64], reference: &[f64]) {
        let diff: Vec<f64> = model.iter().zip(reference).map(|(a, b)| a - b).collect();
        self.num += h1_sq(&diff, &self.d, self.dx);
        self.den += h1_sq(reference, &self.d, self.dx);
        self.snapshots += 1;
    }

    pub fn value(&self) -> Result<f64> {
        if self.snapshots == 0 || !(self.den > 0.0) {
            return domain("window error: no snapshots or zero reference norm");
        }
        Ok((self.num / self.den).sqrt())
    }
}
