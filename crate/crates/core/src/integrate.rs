//! IMEX time stepping of the coupled hydrodynamic and thermal systems.
//!
//! The scheme is the two-stage, second-order ARS(2,3,2) pair: an L-stable
//! SDIRK implicit part and a three-stage explicit part whose stability
//! region covers a segment of the imaginary axis (centred differences of
//! advection terms). Implicit terms are
//!
//! - the mass balance `-∂x q` and the capillary term `c(h) ∂xxx h`,
//!   solved together by Newton iteration on a banded system for `h`;
//! - the `1/h²` relaxation terms of every thermal model, pointwise;
//! - cross-stream conduction and transport of the Fourier reference,
//!   column by column, with the wall and Newton rows imposed.
//!
//! Everything else is explicit.

use serde::{Deserialize, Serialize};

use crate::banded::{BandLu, CyclicBandSolver};
use crate::domain::{Inlet, ResolvedDomain, ThermalInlet};
use crate::error::{FilmError, Result};
use crate::fd::{Derivatives, Grid1D};
use crate::fourier::{self, FourierOps, TemperatureField2D};
use crate::hydro::{
    capillary_coefficient, capillary_coefficient_dh, hydro_rhs_explicit, HydroDerivs, HydroState,
};
use crate::model::{HydroModel, ThermalModel};
use crate::params::{theta0, DimensionlessGroups};
use crate::thermal::{self, ThermalDerivs, ThermalState};

const GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
/// `-2 sqrt(2) / 3`
const DELTA: f64 = -2.0 * std::f64::consts::SQRT_2 / 3.0;

/// Stability function of the implicit part applied to `y' = λ y`,
/// `z = λ dt`.
pub fn implicit_stability_function(z: f64) -> f64 {
    (1.0 + (1.0 - 2.0 * GAMMA) * z) / ((1.0 - GAMMA * z) * (1.0 - GAMMA * z))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Upper bound on the time step.
    pub dt_max: f64,
    /// Bound on `|λ dt|` for the explicit spectrum estimate. With a stiff
    /// implicit part the explicit stability region of the pair shrinks to
    /// roughly the disk `|z| < 1.06`, so this must stay below that.
    pub safety: f64,
    /// Abort when `h` drops below this value.
    pub h_min: f64,
    /// Chebyshev degree of the Fourier reference.
    pub n_cheb: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Relative change of `h` that triggers a Jacobian refresh.
    pub jacobian_drift: f64,
    /// Maximum successive step halvings before giving up.
    pub max_rejections: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            dt_max: 0.05,
            safety: 0.9,
            h_min: 1e-3,
            n_cheb: 16,
            newton_tol: 1e-12,
            max_newton: 25,
            jacobian_drift: 0.1,
            max_rejections: 12,
        }
    }
}

/// Thermal fields carried by a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelField {
    pub model: ThermalModel,
    pub state: ThermalState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationState {
    pub t: f64,
    pub dt: f64,
    pub hydro: HydroState,
    pub thermal: Vec<ModelField>,
    pub fourier: Option<TemperatureField2D>,
}

impl SimulationState {
    pub fn field(&self, model: ThermalModel) -> Option<&ThermalState> {
        self.thermal
            .iter()
            .find(|f| f.model == model)
            .map(|f| &f.state)
    }
}

/// Offsets of every field in the packed state vector.
#[derive(Debug, Clone, PartialEq)]
struct Layout {
    n: usize,
    ny: usize,
    models: Vec<ThermalModel>,
    theta: Vec<usize>,
    phi: Vec<Option<usize>>,
    fourier: Option<usize>,
    len: usize,
}

impl Layout {
    fn new(n: usize, models: &[ThermalModel], ny: Option<usize>) -> Self {
        let mut off = 2 * n;
        let mut theta = Vec::new();
        let mut phi = Vec::new();
        for m in models {
            theta.push(off);
            off += n;
            if m.has_phi() {
                phi.push(Some(off));
                off += n;
            } else {
                phi.push(None);
            }
        }
        let fourier = ny.map(|_| off);
        if let Some(ny) = ny {
            off += n * ny;
        }
        Layout {
            n,
            ny: ny.unwrap_or(0),
            models: models.to_vec(),
            theta,
            phi,
            fourier,
            len: off,
        }
    }

    fn pack(&self, s: &SimulationState) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len);
        v.extend_from_slice(&s.hydro.h);
        v.extend_from_slice(&s.hydro.q);
        for f in &s.thermal {
            v.extend_from_slice(&f.state.theta);
            if let Some(p) = &f.state.phi {
                v.extend_from_slice(p);
            }
        }
        if let Some(f) = &s.fourier {
            v.extend_from_slice(&f.t);
        }
        debug_assert_eq!(v.len(), self.len);
        v
    }

    fn hydro(&self, v: &[f64]) -> HydroState {
        HydroState {
            h: v[..self.n].to_vec(),
            q: v[self.n..2 * self.n].to_vec(),
        }
    }

    fn thermal(&self, v: &[f64], k: usize) -> ThermalState {
        let n = self.n;
        ThermalState {
            theta: v[self.theta[k]..self.theta[k] + n].to_vec(),
            phi: self.phi[k].map(|o| v[o..o + n].to_vec()),
        }
    }

    fn fourier(&self, v: &[f64]) -> Option<TemperatureField2D> {
        self.fourier.map(|o| TemperatureField2D {
            nx: self.n,
            ny: self.ny,
            t: v[o..o + self.n * self.ny].to_vec(),
        })
    }

    fn unpack(&self, v: &[f64], t: f64, dt: f64) -> SimulationState {
        SimulationState {
            t,
            dt,
            hydro: self.hydro(v),
            thermal: (0..self.models.len())
                .map(|k| ModelField {
                    model: self.models[k],
                    state: self.thermal(v, k),
                })
                .collect(),
            fourier: self.fourier(v),
        }
    }
}

enum HSolver {
    Band(BandLu),
    Cyclic(CyclicBandSolver),
}

impl HSolver {
    fn solve(&self, b: &mut [f64]) {
        match self {
            HSolver::Band(s) => s.solve_in_place(b),
            HSolver::Cyclic(s) => s.solve_in_place(b),
        }
    }
}

struct JacobianCache {
    a: f64,
    h_ref: Vec<f64>,
    solver: HSolver,
}

/// Statistics of the implicit hydrodynamic solves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub steps: u64,
    pub rejected: u64,
    pub newton_iterations: u64,
    pub jacobian_factorizations: u64,
}

/// A configured simulation: grid, operators, models and cached solver data.
pub struct Simulation {
    pub groups: DimensionlessGroups,
    pub hydro_model: HydroModel,
    pub domain: ResolvedDomain,
    pub settings: SolverSettings,
    pub deriv: Derivatives,
    pub ops: Option<FourierOps>,
    layout: Layout,
    jac: Option<JacobianCache>,
    mixed_bound: f64,
    /// Per-node factor on the capillary coefficient: one everywhere on a
    /// periodic box, tapered to zero across the outlet buffer of a plate.
    cap_weight: Vec<f64>,
    pub stats: SolverStats,
}

impl Simulation {
    pub fn new(
        groups: DimensionlessGroups,
        hydro_model: HydroModel,
        domain: ResolvedDomain,
        models: &[ThermalModel],
        with_fourier: bool,
        settings: SolverSettings,
    ) -> Result<Self> {
        let mut seen = models.to_vec();
        seen.sort();
        seen.dedup();
        if seen.len() != models.len() {
            return Err(FilmError::Usage(
                "each thermal model may appear only once".into(),
            ));
        }
        if !(groups.pe > 0.0) || !(groups.re > 0.0) || groups.bi < 0.0 {
            return Err(FilmError::Domain(
                "pe and re must be positive, bi non-negative".into(),
            ));
        }
        let deriv = if domain.is_open() {
            Derivatives::extended(&domain.grid)
        } else {
            Derivatives::new(&domain.grid)
        };
        let ops = if with_fourier {
            Some(FourierOps::new(settings.n_cheb)?)
        } else {
            None
        };
        let ny = ops.as_ref().map(|o| o.ny());
        let layout = Layout::new(domain.grid.n, models, ny);
        let mixed_bound = ops.as_ref().map(|o| o.mixed_bound()).unwrap_or(0.0);
        let cap_weight = capillary_taper(&domain);
        Ok(Simulation {
            groups,
            hydro_model,
            domain,
            settings,
            deriv,
            ops,
            layout,
            jac: None,
            mixed_bound,
            cap_weight,
            stats: SolverStats::default(),
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.domain.grid
    }

    pub fn models(&self) -> &[ThermalModel] {
        &self.layout.models
    }

    /// Conductive thermal state on top of the given hydrodynamics.
    pub fn initial_state(&self, hydro: HydroState) -> Result<SimulationState> {
        if hydro.len() != self.grid().n {
            return Err(FilmError::Domain(format!(
                "hydro state has {} points, grid has {}",
                hydro.len(),
                self.grid().n
            )));
        }
        let bi = self.groups.bi;
        let thermal = self
            .layout
            .models
            .iter()
            .map(|&m| ModelField {
                model: m,
                state: ThermalState::equilibrium(m, &hydro.h, bi),
            })
            .collect();
        let fourier = self
            .ops
            .as_ref()
            .map(|o| TemperatureField2D::nusselt(&hydro.h, o, bi));
        let mut s = SimulationState {
            t: 0.0,
            dt: self.settings.dt_max,
            hydro,
            thermal,
            fourier,
        };
        if let Some(inlet) = self.domain.inlet {
            let mut v = self.layout.pack(&s);
            self.apply_open_bcs(&mut v, 0.0, &inlet);
            let mut out = self.layout.unpack(&v, 0.0, s.dt);
            if let (Some(f), Some(ops)) = (out.fourier.as_mut(), self.ops.as_ref()) {
                let hd = HydroDerivs::compute(&out.hydro, &self.deriv);
                let fix = self.fourier_fix(&out.hydro, inlet, 0.0);
                fourier::impose_boundary_rows(f, &out.hydro, &hd, bi, ops, &self.deriv.d1, &fix)?;
            }
            s = out;
        }
        Ok(s)
    }

    /// Largest stable step for the current state.
    pub fn stable_dt(&self, s: &SimulationState) -> f64 {
        let (adv, diff) = self.explicit_rates(s);
        let rho = adv.hypot(diff);
        if rho > 0.0 {
            self.settings.dt_max.min(self.settings.safety / rho)
        } else {
            self.settings.dt_max
        }
    }

    /// Estimates of the largest advective (imaginary) and diffusive (real)
    /// eigenvalue magnitudes of the explicit operator.
    fn explicit_rates(&self, s: &SimulationState) -> (f64, f64) {
        let dx = self.grid().dx;
        // spectral radii of the fourth-order first and second differences
        let d1 = 1.3722 / dx;
        let d2 = 16.0 / 3.0 / (dx * dx);
        let umax = s
            .hydro
            .h
            .iter()
            .zip(&s.hydro.q)
            .map(|(h, q)| 1.5 * (q / h).abs())
            .fold(0.0, f64::max);
        let adv = umax * d1;
        let mut diff: f64 = 0.0;
        if self.hydro_model == HydroModel::Wribl {
            let hmin = s.hydro.h.iter().cloned().fold(f64::INFINITY, f64::min);
            diff =
                diff.max(4.5 / (3.0 * self.groups.re) * d2 + 6.0 / (3.0 * self.groups.re * hmin));
        }
        let inv = 1.0 / (3.0 * self.groups.pe);
        if !self.layout.models.is_empty() {
            diff = diff.max(inv * d2);
        }
        if self.ops.is_some() {
            let hd = HydroDerivs::compute(&s.hydro, &self.deriv);
            let slope = hd
                .hx
                .iter()
                .zip(&s.hydro.h)
                .map(|(hx, h)| (hx / h).abs())
                .fold(0.0, f64::max);
            diff = diff.max(inv * (d2 + 2.0 * slope * d1 * self.mixed_bound));
        }
        (adv, diff)
    }

    fn apply_open_bcs(&self, v: &mut [f64], t: f64, inlet: &Inlet) {
        let n = self.layout.n;
        let (h0, q0) = inlet.hydro(t);
        let bi = self.groups.bi;
        self.close_inlet_thickness(&mut v[..n], t);
        v[n] = q0;
        v[2 * n - 1] = v[2 * n - 2];
        for k in 0..self.layout.models.len() {
            let o = self.layout.theta[k];
            v[o] = inlet.theta(h0, bi);
            v[o + n - 1] = v[o + n - 2];
            if let Some(p) = self.layout.phi[k] {
                v[p] = 0.0;
                v[p + n - 1] = v[p + n - 2];
            }
        }
        if let (Some(o), Some(ops)) = (self.layout.fourier, self.ops.as_ref()) {
            let ny = self.layout.ny;
            for j in 0..ny {
                v[o + j] = inlet_column_value(inlet, h0, bi, ops.ybar[j]);
                v[o + (n - 1) * ny + j] = v[o + (n - 2) * ny + j];
            }
        }
    }

    fn fourier_fix<'a>(
        &'a self,
        _hs: &HydroState,
        inlet: Inlet,
        t: f64,
    ) -> impl Fn(&mut TemperatureField2D) + 'a {
        let bi = self.groups.bi;
        let (h0, _) = inlet.hydro(t);
        move |f: &mut TemperatureField2D| {
            let ops = self.ops.as_ref().expect("fourier fix needs operators");
            let n = f.nx;
            let ny = f.ny;
            for j in 0..ny {
                f.t[j] = inlet_column_value(&inlet, h0, bi, ops.ybar[j]);
                f.t[(n - 1) * ny + j] = f.t[(n - 2) * ny + j];
            }
        }
    }

    /// Explicit right-hand side in packed form.
    fn explicit(&self, v: &[f64]) -> Result<Vec<f64>> {
        let l = &self.layout;
        let n = l.n;
        let hs = l.hydro(v);
        check_thickness(&hs, self.settings.h_min, f64::NAN)?;
        let mut out = vec![0.0; l.len];
        let (_, dq) = hydro_rhs_explicit(self.hydro_model, &hs, &self.groups, &self.deriv)?;
        out[n..2 * n].copy_from_slice(&dq);
        let hd = HydroDerivs::compute(&hs, &self.deriv);
        for (k, &m) in l.models.iter().enumerate() {
            let ts = l.thermal(v, k);
            let td = ThermalDerivs::compute(&ts, &self.deriv);
            for i in 0..n {
                let j = thermal::jet(&hs, &hd, &ts, &td, i);
                let (a, b) = thermal::explicit_point(m, &j, self.groups.bi, self.groups.pe);
                out[l.theta[k] + i] = a;
                if let Some(p) = l.phi[k] {
                    out[p + i] = b;
                }
            }
        }
        if let (Some(o), Some(ops)) = (l.fourier, self.ops.as_ref()) {
            let f = l.fourier(v).expect("layout has a Fourier block");
            let e = fourier::fourier_explicit(&f, &hs, &hd, self.groups.pe, ops, &self.deriv)?;
            out[o..o + e.len()].copy_from_slice(&e);
        }
        if self.domain.is_open() {
            self.zero_boundary_entries(&mut out);
        }
        if out.iter().any(|x| !x.is_finite()) {
            return Err(FilmError::Numerical(
                "non-finite explicit right-hand side".into(),
            ));
        }
        Ok(out)
    }

    fn zero_boundary_entries(&self, v: &mut [f64]) {
        let l = &self.layout;
        let n = l.n;
        let mut starts = vec![0, n];
        for k in 0..l.models.len() {
            starts.push(l.theta[k]);
            if let Some(p) = l.phi[k] {
                starts.push(p);
            }
        }
        for s in starts {
            v[s] = 0.0;
            v[s + n - 1] = 0.0;
        }
        if let Some(o) = l.fourier {
            for j in 0..l.ny {
                v[o + j] = 0.0;
                v[o + (n - 1) * l.ny + j] = 0.0;
            }
        }
    }

    fn build_jacobian(&mut self, h: &[f64], a: f64) -> Result<()> {
        let n = h.len();
        let g = &self.groups;
        let d3h = self.deriv.d3.apply(h);
        let cdh = capillary_coefficient_dh(self.hydro_model, g);
        let open = self.domain.is_open();
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        for i in 0..n {
            if open && i == 0 {
                rows.push(vec![(0, 1.0)]);
                continue;
            }
            if open && i == n - 1 {
                rows.push(vec![(n - 1, 1.0), (n - 2, -1.0)]);
                continue;
            }
            let mut row = vec![(i, 1.0)];
            for (m, w1) in self.deriv.d1.row(i) {
                let wm = self.cap_weight[m];
                if wm == 0.0 {
                    continue;
                }
                let c = wm * capillary_coefficient(self.hydro_model, h[m], g);
                for (col, w3) in self.deriv.d3.row(m) {
                    row.push((col, a * a * w1 * c * w3));
                }
                if cdh != 0.0 {
                    row.push((m, a * a * w1 * wm * cdh * d3h[m]));
                }
            }
            rows.push(merge_row(row));
        }
        let solver = if open {
            let (kl, ku) = bandwidths(&rows);
            HSolver::Band(BandLu::factor(n, kl, ku, &rows)?)
        } else {
            HSolver::Cyclic(CyclicBandSolver::new(n, &rows)?)
        };
        self.stats.jacobian_factorizations += 1;
        self.jac = Some(JacobianCache {
            a,
            h_ref: h.to_vec(),
            solver,
        });
        Ok(())
    }

    fn jacobian_stale(&self, h: &[f64], a: f64) -> bool {
        match &self.jac {
            None => true,
            Some(j) => {
                if ((j.a - a) / a).abs() > 1e-12 {
                    return true;
                }
                if self.hydro_model == HydroModel::Vila {
                    return false;
                }
                h.iter()
                    .zip(&j.h_ref)
                    .any(|(x, r)| ((x - r) / r).abs() > self.settings.jacobian_drift)
            }
        }
    }

    /// Solves `h = zh - a ∂x q`, `q = zq + a c(h) ∂xxx h` (plus inlet and
    /// outlet rows on open plates).
    fn solve_hydro(
        &mut self,
        zh: &[f64],
        zq: &[f64],
        a: f64,
        t: f64,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = zh.len();
        let g = self.groups;
        let inlet = self.domain.inlet;
        let d1zq = self.deriv.d1.apply(zq);
        let r: Vec<f64> = zh.iter().zip(&d1zq).map(|(h, d)| h - a * d).collect();
        let mut h = zh.to_vec();
        if let Some(inl) = inlet {
            h[0] = inl.thickness(t);
            h[n - 1] = h[n - 2];
        }
        let residual = |sim: &Simulation, h: &[f64]| -> Vec<f64> {
            let d3h = sim.deriv.d3.apply(h);
            let flux: Vec<f64> = (0..n)
                .map(|i| {
                    sim.cap_weight[i] * capillary_coefficient(sim.hydro_model, h[i], &g) * d3h[i]
                })
                .collect();
            let d1f = sim.deriv.d1.apply(&flux);
            let mut res: Vec<f64> = (0..n).map(|i| h[i] + a * a * d1f[i] - r[i]).collect();
            if let Some(inl) = inlet {
                res[0] = h[0] - inl.thickness(t);
                res[n - 1] = h[n - 1] - h[n - 2];
            }
            res
        };
        let mut refreshed = false;
        let mut converged = false;
        for it in 0..self.settings.max_newton {
            if self.jacobian_stale(&h, a) {
                self.build_jacobian(&h, a)?;
                refreshed = true;
            }
            let mut delta = residual(self, &h);
            self.jac
                .as_ref()
                .expect("jacobian built")
                .solver
                .solve(&mut delta);
            let mut norm: f64 = 0.0;
            for (hi, di) in h.iter_mut().zip(&delta) {
                *hi -= di;
                norm = norm.max(di.abs());
            }
            self.stats.newton_iterations += 1;
            if !norm.is_finite() {
                return Err(FilmError::Numerical(
                    "Newton iteration produced non-finite values".into(),
                ));
            }
            if norm < self.settings.newton_tol {
                converged = true;
                break;
            }
            // slow convergence with a reused Jacobian: refresh once
            if it >= 5 && !refreshed {
                self.jac = None;
            }
        }
        if !converged {
            self.jac = None;
            return Err(FilmError::Numerical(
                "hydrodynamic Newton iteration did not converge".into(),
            ));
        }
        let d3h = self.deriv.d3.apply(&h);
        let mut q: Vec<f64> = (0..n)
            .map(|i| {
                zq[i]
                    + a * self.cap_weight[i]
                        * capillary_coefficient(self.hydro_model, h[i], &g)
                        * d3h[i]
            })
            .collect();
        if let Some(inl) = inlet {
            q[0] = inl.hydro(t).1;
            q[n - 1] = q[n - 2];
        }
        // recompute h from q so the discrete mass balance holds to round-off
        let d1q = self.deriv.d1.apply(&q);
        for i in 0..n {
            h[i] = zh[i] - a * d1q[i];
        }
        if inlet.is_some() {
            self.close_inlet_thickness(&mut h, t);
        }
        Ok((h, q))
    }

    /// `h(0)` from the inlet, zero gradient at the outlet.
    fn close_inlet_thickness(&self, h: &mut [f64], t: f64) {
        let n = h.len();
        if let Some(inl) = self.domain.inlet {
            h[0] = inl.thickness(t);
            h[n - 1] = h[n - 2];
        }
    }

    /// Solves `Y = Z + a f_I(Y)` for the whole packed state.
    fn implicit(&mut self, z: &[f64], a: f64, t: f64) -> Result<Vec<f64>> {
        let n = self.layout.n;
        let (h, q) = self.solve_hydro(&z[..n], &z[n..2 * n], a, t)?;
        let hs = HydroState { h, q };
        check_thickness(&hs, self.settings.h_min, t)?;
        let hd = HydroDerivs::compute(&hs, &self.deriv);
        let mut y = z.to_vec();
        y[..n].copy_from_slice(&hs.h);
        y[n..2 * n].copy_from_slice(&hs.q);
        let l = &self.layout;
        let (bi, pe) = (self.groups.bi, self.groups.pe);
        for (k, &m) in l.models.iter().enumerate() {
            let to = l.theta[k];
            for i in 0..n {
                let jet = thermal::ThermalJet {
                    h: hs.h[i],
                    hx: hd.hx[i],
                    ..Default::default()
                };
                let zz = (z[to + i], l.phi[k].map(|p| z[p + i]).unwrap_or(0.0));
                let (a0, a1) = thermal::implicit_solve_point(m, &jet, bi, pe, a, zz);
                y[to + i] = a0;
                if let Some(p) = l.phi[k] {
                    y[p + i] = a1;
                }
            }
        }
        if let (Some(o), Some(ops)) = (l.fourier, self.ops.as_ref()) {
            let zf = l.fourier(z).expect("layout has a Fourier block");
            let ht: Vec<f64> = hd.qx.iter().map(|v| -v).collect();
            let sol = match self.domain.inlet {
                Some(inl) => {
                    let fix = self.fourier_fix(&hs, inl, t);
                    fourier::implicit_column_solve(
                        &zf,
                        &hs,
                        &hd,
                        &ht,
                        a,
                        bi,
                        pe,
                        ops,
                        &self.deriv.d1,
                        &fix,
                    )?
                }
                None => fourier::implicit_column_solve(
                    &zf,
                    &hs,
                    &hd,
                    &ht,
                    a,
                    bi,
                    pe,
                    ops,
                    &self.deriv.d1,
                    &|_| {},
                )?,
            };
            y[o..o + sol.t.len()].copy_from_slice(&sol.t);
        }
        if let Some(inl) = self.domain.inlet {
            self.apply_open_bcs(&mut y, t, &inl);
        }
        Ok(y)
    }

    /// Implicit-stage derivative `(Y - Z)/a` with algebraic rows zeroed.
    fn stage_derivative(&self, y: &[f64], z: &[f64], a: f64) -> Vec<f64> {
        let mut d: Vec<f64> = y.iter().zip(z).map(|(y, z)| (y - z) / a).collect();
        if let Some(o) = self.layout.fourier {
            let ny = self.layout.ny;
            for i in 0..self.layout.n {
                d[o + i * ny] = 0.0;
                d[o + i * ny + ny - 1] = 0.0;
            }
        }
        if self.domain.is_open() {
            self.zero_boundary_entries(&mut d);
        }
        d
    }

    /// One step of size `dt`; the state is left untouched on error.
    pub fn step(&mut self, s: &SimulationState, dt: f64) -> Result<SimulationState> {
        if !(dt > 0.0) {
            return Err(FilmError::Domain(format!("dt must be positive, got {dt}")));
        }
        let l = self.layout.clone();
        let y0 = l.pack(s);
        let a = GAMMA * dt;
        let e1 = self.explicit(&y0)?;
        let z2: Vec<f64> = (0..l.len).map(|k| y0[k] + a * e1[k]).collect();
        let y2 = self.implicit(&z2, a, s.t + GAMMA * dt)?;
        let i2 = self.stage_derivative(&y2, &z2, a);
        let e2 = self.explicit(&y2)?;
        let z3: Vec<f64> = (0..l.len)
            .map(|k| y0[k] + dt * (DELTA * e1[k] + (1.0 - DELTA) * e2[k] + (1.0 - GAMMA) * i2[k]))
            .collect();
        let y3 = self.implicit(&z3, a, s.t + dt)?;
        let i3 = self.stage_derivative(&y3, &z3, a);
        let e3 = self.explicit(&y3)?;
        let mut y: Vec<f64> = (0..l.len)
            .map(|k| y0[k] + dt * ((1.0 - GAMMA) * (e2[k] + i2[k]) + GAMMA * (e3[k] + i3[k])))
            .collect();
        let t_new = s.t + dt;
        if let Some(inl) = self.domain.inlet {
            self.apply_open_bcs(&mut y, t_new, &inl);
        }
        let mut out = l.unpack(&y, t_new, dt);
        check_thickness(&out.hydro, self.settings.h_min, t_new)?;
        if let (Some(f), Some(ops)) = (out.fourier.as_mut(), self.ops.as_ref()) {
            let hd = HydroDerivs::compute(&out.hydro, &self.deriv);
            match self.domain.inlet {
                Some(inl) => {
                    let fix = self.fourier_fix(&out.hydro, inl, t_new);
                    fourier::impose_boundary_rows(
                        f,
                        &out.hydro,
                        &hd,
                        self.groups.bi,
                        ops,
                        &self.deriv.d1,
                        &fix,
                    )?
                }
                None => fourier::impose_boundary_rows(
                    f,
                    &out.hydro,
                    &hd,
                    self.groups.bi,
                    ops,
                    &self.deriv.d1,
                    &|_| {},
                )?,
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(FilmError::Numerical("non-finite state after step".into()));
        }
        self.stats.steps += 1;
        Ok(out)
    }

    /// Step with rejection: numerical failures halve `dt` and retry.
    pub fn step_adaptive(&mut self, s: &SimulationState, dt: f64) -> Result<SimulationState> {
        let mut dt = dt;
        let mut last_err = None;
        for _ in 0..=self.settings.max_rejections {
            match self.step(s, dt) {
                Ok(next) => return Ok(next),
                Err(e @ FilmError::Rupture { .. }) => return Err(e),
                Err(e) => {
                    self.stats.rejected += 1;
                    last_err = Some(e);
                    dt *= 0.5;
                }
            }
        }
        Err(last_err.unwrap_or_else(|| FilmError::Numerical("step failed".into())))
    }

    /// Advances to `t_end`, calling `on_output` at `t0 + k * every` (and at
    /// `t_end`). Returning `false` from the callback stops the run early.
    pub fn run_to_time(
        &mut self,
        state: SimulationState,
        t_end: f64,
        every: Option<f64>,
        mut on_output: impl FnMut(&SimulationState) -> Result<bool>,
    ) -> Result<SimulationState> {
        let mut s = state;
        if !(t_end > s.t) {
            return Ok(s);
        }
        let eps = 1e-12 * t_end.abs().max(1.0);
        let mut next_out = every.map(|e| s.t + e);
        while s.t < t_end - eps {
            let mut dt = self.stable_dt(&s).min(t_end - s.t);
            if let Some(no) = next_out {
                dt = dt.min(no - s.t);
            }
            let target_hit = next_out
                .map(|no| (s.t + dt - no).abs() <= eps)
                .unwrap_or(false);
            let next = self.step_adaptive(&s, dt)?;
            let mut t = next.t;
            if target_hit && (next.t - next_out.unwrap()).abs() <= eps {
                t = next_out.unwrap();
            }
            s = SimulationState { t, ..next };
            if let (Some(no), Some(e)) = (next_out, every) {
                if s.t >= no - eps {
                    next_out = Some(no + e);
                    if !on_output(&s)? {
                        return Ok(s);
                    }
                }
            }
        }
        if every.is_none() {
            on_output(&s)?;
        }
        Ok(s)
    }
}

/// Capillarity is switched off smoothly between the end of the useful
/// region and the outlet, so short capillary ripples are not reflected back
/// into the useful region.
fn capillary_taper(domain: &ResolvedDomain) -> Vec<f64> {
    let n = domain.grid.n;
    if !domain.is_open() {
        return vec![1.0; n];
    }
    let start = domain.useful_points.min(n - 1);
    let span = (n - 1 - start).max(1) as f64;
    (0..n)
        .map(|i| {
            if i <= start {
                1.0
            } else {
                let s = (i - start) as f64 / span;
                0.5 * (1.0 + (std::f64::consts::PI * s).cos())
            }
        })
        .collect()
}

fn inlet_column_value(inlet: &Inlet, h0: f64, bi: f64, ybar: f64) -> f64 {
    match inlet.thermal {
        ThermalInlet::Hot => 1.0,
        ThermalInlet::Nusselt => 1.0 + (theta0(bi, h0) - 1.0) * ybar,
    }
}

fn check_thickness(hs: &HydroState, h_min: f64, t: f64) -> Result<()> {
    let (index, h) =
        hs.h.iter().enumerate().fold(
            (0, f64::INFINITY),
            |acc, (i, &v)| if !(v >= acc.1) { (i, v) } else { acc },
        );
    if !(h >= h_min) {
        return Err(FilmError::Rupture { h, h_min, index, t });
    }
    Ok(())
}

fn merge_row(mut row: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    row.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (c, v) in row {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out
}

fn bandwidths(rows: &[Vec<(usize, f64)>]) -> (usize, usize) {
    let mut kl = 0;
    let mut ku = 0;
    for (i, r) in rows.iter().enumerate() {
        for &(j, _) in r {
            if j > i {
                ku = ku.max(j - i);
            } else {
                kl = kl.max(i - j);
            }
        }
    }
    (kl, ku)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydro::perturbed_flat;

    fn sim(models: &[ThermalModel], fourier: bool, nx: usize, pe: f64, bi: f64) -> Simulation {
        let g = DimensionlessGroups::thermal(pe, bi);
        let settings = SolverSettings {
            n_cheb: 10,
            ..Default::default()
        };
        Simulation::new(
            g,
            HydroModel::Wribl,
            ResolvedDomain::periodic(30.0, nx),
            models,
            fourier,
            settings,
        )
        .unwrap()
    }

    #[test]
    fn tableau_constants() {
        // explicit part: third-order stability polynomial coefficient
        assert!((GAMMA * GAMMA * (1.0 - DELTA) - 1.0 / 6.0).abs() < 1e-14);
        assert!((GAMMA * (2.0 - GAMMA) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn flat_equilibrium_is_preserved() {
        let mut s = sim(&ThermalModel::ALL, true, 64, 10.0, 0.5);
        let st = s.initial_state(HydroState::flat(64)).unwrap();
        for dt in [0.01, 0.1] {
            let next = s.step(&st, dt).unwrap();
            let a = s.layout.pack(&st);
            let b = s.layout.pack(&next);
            let err = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "dt={dt}: {err}");
        }
    }

    #[test]
    fn relaxation_amplification_matches_stability_function() {
        let pe = 2.0;
        let bi = 1.0;
        let mut s = sim(&[ThermalModel::Theta], false, 64, pe, bi);
        let mut st = s.initial_state(HydroState::flat(64)).unwrap();
        let eps = 1e-3;
        let t0 = theta0(bi, 1.0);
        for v in st.thermal[0].state.theta.iter_mut() {
            *v += eps;
        }
        let lam =
            crate::linear::model_damping(ThermalModel::Theta, bi, 0.0).unwrap()[0] / (3.0 * pe);
        for dt in [0.05, 0.5, 5.0] {
            let next = s.step(&st, dt).unwrap();
            let amp = (next.thermal[0].state.theta[7] - t0) / eps;
            let r = implicit_stability_function(lam * dt);
            assert!((amp - r).abs() < 1e-10, "dt={dt}: {amp} vs {r}");
        }
    }

    #[test]
    fn periodic_mass_is_conserved() {
        let mut s = sim(&[ThermalModel::Theta], false, 128, 10.0, 0.5);
        let hs = perturbed_flat(s.grid(), 0.2, 2);
        let m0: f64 = hs.h.iter().sum();
        let st = s.initial_state(hs).unwrap();
        let end = s.run_to_time(st, 5.0, None, |_| Ok(true)).unwrap();
        let m1: f64 = end.hydro.h.iter().sum();
        assert!(((m1 - m0) / m0).abs() < 1e-12);
        assert!((end.t - 5.0).abs() < 1e-12);
    }

    #[test]
    fn second_order_in_time() {
        let run = |dt: f64| {
            let mut s = sim(&[ThermalModel::ThetaPhi], true, 64, 5.0, 1.0);
            let mut st = s.initial_state(perturbed_flat(s.grid(), 0.1, 1)).unwrap();
            let steps = (0.8 / dt).round() as usize;
            for _ in 0..steps {
                st = s.step(&st, dt).unwrap();
            }
            s.layout.pack(&st)
        };
        let a = run(0.02);
        let b = run(0.01);
        let c = run(0.005);
        let e1 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let e2 = b
            .iter()
            .zip(&c)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let order = (e1 / e2).log2();
        assert!(order > 1.8, "observed order {order} ({e1:e}, {e2:e})");
    }

    #[test]
    fn zero_duration_run_is_identity() {
        let mut s = sim(&[ThermalModel::Theta], false, 64, 10.0, 0.5);
        let st = s.initial_state(perturbed_flat(s.grid(), 0.1, 1)).unwrap();
        let end = s.run_to_time(st.clone(), 0.0, None, |_| Ok(true)).unwrap();
        assert_eq!(end, st);
    }

    #[test]
    fn rupture_is_reported() {
        let mut s = sim(&[], false, 64, 10.0, 0.5);
        let mut hs = HydroState::flat(64);
        hs.h[5] = 5e-4;
        let st = SimulationState {
            t: 0.0,
            dt: 0.01,
            hydro: hs,
            thermal: vec![],
            fourier: None,
        };
        assert!(matches!(
            s.step_adaptive(&st, 0.01),
            Err(FilmError::Rupture { .. })
        ));
    }

    #[test]
    fn unforced_plate_stays_flat() {
        use crate::domain::{
            DomainKind, DomainSpec, FrequencyUnit, InletSpec, LengthUnit, ThermalInlet,
        };
        let spec = DomainSpec {
            kind: DomainKind::Open,
            length: 60.0,
            length_unit: LengthUnit::Nondim,
            nx: 256,
            useful_length: Some(48.0),
            inlet: Some(InletSpec {
                amplitude: 0.0,
                frequency: 0.0,
                frequency_unit: FrequencyUnit::Nondim,
                thermal: ThermalInlet::Nusselt,
            }),
        };
        let dom = spec.resolve(None).unwrap();
        let settings = SolverSettings {
            n_cheb: 10,
            ..Default::default()
        };
        for hydro in [HydroModel::Vila, HydroModel::Wribl] {
            let g = DimensionlessGroups::thermal(10.0, 1.0);
            let mut s = Simulation::new(
                g,
                hydro,
                dom.clone(),
                &[ThermalModel::ThetaPhi],
                true,
                settings,
            )
            .unwrap();
            let st = s.initial_state(HydroState::flat(256)).unwrap();
            let theta0 = st.thermal[0].state.theta[10];
            let end = s.run_to_time(st, 20.0, None, |_| Ok(true)).unwrap();
            let dev = end
                .hydro
                .h
                .iter()
                .map(|h| (h - 1.0).abs())
                .fold(0.0, f64::max);
            assert!(dev < 1e-10, "{hydro}: |h - 1| = {dev:e}");
            let dth = end.thermal[0]
                .state
                .theta
                .iter()
                .map(|t| (t - theta0).abs())
                .fold(0.0, f64::max);
            assert!(dth < 1e-10, "{hydro}: theta drift {dth:e}");
        }
    }

    #[test]
    fn outputs_land_on_requested_times() {
        let mut s = sim(&[ThermalModel::Scheid], false, 64, 10.0, 0.5);
        let st = s.initial_state(perturbed_flat(s.grid(), 0.05, 1)).unwrap();
        let mut times = Vec::new();
        s.run_to_time(st, 1.0, Some(0.25), |x| {
            times.push(x.t);
            Ok(true)
        })
        .unwrap();
        assert_eq!(times, vec![0.25, 0.5, 0.75, 1.0]);
    }
}
