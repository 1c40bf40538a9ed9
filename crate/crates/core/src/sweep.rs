//! Latin-hypercube sweeps over `(Pe, Bi)`: paired model/reference runs,
//! error maps and the contour of the 5% error region.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::diagnostics::{self, useful_grid, WindowError};
use crate::domain::ResolvedDomain;
use crate::error::{domain, FilmError, Result};
use crate::hydro::{perturbed_flat, HydroState};
use crate::integrate::{Simulation, SimulationState, SolverSettings};
use crate::linear::relaxation_roots;
use crate::model::{HydroModel, ThermalModel};
use crate::par;
use crate::params::DimensionlessGroups;

/// Log-normal marginal, optionally truncated to `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogNormalDim {
    /// `pe` or `bi`.
    pub name: String,
    pub median: f64,
    pub log_sigma: f64,
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
}

impl LogNormalDim {
    fn cdf_bounds(&self, n: &Normal) -> (f64, f64) {
        let z = |v: f64| (v.ln() - self.median.ln()) / self.log_sigma;
        (
            self.lower.map(|v| n.cdf(z(v))).unwrap_or(0.0),
            self.upper.map(|v| n.cdf(z(v))).unwrap_or(1.0),
        )
    }

    /// Value at probability `u ∈ (0, 1)` of the (truncated) marginal.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = Normal::new(0.0, 1.0).expect("standard normal");
        let (lo, hi) = self.cdf_bounds(&n);
        let p = (lo + u * (hi - lo)).clamp(1e-300, 1.0 - 1e-16);
        (self.median.ln() + self.log_sigma * n.inverse_cdf(p)).exp()
    }

    /// Probability of `v` under the (truncated) marginal.
    pub fn cdf(&self, v: f64) -> f64 {
        let n = Normal::new(0.0, 1.0).expect("standard normal");
        let (lo, hi) = self.cdf_bounds(&n);
        let p = n.cdf((v.ln() - self.median.ln()) / self.log_sigma);
        ((p - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.median > 0.0 && self.log_sigma > 0.0) {
            return domain(format!(
                "dimension {}: median and log_sigma must be positive",
                self.name
            ));
        }
        if let (Some(l), Some(u)) = (self.lower, self.upper) {
            if !(l > 0.0 && l < u) {
                return domain(format!("dimension {}: need 0 < lower < upper", self.name));
            }
        }
        if self.lower.is_some_and(|l| !(l > 0.0)) {
            return domain(format!(
                "dimension {}: lower bound must be positive",
                self.name
            ));
        }
        Ok(())
    }
}

/// Time budget of each paired run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    /// Hydrodynamic spin-up shared by every sample.
    pub spinup_time: f64,
    /// Amplitude of the initial thickness perturbation (periodic box).
    pub seed_amplitude: f64,
    /// Thermal run length is `relaxation_multiple · 3Pe / l1²`, clamped.
    pub relaxation_multiple: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Trailing fraction of the run over which errors are averaged.
    pub window_fraction: f64,
    /// Snapshots taken inside the window.
    pub window_snapshots: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            spinup_time: 600.0,
            seed_amplitude: 0.01,
            relaxation_multiple: 3.0,
            t_min: 100.0,
            t_max: 1500.0,
            window_fraction: 0.2,
            window_snapshots: 20,
        }
    }
}

impl RunSettings {
    /// Thermal run length for one sample.
    pub fn duration(&self, pe: f64, bi: f64) -> Result<f64> {
        let l1 = relaxation_roots(bi, 1)?[0];
        Ok((self.relaxation_multiple * 3.0 * pe / (l1 * l1)).clamp(self.t_min, self.t_max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub n_samples: usize,
    pub dims: Vec<LogNormalDim>,
    pub seed: u64,
    /// Frozen hydrodynamic groups; `pe` and `bi` are overwritten per sample.
    pub fixed: DimensionlessGroups,
}

impl SweepPlan {
    /// Periodic-box plan: 640 samples, Pe median 105 over `[0.1, 1000]`,
    /// Bi median 0.1 over `[1e-3, 1e3]`, both truncated at two sigma or so.
    pub fn periodic_default() -> Self {
        SweepPlan {
            n_samples: 640,
            dims: vec![
                LogNormalDim {
                    name: "pe".into(),
                    median: 105.0,
                    log_sigma: 2.3,
                    lower: Some(0.1),
                    upper: Some(1000.0),
                },
                LogNormalDim {
                    name: "bi".into(),
                    median: 0.1,
                    log_sigma: 3.45,
                    lower: Some(1e-3),
                    upper: Some(1e3),
                },
            ],
            seed: 1,
            fixed: DimensionlessGroups::thermal(1.0, 1.0),
        }
    }

    pub fn open_default() -> Self {
        SweepPlan {
            n_samples: 64,
            ..Self::periodic_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return domain("n_samples must be at least 1");
        }
        for name in ["pe", "bi"] {
            if !self.dims.iter().any(|d| d.name == name) {
                return domain(format!("sweep plan lacks a `{name}` dimension"));
            }
        }
        for d in &self.dims {
            d.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub index: usize,
    pub pe: f64,
    pub bi: f64,
}

/// One point per stratum of every marginal, strata matched by independent
/// seeded permutations.
pub fn lhs_sample(plan: &SweepPlan) -> Result<Vec<SamplePoint>> {
    plan.validate()?;
    let n = plan.n_samples;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut cols: Vec<(String, Vec<f64>)> = Vec::new();
    for d in &plan.dims {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let vals = perm
            .iter()
            .map(|&s| {
                let u = (s as f64 + rng.gen::<f64>()) / n as f64;
                d.quantile(u)
            })
            .collect();
        cols.push((d.name.clone(), vals));
    }
    let get = |name: &str| &cols.iter().find(|c| c.0 == name).expect("validated").1;
    let (pe, bi) = (get("pe"), get("bi"));
    Ok((0..n)
        .map(|i| SamplePoint {
            index: i,
            pe: pe[i],
            bi: bi[i],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub index: usize,
    pub pe: f64,
    pub bi: f64,
    pub model: ThermalModel,
    pub err_interface: f64,
    pub err_wall: f64,
    pub min_theta: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "message", rename_all = "lowercase")]
pub enum SampleStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub point: SamplePoint,
    pub status: SampleStatus,
    /// SHA-256 of the `(h, q)` snapshots seen by every thermal description.
    pub hydro_hash: String,
    pub duration: f64,
    pub reference_min_theta: f64,
    pub reference_nu: f64,
    pub rows: Vec<ErrorRow>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorMap {
    pub samples: Vec<SampleOutcome>,
}

impl ErrorMap {
    pub fn rows(&self) -> impl Iterator<Item = &ErrorRow> {
        self.samples.iter().flat_map(|s| s.rows.iter())
    }

    pub fn for_model(&self, model: ThermalModel) -> Vec<&ErrorRow> {
        self.rows().filter(|r| r.model == model).collect()
    }

    pub fn failures(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| s.status != SampleStatus::Ok)
            .count()
    }
}

/// Everything a sweep needs besides the plan.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSetup {
    pub hydro_model: HydroModel,
    pub domain: ResolvedDomain,
    pub solver: SolverSettings,
    pub run: RunSettings,
    pub models: Vec<ThermalModel>,
    pub workers: usize,
    /// Directory of per-sample results; completed samples are reused.
    pub resume_dir: Option<PathBuf>,
}

/// Saturated hydrodynamics reached from a perturbed flat film (periodic) or
/// from the forced flat film (open plate).
pub fn spin_up_hydro(groups: &DimensionlessGroups, setup: &SweepSetup) -> Result<SimulationState> {
    let mut sim = Simulation::new(
        *groups,
        setup.hydro_model,
        setup.domain.clone(),
        &[],
        false,
        setup.solver,
    )?;
    let h0 = if setup.domain.is_open() {
        HydroState::flat(setup.domain.grid.n)
    } else {
        perturbed_flat(&setup.domain.grid, setup.run.seed_amplitude, 1)
    };
    let st = sim.initial_state(h0)?;
    sim.run_to_time(st, setup.run.spinup_time, None, |_| Ok(true))
}

fn hash_hydro(hasher: &mut Sha256, hs: &HydroState) {
    for v in hs.h.iter().chain(&hs.q) {
        hasher.update(v.to_le_bytes());
    }
}

/// Runs the reduced models and the Fourier reference together on one
/// hydrodynamic trajectory and compares their flux profiles over the
/// trailing window.
pub fn run_sample(
    point: SamplePoint,
    groups: &DimensionlessGroups,
    spun: &SimulationState,
    setup: &SweepSetup,
) -> Result<SampleOutcome> {
    let g = groups.with_pe_bi(point.pe, point.bi);
    let mut sim = Simulation::new(
        g,
        setup.hydro_model,
        setup.domain.clone(),
        &setup.models,
        true,
        setup.solver,
    )?;
    let ops = sim.ops.clone().expect("reference enabled");
    let mut st = sim.initial_state(spun.hydro.clone())?;
    st.t = 0.0;
    let duration = setup.run.duration(point.pe, point.bi)?;
    let window = setup.run.window_fraction * duration;
    let every = window / setup.run.window_snapshots.max(1) as f64;
    let t_window = duration - window;
    // reach the window start, then sample it
    let st = sim.run_to_time(st, t_window, None, |_| Ok(true))?;
    let grid = useful_grid(&sim.domain);
    let nm = setup.models.len();
    let mut err_i: Vec<WindowError> = (0..nm).map(|_| WindowError::new(&grid)).collect();
    let mut err_w: Vec<WindowError> = (0..nm).map(|_| WindowError::new(&grid)).collect();
    let mut min_t = vec![f64::INFINITY; nm];
    let mut nu = vec![0.0; nm];
    let mut ref_min = f64::INFINITY;
    let mut ref_nu = 0.0;
    let mut count = 0usize;
    let mut hasher = Sha256::new();
    hash_hydro(&mut hasher, &st.hydro);
    let bi = g.bi;
    let dom = sim.domain.clone();
    let deriv = sim.deriv.clone();
    sim.run_to_time(st, duration, Some(every), |s| {
        hash_hydro(&mut hasher, &s.hydro);
        let f = s.fourier.as_ref().expect("reference enabled");
        let r = diagnostics::fourier_profiles(&s.hydro, f, bi, &dom, &ops, &deriv);
        ref_min = ref_min.min(diagnostics::min_theta(&r.theta)?);
        ref_nu += diagnostics::nusselt_global(&r.interface, bi)?;
        for (k, mf) in s.thermal.iter().enumerate() {
            let m = diagnostics::model_profiles(&s.hydro, &mf.state, bi, &dom, &deriv);
            err_i[k].add(&m.interface, &r.interface);
            err_w[k].add(&m.wall, &r.wall);
            min_t[k] = min_t[k].min(diagnostics::min_theta(&m.theta)?);
            nu[k] += diagnostics::nusselt_global(&m.interface, bi)?;
        }
        count += 1;
        Ok(true)
    })?;
    let c = count.max(1) as f64;
    let mut rows = Vec::with_capacity(nm);
    for k in 0..nm {
        rows.push(ErrorRow {
            index: point.index,
            pe: point.pe,
            bi: point.bi,
            model: setup.models[k],
            err_interface: err_i[k].value()?,
            err_wall: err_w[k].value()?,
            min_theta: min_t[k],
            nu: nu[k] / c,
        });
    }
    if rows
        .iter()
        .any(|r| !(r.err_interface.is_finite() && r.err_wall.is_finite()))
    {
        return Err(FilmError::Numerical("non-finite error value".into()));
    }
    Ok(SampleOutcome {
        point,
        status: SampleStatus::Ok,
        hydro_hash: hex(&hasher.finalize()),
        duration,
        reference_min_theta: ref_min,
        reference_nu: ref_nu / c,
        rows,
    })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn sample_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("sample_{index:05}.json"))
}

fn load_sample(dir: &Path, point: &SamplePoint) -> Option<SampleOutcome> {
    let text = std::fs::read_to_string(sample_path(dir, point.index)).ok()?;
    let out: SampleOutcome = serde_json::from_str(&text).ok()?;
    // a stale file from a different plan is recomputed
    (out.point == *point).then_some(out)
}

fn store_sample(dir: &Path, out: &SampleOutcome) -> Result<()> {
    let text = serde_json::to_string(out).map_err(|e| FilmError::Format(e.to_string()))?;
    let path = sample_path(dir, out.point.index);
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, &path)?;
    Ok(())
}

/// Runs every sample of the plan. Failing samples are flagged and the sweep
/// continues; the result is ordered by sample index.
pub fn execute_sweep(plan: &SweepPlan, setup: &SweepSetup) -> Result<ErrorMap> {
    let points = lhs_sample(plan)?;
    if setup.models.is_empty() {
        return Ok(ErrorMap::default());
    }
    if let Some(dir) = &setup.resume_dir {
        std::fs::create_dir_all(dir)?;
    }
    let pending: Vec<&SamplePoint> = points
        .iter()
        .filter(|p| {
            setup
                .resume_dir
                .as_ref()
                .map(|d| load_sample(d, p).is_none())
                .unwrap_or(true)
        })
        .collect();
    let spun = if pending.is_empty() {
        None
    } else {
        Some(spin_up_hydro(&plan.fixed, setup)?)
    };
    let outcomes = par::ordered_map(&points, setup.workers.max(1), |p| {
        if let Some(out) = setup.resume_dir.as_ref().and_then(|d| load_sample(d, p)) {
            return Ok(out);
        }
        let spun = spun.as_ref().expect("spin-up computed for pending samples");
        let out = match run_sample(*p, &plan.fixed, spun, setup) {
            Ok(o) => o,
            Err(e) => SampleOutcome {
                point: *p,
                status: SampleStatus::Failed(e.to_string()),
                hydro_hash: String::new(),
                duration: 0.0,
                reference_min_theta: f64::NAN,
                reference_nu: f64::NAN,
                rows: Vec::new(),
            },
        };
        if let Some(d) = &setup.resume_dir {
            store_sample(d, &out)?;
        }
        Ok(out)
    });
    let samples = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ErrorMap { samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionStatus {
    Mixed,
    AllBelow,
    AllAbove,
}

/// Threshold contour in `(log10 Pe, log10 Bi)`: a set of segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub status: RegionStatus,
    pub segments: Vec<[(f64, f64); 2]>,
}

/// Nearest-neighbour interpolation of `(pe, bi, error)` samples on a
/// `res × res` log-log grid, contoured at `threshold` by marching squares.
pub fn region_threshold(samples: &[(f64, f64, f64)], threshold: f64, res: usize) -> Result<Region> {
    if samples.len() < 10 {
        return domain(format!("need at least 10 samples, got {}", samples.len()));
    }
    if samples
        .iter()
        .any(|s| !(s.0 > 0.0 && s.1 > 0.0 && s.2.is_finite()))
    {
        return domain("samples need positive pe, bi and finite errors");
    }
    if samples.iter().all(|s| s.2 < threshold) {
        return Ok(Region {
            status: RegionStatus::AllBelow,
            segments: vec![],
        });
    }
    if samples.iter().all(|s| s.2 >= threshold) {
        return Ok(Region {
            status: RegionStatus::AllAbove,
            segments: vec![],
        });
    }
    let pts: Vec<(f64, f64, f64)> = samples
        .iter()
        .map(|s| (s.0.log10(), s.1.log10(), s.2))
        .collect();
    let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| {
        (a.0.min(p.0), a.1.max(p.0))
    });
    let (y0, y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| {
        (a.0.min(p.1), a.1.max(p.1))
    });
    let (sx, sy) = ((x1 - x0).max(1e-12), (y1 - y0).max(1e-12));
    let res = res.max(2);
    let gx = |i: usize| x0 + sx * i as f64 / (res - 1) as f64;
    let gy = |j: usize| y0 + sy * j as f64 / (res - 1) as f64;
    // distances in axis-normalized coordinates
    let nearest = |x: f64, y: f64| {
        let mut best = (f64::INFINITY, 0.0);
        for p in &pts {
            let d = ((p.0 - x) / sx).powi(2) + ((p.1 - y) / sy).powi(2);
            if d < best.0 {
                best = (d, p.2);
            }
        }
        best.1
    };
    let field: Vec<Vec<f64>> = (0..res)
        .map(|i| {
            (0..res)
                .map(|j| nearest(gx(i), gy(j)) - threshold)
                .collect()
        })
        .collect();
    let mut segments = Vec::new();
    let lerp = |a: (f64, f64, f64), b: (f64, f64, f64)| {
        let t = a.2 / (a.2 - b.2);
        (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
    };
    for i in 0..res - 1 {
        for j in 0..res - 1 {
            let c = [
                (gx(i), gy(j), field[i][j]),
                (gx(i + 1), gy(j), field[i + 1][j]),
                (gx(i + 1), gy(j + 1), field[i + 1][j + 1]),
                (gx(i), gy(j + 1), field[i][j + 1]),
            ];
            let mut cross = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                if (a.2 < 0.0) != (b.2 < 0.0) {
                    cross.push(lerp(a, b));
                }
            }
            match cross.len() {
                2 => segments.push([cross[0], cross[1]]),
                4 => {
                    segments.push([cross[0], cross[1]]);
                    segments.push([cross[2], cross[3]]);
                }
                _ => {}
            }
        }
    }
    Ok(Region {
        status: RegionStatus::Mixed,
        segments,
    })
}

/// 5% contour of the interface-flux error of one model.
pub fn region_5pct(map: &ErrorMap, model: ThermalModel) -> Result<Region> {
    let s: Vec<(f64, f64, f64)> = map
        .for_model(model)
        .iter()
        .map(|r| (r.pe, r.bi, r.err_interface))
        .collect();
    region_threshold(&s, 0.05, 64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plan(n: usize, seed: u64) -> SweepPlan {
        SweepPlan {
            n_samples: n,
            seed,
            ..SweepPlan::periodic_default()
        }
    }

    fn strata_ok(p: &SweepPlan, pts: &[SamplePoint]) -> bool {
        let n = p.n_samples;
        p.dims.iter().all(|d| {
            let mut hit = vec![0usize; n];
            for s in pts {
                let v = if d.name == "pe" { s.pe } else { s.bi };
                let k = ((d.cdf(v) * n as f64).floor() as usize).min(n - 1);
                hit[k] += 1;
            }
            hit.iter().all(|&c| c == 1)
        })
    }

    #[test]
    fn quartiles_hold_one_point_each() {
        let p = plan(4, 3);
        let pts = lhs_sample(&p).unwrap();
        assert!(strata_ok(&p, &pts));
    }

    #[test]
    fn deterministic_for_a_seed() {
        assert_eq!(
            lhs_sample(&plan(16, 7)).unwrap(),
            lhs_sample(&plan(16, 7)).unwrap()
        );
        assert_ne!(
            lhs_sample(&plan(16, 7)).unwrap(),
            lhs_sample(&plan(16, 8)).unwrap()
        );
    }

    #[test]
    fn median_lands_in_middle_strata() {
        // independent oracle: the median of a log-normal is exp(mu)
        let mut p = plan(64, 11);
        p.dims[0] = LogNormalDim {
            name: "pe".into(),
            median: 105.0,
            log_sigma: 1.0,
            lower: None,
            upper: None,
        };
        let pts = lhs_sample(&p).unwrap();
        let mut pe: Vec<f64> = pts.iter().map(|s| s.pe).collect();
        pe.sort_by(f64::total_cmp);
        let med = 0.5 * (pe[31] + pe[32]);
        let q = p.dims[0].cdf(med);
        assert!(
            (q - 0.5).abs() <= 1.0 / 64.0 + 1e-12,
            "median {med} at quantile {q}"
        );
        assert!((p.dims[0].quantile(0.5) - 105.0).abs() < 1e-9);
    }

    #[test]
    fn truncation_respected() {
        let p = plan(200, 5);
        for s in lhs_sample(&p).unwrap() {
            assert!((0.1..=1000.0).contains(&s.pe) && (1e-3..=1e3).contains(&s.bi));
        }
    }

    #[test]
    fn invalid_plans() {
        assert!(lhs_sample(&plan(0, 1)).is_err());
        let mut p = plan(4, 1);
        p.dims.pop();
        assert!(lhs_sample(&p).is_err());
        let mut p = plan(4, 1);
        p.dims[0].median = -1.0;
        assert!(lhs_sample(&p).is_err());
    }

    #[test]
    fn empty_model_list_gives_empty_map() {
        let setup = SweepSetup {
            hydro_model: HydroModel::Wribl,
            domain: ResolvedDomain::periodic(30.0, 64),
            solver: SolverSettings::default(),
            run: RunSettings::default(),
            models: vec![],
            workers: 1,
            resume_dir: None,
        };
        assert!(execute_sweep(&plan(4, 1), &setup)
            .unwrap()
            .samples
            .is_empty());
    }

    #[test]
    fn region_all_below() {
        let s: Vec<(f64, f64, f64)> = (0..12).map(|i| (1.0 + i as f64, 0.5, 0.01)).collect();
        let r = region_threshold(&s, 0.05, 32).unwrap();
        assert_eq!(r.status, RegionStatus::AllBelow);
        assert!(r.segments.is_empty());
        let s: Vec<(f64, f64, f64)> = s.iter().map(|x| (x.0, x.1, 0.5)).collect();
        assert_eq!(
            region_threshold(&s, 0.05, 32).unwrap().status,
            RegionStatus::AllAbove
        );
        assert!(region_threshold(&s[..5], 0.05, 32).is_err());
    }

    #[test]
    fn region_of_synthetic_field() {
        // error = Pe/100 crosses 5% at Pe = 5
        let mut s = Vec::new();
        for i in 0..40 {
            for j in 0..5 {
                let pe = 10f64.powf(-1.0 + 3.0 * i as f64 / 39.0);
                let bi = 10f64.powf(-2.0 + j as f64);
                s.push((pe, bi, pe / 100.0));
            }
        }
        let r = region_threshold(&s, 0.05, 128).unwrap();
        assert_eq!(r.status, RegionStatus::Mixed);
        assert!(!r.segments.is_empty());
        let cell = 3.0 / 39.0;
        for seg in &r.segments {
            for p in seg {
                assert!((p.0 - 5f64.log10()).abs() < cell, "{p:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn stratification_for_every_n(n in 1usize..80, seed in 0u64..1000) {
            let p = plan(n, seed);
            let pts = lhs_sample(&p).unwrap();
            prop_assert!(strata_ok(&p, &pts));
        }
    }
}
