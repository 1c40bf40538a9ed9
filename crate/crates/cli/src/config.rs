//! Run configuration: TOML with `[groups]`, `[domain]`, `[solver]`, `[run]`
//! and `[sweep]` sections. Every field has a default, so an empty file is a
//! valid config (the periodic example case).

use filmheat::domain::{DomainKind, DomainSpec, ResolvedDomain};
use filmheat::integrate::SolverSettings;
use filmheat::params::{bi_from_bi_tilde, bi_tilde_from_bi, inclination_number, ScalingReport};
use filmheat::sweep::{LogNormalDim, RunSettings, SweepPlan};
use filmheat::{DimensionlessGroups, HydroModel, ThermalModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub groups: GroupsConfig,
    pub domain: DomainSpec,
    pub solver: SolverSettings,
    pub run: RunConfig,
    pub sweep: SweepConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            groups: GroupsConfig::default(),
            domain: DomainSpec::periodic_default(),
            solver: SolverSettings::default(),
            run: RunConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

/// Physical or dimensionless inputs. `pr` replaces `pe` and `bi_tilde`
/// replaces `bi` when given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroupsConfig {
    pub re: f64,
    pub we: f64,
    /// Plate inclination in degrees (90 = vertical).
    pub beta: f64,
    pub ka: f64,
    pub pe: f64,
    pub pr: Option<f64>,
    pub bi: f64,
    pub bi_tilde: Option<f64>,
    /// Kinematic viscosity (m²/s) and gravity (m/s²), for dimensional
    /// lengths and frequencies.
    pub nu: f64,
    pub g: f64,
}

impl Default for GroupsConfig {
    fn default() -> Self {
        GroupsConfig {
            re: 15.0,
            we: 266.0,
            beta: 90.0,
            ka: 3000.0,
            pe: 105.0,
            pr: None,
            bi: 0.1,
            bi_tilde: None,
            nu: 1e-6,
            g: 9.81,
        }
    }
}

/// Settings of a single `simulate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub hydro_model: HydroModel,
    pub models: Vec<ThermalModel>,
    /// Integrate the Fourier reference alongside the models.
    pub reference: bool,
    /// Hydrodynamics-only run before the thermal fields are attached.
    pub spinup_time: f64,
    pub t_end: f64,
    pub output_every: f64,
    /// Write a binary snapshot every this many outputs (0 = final only).
    pub snapshot_every: usize,
    /// Initial thickness perturbation on a periodic box.
    pub seed_amplitude: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            hydro_model: HydroModel::Wribl,
            models: vec![
                ThermalModel::Theta,
                ThermalModel::ThetaPhi,
                ThermalModel::Scheid,
            ],
            reference: true,
            spinup_time: 600.0,
            t_end: 200.0,
            output_every: 5.0,
            snapshot_every: 10,
            seed_amplitude: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalConfig {
    pub median: f64,
    pub log_sigma: f64,
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
}

impl MarginalConfig {
    fn from_dim(d: &LogNormalDim) -> Self {
        MarginalConfig {
            median: d.median,
            log_sigma: d.log_sigma,
            lower: d.lower,
            upper: d.upper,
        }
    }

    fn to_dim(&self, name: &str) -> LogNormalDim {
        LogNormalDim {
            name: name.into(),
            median: self.median,
            log_sigma: self.log_sigma,
            lower: self.lower,
            upper: self.upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Defaults to 640 on a periodic box and 64 on an open plate.
    pub n_samples: Option<usize>,
    pub seed: u64,
    pub models: Vec<ThermalModel>,
    pub pe: MarginalConfig,
    pub bi: MarginalConfig,
    pub run: RunSettings,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let plan = SweepPlan::periodic_default();
        SweepConfig {
            n_samples: None,
            seed: plan.seed,
            models: ThermalModel::ALL.to_vec(),
            pe: MarginalConfig::from_dim(&plan.dims[0]),
            bi: MarginalConfig::from_dim(&plan.dims[1]),
            run: RunSettings::default(),
        }
    }
}

/// One validation problem, located by its dotted path in the config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Config turned into simulation inputs.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub groups: DimensionlessGroups,
    pub scaling: ScalingReport,
    pub domain: ResolvedDomain,
}

fn positive(issues: &mut Vec<Issue>, path: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        issues.push(Issue {
            path: path.into(),
            message: format!("must be positive and finite, got {v}"),
        });
    }
}

fn non_negative(issues: &mut Vec<Issue>, path: &str, v: f64) {
    if !(v >= 0.0 && v.is_finite()) {
        issues.push(Issue {
            path: path.into(),
            message: format!("must be non-negative and finite, got {v}"),
        });
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, Vec<Issue>> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let path = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "config".into());
            vec![Issue { path, message }]
        })
    }

    /// All problems found, not just the first.
    pub fn validate(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let g = &self.groups;
        for (p, v) in [
            ("groups.re", g.re),
            ("groups.we", g.we),
            ("groups.ka", g.ka),
            ("groups.nu", g.nu),
            ("groups.g", g.g),
        ] {
            positive(&mut out, p, v);
        }
        if !(g.beta > 0.0 && g.beta <= 90.0) {
            out.push(Issue {
                path: "groups.beta".into(),
                message: format!("must lie in (0, 90] degrees, got {}", g.beta),
            });
        }
        match g.pr {
            Some(pr) => positive(&mut out, "groups.pr", pr),
            None => positive(&mut out, "groups.pe", g.pe),
        }
        match g.bi_tilde {
            Some(b) => non_negative(&mut out, "groups.bi_tilde", b),
            None => non_negative(&mut out, "groups.bi", g.bi),
        }

        let d = &self.domain;
        positive(&mut out, "domain.length", d.length);
        if d.nx < 64 {
            out.push(Issue {
                path: "domain.nx".into(),
                message: format!("must be at least 64, got {}", d.nx),
            });
        }
        if let Some(u) = d.useful_length {
            if !(u > 0.0 && u < d.length) {
                out.push(Issue {
                    path: "domain.useful_length".into(),
                    message: format!("must lie in (0, length), got {u}"),
                });
            }
        }
        match (d.kind, &d.inlet) {
            (DomainKind::Periodic, Some(_)) => out.push(Issue {
                path: "domain.inlet".into(),
                message: "periodic domains take no inlet".into(),
            }),
            (_, Some(i)) => {
                non_negative(&mut out, "domain.inlet.amplitude", i.amplitude);
                non_negative(&mut out, "domain.inlet.frequency", i.frequency);
                if i.amplitude >= 1.0 {
                    out.push(Issue {
                        path: "domain.inlet.amplitude".into(),
                        message: "must be below 1".into(),
                    });
                }
            }
            _ => {}
        }

        let s = &self.solver;
        positive(&mut out, "solver.dt_max", s.dt_max);
        if !(s.safety > 0.0 && s.safety <= 1.0) {
            out.push(Issue {
                path: "solver.safety".into(),
                message: format!("must lie in (0, 1], got {}", s.safety),
            });
        }
        positive(&mut out, "solver.h_min", s.h_min);
        if s.n_cheb < 4 {
            out.push(Issue {
                path: "solver.n_cheb".into(),
                message: format!("must be at least 4, got {}", s.n_cheb),
            });
        }
        positive(&mut out, "solver.newton_tol", s.newton_tol);
        if s.max_newton == 0 {
            out.push(Issue {
                path: "solver.max_newton".into(),
                message: "must be at least 1".into(),
            });
        }

        let r = &self.run;
        non_negative(&mut out, "run.spinup_time", r.spinup_time);
        non_negative(&mut out, "run.t_end", r.t_end);
        positive(&mut out, "run.output_every", r.output_every);
        non_negative(&mut out, "run.seed_amplitude", r.seed_amplitude);
        if r.models.is_empty() && !r.reference {
            out.push(Issue {
                path: "run.models".into(),
                message: "nothing to simulate: no models and no reference".into(),
            });
        }
        if has_duplicates(&r.models) {
            out.push(Issue {
                path: "run.models".into(),
                message: "models listed twice".into(),
            });
        }

        let w = &self.sweep;
        if w.n_samples == Some(0) {
            out.push(Issue {
                path: "sweep.n_samples".into(),
                message: "must be at least 1".into(),
            });
        }
        if has_duplicates(&w.models) {
            out.push(Issue {
                path: "sweep.models".into(),
                message: "models listed twice".into(),
            });
        }
        for (name, m) in [("pe", &w.pe), ("bi", &w.bi)] {
            positive(&mut out, &format!("sweep.{name}.median"), m.median);
            positive(&mut out, &format!("sweep.{name}.log_sigma"), m.log_sigma);
            if let Some(l) = m.lower {
                positive(&mut out, &format!("sweep.{name}.lower"), l);
            }
            if let (Some(l), Some(u)) = (m.lower, m.upper) {
                if !(l < u) {
                    out.push(Issue {
                        path: format!("sweep.{name}.upper"),
                        message: "must exceed lower".into(),
                    });
                }
            }
        }
        let rs = &w.run;
        non_negative(&mut out, "sweep.run.spinup_time", rs.spinup_time);
        positive(
            &mut out,
            "sweep.run.relaxation_multiple",
            rs.relaxation_multiple,
        );
        positive(&mut out, "sweep.run.t_min", rs.t_min);
        if !(rs.t_max >= rs.t_min) {
            out.push(Issue {
                path: "sweep.run.t_max".into(),
                message: "must be at least t_min".into(),
            });
        }
        if !(rs.window_fraction > 0.0 && rs.window_fraction <= 1.0) {
            out.push(Issue {
                path: "sweep.run.window_fraction".into(),
                message: "must lie in (0, 1]".into(),
            });
        }
        if rs.window_snapshots == 0 {
            out.push(Issue {
                path: "sweep.run.window_snapshots".into(),
                message: "must be at least 1".into(),
            });
        }
        out
    }

    pub fn resolve(&self) -> Result<Resolved, Vec<Issue>> {
        let issues = self.validate();
        if !issues.is_empty() {
            return Err(issues);
        }
        let g = &self.groups;
        let pe = g.pr.map(|pr| pr * g.re).unwrap_or(g.pe);
        let bi = g
            .bi_tilde
            .map(|b| bi_from_bi_tilde(b, g.re))
            .unwrap_or(g.bi);
        let groups = DimensionlessGroups {
            re: g.re,
            we: g.we,
            ct: inclination_number(g.beta),
            pr: pe / g.re,
            pe,
            bi,
            bi_tilde: bi_tilde_from_bi(bi, g.re),
            ka: g.ka,
            beta: g.beta,
        };
        let one = |path: &str, e: filmheat::FilmError| {
            vec![Issue {
                path: path.into(),
                message: e.to_string(),
            }]
        };
        let scaling = ScalingReport::new(g.re, g.beta, g.nu, g.g).map_err(|e| one("groups", e))?;
        let domain = self
            .domain
            .resolve(Some(&scaling))
            .map_err(|e| one("domain", e))?;
        Ok(Resolved {
            groups,
            scaling,
            domain,
        })
    }

    pub fn sweep_plan(&self, groups: &DimensionlessGroups) -> SweepPlan {
        let n_default = match self.domain.kind {
            DomainKind::Periodic => SweepPlan::periodic_default().n_samples,
            DomainKind::Open => SweepPlan::open_default().n_samples,
        };
        SweepPlan {
            n_samples: self.sweep.n_samples.unwrap_or(n_default),
            dims: vec![self.sweep.pe.to_dim("pe"), self.sweep.bi.to_dim("bi")],
            seed: self.sweep.seed,
            fixed: *groups,
        }
    }
}

fn has_duplicates(models: &[ThermalModel]) -> bool {
    let mut v = models.to_vec();
    v.sort();
    v.windows(2).any(|w| w[0] == w[1])
}
