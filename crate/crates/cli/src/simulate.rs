//! `simulate`: one run with optional hydrodynamic spin-up, streaming
//! diagnostics, periodic snapshots and final flux profiles.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use filmheat::diagnostics::{self, DiagnosticsRecord, FluxProfiles, Source};
use filmheat::domain::ResolvedDomain;
use filmheat::fd::{Boundary, Derivatives};
use filmheat::fourier::FourierOps;
use filmheat::hydro::{perturbed_flat, HydroState};
use filmheat::integrate::{Simulation, SimulationState};
use filmheat::io::{fmt_f64, write_snapshot, JsonlWriter, Table};

use crate::config::{Config, Resolved};
use crate::manifest::{GridInfo, RunManifest, RunStatus};
use crate::{issues_to_usage, load_config, outdir, parse_models, Failure, SimulateArgs};

pub fn grid_info(domain: &ResolvedDomain, n_cheb: usize) -> GridInfo {
    GridInfo {
        kind: if domain.is_open() {
            "open".into()
        } else {
            "periodic".into()
        },
        nx: domain.grid.n,
        dx: domain.grid.dx,
        useful_points: domain.useful_points,
        n_cheb,
    }
}

pub fn run(args: &SimulateArgs) -> Result<(), Failure> {
    let mut cfg = load_config(args.config.as_ref())?;
    if let Some(m) = &args.models {
        cfg.run.models = parse_models(m)?;
    }
    if let Some(r) = args.reference {
        cfg.run.reference = r;
    }
    let res = cfg.resolve().map_err(issues_to_usage)?;
    outdir::prepare(&args.out, args.force, false)?;
    let out = args.out.as_path();
    fs::write(
        out.join("config.toml"),
        toml::to_string(&cfg).context("serializing config")?,
    )?;
    let manifest = RunManifest::start(
        "simulate",
        &cfg,
        res.groups,
        res.scaling,
        grid_info(&res.domain, cfg.solver.n_cheb),
        None,
    );
    manifest.write(out)?;
    match execute(&cfg, &res, out) {
        Ok(summary) => {
            manifest.finalize(out, RunStatus::Completed, None, summary)?;
            Ok(())
        }
        Err(e) => {
            let msg = format!("{e:#}");
            manifest.finalize(
                out,
                RunStatus::Failed,
                Some(msg.clone()),
                serde_json::Value::Null,
            )?;
            Err(Failure::Runtime(anyhow!(msg)))
        }
    }
}

struct Writers {
    table: BufWriter<File>,
    jsonl: JsonlWriter<BufWriter<File>>,
}

/// What the diagnostics need from a simulation, detached from the stepper.
struct Ctx {
    bi: f64,
    domain: ResolvedDomain,
    ops: Option<FourierOps>,
    deriv: Derivatives,
}

impl Ctx {
    fn of(sim: &Simulation) -> Self {
        Ctx {
            bi: sim.groups.bi,
            domain: sim.domain.clone(),
            ops: sim.ops.clone(),
            deriv: sim.deriv.clone(),
        }
    }
}

/// Diagnostics of every source at one output time, paired with the
/// reference when present.
fn records(
    s: &SimulationState,
    cx: &Ctx,
    prev_h: Option<&(f64, Vec<f64>)>,
) -> anyhow::Result<Vec<(DiagnosticsRecord, FluxProfiles)>> {
    let bi = cx.bi;
    let grid = diagnostics::useful_grid(&cx.domain);
    let wave = match (prev_h, cx.domain.grid.boundary) {
        (Some((t0, h0)), Boundary::Periodic) if s.t > *t0 => {
            diagnostics::wave_speed(h0, &s.hydro.h, s.t - t0, cx.domain.grid.dx).ok()
        }
        _ => None,
    };
    let reference = match (&s.fourier, &cx.ops) {
        (Some(f), Some(ops)) => Some(diagnostics::fourier_profiles(
            &s.hydro, f, bi, &cx.domain, ops, &cx.deriv,
        )),
        _ => None,
    };
    let mut out = Vec::new();
    for mf in &s.thermal {
        let p = diagnostics::model_profiles(&s.hydro, &mf.state, bi, &cx.domain, &cx.deriv);
        let mut r = DiagnosticsRecord::from_profiles(s.t, Source::Model(mf.model), &p, bi)?;
        r.wave_speed = wave;
        if let Some(rp) = &reference {
            r.pair_with(rp, &grid)?;
        }
        out.push((r, p));
    }
    if let Some(rp) = reference {
        let mut r = DiagnosticsRecord::from_profiles(s.t, Source::Fourier, &rp, bi)?;
        r.wave_speed = wave;
        out.push((r, rp));
    }
    Ok(out)
}

const TABLE_COLUMNS: [&str; 7] = [
    "t",
    "source",
    "min_theta",
    "nu_global",
    "wave_speed",
    "err_interface",
    "err_wall",
];

fn emit(w: &mut Writers, recs: &[(DiagnosticsRecord, FluxProfiles)]) -> anyhow::Result<()> {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "nan".into());
    for (r, _) in recs {
        let row = [
            fmt_f64(r.t),
            r.source.name().to_string(),
            fmt_f64(r.min_theta),
            opt(r.nu_global),
            opt(r.wave_speed),
            opt(r.h1_errors.get("interface").copied()),
            opt(r.h1_errors.get("wall").copied()),
        ];
        writeln!(w.table, "{}", row.join("\t"))?;
        w.jsonl.write(r)?;
    }
    w.table.flush()?;
    w.jsonl.flush()?;
    Ok(())
}

fn snapshot(path: &Path, s: &SimulationState) -> anyhow::Result<()> {
    let mut f =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    write_snapshot(&mut f, s)?;
    f.flush()?;
    Ok(())
}

fn profiles_table(
    s: &SimulationState,
    dom: &ResolvedDomain,
    recs: &[(DiagnosticsRecord, FluxProfiles)],
) -> anyhow::Result<Table> {
    let mut cols = vec!["x".to_string(), "h".to_string(), "q".to_string()];
    for (r, _) in recs {
        let n = r.source.name();
        cols.extend([
            format!("theta_{n}"),
            format!("flux_interface_{n}"),
            format!("flux_wall_{n}"),
        ]);
    }
    let mut t = Table::new(cols);
    let h = dom.crop(&s.hydro.h);
    let q = dom.crop(&s.hydro.q);
    for i in 0..h.len() {
        let mut row = vec![i as f64 * dom.grid.dx, h[i], q[i]];
        for (_, p) in recs {
            row.extend([p.theta[i], p.interface[i], p.wall[i]]);
        }
        t.push_f64(&row)?;
    }
    Ok(t)
}

fn initial_hydro(cfg: &Config, res: &Resolved) -> anyhow::Result<HydroState> {
    let n = res.domain.grid.n;
    let h0 = if res.domain.is_open() {
        HydroState::flat(n)
    } else {
        perturbed_flat(&res.domain.grid, cfg.run.seed_amplitude, 1)
    };
    if cfg.run.spinup_time <= 0.0 {
        return Ok(h0);
    }
    let mut sim = Simulation::new(
        res.groups,
        cfg.run.hydro_model,
        res.domain.clone(),
        &[],
        false,
        cfg.solver,
    )?;
    let st = sim.initial_state(h0)?;
    Ok(sim
        .run_to_time(st, cfg.run.spinup_time, None, |_| Ok(true))?
        .hydro)
}

fn execute(cfg: &Config, res: &Resolved, out: &Path) -> anyhow::Result<serde_json::Value> {
    let hydro = initial_hydro(cfg, res).context("hydrodynamic spin-up")?;
    let mut sim = Simulation::new(
        res.groups,
        cfg.run.hydro_model,
        res.domain.clone(),
        &cfg.run.models,
        cfg.run.reference,
        cfg.solver,
    )?;
    let st = sim.initial_state(hydro)?;
    let snap_dir = out.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    let mut w = Writers {
        table: BufWriter::new(File::create(out.join("diagnostics.tsv"))?),
        jsonl: JsonlWriter::new(BufWriter::new(File::create(out.join("diagnostics.jsonl"))?)),
    };
    writeln!(w.table, "{}", TABLE_COLUMNS.join("\t"))?;

    let cx = Ctx::of(&sim);
    let first = records(&st, &cx, None)?;
    emit(&mut w, &first)?;
    snapshot(&snap_dir.join("snap_00000.bin"), &st)?;

    let mut prev = (st.t, st.hydro.h.clone());
    let mut k = 0usize;
    let mut failure: Option<anyhow::Error> = None;
    let every = cfg.run.snapshot_every;
    let t_end = cfg.run.t_end;
    let dt_out = cfg.run.output_every;
    let result = sim.run_to_time(st, t_end, Some(dt_out), |s| {
        k += 1;
        let step = (|| -> anyhow::Result<()> {
            let recs = records(s, &cx, Some(&prev))?;
            emit(&mut w, &recs)?;
            if every > 0 && k % every == 0 {
                snapshot(&snap_dir.join(format!("snap_{k:05}.bin")), s)?;
            }
            Ok(())
        })();
        prev = (s.t, s.hydro.h.clone());
        match step {
            Ok(()) => Ok(true),
            Err(e) => {
                failure = Some(e);
                Ok(false)
            }
        }
    });
    let last = result?;
    if let Some(e) = failure {
        return Err(e);
    }
    // final state, also when t_end is not a multiple of the output interval
    let recs = records(&last, &cx, Some(&prev).filter(|p| p.0 < last.t))?;
    if last.t > prev.0 {
        emit(&mut w, &recs)?;
    }
    snapshot(&out.join("final.bin"), &last)?;
    let mut f = BufWriter::new(File::create(out.join("profiles.tsv"))?);
    profiles_table(&last, &cx.domain, &recs)?.write_to(&mut f)?;
    f.flush()?;
    Ok(serde_json::json!({
        "t_final": last.t,
        "outputs": k,
        "stats": sim.stats,
    }))
}
