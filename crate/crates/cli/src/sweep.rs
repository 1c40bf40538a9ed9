//! `sweep`: LHS over (Pe, Bi), paired model/reference runs, error map and
//! 5% regions.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use filmheat::domain::{DomainKind, DomainSpec};
use filmheat::io::{fmt_f64, Table};
use filmheat::par::default_workers;
use filmheat::sweep::{execute_sweep, region_5pct, ErrorMap, SampleStatus, SweepSetup};
use filmheat::ThermalModel;

use crate::manifest::{archive_previous, RunManifest, RunStatus};
use crate::simulate::grid_info;
use crate::{issues_to_usage, load_config, outdir, parse_models, DomainArg, Failure, SweepArgs};

pub fn run(args: &SweepArgs) -> Result<(), Failure> {
    let mut cfg = load_config(args.config.as_ref())?;
    if let Some(d) = args.domain {
        let kind = match d {
            DomainArg::Periodic => DomainKind::Periodic,
            DomainArg::Open => DomainKind::Open,
        };
        if cfg.domain.kind != kind {
            cfg.domain = match kind {
                DomainKind::Periodic => DomainSpec::periodic_default(),
                DomainKind::Open => DomainSpec::open_default(),
            };
        }
    }
    if let Some(n) = args.samples {
        cfg.sweep.n_samples = Some(n);
    }
    if let Some(s) = args.seed {
        cfg.sweep.seed = s;
    }
    if let Some(m) = &args.models {
        cfg.sweep.models = parse_models(m)?;
    }
    let workers = args.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    let res = cfg.resolve().map_err(issues_to_usage)?;
    let plan = cfg.sweep_plan(&res.groups);
    plan.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    outdir::prepare(&args.out, args.force, args.resume)?;
    let out = args.out.as_path();
    if args.resume {
        archive_previous(out)?;
    }
    fs::write(
        out.join("config.toml"),
        toml::to_string(&cfg).context("serializing config")?,
    )?;
    let manifest = RunManifest::start(
        "sweep",
        &cfg,
        res.groups,
        res.scaling,
        grid_info(&res.domain, cfg.solver.n_cheb),
        Some(plan.seed),
    );
    manifest.write(out)?;

    let setup = SweepSetup {
        hydro_model: cfg.run.hydro_model,
        domain: res.domain.clone(),
        solver: cfg.solver,
        run: cfg.sweep.run,
        models: cfg.sweep.models.clone(),
        workers,
        resume_dir: Some(out.join("samples")),
    };
    let result = execute_sweep(&plan, &setup)
        .map_err(anyhow::Error::from)
        .and_then(|map| {
            write_outputs(out, &map, &cfg.sweep.models)?;
            Ok(map)
        });
    match result {
        Ok(map) => {
            let summary = serde_json::json!({
                "samples": map.samples.len(),
                "failed": map.failures(),
                "workers": workers,
            });
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
            Err(Failure::Runtime(anyhow::anyhow!(msg)))
        }
    }
}

fn save(path: &Path, t: &Table) -> anyhow::Result<()> {
    let mut f =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    t.write_to(&mut f)?;
    f.flush()?;
    Ok(())
}

/// `error_map.tsv`, `samples.tsv`, `regions.tsv` and `region_boundary.tsv`.
pub fn write_outputs(out: &Path, map: &ErrorMap, models: &[ThermalModel]) -> anyhow::Result<()> {
    let mut em = Table::new([
        "index",
        "pe",
        "bi",
        "model",
        "err_interface",
        "err_wall",
        "min_theta",
        "nu",
    ]);
    for r in map.rows() {
        em.push(vec![
            r.index.to_string(),
            fmt_f64(r.pe),
            fmt_f64(r.bi),
            r.model.name().into(),
            fmt_f64(r.err_interface),
            fmt_f64(r.err_wall),
            fmt_f64(r.min_theta),
            fmt_f64(r.nu),
        ])?;
    }
    save(&out.join("error_map.tsv"), &em)?;

    let mut st = Table::new([
        "index",
        "pe",
        "bi",
        "status",
        "message",
        "duration",
        "reference_min_theta",
        "reference_nu",
        "hydro_hash",
    ]);
    for s in &map.samples {
        let (status, message) = match &s.status {
            SampleStatus::Ok => ("ok", String::new()),
            SampleStatus::Failed(m) => ("failed", m.replace(['\t', '\n'], " ")),
        };
        st.push(vec![
            s.point.index.to_string(),
            fmt_f64(s.point.pe),
            fmt_f64(s.point.bi),
            status.into(),
            message,
            fmt_f64(s.duration),
            fmt_f64(s.reference_min_theta),
            fmt_f64(s.reference_nu),
            s.hydro_hash.clone(),
        ])?;
    }
    save(&out.join("samples.tsv"), &st)?;

    let mut regions = Table::new(["model", "status", "segments"]);
    let mut boundary = Table::new([
        "model",
        "segment",
        "log10_pe_a",
        "log10_bi_a",
        "log10_pe_b",
        "log10_bi_b",
    ]);
    for &m in models {
        match region_5pct(map, m) {
            Ok(r) => {
                let status = serde_json::to_value(r.status)?
                    .as_str()
                    .unwrap_or_default()
                    .to_string();
                regions.push(vec![m.name().into(), status, r.segments.len().to_string()])?;
                for (k, [a, b]) in r.segments.iter().enumerate() {
                    boundary.push(vec![
                        m.name().into(),
                        k.to_string(),
                        fmt_f64(a.0),
                        fmt_f64(a.1),
                        fmt_f64(b.0),
                        fmt_f64(b.1),
                    ])?;
                }
            }
            // too few successful samples for a contour
            Err(_) => regions.push(vec![m.name().into(), "insufficient".into(), "0".into()])?,
        }
    }
    save(&out.join("regions.tsv"), &regions)?;
    save(&out.join("region_boundary.tsv"), &boundary)?;
    Ok(())
}
