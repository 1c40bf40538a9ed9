use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn filmheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_filmheat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn columns(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text
        .lines()
        .map(|l| l.split('\t').map(String::from).collect::<Vec<_>>());
    let head = lines.next().unwrap();
    (head, lines.collect())
}

const SMALL_BOX: &str = r#"
[groups]
pe = 5.0
bi = 1.0

[domain]
kind = "periodic"
length = 45.0
nx = 128

[solver]
n_cheb = 8

[run]
models = ["theta", "theta-phi"]
spinup_time = 10.0
t_end = 2.0
output_every = 0.5
snapshot_every = 2

[sweep]
n_samples = 4
seed = 3
models = ["theta-phi", "scheid"]

[sweep.run]
spinup_time = 20.0
t_min = 5.0
t_max = 10.0
"#;

#[test]
fn linear_rows_at_both_biot_limits() {
    let o = filmheat(&["linear", "--bih", "0,1e12", "--modes", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    let head: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(&head[..5], &["bih", "k", "exact_1", "exact_2", "exact_3"]);
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split('\t').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    for (row, expect) in rows
        .iter()
        .zip([[-2.47, -22.21, -61.69], [-9.87, -39.48, -88.83]])
    {
        for (v, e) in row[2..5].iter().zip(expect) {
            assert!(((v - e) / e).abs() < 0.005, "{v} vs {e}");
        }
    }
    // θ model at Bi h = 0: -60/27
    let theta = head.iter().position(|c| *c == "theta").unwrap();
    assert!((rows[0][theta] + 60.0 / 27.0).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&filmheat(&["linear", "--bih", "1:0:3"])), 2);
    assert_eq!(code(&filmheat(&["linear", "--modes", "0"])), 2);
    assert_eq!(code(&filmheat(&["frobnicate"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(
        &cfg,
        "[groups]\npe = -1.0\n[domain]\nkind = \"periodic\"\nlength = 10.0\nnx = 8\n",
    )
    .unwrap();
    let o = filmheat(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(
        err.contains("groups.pe") && err.contains("domain.nx"),
        "{err}"
    );
    // nothing is written for a rejected config
    assert!(!dir.path().join("run").exists());

    fs::write(&cfg, "[groups]\npe = 1.0\nwobble = 2\n").unwrap();
    let o = filmheat(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let o = filmheat(&[
        "simulate",
        "--models",
        "theta,bogus",
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn existing_output_is_refused_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lin");
    let out_s = out.to_str().unwrap();
    assert_eq!(code(&filmheat(&["linear", "--out", out_s])), 0);
    assert!(out.join("linear.tsv").exists());
    let o = filmheat(&["linear", "--out", out_s]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--force"));
    assert_eq!(
        code(&filmheat(&[
            "linear", "--out", out_s, "--force", "--bih", "1"
        ])),
        0
    );
}

#[test]
fn simulate_writes_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("box.toml");
    fs::write(&cfg, SMALL_BOX).unwrap();
    let out = dir.path().join("run");
    let o = filmheat(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "completed");
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["grid"]["nx"], 128);
    assert_eq!(manifest["groups"]["pe"], 5.0);
    assert!(fs::metadata(out.join("manifest.json"))
        .unwrap()
        .permissions()
        .readonly());

    let (head, rows) = columns(&out.join("diagnostics.tsv"));
    assert_eq!(
        head,
        [
            "t",
            "source",
            "min_theta",
            "nu_global",
            "wave_speed",
            "err_interface",
            "err_wall"
        ]
    );
    // t = 0, 0.5, ..., 2 for two models and the reference
    assert_eq!(rows.len(), 5 * 3);
    let last = &rows[rows.len() - 3..];
    assert_eq!(last[0][0].parse::<f64>().unwrap(), 2.0);
    assert_eq!(last[2][1], "fourier");
    for r in &last[..2] {
        let e: f64 = r[5].parse().unwrap();
        assert!(e.is_finite() && e < 0.1, "{r:?}");
    }
    let jsonl = fs::read_to_string(out.join("diagnostics.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), rows.len());

    let snaps = fs::read_dir(out.join("snapshots")).unwrap().count();
    assert_eq!(snaps, 3); // initial, 2nd and 4th output
    assert!(out.join("final.bin").exists());
    let (phead, prow) = columns(&out.join("profiles.tsv"));
    assert_eq!(prow.len(), 128);
    assert!(phead.contains(&"flux_interface_theta-phi".to_string()));
}

fn sweep(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    filmheat(&args)
}

#[test]
fn sweep_is_deterministic_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("box.toml");
    fs::write(&cfg, SMALL_BOX).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = sweep(&cfg, &a, &["--workers", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&sweep(&cfg, &b, &["--workers", "3"])), 0);
    for f in [
        "error_map.tsv",
        "samples.tsv",
        "regions.tsv",
        "region_boundary.tsv",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let (head, rows) = columns(&a.join("error_map.tsv"));
    assert_eq!(head[3], "model");
    assert_eq!(rows.len(), 4 * 2);

    // drop two samples and resume: same tables, old manifest archived
    let reference = fs::read(a.join("error_map.tsv")).unwrap();
    fs::remove_file(a.join("samples/sample_00001.json")).unwrap();
    fs::remove_file(a.join("samples/sample_00003.json")).unwrap();
    assert_eq!(code(&sweep(&cfg, &a, &[])), 1);
    let o = sweep(&cfg, &a, &["--resume"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(a.join("error_map.tsv")).unwrap(), reference);
    assert!(a.join("manifest.previous.1.json").exists());
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "completed");
    assert_eq!(m["seed"], 3);

    assert_eq!(code(&sweep(&cfg, &a, &["--resume", "--force"])), 2);
}

#[test]
fn sweep_on_open_plate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("plate.toml");
    fs::write(
        &cfg,
        r#"
[domain]
kind = "open"
length = 60.0
nx = 128
useful_length = 48.0

[domain.inlet]
amplitude = 0.05
frequency = 0.05
frequency_unit = "nondim"

[solver]
n_cheb = 8

[sweep]
models = ["theta-phi"]

[sweep.run]
spinup_time = 20.0
t_min = 5.0
t_max = 5.0
"#,
    )
    .unwrap();
    let out = dir.path().join("open");
    let o = sweep(&cfg, &out, &["--domain", "open", "--samples", "8"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = columns(&out.join("samples.tsv"));
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[3] == "ok"), "{rows:?}");
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["grid"]["kind"], "open");
    assert_eq!(m["grid"]["useful_points"].as_u64().unwrap() < 128, true);
}
