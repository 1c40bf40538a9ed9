use std::io::Write;

use anyhow::Context;
use filmheat::io::{fmt_f64, Table};
use filmheat::linear::{model_damping, relaxation_roots};
use filmheat::ThermalModel;

use crate::{outdir, Failure, LinearArgs};

/// Parses `a`, `a,b,c`, `start:stop:count` or `start:stop:count:log`.
pub fn parse_range(spec: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let bad = |m: String| Failure::Usage(format!("--{what} {spec:?}: {m}"));
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| bad(format!("{s:?}: {e}")))
    };
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if !(parts.len() == 3 || (parts.len() == 4 && parts[3] == "log")) {
            return Err(bad(
                "expected start:stop:count or start:stop:count:log".into()
            ));
        }
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|e| bad(format!("count: {e}")))?;
        if n == 0 || b < a || (n > 1 && a == b) {
            return Err(bad("empty range".into()));
        }
        let log = parts.len() == 4;
        if log && !(a > 0.0) {
            return Err(bad("log spacing needs a positive start".into()));
        }
        (0..n)
            .map(|i| {
                let s = if n == 1 {
                    0.0
                } else {
                    i as f64 / (n - 1) as f64
                };
                if log {
                    (a.ln() + s * (b.ln() - a.ln())).exp()
                } else {
                    a + s * (b - a)
                }
            })
            .collect()
    } else {
        spec.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(num)
            .collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(bad("empty range".into()));
    }
    if values.iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(bad("values must be non-negative".into()));
    }
    Ok(values)
}

pub fn table(bih: &[f64], k: &[f64], modes: usize) -> Result<Table, Failure> {
    if modes == 0 {
        return Err(Failure::Usage("--modes must be at least 1".into()));
    }
    let mut cols = vec!["bih".to_string(), "k".to_string()];
    cols.extend((1..=modes).map(|m| format!("exact_{m}")));
    cols.extend(
        [
            "theta",
            "lin",
            "scheid",
            "theta_phi_plus",
            "theta_phi_minus",
        ]
        .map(String::from),
    );
    let mut t = Table::new(cols);
    for &b in bih {
        let roots = relaxation_roots(b, modes)?;
        for &kk in k {
            let mut row = vec![b, kk];
            // 3 Pe λ = -(l² + k²), independent of Pe
            row.extend(roots.iter().map(|l| -(l * l + kk * kk)));
            for m in [
                ThermalModel::Theta,
                ThermalModel::LinTruncated,
                ThermalModel::Scheid,
            ] {
                row.push(model_damping(m, b, kk)?[0]);
            }
            row.extend(model_damping(ThermalModel::ThetaPhi, b, kk)?);
            t.push(row.iter().map(|v| fmt_f64(*v)).collect())?;
        }
    }
    Ok(t)
}

pub fn run(args: &LinearArgs) -> Result<(), Failure> {
    let bih = parse_range(&args.bih, "bih")?;
    let k = parse_range(&args.k, "k")?;
    let t = table(&bih, &k, args.modes)?;
    match &args.out {
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            t.write_to(&mut lock)?;
            lock.flush()?;
        }
        Some(dir) => {
            outdir::prepare(dir, args.force, false)?;
            let path = dir.join("linear.tsv");
            let mut f = std::fs::File::create(&path)
                .with_context(|| format!("creating {}", path.display()))?;
            t.write_to(&mut f)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0", "k").unwrap(), vec![0.0]);
        assert_eq!(parse_range("0,1,10", "k").unwrap(), vec![0.0, 1.0, 10.0]);
        assert_eq!(parse_range("0:1:3", "k").unwrap(), vec![0.0, 0.5, 1.0]);
        let l = parse_range("1:100:3:log", "k").unwrap();
        assert!((l[1] - 10.0).abs() < 1e-12);
        for bad in ["", "1:0:3", "0:1:0", "0:1", "x", "-1", "0:1:3:lin"] {
            assert!(
                matches!(parse_range(bad, "k"), Err(Failure::Usage(_))),
                "{bad}"
            );
        }
    }
}
