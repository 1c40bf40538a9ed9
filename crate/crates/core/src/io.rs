//! Output formats: tab-separated tables with one header line, binary state
//! snapshots and line-delimited JSON records.

use std::io::{BufRead, Read, Write};

use serde::Serialize;

use crate::error::{FilmError, Result};
use crate::fourier::TemperatureField2D;
use crate::hydro::HydroState;
use crate::integrate::{ModelField, SimulationState};
use crate::model::ThermalModel;
use crate::thermal::ThermalState;

/// Columnar text table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(FilmError::Format(format!(
                "row has {} fields, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        if row.iter().any(|c| c.contains(['\t', '\n'])) {
            return Err(FilmError::Format(
                "table fields may not contain tabs or newlines".into(),
            ));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_f64(&mut self, row: &[f64]) -> Result<()> {
        self.push(row.iter().map(|v| fmt_f64(*v)).collect())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{}", self.columns.join("\t"))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join("\t"))?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| FilmError::Format("empty table".into()))??;
        let mut t = Table::new(header.split('\t'));
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            t.push(line.split('\t').map(String::from).collect())?;
        }
        Ok(t)
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let col = self
            .column(name)
            .ok_or_else(|| FilmError::Format(format!("no column `{name}`")))?;
        col.iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| FilmError::Format(format!("column {name}: {e}")))
            })
            .collect()
    }
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub const SNAPSHOT_MAGIC: [u8; 16] = *b"FILMHEAT-SNAP\0\0\0";
pub const SNAPSHOT_VERSION: u32 = 1;

fn put_f64s(w: &mut impl Write, v: &[f64]) -> Result<()> {
    w.write_all(&(v.len() as u64).to_le_bytes())?;
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64s(r: &mut impl Read, max: u64) -> Result<Vec<f64>> {
    let n = get_u64(r)?;
    if n > max {
        return Err(FilmError::Format(format!(
            "array of {n} values exceeds the expected {max}"
        )));
    }
    let mut out = Vec::with_capacity(n as usize);
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

fn model_code(m: ThermalModel) -> u8 {
    match m {
        ThermalModel::Theta => 0,
        ThermalModel::ThetaPhi => 1,
        ThermalModel::Scheid => 2,
        ThermalModel::LinTruncated => 3,
    }
}

/// Little-endian binary snapshot: magic, version, then `t`, `dt`, `h`, `q`,
/// the thermal fields and the optional Fourier field.
pub fn write_snapshot(w: &mut impl Write, s: &SimulationState) -> Result<()> {
    w.write_all(&SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&s.t.to_le_bytes())?;
    w.write_all(&s.dt.to_le_bytes())?;
    put_f64s(w, &s.hydro.h)?;
    put_f64s(w, &s.hydro.q)?;
    w.write_all(&[s.thermal.len() as u8])?;
    for f in &s.thermal {
        w.write_all(&[model_code(f.model), f.state.phi.is_some() as u8])?;
        put_f64s(w, &f.state.theta)?;
        if let Some(p) = &f.state.phi {
            put_f64s(w, p)?;
        }
    }
    match &s.fourier {
        None => w.write_all(&0u64.to_le_bytes())?,
        Some(f) => {
            w.write_all(&(f.ny as u64).to_le_bytes())?;
            put_f64s(w, &f.t)?;
        }
    }
    Ok(())
}

pub fn read_snapshot(r: &mut impl Read) -> Result<SimulationState> {
    let mut magic = [0u8; 16];
    r.read_exact(&mut magic)?;
    if magic != SNAPSHOT_MAGIC {
        return Err(FilmError::Format("not a snapshot file (bad magic)".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    let version = u32::from_le_bytes(v);
    if version != SNAPSHOT_VERSION {
        return Err(FilmError::Format(format!(
            "unsupported snapshot version {version}"
        )));
    }
    let t = f64::from_le_bytes(get_u64(r)?.to_le_bytes());
    let dt = f64::from_le_bytes(get_u64(r)?.to_le_bytes());
    const MAX: u64 = 1 << 28;
    let h = get_f64s(r, MAX)?;
    let n = h.len() as u64;
    let q = get_f64s(r, n)?;
    if q.len() != h.len() {
        return Err(FilmError::Format("h and q differ in length".into()));
    }
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let mut thermal = Vec::new();
    for _ in 0..b1[0] {
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2)?;
        let model = *ThermalModel::ALL
            .iter()
            .find(|m| model_code(**m) == b2[0])
            .ok_or_else(|| FilmError::Format(format!("unknown model code {}", b2[0])))?;
        let theta = get_f64s(r, n)?;
        let phi = if b2[1] == 1 {
            Some(get_f64s(r, n)?)
        } else {
            None
        };
        thermal.push(ModelField {
            model,
            state: ThermalState { theta, phi },
        });
    }
    let ny = get_u64(r)?;
    let fourier = if ny == 0 {
        None
    } else {
        let t2 = get_f64s(r, n * ny)?;
        if t2.len() as u64 != n * ny {
            return Err(FilmError::Format("Fourier field has the wrong size".into()));
        }
        Some(TemperatureField2D {
            nx: n as usize,
            ny: ny as usize,
            t: t2,
        })
    };
    Ok(SimulationState {
        t,
        dt,
        hydro: HydroState { h, q },
        thermal,
        fourier,
    })
}

/// Appends one JSON document per line.
pub struct JsonlWriter<W: Write> {
    inner: W,
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(inner: W) -> Self {
        JsonlWriter { inner }
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.inner, record)
            .map_err(|e| FilmError::Format(e.to_string()))?;
        self.inner.write_all(b"\n")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::FourierOps;

    #[test]
    fn table_round_trip() {
        let mut t = Table::new(["x", "h"]);
        t.push_f64(&[0.1, 1.0 / 3.0]).unwrap();
        t.push_f64(&[2.0, -1e-300]).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("x\th\n"));
        let back = Table::read_from(&buf[..]).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column_f64("h").unwrap(), vec![1.0 / 3.0, -1e-300]);
        assert!(t.push(vec!["1".into()]).is_err());
        assert!(t.push(vec!["a\tb".into(), "1".into()]).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let n = 8;
        let ops = FourierOps::new(6).unwrap();
        let hs = HydroState {
            h: (0..n).map(|i| 1.0 + 0.01 * i as f64).collect(),
            q: vec![0.3; n],
        };
        let s = SimulationState {
            t: 1.25,
            dt: 0.01,
            thermal: vec![
                ModelField {
                    model: ThermalModel::Theta,
                    state: ThermalState::equilibrium(ThermalModel::Theta, &hs.h, 0.5),
                },
                ModelField {
                    model: ThermalModel::ThetaPhi,
                    state: ThermalState::equilibrium(ThermalModel::ThetaPhi, &hs.h, 0.5),
                },
            ],
            fourier: Some(TemperatureField2D::nusselt(&hs.h, &ops, 0.5)),
            hydro: hs,
        };
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &s).unwrap();
        assert_eq!(&buf[..16], &SNAPSHOT_MAGIC);
        assert_eq!(read_snapshot(&mut &buf[..]).unwrap(), s);
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_snapshot(&mut &bad[..]).is_err());
        assert!(read_snapshot(&mut &buf[..buf.len() - 3]).is_err());
    }

    #[test]
    fn jsonl_lines() {
        let mut buf = Vec::new();
        {
            let mut w = JsonlWriter::new(&mut buf);
            w.write(&serde_json::json!({"a": 1})).unwrap();
            w.write(&serde_json::json!({"b": [1.5]})).unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "{\"a\":1}\n{\"b\":[1.5]}\n");
    }
}
