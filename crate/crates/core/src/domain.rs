//! Periodic boxes and open plates: grids, inlet forcing, outlet closure and
//! the useful (cropped) region seen by diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{domain, FilmError, Result};
use crate::fd::Grid1D;
use crate::hydro::inlet_flowrate;
use crate::params::ScalingReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Periodic,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    #[default]
    Nondim,
    Cm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyUnit {
    Nondim,
    Hz,
}

/// Thermal condition at the inlet of an open plate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ThermalInlet {
    /// Conductive profile of the local inlet thickness.
    #[default]
    Nusselt,
    /// `T = 1` across the whole film.
    Hot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InletSpec {
    pub amplitude: f64,
    pub frequency: f64,
    pub frequency_unit: FrequencyUnit,
    #[serde(default)]
    pub thermal: ThermalInlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub length: f64,
    #[serde(default)]
    pub length_unit: LengthUnit,
    pub nx: usize,
    /// Length kept for diagnostics on open plates (same unit as `length`).
    #[serde(default)]
    pub useful_length: Option<f64>,
    #[serde(default)]
    pub inlet: Option<InletSpec>,
}

impl DomainSpec {
    /// Periodic box of length 90 with 512 points.
    pub fn periodic_default() -> Self {
        DomainSpec {
            kind: DomainKind::Periodic,
            length: 90.0,
            length_unit: LengthUnit::Nondim,
            nx: 512,
            useful_length: None,
            inlet: None,
        }
    }

    /// 25 cm plate cropped to 20 cm, forced at 10 Hz with 10% amplitude.
    pub fn open_default() -> Self {
        DomainSpec {
            kind: DomainKind::Open,
            length: 25.0,
            length_unit: LengthUnit::Cm,
            nx: 8192,
            useful_length: Some(20.0),
            inlet: Some(InletSpec {
                amplitude: 0.1,
                frequency: 10.0,
                frequency_unit: FrequencyUnit::Hz,
                thermal: ThermalInlet::Nusselt,
            }),
        }
    }

    /// Converts to nondimensional quantities. `scaling` is needed only when
    /// a dimensional unit is used.
    pub fn resolve(&self, scaling: Option<&ScalingReport>) -> Result<ResolvedDomain> {
        if !(self.length > 0.0) {
            return domain(format!(
                "domain length must be positive, got {}",
                self.length
            ));
        }
        if self.nx < 64 {
            return domain(format!("nx must be at least 64, got {}", self.nx));
        }
        let to_len = |v: f64| -> Result<f64> {
            match self.length_unit {
                LengthUnit::Nondim => Ok(v),
                LengthUnit::Cm => {
                    scaling
                        .map(|s| s.length_from_meters(v / 100.0))
                        .ok_or_else(|| {
                            FilmError::Usage(
                                "length in cm needs the physical scaling (nu, g)".into(),
                            )
                        })
                }
            }
        };
        let length = to_len(self.length)?;
        match self.kind {
            DomainKind::Periodic => {
                if self.inlet.is_some() {
                    return Err(FilmError::Usage("periodic domains take no inlet".into()));
                }
                Ok(ResolvedDomain {
                    grid: Grid1D::periodic(length, self.nx),
                    useful_points: self.nx,
                    inlet: None,
                })
            }
            DomainKind::Open => {
                let useful = to_len(self.useful_length.unwrap_or(self.length * 0.8))?;
                if !(useful > 0.0 && useful < length) {
                    return domain(format!(
                        "useful length must lie in (0, {length}), got {useful}"
                    ));
                }
                let grid = Grid1D::open(length, self.nx);
                let useful_points = ((useful / grid.dx).floor() as usize + 1).min(self.nx);
                let inlet = match self.inlet {
                    None => Inlet {
                        amplitude: 0.0,
                        frequency: 0.0,
                        thermal: ThermalInlet::Nusselt,
                    },
                    Some(spec) => {
                        let frequency = match spec.frequency_unit {
                            FrequencyUnit::Nondim => spec.frequency,
                            FrequencyUnit::Hz => scaling
                                .map(|s| s.frequency_from_hz(spec.frequency))
                                .ok_or_else(|| {
                                    FilmError::Usage(
                                        "frequency in Hz needs the physical scaling".into(),
                                    )
                                })?,
                        };
                        if spec.amplitude.abs() >= 1.0 {
                            return domain("inlet amplitude must be below 1");
                        }
                        Inlet {
                            amplitude: spec.amplitude,
                            frequency,
                            thermal: spec.thermal,
                        }
                    }
                };
                Ok(ResolvedDomain {
                    grid,
                    useful_points,
                    inlet: Some(inlet),
                })
            }
        }
    }
}

/// Inlet forcing in nondimensional units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inlet {
    pub amplitude: f64,
    pub frequency: f64,
    pub thermal: ThermalInlet,
}

impl Inlet {
    /// `h(0, t) = 1 + A sin(2 pi f t)`.
    pub fn thickness(&self, t: f64) -> f64 {
        1.0 + self.amplitude * (2.0 * std::f64::consts::PI * self.frequency * t).sin()
    }

    /// `(h, q)` imposed at `x = 0`.
    pub fn hydro(&self, t: f64) -> (f64, f64) {
        let h = self.thickness(t);
        (h, inlet_flowrate(h))
    }

    /// Free-surface temperature imposed with the thickness `h`.
    pub fn theta(&self, h: f64, bi: f64) -> f64 {
        match self.thermal {
            ThermalInlet::Nusselt => crate::params::theta0(bi, h),
            ThermalInlet::Hot => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedDomain {
    pub grid: Grid1D,
    /// Number of leading grid points inside the useful region.
    pub useful_points: usize,
    pub inlet: Option<Inlet>,
}

impl ResolvedDomain {
    pub fn periodic(length: f64, nx: usize) -> Self {
        ResolvedDomain {
            grid: Grid1D::periodic(length, nx),
            useful_points: nx,
            inlet: None,
        }
    }

    pub fn is_open(&self) -> bool {
        self.inlet.is_some()
    }

    /// Restriction of a field to the useful region.
    pub fn crop<'a>(&self, field: &'a [f64]) -> &'a [f64] {
        &field[..self.useful_points.min(field.len())]
    }
}

/// Sets `h(0)` and `q(0)` from the inlet at time `t`.
pub fn apply_inlet(
    h: &mut [f64],
    q: &mut [f64],
    t: f64,
    inlet: Option<&Inlet>,
) -> Result<(f64, f64)> {
    let inlet = inlet
        .ok_or_else(|| FilmError::Usage("inlet forcing applies to open domains only".into()))?;
    let (h0, q0) = inlet.hydro(t);
    h[0] = h0;
    q[0] = q0;
    Ok((h0, q0))
}

/// Zero-gradient closure at the last grid point.
pub fn apply_outlet(field: &mut [f64]) {
    let n = field.len();
    if n >= 2 {
        field[n - 1] = field[n - 2];
    }
}
