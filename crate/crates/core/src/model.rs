//! Model selection enums.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::FilmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ThermalModel {
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "theta-phi")]
    ThetaPhi,
    #[serde(rename = "scheid")]
    Scheid,
    #[serde(rename = "lin")]
    LinTruncated,
}

impl ThermalModel {
    pub const ALL: [ThermalModel; 4] = [
        ThermalModel::Theta,
        ThermalModel::ThetaPhi,
        ThermalModel::Scheid,
        ThermalModel::LinTruncated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ThermalModel::Theta => "theta",
            ThermalModel::ThetaPhi => "theta-phi",
            ThermalModel::Scheid => "scheid",
            ThermalModel::LinTruncated => "lin",
        }
    }

    /// Whether the model carries the second field φ.
    pub fn has_phi(self) -> bool {
        self == ThermalModel::ThetaPhi
    }
}

impl fmt::Display for ThermalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThermalModel {
    type Err = FilmError;
    fn from_str(s: &str) -> Result<Self, FilmError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "theta" => Ok(ThermalModel::Theta),
            "theta-phi" | "thetaphi" | "theta_phi" => Ok(ThermalModel::ThetaPhi),
            "scheid" => Ok(ThermalModel::Scheid),
            "lin" | "lin-truncated" | "lintruncated" => Ok(ThermalModel::LinTruncated),
            other => Err(FilmError::Usage(format!(
                "unknown thermal model '{other}' (expected theta, theta-phi, scheid or lin)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HydroModel {
    #[serde(rename = "vila")]
    Vila,
    #[serde(rename = "wribl")]
    Wribl,
}

impl HydroModel {
    pub fn name(self) -> &'static str {
        match self {
            HydroModel::Vila => "vila",
            HydroModel::Wribl => "wribl",
        }
    }
}

impl fmt::Display for HydroModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HydroModel {
    type Err = FilmError;
    fn from_str(s: &str) -> Result<Self, FilmError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vila" => Ok(HydroModel::Vila),
            "wribl" => Ok(HydroModel::Wribl),
            other => Err(FilmError::Usage(format!(
                "unknown hydrodynamic model '{other}' (expected vila or wribl)"
            ))),
        }
    }
}

/// A thermal closure paired with a hydrodynamic closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub thermal: ThermalModel,
    pub hydro: HydroModel,
}
