//! Dimensionless groups and the Nusselt scaling.
//!
//! Lengths are scaled by the Nusselt thickness `h_N`, velocities by
//! `3 u_N`, so the flat film reads `h = 1`, `q = 1/3`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// The full set of nondimensional groups used by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessGroups {
    pub re: f64,
    pub we: f64,
    pub ct: f64,
    pub pr: f64,
    pub pe: f64,
    /// Film Biot number, based on `h_N`.
    pub bi: f64,
    /// Biot number based on the viscous length `l_nu`.
    pub bi_tilde: f64,
    pub ka: f64,
    /// Plate inclination in degrees (90 = vertical).
    pub beta: f64,
}

impl DimensionlessGroups {
    /// Groups for the thermal problem only, with the hydrodynamic groups of
    /// the reference water case (Re = 15, We = 266, vertical plate).
    pub fn thermal(pe: f64, bi: f64) -> Self {
        let re = 15.0;
        DimensionlessGroups {
            re,
            we: 266.0,
            ct: 0.0,
            pr: pe / re,
            pe,
            bi,
            bi_tilde: bi / (3.0 * re).cbrt(),
            ka: 3000.0,
            beta: 90.0,
        }
    }

    /// Replaces Pe and Bi, keeping Pr and B̃i consistent with them.
    pub fn with_pe_bi(mut self, pe: f64, bi: f64) -> Self {
        self.pe = pe;
        self.pr = pe / self.re;
        self.bi = bi;
        self.bi_tilde = bi / (3.0 * self.re).cbrt();
        self
    }

    /// Surface temperature of the conductive (Nusselt) state for thickness `h`.
    pub fn theta0(&self, h: f64) -> f64 {
        theta0(self.bi, h)
    }
}

/// `θ0(h) = 1 / (1 + Bi h)`.
#[inline]
pub fn theta0(bi: f64, h: f64) -> f64 {
    1.0 / (1.0 + bi * h)
}

/// Converts physically specified inputs to simulation groups.
///
/// `we_override` takes precedence over the Kapitza conversion
/// `We = Ka (3 Re)^{-2/3}`.
pub fn derive_groups(
    ka: f64,
    re: f64,
    pr: f64,
    bi_tilde: f64,
    beta: f64,
    we_override: Option<f64>,
) -> Result<DimensionlessGroups> {
    for (name, v) in [("ka", ka), ("re", re), ("pr", pr)] {
        if !(v > 0.0) || !v.is_finite() {
            return domain(format!("{name} must be positive and finite, got {v}"));
        }
    }
    if !(bi_tilde >= 0.0) || !bi_tilde.is_finite() {
        return domain(format!("bi_tilde must be non-negative, got {bi_tilde}"));
    }
    if !(beta > 0.0 && beta <= 90.0) {
        return domain(format!("beta must lie in (0, 90] degrees, got {beta}"));
    }
    let we = match we_override {
        Some(w) if w > 0.0 && w.is_finite() => w,
        Some(w) => return domain(format!("we_override must be positive, got {w}")),
        None => ka * (3.0 * re).powf(-2.0 / 3.0),
    };
    let ct = inclination_number(beta);
    Ok(DimensionlessGroups {
        re,
        we,
        ct,
        pr,
        pe: pr * re,
        bi: bi_tilde * (3.0 * re).cbrt(),
        bi_tilde,
        ka,
        beta,
    })
}

/// `Ct = cot(beta)`, exactly zero for a vertical plate.
pub fn inclination_number(beta_deg: f64) -> f64 {
    if beta_deg == 90.0 {
        0.0
    } else {
        1.0 / beta_deg.to_radians().tan()
    }
}

/// Film Biot number from the viscous-length one.
pub fn bi_from_bi_tilde(bi_tilde: f64, re: f64) -> f64 {
    bi_tilde * (3.0 * re).cbrt()
}

pub fn bi_tilde_from_bi(bi: f64, re: f64) -> f64 {
    bi / (3.0 * re).cbrt()
}

/// Flat Nusselt state `(h, q, θ, φ)`.
pub fn nusselt_flat_state(bi: f64) -> (f64, f64, f64, f64) {
    (1.0, 1.0 / 3.0, theta0(bi, 1.0), 0.0)
}

/// Dimensional scales of the Nusselt flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    /// Nusselt thickness (m).
    pub h_n: f64,
    /// Velocity scale `3 u_N` (m/s).
    pub u_n_scale: f64,
    /// Viscous length `(nu^2 / (g sin beta))^{1/3}` (m).
    pub l_nu: f64,
}

impl ScalingReport {
    /// `nu` in m^2/s, `g` in m/s^2.
    pub fn new(re: f64, beta_deg: f64, nu: f64, g: f64) -> Result<Self> {
        if !(nu > 0.0 && g > 0.0 && re > 0.0) {
            return domain("nu, g and re must be positive");
        }
        let gs = g * beta_deg.to_radians().sin();
        if !(gs > 0.0) {
            return domain(format!("g sin(beta) must be positive, beta = {beta_deg}"));
        }
        let l_nu = (nu * nu / gs).cbrt();
        let h_n = l_nu * (3.0 * re).cbrt();
        let u_n_scale = gs * h_n * h_n / nu;
        Ok(ScalingReport {
            h_n,
            u_n_scale,
            l_nu,
        })
    }

    /// Time unit `h_N / (3 u_N)` in seconds.
    pub fn time_unit(&self) -> f64 {
        self.h_n / self.u_n_scale
    }

    pub fn length_from_meters(&self, meters: f64) -> f64 {
        meters / self.h_n
    }

    pub fn frequency_from_hz(&self, hz: f64) -> f64 {
        hz * self.time_unit()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn peclet_is_prandtl_times_reynolds() {
        let g = derive_groups(3000.0, 15.0, 7.0, 0.1, 90.0, None).unwrap();
        assert_eq!(g.pe, 105.0);
        assert_eq!(g.ct, 0.0);
    }

    #[test]
    fn film_biot_from_viscous_biot() {
        let g = derive_groups(3000.0, 15.0, 7.0, 0.1, 90.0, None).unwrap();
        assert_relative_eq!(g.bi, 0.1 * 45f64.cbrt(), max_relative = 1e-15);
        assert_relative_eq!(g.bi, 0.355_689, epsilon = 1e-5);
    }

    #[test]
    fn weber_override_wins() {
        let g = derive_groups(3000.0, 15.0, 7.0, 0.1, 90.0, Some(266.0)).unwrap();
        assert_eq!(g.we, 266.0);
        let g = derive_groups(3000.0, 15.0, 7.0, 0.1, 90.0, None).unwrap();
        assert_relative_eq!(g.we, 3000.0 * 45f64.powf(-2.0 / 3.0), max_relative = 1e-14);
        assert!((g.we - 237.1).abs() < 0.5);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(derive_groups(0.0, 15.0, 7.0, 0.1, 90.0, None).is_err());
        assert!(derive_groups(3000.0, -1.0, 7.0, 0.1, 90.0, None).is_err());
        assert!(derive_groups(3000.0, 15.0, 7.0, 0.1, 0.0, None).is_err());
        assert!(derive_groups(3000.0, 15.0, 7.0, 0.1, 91.0, None).is_err());
        assert!(derive_groups(3000.0, 15.0, 7.0, -0.1, 90.0, None).is_err());
    }

    #[test]
    fn inclined_plate_cotangent() {
        assert_relative_eq!(inclination_number(45.0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn flat_state() {
        assert_eq!(nusselt_flat_state(0.0), (1.0, 1.0 / 3.0, 1.0, 0.0));
        assert_eq!(nusselt_flat_state(1.0), (1.0, 1.0 / 3.0, 0.5, 0.0));
        assert_relative_eq!(nusselt_flat_state(0.1).2, 0.909_090_909, epsilon = 1e-9);
    }

    #[test]
    fn scaling_thickness_matches_viscous_length() {
        let s = ScalingReport::new(15.0, 90.0, 1e-6, 9.81).unwrap();
        assert_relative_eq!(s.h_n, s.l_nu * 45f64.cbrt(), max_relative = 1e-14);
        // water film at Re = 15 is a fraction of a millimetre thick
        assert!(s.h_n > 1e-4 && s.h_n < 3e-4);
    }

    proptest::proptest! {
        #[test]
        fn biot_round_trip(bi_t in 1e-4f64..1e3, re in 0.1f64..300.0) {
            let back = bi_tilde_from_bi(bi_from_bi_tilde(bi_t, re), re);
            proptest::prop_assert!(((back - bi_t) / bi_t).abs() < 1e-12);
        }
    }
}
