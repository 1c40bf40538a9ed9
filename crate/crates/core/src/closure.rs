//! Cross-stream profiles: the conductive temperature, the test polynomials
//! approximating the first two relaxation eigenmodes, the temperature
//! ansatz rebuilt from `(h, θ, φ)` and the leading-order velocity.

use crate::error::{domain, Result};
use crate::params::theta0;

/// Cubic `c0 + c1 y + c2 y^2 + c3 y^3`, evaluated in Horner form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubic(pub [f64; 4]);

impl Cubic {
    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        let c = &self.0;
        ((c[3] * y + c[2]) * y + c[1]) * y + c[0]
    }

    #[inline]
    pub fn d1(&self, y: f64) -> f64 {
        let c = &self.0;
        (3.0 * c[3] * y + 2.0 * c[2]) * y + c[1]
    }

    #[inline]
    pub fn d2(&self, y: f64) -> f64 {
        let c = &self.0;
        6.0 * c[3] * y + 2.0 * c[2]
    }
}

/// Point of evaluation of a closure polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureEval {
    pub ybar: f64,
    pub bih: f64,
}

impl ClosureEval {
    pub fn new(ybar: f64, bih: f64) -> Result<Self> {
        check_ybar(ybar)?;
        if !(bih >= 0.0) {
            return domain(format!("Bi h must be non-negative, got {bih}"));
        }
        Ok(ClosureEval { ybar, bih })
    }
}

fn check_ybar(ybar: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&ybar) {
        return domain(format!("ybar must lie in [0, 1], got {ybar}"));
    }
    Ok(())
}

/// `ṽ1 = ȳ(2 − ȳ) + Bih ȳ(1 − ȳ)`
pub fn vtilde1_poly(bih: f64) -> Cubic {
    Cubic([0.0, 2.0 + bih, -(1.0 + bih), 0.0])
}

/// `ṽ2 = −12ȳ(2/3 − ȳ)(5/4 − ȳ) + 2 Bih ȳ(1 − ȳ)(ȳ − 1/2)`
pub fn vtilde2_poly(bih: f64) -> Cubic {
    Cubic([0.0, -10.0 - bih, 23.0 + 3.0 * bih, -12.0 - 2.0 * bih])
}

/// `v̂1 = ȳ[3 − 3ȳ + ȳ² + Bih(2 − 3ȳ + ȳ²)]`
pub fn vhat1_poly(bih: f64) -> Cubic {
    Cubic([0.0, 3.0 + 2.0 * bih, -3.0 - 3.0 * bih, 1.0 + bih])
}

/// `v̂2 = ½ ȳ (1 − ȳ)²`
pub const VHAT2: Cubic = Cubic([0.0, 0.5, -1.0, 0.5]);

pub fn vtilde1(ybar: f64, bih: f64) -> f64 {
    vtilde1_poly(bih).eval(ybar)
}

pub fn vtilde2(ybar: f64, bih: f64) -> f64 {
    vtilde2_poly(bih).eval(ybar)
}

pub fn vhat1(ybar: f64, bih: f64) -> f64 {
    vhat1_poly(bih).eval(ybar)
}

pub fn vhat2(ybar: f64) -> f64 {
    VHAT2.eval(ybar)
}

/// Linear conductive profile `1 + (θ0(h) − 1) ȳ`.
pub fn nusselt_temperature(ybar: f64, h: f64, bi: f64) -> Result<f64> {
    check_ybar(ybar)?;
    if !(h > 0.0) {
        return domain(format!("h must be positive, got {h}"));
    }
    if !(bi >= 0.0) {
        return domain(format!("Bi must be non-negative, got {bi}"));
    }
    Ok(nusselt_temperature_unchecked(ybar, h, bi))
}

#[inline]
pub(crate) fn nusselt_temperature_unchecked(ybar: f64, h: f64, bi: f64) -> f64 {
    1.0 + (theta0(bi, h) - 1.0) * ybar
}

/// Temperature rebuilt from the model variables:
/// `T = T_Nu + (θ − θ0) v̂1 + φ v̂2`. Returns exactly `θ` at `ȳ = 1`.
pub fn reconstruct_temperature(ybar: f64, h: f64, theta: f64, phi: f64, bi: f64) -> f64 {
    if ybar == 1.0 {
        return theta;
    }
    let bih = bi * h;
    let t0 = theta0(bi, h);
    1.0 + (t0 - 1.0) * ybar + (theta - t0) * vhat1_poly(bih).eval(ybar) + phi * VHAT2.eval(ybar)
}

/// `∂ȳ T` of the ansatz at `ȳ`.
pub fn reconstruct_dtdybar(ybar: f64, h: f64, theta: f64, phi: f64, bi: f64) -> f64 {
    let bih = bi * h;
    let t0 = theta0(bi, h);
    (t0 - 1.0) + (theta - t0) * vhat1_poly(bih).d1(ybar) + phi * VHAT2.d1(ybar)
}

/// Heat flux leaving the wall into the film, `−∂y T|_{y=0}`, from the
/// ansatz derivative at the wall.
pub fn model_wall_flux(h: f64, theta: f64, phi: f64, bi: f64) -> f64 {
    let bih = bi * h;
    let t0 = theta0(bi, h);
    -((t0 - 1.0) + (theta - t0) * (3.0 + 2.0 * bih) + 0.5 * phi) / h
}

/// Leading-order streamwise velocity and the cumulative flow rate below `ȳ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocitySample {
    /// `u = (3q/h)(ȳ − ȳ²/2)`.
    pub u: f64,
    /// `∫_0^y u dy' = 3q(ȳ²/2 − ȳ³/6)`; `v = −∂x` of this at fixed `y`.
    pub flux_below: f64,
}

pub fn velocity_profile(ybar: f64, h: f64, q: f64) -> Result<VelocitySample> {
    if !(h > 0.0) {
        return domain(format!("h must be positive, got {h}"));
    }
    Ok(VelocitySample {
        u: 3.0 * q / h * (ybar - 0.5 * ybar * ybar),
        flux_below: 3.0 * q * (0.5 * ybar * ybar - ybar * ybar * ybar / 6.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const BIHS: [f64; 6] = [0.0, 0.1, 0.5, 1.0, 5.0, 100.0];

    #[test]
    fn nusselt_profile_values() {
        assert_eq!(nusselt_temperature(0.0, 2.0, 3.0).unwrap(), 1.0);
        assert_relative_eq!(nusselt_temperature(1.0, 1.0, 1.0).unwrap(), 0.5);
        assert_relative_eq!(
            nusselt_temperature(0.5, 1.0, 0.1).unwrap(),
            1.0 - 0.5 * (1.0 - 1.0 / 1.1),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            nusselt_temperature(0.5, 1.0, 0.1).unwrap(),
            0.954_545,
            epsilon = 1e-6
        );
        assert!(nusselt_temperature(1.5, 1.0, 0.1).is_err());
        assert!(nusselt_temperature(-0.1, 1.0, 0.1).is_err());
        assert!(ClosureEval::new(1.2, 0.0).is_err());
    }

    #[test]
    fn vtilde_conditions() {
        for bih in BIHS {
            assert_eq!(vtilde1(0.0, bih), 0.0);
            assert_eq!(vtilde2(0.0, bih), 0.0);
            let p1 = vtilde1_poly(bih);
            let p2 = vtilde2_poly(bih);
            assert!((p1.d1(1.0) + bih * p1.eval(1.0)).abs() < 1e-12);
            assert!((p2.d1(1.0) + bih * p2.eval(1.0)).abs() < 1e-12);
        }
        let p1 = vtilde1_poly(0.0);
        assert!((p1.eval(1.0) - 1.0).abs() < 1e-15);
        assert!(p1.d1(1.0).abs() < 1e-15);
        let p2 = vtilde2_poly(0.0);
        assert!((p2.eval(1.0) - 1.0).abs() < 1e-14);
        assert!(p2.d1(1.0).abs() < 1e-14);
        assert!(p2.eval(2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn vhat_conditions() {
        for bih in BIHS {
            let p = vhat1_poly(bih);
            assert!((p.eval(1.0) - 1.0).abs() < 1e-12);
            assert!(p.d2(1.0).abs() < 1e-12);
        }
        assert_eq!(vhat2(1.0), 0.0);
        assert!((VHAT2.d2(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(vhat2(0.5), 1.0 / 16.0);
    }

    #[test]
    fn ansatz_limits() {
        let (h, bi) = (1.3, 0.7);
        let t0 = theta0(bi, h);
        for i in 0..=20 {
            let y = i as f64 / 20.0;
            let t = reconstruct_temperature(y, h, t0, 0.0, bi);
            assert!((t - nusselt_temperature(y, h, bi).unwrap()).abs() < 1e-15);
        }
        assert_eq!(reconstruct_temperature(1.0, h, 0.7, 0.3, bi), 0.7);
        assert_eq!(reconstruct_temperature(0.0, h, 0.7, 0.3, bi), 1.0);
    }

    #[test]
    fn ansatz_satisfies_flat_newton_law() {
        // (1/h) ∂ȳT + Bi T = 0 at ȳ = 1; the measured residual is at round-off.
        let mut worst: f64 = 0.0;
        for &bi in &[0.0, 0.1, 1.0, 10.0, 100.0] {
            for &h in &[0.4, 1.0, 2.5] {
                for &theta in &[-0.2, 0.3, 0.9] {
                    for &phi in &[-1.0, 0.0, 0.5] {
                        let dt = reconstruct_dtdybar(1.0, h, theta, phi, bi);
                        let r = dt / h + bi * reconstruct_temperature(1.0, h, theta, phi, bi);
                        worst = worst.max(r.abs() / (1.0 + bi));
                    }
                }
            }
        }
        assert!(worst < 1e-12, "Newton-law residual {worst:e}");
    }

    #[test]
    fn vhat_lie_in_span_of_vtilde() {
        for bih in [0.0, 0.5, 1.0, 5.0] {
            let a = vtilde1_poly(bih).0;
            let b = vtilde2_poly(bih).0;
            for target in [vhat1_poly(bih).0, VHAT2.0] {
                // fit on the linear and cubic coefficients, then check pointwise
                let det = a[1] * b[3] - a[3] * b[1];
                let ca = (target[1] * b[3] - target[3] * b[1]) / det;
                let cb = (a[1] * target[3] - a[3] * target[1]) / det;
                let t = Cubic(target);
                for i in 0..50 {
                    let y = i as f64 / 49.0;
                    let fit = ca * Cubic(a).eval(y) + cb * Cubic(b).eval(y);
                    assert!((fit - t.eval(y)).abs() < 1e-12, "bih {bih} y {y}");
                }
            }
        }
    }

    #[test]
    fn wall_flux_matches_ansatz_derivative() {
        let (h, theta, phi, bi) = (1.4, 0.35, -0.2, 2.0);
        let d = reconstruct_dtdybar(0.0, h, theta, phi, bi);
        assert_relative_eq!(model_wall_flux(h, theta, phi, bi), -d / h, epsilon = 1e-14);
        // flat film: wall flux equals the Newton-law interface flux
        assert_relative_eq!(
            model_wall_flux(1.0, theta0(bi, 1.0), 0.0, bi),
            bi / (1.0 + bi),
            epsilon = 1e-15
        );
    }

    #[test]
    fn velocity_profile_values() {
        let v = velocity_profile(1.0, 1.0, 1.0 / 3.0).unwrap();
        assert_relative_eq!(v.u, 0.5, epsilon = 1e-15);
        assert_eq!(velocity_profile(0.0, 1.2, 0.4).unwrap().u, 0.0);
        assert!(velocity_profile(0.5, 0.0, 0.4).is_err());
        // ∫_0^1 u h dȳ = q, Simpson is exact on the quadratic
        let (h, q) = (1.7, 0.9);
        let f = |y: f64| velocity_profile(y, h, q).unwrap().u * h;
        let integral = (f(0.0) + 4.0 * f(0.5) + f(1.0)) / 6.0;
        assert_relative_eq!(integral, q, epsilon = 1e-14);
        assert_relative_eq!(
            velocity_profile(1.0, h, q).unwrap().flux_below,
            q,
            epsilon = 1e-15
        );
    }

    proptest::proptest! {
        #[test]
        fn ansatz_is_affine_in_theta_phi(
            y in 0.0f64..1.0, h in 0.2f64..3.0, bi in 0.0f64..50.0,
            t1 in -1.0f64..2.0, t2 in -1.0f64..2.0, p1 in -2.0f64..2.0, p2 in -2.0f64..2.0,
            a in -3.0f64..3.0,
        ) {
            let t0 = theta0(bi, h);
            let base = reconstruct_temperature(y, h, t0, 0.0, bi);
            let lhs = reconstruct_temperature(y, h, t0 + (t1 - t0) + a * (t2 - t0), p1 + a * p2, bi) - base;
            let r1 = reconstruct_temperature(y, h, t1, p1, bi) - base;
            let r2 = reconstruct_temperature(y, h, t2, p2, bi) - base;
            let scale = 1.0 + lhs.abs() + r1.abs() + (a * r2).abs() + base.abs();
            proptest::prop_assert!((lhs - (r1 + a * r2)).abs() < 1e-14 * scale * (1.0 + bi * h));
        }
    }
}
