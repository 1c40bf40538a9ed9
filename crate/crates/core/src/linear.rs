//! Relaxation spectrum of cross-film conduction and the damping rates of
//! the reduced models on a flat film.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chebyshev::ChebyshevGrid;
use crate::error::{domain, FilmError, Result};
use crate::model::ThermalModel;

/// Input of a spectrum evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRequest {
    pub bih: f64,
    pub pe: f64,
    pub k: f64,
    pub n_modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingResult {
    pub lambdas: Vec<Complex64>,
    /// `3 Pe Re(λ)` per mode.
    pub scaled: Vec<f64>,
}

/// Positive roots of `l cot l + bih = 0`, one per interval
/// `((n - 1/2) pi, n pi)`. `bih = inf` gives the roots of `sin l = 0`.
pub fn relaxation_roots(bih: f64, n_modes: usize) -> Result<Vec<f64>> {
    if bih.is_nan() || bih < 0.0 {
        return domain(format!("bih must be non-negative, got {bih}"));
    }
    let pi = std::f64::consts::PI;
    let mut roots = Vec::with_capacity(n_modes);
    for n in 1..=n_modes {
        let nf = n as f64;
        if bih.is_infinite() {
            roots.push(nf * pi);
            continue;
        }
        if bih == 0.0 {
            roots.push((nf - 0.5) * pi);
            continue;
        }
        // g = l cos l + bih sin l has the same roots and no poles
        let g = |l: f64| l * l.cos() + bih * l.sin();
        let dg = |l: f64| (1.0 + bih) * l.cos() - l * l.sin();
        let mut a = (nf - 0.5) * pi;
        let mut b = nf * pi;
        let ga = g(a);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if b - a < 1e-13 {
                break;
            }
            let gm = g(m);
            if gm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if (gm > 0.0) == (ga > 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        let mut l = 0.5 * (a + b);
        let d = dg(l);
        if d != 0.0 {
            let polished = l - g(l) / d;
            if polished > (nf - 0.5) * pi && polished < nf * pi {
                l = polished;
            }
        }
        roots.push(l);
    }
    Ok(roots)
}

/// `λ = -(l^2 + k^2) / (3 Pe)`.
pub fn exact_damping(l: f64, pe: f64, k: f64) -> Result<f64> {
    if !(pe > 0.0) {
        return domain(format!("pe must be positive, got {pe}"));
    }
    Ok(-(l * l + k * k) / (3.0 * pe))
}

/// Exact damping of the first `n_modes` modes.
pub fn exact_spectrum(req: &SpectrumRequest) -> Result<DampingResult> {
    if req.n_modes == 0 {
        return domain("n_modes must be at least 1");
    }
    let roots = relaxation_roots(req.bih, req.n_modes)?;
    let mut lambdas = Vec::new();
    let mut scaled = Vec::new();
    for l in roots {
        let lam = exact_damping(l, req.pe, req.k)?;
        lambdas.push(Complex64::new(lam, 0.0));
        scaled.push(3.0 * req.pe * lam);
    }
    Ok(DampingResult { lambdas, scaled })
}

/// `3 Pe λ` of the reduced models on the flat film. The θ–φ model returns
/// both eigenvalues, slowest first.
pub fn model_damping(model: ThermalModel, bih: f64, k: f64) -> Result<Vec<f64>> {
    if bih.is_nan() || bih < 0.0 {
        return domain(format!("bih must be non-negative, got {bih}"));
    }
    let k2 = k * k;
    Ok(match model {
        ThermalModel::Theta => vec![-60.0 * (1.0 + bih) / (27.0 + 7.0 * bih) - k2],
        ThermalModel::LinTruncated => vec![-6.0 * (1.0 + bih) / (3.0 + bih) - k2],
        ThermalModel::Scheid => vec![-3.0 - k2],
        ThermalModel::ThetaPhi => {
            let (a, b) = theta_phi_eigenvalues(bih);
            vec![a - k2, b - k2]
        }
    })
}

/// Eigenvalues of `[[0, 1], [-60(1+bih), -(27+7bih)]]`, slowest first.
fn theta_phi_eigenvalues(bih: f64) -> (f64, f64) {
    let tr = -(27.0 + 7.0 * bih);
    let det = 60.0 * (1.0 + bih);
    let disc = tr * tr - 4.0 * det;
    debug_assert!(disc >= 0.0);
    let s = disc.sqrt();
    // stable pair: the large root directly, the small one from the product
    let big = 0.5 * (tr - s);
    (det / big, big)
}

/// The θ–φ linear matrix `C(k)` (entries of `3 Pe` times the Jacobian).
pub fn theta_phi_matrix(bih: f64, k: f64) -> [[f64; 2]; 2] {
    let k2 = k * k;
    [[-k2, 1.0], [-60.0 * (1.0 + bih), -(27.0 + 7.0 * bih) - k2]]
}

/// Collocation eigenvalues of
/// `3 Pe (λ - i k u) T = T'' - k^2 T`, `T(0) = 0`, `T'(1) + bih T(1) = 0`
/// on the flat film, sorted by decreasing real part. Returns `λ`.
pub fn advected_spectrum(pe: f64, bih: f64, k: f64, n_cheb: usize) -> Result<Vec<Complex64>> {
    if n_cheb < 16 {
        return domain(format!("n_cheb must be at least 16, got {n_cheb}"));
    }
    if !(pe > 0.0) {
        return domain(format!("pe must be positive, got {pe}"));
    }
    if bih.is_nan() || bih < 0.0 {
        return domain(format!("bih must be non-negative, got {bih}"));
    }
    let g = ChebyshevGrid::new(n_cheb)?;
    let d = g.d1_ybar();
    let dd = g.d2_ybar();
    let y = g.ybar();
    let n = n_cheb;
    let m = n - 1;
    // eliminate T_n through the Robin row; T_0 = 0
    let mut c = vec![0.0; n + 1];
    if bih.is_infinite() {
        // T(1) = 0
    } else {
        let denom = d[(n, n)] + bih;
        if denom.abs() < 1e-300 {
            return Err(FilmError::Numerical("singular Robin row".into()));
        }
        for (j, cj) in c.iter_mut().enumerate().take(n).skip(1) {
            *cj = -d[(n, j)] / denom;
        }
    }
    let q = 1.0 / 3.0;
    let mut a = DMatrix::<Complex64>::zeros(m, m);
    for r in 0..m {
        let i = r + 1;
        for s in 0..m {
            let j = s + 1;
            a[(r, s)] = Complex64::new(dd[(i, j)] + dd[(i, n)] * c[j], 0.0);
        }
        let u = 3.0 * q * (y[i] - 0.5 * y[i] * y[i]);
        a[(r, r)] += Complex64::new(-k * k, 3.0 * pe * k * u);
    }
    let schur = nalgebra::linalg::Schur::try_new(a, f64::EPSILON, 10_000).ok_or_else(|| {
        FilmError::Numerical(format!(
            "eigen-solver failed (pe={pe}, bih={bih}, k={k}, n={n_cheb})"
        ))
    })?;
    let (_, t) = schur.unpack();
    let mut ev: Vec<Complex64> = (0..m).map(|i| t[(i, i)] / (3.0 * pe)).collect();
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(FilmError::Numerical("non-finite eigenvalue".into()));
    }
    ev.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal));
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn roots_limits() {
        assert_eq!(
            relaxation_roots(0.0, 3).unwrap(),
            vec![PI / 2.0, 1.5 * PI, 2.5 * PI]
        );
        assert_eq!(
            relaxation_roots(f64::INFINITY, 3).unwrap(),
            vec![PI, 2.0 * PI, 3.0 * PI]
        );
        let l = relaxation_roots(1.0, 1).unwrap()[0];
        assert!((l - 2.028_757_838).abs() < 1e-8, "{l}");
    }

    #[test]
    fn roots_bracketed_and_accurate() {
        for &bih in &[1e-6, 0.1, 1.0, 7.5, 100.0] {
            let roots = relaxation_roots(bih, 6).unwrap();
            for (n, &l) in roots.iter().enumerate() {
                let nf = (n + 1) as f64;
                assert!(l > (nf - 0.5) * PI && l < nf * PI);
                let r = l / l.tan() + bih;
                assert!(r.abs() < 1e-12 * (1.0 + bih * bih), "bih={bih} n={n} r={r}");
            }
        }
    }

    #[test]
    fn exact_damping_pe1() {
        let lam = exact_damping(PI / 2.0, 1.0, 0.0).unwrap();
        assert!((lam + 0.822_467_033).abs() < 1e-8);
        assert!(exact_damping(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn model_rates() {
        assert!(
            (model_damping(ThermalModel::Theta, 0.0, 0.0).unwrap()[0] + 60.0 / 27.0).abs() < 1e-14
        );
        assert_eq!(
            model_damping(ThermalModel::LinTruncated, 0.0, 0.0).unwrap()[0],
            -2.0
        );
        assert_eq!(
            model_damping(ThermalModel::Scheid, 3.0, 0.5).unwrap()[0],
            -3.25
        );
        let tp = model_damping(ThermalModel::ThetaPhi, 0.0, 0.0).unwrap();
        let s = 489f64.sqrt();
        assert!((tp[0] - (-27.0 + s) / 2.0).abs() < 1e-12);
        assert!((tp[1] - (-27.0 - s) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn collocation_matches_exact_at_k0() {
        for &bih in &[0.0, 1.0, 10.0] {
            let ev = advected_spectrum(2.0, bih, 0.0, 24).unwrap();
            let roots = relaxation_roots(bih, 3).unwrap();
            for (z, l) in ev.iter().zip(roots) {
                let exact = exact_damping(l, 2.0, 0.0).unwrap();
                assert!(
                    (z.re - exact).abs() < 1e-8 * exact.abs(),
                    "bih={bih}: {z} vs {exact}"
                );
                assert!(z.im.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn streamwise_diffusion_shift() {
        let pe = 10.0;
        let lead = |k: f64| 3.0 * pe * advected_spectrum(pe, 1.0, k, 24).unwrap()[0].re;
        let shift = lead(0.0) - lead(1.0);
        // k² from streamwise diffusion, plus a small advective correction
        assert!(shift > 0.0 && (shift - 1.0).abs() < 0.5, "shift {shift}");
    }

    #[test]
    fn theta_phi_matrix_eigen_consistent() {
        for &bih in &[0.0, 2.0, 50.0] {
            let c = theta_phi_matrix(bih, 0.0);
            let (a, b) = theta_phi_eigenvalues(bih);
            let tr = c[0][0] + c[1][1];
            let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
            assert!((a + b - tr).abs() < 1e-10 * tr.abs());
            assert!((a * b - det).abs() < 1e-10 * det.abs());
        }
    }

    proptest::proptest! {
        #[test]
        fn exact_modes_ordered(bih in 0.0f64..1e4) {
            let l = relaxation_roots(bih, 3).unwrap();
            let lam: Vec<f64> = l.iter().map(|&l| exact_damping(l, 1.0, 0.0).unwrap()).collect();
            proptest::prop_assert!(lam[0] > lam[1] && lam[1] > lam[2]);
            proptest::prop_assert!(lam[0] < 0.0);
        }

        #[test]
        fn roots_solve_the_dispersion_relation(bih in 1e-6f64..1e4, n in 1usize..6) {
            let l = relaxation_roots(bih, n).unwrap()[n - 1];
            let nf = n as f64;
            proptest::prop_assert!(l > (nf - 0.5) * PI && l < nf * PI);
            // g = l cos l + bih sin l, scaled by its size
            let g = l * l.cos() + bih * l.sin();
            proptest::prop_assert!(g.abs() < 1e-12 * (l + bih));
        }

        #[test]
        fn model_rates_shift_by_k_squared(bih in 0.0f64..100.0, k in 0.0f64..5.0) {
            for m in ThermalModel::ALL {
                let a = model_damping(m, bih, 0.0).unwrap();
                let b = model_damping(m, bih, k).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    proptest::prop_assert!((x - k * k - y).abs() < 1e-12 * (1.0 + x.abs() + k * k));
                }
            }
        }
    }
}
