//! Stereographic projection, dilations, the rotations that play the role
//! of translations at scale `k`, and the unitary transfer of plane
//! functions onto the sphere.
//!
//! The projection is taken from the north pole `(0, …, 0, 1)` onto the
//! plane of the first `d` coordinates; the south pole maps to the origin
//! and the equator to the unit sphere of ℝᵈ.

mod fourier;
mod isometry;
mod lift;
mod plane;

pub use fourier::{free_covariance_pairing, free_norm_sq, plane_pairing};
pub use isometry::{apply_isometry, generator, rotation_g_k, Isometry, IsometryAction, Rotation};
pub use lift::{ConformalPipeline, Lift, DEFAULT_RESIDUAL_CAP};
pub use plane::{GaussianBump, PlaneFunction, PlaneTestFunction, SmoothedSlab};

use crate::error::{Error, Result};

/// Stereographic coordinates of `x` and the conformal factor
/// `Λ_α = 1/(1 - x_d)`.
pub fn stereo_project(x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let d = x.len() - 1;
    let denom = 1.0 - x[d];
    if denom <= 0.0 {
        return Err(Error::ProjectionPole);
    }
    let y = x[..d].iter().map(|v| v / denom).collect();
    Ok((y, 1.0 / denom))
}

/// Inverse projection and its conformal factor `2/(‖y‖² + 1)`.
pub fn stereo_inverse(y: &[f64]) -> (Vec<f64>, f64) {
    let r2: f64 = y.iter().map(|v| v * v).sum();
    let denom = r2 + 1.0;
    let mut x: Vec<f64> = y.iter().map(|v| 2.0 * v / denom).collect();
    x.push((r2 - 1.0) / denom);
    (x, 2.0 / denom)
}

/// `k · α(g_k(T) · α⁻¹(x / k))`, which tends to `x + T` as `k → ∞`.
pub fn translation_composite(x: &[f64], translation: &[f64], k: f64) -> Result<Vec<f64>> {
    if x.len() != translation.len() {
        return Err(Error::Mismatch("point and translation dimensions differ".into()));
    }
    let rotation = rotation_g_k(translation, k)?;
    let scaled: Vec<f64> = x.iter().map(|v| v / k).collect();
    let (on_sphere, _) = stereo_inverse(&scaled);
    let (y, _) = stereo_project(&rotation.apply(&on_sphere))?;
    Ok(y.into_iter().map(|v| k * v).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn projection_examples() {
        let (y, lam) = stereo_project(&[0.0, 0.0, -1.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
        assert_eq!(lam, 0.5);
        let (y, lam) = stereo_project(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(y, vec![1.0, 0.0]);
        assert_eq!(lam, 1.0);
        assert_eq!(stereo_project(&[0.0, 1.0]).unwrap_err(), Error::ProjectionPole);
    }

    #[test]
    fn inverse_examples() {
        let (x, lam) = stereo_inverse(&[0.0, 0.0]);
        assert_eq!(x, vec![0.0, 0.0, -1.0]);
        assert_eq!(lam, 2.0);
        let (x, _) = stereo_inverse(&[0.6, 0.8]);
        assert!(x[2].abs() < 1e-15);
    }

    #[test]
    fn composite_with_zero_translation_is_identity() {
        for x in [-1.0, 0.0, 0.3, 1.0] {
            let y = translation_composite(&[x], &[0.0], 7.0).unwrap();
            assert!((y[0] - x).abs() < 1e-14);
        }
    }

    /// The closed form of the d = 1 composite.
    fn composite_formula(x: f64, t: f64, k: f64) -> f64 {
        let q = x * x / (k * k);
        let (s, c) = (2.0 * t / k).sin_cos();
        let a = 2.0 * x / (q + 1.0);
        let b = (q - 1.0) / (q + 1.0);
        (a * c - b * k * s) / (1.0 - a / k * s - b * c)
    }

    #[test]
    fn composite_matches_closed_form_in_one_dimension() {
        assert!((composite_formula(0.0, 1.0, 10.0) - 10.0 * 0.1f64.tan()).abs() < 1e-13);
        let v = translation_composite(&[0.0], &[1.0], 10.0).unwrap()[0];
        assert!((v - 10.0 * 0.1f64.tan()).abs() < 1e-12);
        assert!((v - 1.003_346_720_854_505_5).abs() < 1e-12);
        for x in [-1.0, -0.3, 0.5, 1.0] {
            for k in [3.0, 10.0, 40.0] {
                let v = translation_composite(&[x], &[1.0], k).unwrap()[0];
                assert!((v - composite_formula(x, 1.0, k)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn composite_error_decays_quadratically() {
        let err = |k: f64| (translation_composite(&[0.5], &[1.0], k).unwrap()[0] - 1.5).abs();
        for k in [10.0, 20.0, 40.0] {
            let ratio = err(2.0 * k) / err(k);
            assert!((0.2..=0.3).contains(&ratio), "k={k}: {ratio}");
        }
    }

    #[test]
    fn composite_approaches_translation_in_two_dimensions() {
        let err = |k: f64| {
            let y = translation_composite(&[0.3, -0.4], &[0.5, 0.2], k).unwrap();
            ((y[0] - 0.8).powi(2) + (y[1] + 0.2).powi(2)).sqrt()
        };
        assert!(err(20.0) < err(10.0) && err(40.0) < err(20.0));
    }

    proptest! {
        #[test]
        fn projection_round_trip(theta in 0.01f64..3.13, phi in 0.0..std::f64::consts::TAU) {
            let x = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
            let (y, lam) = stereo_project(&x).unwrap();
            let (back, lam_inv) = stereo_inverse(&y);
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            prop_assert!((lam * lam_inv - 1.0).abs() < 1e-12);
        }

        #[test]
        fn conformal_factors_are_reciprocal(y0 in -50.0f64..50.0, y1 in -50.0f64..50.0) {
            let (x, lam_inv) = stereo_inverse(&[y0, y1]);
            let (_, lam) = stereo_project(&x).unwrap();
            prop_assert!((lam * lam_inv - 1.0).abs() < 1e-12);
        }
    }
}
