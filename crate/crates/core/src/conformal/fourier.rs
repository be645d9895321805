//! Plane-side Fourier quadrature for quadratic forms of Fourier
//! multipliers, `(2π)^{-d} ∫ f̂(ξ) conj(ĝ(ξ)) m(‖ξ‖²) dξ`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::PlaneFunction;
use crate::harmonics::gauss_legendre;

const PANEL_ORDER: usize = 10;

/// Composite Gauss–Legendre nodes and weights on `[-extent, extent]`
/// with panels no wider than `max_panel`.
fn panels(extent: f64, max_panel: f64) -> (Vec<f64>, Vec<f64>) {
    let n_panels = ((2.0 * extent / max_panel).ceil() as usize).max(2);
    let h = 2.0 * extent / n_panels as f64;
    let (x, w) = gauss_legendre(PANEL_ORDER);
    let mut nodes = Vec::with_capacity(n_panels * PANEL_ORDER);
    let mut weights = Vec::with_capacity(n_panels * PANEL_ORDER);
    for p in 0..n_panels {
        let mid = -extent + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + xi * h / 2.0);
            weights.push(wi * h / 2.0);
        }
    }
    (nodes, weights)
}

/// Axis quadrature for a pair of functions: extends far enough for both
/// transforms to decay and resolves the oscillation set by their spatial
/// extents.
fn axis_rule(f: &dyn PlaneFunction, g: &dyn PlaneFunction, axis: usize) -> (Vec<f64>, Vec<f64>) {
    let extent = f.frequency_extent()[axis].min(g.frequency_extent()[axis]);
    let spread = f.spatial_extent()[axis] + g.spatial_extent()[axis];
    let max_panel = (PI / (spread + 1.0)).min(0.5 * extent.max(1.0));
    panels(extent, max_panel)
}

/// `(2π)^{-d} ∫ f̂ conj(ĝ) · multiplier(‖ξ‖²) dξ`, real part.
///
/// For real `f`, `g` and an even multiplier the imaginary part vanishes
/// identically.
pub fn plane_pairing<M: Fn(f64) -> f64>(
    f: &dyn PlaneFunction,
    g: &dyn PlaneFunction,
    multiplier: M,
) -> f64 {
    debug_assert_eq!(f.dim(), g.dim());
    let d = f.dim();
    let norm = (2.0 * PI).powi(d as i32);
    match d {
        1 => {
            let (x, w) = axis_rule(f, g, 0);
            let terms: Vec<f64> = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| {
                    let v: Complex64 = f.fourier(&[*xi]) * g.fourier(&[*xi]).conj();
                    wi * v.re * multiplier(xi * xi)
                })
                .collect();
            crate::stats::pairwise_sum(&terms) / norm
        }
        _ => {
            let (x0, w0) = axis_rule(f, g, 0);
            let (x1, w1) = axis_rule(f, g, 1);
            let rows: Vec<f64> = x0
                .iter()
                .zip(&w0)
                .map(|(a, wa)| {
                    let row: Vec<f64> = x1
                        .iter()
                        .zip(&w1)
                        .map(|(b, wb)| {
                            let xi = [*a, *b];
                            let v = f.fourier(&xi) * g.fourier(&xi).conj();
                            wb * v.re * multiplier(a * a + b * b)
                        })
                        .collect();
                    wa * crate::stats::pairwise_sum(&row)
                })
                .collect();
            crate::stats::pairwise_sum(&rows) / norm
        }
    }
}

/// `⟨(Δ + m²)⁻¹ f, g⟩_{L²(ℝᵈ)}`.
pub fn free_covariance_pairing(f: &dyn PlaneFunction, g: &dyn PlaneFunction, mass: f64) -> f64 {
    let m2 = mass * mass;
    plane_pairing(f, g, |xi2| 1.0 / (xi2 + m2))
}

/// `‖(Δ + m²)^{-1/2} f‖²`.
pub fn free_norm_sq(f: &dyn PlaneFunction, mass: f64) -> f64 {
    free_covariance_pairing(f, f, mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{GaussianBump, PlaneTestFunction, SmoothedSlab};

    // E₁(1) and erfc(1), correctly rounded
    const EXP_INTEGRAL_E1_AT_1: f64 = 0.219_383_934_395_520_27;
    const ERFC_AT_1: f64 = 0.157_299_207_050_285_13;

    #[test]
    fn identity_multiplier_reproduces_closed_form_norm() {
        let f = PlaneTestFunction::new(
            2,
            vec![
                GaussianBump { amplitude: 1.0, center: vec![1.5, 0.0], width: 0.5 },
                GaussianBump { amplitude: -0.4, center: vec![-0.5, 2.0], width: 1.2 },
            ],
        )
        .unwrap();
        let q = plane_pairing(&f, &f, |_| 1.0);
        assert!((q - f.norm_sq()).abs() < 1e-11 * f.norm_sq(), "{q} vs {}", f.norm_sq());
        let g = PlaneTestFunction::bump(0.3, vec![2.5], 0.4).unwrap();
        let h = PlaneTestFunction::bump(-1.0, vec![-1.0], 0.9).unwrap();
        let q = plane_pairing(&g, &h, |_| 1.0);
        assert!((q - g.inner_product(&h)).abs() < 1e-13);
    }

    #[test]
    fn free_norm_of_unit_bump() {
        let e = std::f64::consts::E;
        let f2 = PlaneTestFunction::unit_bump(2).unwrap();
        assert!((free_norm_sq(&f2, 1.0) - PI * e * EXP_INTEGRAL_E1_AT_1).abs() < 1e-10);
        let f1 = PlaneTestFunction::unit_bump(1).unwrap();
        assert!((free_norm_sq(&f1, 1.0) - PI * e * ERFC_AT_1).abs() < 1e-10);
    }

    #[test]
    fn scaling_identity_for_the_free_resolvent() {
        // ⟨(Δ+m²)⁻¹ D_k⁻¹u, D_k⁻¹u⟩ = ⟨k²(Δ+k²m²)⁻¹u, u⟩ with D_k the unitary dilation
        let u = PlaneTestFunction::new(
            2,
            vec![
                GaussianBump { amplitude: 1.0, center: vec![0.2, 0.1], width: 0.3 },
                GaussianBump { amplitude: 0.5, center: vec![-0.3, 0.0], width: 0.2 },
            ],
        )
        .unwrap();
        for k in [2.0, 4.0] {
            let lhs = free_norm_sq(&u.dilated(1.0 / k), 1.0);
            let rhs = k * k * plane_pairing(&u, &u, |xi2| 1.0 / (xi2 + k * k));
            assert!((lhs - rhs).abs() < 1e-6 * rhs, "k={k}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn slab_transform_reproduces_norm() {
        let slab = SmoothedSlab::new(2, 0.2, 1.0).unwrap();
        let q = plane_pairing(&slab, &slab, |_| 1.0);
        assert!((q - slab.norm_sq()).abs() < 1e-6 * slab.norm_sq(), "{q} vs {}", slab.norm_sq());
    }
}
