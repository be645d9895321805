use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real function on ℝᵈ with a known Fourier transform.
///
/// Fourier convention: `f̂(ξ) = ∫ f(y) e^{-iξ·y} dy`, so that
/// `∫ |f|² = (2π)^{-d} ∫ |f̂|²`.
pub trait PlaneFunction {
    fn dim(&self) -> usize;

    fn eval(&self, y: &[f64]) -> f64;

    fn fourier(&self, xi: &[f64]) -> Complex64;

    /// Per-axis frequency beyond which `|f̂|` is negligible.
    fn frequency_extent(&self) -> Vec<f64>;

    /// Per-axis bound on where the function lives; controls how fast
    /// `f̂` oscillates.
    fn spatial_extent(&self) -> Vec<f64>;

    fn norm_sq(&self) -> f64;
}

/// One term `a · exp(-‖y - c‖² / (2s²))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianBump {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

/// Finite mixture of Gaussian bumps on ℝᵈ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPlaneTestFunction")]
pub struct PlaneTestFunction {
    dim: usize,
    terms: Vec<GaussianBump>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlaneTestFunction {
    dim: usize,
    terms: Vec<GaussianBump>,
}

impl TryFrom<RawPlaneTestFunction> for PlaneTestFunction {
    type Error = Error;

    fn try_from(raw: RawPlaneTestFunction) -> Result<Self> {
        Self::new(raw.dim, raw.terms)
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl PlaneTestFunction {
    pub fn new(dim: usize, terms: Vec<GaussianBump>) -> Result<Self> {
        crate::harmonics::check_dim(dim)?;
        for (i, t) in terms.iter().enumerate() {
            if t.center.len() != dim {
                return Err(Error::Mismatch(format!("term {i} centre has {} coordinates", t.center.len())));
            }
            if !(t.width > 0.0 && t.width.is_finite()) {
                return Err(Error::InvalidArgument(format!("term {i} width must be positive")));
            }
            if !t.amplitude.is_finite() || t.center.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument(format!("term {i} is not finite")));
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    pub fn bump(amplitude: f64, center: Vec<f64>, width: f64) -> Result<Self> {
        let dim = center.len();
        Self::new(dim, vec![GaussianBump { amplitude, center, width }])
    }

    /// `a = 1`, `s = 1`, centred at the origin.
    pub fn unit_bump(dim: usize) -> Result<Self> {
        Self::bump(1.0, vec![0.0; dim], 1.0)
    }

    pub fn terms(&self) -> &[GaussianBump] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == 0.0)
    }

    /// L² pairing, in closed form.
    pub fn inner_product(&self, other: &PlaneTestFunction) -> f64 {
        let d = self.dim as i32;
        let mut acc = 0.0;
        for a in &self.terms {
            for b in &other.terms {
                let s2 = a.width * a.width + b.width * b.width;
                let pref = (2.0 * PI * a.width * a.width * b.width * b.width / s2).powf(d as f64 / 2.0);
                acc += a.amplitude * b.amplitude * pref * (-dist_sq(&a.center, &b.center) / (2.0 * s2)).exp();
            }
        }
        acc
    }

    fn map_terms<F: Fn(&GaussianBump) -> GaussianBump>(&self, f: F) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().map(f).collect(),
        }
    }

    /// `k^{d/2} f(k y)`, the unitary dilation.
    pub fn dilated(&self, k: f64) -> Self {
        let amp = k.powf(self.dim as f64 / 2.0);
        self.map_terms(|t| GaussianBump {
            amplitude: t.amplitude * amp,
            center: t.center.iter().map(|c| c / k).collect(),
            width: t.width / k,
        })
    }

    /// `y ↦ f(y + shift)`.
    pub fn translated(&self, shift: &[f64]) -> Self {
        self.map_terms(|t| GaussianBump {
            amplitude: t.amplitude,
            center: t.center.iter().zip(shift).map(|(c, s)| c - s).collect(),
            width: t.width,
        })
    }

    /// `y ↦ f(R⁻¹ y)` for an orthogonal `d × d` matrix given row-major.
    pub fn rotated(&self, matrix: &[f64]) -> Self {
        let d = self.dim;
        self.map_terms(|t| GaussianBump {
            amplitude: t.amplitude,
            center: (0..d)
                .map(|i| (0..d).map(|j| matrix[i * d + j] * t.center[j]).sum())
                .collect(),
            width: t.width,
        })
    }

    /// Reflection of the first ("time") coordinate.
    pub fn time_reflected(&self) -> Self {
        self.map_terms(|t| {
            let mut center = t.center.clone();
            center[0] = -center[0];
            GaussianBump {
                amplitude: t.amplitude,
                center,
                width: t.width,
            }
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_terms(|t| GaussianBump {
            amplitude: a * t.amplitude,
            center: t.center.clone(),
            width: t.width,
        })
    }

    /// Sum of mixtures, concatenating terms.
    pub fn plus(&self, other: &PlaneTestFunction) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Mismatch("plane functions of different dimension".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self { dim: self.dim, terms })
    }

    pub fn minus(&self, other: &PlaneTestFunction) -> Result<Self> {
        self.plus(&other.scaled(-1.0))
    }

    /// Smallest time coordinate reached by any term's `radius·s` ball.
    pub fn min_time_with_margin(&self, radius: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.center[0] - radius * t.width)
            .fold(f64::INFINITY, f64::min)
    }
}

impl PlaneFunction for PlaneTestFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, y: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude * (-dist_sq(y, &t.center) / (2.0 * t.width * t.width)).exp())
            .sum()
    }

    fn fourier(&self, xi: &[f64]) -> Complex64 {
        let d = self.dim as f64;
        let xi2: f64 = xi.iter().map(|x| x * x).sum();
        self.terms
            .iter()
            .map(|t| {
                let s2 = t.width * t.width;
                let mag = t.amplitude * (2.0 * PI * s2).powf(d / 2.0) * (-s2 * xi2 / 2.0).exp();
                let phase: f64 = xi.iter().zip(&t.center).map(|(x, c)| x * c).sum();
                Complex64::from_polar(mag, -phase)
            })
            .sum()
    }

    fn frequency_extent(&self) -> Vec<f64> {
        // exp(-s²ξ²/2) < 1e-16 beyond ξ = √(2·37)/s
        let s = self.terms.iter().map(|t| t.width).fold(f64::INFINITY, f64::min);
        let e = if s.is_finite() { 74f64.sqrt() / s } else { 1.0 };
        vec![e; self.dim]
    }

    fn spatial_extent(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                self.terms
                    .iter()
                    .map(|t| t.center[i].abs() + 3.0 * t.width)
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    fn norm_sq(&self) -> f64 {
        self.inner_product(self)
    }
}

/// `χ̃_t(y₀) · h(y₁, …)`: the indicator of `(0, t)` in the time
/// coordinate convolved with a normalised box of width `t/10`, times a
/// Gaussian profile `h` of width `profile_width` in the remaining
/// coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedSlab {
    dim: usize,
    thickness: f64,
    ramp: f64,
    profile_width: f64,
}

impl SmoothedSlab {
    pub fn new(dim: usize, thickness: f64, profile_width: f64) -> Result<Self> {
        crate::harmonics::check_dim(dim)?;
        if !(thickness > 0.0) || !(profile_width > 0.0) {
            return Err(Error::InvalidArgument("slab thickness and profile width must be positive".into()));
        }
        Ok(Self {
            dim,
            thickness,
            ramp: thickness / 10.0,
            profile_width,
        })
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    fn time_profile(&self, y0: f64) -> f64 {
        let lo = (y0 - self.ramp / 2.0).max(0.0);
        let hi = (y0 + self.ramp / 2.0).min(self.thickness);
        ((hi - lo) / self.ramp).max(0.0)
    }

    fn time_fourier(&self, w: f64) -> Complex64 {
        // FT of 1_(0,t) is e^{-iwt/2}·t·sinc(wt/2); FT of the unit box is sinc(w·r/2)
        let sinc = |x: f64| if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
        let mag = self.thickness * sinc(w * self.thickness / 2.0) * sinc(w * self.ramp / 2.0);
        Complex64::from_polar(mag, -w * self.thickness / 2.0)
    }
}

impl PlaneFunction for SmoothedSlab {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, y: &[f64]) -> f64 {
        let s2 = self.profile_width * self.profile_width;
        let r2: f64 = y[1..].iter().map(|v| v * v).sum();
        self.time_profile(y[0]) * (-r2 / (2.0 * s2)).exp()
    }

    fn fourier(&self, xi: &[f64]) -> Complex64 {
        let s2 = self.profile_width * self.profile_width;
        let r2: f64 = xi[1..].iter().map(|v| v * v).sum();
        let transverse = (2.0 * PI * s2).powf((self.dim - 1) as f64 / 2.0) * (-s2 * r2 / 2.0).exp();
        self.time_fourier(xi[0]) * transverse
    }

    fn frequency_extent(&self) -> Vec<f64> {
        let mut e = vec![74f64.sqrt() / self.profile_width; self.dim];
        // |FT|² decays like w⁻⁴ past 1/ramp
        e[0] = 60.0 / self.ramp;
        e
    }

    fn spatial_extent(&self) -> Vec<f64> {
        let mut e = vec![3.0 * self.profile_width; self.dim];
        e[0] = self.thickness + self.ramp;
        e
    }

    fn norm_sq(&self) -> f64 {
        // ∫ χ̃² = t - r/3 for the trapezoidal profile (r ≤ t)
        let time = self.thickness - self.ramp / 3.0;
        let transverse = (PI * self.profile_width * self.profile_width).powf((self.dim - 1) as f64 / 2.0);
        time * transverse
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_norm_sq_2d(f: &dyn PlaneFunction, half: f64, n: usize) -> f64 {
        let h = 2.0 * half / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let y = [-half + (i as f64 + 0.5) * h, -half + (j as f64 + 0.5) * h];
                acc += f.eval(&y).powi(2);
            }
        }
        acc * h * h
    }

    #[test]
    fn unit_bump_norm_is_pi() {
        let f = PlaneTestFunction::unit_bump(2).unwrap();
        assert!((f.norm_sq() - PI).abs() < 1e-14);
        assert!((brute_norm_sq_2d(&f, 10.0, 400) - PI).abs() < 1e-9);
    }

    #[test]
    fn mixture_norm_matches_brute_force() {
        let f = PlaneTestFunction::new(
            2,
            vec![
                GaussianBump { amplitude: 0.7, center: vec![0.3, -0.2], width: 0.6 },
                GaussianBump { amplitude: -1.1, center: vec![-0.5, 0.4], width: 1.3 },
            ],
        )
        .unwrap();
        let brute = brute_norm_sq_2d(&f, 12.0, 800);
        assert!((f.norm_sq() - brute).abs() < 1e-8 * brute, "{} vs {brute}", f.norm_sq());
    }

    #[test]
    fn dilation_is_unitary() {
        let f = PlaneTestFunction::bump(2.0, vec![0.5, 1.0], 0.8).unwrap();
        for k in [0.5, 2.0, 7.0] {
            assert!((f.dilated(k).norm_sq() - f.norm_sq()).abs() < 1e-12 * f.norm_sq());
            let y = [0.3, -0.1];
            let direct = k * f.eval(&[k * y[0], k * y[1]]);
            assert!((f.dilated(k).eval(&y) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn translation_shifts_argument() {
        let f = PlaneTestFunction::bump(1.0, vec![0.2], 0.5).unwrap();
        let g = f.translated(&[0.5]);
        assert!((g.eval(&[0.1]) - f.eval(&[0.6])).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_terms() {
        assert!(PlaneTestFunction::bump(1.0, vec![0.0, 0.0], 0.0).is_err());
        assert!(PlaneTestFunction::new(2, vec![GaussianBump { amplitude: 1.0, center: vec![0.0], width: 1.0 }]).is_err());
        let json = r#"{"dim":1,"terms":[{"amplitude":1.0,"center":[0.0],"width":-1.0}]}"#;
        assert!(serde_json::from_str::<PlaneTestFunction>(json).is_err());
    }

    #[test]
    fn slab_norm_matches_brute_force() {
        let slab = SmoothedSlab::new(2, 0.4, 1.0).unwrap();
        // fine grid in time, coarse is enough transversally
        let (nt, nx) = (40000, 400);
        let (ht, hx) = (1.0 / nt as f64, 20.0 / nx as f64);
        let mut acc = 0.0;
        for i in 0..nt {
            let t = -0.3 + (i as f64 + 0.5) * ht;
            for j in 0..nx {
                let x = -10.0 + (j as f64 + 0.5) * hx;
                acc += slab.eval(&[t, x]).powi(2);
            }
        }
        acc *= ht * hx;
        assert!((acc - slab.norm_sq()).abs() < 1e-6, "{acc} vs {}", slab.norm_sq());
    }
}
