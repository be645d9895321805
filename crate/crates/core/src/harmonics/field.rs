use serde::{Deserialize, Serialize};

use super::{
    basis_len, check_dim, degree_of, eval_basis, geodesic_distance, GridTransform, HarmonicIndex,
    SphereGrid,
};
use crate::error::{Error, Result};

/// Band-limited real field on Sᵈ stored as orthonormal-harmonic
/// coefficients, so `‖φ‖²_{L²} = Σ c²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereField {
    dim: usize,
    cutoff: usize,
    coeffs: Vec<f64>,
}

impl SphereField {
    pub fn zeros(dim: usize, cutoff: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            cutoff,
            coeffs: vec![0.0; basis_len(dim, cutoff)],
        })
    }

    pub fn from_coeffs(dim: usize, cutoff: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        let expected = basis_len(dim, cutoff);
        if coeffs.len() != expected {
            return Err(Error::Mismatch(format!(
                "{} coefficients for d={dim}, L={cutoff} (expected {expected})",
                coeffs.len()
            )));
        }
        Ok(Self { dim, cutoff, coeffs })
    }

    /// The single harmonic `Y_idx` with unit coefficient.
    pub fn unit(dim: usize, cutoff: usize, idx: HarmonicIndex) -> Result<Self> {
        if !idx.is_valid(dim) || idx.degree > cutoff {
            return Err(Error::InvalidArgument(format!("{idx:?} not in d={dim}, L={cutoff}")));
        }
        let mut f = Self::zeros(dim, cutoff)?;
        f.coeffs[idx.flat(dim)] = 1.0;
        Ok(f)
    }

    /// Quadrature projection of a pointwise function onto degree ≤ `cutoff`.
    pub fn project<F: Fn(&[f64]) -> f64>(grid: &SphereGrid, cutoff: usize, f: F) -> Result<Self> {
        GridTransform::new(grid, cutoff)?.analyze(&grid.sample(f))
    }

    /// Band-limited Gaussian bump `exp(-γ²/(2σ²))` in geodesic distance γ
    /// from `center`.
    pub fn bump(grid: &SphereGrid, cutoff: usize, center: &[f64], width: f64) -> Result<Self> {
        if center.len() != grid.dim() + 1 {
            return Err(Error::Mismatch("bump centre has the wrong dimension".into()));
        }
        if width <= 0.0 {
            return Err(Error::InvalidArgument("bump width must be positive".into()));
        }
        Self::project(grid, cutoff, |x| {
            let g = geodesic_distance(x, center);
            (-g * g / (2.0 * width * width)).exp()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, idx: HarmonicIndex) -> f64 {
        self.coeffs[idx.flat(self.dim)]
    }

    pub fn check_compatible(&self, other: &SphereField) -> Result<()> {
        if self.dim != other.dim || self.cutoff != other.cutoff {
            return Err(Error::Mismatch(format!(
                "fields (d={}, L={}) and (d={}, L={})",
                self.dim, self.cutoff, other.dim, other.cutoff
            )));
        }
        Ok(())
    }

    /// L² pairing, which in the orthonormal basis is the coefficient dot
    /// product.
    pub fn inner_product(&self, other: &SphereField) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(crate::stats::pairwise_dot(&self.coeffs, &other.coeffs))
    }

    pub fn norm_sq(&self) -> f64 {
        crate::stats::pairwise_dot(&self.coeffs, &self.coeffs)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            dim: self.dim,
            cutoff: self.cutoff,
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SphereField, b: f64) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            dim: self.dim,
            cutoff: self.cutoff,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn sub(&self, other: &SphereField) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    pub fn add(&self, other: &SphereField) -> Result<Self> {
        self.combine(1.0, other, 1.0)
    }

    /// Multiplies the coefficients of each degree `l` by `multiplier(l)`.
    pub fn map_degrees<F: Fn(usize) -> f64>(&self, multiplier: F) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * multiplier(degree_of(self.dim, i)))
            .collect();
        Self {
            dim: self.dim,
            cutoff: self.cutoff,
            coeffs,
        }
    }

    /// Copy with a different cutoff, zero-padding or dropping high degrees.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        let mut coeffs = vec![0.0; basis_len(self.dim, cutoff)];
        let n = coeffs.len().min(self.coeffs.len());
        coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        Self {
            dim: self.dim,
            cutoff,
            coeffs,
        }
    }

    /// Pointwise value at an arbitrary point of Sᵈ.
    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut basis = vec![0.0; self.coeffs.len()];
        eval_basis(self.dim, self.cutoff, point, &mut basis);
        crate::stats::pairwise_dot(&basis, &self.coeffs)
    }

    /// L² mass of each degree.
    pub fn degree_power(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.cutoff + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            p[degree_of(self.dim, i)] += c * c;
        }
        p
    }
}
