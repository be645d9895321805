//! Rotation-invariant smoothing by heat-kernel multipliers.
//!
//! `A_k` multiplies degree `l` by `a_l = exp(-t_k · l(l + d - 1))` with
//! `t_k = k^{-p}` (default `p = 4`), so the kernel width scales like
//! `k^{-p/2}` and `k · width → 0`. The kernel is nowhere exactly zero;
//! [`MollifierFamily::diagnostics`] measures its effective support.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::covariance::SpectralOperator;
use crate::error::{Error, Result};
use crate::harmonics::{
    basis_len, check_dim, eval_basis, laplace_eigenvalue, multiplicity, sphere_volume, SphereField, SphereGrid,
};

/// Default decay exponent `p` in `t_k = k^{-p}`.
pub const DEFAULT_TIME_EXPONENT: f64 = 4.0;
/// Kernel mass allowed outside the effective width, relative to the total.
pub const WIDTH_MASS_FRACTION: f64 = 1e-6;
/// Radial samples used for the effective width.
const WIDTH_SAMPLES: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierFamily {
    dim: usize,
    cutoff: usize,
    index: usize,
    time: f64,
    multipliers: Vec<f64>,
}

/// Trace, kernel diagonal and effective kernel width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MollifierDiagnostics {
    pub trace: f64,
    pub diagonal: f64,
    /// Largest deviation of `A_k(x, x)` at sampled grid nodes from `diagonal`.
    pub diagonal_spread: f64,
    /// Smallest geodesic radius outside which the kernel carries at most
    /// [`WIDTH_MASS_FRACTION`] of its absolute mass.
    pub width: f64,
}

/// `A_k` with the default schedule `t_k = k⁻⁴`.
pub fn build_mollifier(k: usize, dim: usize, cutoff: usize) -> Result<MollifierFamily> {
    MollifierFamily::with_exponent(k, dim, cutoff, DEFAULT_TIME_EXPONENT)
}

/// Smallest cutoff at which the default `A_k` multipliers fall below
/// `1e-16`, so the truncated kernel is resolved to roundoff.
pub fn resolving_cutoff(k: usize, dim: usize) -> usize {
    let time = (k.max(1) as f64).powf(-DEFAULT_TIME_EXPONENT);
    let threshold = -(1e-16f64.ln());
    (1..).find(|&l| time * laplace_eigenvalue(dim, l) >= threshold).expect("eigenvalues grow without bound")
}

impl MollifierFamily {
    pub fn with_exponent(k: usize, dim: usize, cutoff: usize, exponent: f64) -> Result<Self> {
        check_dim(dim)?;
        if k == 0 {
            return Err(Error::InvalidArgument("mollifier index must be at least 1".into()));
        }
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidArgument(format!("time exponent must be positive, got {exponent}")));
        }
        let time = (k as f64).powf(-exponent);
        let multipliers = (0..=cutoff).map(|l| (-time * laplace_eigenvalue(dim, l)).exp()).collect();
        Ok(Self {
            dim,
            cutoff,
            index: k,
            time,
            multipliers,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn multiplier(&self, l: usize) -> f64 {
        self.multipliers[l]
    }

    pub fn operator(&self) -> SpectralOperator {
        SpectralOperator::new(self.dim, self.multipliers.clone()).expect("multipliers are finite")
    }

    pub fn mollify(&self, phi: &SphereField) -> Result<SphereField> {
        if phi.dim() != self.dim || phi.cutoff() != self.cutoff {
            return Err(Error::Mismatch(format!(
                "field (d={}, L={}) vs mollifier (d={}, L={})",
                phi.dim(),
                phi.cutoff(),
                self.dim,
                self.cutoff
            )));
        }
        Ok(phi.map_degrees(|l| self.multipliers[l]))
    }

    /// `Σ_l a_l · mult(l)`.
    pub fn trace(&self) -> f64 {
        self.multipliers
            .iter()
            .enumerate()
            .map(|(l, a)| a * multiplicity(self.dim, l) as f64)
            .sum()
    }

    /// Constant diagonal `A_k(x, x) = trace / Vol(Sᵈ)` from the addition
    /// theorem.
    pub fn diagonal(&self) -> f64 {
        let sum: f64 = self
            .multipliers
            .iter()
            .enumerate()
            .map(|(l, a)| a * multiplicity(self.dim, l) as f64)
            .sum();
        sum / sphere_volume(self.dim)
    }

    /// Zonal kernel `A_k(x, y)` as a function of the geodesic distance.
    pub fn kernel_at(&self, r: f64) -> f64 {
        let z = r.cos();
        match self.dim {
            1 => {
                let mut s = self.multipliers[0];
                for (l, a) in self.multipliers.iter().enumerate().skip(1) {
                    s += 2.0 * a * (l as f64 * r).cos();
                }
                s / (2.0 * PI)
            }
            _ => {
                let (mut prev, mut cur) = (1.0, z);
                let mut s = self.multipliers[0];
                for (l, a) in self.multipliers.iter().enumerate().skip(1) {
                    s += a * (2 * l + 1) as f64 * cur;
                    let next = ((2 * l + 1) as f64 * z * cur - l as f64 * prev) / (l + 1) as f64;
                    prev = cur;
                    cur = next;
                }
                s / (4.0 * PI)
            }
        }
    }

    /// Radius outside which `|A_k(x, ·)|` carries a negligible fraction of
    /// its mass.
    pub fn effective_width(&self) -> f64 {
        let dr = PI / WIDTH_SAMPLES as f64;
        let shell = |r: f64| match self.dim {
            1 => 2.0,
            _ => 2.0 * PI * r.sin(),
        };
        let density: Vec<f64> = (0..=WIDTH_SAMPLES)
            .map(|i| {
                let r = i as f64 * dr;
                self.kernel_at(r).abs() * shell(r)
            })
            .collect();
        // outside[i] is the trapezoid mass on [r_i, π]
        let mut outside = vec![0.0; WIDTH_SAMPLES + 1];
        for i in (0..WIDTH_SAMPLES).rev() {
            outside[i] = outside[i + 1] + 0.5 * dr * (density[i] + density[i + 1]);
        }
        let total = outside[0];
        let i = outside
            .iter()
            .position(|m| *m <= WIDTH_MASS_FRACTION * total)
            .unwrap_or(WIDTH_SAMPLES);
        i as f64 * dr
    }

    /// Trace, diagonal (checked at up to three grid nodes) and width.
    pub fn diagnostics(&self, grid: &SphereGrid) -> Result<MollifierDiagnostics> {
        if grid.dim() != self.dim {
            return Err(Error::Mismatch("grid and mollifier dimensions differ".into()));
        }
        let diagonal = self.diagonal();
        let n = basis_len(self.dim, self.cutoff);
        let mut values = vec![0.0; n];
        let mut diagonal_spread: f64 = 0.0;
        let len = grid.len();
        for node in [0, len / 3, len - 1] {
            eval_basis(self.dim, self.cutoff, grid.node(node), &mut values);
            let at: f64 = values
                .iter()
                .enumerate()
                .map(|(i, y)| self.multipliers[crate::harmonics::degree_of(self.dim, i)] * y * y)
                .sum();
            diagonal_spread = diagonal_spread.max((at - diagonal).abs());
        }
        Ok(MollifierDiagnostics {
            trace: self.trace(),
            diagonal,
            diagonal_spread,
            width: self.effective_width(),
        })
    }
}
