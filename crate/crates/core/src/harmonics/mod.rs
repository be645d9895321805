//! Real orthonormal harmonics on S¹ and S², product quadrature grids and
//! the coefficient-space L² calculus built on them.
//!
//! Coordinates follow one convention throughout the crate: a point on Sᵈ
//! lives in ℝᵈ⁺¹ and its last coordinate `x_d = cos θ` where θ is the angle
//! from the north pole `(0, …, 0, 1)`. On S¹ the remaining coordinate is
//! `x_0 = sin θ`; on S² it is `(sin θ cos φ, sin θ sin φ)`.
//!
//! Basis functions are real and satisfy `∫ Y² = 1`:
//!
//! * S¹: `1/√(2π)`, `cos(lθ)/√π`, `sin(lθ)/√π`
//! * S²: `Y_{l,0} = N_l P_l(cos θ)`, `Y_{l,m} = √2 N_{lm} P_l^m cos(mφ)`,
//!   `Y_{l,-m} = √2 N_{lm} P_l^m sin(mφ)` (no Condon–Shortley phase).

mod field;
mod grid;
mod legendre;
mod transform;

pub use field::SphereField;
pub use grid::SphereGrid;
pub use legendre::{gauss_legendre, LegendreTable};
pub use transform::GridTransform;

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Degree and order of a real harmonic.
///
/// On S² the order ranges over `-l..=l`, negative orders carrying the sine
/// dependence. On S¹ the order is `0` for the constant mode and `+1`
/// (cosine) or `-1` (sine) for every positive degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    pub degree: usize,
    pub order: i32,
}

impl HarmonicIndex {
    pub fn new(degree: usize, order: i32) -> Self {
        Self { degree, order }
    }

    /// Position of this harmonic in a flat coefficient vector.
    pub fn flat(self, dim: usize) -> usize {
        let l = self.degree;
        match dim {
            1 => match self.order {
                0 => 0,
                o if o > 0 => 2 * l - 1,
                _ => 2 * l,
            },
            _ => ((l * l + l) as isize + self.order as isize) as usize,
        }
    }

    pub fn from_flat(dim: usize, i: usize) -> Self {
        match dim {
            1 => {
                if i == 0 {
                    Self::new(0, 0)
                } else {
                    let l = i.div_ceil(2);
                    Self::new(l, if i % 2 == 1 { 1 } else { -1 })
                }
            }
            _ => {
                let l = (i as f64).sqrt().floor() as usize;
                // guard against floating point at perfect squares
                let l = if (l + 1) * (l + 1) <= i { l + 1 } else { l };
                Self::new(l, i as i32 - (l * l + l) as i32)
            }
        }
    }

    pub fn is_valid(self, dim: usize) -> bool {
        match dim {
            1 => {
                if self.degree == 0 {
                    self.order == 0
                } else {
                    self.order == 1 || self.order == -1
                }
            }
            2 => self.order.unsigned_abs() as usize <= self.degree,
            _ => false,
        }
    }
}

pub fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// Number of basis functions with degree at most `cutoff`.
pub fn basis_len(dim: usize, cutoff: usize) -> usize {
    match dim {
        1 => 2 * cutoff + 1,
        _ => (cutoff + 1) * (cutoff + 1),
    }
}

/// Number of basis functions of exact degree `l`.
pub fn multiplicity(dim: usize, l: usize) -> usize {
    match (dim, l) {
        (1, 0) => 1,
        (1, _) => 2,
        _ => 2 * l + 1,
    }
}

pub fn degree_of(dim: usize, i: usize) -> usize {
    HarmonicIndex::from_flat(dim, i).degree
}

/// Eigenvalue `l(l + d - 1)` of the nonnegative Laplace–Beltrami operator.
pub fn laplace_eigenvalue(dim: usize, l: usize) -> f64 {
    (l * (l + dim - 1)) as f64
}

/// Eigenvalue of the conformal Laplacian `Δ + d(d-2)/4`.
pub fn conformal_laplace_eigenvalue(dim: usize, l: usize) -> f64 {
    let d = dim as f64;
    laplace_eigenvalue(dim, l) + d * (d - 2.0) / 4.0
}

pub fn sphere_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// Rotation-invariance class of a harmonic under rotations about the
/// polar axis: multiplication by any function of `x_d` only mixes
/// harmonics that share a class.
///
/// On S² the class is the signed order; on S¹ there are two classes,
/// cosine-like (including the constant) and sine-like.
pub fn axial_class(dim: usize, idx: HarmonicIndex) -> i32 {
    match dim {
        1 => {
            if idx.order < 0 {
                -1
            } else {
                1
            }
        }
        _ => idx.order,
    }
}

/// Sign picked up by a harmonic under the reflection `x_0 ↦ -x_0`.
pub fn reflection_sign(dim: usize, idx: HarmonicIndex) -> f64 {
    match dim {
        // θ ↦ -θ: cosines even, sines odd
        1 => {
            if idx.order < 0 {
                -1.0
            } else {
                1.0
            }
        }
        // φ ↦ π - φ
        _ => {
            let m = idx.order.unsigned_abs();
            let parity = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
            if idx.order < 0 {
                -parity
            } else {
                parity
            }
        }
    }
}

/// Evaluates every basis function of degree at most `cutoff` at `point`.
///
/// `point` must have `dim + 1` coordinates; it is not required to be
/// exactly normalised.
pub fn eval_basis(dim: usize, cutoff: usize, point: &[f64], out: &mut [f64]) {
    debug_assert_eq!(point.len(), dim + 1);
    debug_assert_eq!(out.len(), basis_len(dim, cutoff));
    match dim {
        1 => {
            let theta = point[0].atan2(point[1]);
            out[0] = 1.0 / (2.0 * PI).sqrt();
            let s = 1.0 / PI.sqrt();
            for l in 1..=cutoff {
                let (sn, cs) = (l as f64 * theta).sin_cos();
                out[2 * l - 1] = s * cs;
                out[2 * l] = s * sn;
            }
        }
        _ => {
            let norm = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
            let z = (point[2] / norm).clamp(-1.0, 1.0);
            let phi = point[1].atan2(point[0]);
            let table = LegendreTable::new(cutoff, z);
            for l in 0..=cutoff {
                let base = l * l + l;
                out[base] = table.get(l, 0);
                for m in 1..=l {
                    let p = std::f64::consts::SQRT_2 * table.get(l, m);
                    let (sn, cs) = (m as f64 * phi).sin_cos();
                    out[base + m] = p * cs;
                    out[base - m] = p * sn;
                }
            }
        }
    }
}

/// Geodesic distance between two points of Sᵈ.
pub fn geodesic_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}
