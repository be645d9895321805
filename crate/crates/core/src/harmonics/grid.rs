use std::f64::consts::PI;

use super::{check_dim, gauss_legendre};
use crate::error::{Error, Result};

/// Product quadrature grid on S¹ or S² that never contains the north pole.
///
/// * S¹: `n` equispaced angles `θ_j = 2π(j + ½)/n` measured from the pole,
///   weight `2π/n` each; exact for trigonometric polynomials of degree `< n`.
/// * S²: `n` Gauss–Legendre rings in `cos θ` times `2n` equispaced
///   longitudes; exact for polynomials of degree `≤ 2n - 1` in `cos θ` and
///   longitudinal frequency `< 2n`.
///
/// Nodes are stored ring-major (`ring * n_lon + j`) so ring-wise
/// transforms can walk them contiguously.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    dim: usize,
    resolution: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `cos θ` of each ring (S²) or of each node (S¹).
    ring_z: Vec<f64>,
    /// Gauss–Legendre weight of each ring (S² only).
    ring_weights: Vec<f64>,
    longitudes: Vec<f64>,
}

impl SphereGrid {
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        check_dim(dim)?;
        if resolution < 4 {
            return Err(Error::InvalidArgument(format!(
                "grid resolution must be at least 4, got {resolution}"
            )));
        }
        Ok(match dim {
            1 => Self::circle(resolution),
            _ => Self::sphere(resolution),
        })
    }

    fn circle(n: usize) -> Self {
        let mut nodes = Vec::with_capacity(2 * n);
        let mut ring_z = Vec::with_capacity(n);
        let mut longitudes = Vec::with_capacity(n);
        for j in 0..n {
            let theta = 2.0 * PI * (j as f64 + 0.5) / n as f64;
            let (s, c) = theta.sin_cos();
            nodes.push(s);
            nodes.push(c);
            ring_z.push(c);
            longitudes.push(theta);
        }
        Self {
            dim: 1,
            resolution: n,
            nodes,
            weights: vec![2.0 * PI / n as f64; n],
            ring_z,
            ring_weights: Vec::new(),
            longitudes,
        }
    }

    fn sphere(n: usize) -> Self {
        let (z, w) = gauss_legendre(n);
        let n_lon = 2 * n;
        let longitudes: Vec<f64> = (0..n_lon).map(|j| 2.0 * PI * j as f64 / n_lon as f64).collect();
        let dphi = 2.0 * PI / n_lon as f64;
        let mut nodes = Vec::with_capacity(3 * n * n_lon);
        let mut weights = Vec::with_capacity(n * n_lon);
        for (zi, wi) in z.iter().zip(&w) {
            let s = (1.0 - zi * zi).max(0.0).sqrt();
            for phi in &longitudes {
                let (sp, cp) = phi.sin_cos();
                nodes.extend_from_slice(&[s * cp, s * sp, *zi]);
                weights.push(wi * dphi);
            }
        }
        Self {
            dim: 2,
            resolution: n,
            nodes,
            weights,
            ring_z: z,
            ring_weights: w,
            longitudes,
        }
    }

    /// Smallest grid of this dimension able to transform fields with the
    /// given cutoff.
    pub fn for_cutoff(dim: usize, cutoff: usize) -> Result<Self> {
        check_dim(dim)?;
        let n = match dim {
            1 => 2 * cutoff + 1,
            _ => cutoff + 1,
        };
        Self::new(dim, n.max(4))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let s = self.dim + 1;
        &self.nodes[i * s..(i + 1) * s]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks_exact(self.dim + 1)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pole_excluded(&self) -> bool {
        true
    }

    /// Largest harmonic degree whose pairwise products the grid integrates
    /// exactly.
    pub fn max_cutoff(&self) -> usize {
        match self.dim {
            1 => (self.resolution - 1) / 2,
            _ => self.resolution - 1,
        }
    }

    pub fn check_cutoff(&self, cutoff: usize) -> Result<()> {
        if cutoff > self.max_cutoff() {
            Err(Error::ResolutionTooSmall {
                resolution: self.resolution,
                cutoff,
                max_cutoff: self.max_cutoff(),
            })
        } else {
            Ok(())
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        crate::stats::pairwise_dot(&self.weights, values)
    }

    pub(crate) fn ring_z(&self) -> &[f64] {
        &self.ring_z
    }

    pub(crate) fn ring_weights(&self) -> &[f64] {
        &self.ring_weights
    }

    pub(crate) fn longitudes(&self) -> &[f64] {
        &self.longitudes
    }

    /// Evaluates `f` at every node.
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes().map(f).collect()
    }
}
