use super::{stereo_inverse, stereo_project, PlaneFunction};
use crate::error::{Error, Result};
use crate::harmonics::{check_dim, GridTransform, SphereField, SphereGrid};

/// Default cap on the relative norm defect of a lifted function.
pub const DEFAULT_RESIDUAL_CAP: f64 = 0.05;

/// Transfer from ℝᵈ to Sᵈ at a fixed scale `k` and cutoff.
///
/// The grid is oversampled (exact through degree `2L`) so that lifting a
/// function that is not band-limited aliases as little as possible.
#[derive(Clone, Debug)]
pub struct ConformalPipeline {
    scale: f64,
    dim: usize,
    cutoff: usize,
    grid: SphereGrid,
    residual_cap: f64,
}

/// A lifted field together with its relative norm defect.
#[derive(Clone, Debug)]
pub struct Lift {
    pub field: SphereField,
    pub residual: f64,
}

impl ConformalPipeline {
    pub fn new(scale: f64, dim: usize, cutoff: usize) -> Result<Self> {
        check_dim(dim)?;
        let grid = SphereGrid::for_cutoff(dim, 2 * cutoff)?;
        Self::with_grid(scale, cutoff, grid)
    }

    pub fn with_grid(scale: f64, cutoff: usize, grid: SphereGrid) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
        }
        grid.check_cutoff(cutoff)?;
        Ok(Self {
            scale,
            dim: grid.dim(),
            cutoff,
            grid,
            residual_cap: DEFAULT_RESIDUAL_CAP,
        })
    }

    pub fn with_residual_cap(mut self, cap: f64) -> Self {
        self.residual_cap = cap;
        self
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn residual_cap(&self) -> f64 {
        self.residual_cap
    }

    /// Node values of `Λ_α^{p} · k^{d/2} f(k α(x))`.
    fn sample(&self, f: &dyn PlaneFunction, exponent: f64) -> Result<Vec<f64>> {
        if f.dim() != self.dim {
            return Err(Error::Mismatch(format!("{}-d function on a {}-sphere", f.dim(), self.dim)));
        }
        let amp = self.scale.powf(self.dim as f64 / 2.0);
        let mut y = vec![0.0; self.dim];
        self.grid
            .nodes()
            .map(|x| {
                let (p, factor) = stereo_project(x)?;
                for (yi, pi) in y.iter_mut().zip(&p) {
                    *yi = self.scale * pi;
                }
                Ok(factor.powf(exponent) * amp * f.eval(&y))
            })
            .collect()
    }

    /// Applies the dilation by `k` followed by the stereographic unitary
    /// and projects onto harmonics of degree at most `L`.
    ///
    /// Fails with [`Error::TruncationResidual`] when the projection loses
    /// more than the configured fraction of the L² norm.
    pub fn lift(&self, f: &dyn PlaneFunction) -> Result<Lift> {
        let lift = self.lift_unchecked(f)?;
        if lift.residual > self.residual_cap {
            return Err(Error::TruncationResidual {
                residual: lift.residual,
                cap: self.residual_cap,
            });
        }
        Ok(lift)
    }

    /// As [`lift`](Self::lift) without enforcing the residual cap.
    pub fn lift_unchecked(&self, f: &dyn PlaneFunction) -> Result<Lift> {
        let samples = self.sample(f, self.dim as f64 / 2.0)?;
        let field = GridTransform::new(&self.grid, self.cutoff)?.analyze(&samples)?;
        let target = f.norm_sq();
        let residual = if target == 0.0 {
            field.norm_sq()
        } else {
            (field.norm_sq() - target).abs() / target
        };
        Ok(Lift { field, residual })
    }

    /// Projection of `Λ_α^{exponent} · (f ∘ α)` with no dilation weight
    /// beyond `k^{d/2}`; `exponent = d/2` recovers [`lift`](Self::lift).
    pub fn lift_with_exponent(&self, f: &dyn PlaneFunction, exponent: f64) -> Result<SphereField> {
        let samples = self.sample(f, exponent)?;
        GridTransform::new(&self.grid, self.cutoff)?.analyze(&samples)
    }

    /// Plane-side value of the inverse transfer,
    /// `k^{-d/2} Λ_{α⁻¹}(y/k)^{d/2} u(α⁻¹(y/k))`.
    pub fn pull_back_at(&self, u: &SphereField, y: &[f64]) -> f64 {
        let scaled: Vec<f64> = y.iter().map(|v| v / self.scale).collect();
        let (x, factor) = stereo_inverse(&scaled);
        let d = self.dim as f64;
        self.scale.powf(-d / 2.0) * factor.powf(d / 2.0) * u.eval(&x)
    }
}
