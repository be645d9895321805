//! Covariance-type operators in the truncated harmonic basis.
//!
//! Two representations cover everything the crate needs:
//!
//! * [`SpectralOperator`]: one multiplier per degree, for operators that
//!   commute with every rotation (free covariance, mollifiers).
//! * [`DenseOperator`]: symmetric blocks over a partition of the basis.
//!   Operators that commute only with rotations about the polar axis split
//!   into one block per axial class, which keeps even `L = 64` cheap. A
//!   single block spanning the whole basis is a general dense matrix.

mod conjugation;
mod drift;
mod reflection;
mod scaled;

pub use conjugation::{conjugation_check, conjugation_pairing, ConjugationCheck, ConjugationGrid};
pub use drift::conjugation_drift;
pub(crate) use reflection::gram_verdict;
pub use reflection::{
    reflection_matrix, rp_gram_check, rp_operator_check, Reflectable, ReflectionTheta, RpGram, RpOperatorCheck,
    SphereProbe, COMMUTATOR_TOL, RP_TOL, SUPPORT_RADII,
};
pub use scaled::{
    axial_blocks, route_tolerance, scaled_covariance, AssemblyRoute, ScaledCovariance, ROUTE_AGREEMENT_TOL,
};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::harmonics::{basis_len, check_dim, degree_of, SphereField};

/// Relative tolerance on negative eigenvalues for PSD operators.
pub const PSD_TOL: f64 = 1e-8;
/// Relative tolerance on `‖A - Aᵀ‖`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Degree-diagonal operator.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralOperator {
    dim: usize,
    multipliers: Vec<f64>,
}

impl SpectralOperator {
    pub fn new(dim: usize, multipliers: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if multipliers.is_empty() {
            return Err(Error::InvalidArgument("spectral operator needs at least one degree".into()));
        }
        if let Some(l) = multipliers.iter().position(|m| !m.is_finite()) {
            return Err(Error::NonFinite(format!("multiplier at degree {l}")));
        }
        Ok(Self { dim, multipliers })
    }

    pub fn identity(dim: usize, cutoff: usize) -> Result<Self> {
        Self::new(dim, vec![1.0; cutoff + 1])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.multipliers.len() - 1
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn multiplier(&self, degree: usize) -> f64 {
        self.multipliers[degree]
    }

    pub fn apply_coeffs(&self, coeffs: &[f64]) -> Vec<f64> {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.multipliers[degree_of(self.dim, i)])
            .collect()
    }

    pub fn sqrt(&self) -> Result<Self> {
        let scale = self.norm();
        let multipliers = self
            .multipliers
            .iter()
            .map(|m| {
                if *m < -PSD_TOL * scale {
                    Err(Error::NotPositive { min_eigenvalue: *m })
                } else {
                    Ok(m.max(0.0).sqrt())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.dim, multipliers)
    }

    pub fn norm(&self) -> f64 {
        self.multipliers.iter().map(|m| m.abs()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.multipliers.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `(m² + Δ)⁻¹` with multiplier `1/(m² + l(l + d - 1))`.
pub fn free_covariance(mass: f64, dim: usize, cutoff: usize) -> Result<SpectralOperator> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidArgument(format!("mass must be positive, got {mass}")));
    }
    check_dim(dim)?;
    let m2 = mass * mass;
    SpectralOperator::new(
        dim,
        (0..=cutoff)
            .map(|l| 1.0 / (m2 + crate::harmonics::laplace_eigenvalue(dim, l)))
            .collect(),
    )
}

/// A symmetric block acting on the listed basis indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub indices: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

/// Symmetric operator stored as blocks over a partition of the basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    dim: usize,
    cutoff: usize,
    blocks: Vec<Block>,
}

impl DenseOperator {
    pub fn from_blocks(dim: usize, cutoff: usize, blocks: Vec<Block>) -> Result<Self> {
        check_dim(dim)?;
        let n = basis_len(dim, cutoff);
        let mut seen = vec![false; n];
        for b in &blocks {
            if b.matrix.nrows() != b.indices.len() || b.matrix.ncols() != b.indices.len() {
                return Err(Error::Mismatch("block matrix does not match its index list".into()));
            }
            for &i in &b.indices {
                if i >= n || seen[i] {
                    return Err(Error::InvalidArgument(format!("basis index {i} repeated or out of range")));
                }
                seen[i] = true;
            }
            if b.matrix.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("operator block".into()));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument("blocks do not cover the basis".into()));
        }
        Ok(Self { dim, cutoff, blocks })
    }

    pub fn from_dense(dim: usize, cutoff: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let n = basis_len(dim, cutoff);
        Self::from_blocks(dim, cutoff, vec![Block { indices: (0..n).collect(), matrix }])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = basis_len(self.dim, self.cutoff);
        let mut m = DMatrix::zeros(n, n);
        for b in &self.blocks {
            for (r, &i) in b.indices.iter().enumerate() {
                for (c, &j) in b.indices.iter().enumerate() {
                    m[(i, j)] = b.matrix[(r, c)];
                }
            }
        }
        m
    }

    pub fn apply_coeffs(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; coeffs.len()];
        for b in &self.blocks {
            let x = DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&i| coeffs[i]));
            let y = &b.matrix * x;
            for (v, &i) in y.iter().zip(&b.indices) {
                out[i] = *v;
            }
        }
        out
    }

    /// Largest `‖B - Bᵀ‖_max` over blocks relative to the operator norm.
    pub fn symmetry_defect(&self) -> f64 {
        let asym = self
            .blocks
            .iter()
            .map(|b| (&b.matrix - b.matrix.transpose()).amax())
            .fold(0.0, f64::max);
        let scale = self.blocks.iter().map(|b| b.matrix.amax()).fold(0.0, f64::max);
        if scale == 0.0 {
            0.0
        } else {
            asym / scale
        }
    }

    fn eigen_blocks(&self) -> Vec<SymmetricEigen<f64, nalgebra::Dyn>> {
        self.blocks
            .iter()
            .map(|b| SymmetricEigen::new((&b.matrix + b.matrix.transpose()) * 0.5))
            .collect()
    }

    pub fn eigenvalue_range(&self) -> (f64, f64) {
        self.eigen_blocks().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (
                e.eigenvalues.iter().cloned().fold(lo, f64::min),
                e.eigenvalues.iter().cloned().fold(hi, f64::max),
            )
        })
    }

    pub fn norm(&self) -> f64 {
        let (lo, hi) = self.eigenvalue_range();
        lo.abs().max(hi.abs())
    }

    /// Symmetric PSD square root block by block.
    pub fn sqrt(&self) -> Result<Self> {
        let eig = self.eigen_blocks();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), e| {
            (
                e.eigenvalues.iter().cloned().fold(lo, f64::min),
                e.eigenvalues.iter().map(|v| v.abs()).fold(hi, f64::max),
            )
        });
        if lo < -PSD_TOL * hi {
            return Err(Error::NotPositive { min_eigenvalue: lo });
        }
        let blocks = self
            .blocks
            .iter()
            .zip(eig)
            .map(|(b, e)| {
                let roots = e.eigenvalues.map(|v| v.max(0.0).sqrt());
                let matrix = &e.eigenvectors * DMatrix::from_diagonal(&roots) * e.eigenvectors.transpose();
                Block {
                    indices: b.indices.clone(),
                    matrix,
                }
            })
            .collect();
        Ok(Self {
            dim: self.dim,
            cutoff: self.cutoff,
            blocks,
        })
    }
}

/// Either operator representation.
#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Spectral(SpectralOperator),
    Dense(DenseOperator),
}

impl From<SpectralOperator> for Operator {
    fn from(op: SpectralOperator) -> Self {
        Operator::Spectral(op)
    }
}

impl From<DenseOperator> for Operator {
    fn from(op: DenseOperator) -> Self {
        Operator::Dense(op)
    }
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Operator::Spectral(s) => s.dim(),
            Operator::Dense(d) => d.dim(),
        }
    }

    pub fn cutoff(&self) -> usize {
        match self {
            Operator::Spectral(s) => s.cutoff(),
            Operator::Dense(d) => d.cutoff(),
        }
    }

    pub fn apply_coeffs(&self, coeffs: &[f64]) -> Vec<f64> {
        match self {
            Operator::Spectral(s) => s.apply_coeffs(coeffs),
            Operator::Dense(d) => d.apply_coeffs(coeffs),
        }
    }

    fn check(&self, f: &SphereField) -> Result<()> {
        if f.dim() != self.dim() || f.cutoff() != self.cutoff() {
            return Err(Error::Mismatch(format!(
                "field (d={}, L={}) vs operator (d={}, L={})",
                f.dim(),
                f.cutoff(),
                self.dim(),
                self.cutoff()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, f: &SphereField) -> Result<SphereField> {
        self.check(f)?;
        SphereField::from_coeffs(f.dim(), f.cutoff(), self.apply_coeffs(f.coeffs()))
    }

    /// `⟨A f, g⟩`.
    pub fn bilinear(&self, f: &SphereField, g: &SphereField) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        Ok(crate::stats::pairwise_dot(&self.apply_coeffs(f.coeffs()), g.coeffs()))
    }

    pub fn quadratic_form(&self, f: &SphereField) -> Result<f64> {
        self.bilinear(f, f)
    }

    /// Operator norm on L².
    pub fn norm(&self) -> f64 {
        match self {
            Operator::Spectral(s) => s.norm(),
            Operator::Dense(d) => d.norm(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            Operator::Spectral(s) => s.min_eigenvalue(),
            Operator::Dense(d) => d.eigenvalue_range().0,
        }
    }

    /// Extreme eigenvalues of the compression onto the span of `probes`.
    pub fn restricted_eigenvalue_range(&self, probes: &[SphereField]) -> Result<(f64, f64)> {
        if probes.is_empty() {
            return Err(Error::InvalidArgument("empty probe set".into()));
        }
        for p in probes {
            self.check(p)?;
        }
        let n = probes[0].coeffs().len();
        let v = DMatrix::from_fn(n, probes.len(), |i, j| probes[j].coeffs()[i]);
        let q = v.qr().q();
        let aq = DMatrix::from_fn(n, q.ncols(), |i, j| self.apply_coeffs(q.column(j).as_slice())[i]);
        let h = q.transpose() * aq;
        let e = SymmetricEigen::new((&h + h.transpose()) * 0.5);
        Ok((e.eigenvalues.min(), e.eigenvalues.max()))
    }
}

/// PSD square root of either operator kind.
pub fn operator_sqrt(op: &Operator) -> Result<Operator> {
    Ok(match op {
        Operator::Spectral(s) => Operator::Spectral(s.sqrt()?),
        Operator::Dense(d) => Operator::Dense(d.sqrt()?),
    })
}
