use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::harmonics::{basis_len, check_dim, eval_basis, GridTransform, SphereField, SphereGrid};

const ORTHOGONALITY_TOL: f64 = 1e-12;

/// Orthogonal map of ℝᵈ⁺¹ acting on Sᵈ.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    dim: usize,
    matrix: DMatrix<f64>,
}

impl Isometry {
    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            matrix: DMatrix::identity(dim + 1, dim + 1),
        })
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() || n < 2 {
            return Err(Error::Mismatch(format!("{}x{} isometry matrix", n, matrix.ncols())));
        }
        check_dim(n - 1)?;
        let defect = (matrix.transpose() * &matrix - DMatrix::identity(n, n)).amax();
        if defect > ORTHOGONALITY_TOL * 10.0 {
            return Err(Error::InvalidArgument(format!("matrix is not orthogonal (defect {defect:.2e})")));
        }
        Ok(Self { dim: n - 1, matrix })
    }

    /// The time reflection `x₀ ↦ -x₀`.
    pub fn time_reflection(dim: usize) -> Result<Self> {
        let mut iso = Self::identity(dim)?;
        iso.matrix[(0, 0)] = -1.0;
        Ok(iso)
    }

    /// Embeds an orthogonal `d × d` matrix (row-major) acting on the first
    /// `d` coordinates, fixing the polar axis.
    pub fn from_plane_orthogonal(dim: usize, plane: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        if plane.len() != dim * dim {
            return Err(Error::Mismatch("plane matrix has the wrong size".into()));
        }
        let mut m = DMatrix::identity(dim + 1, dim + 1);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = plane[i * dim + j];
            }
        }
        Self::from_matrix(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn inverse(&self) -> Self {
        Self {
            dim: self.dim,
            matrix: self.matrix.transpose(),
        }
    }

    pub fn compose(&self, other: &Isometry) -> Self {
        Self {
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim + 1;
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        let n = self.dim + 1;
        self.matrix == DMatrix::identity(n, n)
    }
}

/// Orientation-preserving isometry.
#[derive(Clone, Debug, PartialEq)]
pub struct Rotation(Isometry);

impl Rotation {
    pub fn new(iso: Isometry) -> Result<Self> {
        let det = iso.determinant();
        if (det - 1.0).abs() > ORTHOGONALITY_TOL * 10.0 {
            return Err(Error::InvalidArgument(format!("determinant {det} is not +1")));
        }
        Ok(Self(iso))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Ok(Self(Isometry::identity(dim)?))
    }

    /// Rotation by `angle` about the unit `axis` (S²) or by `angle` in the
    /// only plane (S¹, `axis` ignored).
    pub fn from_axis_angle(dim: usize, axis: &[f64], angle: f64) -> Result<Self> {
        check_dim(dim)?;
        let (s, c) = angle.sin_cos();
        let m = match dim {
            1 => DMatrix::from_row_slice(2, 2, &[c, -s, s, c]),
            _ => {
                let n = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
                if axis.len() != 3 || n == 0.0 {
                    return Err(Error::InvalidArgument("rotation axis must be a nonzero 3-vector".into()));
                }
                let (x, y, z) = (axis[0] / n, axis[1] / n, axis[2] / n);
                let k = DMatrix::from_row_slice(3, 3, &[0.0, -z, y, z, 0.0, -x, -y, x, 0.0]);
                DMatrix::identity(3, 3) + &k * s + &k * &k * (1.0 - c)
            }
        };
        Self::new(Isometry::from_matrix(m)?)
    }

    pub fn isometry(&self) -> &Isometry {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }
}

impl std::ops::Deref for Rotation {
    type Target = Isometry;

    fn deref(&self) -> &Isometry {
        &self.0
    }
}

/// `exp(2k⁻¹ Σ_j t_j L_j)` with `L_j` the generator of rotations in the
/// `(e_j, e_d)` plane (see [`generator`]).
///
/// The exponent is `θ·L_u` with `θ = 2‖T‖/k` and `L_u` the generator
/// along the unit vector `u = T/‖T‖`; since `L_u³ = -L_u` the exponential
/// is `I + sin θ L_u + (1 - cos θ) L_u²` exactly.
pub fn rotation_g_k(translation: &[f64], k: f64) -> Result<Rotation> {
    let dim = translation.len();
    check_dim(dim)?;
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("scale k must be positive, got {k}")));
    }
    let norm = translation.iter().map(|t| t * t).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Rotation::identity(dim);
    }
    let unit: Vec<f64> = translation.iter().map(|t| t / norm).collect();
    let l = generator(dim, &unit);
    let theta = 2.0 * norm / k;
    let m = DMatrix::identity(dim + 1, dim + 1) + &l * theta.sin() + &l * &l * (1.0 - theta.cos());
    Rotation::new(Isometry::from_matrix(m)?)
}

/// `Σ_j u_j L_j` with `(L_j)_{j,d} = -1` and `(L_j)_{d,j} = +1`.
pub fn generator(dim: usize, weights: &[f64]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(dim + 1, dim + 1);
    for (j, w) in weights.iter().enumerate() {
        l[(j, dim)] -= w;
        l[(dim, j)] += w;
    }
    l
}

/// `x ↦ φ(R⁻¹x)`, by resampling `φ` at the pulled-back grid nodes and
/// projecting back onto harmonics of the same cutoff.
pub fn apply_isometry(field: &SphereField, iso: &Isometry, grid: &SphereGrid) -> Result<SphereField> {
    if field.dim() != iso.dim() || grid.dim() != iso.dim() {
        return Err(Error::Mismatch("isometry, field and grid dimensions differ".into()));
    }
    let transform = GridTransform::new(grid, field.cutoff())?;
    if iso.is_identity() {
        return Ok(field.clone());
    }
    let inv = iso.inverse();
    let samples: Vec<f64> = grid.nodes().map(|x| field.eval(&inv.apply(x))).collect();
    transform.analyze(&samples)
}

/// Basis-coefficient action of an isometry, one dense block per degree.
#[derive(Clone, Debug)]
pub struct IsometryAction {
    dim: usize,
    cutoff: usize,
    /// Block `l` maps degree-`l` coefficients; indices are offsets within
    /// the degree.
    blocks: Vec<DMatrix<f64>>,
    offsets: Vec<usize>,
}

impl IsometryAction {
    /// Assembles `⟨Y_i, Y_j ∘ R⁻¹⟩` by grid quadrature.
    pub fn new(iso: &Isometry, cutoff: usize, grid: &SphereGrid) -> Result<Self> {
        let dim = iso.dim();
        if grid.dim() != dim {
            return Err(Error::Mismatch("grid and isometry dimensions differ".into()));
        }
        grid.check_cutoff(cutoff)?;
        let offsets: Vec<usize> = (0..=cutoff + 1)
            .map(|l| if l == 0 { 0 } else { basis_len(dim, l - 1) })
            .collect();
        let mut blocks: Vec<DMatrix<f64>> = (0..=cutoff)
            .map(|l| {
                let n = offsets[l + 1] - offsets[l];
                DMatrix::zeros(n, n)
            })
            .collect();
        let n = basis_len(dim, cutoff);
        let inv = iso.inverse();
        let mut at_node = vec![0.0; n];
        let mut at_preimage = vec![0.0; n];
        for (x, w) in grid.nodes().zip(grid.weights()) {
            eval_basis(dim, cutoff, x, &mut at_node);
            eval_basis(dim, cutoff, &inv.apply(x), &mut at_preimage);
            for (l, block) in blocks.iter_mut().enumerate() {
                let (a, b) = (offsets[l], offsets[l + 1]);
                let size = b - a;
                for i in 0..size {
                    let wi = w * at_node[a + i];
                    for j in 0..size {
                        block[(i, j)] += wi * at_preimage[a + j];
                    }
                }
            }
        }
        Ok(Self {
            dim,
            cutoff,
            blocks,
            offsets,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn apply_with<F: Fn(&DMatrix<f64>) -> DMatrix<f64>>(&self, coeffs: &[f64], pick: F) -> Vec<f64> {
        let mut out = vec![0.0; coeffs.len()];
        for (l, block) in self.blocks.iter().enumerate() {
            let (a, b) = (self.offsets[l], self.offsets[l + 1]);
            let m = pick(block);
            let v = nalgebra::DVectorView::from_slice(&coeffs[a..b], b - a);
            let r = m * v;
            out[a..b].copy_from_slice(r.as_slice());
        }
        out
    }

    pub fn apply_coeffs(&self, coeffs: &[f64]) -> Vec<f64> {
        self.apply_with(coeffs, |m| m.clone())
    }

    pub fn apply_transpose_coeffs(&self, coeffs: &[f64]) -> Vec<f64> {
        self.apply_with(coeffs, |m| m.transpose())
    }

    pub fn apply(&self, field: &SphereField) -> Result<SphereField> {
        if field.dim() != self.dim || field.cutoff() != self.cutoff {
            return Err(Error::Mismatch("field does not match isometry action".into()));
        }
        SphereField::from_coeffs(self.dim, self.cutoff, self.apply_coeffs(field.coeffs()))
    }

    /// Largest entry of `RᵀR - I`; zero up to quadrature error.
    pub fn orthogonality_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b.transpose() * b - DMatrix::identity(b.nrows(), b.nrows())).amax())
            .fold(0.0, f64::max)
    }
}
