//! The time reflection `Θ` and finite-family reflection-positivity checks.
//!
//! On the plane `Θ` negates the first coordinate; on the sphere it negates
//! `x₀`, fixing the great sphere `{x₀ = 0}` that stereographic projection
//! sends onto the hyperplane `{t = 0}`. In the harmonic basis it is
//! diagonal with entries `±1`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::Operator;
use crate::conformal::{Isometry, PlaneTestFunction};
use crate::error::{Error, Result};
use crate::harmonics::{basis_len, check_dim, reflection_sign, HarmonicIndex, SphereField, SphereGrid};

/// Effective support radius of a Gaussian bump, in widths.
pub const SUPPORT_RADII: f64 = 6.0;
/// Default relative tolerance for reflection-positivity verdicts.
pub const RP_TOL: f64 = 1e-8;
/// Relative tolerance on `‖AΘ - ΘA‖`.
pub const COMMUTATOR_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReflectionTheta {
    dim: usize,
}

impl ReflectionTheta {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn isometry(&self) -> Isometry {
        Isometry::time_reflection(self.dim).expect("dimension checked on construction")
    }

    /// `(t, x₁, …) ↦ (-t, x₁, …)`; the same map reflects sphere points.
    pub fn apply_point(&self, p: &[f64]) -> Vec<f64> {
        let mut q = p.to_vec();
        q[0] = -q[0];
        q
    }

    pub fn apply_plane(&self, f: &PlaneTestFunction) -> PlaneTestFunction {
        f.time_reflected()
    }

    pub fn sign(&self, index: usize) -> f64 {
        reflection_sign(self.dim, HarmonicIndex::from_flat(self.dim, index))
    }

    pub fn apply_sphere(&self, f: &SphereField) -> SphereField {
        let coeffs = f.coeffs().iter().enumerate().map(|(i, c)| self.sign(i) * c).collect();
        SphereField::from_coeffs(f.dim(), f.cutoff(), coeffs).expect("length preserved")
    }

    /// `‖AΘ - ΘA‖_max / ‖A‖`.
    pub fn commutator_defect(&self, a: &Operator) -> f64 {
        match a {
            Operator::Spectral(_) => 0.0,
            Operator::Dense(d) => {
                let mut worst: f64 = 0.0;
                let mut scale: f64 = 0.0;
                for b in d.blocks() {
                    for (r, &i) in b.indices.iter().enumerate() {
                        for (c, &j) in b.indices.iter().enumerate() {
                            let v = b.matrix[(r, c)];
                            scale = scale.max(v.abs());
                            worst = worst.max((v * (self.sign(j) - self.sign(i))).abs());
                        }
                    }
                }
                if scale == 0.0 {
                    0.0
                } else {
                    worst / scale
                }
            }
        }
    }
}

/// A test function together with what the reflection-positivity checks
/// need to know about it.
pub trait Reflectable {
    /// What the functional under test consumes.
    type Value;
    /// `self - Θ other`.
    fn reflected_difference(&self, other: &Self, theta: &ReflectionTheta) -> Result<Self::Value>;
    /// Effective support inside the positive half.
    fn support_check(&self) -> std::result::Result<(), String>;
}

impl Reflectable for PlaneTestFunction {
    type Value = PlaneTestFunction;

    fn reflected_difference(&self, other: &Self, theta: &ReflectionTheta) -> Result<Self::Value> {
        self.minus(&theta.apply_plane(other))
    }

    fn support_check(&self) -> std::result::Result<(), String> {
        let t = self.min_time_with_margin(SUPPORT_RADII);
        if t > 0.0 {
            Ok(())
        } else {
            Err(format!("a bump reaches t = {t:.3} within {SUPPORT_RADII} widths"))
        }
    }
}

/// Band-limited projection of a geodesic Gaussian bump on the sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereProbe {
    center: Vec<f64>,
    width: f64,
    field: SphereField,
}

impl SphereProbe {
    pub fn bump(grid: &SphereGrid, cutoff: usize, center: &[f64], width: f64) -> Result<Self> {
        let field = SphereField::bump(grid, cutoff, center, width)?;
        let norm = center.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(Self {
            center: center.iter().map(|v| v / norm).collect(),
            width,
            field,
        })
    }

    pub fn zero(dim: usize, cutoff: usize) -> Result<Self> {
        Ok(Self {
            center: Vec::new(),
            width: 0.0,
            field: SphereField::zeros(dim, cutoff)?,
        })
    }

    pub fn field(&self) -> &SphereField {
        &self.field
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }
}

impl Reflectable for SphereProbe {
    type Value = SphereField;

    fn reflected_difference(&self, other: &Self, theta: &ReflectionTheta) -> Result<Self::Value> {
        self.field.sub(&theta.apply_sphere(&other.field))
    }

    fn support_check(&self) -> std::result::Result<(), String> {
        if self.center.is_empty() {
            return Ok(());
        }
        let distance = self.center[0].clamp(-1.0, 1.0).asin();
        if distance >= SUPPORT_RADII * self.width {
            Ok(())
        } else {
            Err(format!(
                "centre lies {distance:.3} from the equator, need {:.3}",
                SUPPORT_RADII * self.width
            ))
        }
    }
}

/// Outcome of a Gram-matrix reflection-positivity check.
#[derive(Clone, Debug)]
pub struct RpGram {
    /// Hermitian part of `S(f_i - Θ f_j)`.
    pub matrix: DMatrix<Complex64>,
    pub min_eigenvalue: f64,
    /// Spectral norm of `matrix`.
    pub norm: f64,
    /// `‖M - M*‖_max` of the raw matrix before symmetrization.
    pub hermitian_defect: f64,
    pub pass: bool,
}

/// Extreme eigenvalues of a Hermitian matrix.
pub(crate) fn hermitian_range(m: &DMatrix<Complex64>) -> (f64, f64) {
    let e = SymmetricEigen::new(m.clone()).eigenvalues;
    (e.min(), e.max())
}

pub(crate) fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).map(|v| v * 0.5)
}

/// Evaluates `S(f_i - Θ f_j)` for every pair and checks that the Hermitian
/// part is positive semi-definite to within `tol · ‖M‖`.
pub fn rp_gram_check<F, S>(mut functional: S, fs: &[F], theta: &ReflectionTheta, tol: f64) -> Result<RpGram>
where
    F: Reflectable,
    S: FnMut(&F::Value) -> Result<Complex64>,
{
    if fs.is_empty() {
        return Err(Error::InvalidArgument("no test functions".into()));
    }
    for (index, f) in fs.iter().enumerate() {
        f.support_check().map_err(|reason| Error::SupportViolation { index, reason })?;
    }
    let n = fs.len();
    let mut raw = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        for j in 0..n {
            let v = functional(&fs[i].reflected_difference(&fs[j], theta)?)?;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite(format!("functional at ({i}, {j})")));
            }
            raw[(i, j)] = v;
        }
    }
    Ok(gram_verdict(raw, tol))
}

pub(crate) fn gram_verdict(raw: DMatrix<Complex64>, tol: f64) -> RpGram {
    let hermitian_defect = (&raw - raw.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let matrix = hermitian_part(&raw);
    let (lo, hi) = hermitian_range(&matrix);
    let norm = lo.abs().max(hi.abs());
    RpGram {
        pass: lo >= -tol * norm,
        matrix,
        min_eigenvalue: lo,
        norm,
        hermitian_defect,
    }
}

/// Outcome of an operator reflection-positivity check.
#[derive(Clone, Debug)]
pub struct RpOperatorCheck {
    /// `⟨A f, Θ f⟩` for each test function.
    pub values: Vec<f64>,
    /// Relative commutator defect `‖AΘ - ΘA‖ / ‖A‖`.
    pub commutator: f64,
    pub pass: bool,
}

/// `⟨A f, Θ f⟩` for each `f`, after checking that `A` commutes with `Θ`.
pub fn rp_operator_check(a: &Operator, fs: &[SphereProbe], theta: &ReflectionTheta, tol: f64) -> Result<RpOperatorCheck> {
    if theta.dim() != a.dim() {
        return Err(Error::Mismatch("reflection and operator dimensions differ".into()));
    }
    let commutator = theta.commutator_defect(a);
    if commutator > COMMUTATOR_TOL {
        return Err(Error::NotReflectionSymmetric(commutator));
    }
    let mut values = Vec::with_capacity(fs.len());
    for (index, f) in fs.iter().enumerate() {
        f.support_check().map_err(|reason| Error::SupportViolation { index, reason })?;
        values.push(a.bilinear(f.field(), &theta.apply_sphere(f.field()))?);
    }
    Ok(RpOperatorCheck {
        pass: values.iter().all(|v| *v >= -tol),
        values,
        commutator,
    })
}

/// Basis-diagonal matrix of `Θ` for a given cutoff.
pub fn reflection_matrix(dim: usize, cutoff: usize) -> Result<DMatrix<f64>> {
    let theta = ReflectionTheta::new(dim)?;
    let n = basis_len(dim, cutoff);
    Ok(DMatrix::from_fn(n, n, |i, j| if i == j { theta.sign(i) } else { 0.0 }))
}
