//! Matrix of `k² Λ (Δᶜ + k² m² Λ²)⁻¹ Λ` in the truncated harmonic basis,
//! where `Λ = 1/(1 - x_d)` is the stereographic conformal factor.
//!
//! Since `Λ⁻¹ = 1 - x_d` is a degree-one polynomial, the operator equals
//! `k² (Λ⁻¹ Δᶜ Λ⁻¹ + k² m²)⁻¹`, and `Λ⁻¹` maps degree `≤ L` into degree
//! `≤ L + 1` exactly. The primary route assembles `K = Mᵀ D M` with
//! `M = ⟨Y_{≤L+1}, (1 - x_d) Y_{≤L}⟩` and `D` the conformal eigenvalues,
//! so every quadrature involved is exact and the pole never enters.
//!
//! The secondary route keeps `Λ` and `Λ²` as quadrature Gram matrices on
//! an oversampled pole-excluded rule, `k² G₁ (D + k² m² G₂)⁻¹ G₁`. The two
//! truncations differ at `O(L⁻⁴)`, and [`scaled_covariance`] fails when they
//! disagree on low-degree probes.
//!
//! Both routes split by axial class: every operator here commutes with
//! rotations about the polar axis.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{Block, DenseOperator, PSD_TOL};
use crate::error::{Error, Result};
use crate::harmonics::{
    axial_class, basis_len, check_dim, conformal_laplace_eigenvalue, gauss_legendre, HarmonicIndex, LegendreTable,
    SphereGrid,
};

/// Relative gap allowed between the two assembly routes on probes at
/// `L ≥ 16`; below that it grows like `L⁻⁴` (see [`route_tolerance`]).
pub const ROUTE_AGREEMENT_TOL: f64 = 1e-4;
/// Probes for the route cross-check have degree at most this.
const PROBE_DEGREE: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssemblyRoute {
    /// `k² (Mᵀ D M + k² m²)⁻¹`.
    Factored,
    /// `k² G₁ (D + k² m² G₂)⁻¹ G₁`.
    Quadrature,
}

/// Basis indices of each axial class, ordered by degree.
pub fn axial_blocks(dim: usize, cutoff: usize) -> Vec<(i32, Vec<usize>)> {
    let n = basis_len(dim, cutoff);
    let mut classes: Vec<(i32, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let class = axial_class(dim, HarmonicIndex::from_flat(dim, i));
        match classes.iter_mut().find(|(c, _)| *c == class) {
            Some((_, v)) => v.push(i),
            None => classes.push((class, vec![i])),
        }
    }
    classes.sort_by_key(|(c, _)| *c);
    classes
}

/// One-dimensional rule in the polar variable, with the values of each
/// class profile available at its nodes.
struct AxialRule {
    dim: usize,
    z: Vec<f64>,
    weights: Vec<f64>,
    /// Polar angle of each node (S¹ only).
    theta: Vec<f64>,
    /// Legendre tables per node (S² only).
    tables: Vec<LegendreTable>,
}

impl AxialRule {
    fn from_grid(grid: &SphereGrid, cutoff: usize) -> Self {
        match grid.dim() {
            1 => Self::circle_from(grid.longitudes().to_vec()),
            _ => Self::rings(grid.ring_z().to_vec(), grid.ring_weights().to_vec(), cutoff),
        }
    }

    /// Rule with `n` nodes in the polar variable (S²) or on the circle (S¹).
    fn oversampled(dim: usize, n: usize, cutoff: usize) -> Self {
        match dim {
            1 => Self::circle_from((0..n).map(|j| 2.0 * PI * (j as f64 + 0.5) / n as f64).collect()),
            _ => {
                let (z, w) = gauss_legendre(n);
                Self::rings(z, w, cutoff)
            }
        }
    }

    fn circle_from(theta: Vec<f64>) -> Self {
        let n = theta.len();
        Self {
            dim: 1,
            z: theta.iter().map(|t| t.cos()).collect(),
            weights: vec![2.0 * PI / n as f64; n],
            theta,
            tables: Vec::new(),
        }
    }

    fn rings(z: Vec<f64>, weights: Vec<f64>, cutoff: usize) -> Self {
        let tables = z.iter().map(|&zi| LegendreTable::new(cutoff, zi)).collect();
        Self {
            dim: 2,
            z,
            weights,
            theta: Vec::new(),
            tables,
        }
    }

    /// Degrees of `class` up to `cutoff`, and the orthonormal profile
    /// values (nodes × degrees) in the polar variable.
    fn profile(&self, class: i32, cutoff: usize) -> (Vec<usize>, DMatrix<f64>) {
        let degrees: Vec<usize> = match self.dim {
            1 if class < 0 => (1..=cutoff).collect(),
            1 => (0..=cutoff).collect(),
            _ => (class.unsigned_abs() as usize..=cutoff).collect(),
        };
        let values = DMatrix::from_fn(self.z.len(), degrees.len(), |r, j| {
            let l = degrees[j];
            match self.dim {
                1 if class < 0 => (l as f64 * self.theta[r]).sin() / PI.sqrt(),
                1 if l == 0 => 1.0 / (2.0 * PI).sqrt(),
                1 => (l as f64 * self.theta[r]).cos() / PI.sqrt(),
                _ => (2.0 * PI).sqrt() * self.tables[r].get(l, class.unsigned_abs() as usize),
            }
        });
        (degrees, values)
    }

    /// `Pᵀ diag(w f(z)) Q`.
    fn gram(&self, p: &DMatrix<f64>, q: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut wq = q.clone();
        for (r, (z, w)) in self.z.iter().zip(&self.weights).enumerate() {
            let s = w * f(*z);
            wq.row_mut(r).scale_mut(s);
        }
        p.transpose() * wq
    }
}

/// The assembled operator with its diagnostics.
#[derive(Clone, Debug)]
pub struct ScaledCovariance {
    pub scale: f64,
    pub mass: f64,
    pub operator: DenseOperator,
    /// Largest relative gap between the two assembly routes on probes.
    pub route_gap: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn invert(a: DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.try_inverse()
        .ok_or(Error::NotPositive { min_eigenvalue: 0.0 })
}

fn factored_block(rule: &AxialRule, dim: usize, class: i32, cutoff: usize, k: f64, mass: f64) -> Result<DMatrix<f64>> {
    let (_, p) = rule.profile(class, cutoff);
    let (deg1, p1) = rule.profile(class, cutoff + 1);
    let m = rule.gram(&p1, &p, |z| 1.0 - z);
    let mut dm = m.clone();
    for (r, l) in deg1.iter().enumerate() {
        dm.row_mut(r).scale_mut(conformal_laplace_eigenvalue(dim, *l));
    }
    let mut a = m.transpose() * dm;
    for i in 0..a.nrows() {
        a[(i, i)] += k * k * mass * mass;
    }
    Ok(symmetrize(&invert(symmetrize(&a))?) * (k * k))
}

fn quadrature_block(rule: &AxialRule, dim: usize, class: i32, cutoff: usize, k: f64, mass: f64) -> Result<DMatrix<f64>> {
    let (deg, p) = rule.profile(class, cutoff);
    let g1 = rule.gram(&p, &p, |z| 1.0 / (1.0 - z));
    let g2 = rule.gram(&p, &p, |z| 1.0 / ((1.0 - z) * (1.0 - z)));
    let mut a = g2 * (k * k * mass * mass);
    for (i, l) in deg.iter().enumerate() {
        a[(i, i)] += conformal_laplace_eigenvalue(dim, *l);
    }
    let c = &g1 * invert(symmetrize(&a))? * &g1;
    Ok(symmetrize(&c) * (k * k))
}

/// Route agreement tolerance at cutoff `L`: the truncations differ at
/// `O(L⁻⁴)`, calibrated so that `L = 16` sits an order of magnitude inside.
pub fn route_tolerance(cutoff: usize) -> f64 {
    ROUTE_AGREEMENT_TOL * (16.0 / cutoff.max(1) as f64).powi(4).max(1.0)
}

/// Node count of the oversampled rule used by the quadrature route.
fn oversampled_nodes(dim: usize, cutoff: usize) -> usize {
    match dim {
        1 => 4 * cutoff + 1,
        _ => 2 * cutoff + 2,
    }
}

/// Assembles the block matrix of the scaled covariance by one route.
pub(crate) fn assemble(
    route: AssemblyRoute,
    k: f64,
    mass: f64,
    dim: usize,
    cutoff: usize,
    grid: Option<&SphereGrid>,
) -> Result<DenseOperator> {
    let rule = match (route, grid) {
        (AssemblyRoute::Factored, Some(g)) => AxialRule::from_grid(g, cutoff + 1),
        (AssemblyRoute::Factored, None) => AxialRule::oversampled(dim, oversampled_nodes(dim, cutoff + 1), cutoff + 1),
        (AssemblyRoute::Quadrature, _) => AxialRule::oversampled(dim, oversampled_nodes(dim, cutoff), cutoff),
    };
    let blocks = axial_blocks(dim, cutoff)
        .into_iter()
        .map(|(class, indices)| {
            let matrix = match route {
                AssemblyRoute::Factored => factored_block(&rule, dim, class, cutoff, k, mass)?,
                AssemblyRoute::Quadrature => quadrature_block(&rule, dim, class, cutoff, k, mass)?,
            };
            Ok(Block { indices, matrix })
        })
        .collect::<Result<Vec<_>>>()?;
    DenseOperator::from_blocks(dim, cutoff, blocks)
}

/// Largest `|A_ij - B_ij| / √(A_ii A_jj)` over probe indices of degree at
/// most [`PROBE_DEGREE`].
fn probe_gap(a: &DenseOperator, b: &DenseOperator) -> f64 {
    let dim = a.dim();
    let mut gap: f64 = 0.0;
    for (ba, bb) in a.blocks().iter().zip(b.blocks()) {
        let probes: Vec<usize> = ba
            .indices
            .iter()
            .enumerate()
            .filter(|(_, &i)| HarmonicIndex::from_flat(dim, i).degree <= PROBE_DEGREE)
            .map(|(r, _)| r)
            .collect();
        for &r in &probes {
            for &c in &probes {
                let scale = (ba.matrix[(r, r)] * ba.matrix[(c, c)]).abs().sqrt();
                gap = gap.max((ba.matrix[(r, c)] - bb.matrix[(r, c)]).abs() / scale);
            }
        }
    }
    gap
}

/// Scaled covariance at scale `k` and mass `m` on degrees `≤ L`.
///
/// `grid` must exclude the pole and be exact through degree `L + 1`.
/// Fails with [`Error::CrossValidation`] when the two assembly routes
/// disagree on low-degree probes beyond [`route_tolerance`], and with
/// [`Error::NotPositive`] when the symmetrized matrix has an eigenvalue
/// below `-1e-8·‖C‖`.
pub fn scaled_covariance(k: f64, mass: f64, dim: usize, cutoff: usize, grid: &SphereGrid) -> Result<ScaledCovariance> {
    check_dim(dim)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {k}")));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidArgument(format!("mass must be positive, got {mass}")));
    }
    if grid.dim() != dim {
        return Err(Error::Mismatch(format!("{}-sphere grid for d = {dim}", grid.dim())));
    }
    if !grid.pole_excluded() {
        return Err(Error::ProjectionPole);
    }
    grid.check_cutoff(cutoff + 1)?;

    let operator = assemble(AssemblyRoute::Factored, k, mass, dim, cutoff, Some(grid))?;
    let probe_degree = PROBE_DEGREE.min(cutoff);
    let secondary = assemble(AssemblyRoute::Quadrature, k, mass, dim, cutoff, None)?;
    let route_gap = probe_gap(&operator, &secondary);
    if !(route_gap <= route_tolerance(cutoff)) {
        return Err(Error::CrossValidation(format!(
            "assembly routes disagree by {route_gap:.3e} on degree <= {probe_degree} probes (k = {k}, L = {cutoff})"
        )));
    }

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for b in operator.blocks() {
        let e = SymmetricEigen::new(b.matrix.clone()).eigenvalues;
        lo = lo.min(e.min());
        hi = hi.max(e.max());
    }
    if lo < -PSD_TOL * hi.abs().max(lo.abs()) {
        return Err(Error::NotPositive { min_eigenvalue: lo });
    }
    Ok(ScaledCovariance {
        scale: k,
        mass,
        operator,
        route_gap,
        min_eigenvalue: lo,
        max_eigenvalue: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{free_covariance_pairing, ConformalPipeline, PlaneTestFunction};
    use crate::covariance::{Operator, SYMMETRY_TOL};

    #[test]
    fn blocks_partition_the_basis() {
        for (dim, cutoff, count) in [(1, 5, 2), (2, 4, 9)] {
            let blocks = axial_blocks(dim, cutoff);
            assert_eq!(blocks.len(), count);
            let total: usize = blocks.iter().map(|(_, v)| v.len()).sum();
            assert_eq!(total, basis_len(dim, cutoff));
        }
    }

    #[test]
    fn profiles_are_orthonormal() {
        for dim in [1, 2] {
            let rule = AxialRule::oversampled(dim, oversampled_nodes(dim, 12), 12);
            for class in [-1, 0, 1, 3] {
                if dim == 1 && class == 0 {
                    continue;
                }
                let (_, p) = rule.profile(class, 12);
                let g = rule.gram(&p, &p, |_| 1.0);
                let err = (g - DMatrix::identity(p.ncols(), p.ncols())).amax();
                assert!(err < 1e-12, "d={dim} class {class}: {err}");
            }
        }
    }

    #[test]
    fn structural_example() {
        let grid = SphereGrid::for_cutoff(2, 32).unwrap();
        let c = scaled_covariance(2.0, 1.0, 2, 16, &grid).unwrap();
        assert!(c.operator.symmetry_defect() <= SYMMETRY_TOL);
        assert!(c.min_eigenvalue >= -PSD_TOL * c.max_eigenvalue);
        assert!(c.route_gap < ROUTE_AGREEMENT_TOL);
    }

    #[test]
    fn grid_without_headroom_is_rejected() {
        let grid = SphereGrid::for_cutoff(2, 8).unwrap();
        assert!(matches!(
            scaled_covariance(1.0, 1.0, 2, 8, &grid),
            Err(Error::ResolutionTooSmall { .. })
        ));
    }

    #[test]
    fn circle_operator_is_positive() {
        let grid = SphereGrid::for_cutoff(1, 32).unwrap();
        for k in [1.0, 4.0] {
            let c = scaled_covariance(k, 1.0, 1, 16, &grid).unwrap();
            assert!(c.min_eigenvalue > 0.0);
        }
    }

    /// The free norm of a unit bump survives the transfer at every scale.
    #[test]
    fn quadratic_form_matches_plane_oracle() {
        for dim in [1, 2] {
            let f = PlaneTestFunction::unit_bump(dim).unwrap();
            let oracle = free_covariance_pairing(&f, &f, 1.0);
            for k in [1.0, 2.0, 4.0] {
                let cutoff = 16 * k as usize;
                let pipe = ConformalPipeline::new(k, dim, cutoff).unwrap();
                let u = pipe.lift(&f).unwrap().field;
                let c = scaled_covariance(k, 1.0, dim, cutoff, pipe.grid()).unwrap();
                let q = Operator::Dense(c.operator).quadratic_form(&u).unwrap();
                let rel = (q - oracle).abs() / oracle;
                assert!(rel < 0.02, "d={dim} k={k}: {q} vs {oracle} ({rel:.2e})");
            }
        }
    }
}
