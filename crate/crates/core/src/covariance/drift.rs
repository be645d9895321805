use nalgebra::{DMatrix, SymmetricEigen};

use super::scaled_covariance;
use crate::conformal::{rotation_g_k, IsometryAction};
use crate::error::{Error, Result};
use crate::harmonics::SphereGrid;

/// Krylov steps used to estimate the norm of a symmetric operator.
const LANCZOS_STEPS: usize = 80;

/// Largest `|λ|` of the symmetric operator `apply` on ℝⁿ, by Lanczos with
/// full reorthogonalization from a fixed start vector.
pub(crate) fn symmetric_norm<F: Fn(&[f64]) -> Vec<f64>>(n: usize, apply: F) -> f64 {
    let steps = LANCZOS_STEPS.min(n);
    // splitmix64 start vector: deterministic and generic.
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut q: Vec<f64> = (0..n)
        .map(|_| {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.iter_mut().for_each(|v| *v /= norm);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for _ in 0..steps {
        let mut w = apply(&q);
        let a = dot(&w, &q);
        alpha.push(a);
        basis.push(q);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let b = dot(&w, &w).sqrt();
        let scale = alpha.iter().map(|v: &f64| v.abs()).fold(0.0, f64::max).max(b);
        if b <= 1e-14 * scale || basis.len() == n {
            break;
        }
        beta.push(b);
        q = w.into_iter().map(|v| v / b).collect();
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    SymmetricEigen::new(t).eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// `‖R C̃ R⁻¹ - C̃‖` where `C̃` is the scaled covariance and `R` the basis
/// action of the rotation `g_k(T)`.
pub fn conjugation_drift(
    k: f64,
    translation: &[f64],
    mass: f64,
    dim: usize,
    cutoff: usize,
    grid: &SphereGrid,
) -> Result<f64> {
    if translation.len() != dim {
        return Err(Error::Mismatch(format!("{}-vector translation in d = {dim}", translation.len())));
    }
    let c = scaled_covariance(k, mass, dim, cutoff, grid)?.operator;
    let g = rotation_g_k(translation, k)?;
    if g.is_identity() {
        return Ok(0.0);
    }
    let r = IsometryAction::new(&g.inverse(), cutoff, grid)?;
    let n = crate::harmonics::basis_len(dim, cutoff);
    Ok(symmetric_norm(n, |x| {
        let conj = r.apply_coeffs(&c.apply_coeffs(&r.apply_transpose_coeffs(x)));
        let plain = c.apply_coeffs(x);
        conj.iter().zip(plain).map(|(a, b)| a - b).collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lanczos_matches_dense_eigenvalues() {
        let n = 30;
        let a = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 + ((j * 7 + i * 3) % 11) as f64 - 10.0);
        let exact = SymmetricEigen::new(a.clone()).eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let est = symmetric_norm(n, |x| (&a * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec());
        assert!((est - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn zero_translation_has_no_drift() {
        let grid = SphereGrid::for_cutoff(2, 16).unwrap();
        assert_eq!(conjugation_drift(2.0, &[0.0, 0.0], 1.0, 2, 8, &grid).unwrap(), 0.0);
    }

    #[test]
    fn drift_is_even_in_the_translation() {
        let grid = SphereGrid::for_cutoff(2, 24).unwrap();
        let plus = conjugation_drift(2.0, &[1.0, 0.0], 1.0, 2, 12, &grid).unwrap();
        let minus = conjugation_drift(2.0, &[-1.0, 0.0], 1.0, 2, 12, &grid).unwrap();
        assert!(plus > 0.0);
        assert!((plus - minus).abs() < 1e-10, "{plus} vs {minus}");
    }
}
