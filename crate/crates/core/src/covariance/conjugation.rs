//! Plane-side evaluation of `⟨C_{S,k} u, v⟩` by pulling `u` and `v` back to
//! ℝᵈ and pairing them under `(Δ + m²)⁻¹` with a discrete Fourier
//! transform on a large periodic box.
//!
//! This route shares no code with the sphere-side assembly beyond basis
//! evaluation. Pulled-back fields decay like `|y|^{-d}` times the value at
//! the north pole, so probes should vanish there (d = 2 harmonics with
//! `m ≠ 0`, d = 1 sine modes) for the box truncation to be negligible.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::conformal::stereo_inverse;
use crate::error::{Error, Result};
use serde::Serialize;

use super::{route_tolerance, ScaledCovariance};
use crate::harmonics::{HarmonicIndex, SphereField};

/// Periodic box `[-B, B)ᵈ` sampled with `points` nodes per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConjugationGrid {
    pub half_width: f64,
    pub points: usize,
}

impl ConjugationGrid {
    /// Box wide enough for low-degree probes at scale `k`.
    pub fn for_scale(dim: usize, k: f64) -> Self {
        match dim {
            1 => Self {
                half_width: 400.0 * k,
                points: 1 << 16,
            },
            _ => Self {
                half_width: 48.0 * k,
                points: 1024,
            },
        }
    }

    fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Angular frequency of FFT bin `q`.
    fn frequency(&self, q: usize) -> f64 {
        let n = self.points as isize;
        let q = q as isize;
        let signed = if q < (n + 1) / 2 { q } else { q - n };
        2.0 * std::f64::consts::PI * signed as f64 / (n as f64 * self.spacing())
    }
}

/// `k^{-d/2} Λ_{α⁻¹}(y/k)^{d/2} u(α⁻¹(y/k))` on the box nodes.
fn pull_back_samples(u: &SphereField, k: f64, grid: &ConjugationGrid) -> Vec<Complex<f64>> {
    let dim = u.dim();
    let n = grid.points;
    let h = grid.spacing();
    let coord = |j: usize| -grid.half_width + j as f64 * h;
    let amp = k.powf(-(dim as f64) / 2.0);
    let value = |y: &[f64]| {
        let scaled: Vec<f64> = y.iter().map(|v| v / k).collect();
        let (x, factor) = stereo_inverse(&scaled);
        amp * factor.powf(dim as f64 / 2.0) * u.eval(&x)
    };
    match dim {
        1 => (0..n).map(|j| Complex::new(value(&[coord(j)]), 0.0)).collect(),
        _ => {
            let mut out = Vec::with_capacity(n * n);
            for a in 0..n {
                for b in 0..n {
                    out.push(Complex::new(value(&[coord(a), coord(b)]), 0.0));
                }
            }
            out
        }
    }
}

fn fft_in_place(data: &mut [Complex<f64>], dim: usize, n: usize) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    if dim == 1 {
        fft.process(data);
        return;
    }
    fft.process(data);
    let mut column = vec![Complex::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            column[r] = data[r * n + c];
        }
        fft.process(&mut column);
        for r in 0..n {
            data[r * n + c] = column[r];
        }
    }
}

fn spectrum(u: &SphereField, k: f64, grid: &ConjugationGrid) -> Vec<Complex<f64>> {
    let mut data = pull_back_samples(u, k, grid);
    fft_in_place(&mut data, u.dim(), grid.points);
    data
}

fn pair_spectra(fu: &[Complex<f64>], fv: &[Complex<f64>], dim: usize, mass: f64, grid: &ConjugationGrid) -> f64 {
    let n = grid.points;
    let m2 = mass * mass;
    let freq: Vec<f64> = (0..n).map(|q| grid.frequency(q)).collect();
    let terms: Vec<f64> = match dim {
        1 => (0..n).map(|q| (fu[q] * fv[q].conj()).re / (freq[q] * freq[q] + m2)).collect(),
        _ => (0..n * n)
            .map(|i| {
                let (a, b) = (freq[i / n], freq[i % n]);
                (fu[i] * fv[i].conj()).re / (a * a + b * b + m2)
            })
            .collect(),
    };
    let cell = grid.spacing() / n as f64;
    crate::stats::pairwise_sum(&terms) * cell.powi(dim as i32)
}

fn check_inputs(k: f64, mass: f64, grid: &ConjugationGrid) -> Result<()> {
    if !(k > 0.0 && mass > 0.0) {
        return Err(Error::InvalidArgument("scale and mass must be positive".into()));
    }
    if grid.points < 8 || grid.half_width <= 0.0 {
        return Err(Error::InvalidArgument("conjugation box too small".into()));
    }
    Ok(())
}

/// `⟨(Δ + m²)⁻¹ P u, P v⟩_{L²(ℝᵈ)}` where `P` is the inverse transfer at
/// scale `k`.
pub fn conjugation_pairing(k: f64, mass: f64, u: &SphereField, v: &SphereField, grid: &ConjugationGrid) -> Result<f64> {
    u.check_compatible(v)?;
    check_inputs(k, mass, grid)?;
    let fu = spectrum(u, k, grid);
    if u == v {
        return Ok(pair_spectra(&fu, &fu, u.dim(), mass, grid));
    }
    let fv = spectrum(v, k, grid);
    Ok(pair_spectra(&fu, &fv, u.dim(), mass, grid))
}

/// Agreement between a sphere-side covariance and the plane-side pairing
/// on a fixed set of low-degree probes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjugationCheck {
    /// `(label, sphere value, plane value, relative gap)` per probe pair.
    pub pairs: Vec<(String, f64, f64, f64)>,
    pub max_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Probes vanishing at the north pole: degree ≤ 2 harmonics with `m ≠ 0`
/// on S², sine modes of degree 1 and 2 on S¹.
fn conjugation_probes(dim: usize) -> Vec<HarmonicIndex> {
    match dim {
        1 => vec![HarmonicIndex::new(1, -1), HarmonicIndex::new(2, -1)],
        _ => vec![HarmonicIndex::new(1, 1), HarmonicIndex::new(2, 1), HarmonicIndex::new(2, -2)],
    }
}

/// Compares `cov` with the plane-side pairing on the probes, including
/// the off-diagonal pair of the first two, at tolerance
/// [`route_tolerance`]. Costs one FFT per probe on `grid`.
pub fn conjugation_check(cov: &ScaledCovariance, grid: Option<ConjugationGrid>) -> Result<ConjugationCheck> {
    let dim = cov.operator.dim();
    let cutoff = cov.operator.cutoff();
    if cutoff < 2 {
        return Err(Error::InvalidArgument("conjugation probes need cutoff >= 2".into()));
    }
    let box_grid = grid.unwrap_or_else(|| ConjugationGrid::for_scale(dim, cov.scale));
    check_inputs(cov.scale, cov.mass, &box_grid)?;
    let probes: Vec<SphereField> = conjugation_probes(dim)
        .into_iter()
        .map(|idx| SphereField::unit(dim, cutoff, idx))
        .collect::<Result<_>>()?;
    let spectra: Vec<_> = probes.iter().map(|u| spectrum(u, cov.scale, &box_grid)).collect();
    let sphere = |i: usize, j: usize| -> Result<f64> {
        Ok(crate::stats::pairwise_dot(probes[j].coeffs(), &cov.operator.apply_coeffs(probes[i].coeffs())))
    };
    let plane = |i: usize, j: usize| pair_spectra(&spectra[i], &spectra[j], dim, cov.mass, &box_grid);
    let mut index_pairs: Vec<(usize, usize)> = (0..probes.len()).map(|i| (i, i)).collect();
    index_pairs.push((0, 1));
    let mut pairs = Vec::new();
    for (i, j) in index_pairs {
        let (s, p) = (sphere(i, j)?, plane(i, j));
        let scale = (sphere(i, i)? * sphere(j, j)?).sqrt();
        if !(s.is_finite() && p.is_finite() && scale > 0.0) {
            return Err(Error::NonFinite(format!("conjugation pairing of probes {i}, {j}")));
        }
        let label = format!("{:?}x{:?}", conjugation_probes(dim)[i], conjugation_probes(dim)[j]);
        pairs.push((label, s, p, (s - p).abs() / scale));
    }
    let max_gap = pairs.iter().map(|p| p.3).fold(0.0, f64::max);
    let tolerance = route_tolerance(cutoff);
    Ok(ConjugationCheck {
        pairs,
        max_gap,
        tolerance,
        pass: max_gap <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{free_covariance_pairing, ConformalPipeline, PlaneTestFunction};

    /// A bump lifted and pulled back is paired like the bump itself.
    #[test]
    fn pulled_back_lift_reproduces_plane_pairing() {
        let f = PlaneTestFunction::bump(1.0, vec![0.3], 0.6).unwrap();
        let oracle = free_covariance_pairing(&f, &f, 1.0);
        let pipe = ConformalPipeline::new(2.0, 1, 48).unwrap();
        let u = pipe.lift(&f).unwrap().field;
        let grid = ConjugationGrid { half_width: 200.0, points: 1 << 14 };
        let q = conjugation_pairing(2.0, 1.0, &u, &u, &grid).unwrap();
        assert!((q - oracle).abs() < 1e-3 * oracle, "{q} vs {oracle}");
    }

    #[test]
    fn circle_covariance_agrees_with_the_plane() {
        use crate::covariance::scaled_covariance;
        use crate::harmonics::SphereGrid;
        let grid = SphereGrid::for_cutoff(1, 17).unwrap();
        for k in [1.0, 2.0] {
            let cov = scaled_covariance(k, 1.0, 1, 16, &grid).unwrap();
            let check = conjugation_check(&cov, None).unwrap();
            assert!(check.pass, "k = {k}: {check:?}");
            assert_eq!(check.pairs.len(), 3);
        }
    }
}
