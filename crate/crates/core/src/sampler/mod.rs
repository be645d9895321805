//! Gaussian sampling and importance-weighted ensembles.
//!
//! Sample `i` of a sampler with seed `s` is drawn from ChaCha8 stream `i`
//! of key `s`, so generation is order-independent and can run in
//! parallel. All reductions use the pairwise sums of [`crate::stats`].

mod ensemble;
mod export;
mod wick;

pub use ensemble::{
    build_weighted_ensemble, CharFuncEstimate, DensityMoments, MomentBounds, SmallTPoint, WeightedEnsemble,
    DEFAULT_ESS_FLOOR, MIN_ENSEMBLE_SIZE, MIN_MOMENT_SAMPLES,
};
pub use export::{read_ensemble, write_ensemble};
pub use wick::{wick_moments, WickMoments};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::covariance::{operator_sqrt, Operator};
use crate::error::{Error, Result};
use crate::harmonics::{basis_len, SphereField};

/// Draws fields from the centred Gaussian measure with covariance `C`.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    covariance: Operator,
    factor: Operator,
    seed: u64,
    counter: u64,
}

impl GaussianSampler {
    pub fn new(covariance: Operator, seed: u64) -> Result<Self> {
        let factor = operator_sqrt(&covariance)?;
        Ok(Self {
            covariance,
            factor,
            seed,
            counter: 0,
        })
    }

    pub fn covariance(&self) -> &Operator {
        &self.covariance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn dim(&self) -> usize {
        self.covariance.dim()
    }

    pub fn cutoff(&self) -> usize {
        self.covariance.cutoff()
    }

    /// Sample number `index`, independent of the counter.
    pub fn sample_at(&self, index: u64) -> SphereField {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let n = basis_len(self.dim(), self.cutoff());
        let xi: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        SphereField::from_coeffs(self.dim(), self.cutoff(), self.factor.apply_coeffs(&xi))
            .expect("factor preserves the basis length")
    }

    /// The next `n` samples; advances the counter.
    pub fn sample(&mut self, n: usize) -> Vec<SphereField> {
        let start = self.counter;
        self.counter += n as u64;
        (start..start + n as u64).into_par_iter().map(|i| self.sample_at(i)).collect()
    }
}

pub fn sample_gaussian(sampler: &mut GaussianSampler, n: usize) -> Vec<SphereField> {
    sampler.sample(n)
}

/// `φ(f)` in the orthonormal basis.
pub fn pair_field(phi: &SphereField, f: &SphereField) -> Result<f64> {
    phi.inner_product(f)
}

/// `exp(-½ ⟨C h, h⟩)` for `h = f₁ + i f₂` with the bilinear pairing.
pub fn gaussian_char_exact(c: &Operator, f1: &SphereField, f2: Option<&SphereField>) -> Result<Complex64> {
    let a = c.quadratic_form(f1)?;
    let (b, cross) = match f2 {
        Some(g) => (c.quadratic_form(g)?, c.bilinear(f1, g)?),
        None => (0.0, 0.0),
    };
    let q = Complex64::new(a - b, 2.0 * cross);
    let v = (-0.5 * q).exp();
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::NonFinite("Gaussian characteristic functional".into()));
    }
    Ok(v)
}
