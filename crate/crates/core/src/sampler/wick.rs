use serde::Serialize;

use super::GaussianSampler;
use crate::covariance::{Operator, SpectralOperator};
use crate::error::{Error, Result};
use crate::harmonics::geodesic_distance;
use crate::interaction::{c_k_diagonal, c_k_kernel, wick_power};
use crate::mollifier::MollifierFamily;
use crate::stats::mean_jackknife;

/// Monte Carlo moments of Wick squares of `φ_k = A_k φ` at two points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WickMoments {
    /// `C_k(x, x)`.
    pub variance: f64,
    /// `C_k(x, y)`.
    pub kernel: f64,
    /// `E[:φ_k(x)²:]`, expected 0.
    pub centering: f64,
    pub centering_stderr: f64,
    /// `E[:φ_k(x)²: :φ_k(y)²:]`, expected `2 C_k(x, y)²`.
    pub pair: f64,
    pub pair_stderr: f64,
    pub n_samples: usize,
}

impl WickMoments {
    pub fn expected_pair(&self) -> f64 {
        2.0 * self.kernel * self.kernel
    }

    /// Both moments within `sigmas` standard errors of their closed forms.
    pub fn within(&self, sigmas: f64) -> bool {
        self.centering.abs() <= sigmas * self.centering_stderr
            && (self.pair - self.expected_pair()).abs() <= sigmas * self.pair_stderr
    }
}

/// Draws `n` samples of the Gaussian field with spectral covariance `C` and
/// estimates the Wick moments of `A_k φ` at the points `x` and `y`.
pub fn wick_moments(
    covariance: &SpectralOperator,
    mollifier: &MollifierFamily,
    x: &[f64],
    y: &[f64],
    n: usize,
    seed: u64,
) -> Result<WickMoments> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
    }
    let dim = covariance.dim();
    if x.len() != dim + 1 || y.len() != dim + 1 {
        return Err(Error::Mismatch(format!("points must lie in R^{}", dim + 1)));
    }
    let variance = c_k_diagonal(covariance, mollifier)?;
    let kernel = c_k_kernel(covariance, mollifier, geodesic_distance(x, y))?;
    let mut sampler = GaussianSampler::new(Operator::Spectral(covariance.clone()), seed)?;
    let mut at_x = Vec::with_capacity(n);
    let mut at_y = Vec::with_capacity(n);
    for phi in sampler.sample(n) {
        let smoothed = mollifier.mollify(&phi)?;
        at_x.push(smoothed.eval(x));
        at_y.push(smoothed.eval(y));
    }
    let wx = wick_power(&at_x, 2, variance)?;
    let wy = wick_power(&at_y, 2, variance)?;
    let products: Vec<f64> = wx.iter().zip(&wy).map(|(a, b)| a * b).collect();
    let (centering, centering_stderr) = mean_jackknife(&wx);
    let (pair, pair_stderr) = mean_jackknife(&products);
    Ok(WickMoments {
        variance,
        kernel,
        centering,
        centering_stderr,
        pair,
        pair_stderr,
        n_samples: n,
    })
}
