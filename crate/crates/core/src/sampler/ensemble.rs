use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{pair_field, GaussianSampler};
use crate::conformal::{free_covariance_pairing, ConformalPipeline, SmoothedSlab};
use crate::error::{Error, Result};
use crate::harmonics::SphereField;
use crate::interaction::{DensityEvaluator, InteractionSpec};
use crate::stats::{effective_sample_size, mean_jackknife, normalized_weights, weighted_mean_jackknife, weighted_mean_leave_out};

pub const MIN_ENSEMBLE_SIZE: usize = 100;
pub const MIN_MOMENT_SAMPLES: usize = 1000;
/// Estimators refuse ensembles whose effective sample size is below this.
pub const DEFAULT_ESS_FLOOR: f64 = 10.0;

/// Fields drawn from the Gaussian reference measure with importance
/// weights `ρ_k(φᵢ)`.
#[derive(Clone, Debug)]
pub struct WeightedEnsemble {
    dim: usize,
    cutoff: usize,
    fields: Vec<SphereField>,
    log_weights: Vec<f64>,
    /// `exp(log wᵢ - max log w)`.
    weights: Vec<f64>,
    k: usize,
    spec: Option<InteractionSpec>,
    seed: u64,
    ess: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CharFuncEstimate {
    pub value: Complex64,
    pub stderr: f64,
    pub n_samples: usize,
    pub ess: f64,
}

/// Lower bound on `E[ρ]` and upper bound on `E[ρ²]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentBounds {
    pub k1: f64,
    pub k2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityMoments {
    pub mean: f64,
    pub mean_stderr: f64,
    pub mean_sq: f64,
    pub mean_sq_stderr: f64,
    pub n_samples: usize,
    pub lower_pass: Option<bool>,
    pub upper_pass: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmallTPoint {
    pub t: f64,
    /// Plane-side `⟨(Δ + m²)⁻¹ f_t, f_t⟩`.
    pub oracle: f64,
    pub oracle_over_t: f64,
    pub mc: f64,
    pub mc_stderr: f64,
    pub mc_over_t: f64,
    pub lift_residual: f64,
}

impl WeightedEnsemble {
    /// Unweighted ensemble of `n` Gaussian samples.
    pub fn gaussian(sampler: &mut GaussianSampler, n: usize) -> Result<Self> {
        let fields = sampler.sample(n);
        Self::from_parts(fields, vec![0.0; n], 0, None, sampler.seed())
    }

    pub fn from_parts(
        fields: Vec<SphereField>,
        log_weights: Vec<f64>,
        k: usize,
        spec: Option<InteractionSpec>,
        seed: u64,
    ) -> Result<Self> {
        if fields.len() != log_weights.len() {
            return Err(Error::Mismatch(format!(
                "{} fields but {} log-weights",
                fields.len(),
                log_weights.len()
            )));
        }
        let first = fields.first().ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
        let (dim, cutoff) = (first.dim(), first.cutoff());
        if fields.iter().any(|f| f.dim() != dim || f.cutoff() != cutoff) {
            return Err(Error::Mismatch("ensemble fields differ in shape".into()));
        }
        if let Some(i) = log_weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite(format!("log-weight of sample {i}")));
        }
        let weights = normalized_weights(&log_weights);
        let ess = effective_sample_size(&weights);
        Ok(Self {
            dim,
            cutoff,
            fields,
            log_weights,
            weights,
            k,
            spec,
            seed,
            ess,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fields(&self) -> &[SphereField] {
        &self.fields
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn spec(&self) -> Option<&InteractionSpec> {
        self.spec.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ess(&self) -> f64 {
        self.ess
    }

    pub fn check_ess(&self, floor: f64) -> Result<()> {
        if self.ess < floor {
            return Err(Error::EffectiveSampleSize { ess: self.ess, floor });
        }
        Ok(())
    }

    /// Plain mean of `ρ(φᵢ)` over the Gaussian samples, i.e. `N_k⁻¹`.
    pub fn mean_density(&self) -> Result<(f64, f64)> {
        let rho: Vec<f64> = self.log_weights.iter().map(|l| l.exp()).collect();
        if rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("density overflows".into()));
        }
        Ok(mean_jackknife(&rho))
    }

    fn check_field(&self, f: &SphereField) -> Result<()> {
        if f.dim() != self.dim || f.cutoff() != self.cutoff {
            return Err(Error::Mismatch(format!(
                "test function (d={}, L={}) vs ensemble (d={}, L={})",
                f.dim(),
                f.cutoff(),
                self.dim,
                self.cutoff
            )));
        }
        Ok(())
    }

    fn integrand(&self, f1: &SphereField, f2: Option<&SphereField>) -> Result<Vec<Complex64>> {
        self.check_field(f1)?;
        if let Some(g) = f2 {
            self.check_field(g)?;
        }
        self.fields
            .par_iter()
            .map(|phi| {
                let re = pair_field(phi, f1)?;
                let im = match f2 {
                    Some(g) => pair_field(phi, g)?,
                    None => 0.0,
                };
                Ok(Complex64::new(-im, re).exp())
            })
            .collect()
    }

    /// Weighted estimate of `E[e^{i φ(f₁ + i f₂)}]` with jackknife stderr.
    pub fn char_functional(&self, f1: &SphereField, f2: Option<&SphereField>) -> Result<CharFuncEstimate> {
        self.check_ess(DEFAULT_ESS_FLOOR)?;
        let values = self.integrand(f1, f2)?;
        let (value, stderr) = weighted_mean_jackknife(&values, &self.weights);
        Ok(CharFuncEstimate {
            value,
            stderr,
            n_samples: self.len(),
            ess: self.ess,
        })
    }

    /// The characteristic functional and its delete-one-block replicates.
    pub fn char_functional_replicates(
        &self,
        f1: &SphereField,
        f2: Option<&SphereField>,
    ) -> Result<(Complex64, Vec<Complex64>)> {
        self.check_ess(DEFAULT_ESS_FLOOR)?;
        let values = self.integrand(f1, f2)?;
        Ok(weighted_mean_leave_out(&values, &self.weights))
    }

    /// Weighted mean of an arbitrary complex observable.
    pub fn weighted_mean<F>(&self, observable: F) -> Result<(Complex64, f64)>
    where
        F: Fn(&SphereField) -> Result<Complex64> + Sync,
    {
        self.check_ess(DEFAULT_ESS_FLOOR)?;
        let values: Vec<Complex64> = self.fields.par_iter().map(&observable).collect::<Result<_>>()?;
        Ok(weighted_mean_jackknife(&values, &self.weights))
    }

    /// Weighted estimate of `E[φ(f)²]`.
    pub fn second_moment(&self, f: &SphereField) -> Result<(f64, f64)> {
        self.check_field(f)?;
        let (v, e) = self.weighted_mean(|phi| Ok(Complex64::new(pair_field(phi, f)?.powi(2), 0.0)))?;
        Ok((v.re, e))
    }

    /// Second moment of lifted smoothed slabs `f_t` of thickness `t`,
    /// alongside the free plane-side value of `C(f_t, f_t)`.
    pub fn small_t_scan(
        &self,
        pipeline: &ConformalPipeline,
        profile_width: f64,
        ts: &[f64],
        mass: f64,
    ) -> Result<Vec<SmallTPoint>> {
        if pipeline.dim() != self.dim || pipeline.cutoff() != self.cutoff {
            return Err(Error::Mismatch("pipeline does not match the ensemble".into()));
        }
        ts.iter()
            .map(|&t| {
                let slab = SmoothedSlab::new(self.dim, t, profile_width)?;
                let lift = pipeline.lift_unchecked(&slab)?;
                let (mc, mc_stderr) = self.second_moment(&lift.field)?;
                let oracle = free_covariance_pairing(&slab, &slab, mass);
                Ok(SmallTPoint {
                    t,
                    oracle,
                    oracle_over_t: oracle / t,
                    mc,
                    mc_stderr,
                    mc_over_t: mc / t,
                    lift_residual: lift.residual,
                })
            })
            .collect()
    }
}

/// Importance-weighted ensemble of `n` samples for `ρ_k`.
pub fn build_weighted_ensemble(
    sampler: &mut GaussianSampler,
    evaluator: &DensityEvaluator,
    n: usize,
) -> Result<WeightedEnsemble> {
    if n < MIN_ENSEMBLE_SIZE {
        return Err(Error::InvalidArgument(format!(
            "ensembles need at least {MIN_ENSEMBLE_SIZE} samples, got {n}"
        )));
    }
    let fields = sampler.sample(n);
    let log_weights: Vec<f64> = fields
        .par_iter()
        .map(|phi| evaluator.log_density(phi).map(|v| v.value))
        .collect::<Result<_>>()?;
    let ensemble = WeightedEnsemble::from_parts(
        fields,
        log_weights,
        evaluator.k(),
        Some(evaluator.spec().clone()),
        sampler.seed(),
    )?;
    ensemble.check_ess(DEFAULT_ESS_FLOOR)?;
    Ok(ensemble)
}

impl DensityMoments {
    /// Monte Carlo `E[ρ]` and `E[ρ²]` under the Gaussian reference measure.
    pub fn estimate(
        sampler: &mut GaussianSampler,
        evaluator: &DensityEvaluator,
        n: usize,
        bounds: Option<MomentBounds>,
    ) -> Result<Self> {
        if n < MIN_MOMENT_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "moment estimates need at least {MIN_MOMENT_SAMPLES} samples, got {n}"
            )));
        }
        let fields = sampler.sample(n);
        let log_rho: Vec<f64> = fields
            .par_iter()
            .map(|phi| evaluator.log_density(phi).map(|v| v.value))
            .collect::<Result<_>>()?;
        Self::from_log_densities(&log_rho, bounds)
    }

    /// Moments from `log ρ` evaluated on Gaussian samples.
    pub fn from_log_densities(log_rho: &[f64], bounds: Option<MomentBounds>) -> Result<Self> {
        let rho: Vec<f64> = log_rho.iter().map(|l| l.exp()).collect();
        let rho2: Vec<f64> = log_rho.iter().map(|l| (2.0 * l).exp()).collect();
        if rho2.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("density moments overflow".into()));
        }
        let (mean, mean_stderr) = mean_jackknife(&rho);
        let (mean_sq, mean_sq_stderr) = mean_jackknife(&rho2);
        Ok(Self {
            mean,
            mean_stderr,
            mean_sq,
            mean_sq_stderr,
            n_samples: log_rho.len(),
            lower_pass: bounds.map(|b| mean >= b.k1),
            upper_pass: bounds.map(|b| mean_sq <= b.k2),
        })
    }

    /// Constant `K` in `|E_μ[Ψ]| ≤ K ‖Ψ‖_{L²(μ_C)}` with both moments pushed
    /// three stderr towards the conservative side.
    ///
    /// Cauchy-Schwarz gives `√E[ρ²] / E[ρ]`; the larger `E[ρ²] / E[ρ]` is
    /// taken when it exceeds that.
    pub fn domination_constant(&self) -> f64 {
        let lower = (self.mean - 3.0 * self.mean_stderr).max(f64::MIN_POSITIVE);
        let upper = self.mean_sq + 3.0 * self.mean_sq_stderr;
        upper.sqrt().max(upper) / lower
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{free_covariance, Operator};
    use crate::harmonics::{HarmonicIndex, SphereGrid};
    use crate::interaction::{InteractionKind, ScalarFn};
    use crate::mollifier::build_mollifier;
    use crate::sampler::gaussian_char_exact;
    use std::f64::consts::PI;

    fn sampler(cutoff: usize, seed: u64) -> GaussianSampler {
        GaussianSampler::new(Operator::from(free_covariance(1.0, 2, cutoff).unwrap()), seed).unwrap()
    }

    fn cosine_spec(eps: f64) -> InteractionSpec {
        InteractionSpec::new(InteractionKind::Bounded {
            f: ScalarFn::Cosine { amplitude: eps, frequency: 1.0, centered: false },
            bound: eps,
        })
        .unwrap()
    }

    #[test]
    fn free_spec_gives_uniform_weights() {
        let grid = SphereGrid::for_cutoff(2, 8).unwrap();
        let a = build_mollifier(1, 2, 4).unwrap();
        let c = free_covariance(1.0, 2, 4).unwrap();
        let ev = DensityEvaluator::new(&InteractionSpec::free(), 1, &a, &grid, &c).unwrap();
        let mut s = sampler(4, 1);
        let e = build_weighted_ensemble(&mut s, &ev, 200).unwrap();
        assert_eq!(e.ess(), 200.0);
        assert!(e.weights().iter().all(|w| *w == 1.0));
        let m = DensityMoments::estimate(&mut s, &ev, 1000, None).unwrap();
        assert_eq!((m.mean, m.mean_sq, m.mean_stderr), (1.0, 1.0, 0.0));
        assert!(build_weighted_ensemble(&mut s, &ev, 99).is_err());
    }

    #[test]
    fn bounded_density_stays_in_bracket() {
        let grid = SphereGrid::for_cutoff(2, 16).unwrap();
        let a = build_mollifier(2, 2, 8).unwrap();
        let c = free_covariance(1.0, 2, 8).unwrap();
        let spec = cosine_spec(0.1);
        let ev = DensityEvaluator::new(&spec, 2, &a, &grid, &c).unwrap();
        let mut s = sampler(8, 5);
        let e = build_weighted_ensemble(&mut s, &ev, 400).unwrap();
        let (lo, hi) = ((-0.4 * PI).exp(), (0.4 * PI).exp());
        let (mean, _) = e.mean_density().unwrap();
        assert!(lo <= mean && mean <= hi);
        let bracket = MomentBounds { k1: lo, k2: hi * hi };
        let m = DensityMoments::estimate(&mut s, &ev, 1000, Some(bracket)).unwrap();
        assert_eq!((m.lower_pass, m.upper_pass), (Some(true), Some(true)));
    }

    #[test]
    fn zero_test_function_is_exact() {
        let mut s = sampler(4, 2);
        let e = WeightedEnsemble::gaussian(&mut s, 300).unwrap();
        let zero = SphereField::zeros(2, 4).unwrap();
        let est = e.char_functional(&zero, None).unwrap();
        assert_eq!(est.value, Complex64::new(1.0, 0.0));
        assert_eq!(est.stderr, 0.0);
        assert_eq!(e.second_moment(&zero).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn gaussian_char_functional_matches_closed_form() {
        let mut s = sampler(4, 11);
        let e = WeightedEnsemble::gaussian(&mut s, 10_000).unwrap();
        let f = SphereField::from_coeffs(2, 4, (0..25).map(|i| 0.3 * ((i % 4) as f64 - 1.5)).collect()).unwrap();
        let est = e.char_functional(&f, None).unwrap();
        let exact = gaussian_char_exact(s.covariance(), &f, None).unwrap();
        assert!((est.value - exact).norm() < 3.0 * est.stderr, "{} vs {exact} ± {}", est.value, est.stderr);
        assert!(est.value.norm() <= 1.0 + 3.0 * est.stderr);

        let g = SphereField::unit(2, 4, HarmonicIndex::new(1, 0)).unwrap().scaled(0.8);
        let zero = SphereField::zeros(2, 4).unwrap();
        let est = e.char_functional(&zero, Some(&g)).unwrap();
        let exact = gaussian_char_exact(s.covariance(), &zero, Some(&g)).unwrap();
        assert!((est.value - exact).norm() < 3.0 * est.stderr);
        let kc = 0.5 * s.covariance().norm();
        assert!(exact.re <= (kc * g.norm_sq()).exp());
    }

    #[test]
    fn gaussian_second_moment_is_the_covariance() {
        let mut s = sampler(3, 4);
        let e = WeightedEnsemble::gaussian(&mut s, 5000).unwrap();
        let f = SphereField::from_coeffs(2, 3, (0..16).map(|i| 1.0 / (1.0 + i as f64)).collect()).unwrap();
        let (m, err) = e.second_moment(&f).unwrap();
        let exact = s.covariance().quadratic_form(&f).unwrap();
        // var(X²) = 2σ⁴ for X ~ N(0, σ²); the jackknife stderr should agree.
        let sigma = (2.0f64 / 5000.0).sqrt() * exact;
        assert!((m - exact).abs() < 4.0 * sigma, "{m} vs {exact}");
        assert!((err / sigma - 1.0).abs() < 0.5, "{err} vs {sigma}");
    }

    #[test]
    fn low_ess_is_refused() {
        let fields = vec![SphereField::zeros(1, 2).unwrap(); 100];
        let mut logw = vec![-50.0; 100];
        logw[0] = 0.0;
        let e = WeightedEnsemble::from_parts(fields, logw, 1, None, 0).unwrap();
        assert!(e.ess() < 1.01);
        let zero = SphereField::zeros(1, 2).unwrap();
        assert!(matches!(e.char_functional(&zero, None), Err(Error::EffectiveSampleSize { .. })));
    }
}
