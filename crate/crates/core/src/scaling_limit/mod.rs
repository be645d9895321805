//! Scaled characteristic functionals `S^k(f) = S_{μ_k}(lift_k f)` along a
//! doubling schedule of scales, with the diagnostics that stand in for a
//! limit: Cauchy differences, Euclidean-invariance errors, reflection
//! positivity, equicontinuity and analyticity bounds.
//!
//! With no interaction every functional is evaluated in closed form
//! ("deterministic" mode). Otherwise all functionals at one scale share a
//! single importance-weighted ensemble, so differences between them are
//! estimated on common random numbers.

mod report;

pub use report::{
    convergence_report, invariance_verdicts, CauchyRow, ConvergenceReport, RpSummary, ScaleDiagnostics, ScaleRow,
    SuiteVerdict, RP_BUMP_WIDTH,
    verdict as suite_verdict,
};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::{
    apply_isometry, free_norm_sq, rotation_g_k, ConformalPipeline, GaussianBump, Lift, PlaneFunction,
    PlaneTestFunction, DEFAULT_RESIDUAL_CAP,
};
use crate::covariance::{
    free_covariance, operator_sqrt, scaled_covariance, Reflectable, ReflectionTheta, RpGram, ScaledCovariance,
    RP_TOL, SUPPORT_RADII,
};
use crate::covariance::{gram_verdict, Operator};
use crate::error::{Error, Result};
use crate::harmonics::{check_dim, SphereField, SphereGrid};
use crate::interaction::{DensityEvaluator, InteractionSpec};
use crate::mollifier::{build_mollifier, MollifierFamily};
use crate::sampler::{
    build_weighted_ensemble, gaussian_char_exact, pair_field, CharFuncEstimate, DensityMoments, GaussianSampler,
    WeightedEnsemble,
};
use crate::stats::{jackknife_stderr, weighted_mean_leave_out};

/// A named plane test function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub id: String,
    pub f: PlaneTestFunction,
}

/// Acceptance thresholds of the scaling-limit suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Largest relative L² loss allowed when lifting a test function.
    pub lift_residual: f64,
    /// Free-field transfer identity and plane-oracle agreement.
    pub free_field: f64,
    /// Cauchy differences below this count as converged.
    pub cauchy: f64,
    /// Deterministic rotation error.
    pub rotation: f64,
    /// Relative floor for deterministic Gram eigenvalues.
    pub rp: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lift_residual: DEFAULT_RESIDUAL_CAP,
            free_field: 2e-2,
            cauchy: 2e-2,
            rotation: 1e-6,
            rp: RP_TOL,
        }
    }
}

fn default_cutoff_factor() -> usize {
    8
}

/// Smallest cutoff that keeps the positive-time Gram matrices clear of
/// truncation ringing at `k = 1`.
pub fn default_min_cutoff(dim: usize) -> usize {
    match dim {
        1 => 128,
        _ => 32,
    }
}

fn default_samples() -> usize {
    10_000
}

fn default_rotation_angle() -> f64 {
    0.7
}

/// Everything that determines a scaling-limit run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingExperiment {
    pub dim: usize,
    pub mass: f64,
    /// `L(k) = max(min_cutoff, cutoff_factor · k)`.
    #[serde(default = "default_cutoff_factor")]
    pub cutoff_factor: usize,
    /// Falls back to [`default_min_cutoff`] for the dimension.
    #[serde(default)]
    pub min_cutoff: Option<usize>,
    pub k_list: Vec<usize>,
    #[serde(default = "InteractionSpec::free")]
    pub interaction: InteractionSpec,
    pub corpus: Vec<CorpusEntry>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Translation used by the invariance diagnostics; `0.5·e₀` if absent.
    #[serde(default)]
    pub translation: Option<Vec<f64>>,
    /// Angle of the plane rotation in the `(e₀, e₁)` plane; in d = 1 the
    /// rotation is the reflection `y ↦ -y`.
    #[serde(default = "default_rotation_angle")]
    pub rotation_angle: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ScalingExperiment {
    /// Free field with the given corpus and defaults elsewhere.
    pub fn free(dim: usize, mass: f64, k_list: Vec<usize>, corpus: Vec<CorpusEntry>) -> Self {
        Self {
            dim,
            mass,
            cutoff_factor: default_cutoff_factor(),
            min_cutoff: None,
            k_list,
            interaction: InteractionSpec::free(),
            corpus,
            samples: default_samples(),
            seed: 0,
            translation: None,
            rotation_angle: default_rotation_angle(),
            tolerances: Tolerances::default(),
        }
    }

    /// Checks every field; messages name the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::InvalidArgument(format!("{key}: {msg}")));
        if check_dim(self.dim).is_err() {
            return bad("dim", format!("must be 1 or 2, got {}", self.dim));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return bad("mass", format!("must be positive, got {}", self.mass));
        }
        if self.cutoff_factor < 4 {
            return bad("cutoff_factor", format!("must be at least 4, got {}", self.cutoff_factor));
        }
        if let Some(m) = self.min_cutoff.filter(|m| *m < 2) {
            return bad("min_cutoff", format!("must be at least 2, got {m}"));
        }
        if self.k_list.is_empty() || self.k_list[0] == 0 || self.k_list.windows(2).any(|w| w[1] <= w[0]) {
            return bad("k_list", "must be positive and strictly increasing".into());
        }
        if let Err(e) = self.interaction.validate() {
            return bad("interaction", e.to_string());
        }
        if self.corpus.is_empty() {
            return bad("corpus", "must not be empty".into());
        }
        for (i, entry) in self.corpus.iter().enumerate() {
            if entry.f.dim() != self.dim {
                return bad(&format!("corpus[{i}].f"), format!("has dimension {}", entry.f.dim()));
            }
            if self.corpus[..i].iter().any(|e| e.id == entry.id) {
                return bad(&format!("corpus[{i}].id"), format!("duplicate id {:?}", entry.id));
            }
        }
        if !self.interaction.is_free() && self.samples < crate::sampler::MIN_ENSEMBLE_SIZE {
            return bad(
                "samples",
                format!("must be at least {}, got {}", crate::sampler::MIN_ENSEMBLE_SIZE, self.samples),
            );
        }
        if let Some(t) = &self.translation {
            if t.len() != self.dim || t.iter().any(|v| !v.is_finite()) {
                return bad("translation", format!("must be a finite {}-vector", self.dim));
            }
        }
        if !self.rotation_angle.is_finite() {
            return bad("rotation_angle", "must be finite".into());
        }
        let t = &self.tolerances;
        for (key, v) in [
            ("tolerances.lift_residual", t.lift_residual),
            ("tolerances.free_field", t.free_field),
            ("tolerances.cauchy", t.cauchy),
            ("tolerances.rotation", t.rotation),
            ("tolerances.rp", t.rp),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(key, format!("must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn cutoff(&self, k: usize) -> usize {
        self.min_cutoff
            .unwrap_or_else(|| default_min_cutoff(self.dim))
            .max(self.cutoff_factor * k)
    }

    pub fn is_gaussian(&self) -> bool {
        self.interaction.is_free()
    }

    pub fn translation(&self) -> Vec<f64> {
        self.translation.clone().unwrap_or_else(|| {
            let mut t = vec![0.0; self.dim];
            t[0] = 0.5;
            t
        })
    }

    /// Row-major `d × d` orthogonal matrix of the configured rotation.
    pub fn rotation(&self) -> Vec<f64> {
        plane_rotation(self.dim, self.rotation_angle)
    }

    /// Seed of the ensemble at scale `k`.
    pub fn seed_for(&self, k: usize) -> u64 {
        self.seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
    }
}

/// Rotation by `angle` in the `(e₀, e₁)` plane, or `y ↦ -y` on ℝ¹.
pub fn plane_rotation(dim: usize, angle: f64) -> Vec<f64> {
    match dim {
        1 => vec![-1.0],
        _ => {
            let (s, c) = angle.sin_cos();
            vec![c, -s, s, c]
        }
    }
}

/// Everything needed to evaluate `S^k` at one scale.
pub struct ScaleContext {
    k: usize,
    mass: f64,
    covariance: ScaledCovariance,
    operator: Operator,
    pipeline: ConformalPipeline,
    mollifier: MollifierFamily,
    ensemble: Option<WeightedEnsemble>,
    moments: Option<DensityMoments>,
}

/// `|S(a) - S(b)|` with its stderr.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Difference {
    pub value: f64,
    pub stderr: f64,
}

impl ScaleContext {
    /// Deterministic context for the Gaussian measure with covariance
    /// `C̃_{S,k}`.
    pub fn gaussian(dim: usize, mass: f64, k: usize, cutoff: usize) -> Result<Self> {
        Self::build(dim, mass, k, cutoff, DEFAULT_RESIDUAL_CAP)
    }

    fn build(dim: usize, mass: f64, k: usize, cutoff: usize, residual_cap: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("scale index k must be positive".into()));
        }
        let grid = SphereGrid::for_cutoff(dim, cutoff + 1)?;
        let covariance = scaled_covariance(k as f64, mass, dim, cutoff, &grid)?;
        let operator = Operator::Dense(covariance.operator.clone());
        let pipeline = ConformalPipeline::new(k as f64, dim, cutoff)?.with_residual_cap(residual_cap);
        let mollifier = build_mollifier(k, dim, cutoff)?;
        Ok(Self {
            k,
            mass,
            covariance,
            operator,
            pipeline,
            mollifier,
            ensemble: None,
            moments: None,
        })
    }

    /// Context at scale `k`; interacting experiments draw their ensemble
    /// here.
    pub fn new(experiment: &ScalingExperiment, k: usize) -> Result<Self> {
        experiment.validate()?;
        let cutoff = experiment.cutoff(k);
        let mut ctx = Self::build(
            experiment.dim,
            experiment.mass,
            k,
            cutoff,
            experiment.tolerances.lift_residual,
        )?;
        if !experiment.is_gaussian() {
            ctx.draw_ensemble(&experiment.interaction, experiment.samples, experiment.seed_for(k))?;
        }
        Ok(ctx)
    }

    /// Context whose measure is always represented by `n` samples; they
    /// are plain Gaussian draws when the experiment has no interaction.
    pub fn sampled(experiment: &ScalingExperiment, k: usize, n: usize) -> Result<Self> {
        experiment.validate()?;
        let mut ctx = Self::build(
            experiment.dim,
            experiment.mass,
            k,
            experiment.cutoff(k),
            experiment.tolerances.lift_residual,
        )?;
        ctx.draw_ensemble(&experiment.interaction, n, experiment.seed_for(k))?;
        Ok(ctx)
    }

    /// Replaces the measure by `ρ_k μ_{C̃}` estimated from `n` samples.
    pub fn draw_ensemble(&mut self, spec: &InteractionSpec, n: usize, seed: u64) -> Result<()> {
        let dim = self.dim();
        let cutoff = self.cutoff();
        let mut sampler = GaussianSampler::new(self.operator.clone(), seed)?;
        // Wick constants refer to the free covariance on the sphere.
        let free = free_covariance(self.mass, dim, cutoff)?;
        let evaluator = DensityEvaluator::new(spec, self.k, &self.mollifier, self.pipeline.grid(), &free)?;
        let ensemble = build_weighted_ensemble(&mut sampler, &evaluator, n)?;
        self.moments = Some(DensityMoments::from_log_densities(ensemble.log_weights(), None)?);
        self.ensemble = Some(ensemble);
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.pipeline.dim()
    }

    pub fn cutoff(&self) -> usize {
        self.pipeline.cutoff()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn covariance(&self) -> &ScaledCovariance {
        &self.covariance
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn pipeline(&self) -> &ConformalPipeline {
        &self.pipeline
    }

    pub fn mollifier(&self) -> &MollifierFamily {
        &self.mollifier
    }

    pub fn ensemble(&self) -> Option<&WeightedEnsemble> {
        self.ensemble.as_ref()
    }

    pub fn moments(&self) -> Option<&DensityMoments> {
        self.moments.as_ref()
    }

    pub fn is_deterministic(&self) -> bool {
        self.ensemble.is_none()
    }

    /// `K` with `|E_{μ_k}[Ψ]| ≤ K ‖Ψ‖_{L²(μ_C)}`; one for the Gaussian
    /// measure.
    pub fn domination_constant(&self) -> f64 {
        self.moments.as_ref().map_or(1.0, DensityMoments::domination_constant)
    }

    /// Lift at this scale, enforcing the residual cap.
    pub fn lift(&self, f: &dyn PlaneFunction) -> Result<Lift> {
        self.pipeline.lift(f)
    }

    /// `S(u₁ + i u₂)` on the sphere.
    pub fn functional(&self, u1: &SphereField, u2: Option<&SphereField>) -> Result<CharFuncEstimate> {
        match &self.ensemble {
            Some(e) => e.char_functional(u1, u2),
            None => Ok(CharFuncEstimate {
                value: gaussian_char_exact(&self.operator, u1, u2)?,
                stderr: 0.0,
                n_samples: 0,
                ess: 0.0,
            }),
        }
    }

    /// `|S(a) - S(b)|`, on common random numbers when sampled.
    pub fn difference(&self, a: &SphereField, b: &SphereField) -> Result<Difference> {
        match &self.ensemble {
            Some(e) => {
                let (diff, stderr) = e.weighted_mean(|phi| {
                    let (x, y) = (pair_field(phi, a)?, pair_field(phi, b)?);
                    Ok(Complex64::new(0.0, x).exp() - Complex64::new(0.0, y).exp())
                })?;
                Ok(Difference {
                    value: diff.norm(),
                    stderr,
                })
            }
            None => {
                let sa = gaussian_char_exact(&self.operator, a, None)?;
                let sb = gaussian_char_exact(&self.operator, b, None)?;
                Ok(Difference {
                    value: (sa - sb).norm(),
                    stderr: 0.0,
                })
            }
        }
    }

    /// Relative gap between `‖C̃^{1/2} lift f‖` and `‖(Δ + m²)^{-1/2} f‖`.
    pub fn free_field_residual(&self, f: &dyn PlaneFunction) -> Result<f64> {
        let target = free_norm_sq(f, self.mass).sqrt();
        if f.norm_sq() == 0.0 {
            return Ok(0.0);
        }
        let u = self.pipeline.lift_unchecked(f)?.field;
        let root = operator_sqrt(&self.operator)?;
        let left = root.apply(&u)?.norm();
        Ok((left - target).abs() / target)
    }
}

/// `S^k(f)` with the closed-form Gaussian value when the measure is
/// Gaussian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaledValue {
    pub estimate: CharFuncEstimate,
    pub exact_gaussian: Option<Complex64>,
    pub lift_residual: f64,
}

pub fn scaled_char_functional(ctx: &ScaleContext, f: &PlaneTestFunction) -> Result<ScaledValue> {
    let lift = ctx.lift(f)?;
    let estimate = ctx.functional(&lift.field, None)?;
    Ok(ScaledValue {
        estimate,
        exact_gaussian: ctx.is_deterministic().then_some(estimate.value),
        lift_residual: lift.residual,
    })
}

/// Relative difference of the two sides of the free-field transfer
/// identity at scale `k` and cutoff `L`.
pub fn free_field_identity_residual(k: f64, f: &dyn PlaneFunction, mass: f64, dim: usize, cutoff: usize) -> Result<f64> {
    if f.dim() != dim {
        return Err(Error::Mismatch(format!("{}-d function in d = {dim}", f.dim())));
    }
    if f.norm_sq() == 0.0 {
        return Ok(0.0);
    }
    let grid = SphereGrid::for_cutoff(dim, cutoff + 1)?;
    let cov = scaled_covariance(k, mass, dim, cutoff, &grid)?;
    let root = operator_sqrt(&Operator::Dense(cov.operator))?;
    let u = ConformalPipeline::new(k, dim, cutoff)?.lift_unchecked(f)?.field;
    let left = root.apply(&u)?.norm();
    let right = free_norm_sq(f, mass).sqrt();
    Ok((left - right).abs() / right)
}

/// The sphere action `u ↦ u ∘ g_k(T)`, the counterpart of `f ↦ f(· + T)`.
fn sphere_translate(ctx: &ScaleContext, u: &SphereField, translation: &[f64]) -> Result<SphereField> {
    let g = rotation_g_k(translation, ctx.k as f64)?;
    apply_isometry(u, &g.inverse(), ctx.pipeline.grid())
}

/// `‖T*_{S,k} lift f - lift T*_E f‖` in L²(Sᵈ).
pub fn commutator_norm(ctx: &ScaleContext, f: &PlaneTestFunction, translation: &[f64]) -> Result<f64> {
    if translation.len() != ctx.dim() {
        return Err(Error::Mismatch("translation dimension".into()));
    }
    let u = ctx.lift(f)?.field;
    let moved = sphere_translate(ctx, &u, translation)?;
    let lifted = ctx.lift(&f.translated(translation))?.field;
    Ok(moved.sub(&lifted)?.norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InvarianceErrors {
    /// `|S(T*_{S,k} lift f) - S(lift T*_E f)|`.
    pub translation_a: Difference,
    /// `|S(T*_{S,k} lift f) - S(lift f)|`.
    pub translation_b: Difference,
    /// `|S^k(f ∘ R⁻¹) - S^k(f)|`.
    pub rotation: Difference,
    pub commutator: f64,
}

/// Translation and rotation errors of `S^k` at `f`; `rotation` is a
/// row-major orthogonal `d × d` matrix.
pub fn invariance_errors(
    ctx: &ScaleContext,
    f: &PlaneTestFunction,
    translation: &[f64],
    rotation: &[f64],
) -> Result<InvarianceErrors> {
    let d = ctx.dim();
    if translation.len() != d || rotation.len() != d * d {
        return Err(Error::Mismatch("translation or rotation dimension".into()));
    }
    let u = ctx.lift(f)?.field;
    let moved = sphere_translate(ctx, &u, translation)?;
    let lifted = ctx.lift(&f.translated(translation))?.field;
    let rotated = ctx.lift(&f.rotated(rotation))?.field;
    Ok(InvarianceErrors {
        translation_a: ctx.difference(&moved, &lifted)?,
        translation_b: ctx.difference(&moved, &u)?,
        rotation: ctx.difference(&rotated, &u)?,
        commutator: moved.sub(&lifted)?.norm(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Equicontinuity {
    pub empirical: Difference,
    pub bound: f64,
    pub domination: f64,
    /// `‖C̃^{1/2}‖`.
    pub k3: f64,
    pub pass: bool,
}

/// `|S^k(f) - S^k(g)|` against `K √(2(1 - exp(-½ K₃² ‖f - g‖²)))`.
///
/// The square root comes from Cauchy-Schwarz applied to
/// `E|e^{iφ(u)} - e^{iφ(v)}|²`; without it the bound is quadratic in
/// `‖f - g‖` and fails for nearby test functions.
pub fn equicontinuity_modulus(ctx: &ScaleContext, f: &PlaneTestFunction, g: &PlaneTestFunction) -> Result<Equicontinuity> {
    let k3 = ctx.covariance.max_eigenvalue.max(0.0).sqrt();
    let domination = ctx.domination_constant();
    if f == g {
        return Ok(Equicontinuity {
            empirical: Difference { value: 0.0, stderr: 0.0 },
            bound: 0.0,
            domination,
            k3,
            pass: true,
        });
    }
    let dist_sq = f.minus(g)?.norm_sq().max(0.0);
    let bound = domination * (2.0 * -(-0.5 * k3 * k3 * dist_sq).exp_m1()).sqrt();
    let empirical = ctx.difference(&ctx.lift(f)?.field, &ctx.lift(g)?.field)?;
    Ok(Equicontinuity {
        pass: empirical.value <= bound + 3.0 * empirical.stderr,
        empirical,
        bound,
        domination,
        k3,
    })
}

/// Outcome of a reflection-positivity check of `S^k`.
#[derive(Clone, Debug)]
pub struct RpLimitCheck {
    pub gram: RpGram,
    /// Jackknife stderr of the smallest eigenvalue; zero when exact.
    pub stderr: f64,
    /// Required time distance of every bump from the hyperplane.
    pub margin: f64,
    pub pass: bool,
}

/// Extra time margin `w_k / k` from the mollifier's reach when the measure
/// is sampled; the Gaussian functional involves no mollifier.
pub fn mollifier_reach(ctx: &ScaleContext) -> f64 {
    if ctx.is_deterministic() {
        0.0
    } else {
        ctx.mollifier.effective_width() / ctx.k as f64
    }
}

/// Required time distance of bump centres of width `s` from the
/// hyperplane: `6s` plus the mollifier's reach.
pub fn rp_margin(ctx: &ScaleContext, width: f64) -> f64 {
    SUPPORT_RADII * width + mollifier_reach(ctx)
}

fn widest(f: &PlaneTestFunction) -> f64 {
    f.terms().iter().map(|t| t.width).fold(0.0, f64::max)
}

/// Gram matrix `S^k(f_i - Θ f_j)` with the plane time reflection `Θ`.
pub fn rp_limit_check(ctx: &ScaleContext, bumps: &[PlaneTestFunction], tol: f64) -> Result<RpLimitCheck> {
    if bumps.is_empty() {
        return Err(Error::InvalidArgument("no test functions".into()));
    }
    let theta = ReflectionTheta::new(ctx.dim())?;
    let width = bumps.iter().map(widest).fold(0.0, f64::max);
    let margin = rp_margin(ctx, width);
    for (index, f) in bumps.iter().enumerate() {
        f.support_check().map_err(|reason| Error::SupportViolation { index, reason })?;
        let start = f.min_time_with_margin(0.0);
        if start < margin {
            return Err(Error::SupportViolation {
                index,
                reason: format!("closest centre at time {start:.3}, margin is {margin:.3}"),
            });
        }
    }
    let n = bumps.len();
    let mut lifts = Vec::with_capacity(n * n);
    for fi in bumps {
        for fj in bumps {
            lifts.push(ctx.lift(&fi.reflected_difference(fj, &theta)?)?.field);
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    let Some(ensemble) = &ctx.ensemble else {
        let mut raw = DMatrix::from_element(n, n, zero);
        for (idx, u) in lifts.iter().enumerate() {
            raw[(idx / n, idx % n)] = gaussian_char_exact(&ctx.operator, u, None)?;
        }
        let gram = gram_verdict(raw, tol);
        return Ok(RpLimitCheck {
            pass: gram.pass,
            gram,
            stderr: 0.0,
            margin,
        });
    };

    ensemble.check_ess(crate::sampler::DEFAULT_ESS_FLOOR)?;
    let mut raw = DMatrix::from_element(n, n, zero);
    let mut replicates: Vec<DMatrix<Complex64>> = Vec::new();
    for (idx, u) in lifts.iter().enumerate() {
        let values: Vec<Complex64> = ensemble
            .fields()
            .iter()
            .map(|phi| pair_field(phi, u).map(|x| Complex64::new(0.0, x).exp()))
            .collect::<Result<_>>()?;
        let (value, leave_out) = weighted_mean_leave_out(&values, ensemble.weights());
        raw[(idx / n, idx % n)] = value;
        if replicates.is_empty() {
            replicates = vec![DMatrix::from_element(n, n, zero); leave_out.len()];
        }
        for (m, v) in replicates.iter_mut().zip(leave_out) {
            m[(idx / n, idx % n)] = v;
        }
    }
    let replicate_min: Vec<f64> = replicates
        .into_iter()
        .map(|m| SymmetricEigen::new((&m + m.adjoint()).map(|v| v * 0.5)).eigenvalues.min())
        .collect();
    let stderr = jackknife_stderr(&replicate_min);
    let gram = gram_verdict(raw, tol);
    Ok(RpLimitCheck {
        pass: gram.min_eigenvalue >= -3.0 * stderr,
        gram,
        stderr,
        margin,
    })
}

/// Four bumps of width `s` whose centres sit at least `6s + reach` past
/// the hyperplane: a 2 × 2 array in d = 2, a row in d = 1.
pub fn positive_time_bumps(dim: usize, width: f64, reach: f64) -> Result<Vec<PlaneTestFunction>> {
    let t0 = reach + SUPPORT_RADII * width + 0.05;
    let centers: Vec<Vec<f64>> = match dim {
        1 => (0..4).map(|i| vec![t0 + 0.3 * i as f64]).collect(),
        _ => [(0.0, -0.5), (0.0, 0.5), (0.5, -0.5), (0.5, 0.5)]
            .iter()
            .map(|(dt, y)| vec![t0 + dt, *y])
            .collect(),
    };
    centers
        .into_iter()
        .map(|c| {
            PlaneTestFunction::new(
                dim,
                vec![GaussianBump {
                    amplitude: 1.0,
                    center: c,
                    width,
                }],
            )
        })
        .collect()
}

/// Outcome of the growth bound `|S^{k,ℂ}(f)| ≤ K₁ e^{K₂‖f‖²}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticityCheck {
    pub k1: f64,
    pub k2: f64,
    /// Largest `|S| / bound` over the corpus.
    pub max_ratio: f64,
    /// Entries with `|S| - 3·stderr` above the bound.
    pub violations: usize,
    pub n: usize,
}

/// Safety factor on `½‖C̃‖` in the fitted growth constant.
pub const ANALYTICITY_SAFETY: f64 = 1.5;

/// Checks the growth bound over complexified test functions
/// `f₁ + i f₂`, with `K₂ = 1.5 · ½‖C̃‖` and `K₁` the domination constant.
pub fn analyticity_bound_check(
    ctx: &ScaleContext,
    corpus: &[(PlaneTestFunction, PlaneTestFunction)],
) -> Result<AnalyticityCheck> {
    let k1 = ctx.domination_constant();
    let k2 = ANALYTICITY_SAFETY * 0.5 * ctx.covariance.max_eigenvalue;
    let mut max_ratio: f64 = 0.0;
    let mut violations = 0;
    for (f1, f2) in corpus {
        let u1 = ctx.lift(f1)?.field;
        let u2 = ctx.lift(f2)?.field;
        let s = ctx.functional(&u1, Some(&u2))?;
        let bound = k1 * (k2 * (f1.norm_sq() + f2.norm_sq())).exp();
        max_ratio = max_ratio.max(s.value.norm() / bound);
        if s.value.norm() - 3.0 * s.stderr > bound {
            violations += 1;
        }
    }
    Ok(AnalyticityCheck {
        k1,
        k2,
        max_ratio,
        violations,
        n: corpus.len(),
    })
}

/// Weighted fourth cumulant of `φ(lift f)` with jackknife stderr; exactly
/// zero for the Gaussian measure.
pub fn fourth_cumulant(ctx: &ScaleContext, f: &PlaneTestFunction) -> Result<(f64, f64)> {
    let Some(ensemble) = &ctx.ensemble else {
        return Ok((0.0, 0.0));
    };
    let u = ctx.lift(f)?.field;
    let x: Vec<f64> = ensemble.fields().iter().map(|phi| pair_field(phi, &u)).collect::<Result<_>>()?;
    let moment = |p: i32| {
        let v: Vec<Complex64> = x.iter().map(|xi| Complex64::new(xi.powi(p), 0.0)).collect();
        let (m, reps) = weighted_mean_leave_out(&v, ensemble.weights());
        (m.re, reps.into_iter().map(|r| r.re).collect::<Vec<_>>())
    };
    let kappa = |m1: f64, m2: f64, m3: f64, m4: f64| {
        m4 - 4.0 * m3 * m1 - 3.0 * m2 * m2 + 12.0 * m2 * m1 * m1 - 6.0 * m1.powi(4)
    };
    let (m1, r1) = moment(1);
    let (m2, r2) = moment(2);
    let (m3, r3) = moment(3);
    let (m4, r4) = moment(4);
    let reps: Vec<f64> = (0..r1.len()).map(|i| kappa(r1[i], r2[i], r3[i], r4[i])).collect();
    Ok((kappa(m1, m2, m3, m4), jackknife_stderr(&reps)))
}

#[cfg(test)]
mod tests;
