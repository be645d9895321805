use num_complex::Complex64;
use serde::Serialize;

use super::{
    analyticity_bound_check, equicontinuity_modulus, fourth_cumulant, invariance_errors, mollifier_reach,
    positive_time_bumps, rp_limit_check, scaled_char_functional, AnalyticityCheck, Equicontinuity, InvarianceErrors,
    ScaleContext, ScalingExperiment, Tolerances,
};
use crate::conformal::{free_norm_sq, PlaneTestFunction};
use crate::error::Result;
use crate::sampler::DensityMoments;

/// Width of the bumps in the reflection-positivity Gram matrix.
pub const RP_BUMP_WIDTH: f64 = 0.3;

/// Imaginary-part scales of the complexified corpus.
const IMAGINARY_SCALES: [f64; 2] = [0.1, 0.3];

/// `S^k(f)` for one corpus entry at one scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleRow {
    pub k: usize,
    pub cutoff: usize,
    pub f_id: String,
    pub value: Complex64,
    pub stderr: f64,
    pub deterministic: bool,
    /// `exp(-½ ⟨(Δ + m²)⁻¹ f, f⟩)`.
    pub plane_oracle: f64,
    pub lift_residual: f64,
}

/// `|S^{k'}(f) - S^k(f)|` for consecutive scales.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchyRow {
    pub f_id: String,
    pub k: usize,
    pub k_next: usize,
    pub difference: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RpSummary {
    pub min_eigenvalue: f64,
    pub norm: f64,
    pub stderr: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Everything measured at one scale besides the functional values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleDiagnostics {
    pub k: usize,
    pub cutoff: usize,
    pub ess: Option<f64>,
    pub route_gap: f64,
    pub covariance_norm: f64,
    /// Extreme values of `‖C̃^{1/2}‖` restricted to the lifted corpus.
    pub probe_sqrt_range: (f64, f64),
    pub free_field_residual: Vec<(String, f64)>,
    pub invariance: Vec<(String, InvarianceErrors)>,
    pub equicontinuity: Vec<(String, String, Equicontinuity)>,
    pub rp: RpSummary,
    pub analyticity: AnalyticityCheck,
    pub moments: Option<DensityMoments>,
    /// Exploratory; no threshold is attached.
    pub fourth_cumulant: (f64, f64),
}

/// PASS/FAIL of one suite with its worst margin (nonnegative is a pass;
/// infinite when the suite had nothing to check).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteVerdict {
    pub suite: String,
    pub pass: bool,
    pub worst_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub deterministic: bool,
    pub rows: Vec<ScaleRow>,
    pub cauchy: Vec<CauchyRow>,
    pub diagnostics: Vec<ScaleDiagnostics>,
    pub suites: Vec<SuiteVerdict>,
    pub pass: bool,
}

/// Complexified corpus `f + i a·g` with `g` the next entry (cyclically).
fn complex_corpus(experiment: &ScalingExperiment) -> Vec<(PlaneTestFunction, PlaneTestFunction)> {
    let n = experiment.corpus.len();
    let mut out = Vec::with_capacity(n * IMAGINARY_SCALES.len());
    for (i, entry) in experiment.corpus.iter().enumerate() {
        let next = &experiment.corpus[(i + 1) % n].f;
        for a in IMAGINARY_SCALES {
            out.push((entry.f.clone(), next.scaled(a)));
        }
    }
    out
}

fn diagnose(experiment: &ScalingExperiment, ctx: &ScaleContext) -> Result<ScaleDiagnostics> {
    let translation = experiment.translation();
    let rotation = experiment.rotation();
    let corpus = &experiment.corpus;

    let mut free_field_residual = Vec::new();
    let mut invariance = Vec::new();
    let mut probes = Vec::new();
    for entry in corpus {
        free_field_residual.push((entry.id.clone(), ctx.free_field_residual(&entry.f)?));
        invariance.push((entry.id.clone(), invariance_errors(ctx, &entry.f, &translation, &rotation)?));
        probes.push(ctx.lift(&entry.f)?.field);
    }
    let (lo, hi) = ctx.operator().restricted_eigenvalue_range(&probes)?;

    let mut equicontinuity = Vec::new();
    for pair in corpus.windows(2) {
        let e = equicontinuity_modulus(ctx, &pair[0].f, &pair[1].f)?;
        equicontinuity.push((pair[0].id.clone(), pair[1].id.clone(), e));
    }

    let bumps = positive_time_bumps(experiment.dim, RP_BUMP_WIDTH, mollifier_reach(ctx))?;
    let rp = rp_limit_check(ctx, &bumps, experiment.tolerances.rp)?;
    let cov = ctx.covariance();
    Ok(ScaleDiagnostics {
        k: ctx.k(),
        cutoff: ctx.cutoff(),
        ess: ctx.ensemble().map(|e| e.ess()),
        route_gap: cov.route_gap,
        covariance_norm: cov.max_eigenvalue,
        probe_sqrt_range: (lo.max(0.0).sqrt(), hi.max(0.0).sqrt()),
        free_field_residual,
        invariance,
        equicontinuity,
        rp: RpSummary {
            min_eigenvalue: rp.gram.min_eigenvalue,
            norm: rp.gram.norm,
            stderr: rp.stderr,
            margin: rp.margin,
            pass: rp.pass,
        },
        analyticity: analyticity_bound_check(ctx, &complex_corpus(experiment))?,
        moments: ctx.moments().copied(),
        fourth_cumulant: fourth_cumulant(ctx, &corpus[0].f)?,
    })
}

/// Translation and rotation verdicts from invariance errors indexed by
/// scale, then corpus entry.
///
/// With exact values the translation error and the commutator must shrink
/// from each scale to the next; sampled translation errors may instead
/// overlap within their combined error bars.
pub fn invariance_verdicts(deterministic: bool, tol: &Tolerances, per_scale: &[Vec<InvarianceErrors>]) -> Vec<SuiteVerdict> {
    let entries = per_scale.first().map_or(0, Vec::len);
    let mut translation = Vec::new();
    let mut rotation = Vec::new();
    for i in 0..entries {
        let errs: Vec<&InvarianceErrors> = per_scale.iter().map(|s| &s[i]).collect();
        for w in errs.windows(2) {
            if deterministic {
                translation.push(w[0].translation_a.value - w[1].translation_a.value);
                translation.push(w[0].commutator - w[1].commutator);
            } else {
                let b = |e: &InvarianceErrors| (e.translation_b.value, e.translation_b.stderr);
                translation.push(monotone_margin(b(w[0]), b(w[1])));
            }
        }
        rotation.extend(
            errs.iter()
                .map(|e| tol.rotation + 3.0 * e.rotation.stderr - e.rotation.value),
        );
    }
    vec![verdict("translation", translation), verdict("rotation", rotation)]
}

/// Verdict from margins where nonnegative means pass.
pub fn verdict(suite: &str, margins: impl IntoIterator<Item = f64>) -> SuiteVerdict {
    let worst = margins.into_iter().fold(f64::INFINITY, f64::min);
    SuiteVerdict {
        suite: suite.into(),
        pass: worst >= 0.0,
        worst_margin: worst,
    }
}

/// Margin of "`next` is below `prev`, or within their combined error bars".
pub(crate) fn monotone_margin(prev: (f64, f64), next: (f64, f64)) -> f64 {
    (prev.0 + prev.1) - (next.0 - next.1)
}

fn suites(experiment: &ScalingExperiment, report: &ConvergenceReport) -> Vec<SuiteVerdict> {
    let tol = &experiment.tolerances;
    let diags = &report.diagnostics;
    let mut out = Vec::new();

    let mut free = Vec::new();
    for d in diags {
        free.extend(d.free_field_residual.iter().map(|(_, r)| tol.free_field - r));
    }
    if report.deterministic {
        free.extend(
            report
                .rows
                .iter()
                .map(|r| tol.free_field - (r.value.re - r.plane_oracle).abs() / r.plane_oracle),
        );
    }
    out.push(verdict("free_field", free));

    // the last consecutive pair of every corpus entry decides
    let mut cauchy = Vec::new();
    for entry in &experiment.corpus {
        let rows: Vec<&CauchyRow> = report.cauchy.iter().filter(|c| c.f_id == entry.id).collect();
        if let Some(last) = rows.last() {
            let settled = tol.cauchy.max(3.0 * last.stderr) - last.difference;
            let shrinking = match rows.len() {
                1 => f64::NEG_INFINITY,
                n => rows[n - 2].difference - last.difference,
            };
            cauchy.push(settled.max(shrinking));
        }
    }
    out.push(verdict("cauchy", cauchy));

    let per_scale: Vec<Vec<InvarianceErrors>> = diags
        .iter()
        .map(|d| d.invariance.iter().map(|(_, e)| *e).collect())
        .collect();
    out.extend(invariance_verdicts(report.deterministic, tol, &per_scale));

    out.push(verdict(
        "reflection_positivity",
        diags.iter().map(|d| {
            if report.deterministic {
                d.rp.min_eigenvalue + tol.rp * d.rp.norm
            } else {
                d.rp.min_eigenvalue + 3.0 * d.rp.stderr
            }
        }),
    ));
    out.push(verdict(
        "equicontinuity",
        diags
            .iter()
            .flat_map(|d| d.equicontinuity.iter())
            .map(|(_, _, e)| e.bound + 3.0 * e.empirical.stderr - e.empirical.value),
    ));
    out.push(verdict(
        "analyticity",
        diags.iter().map(|d| {
            if d.analyticity.violations == 0 {
                1.0 - d.analyticity.max_ratio.min(1.0)
            } else {
                -(d.analyticity.violations as f64)
            }
        }),
    ));
    out
}

/// Runs every scale of the schedule and aggregates the diagnostics.
pub fn convergence_report(experiment: &ScalingExperiment) -> Result<ConvergenceReport> {
    experiment.validate()?;
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    for &k in &experiment.k_list {
        let ctx = ScaleContext::new(experiment, k)?;
        for entry in &experiment.corpus {
            let v = scaled_char_functional(&ctx, &entry.f)?;
            rows.push(ScaleRow {
                k,
                cutoff: ctx.cutoff(),
                f_id: entry.id.clone(),
                value: v.estimate.value,
                stderr: v.estimate.stderr,
                deterministic: ctx.is_deterministic(),
                plane_oracle: (-0.5 * free_norm_sq(&entry.f, experiment.mass)).exp(),
                lift_residual: v.lift_residual,
            });
        }
        diagnostics.push(diagnose(experiment, &ctx)?);
    }

    let n = experiment.corpus.len();
    let mut cauchy = Vec::new();
    for (i, entry) in experiment.corpus.iter().enumerate() {
        for w in experiment.k_list.windows(2).enumerate() {
            let (s, (a, b)) = (w.0, (&rows[w.0 * n + i], &rows[(w.0 + 1) * n + i]));
            debug_assert_eq!((a.k, b.k), (experiment.k_list[s], experiment.k_list[s + 1]));
            cauchy.push(CauchyRow {
                f_id: entry.id.clone(),
                k: a.k,
                k_next: b.k,
                difference: (b.value - a.value).norm(),
                stderr: a.stderr.hypot(b.stderr),
            });
        }
    }

    let mut report = ConvergenceReport {
        deterministic: experiment.is_gaussian(),
        rows,
        cauchy,
        diagnostics,
        suites: Vec::new(),
        pass: false,
    };
    report.suites = suites(experiment, &report);
    report.pass = report.suites.iter().all(|s| s.pass);
    Ok(report)
}
