use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::ExperimentConfig;
use super::emit::Record;
use crate::conformal::{apply_isometry, Rotation};
use crate::covariance::{
    conjugation_drift, free_covariance, rp_gram_check, rp_operator_check, Operator, ReflectionTheta, SphereProbe, RP_TOL,
};
use crate::error::Result;
use crate::harmonics::{basis_len, SphereField, SphereGrid};
use crate::interaction::{c_k_diagonal, wick_power};
use crate::mollifier::{build_mollifier, resolving_cutoff};
use crate::sampler::{gaussian_char_exact, wick_moments, write_ensemble, DEFAULT_ESS_FLOOR};
use crate::scaling_limit::{
    convergence_report, invariance_errors, invariance_verdicts, mollifier_reach, positive_time_bumps, rp_limit_check,
    suite_verdict as verdict, ScaleContext, SuiteVerdict,
};

/// Records, suite verdicts and any extra files of one command.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub verdicts: Vec<SuiteVerdict>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Margins of "each value is below the previous one".
fn decreasing(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[0] - w[1]).collect()
}

/// Tolerance of the exact algebraic and commutation identities.
const IDENTITY_TOL: f64 = 1e-10;

pub fn sample(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let e = &cfg.experiment;
    let mut out = Outcome::default();
    let mut ess_margins = Vec::new();
    for &k in &e.k_list {
        let ctx = ScaleContext::sampled(e, k, cfg.sample.n)?;
        let ensemble = ctx.ensemble().expect("sampled context has an ensemble");
        let path = out_dir.join(format!("ensemble_k{k}.txt"));
        write_ensemble(ensemble, &path)?;
        out.files.push(path.clone());
        out.files.push(path.with_extension("logw"));
        let (mean, se) = ensemble.mean_density()?;
        let ess_ok = ensemble.ess() >= DEFAULT_ESS_FLOOR;
        ess_margins.push(ensemble.ess() - DEFAULT_ESS_FLOOR);
        out.records.push(Record::exact("ess", Some(k), None, ensemble.ess(), Some(ess_ok)));
        out.records.push(Record::sampled("mean_density", Some(k), None, mean, se, None));
    }
    out.verdicts.push(verdict("ess", ess_margins));
    Ok(out)
}

pub fn charfunc(cfg: &ExperimentConfig) -> Result<Outcome> {
    let e = &cfg.experiment;
    let gaussian = e.is_gaussian();
    let mut out = Outcome::default();
    let (mut hits, mut total) = (0usize, 0usize);
    for &k in &e.k_list {
        let ctx = ScaleContext::sampled(e, k, e.samples)?;
        let ensemble = ctx.ensemble().expect("sampled context has an ensemble");
        for entry in &e.corpus {
            let u = ctx.lift(&entry.f)?.field;
            let est = ensemble.char_functional(&u, None)?;
            let id = Some(entry.id.as_str());
            let pass = if gaussian {
                let exact = gaussian_char_exact(ctx.operator(), &u, None)?;
                let ok = (est.value - exact).norm() <= 3.0 * est.stderr + 1e-12;
                hits += ok as usize;
                total += 1;
                out.records.push(Record::exact("charfunc_exact", Some(k), id, exact.re, None).with_im(exact.im));
                Some(ok)
            } else {
                None
            };
            out.records
                .push(Record::sampled("charfunc", Some(k), id, est.value.re, est.stderr, pass).with_im(est.value.im));
        }
    }
    if gaussian {
        let fraction = hits as f64 / total.max(1) as f64;
        out.verdicts.push(verdict("charfunc", [fraction - cfg.charfunc.pass_fraction]));
    } else {
        // ESS below the floor aborts earlier; reaching here is a pass
        out.verdicts.push(verdict("charfunc", []));
    }
    Ok(out)
}

pub fn scaling_limit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let report = convergence_report(&cfg.experiment)?;
    let mut out = Outcome::default();
    let se = |s: f64, det: bool| (!det).then_some(s);
    for r in &report.rows {
        out.records.push(
            Record::measured("charfunc", r.k, Some(&r.f_id), r.value.re, se(r.stderr, r.deterministic), None)
                .with_im(r.value.im),
        );
    }
    for c in &report.cauchy {
        out.records.push(Record::measured(
            "cauchy",
            c.k_next,
            Some(&c.f_id),
            c.difference,
            se(c.stderr, report.deterministic),
            None,
        ));
    }
    let tol = &cfg.experiment.tolerances;
    for d in &report.diagnostics {
        let det = report.deterministic;
        for (id, r) in &d.free_field_residual {
            out.records.push(Record::exact("free_field", Some(d.k), Some(id), *r, Some(*r <= tol.free_field)));
        }
        for (id, e) in &d.invariance {
            let id = Some(id.as_str());
            out.records.push(Record::measured("translation_a", d.k, id, e.translation_a.value, se(e.translation_a.stderr, det), None));
            out.records.push(Record::measured("translation_b", d.k, id, e.translation_b.value, se(e.translation_b.stderr, det), None));
            let rot_ok = e.rotation.value <= tol.rotation + 3.0 * e.rotation.stderr;
            out.records.push(Record::measured("rotation", d.k, id, e.rotation.value, se(e.rotation.stderr, det), Some(rot_ok)));
            out.records.push(Record::exact("commutator", Some(d.k), id, e.commutator, None));
        }
        for (f, g, e) in &d.equicontinuity {
            let id = format!("{f}|{g}");
            out.records.push(Record::measured(
                "equicontinuity",
                d.k,
                Some(&id),
                e.empirical.value,
                se(e.empirical.stderr, det),
                Some(e.pass),
            ));
            out.records.push(Record::exact("equicontinuity_bound", Some(d.k), Some(&id), e.bound, None));
        }
        out.records.push(Record::measured(
            "reflection_positivity",
            d.k,
            None,
            d.rp.min_eigenvalue,
            se(d.rp.stderr, det),
            Some(d.rp.pass),
        ));
        out.records.push(Record::exact(
            "analyticity",
            Some(d.k),
            None,
            d.analyticity.max_ratio,
            Some(d.analyticity.violations == 0),
        ));
        let (kappa, kappa_se) = d.fourth_cumulant;
        out.records.push(Record::measured("fourth_cumulant", d.k, None, kappa, se(kappa_se, det), None));
    }
    out.verdicts = report.suites;
    Ok(out)
}

/// Hemisphere bump centres at least `6·0.15` from the equator.
fn sphere_probe_centers(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => [-0.5f64, -0.15, 0.2, 0.55].iter().map(|a| vec![a.cos(), a.sin()]).collect(),
        _ => vec![
            vec![0.9, 0.3, 0.3],
            vec![0.8, -0.5, 0.2],
            vec![0.85, 0.1, -0.5],
            vec![0.95, 0.0, 0.1],
        ],
    }
}

pub fn rp_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let e = &cfg.experiment;
    let o = &cfg.rp_check;
    let mut out = Outcome::default();
    let theta = ReflectionTheta::new(e.dim)?;
    let grid = SphereGrid::for_cutoff(e.dim, 2 * o.sphere_cutoff)?;
    let free = Operator::Spectral(free_covariance(e.mass, e.dim, o.sphere_cutoff)?);
    let probes: Vec<SphereProbe> = sphere_probe_centers(e.dim)
        .iter()
        .map(|c| SphereProbe::bump(&grid, o.sphere_cutoff, c, o.sphere_width))
        .collect::<Result<_>>()?;

    let op = rp_operator_check(&free, &probes, &theta, RP_TOL)?;
    for (i, v) in op.values.iter().enumerate() {
        let id = format!("probe{i}");
        out.records.push(Record::exact("sphere_operator", None, Some(&id), *v, Some(*v >= -RP_TOL)));
    }
    out.verdicts.push(verdict("sphere_operator", op.values.iter().map(|v| v + RP_TOL)));

    let gram = rp_gram_check(|u: &SphereField| gaussian_char_exact(&free, u, None), &probes, &theta, RP_TOL)?;
    out.records.push(Record::exact("sphere_gram", None, None, gram.min_eigenvalue, Some(gram.pass)));
    out.verdicts.push(verdict("sphere_gram", [gram.min_eigenvalue + RP_TOL * gram.norm]));

    let mut margins = Vec::new();
    for &k in &e.k_list {
        let ctx = ScaleContext::new(e, k)?;
        let bumps = positive_time_bumps(e.dim, o.bump_width, mollifier_reach(&ctx))?;
        let rp = rp_limit_check(&ctx, &bumps, e.tolerances.rp)?;
        let stderr = (!ctx.is_deterministic()).then_some(rp.stderr);
        out.records.push(Record::measured(
            "reflection_positivity",
            k,
            None,
            rp.gram.min_eigenvalue,
            stderr,
            Some(rp.pass),
        ));
        margins.push(match stderr {
            Some(s) => rp.gram.min_eigenvalue + 3.0 * s,
            None => rp.gram.min_eigenvalue + e.tolerances.rp * rp.gram.norm,
        });
    }
    out.verdicts.push(verdict("reflection_positivity", margins));
    Ok(out)
}

pub fn invariance(cfg: &ExperimentConfig) -> Result<Outcome> {
    let e = &cfg.experiment;
    let translation = e.translation();
    let rotation = e.rotation();
    let mut out = Outcome::default();
    let mut per_scale = Vec::new();
    let mut deterministic = true;
    for &k in &e.k_list {
        let ctx = ScaleContext::new(e, k)?;
        deterministic = ctx.is_deterministic();
        let se = |s: f64| (!deterministic).then_some(s);
        let mut errs = Vec::new();
        for entry in &e.corpus {
            let x = invariance_errors(&ctx, &entry.f, &translation, &rotation)?;
            let id = Some(entry.id.as_str());
            out.records.push(Record::measured("translation_a", k, id, x.translation_a.value, se(x.translation_a.stderr), None));
            out.records.push(Record::measured("translation_b", k, id, x.translation_b.value, se(x.translation_b.stderr), None));
            out.records.push(Record::measured("rotation", k, id, x.rotation.value, se(x.rotation.stderr), None));
            out.records.push(Record::exact("commutator", Some(k), id, x.commutator, None));
            errs.push(x);
        }
        per_scale.push(errs);
    }
    out.verdicts = invariance_verdicts(deterministic, &e.tolerances, &per_scale);

    let cutoff = cfg.invariance.drift_cutoff;
    let grid = SphereGrid::for_cutoff(e.dim, 2 * cutoff)?;
    let mut drift = Vec::new();
    for &k in &e.k_list {
        let v = conjugation_drift(k as f64, &translation, e.mass, e.dim, cutoff, &grid)?;
        out.records.push(Record::exact("drift", Some(k), None, v, None));
        drift.push(v);
    }
    out.verdicts.push(verdict("drift", decreasing(&drift)));
    Ok(out)
}

/// `:xⁿ:_c` written out by hand for `n ≤ 4`.
fn wick_closed_form(n: usize, x: f64, c: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        2 => x * x - c,
        3 => x * x * x - 3.0 * c * x,
        _ => x.powi(4) - 6.0 * c * x * x + 3.0 * c * c,
    }
}

fn evaluation_points(dim: usize, separation: f64) -> (Vec<f64>, Vec<f64>) {
    let (s, c) = separation.sin_cos();
    match dim {
        1 => (vec![1.0, 0.0], vec![c, s]),
        _ => (vec![0.0, 0.0, 1.0], vec![s, 0.0, c]),
    }
}

pub fn wick_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let e = &cfg.experiment;
    let o = &cfg.wick_check;
    let mut out = Outcome::default();
    let free = free_covariance(e.mass, e.dim, o.cutoff)?;

    let c = c_k_diagonal(&free, &build_mollifier(e.k_list[0], e.dim, o.cutoff)?)?;
    let xs: Vec<f64> = (-8..=8).map(|i| 0.25 * i as f64).collect();
    let mut algebra = Vec::new();
    for n in 0..=4 {
        let got = wick_power(&xs, n, c)?;
        let gap = xs
            .iter()
            .zip(&got)
            .map(|(x, g)| {
                let want = wick_closed_form(n, *x, c);
                (g - want).abs() / want.abs().max(1.0)
            })
            .fold(0.0, f64::max);
        let id = format!("n{n}");
        out.records.push(Record::exact("wick_algebra", Some(e.k_list[0]), Some(&id), gap, Some(gap <= IDENTITY_TOL)));
        algebra.push(IDENTITY_TOL - gap);
    }
    out.verdicts.push(verdict("wick_algebra", algebra));

    let (x, y) = evaluation_points(e.dim, o.separation);
    let (mut centering, mut pair) = (Vec::new(), Vec::new());
    for &k in &e.k_list {
        let a = build_mollifier(k, e.dim, o.cutoff)?;
        let m = wick_moments(&free, &a, &x, &y, e.samples, e.seed_for(k))?;
        let c_ok = m.centering.abs() <= 3.0 * m.centering_stderr;
        let p_ok = (m.pair - m.expected_pair()).abs() <= 3.0 * m.pair_stderr;
        out.records.push(Record::sampled("wick_centering", Some(k), None, m.centering, m.centering_stderr, Some(c_ok)));
        out.records.push(Record::sampled("wick_pair", Some(k), None, m.pair, m.pair_stderr, Some(p_ok)));
        out.records.push(Record::exact("wick_pair_expected", Some(k), None, m.expected_pair(), None));
        centering.push(3.0 * m.centering_stderr - m.centering.abs());
        pair.push(3.0 * m.pair_stderr - (m.pair - m.expected_pair()).abs());
    }
    out.verdicts.push(verdict("wick_centering", centering));
    out.verdicts.push(verdict("wick_pair", pair));
    Ok(out)
}

/// Fixed band-limited probe with decaying coefficients up to degree 3.
fn strong_convergence_probe(dim: usize) -> Result<SphereField> {
    let n = basis_len(dim, 3);
    SphereField::from_coeffs(dim, 3, (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect())
}

fn random_rotation(dim: usize, rng: &mut ChaCha8Rng) -> Result<Rotation> {
    let axis: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
    let angle = rng.random_range(0.0..2.0 * PI);
    Rotation::from_axis_angle(dim, &axis, angle)
}

pub fn mollifier_info(cfg: &ExperimentConfig) -> Result<Outcome> {
    let e = &cfg.experiment;
    let o = &cfg.mollifier_info;
    let mut out = Outcome::default();
    let probe = strong_convergence_probe(e.dim)?;
    let probe_grid = SphereGrid::for_cutoff(e.dim, o.probe_cutoff)?;
    let (mut trace_margins, mut commutation_margins) = (Vec::new(), Vec::new());
    let (mut k_width, mut strong) = (Vec::new(), Vec::new());
    for &k in &e.k_list {
        let cutoff = e.cutoff(k);
        let a = build_mollifier(k, e.dim, cutoff)?;
        let diag = a.diagnostics(&SphereGrid::for_cutoff(e.dim, cutoff)?)?;
        let identity_gap = (diag.trace - crate::harmonics::sphere_volume(e.dim) * diag.diagonal).abs() / diag.trace;
        let trace_ok = identity_gap <= IDENTITY_TOL && diag.diagonal_spread <= IDENTITY_TOL * diag.diagonal;
        out.records.push(Record::exact("trace", Some(k), None, diag.trace, None));
        out.records.push(Record::exact("trace_identity", Some(k), None, identity_gap, Some(trace_ok)));
        trace_margins.push(IDENTITY_TOL - identity_gap.max(diag.diagonal_spread / diag.diagonal));
        // the width needs the untruncated kernel; at cutoff(k) it rings
        let width = build_mollifier(k, e.dim, resolving_cutoff(k, e.dim))?.effective_width();
        out.records.push(Record::exact("width", Some(k), None, width, None));
        out.records.push(Record::exact("k_width", Some(k), None, k as f64 * width, None));
        k_width.push(k as f64 * width);

        // commutation with random rotations on random band-limited fields
        let small = build_mollifier(k, e.dim, o.probe_cutoff)?;
        let mut rng = ChaCha8Rng::seed_from_u64(e.seed_for(k) ^ 0x6d6f_6c6c);
        let mut worst: f64 = 0.0;
        for _ in 0..o.rotations {
            let rot = random_rotation(e.dim, &mut rng)?;
            let coeffs = (0..basis_len(e.dim, o.probe_cutoff)).map(|_| rng.sample(StandardNormal)).collect();
            let phi = SphereField::from_coeffs(e.dim, o.probe_cutoff, coeffs)?;
            let lhs = small.mollify(&apply_isometry(&phi, rot.isometry(), &probe_grid)?)?;
            let rhs = apply_isometry(&small.mollify(&phi)?, rot.isometry(), &probe_grid)?;
            worst = worst.max(lhs.sub(&rhs)?.norm() / phi.norm());
        }
        out.records.push(Record::exact("commutation", Some(k), None, worst, Some(worst <= IDENTITY_TOL)));
        commutation_margins.push(IDENTITY_TOL - worst);

        let smoothed = build_mollifier(k, e.dim, 3)?.mollify(&probe)?;
        let residual = smoothed.sub(&probe)?.norm() / probe.norm();
        out.records.push(Record::exact("strong_residual", Some(k), None, residual, None));
        strong.push(residual);
    }
    out.verdicts.push(verdict("trace_identity", trace_margins));
    out.verdicts.push(verdict("commutation", commutation_margins));
    out.verdicts.push(verdict("strong_convergence", decreasing(&strong)));
    out.verdicts.push(verdict("width_monotone", decreasing(&k_width)));
    Ok(out)
}
