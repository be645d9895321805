use super::*;
use crate::covariance::RP_TOL;
use crate::interaction::{InteractionKind, ScalarFn};

const L: usize = 32;

fn corpus(dim: usize) -> Vec<CorpusEntry> {
    let fs = match dim {
        1 => vec![
            PlaneTestFunction::unit_bump(1).unwrap(),
            PlaneTestFunction::bump(1.0, vec![0.3], 0.7).unwrap(),
            PlaneTestFunction::bump(0.8, vec![-0.4], 1.2).unwrap(),
        ],
        _ => vec![
            PlaneTestFunction::unit_bump(2).unwrap(),
            PlaneTestFunction::bump(1.0, vec![0.3, -0.2], 0.7).unwrap(),
            PlaneTestFunction::bump(0.8, vec![-0.4, 0.5], 1.2).unwrap(),
        ],
    };
    fs.into_iter()
        .enumerate()
        .map(|(i, f)| CorpusEntry { id: format!("f{i}"), f })
        .collect()
}

fn cos_spec() -> InteractionSpec {
    InteractionSpec::new(InteractionKind::Bounded {
        f: ScalarFn::Cosine {
            amplitude: 0.1,
            frequency: 1.0,
            centered: false,
        },
        bound: 0.1,
    })
    .unwrap()
}

#[test]
fn zero_function_has_unit_functional() {
    let ctx = ScaleContext::gaussian(2, 1.0, 2, L).unwrap();
    let v = scaled_char_functional(&ctx, &PlaneTestFunction::zero(2).unwrap()).unwrap();
    assert_eq!(v.estimate.value, Complex64::new(1.0, 0.0));
    assert_eq!(v.exact_gaussian, Some(Complex64::new(1.0, 0.0)));
}

#[test]
fn gaussian_value_is_the_quadratic_form() {
    let ctx = ScaleContext::gaussian(2, 1.0, 2, L).unwrap();
    for entry in corpus(2) {
        let u = ctx.lift(&entry.f).unwrap().field;
        let expected = (-0.5 * ctx.operator().quadratic_form(&u).unwrap()).exp();
        let got = scaled_char_functional(&ctx, &entry.f).unwrap().estimate;
        assert!((got.value.re - expected).abs() < 1e-14 && got.value.im == 0.0);
        assert_eq!(got.stderr, 0.0);
    }
}

#[test]
fn gaussian_value_matches_the_plane_oracle_at_every_scale() {
    let f = PlaneTestFunction::unit_bump(2).unwrap();
    let oracle = (-0.5 * free_norm_sq(&f, 1.0)).exp();
    for k in [1, 2, 4] {
        let ctx = ScaleContext::gaussian(2, 1.0, k, L).unwrap();
        let v = scaled_char_functional(&ctx, &f).unwrap().estimate.value.re;
        assert!((v - oracle).abs() / oracle < 2e-2, "k={k}: {v} vs {oracle}");
    }
}

#[test]
fn free_field_residual_is_small_and_vanishes_at_zero() {
    for dim in [1, 2] {
        let f = PlaneTestFunction::unit_bump(dim).unwrap();
        for k in [1.0, 2.0] {
            let r = free_field_identity_residual(k, &f, 1.0, dim, 16).unwrap();
            assert!(r <= 2e-2, "d={dim} k={k}: {r}");
        }
        let zero = PlaneTestFunction::zero(dim).unwrap();
        assert_eq!(free_field_identity_residual(2.0, &zero, 1.0, dim, 16).unwrap(), 0.0);
    }
}

#[test]
fn free_field_residual_shrinks_with_the_cutoff() {
    let f = PlaneTestFunction::unit_bump(2).unwrap();
    let coarse = free_field_identity_residual(1.0, &f, 1.0, 2, 16).unwrap();
    let fine = free_field_identity_residual(1.0, &f, 1.0, 2, 32).unwrap();
    assert!(fine < coarse, "{fine} vs {coarse}");
}

#[test]
fn trivial_motion_gives_exact_zeros() {
    let ctx = ScaleContext::gaussian(2, 1.0, 2, L).unwrap();
    let f = &corpus(2)[1].f;
    let e = invariance_errors(&ctx, f, &[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(e.translation_a.value, 0.0);
    assert_eq!(e.translation_b.value, 0.0);
    assert_eq!(e.rotation.value, 0.0);
    assert_eq!(commutator_norm(&ctx, f, &[0.0, 0.0]).unwrap(), 0.0);
}

#[test]
fn trivial_motion_gives_exact_zeros_on_an_ensemble() {
    let mut ctx = ScaleContext::gaussian(1, 1.0, 2, L).unwrap();
    ctx.draw_ensemble(&cos_spec(), 200, 3).unwrap();
    let f = &corpus(1)[0].f;
    let e = invariance_errors(&ctx, f, &[0.0], &[1.0]).unwrap();
    assert_eq!((e.translation_a.value, e.translation_b.value, e.rotation.value), (0.0, 0.0, 0.0));
}

#[test]
fn gaussian_functional_is_rotation_invariant() {
    let rot = plane_rotation(2, 0.7);
    for k in [1, 2, 4] {
        let ctx = ScaleContext::gaussian(2, 1.0, k, L).unwrap();
        for entry in corpus(2) {
            let e = invariance_errors(&ctx, &entry.f, &[0.5, 0.0], &rot).unwrap();
            assert!(e.rotation.value <= 1e-6, "k={k} {}: {}", entry.id, e.rotation.value);
        }
    }
}

#[test]
fn commutator_and_translation_error_shrink_with_k() {
    let f = PlaneTestFunction::unit_bump(2).unwrap();
    let rot = plane_rotation(2, 0.7);
    let errs: Vec<InvarianceErrors> = [1, 2, 4]
        .iter()
        .map(|&k| invariance_errors(&ScaleContext::gaussian(2, 1.0, k, L).unwrap(), &f, &[0.5, 0.0], &rot).unwrap())
        .collect();
    for w in errs.windows(2) {
        assert!(w[1].commutator < w[0].commutator);
        assert!(w[1].translation_a.value < w[0].translation_a.value);
    }
}

#[test]
fn translation_error_is_bounded_by_the_commutator() {
    // |S(a) - S(b)| ≤ √(2(1 - exp(-½ ‖C̃‖ ‖a - b‖²))) for a Gaussian measure
    let rot = plane_rotation(2, 0.7);
    for k in [1, 2, 4] {
        let ctx = ScaleContext::gaussian(2, 1.0, k, L).unwrap();
        let norm = ctx.covariance().max_eigenvalue;
        for entry in corpus(2) {
            let e = invariance_errors(&ctx, &entry.f, &[0.5, 0.0], &rot).unwrap();
            let bound = (2.0 * -(-0.5 * norm * e.commutator.powi(2)).exp_m1()).sqrt();
            assert!(e.translation_a.value <= bound, "k={k}: {} > {bound}", e.translation_a.value);
        }
    }
}

#[test]
fn equicontinuity_bound_dominates() {
    for k in [1, 2, 4] {
        let ctx = ScaleContext::gaussian(2, 1.0, k, L).unwrap();
        let c = corpus(2);
        for f in &c {
            let same = equicontinuity_modulus(&ctx, &f.f, &f.f).unwrap();
            assert_eq!((same.empirical.value, same.bound), (0.0, 0.0));
            for g in &c {
                let e = equicontinuity_modulus(&ctx, &f.f, &g.f).unwrap();
                assert!(e.pass && e.empirical.value <= e.bound, "k={k}: {e:?}");
            }
        }
    }
}

#[test]
fn equicontinuity_bound_holds_on_an_ensemble() {
    let mut ctx = ScaleContext::gaussian(1, 1.0, 2, L).unwrap();
    ctx.draw_ensemble(&cos_spec(), 500, 11).unwrap();
    assert!(ctx.domination_constant() >= 1.0);
    let c = corpus(1);
    for w in c.windows(2) {
        let e = equicontinuity_modulus(&ctx, &w[0].f, &w[1].f).unwrap();
        assert!(e.pass, "{e:?}");
    }
}

#[test]
fn single_bump_gram_is_a_positive_number() {
    let ctx = ScaleContext::gaussian(2, 1.0, 2, L).unwrap();
    let bump = PlaneTestFunction::bump(1.0, vec![2.2, 0.0], 0.3).unwrap();
    let rp = rp_limit_check(&ctx, &[bump], RP_TOL).unwrap();
    assert_eq!(rp.gram.matrix.nrows(), 1);
    assert!(rp.gram.matrix[(0, 0)].re > 0.0 && rp.pass);
}

#[test]
fn gaussian_gram_is_positive_along_the_schedule() {
    let bumps = positive_time_bumps(2, 0.3, 0.0).unwrap();
    for k in [1, 2, 4] {
        let ctx = ScaleContext::gaussian(2, 1.0, k, L).unwrap();
        let rp = rp_limit_check(&ctx, &bumps, RP_TOL).unwrap();
        assert!(rp.gram.min_eigenvalue >= -RP_TOL * rp.gram.norm, "k={k}: {:?}", rp.gram.min_eigenvalue);
        assert!(rp.pass);
    }
}

#[test]
fn bumps_inside_the_margin_are_rejected() {
    let ctx = ScaleContext::gaussian(2, 1.0, 1, L).unwrap();
    let close = PlaneTestFunction::bump(1.0, vec![1.0, 0.0], 0.3).unwrap();
    assert!(matches!(
        rp_limit_check(&ctx, &[close], RP_TOL),
        Err(Error::SupportViolation { index: 0, .. })
    ));
}

#[test]
fn sampled_gram_passes_within_its_error_bars() {
    let mut ctx = ScaleContext::gaussian(1, 1.0, 2, L).unwrap();
    ctx.draw_ensemble(&cos_spec(), 1000, 5).unwrap();
    let reach = mollifier_reach(&ctx);
    assert!(reach > 0.0);
    let bumps = positive_time_bumps(1, 0.3, reach).unwrap();
    let rp = rp_limit_check(&ctx, &bumps, RP_TOL).unwrap();
    assert!(rp.stderr > 0.0);
    assert!(rp.pass, "min {} stderr {}", rp.gram.min_eigenvalue, rp.stderr);
}

#[test]
fn real_functions_stay_inside_the_unit_disc() {
    let ctx = ScaleContext::gaussian(2, 1.0, 2, L).unwrap();
    let zero = PlaneTestFunction::zero(2).unwrap();
    let pairs: Vec<_> = corpus(2).into_iter().map(|e| (e.f, zero.clone())).collect();
    let a = analyticity_bound_check(&ctx, &pairs).unwrap();
    assert_eq!(a.k1, 1.0);
    assert!(a.max_ratio <= 1.0 && a.violations == 0);
}

#[test]
fn imaginary_direction_has_the_closed_form_growth() {
    let ctx = ScaleContext::gaussian(2, 1.0, 2, L).unwrap();
    let zero = PlaneTestFunction::zero(2).unwrap();
    for entry in corpus(2) {
        let u0 = ctx.lift(&zero).unwrap().field;
        let u2 = ctx.lift(&entry.f).unwrap().field;
        let s = ctx.functional(&u0, Some(&u2)).unwrap().value;
        let expected = (0.5 * ctx.operator().quadratic_form(&u2).unwrap()).exp();
        assert!((s.re - expected).abs() < 1e-12 * expected && s.im.abs() < 1e-12 * expected);
        let a = analyticity_bound_check(&ctx, &[(zero.clone(), entry.f.clone())]).unwrap();
        assert!(a.max_ratio <= 1.0 && a.violations == 0, "{a:?}");
    }
}

#[test]
fn fourth_cumulant_vanishes_without_an_ensemble() {
    let ctx = ScaleContext::gaussian(1, 1.0, 1, L).unwrap();
    assert_eq!(fourth_cumulant(&ctx, &corpus(1)[0].f).unwrap(), (0.0, 0.0));
}

#[test]
fn validation_names_the_offending_key() {
    let mut e = ScalingExperiment::free(2, -1.0, vec![1, 2], corpus(2));
    let msg = e.validate().unwrap_err().to_string();
    assert!(msg.contains("mass"), "{msg}");
    e.mass = 1.0;
    e.k_list = vec![2, 2];
    assert!(e.validate().unwrap_err().to_string().contains("k_list"));
    e.k_list = vec![1, 2];
    e.cutoff_factor = 3;
    assert!(e.validate().unwrap_err().to_string().contains("cutoff_factor"));
    e.cutoff_factor = 8;
    e.corpus[1].id = "f0".into();
    assert!(e.validate().unwrap_err().to_string().contains("corpus[1].id"));
}

#[test]
fn experiment_round_trips_and_rejects_unknown_keys() {
    let e = ScalingExperiment::free(1, 1.0, vec![1, 2, 4], corpus(1));
    let json = serde_json::to_string(&e).unwrap();
    let back: ScalingExperiment = serde_json::from_str(&json).unwrap();
    assert_eq!(back, e);
    let mut value: serde_json::Value = serde_json::from_str(&json).unwrap();
    value["bogus"] = serde_json::json!(1);
    assert!(serde_json::from_value::<ScalingExperiment>(value).is_err());
}

#[test]
fn cutoff_schedule_outpaces_the_scale() {
    let e = ScalingExperiment::free(2, 1.0, vec![1, 2, 4, 8], corpus(2));
    assert_eq!(e.cutoff(1), 32);
    assert_eq!(e.cutoff(8), 64);
    assert_ne!(e.seed_for(1), e.seed_for(2));
}

fn small_report(dim: usize) -> ConvergenceReport {
    let mut c = corpus(dim);
    c.push(CorpusEntry {
        id: "zero".into(),
        f: PlaneTestFunction::zero(dim).unwrap(),
    });
    convergence_report(&ScalingExperiment::free(dim, 1.0, vec![1, 2], c)).unwrap()
}

#[test]
fn zero_row_of_the_report_is_trivial() {
    let report = small_report(1);
    let zero_rows: Vec<_> = report.rows.iter().filter(|r| r.f_id == "zero").collect();
    assert_eq!(zero_rows.len(), 2);
    assert!(zero_rows.iter().all(|r| r.value == Complex64::new(1.0, 0.0) && r.deterministic));
    assert!(report
        .cauchy
        .iter()
        .filter(|c| c.f_id == "zero")
        .all(|c| c.difference == 0.0));
    assert!(report.deterministic);
    assert!(report.pass, "{:?}", report.suites);
}

#[test]
fn report_is_deterministic() {
    let a = serde_json::to_string(&small_report(1)).unwrap();
    let b = serde_json::to_string(&small_report(1)).unwrap();
    assert_eq!(a, b);
}
