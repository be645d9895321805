use std::ffi::CString;

use super::*;

fn last_error() -> String {
    let p = qftlab_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

const CONFIG: &str = r#"{
    "experiment": {
        "dim": 1, "mass": 1.0, "k_list": [1, 2], "samples": 200,
        "corpus": [{"id": "a", "f": {"dim": 1, "terms": [{"amplitude": 1.0, "center": [0.0], "width": 1.0}]}}]
    },
    "wick_check": {"cutoff": 8}
}"#;

#[test]
fn field_round_trip_and_evaluation() {
    let n = qftlab_basis_len(2, 2);
    assert_eq!(n, 9);
    assert_eq!(qftlab_basis_len(3, 2), 0);
    let mut coeffs = vec![0.0; n];
    coeffs[0] = 1.0;
    let mut field = ptr::null_mut();
    unsafe {
        assert_eq!(qftlab_field_new(2, 2, coeffs.as_ptr(), n, &mut field), QftlabStatus::Ok);
        let mut value = 0.0;
        let point = [0.0, 0.6, 0.8];
        assert_eq!(qftlab_field_eval(field, point.as_ptr(), 3, &mut value), QftlabStatus::Ok);
        // the constant harmonic is 1/√(4π)
        assert!((value - 1.0 / (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);

        let mut back = vec![0.0; n];
        let mut written = 0;
        assert_eq!(qftlab_field_coeffs(field, back.as_mut_ptr(), n, &mut written), QftlabStatus::Ok);
        assert_eq!((written, back), (n, coeffs));
        qftlab_field_free(field);
    }
}

#[test]
fn wrong_coefficient_count_sets_the_last_error() {
    qftlab_clear_error();
    let coeffs = [1.0; 4];
    let mut field = ptr::null_mut();
    let status = unsafe { qftlab_field_new(2, 2, coeffs.as_ptr(), 4, &mut field) };
    assert_eq!(status, QftlabStatus::InvalidArgument);
    assert!(field.is_null());
    assert!(!last_error().is_empty());
    qftlab_clear_error();
    assert!(qftlab_last_error().is_null());
}

#[test]
fn null_pointers_are_reported_not_dereferenced() {
    let mut value = 0.0;
    let status = unsafe { qftlab_field_eval(ptr::null(), ptr::null(), 0, &mut value) };
    assert_eq!(status, QftlabStatus::NullPointer);
    assert!(last_error().contains("field"));
    let status = unsafe { qftlab_config_from_json(ptr::null(), ptr::null_mut()) };
    assert_eq!(status, QftlabStatus::NullPointer);
    unsafe {
        qftlab_field_free(ptr::null_mut());
        qftlab_config_free(ptr::null_mut());
        qftlab_mollifier_free(ptr::null_mut());
    }
}

#[test]
fn mollifier_preserves_constants_and_matches_the_core() {
    let n = qftlab_basis_len(1, 4);
    let coeffs: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
    unsafe {
        let (mut m, mut f, mut g) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(qftlab_mollifier_new(2, 1, 4, &mut m), QftlabStatus::Ok);
        assert_eq!(qftlab_field_new(1, 4, coeffs.as_ptr(), n, &mut f), QftlabStatus::Ok);
        assert_eq!(qftlab_mollify(m, f, &mut g), QftlabStatus::Ok);
        let want = build_mollifier(2, 1, 4)
            .unwrap()
            .mollify(&SphereField::from_coeffs(1, 4, coeffs.clone()).unwrap())
            .unwrap();
        assert_eq!((*g).0, want);
        assert_eq!((*g).0.coeffs()[0], coeffs[0]);
        qftlab_field_free(g);
        qftlab_field_free(f);
        qftlab_mollifier_free(m);
    }
}

#[test]
fn free_char_functional_of_zero_is_one() {
    let n = qftlab_basis_len(2, 3);
    let zeros = vec![0.0; n];
    let (mut re, mut im) = (0.0, 1.0);
    unsafe {
        let mut f = ptr::null_mut();
        qftlab_field_new(2, 3, zeros.as_ptr(), n, &mut f);
        assert_eq!(qftlab_free_char_functional(1.0, f, &mut re, &mut im), QftlabStatus::Ok);
        assert_eq!((re, im), (1.0, 0.0));
        assert_eq!(qftlab_free_char_functional(-1.0, f, &mut re, &mut im), QftlabStatus::InvalidArgument);
        qftlab_field_free(f);
    }
}

#[test]
fn wick_square_subtracts_the_variance() {
    let xs = [0.0, 1.0, 2.0];
    let mut out = [0.0; 3];
    let status = unsafe { qftlab_wick_power(xs.as_ptr(), 3, 2, 0.5, out.as_mut_ptr()) };
    assert_eq!(status, QftlabStatus::Ok);
    assert_eq!(out, [-0.5, 0.5, 3.5]);
}

#[test]
fn config_runs_a_command_and_rejects_unknown_ones() {
    let json = CString::new(CONFIG).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        let mut config = ptr::null_mut();
        assert_eq!(qftlab_config_from_json(json.as_ptr(), &mut config), QftlabStatus::Ok);
        let mut passed = -1;
        let cmd = CString::new("wick-check").unwrap();
        assert_eq!(qftlab_run(config, cmd.as_ptr(), out_dir.as_ptr(), &mut passed), QftlabStatus::Ok);
        assert_eq!(passed, 1);
        assert!(dir.path().join("report.jsonl").is_file());

        let bogus = CString::new("teleport").unwrap();
        let status = qftlab_run(config, bogus.as_ptr(), out_dir.as_ptr(), &mut passed);
        assert_eq!(status, QftlabStatus::InvalidArgument);
        assert!(last_error().contains("teleport"));
        qftlab_config_free(config);
    }
}

#[test]
fn invalid_config_names_the_key() {
    let json = CString::new(CONFIG.replace("\"mass\": 1.0", "\"mass\": 0.0")).unwrap();
    let mut config = ptr::null_mut();
    let status = unsafe { qftlab_config_from_json(json.as_ptr(), &mut config) };
    assert_eq!(status, QftlabStatus::InvalidArgument);
    assert!(config.is_null());
    assert!(last_error().contains("experiment.mass"), "{}", last_error());
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(qftlab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
