use std::collections::BTreeSet;
use std::path::PathBuf;

use super::*;

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

/// Small free d = 1 configuration that every command can run quickly.
const SMALL: &str = r#"{
    "experiment": {
        "dim": 1, "mass": 1.0, "k_list": [1, 2], "samples": 400, "seed": 3,
        "corpus": [
            {"id": "a", "f": {"dim": 1, "terms": [{"amplitude": 1.0, "center": [0.0], "width": 1.0}]}},
            {"id": "b", "f": {"dim": 1, "terms": [{"amplitude": 0.5, "center": [0.3], "width": 0.7}]}}
        ]
    },
    "wick_check": {"cutoff": 8},
    "mollifier_info": {"rotations": 2, "probe_cutoff": 6}
}"#;

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn bundled_free_config_passes_with_a_row_per_scale() {
    let out = tempfile::tempdir().unwrap();
    let options = RunOptions {
        config: bundled("free_field_reference.json"),
        out_dir: out.path().into(),
        seed: None,
        threads: Some(2),
    };
    let report = run(Command::ScalingLimit, &options).unwrap();
    assert_eq!(report.exit_code(), EXIT_PASS, "{:?}", report.outcome.verdicts);

    let config = ExperimentConfig::load(&options.config).unwrap();
    let records = parse_records(&read(out.path(), REPORT_FILE)).unwrap();
    assert_eq!(records.len(), expected_records(&config, Command::ScalingLimit));
    let scales: BTreeSet<usize> = records.iter().filter(|r| r.suite == "charfunc").filter_map(|r| r.k).collect();
    assert_eq!(scales, BTreeSet::from([1, 2, 4]));
    assert!(records.iter().all(|r| r.deterministic && r.stderr.is_none()));
}

#[test]
fn negative_mass_exits_with_the_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, SMALL.replace("\"mass\": 1.0", "\"mass\": -2.0")).unwrap();
    let options = RunOptions {
        config: path,
        out_dir: dir.path().join("out"),
        seed: None,
        threads: None,
    };
    let err = run(Command::WickCheck, &options).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
    assert!(err.to_string().contains("experiment.mass"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let options = RunOptions {
        config: dir.path().join("absent.json"),
        out_dir: dir.path().into(),
        seed: None,
        threads: None,
    };
    assert_eq!(run(Command::Sample, &options).unwrap_err().exit_code(), EXIT_CONFIG);
}

#[test]
fn every_command_writes_the_expected_records() {
    let config = ExperimentConfig::from_json(SMALL).unwrap();
    for command in Command::value_variants() {
        let out = tempfile::tempdir().unwrap();
        let report = execute(*command, &config, out.path()).unwrap();
        let records = parse_records(&read(out.path(), REPORT_FILE)).unwrap();
        assert_eq!(records.len(), expected_records(&config, *command), "{}", command.name());
        assert_eq!(records, report.outcome.records);

        let summary = read(out.path(), SUMMARY_FILE);
        let mut lines = summary.lines();
        assert_eq!(lines.next(), Some(SUMMARY_HEADER));
        let suites: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
        let names: Vec<&str> = report.outcome.verdicts.iter().map(|v| v.suite.as_str()).collect();
        assert_eq!(suites, names, "{}", command.name());
    }
}

#[test]
fn sample_writes_one_ensemble_per_scale() {
    let config = ExperimentConfig::from_json(SMALL).unwrap();
    let out = tempfile::tempdir().unwrap();
    execute(Command::Sample, &config, out.path()).unwrap();
    for k in [1, 2] {
        let path = out.path().join(format!("ensemble_k{k}.txt"));
        let back = crate::sampler::read_ensemble(&path).unwrap();
        assert_eq!(back.len(), config.sample.n);
        assert_eq!(back.k(), k);
    }
}

#[test]
fn reports_are_byte_identical_across_runs_and_follow_the_seed() {
    let run_once = |seed: Option<u64>| {
        let out = tempfile::tempdir().unwrap();
        let options = RunOptions {
            config: bundled("bounded_cosine_d1.json"),
            out_dir: out.path().into(),
            seed,
            threads: None,
        };
        run(Command::Charfunc, &options).unwrap();
        read(out.path(), REPORT_FILE)
    };
    let first = run_once(None);
    assert_eq!(first, run_once(None));
    assert_ne!(first, run_once(Some(99)));
}

#[test]
fn thread_count_never_changes_the_report() {
    let run_with = |threads: usize| {
        let out = tempfile::tempdir().unwrap();
        let options = RunOptions {
            config: bundled("bounded_cosine_d1.json"),
            out_dir: out.path().into(),
            seed: None,
            threads: Some(threads),
        };
        run(Command::Charfunc, &options).unwrap();
        read(out.path(), REPORT_FILE)
    };
    assert_eq!(run_with(1), run_with(3));
}

#[test]
fn thread_flag_wins_over_the_environment() {
    assert_eq!(resolve_threads(Some(3)).unwrap(), Some(3));
}

#[test]
fn exit_codes_follow_the_error_class() {
    let numerical = CliError::Run(Error::NonFinite("x".into()));
    let input = CliError::Run(Error::InvalidArgument("x".into()));
    assert_eq!(numerical.exit_code(), EXIT_NUMERICAL);
    assert_eq!(input.exit_code(), EXIT_CONFIG);
}
