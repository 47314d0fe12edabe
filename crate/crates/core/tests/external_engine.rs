//! The line-protocol adapter against small shell stand-ins for a folder.

use montparnasse::cli::{run_batch, Algorithm, BatchConfig, Problem};
use montparnasse::folding::{external_fold_roundtrip, EngineConfig, FoldError, EXTERNAL_CMD_ENV};
use montparnasse::localsearch::mogrls;
use montparnasse::{NucleotideSequence, TargetStructure};

/// Echoes the target back as the MFE, so every design is solved.
const ECHO_FOLDER: &str =
    r#"while read cmd seq target; do echo "OK $target -3.0 -3.2 0.75 0.5"; done"#;

fn cfg(cmd: &str, timeout: f64) -> EngineConfig {
    EngineConfig {
        timeout_secs: timeout,
        ..EngineConfig::external(cmd)
    }
}

fn hairpin() -> (NucleotideSequence, TargetStructure) {
    ("GGGAAACCC".parse().unwrap(), "(((...)))".parse().unwrap())
}

#[test]
fn roundtrip_reply_fields() {
    let (seq, target) = hairpin();
    let r = external_fold_roundtrip(&seq, &target, &cfg(ECHO_FOLDER, 5.0)).unwrap();
    assert_eq!(r.mfe_structure, "(((...)))");
    assert_eq!(r.mfe_energy, -3.0);
    assert_eq!(r.ensemble_free_energy, -3.2);
    assert_eq!(r.target_probability, 0.75);
    assert_eq!(r.ensemble_defect, 0.5);
}

#[test]
fn search_through_external_folder() {
    let (_, target) = hairpin();
    let state = mogrls(&target, 50, 1, &cfg(ECHO_FOLDER, 5.0), 0.5).unwrap();
    assert!(state.solved());
    assert_eq!(state.nevals, 1);
}

#[test]
fn err_reply_is_engine_failure() {
    let (seq, target) = hairpin();
    let err = external_fold_roundtrip(
        &seq,
        &target,
        &cfg("read line; echo 'ERR no model loaded'", 5.0),
    )
    .unwrap_err();
    match err {
        FoldError::EngineFailure { message, .. } => {
            assert!(message.contains("no model loaded"), "{message}")
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_reply_names_line() {
    let (seq, target) = hairpin();
    for reply in [
        "hello",
        "OK ((...)) 1 2 0.5 0",
        "OK (((...))) 1 2 1.5 0",
        "OK (((...))) x 2 0.5 0",
    ] {
        let cmd = format!("read line; echo '{reply}'");
        let err = external_fold_roundtrip(&seq, &target, &cfg(&cmd, 5.0)).unwrap_err();
        match err {
            FoldError::EngineFailure { message, .. } => {
                assert!(message.contains(reply), "{message}")
            }
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn crash_keeps_stderr() {
    let (seq, target) = hairpin();
    let err = external_fold_roundtrip(
        &seq,
        &target,
        &cfg("echo 'model file missing' >&2; exit 3", 5.0),
    )
    .unwrap_err();
    match err {
        FoldError::EngineFailure { stderr, .. } => {
            assert!(stderr.contains("model file missing"), "{stderr:?}")
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn silent_folder_times_out() {
    let (seq, target) = hairpin();
    let err = external_fold_roundtrip(&seq, &target, &cfg("sleep 10", 0.2)).unwrap_err();
    assert_eq!(err, FoldError::Timeout(0.2));
}

#[test]
fn command_from_environment() {
    std::env::set_var(EXTERNAL_CMD_ENV, ECHO_FOLDER);
    let c = EngineConfig {
        external_command: None,
        ..EngineConfig::external("unused")
    };
    assert_eq!(c.resolved_command().as_deref(), Some(ECHO_FOLDER));
    let (seq, target) = hairpin();
    assert!(external_fold_roundtrip(&seq, &target, &c).is_ok());
    std::env::remove_var(EXTERNAL_CMD_ENV);
}

#[test]
fn failing_runs_do_not_stop_a_batch() {
    let dir = tempfile::tempdir().unwrap();
    let problem = Problem {
        id: 5,
        name: "hairpin".into(),
        target: "(((...)))".parse().unwrap(),
    };
    let cfg = BatchConfig {
        algorithm: Algorithm::Mogrls,
        runs: 3,
        budget: 100,
        base_seed: 0,
        parallelism: 2,
        engine: cfg("exit 1", 5.0),
        gc_target: 0.5,
        out_dir: dir.path().to_path_buf(),
    };
    let report = run_batch(&problem, &cfg).unwrap();
    assert_eq!(report.failures.len(), 3);
    assert!(report.runs.is_empty());
    let run_dir = dir.path().join("5").join("mogrls");
    assert!(run_dir.join("run_0.error.txt").exists());
    assert!(run_dir.join("summary.txt").exists());
}
