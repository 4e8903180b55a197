use std::fs;
use std::path::Path;

use presslab::config::ExperimentConfig;
use presslab::experiment::{run_experiment, RunOptions};
use presslab::fixed::Alpha;
use presslab::repro::{presets_dir, run_script, scripts};

fn all_presets() -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = fs::read_dir(presets_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn every_preset_round_trips() {
    let presets = all_presets();
    assert!(presets.len() >= 11);
    for p in presets {
        let cfg = ExperimentConfig::load(&p).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let again = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again, "{}", p.display());
    }
}

#[test]
fn every_criterion_has_one_preset() {
    let s = scripts();
    assert_eq!(s.len(), 11);
    for (i, script) in s.iter().enumerate() {
        assert_eq!(script.id as usize, i + 1);
        assert!(presets_dir().join(script.preset).exists(), "{}", script.preset);
    }
}

#[test]
fn tampered_alpha_fails_threshold_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let script = scripts().into_iter().find(|s| s.id == 2).unwrap();
    let text = fs::read_to_string(presets_dir().join(script.preset)).unwrap();
    let tampered = text.replace("alpha = [0.35, 1.0]", "alpha = [0.5, 1.0]");
    assert_ne!(text, tampered);
    fs::write(dir.path().join(script.preset), tampered).unwrap();
    let outcome = run_script(&script, dir.path()).unwrap();
    assert!(!outcome.passed);
}

#[test]
fn missing_preset_is_a_clear_error() {
    let script = scripts().remove(0);
    let err = run_script(&script, Path::new("/nonexistent")).unwrap_err();
    assert!(err.to_string().contains("not found"), "{err}");
}

#[test]
fn csv_does_not_depend_on_thread_count() {
    let mut cfg = ExperimentConfig::load(&presets_dir().join("impress_p_safe.toml")).unwrap();
    cfg.oracle.alpha = Alpha::ONE;
    let a = run_experiment(&cfg, &RunOptions { jobs: 1, ..Default::default() }).unwrap();
    let b = run_experiment(&cfg, &RunOptions { jobs: 4, ..Default::default() }).unwrap();
    assert_eq!(a.table.to_csv_string().unwrap(), b.table.to_csv_string().unwrap());
    let c = run_experiment(&cfg, &RunOptions { jobs: 4, seed_base: Some(99), ..Default::default() }).unwrap();
    assert_eq!(c.table.rows[0][3], "99");
}
