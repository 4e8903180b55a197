use std::path::Path;
use std::process::Command;

use presslab::report::ReportTable;

fn presslab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_presslab"))
}

fn preset(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name).display().to_string()
}

#[test]
fn evasion_preset_flips_and_trips_assert() {
    let dir = tempfile::tempdir().unwrap();
    let out = presslab()
        .args(["simulate", "--config", &preset("evasion_impress_n.toml"), "--emit-timeline", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let table = ReportTable::read_csv(std::fs::File::open(dir.path().join("results.csv")).unwrap()).unwrap();
    let flips = table.column("flips").unwrap();
    let first = table.column("first_flip_time").unwrap();
    assert_ne!(table.rows[0][flips], "0");
    // 2 charge per round at alpha 1: the 16th round of 3 tRC each
    let t: u64 = table.rows[0][first].parse().unwrap();
    assert_eq!(t / 384 + 1, 16);
    assert!(dir.path().join("timelines/point0_seed1.timeline").exists());

    let status = presslab()
        .args(["simulate", "--config", &preset("evasion_impress_n.toml"), "--assert-no-flip", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn impress_p_preset_passes_assert_no_flip() {
    let dir = tempfile::tempdir().unwrap();
    let status = presslab()
        .args(["simulate", "--config", &preset("impress_p_safe.toml"), "--assert-no-flip", "--jobs", "2", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn malformed_config_exits_2_and_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[tracker]\nkind = \"graphene\"\nentries = -3\n\n[attack]\nkind = \"rowhammer\"\naggressors = [1]\nrounds = 1\n").unwrap();
    let out = presslab().args(["validate", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("entries") && err.contains("line 3"), "{err}");
}

#[test]
fn sweep_without_axes_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let status = presslab()
        .args(["sweep", "--config", &preset("evasion_impress_n.toml"), "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn analytic_outputs_closed_forms() {
    let out = presslab().args(["analytic", "para_slowdown", "--p", "1/84", "--K", "0,83,335"]).output().unwrap();
    assert!(out.status.success());
    let t = ReportTable::read_csv(out.stdout.as_slice()).unwrap();
    let v: Vec<f64> = t.rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!((v[0] - 4.0 / 84.0).abs() < 1e-6 && (v[1] - 4.0 / 84.0).abs() < 1e-6 && (v[2] - 4.0 / 336.0).abs() < 1e-6);

    let out = presslab().args(["analytic", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn plot_is_byte_stable_and_rejects_empty_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    assert!(presslab().args(["analytic", "precision", "--b", "0..7", "--out"]).arg(&csv).status().unwrap().success());
    let mut svgs = Vec::new();
    for name in ["a.svg", "b.svg"] {
        let svg = dir.path().join(name);
        let ok = presslab()
            .args(["plot", "--x", "bits", "--y", "relative_threshold", "--csv"])
            .arg(&csv)
            .arg("--out")
            .arg(&svg)
            .status()
            .unwrap();
        assert!(ok.success());
        svgs.push(std::fs::read(&svg).unwrap());
    }
    assert_eq!(svgs[0], svgs[1]);

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "bits,relative_threshold\n").unwrap();
    let st = presslab()
        .args(["plot", "--x", "bits", "--y", "relative_threshold", "--csv"])
        .arg(&empty)
        .arg("--out")
        .arg(dir.path().join("c.svg"))
        .status()
        .unwrap();
    assert!(!st.success());
}

#[test]
fn adversary_reports_impress_n_amplification() {
    let dir = tempfile::tempdir().unwrap();
    let out = presslab()
        .args(["adversary", "--config", &preset("c03_exhaustive_search.toml"), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("amplification: 2.000000"), "{text}");
    let witness = std::fs::read_to_string(dir.path().join("witness.timeline")).unwrap();
    assert!(presslab::CommandTimeline::parse_text(&witness).is_ok());
}

#[test]
fn repro_single_criterion_and_missing_presets() {
    let out = presslab().args(["repro", "--id", "9"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("[PASS] criterion  9"));

    let dir = tempfile::tempdir().unwrap();
    let out = presslab().args(["repro", "--id", "1", "--presets"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
}
