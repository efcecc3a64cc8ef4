mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{packshot, reference_grid, snapshot};

fn collage(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_collage")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn png(dir: &Path, name: &str, p: &collage::picture::Picture) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, p.png()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn create_with_mock_populates_run_dir() {
    let dir = tempfile::tempdir().unwrap();
    let shot = png(dir.path(), "p.png", &packshot(96));
    let run = dir.path().join("run");
    let o = collage(&["create", "--packshot", s(&shot), "--name", "Hand Cream", "--mock", "--run-dir", s(&run)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("stop reason: gates_passed"));
    for f in ["trace.json", "collage_iter0.png", "critique_iter0.json", "framework_iter0.json"] {
        assert!(run.join(f).is_file(), "{f}");
    }
}

#[test]
fn mock_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let shot = png(dir.path(), "p.png", &packshot(96));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for run in [&a, &b] {
        let o = collage(&["--mock", "--run-dir", s(run), "create", "--packshot", s(&shot), "--name", "Hand Cream"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(snapshot(&a), snapshot(&b));
}

#[test]
fn missing_name_is_usage_error() {
    let o = collage(&["create", "--packshot", "p.png", "--mock"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--name"));
    assert!(stderr(&o).to_lowercase().contains("usage"));
}

#[test]
fn zero_budget_is_usage_error() {
    let o = collage(&["create", "--packshot", "p.png", "--name", "x", "--mock", "--max-iter", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn no_provider_configured_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let shot = png(dir.path(), "p.png", &packshot(96));
    let o = collage(&["create", "--packshot", s(&shot), "--name", "x", "--run-dir", s(&dir.path().join("r"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("provider configured"));
}

#[test]
fn reference_with_mock_writes_transfer() {
    let dir = tempfile::tempdir().unwrap();
    let shot = png(dir.path(), "p.png", &packshot(96));
    let grid = png(dir.path(), "r.png", &reference_grid(128));
    let run = dir.path().join("run");
    let o = collage(&[
        "reference", "--packshot", s(&shot), "--name", "Cream", "--reference", s(&grid), "--mock", "--run-dir", s(&run),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(run.join("transfer.json").is_file());
}

#[test]
fn reference_flag_is_required() {
    let o = collage(&["reference", "--packshot", "p.png", "--name", "Cream", "--mock"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn undecodable_reference_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let shot = png(dir.path(), "p.png", &packshot(96));
    let bad = dir.path().join("r.png");
    std::fs::write(&bad, b"not an image").unwrap();
    let o = collage(&["reference", "--packshot", s(&shot), "--name", "Cream", "--reference", s(&bad), "--mock"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("corrupt input"), "{}", stderr(&o));
}

#[test]
fn resume_continues_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let shot = png(dir.path(), "p.png", &packshot(96));
    let run = dir.path().join("run");
    let o = collage(&["--mock", "--max-iter", "1", "--run-dir", s(&run), "create", "--packshot", s(&shot), "--name", "C"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("budget_exhausted"));
    let o = collage(&["--mock", "--max-iter", "3", "--run-dir", s(&run), "resume"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("gates_passed"));
    let o = collage(&["--mock", "--run-dir", s(&dir.path().join("nothing")), "resume"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn evaluate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    png(dir.path(), "a.png", &reference_grid(64));
    png(dir.path(), "r.png", &reference_grid(128));
    let good = dir.path().join("good.json");
    std::fs::write(
        &good,
        r#"[{"group": "g", "collage": "a.png"}, {"group": "g", "mode": "reference", "collage": "a.png", "reference": "r.png"}]"#,
    )
    .unwrap();
    let o = collage(&["evaluate", "--manifest", s(&good), "--mock"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("results.csv").is_file());

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"[{"group": "g", "collage": "a.png"}, {"group": "g", "collage": "missing.png"}]"#).unwrap();
    let out = dir.path().join("out");
    let o = collage(&["evaluate", "--manifest", s(&broken), "--mock", "--out", s(&out)]);
    assert_eq!(code(&o), 3);
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.lines().any(|l| l.contains("missing.png")));

    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "[]").unwrap();
    assert_eq!(code(&collage(&["evaluate", "--manifest", s(&empty), "--mock", "--out", s(&out)])), 0);
}

#[test]
fn cka_command() {
    let dir = tempfile::tempdir().unwrap();
    let grid = png(dir.path(), "g.png", &reference_grid(128));
    let dump = dir.path().join("m.json");
    let o = collage(&["cka", "--reference-grid", s(&grid), "--generated-grid", s(&grid), "--mock", "--dump-matrices", s(&dump)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "1.000000");
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(&dump).unwrap()).unwrap();
    assert_eq!(m["reference"].as_array().unwrap().len(), 4);

    let flat = png(dir.path(), "flat.png", &packshot(64).resized(8, 8).resized(64, 64));
    let uniform = collage::picture::Picture::from_rgba(image::RgbaImage::from_pixel(64, 64, image::Rgba([90, 90, 90, 255])));
    let uniform = png(dir.path(), "u.png", &uniform);
    let o = collage(&["cka", "--reference-grid", s(&uniform), "--generated-grid", s(&grid), "--mock"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no relational structure"));

    let o = collage(&[
        "cka", "--reference-grid", s(&grid), "--generated-grid", s(&flat), "--generated-layout", "3x3", "--mock",
    ]);
    assert_eq!(code(&o), 2);
}
