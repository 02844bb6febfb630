//! End-to-end tests of the `apex` binary against the bundled corpus.

use std::path::PathBuf;
use std::process::{Command, Output};

fn apex() -> Command {
    Command::new(env!("CARGO_BIN_EXE_apex"))
}

fn corpus(name: &str) -> String {
    format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn parse_prints_normalized_dump() {
    let out = run(apex().arg("parse").arg(corpus("straightline.mapp")));
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("MANIFEST"));
    assert!(text.contains("METHOD A1.onTap regs=1 params=1"));
}

#[test]
fn parse_rejects_bad_app_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mapp");
    std::fs::write(&bad, "MANIFEST\n  main A1\nEND\nGARBAGE\n").unwrap();
    let out = run(apex().arg("parse").arg(&bad));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("4:1"), "diagnostic with position, got: {err}");
}

#[test]
fn explore_writes_artifacts_and_replay_consumes_them() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(apex()
        .arg("explore")
        .arg(corpus("dragon.mapp"))
        .arg("--targets")
        .arg(corpus("dragon.targets"))
        .arg("--out")
        .arg(&out_dir));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for artifact in ["model.json", "model.dot", "report.json"] {
        assert!(out_dir.join(artifact).exists(), "missing {artifact}");
    }
    // report lists per-target status and all targets are hit
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["schema"], "report.v1");
    let details = report["coverage"]["target_details"].as_array().unwrap();
    assert_eq!(details.len(), 5);
    assert!(details.iter().all(|d| d["hit"] == true), "{details:?}");

    // every emitted sequence file replays cleanly on the same seed
    let sequences: Vec<PathBuf> = std::fs::read_dir(out_dir.join("sequences"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert!(sequences.len() >= 5);
    for file in &sequences {
        let out = run(apex().arg("replay").arg(corpus("dragon.mapp")).arg(file));
        assert!(
            out.status.success(),
            "replay of {} failed: {}",
            file.display(),
            stdout(&out)
        );
    }
}

#[test]
fn replay_of_corrupted_sequence_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq.txt");
    std::fs::write(&seq, "launch A1\ntap ghost\n").unwrap();
    let out = run(apex().arg("replay").arg(corpus("straightline.mapp")).arg(&seq));
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("failed at event 1"));
}

#[test]
fn replay_prints_path_of_target_witness() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    run(apex()
        .arg("target")
        .arg(corpus("dragon.mapp"))
        .arg("--targets")
        .arg(corpus("dragon.targets"))
        .arg("--out")
        .arg(&out_dir));
    let witness = out_dir.join("sequences").join("target-2-D1.onGate3-4.txt");
    let out = run(apex().arg("replay").arg(corpus("dragon.mapp")).arg(&witness));
    assert!(out.status.success());
    let text = stdout(&out);
    // the printed executed path contains the target statement index 4
    assert!(text.contains("executed path: D1.onGate3:{0,1,2,3,4,5}"), "{text}");
}

#[test]
fn explore_is_deterministic_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&a, &b] {
        let out = run(apex()
            .arg("explore")
            .arg(corpus("two_branch.mapp"))
            .arg("--out")
            .arg(out_dir)
            .arg("--seed")
            .arg("7"));
        assert!(out.status.success());
    }
    for artifact in ["model.json", "report.json", "model.dot"] {
        let left = std::fs::read(a.join(artifact)).unwrap();
        let right = std::fs::read(b.join(artifact)).unwrap();
        assert_eq!(left, right, "{artifact} differs across runs");
    }
}

#[test]
fn baseline_random_same_seed_identical_report() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&a, &b] {
        let out = run(apex()
            .arg("baseline-random")
            .arg(corpus("vault.mapp"))
            .arg("--budget")
            .arg("200")
            .arg("--seed")
            .arg("3")
            .arg("--out")
            .arg(out_dir));
        assert!(out.status.success());
    }
    assert_eq!(
        std::fs::read(a.join("report.json")).unwrap(),
        std::fs::read(b.join("report.json")).unwrap()
    );
}

#[test]
fn target_file_errors_are_diagnosed() {
    let dir = tempfile::tempdir().unwrap();
    let targets = dir.path().join("t.targets");
    std::fs::write(&targets, "D1.nosuch:0\n").unwrap();
    let out = run(apex()
        .arg("target")
        .arg(corpus("dragon.mapp"))
        .arg("--targets")
        .arg(&targets)
        .arg("--out")
        .arg(dir.path().join("out")));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not in app"));
}

#[test]
fn model_json_roundtrips_through_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    run(apex().arg("explore").arg(corpus("receiver.mapp")).arg("--out").arg(&out_dir));
    let text = std::fs::read_to_string(out_dir.join("model.json")).unwrap();
    let model = apex_core::gui_model::GuiModel::from_json(&text).unwrap();
    assert_eq!(model.to_json(), text, "JSON export must round-trip byte-identically");
}

#[test]
fn sequence_files_replay_for_every_corpus_app() {
    let apps = ["two_branch", "counter_gate", "lifecycle", "receiver", "straightline", "vault"];
    let dir = tempfile::tempdir().unwrap();
    for app in apps {
        let out_dir = dir.path().join(app);
        let mapp = corpus(&format!("{app}.mapp"));
        let out = run(apex().arg("explore").arg(&mapp).arg("--out").arg(&out_dir));
        assert!(out.status.success(), "{app}: {}", String::from_utf8_lossy(&out.stderr));
        for entry in std::fs::read_dir(out_dir.join("sequences")).unwrap() {
            let path: PathBuf = entry.unwrap().path();
            let out = run(apex().arg("replay").arg(&mapp).arg(&path));
            assert!(
                out.status.success(),
                "{app}: {} does not replay: {}",
                path.display(),
                stdout(&out)
            );
        }
    }
}

#[test]
fn dot_export_is_valid_enough_for_graphviz_grammar() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    run(apex().arg("explore").arg(corpus("two_branch.mapp")).arg("--out").arg(&out_dir));
    let dot = std::fs::read_to_string(out_dir.join("model.dot")).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dot.trim_end().ends_with('}'));
    assert_eq!(dot.matches("->").count(), 6, "one edge per transition");
}
