use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contour-vad"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_writes_split_and_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["--seed", "4", "synth", "--out", path(dir.path()), "--videos", "2", "--frames", "12"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["train.json", "test.json", "gt.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn unknown_model_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.ckpt");
    let o = cli(&["train", "--model", "gan", "--descriptors", "x.bin", "--out", path(&out)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_subcommand_and_bad_family_are_validation_errors() {
    assert_eq!(code(&cli(&["fly"])), 2);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cli(&["synth", "--out", path(dir.path()), "--family", "blob"])), 2);
}

#[test]
fn malformed_ground_truth_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.json");
    let scores = dir.path().join("scores.json");
    std::fs::write(&gt, r#"{"frame_labels": {"a": [0, 7]}}"#).unwrap();
    std::fs::write(&scores, "{}").unwrap();
    let out = dir.path().join("m.json");
    let o = cli(&["eval", "--scores", path(&scores), "--gt", path(&gt), "--out", path(&out)]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_input_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let missing = dir.path().join("nope.json");
    let o = cli(&["extract", "--manifest", path(&missing), "--out", path(&out)]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn stagewise_commands_match_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"synth": {"n_videos": 3, "n_test_videos": 2, "frames_per_video": 16, "tracks_per_video": 1},
            "models": {"enabled": ["tae"], "tae": {"epochs": 3}}}"#,
    )
    .unwrap();
    let c = path(&cfg);
    let work = d.join("work");
    let o = cli(&["--config", c, "--seed", "9", "run", "--workdir", path(&work)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("tae"));

    let data = d.join("data");
    let step = |args: &[&str]| {
        let mut full = vec!["--config", c, "--seed", "9"];
        full.extend_from_slice(args);
        let o = cli(&full);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    let p = |name: &str| d.join(name).to_str().unwrap().to_string();
    step(&["synth", "--out", path(&data)]);
    for split in ["train", "test"] {
        let manifest = data.join(format!("{split}.json"));
        let tracks = p(&format!("tracks-{split}.json"));
        step(&["extract", "--manifest", path(&manifest), "--out", &tracks]);
        step(&["describe", "--kind", "radii", "--in", &tracks, "--out", &p(&format!("radii-{split}.bin"))]);
    }
    step(&["train", "--model", "tae", "--descriptors", &p("radii-train.bin"), "--out", &p("tae.ckpt")]);
    step(&["score", "--model", &p("tae.ckpt"), "--descriptors", &p("radii-test.bin"), "--out", &p("scores.json")]);
    let gt = data.join("gt.json");
    step(&["eval", "--scores", &p("scores.json"), "--gt", path(&gt), "--out", &p("metrics.json")]);

    assert_eq!(
        std::fs::read(d.join("scores.json")).unwrap(),
        std::fs::read(work.join("scores-tae.json")).unwrap()
    );
    assert_eq!(
        std::fs::read(d.join("metrics.json")).unwrap(),
        std::fs::read(work.join("metrics-tae.json")).unwrap()
    );
}
