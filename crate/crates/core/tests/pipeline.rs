use std::path::Path;

use contour_vad::ingest::SynthConfig;
use contour_vad::{run_pipeline, PipelineConfig, PipelineError};

fn small_config(workdir: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        seed: 3,
        workdir: workdir.to_path_buf(),
        synth: Some(SynthConfig {
            n_videos: 4,
            n_test_videos: Some(3),
            frames_per_video: 24,
            tracks_per_video: 1,
            anomaly_fraction: 0.3,
            ..SynthConfig::default()
        }),
        ..Default::default()
    };
    cfg.models.enabled = vec!["tae".into(), "crnn".into()];
    cfg.models.tae.epochs = 5;
    cfg.models.crnn.epochs = 5;
    cfg.cluster.k = 6;
    cfg.cluster.sample = 400;
    cfg
}

fn stage_hits(report: &contour_vad::PipelineReport) -> Vec<(String, bool)> {
    report.stages.iter().map(|s| (s.name.clone(), s.cache_hit)).collect()
}

#[test]
fn rerun_is_fully_cached_and_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let first = run_pipeline(&cfg).unwrap();
    assert!(first.stages.iter().all(|s| !s.cache_hit));
    let metrics = std::fs::read(dir.path().join("metrics.json")).unwrap();

    let second = run_pipeline(&cfg).unwrap();
    assert!(second.all_cached(), "{:?}", stage_hits(&second));
    assert_eq!(std::fs::read(dir.path().join("metrics.json")).unwrap(), metrics);
    assert_eq!(first.metrics, second.metrics);
    for kind in ["tae", "crnn"] {
        let m = &second.metrics[kind];
        assert!((0.0..=1.0).contains(&m.auc), "{kind}: {m:?}");
        assert!((0.0..=1.0).contains(&m.rbdc) && (0.0..=1.0).contains(&m.tbdc));
    }
}

#[test]
fn scoring_change_reruns_only_downstream_stages() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.models.enabled = vec!["tae".into()];
    run_pipeline(&cfg).unwrap();
    cfg.scoring.sigma = 2.0;
    let report = run_pipeline(&cfg).unwrap();
    for (name, hit) in stage_hits(&report) {
        let downstream = name.starts_with("score:") || name.starts_with("eval:");
        assert_eq!(hit, !downstream, "stage {name}");
    }
}

#[test]
fn deleted_output_forces_stage_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.models.enabled = vec!["tae".into()];
    run_pipeline(&cfg).unwrap();
    std::fs::remove_file(dir.path().join("scores-tae.json")).unwrap();
    let report = run_pipeline(&cfg).unwrap();
    let score = report.stages.iter().find(|s| s.name == "score:tae").unwrap();
    assert!(!score.cache_hit);
    assert!(dir.path().join("scores-tae.json").exists());
}

#[test]
fn unknown_model_fails_before_any_stage() {
    let dir = tempfile::tempdir().unwrap();
    let workdir = dir.path().join("w");
    let mut cfg = small_config(&workdir);
    cfg.models.enabled = vec!["tae".into(), "gan".into()];
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, PipelineError::Config(_)), "{err}");
    assert!(err.is_validation());
    assert!(!workdir.exists());
}

#[test]
fn missing_inputs_without_synth_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.synth = None;
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(err.is_validation(), "{err}");
}

#[test]
fn config_file_with_partial_sections_loads() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(
        &path,
        r#"{"seed": 5, "synth": {"n_videos": 3}, "models": {"enabled": ["rrnn"]}, "scoring": {"sigma": 3.0}}"#,
    )
    .unwrap();
    let cfg = PipelineConfig::load(&path).unwrap();
    assert_eq!(cfg.seed, 5);
    assert_eq!(cfg.synth.as_ref().unwrap().n_videos, 3);
    assert_eq!(cfg.synth.as_ref().unwrap().frames_per_video, 48);
    assert_eq!(cfg.scoring.sigma, 3.0);
    assert_eq!(cfg.metrics.iou_min, 0.1);
}
