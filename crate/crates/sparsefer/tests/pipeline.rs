use std::fs;
use std::path::Path;

use sparsefer::bundle::{self, Results, SplitLabels};
use sparsefer::config::{self, PipelineConfig};
use sparsefer::pipeline::{emit_plots_data, run_pipeline, run_stage, STAGES};
use sparsefer::reports::{read_rows, ErrorRow};
use sparsefer::synth::run_synth;
use sparsefer::Error;
use sparsefer_core::predict;

fn blobs(dir: &Path) -> std::path::PathBuf {
    let cfg = config::load(
        None,
        &[format!("out={}", dir.display()), "synth_per_class=30".into(), "seed=3".into()],
    )
    .unwrap();
    run_synth(&cfg).unwrap().unwrap()
}

fn small_config(manifest: &Path, out: &Path, extra: &[&str]) -> PipelineConfig {
    let mut overrides = vec![
        format!("manifest={}", manifest.display()),
        format!("out={}", out.display()),
        "per_class_train=20".into(),
        "per_class_test=10".into(),
        "rffd_dims=10,15".into(),
        "rffd_candidates=3".into(),
        "rffd_cv=kfold:4".into(),
        "sparsity=4".into(),
        "svm_c_grid=0.1,1,10".into(),
        "svm_cv=kfold:4".into(),
        "seed=11".into(),
    ];
    overrides.extend(extra.iter().map(|s| s.to_string()));
    config::load(None, &overrides).unwrap()
}

#[test]
fn staged_run_matches_single_run() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = blobs(&tmp.path().join("data"));
    let whole = tmp.path().join("whole");
    let staged = tmp.path().join("staged");
    run_pipeline(&small_config(&manifest, &whole, &[])).unwrap();
    let cfg = small_config(&manifest, &staged, &[]);
    for stage in STAGES {
        run_stage(stage, &cfg).unwrap();
    }
    for name in [
        bundle::RESULTS,
        bundle::META,
        bundle::DICTIONARY,
        bundle::TEST_CODES,
        bundle::SVM_WEIGHTS,
        bundle::SVM_BIAS,
        bundle::PREDICTIONS,
        bundle::RECONSTRUCTION_ERROR,
        bundle::RFFD_CURVES,
    ] {
        assert_eq!(fs::read(whole.join(name)).unwrap(), fs::read(staged.join(name)).unwrap(), "{name} differs");
    }
    assert!(!staged.join(bundle::INCOMPLETE).exists());
}

#[test]
fn persisted_artifacts_reproduce_the_results() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = blobs(&tmp.path().join("data"));
    let out = tmp.path().join("out");
    let results = run_pipeline(&small_config(&manifest, &out, &[])).unwrap();
    assert!(results.stage_timings_ms.is_none());

    let model = bundle::load_model(&out).unwrap();
    let codes = bundle::load(&out, bundle::TEST_CODES).unwrap();
    let split: SplitLabels = bundle::read_json(&out.join(bundle::SPLIT)).unwrap();
    let predicted = predict(&model, &codes).unwrap();
    let k = split.class_names.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (&t, &p) in split.test_labels.iter().zip(&predicted) {
        confusion[t][p] += 1;
    }
    assert_eq!(confusion, results.confusion);
    let rates: Vec<f64> = (0..k).map(|c| confusion[c][c] as f64 / confusion[c].iter().sum::<usize>() as f64).collect();
    for (r, e) in results.per_class_rate.iter().zip(&rates) {
        assert!((r.unwrap() - e).abs() < 1e-12);
    }
    assert!((results.average_rate - rates.iter().sum::<f64>() / k as f64).abs() < 1e-12);
    let on_disk: Results = bundle::read_json(&out.join(bundle::RESULTS)).unwrap();
    assert_eq!(on_disk, results);

    let d = bundle::load(&out, bundle::DICTIONARY).unwrap();
    let y = bundle::load(&out, bundle::TEST_PROJECTED).unwrap();
    let errors: Vec<ErrorRow> = read_rows(&out.join(bundle::RECONSTRUCTION_ERROR)).unwrap();
    assert_eq!(errors.len(), y.cols());
    for row in &errors {
        let i = row.sample_index;
        let approx = d.matvec(codes.col(i)).unwrap();
        let direct = y.col(i).iter().zip(&approx).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        assert!((direct - row.absolute_error).abs() <= 1e-9 * direct.max(1.0));
        assert!(codes.col(i).iter().filter(|v| **v != 0.0).count() <= results.l);
    }

    let plots = emit_plots_data(&out).unwrap();
    assert_eq!(plots.reconstruction_rows, y.cols());
    assert!(plots.curve_rows >= 1 && plots.curve_rows <= 6);
}

#[test]
fn failed_stage_leaves_the_directory_flagged() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = blobs(&tmp.path().join("data"));
    let out = tmp.path().join("out");
    let err = run_pipeline(&small_config(&manifest, &out, &["sparsity=500"])).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "train-dict", .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
    let note = fs::read_to_string(out.join(bundle::INCOMPLETE)).unwrap();
    assert!(note.contains("train-dict"), "{note}");
    assert!(!out.join(bundle::RESULTS).exists());
    assert!(matches!(emit_plots_data(&out), Err(Error::Incomplete(_))));
}

#[test]
fn later_stage_without_inputs_reports_missing() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = blobs(&tmp.path().join("data"));
    let out = tmp.path().join("out");
    let err = run_stage("encode", &small_config(&manifest, &out, &[])).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
}

#[test]
fn timings_are_recorded_on_request() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = blobs(&tmp.path().join("data"));
    let out = tmp.path().join("out");
    let results = run_pipeline(&small_config(&manifest, &out, &["record_timings=true"])).unwrap();
    let timings = results.stage_timings_ms.unwrap();
    let keys: Vec<&str> = timings.keys().map(String::as_str).collect();
    let mut expected = STAGES.to_vec();
    expected.sort_unstable();
    assert_eq!(keys, expected);
}
