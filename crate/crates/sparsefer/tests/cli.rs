use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sparsefer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsefer")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn synth(dir: &Path) {
    let o = sparsefer(&["synth", "--out", dir.to_str().unwrap(), "--seed", "5", "--set", "synth_per_class=30"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.cfg");
    let text = format!(
        "# small run\nmanifest = data/manifest.csv\nper_class_train = 20\nper_class_test = 10\n\
         rffd_dims = 10,15\nrffd_candidates = 2\nrffd_cv = kfold:4\nsparsity = 4\n\
         svm_c_grid = 0.1,1\nsvm_cv = kfold:4\n{extra}"
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn staged_commands_complete_a_run() {
    let tmp = tempfile::tempdir().unwrap();
    synth(&tmp.path().join("data"));
    let cfg = write_config(tmp.path(), "");
    let out = tmp.path().join("out");
    for stage in ["ingest", "project", "train-dict", "encode", "train-svm", "evaluate"] {
        let o = sparsefer(&[stage, "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{stage}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(out.join("INCOMPLETE").exists(), stage != "evaluate", "{stage}");
    }
    let o = sparsefer(&["plots", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("30 reconstruction rows"));

    let again = tmp.path().join("again");
    let o = sparsefer(&["pipeline", "--config", &cfg, "--out", again.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("average recognition rate"));
    assert_eq!(fs::read(out.join("results.json")).unwrap(), fs::read(again.join("results.json")).unwrap());
}

#[test]
fn exit_codes_follow_the_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    synth(&tmp.path().join("data"));
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();

    let cfg = write_config(tmp.path(), "no_such_key = 1\n");
    assert_eq!(code(&sparsefer(&["pipeline", "--config", &cfg, "--out", out])), 2);

    let cfg = write_config(tmp.path(), "");
    let o = sparsefer(&["pipeline", "--config", &cfg, "--out", out, "--manifest", "missing.csv"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = sparsefer(&["plots", "--out", out]);
    assert_eq!(code(&o), 3);

    let cfg = write_config(tmp.path(), "rffd_quality_threshold = 1e12\n");
    assert_eq!(code(&sparsefer(&["pipeline", "--config", &cfg, "--out", out])), 4);
}
