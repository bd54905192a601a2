//! Pipeline stages. Each stage reads its inputs from the output directory and
//! writes its artifacts back, so the stages can run one at a time from the
//! command line or back to back through [`run_pipeline`].

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use sparsefer_core::pca::pca_project;
use sparsefer_core::svm::{cross_validate, grid_search};
use sparsefer_core::{
    confusion_and_rates, init_dictionary, ksvd_refine, predict, project, reconstruction_errors, split, train, DenseMatrix,
    KsvdConfig, RffdConfig, SplitSpec,
};

use crate::bundle::{self, *};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::manifest::load_manifests;
use crate::parallel;
use crate::reports::{self, CurveRow, ErrorRow, PcaRow, PredictionRow, ReportRow};

/// Stage names in execution order.
pub const STAGES: [&str; 6] = ["ingest", "project", "train-dict", "encode", "train-svm", "evaluate"];

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn mark_incomplete(dir: &Path, note: &str) -> Result<()> {
    write_text(&dir.join(INCOMPLETE), &format!("{note}\n"))
}

fn record_timing(dir: &Path, stage: &str, ms: u64) -> Result<()> {
    let path = dir.join(TIMINGS);
    let mut timings: BTreeMap<String, u64> = if path.exists() { bundle::read_json(&path)? } else { BTreeMap::new() };
    timings.insert(stage.to_string(), ms);
    bundle::write_json(&path, &timings)
}

type StageFn = fn(&PipelineConfig, &Path) -> Result<()>;

/// Runs one stage by name. The directory is flagged `INCOMPLETE` until
/// `evaluate` succeeds; a failure records the stage and cause in the flag.
pub fn run_stage(name: &str, cfg: &PipelineConfig) -> Result<()> {
    let (stage, f): (&'static str, StageFn) = match name {
        "ingest" => ("ingest", ingest),
        "project" => ("project", project_stage),
        "train-dict" => ("train-dict", train_dict),
        "encode" => ("encode", encode),
        "train-svm" => ("train-svm", train_svm),
        "evaluate" => ("evaluate", evaluate),
        _ => return Err(Error::Config(format!("unknown stage `{name}`"))),
    };
    let dir = cfg.out.as_path();
    let wrap = |e: Error| Error::Stage {
        stage,
        source: Box::new(e),
    };
    create_dir(dir).map_err(wrap)?;
    mark_incomplete(dir, &format!("running {stage}")).map_err(wrap)?;
    let start = Instant::now();
    match f(cfg, dir) {
        Ok(()) => {
            record_timing(dir, stage, start.elapsed().as_millis() as u64).map_err(wrap)?;
            if stage == "evaluate" {
                finish(cfg, dir).map_err(wrap)?;
            } else {
                mark_incomplete(dir, &format!("completed {stage}")).map_err(wrap)?;
            }
            Ok(())
        }
        Err(e) => {
            let _ = mark_incomplete(dir, &format!("stage {stage} failed: {e}"));
            Err(wrap(e))
        }
    }
}

/// Every stage in order; stops at the first failure.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Results> {
    let _ = fs::remove_file(cfg.out.join(TIMINGS));
    for stage in STAGES {
        run_stage(stage, cfg)?;
    }
    bundle::read_json(&cfg.out.join(RESULTS))
}

fn ingest(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    if cfg.manifests.is_empty() {
        return Err(Error::Config("no manifest given".into()));
    }
    if cfg.per_class_test == 0 {
        return Err(Error::Config("per_class_test must be at least 1 to evaluate".into()));
    }
    let _ = fs::remove_file(dir.join(RESULTS));
    let ds = load_manifests(&cfg.manifests, cfg.resize)?;
    let seeds = cfg.seeds();
    let (tr, te) = split(
        &ds,
        &SplitSpec {
            per_class_train: cfg.per_class_train,
            per_class_test: cfg.per_class_test,
            identity_disjoint: cfg.identity_disjoint,
            shuffle_seed: seeds.split,
        },
    )?;
    bundle::save(dir, TRAIN_FEATURES, tr.features())?;
    bundle::save(dir, TEST_FEATURES, te.features())?;
    bundle::write_json(
        &dir.join(SPLIT),
        &SplitLabels {
            class_names: ds.class_names().to_vec(),
            train_labels: tr.labels().to_vec(),
            test_labels: te.labels().to_vec(),
            train_identities: tr.identities().map(<[String]>::to_vec),
            test_identities: te.identities().map(<[String]>::to_vec),
        },
    )?;
    write_meta(
        dir,
        &Meta {
            schema: SCHEMA,
            class_names: ds.class_names().to_vec(),
            feature_dim: ds.dim(),
            seeds,
            m: None,
            rffd_candidate: None,
            rffd_cv_accuracy: None,
            k: None,
            l: None,
            c: None,
        },
    )
}

fn project_stage(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let train_ds = load_partition(dir, TRAIN_FEATURES, true)?;
    let test_x = bundle::load(dir, TEST_FEATURES)?;
    let mut meta = read_meta(dir)?;
    if let Some(&m) = cfg.rffd_dims.iter().find(|&&m| m > train_ds.dim()) {
        return Err(Error::Config(format!("rffd dimension {m} exceeds the feature dimension {}", train_ds.dim())));
    }
    let rcfg = RffdConfig {
        dims: cfg.rffd_dims.clone(),
        candidates_per_dim: cfg.rffd_candidates,
        quality_threshold: cfg.rffd_quality_threshold,
        cv: cfg.rffd_cv.mode(meta.seeds.rffd_cv),
        svm_c: cfg.rffd_c,
        master_seed: meta.seeds.rffd,
    };
    let outcome = parallel::search(&train_ds, &rcfg)?;
    bundle::save(dir, PROJECTION, &outcome.best.r)?;
    bundle::save(dir, TRAIN_PROJECTED, outcome.projected.features())?;
    bundle::save(dir, TEST_PROJECTED, &project(&outcome.best.r, &test_x)?)?;
    reports::write_search_report(&dir.join(REPORT), &outcome.report)?;

    if cfg.pca_baseline {
        let limit = train_ds.dim().min(train_ds.len());
        let mut rows = Vec::new();
        for &m in cfg.rffd_dims.iter().filter(|&&m| m <= limit) {
            let p = pca_project(&train_ds, m)?;
            let score = cross_validate(p.features(), p.labels(), p.class_names(), cfg.rffd_c, rcfg.cv)?;
            rows.push(PcaRow {
                m,
                cv_accuracy: score.mean_accuracy,
            });
        }
        reports::write_rows(&dir.join(PCA_BASELINE), rows)?;
    }

    meta.m = Some(outcome.best.m);
    meta.rffd_candidate = Some(outcome.best.index);
    meta.rffd_cv_accuracy = outcome.best.cv_accuracy;
    write_meta(dir, &meta)
}

fn train_dict(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let y = bundle::load(dir, TRAIN_PROJECTED)?;
    let mut meta = read_meta(dir)?;
    let mut dict = init_dictionary(&y)?;
    dict.class_names = Some(meta.class_names.clone());
    let k = dict.n_atoms();
    let l = cfg.sparsity.resolve(k);
    let max_l = y.rows().min(k);
    if l == 0 || l > max_l {
        return Err(Error::Config(format!("sparsity resolves to L={l}, outside 1..={max_l} for K={k}")));
    }
    let kcfg = KsvdConfig {
        max_iters: cfg.ksvd_max_iters,
        rel_tol: cfg.ksvd_rel_tol,
        unused_atom_policy: cfg.ksvd_unused_atoms,
        seed: meta.seeds.ksvd,
    };
    let (refined, _) = ksvd_refine(&dict, &y, l, &kcfg)?;
    bundle::save(dir, DICTIONARY, &refined.atoms)?;
    reports::write_training_log(&dir.join(TRAINING_LOG), &refined.training_log)?;
    meta.k = Some(k);
    meta.l = Some(l);
    write_meta(dir, &meta)
}

fn encode(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let meta = read_meta(dir)?;
    let l = require(meta.l, "L")?;
    let d = bundle::load(dir, DICTIONARY)?;
    let train_codes = parallel::encode_codes(&d, &bundle::load(dir, TRAIN_PROJECTED)?, l, cfg.omp_residual_tol)?;
    let test_codes = parallel::encode_codes(&d, &bundle::load(dir, TEST_PROJECTED)?, l, cfg.omp_residual_tol)?;
    let dense = |codes| sparsefer_core::omp::densify(codes, d.cols());
    bundle::save(dir, TRAIN_CODES, &dense(&train_codes))?;
    bundle::save(dir, TEST_CODES, &dense(&test_codes))?;
    reports::write_codes_stats(&dir.join(CODES_STATS), &[("train", &train_codes), ("test", &test_codes)])
}

fn train_svm(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let codes = load_partition(dir, TRAIN_CODES, true)?;
    let mut meta = read_meta(dir)?;
    let cv = cfg.svm_cv.mode(meta.seeds.svm_cv);
    let grid = grid_search(codes.features(), codes.labels(), codes.class_names(), &cfg.svm_c_grid, cv)?;
    reports::write_grid_report(&dir.join(GRID_REPORT), &grid)?;
    let model = train(codes.features(), codes.labels(), codes.class_names(), grid.best_c)?;
    bundle::save(dir, SVM_WEIGHTS, &model.weights)?;
    bundle::save(dir, SVM_BIAS, &DenseMatrix::from_col_major(model.bias.len(), 1, model.bias.clone())?)?;
    meta.c = Some(grid.best_c);
    write_meta(dir, &meta)
}

fn evaluate(_cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let meta = read_meta(dir)?;
    let model = load_model(dir)?;
    let test = load_partition(dir, TEST_CODES, false)?;
    let pred = predict(&model, test.features())?;
    let summary = confusion_and_rates(test.labels(), &pred, test.class_names())?;
    let names = test.class_names();
    reports::write_rows(
        &dir.join(PREDICTIONS),
        test.labels().iter().zip(&pred).enumerate().map(|(i, (&t, &p))| PredictionRow {
            sample_index: i,
            true_label: &names[t],
            predicted_label: &names[p],
        }),
    )?;
    bundle::write_json(
        &dir.join(RESULTS),
        &Results {
            schema: SCHEMA,
            class_names: meta.class_names.clone(),
            per_class_rate: summary.per_class_rate,
            average_rate: summary.average_rate,
            confusion: summary.confusion.counts,
            m: require(meta.m, "m")?,
            c: require(meta.c, "C")?,
            l: require(meta.l, "L")?,
            k: require(meta.k, "K")?,
            seeds: meta.seeds,
            stage_timings_ms: None,
        },
    )
}

/// Clears the flag, then adds timings (if requested) and the plot data.
fn finish(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    if cfg.record_timings {
        let path = dir.join(RESULTS);
        let mut results: Results = bundle::read_json(&path)?;
        results.stage_timings_ms = Some(bundle::read_json(&dir.join(TIMINGS))?);
        bundle::write_json(&path, &results)?;
    }
    let flag = dir.join(INCOMPLETE);
    fs::remove_file(&flag).map_err(|e| Error::io(&flag, e))?;
    emit_plots_data(dir)?;
    Ok(())
}

/// Row counts of the files written by [`emit_plots_data`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlotsData {
    pub reconstruction_rows: usize,
    pub curve_rows: usize,
}

/// Writes `reconstruction_error.csv` (test-set OMP error per sample,
/// recomputed from the persisted dictionary and codes) and `rffd_curves.csv`.
pub fn emit_plots_data(dir: &Path) -> Result<PlotsData> {
    let flag = dir.join(INCOMPLETE);
    if flag.exists() {
        let note = fs::read_to_string(&flag).unwrap_or_default();
        return Err(Error::Incomplete(note.trim().to_string()));
    }
    let d = bundle::load(dir, DICTIONARY)?;
    let y = bundle::load(dir, TEST_PROJECTED)?;
    let x = bundle::load(dir, TEST_CODES)?;
    let errors = reconstruction_errors(&d, &y, &x)?;
    let rows: Vec<ErrorRow> = errors
        .per_sample
        .iter()
        .enumerate()
        .map(|(i, &e)| ErrorRow {
            sample_index: i,
            absolute_error: e,
        })
        .collect();
    let reconstruction_rows = rows.len();
    reports::write_rows(&dir.join(RECONSTRUCTION_ERROR), rows)?;
    let report: Vec<ReportRow> = reports::read_rows(&dir.join(REPORT))?;
    let curves: Vec<CurveRow> = reports::curve_rows(&report);
    let curve_rows = curves.len();
    reports::write_rows(&dir.join(RFFD_CURVES), curves)?;
    Ok(PlotsData {
        reconstruction_rows,
        curve_rows,
    })
}
