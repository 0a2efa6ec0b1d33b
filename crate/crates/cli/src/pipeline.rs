//! Stage functions shared by the subcommands and [`pipeline_run`].
//!
//! Each stage reads its inputs from files written by the previous stage, so
//! running stages one by one produces the same artifacts as a single run.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use fpqe_core::clustering::{fcm_membership, ClusterModel, FcmParams};
use fpqe_core::eval::{
    compute_eer, generate_pairs, index_images, run_matcher, write_roc, write_scores, CorrelationMatcher, DatasetSpec,
    EvalError, EvalReport, ExternalCommand, MatchFailure, Matcher, PairKind, ScoreSet,
};
use fpqe_core::features::{self, FeatureConfig};
use fpqe_core::gabor::{self, Stage};
use fpqe_core::imgcore::{self, io};
use fpqe_core::qap::{self, QapConfig};
use fpqe_core::stats::{self, SelectionReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EnhanceStage, PipelineConfig};
use crate::error::CliError;
use crate::table::{self, Assignment, FeatureRow, QapReportRow};

pub const FEATURES_CSV: &str = "features.csv";
pub const SELECTION_JSON: &str = "selection.json";
pub const MODEL_JSON: &str = "model.json";
pub const ASSIGNMENTS_CSV: &str = "assignments.csv";
pub const ENHANCED_DIR: &str = "enhanced";
pub const QAP_REPORT_CSV: &str = "qap_report.csv";
pub const EVAL_JSON: &str = "eval.json";
pub const ROC_CSV: &str = "roc.csv";
pub const SCORES_CSV: &str = "scores.csv";
pub const FAILURES_CSV: &str = "failures.csv";

/// Pipeline steps in execution order; `run --from` restarts at one of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Step {
    Features,
    Select,
    Cluster,
    Enhance,
    Eval,
}

pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))
}

/// Supported images directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::input(dir.display(), e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::input(dir.display(), e))?.path();
        if path.is_file() && io::is_supported_image(&path) {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(CliError::NoInput(dir.to_path_buf()));
    }
    paths.sort();
    Ok(paths)
}

fn file_name(path: &Path) -> Result<String, CliError> {
    path.file_name()
        .and_then(|n| n.to_str())
        .map(str::to_string)
        .ok_or_else(|| CliError::input(path.display(), "file name is not UTF-8"))
}

fn stem(name: &str) -> &str {
    Path::new(name).file_stem().and_then(|s| s.to_str()).unwrap_or(name)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::input(path.display(), e))
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::input(dir.display(), e))
}

/// Extracts the 11 features of every image in `dir`.
pub fn extract_features(dir: &Path, cfg: &FeatureConfig, jobs: usize) -> Result<Vec<FeatureRow>, CliError> {
    let images = list_images(dir)?;
    thread_pool(jobs)?.install(|| {
        images
            .par_iter()
            .map(|path| {
                let img = io::read_gray(path)?;
                let report = features::extract_with(&img, cfg).map_err(|e| CliError::input(path.display(), e))?;
                Ok(FeatureRow {
                    path: file_name(path)?,
                    features: report.features,
                    foreground_blocks: report.foreground_blocks,
                })
            })
            .collect()
    })
}

/// Joins feature rows with labels by path and runs the selection tests.
pub fn select(rows: &[FeatureRow], labels_csv: &Path, alpha: f64) -> Result<SelectionReport, CliError> {
    let labels = table::read_labels(labels_csv)?;
    let mut feats = Vec::with_capacity(rows.len());
    let mut truth = Vec::with_capacity(rows.len());
    for r in rows {
        let label = labels
            .get(&r.path)
            .ok_or_else(|| CliError::input(labels_csv.display(), format!("no label for {}", r.path)))?;
        feats.push(r.features);
        truth.push(*label);
    }
    Ok(stats::select_features(&feats, &truth, alpha)?)
}

pub fn fit_model(rows: &[FeatureRow], params: &FcmParams) -> Result<ClusterModel, CliError> {
    let points: Vec<_> = rows.iter().map(|r| features::project(&r.features)).collect();
    Ok(ClusterModel::fit(&points, params)?)
}

pub fn assign(model: &ClusterModel, rows: &[FeatureRow]) -> Vec<Assignment> {
    rows.iter()
        .map(|r| Assignment {
            path: r.path.clone(),
            qa: fcm_membership(model, &features::project(&r.features)),
        })
        .collect()
}

pub fn read_model(path: &Path) -> Result<ClusterModel, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(path.display(), e))?;
    ClusterModel::from_json(&text).map_err(|e| CliError::input(path.display(), e))
}

pub struct EnhanceJob<'a> {
    pub image_dir: &'a Path,
    pub out_dir: &'a Path,
    pub stage: EnhanceStage,
    /// Required for stages that run QAP.
    pub assignments: Option<&'a [Assignment]>,
    pub qap: &'a QapConfig,
    pub var_threshold: f64,
    pub fields_dir: Option<&'a Path>,
    pub jobs: usize,
}

/// Enhances every image in `image_dir` into `out_dir` as `<stem><suffix>.png`.
/// Returns the QAP parameters used, empty for the Gabor-only stage.
pub fn enhance(job: &EnhanceJob) -> Result<Vec<QapReportRow>, CliError> {
    let images = list_images(job.image_dir)?;
    let by_path: HashMap<&str, &Assignment> = job
        .assignments
        .unwrap_or_default()
        .iter()
        .map(|a| (a.path.as_str(), a))
        .collect();
    if job.stage.uses_qap() && job.assignments.is_none() {
        return Err(CliError::Input(format!("stage {} needs quality assignments", job.stage)));
    }
    job.qap.validate()?;
    create_dir(job.out_dir)?;
    if let Some(dir) = job.fields_dir {
        create_dir(dir)?;
    }
    let rows: Vec<Option<QapReportRow>> = thread_pool(job.jobs)?.install(|| {
        images
            .par_iter()
            .map(|path| enhance_one(job, path, &by_path).map_err(|e| e.context(path.display())))
            .collect::<Result<_, _>>()
    })?;
    Ok(rows.into_iter().flatten().collect())
}

fn enhance_one(
    job: &EnhanceJob,
    path: &Path,
    by_path: &HashMap<&str, &Assignment>,
) -> Result<Option<QapReportRow>, CliError> {
    let name = file_name(path)?;
    let img = io::read_gray(path)?;
    let qa = if job.stage.uses_qap() {
        let a = by_path
            .get(name.as_str())
            .ok_or_else(|| CliError::Input(format!("no quality assignment for {name}")))?;
        Some(a.qa)
    } else {
        None
    };
    let out = match (job.stage, &qa) {
        (EnhanceStage::Gabor, _) => gabor::gabor_only(&img, job.var_threshold)?,
        (EnhanceStage::Qap, Some(qa)) => gabor::enhance_pipeline(&img, qa, job.qap, Stage::None, job.var_threshold)?,
        (EnhanceStage::QapGabor, Some(qa)) => {
            gabor::enhance_pipeline(&img, qa, job.qap, Stage::Gabor, job.var_threshold)?
        }
        _ => unreachable!("QAP stages resolved an assignment above"),
    };
    let stem = stem(&name);
    io::write_gray(&job.out_dir.join(format!("{stem}{}.png", job.stage.suffix())), &out)?;
    if let (Some(dir), true) = (job.fields_dir, job.stage.uses_gabor()) {
        let input = match &qa {
            Some(qa) => qap::preprocess(&img, qa, job.qap)?,
            None => img.clone(),
        };
        let mask = imgcore::segment_foreground(&img, job.var_threshold)?;
        let of = gabor::orientation_field(&input, &mask)?;
        let ff = gabor::ridge_frequency(&input, &of, &mask)?;
        table::write_fields(&dir.join(format!("{stem}_fields.csv")), &of, &ff)?;
    }
    Ok(qa.map(|qa| QapReportRow {
        path: name.clone(),
        label: qa.label,
        m_quality: qa.m_quality,
        params: qap::unsharp_params(qa.label, qa.m_quality, job.qap),
    }))
}

/// Smallest dataset covering every `subject_impression` image in `dir`.
pub fn infer_spec(dir: &Path) -> Result<DatasetSpec, CliError> {
    let ids = index_images(dir)?;
    if ids.is_empty() {
        return Err(CliError::NoInput(dir.to_path_buf()));
    }
    let subjects = ids.keys().map(|id| id.subject).max().unwrap_or(0);
    let impressions = ids.keys().map(|id| id.impression).max().unwrap_or(0);
    Ok(DatasetSpec::new(subjects, impressions)?)
}

pub struct Evaluation {
    pub report: EvalReport,
    pub scores: ScoreSet,
    pub failures: Vec<MatchFailure>,
}

/// Matches every FVC pair of the images in `dir` with the external command, or the
/// built-in correlation matcher when `matcher` is `None`.
pub fn evaluate_images(
    dir: &Path,
    spec: Option<DatasetSpec>,
    matcher: Option<&str>,
    max_shift: usize,
    jobs: usize,
) -> Result<Evaluation, CliError> {
    let spec = match spec {
        Some(s) => s,
        None => infer_spec(dir)?,
    };
    let (genuine, impostor) = generate_pairs(&spec)?;
    let matcher: Box<dyn Matcher> = match matcher {
        Some(template) => Box::new(ExternalCommand::new(template)?),
        None => Box::new(CorrelationMatcher { max_shift }),
    };
    let jobs = thread_pool(jobs)?.current_num_threads();
    let run = run_matcher(&genuine, &impostor, dir, matcher.as_ref(), jobs)?;
    let result = match compute_eer(&run.scores) {
        Err(EvalError::EmptyScores) if !run.failures.is_empty() => {
            return Err(CliError::Matcher(format!(
                "every pair of one kind failed ({} failures)",
                run.failures.len()
            )))
        }
        r => r?,
    };
    Ok(Evaluation {
        report: EvalReport::new(&result, &run.scores, run.failures.len()),
        scores: run.scores,
        failures: run.failures,
    })
}

/// EER report and ROC of an existing score file.
pub fn evaluate_scores(scores_csv: &Path, out_dir: &Path) -> Result<EvalReport, CliError> {
    let file = File::open(scores_csv).map_err(|e| CliError::input(scores_csv.display(), e))?;
    let scores = fpqe_core::eval::read_scores(file).map_err(|e| CliError::input(scores_csv.display(), e))?;
    let result = compute_eer(&scores)?;
    let report = EvalReport::new(&result, &scores, 0);
    create_dir(out_dir)?;
    write_json(&out_dir.join(EVAL_JSON), &report)?;
    write_roc(create_file(&out_dir.join(ROC_CSV))?, &result)?;
    Ok(report)
}

fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::input(path.display(), e))?))
}

/// Writes the report, ROC, scores and failures of an image evaluation.
pub fn write_evaluation(eval: &Evaluation, out_dir: &Path) -> Result<(), CliError> {
    create_dir(out_dir)?;
    write_json(&out_dir.join(EVAL_JSON), &eval.report)?;
    let result = compute_eer(&eval.scores)?;
    write_roc(create_file(&out_dir.join(ROC_CSV))?, &result)?;
    write_scores(create_file(&out_dir.join(SCORES_CSV))?, &eval.scores)?;
    let path = out_dir.join(FAILURES_CSV);
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create_file(&path)?);
    let err = |e: csv::Error| CliError::input(path.display(), e);
    wtr.write_record(["type", "probe", "gallery", "status", "reason"]).map_err(err)?;
    for f in &eval.failures {
        let kind = match f.kind {
            PairKind::Genuine => "G",
            PairKind::Impostor => "I",
        };
        let status = f.status.map(|s| s.to_string()).unwrap_or_default();
        wtr.write_record([kind, &f.pair.probe.stem(), &f.pair.gallery.stem(), &status, f.reason.trim()])
            .map_err(err)?;
    }
    wtr.flush().map_err(|e| CliError::input(path.display(), e))
}

/// Runs the pipeline from `from` onward; earlier steps are read back from the
/// output directory. Returns the paths of the artifacts written by this call.
pub fn pipeline_run(cfg: &PipelineConfig, from: Step) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let out = &cfg.paths.output_dir;
    create_dir(out)?;
    let mut written = Vec::new();
    let at = |name: &str| out.join(name);

    let rows = if from <= Step::Features {
        log::info!("extracting features from {}", cfg.paths.input_dir.display());
        let rows = extract_features(&cfg.paths.input_dir, &cfg.feature_config(), cfg.jobs)?;
        table::write_features(&at(FEATURES_CSV), &rows)?;
        written.push(at(FEATURES_CSV));
        rows
    } else {
        table::read_features(&at(FEATURES_CSV))?
    };

    if let (Some(labels), true) = (&cfg.paths.labels, from <= Step::Select) {
        log::info!("selecting features against {}", labels.display());
        write_json(&at(SELECTION_JSON), &select(&rows, labels, cfg.alpha)?)?;
        written.push(at(SELECTION_JSON));
    }

    let assignments = if from <= Step::Cluster {
        log::info!("clustering {} images", rows.len());
        let model = fit_model(&rows, &cfg.clustering.fcm_params())?;
        let assignments = assign(&model, &rows);
        fs::write(at(MODEL_JSON), model.to_json() + "\n").map_err(|e| CliError::input(out.display(), e))?;
        table::write_assignments(&at(ASSIGNMENTS_CSV), &assignments)?;
        written.extend([at(MODEL_JSON), at(ASSIGNMENTS_CSV)]);
        assignments
    } else {
        table::read_assignments(&at(ASSIGNMENTS_CSV))?
    };

    let enhanced = at(ENHANCED_DIR);
    if from <= Step::Enhance {
        log::info!("enhancing with stage {}", cfg.stage);
        let report = enhance(&EnhanceJob {
            image_dir: &cfg.paths.input_dir,
            out_dir: &enhanced,
            stage: cfg.stage,
            assignments: Some(&assignments),
            qap: &cfg.qap,
            var_threshold: cfg.var_threshold,
            fields_dir: None,
            jobs: cfg.jobs,
        })?;
        written.push(enhanced.clone());
        if cfg.stage.uses_qap() {
            table::write_qap_report(&at(QAP_REPORT_CSV), &report)?;
            written.push(at(QAP_REPORT_CSV));
        }
    }

    if cfg.eval.enabled {
        log::info!("evaluating {}", enhanced.display());
        let eval = evaluate_images(&enhanced, None, cfg.eval.matcher.as_deref(), cfg.eval.max_shift, cfg.jobs)?;
        write_evaluation(&eval, out)?;
        written.extend([at(EVAL_JSON), at(ROC_CSV), at(SCORES_CSV), at(FAILURES_CSV)]);
    }
    Ok(written)
}
