use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fpqe_cli::config::PipelineConfig;
use fpqe_cli::pipeline::{self, pipeline_run, Step};
use fpqe_cli::synth::write_corpus;

const SIZE: usize = 160;

fn corpus(root: &Path) -> PathBuf {
    let dir = root.join("img");
    write_corpus(&dir, 5, 5, SIZE, 11, 1).unwrap();
    dir
}

fn config(input: &Path, output: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.paths.input_dir = input.to_path_buf();
    cfg.paths.output_dir = output.to_path_buf();
    cfg.paths.labels = Some(input.join("labels.csv"));
    cfg.eval.enabled = true;
    cfg.jobs = 2;
    cfg
}

/// Every file under `dir` keyed by its relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn fpqe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpqe")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn smoke_run_writes_every_artifact() {
    let root = tempfile::tempdir().unwrap();
    let input = corpus(root.path());
    let out = root.path().join("out");
    pipeline_run(&config(&input, &out), Step::Features).unwrap();
    for name in [
        pipeline::FEATURES_CSV,
        pipeline::SELECTION_JSON,
        pipeline::MODEL_JSON,
        pipeline::ASSIGNMENTS_CSV,
        pipeline::QAP_REPORT_CSV,
        pipeline::EVAL_JSON,
        pipeline::ROC_CSV,
        pipeline::SCORES_CSV,
        pipeline::FAILURES_CSV,
    ] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let assignments = fs::read_to_string(out.join(pipeline::ASSIGNMENTS_CSV)).unwrap();
    assert_eq!(assignments.lines().count(), 1 + 25);
    assert_eq!(fs::read_dir(out.join(pipeline::ENHANCED_DIR)).unwrap().count(), 25);
    assert!(out.join(pipeline::ENHANCED_DIR).join("3_4_qap_gabor.png").is_file());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join(pipeline::EVAL_JSON)).unwrap()).unwrap();
    assert_eq!(report["genuine_count"], 50);
    assert_eq!(report["impostor_count"], 10);

    // Same config and seed into a second directory: identical bytes.
    let again = root.path().join("again");
    pipeline_run(&config(&input, &again), Step::Features).unwrap();
    assert_eq!(snapshot(&out), snapshot(&again));
}

#[test]
fn stages_run_separately_match_a_single_run() {
    let root = tempfile::tempdir().unwrap();
    let input = corpus(root.path());
    let mut cfg = config(&input, &root.path().join("whole"));
    cfg.eval.enabled = false;
    cfg.paths.labels = None;
    pipeline_run(&cfg, Step::Features).unwrap();
    let whole = snapshot(&cfg.paths.output_dir);

    let step = root.path().join("steps");
    fs::create_dir_all(&step).unwrap();
    let features = step.join(pipeline::FEATURES_CSV);
    let model = step.join(pipeline::MODEL_JSON);
    let assignments = step.join(pipeline::ASSIGNMENTS_CSV);
    let enhanced = step.join(pipeline::ENHANCED_DIR);
    let report = step.join(pipeline::QAP_REPORT_CSV);
    for args in [
        vec!["features", "--images", s(&input), "--out", s(&features)],
        vec!["cluster", "fit", "--features", s(&features), "--model", s(&model), "--assignments", s(&assignments)],
        vec![
            "enhance",
            "--images",
            s(&input),
            "--out",
            s(&enhanced),
            "--stage",
            "qap+gabor",
            "--assignments",
            s(&assignments),
            "--report",
            s(&report),
        ],
    ] {
        let out = fpqe(&args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(snapshot(&step), whole);

    // Resuming at the enhancement step reuses the assignments on disk.
    let resumed = root.path().join("resumed");
    fs::create_dir_all(&resumed).unwrap();
    for name in [pipeline::FEATURES_CSV, pipeline::MODEL_JSON, pipeline::ASSIGNMENTS_CSV] {
        fs::copy(step.join(name), resumed.join(name)).unwrap();
    }
    cfg.paths.output_dir = resumed.clone();
    pipeline_run(&cfg, Step::Enhance).unwrap();
    assert_eq!(snapshot(&resumed), whole);
}

#[test]
fn empty_directory_is_no_input() {
    let root = tempfile::tempdir().unwrap();
    let empty = root.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let out = fpqe(&["run", "--input", s(&empty), "--output", s(&root.path().join("out"))]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["error"], "no_input");
}

#[test]
fn gabor_stage_needs_no_assignments_and_dumps_fields() {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("img");
    write_corpus(&input, 2, 1, SIZE, 3, 1).unwrap();
    let out = root.path().join("g");
    let fields = root.path().join("fields");
    let run = fpqe(&["enhance", "--images", s(&input), "--out", s(&out), "--stage", "gabor", "--fields-dump", s(&fields)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("1_1_gabor.png").is_file());
    let dump = fs::read_to_string(fields.join("2_1_fields.csv")).unwrap();
    assert!(dump.starts_with("bx,by,angle,coherence,freq,valid\n"));
    assert_eq!(dump.lines().count(), 1 + (SIZE / 16) * (SIZE / 16));

    let qap = fpqe(&["enhance", "--images", s(&input), "--out", s(&out), "--stage", "qap"]);
    assert_eq!(qap.status.code(), Some(2), "QAP without assignments is an input error");
}

#[test]
fn eval_from_score_file() {
    let root = tempfile::tempdir().unwrap();
    let scores = root.path().join("scores.csv");
    fs::write(&scores, "type,probe,gallery,score\nG,1_1,1_2,0.9\nG,2_1,2_2,0.4\nI,1_1,2_1,0.5\nI,1_2,2_2,0.1\n").unwrap();
    let out = root.path().join("eval");
    let run = fpqe(&["eval", "--scores", s(&scores), "--out", s(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("eval.json")).unwrap()).unwrap();
    assert_eq!(v["genuine_count"], 2);
    assert!((v["eer"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(fs::read_to_string(out.join("roc.csv")).unwrap().ends_with("inf,0,1\n"));
}

#[cfg(unix)]
#[test]
fn matcher_errors_exit_with_three() {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("img");
    write_corpus(&input, 2, 2, 64, 1, 1).unwrap();
    let out = root.path().join("eval");
    let garbage = fpqe(&["eval", "--images", s(&input), "--matcher", "echo not-a-score {a} {b}", "--out", s(&out)]);
    assert_eq!(garbage.status.code(), Some(3));
    let missing = fpqe(&["eval", "--images", s(&input), "--matcher", "/nonexistent/matcher {a} {b}", "--out", s(&out)]);
    assert_eq!(missing.status.code(), Some(3));
    let ok = fpqe(&["eval", "--images", s(&input), "--matcher", "echo 1 {a} {b}", "--out", s(&out)]);
    assert_eq!(ok.status.code(), Some(3), "`echo 1 a b` prints more than one number");
    let fine = fpqe(&["eval", "--images", s(&input), "--matcher", "sh -c 'echo 7' {a} {b}", "--out", s(&out)]);
    assert!(fine.status.success(), "{}", String::from_utf8_lossy(&fine.stderr));
}
