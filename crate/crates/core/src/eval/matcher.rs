use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvalError, ImageId, Pair, ScoreSet, Scored};
use crate::imgcore::{io, GrayImage};

/// Per-pair outcome that does not abort a run.
#[derive(Debug, Clone, PartialEq)]
pub enum MatchError {
    /// The matcher exited unsuccessfully; `None` when killed by a signal.
    Exit { status: Option<i32>, stderr: String },
    /// The matcher could not be launched at all.
    Spawn(String),
    /// Standard output was not a single finite number.
    Parse(String),
    Image(String),
}

/// Scores one probe/gallery image pair; higher means more similar.
pub trait Matcher: Sync {
    fn score(&self, probe: &Path, gallery: &Path) -> Result<f64, MatchError>;
}

/// External matcher invoked once per pair. `{a}` and `{b}` in the template are
/// replaced with the probe and gallery paths; the program must print one number.
#[derive(Debug, Clone)]
pub struct ExternalCommand {
    argv: Vec<String>,
}

impl ExternalCommand {
    pub fn new(template: &str) -> Result<Self, EvalError> {
        let argv = shlex::split(template).ok_or_else(|| EvalError::InvalidTemplate(template.to_string()))?;
        let has = |p: &str| argv.iter().any(|a| a.contains(p));
        if argv.is_empty() || !has("{a}") || !has("{b}") {
            return Err(EvalError::InvalidTemplate(template.to_string()));
        }
        Ok(Self { argv })
    }
}

pub(crate) fn parse_score(stdout: &str) -> Result<f64, MatchError> {
    let text = stdout.trim();
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(MatchError::Parse(text.chars().take(80).collect())),
    }
}

impl Matcher for ExternalCommand {
    fn score(&self, probe: &Path, gallery: &Path) -> Result<f64, MatchError> {
        let (a, b) = (probe.to_string_lossy(), gallery.to_string_lossy());
        let args: Vec<String> = self.argv.iter().map(|s| s.replace("{a}", &a).replace("{b}", &b)).collect();
        let out = Command::new(&args[0])
            .args(&args[1..])
            .output()
            .map_err(|e| MatchError::Spawn(format!("{}: {e}", args[0])))?;
        if !out.status.success() {
            return Err(MatchError::Exit {
                status: out.status.code(),
                stderr: String::from_utf8_lossy(&out.stderr).trim().chars().take(200).collect(),
            });
        }
        parse_score(&String::from_utf8_lossy(&out.stdout))
    }
}

/// In-process stand-in matcher: the best normalized cross-correlation over integer
/// shifts up to `max_shift` pixels, computed on the overlapping region.
#[derive(Debug, Clone, Copy)]
pub struct CorrelationMatcher {
    pub max_shift: usize,
}

impl Default for CorrelationMatcher {
    fn default() -> Self {
        Self { max_shift: 4 }
    }
}

pub fn correlation_score(a: &GrayImage, b: &GrayImage, max_shift: usize) -> f64 {
    let (w, h) = (a.width().min(b.width()), a.height().min(b.height()));
    let (av, bv) = (a.to_f64(), b.to_f64());
    let s = max_shift as isize;
    let mut best = f64::NEG_INFINITY;
    for dy in -s..=s {
        for dx in -s..=s {
            let (x0, x1) = ((-dx).max(0) as usize, (w as isize - dx.max(0)) as usize);
            let (y0, y1) = ((-dy).max(0) as usize, (h as isize - dy.max(0)) as usize);
            if x1 <= x0 || y1 <= y0 {
                continue;
            }
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in y0..y1 {
                let ra = y * a.width();
                let rb = (y as isize + dy) as usize * b.width();
                for x in x0..x1 {
                    let p = av[ra + x];
                    let q = bv[rb + (x as isize + dx) as usize];
                    sa += p;
                    sb += q;
                    saa += p * p;
                    sbb += q * q;
                    sab += p * q;
                }
            }
            let n = ((x1 - x0) * (y1 - y0)) as f64;
            let cov = sab - sa * sb / n;
            let var = (saa - sa * sa / n) * (sbb - sb * sb / n);
            let r = if var > 0.0 { cov / var.sqrt() } else { 0.0 };
            best = best.max(r);
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

impl Matcher for CorrelationMatcher {
    fn score(&self, probe: &Path, gallery: &Path) -> Result<f64, MatchError> {
        let load = |p: &Path| io::read_gray(p).map_err(|e| MatchError::Image(format!("{}: {e}", p.display())));
        Ok(correlation_score(&load(probe)?, &load(gallery)?, self.max_shift))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairKind {
    Genuine,
    Impostor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchFailure {
    pub pair: Pair,
    pub kind: PairKind,
    pub status: Option<i32>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchRun {
    pub scores: ScoreSet,
    pub failures: Vec<MatchFailure>,
}

/// Maps `subject_impression` file stems in `dir` to image paths.
pub fn index_images(dir: &Path) -> Result<HashMap<ImageId, PathBuf>, EvalError> {
    let mut map = HashMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if !io::is_supported_image(&path) {
            continue;
        }
        let id = path.file_stem().and_then(|s| s.to_str()).and_then(ImageId::parse_stem);
        if let Some(id) = id {
            if let Some(prev) = map.insert(id, path.clone()) {
                return Err(EvalError::DuplicateImage(id.stem(), prev, path));
            }
        }
    }
    Ok(map)
}

/// Runs the matcher on every pair with at most `jobs` concurrent invocations.
///
/// Unsuccessful exits and unreadable images are recorded and the pair is skipped.
/// Unparsable output or a matcher that cannot be launched aborts the run.
pub fn run_matcher(
    genuine: &[Pair],
    impostor: &[Pair],
    image_dir: &Path,
    matcher: &dyn Matcher,
    jobs: usize,
) -> Result<MatchRun, EvalError> {
    let images = index_images(image_dir)?;
    let resolve = |id: &ImageId| images.get(id).ok_or_else(|| EvalError::MissingImage(id.stem()));
    let work: Vec<(PairKind, Pair, &PathBuf, &PathBuf)> = genuine
        .iter()
        .map(|p| (PairKind::Genuine, *p))
        .chain(impostor.iter().map(|p| (PairKind::Impostor, *p)))
        .map(|(k, p)| Ok((k, p, resolve(&p.probe)?, resolve(&p.gallery)?)))
        .collect::<Result<_, EvalError>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    let outcomes: Vec<Result<f64, MatchError>> =
        pool.install(|| work.par_iter().map(|(_, _, a, b)| matcher.score(a, b)).collect());

    let mut run = MatchRun {
        scores: ScoreSet::default(),
        failures: Vec::new(),
    };
    for ((kind, pair, _, _), outcome) in work.into_iter().zip(outcomes) {
        let (status, reason) = match outcome {
            Ok(score) => {
                let list = match kind {
                    PairKind::Genuine => &mut run.scores.genuine,
                    PairKind::Impostor => &mut run.scores.impostor,
                };
                list.push(Scored { pair, score });
                continue;
            }
            Err(MatchError::Exit { status, stderr }) => (status, stderr),
            Err(MatchError::Image(reason)) => (None, reason),
            Err(MatchError::Parse(output)) => return Err(EvalError::ParseError { pair, output }),
            Err(MatchError::Spawn(reason)) => return Err(EvalError::Spawn(reason)),
        };
        log::warn!("matcher failed on {} vs {}: {reason}", pair.probe, pair.gallery);
        run.failures.push(MatchFailure {
            pair,
            kind,
            status,
            reason,
        });
    }
    Ok(run)
}
