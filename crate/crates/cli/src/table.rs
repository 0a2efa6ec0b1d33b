//! CSV artifacts: features, labels, assignments, QAP parameter report and field dumps.
//!
//! Floats are written in shortest round-trip form so a file read back reproduces
//! the in-memory values exactly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use fpqe_core::clustering::{QualityAssessment, QualityLabel};
use fpqe_core::features::{QualityFeatures, FEATURE_NAMES};
use fpqe_core::gabor::{FrequencyField, OrientationField};
use fpqe_core::qap::UnsharpParams;

use crate::error::CliError;

/// One `features.csv` row; `path` is the file name inside the image directory.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub path: String,
    pub features: QualityFeatures,
    pub foreground_blocks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub path: String,
    pub qa: QualityAssessment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QapReportRow {
    pub path: String,
    pub label: QualityLabel,
    pub m_quality: f64,
    pub params: UnsharpParams,
}

fn create(path: &Path) -> Result<csv::Writer<File>, CliError> {
    let file = File::create(path).map_err(|e| CliError::input(path.display(), e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn open(path: &Path) -> Result<csv::Reader<File>, CliError> {
    let file = File::open(path).map_err(|e| CliError::input(path.display(), e))?;
    Ok(csv::Reader::from_reader(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::input(path.display(), e)
}

fn check_header(rdr: &mut csv::Reader<impl Read>, path: &Path, want: &[&str]) -> Result<(), CliError> {
    let header = rdr.headers().map_err(csv_err(path))?;
    if header.iter().ne(want.iter().copied()) {
        return Err(CliError::input(
            path.display(),
            format!("header {:?} does not match expected {want:?}", header.iter().collect::<Vec<_>>()),
        ));
    }
    Ok(())
}

fn parse_f64(path: &Path, line: u64, field: &str) -> Result<f64, CliError> {
    field
        .parse()
        .map_err(|_| CliError::input(format!("{} line {line}", path.display()), format!("{field:?} is not a number")))
}

fn flush(mut wtr: csv::Writer<impl Write>, path: &Path) -> Result<(), CliError> {
    wtr.flush().map_err(|e| CliError::input(path.display(), e))
}

fn features_header() -> Vec<&'static str> {
    let mut h = vec!["path"];
    h.extend(FEATURE_NAMES);
    h.push("fb");
    h
}

pub fn write_features(path: &Path, rows: &[FeatureRow]) -> Result<(), CliError> {
    let mut wtr = create(path)?;
    wtr.write_record(features_header()).map_err(csv_err(path))?;
    for r in rows {
        let mut rec = vec![r.path.clone()];
        rec.extend(r.features.to_array().iter().map(f64::to_string));
        rec.push(r.foreground_blocks.to_string());
        wtr.write_record(rec).map_err(csv_err(path))?;
    }
    flush(wtr, path)
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureRow>, CliError> {
    let mut rdr = open(path)?;
    check_header(&mut rdr, path, &features_header())?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut v = [0.0; 11];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = parse_f64(path, line, &rec[i + 1])?;
        }
        let fb = rec[12]
            .parse()
            .map_err(|_| CliError::input(format!("{} line {line}", path.display()), "fb is not a count"))?;
        rows.push(FeatureRow {
            path: rec[0].to_string(),
            features: QualityFeatures::from_array(v),
            foreground_blocks: fb,
        });
    }
    Ok(rows)
}

/// Reads `path,label` rows keyed by path.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, QualityLabel>, CliError> {
    let mut rdr = open(path)?;
    check_header(&mut rdr, path, &["path", "label"])?;
    let mut map = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = rec.position().map_or(0, |p| p.line());
        let label = rec[1]
            .parse()
            .map_err(|e| CliError::input(format!("{} line {line}", path.display()), e))?;
        if map.insert(rec[0].to_string(), label).is_some() {
            return Err(CliError::input(path.display(), format!("{} is labeled twice", &rec[0])));
        }
    }
    Ok(map)
}

pub fn write_labels(path: &Path, labels: &[(String, QualityLabel)]) -> Result<(), CliError> {
    let mut wtr = create(path)?;
    wtr.write_record(["path", "label"]).map_err(csv_err(path))?;
    for (p, l) in labels {
        wtr.write_record([p.as_str(), l.as_str()]).map_err(csv_err(path))?;
    }
    flush(wtr, path)
}

fn assignments_header() -> Vec<&'static str> {
    let mut h = vec!["path", "label"];
    h.extend(QualityLabel::ALL.map(QualityLabel::as_str));
    h
}

/// `path,label` followed by memberships in label order, Dry through Wet.
pub fn write_assignments(path: &Path, rows: &[Assignment]) -> Result<(), CliError> {
    let mut wtr = create(path)?;
    wtr.write_record(assignments_header()).map_err(csv_err(path))?;
    for a in rows {
        let mut rec = vec![a.path.clone(), a.qa.label.to_string()];
        rec.extend(a.qa.memberships.iter().map(f64::to_string));
        wtr.write_record(rec).map_err(csv_err(path))?;
    }
    flush(wtr, path)
}

pub fn read_assignments(path: &Path) -> Result<Vec<Assignment>, CliError> {
    let mut rdr = open(path)?;
    check_header(&mut rdr, path, &assignments_header())?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = rec.position().map_or(0, |p| p.line());
        let label: QualityLabel = rec[1]
            .parse()
            .map_err(|e| CliError::input(format!("{} line {line}", path.display()), e))?;
        let mut memberships = [0.0; 5];
        for (i, slot) in memberships.iter_mut().enumerate() {
            *slot = parse_f64(path, line, &rec[i + 2])?;
        }
        rows.push(Assignment {
            path: rec[0].to_string(),
            qa: QualityAssessment {
                label,
                memberships,
                m_quality: memberships[label.index()],
            },
        });
    }
    Ok(rows)
}

pub fn write_qap_report(path: &Path, rows: &[QapReportRow]) -> Result<(), CliError> {
    let mut wtr = create(path)?;
    wtr.write_record(["path", "label", "m", "R", "A"]).map_err(csv_err(path))?;
    for r in rows {
        wtr.write_record([
            r.path.clone(),
            r.label.to_string(),
            r.m_quality.to_string(),
            r.params.radius.to_string(),
            r.params.amount.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    flush(wtr, path)
}

/// Per-block orientation (radians), coherence, ridge frequency (cycles/pixel) and validity.
pub fn write_fields(path: &Path, of: &OrientationField, ff: &FrequencyField) -> Result<(), CliError> {
    let mut wtr = create(path)?;
    wtr.write_record(["bx", "by", "angle", "coherence", "freq", "valid"])
        .map_err(csv_err(path))?;
    for by in 0..of.blocks_y {
        for bx in 0..of.blocks_x {
            let i = by * of.blocks_x + bx;
            wtr.write_record([
                bx.to_string(),
                by.to_string(),
                of.angle[i].to_string(),
                of.coherence[i].to_string(),
                ff.freq[i].to_string(),
                u8::from(ff.valid[i]).to_string(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    flush(wtr, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_read_back_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let rows = vec![FeatureRow {
            path: "1_1.png".into(),
            features: QualityFeatures::from_array([0.1, 1.0 / 3.0, 2.5e-7, 4.0, -5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0]),
            foreground_blocks: 42,
        }];
        write_features(&p, &rows).unwrap();
        assert_eq!(read_features(&p).unwrap(), rows);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("path,moisture,mean,variance,rvau,rlc,uniformity,contrast,rps,rvu,gabor_q,gabor_shen,fb\n"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn assignments_keep_stored_label() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let qa = QualityAssessment::from_memberships([0.1, 0.2, 0.4, 0.2, 0.1]);
        let rows = vec![Assignment { path: "x.png".into(), qa }];
        write_assignments(&p, &rows).unwrap();
        assert_eq!(read_assignments(&p).unwrap(), rows);
    }

    #[test]
    fn wrong_header_and_bad_label_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.csv");
        std::fs::write(&p, "file,label\na,dry\n").unwrap();
        assert!(read_labels(&p).is_err());
        std::fs::write(&p, "path,label\na,soggy\n").unwrap();
        assert!(read_labels(&p).is_err());
        std::fs::write(&p, "path,label\na,ND\nb,wet\n").unwrap();
        let m = read_labels(&p).unwrap();
        assert_eq!(m["a"], QualityLabel::NormalDry);
    }
}
