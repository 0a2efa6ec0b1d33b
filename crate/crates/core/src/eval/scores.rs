use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{EerResult, EvalError, ImageId, Pair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub pair: Pair,
    pub score: f64,
}

/// Similarity scores; higher means more likely the same finger.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub genuine: Vec<Scored>,
    pub impostor: Vec<Scored>,
}

impl ScoreSet {
    pub fn genuine_scores(&self) -> Vec<f64> {
        self.genuine.iter().map(|s| s.score).collect()
    }

    pub fn impostor_scores(&self) -> Vec<f64> {
        self.impostor.iter().map(|s| s.score).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    #[serde(rename = "type")]
    kind: String,
    probe: String,
    gallery: String,
    score: f64,
}

fn parse_id(field: &str, line: u64) -> Result<ImageId, EvalError> {
    ImageId::parse_stem(field).ok_or_else(|| EvalError::ScoreFile {
        line,
        reason: format!("image id {field:?} is not subject_impression"),
    })
}

fn csv_error(e: csv::Error) -> EvalError {
    let line = e.position().map_or(0, |p| p.line());
    EvalError::ScoreFile {
        line,
        reason: e.to_string(),
    }
}

/// Reads `type,probe,gallery,score` rows with `type` in {G, I}.
pub fn read_scores(reader: impl Read) -> Result<ScoreSet, EvalError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut set = ScoreSet::default();
    for row in rdr.deserialize::<ScoreRow>() {
        let row = row.map_err(csv_error)?;
        let line = set.genuine.len() as u64 + set.impostor.len() as u64 + 2;
        let scored = Scored {
            pair: Pair {
                probe: parse_id(&row.probe, line)?,
                gallery: parse_id(&row.gallery, line)?,
            },
            score: row.score,
        };
        if !scored.score.is_finite() {
            return Err(EvalError::NonFiniteScore(scored.score));
        }
        match row.kind.as_str() {
            "G" => set.genuine.push(scored),
            "I" => set.impostor.push(scored),
            other => {
                return Err(EvalError::ScoreFile {
                    line,
                    reason: format!("type {other:?} is neither G nor I"),
                })
            }
        }
    }
    Ok(set)
}

pub fn write_scores(writer: impl Write, scores: &ScoreSet) -> Result<(), EvalError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let rows = scores
        .genuine
        .iter()
        .map(|s| ("G", s))
        .chain(scores.impostor.iter().map(|s| ("I", s)));
    for (kind, s) in rows {
        wtr.serialize(ScoreRow {
            kind: kind.to_string(),
            probe: s.pair.probe.stem(),
            gallery: s.pair.gallery.stem(),
            score: s.score,
        })
        .map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

/// `threshold,fmr,fnmr` rows; the final `+inf` threshold is written as `inf`.
pub fn write_roc(writer: impl Write, result: &EerResult) -> Result<(), EvalError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["threshold", "fmr", "fnmr"]).map_err(csv_error)?;
    for p in &result.roc {
        wtr.write_record([p.threshold.to_string(), p.fmr.to_string(), p.fnmr.to_string()])
            .map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::eer_from_scores;

    #[test]
    fn reads_score_file() {
        let text = "type,probe,gallery,score\nG,1_1,1_2,40\nI,1_1,2_1,3.5\nG,2_1,2_2,12\n";
        let set = read_scores(text.as_bytes()).unwrap();
        assert_eq!(set.genuine_scores(), vec![40.0, 12.0]);
        assert_eq!(set.impostor_scores(), vec![3.5]);
        assert_eq!(set.impostor[0].pair.gallery, ImageId { subject: 2, impression: 1 });
    }

    #[test]
    fn written_file_reads_back() {
        let text = "type,probe,gallery,score\nG,1_1,1_2,40.0\nI,1_1,2_1,3.5\n";
        let set = read_scores(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_scores(&mut out, &set).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn bad_rows_rejected() {
        for text in [
            "type,probe,gallery,score\nX,1_1,1_2,4\n",
            "type,probe,gallery,score\nG,a,1_2,4\n",
            "type,probe,gallery,score\nG,1_1,1_2,high\n",
        ] {
            assert!(matches!(read_scores(text.as_bytes()), Err(EvalError::ScoreFile { .. })), "{text}");
        }
    }

    #[test]
    fn roc_csv_ends_at_infinity() {
        let r = eer_from_scores(&[2.0], &[1.0]).unwrap();
        let mut out = Vec::new();
        write_roc(&mut out, &r).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "threshold,fmr,fnmr\n1,1,0\n2,0,0\ninf,0,1\n");
    }
}
