//! Session persistence as CSV: header `t_s,ch01,...,ch16,label`, one row per
//! frame, UTF-8 with LF line endings.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::model::{MotionLabel, SensorFrame, Session, CHANNELS, NOMINAL_SAMPLE_RATE_HZ};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed header: expected `{expected}`, got `{got}`")]
    MalformedHeader { expected: String, got: String },
    #[error("row {row}: expected {expected} fields, got {got}")]
    RowArity {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("row {row}, column {column}: non-numeric cell `{cell}`")]
    NonNumericCell {
        row: usize,
        column: usize,
        cell: String,
    },
    #[error("row {row}: unknown label `{label}`")]
    UnknownLabel { row: usize, label: String },
}

fn expected_header() -> String {
    let mut h = String::from("t_s");
    for c in 1..=CHANNELS {
        h.push_str(&format!(",ch{c:02}"));
    }
    h.push_str(",label");
    h
}

fn io_err(path: &Path, source: std::io::Error) -> CsvError {
    CsvError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_csv(session: &Session, path: &Path) -> Result<(), CsvError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let label = session.motion.as_str();
    (|| -> std::io::Result<()> {
        writeln!(w, "{}", expected_header())?;
        for f in &session.frames {
            write!(w, "{:.9}", f.timestamp_us as f64 * 1e-6)?;
            for c in 0..CHANNELS {
                write!(w, ",{:.9}", f.volts[c])?;
            }
            writeln!(w, ",{label}")?;
        }
        w.flush()
    })()
    .map_err(|e| io_err(path, e))
}

pub fn read_csv(path: &Path) -> Result<Session, CsvError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| io_err(path, e))?,
        None => String::new(),
    };
    let expected = expected_header();
    if header.trim_end() != expected {
        return Err(CsvError::MalformedHeader {
            expected,
            got: header,
        });
    }

    let mut frames = Vec::new();
    let mut motion = MotionLabel::Rest;
    let mut saw_label = false;
    for (idx, line) in lines {
        let row = idx + 1; // 1-based data row counting includes the header line
        let line = line.map_err(|e| io_err(path, e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != CHANNELS + 2 {
            return Err(CsvError::RowArity {
                row,
                expected: CHANNELS + 2,
                got: fields.len(),
            });
        }
        let parse = |column: usize| -> Result<f64, CsvError> {
            fields[column]
                .parse::<f64>()
                .map_err(|_| CsvError::NonNumericCell {
                    row,
                    column,
                    cell: fields[column].to_string(),
                })
        };
        let t_s = parse(0)?;
        let mut volts = [0.0f64; CHANNELS];
        for c in 0..CHANNELS {
            volts[c] = parse(1 + c)?;
        }
        let label_cell = fields[CHANNELS + 1];
        if !label_cell.is_empty() {
            let label: MotionLabel =
                label_cell
                    .parse()
                    .map_err(|_| CsvError::UnknownLabel {
                        row,
                        label: label_cell.to_string(),
                    })?;
            motion = label;
            saw_label = true;
        }
        frames.push(SensorFrame {
            timestamp_us: (t_s * 1e6).round() as u64,
            volts,
            seq: frames.len() as u32,
        });
    }

    // subject/motion/set are encoded in the simulator's file naming scheme
    let (subject_id, name_motion, set_index) = parse_session_name(path);
    let motion = if saw_label {
        motion
    } else {
        name_motion.unwrap_or(MotionLabel::Rest)
    };
    Ok(Session {
        subject_id,
        motion,
        set_index,
        frames,
        sample_rate_hz: NOMINAL_SAMPLE_RATE_HZ,
    })
}

/// Parse `subject_motion_set.csv` file names; fall back to defaults.
fn parse_session_name(path: &Path) -> (String, Option<MotionLabel>, u8) {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    let parts: Vec<&str> = stem.split('_').collect();
    if parts.len() == 3 {
        if let (Ok(motion), Ok(set)) = (parts[1].parse::<MotionLabel>(), parts[2].parse::<u8>()) {
            return (parts[0].to_string(), Some(motion), set);
        }
    }
    ("unknown".to_string(), None, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn session(frames: Vec<SensorFrame>) -> Session {
        Session {
            subject_id: "s01".into(),
            motion: MotionLabel::TurnRound,
            set_index: 2,
            frames,
            sample_rate_hz: 60.0,
        }
    }

    fn frame(i: usize, base: f64) -> SensorFrame {
        let mut volts = [0.0; CHANNELS];
        for (c, v) in volts.iter_mut().enumerate() {
            *v = base + c as f64 * 0.01;
        }
        SensorFrame {
            timestamp_us: (i as f64 * 1e6 / 60.0).round() as u64,
            volts,
            seq: i as u32,
        }
    }

    #[test]
    fn two_frames_make_three_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s01_A7_2.csv");
        write_csv(&session(vec![frame(0, 1.0), frame(1, 1.1)]), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("t_s,ch01,"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn round_trip_preserves_session() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s01_A7_2.csv");
        let s = session((0..50).map(|i| frame(i, 1.0 + i as f64 * 1e-4)).collect());
        write_csv(&s, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.subject_id, "s01");
        assert_eq!(back.motion, MotionLabel::TurnRound);
        assert_eq!(back.set_index, 2);
        assert_eq!(back.frames.len(), s.frames.len());
        for (a, b) in s.frames.iter().zip(&back.frames) {
            assert!(a.timestamp_us.abs_diff(b.timestamp_us) <= 1);
            for c in 0..CHANNELS {
                assert!((a.volts[c] - b.volts[c]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn short_row_reports_arity_with_row_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let mut text = format!("{}\n", super::expected_header());
        text.push_str("0.0");
        for _ in 0..15 {
            text.push_str(",1.0");
        }
        text.push_str(",A1\n");
        std::fs::write(&path, text).unwrap();
        match read_csv(&path) {
            Err(CsvError::RowArity { row: 2, got: 17, .. }) => {}
            other => panic!("expected RowArity, got {other:?}"),
        }
    }

    #[test]
    fn bad_cell_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let mut text = format!("{}\n", super::expected_header());
        text.push_str("0.0,oops");
        for _ in 0..15 {
            text.push_str(",1.0");
        }
        text.push_str(",A1\n");
        std::fs::write(&path, text).unwrap();
        match read_csv(&path) {
            Err(CsvError::NonNumericCell { row: 2, column: 1, cell }) => assert_eq!(cell, "oops"),
            other => panic!("expected NonNumericCell, got {other:?}"),
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "time,stuff\n").unwrap();
        assert!(matches!(
            read_csv(&path),
            Err(CsvError::MalformedHeader { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn csv_round_trip_random_voltages(rows in prop::collection::vec(0.0f64..3.3, 1..40)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("s09_A3_4.csv");
            let frames: Vec<SensorFrame> = rows.iter().enumerate().map(|(i, &v)| frame(i, v)).collect();
            let s = Session { motion: MotionLabel::FootInversion, set_index: 4,
                              subject_id: "s09".into(), frames, sample_rate_hz: 60.0 };
            write_csv(&s, &path).unwrap();
            let back = read_csv(&path).unwrap();
            prop_assert_eq!(back.frames.len(), s.frames.len());
            for (a, b) in s.frames.iter().zip(&back.frames) {
                for c in 0..CHANNELS {
                    prop_assert!((a.volts[c] - b.volts[c]).abs() <= 1e-9);
                }
            }
        }
    }
}
