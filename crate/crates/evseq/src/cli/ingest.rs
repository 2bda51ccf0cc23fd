//! Streaming record ingestion: one record per line, comma-separated fields
//! or one JSON object per line. Parse errors carry 1-based line numbers.

use std::io::BufRead;

use crate::error::{Error, Result};
use crate::param::two_by_two::TwoByTwoBlock;
use crate::sim::Observation;

/// The record shape a method expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordSchema {
    /// One real number per line, e.g. `0.5` or `{"x": 0.5}`.
    Scalar,
    /// One 0/1 per line.
    Bit,
    /// `n_a + n_b` bits per line, group a first, e.g. `1,0,1,1` or
    /// `{"a": [1,0], "b": [1,1]}`.
    Block { n_a: usize, n_b: usize },
    /// One group bit per line: 1 = event in the treatment group.
    Event,
}

/// Streams `(line_number, record)` pairs; constant memory in the stream
/// length.
pub fn ingest_records<R: BufRead>(
    reader: R,
    schema: RecordSchema,
) -> impl Iterator<Item = Result<(usize, Observation)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(move |(idx, line)| {
            let line_no = idx + 1;
            match line {
                Err(e) => Some(Err(Error::Io(e))),
                Ok(raw) => {
                    let trimmed = raw.trim().to_string();
                    if trimmed.is_empty() || trimmed.starts_with('#') {
                        None
                    } else {
                        Some(parse_record(&trimmed, schema, line_no).map(|o| (line_no, o)))
                    }
                }
            }
        })
}

fn parse_record(line: &str, schema: RecordSchema, line_no: usize) -> Result<Observation> {
    if line.starts_with('{') {
        parse_json_record(line, schema, line_no)
    } else {
        parse_csv_record(line, schema, line_no)
    }
}

fn parse_scalar_field(field: &str, line_no: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::data_at(line_no, format!("non-numeric field '{field}'")))
}

fn parse_bit_field(field: &str, line_no: usize) -> Result<u8> {
    match field.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::data_at(line_no, format!("expected 0 or 1, got '{other}'"))),
    }
}

fn parse_csv_record(line: &str, schema: RecordSchema, line_no: usize) -> Result<Observation> {
    match schema {
        RecordSchema::Scalar => {
            let v = parse_scalar_field(line, line_no)?;
            if v.is_nan() {
                return Err(Error::data_at(line_no, "NaN observation".to_string()));
            }
            Ok(Observation::Scalar(v))
        }
        RecordSchema::Bit => Ok(Observation::Bit(parse_bit_field(line, line_no)?)),
        RecordSchema::Block { n_a, n_b } => {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n_a + n_b {
                return Err(Error::data_at(
                    line_no,
                    format!(
                        "expected {} outcome bits ({} group a + {} group b), got {}",
                        n_a + n_b,
                        n_a,
                        n_b,
                        fields.len()
                    ),
                ));
            }
            let bits: Vec<u8> = fields
                .iter()
                .map(|f| parse_bit_field(f, line_no))
                .collect::<Result<_>>()?;
            Ok(Observation::Block(
                TwoByTwoBlock::new(bits[..n_a].to_vec(), bits[n_a..].to_vec())
                    .map_err(|e| Error::data_at(line_no, e.to_string()))?,
            ))
        }
        RecordSchema::Event => {
            let b = parse_bit_field(line, line_no)?;
            Ok(Observation::Event {
                in_treatment: b == 1,
            })
        }
    }
}

fn parse_json_record(line: &str, schema: RecordSchema, line_no: usize) -> Result<Observation> {
    let value: serde_json::Value = serde_json::from_str(line)
        .map_err(|e| Error::data_at(line_no, format!("bad JSON record: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::data_at(line_no, "JSON record must be an object".to_string()))?;
    let num = |key: &str| -> Result<f64> {
        obj.get(key)
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| Error::data_at(line_no, format!("missing numeric field '{key}'")))
    };
    match schema {
        RecordSchema::Scalar => Ok(Observation::Scalar(num("x")?)),
        RecordSchema::Bit => {
            let v = num("x")?;
            if v == 0.0 || v == 1.0 {
                Ok(Observation::Bit(v as u8))
            } else {
                Err(Error::data_at(line_no, format!("expected a bit, got {v}")))
            }
        }
        RecordSchema::Block { n_a, n_b } => {
            let arr = |key: &str| -> Result<Vec<u8>> {
                obj.get(key)
                    .and_then(serde_json::Value::as_array)
                    .ok_or_else(|| {
                        Error::data_at(line_no, format!("missing array field '{key}'"))
                    })?
                    .iter()
                    .map(|v| {
                        v.as_u64()
                            .filter(|&b| b <= 1)
                            .map(|b| b as u8)
                            .ok_or_else(|| Error::data_at(line_no, "bits must be 0/1".to_string()))
                    })
                    .collect()
            };
            let a = arr("a")?;
            let b = arr("b")?;
            if a.len() != n_a || b.len() != n_b {
                return Err(Error::data_at(
                    line_no,
                    format!("expected group sizes {n_a}/{n_b}"),
                ));
            }
            Ok(Observation::Block(
                TwoByTwoBlock::new(a, b).map_err(|e| Error::data_at(line_no, e.to_string()))?,
            ))
        }
        RecordSchema::Event => {
            let v = num("group")?;
            Ok(Observation::Event {
                in_treatment: v == 1.0,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn collect(input: &str, schema: RecordSchema) -> Vec<Result<(usize, Observation)>> {
        ingest_records(Cursor::new(input.to_string()), schema).collect()
    }

    #[test]
    fn scalar_lines() {
        let out = collect("0.5\n-1.25\n", RecordSchema::Scalar);
        assert_eq!(out.len(), 2);
        assert_eq!(
            out[0].as_ref().unwrap().1,
            Observation::Scalar(0.5)
        );
    }

    #[test]
    fn block_positional_schema() {
        let out = collect("1,0,1,1\n", RecordSchema::Block { n_a: 2, n_b: 2 });
        let (_, obs) = out[0].as_ref().unwrap();
        match obs {
            Observation::Block(b) => {
                assert_eq!(b.group_a, vec![1, 0]);
                assert_eq!(b.group_b, vec![1, 1]);
            }
            _ => panic!("expected a block"),
        }
    }

    #[test]
    fn parse_error_names_the_line() {
        let out = collect("0.5\nabc\n0.25\n", RecordSchema::Scalar);
        let err = out[1].as_ref().unwrap_err();
        match err {
            Error::Data { line, .. } => assert_eq!(*line, Some(2)),
            other => panic!("expected data error, got {other}"),
        }
    }

    #[test]
    fn json_records() {
        let out = collect("{\"x\": 0.75}\n", RecordSchema::Scalar);
        assert_eq!(out[0].as_ref().unwrap().1, Observation::Scalar(0.75));
        let out = collect(
            "{\"a\": [1], \"b\": [0, 1]}\n",
            RecordSchema::Block { n_a: 1, n_b: 2 },
        );
        assert!(matches!(out[0].as_ref().unwrap().1, Observation::Block(_)));
    }

    #[test]
    fn blank_lines_and_comments_skipped() {
        let out = collect("# header\n\n0.5\n", RecordSchema::Scalar);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].as_ref().unwrap().0, 3);
    }
}
