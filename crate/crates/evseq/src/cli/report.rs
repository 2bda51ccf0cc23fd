//! Report emission: CSV with a header row, or a single JSON document with a
//! `meta` block and a `rows` array. Rows are written as they are produced,
//! so emitting a report keeps constant memory in the stream length.
//! Floating-point values are serialized with 17 significant digits so
//! re-ingestion reproduces them exactly.

use std::io::Write;

use serde_json::{json, Value};

use crate::error::Result;

/// One cell of a report row.
#[derive(Debug, Clone, PartialEq)]
pub enum ReportValue {
    Num(f64),
    Int(u64),
    Str(String),
    Bool(bool),
}

/// 17-significant-digit scientific form; round-trips through `str::parse`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        format!("{x:.16e}")
    }
}

impl ReportValue {
    fn to_csv_field(&self) -> String {
        match self {
            ReportValue::Num(x) => fmt_f64(*x),
            ReportValue::Int(i) => i.to_string(),
            ReportValue::Str(s) => s.clone(),
            ReportValue::Bool(b) => b.to_string(),
        }
    }

    fn to_json_value(&self) -> Value {
        match self {
            ReportValue::Num(x) => {
                if x.is_finite() {
                    serde_json::Number::from_f64(*x)
                        .map(Value::Number)
                        .unwrap_or_else(|| Value::String(fmt_f64(*x)))
                } else {
                    Value::String(fmt_f64(*x))
                }
            }
            ReportValue::Int(i) => json!(i),
            ReportValue::Str(s) => json!(s),
            ReportValue::Bool(b) => json!(b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Streaming report writer. The JSON form is
/// `{"meta": ..., "rows": [ ... ]}` and the CSV form starts with a header
/// row; either way, call [`ReportSink::finish`] when done.
pub struct ReportSink<W: Write> {
    writer: W,
    format: ReportFormat,
    columns: Vec<String>,
    rows_written: u64,
}

impl<W: Write> ReportSink<W> {
    pub fn new(
        mut writer: W,
        format: ReportFormat,
        meta: &Value,
        columns: Vec<String>,
    ) -> Result<Self> {
        match format {
            ReportFormat::Csv => {
                writeln!(writer, "{}", columns.join(","))?;
            }
            ReportFormat::Json => {
                write!(writer, "{{\"meta\":{meta},\"rows\":[")?;
            }
        }
        Ok(ReportSink {
            writer,
            format,
            columns,
            rows_written: 0,
        })
    }

    pub fn write_row(&mut self, row: &[ReportValue]) -> Result<()> {
        debug_assert_eq!(row.len(), self.columns.len());
        match self.format {
            ReportFormat::Csv => {
                let fields: Vec<String> = row.iter().map(ReportValue::to_csv_field).collect();
                writeln!(self.writer, "{}", fields.join(","))?;
            }
            ReportFormat::Json => {
                if self.rows_written > 0 {
                    write!(self.writer, ",")?;
                }
                let obj: serde_json::Map<String, Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(ReportValue::to_json_value))
                    .collect();
                write!(self.writer, "{}", Value::Object(obj))?;
            }
        }
        self.rows_written += 1;
        Ok(())
    }

    pub fn rows_written(&self) -> u64 {
        self.rows_written
    }

    pub fn finish(mut self) -> Result<()> {
        if self.format == ReportFormat::Json {
            writeln!(self.writer, "]}}")?;
        }
        self.writer.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sink_to_string(
        format: ReportFormat,
        rows: &[Vec<ReportValue>],
    ) -> String {
        let mut buf = Vec::new();
        {
            let mut sink = ReportSink::new(
                &mut buf,
                format,
                &json!({"seed": 1}),
                vec!["x".into(), "label".into()],
            )
            .unwrap();
            for row in rows {
                sink.write_row(row).unwrap();
            }
            sink.finish().unwrap();
        }
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn csv_header_only_when_empty() {
        assert_eq!(sink_to_string(ReportFormat::Csv, &[]), "x,label\n");
    }

    #[test]
    fn numbers_round_trip_exactly() {
        for &x in &[
            0.1,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02e23,
            -1.7976931348623157e308,
            5e-324,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s} -> {back}");
        }
        assert_eq!(fmt_f64(f64::INFINITY).parse::<f64>().unwrap(), f64::INFINITY);
    }

    #[test]
    fn json_has_meta_and_rows() {
        let out = sink_to_string(
            ReportFormat::Json,
            &[
                vec![ReportValue::Num(0.5), ReportValue::Str("a".into())],
                vec![ReportValue::Num(1.5), ReportValue::Str("b".into())],
            ],
        );
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["meta"]["seed"], 1);
        assert_eq!(v["rows"][0]["x"], 0.5);
        assert_eq!(v["rows"][1]["label"], "b");
    }
}
