//! File formats: surface and field CSVs, key-value metadata and manifests.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! file reads back bit-exactly.

use crate::error::{Error, Result};
use crate::inverse::{DataCase, FieldValues, IterationRecord, ObservationSet};
use crate::mom::Polarization;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

fn write_rows(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(parse_err)?;
    for r in rows {
        w.write_record(&r).map_err(parse_err)?;
    }
    let bytes = w.into_inner().map_err(parse_err)?;
    String::from_utf8(bytes).map_err(parse_err)
}

/// Columns of a numeric CSV, checking the header.
fn read_columns(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let got: Vec<String> = r.headers().map_err(parse_err)?.iter().map(|s| s.trim().to_string()).collect();
    if got != header {
        return Err(Error::Parse(format!("expected header {header:?}, found {got:?}")));
    }
    let mut cols = vec![Vec::new(); header.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(parse_err)?;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!("row {}: {} fields", line + 2, rec.len())));
        }
        for (c, field) in cols.iter_mut().zip(rec.iter()) {
            c.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}: {field:?}", line + 2)))?,
            );
        }
    }
    Ok(cols)
}

pub fn write_surface_csv(x: &[f64], h: &[f64]) -> Result<String> {
    write_rows(
        &["x", "h"],
        x.iter().zip(h).map(|(x, h)| vec![x.to_string(), h.to_string()]),
    )
}

pub fn read_surface_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut c = read_columns(text, &["x", "h"])?;
    let h = c.pop().unwrap();
    Ok((c.pop().unwrap(), h))
}

pub fn write_field_csv(points: &[f64], values: &FieldValues) -> Result<String> {
    match values {
        FieldValues::Full(v) => write_rows(
            &["x", "re", "im"],
            points
                .iter()
                .zip(v)
                .map(|(x, z)| vec![x.to_string(), z.re.to_string(), z.im.to_string()]),
        ),
        FieldValues::Phaseless(a) => write_rows(
            &["x", "amp"],
            points.iter().zip(a).map(|(x, a)| vec![x.to_string(), a.to_string()]),
        ),
    }
}

pub fn read_field_csv(text: &str) -> Result<(Vec<f64>, FieldValues)> {
    let first = text.lines().next().unwrap_or("").trim();
    if first == "x,amp" {
        let mut c = read_columns(text, &["x", "amp"])?;
        let a = c.pop().unwrap();
        Ok((c.pop().unwrap(), FieldValues::Phaseless(a)))
    } else {
        let c = read_columns(text, &["x", "re", "im"])?;
        let v = c[1].iter().zip(&c[2]).map(|(&r, &i)| Complex64::new(r, i)).collect();
        Ok((c[0].clone(), FieldValues::Full(v)))
    }
}

/// Sidecar for a field file: everything needed to interpret the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMetadata {
    pub polarization: Polarization,
    pub case: DataCase,
    pub k: f64,
    pub alpha: f64,
    pub zeta: f64,
    pub half_length: f64,
    pub noise: f64,
    pub seed: u64,
}

pub fn observation_set(points: Vec<f64>, values: FieldValues, meta: &FieldMetadata) -> Result<ObservationSet> {
    if values.case() != meta.case {
        return Err(Error::Validation(format!(
            "metadata says case {} but the file holds case {} data",
            meta.case,
            values.case()
        )));
    }
    ObservationSet::new(points, meta.zeta, meta.k, meta.alpha, values)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// `key = value` lines; nested structs use dotted keys.
pub fn to_kv<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(parse_err)?;
    let mut pairs = Vec::new();
    flatten("", &v, &mut pairs);
    Ok(pairs.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect())
}

pub fn from_kv<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut root = Map::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, raw) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
        let raw = raw.trim();
        let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut parts: Vec<&str> = key.trim().split('.').collect();
        let last = parts.pop().unwrap();
        let mut node = &mut root;
        for p in parts {
            node = node
                .entry(p.to_string())
                .or_insert_with(|| Value::Object(Map::new()))
                .as_object_mut()
                .ok_or_else(|| Error::Parse(format!("line {}: {p} is not a section", n + 1)))?;
        }
        node.insert(last.to_string(), value);
    }
    serde_json::from_value(Value::Object(root)).map_err(parse_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestFormat {
    Json,
    Kv,
}

impl std::str::FromStr for ManifestFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ManifestFormat::Json),
            "kv" => Ok(ManifestFormat::Kv),
            _ => Err(Error::Parse(format!("manifest format must be json or kv, got {s:?}"))),
        }
    }
}

impl ManifestFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ManifestFormat::Json => "json",
            ManifestFormat::Kv => "kv",
        }
    }

    pub fn render<T: Serialize>(self, value: &T) -> Result<String> {
        match self {
            ManifestFormat::Json => serde_json::to_string_pretty(value)
                .map(|s| s + "\n")
                .map_err(parse_err),
            ManifestFormat::Kv => to_kv(value),
        }
    }

    pub fn parse<T: DeserializeOwned>(self, text: &str) -> Result<T> {
        match self {
            ManifestFormat::Json => serde_json::from_str(text).map_err(parse_err),
            ManifestFormat::Kv => from_kv(text),
        }
    }
}

pub fn write_history_csv(history: &[IterationRecord]) -> Result<String> {
    write_rows(
        &["iteration", "n_t", "loss", "field", "boundary", "grad_norm"],
        history.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                r.n_t.to_string(),
                r.loss.to_string(),
                r.field.to_string(),
                r.boundary.to_string(),
                r.grad_norm.to_string(),
            ]
        }),
    )
}

pub fn read_history_csv(text: &str) -> Result<Vec<IterationRecord>> {
    let c = read_columns(text, &["iteration", "n_t", "loss", "field", "boundary", "grad_norm"])?;
    Ok((0..c[0].len())
        .map(|i| IterationRecord {
            iteration: c[0][i] as usize,
            n_t: c[1][i] as usize,
            loss: c[2][i],
            field: c[3][i],
            boundary: c[4][i],
            grad_norm: c[5][i],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inverse::{Experiment, TrainConfig};

    #[test]
    fn surface_round_trip_is_exact() {
        let x = vec![-7.966666666666667, 0.1, 1e-300, 3.0];
        let h = vec![0.1 + 0.2, -1.0 / 3.0, 0.0, 5e-17];
        let text = write_surface_csv(&x, &h).unwrap();
        assert!(text.starts_with("x,h\n"));
        assert_eq!(read_surface_csv(&text).unwrap(), (x, h));
    }

    #[test]
    fn field_round_trips() {
        let x = vec![0.0, 0.5];
        let full = FieldValues::Full(vec![Complex64::new(0.1, -0.7), Complex64::new(1.0 / 7.0, 2.0)]);
        let t = write_field_csv(&x, &full).unwrap();
        assert_eq!(read_field_csv(&t).unwrap(), (x.clone(), full));
        let amp = FieldValues::Phaseless(vec![0.25, 1.0 / 3.0]);
        let t = write_field_csv(&x, &amp).unwrap();
        assert!(t.starts_with("x,amp\n"));
        assert_eq!(read_field_csv(&t).unwrap(), (x, amp));
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read_surface_csv("a,b\n1,2\n").is_err());
        assert!(read_surface_csv("x,h\n1,oops\n").is_err());
    }

    #[test]
    fn kv_round_trip_nested() {
        let exp = Experiment {
            noise: 0.1,
            train: TrainConfig {
                seed: 42,
                learning_rate: 1.0 / 3.0,
                ..TrainConfig::default()
            },
            ..Experiment::default()
        };
        let text = to_kv(&exp).unwrap();
        assert!(text.contains("train.polarization = TE\n"));
        let back: Experiment = from_kv(&text).unwrap();
        assert_eq!(back, exp);
        let json = ManifestFormat::Json.render(&exp).unwrap();
        assert_eq!(ManifestFormat::Json.parse::<Experiment>(&json).unwrap(), exp);
    }

    #[test]
    fn metadata_case_mismatch() {
        let meta = FieldMetadata {
            polarization: Polarization::TE,
            case: DataCase::B,
            k: 1.0,
            alpha: -0.5,
            zeta: 0.5,
            half_length: 1.0,
            noise: 0.0,
            seed: 0,
        };
        let v = FieldValues::Full(vec![Complex64::new(0.0, 0.0)]);
        assert!(observation_set(vec![0.0], v, &meta).is_err());
        assert_eq!(from_kv::<FieldMetadata>(&to_kv(&meta).unwrap()).unwrap(), meta);
    }

    #[test]
    fn history_round_trip() {
        let h = vec![IterationRecord {
            iteration: 3,
            n_t: 250,
            loss: 0.123456789012345,
            field: 0.1,
            boundary: 0.023456789012345,
            grad_norm: 4.5,
        }];
        assert_eq!(read_history_csv(&write_history_csv(&h).unwrap()).unwrap(), h);
    }
}
