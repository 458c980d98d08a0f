//! Loading JSON arguments with diagnostics that point into the offending document.

use std::fs;

use choquet::measures::{DiscreteMeasure, Point};
use choquet::Error;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

/// A JSON argument together with where it came from.
pub struct Source {
    pub label: String,
    pub value: Value,
}

/// Reads `arg` as inline JSON when it starts with `{` or `[`, and as a file path otherwise.
pub fn source(flag: &str, arg: &str) -> Result<Source, CliError> {
    let trimmed = arg.trim_start();
    let (label, text) = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        (format!("--{flag} (inline)"), arg.to_string())
    } else {
        let text = fs::read_to_string(arg)
            .map_err(|e| CliError::Input(format!("--{flag}: cannot read {arg}: {e}")))?;
        (arg.to_string(), text)
    };
    let value = serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!("{label}: invalid JSON at line {}, column {}: {e}", e.line(), e.column()))
    })?;
    Ok(Source { label, value })
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        "/".into()
    } else {
        out
    }
}

pub fn diagnostic(label: &str, ptr: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{label}: at {ptr}: {msg}"))
}

impl Source {
    pub fn parse<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_path_to_error::deserialize(&self.value)
            .map_err(|e| diagnostic(&self.label, &pointer(e.path()), e.inner()))
    }
}

pub fn load<T: DeserializeOwned>(flag: &str, arg: &str) -> Result<(T, Source), CliError> {
    let src = source(flag, arg)?;
    let parsed = src.parse()?;
    Ok((parsed, src))
}

#[derive(Deserialize)]
struct RawMeasure {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

/// Pointer into a measure document for a construction error.
fn measure_pointer(raw: &RawMeasure, err: &Error) -> String {
    match err {
        Error::MassNotOne { .. } | Error::Empty(_) => "/weights".into(),
        Error::NegativeWeight { index, .. } => format!("/weights/{index}"),
        Error::DuplicatePoint { second, .. } => format!("/points/{second}"),
        Error::DimensionMismatch { .. } => raw
            .points
            .iter()
            .position(|p| p.len() != raw.dim)
            .map_or("/dim".into(), |i| format!("/points/{i}")),
        Error::NonFinite(_) => raw
            .points
            .iter()
            .position(|p| p.iter().any(|v| !v.is_finite()))
            .map(|i| format!("/points/{i}"))
            .or_else(|| {
                raw.weights
                    .iter()
                    .position(|w| !w.is_finite())
                    .map(|i| format!("/weights/{i}"))
            })
            .unwrap_or_else(|| "/".into()),
        _ if raw.points.len() != raw.weights.len() => "/weights".into(),
        _ => "/dim".into(),
    }
}

pub fn measure(flag: &str, arg: &str) -> Result<(DiscreteMeasure, Source), CliError> {
    let (raw, src): (RawMeasure, Source) = load(flag, arg)?;
    let points = to_points(&src.label, "/points", raw.points.clone())?;
    match DiscreteMeasure::new(raw.dim, points, raw.weights.clone()) {
        Ok(m) => Ok((m, src)),
        Err(e) => Err(diagnostic(&src.label, &measure_pointer(&raw, &e), e)),
    }
}

/// Loads two measures and insists they live in the same dimension.
pub fn measure_pair(
    mu: &str,
    nu: &str,
) -> Result<((DiscreteMeasure, Source), (DiscreteMeasure, Source)), CliError> {
    let a = measure("mu", mu)?;
    let b = measure("nu", nu)?;
    if a.0.dim() != b.0.dim() {
        return Err(CliError::Input(format!(
            "dimension mismatch: {} has dim {} but {} has dim {}",
            a.1.label,
            a.0.dim(),
            b.1.label,
            b.0.dim()
        )));
    }
    Ok((a, b))
}

/// A list of points, given either as `[[...], ...]` or as `{"points": [[...], ...]}`.
pub fn points(flag: &str, arg: &str) -> Result<(Vec<Point>, Source), CliError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Pts {
        Bare(Vec<Vec<f64>>),
        Wrapped { points: Vec<Vec<f64>> },
    }
    let (pts, src): (Pts, Source) = load(flag, arg)?;
    let raw = match pts {
        Pts::Bare(p) | Pts::Wrapped { points: p } => p,
    };
    if let Some(first) = raw.first() {
        if let Some(i) = raw.iter().position(|p| p.len() != first.len()) {
            return Err(diagnostic(&src.label, &format!("/{i}"), "dimension differs from the first point"));
        }
    }
    let pts = to_points(&src.label, "", raw)?;
    Ok((pts, src))
}

fn to_points(label: &str, prefix: &str, raw: Vec<Vec<f64>>) -> Result<Vec<Point>, CliError> {
    raw.into_iter()
        .enumerate()
        .map(|(i, p)| Point::new(p).map_err(|e| diagnostic(label, &format!("{prefix}/{i}"), e)))
        .collect()
}
