//! File formats: JSON-lines datasets, whitespace cost matrices, label
//! tables, and trace reports.
//!
//! Dataset files hold one object per line:
//!
//! ```text
//! {"id":"img-1","weight":1.0,"dists":[{"supports":[[0.5,1.0],[2.0,0.25]],"probs":[0.6,0.4]}]}
//! ```
//!
//! Symbolic datasets use alphabet indices as supports and start with a
//! header line `{"alphabet":["A","R",...]}`.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use d2cluster::data::{
    validate_dataset, DataObject, Distribution, SupportPoint, SymbolMatrix, WeightedDataset,
};

use crate::CliError;

/// A dataset plus the symbol alphabet when the supports are symbolic.
#[derive(Debug, Clone)]
pub struct DatasetFile {
    pub dataset: WeightedDataset,
    pub alphabet: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct AlphabetHeader {
    alphabet: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ObjectRecord {
    id: String,
    weight: f64,
    dists: Vec<DistRecord>,
}

#[derive(Serialize, Deserialize)]
struct DistRecord {
    supports: SupportsRecord,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SupportsRecord {
    Numeric(Vec<Vec<f64>>),
    Symbolic(Vec<usize>),
}

fn parse_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::input(format!("{}:{line}: {msg}", path.display()))
}

/// Read and validate a dataset file.
pub fn read_dataset(path: &Path) -> Result<DatasetFile, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut alphabet: Option<Vec<String>> = None;
    let mut objects = Vec::new();
    let mut weights = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| parse_err(path, lineno + 1, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if lineno == 0 && trimmed.contains("\"alphabet\"") {
            let header: AlphabetHeader =
                serde_json::from_str(trimmed).map_err(|e| parse_err(path, 1, e))?;
            alphabet = Some(header.alphabet);
            continue;
        }
        let record: ObjectRecord =
            serde_json::from_str(trimmed).map_err(|e| parse_err(path, lineno + 1, e))?;
        let mut dists = Vec::with_capacity(record.dists.len());
        for d in record.dists {
            let supports = match d.supports {
                SupportsRecord::Numeric(vs) => {
                    vs.into_iter().map(SupportPoint::Numeric).collect::<Vec<_>>()
                }
                SupportsRecord::Symbolic(syms) => {
                    let Some(alpha) = &alphabet else {
                        return Err(parse_err(
                            path,
                            lineno + 1,
                            "symbolic supports need an {\"alphabet\": [...]} header line",
                        ));
                    };
                    for &s in &syms {
                        if s >= alpha.len() {
                            return Err(parse_err(
                                path,
                                lineno + 1,
                                format!("symbol index {s} outside alphabet of {}", alpha.len()),
                            ));
                        }
                    }
                    syms.into_iter().map(SupportPoint::Symbol).collect()
                }
            };
            dists.push(Distribution::new(supports, d.probs));
        }
        objects.push(DataObject::new(record.id, dists));
        weights.push(record.weight);
    }
    let dataset = validate_dataset(objects, weights)?;
    Ok(DatasetFile { dataset, alphabet })
}

fn support_record(sp: &SupportPoint) -> Result<serde_json::Value, CliError> {
    Ok(match sp {
        SupportPoint::Numeric(v) => serde_json::json!(v),
        SupportPoint::Symbol(s) => serde_json::json!(s),
    })
}

/// Write objects and weights in the dataset format.
pub fn write_dataset(
    path: &Path,
    objects: &[DataObject],
    weights: &[f64],
    alphabet: Option<&[String]>,
) -> Result<(), CliError> {
    let mut out = fs::File::create(path)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", path.display())))?;
    if let Some(alpha) = alphabet {
        let header = serde_json::json!({ "alphabet": alpha });
        writeln!(out, "{header}").map_err(CliError::io)?;
    }
    for (obj, &w) in objects.iter().zip(weights) {
        let dists: Vec<serde_json::Value> = obj
            .dists
            .iter()
            .map(|d| {
                let supports: Result<Vec<_>, CliError> =
                    d.supports.iter().map(support_record).collect();
                Ok(serde_json::json!({ "supports": supports?, "probs": d.probs }))
            })
            .collect::<Result<_, CliError>>()?;
        let record = serde_json::json!({ "id": obj.id, "weight": w, "dists": dists });
        writeln!(out, "{record}").map_err(CliError::io)?;
    }
    Ok(())
}

/// Read a cost-matrix file: a symbol line then the full symmetric matrix.
pub fn read_matrix(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let symbols: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::input(format!("{}: empty matrix file", path.display())))?
        .split_whitespace()
        .map(str::to_string)
        .collect();
    let n = symbols.len();
    let mut rows = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| parse_err(path, i + 2, format!("bad number {tok:?}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        if row.len() != n {
            return Err(parse_err(
                path,
                i + 2,
                format!("row has {} entries, expected {n}", row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(CliError::input(format!(
            "{}: {} rows for {n} symbols",
            path.display(),
            rows.len()
        )));
    }
    Ok((symbols, rows))
}

/// Write a matrix file in the same format [`read_matrix`] accepts.
pub fn write_matrix(path: &Path, symbols: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut out = fs::File::create(path)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", path.display())))?;
    writeln!(out, "{}", symbols.join(" ")).map_err(CliError::io)?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", cells.join(" ")).map_err(CliError::io)?;
    }
    Ok(())
}

/// Load a validated symbolic ground metric from a matrix file.
pub fn read_symbol_matrix(path: &Path) -> Result<(Vec<String>, SymbolMatrix), CliError> {
    let (symbols, rows) = read_matrix(path)?;
    let n = symbols.len();
    let entries: Vec<f64> = rows.into_iter().flatten().collect();
    let matrix = SymbolMatrix::new(n, entries)?;
    Ok((symbols, matrix))
}

/// Write an `id<TAB>cluster` label table.
pub fn write_labels(path: &Path, objects: &[DataObject], labels: &[usize]) -> Result<(), CliError> {
    let mut out = fs::File::create(path)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", path.display())))?;
    for (obj, &l) in objects.iter().zip(labels) {
        writeln!(out, "{}\t{}", obj.id, l).map_err(CliError::io)?;
    }
    Ok(())
}

/// Read a label table into id order and cluster indices.
pub fn read_labels(path: &Path) -> Result<Vec<(String, usize)>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let id = parts
            .next()
            .ok_or_else(|| parse_err(path, lineno + 1, "missing id"))?;
        let label: usize = parts
            .next()
            .ok_or_else(|| parse_err(path, lineno + 1, "missing cluster"))?
            .trim()
            .parse()
            .map_err(|e| parse_err(path, lineno + 1, format!("bad cluster index: {e}")))?;
        pairs.push((id.to_string(), label));
    }
    if pairs.is_empty() {
        return Err(CliError::input(format!("{}: no labels", path.display())));
    }
    Ok(pairs)
}
