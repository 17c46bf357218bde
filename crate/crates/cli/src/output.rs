use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Format;

/// Version of the CSV column layout, bumped when any subcommand's columns change.
pub const CSV_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub flags: Value,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub version: String,
}

/// A result in both shapes: a JSON object and a flat table for CSV.
pub struct Artifact {
    pub json: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Artifact {
    pub fn new(json: impl Serialize, columns: &[&str]) -> Result<Self> {
        let json = match serde_json::to_value(json)? {
            Value::Object(map) => map,
            other => Map::from_iter([("result".to_string(), other)]),
        };
        Ok(Self { json, columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() })
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write(out: &mut impl Write, format: Format, manifest: &RunManifest, artifact: Artifact) -> Result<()> {
    match format {
        Format::Json => {
            let mut json = artifact.json;
            json.insert("manifest".into(), serde_json::to_value(manifest)?);
            serde_json::to_writer_pretty(&mut *out, &json)?;
            writeln!(out)?;
        }
        Format::Csv => {
            writeln!(
                out,
                "# thermoforge {} csv-schema {CSV_SCHEMA} manifest {}",
                manifest.subcommand,
                serde_json::to_string(manifest)?
            )?;
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(&artifact.columns)?;
            for row in &artifact.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
