//! Output files with a provenance block: artifact version, config digest and
//! input digests. CSV files carry it as leading `#` lines, JSON files as a
//! `provenance` field.

use std::fs;
use std::path::{Path, PathBuf};

use entrenet_core::FlowMatrix64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};
use crate::error::{write_failed, CliError};

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub artifact: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub inputs: Vec<InputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Provenance {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let canonical = serde_json::to_vec(config).expect("config serializes");
        let mut paths = vec![config.input.clone()];
        paths.extend(config.rules.clone());
        let inputs = paths
            .iter()
            .map(|p| {
                let bytes = fs::read(p).map_err(|e| CliError::data(format!("cannot read {}: {e}", p.display())))?;
                Ok(InputDigest {
                    path: p.display().to_string(),
                    sha256: sha256_hex(&bytes),
                })
            })
            .collect::<Result<_, CliError>>()?;
        Ok(Self {
            artifact: "entrenet",
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: sha256_hex(&canonical),
            inputs,
        })
    }

    fn csv_header(&self) -> String {
        let mut s = format!(
            "# {} {}\n# config_sha256 {}\n",
            self.artifact, self.version, self.config_sha256
        );
        for i in &self.inputs {
            s.push_str(&format!("# input {} sha256 {}\n", i.path, i.sha256));
        }
        s
    }
}

pub struct Outputs {
    dir: PathBuf,
    format: Format,
    provenance: Provenance,
    pub written: Vec<PathBuf>,
}

/// A table that can be emitted as CSV rows or as a JSON value.
pub struct Table<J: Serialize> {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub json: J,
}

pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl Outputs {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let provenance = Provenance::new(config)?;
        fs::create_dir_all(&config.out).map_err(|e| write_failed(&config.out, e))?;
        Ok(Self {
            dir: config.out.clone(),
            format: config.format,
            provenance,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| write_failed(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json(&mut self, stem: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut v = serde_json::to_value(value).expect("report serializes");
        let prov = serde_json::to_value(&self.provenance).unwrap();
        let doc = match v.as_object_mut() {
            Some(map) => {
                map.insert("provenance".into(), prov);
                v
            }
            None => serde_json::json!({ "provenance": prov, "data": v }),
        };
        let mut text = serde_json::to_string_pretty(&doc).unwrap();
        text.push('\n');
        self.write(&format!("{stem}.json"), text.as_bytes())
    }

    pub fn csv(&mut self, stem: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut body = Vec::new();
        {
            let mut w = csv_writer(&mut body);
            w.write_record(header).unwrap();
            for r in rows {
                w.write_record(r).unwrap();
            }
            w.flush().unwrap();
        }
        let mut out = self.provenance.csv_header().into_bytes();
        out.extend(body);
        self.write(&format!("{stem}.csv"), &out)
    }

    pub fn table<J: Serialize>(&mut self, stem: &str, table: &Table<J>) -> Result<(), CliError> {
        match self.format {
            Format::Csv => self.csv(stem, &table.header, &table.rows),
            Format::Json => self.json(stem, &table.json),
        }
    }

    /// Weighted matrices are always written as labeled CSV so `analyze` can read them back.
    pub fn matrix(&mut self, stem: &str, m: &FlowMatrix64) -> Result<(), CliError> {
        let mut out = self.provenance.csv_header().into_bytes();
        entrenet_core::io::write_flow_matrix(m, &mut out)?;
        self.write(&format!("{stem}.csv"), &out)
    }
}

fn csv_writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn display(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p: &PathBuf| Path::new(p).display().to_string()).collect()
}
