//! Run manifests and output files.
//!
//! Every output carries the manifest hash: CSV files in a leading `#`
//! comment, JSON documents in a `manifest` field. The hash covers only the
//! inputs that determine results, so `--threads`, wall time and the output
//! directory do not change it.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub map_label: Option<String>,
    pub map_hash: Option<String>,
    pub seed: u64,
    pub precision: u32,
    pub versions: Value,
    pub threads: Option<usize>,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub hash: String,
}

impl RunManifest {
    /// `key` is a canonical form of the subcommand and its arguments; the
    /// raw command line is recorded but not hashed.
    pub fn new(command_line: Vec<String>, key: &str, map: Option<(&str, &str)>, seed: u64, precision: u32, threads: Option<usize>) -> Self {
        let versions = json!({ "greenlab": env!("CARGO_PKG_VERSION") });
        let keyed = json!({
            "command": key,
            "map_hash": map.map(|m| m.1),
            "seed": seed,
            "precision": precision,
            "versions": versions,
        });
        let hash = sha256_hex(keyed.to_string().as_bytes());
        RunManifest {
            command_line,
            map_label: map.map(|m| m.0.to_string()),
            map_hash: map.map(|m| m.1.to_string()),
            seed,
            precision,
            versions,
            threads,
            wall_time_s: 0.0,
            outputs: Vec::new(),
            hash,
        }
    }
}

/// Rectangular table of reals. Non-finite entries are written as `0` with
/// the row flagged in a trailing `sentinel` column.
#[derive(Debug, Clone)]
pub struct PlotSeries {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PlotSeries {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        PlotSeries {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "ragged row in {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self, hash: &str) -> String {
        let flag = self.rows.iter().flatten().any(|v| !v.is_finite());
        let mut out = format!("# manifest {hash}\n{}", self.columns.join(","));
        if flag {
            out.push_str(",sentinel");
        }
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| if v.is_finite() { format_real(*v) } else { "0".into() }).collect();
            out.push_str(&cells.join(","));
            if flag {
                out.push_str(if row.iter().all(|v| v.is_finite()) { ",0" } else { ",1" });
            }
            out.push('\n');
        }
        out
    }
}

/// Integers print without a fractional part; other values use the
/// shortest round-trip form.
fn format_real(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

/// Collects outputs, echoes the primary one to stdout and writes all of
/// them plus `manifest.json` when an output directory is set.
pub struct Sink {
    pub manifest: RunManifest,
    out_dir: Option<PathBuf>,
    files: Vec<(String, String)>,
    echoed: bool,
}

impl Sink {
    pub fn new(manifest: RunManifest, out_dir: Option<PathBuf>) -> Self {
        Sink {
            manifest,
            out_dir,
            files: Vec::new(),
            echoed: false,
        }
    }

    fn emit(&mut self, file: String, body: String) {
        if !self.echoed {
            print!("{body}");
            self.echoed = true;
        }
        self.files.push((file, body));
    }

    pub fn csv(&mut self, series: &PlotSeries) {
        let body = series.to_csv(&self.manifest.hash);
        self.emit(format!("{}.csv", series.name), body);
    }

    pub fn json(&mut self, name: &str, report: &impl Serialize) -> Result<()> {
        let doc = json!({ "manifest": self.manifest.hash, "report": report });
        let body = serde_json::to_string_pretty(&doc)? + "\n";
        self.emit(format!("{name}.json"), body);
        Ok(())
    }

    pub fn finish(mut self, wall_time_s: f64) -> Result<()> {
        let Some(dir) = self.out_dir.take() else { return Ok(()) };
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, body) in &self.files {
            let path = dir.join(name);
            fs::File::create(&path)
                .and_then(|mut f| f.write_all(body.as_bytes()))
                .with_context(|| format!("writing {}", path.display()))?;
            self.manifest.outputs.push(name.clone());
        }
        self.manifest.wall_time_s = wall_time_s;
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&self.manifest)? + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentinel_column_appears_only_when_needed() {
        let mut s = PlotSeries::new("t", &["n", "value"]);
        s.push(vec![1.0, 0.5]);
        assert_eq!(s.to_csv("h"), "# manifest h\nn,value\n1,0.5\n");
        s.push(vec![2.0, f64::NEG_INFINITY]);
        assert_eq!(s.to_csv("h"), "# manifest h\nn,value,sentinel\n1,0.5,0\n2,0,1\n");
    }

    #[test]
    fn hash_ignores_threads() {
        let a = RunManifest::new(vec!["--threads".into(), "1".into()], "degrees", None, 1, 53, Some(1));
        let b = RunManifest::new(vec!["--threads".into(), "4".into()], "degrees", None, 1, 53, Some(4));
        assert_eq!(a.hash, b.hash);
        let c = RunManifest::new(vec![], "degrees", None, 2, 53, None);
        assert_ne!(a.hash, c.hash);
    }
}
