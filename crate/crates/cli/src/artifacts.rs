//! Output files. Everything is written under a `.partial` name and renamed only when the
//! whole command succeeds, so a failed run leaves its partial output behind.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use num_complex::Complex64;
use serde_json::{json, Value};
use soliton_lab::zs_akns::Mat2;

/// Shortest decimal that parses back to the same `f64`.
pub fn number(v: f64) -> String {
    ryu::Buffer::new().format(v).to_string()
}

pub fn partial_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<PathBuf>,
}

/// Streaming CSV writer; numbers use the shortest representation that round-trips.
pub struct CsvSink {
    writer: csv::Writer<File>,
    path: PathBuf,
}

impl CsvSink {
    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        self.writer.write_record(values.iter().map(|v| number(*v))).with_context(|| format!("writing {}", self.path.display()))?;
        Ok(())
    }

    pub fn rows<'a>(&mut self, rows: impl IntoIterator<Item = &'a [f64]>) -> Result<()> {
        rows.into_iter().try_for_each(|r| self.row(r))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().with_context(|| format!("writing {}", self.path.display()))?;
        Ok(())
    }
}

impl Artifacts {
    fn reserve(&mut self, path: &Path) -> Result<PathBuf> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        if !self.files.iter().any(|p| p == path) {
            self.files.push(path.to_path_buf());
        }
        Ok(partial_path(path))
    }

    pub fn csv<S: AsRef<str>>(&mut self, path: &Path, header: &[S]) -> Result<CsvSink> {
        let tmp = self.reserve(path)?;
        let mut writer = csv::Writer::from_path(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        writer.write_record(header.iter().map(AsRef::as_ref)).with_context(|| format!("writing {}", tmp.display()))?;
        Ok(CsvSink { writer, path: tmp })
    }

    /// Write a whole table at once.
    pub fn table<S: AsRef<str>>(&mut self, path: &Path, header: &[S], rows: &[Vec<f64>]) -> Result<()> {
        let mut sink = self.csv(path, header)?;
        sink.rows(rows.iter().map(Vec::as_slice))?;
        sink.finish()
    }

    pub fn json(&mut self, path: &Path, value: &Value) -> Result<()> {
        let tmp = self.reserve(path)?;
        let text = serde_json::to_string_pretty(value)? + "\n";
        fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
        Ok(())
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    /// Move every partial file to its final name.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        for p in &self.files {
            fs::rename(partial_path(p), p).with_context(|| format!("finalising {}", p.display()))?;
        }
        Ok(self.files)
    }
}

pub fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// Row-major `[[re, im] × 4]`.
pub fn matrix(m: &Mat2) -> Value {
    json!([complex(m[(0, 0)]), complex(m[(0, 1)]), complex(m[(1, 0)]), complex(m[(1, 1)])])
}
