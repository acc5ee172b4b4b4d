//! Output plumbing: run-scoped directory with a lock file, CSV writers with
//! a fixed float format, the JSON report, and cleanup of partial outputs on
//! failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Print a float with 17 significant digits so parsing it back is lossless.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// An output directory owned by exactly one run, via an exclusive lock file.
/// Files written through it are tracked and deleted again by `abort`.
pub struct OutputDir {
    root: PathBuf,
    lock: PathBuf,
    written: Vec<PathBuf>,
    start: Instant,
    timings: Vec<(String, f64)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, String> {
        fs::create_dir_all(root)
            .map_err(|e| format!("cannot create output directory {}: {e}", root.display()))?;
        let lock = root.join(".obslab.lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "pid {}", std::process::id());
            }
            Err(e) => {
                return Err(format!(
                    "output directory {} is locked by another run ({e}); \
                     use a distinct --out directory or remove {}",
                    root.display(),
                    lock.display()
                ))
            }
        }
        Ok(Self {
            root: root.to_path_buf(),
            lock,
            written: Vec::new(),
            start: Instant::now(),
            timings: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Record the duration since the previous stage mark under `stage`.
    pub fn mark(&mut self, stage: &str) {
        let elapsed = self.start.elapsed().as_secs_f64();
        let previous: f64 = self.timings.iter().map(|(_, t)| t).sum();
        self.timings.push((stage.to_string(), elapsed - previous));
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, String> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// CSV with a mandatory header, LF endings, 17-significant-digit floats.
    pub fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<CsvCell>],
    ) -> Result<PathBuf, String> {
        let mut body = String::new();
        body.push_str(&header.join(","));
        body.push('\n');
        for row in rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    CsvCell::Float(v) => fmt_f64(*v),
                    CsvCell::Int(v) => v.to_string(),
                    CsvCell::Text(s) => s.clone(),
                })
                .collect();
            body.push_str(&cells.join(","));
            body.push('\n');
        }
        self.write_bytes(name, body.as_bytes())
    }

    /// Final JSON report with the contracted top-level keys; also verifies
    /// that every declared output actually exists.
    pub fn write_report(
        &mut self,
        config_text: &str,
        config_value: Value,
        results: Value,
        certificates: Value,
        diagnostics: Value,
    ) -> Result<PathBuf, String> {
        for path in &self.written {
            if !path.exists() {
                return Err(format!("declared output {} is missing", path.display()));
            }
        }
        let mut manifest = Map::new();
        manifest.insert("config_sha256".into(), json!(sha256_hex(config_text.as_bytes())));
        manifest.insert("artifact_version".into(), json!(ARTIFACT_VERSION));
        manifest.insert(
            "timings_seconds".into(),
            Value::Object(
                self.timings
                    .iter()
                    .map(|(k, v)| (k.clone(), json!(v)))
                    .collect(),
            ),
        );
        manifest.insert(
            "outputs".into(),
            json!(self
                .written
                .iter()
                .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .collect::<Vec<_>>()),
        );
        let report = json!({
            "config": config_value,
            "results": results,
            "certificates": certificates,
            "diagnostics": diagnostics,
            "manifest": Value::Object(manifest),
        });
        let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
        self.write_bytes("report.json", format!("{text}\n").as_bytes())
    }

    /// Remove everything written so far (failure path), then the lock.
    pub fn abort(self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
        let _ = fs::remove_file(&self.lock);
    }

    /// Release the lock, keeping the outputs (success path).
    pub fn finish(self) {
        let _ = fs::remove_file(&self.lock);
    }
}

/// One CSV cell; floats get the lossless format, text is written verbatim.
pub enum CsvCell {
    Float(f64),
    Int(i64),
    Text(String),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [1.0, -0.1, std::f64::consts::PI, 1e-300, 3.937e17] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn lock_file_excludes_concurrent_runs() {
        let dir = tempfile::tempdir().unwrap();
        let a = OutputDir::create(dir.path()).unwrap();
        assert!(OutputDir::create(dir.path()).is_err());
        a.finish();
        OutputDir::create(dir.path()).unwrap().finish();
    }

    #[test]
    fn abort_removes_partial_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        let path = out
            .write_csv("partial.csv", &["a"], &[vec![CsvCell::Float(1.0)]])
            .unwrap();
        assert!(path.exists());
        out.abort();
        assert!(!path.exists());
        assert!(!dir.path().join(".obslab.lock").exists());
    }

    #[test]
    fn csv_uses_lf_and_headers() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        let path = out
            .write_csv(
                "t.csv",
                &["x", "y"],
                &[vec![CsvCell::Int(1), CsvCell::Float(0.5)]],
            )
            .unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.starts_with("x,y\n"));
        assert!(!body.contains('\r'));
        out.finish();
    }
}
