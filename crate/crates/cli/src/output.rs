//! Output files. CSVs start with a `#` provenance line; JSON documents carry
//! the same fields in a `meta` object.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config_hash: String,
}

impl Meta {
    /// `config_hash` is the first 16 hex digits of SHA-256 over the JSON of
    /// `(command, seed, section)`.
    pub fn new<S: Serialize>(command: &'static str, seed: u64, section: &S) -> Result<Self> {
        let canonical = serde_json::to_string(&(command, seed, section))?;
        let digest = Sha256::digest(canonical.as_bytes());
        Ok(Meta {
            tool: "feedrecall",
            version: VERSION,
            command,
            seed,
            config_hash: hex::encode(digest)[..16].to_string(),
        })
    }

    fn comment(&self) -> String {
        format!(
            "# feedrecall {} command={} seed={} config_hash={}\n",
            self.version, self.command, self.seed, self.config_hash
        )
    }
}

pub struct OutDir {
    dir: PathBuf,
    meta: Meta,
}

impl OutDir {
    pub fn create(dir: &Path, meta: Meta) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutDir { dir: dir.to_path_buf(), meta })
    }

    fn open(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    /// Serializes `rows` with a header line; LF line endings.
    pub fn write_csv<R: Serialize>(&self, name: &str, rows: &[R]) -> Result<()> {
        let mut out = self.open(name)?;
        out.write_all(self.meta.comment().as_bytes())?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Pretty JSON with `meta` prepended to the fields of `body`.
    pub fn write_json<B: Serialize>(&self, name: &str, body: &B) -> Result<()> {
        #[derive(Serialize)]
        struct Doc<'a, B> {
            meta: &'a Meta,
            #[serde(flatten)]
            body: &'a B,
        }
        let mut out = self.open(name)?;
        serde_json::to_writer_pretty(&mut out, &Doc { meta: &self.meta, body })?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: f64,
        b: &'static str,
    }

    #[test]
    fn hash_depends_on_inputs() {
        let a = Meta::new("sweep", 1, &vec![1.0]).unwrap();
        let b = Meta::new("sweep", 2, &vec![1.0]).unwrap();
        let c = Meta::new("sweep", 1, &vec![1.5]).unwrap();
        assert_eq!(a.config_hash.len(), 16);
        assert_ne!(a.config_hash, b.config_hash);
        assert_ne!(a.config_hash, c.config_hash);
        assert_eq!(a.config_hash, Meta::new("sweep", 1, &vec![1.0]).unwrap().config_hash);
    }

    #[test]
    fn csv_has_comment_and_lf() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path(), Meta::new("t", 3, &()).unwrap()).unwrap();
        out.write_csv("x.csv", &[Row { a: 0.1, b: "p, q" }]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("x.csv")).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert!(lines[0].starts_with("# feedrecall ") && lines[0].contains("seed=3"));
        assert_eq!(lines[1], "a,b");
        assert_eq!(lines[2], "0.1,\"p, q\"");
        assert!(!text.contains('\r'));

        out.write_json("x.json", &serde_json::json!({"k": 1})).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("x.json")).unwrap()).unwrap();
        assert_eq!(v["meta"]["seed"], 3);
        assert_eq!(v["k"], 1);
    }
}
