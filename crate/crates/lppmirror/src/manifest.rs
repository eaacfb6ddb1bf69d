//! Output manifest: the command, its configuration and a digest of every file
//! it wrote.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::formats::write_atomic;

pub const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Debug, Default)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    /// Effective configuration as TOML, if the command took one.
    pub config: Option<String>,
    files: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self { command: command.to_string(), seed, ..Self::default() }
    }

    pub fn record(&mut self, path: PathBuf) {
        self.files.push(path);
    }

    /// Writes `contents` atomically and records the file.
    pub fn write(&mut self, path: &Path, contents: &[u8]) -> Result<()> {
        write_atomic(path, contents)?;
        self.record(path.to_path_buf());
        Ok(())
    }

    pub fn text(&self, root: &Path) -> Result<String> {
        let mut s = String::new();
        let _ = writeln!(s, "command = {:?}", self.command);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "version = {:?}", env!("CARGO_PKG_VERSION"));
        let mut files = self.files.clone();
        files.sort();
        files.dedup();
        s.push_str("\n[files]\n");
        for f in &files {
            let bytes = std::fs::read(f).map_err(|e| Error::io(f, e))?;
            let name = f.strip_prefix(root).unwrap_or(f).to_string_lossy().replace('\\', "/");
            let _ = writeln!(s, "{:?} = {:?}", name, hex::encode(Sha256::digest(&bytes)));
        }
        if let Some(cfg) = &self.config {
            s.push_str("\n# configuration\n");
            for line in cfg.lines() {
                let _ = writeln!(s, "# {line}");
            }
        }
        Ok(s)
    }

    /// Writes `manifest.toml` into `root`.
    pub fn finish(&self, root: &Path) -> Result<PathBuf> {
        let path = root.join(MANIFEST_NAME);
        write_atomic(&path, self.text(root)?.as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digests_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new("simulate", 4);
        m.config = Some("seed = 4\n".into());
        m.write(&dir.path().join("a.txt"), b"abc").unwrap();
        let path = m.finish(dir.path()).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.contains("\"a.txt\" = \"ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad\""));
        assert!(text.contains("# seed = 4"));
        let parsed: toml::Table = toml::from_str(&text).unwrap();
        assert_eq!(parsed["seed"].as_integer(), Some(4));
    }
}
