//! Circuit lists with optional train/eval split tags.

use crate::aig::{parse_aiger_auto, parse_verilog, Aig, AigError};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub split: Option<Split>,
}

impl ManifestEntry {
    /// File stem used as the circuit's name in reports.
    pub fn name(&self) -> String {
        circuit_name(&self.path)
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}:{line}: {msg}")]
    Syntax { path: String, line: usize, msg: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Circuit { path: String, source: AigError },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Parses one path per line, optionally followed by `train` or `eval`.
    /// Blank lines and `#` comments are skipped; relative paths resolve
    /// against `base`.
    pub fn parse(text: &str, base: &Path, origin: &str) -> Result<Manifest, ManifestError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let p = parts.next().unwrap();
            let split = match parts.next() {
                None => None,
                Some("train") => Some(Split::Train),
                Some("eval") => Some(Split::Eval),
                Some(t) => return Err(ManifestError::Syntax { path: origin.into(), line: i + 1, msg: format!("unknown split tag `{t}`") }),
            };
            if parts.next().is_some() {
                return Err(ManifestError::Syntax { path: origin.into(), line: i + 1, msg: "trailing fields".into() });
            }
            let path = Path::new(p);
            let path = if path.is_absolute() { path.to_path_buf() } else { base.join(path) };
            entries.push(ManifestEntry { path, split });
        }
        Ok(Manifest { entries })
    }

    pub fn load(path: &Path) -> Result<Manifest, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.display().to_string(), source })?;
        Manifest::parse(&text, path.parent().unwrap_or(Path::new(".")), &path.display().to_string())
    }

    /// Entries tagged `split`; untagged entries count as training circuits.
    pub fn select(&self, split: Split) -> Vec<&ManifestEntry> {
        self.entries.iter().filter(|e| e.split.unwrap_or(Split::Train) == split).collect()
    }
}

pub fn circuit_name(path: &Path) -> String {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    name.strip_suffix(".gz").unwrap_or(&name).rsplit_once('.').map_or(name.clone(), |(s, _)| s.to_string())
}

/// Reads AIGER (ASCII, binary or gzipped) or structural Verilog by extension.
pub fn read_circuit(path: &Path) -> Result<Aig, ManifestError> {
    let err = |source| ManifestError::Circuit { path: path.display().to_string(), source };
    let bytes = std::fs::read(path).map_err(|source| ManifestError::Io { path: path.display().to_string(), source })?;
    if path.extension().is_some_and(|e| e == "v") {
        let text = String::from_utf8_lossy(&bytes);
        parse_verilog(&text).map_err(err)
    } else {
        parse_aiger_auto(&bytes).map_err(err)
    }
}

/// Named circuits of a manifest split, in manifest order.
pub fn load_split(m: &Manifest, split: Split) -> Result<Vec<(String, Aig)>, ManifestError> {
    m.select(split).into_iter().map(|e| Ok((e.name(), read_circuit(&e.path)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tags_and_comments() {
        let m = Manifest::parse("# corpus\na.aig train\n\n/abs/b.aig eval  # held out\nc.aig\n", Path::new("/base"), "m").unwrap();
        assert_eq!(m.entries.len(), 3);
        assert_eq!(m.entries[0], ManifestEntry { path: "/base/a.aig".into(), split: Some(Split::Train) });
        assert_eq!(m.entries[1].path, PathBuf::from("/abs/b.aig"));
        assert_eq!(m.select(Split::Train).len(), 2);
        assert_eq!(m.select(Split::Eval)[0].name(), "b");
    }

    #[test]
    fn rejects_bad_tags() {
        assert!(matches!(Manifest::parse("a.aig test\n", Path::new("."), "m"), Err(ManifestError::Syntax { line: 1, .. })));
        assert!(Manifest::parse("a.aig train x\n", Path::new("."), "m").is_err());
    }

    #[test]
    fn names_strip_extensions() {
        assert_eq!(circuit_name(Path::new("x/c1355.aig")), "c1355");
        assert_eq!(circuit_name(Path::new("x/c1355.aig.gz")), "c1355");
        assert_eq!(circuit_name(Path::new("ctrl")), "ctrl");
    }
}
