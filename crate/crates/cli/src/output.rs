//! Result files with a `#`-prefixed metadata header.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{Context, Result};

/// `git describe --always --dirty`, or `unknown` outside a checkout.
pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

/// Metadata shared by every table of one invocation.
#[derive(Clone, Debug, Default)]
pub struct Metadata {
    pub preset: String,
    pub experiment: String,
    pub seed: u64,
    pub params: Vec<(String, String)>,
    pub notes: Vec<String>,
}

impl Metadata {
    pub fn header(&self, git: &str) -> String {
        let mut out = format!(
            "# preset: {}\n# experiment: {}\n# seed: {}\n# git: {git}\n",
            self.preset, self.experiment, self.seed
        );
        for (k, v) in &self.params {
            out.push_str(&format!("# param {k} = {v}\n"));
        }
        for n in &self.notes {
            out.push_str(&format!("# note: {n}\n"));
        }
        out
    }
}

/// Writes `name.csv` under `dir` and returns its path.
pub fn write_table(dir: &Path, name: &str, meta: &Metadata, git: &str, body: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("{name}.csv"));
    fs::write(&path, format!("{}{body}", meta.header(git))).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_lines_are_comments() {
        let m = Metadata {
            preset: "p".into(),
            experiment: "e".into(),
            seed: 3,
            params: vec![("n".into(), "6".into())],
            notes: vec!["reduced size".into()],
        };
        let h = m.header("abc");
        assert!(h.lines().all(|l| l.starts_with('#')));
        assert!(h.contains("# seed: 3") && h.contains("# git: abc") && h.contains("# param n = 6"));
    }

    #[test]
    fn writes_into_new_directory() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("a/b");
        let p = write_table(&sub, "x", &Metadata::default(), "g", "h\n1\n").unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.ends_with("h\n1\n"));
    }
}
