use crate::data::ExtractConfig;
use crate::model::{Mode, ModelDims};
use crate::training::TrainConfig;
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Run configuration: a flat `key = value` file plus command-line
/// overrides, with flags winning. Typed accessors validate on read.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        let mut config = RunConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            config.set(key.trim(), value.trim());
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing required config key {key:?}")))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        Ok(PathBuf::from(self.require(key)?))
    }

    pub fn path_opt(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => {
                let n: usize = v
                    .parse()
                    .map_err(|e| Error::Config(format!("{key} = {v:?}: {e}")))?;
                if n == 0 {
                    return Err(Error::Config(format!("{key} must be positive")));
                }
                Ok(n)
            }
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| Error::Config(format!("{key} = {v:?}: {e}"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| Error::Config(format!("{key} = {v:?}: {e}"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(v) => Err(Error::Config(format!("{key} = {v:?}: expected a boolean"))),
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64_or("seed", 1)
    }

    pub fn mode(&self) -> Result<Mode> {
        match self.get("mode") {
            None => Ok(Mode::Baseline),
            Some(v) => Mode::parse(v),
        }
    }

    /// Model dimensions, with desk-scale defaults; vocabulary sizes come
    /// from the vocabulary files at load time.
    pub fn dims(&self, src_vocab: usize, tgt_vocab: usize) -> Result<ModelDims> {
        Ok(ModelDims {
            src_vocab,
            tgt_vocab,
            embed: self.usize_or("embed", 32)?,
            hidden: self.usize_or("hidden", 64)?,
            attn: self.usize_or("attn", 64)?,
            max_len: self.usize_or("max_len", 50)?,
        })
    }

    pub fn extract_config(&self) -> Result<ExtractConfig> {
        Ok(ExtractConfig {
            max_len: self.usize_or("max_len", 50)?,
            max_len_ratio: self.f64_or("len_ratio_limit", 3.0)?,
        })
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let defaults = TrainConfig::default();
        Ok(TrainConfig {
            batch_size: self.usize_or("batch_size", 80)?,
            max_epochs: self.usize_or("epochs", defaults.max_epochs)?,
            seed: self.seed()?,
            mode: self.mode()?,
            checkpoint_every: match self.get("checkpoint_every") {
                None => 0,
                Some(v) => v
                    .parse()
                    .map_err(|e| Error::Config(format!("checkpoint_every = {v:?}: {e}")))?,
            },
            dropout: self.f64_or("dropout", 0.5)?,
            max_len: self.usize_or("max_len", 50)?,
            rho: self.f64_or("rho", defaults.rho)?,
            eps: self.f64_or("eps", defaults.eps)?,
            clip_norm: self.f64_or("clip_norm", defaults.clip_norm)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn parses_key_value_lines_with_comments() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# experiment").unwrap();
        writeln!(f, "hidden = 24").unwrap();
        writeln!(f, "seed=9").unwrap();
        writeln!(f).unwrap();
        writeln!(f, "mode = isg").unwrap();
        let c = RunConfig::load(f.path()).unwrap();
        assert_eq!(c.usize_or("hidden", 0).unwrap(), 24);
        assert_eq!(c.seed().unwrap(), 9);
        assert_eq!(c.mode().unwrap(), Mode::Isg);
    }

    #[test]
    fn flags_win_over_the_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "seed = 9").unwrap();
        let mut c = RunConfig::load(f.path()).unwrap();
        c.set("seed", "11");
        assert_eq!(c.seed().unwrap(), 11);
    }

    #[test]
    fn malformed_lines_and_values_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "just words").unwrap();
        assert!(RunConfig::load(f.path()).is_err());

        let mut c = RunConfig::default();
        c.set("hidden", "zero");
        assert!(c.usize_or("hidden", 1).is_err());
        c.set("hidden", "0");
        assert!(c.usize_or("hidden", 1).is_err());
        c.set("mode", "both");
        assert!(c.mode().is_err());
        assert!(c.require("missing").is_err());
    }
}
