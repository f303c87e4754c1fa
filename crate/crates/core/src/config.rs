//! Run configuration, loaded from TOML.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{CleaningRules, CultureRegistry, CultureSpec};
use crate::lm::TemplateMode;
use crate::{Error, Result};

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "WATSTEER_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    /// Response TSV.
    pub responses: PathBuf,
    /// Alignment TSV.
    pub alignment: PathBuf,
    /// Intermediate artifacts: norms, split, checkpoints.
    #[serde(default = "default_work")]
    pub work_dir: PathBuf,
    /// Reports and CSV exports.
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    /// Optional chapter grouping table; the built-in one is used otherwise.
    #[serde(default)]
    pub chapter_groups: Option<PathBuf>,
}

fn default_work() -> PathBuf {
    PathBuf::from("work")
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_context")]
    pub context: usize,
    /// Cap on text pieces in the vocabulary.
    #[serde(default = "default_vocab")]
    pub vocab_size: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_d() -> usize {
    64
}
fn default_context() -> usize {
    64
}
fn default_vocab() -> usize {
    1024
}
fn default_temperature() -> f64 {
    1.0
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d: default_d(),
            context: default_context(),
            vocab_size: default_vocab(),
            temperature: default_temperature(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainConfig {
    #[serde(default = "default_pre_lr")]
    pub lr: f64,
    #[serde(default = "default_pre_epochs")]
    pub epochs: usize,
    #[serde(default = "default_pre_batch")]
    pub batch: usize,
}

fn default_pre_lr() -> f64 {
    3e-3
}
fn default_pre_epochs() -> usize {
    20
}
fn default_pre_batch() -> usize {
    16
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            lr: default_pre_lr(),
            epochs: default_pre_epochs(),
            batch: default_pre_batch(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteerConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_steer_lr")]
    pub lr: f64,
    #[serde(default = "default_steer_epochs")]
    pub epochs: usize,
    #[serde(default = "default_steer_batch")]
    pub batch: usize,
}

fn default_epsilon() -> f64 {
    crate::steer::DEFAULT_EPSILON
}
fn default_steer_lr() -> f64 {
    1e-4
}
fn default_steer_epochs() -> usize {
    5
}
fn default_steer_batch() -> usize {
    8
}

impl Default for SteerConfig {
    fn default() -> Self {
        SteerConfig {
            epsilon: default_epsilon(),
            lr: default_steer_lr(),
            epochs: default_steer_epochs(),
            batch: default_steer_batch(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// Prediction window k.
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default = "default_mode")]
    pub mode: TemplateMode,
}

fn default_window() -> usize {
    5
}
fn default_ks() -> Vec<usize> {
    vec![3, 5, 10, 20]
}
fn default_mode() -> TemplateMode {
    TemplateMode::Base
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            window: default_window(),
            ks: default_ks(),
            mode: default_mode(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub paths: PathsConfig,
    pub cultures: Vec<CultureSpec>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub pretrain: PretrainConfig,
    #[serde(default)]
    pub steer: SteerConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub cleaning: CleaningRules,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads, resolves relative paths against the file's directory, applies
    /// the seed override and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.apply_env_seed(std::env::var(SEED_ENV).ok().as_deref())?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.responses);
        fix(&mut self.paths.alignment);
        fix(&mut self.paths.work_dir);
        fix(&mut self.paths.output_dir);
        if let Some(p) = self.paths.chapter_groups.as_mut() {
            fix(p);
        }
    }

    pub fn apply_env_seed(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got {v:?}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        CultureRegistry::new(self.cultures.clone())?;
        let m = &self.model;
        if m.d == 0 || m.context < 2 {
            return bad(format!(
                "model needs d >= 1 and context >= 2, got d={} context={}",
                m.d, m.context
            ));
        }
        if !(m.temperature > 0.0 && m.temperature.is_finite()) {
            return bad(format!("temperature must be positive, got {}", m.temperature));
        }
        if self.eval.window == 0 {
            return bad("window must be at least 1".into());
        }
        if self.eval.window >= m.context {
            return bad(format!(
                "window {} leaves no room for a prompt in context {}",
                self.eval.window, m.context
            ));
        }
        let ks = &self.eval.ks;
        if ks.is_empty() || ks[0] == 0 || ks.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "ks must be non-empty, positive and strictly ascending, got {ks:?}"
            ));
        }
        let s = &self.steer;
        if !(s.epsilon >= 0.0 && s.epsilon.is_finite()) {
            return bad(format!("epsilon must be finite and non-negative, got {}", s.epsilon));
        }
        if !(s.lr > 0.0 && s.lr.is_finite()) || !(self.pretrain.lr > 0.0 && self.pretrain.lr.is_finite()) {
            return bad("learning rates must be positive".into());
        }
        if s.batch == 0 || self.pretrain.batch == 0 {
            return bad("batch sizes must be positive".into());
        }
        Ok(())
    }

    pub fn registry(&self) -> CultureRegistry {
        CultureRegistry::new(self.cultures.clone()).expect("validated")
    }

    /// 16 hex digits of the SHA-256 of the canonical JSON of every setting
    /// except file locations.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("paths");
        }
        let canonical = serde_json::to_string(&v).expect("json value serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3
[paths]
responses = "r.tsv"
alignment = "a.tsv"
[[cultures]]
id = "USA"
lang = "en"
[[cultures]]
id = "CN"
lang = "zh"
"#;

    #[test]
    fn defaults() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.steer.epsilon, 1e-3);
        assert_eq!(c.steer.lr, 1e-4);
        assert_eq!(c.steer.batch, 8);
        assert_eq!(c.steer.epochs, 5);
        assert_eq!(c.eval.window, 5);
        assert_eq!(c.eval.ks, vec![3, 5, 10, 20]);
        assert_eq!(c.model.temperature, 1.0);
        assert_eq!(c.model.context, 64);
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("seed = 3", "seed = 3\nbogus = 1");
        assert!(matches!(RunConfig::from_toml(&text), Err(Error::Config(_))));
        let text = format!("{MINIMAL}\n[steer]\nepsilon = 1.0\nmomentum = 0.9\n");
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let t = format!("{MINIMAL}\n[model]\ntemperature = 0.0\n");
        assert!(RunConfig::from_toml(&t).is_err());
        let t = format!("{MINIMAL}\n[eval]\nks = [5, 3]\n");
        assert!(RunConfig::from_toml(&t).is_err());
        let t = MINIMAL.replace("id = \"CN\"", "id = \"USA\"");
        assert!(RunConfig::from_toml(&t).is_err());
    }

    #[test]
    fn hash_ignores_paths_and_tracks_settings() {
        let a = RunConfig::from_toml(MINIMAL).unwrap();
        let mut b = a.clone();
        b.paths.work_dir = PathBuf::from("/elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.steer.epsilon = 2.0;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn env_seed_override() {
        let mut c = RunConfig::from_toml(MINIMAL).unwrap();
        c.apply_env_seed(Some("42")).unwrap();
        assert_eq!(c.seed, 42);
        assert!(c.apply_env_seed(Some("x")).is_err());
    }
}
