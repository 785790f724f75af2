//! Run configuration: a flat `key = value` text format with `[section]`
//! headers. Every field has a default; unknown keys are rejected so that
//! typos fail loudly.

use crate::acting::{ActingConfig, TrainConfig};
use crate::planning::PlanningConfig;
use crate::sim::{PolicyKind, WorldConfig};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    pub sim: WorldConfig,
    pub embed_dim: usize,
    pub hidden: usize,
    pub k: usize,
    pub n_obs: usize,
    pub n_pred: usize,
    pub horizon: usize,
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub init_seed: u64,
    pub shuffle_seed: u64,
    pub holdout_episodes: usize,
    pub codebook_seed: u64,
    pub kmeans_max_iter: u32,
    pub kmeans_tol: f64,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            data_dir: PathBuf::from("data"),
            output_dir: PathBuf::from("out"),
            sim: WorldConfig::default(),
            embed_dim: 32,
            hidden: 64,
            k: 8,
            n_obs: 5,
            n_pred: 5,
            horizon: 5,
            epochs: 50,
            lr: 0.05,
            momentum: 0.9,
            init_seed: 1,
            shuffle_seed: 1,
            holdout_episodes: 2,
            codebook_seed: 1,
            kmeans_max_iter: 100,
            kmeans_tol: 1e-9,
        }
    }
}

impl RunConfig {
    pub fn acting_config(&self) -> ActingConfig {
        ActingConfig {
            feature_dim: self.sim.feature_dim,
            embed_dim: self.embed_dim,
            hidden: self.hidden,
            k: self.k,
            n_obs: self.n_obs,
            n_pred: self.n_pred,
        }
    }

    pub fn planning_config(&self) -> PlanningConfig {
        PlanningConfig {
            feature_dim: self.sim.feature_dim,
            hidden: self.hidden,
            k: self.k,
            horizon: self.horizon,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            momentum: self.momentum,
            shuffle_seed: self.shuffle_seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k < 2 {
            return Err(ConfigError::Invalid("k must be >= 2".into()));
        }
        if self.embed_dim == 0 || self.hidden == 0 {
            return Err(ConfigError::Invalid("model dims must be positive".into()));
        }
        if self.n_obs < 2 {
            return Err(ConfigError::Invalid("n_obs must be >= 2".into()));
        }
        if self.n_pred == 0 || self.horizon == 0 {
            return Err(ConfigError::Invalid(
                "prediction lengths must be positive".into(),
            ));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(ConfigError::Invalid("lr must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(ConfigError::Invalid("momentum must be in [0,1)".into()));
        }
        self.sim
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.holdout_episodes >= self.sim.n_episodes {
            return Err(ConfigError::Invalid(
                "holdout_episodes must leave at least one training episode".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let cfg = parse(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut section = String::new();
    // stochastic epsilon only takes effect when the policy says so
    let mut policy_name: Option<String> = None;
    let mut epsilon = 0.3;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
            line: i + 1,
            detail: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let err = |detail: String| ConfigError::Parse { line: i + 1, detail };
        macro_rules! set {
            ($field:expr, $ty:ty) => {
                $field = value
                    .parse::<$ty>()
                    .map_err(|e| err(format!("{key}: {e}")))?
            };
        }
        match (section.as_str(), key) {
            ("paths", "data_dir") => cfg.data_dir = PathBuf::from(value),
            ("paths", "output_dir") => cfg.output_dir = PathBuf::from(value),
            ("sim", "seed") => set!(cfg.sim.seed, u64),
            ("sim", "policy") => policy_name = Some(value.to_string()),
            ("sim", "epsilon") => set!(epsilon, f64),
            ("sim", "n_primitives") => set!(cfg.sim.n_primitives, usize),
            ("sim", "n_scenes") => set!(cfg.sim.n_scenes, usize),
            ("sim", "scene_context_dim") => set!(cfg.sim.scene_context_dim, usize),
            ("sim", "n_episodes") => set!(cfg.sim.n_episodes, usize),
            ("sim", "episode_len") => set!(cfg.sim.episode_len, usize),
            ("sim", "frame_interval_us") => set!(cfg.sim.frame_interval_us, i64),
            ("sim", "imu_interval_us") => set!(cfg.sim.imu_interval_us, i64),
            ("sim", "feature_dim") => set!(cfg.sim.feature_dim, usize),
            ("sim", "feature_noise_sigma") => set!(cfg.sim.feature_noise_sigma, f64),
            ("sim", "sensor_noise_rad") => set!(cfg.sim.sensor_noise_rad, f64),
            ("model", "embed_dim") => set!(cfg.embed_dim, usize),
            ("model", "hidden") => set!(cfg.hidden, usize),
            ("model", "k") => set!(cfg.k, usize),
            ("model", "n_obs") => set!(cfg.n_obs, usize),
            ("model", "n_pred") => set!(cfg.n_pred, usize),
            ("model", "horizon") => set!(cfg.horizon, usize),
            ("train", "epochs") => set!(cfg.epochs, usize),
            ("train", "lr") => set!(cfg.lr, f64),
            ("train", "momentum") => set!(cfg.momentum, f64),
            ("train", "init_seed") => set!(cfg.init_seed, u64),
            ("train", "shuffle_seed") => set!(cfg.shuffle_seed, u64),
            ("train", "holdout_episodes") => set!(cfg.holdout_episodes, usize),
            ("codebook", "seed") => set!(cfg.codebook_seed, u64),
            ("codebook", "max_iter") => set!(cfg.kmeans_max_iter, u32),
            ("codebook", "tol") => set!(cfg.kmeans_tol, f64),
            _ => {
                return Err(err(format!("unknown key [{section}] {key}")));
            }
        }
    }
    if let Some(name) = policy_name {
        cfg.sim.policy = match name.as_str() {
            "deterministic" => PolicyKind::Deterministic,
            "stochastic" => PolicyKind::Stochastic(epsilon),
            "goal_directed" => PolicyKind::GoalDirected,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown policy `{other}` (expected deterministic, stochastic, or goal_directed)"
                )));
            }
        };
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn parse_round_trip_of_fields() {
        let text = "\
[paths]
data_dir = /tmp/d
output_dir = /tmp/o

[sim]
seed = 42
policy = stochastic
epsilon = 0.25
n_episodes = 7
episode_len = 15

[model]
hidden = 16
n_obs = 4

[train]
epochs = 12
lr = 0.1
";
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.data_dir, PathBuf::from("/tmp/d"));
        assert_eq!(cfg.sim.seed, 42);
        assert_eq!(cfg.sim.policy, PolicyKind::Stochastic(0.25));
        assert_eq!(cfg.sim.n_episodes, 7);
        assert_eq!(cfg.hidden, 16);
        assert_eq!(cfg.n_obs, 4);
        assert_eq!(cfg.epochs, 12);
        assert_eq!(cfg.lr, 0.1);
        // untouched fields keep their defaults
        assert_eq!(cfg.k, 8);
        cfg.validate().unwrap();
    }

    #[test]
    fn epsilon_order_does_not_matter() {
        let cfg = parse("[sim]\nepsilon = 0.5\npolicy = stochastic\n").unwrap();
        assert_eq!(cfg.sim.policy, PolicyKind::Stochastic(0.5));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            parse("[train]\nlearning_rate = 0.1\n"),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn malformed_line_rejected() {
        assert!(matches!(
            parse("[train]\nepochs 12\n"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn bad_policy_rejected() {
        assert!(matches!(
            parse("[sim]\npolicy = frolicking\n"),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = RunConfig::default();
        cfg.k = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.momentum = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.holdout_episodes = cfg.sim.n_episodes;
        assert!(cfg.validate().is_err());
    }
}
