//! JSON run configuration shared by the command-line tools.
//!
//! Every key is optional; omitted keys take the defaults below and unknown
//! keys are rejected.
//!
//! | key                        | default   |
//! |----------------------------|-----------|
//! | `train.variant`            | `"dqn"`   |
//! | `train.episodes`           | 10000     |
//! | `train.seed`               | 0         |
//! | `train.gamma`              | 0.95      |
//! | `train.lr`                 | 0.001     |
//! | `train.epsilon_start`      | 1.0       |
//! | `train.epsilon_decay`      | 0.995     |
//! | `train.epsilon_min`        | 0.01      |
//! | `train.batch_size`         | 64        |
//! | `train.update_every`       | 10        |
//! | `train.sync_every`         | 500       |
//! | `train.buffer_capacity`    | 50000     |
//! | `train.hidden`             | 64        |
//! | `train.trace_every`        | 0         |
//! | `train.out_dir`            | unset     |
//! | `eval.episodes`            | 1000      |
//! | `eval.epsilon`             | 0.01      |
//! | `eval.seed`                | 0         |
//! | `env.n_chips`              | 5         |
//! | `env.n_rows`               | 6         |
//! | `env.payoff`               | 1         |
//! | `env.reward_cap`           | 5.0       |
//! | `env.decay`                | 0.3       |
//! | `env.max_steps`            | 500       |
//! | `env.on_illegal`           | `"random_legal"` |
//!
//! The top-level `env` block applies to both training and evaluation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentVariant;
use crate::env::EnvSpec;
use crate::training::{EvalConfig, TrainConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub variant: AgentVariant,
    pub episodes: u32,
    pub seed: u64,
    pub gamma: f64,
    pub lr: f32,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub batch_size: usize,
    pub update_every: u64,
    pub sync_every: u32,
    pub buffer_capacity: usize,
    pub hidden: usize,
    pub trace_every: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<std::path::PathBuf>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            variant: t.variant,
            episodes: t.episodes,
            seed: t.seed,
            gamma: t.gamma,
            lr: t.lr,
            epsilon_start: t.epsilon_start,
            epsilon_decay: t.epsilon_decay,
            epsilon_min: t.epsilon_min,
            batch_size: t.batch_size,
            update_every: t.update_every,
            sync_every: t.sync_every,
            buffer_capacity: t.buffer_capacity,
            hidden: t.hidden,
            trace_every: t.trace_every,
            out_dir: t.out_dir,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub episodes: u32,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        let e = EvalConfig::default();
        Self {
            episodes: e.episodes,
            epsilon: e.epsilon,
            seed: e.seed,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub train: TrainSection,
    pub eval: EvalSection,
    pub env: EnvSpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.env.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            variant: t.variant,
            episodes: t.episodes,
            seed: t.seed,
            gamma: t.gamma,
            lr: t.lr,
            epsilon_start: t.epsilon_start,
            epsilon_decay: t.epsilon_decay,
            epsilon_min: t.epsilon_min,
            batch_size: t.batch_size,
            update_every: t.update_every,
            sync_every: t.sync_every,
            buffer_capacity: t.buffer_capacity,
            hidden: t.hidden,
            trace_every: t.trace_every,
            env: self.env.clone(),
            out_dir: t.out_dir.clone(),
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            episodes: self.eval.episodes,
            epsilon: self.eval.epsilon,
            seed: self.eval.seed,
            env: self.env.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg.train_config(), TrainConfig::default());
        assert_eq!(cfg.eval_config(), EvalConfig::default());
    }

    #[test]
    fn nested_overrides() {
        let cfg = RunConfig::from_json(r#"{"train":{"variant":"ddqn","episodes":7},"env":{"max_steps":50}}"#).unwrap();
        let t = cfg.train_config();
        assert_eq!((t.variant, t.episodes, t.env.max_steps), (AgentVariant::Ddqn, 7, 50));
        assert_eq!(cfg.eval_config().env.max_steps, 50);
    }

    #[test]
    fn unknown_and_invalid_rejected() {
        assert!(RunConfig::from_json(r#"{"trian":{}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"train":{"episodez":1}}"#).is_err());
        assert!(matches!(
            RunConfig::from_json(r#"{"env":{"decay":0}}"#),
            Err(ConfigError::Invalid(_))
        ));
    }
}
