//! Flat `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, agent hyperparameters use
//! dotted `agent.*` keys. Unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rud_core::agents::{AgentConfig, ExplorationType, Schedule, Scheduler};
use rud_core::env::EnvId;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given more than once")]
    Duplicate { line: usize, key: String },
    #[error("invalid value for `{key}`: {reason}")]
    Value { key: String, reason: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Ddpg,
    Td3,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ddpg => "ddpg",
            Algorithm::Td3 => "td3",
        }
    }

    pub fn preset(self) -> AgentConfig {
        match self {
            Algorithm::Ddpg => AgentConfig::ddpg(),
            Algorithm::Td3 => AgentConfig::td3(),
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ddpg" => Ok(Algorithm::Ddpg),
            "td3" => Ok(Algorithm::Td3),
            other => Err(format!("unknown algorithm {other:?} (expected ddpg or td3)")),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env_id: EnvId,
    pub algorithm: Algorithm,
    pub scheduler: Scheduler,
    pub block_size: usize,
    pub total_steps: usize,
    pub seeds: Vec<u64>,
    pub agent: AgentConfig,
    pub eval_episodes: usize,
    pub eval_interval: usize,
    /// `None` means `max(batch_size, 1000)`, capped at `T`.
    pub warmup_steps: Option<usize>,
    pub probe_size: usize,
    pub output_dir: PathBuf,
    /// Agent keys set explicitly in the file, in file order.
    pub agent_overrides: Vec<(String, String)>,
}

pub const DEFAULT_TOTAL_STEPS: usize = 30_000;
pub const DEFAULT_EVAL_INTERVAL: usize = 1_000;
pub const DEFAULT_EVAL_EPISODES: usize = 10;
pub const DEFAULT_F_SWEEP: [usize; 5] = [1, 50, 125, 250, 500];

const TOP_KEYS: &[&str] = &[
    "env",
    "algorithm",
    "scheduler",
    "F",
    "T",
    "seeds",
    "eval_episodes",
    "eval_interval",
    "warmup_steps",
    "probe_size",
    "output_dir",
];

const AGENT_KEYS: &[&str] = &[
    "gamma",
    "tau",
    "batch_size",
    "actor_lr",
    "critic_lr",
    "hidden_sizes",
    "exploration_noise_sigma",
    "exploration_type",
    "ou_theta",
    "ou_dt",
    "target_policy_noise_sigma",
    "target_noise_clip",
    "policy_delay",
    "use_clipped_double_q",
    "use_target_policy_smoothing",
];

fn bad(key: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

fn parse<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    raw.parse::<T>().map_err(|e| bad(key, format!("{raw:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, ConfigError> {
    match raw {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(bad(key, format!("{other:?} is not true or false"))),
    }
}

/// Apply one `agent.*` assignment on top of `agent`.
pub fn apply_agent_key(agent: &mut AgentConfig, key: &str, raw: &str) -> Result<(), ConfigError> {
    let full = format!("agent.{key}");
    let k = full.as_str();
    match key {
        "gamma" => agent.gamma = parse(k, raw)?,
        "tau" => agent.tau = parse(k, raw)?,
        "batch_size" => agent.batch_size = parse(k, raw)?,
        "actor_lr" => agent.actor_lr = parse(k, raw)?,
        "critic_lr" => agent.critic_lr = parse(k, raw)?,
        "hidden_sizes" => agent.hidden_sizes = parse_list(k, raw)?,
        "exploration_noise_sigma" => agent.exploration_noise_sigma = parse(k, raw)?,
        "exploration_type" => {
            agent.exploration_type = raw
                .parse::<ExplorationType>()
                .map_err(|e| bad(k, e))?
        }
        "ou_theta" => agent.ou_theta = parse(k, raw)?,
        "ou_dt" => agent.ou_dt = parse(k, raw)?,
        "target_policy_noise_sigma" => agent.target_policy_noise_sigma = parse(k, raw)?,
        "target_noise_clip" => agent.target_noise_clip = parse(k, raw)?,
        "policy_delay" => agent.policy_delay = parse(k, raw)?,
        "use_clipped_double_q" => agent.use_clipped_double_q = parse_bool(k, raw)?,
        "use_target_policy_smoothing" => agent.use_target_policy_smoothing = parse_bool(k, raw)?,
        _ => return Err(bad(k, "unknown agent key")),
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }

    pub fn schedule(&self) -> Schedule {
        let warmup = self
            .warmup_steps
            .unwrap_or_else(|| self.agent.batch_size.max(1000).min(self.total_steps));
        Schedule {
            total_steps: self.total_steps,
            block_size: self.block_size,
            warmup_steps: warmup,
            eval_interval: self.eval_interval,
        }
    }

    /// Replace the algorithm preset, re-applying explicit agent overrides.
    pub fn with_algorithm(&self, algorithm: Algorithm) -> Result<Self, ConfigError> {
        let mut agent = algorithm.preset();
        for (k, v) in &self.agent_overrides {
            apply_agent_key(&mut agent, k, v)?;
        }
        Ok(ExperimentConfig {
            algorithm,
            agent,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seeds.is_empty() {
            return Err(bad("seeds", "at least one seed is required"));
        }
        if self.eval_episodes == 0 {
            return Err(bad("eval_episodes", "must be at least 1"));
        }
        if self.probe_size == 0 {
            return Err(bad("probe_size", "must be at least 1"));
        }
        self.agent.validate().map_err(|e| bad("agent", e))?;
        self.schedule()
            .validate(self.agent.batch_size)
            .map_err(|e| bad("schedule", e))
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut top: BTreeMap<&str, &str> = BTreeMap::new();
        let mut agent_overrides = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                text: raw_line.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(agent_key) = key.strip_prefix("agent.") {
                if !AGENT_KEYS.contains(&agent_key) {
                    return Err(ConfigError::UnknownKey {
                        line: line_no,
                        key: key.to_string(),
                    });
                }
                if agent_overrides.iter().any(|(k, _): &(String, String)| k == agent_key) {
                    return Err(ConfigError::Duplicate {
                        line: line_no,
                        key: key.to_string(),
                    });
                }
                agent_overrides.push((agent_key.to_string(), value.to_string()));
            } else if TOP_KEYS.contains(&key) {
                if top.insert(key, value).is_some() {
                    return Err(ConfigError::Duplicate {
                        line: line_no,
                        key: key.to_string(),
                    });
                }
            } else {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: key.to_string(),
                });
            }
        }

        let env_id = top
            .get("env")
            .ok_or(ConfigError::Missing("env"))?
            .parse::<EnvId>()
            .map_err(|e| bad("env", e))?;
        let algorithm: Algorithm = match top.get("algorithm") {
            Some(v) => v.parse().map_err(|e: String| bad("algorithm", e))?,
            None => Algorithm::Td3,
        };
        let scheduler = match top.get("scheduler") {
            Some(v) => v.parse::<Scheduler>().map_err(|e| bad("scheduler", e))?,
            None => Scheduler::Regular,
        };
        let opt = |key: &str, default: usize| -> Result<usize, ConfigError> {
            top.get(key).map_or(Ok(default), |v| parse(key, v))
        };
        let seeds = match top.get("seeds") {
            Some(v) => parse_list("seeds", v)?,
            None => return Err(ConfigError::Missing("seeds")),
        };
        let mut config = ExperimentConfig {
            env_id,
            algorithm,
            scheduler,
            block_size: opt("F", 1)?,
            total_steps: opt("T", DEFAULT_TOTAL_STEPS)?,
            seeds,
            agent: algorithm.preset(),
            eval_episodes: opt("eval_episodes", DEFAULT_EVAL_EPISODES)?,
            eval_interval: opt("eval_interval", DEFAULT_EVAL_INTERVAL)?,
            warmup_steps: top
                .get("warmup_steps")
                .map(|v| parse("warmup_steps", v))
                .transpose()?,
            probe_size: opt("probe_size", rud_core::agents::DEFAULT_PROBE_SIZE)?,
            output_dir: PathBuf::from(top.get("output_dir").copied().unwrap_or("runs")),
            agent_overrides,
        };
        config = config.with_algorithm(algorithm)?;
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "env = pendulum\nseeds = 0, 1\n";

    #[test]
    fn defaults() {
        let c: ExperimentConfig = MINIMAL.parse().unwrap();
        assert_eq!(c.env_id, EnvId::Pendulum);
        assert_eq!(c.algorithm, Algorithm::Td3);
        assert_eq!(c.total_steps, 30_000);
        assert_eq!(c.eval_interval, 1_000);
        assert_eq!(c.eval_episodes, 10);
        assert_eq!(c.seeds, vec![0, 1]);
        assert_eq!(c.agent, AgentConfig::td3());
        assert_eq!(c.schedule().warmup_steps, 1000);
    }

    #[test]
    fn agent_overrides_apply_after_preset() {
        let text = "agent.batch_size = 64\nalgorithm = ddpg\nenv = lqr\nseeds = 3\nagent.hidden_sizes = 32,16\n";
        let c: ExperimentConfig = text.parse().unwrap();
        assert_eq!(c.agent.batch_size, 64);
        assert_eq!(c.agent.hidden_sizes, vec![32, 16]);
        assert!(!c.agent.use_clipped_double_q);
        let td3 = c.with_algorithm(Algorithm::Td3).unwrap();
        assert_eq!(td3.agent.batch_size, 64);
        assert!(td3.agent.use_clipped_double_q);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# experiment\n\nenv = pointmass  # arena\nseeds = 5\nT = 2000\n";
        let c: ExperimentConfig = text.parse().unwrap();
        assert_eq!(c.total_steps, 2000);
        assert_eq!(c.schedule().warmup_steps, 1000);
    }

    #[test]
    fn unknown_key_names_the_field() {
        let err = format!("{}", format!("{MINIMAL}agent.gama = 0.9\n").parse::<ExperimentConfig>().unwrap_err());
        assert!(err.contains("agent.gama"), "{err}");
        let err = format!("{}", format!("{MINIMAL}eval_episode = 3\n").parse::<ExperimentConfig>().unwrap_err());
        assert!(err.contains("eval_episode"), "{err}");
    }

    #[test]
    fn invalid_values_name_the_field() {
        for (line, field) in [
            ("agent.gamma = 1.5", "agent"),
            ("agent.tau = fast", "agent.tau"),
            ("eval_episodes = 0", "eval_episodes"),
            ("scheduler = sometimes", "scheduler"),
            ("F = 0", "schedule"),
            ("agent.use_clipped_double_q = yes", "agent.use_clipped_double_q"),
        ] {
            let err = format!("{MINIMAL}{line}\n").parse::<ExperimentConfig>().unwrap_err();
            assert!(err.to_string().contains(field), "{line}: {err}");
        }
        let err = "env = pendulum\nseeds =\n".parse::<ExperimentConfig>().unwrap_err();
        assert!(err.to_string().contains("seeds"));
        let err = "seeds = 1\n".parse::<ExperimentConfig>().unwrap_err();
        assert!(err.to_string().contains("env"));
        let err = "env = mujoco\nseeds = 1\n".parse::<ExperimentConfig>().unwrap_err();
        assert!(err.to_string().contains("env"));
    }

    #[test]
    fn duplicates_and_syntax_are_rejected() {
        assert!(matches!(
            format!("{MINIMAL}T = 10\nT = 20\n").parse::<ExperimentConfig>(),
            Err(ConfigError::Duplicate { .. })
        ));
        assert!(matches!(
            format!("{MINIMAL}just words\n").parse::<ExperimentConfig>(),
            Err(ConfigError::Syntax { line: 3, .. })
        ));
    }

    #[test]
    fn short_budget_caps_warmup() {
        let c: ExperimentConfig = format!("{MINIMAL}T = 600\nagent.batch_size = 32\n").parse().unwrap();
        assert_eq!(c.schedule().warmup_steps, 600);
    }
}
