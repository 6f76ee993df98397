//! Settings resolved from flags, a TOML file, the environment and defaults,
//! in that order of precedence.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::reward::{Pairing, RewardConfig};

pub const ENV_SEED: &str = "STSYNTH_SEED";
pub const ENV_SUBSTEPS: &str = "STSYNTH_SUBSTEPS";
pub const ENV_BACKEND: &str = "STSYNTH_BACKEND";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub substeps: Option<u32>,
    #[serde(default)]
    pub synthesis: SynthesisSection,
    #[serde(default)]
    pub reward: RewardSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSection {
    pub backend: Option<String>,
    pub scenario_rounds: Option<u32>,
    pub parameter_rounds: Option<u32>,
    pub max_seq_len: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSection {
    pub lambda: Option<f64>,
    pub epsilon: Option<f64>,
    pub length_bonus: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub pairing: Option<Pairing>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }
}

/// Read an environment variable, treating empty as unset.
pub fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

fn env_parsed<T: std::str::FromStr>(name: &str) -> anyhow::Result<Option<T>> {
    match env_var(name) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| anyhow::anyhow!("environment variable {name} has an invalid value `{v}`")),
    }
}

/// First of flag, file value, environment, default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, env: Option<T>, default: T) -> T {
    flag.or(file).or(env).unwrap_or(default)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSettings {
    pub seed: u64,
    pub substeps: u32,
}

impl SimSettings {
    pub fn resolve(seed: Option<u64>, substeps: Option<u32>, file: &FileConfig) -> anyhow::Result<Self> {
        Ok(Self {
            seed: pick(seed, file.seed, env_parsed(ENV_SEED)?, 0),
            substeps: pick(substeps, file.substeps, env_parsed(ENV_SUBSTEPS)?, 10),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardSettings {
    pub reward: RewardConfig,
    pub pairing: Pairing,
}

impl RewardSettings {
    pub fn resolve(flags: &RewardSection, file: &FileConfig) -> Self {
        let d = RewardConfig::default();
        let f = &file.reward;
        Self {
            reward: RewardConfig {
                lambda: pick(flags.lambda, f.lambda, None, d.lambda),
                epsilon: pick(flags.epsilon, f.epsilon, None, d.epsilon),
                length_bonus: pick(flags.length_bonus, f.length_bonus, None, d.length_bonus),
                alpha: pick(flags.alpha, f.alpha, None, d.alpha),
                beta: pick(flags.beta, f.beta, None, d.beta),
            },
            pairing: pick(flags.pairing, f.pairing, None, Pairing::default()),
        }
    }
}
