//! Spatial contrastive bonus and group-relative advantages.

use serde::{Deserialize, Serialize};

use super::{RewardConfig, RewardError};

/// Rewards of the with-spatial and without-spatial responses to one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRollout {
    pub question_id: String,
    pub with_spatial: Vec<f64>,
    pub without_spatial: Vec<f64>,
}

/// How a with-spatial reward is compared with the without-spatial group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Compare `r_sp[i]` with `r_ns[i]`.
    #[default]
    Index,
    /// Compare `r_sp[i]` with the mean of the without-spatial rewards.
    GroupMean,
}

/// `R_i = r_sp[i] + alpha` when `r_sp[i] > beta * r_ns`, else `r_sp[i]`.
pub fn sgrpo_rewards(g: &GroupRollout, cfg: &RewardConfig, pairing: Pairing) -> Result<Vec<f64>, RewardError> {
    if g.with_spatial.len() != g.without_spatial.len() {
        return Err(RewardError::Shape {
            with_spatial: g.with_spatial.len(),
            without_spatial: g.without_spatial.len(),
        });
    }
    let mean_ns = if g.without_spatial.is_empty() {
        0.0
    } else {
        g.without_spatial.iter().sum::<f64>() / g.without_spatial.len() as f64
    };
    Ok(g.with_spatial
        .iter()
        .zip(&g.without_spatial)
        .map(|(&sp, &ns)| {
            let reference = match pairing {
                Pairing::Index => ns,
                Pairing::GroupMean => mean_ns,
            };
            if sp > cfg.beta * reference {
                sp + cfg.alpha
            } else {
                sp
            }
        })
        .collect())
}

/// Standardize rewards within a group with the population standard deviation.
/// A group whose deviation is below `1e-8` gets all-zero advantages.
pub fn group_advantages(rewards: &[f64]) -> Vec<f64> {
    if rewards.is_empty() {
        return Vec::new();
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-8 {
        return vec![0.0; rewards.len()];
    }
    rewards.iter().map(|r| (r - mean) / std).collect()
}
