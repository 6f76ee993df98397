//! Rule-based rewards for `<think>…</think><answer>…</answer>` responses,
//! the spatial contrastive bonus and group-relative advantages.

mod metrics;
mod parse;
mod sgrpo;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use metrics::{score_metrics, Metrics, ScoreRecord};
pub use parse::{extract_answer, extract_numbers, ParsedResponse};
pub use sgrpo::{group_advantages, sgrpo_rewards, GroupRollout, Pairing};

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("group sizes differ: {with_spatial} with-spatial vs {without_spatial} without-spatial responses")]
    Shape { with_spatial: usize, without_spatial: usize },
    #[error("no records to score")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Weight of the format reward in the combined reward.
    pub lambda: f64,
    pub epsilon: f64,
    /// Added when the forecast length matches the gold length.
    pub length_bonus: f64,
    /// Spatial bonus.
    pub alpha: f64,
    /// Tolerance factor of the spatial comparison.
    pub beta: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            epsilon: 1e-9,
            length_bonus: 0.1,
            alpha: 0.1,
            beta: 0.8,
        }
    }
}

/// Reference answer: a choice label or a numeric sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gold {
    Forecast(Vec<f64>),
    Choice(String),
}

/// 1 when the response follows the schema exactly, else 0.
pub fn format_reward(response: &str) -> f64 {
    if extract_answer(response).well_formed {
        1.0
    } else {
        0.0
    }
}

fn normalize_choice(s: &str) -> String {
    let mut s = s.trim();
    if s.get(..7).is_some_and(|p| p.eq_ignore_ascii_case("answer:")) {
        s = s[7..].trim();
    }
    s.trim_end_matches(|c: char| c.is_ascii_punctuation())
        .trim()
        .to_lowercase()
}

/// 1 when the normalized answer equals the normalized gold label.
pub fn choice_reward(answer: &str, gold: &str) -> f64 {
    if normalize_choice(answer) == normalize_choice(gold) {
        1.0
    } else {
        0.0
    }
}

/// Predictions padded with 0 or truncated to `len`.
pub(crate) fn aligned_predictions(answer: &str, len: usize) -> (Vec<f64>, usize) {
    let mut preds = extract_numbers(answer);
    let count = preds.len();
    preds.resize(len, 0.0);
    (preds, count)
}

/// Mean relative-error score over the gold horizon, plus the length bonus
/// when exactly `T` numbers were given, clipped to `[0, 1]`.
pub fn forecast_reward(answer: &str, gold: &[f64], cfg: &RewardConfig) -> f64 {
    if gold.is_empty() {
        return 0.0;
    }
    let (preds, count) = aligned_predictions(answer, gold.len());
    if count == 0 {
        return 0.0;
    }
    let eps = cfg.epsilon;
    let total: f64 = preds
        .iter()
        .zip(gold)
        .map(|(p, y)| 1.0 - (((p - y).abs() + eps) / (y.abs() + eps)).min(1.0))
        .sum();
    let mut score = total / gold.len() as f64;
    if count == gold.len() {
        score += cfg.length_bonus;
    }
    score.clamp(0.0, 1.0)
}

/// Task reward for the answer field against `gold`.
pub fn task_reward(answer: &str, gold: &Gold, cfg: &RewardConfig) -> f64 {
    match gold {
        Gold::Choice(label) => choice_reward(answer, label),
        Gold::Forecast(seq) => forecast_reward(answer, seq, cfg),
    }
}

/// `(1 - lambda) * task + lambda * format`.
pub fn combined_reward(response: &str, gold: &Gold, cfg: &RewardConfig) -> f64 {
    let parsed = extract_answer(response);
    let format = if parsed.well_formed { 1.0 } else { 0.0 };
    (1.0 - cfg.lambda) * task_reward(&parsed.answer, gold, cfg) + cfg.lambda * format
}
