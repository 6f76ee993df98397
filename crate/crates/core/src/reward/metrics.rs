//! Accuracy and MAE over scored records.

use serde::Serialize;

use super::{aligned_predictions, choice_reward, Gold, RewardError};

/// A parsed answer with its reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub answer: String,
    pub gold: Gold,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// Mean choice reward over choice records.
    pub accuracy: Option<f64>,
    /// Mean absolute error over every forecast step.
    pub mae: Option<f64>,
    pub choice_records: usize,
    pub forecast_records: usize,
}

pub fn score_metrics(records: &[ScoreRecord]) -> Result<Metrics, RewardError> {
    if records.is_empty() {
        return Err(RewardError::EmptyInput);
    }
    let (mut hits, mut choices) = (0.0, 0usize);
    let (mut abs_err, mut steps, mut forecasts) = (0.0, 0usize, 0usize);
    for r in records {
        match &r.gold {
            Gold::Choice(label) => {
                choices += 1;
                hits += choice_reward(&r.answer, label);
            }
            Gold::Forecast(gold) => {
                forecasts += 1;
                let (preds, _) = aligned_predictions(&r.answer, gold.len());
                abs_err += preds.iter().zip(gold).map(|(p, y)| (p - y).abs()).sum::<f64>();
                steps += gold.len();
            }
        }
    }
    Ok(Metrics {
        accuracy: (choices > 0).then(|| hits / choices as f64),
        mae: (steps > 0).then(|| abs_err / steps as f64),
        choice_records: choices,
        forecast_records: forecasts,
    })
}
