//! Duration text such as `"1 day"` or `"30 minutes"`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DurationError {
    #[error("duration `{0}` is not of the form `<number> <unit>`")]
    Malformed(String),
    #[error("unknown duration unit `{0}`")]
    UnknownUnit(String),
    #[error("sampling frequency must be positive, got `{0}`")]
    ZeroFrequency(String),
    #[error("time span `{span}` is shorter than one sampling interval `{frequency}`")]
    TooShort { span: String, frequency: String },
}

/// Minutes per unit. Months count 30 days and years 365 days.
fn unit_minutes(unit: &str) -> Option<f64> {
    let unit = unit.to_ascii_lowercase();
    let minutes = match unit.trim_end_matches('s') {
        "minute" | "min" => 1.0,
        "hour" | "hr" => 60.0,
        "day" => 1440.0,
        "week" => 7.0 * 1440.0,
        "month" => 30.0 * 1440.0,
        "year" => 365.0 * 1440.0,
        _ => return None,
    };
    Some(minutes)
}

/// Parse `"<number> <unit>"` into minutes.
pub fn parse_minutes(text: &str) -> Result<f64, DurationError> {
    let mut parts = text.split_whitespace();
    let (Some(number), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(DurationError::Malformed(text.to_string()));
    };
    let number: f64 = number
        .parse()
        .map_err(|_| DurationError::Malformed(text.to_string()))?;
    if !number.is_finite() || number < 0.0 {
        return Err(DurationError::Malformed(text.to_string()));
    }
    let per_unit = unit_minutes(unit).ok_or_else(|| DurationError::UnknownUnit(unit.to_string()))?;
    Ok(number * per_unit)
}

/// Number of sampled steps in `time_span` at `sampling_frequency`:
/// `floor(span / frequency)`, at least 1.
pub fn infer_seq_len(time_span: &str, sampling_frequency: &str) -> Result<usize, DurationError> {
    let span = parse_minutes(time_span)?;
    let freq = parse_minutes(sampling_frequency)?;
    if freq <= 0.0 {
        return Err(DurationError::ZeroFrequency(sampling_frequency.to_string()));
    }
    // small slack so ratios like 1440/30 never land just under an integer
    let steps = (span / freq + 1e-9).floor();
    if steps < 1.0 {
        return Err(DurationError::TooShort {
            span: time_span.to_string(),
            frequency: sampling_frequency.to_string(),
        });
    }
    Ok(steps as usize)
}
