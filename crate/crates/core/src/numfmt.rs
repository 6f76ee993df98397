//! Number rendering shared by the text exports.

/// Round `x` to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let text = format!("{:.*e}", digits.saturating_sub(1), x);
    text.parse().unwrap_or(x)
}

/// Render with at most `digits` significant digits, trailing zeros trimmed,
/// never in exponent notation.
pub fn format_sig(x: f64, digits: usize) -> String {
    let rounded = round_sig(x, digits);
    if rounded == 0.0 {
        // avoids "-0"
        return "0".to_string();
    }
    format!("{rounded}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trims_and_rounds() {
        assert_eq!(format_sig(300.0, 4), "300");
        assert_eq!(format_sig(0.1 * 15.0, 4), "1.5");
        assert_eq!(format_sig(-1.7262, 4), "-1.726");
        assert_eq!(format_sig(0.1309, 4), "0.1309");
        assert_eq!(format_sig(12346.0, 4), "12350");
        assert_eq!(format_sig(-0.0, 4), "0");
        assert_eq!(format_sig(100.123456789, 6), "100.123");
        assert_eq!(format_sig(0.000123456, 6), "0.000123456");
    }
}
