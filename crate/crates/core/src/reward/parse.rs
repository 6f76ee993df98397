//! Response schema parsing and number extraction.

use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParsedResponse {
    pub think: String,
    pub answer: String,
    pub well_formed: bool,
}

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";
const ANSWER_OPEN: &str = "<answer>";
const ANSWER_CLOSE: &str = "</answer>";

/// Text between the first `open` and the following `close`, if both exist.
fn between<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.find(open)? + open.len();
    let len = text[start..].find(close)?;
    Some(&text[start..start + len])
}

/// Split a response into its think and answer parts. `well_formed` holds only
/// for exactly one think block followed by exactly one answer block with
/// nothing but whitespace around them. The parts are captured either way.
pub fn extract_answer(response: &str) -> ParsedResponse {
    let think = between(response, THINK_OPEN, THINK_CLOSE).unwrap_or("").trim().to_string();
    let answer = between(response, ANSWER_OPEN, ANSWER_CLOSE).unwrap_or("").trim().to_string();
    ParsedResponse {
        think,
        answer,
        well_formed: strictly_formed(response),
    }
}

fn strictly_formed(response: &str) -> bool {
    for tag in [THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE] {
        if response.matches(tag).count() != 1 {
            return false;
        }
    }
    let pos = |tag: &str| response.find(tag).unwrap_or(0);
    let (to, tc, ao, ac) = (pos(THINK_OPEN), pos(THINK_CLOSE), pos(ANSWER_OPEN), pos(ANSWER_CLOSE));
    if !(to < tc && tc < ao && ao < ac) {
        return false;
    }
    let blank = |s: &str| s.trim().is_empty();
    blank(&response[..to]) && blank(&response[tc + THINK_CLOSE.len()..ao]) && blank(&response[ac + ANSWER_CLOSE.len()..])
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?").expect("number pattern compiles"))
}

/// Every signed decimal (scientific notation included) in order of appearance.
pub fn extract_numbers(text: &str) -> Vec<f64> {
    number_re()
        .find_iter(text)
        .filter_map(|m| m.as_str().parse::<f64>().ok())
        .filter(|x| x.is_finite())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed() {
        assert_eq!(
            extract_answer("<think>x</think><answer>A</answer>"),
            ParsedResponse { think: "x".into(), answer: "A".into(), well_formed: true }
        );
        assert!(extract_answer("  <think>x</think>\n<answer> A </answer>\n").well_formed);
    }

    #[test]
    fn deviations() {
        let missing_think = extract_answer("<answer>A</answer>");
        assert!(!missing_think.well_formed);
        assert_eq!(missing_think.answer, "A");
        assert!(!extract_answer("<think>t</think><answer>B</answer> extra").well_formed);
        assert!(!extract_answer("<answer>B</answer><think>t</think>").well_formed);
        assert!(!extract_answer("<think>a</think><think>b</think><answer>B</answer>").well_formed);
        assert!(!extract_answer("lead <think>t</think><answer>B</answer>").well_formed);
        let no_answer = extract_answer("<think>t</think>");
        assert!(!no_answer.well_formed);
        assert_eq!(no_answer.answer, "");
    }

    #[test]
    fn numbers() {
        assert_eq!(extract_numbers("[20, 10]"), vec![20.0, 10.0]);
        assert_eq!(extract_numbers("-1.5e2, +3, .25 and 7."), vec![-150.0, 3.0, 0.25, 7.0]);
        assert!(extract_numbers("no idea").is_empty());
    }
}
