//! Judge verdicts and the routing they imply.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::payload::{extract_json_payload, ExtractionError};
use crate::report::ValidationReport;

#[derive(Debug, Error, PartialEq)]
pub enum JudgeError {
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error("judge response has no boolean `approved` field")]
    MissingApproval,
    #[error("unknown error_source `{0}`")]
    UnknownSource(String),
    #[error("verdict contract broken: {0}")]
    Contract(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeKind {
    /// Reviews the scenario text and its structured parse.
    Scenario,
    /// Reviews parameters, coupling and the simulated series.
    Parameters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorSource {
    Agent1,
    Agent2,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub judge: JudgeKind,
    pub approved: bool,
    pub error_source: ErrorSource,
    pub issues: Vec<Value>,
    pub feedback: String,
    pub overall_comment: String,
    /// True when the verdict came from the local rule checks rather than a
    /// judge model.
    #[serde(default)]
    pub local: bool,
}

impl JudgeVerdict {
    /// A rejection built from failed local rule checks.
    pub fn from_report(judge: JudgeKind, source: ErrorSource, report: &ValidationReport, comment: &str) -> Self {
        let issues = report.to_judge_json()["issues"].as_array().cloned().unwrap_or_default();
        Self::local_rejection(judge, source, issues, comment)
    }

    pub fn local_rejection(judge: JudgeKind, source: ErrorSource, issues: Vec<Value>, comment: &str) -> Self {
        Self {
            judge,
            approved: false,
            error_source: source,
            issues,
            feedback: comment.to_string(),
            overall_comment: comment.to_string(),
            local: true,
        }
    }

    /// Feedback block handed to the agent being retried.
    pub fn feedback_json(&self) -> String {
        let v = json!({
            "approved": self.approved,
            "feedback": self.feedback,
            "issues": self.issues,
            "overall_comment": self.overall_comment,
        });
        serde_json::to_string_pretty(&v).expect("verdict serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Accept,
    RetryAgent1,
    RetryAgent2,
    RetryParameters,
}

fn text_field(v: &Value, key: &str) -> String {
    match &v[key] {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn list_field(v: &Value, key: &str) -> Vec<Value> {
    v[key].as_array().cloned().unwrap_or_default()
}

fn approval(v: &Value) -> Result<bool, JudgeError> {
    v["approved"].as_bool().ok_or(JudgeError::MissingApproval)
}

/// Parse a scenario-judge response.
pub fn parse_judge1(response: &str) -> Result<JudgeVerdict, JudgeError> {
    let v = extract_json_payload(response)?;
    let approved = approval(&v)?;
    let error_source = match &v["error_source"] {
        Value::Null => ErrorSource::None,
        Value::String(s) => match s.to_ascii_lowercase().as_str() {
            "agent1" => ErrorSource::Agent1,
            "agent2" => ErrorSource::Agent2,
            "" | "null" | "none" => ErrorSource::None,
            _ => return Err(JudgeError::UnknownSource(s.clone())),
        },
        other => return Err(JudgeError::UnknownSource(other.to_string())),
    };
    Ok(JudgeVerdict {
        judge: JudgeKind::Scenario,
        approved,
        error_source,
        issues: list_field(&v, "issues"),
        feedback: text_field(&v, "feedback"),
        overall_comment: text_field(&v, "overall_comment"),
        local: false,
    })
}

/// Parse a parameter-judge response. Parameter and adjacency issues are
/// collected into one list, each tagged with its kind.
pub fn parse_judge2(response: &str) -> Result<JudgeVerdict, JudgeError> {
    let v = extract_json_payload(response)?;
    let approved = approval(&v)?;
    let mut issues = Vec::new();
    for (key, kind) in [("parameter_issues", "parameter"), ("adjacency_issues", "adjacency")] {
        for mut issue in list_field(&v, key) {
            if let Value::Object(map) = &mut issue {
                map.insert("kind".into(), json!(kind));
            }
            issues.push(issue);
        }
    }
    Ok(JudgeVerdict {
        judge: JudgeKind::Parameters,
        approved,
        error_source: ErrorSource::None,
        issues,
        feedback: text_field(&v, "visual_assessment"),
        overall_comment: text_field(&v, "overall_comment"),
        local: false,
    })
}

/// Where the loop goes next after `v`.
pub fn judge_route(v: &JudgeVerdict) -> Result<Route, JudgeError> {
    if v.approved {
        if !v.issues.is_empty() {
            return Err(JudgeError::Contract(format!(
                "approved verdict lists {} issue(s)",
                v.issues.len()
            )));
        }
        if v.error_source != ErrorSource::None {
            return Err(JudgeError::Contract("approved verdict names an error source".into()));
        }
        return Ok(Route::Accept);
    }
    match (v.judge, v.error_source) {
        (JudgeKind::Parameters, _) => Ok(Route::RetryParameters),
        (JudgeKind::Scenario, ErrorSource::Agent1) => Ok(Route::RetryAgent1),
        (JudgeKind::Scenario, ErrorSource::Agent2) => Ok(Route::RetryAgent2),
        (JudgeKind::Scenario, ErrorSource::None) => {
            Err(JudgeError::Contract("rejected scenario verdict names no error source".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approve() {
        let v = parse_judge1(r#"{"approved": true, "error_source": null, "issues": []}"#).unwrap();
        assert_eq!(judge_route(&v), Ok(Route::Accept));
    }

    #[test]
    fn agent_routing() {
        let v = parse_judge1(r#"{"approved": false, "error_source": "agent2", "feedback": "seq_len", "issues": [{"type": "Parsing Fidelity"}]}"#).unwrap();
        assert_eq!(v.error_source, ErrorSource::Agent2);
        assert_eq!(judge_route(&v), Ok(Route::RetryAgent2));
        let v = parse_judge1(r#"{"approved": false, "error_source": "agent1"}"#).unwrap();
        assert_eq!(judge_route(&v), Ok(Route::RetryAgent1));
    }

    #[test]
    fn parameter_rejection() {
        let r = "```json\n{\"approved\": false, \"parameter_issues\": [{\"node_id\": \"1\", \"parameter\": \"sigma\"}], \"adjacency_issues\": [], \"overall_comment\": \"too noisy\"}\n```";
        let v = parse_judge2(r).unwrap();
        assert_eq!(v.issues.len(), 1);
        assert_eq!(v.issues[0]["kind"], "parameter");
        assert_eq!(judge_route(&v), Ok(Route::RetryParameters));
    }

    #[test]
    fn contract_errors() {
        let v = parse_judge1(r#"{"approved": true, "error_source": null, "issues": [{"problem": "x"}]}"#).unwrap();
        assert!(matches!(judge_route(&v), Err(JudgeError::Contract(_))));
        let v = parse_judge1(r#"{"approved": false, "error_source": null}"#).unwrap();
        assert!(matches!(judge_route(&v), Err(JudgeError::Contract(_))));
        assert_eq!(parse_judge1(r#"{"error_source": null}"#), Err(JudgeError::MissingApproval));
        assert_eq!(
            parse_judge1(r#"{"approved": false, "error_source": "agent7"}"#),
            Err(JudgeError::UnknownSource("agent7".into()))
        );
    }
}
