//! Rule-check reports shared by the scenario, parameter and modulation
//! validators.

use serde::Serialize;
use serde_json::{json, Value};

/// Stable identifiers for every rule the validators can raise.
pub mod rules {
    // scenario
    pub const TIMING: &str = "TIMING";
    pub const EDGE_CONSISTENCY: &str = "EDGE-CONSISTENCY";
    pub const SOURCE_OUT: &str = "SOURCE-OUT";
    pub const CONNECTED: &str = "CONNECTED";
    pub const BASELINE_MAGNITUDE: &str = "BASELINE-MAGNITUDE";
    pub const TYPE_RULES: &str = "TYPE-RULES";
    pub const COVERAGE: &str = "COVERAGE";

    // parameters
    pub const KAPPA_RANGE: &str = "KAPPA-RANGE";
    pub const LAMBDA_RANGE: &str = "LAMBDA-RANGE";
    pub const LOGISTIC_RATE: &str = "LOGISTIC-RATE";
    pub const SINUSOIDAL_SHAPE: &str = "SINUSOIDAL-SHAPE";
    pub const SIGMA_PLAUSIBILITY: &str = "SIGMA-PLAUSIBILITY";
    pub const DIFFUSION_ALPHA: &str = "DIFFUSION-ALPHA";
    pub const TYPE_DRIFT: &str = "TYPE-DRIFT";
    pub const PARAM_REFERENCE: &str = "PARAM-REFERENCE";
    pub const RESOLUTION: &str = "RESOLUTION";

    // modulation
    pub const MULTIPLIER_BAND: &str = "MULTIPLIER-BAND";
    pub const MULTIPLIER_POSITIVE: &str = "MULTIPLIER-POSITIVE";
    pub const UNKNOWN_EDGE: &str = "UNKNOWN-EDGE";
    pub const MODULATION_OVERLAP: &str = "MODULATION-OVERLAP";
    pub const UNMATCHED_WINDOW: &str = "UNMATCHED-WINDOW";
    pub const BASE_ADJACENCY: &str = "BASE-ADJACENCY";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub rule_id: String,
    pub location: String,
    pub detail: String,
    pub severity: Severity,
}

impl Violation {
    fn judge_issue(&self) -> Value {
        json!({
            "type": issue_category(&self.rule_id),
            "field": self.location,
            "problem": format!("{}: {}", self.rule_id, self.detail),
            "suggestion": suggestion_for(&self.rule_id),
        })
    }
}

/// Outcome of a validator run. `approved` holds exactly when there are no
/// error-severity violations; warnings never block approval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub approved: bool,
    pub violations: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl Default for ValidationReport {
    fn default() -> Self {
        Self::approved()
    }
}

impl ValidationReport {
    pub fn approved() -> Self {
        Self {
            approved: true,
            violations: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn error(&mut self, rule: &str, location: impl Into<String>, detail: impl Into<String>) {
        self.push(rule, location.into(), detail.into(), Severity::Error);
    }

    pub fn warn(&mut self, rule: &str, location: impl Into<String>, detail: impl Into<String>) {
        self.push(rule, location.into(), detail.into(), Severity::Warning);
    }

    fn push(&mut self, rule: &str, location: String, detail: String, severity: Severity) {
        let v = Violation {
            rule_id: rule.to_string(),
            location,
            detail,
            severity,
        };
        match severity {
            Severity::Error => {
                self.violations.push(v);
                self.approved = false;
            }
            Severity::Warning => self.warnings.push(v),
        }
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.approved &= other.approved;
        self.violations.extend(other.violations);
        self.warnings.extend(other.warnings);
    }

    /// Distinct rule ids among the error-severity violations, in first-seen order.
    pub fn rule_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = Vec::new();
        for v in &self.violations {
            if !ids.contains(&v.rule_id.as_str()) {
                ids.push(&v.rule_id);
            }
        }
        ids
    }

    pub fn has_rule(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule_id == rule)
    }

    pub fn has_warning(&self, rule: &str) -> bool {
        self.warnings.iter().any(|v| v.rule_id == rule)
    }

    /// The judge-facing shape: `{approved, issues: [{type, field, problem, suggestion}]}`.
    /// Warnings are listed under a separate `warnings` key with the same item shape.
    pub fn to_judge_json(&self) -> Value {
        json!({
            "approved": self.approved,
            "issues": self.violations.iter().map(Violation::judge_issue).collect::<Vec<_>>(),
            "warnings": self.warnings.iter().map(Violation::judge_issue).collect::<Vec<_>>(),
        })
    }
}

fn issue_category(rule: &str) -> &'static str {
    use rules::*;
    match rule {
        TIMING | EDGE_CONSISTENCY | SOURCE_OUT | CONNECTED | BASELINE_MAGNITUDE | TYPE_RULES
        | COVERAGE => "Scenario Logic",
        MULTIPLIER_BAND | MULTIPLIER_POSITIVE | UNKNOWN_EDGE | MODULATION_OVERLAP
        | UNMATCHED_WINDOW | BASE_ADJACENCY => "Adjacency",
        _ => "Parameters",
    }
}

fn suggestion_for(rule: &str) -> &'static str {
    use rules::*;
    match rule {
        TIMING => "Shift the downstream modulation window so it starts no earlier than the upstream start plus the upstream time_lag.",
        EDGE_CONSISTENCY => "Declare a directed edge path from the variation source to the varied node, or drop the undeclared propagation.",
        SOURCE_OUT => "Give every demand_source node at least one outgoing edge.",
        CONNECTED => "Connect every node so it can be reached from a demand_source node.",
        BASELINE_MAGNITUDE => "Bring all baselines within the same order of magnitude (max/min <= 10).",
        TYPE_RULES => "Propagation nodes need amplitude 0 and no peak; demand sources need exactly one sinusoidal peak; only 1 or 2 demand sources.",
        COVERAGE => "Make repeating pattern time ranges tile [0, repeat_period) without gaps or overlaps.",
        KAPPA_RANGE => "Keep kappa strictly between 0.01 and 0.5.",
        LAMBDA_RANGE => "Keep lambda between 0.8 and 1.5.",
        LOGISTIC_RATE => "Keep the logistic rate r strictly between 0 and 0.1.",
        SINUSOIDAL_SHAPE => "Sinusoidal drift needs A > 0 and omega > 0.",
        SIGMA_PLAUSIBILITY => "Reduce sigma below 5% of the node baseline.",
        DIFFUSION_ALPHA => "Use a non-negative diffusion_alpha, preferably at most 1.",
        TYPE_DRIFT => "Assign only mean_reverting or logistic drift to propagation nodes.",
        PARAM_REFERENCE => "Reference only existing groups and scenario node ids.",
        RESOLUTION => "Provide every parameter the active drift type requires at some level of the hierarchy.",
        MULTIPLIER_BAND => "Use multipliers in 10-20 for strong and 5-10 for moderate effects.",
        MULTIPLIER_POSITIVE => "Multipliers must be positive.",
        UNKNOWN_EDGE => "Modulate only edges declared in the scenario.",
        MODULATION_OVERLAP => "Avoid stacking several windows on the same edge.",
        UNMATCHED_WINDOW => "Derive modulation windows from the scenario's adjacency_modulation entries.",
        BASE_ADJACENCY => "Base weights must be non-zero exactly on scenario edges and zero on the diagonal.",
        _ => "Revise the offending field.",
    }
}
