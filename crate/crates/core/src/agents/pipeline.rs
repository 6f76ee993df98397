//! The synthesis loop: scenario generation and parsing reviewed by the
//! scenario judge, then parameter and coupling generation reviewed by the
//! parameter judge against a simulated run.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::thread;

use regex::Regex;
use serde::Serialize;
use serde_json::{json, Value};

use super::backend::{send_with_retry, Attachment, ChatBackend, RetryPolicy};
use super::judge::{judge_route, parse_judge1, parse_judge2, ErrorSource, JudgeKind, JudgeVerdict, Route};
use super::payload::extract_json_payload;
use super::plot::{render_png, text_summary};
use super::templates::{context, render_prompt, TemplateId};
use super::AgentError;
use crate::adjacency::{modulation_from_value, validate_modulation_document, ModulationDocument};
use crate::params::{params_from_value, validate_params, SdeParameters};
use crate::report::ValidationReport;
use crate::scenario::{infer_seq_len, scenario_from_value, validate_scenario, StructuredScenario};
use crate::simulator::{integrate, simulate, to_json, SimulationConfig, Trajectories};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentId {
    Agent1,
    Agent2,
    Judge1,
    Agent3,
    Agent4,
    Judge2,
    Qa,
}

impl AgentId {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentId::Agent1 => "agent1",
            AgentId::Agent2 => "agent2",
            AgentId::Judge1 => "judge1",
            AgentId::Agent3 => "agent3",
            AgentId::Agent4 => "agent4",
            AgentId::Judge2 => "judge2",
            AgentId::Qa => "qa",
        }
    }
}

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One backend call.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exchange {
    pub agent: AgentId,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    /// Scenario-judge rounds.
    pub scenario_rounds: u32,
    /// Parameter-judge rounds.
    pub parameter_rounds: u32,
    pub max_seq_len: usize,
    pub retry: RetryPolicy,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            scenario_rounds: 3,
            parameter_rounds: 3,
            max_seq_len: 512,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rounds {
    pub scenario_loop: u32,
    pub parameter_loop: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub scenario_text: String,
    pub scenario: StructuredScenario,
    pub params: SdeParameters,
    pub modulation: ModulationDocument,
    pub trajectories: Trajectories,
    pub rounds: Rounds,
    pub transcripts: Vec<Exchange>,
}

impl SynthesisResult {
    /// Every artifact as one JSON document.
    pub fn to_json(&self) -> Value {
        json!({
            "scenario_text": self.scenario_text,
            "scenario": self.scenario.to_document(),
            "params": self.params.to_document(),
            "modulation": self.modulation.to_document(),
            "trajectories": to_json(&self.trajectories),
            "rounds": self.rounds,
            "transcripts": self.transcripts,
        })
    }
}

struct Session<'a> {
    backend: &'a dyn ChatBackend,
    policy: RetryPolicy,
    transcripts: Vec<Exchange>,
}

impl Session<'_> {
    fn call(&mut self, agent: AgentId, prompt: String, attachments: &[Attachment]) -> Result<String, AgentError> {
        let response = send_with_retry(self.backend, &prompt, attachments, &self.policy)
            .map_err(|source| AgentError::Backend { agent, source })?;
        self.transcripts.push(Exchange {
            agent,
            prompt,
            response: response.clone(),
        });
        Ok(response)
    }
}

fn with_feedback(prompt: String, prior: &str, verdict: &JudgeVerdict) -> String {
    format!(
        "{prompt}\n\nYOUR PREVIOUS OUTPUT:\n{prior}\n\nREVIEWER FEEDBACK:\n{}\n\nRevise your output to resolve every issue above.",
        verdict.feedback_json()
    )
}

fn with_report(prompt: String, report: &ValidationReport) -> String {
    let report = serde_json::to_string_pretty(&report.to_judge_json()).expect("report serializes");
    format!("{prompt}\n\nAUTOMATED RULE-CHECK REPORT:\n{report}\n")
}

fn issue(kind: &str, field: &str, problem: impl Into<String>, suggestion: &str) -> Value {
    json!({"type": kind, "field": field, "problem": problem.into(), "suggestion": suggestion})
}

fn header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(?im)^[\s*\-]*(TIME SPAN|SAMPLING FREQUENCY)\**\s*:\s*\**\s*\[?"?([^"\]\n]*?)"?\]?\s*$"#)
            .expect("header pattern compiles")
    })
}

/// Sequence length implied by the TIME SPAN and SAMPLING FREQUENCY lines of
/// a scenario description, when both are present and readable.
pub fn seq_len_from_text(text: &str) -> Option<usize> {
    let (mut span, mut freq) = (None, None);
    for c in header_re().captures_iter(text) {
        let value = c[2].trim().to_string();
        if c[1].eq_ignore_ascii_case("time span") {
            span.get_or_insert(value);
        } else {
            freq.get_or_insert(value);
        }
    }
    infer_seq_len(&span?, &freq?).ok()
}

/// Outcome of the local checks on a parsed scenario.
enum ScenarioCheck {
    Passed(Box<StructuredScenario>, ValidationReport),
    Rejected(JudgeVerdict),
}

fn check_scenario(response: &str, num_nodes: usize, inferred: Option<usize>, max_seq_len: usize) -> ScenarioCheck {
    let reject = |source, issues: Vec<Value>, comment: &str| {
        ScenarioCheck::Rejected(JudgeVerdict::local_rejection(JudgeKind::Scenario, source, issues, comment))
    };
    let fidelity = "Parsing Fidelity";
    if let Some(n) = inferred {
        if n >= max_seq_len {
            return reject(
                ErrorSource::Agent1,
                vec![issue("Scenario Logic", "TIME SPAN", format!("the span holds {n} samples, at least the limit {max_seq_len}"), "shorten the span or sample less often")],
                "scenario is too long",
            );
        }
    }
    let doc = match extract_json_payload(response) {
        Ok(v) => v,
        Err(e) => return reject(ErrorSource::Agent2, vec![issue(fidelity, "$", e.to_string(), "return one JSON object")], "no JSON in the parse"),
    };
    let s = match scenario_from_value(&doc) {
        Ok(s) => s,
        Err(e) => return reject(ErrorSource::Agent2, vec![issue(fidelity, "$", e.to_string(), "follow the output schema")], "parse does not match the schema"),
    };
    if s.num_nodes() != num_nodes {
        let problem = format!("{} nodes parsed, {num_nodes} expected", s.num_nodes());
        return reject(ErrorSource::Agent2, vec![issue(fidelity, "nodes", problem, "parse every node of the description")], "node count mismatch");
    }
    if let Some(n) = inferred {
        if s.seq_len != n {
            let problem = format!("seq_len is {} but the time span and sampling frequency give {n}", s.seq_len);
            return reject(ErrorSource::Agent2, vec![issue(fidelity, "seq_len", problem, "recompute seq_len")], "seq_len mismatch");
        }
    }
    let report = validate_scenario(&s);
    if !report.approved {
        return ScenarioCheck::Rejected(JudgeVerdict::from_report(
            JudgeKind::Scenario,
            ErrorSource::Agent1,
            &report,
            "scenario breaks the design rules",
        ));
    }
    ScenarioCheck::Passed(Box::new(s), report)
}

struct Candidate {
    params: SdeParameters,
    modulation: ModulationDocument,
    trajectories: Trajectories,
    report: ValidationReport,
}

fn check_parameters(
    s: &StructuredScenario,
    params_response: &str,
    modulation_response: &str,
    cfg: &SimulationConfig,
) -> Result<Candidate, JudgeVerdict> {
    let reject = |issues: Vec<Value>, comment: &str| {
        JudgeVerdict::local_rejection(JudgeKind::Parameters, ErrorSource::None, issues, comment)
    };
    let params = extract_json_payload(params_response)
        .map_err(|e| e.to_string())
        .and_then(|v| params_from_value(&v).map_err(|e| e.to_string()))
        .map_err(|e| reject(vec![issue("Parameters", "$", e, "return the parameter schema")], "unreadable parameters"))?;
    let modulation = extract_json_payload(modulation_response)
        .map_err(|e| e.to_string())
        .and_then(|v| modulation_from_value(&v).map_err(|e| e.to_string()))
        .map_err(|e| reject(vec![issue("Adjacency", "$", e, "return the time_modulation schema")], "unreadable modulation"))?;
    let mut report = validate_params(&params, s);
    report.merge(validate_modulation_document(&modulation, s));
    if !report.approved {
        return Err(JudgeVerdict::from_report(JudgeKind::Parameters, ErrorSource::None, &report, "parameters break the rule checks"));
    }
    let b = modulation.base_for(s);
    let trajectories = integrate(s, &params, &b, &modulation.time_modulation, cfg)
        .map_err(|e| reject(vec![issue("Parameters", "simulation", e.to_string(), "lower kappa, lambda or the multipliers")], "simulation failed"))?;
    Ok(Candidate {
        params,
        modulation,
        trajectories,
        report,
    })
}

/// Run the full loop against `backend`.
pub fn run_pipeline(
    backend: &dyn ChatBackend,
    num_nodes: usize,
    limits: &Limits,
    cfg: &SimulationConfig,
) -> Result<SynthesisResult, AgentError> {
    if limits.scenario_rounds == 0 || limits.parameter_rounds == 0 {
        return Err(AgentError::InvalidLimits("round limits must be at least 1".into()));
    }
    if num_nodes == 0 {
        return Err(AgentError::InvalidLimits("at least one node is needed".into()));
    }
    let mut session = Session {
        backend,
        policy: limits.retry,
        transcripts: Vec::new(),
    };

    let agent1_prompt = render_prompt(
        TemplateId::Agent1,
        &context([("num_nodes", num_nodes.to_string()), ("max_seq_len", limits.max_seq_len.to_string())]),
    )?;
    let mut scenario_text = session.call(AgentId::Agent1, agent1_prompt.clone(), &[])?;
    let mut parse_response = String::new();
    let mut last: Option<(Route, JudgeVerdict)> = None;
    let mut accepted = None;

    for round in 1..=limits.scenario_rounds {
        if let Some((Route::RetryAgent1, verdict)) = &last {
            let prompt = with_feedback(agent1_prompt.clone(), &scenario_text, verdict);
            scenario_text = session.call(AgentId::Agent1, prompt, &[])?;
        }
        let agent2_prompt = render_prompt(TemplateId::Agent2, &context([("scenario", &scenario_text)]))?;
        let agent2_prompt = match &last {
            Some((Route::RetryAgent2, verdict)) => with_feedback(agent2_prompt, &parse_response, verdict),
            _ => agent2_prompt,
        };
        parse_response = session.call(AgentId::Agent2, agent2_prompt, &[])?;

        let inferred = seq_len_from_text(&scenario_text);
        let (s, report) = match check_scenario(&parse_response, num_nodes, inferred, limits.max_seq_len) {
            ScenarioCheck::Passed(s, report) => (*s, report),
            ScenarioCheck::Rejected(verdict) => {
                let route = judge_route(&verdict).map_err(|source| AgentError::Judge { agent: AgentId::Judge1, source })?;
                last = Some((route, verdict));
                continue;
            }
        };
        let judge_prompt = render_prompt(
            TemplateId::Judge1,
            &context([
                ("expected_num_nodes", num_nodes.to_string()),
                ("scenario", scenario_text.clone()),
                ("parsed_json", s.to_json_string()),
            ]),
        )?;
        let response = session.call(AgentId::Judge1, with_report(judge_prompt, &report), &[])?;
        let verdict = parse_judge1(&response).map_err(|source| AgentError::Judge { agent: AgentId::Judge1, source })?;
        let route = judge_route(&verdict).map_err(|source| AgentError::Judge { agent: AgentId::Judge1, source })?;
        if route == Route::Accept {
            accepted = Some((s, round));
            break;
        }
        last = Some((route, verdict));
    }
    let Some((scenario, scenario_loop)) = accepted else {
        return Err(failed(JudgeKind::Scenario, limits.scenario_rounds, last.map(|(_, v)| v)));
    };

    let structured = scenario.to_json_string();
    let agent3_prompt = render_prompt(TemplateId::Agent3, &context([("structured_scenario", &structured)]))?;
    let agent4_prompt = render_prompt(TemplateId::Agent4, &context([("structured_scenario", &structured)]))?;
    let (mut params_response, mut modulation_response) = (String::new(), String::new());
    let mut last: Option<JudgeVerdict> = None;

    for round in 1..=limits.parameter_rounds {
        let (p3, p4) = match &last {
            Some(v) => (
                with_feedback(agent3_prompt.clone(), &params_response, v),
                with_feedback(agent4_prompt.clone(), &modulation_response, v),
            ),
            None => (agent3_prompt.clone(), agent4_prompt.clone()),
        };
        params_response = session.call(AgentId::Agent3, p3, &[])?;
        modulation_response = session.call(AgentId::Agent4, p4, &[])?;

        let candidate = match check_parameters(&scenario, &params_response, &modulation_response, cfg) {
            Ok(c) => c,
            Err(verdict) => {
                last = Some(verdict);
                continue;
            }
        };
        let previous = last
            .as_ref()
            .map(|v| format!("\nPrevious Assessment:\n{}\n", v.feedback_json()))
            .unwrap_or_default();
        let judge_prompt = render_prompt(
            TemplateId::Judge2,
            &context([
                ("structured_scenario", structured.clone()),
                ("sde_parameters", candidate.params.to_json_string()),
                ("time_varying_adjacency", candidate.modulation.to_json_string()),
                ("previous_assessment_section", previous),
            ]),
        )?;
        let mut judge_prompt = with_report(judge_prompt, &candidate.report);
        let mut attachments = Vec::new();
        if backend.supports_images() {
            let png = render_png(&candidate.trajectories).map_err(|e| AgentError::Plot(e.to_string()))?;
            attachments.push(Attachment::Png(png));
        } else {
            judge_prompt.push('\n');
            judge_prompt.push_str(&text_summary(&candidate.trajectories));
        }
        let response = session.call(AgentId::Judge2, judge_prompt, &attachments)?;
        let verdict = parse_judge2(&response).map_err(|source| AgentError::Judge { agent: AgentId::Judge2, source })?;
        match judge_route(&verdict).map_err(|source| AgentError::Judge { agent: AgentId::Judge2, source })? {
            Route::Accept => {
                let b = candidate.modulation.base_for(&scenario);
                let trajectories = simulate(&scenario, &candidate.params, &b, &candidate.modulation.time_modulation, cfg)?;
                return Ok(SynthesisResult {
                    scenario_text,
                    scenario,
                    params: candidate.params,
                    modulation: candidate.modulation,
                    trajectories,
                    rounds: Rounds {
                        scenario_loop,
                        parameter_loop: round,
                    },
                    transcripts: session.transcripts,
                });
            }
            _ => last = Some(verdict),
        }
    }
    Err(failed(JudgeKind::Parameters, limits.parameter_rounds, last))
}

fn failed(stage: JudgeKind, rounds: u32, verdict: Option<JudgeVerdict>) -> AgentError {
    AgentError::SynthesisFailed {
        stage,
        rounds,
        verdict: Box::new(verdict.expect("a rejected round always leaves a verdict")),
    }
}

/// One independent synthesis request.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineJob {
    pub num_nodes: usize,
    pub cfg: SimulationConfig,
}

/// Run independent jobs, concurrently unless the backend is single-flight.
/// Results come back in job order.
pub fn run_pipelines(
    backend: &dyn ChatBackend,
    jobs: &[PipelineJob],
    limits: &Limits,
) -> Vec<Result<SynthesisResult, AgentError>> {
    if backend.single_flight() {
        return jobs.iter().map(|j| run_pipeline(backend, j.num_nodes, limits, &j.cfg)).collect();
    }
    thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|j| scope.spawn(move || run_pipeline(backend, j.num_nodes, limits, &j.cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(AgentError::Internal("pipeline thread panicked".into()))))
            .collect()
    })
}

/// Render `template` and send it once, keeping the exchange verbatim.
pub fn ask(
    backend: &dyn ChatBackend,
    template: TemplateId,
    ctx: &BTreeMap<String, String>,
    policy: &RetryPolicy,
) -> Result<Exchange, AgentError> {
    let mut session = Session {
        backend,
        policy: *policy,
        transcripts: Vec::new(),
    };
    session.call(AgentId::Qa, render_prompt(template, ctx)?, &[])?;
    Ok(session.transcripts.remove(0))
}
