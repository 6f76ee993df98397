//! LLM-driven synthesis: prompt templates, chat backends, judges and the
//! orchestration loop.

mod backend;
mod judge;
mod payload;
mod pipeline;
mod plot;
mod templates;

use thiserror::Error;

pub use backend::{
    send_with_retry, Attachment, BackendError, ChatBackend, LiveBackend, LiveConfig, RetryPolicy, ScriptedBackend,
    ENV_API_BASE, ENV_API_KEY, ENV_MODEL, ENV_VISION,
};
pub use judge::{judge_route, parse_judge1, parse_judge2, ErrorSource, JudgeError, JudgeKind, JudgeVerdict, Route};
pub use payload::{extract_json_payload, ExtractionError};
pub use pipeline::{
    ask, run_pipeline, run_pipelines, seq_len_from_text, AgentId, Exchange, Limits, PipelineJob, Rounds,
    SynthesisResult,
};
pub use plot::{render_png, text_summary};
pub use templates::{context, render_prompt, TemplateError, TemplateId};

use crate::simulator::SimError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("{agent}: {source}")]
    Backend { agent: AgentId, source: BackendError },
    #[error("{agent} verdict: {source}")]
    Judge { agent: AgentId, source: JudgeError },
    #[error("synthesis failed: {stage:?} review rejected all {rounds} round(s); last verdict: {}", .verdict.overall_comment)]
    SynthesisFailed {
        stage: JudgeKind,
        rounds: u32,
        verdict: Box<JudgeVerdict>,
    },
    #[error("final simulation failed: {0}")]
    Simulation(#[from] SimError),
    #[error("plot rendering failed: {0}")]
    Plot(String),
    #[error("invalid pipeline limits: {0}")]
    InvalidLimits(String),
    #[error("internal error: {0}")]
    Internal(String),
}
