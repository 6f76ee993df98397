//! The `stsynth` command line.
//!
//! Exit status: 0 success, 1 validation failure (including unreadable
//! documents and rejected synthesis), 2 usage error, 3 internal error.

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use config::{pick, FileConfig, RewardSection, RewardSettings, SimSettings, ENV_BACKEND, ENV_SEED, ENV_SUBSTEPS};
pub use manifest::{sha256_hex, InputDigest, OutputDigest, OutputSet, RunManifest, MANIFEST_FILE};

use crate::adjacency::{parse_modulation, validate_modulation_document, ModulationDocument};
use crate::agents::{
    run_pipeline, AgentError, ChatBackend, Limits, LiveBackend, LiveConfig, RetryPolicy, ScriptedBackend,
};
use crate::params::{parse_params, validate_params, SdeParameters};
use crate::qa::{gen_all, to_jsonl, Category};
use crate::reward::{
    combined_reward, extract_answer, group_advantages, score_metrics, sgrpo_rewards, task_reward, Gold,
    GroupRollout, Pairing, ScoreRecord,
};
use crate::scenario::{parse_scenario, validate_scenario, StructuredScenario};
use crate::simulator::{from_json, plot_series, simulate, to_csv, to_json, SimError, SimulationConfig, Trajectories};

pub const SCENARIO_FILE: &str = "scenario.json";
pub const SCENARIO_TEXT_FILE: &str = "scenario.txt";
pub const PARAMS_FILE: &str = "params.json";
pub const MODULATION_FILE: &str = "modulation.json";
pub const TRAJECTORIES_CSV: &str = "trajectories.csv";
pub const TRAJECTORIES_JSON: &str = "trajectories.json";
pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";
pub const QA_FILE: &str = "qa.jsonl";
pub const SCORES_FILE: &str = "scores.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_FILE: &str = "plot.png";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "stsynth", version, about = "Spatio-temporal scenario synthesis, simulation, QA and scoring")]
pub struct Cli {
    /// TOML settings file; flags override it, it overrides the environment.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the rule checks and print the report.
    Validate(DocumentArgs),
    /// Simulate trajectories from scenario, parameter and modulation documents.
    Simulate(SimulateArgs),
    /// Generate alignment QA as JSON lines.
    GenAlign(GenAlignArgs),
    /// Run the agent loop and write every artifact.
    Synthesize(SynthesizeArgs),
    /// Score model responses and print a metrics summary.
    Score(ScoreArgs),
    /// Write per-node series files and a plot from trajectories.
    PlotData(PlotDataArgs),
}

#[derive(Debug, Args)]
pub struct DocumentArgs {
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub modulation: Option<PathBuf>,
    /// Take any document not given explicitly from this run directory.
    #[arg(long, value_name = "DIR")]
    pub run: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub docs: DocumentArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub substeps: Option<u32>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenAlignArgs {
    #[command(flatten)]
    pub docs: DocumentArgs,
    /// Prefix of question ids; defaults to the scenario's task id.
    #[arg(long)]
    pub scenario_id: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub nodes: usize,
    /// `live` or `scripted:PATH`.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub substeps: Option<u32>,
    #[arg(long)]
    pub scenario_rounds: Option<u32>,
    #[arg(long)]
    pub parameter_rounds: Option<u32>,
    #[arg(long)]
    pub max_seq_len: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// JSON lines of `{question_id, response, gold?, task?, variant?}`.
    #[arg(long, value_name = "FILE")]
    pub responses: PathBuf,
    /// QA lines supplying gold answers for records without one.
    #[arg(long, value_name = "FILE")]
    pub questions: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub length_bonus: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub pairing: Option<PairingArg>,
    /// Also write per-record scores, the summary and a manifest here.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum PairingArg {
    Index,
    GroupMean,
}

impl From<PairingArg> for Pairing {
    fn from(p: PairingArg) -> Self {
        match p {
            PairingArg::Index => Pairing::Index,
            PairingArg::GroupMean => Pairing::GroupMean,
        }
    }
}

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    #[arg(long, value_name = "FILE")]
    pub trajectories: Option<PathBuf>,
    /// Read trajectories.json from this run directory.
    #[arg(long, value_name = "DIR")]
    pub run: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation(String),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(e.into())
    }
}

type Outcome = Result<(), Failure>;

/// Parse `args` (program name first) and run, printing to the process's
/// standard streams.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`run_cli`] with explicit output streams.
pub fn run_cli_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = match &f {
                Failure::Usage(m) => writeln!(err, "error: {m}"),
                Failure::Validation(m) => writeln!(err, "{m}"),
                Failure::Internal(e) => writeln!(err, "internal error: {e:#}"),
            };
            f.code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Outcome {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(|e| Failure::Usage(format!("config {}: {e:#}", path.display())))?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Validate(a) => cmd_validate(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, &file, out),
        Command::GenAlign(a) => cmd_gen_align(&a, out),
        Command::Synthesize(a) => cmd_synthesize(&a, &file, out),
        Command::Score(a) => cmd_score(&a, &file, out),
        Command::PlotData(a) => cmd_plot_data(&a, out),
    }
}

/// Input files read by a command, with their digests.
#[derive(Default)]
struct Inputs {
    digests: Vec<InputDigest>,
}

impl Inputs {
    fn read(&mut self, role: &str, path: &Path) -> Result<String, Failure> {
        let bytes = std::fs::read(path).map_err(|e| Failure::Usage(format!("cannot read {role} file {}: {e}", path.display())))?;
        self.digests.push(InputDigest {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        String::from_utf8(bytes).map_err(|_| Failure::Validation(format!("{role} file {} is not UTF-8", path.display())))
    }
}

fn doc_path(explicit: &Option<PathBuf>, run: &Option<PathBuf>, name: &str) -> Option<PathBuf> {
    explicit
        .clone()
        .or_else(|| run.as_ref().map(|d| d.join(name)).filter(|p| p.exists()))
}

struct Documents {
    scenario: StructuredScenario,
    params: Option<SdeParameters>,
    modulation: Option<ModulationDocument>,
}

fn load_documents(a: &DocumentArgs, inputs: &mut Inputs, need_params: bool) -> Result<Documents, Failure> {
    let scenario_path = doc_path(&a.scenario, &a.run, SCENARIO_FILE)
        .ok_or_else(|| Failure::Usage("a scenario document is required (--scenario or --run)".into()))?;
    let scenario = parse_scenario(&inputs.read("scenario", &scenario_path)?)
        .map_err(|e| Failure::Validation(format!("scenario {}: {e}", scenario_path.display())))?;
    let params = match doc_path(&a.params, &a.run, PARAMS_FILE) {
        Some(p) => Some(
            parse_params(&inputs.read("params", &p)?)
                .map_err(|e| Failure::Validation(format!("params {}: {e}", p.display())))?,
        ),
        None if need_params => return Err(Failure::Usage("a parameter document is required (--params or --run)".into())),
        None => None,
    };
    let modulation = match doc_path(&a.modulation, &a.run, MODULATION_FILE) {
        Some(p) => Some(
            parse_modulation(&inputs.read("modulation", &p)?)
                .map_err(|e| Failure::Validation(format!("modulation {}: {e}", p.display())))?,
        ),
        None => None,
    };
    Ok(Documents { scenario, params, modulation })
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("value serializes")
}

fn write_outputs(
    dir: &Path,
    command: &str,
    config: Value,
    seed: Option<u64>,
    inputs: Inputs,
    mut files: OutputSet,
    started: Instant,
) -> Result<RunManifest, Failure> {
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        config,
        seed,
        inputs: inputs.digests,
        outputs: files.digests(),
        wall_time_ms: started.elapsed().as_millis() as u64,
    };
    files.add(MANIFEST_FILE, pretty(&manifest) + "\n");
    files.commit(dir)?;
    Ok(manifest)
}

fn cmd_validate(a: &DocumentArgs, out: &mut dyn Write) -> Outcome {
    let mut inputs = Inputs::default();
    let docs = load_documents(a, &mut inputs, false)?;
    let mut report = validate_scenario(&docs.scenario);
    if let Some(p) = &docs.params {
        report.merge(validate_params(p, &docs.scenario));
    }
    if let Some(m) = &docs.modulation {
        report.merge(validate_modulation_document(m, &docs.scenario));
    }
    writeln!(out, "{}", pretty(&report))?;
    if report.approved {
        Ok(())
    } else {
        Err(Failure::Validation(format!("validation failed: {}", report.rule_ids().join(", "))))
    }
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::Validation(report) => Failure::Validation(pretty(&report)),
        SimError::Divergence { .. } | SimError::Params(_) | SimError::Adjacency(_) | SimError::Inconsistent(_) => {
            Failure::Validation(e.to_string())
        }
        other => Failure::Internal(other.into()),
    }
}

fn trajectory_files(files: &mut OutputSet, tr: &Trajectories) {
    files.add(TRAJECTORIES_CSV, to_csv(tr));
    files.add(TRAJECTORIES_JSON, pretty(&to_json(tr)) + "\n");
}

fn cmd_simulate(a: &SimulateArgs, file: &FileConfig, out: &mut dyn Write) -> Outcome {
    let started = Instant::now();
    let settings = SimSettings::resolve(a.seed, a.substeps, file).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut inputs = Inputs::default();
    let docs = load_documents(&a.docs, &mut inputs, true)?;
    let params = docs.params.expect("required above");
    let modulation = docs.modulation.unwrap_or_default();
    let cfg = SimulationConfig {
        seed: settings.seed,
        substeps: settings.substeps,
        ..SimulationConfig::default()
    };
    let b = modulation.base_for(&docs.scenario);
    let tr = simulate(&docs.scenario, &params, &b, &modulation.time_modulation, &cfg).map_err(sim_failure)?;
    let mut files = OutputSet::default();
    trajectory_files(&mut files, &tr);
    write_outputs(&a.out, "simulate", json!(settings), Some(settings.seed), inputs, files, started)?;
    writeln!(out, "wrote {} nodes x {} steps to {}", tr.num_nodes(), tr.seq_len, a.out.display())?;
    Ok(())
}

fn cmd_gen_align(a: &GenAlignArgs, out: &mut dyn Write) -> Outcome {
    let started = Instant::now();
    let mut inputs = Inputs::default();
    let docs = load_documents(&a.docs, &mut inputs, true)?;
    let params = docs.params.expect("required above");
    let modulation = docs.modulation.unwrap_or_default();
    let b = modulation.base_for(&docs.scenario);
    let questions = gen_all(&docs.scenario, &params, &b, &modulation.time_modulation)
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let scenario_id = a.scenario_id.clone().or_else(|| docs.scenario.task_id.clone());
    let mut counts = BTreeMap::new();
    for c in [Category::Temporal, Category::Spatial, Category::SpatialTemporal] {
        counts.insert(c.as_str(), questions.iter().filter(|q| q.category == c).count());
    }
    let mut files = OutputSet::default();
    files.add(QA_FILE, to_jsonl(&questions, scenario_id.as_deref()));
    write_outputs(&a.out, "gen-align", json!({ "scenario_id": scenario_id }), None, inputs, files, started)?;
    writeln!(out, "{}", pretty(&json!({ "counts": counts, "total": questions.len() })))?;
    Ok(())
}

fn backend_for(spec: &str) -> Result<(Box<dyn ChatBackend>, Inputs, RetryPolicy), Failure> {
    let mut inputs = Inputs::default();
    if spec == "live" {
        let cfg = LiveConfig::from_env().map_err(|e| Failure::Usage(e.to_string()))?;
        return Ok((Box::new(LiveBackend::new(cfg)), inputs, RetryPolicy::default()));
    }
    let Some(path) = spec.strip_prefix("scripted:") else {
        return Err(Failure::Usage(format!("unknown backend `{spec}`, expected `live` or `scripted:PATH`")));
    };
    let dir = PathBuf::from(path);
    if !dir.is_dir() {
        return Err(Failure::Usage(format!("scripted backend directory {} does not exist", dir.display())));
    }
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && !p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.')))
        .collect();
    entries.sort();
    for p in &entries {
        inputs.read("transcript", p)?;
    }
    let backend = ScriptedBackend::from_dir(&dir).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok((Box::new(backend), inputs, RetryPolicy::immediate()))
}

fn cmd_synthesize(a: &SynthesizeArgs, file: &FileConfig, out: &mut dyn Write) -> Outcome {
    let started = Instant::now();
    let settings = SimSettings::resolve(a.seed, a.substeps, file).map_err(|e| Failure::Usage(e.to_string()))?;
    let spec = a
        .backend
        .clone()
        .or_else(|| file.synthesis.backend.clone())
        .or_else(|| config::env_var(ENV_BACKEND))
        .ok_or_else(|| Failure::Usage("no backend given (--backend live|scripted:PATH)".into()))?;
    let defaults = Limits::default();
    let s = &file.synthesis;
    let (backend, inputs, retry) = backend_for(&spec)?;
    let limits = Limits {
        scenario_rounds: pick(a.scenario_rounds, s.scenario_rounds, None, defaults.scenario_rounds),
        parameter_rounds: pick(a.parameter_rounds, s.parameter_rounds, None, defaults.parameter_rounds),
        max_seq_len: pick(a.max_seq_len, s.max_seq_len, None, defaults.max_seq_len),
        retry,
    };
    let cfg = SimulationConfig {
        seed: settings.seed,
        substeps: settings.substeps,
        ..SimulationConfig::default()
    };
    let result = run_pipeline(backend.as_ref(), a.nodes, &limits, &cfg).map_err(|e| match e {
        AgentError::SynthesisFailed { .. } => Failure::Validation(e.to_string()),
        AgentError::InvalidLimits(m) => Failure::Usage(m),
        other => Failure::Internal(other.into()),
    })?;

    let mut files = OutputSet::default();
    files.add(SCENARIO_TEXT_FILE, result.scenario_text.clone());
    files.add(SCENARIO_FILE, result.scenario.to_json_string() + "\n");
    files.add(PARAMS_FILE, result.params.to_json_string() + "\n");
    files.add(MODULATION_FILE, result.modulation.to_json_string() + "\n");
    trajectory_files(&mut files, &result.trajectories);
    let mut transcripts = String::new();
    for e in &result.transcripts {
        transcripts.push_str(&serde_json::to_string(e).expect("exchange serializes"));
        transcripts.push('\n');
    }
    files.add(TRANSCRIPTS_FILE, transcripts);
    let config = json!({
        "nodes": a.nodes,
        "backend": spec,
        "seed": settings.seed,
        "substeps": settings.substeps,
        "scenario_rounds": limits.scenario_rounds,
        "parameter_rounds": limits.parameter_rounds,
        "max_seq_len": limits.max_seq_len,
    });
    write_outputs(&a.out, "synthesize", config, Some(settings.seed), inputs, files, started)?;
    writeln!(out, "{}", pretty(&json!({ "rounds": result.rounds, "backend_calls": result.transcripts.len() })))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
enum Variant {
    WithSpatial,
    WithoutSpatial,
}

#[derive(Debug, Deserialize)]
struct ResponseRecord {
    question_id: String,
    #[serde(default)]
    task: Option<String>,
    response: String,
    #[serde(default)]
    gold: Option<Gold>,
    #[serde(default)]
    variant: Option<Variant>,
}

#[derive(Debug, Serialize)]
struct ScoredRecord {
    question_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    task: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<Variant>,
    format: f64,
    task_reward: f64,
    reward: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sgrpo_reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    advantage: Option<f64>,
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<Vec<T>, Failure> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Failure::Validation(format!("{what} line {}: {e}", i + 1)))
        })
        .collect()
}

type Group = (Vec<usize>, Vec<f64>, Vec<f64>);

fn cmd_score(a: &ScoreArgs, file: &FileConfig, out: &mut dyn Write) -> Outcome {
    let started = Instant::now();
    let flags = RewardSection {
        lambda: a.lambda,
        epsilon: a.epsilon,
        length_bonus: a.length_bonus,
        alpha: a.alpha,
        beta: a.beta,
        pairing: a.pairing.map(Pairing::from),
    };
    let settings = RewardSettings::resolve(&flags, file);
    let cfg = settings.reward;
    let mut inputs = Inputs::default();
    let records: Vec<ResponseRecord> = parse_jsonl(&inputs.read("responses", &a.responses)?, "responses")?;
    let mut gold_by_id: BTreeMap<String, Gold> = BTreeMap::new();
    if let Some(q) = &a.questions {
        for v in parse_jsonl::<Value>(&inputs.read("questions", q)?, "questions")? {
            if let (Some(id), Some(ans)) = (v["question_id"].as_str(), v["answer"].as_str()) {
                gold_by_id.insert(id.to_string(), Gold::Choice(ans.to_string()));
            }
        }
    }

    let mut scored = Vec::with_capacity(records.len());
    let mut metric_records = Vec::new();
    // per question: record indices, with-spatial and without-spatial rewards
    let mut groups: BTreeMap<String, Group> = BTreeMap::new();
    for r in &records {
        let gold = r
            .gold
            .clone()
            .or_else(|| gold_by_id.get(&r.question_id).cloned())
            .ok_or_else(|| Failure::Validation(format!("no gold answer for question `{}`", r.question_id)))?;
        let parsed = extract_answer(&r.response);
        let format = if parsed.well_formed { 1.0 } else { 0.0 };
        let reward = combined_reward(&r.response, &gold, &cfg);
        if r.variant != Some(Variant::WithoutSpatial) {
            metric_records.push(ScoreRecord { answer: parsed.answer.clone(), gold: gold.clone() });
        }
        if let Some(v) = r.variant {
            let g = groups.entry(r.question_id.clone()).or_default();
            match v {
                Variant::WithSpatial => {
                    g.0.push(scored.len());
                    g.1.push(reward);
                }
                Variant::WithoutSpatial => g.2.push(reward),
            }
        }
        scored.push(ScoredRecord {
            question_id: r.question_id.clone(),
            task: r.task.clone(),
            variant: r.variant,
            format,
            task_reward: task_reward(&parsed.answer, &gold, &cfg),
            reward,
            sgrpo_reward: None,
            advantage: None,
        });
    }
    for (id, (idx, with_spatial, without_spatial)) in &groups {
        let rollout = GroupRollout {
            question_id: id.clone(),
            with_spatial: with_spatial.clone(),
            without_spatial: without_spatial.clone(),
        };
        let rewards = sgrpo_rewards(&rollout, &cfg, settings.pairing)
            .map_err(|e| Failure::Validation(format!("question `{id}`: {e}")))?;
        let adv = group_advantages(&rewards);
        for ((&i, r), a) in idx.iter().zip(&rewards).zip(&adv) {
            scored[i].sgrpo_reward = Some(*r);
            scored[i].advantage = Some(*a);
        }
    }

    let metrics = score_metrics(&metric_records).map_err(|e| Failure::Validation(e.to_string()))?;
    let n = scored.len() as f64;
    let summary = json!({
        "records": scored.len(),
        "format_rate": scored.iter().map(|s| s.format).sum::<f64>() / n,
        "mean_reward": scored.iter().map(|s| s.reward).sum::<f64>() / n,
        "accuracy": metrics.accuracy,
        "mae": metrics.mae,
        "choice_records": metrics.choice_records,
        "forecast_records": metrics.forecast_records,
        "groups": groups.len(),
    });
    if let Some(dir) = &a.out {
        let mut files = OutputSet::default();
        let mut lines = String::new();
        for s in &scored {
            lines.push_str(&serde_json::to_string(s).expect("score serializes"));
            lines.push('\n');
        }
        files.add(SCORES_FILE, lines);
        files.add(SUMMARY_FILE, pretty(&summary) + "\n");
        write_outputs(dir, "score", json!(settings), None, inputs, files, started)?;
    }
    writeln!(out, "{}", pretty(&summary))?;
    Ok(())
}

fn cmd_plot_data(a: &PlotDataArgs, out: &mut dyn Write) -> Outcome {
    let started = Instant::now();
    let path = doc_path(&a.trajectories, &a.run, TRAJECTORIES_JSON)
        .ok_or_else(|| Failure::Usage("trajectories are required (--trajectories or --run)".into()))?;
    let mut inputs = Inputs::default();
    let text = inputs.read("trajectories", &path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let tr = from_json(&value).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let mut files = OutputSet::default();
    let series = plot_series(&tr);
    for (node, csv) in &series {
        files.add(format!("node_{node}.csv"), csv.clone());
    }
    let png = crate::agents::render_png(&tr).map_err(|e| Failure::Internal(e.into()))?;
    files.add(PLOT_FILE, png);
    write_outputs(&a.out, "plot-data", json!({}), Some(tr.meta.seed), inputs, files, started)?;
    writeln!(out, "wrote {} series to {}", series.len(), a.out.display())?;
    Ok(())
}
