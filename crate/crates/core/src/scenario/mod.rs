//! Structured scenarios: the machine-readable description of a graph, its
//! node roles, per-node drift phases and windowed edge modulations.
//!
//! [`parse_scenario`] reads the JSON document produced by the parsing agent,
//! [`StructuredScenario::to_document`] writes it back in the same shape, and
//! [`validate_scenario`] runs the deterministic consistency rules.

mod duration;
mod graph;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::NodeId;

pub use duration::{infer_seq_len, parse_minutes, DurationError};
pub use graph::{
    event_arrival_time, has_indirect_path, reachable, reachable_from, successors,
    undirected_connected,
};
pub use validate::validate_scenario;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario document at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("{rule} violated at `{path}`: {detail}")]
    Field {
        rule: &'static str,
        path: String,
        detail: String,
    },
    #[error(transparent)]
    Duration(#[from] DurationError),
    #[error("edge path is broken at hop {hop}: {previous} is not followed by an edge leaving node {expected}")]
    BrokenPath {
        hop: usize,
        previous: Edge,
        expected: NodeId,
    },
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
}

impl ScenarioError {
    fn field(rule: &'static str, path: impl Into<String>, detail: impl Into<String>) -> Self {
        ScenarioError::Field {
            rule,
            path: path.into(),
            detail: detail.into(),
        }
    }

    /// Rule id for field errors, `PARSE` for structural failures.
    pub fn rule_id(&self) -> &'static str {
        match self {
            ScenarioError::Field { rule, .. } => rule,
            ScenarioError::Duration(_) => "DURATION",
            _ => "PARSE",
        }
    }
}

/// Half-open window `[start, end)` in sampling steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StepRange {
    pub start: u32,
    pub end: u32,
}

impl StepRange {
    pub fn new(start: u32, end: u32) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: u32) -> bool {
        self.start <= t && t < self.end
    }

    pub fn overlaps(&self, other: &StepRange) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn len(&self) -> u32 {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for StepRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// A directed edge written `"s->t"` in documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
}

impl Edge {
    pub fn new(source: NodeId, target: NodeId) -> Self {
        Self { source, target }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.source, self.target)
    }
}

impl FromStr for Edge {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once("->")
            .ok_or_else(|| format!("edge `{s}` is not of the form `s->t`"))?;
        let source = a.trim().parse().map_err(|_| format!("bad source in edge `{s}`"))?;
        let target = b.trim().parse().map_err(|_| format!("bad target in edge `{s}`"))?;
        Ok(Edge { source, target })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeType {
    DemandSource,
    Propagation,
}

impl NodeType {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeType::DemandSource => "demand_source",
            NodeType::Propagation => "propagation",
        }
    }
}

impl FromStr for NodeType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "demand_source" => Ok(NodeType::DemandSource),
            "propagation" => Ok(NodeType::Propagation),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub node_type: NodeType,
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub source: NodeId,
    pub target: NodeId,
    pub relationship: String,
    /// Propagation delay in sampling steps.
    pub time_lag: u32,
}

impl EdgeSpec {
    pub fn edge(&self) -> Edge {
        Edge::new(self.source, self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Behavior {
    MeanReverting,
    Sinusoidal,
    Constant,
    Logistic,
}

impl Behavior {
    pub fn as_str(&self) -> &'static str {
        match self {
            Behavior::MeanReverting => "mean_reverting",
            Behavior::Sinusoidal => "sinusoidal",
            Behavior::Constant => "constant",
            Behavior::Logistic => "logistic",
        }
    }
}

impl FromStr for Behavior {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean_reverting" => Ok(Behavior::MeanReverting),
            "sinusoidal" => Ok(Behavior::Sinusoidal),
            "constant" => Ok(Behavior::Constant),
            "logistic" => Ok(Behavior::Logistic),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSpec {
    pub time_range: StepRange,
    pub behavior: Behavior,
    pub baseline: f64,
    pub amplitude: f64,
    pub peak: Option<u32>,
}

/// A propagated variation note as written by the parsing agent.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationNote {
    pub time: String,
    pub origin: String,
    pub source: Option<NodeId>,
    pub delay: Option<String>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDrift {
    pub id: NodeId,
    pub patterns: Vec<PatternSpec>,
    pub propagated_variations: Vec<VariationNote>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriftProgram {
    pub repeat: bool,
    /// Cycle length in steps; present iff `repeat`.
    pub repeat_period: Option<u32>,
    pub per_node: Vec<NodeDrift>,
}

impl DriftProgram {
    pub fn node(&self, id: NodeId) -> Option<&NodeDrift> {
        self.per_node.iter().find(|n| n.id == id)
    }

    pub fn period(&self) -> Option<u32> {
        if self.repeat {
            self.repeat_period
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Effect {
    Strong,
    Moderate,
}

impl Effect {
    pub fn as_str(&self) -> &'static str {
        match self {
            Effect::Strong => "strong",
            Effect::Moderate => "moderate",
        }
    }

    /// Inclusive multiplier band for this effect strength.
    pub fn multiplier_band(&self) -> (f64, f64) {
        match self {
            Effect::Strong => (10.0, 20.0),
            Effect::Moderate => (5.0, 10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationSpec {
    pub time_period: StepRange,
    pub effect: Effect,
    pub applies_to: Vec<Edge>,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredScenario {
    pub time_span: String,
    pub sampling_frequency: String,
    pub seq_len: usize,
    pub variable: String,
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    pub drift_patterns: DriftProgram,
    pub adjacency_modulation: Vec<ModulationSpec>,
    pub spatial_layout: BTreeMap<NodeId, Point>,
    pub domain: Option<String>,
    pub task_id: Option<String>,
}

impl StructuredScenario {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeSpec> {
        self.nodes.get(id)
    }

    pub fn edge(&self, edge: Edge) -> Option<&EdgeSpec> {
        self.edges
            .iter()
            .find(|e| e.source == edge.source && e.target == edge.target)
    }

    pub fn has_edge(&self, edge: Edge) -> bool {
        self.edge(edge).is_some()
    }

    pub fn demand_sources(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.node_type == NodeType::DemandSource)
            .map(|n| n.id)
    }

    /// Length of the drift cycle: the repeat period when repeating, else `seq_len`.
    pub fn cycle_len(&self) -> u32 {
        self.drift_patterns.period().unwrap_or(self.seq_len as u32)
    }

    /// Serialize into the scenario document shape.
    pub fn to_document(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .map(|n| {
                json!({
                    "id": n.id,
                    "type": n.node_type.as_str(),
                    "name": n.name,
                    "description": n.description,
                })
            })
            .collect();
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|e| {
                json!({
                    "source": e.source,
                    "target": e.target,
                    "relationship": e.relationship,
                    "time_lag": e.time_lag,
                })
            })
            .collect();
        let drift_nodes: Vec<Value> = self
            .drift_patterns
            .per_node
            .iter()
            .map(|nd| {
                let patterns: Vec<Value> = nd
                    .patterns
                    .iter()
                    .map(|p| {
                        json!({
                            "time_range": [p.time_range.start, p.time_range.end],
                            "behavior": p.behavior.as_str(),
                            "baseline": p.baseline,
                            "amplitude": p.amplitude,
                            "peak": p.peak,
                        })
                    })
                    .collect();
                let variations: Vec<Value> = nd
                    .propagated_variations
                    .iter()
                    .map(|v| {
                        let mut m = serde_json::Map::new();
                        m.insert("time".into(), json!(v.time));
                        m.insert("origin".into(), json!(v.origin));
                        m.insert("source".into(), json!(v.source));
                        if let Some(d) = &v.delay {
                            m.insert("delay".into(), json!(d));
                        }
                        m.insert("description".into(), json!(v.description));
                        Value::Object(m)
                    })
                    .collect();
                json!({ "id": nd.id, "patterns": patterns, "propagated_variations": variations })
            })
            .collect();
        let mut drift = serde_json::Map::new();
        drift.insert("repeat".into(), json!(self.drift_patterns.repeat));
        if let Some(p) = self.drift_patterns.repeat_period {
            drift.insert("repeat_period".into(), json!(p));
        }
        drift.insert("nodes".into(), Value::Array(drift_nodes));

        let modulations: Vec<Value> = self
            .adjacency_modulation
            .iter()
            .map(|m| {
                json!({
                    "time_period": format!("{}-{}", m.time_period.start, m.time_period.end),
                    "effect": m.effect.as_str(),
                    "applies_to": m.applies_to.iter().map(Edge::to_string).collect::<Vec<_>>(),
                    "description": m.description,
                })
            })
            .collect();
        let layout: serde_json::Map<String, Value> = self
            .spatial_layout
            .iter()
            .map(|(id, p)| (id.to_string(), json!({ "x": p.x, "y": p.y })))
            .collect();

        let mut doc = serde_json::Map::new();
        doc.insert("time_span".into(), json!(self.time_span));
        doc.insert("sampling_frequency".into(), json!(self.sampling_frequency));
        doc.insert("seq_len".into(), json!(self.seq_len));
        doc.insert("variable".into(), json!(self.variable));
        doc.insert("nodes".into(), Value::Array(nodes));
        doc.insert("edges".into(), Value::Array(edges));
        doc.insert("drift_patterns".into(), Value::Object(drift));
        doc.insert(
            "adjacency_modulation".into(),
            json!({ "patterns": modulations }),
        );
        doc.insert("spatial_layout".into(), Value::Object(layout));
        if let Some(d) = &self.domain {
            doc.insert("domain".into(), json!(d));
        }
        if let Some(t) = &self.task_id {
            doc.insert("task_id".into(), json!(t));
        }
        Value::Object(doc)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("scenario document serializes")
    }
}

// ---- document parsing -------------------------------------------------------

#[derive(Deserialize)]
struct RawScenario {
    time_span: String,
    sampling_frequency: String,
    #[serde(default)]
    seq_len: Option<u64>,
    variable: String,
    nodes: Vec<RawNode>,
    #[serde(default)]
    edges: Vec<RawEdge>,
    drift_patterns: RawDriftProgram,
    #[serde(default)]
    adjacency_modulation: Option<RawModulationBlock>,
    #[serde(default)]
    spatial_layout: BTreeMap<String, Point>,
    #[serde(default)]
    domain: Option<String>,
    #[serde(default)]
    task_id: Option<String>,
}

#[derive(Deserialize)]
struct RawNode {
    id: u64,
    #[serde(rename = "type", alias = "node_type")]
    node_type: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    description: String,
}

#[derive(Deserialize)]
struct RawEdge {
    source: u64,
    target: u64,
    #[serde(default)]
    relationship: String,
    #[serde(default)]
    time_lag: Option<u32>,
}

#[derive(Deserialize)]
struct RawDriftProgram {
    #[serde(default)]
    repeat: Option<bool>,
    #[serde(default)]
    repeat_period: Option<u32>,
    #[serde(default)]
    nodes: Vec<RawNodeDrift>,
}

#[derive(Deserialize)]
struct RawNodeDrift {
    id: u64,
    #[serde(default)]
    patterns: Vec<RawPattern>,
    #[serde(default)]
    propagated_variations: Vec<RawVariation>,
}

#[derive(Deserialize)]
struct RawPattern {
    time_range: Vec<i64>,
    behavior: String,
    baseline: f64,
    #[serde(default)]
    amplitude: Option<f64>,
    #[serde(default)]
    peak: Option<i64>,
}

#[derive(Deserialize)]
struct RawVariation {
    #[serde(default)]
    time: Value,
    #[serde(default)]
    origin: Option<String>,
    #[serde(default)]
    source: Option<u64>,
    #[serde(default)]
    delay: Option<String>,
    #[serde(default)]
    description: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawModulationBlock {
    Wrapped { patterns: Vec<RawModulation> },
    Bare(Vec<RawModulation>),
}

#[derive(Deserialize)]
struct RawModulation {
    time_period: Value,
    effect: String,
    applies_to: Value,
    #[serde(default)]
    description: String,
}

/// Parse a window written either as `"a-b"` or `[a, b]`.
pub(crate) fn parse_window(value: &Value) -> Result<StepRange, String> {
    let (a, b) = match value {
        Value::String(s) => {
            let s = s.trim();
            let (a, b) = s
                .split_once(['-', '–'])
                .ok_or_else(|| format!("window `{s}` is not of the form `start-end`"))?;
            let a: u32 = a.trim().parse().map_err(|_| format!("bad window start in `{s}`"))?;
            let b: u32 = b.trim().parse().map_err(|_| format!("bad window end in `{s}`"))?;
            (a, b)
        }
        Value::Array(items) if items.len() == 2 => {
            let get = |v: &Value| {
                v.as_u64()
                    .and_then(|x| u32::try_from(x).ok())
                    .ok_or_else(|| format!("window bound {v} is not a non-negative integer"))
            };
            (get(&items[0])?, get(&items[1])?)
        }
        other => return Err(format!("window {other} must be `\"start-end\"` or `[start, end]`")),
    };
    if a > b {
        return Err(format!("window start {a} exceeds end {b}"));
    }
    Ok(StepRange::new(a, b))
}

/// Parse an `applies_to` value: `"0->1"`, `"0->1, 1->2"`, `["0->1", ...]` or
/// `"all_edges"` (expanded against `edges`).
pub(crate) fn parse_edge_list(value: &Value, edges: &[EdgeSpec]) -> Result<Vec<Edge>, String> {
    let items: Vec<String> = match value {
        Value::String(s) => s.split(',').map(|p| p.trim().to_string()).collect(),
        Value::Array(xs) => xs
            .iter()
            .map(|x| {
                x.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| format!("edge entry {x} is not a string"))
            })
            .collect::<Result<_, _>>()?,
        other => return Err(format!("applies_to {other} must be a string or an array of strings")),
    };
    let mut out = Vec::new();
    for item in items.iter().filter(|s| !s.is_empty()) {
        if item == "all_edges" {
            out.extend(edges.iter().map(EdgeSpec::edge));
        } else {
            out.push(item.parse::<Edge>()?);
        }
    }
    Ok(out)
}

fn to_node_id(raw: u64, path: &str, n: usize) -> Result<NodeId, ScenarioError> {
    let id = raw as usize;
    if id >= n {
        return Err(ScenarioError::field(
            "EDGE-ENDPOINT",
            path,
            format!("node {raw} does not exist (scenario has {n} nodes)"),
        ));
    }
    Ok(id)
}

/// Parse a scenario document (JSON text).
pub fn parse_scenario(doc: &str) -> Result<StructuredScenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(doc);
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    from_raw(raw)
}

/// Parse an already-decoded scenario document.
pub fn scenario_from_value(value: &Value) -> Result<StructuredScenario, ScenarioError> {
    let raw: RawScenario = serde_path_to_error::deserialize(value).map_err(|e| ScenarioError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    from_raw(raw)
}

fn from_raw(raw: RawScenario) -> Result<StructuredScenario, ScenarioError> {
    let n = raw.nodes.len();
    if n == 0 {
        return Err(ScenarioError::field("NODE-IDS", "nodes", "scenario has no nodes"));
    }

    let mut nodes = Vec::with_capacity(n);
    for (i, rn) in raw.nodes.into_iter().enumerate() {
        let path = format!("nodes[{i}]");
        if rn.id as usize != i {
            return Err(ScenarioError::field(
                "NODE-IDS",
                format!("{path}.id"),
                format!("node ids must be 0..{} in order without gaps, found {} at position {i}", n - 1, rn.id),
            ));
        }
        let node_type = rn.node_type.parse::<NodeType>().map_err(|_| {
            ScenarioError::field(
                "NODE-TYPE",
                format!("{path}.type"),
                format!(
                    "node {i} has type `{}`; expected one of demand_source, propagation",
                    rn.node_type
                ),
            )
        })?;
        nodes.push(NodeSpec {
            id: i,
            node_type,
            name: rn.name,
            description: rn.description,
        });
    }

    let mut edges = Vec::with_capacity(raw.edges.len());
    let mut seen = BTreeSet::new();
    for (i, re) in raw.edges.into_iter().enumerate() {
        let path = format!("edges[{i}]");
        let source = to_node_id(re.source, &format!("{path}.source"), n)?;
        let target = to_node_id(re.target, &format!("{path}.target"), n)?;
        if source == target {
            return Err(ScenarioError::field(
                "SELF-LOOP",
                path,
                format!("edge {source}->{target} is a self-loop"),
            ));
        }
        if !seen.insert((source, target)) {
            return Err(ScenarioError::field(
                "DUPLICATE-EDGE",
                path,
                format!("edge {source}->{target} is declared more than once"),
            ));
        }
        edges.push(EdgeSpec {
            source,
            target,
            relationship: re.relationship,
            time_lag: re.time_lag.unwrap_or(0),
        });
    }

    let computed = infer_seq_len(&raw.time_span, &raw.sampling_frequency)?;
    let seq_len = match raw.seq_len {
        Some(v) if v as usize != computed => {
            return Err(ScenarioError::field(
                "SEQ-LEN",
                "seq_len",
                format!(
                    "seq_len {v} does not match {} / {} = {computed}",
                    raw.time_span, raw.sampling_frequency
                ),
            ))
        }
        _ => computed,
    };

    let rd = raw.drift_patterns;
    let repeat = rd.repeat.unwrap_or(false);
    let repeat_period = match (repeat, rd.repeat_period) {
        (true, None) => {
            return Err(ScenarioError::field(
                "REPEAT-PERIOD",
                "drift_patterns.repeat_period",
                "repeat is true but repeat_period is missing",
            ))
        }
        (true, Some(0)) => {
            return Err(ScenarioError::field(
                "REPEAT-PERIOD",
                "drift_patterns.repeat_period",
                "repeat_period must be positive",
            ))
        }
        (false, Some(_)) => {
            return Err(ScenarioError::field(
                "REPEAT-PERIOD",
                "drift_patterns.repeat_period",
                "repeat_period given while repeat is false",
            ))
        }
        (_, p) => p,
    };
    let horizon = repeat_period.unwrap_or(seq_len as u32);

    let mut per_node = Vec::with_capacity(rd.nodes.len());
    let mut drift_ids = BTreeSet::new();
    for (i, rn) in rd.nodes.into_iter().enumerate() {
        let path = format!("drift_patterns.nodes[{i}]");
        let id = rn.id as usize;
        if id >= n {
            return Err(ScenarioError::field(
                "DRIFT-NODE",
                format!("{path}.id"),
                format!("drift entry names unknown node {}", rn.id),
            ));
        }
        if !drift_ids.insert(id) {
            return Err(ScenarioError::field(
                "DRIFT-NODE",
                format!("{path}.id"),
                format!("node {id} has more than one drift entry"),
            ));
        }
        let mut patterns = Vec::with_capacity(rn.patterns.len());
        for (j, rp) in rn.patterns.into_iter().enumerate() {
            let ppath = format!("{path}.patterns[{j}]");
            let behavior = rp.behavior.parse::<Behavior>().map_err(|_| {
                ScenarioError::field(
                    "BEHAVIOR",
                    format!("{ppath}.behavior"),
                    format!(
                        "unknown behavior `{}`; expected mean_reverting, sinusoidal, constant or logistic",
                        rp.behavior
                    ),
                )
            })?;
            if !(rp.baseline.is_finite() && rp.baseline > 0.0) {
                return Err(ScenarioError::field(
                    "BASELINE",
                    format!("{ppath}.baseline"),
                    format!("baseline must be > 0, got {}", rp.baseline),
                ));
            }
            let amplitude = rp.amplitude.unwrap_or(0.0);
            if !(amplitude.is_finite() && amplitude >= 0.0) {
                return Err(ScenarioError::field(
                    "AMPLITUDE",
                    format!("{ppath}.amplitude"),
                    format!("amplitude must be >= 0, got {amplitude}"),
                ));
            }
            let window = match rp.time_range.as_slice() {
                [a, b] if *a >= 0 && *b >= *a => (*a as u64, *b as u64),
                _ => {
                    return Err(ScenarioError::field(
                        "TIME-RANGE",
                        format!("{ppath}.time_range"),
                        format!("time_range {:?} must be [start, end] with 0 <= start <= end", rp.time_range),
                    ))
                }
            };
            if window.0 > horizon as u64 {
                return Err(ScenarioError::field(
                    "TIME-RANGE",
                    format!("{ppath}.time_range"),
                    format!("time_range starts at {} beyond the cycle length {horizon}", window.0),
                ));
            }
            let time_range = StepRange::new(window.0 as u32, window.1.min(horizon as u64) as u32);
            let peak = match rp.peak {
                Some(p) if p < 0 => {
                    return Err(ScenarioError::field(
                        "PEAK",
                        format!("{ppath}.peak"),
                        format!("peak must be a non-negative step, got {p}"),
                    ))
                }
                p => p.map(|p| p as u32),
            };
            patterns.push(PatternSpec {
                time_range,
                behavior,
                baseline: rp.baseline,
                amplitude,
                peak,
            });
        }
        let propagated_variations = rn
            .propagated_variations
            .into_iter()
            .map(|v| VariationNote {
                time: match v.time {
                    Value::String(s) => s,
                    Value::Null => String::new(),
                    other => other.to_string(),
                },
                origin: v.origin.unwrap_or_else(|| "propagated".to_string()),
                source: v.source.map(|s| s as usize),
                delay: v.delay,
                description: v.description,
            })
            .collect();
        per_node.push(NodeDrift {
            id,
            patterns,
            propagated_variations,
        });
    }

    let raw_mods = match raw.adjacency_modulation {
        None => Vec::new(),
        Some(RawModulationBlock::Wrapped { patterns }) | Some(RawModulationBlock::Bare(patterns)) => patterns,
    };
    let mut adjacency_modulation = Vec::with_capacity(raw_mods.len());
    for (i, rm) in raw_mods.into_iter().enumerate() {
        let path = format!("adjacency_modulation.patterns[{i}]");
        let time_period = parse_window(&rm.time_period)
            .map_err(|d| ScenarioError::field("TIME-RANGE", format!("{path}.time_period"), d))?;
        let effect = match rm.effect.trim().to_ascii_lowercase().as_str() {
            "strong" => Effect::Strong,
            "moderate" => Effect::Moderate,
            other => {
                return Err(ScenarioError::field(
                    "EFFECT",
                    format!("{path}.effect"),
                    format!("unknown effect `{other}`; expected strong or moderate"),
                ))
            }
        };
        let applies_to = parse_edge_list(&rm.applies_to, &edges)
            .map_err(|d| ScenarioError::field("EDGE-SYNTAX", format!("{path}.applies_to"), d))?;
        adjacency_modulation.push(ModulationSpec {
            time_period,
            effect,
            applies_to,
            description: rm.description,
        });
    }

    let mut spatial_layout = BTreeMap::new();
    for (key, point) in raw.spatial_layout {
        let id: NodeId = key.trim().parse().map_err(|_| {
            ScenarioError::field(
                "LAYOUT",
                format!("spatial_layout.{key}"),
                "layout keys must be node ids",
            )
        })?;
        spatial_layout.insert(id, point);
    }

    Ok(StructuredScenario {
        time_span: raw.time_span,
        sampling_frequency: raw.sampling_frequency,
        seq_len,
        variable: raw.variable,
        nodes,
        edges,
        drift_patterns: DriftProgram {
            repeat,
            repeat_period,
            per_node,
        },
        adjacency_modulation,
        spatial_layout,
        domain: raw.domain,
        task_id: raw.task_id,
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    pub const SHOWCASE_SCENARIO: &str = include_str!("../../fixtures/showcase/scenario.json");
    pub const SHOWCASE_PARAMS: &str = include_str!("../../fixtures/showcase/params.json");
    pub const SHOWCASE_MODULATION: &str = include_str!("../../fixtures/showcase/modulation.json");

    pub fn showcase() -> super::StructuredScenario {
        super::parse_scenario(SHOWCASE_SCENARIO).unwrap()
    }
}
