//! Time-varying coupling weights: a base adjacency matrix scaled by windowed
//! per-edge multipliers.

use std::fmt;

use serde::Deserialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::report::{rules, ValidationReport};
use crate::scenario::{parse_window, Edge, StepRange, StructuredScenario};
use crate::NodeId;

/// Weight given to every scenario edge when no base matrix is supplied.
pub const DEFAULT_BASE_WEIGHT: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum AdjacencyError {
    #[error("malformed modulation document at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("base adjacency must be square, row {row} has {len} entries for {n} nodes")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("edge {edge} is outside the {n}x{n} adjacency matrix")]
    Index { edge: Edge, n: usize },
}

/// Entry `[s][t]` is the base weight of the directed edge `s -> t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseAdjacency {
    matrix: Vec<Vec<f64>>,
}

impl BaseAdjacency {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self, AdjacencyError> {
        let n = matrix.len();
        for (row, r) in matrix.iter().enumerate() {
            if r.len() != n {
                return Err(AdjacencyError::NotSquare { row, len: r.len(), n });
            }
        }
        Ok(Self { matrix })
    }

    /// `weight` on every scenario edge, zero elsewhere.
    pub fn uniform(s: &StructuredScenario, weight: f64) -> Self {
        let n = s.num_nodes();
        let mut matrix = vec![vec![0.0; n]; n];
        for e in &s.edges {
            matrix[e.source][e.target] = weight;
        }
        Self { matrix }
    }

    /// The default base: [`DEFAULT_BASE_WEIGHT`] on every scenario edge.
    pub fn default_for(s: &StructuredScenario) -> Self {
        Self::uniform(s, DEFAULT_BASE_WEIGHT)
    }

    pub fn num_nodes(&self) -> usize {
        self.matrix.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn weight(&self, edge: Edge) -> Result<f64, AdjacencyError> {
        let n = self.num_nodes();
        if edge.source >= n || edge.target >= n {
            return Err(AdjacencyError::Index { edge, n });
        }
        Ok(self.matrix[edge.source][edge.target])
    }

    /// Multiply every entry by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            matrix: self
                .matrix
                .iter()
                .map(|r| r.iter().map(|w| w * c).collect())
                .collect(),
        }
    }
}

/// Target of one modulation entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulatedEdge {
    Edge(Edge),
    /// Written `"all_edges"`; applies to every edge.
    AllEdges,
}

impl ModulatedEdge {
    pub fn covers(&self, edge: Edge) -> bool {
        match self {
            ModulatedEdge::Edge(e) => *e == edge,
            ModulatedEdge::AllEdges => true,
        }
    }

    /// Concrete edges this entry names, expanding `all_edges` against `s`.
    pub fn expand(&self, s: &StructuredScenario) -> Vec<Edge> {
        match self {
            ModulatedEdge::Edge(e) => vec![*e],
            ModulatedEdge::AllEdges => s.edges.iter().map(|e| e.edge()).collect(),
        }
    }
}

impl fmt::Display for ModulatedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModulatedEdge::Edge(e) => e.fmt(f),
            ModulatedEdge::AllEdges => f.write_str("all_edges"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeModulation {
    pub edge: ModulatedEdge,
    pub multiplier: f64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationPattern {
    /// Half-open window `[start, end)`.
    pub time_range: StepRange,
    pub description: String,
    pub edge_modulations: Vec<EdgeModulation>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeModulation {
    pub patterns: Vec<ModulationPattern>,
}

impl TimeModulation {
    /// Multiplier on `edge` at step `t`: the largest among covering windows,
    /// 1.0 when none covers.
    pub fn multiplier_at(&self, edge: Edge, t: u32) -> f64 {
        self.patterns
            .iter()
            .filter(|p| p.time_range.contains(t))
            .flat_map(|p| p.edge_modulations.iter())
            .filter(|m| m.edge.covers(edge))
            .map(|m| m.multiplier)
            .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.max(m))))
            .unwrap_or(1.0)
    }

    /// `(pattern index, edge, multiplier)` for every modulation unit, with
    /// `all_edges` expanded against `s`.
    pub fn units(&self, s: &StructuredScenario) -> Vec<(usize, Edge, f64)> {
        let mut out = Vec::new();
        for (i, p) in self.patterns.iter().enumerate() {
            for m in &p.edge_modulations {
                for e in m.edge.expand(s) {
                    out.push((i, e, m.multiplier));
                }
            }
        }
        out
    }

    pub fn to_value(&self) -> Value {
        let patterns: Vec<Value> = self
            .patterns
            .iter()
            .map(|p| {
                let mods: Map<String, Value> = p
                    .edge_modulations
                    .iter()
                    .map(|m| {
                        (
                            m.edge.to_string(),
                            json!({ "multiplier": m.multiplier, "description": m.description }),
                        )
                    })
                    .collect();
                json!({
                    "time_range": [p.time_range.start, p.time_range.end],
                    "description": p.description,
                    "edge_modulations": mods,
                })
            })
            .collect();
        json!({ "patterns": patterns })
    }
}

/// `m`'s multiplier on `edge` at step `t`.
pub fn multiplier_at(m: &TimeModulation, edge: Edge, t: u32) -> f64 {
    m.multiplier_at(edge, t)
}

/// `base[src][tgt] * multiplier_at(edge, t)`.
pub fn effective_weight(b: &BaseAdjacency, m: &TimeModulation, edge: Edge, t: u32) -> Result<f64, AdjacencyError> {
    let w = b.weight(edge)?;
    if w == 0.0 {
        return Ok(0.0);
    }
    Ok(w * m.multiplier_at(edge, t))
}

/// The modulation document: time modulation plus an optional base matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModulationDocument {
    pub time_modulation: TimeModulation,
    pub base_adjacency: Option<BaseAdjacency>,
}

impl ModulationDocument {
    /// The document's base matrix, or the default one for `s`.
    pub fn base_for(&self, s: &StructuredScenario) -> BaseAdjacency {
        self.base_adjacency.clone().unwrap_or_else(|| BaseAdjacency::default_for(s))
    }

    pub fn to_document(&self) -> Value {
        let mut doc = Map::new();
        doc.insert("time_modulation".into(), self.time_modulation.to_value());
        if let Some(b) = &self.base_adjacency {
            doc.insert("base_adjacency".into(), json!(b.rows()));
        }
        Value::Object(doc)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("modulation document serializes")
    }
}

#[derive(Deserialize)]
struct RawDocument {
    #[serde(default)]
    time_modulation: Option<RawTimeModulation>,
    #[serde(default)]
    base_adjacency: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct RawTimeModulation {
    #[serde(default)]
    patterns: Vec<RawPattern>,
}

#[derive(Deserialize)]
struct RawPattern {
    time_range: Value,
    #[serde(default)]
    description: String,
    #[serde(default)]
    edge_modulations: Map<String, Value>,
}

#[derive(Deserialize)]
struct RawEdgeModulation {
    multiplier: f64,
    #[serde(default)]
    description: String,
}

fn parse_err(path: String, message: impl Into<String>) -> AdjacencyError {
    AdjacencyError::Parse {
        path,
        message: message.into(),
    }
}

/// Parse a modulation document (JSON text).
pub fn parse_modulation(doc: &str) -> Result<ModulationDocument, AdjacencyError> {
    let value: Value = serde_json::from_str(doc)
        .map_err(|e| parse_err(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    modulation_from_value(&value)
}

/// Parse an already-decoded modulation document.
pub fn modulation_from_value(value: &Value) -> Result<ModulationDocument, AdjacencyError> {
    let raw: RawDocument =
        serde_path_to_error::deserialize(value).map_err(|e| parse_err(e.path().to_string(), e.inner().to_string()))?;
    let mut patterns = Vec::new();
    for (i, rp) in raw
        .time_modulation
        .map(|t| t.patterns)
        .unwrap_or_default()
        .into_iter()
        .enumerate()
    {
        let path = format!("time_modulation.patterns[{i}]");
        let time_range = parse_window(&rp.time_range).map_err(|m| parse_err(format!("{path}.time_range"), m))?;
        let mut edge_modulations = Vec::new();
        for (key, v) in rp.edge_modulations {
            let epath = format!("{path}.edge_modulations.{key}");
            let edge = if key.trim() == "all_edges" {
                ModulatedEdge::AllEdges
            } else {
                ModulatedEdge::Edge(key.parse().map_err(|m: String| parse_err(epath.clone(), m))?)
            };
            let rm: RawEdgeModulation = serde_path_to_error::deserialize(&v)
                .map_err(|e| parse_err(format!("{epath}.{}", e.path()), e.inner().to_string()))?;
            edge_modulations.push(EdgeModulation {
                edge,
                multiplier: rm.multiplier,
                description: rm.description,
            });
        }
        patterns.push(ModulationPattern {
            time_range,
            description: rp.description,
            edge_modulations,
        });
    }
    let base_adjacency = raw.base_adjacency.map(BaseAdjacency::new).transpose()?;
    Ok(ModulationDocument {
        time_modulation: TimeModulation { patterns },
        base_adjacency,
    })
}

/// Check multipliers against the scenario's declared effects and edges.
pub fn validate_modulation(m: &TimeModulation, s: &StructuredScenario) -> ValidationReport {
    let mut r = ValidationReport::approved();
    for (i, p) in m.patterns.iter().enumerate() {
        for em in &p.edge_modulations {
            let loc = format!("time_modulation.patterns[{i}].edge_modulations.{}", em.edge);
            if !(em.multiplier.is_finite() && em.multiplier > 0.0) {
                r.error(
                    rules::MULTIPLIER_POSITIVE,
                    loc.clone(),
                    format!("multiplier {} must be positive", em.multiplier),
                );
            }
            for edge in em.edge.expand(s) {
                if !s.has_edge(edge) {
                    r.error(rules::UNKNOWN_EDGE, loc.clone(), format!("edge {edge} is not declared in the scenario"));
                    continue;
                }
                let spec = s
                    .adjacency_modulation
                    .iter()
                    .find(|spec| spec.applies_to.contains(&edge) && spec.time_period.overlaps(&p.time_range));
                match spec {
                    Some(spec) => {
                        let (lo, hi) = spec.effect.multiplier_band();
                        if em.multiplier > 0.0 && !(lo..=hi).contains(&em.multiplier) {
                            r.error(
                                rules::MULTIPLIER_BAND,
                                loc.clone(),
                                format!(
                                    "{} effect on {edge} needs a multiplier in [{lo}, {hi}], got {}",
                                    spec.effect.as_str(),
                                    em.multiplier
                                ),
                            );
                        }
                    }
                    None => r.warn(
                        rules::UNMATCHED_WINDOW,
                        loc.clone(),
                        format!("no scenario modulation covers {edge} during {}", p.time_range),
                    ),
                }
            }
        }
    }
    for (i, a) in m.patterns.iter().enumerate() {
        for (j, b) in m.patterns.iter().enumerate().skip(i + 1) {
            if !a.time_range.overlaps(&b.time_range) {
                continue;
            }
            for e in &s.edges {
                let edge = e.edge();
                let in_a = a.edge_modulations.iter().any(|m| m.edge.covers(edge));
                let in_b = b.edge_modulations.iter().any(|m| m.edge.covers(edge));
                if in_a && in_b {
                    r.warn(
                        rules::MODULATION_OVERLAP,
                        format!("time_modulation.patterns[{j}]"),
                        format!(
                            "windows {} and {} both modulate {edge}; the larger multiplier applies",
                            a.time_range, b.time_range
                        ),
                    );
                }
            }
        }
    }
    r
}

/// Check that `b` is `N x N` with a zero diagonal and nonzero entries exactly on scenario edges.
pub fn validate_base_adjacency(b: &BaseAdjacency, s: &StructuredScenario) -> ValidationReport {
    let mut r = ValidationReport::approved();
    let n = s.num_nodes();
    if b.num_nodes() != n {
        r.error(
            rules::BASE_ADJACENCY,
            "base_adjacency",
            format!("matrix is {0}x{0} but the scenario has {n} nodes", b.num_nodes()),
        );
        return r;
    }
    for (src, row) in b.rows().iter().enumerate() {
        for (tgt, &w) in row.iter().enumerate() {
            let loc = format!("base_adjacency[{src}][{tgt}]");
            let is_edge = s.has_edge(Edge::new(src, tgt));
            if !w.is_finite() || w < 0.0 {
                r.error(rules::BASE_ADJACENCY, loc, format!("weight {w} must be finite and non-negative"));
            } else if src == tgt && w != 0.0 {
                r.error(rules::BASE_ADJACENCY, loc, format!("diagonal weight {w} must be 0"));
            } else if is_edge && w == 0.0 {
                r.error(rules::BASE_ADJACENCY, loc, format!("edge {src}->{tgt} has zero base weight"));
            } else if !is_edge && w != 0.0 {
                r.error(rules::BASE_ADJACENCY, loc, format!("weight {w} on {src}->{tgt}, which is not a scenario edge"));
            }
        }
    }
    r
}

/// Validate a whole modulation document, using the default base when absent.
pub fn validate_modulation_document(doc: &ModulationDocument, s: &StructuredScenario) -> ValidationReport {
    let mut r = validate_modulation(&doc.time_modulation, s);
    r.merge(validate_base_adjacency(&doc.base_for(s), s));
    r
}

/// Incoming-edge weights for node `i`: `(j, base weight, lag)` for every edge `j -> i`.
pub fn incoming(s: &StructuredScenario, b: &BaseAdjacency, i: NodeId) -> Vec<(NodeId, f64, u32)> {
    s.edges
        .iter()
        .filter(|e| e.target == i)
        .map(|e| (e.source, b.weight(e.edge()).unwrap_or(0.0), e.time_lag))
        .collect()
}
