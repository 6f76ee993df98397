//! Alignment QA generated from templates over the structured artifacts.
//!
//! Three categories: temporal (per node and drift pattern), spatial (per
//! ordered node pair) and spatio-temporal (node types, edge lags and
//! modulation windows). Answers are looked up directly from the documents and
//! never depend on simulated values.

use serde::Serialize;
use thiserror::Error;

use crate::adjacency::{BaseAdjacency, TimeModulation};
use crate::numfmt::format_sig;
use crate::params::resolve::{finish, merged_layers};
use crate::params::{DriftType, ParamError, SdeParameters};
use crate::scenario::{has_indirect_path, Edge, StepRange, StructuredScenario};
use crate::NodeId;

/// Significant digits in numeric answers.
pub const ANSWER_DIGITS: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum QaError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("modulation names edge {0}, which is not in the scenario")]
    UnknownEdge(Edge),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Temporal,
    Spatial,
    SpatialTemporal,
}

impl Category {
    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Temporal => "temporal",
            Category::Spatial => "spatial",
            Category::SpatialTemporal => "spatial_temporal",
        }
    }

    /// Template keys of this category, in generation order.
    pub fn template_keys(&self) -> &'static [&'static str] {
        match self {
            Category::Temporal => &[
                "drift_type",
                "baseline",
                "kappa",
                "sigma",
                "lambda",
                "diffusion_shape",
                "sinusoidal_A",
                "sinusoidal_omega",
                "sinusoidal_phi",
            ],
            Category::Spatial => &["edge_relationship", "indirect_connection"],
            Category::SpatialTemporal => &["node_type", "edge_lag", "edge_modulation", "effective_coupling_strength"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignQuestion {
    pub category: Category,
    pub template_key: &'static str,
    pub question: String,
    pub answer: String,
    pub node_scope: Vec<NodeId>,
    pub time_range: Option<StepRange>,
}

/// One JSON-lines record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaRecord<'a> {
    pub question_id: String,
    pub category: &'static str,
    pub template_key: &'static str,
    pub question: &'a str,
    pub answer: &'a str,
    pub scenario_id: Option<&'a str>,
}

fn yes_no(b: bool) -> String {
    if b { "Yes" } else { "No" }.to_string()
}

fn num(x: f64) -> String {
    format_sig(x, ANSWER_DIGITS)
}

fn temporal_question(key: &str, node: NodeId, range: StepRange) -> String {
    let what = match key {
        "drift_type" => "the evolution pattern of",
        "baseline" => "the long-term baseline value of",
        "kappa" => "the mean reversion speed (kappa) of",
        "sigma" => "the random fluctuation intensity (sigma) of",
        "lambda" => "the coupling strength (lambda) of",
        "diffusion_shape" => "the diffusion shape (diffusion_shape) of",
        "sinusoidal_A" => "the sinusoidal amplitude (A) of",
        "sinusoidal_omega" => "the sinusoidal frequency (omega) of",
        "sinusoidal_phi" => "the sinusoidal phase (phi) of",
        _ => unreachable!("unknown temporal key {key}"),
    };
    format!("What is {what} node {node} during the time range {range}?")
}

/// Temporal questions: for every node and every drift pattern of its
/// override (the whole cycle when it has none), one question per parameter
/// present after merging the hierarchy, plus A / omega / phi for sinusoidal
/// patterns.
pub fn gen_temporal_qa(p: &SdeParameters, s: &StructuredScenario) -> Result<Vec<AlignQuestion>, QaError> {
    let mut out = Vec::new();
    for node in &s.nodes {
        let patterns = p.node_overrides.get(&node.id).map(|o| o.patterns()).unwrap_or(&[]);
        let windows: Vec<(Option<usize>, StepRange)> = if patterns.is_empty() {
            vec![(None, StepRange::new(0, s.cycle_len()))]
        } else {
            patterns.iter().enumerate().map(|(i, d)| (Some(i), d.time_range)).collect()
        };
        for (pattern, range) in windows {
            let merged = merged_layers(p, node.id, node.node_type, pattern);
            finish(node.id, range.start, node.node_type, pattern, merged.clone())?;
            let mut answers: Vec<(&'static str, String)> = Vec::new();
            if let Some(d) = merged.drift_type {
                answers.push(("drift_type", d.as_str().to_string()));
            }
            for (key, v) in [
                ("baseline", merged.baseline),
                ("kappa", merged.kappa),
                ("sigma", merged.sigma),
                ("lambda", merged.lambda),
            ] {
                if let Some(v) = v {
                    answers.push((key, num(v)));
                }
            }
            if let Some(shape) = merged.diffusion_shape {
                answers.push(("diffusion_shape", shape.as_str().to_string()));
            }
            if merged.drift_type == Some(DriftType::Sinusoidal) {
                for (key, v) in [
                    ("sinusoidal_A", merged.a),
                    ("sinusoidal_omega", merged.omega),
                    ("sinusoidal_phi", merged.phi),
                ] {
                    if let Some(v) = v {
                        answers.push((key, num(v)));
                    }
                }
            }
            for (key, answer) in answers {
                out.push(AlignQuestion {
                    category: Category::Temporal,
                    template_key: key,
                    question: temporal_question(key, node.id, range),
                    answer,
                    node_scope: vec![node.id],
                    time_range: Some(range),
                });
            }
        }
    }
    Ok(out)
}

/// Spatial questions: direct edge and indirect path for every ordered pair,
/// self-pairs included, `2 N^2` in total.
pub fn gen_spatial_qa(s: &StructuredScenario) -> Vec<AlignQuestion> {
    let n = s.num_nodes();
    let mut out = Vec::with_capacity(2 * n * n);
    for src in 0..n {
        for tgt in 0..n {
            out.push(AlignQuestion {
                category: Category::Spatial,
                template_key: "edge_relationship",
                question: format!("Is there a direct connection from node {src} to node {tgt}?"),
                answer: yes_no(s.has_edge(Edge::new(src, tgt))),
                node_scope: vec![src, tgt],
                time_range: None,
            });
            out.push(AlignQuestion {
                category: Category::Spatial,
                template_key: "indirect_connection",
                question: format!(
                    "Is there an indirect path (through one or more intermediate nodes) from node {src} to node {tgt}?"
                ),
                answer: yes_no(has_indirect_path(s, src, tgt).unwrap_or(false)),
                node_scope: vec![src, tgt],
                time_range: None,
            });
        }
    }
    out
}

/// Spatio-temporal questions: node types, edge lags, and for every
/// (window, edge) modulation unit its multiplier and effective coupling,
/// `N + E + 2M` in total.
pub fn gen_spatiotemporal_qa(
    s: &StructuredScenario,
    _p: &SdeParameters,
    b: &BaseAdjacency,
    m: &TimeModulation,
) -> Result<Vec<AlignQuestion>, QaError> {
    let mut out = Vec::new();
    for node in &s.nodes {
        out.push(AlignQuestion {
            category: Category::SpatialTemporal,
            template_key: "node_type",
            question: format!("What is the type of node {}? demand_source or propagation?", node.id),
            answer: node.node_type.as_str().to_string(),
            node_scope: vec![node.id],
            time_range: None,
        });
    }
    for e in &s.edges {
        out.push(AlignQuestion {
            category: Category::SpatialTemporal,
            template_key: "edge_lag",
            question: format!("What is the time lag between node {} and node {}?", e.source, e.target),
            answer: e.time_lag.to_string(),
            node_scope: vec![e.source, e.target],
            time_range: None,
        });
    }
    for (i, edge, multiplier) in m.units(s) {
        if !s.has_edge(edge) {
            return Err(QaError::UnknownEdge(edge));
        }
        let base = b.weight(edge).map_err(|_| QaError::UnknownEdge(edge))?;
        let range = m.patterns[i].time_range;
        out.push(AlignQuestion {
            category: Category::SpatialTemporal,
            template_key: "edge_modulation",
            question: format!(
                "What is the modulation multiplier (multiplier) of edge {edge} during the time range {range}?"
            ),
            answer: num(multiplier),
            node_scope: vec![edge.source, edge.target],
            time_range: Some(range),
        });
        out.push(AlignQuestion {
            category: Category::SpatialTemporal,
            template_key: "effective_coupling_strength",
            question: format!("What is the effective coupling strength of edge {edge} during the time range {range}?"),
            answer: num(multiplier * base),
            node_scope: vec![edge.source, edge.target],
            time_range: Some(range),
        });
    }
    Ok(out)
}

/// All three categories, temporal first.
pub fn gen_all(
    s: &StructuredScenario,
    p: &SdeParameters,
    b: &BaseAdjacency,
    m: &TimeModulation,
) -> Result<Vec<AlignQuestion>, QaError> {
    let mut out = gen_temporal_qa(p, s)?;
    out.extend(gen_spatial_qa(s));
    out.extend(gen_spatiotemporal_qa(s, p, b, m)?);
    Ok(out)
}

/// Stable id of the `index`-th question of a scenario.
pub fn question_id(scenario_id: Option<&str>, index: usize) -> String {
    format!("{}-{index:04}", scenario_id.unwrap_or("q"))
}

/// Render questions as JSON lines.
pub fn to_jsonl(questions: &[AlignQuestion], scenario_id: Option<&str>) -> String {
    let mut out = String::new();
    for (i, q) in questions.iter().enumerate() {
        let rec = QaRecord {
            question_id: question_id(scenario_id, i),
            category: q.category.as_str(),
            template_key: q.template_key,
            question: &q.question,
            answer: &q.answer,
            scenario_id,
        };
        out.push_str(&serde_json::to_string(&rec).expect("qa record serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjacency::parse_modulation;
    use crate::params::parse_params;
    use crate::scenario::fixtures::{showcase, SHOWCASE_MODULATION, SHOWCASE_PARAMS};

    fn inputs() -> (StructuredScenario, SdeParameters, BaseAdjacency, TimeModulation) {
        let s = showcase();
        let d = parse_modulation(SHOWCASE_MODULATION).unwrap();
        (s.clone(), parse_params(SHOWCASE_PARAMS).unwrap(), d.base_for(&s), d.time_modulation)
    }

    #[test]
    fn temporal_showcase() {
        let (s, p, _, _) = inputs();
        let qs = gen_temporal_qa(&p, &s).unwrap();
        let node0: Vec<_> = qs.iter().filter(|q| q.node_scope == [0]).collect();
        assert_eq!(node0.len(), 21);
        let amp = node0.iter().find(|q| q.template_key == "sinusoidal_A").unwrap();
        assert_eq!(amp.question, "What is the sinusoidal amplitude (A) of node 0 during the time range [14, 34)?");
        assert_eq!(amp.answer, "300");
        let phi = node0.iter().find(|q| q.template_key == "sinusoidal_phi").unwrap();
        assert_eq!(phi.answer, "-1.726");
        assert!(qs.iter().all(|q| Category::Temporal.template_keys().contains(&q.template_key)));
    }

    #[test]
    fn single_pattern_node_has_six() {
        let (s, p, _, _) = inputs();
        let qs = gen_temporal_qa(&p, &s).unwrap();
        assert_eq!(qs.iter().filter(|q| q.node_scope == [1]).count(), 6);
    }

    #[test]
    fn spatial_showcase() {
        let s = showcase();
        let qs = gen_spatial_qa(&s);
        assert_eq!(qs.len(), 18);
        let find = |key: &str, scope: [usize; 2]| {
            qs.iter()
                .find(|q| q.template_key == key && q.node_scope == scope)
                .unwrap()
                .answer
                .clone()
        };
        assert_eq!(find("edge_relationship", [0, 2]), "No");
        assert_eq!(find("indirect_connection", [0, 2]), "Yes");
        assert_eq!(find("edge_relationship", [0, 1]), "Yes");
        assert_eq!(find("indirect_connection", [0, 1]), "No");
    }

    #[test]
    fn spatiotemporal_showcase() {
        let (s, p, b, m) = inputs();
        let qs = gen_spatiotemporal_qa(&s, &p, &b, &m).unwrap();
        assert_eq!(qs.len(), 3 + 4 + 2 * 4);
        let lag = qs.iter().find(|q| q.template_key == "edge_lag").unwrap();
        assert_eq!(lag.node_scope, [0, 1]);
        assert_eq!(lag.answer, "1");
        let eff = qs
            .iter()
            .find(|q| q.template_key == "effective_coupling_strength" && q.node_scope == [2, 1])
            .unwrap();
        assert_eq!(eff.answer, "1.5");
        assert_eq!(eff.time_range, Some(StepRange::new(14, 19)));
    }

    #[test]
    fn unknown_modulated_edge_is_an_error() {
        let (s, p, b, mut m) = inputs();
        m.patterns[0].edge_modulations[0].edge = crate::adjacency::ModulatedEdge::Edge(Edge::new(0, 2));
        assert_eq!(
            gen_spatiotemporal_qa(&s, &p, &b, &m).unwrap_err(),
            QaError::UnknownEdge(Edge::new(0, 2))
        );
    }

    #[test]
    fn jsonl_records() {
        let (s, p, b, m) = inputs();
        let qs = gen_all(&s, &p, &b, &m).unwrap();
        let text = to_jsonl(&qs, s.task_id.as_deref());
        assert_eq!(text.lines().count(), qs.len());
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["category"], "temporal");
        assert_eq!(first["scenario_id"], "task_0030");
        assert_eq!(first["question_id"], "task_0030-0000");
        assert!(first.get("template_key").is_some());
    }
}
