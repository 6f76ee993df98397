//! Hierarchical SDE parameters: global defaults, named groups and per-node
//! overrides with time-windowed drift patterns.
//!
//! Field lookup runs from the most specific layer outward: the active drift
//! pattern, the override's own fields, its group, then the global defaults.

pub(crate) mod resolve;
mod validate;

use std::collections::BTreeMap;

use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::scenario::{NodeType, StepRange};
use crate::NodeId;

pub use crate::scenario::Behavior as DriftType;
pub use resolve::{diffusion, drift, resolve_node_params, Diffusion, Drift, ResolvedParams};
pub use validate::validate_params;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("malformed parameter document at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("{rule} violated at `{path}`: {detail}")]
    Field {
        rule: &'static str,
        path: String,
        detail: String,
    },
    #[error("node {node} at step {step}: `{field}` is required by {drift} drift but no layer provides it")]
    Resolution {
        node: NodeId,
        step: u32,
        field: &'static str,
        drift: String,
    },
    #[error("singular parameter: {0}")]
    Singular(String),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionShape {
    Constant,
    Sqrt,
    Linear,
}

impl DiffusionShape {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiffusionShape::Constant => "constant",
            DiffusionShape::Sqrt => "sqrt",
            DiffusionShape::Linear => "linear",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" => Some(DiffusionShape::Constant),
            "sqrt" => Some(DiffusionShape::Sqrt),
            "linear" => Some(DiffusionShape::Linear),
            _ => None,
        }
    }
}

/// One layer of the parameter hierarchy. Every field is optional.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    pub drift_type: Option<DriftType>,
    pub node_type: Option<NodeType>,
    pub kappa: Option<f64>,
    pub baseline: Option<f64>,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    pub diffusion_shape: Option<DiffusionShape>,
    pub diffusion_alpha: Option<f64>,
    /// Sinusoidal amplitude, written `A` in documents.
    pub a: Option<f64>,
    pub omega: Option<f64>,
    pub phi: Option<f64>,
    pub alpha_drift: Option<f64>,
    pub r: Option<f64>,
    /// Keys this crate does not interpret, kept for round-tripping.
    pub other: Map<String, Value>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

impl ParamSet {
    /// Fill every field still absent in `self` from `fallback`.
    pub fn fill_from(&mut self, fallback: &ParamSet) {
        merge_fields!(self, fallback; drift_type, node_type, kappa, baseline, lambda, sigma,
            diffusion_shape, diffusion_alpha, a, omega, phi, alpha_drift, r);
    }

    /// Numeric fields with their document key, in document order.
    pub fn numeric_fields(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("kappa", self.kappa),
            ("baseline", self.baseline),
            ("A", self.a),
            ("omega", self.omega),
            ("phi", self.phi),
            ("lambda", self.lambda),
            ("sigma", self.sigma),
            ("diffusion_alpha", self.diffusion_alpha),
            ("alpha_drift", self.alpha_drift),
            ("r", self.r),
        ]
    }

    fn to_object(&self) -> Map<String, Value> {
        let mut m = Map::new();
        if let Some(d) = self.drift_type {
            m.insert("drift_type".into(), Value::String(d.as_str().into()));
        }
        if let Some(n) = self.node_type {
            m.insert("node_type".into(), Value::String(n.as_str().into()));
        }
        for (key, value) in self.numeric_fields() {
            if key == "diffusion_alpha" {
                if let Some(s) = self.diffusion_shape {
                    m.insert("diffusion_shape".into(), Value::String(s.as_str().into()));
                }
            }
            if let Some(v) = value {
                m.insert(key.into(), number(v));
            }
        }
        for (k, v) in &self.other {
            m.insert(k.clone(), v.clone());
        }
        m
    }
}

fn number(v: f64) -> Value {
    Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

/// A drift phase inside a node override.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftConfig {
    pub time_range: StepRange,
    pub params: ParamSet,
}

impl DriftConfig {
    pub fn drift_type(&self) -> Option<DriftType> {
        self.params.drift_type
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeOverride {
    pub group: Option<String>,
    pub drift_patterns: Option<Vec<DriftConfig>>,
    pub description: Option<String>,
    pub extra: ParamSet,
}

impl NodeOverride {
    pub fn patterns(&self) -> &[DriftConfig] {
        self.drift_patterns.as_deref().unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SdeParameters {
    pub global_defaults: ParamSet,
    pub group_params: BTreeMap<String, ParamSet>,
    pub node_overrides: BTreeMap<NodeId, NodeOverride>,
}

impl SdeParameters {
    pub fn to_document(&self) -> Value {
        let groups: Map<String, Value> = self
            .group_params
            .iter()
            .map(|(k, v)| (k.clone(), Value::Object(v.to_object())))
            .collect();
        let overrides: Map<String, Value> = self
            .node_overrides
            .iter()
            .map(|(id, o)| {
                let mut m = Map::new();
                if let Some(g) = &o.group {
                    m.insert("group".into(), Value::String(g.clone()));
                }
                if let Some(ps) = &o.drift_patterns {
                    let list = ps
                        .iter()
                        .map(|p| {
                            let mut obj = Map::new();
                            obj.insert(
                                "time_range".into(),
                                serde_json::json!([p.time_range.start, p.time_range.end]),
                            );
                            obj.extend(p.params.to_object());
                            Value::Object(obj)
                        })
                        .collect();
                    m.insert("drift_patterns".into(), Value::Array(list));
                }
                m.extend(o.extra.to_object());
                if let Some(d) = &o.description {
                    m.insert("description".into(), Value::String(d.clone()));
                }
                (id.to_string(), Value::Object(m))
            })
            .collect();
        serde_json::json!({
            "global_defaults": Value::Object(self.global_defaults.to_object()),
            "group_params": groups,
            "node_overrides": overrides,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("parameter document serializes")
    }
}

// ---- document parsing -------------------------------------------------------

fn field(rule: &'static str, path: impl Into<String>, detail: impl Into<String>) -> ParamError {
    ParamError::Field {
        rule,
        path: path.into(),
        detail: detail.into(),
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, ParamError> {
    v.as_object().ok_or_else(|| ParamError::Parse {
        path: path.to_string(),
        message: format!("expected an object, found {v}"),
    })
}

fn scalar(v: &Value, path: &str) -> Result<f64, ParamError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| field("SCALAR", path, "number out of range")),
        Value::Array(_) => Err(field("SCALAR", path, "parameters must be scalars, not arrays")),
        other => Err(ParamError::Parse {
            path: path.to_string(),
            message: format!("expected a number, found {other}"),
        }),
    }
}

fn text<'a>(v: &'a Value, path: &str) -> Result<&'a str, ParamError> {
    v.as_str().ok_or_else(|| ParamError::Parse {
        path: path.to_string(),
        message: format!("expected a string, found {v}"),
    })
}

/// Parse one parameter layer. Keys listed in `skip` are left to the caller.
fn parse_param_set(obj: &Map<String, Value>, path: &str, skip: &[&str]) -> Result<ParamSet, ParamError> {
    let mut p = ParamSet::default();
    if let Some(v) = obj.get("drift_type") {
        let p_path = format!("{path}.drift_type");
        let s = text(v, &p_path)?;
        p.drift_type = Some(s.parse().map_err(|_| {
            field(
                "DRIFT-TYPE",
                p_path,
                format!("unknown drift_type `{s}`; expected mean_reverting, sinusoidal, constant or logistic"),
            )
        })?);
    }
    let mut bare_alpha = None;
    for (key, v) in obj {
        let k_path = format!("{path}.{key}");
        match key.as_str() {
            "drift_type" => {}
            k if skip.contains(&k) => {}
            "node_type" => {
                let s = text(v, &k_path)?;
                p.node_type = Some(s.parse().map_err(|_| {
                    field("NODE-TYPE", k_path, format!("unknown node_type `{s}`"))
                })?);
            }
            "diffusion_shape" => {
                let s = text(v, &k_path)?;
                p.diffusion_shape = Some(DiffusionShape::parse(s).ok_or_else(|| {
                    field(
                        "DIFFUSION-SHAPE",
                        k_path,
                        format!("unknown diffusion_shape `{s}`; expected constant, sqrt or linear"),
                    )
                })?);
            }
            "kappa" => p.kappa = Some(scalar(v, &k_path)?),
            "baseline" | "mu" => p.baseline = Some(scalar(v, &k_path)?),
            "lambda" => p.lambda = Some(scalar(v, &k_path)?),
            "sigma" => p.sigma = Some(scalar(v, &k_path)?),
            "A" => p.a = Some(scalar(v, &k_path)?),
            "omega" => p.omega = Some(scalar(v, &k_path)?),
            "phi" => p.phi = Some(scalar(v, &k_path)?),
            "r" => p.r = Some(scalar(v, &k_path)?),
            "alpha_drift" => p.alpha_drift = Some(scalar(v, &k_path)?),
            "diffusion_alpha" => p.diffusion_alpha = Some(scalar(v, &k_path)?),
            "alpha" => bare_alpha = Some(scalar(v, &k_path)?),
            _ => {
                p.other.insert(key.clone(), v.clone());
            }
        }
    }
    if let Some(alpha) = bare_alpha {
        if p.drift_type == Some(DriftType::Constant) {
            p.alpha_drift.get_or_insert(alpha);
        } else {
            p.diffusion_alpha.get_or_insert(alpha);
        }
    }
    Ok(p)
}

fn parse_time_range(v: &Value, path: &str) -> Result<StepRange, ParamError> {
    crate::scenario::parse_window(v).map_err(|d| field("TIME-RANGE", path, d))
}

/// Parse a parameter document (JSON text).
pub fn parse_params(doc: &str) -> Result<SdeParameters, ParamError> {
    let value: Value = serde_json::from_str(doc).map_err(|e| ParamError::Parse {
        path: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    params_from_value(&value)
}

/// Parse an already-decoded parameter document.
pub fn params_from_value(value: &Value) -> Result<SdeParameters, ParamError> {
    let root = as_object(value, "$")?;
    let global_defaults = match root.get("global_defaults") {
        Some(v) => parse_param_set(as_object(v, "global_defaults")?, "global_defaults", &[])?,
        None => ParamSet::default(),
    };

    let mut group_params = BTreeMap::new();
    if let Some(v) = root.get("group_params") {
        for (name, g) in as_object(v, "group_params")? {
            let path = format!("group_params.{name}");
            group_params.insert(name.clone(), parse_param_set(as_object(g, &path)?, &path, &[])?);
        }
    }

    let mut node_overrides = BTreeMap::new();
    if let Some(v) = root.get("node_overrides") {
        for (key, o) in as_object(v, "node_overrides")? {
            let path = format!("node_overrides.{key}");
            let id: NodeId = key
                .trim()
                .parse()
                .map_err(|_| field("NODE-KEY", &path, format!("override key `{key}` is not a node id")))?;
            let obj = as_object(o, &path)?;
            let group = obj
                .get("group")
                .map(|g| text(g, &format!("{path}.group")).map(str::to_string))
                .transpose()?;
            let description = obj
                .get("description")
                .map(|d| text(d, &format!("{path}.description")).map(str::to_string))
                .transpose()?;
            let drift_patterns = match obj.get("drift_patterns") {
                None => None,
                Some(list) => {
                    let items = list.as_array().ok_or_else(|| ParamError::Parse {
                        path: format!("{path}.drift_patterns"),
                        message: "expected an array".into(),
                    })?;
                    let mut out = Vec::with_capacity(items.len());
                    for (i, item) in items.iter().enumerate() {
                        let ppath = format!("{path}.drift_patterns[{i}]");
                        let pobj = as_object(item, &ppath)?;
                        let tr = pobj.get("time_range").ok_or_else(|| {
                            field("TIME-RANGE", format!("{ppath}.time_range"), "drift pattern needs a time_range")
                        })?;
                        let time_range = parse_time_range(tr, &format!("{ppath}.time_range"))?;
                        let params = parse_param_set(pobj, &ppath, &["time_range"])?;
                        if params.drift_type.is_none() {
                            return Err(field(
                                "DRIFT-TYPE",
                                format!("{ppath}.drift_type"),
                                "drift pattern needs a drift_type",
                            ));
                        }
                        out.push(DriftConfig { time_range, params });
                    }
                    Some(out)
                }
            };
            let extra = parse_param_set(obj, &path, &["group", "drift_patterns", "description"])?;
            node_overrides.insert(
                id,
                NodeOverride {
                    group,
                    drift_patterns,
                    description,
                    extra,
                },
            );
        }
    }

    Ok(SdeParameters {
        global_defaults,
        group_params,
        node_overrides,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    use crate::scenario::fixtures::SHOWCASE_PARAMS;

    pub fn showcase_params() -> SdeParameters {
        parse_params(SHOWCASE_PARAMS).unwrap()
    }

    #[test]
    fn showcase_shape() {
        let p = showcase_params();
        assert_eq!(p.global_defaults.kappa, Some(0.25));
        assert_eq!(p.global_defaults.diffusion_shape, Some(DiffusionShape::Sqrt));
        assert_eq!(p.group_params.len(), 2);
        assert_eq!(p.group_params["demand_sources"].a, Some(30.0));
        let n0 = &p.node_overrides[&0];
        assert_eq!(n0.group.as_deref(), Some("demand_sources"));
        assert_eq!(n0.patterns().len(), 3);
        assert_eq!(n0.patterns()[1].params.a, Some(300.0));
        assert_eq!(n0.patterns()[1].time_range, StepRange::new(14, 34));
        assert!(n0.description.is_some());
    }

    #[test]
    fn alpha_maps_by_context() {
        let doc = r#"{
            "global_defaults": {"drift_type": "mean_reverting", "diffusion_shape": "linear", "alpha": 0.3},
            "group_params": {"g": {"drift_type": "constant", "alpha": 2.5}},
            "node_overrides": {}
        }"#;
        let p = parse_params(doc).unwrap();
        assert_eq!(p.global_defaults.diffusion_alpha, Some(0.3));
        assert_eq!(p.global_defaults.alpha_drift, None);
        assert_eq!(p.group_params["g"].alpha_drift, Some(2.5));
        assert_eq!(p.group_params["g"].diffusion_alpha, None);
    }

    #[test]
    fn arrays_are_rejected() {
        let doc = r#"{"global_defaults": {"A": [1, 2]}}"#;
        match parse_params(doc).unwrap_err() {
            ParamError::Field { rule, path, .. } => {
                assert_eq!(rule, "SCALAR");
                assert_eq!(path, "global_defaults.A");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_drift_type_is_a_field_error() {
        let doc = SHOWCASE_PARAMS.replacen("\"sinusoidal\"", "\"chaotic\"", 1);
        assert!(matches!(
            parse_params(&doc),
            Err(ParamError::Field { rule: "DRIFT-TYPE", .. })
        ));
    }

    #[test]
    fn document_round_trip() {
        let p = showcase_params();
        assert_eq!(parse_params(&p.to_json_string()).unwrap(), p);
        let doc = r#"{"global_defaults": {"drift_type": "constant", "alpha": 2.0, "diffusion_alpha": 0.5, "note": "kept"}}"#;
        let q = parse_params(doc).unwrap();
        assert_eq!(parse_params(&q.to_json_string()).unwrap(), q);
    }
}
