//! Euler–Maruyama integration of the network SDE
//!
//! `dX_i = [f_i(X_i, t) + λ_i Σ_j w_ji(t) (X_j(t - τ_ji) - X_i)] dt + σ_i g_i(X_i) dW_i`
//!
//! with `substeps` sub-intervals per sampling step, coupling weights held
//! constant within each integer step and one Gaussian stream per node.

mod export;
mod history;
mod noise;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adjacency::{
    validate_base_adjacency, validate_modulation, AdjacencyError, BaseAdjacency, TimeModulation,
};
use crate::params::{resolve_node_params, validate_params, ParamError, ResolvedParams, SdeParameters};
use crate::report::ValidationReport;
use crate::scenario::{validate_scenario, Edge, StructuredScenario};
use crate::NodeId;

pub use export::{from_json, plot_series, to_csv, to_json};
pub use history::{delayed_state, History};
pub use noise::{gaussian_stream, GaussianStream};

/// States beyond this multiple of the largest baseline count as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("inputs failed validation: {}", summarize(.0))]
    Validation(ValidationReport),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Adjacency(#[from] AdjacencyError),
    #[error("node {node} diverged at step {step} (state {value})")]
    Divergence { node: NodeId, step: u32, value: f64 },
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
    #[error("{0}")]
    Format(String),
}

fn summarize(r: &ValidationReport) -> String {
    r.violations
        .iter()
        .map(|v| format!("{} at {}: {}", v.rule_id, v.location, v.detail))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub seed: u64,
    pub substeps: u32,
    pub clamp_nonnegative: bool,
    #[serde(default)]
    pub initial_values: BTreeMap<NodeId, f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            substeps: 10,
            clamp_nonnegative: true,
            initial_values: BTreeMap::new(),
        }
    }
}

impl SimulationConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub seed: u64,
    pub substeps: u32,
    pub scenario_id: Option<String>,
}

/// Sampled paths: `values[i][t]` is node `node_ids[i]` at step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectories {
    pub values: Vec<Vec<f64>>,
    pub seq_len: usize,
    pub node_ids: Vec<NodeId>,
    pub meta: TrajectoryMeta,
}

impl Trajectories {
    pub fn num_nodes(&self) -> usize {
        self.values.len()
    }

    pub fn series(&self, node: NodeId) -> Option<&[f64]> {
        self.node_ids
            .iter()
            .position(|&id| id == node)
            .map(|i| self.values[i].as_slice())
    }
}

/// Validate every input, then integrate all nodes.
pub fn simulate(
    s: &StructuredScenario,
    p: &SdeParameters,
    b: &BaseAdjacency,
    m: &TimeModulation,
    cfg: &SimulationConfig,
) -> Result<Trajectories, SimError> {
    let mut report = validate_scenario(s);
    report.merge(validate_params(p, s));
    report.merge(validate_modulation(m, s));
    report.merge(validate_base_adjacency(b, s));
    if !report.approved {
        return Err(SimError::Validation(report));
    }
    integrate(s, p, b, m, cfg)
}

/// Integrate all nodes without running the rule checks.
pub fn integrate(
    s: &StructuredScenario,
    p: &SdeParameters,
    b: &BaseAdjacency,
    m: &TimeModulation,
    cfg: &SimulationConfig,
) -> Result<Trajectories, SimError> {
    let all: Vec<NodeId> = (0..s.num_nodes()).collect();
    integrate_nodes(s, p, b, m, cfg, &all)
}

struct Incoming {
    from: usize,
    lag: u32,
    edge: Edge,
    base: f64,
}

/// Integrate only `nodes`, ignoring coupling from nodes outside the subset.
/// Each node keeps its own noise stream, so with zero coupling the result
/// matches the corresponding rows of a full run.
pub fn integrate_nodes(
    s: &StructuredScenario,
    p: &SdeParameters,
    b: &BaseAdjacency,
    m: &TimeModulation,
    cfg: &SimulationConfig,
    nodes: &[NodeId],
) -> Result<Trajectories, SimError> {
    if cfg.substeps == 0 {
        return Err(SimError::Inconsistent("substeps must be at least 1".into()));
    }
    if b.num_nodes() != s.num_nodes() {
        return Err(SimError::Inconsistent(format!(
            "base adjacency is {0}x{0} but the scenario has {1} nodes",
            b.num_nodes(),
            s.num_nodes()
        )));
    }
    for &id in nodes {
        if id >= s.num_nodes() {
            return Err(SimError::Params(ParamError::UnknownNode(id)));
        }
    }
    let n = nodes.len();
    let seq_len = s.seq_len;
    let period = s.drift_patterns.period();
    let wrap = |step: u32| period.map_or(step, |p| step % p);

    // resolved[step][i]
    let mut resolved: Vec<Vec<ResolvedParams>> = Vec::with_capacity(seq_len);
    for step in 0..seq_len as u32 {
        let row = nodes
            .iter()
            .map(|&id| resolve_node_params(p, s, id, step))
            .collect::<Result<Vec<_>, _>>()?;
        resolved.push(row);
    }

    let incoming: Vec<Vec<Incoming>> = nodes
        .iter()
        .map(|&target| {
            s.edges
                .iter()
                .filter(|e| e.target == target)
                .filter_map(|e| {
                    let from = nodes.iter().position(|&id| id == e.source)?;
                    Some(Incoming {
                        from,
                        lag: e.time_lag,
                        edge: e.edge(),
                        base: b.weight(e.edge()).unwrap_or(0.0),
                    })
                })
                .collect()
        })
        .collect();

    let max_baseline = resolved
        .iter()
        .flatten()
        .map(|rp| rp.baseline.abs())
        .fold(1.0_f64, f64::max);
    let bound = DIVERGENCE_FACTOR * max_baseline;

    let initial: Vec<f64> = nodes
        .iter()
        .enumerate()
        .map(|(i, id)| {
            cfg.initial_values
                .get(id)
                .copied()
                .unwrap_or_else(|| resolved.first().map_or(0.0, |r| r[i].baseline))
        })
        .collect();

    let mut streams: Vec<GaussianStream> = nodes.iter().map(|&id| gaussian_stream(cfg.seed, id)).collect();
    let mut history = History::new(&initial, cfg.substeps);
    let mut x = initial.clone();
    let mut values: Vec<Vec<f64>> = initial.iter().map(|&x0| vec![x0]).collect();
    let dt = 1.0 / cfg.substeps as f64;
    let sqrt_dt = dt.sqrt();
    let mut next = vec![0.0; n];

    for step in 0..seq_len.saturating_sub(1) {
        let rps = &resolved[step];
        let mod_step = wrap(step as u32);
        let weights: Vec<Vec<f64>> = incoming
            .iter()
            .map(|ins| ins.iter().map(|e| e.base * m.multiplier_at(e.edge, mod_step)).collect())
            .collect();
        for sub in 0..cfg.substeps {
            let k = step * cfg.substeps as usize + sub as usize;
            let t = k as f64 * dt;
            let t_drift = match period {
                Some(p) => t % p as f64,
                None => t,
            };
            for i in 0..n {
                let rp = &rps[i];
                let xi = x[i];
                let f = rp.drift.eval(xi, t_drift)?;
                let mut coupling = 0.0;
                for (e, w) in incoming[i].iter().zip(&weights[i]) {
                    coupling += w * (history.at_substep(e.from, k, e.lag) - xi);
                }
                let xi_draw = streams[i].draw();
                let noise = rp.sigma * rp.diffusion.eval(xi) * sqrt_dt * xi_draw;
                let mut xn = xi + (f + rp.lambda * coupling) * dt + noise;
                if cfg.clamp_nonnegative && xn < 0.0 {
                    xn = 0.0;
                }
                if !xn.is_finite() || xn.abs() > bound {
                    return Err(SimError::Divergence {
                        node: nodes[i],
                        step: step as u32,
                        value: xn,
                    });
                }
                next[i] = xn;
            }
            for i in 0..n {
                x[i] = next[i];
                history.push(i, x[i]);
            }
        }
        for i in 0..n {
            values[i].push(x[i]);
        }
    }

    Ok(Trajectories {
        values,
        seq_len,
        node_ids: nodes.to_vec(),
        meta: TrajectoryMeta {
            seed: cfg.seed,
            substeps: cfg.substeps,
            scenario_id: s.task_id.clone(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjacency::parse_modulation;
    use crate::params::parse_params;
    use crate::scenario::fixtures::{showcase, SHOWCASE_MODULATION, SHOWCASE_PARAMS};
    use crate::scenario::parse_scenario;

    fn showcase_inputs() -> (StructuredScenario, SdeParameters, BaseAdjacency, TimeModulation) {
        let s = showcase();
        let d = parse_modulation(SHOWCASE_MODULATION).unwrap();
        (s.clone(), parse_params(SHOWCASE_PARAMS).unwrap(), d.base_for(&s), d.time_modulation)
    }

    fn single_node(span: &str, pattern_behavior: &str, params: &str) -> (StructuredScenario, SdeParameters) {
        let scenario = format!(
            r#"{{"time_span": "{span}", "sampling_frequency": "1 hour", "variable": "x",
                "nodes": [{{"id": 0, "type": "demand_source", "name": "a", "description": ""}}],
                "drift_patterns": {{"nodes": [{{"id": 0, "patterns": [
                    {{"time_range": [0, 1], "behavior": "{pattern_behavior}", "baseline": 100, "amplitude": 50, "peak": 0}}
                ]}}]}}}}"#
        );
        (parse_scenario(&scenario).unwrap(), parse_params(params).unwrap())
    }

    #[test]
    fn showcase_shape_and_determinism() {
        let (s, p, b, m) = showcase_inputs();
        let cfg = SimulationConfig::with_seed(7);
        let a = simulate(&s, &p, &b, &m, &cfg).unwrap();
        assert_eq!(a.num_nodes(), 3);
        assert!(a.values.iter().all(|r| r.len() == 48));
        assert!(a.values.iter().flatten().all(|v| v.is_finite() && *v >= 0.0));
        let again = simulate(&s, &p, &b, &m, &cfg).unwrap();
        assert_eq!(a, again);
        let other = simulate(&s, &p, &b, &m, &SimulationConfig::with_seed(8)).unwrap();
        assert_ne!(a.values, other.values);
    }

    #[test]
    fn simulate_rejects_invalid_inputs() {
        let (mut s, p, b, m) = showcase_inputs();
        s.drift_patterns.per_node[1].patterns[0].amplitude = 300.0;
        assert!(matches!(
            simulate(&s, &p, &b, &m, &SimulationConfig::default()),
            Err(SimError::Validation(r)) if r.has_rule("TYPE-RULES")
        ));
    }

    #[test]
    fn fixed_point_without_noise_or_coupling() {
        let (s, _, b, m) = showcase_inputs();
        let p = parse_params(
            r#"{"global_defaults": {"drift_type": "mean_reverting", "kappa": 0.25, "lambda": 0, "sigma": 0},
                "node_overrides": {"0": {"baseline": 100}, "1": {"baseline": 120}, "2": {"baseline": 110}}}"#,
        )
        .unwrap();
        let tr = integrate(&s, &p, &b, &m, &SimulationConfig::default()).unwrap();
        for (row, base) in tr.values.iter().zip([100.0, 120.0, 110.0]) {
            assert!(row.iter().all(|&v| v == base));
        }
    }

    #[test]
    fn ou_converges() {
        let (s, p) = single_node(
            "48 hours",
            "mean_reverting",
            r#"{"global_defaults": {"drift_type": "mean_reverting", "kappa": 0.25, "baseline": 100, "lambda": 1, "sigma": 0}}"#,
        );
        let cfg = SimulationConfig {
            initial_values: [(0, 150.0)].into(),
            ..SimulationConfig::default()
        };
        let tr = integrate(&s, &p, &BaseAdjacency::uniform(&s, 0.1), &TimeModulation::default(), &cfg).unwrap();
        // exact Euler decay factor per step is (1 - 0.025)^10
        let oracle = 50.0 * (1.0f64 - 0.025).powi(10 * 47);
        assert!((tr.values[0][47] - 100.0 - oracle).abs() < 1e-9);
        assert!((tr.values[0][47] - 100.0).abs() < 1.0);
    }

    #[test]
    fn divergence_is_reported() {
        let (s, p) = single_node(
            "48 hours",
            "constant",
            r#"{"global_defaults": {"drift_type": "constant", "alpha_drift": 1e9, "baseline": 1, "lambda": 1, "sigma": 0}}"#,
        );
        let err = integrate(&s, &p, &BaseAdjacency::uniform(&s, 0.1), &TimeModulation::default(), &SimulationConfig::default())
            .unwrap_err();
        assert!(matches!(err, SimError::Divergence { node: 0, step: 0, .. }));
    }

    #[test]
    fn subset_runs_keep_streams() {
        let (s, mut p, b, m) = showcase_inputs();
        p.global_defaults.lambda = Some(0.0);
        for g in p.group_params.values_mut() {
            g.lambda = Some(0.0);
        }
        for o in p.node_overrides.values_mut() {
            o.extra.lambda = None;
            for d in o.drift_patterns.iter_mut().flatten() {
                d.params.lambda = None;
            }
        }
        let cfg = SimulationConfig::with_seed(11);
        let full = integrate(&s, &p, &b, &m, &cfg).unwrap();
        for i in 0..3 {
            let solo = integrate_nodes(&s, &p, &b, &m, &cfg, &[i]).unwrap();
            assert_eq!(solo.values[0], full.values[i]);
        }
    }
}
