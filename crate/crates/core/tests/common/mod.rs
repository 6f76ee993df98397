//! Fixtures and oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde_json::{json, Map, Value};

use stsynth::adjacency::{modulation_from_value, ModulationDocument};
use stsynth::params::params_from_value;
use stsynth::qa::{AlignQuestion, Category};
use stsynth::scenario::scenario_from_value;
use stsynth::{SdeParameters, StructuredScenario};

pub const SCENARIO_JSON: &str = include_str!("../../fixtures/showcase/scenario.json");
pub const PARAMS_JSON: &str = include_str!("../../fixtures/showcase/params.json");
pub const MODULATION_JSON: &str = include_str!("../../fixtures/showcase/modulation.json");

pub fn fixture_dir(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn value(text: &str) -> Value {
    serde_json::from_str(text).expect("fixture is JSON")
}

/// Scenario, parameter and modulation documents as JSON values.
#[derive(Debug, Clone)]
pub struct Case {
    pub scenario: Value,
    pub params: Value,
    pub modulation: Value,
}

impl Case {
    pub fn showcase() -> Self {
        Self {
            scenario: value(SCENARIO_JSON),
            params: value(PARAMS_JSON),
            modulation: value(MODULATION_JSON),
        }
    }

    pub fn parse(&self) -> (StructuredScenario, SdeParameters, ModulationDocument) {
        (
            scenario_from_value(&self.scenario).expect("scenario parses"),
            params_from_value(&self.params).expect("params parse"),
            modulation_from_value(&self.modulation).expect("modulation parses"),
        )
    }
}

fn edge_key(u: usize, v: usize) -> String {
    format!("{u}->{v}")
}

/// A random scenario that satisfies every rule: one or two demand sources,
/// a spanning tree from the sources plus extra edges, sinusoidal day peaks,
/// and modulation only on source-to-relay edges.
pub fn random_case(rng: &mut ChaCha8Rng, n: usize, index: usize) -> Case {
    const T: u32 = 48;
    let n_src = if n >= 5 && rng.random_bool(0.5) { 2 } else { 1 };
    let mut edges: Vec<(usize, usize, u32)> = Vec::new();
    let has = |edges: &Vec<(usize, usize, u32)>, u: usize, v: usize| edges.iter().any(|e| e.0 == u && e.1 == v);
    for v in n_src..n {
        // parents are node 0 or earlier relays, so every relay hangs off node 0
        let parent = match rng.random_range(n_src - 1..v) {
            k if k < n_src => 0,
            k => k,
        };
        edges.push((parent, v, rng.random_range(1..=3)));
    }
    for s in 1..n_src {
        let v = rng.random_range(n_src..n);
        if !has(&edges, s, v) {
            edges.push((s, v, rng.random_range(1..=3)));
        }
    }
    for _ in 0..rng.random_range(0..=n) {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if u != v && !has(&edges, u, v) {
            edges.push((u, v, rng.random_range(1..=3)));
        }
    }

    let mut nodes = Vec::new();
    let mut drift_nodes = Vec::new();
    let mut overrides = Map::new();
    for id in 0..n {
        let source = id < n_src;
        let baseline = rng.random_range(80..=120) as f64;
        let kappa = rng.random_range(0.05..0.45);
        let sigma = rng.random_range(0.1..2.0);
        nodes.push(json!({
            "id": id,
            "type": if source { "demand_source" } else { "propagation" },
            "name": format!("node {id}"),
            "description": "",
        }));
        if source {
            let a = rng.random_range(6..16u32);
            let b = a + rng.random_range(10..20u32);
            let peak = rng.random_range(a..b);
            let amplitude = rng.random_range(50.0..200.0f64).round();
            let omega = std::f64::consts::PI / (b - a) as f64;
            drift_nodes.push(json!({
                "id": id,
                "patterns": [
                    {"time_range": [0, a], "behavior": "mean_reverting", "baseline": baseline, "amplitude": 0, "peak": null},
                    {"time_range": [a, b], "behavior": "sinusoidal", "baseline": baseline, "amplitude": amplitude, "peak": peak},
                    {"time_range": [b, T], "behavior": "mean_reverting", "baseline": baseline, "amplitude": 0, "peak": null},
                ],
            }));
            overrides.insert(id.to_string(), json!({
                "group": "demand_sources",
                "drift_patterns": [
                    {"time_range": [0, a], "drift_type": "mean_reverting", "baseline": baseline, "kappa": kappa, "sigma": sigma},
                    {"time_range": [a, b], "drift_type": "sinusoidal", "baseline": baseline, "A": amplitude,
                     "omega": omega, "phi": -omega * a as f64, "kappa": kappa, "sigma": sigma},
                    {"time_range": [b, T], "drift_type": "mean_reverting", "baseline": baseline, "kappa": kappa, "sigma": sigma},
                ],
            }));
        } else {
            drift_nodes.push(json!({
                "id": id,
                "patterns": [{"time_range": [0, T], "behavior": "mean_reverting", "baseline": baseline, "amplitude": 0, "peak": null}],
            }));
            // some relays rely on the group layer alone
            if rng.random_bool(0.5) {
                let mut o = json!({
                    "drift_patterns": [
                        {"time_range": [0, T], "drift_type": "mean_reverting", "baseline": baseline, "kappa": kappa, "sigma": sigma}
                    ],
                });
                if rng.random_bool(0.5) {
                    o["group"] = json!("propagation_nodes");
                    o["lambda"] = json!(rng.random_range(0.8..1.5));
                }
                overrides.insert(id.to_string(), o);
            }
        }
    }

    let candidates: Vec<(usize, usize)> = edges.iter().filter(|e| e.0 < n_src && e.1 >= n_src).map(|e| (e.0, e.1)).collect();
    let mut specs = Vec::new();
    let mut time_patterns = Vec::new();
    let mut cursor = rng.random_range(0..10u32);
    for _ in 0..rng.random_range(1..=3) {
        let start = cursor;
        let end = start + rng.random_range(2..8u32);
        if end > T {
            break;
        }
        cursor = end + rng.random_range(1..6u32);
        let strong = rng.random_bool(0.5);
        let mut chosen: Vec<(usize, usize)> = Vec::new();
        for _ in 0..rng.random_range(1..=2) {
            let e = candidates[rng.random_range(0..candidates.len())];
            if !chosen.contains(&e) {
                chosen.push(e);
            }
        }
        let mut mods = Map::new();
        for &(u, v) in &chosen {
            let multiplier = if strong { rng.random_range(10.5..19.5f64) } else { rng.random_range(5.5..9.5f64) };
            mods.insert(edge_key(u, v), json!({"multiplier": (multiplier * 100.0).round() / 100.0, "description": ""}));
        }
        specs.push(json!({
            "time_period": format!("{start}-{end}"),
            "effect": if strong { "strong" } else { "moderate" },
            "applies_to": chosen.iter().map(|&(u, v)| edge_key(u, v)).collect::<Vec<_>>(),
            "description": "",
        }));
        time_patterns.push(json!({"time_range": [start, end], "description": "", "edge_modulations": mods}));
    }

    let scenario = json!({
        "time_span": "1 day",
        "sampling_frequency": "30 minutes",
        "seq_len": T,
        "variable": "load",
        "nodes": nodes,
        "edges": edges.iter().map(|&(u, v, lag)| json!({"source": u, "target": v, "relationship": "", "time_lag": lag})).collect::<Vec<_>>(),
        "drift_patterns": {"repeat": true, "repeat_period": T, "nodes": drift_nodes},
        "adjacency_modulation": {"patterns": specs},
        "task_id": format!("random_{index:03}"),
    });
    let params = json!({
        "global_defaults": {
            "drift_type": "mean_reverting", "node_type": "demand_source", "kappa": 0.2,
            "baseline": 100.0, "lambda": 1.0, "sigma": 0.5, "diffusion_shape": "constant",
        },
        "group_params": {
            "demand_sources": {
                "node_type": "demand_source", "drift_type": "sinusoidal", "baseline": 100.0, "A": 30.0,
                "omega": 0.1309, "phi": 0.0, "kappa": 0.25, "lambda": 0.9, "sigma": 0.5,
            },
            "propagation_nodes": {
                "node_type": "propagation", "drift_type": "mean_reverting", "baseline": 100.0,
                "kappa": 0.25, "lambda": 0.8, "sigma": 0.3,
            },
        },
        "node_overrides": overrides,
    });
    let modulation = if rng.random_bool(0.5) {
        let mut base = vec![vec![0.0; n]; n];
        for &(u, v, _) in &edges {
            base[u][v] = (rng.random_range(0.05..0.3f64) * 100.0).round() / 100.0;
        }
        json!({"time_modulation": {"patterns": time_patterns}, "base_adjacency": base})
    } else {
        json!({"time_modulation": {"patterns": time_patterns}})
    };
    Case { scenario, params, modulation }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A single node with `pattern` over the whole horizon and `params` as its
/// only override layer.
pub fn single_node_case(seq_len: u32, node_type: &str, behavior: &str, baseline: f64, params: Value) -> Case {
    let scenario = json!({
        "time_span": format!("{seq_len} hours"),
        "sampling_frequency": "1 hour",
        "seq_len": seq_len,
        "variable": "level",
        "nodes": [{"id": 0, "type": node_type, "name": "n0", "description": ""}],
        "edges": [],
        "drift_patterns": {"repeat": false, "nodes": [{"id": 0, "patterns": [
            {"time_range": [0, seq_len], "behavior": behavior, "baseline": baseline, "amplitude": 0, "peak": null}
        ]}]},
    });
    let params = json!({"global_defaults": params, "group_params": {}, "node_overrides": {}});
    Case { scenario, params, modulation: json!({"time_modulation": {"patterns": []}}) }
}

/// Two nodes, `0 -> 1` with lag `tau`: node 0 sits at its baseline and
/// swells once in a half-sine hump over steps 40..52; node 1 is a noiseless
/// relay strongly coupled to node 0.
pub fn impulse_case(tau: u32) -> Case {
    let omega = std::f64::consts::PI / 12.0;
    let scenario = json!({
        "time_span": "4 days",
        "sampling_frequency": "1 hour",
        "seq_len": 96,
        "variable": "flow",
        "nodes": [
            {"id": 0, "type": "demand_source", "name": "source", "description": ""},
            {"id": 1, "type": "propagation", "name": "relay", "description": ""}
        ],
        "edges": [{"source": 0, "target": 1, "relationship": "", "time_lag": tau}],
        "drift_patterns": {"repeat": false, "nodes": [
            {"id": 0, "patterns": [
                {"time_range": [0, 40], "behavior": "mean_reverting", "baseline": 100, "amplitude": 0, "peak": null},
                {"time_range": [40, 52], "behavior": "sinusoidal", "baseline": 100, "amplitude": 50, "peak": 46},
                {"time_range": [52, 96], "behavior": "mean_reverting", "baseline": 100, "amplitude": 0, "peak": null}
            ]},
            {"id": 1, "patterns": [
                {"time_range": [0, 96], "behavior": "mean_reverting", "baseline": 100, "amplitude": 0, "peak": null}
            ]}
        ]},
    });
    let params = json!({
        "global_defaults": {"drift_type": "mean_reverting", "baseline": 100.0, "kappa": 0.45, "lambda": 1.0, "sigma": 0.0},
        "group_params": {},
        "node_overrides": {
            "0": {"drift_patterns": [
                {"time_range": [0, 40], "drift_type": "mean_reverting"},
                {"time_range": [40, 52], "drift_type": "sinusoidal", "A": 50.0, "omega": omega, "phi": -omega * 40.0},
                {"time_range": [52, 96], "drift_type": "mean_reverting"}
            ]},
            "1": {"kappa": 0.05}
        }
    });
    let modulation = json!({"time_modulation": {"patterns": []}, "base_adjacency": [[0.0, 2.0], [0.0, 0.0]]});
    Case { scenario, params, modulation }
}

/// Biased sample cross-correlation of `x` leading `y` by `lag` steps.
pub fn cross_correlation(x: &[f64], y: &[f64], lag: usize) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sx = (x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / n).sqrt();
    let sy = (y.iter().map(|v| (v - my).powi(2)).sum::<f64>() / n).sqrt();
    let cov: f64 = (0..x.len() - lag).map(|t| (x[t] - mx) * (y[t + lag] - my)).sum();
    cov / (n * sx * sy)
}

/// Mutate a copy of the showcase scenario document.
pub fn mutated_scenario(f: impl FnOnce(&mut Value)) -> Value {
    let mut v = value(SCENARIO_JSON);
    f(&mut v);
    v
}

// ---------------------------------------------------------------------------
// QA lookup oracle, reading the raw JSON documents only.

fn layer_value<'a>(layers: &[&'a Value], key: &str) -> Option<&'a Value> {
    layers.iter().find_map(|l| l.get(key).filter(|v| !v.is_null()))
}

fn node_type_of(scenario: &Value, node: usize) -> String {
    scenario["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|n| n["id"] == json!(node))
        .map(|n| n["type"].as_str().unwrap().to_string())
        .unwrap()
}

/// Parameter layers for `node` in `range`, most specific first.
fn param_layers(case: &Case, node: usize, range: (u64, u64)) -> Vec<&Value> {
    let p = &case.params;
    let mut layers = Vec::new();
    let ov = &p["node_overrides"][node.to_string()];
    if let Some(patterns) = ov["drift_patterns"].as_array() {
        if let Some(pat) = patterns.iter().find(|d| d["time_range"][0] == json!(range.0)) {
            layers.push(pat);
        }
    }
    if ov.is_object() {
        layers.push(ov);
    }
    let ty = node_type_of(&case.scenario, node);
    let group = ov["group"].as_str().map(str::to_string).or_else(|| {
        p["group_params"]
            .as_object()
            .and_then(|g| g.iter().find(|(_, v)| v["node_type"] == json!(ty)).map(|(k, _)| k.clone()))
    });
    if let Some(g) = group {
        layers.push(&p["group_params"][g]);
    }
    layers.push(&p["global_defaults"]);
    layers
}

fn close(answer: &str, expected: f64) -> bool {
    match answer.parse::<f64>() {
        Ok(a) => (a - expected).abs() <= 5e-4 * expected.abs().max(1e-12),
        Err(_) => false,
    }
}

fn has_edge(case: &Case, u: usize, v: usize) -> bool {
    case.scenario["edges"].as_array().unwrap().iter().any(|e| e["source"] == json!(u) && e["target"] == json!(v))
}

fn successors(case: &Case, u: usize) -> Vec<usize> {
    case.scenario["edges"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["source"] == json!(u))
        .map(|e| e["target"].as_u64().unwrap() as usize)
        .collect()
}

/// Path of two or more hops whose intermediate nodes avoid both endpoints.
fn indirect(case: &Case, src: usize, tgt: usize) -> bool {
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<usize> = successors(case, src).into_iter().filter(|&u| u != src && u != tgt).collect();
    while let Some(u) = queue.pop_front() {
        if !seen.insert(u) {
            continue;
        }
        for w in successors(case, u) {
            if w == tgt {
                return true;
            }
            if w != src {
                queue.push_back(w);
            }
        }
    }
    false
}

fn modulation_multiplier(case: &Case, u: usize, v: usize, range: (u64, u64)) -> Option<f64> {
    case.modulation["time_modulation"]["patterns"].as_array()?.iter().find_map(|p| {
        (p["time_range"][0] == json!(range.0) && p["time_range"][1] == json!(range.1))
            .then(|| p["edge_modulations"][edge_key(u, v)]["multiplier"].as_f64())
            .flatten()
    })
}

fn base_weight(case: &Case, u: usize, v: usize) -> f64 {
    match case.modulation.get("base_adjacency") {
        Some(b) if !b.is_null() => b[u][v].as_f64().unwrap(),
        _ if has_edge(case, u, v) => 0.1,
        _ => 0.0,
    }
}

fn cached_regex(pattern: &str) -> &'static Regex {
    static CACHE: OnceLock<Mutex<BTreeMap<String, &'static Regex>>> = OnceLock::new();
    let mut cache = CACHE.get_or_init(Default::default).lock().unwrap();
    cache
        .entry(pattern.to_string())
        .or_insert_with(|| Box::leak(Box::new(Regex::new(pattern).unwrap())))
}

/// Check one generated question against the documents. Returns a
/// description of the mismatch, if any.
pub fn check_answer(case: &Case, q: &AlignQuestion) -> Result<(), String> {
    let nums = |re: &str| -> Vec<u64> {
        let caps = cached_regex(re).captures(&q.question).unwrap_or_else(|| panic!("unparsed question `{}`", q.question));
        caps.iter().skip(1).map(|c| c.unwrap().as_str().parse().unwrap()).collect()
    };
    let ok = match (q.category, q.template_key) {
        (Category::Temporal, key) => {
            let n = nums(r"node (\d+) during the time range \[(\d+), (\d+)\)");
            let layers = param_layers(case, n[0] as usize, (n[1], n[2]));
            let json_key = match key {
                "sinusoidal_A" => "A",
                "sinusoidal_omega" => "omega",
                "sinusoidal_phi" => "phi",
                other => other,
            };
            let expected = layer_value(&layers, json_key).ok_or_else(|| format!("{key} absent for `{}`", q.question))?;
            match expected {
                Value::String(s) => &q.answer == s,
                Value::Number(x) => close(&q.answer, x.as_f64().unwrap()),
                other => return Err(format!("unexpected value {other}")),
            }
        }
        (Category::Spatial, "edge_relationship") => {
            let n = nums(r"from node (\d+) to node (\d+)");
            q.answer == if has_edge(case, n[0] as usize, n[1] as usize) { "Yes" } else { "No" }
        }
        (Category::Spatial, "indirect_connection") => {
            let n = nums(r"from node (\d+) to node (\d+)");
            q.answer == if indirect(case, n[0] as usize, n[1] as usize) { "Yes" } else { "No" }
        }
        (Category::SpatialTemporal, "node_type") => {
            let n = nums(r"type of node (\d+)");
            q.answer == node_type_of(&case.scenario, n[0] as usize)
        }
        (Category::SpatialTemporal, "edge_lag") => {
            let n = nums(r"between node (\d+) and node (\d+)");
            let lag = case.scenario["edges"]
                .as_array()
                .unwrap()
                .iter()
                .find(|e| e["source"] == json!(n[0]) && e["target"] == json!(n[1]))
                .map(|e| e["time_lag"].as_u64().unwrap_or(0))
                .ok_or("lag question on a missing edge")?;
            q.answer == lag.to_string()
        }
        (Category::SpatialTemporal, key @ ("edge_modulation" | "effective_coupling_strength")) => {
            let n = nums(r"edge (\d+)->(\d+) during the time range \[(\d+), (\d+)\)");
            let (u, v) = (n[0] as usize, n[1] as usize);
            let m = modulation_multiplier(case, u, v, (n[2], n[3])).ok_or("no such modulation unit")?;
            let expected = if key == "edge_modulation" { m } else { m * base_weight(case, u, v) };
            close(&q.answer, expected)
        }
        (c, k) => return Err(format!("unknown question kind {c:?}/{k}")),
    };
    if ok {
        Ok(())
    } else {
        Err(format!("`{}` answered `{}`", q.question, q.answer))
    }
}

/// Expected question counts per category from the raw documents.
pub fn expected_counts(case: &Case) -> BTreeMap<&'static str, usize> {
    let s = &case.scenario;
    let n = s["nodes"].as_array().unwrap().len();
    let e = s["edges"].as_array().unwrap().len();
    let m: usize = case.modulation["time_modulation"]["patterns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["edge_modulations"].as_object().map_or(0, |o| o.len()))
        .sum();
    let cycle = s["drift_patterns"]["repeat_period"].as_u64().or(s["seq_len"].as_u64()).unwrap();
    let mut temporal = 0;
    for node in 0..n {
        let ov = &case.params["node_overrides"][node.to_string()];
        let windows: Vec<(u64, u64)> = match ov["drift_patterns"].as_array() {
            Some(ps) if !ps.is_empty() => ps
                .iter()
                .map(|d| (d["time_range"][0].as_u64().unwrap(), d["time_range"][1].as_u64().unwrap()))
                .collect(),
            _ => vec![(0, cycle)],
        };
        for w in windows {
            let layers = param_layers(case, node, w);
            let present = |k: &str| layer_value(&layers, k).is_some();
            temporal += ["drift_type", "baseline", "kappa", "sigma", "lambda", "diffusion_shape"]
                .iter()
                .filter(|k| present(k))
                .count();
            if layer_value(&layers, "drift_type") == Some(&json!("sinusoidal")) {
                temporal += ["A", "omega", "phi"].iter().filter(|k| present(k)).count();
            }
        }
    }
    BTreeMap::from([("temporal", temporal), ("spatial", 2 * n * n), ("spatial_temporal", n + e + 2 * m)])
}
