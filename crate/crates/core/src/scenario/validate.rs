//! Deterministic consistency rules for structured scenarios.

use super::graph::{reachable, undirected_connected};
use super::{Behavior, NodeType, StructuredScenario};
use crate::report::{rules, ValidationReport};

/// Run every scenario rule. Violations are data; this never fails.
pub fn validate_scenario(s: &StructuredScenario) -> ValidationReport {
    let mut r = ValidationReport::approved();
    check_timing(s, &mut r);
    check_edge_consistency(s, &mut r);
    check_source_out(s, &mut r);
    check_connected(s, &mut r);
    check_baseline_magnitude(s, &mut r);
    check_type_rules(s, &mut r);
    check_coverage(s, &mut r);
    r
}

fn check_timing(s: &StructuredScenario, r: &mut ValidationReport) {
    let specs = &s.adjacency_modulation;
    for (i, up_spec) in specs.iter().enumerate() {
        for up in &up_spec.applies_to {
            let Some(lag) = s.edge(*up).map(|e| e.time_lag) else {
                continue;
            };
            let arrival = up_spec.time_period.start + lag;
            for (j, down_spec) in specs.iter().enumerate() {
                if i == j {
                    continue;
                }
                let w = down_spec.time_period;
                let related = w.start < up_spec.time_period.end + lag && w.end > up_spec.time_period.start;
                if !related {
                    continue;
                }
                for down in &down_spec.applies_to {
                    if down.source != up.target || down.target == up.source {
                        continue;
                    }
                    if w.start < arrival {
                        r.error(
                            rules::TIMING,
                            format!("adjacency_modulation.patterns[{j}]"),
                            format!(
                                "window on {down} starts at {} but the event feeding it via {up} starts at {} and arrives at {} + {lag} = {arrival}",
                                w.start, up_spec.time_period.start, up_spec.time_period.start
                            ),
                        );
                    }
                }
            }
        }
    }
}

fn check_edge_consistency(s: &StructuredScenario, r: &mut ValidationReport) {
    for (k, nd) in s.drift_patterns.per_node.iter().enumerate() {
        for (v, note) in nd.propagated_variations.iter().enumerate() {
            let Some(src) = note.source else { continue };
            let loc = format!("drift_patterns.nodes[{k}].propagated_variations[{v}]");
            if src >= s.num_nodes() {
                r.error(
                    rules::EDGE_CONSISTENCY,
                    loc,
                    format!("variation on node {} names source node {src}, which does not exist", nd.id),
                );
            } else if src == nd.id || !reachable(s, src, nd.id).unwrap_or(false) {
                r.error(
                    rules::EDGE_CONSISTENCY,
                    loc,
                    format!("node {} receives a variation from node {src} but no directed edge path leads there", nd.id),
                );
            }
        }
    }
    for (k, m) in s.adjacency_modulation.iter().enumerate() {
        for e in &m.applies_to {
            if !s.has_edge(*e) {
                r.error(
                    rules::EDGE_CONSISTENCY,
                    format!("adjacency_modulation.patterns[{k}].applies_to"),
                    format!("modulated edge {e} is not declared in edges"),
                );
            }
        }
    }
}

fn check_source_out(s: &StructuredScenario, r: &mut ValidationReport) {
    for id in s.demand_sources() {
        if !s.edges.iter().any(|e| e.source == id) {
            r.error(
                rules::SOURCE_OUT,
                format!("nodes[{id}]"),
                format!("demand_source node {id} has no outgoing edge"),
            );
        }
    }
}

fn check_connected(s: &StructuredScenario, r: &mut ValidationReport) {
    let sources: Vec<_> = s.demand_sources().collect();
    for node in &s.nodes {
        if node.node_type == NodeType::DemandSource {
            continue;
        }
        let fed = sources
            .iter()
            .any(|&src| reachable(s, src, node.id).unwrap_or(false));
        if !fed {
            r.error(
                rules::CONNECTED,
                format!("nodes[{}]", node.id),
                format!("node {} is not reachable from any demand_source node", node.id),
            );
        }
    }
    if !undirected_connected(s) {
        r.error(rules::CONNECTED, "edges", "the graph is not connected when edge directions are ignored");
    }
}

fn check_baseline_magnitude(s: &StructuredScenario, r: &mut ValidationReport) {
    let baselines = s
        .drift_patterns
        .per_node
        .iter()
        .flat_map(|n| n.patterns.iter().map(|p| p.baseline));
    let (lo, hi) = baselines.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| (lo.min(b), hi.max(b)));
    if lo.is_finite() && lo > 0.0 && hi / lo > 10.0 {
        r.error(
            rules::BASELINE_MAGNITUDE,
            "drift_patterns",
            format!("baselines span {lo} to {hi} (ratio {:.3} > 10)", hi / lo),
        );
    }
}

fn check_type_rules(s: &StructuredScenario, r: &mut ValidationReport) {
    let demand = s.demand_sources().count();
    if !(1..=2).contains(&demand) {
        r.error(
            rules::TYPE_RULES,
            "nodes",
            format!("scenario has {demand} demand_source nodes; expected 1 or 2"),
        );
    }
    for (k, nd) in s.drift_patterns.per_node.iter().enumerate() {
        let Some(node) = s.node(nd.id) else { continue };
        for (j, p) in nd.patterns.iter().enumerate() {
            let loc = format!("drift_patterns.nodes[{k}].patterns[{j}]");
            if node.node_type == NodeType::Propagation {
                if p.amplitude != 0.0 || p.peak.is_some() {
                    r.error(
                        rules::TYPE_RULES,
                        loc.clone(),
                        format!(
                            "propagation node {} has amplitude {} and peak {:?}; expected amplitude 0 and no peak",
                            nd.id, p.amplitude, p.peak
                        ),
                    );
                }
                if matches!(p.behavior, Behavior::Sinusoidal | Behavior::Constant) {
                    r.error(
                        rules::TYPE_RULES,
                        loc.clone(),
                        format!("propagation node {} cannot self-generate `{}` behavior", nd.id, p.behavior.as_str()),
                    );
                }
            }
            match (p.behavior, p.peak) {
                (Behavior::Sinusoidal, None) => r.error(
                    rules::TYPE_RULES,
                    loc.clone(),
                    format!("sinusoidal pattern on node {} has no peak", nd.id),
                ),
                (Behavior::Sinusoidal, Some(peak)) if peak < p.time_range.start || peak > p.time_range.end => r.error(
                    rules::TYPE_RULES,
                    loc.clone(),
                    format!("peak {peak} on node {} lies outside its window {}", nd.id, p.time_range),
                ),
                (Behavior::Sinusoidal, Some(_)) => {}
                (_, Some(peak)) => r.error(
                    rules::TYPE_RULES,
                    loc.clone(),
                    format!("non-sinusoidal pattern on node {} carries peak {peak}", nd.id),
                ),
                (_, None) => {}
            }
            if p.behavior == Behavior::Sinusoidal && p.amplitude <= 0.0 {
                r.error(
                    rules::TYPE_RULES,
                    loc,
                    format!("sinusoidal pattern on node {} needs amplitude > 0", nd.id),
                );
            }
        }
    }
    for id in s.demand_sources() {
        let peaks = s
            .drift_patterns
            .node(id)
            .map(|nd| nd.patterns.iter().filter(|p| p.behavior == Behavior::Sinusoidal).count())
            .unwrap_or(0);
        if peaks != 1 {
            r.error(
                rules::TYPE_RULES,
                format!("nodes[{id}]"),
                format!("demand_source node {id} has {peaks} sinusoidal peak patterns per cycle; expected exactly 1"),
            );
        }
    }
}

fn check_coverage(s: &StructuredScenario, r: &mut ValidationReport) {
    let Some(period) = s.drift_patterns.period() else { return };
    for (k, nd) in s.drift_patterns.per_node.iter().enumerate() {
        if nd.patterns.is_empty() {
            continue;
        }
        let loc = format!("drift_patterns.nodes[{k}].patterns");
        let mut ranges: Vec<_> = nd.patterns.iter().map(|p| p.time_range).collect();
        ranges.sort();
        if ranges[0].start != 0 {
            r.error(
                rules::COVERAGE,
                loc.clone(),
                format!("node {} patterns start at {} instead of 0", nd.id, ranges[0].start),
            );
        }
        for w in ranges.windows(2) {
            let (prev, next) = (w[0], w[1]);
            if next.start < prev.end {
                r.error(
                    rules::COVERAGE,
                    loc.clone(),
                    format!("node {} windows {prev} and {next} overlap", nd.id),
                );
            } else if next.start > prev.end + 1 {
                r.error(
                    rules::COVERAGE,
                    loc.clone(),
                    format!("node {} leaves a gap between {prev} and {next}", nd.id),
                );
            }
        }
        let last = ranges[ranges.len() - 1].end;
        if last + 1 < period {
            r.error(
                rules::COVERAGE,
                loc,
                format!("node {} patterns end at {last}, short of repeat_period {period}", nd.id),
            );
        }
    }
}
