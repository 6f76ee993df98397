//! Range and consistency rules for parameter documents.

use std::collections::BTreeSet;

use super::resolve::{active_pattern, finish, merged_layers};
use super::{Drift, DriftType, ParamSet, SdeParameters};
use crate::report::{rules, ValidationReport};
use crate::scenario::{NodeType, StructuredScenario};

/// Check `p` against the numeric bounds and against the scenario it drives.
pub fn validate_params(p: &SdeParameters, s: &StructuredScenario) -> ValidationReport {
    let mut r = ValidationReport::approved();

    check_layer(&p.global_defaults, "global_defaults", &mut r);
    for (name, g) in &p.group_params {
        check_layer(g, &format!("group_params.{name}"), &mut r);
    }
    for (id, o) in &p.node_overrides {
        let path = format!("node_overrides.{id}");
        if *id >= s.num_nodes() {
            r.error(
                rules::PARAM_REFERENCE,
                path.clone(),
                format!("override for node {id}, but the scenario has {} nodes", s.num_nodes()),
            );
        }
        if let Some(g) = &o.group {
            if !p.group_params.contains_key(g) {
                r.error(rules::PARAM_REFERENCE, format!("{path}.group"), format!("group `{g}` is not defined"));
            }
        }
        check_layer(&o.extra, &path, &mut r);
        for (i, dp) in o.patterns().iter().enumerate() {
            check_layer(&dp.params, &format!("{path}.drift_patterns[{i}]"), &mut r);
        }
    }

    for node in &s.nodes {
        let patterns = p.node_overrides.get(&node.id).map(|o| o.patterns()).unwrap_or(&[]);
        let mut steps: BTreeSet<u32> = patterns.iter().map(|d| d.time_range.start).collect();
        steps.insert(0);
        let mut seen = BTreeSet::new();
        for step in steps {
            let pattern = active_pattern(patterns, step);
            if !seen.insert(pattern) {
                continue;
            }
            let loc = match pattern {
                Some(i) => format!("node_overrides.{}.drift_patterns[{i}]", node.id),
                None => format!("node {}", node.id),
            };
            let merged = merged_layers(p, node.id, node.node_type, pattern);
            let rp = match finish(node.id, step, node.node_type, pattern, merged) {
                Ok(rp) => rp,
                Err(e) => {
                    r.error(rules::RESOLUTION, loc, e.to_string());
                    continue;
                }
            };
            match rp.drift {
                Drift::Sinusoidal { a, omega, .. } if a <= 0.0 || omega <= 0.0 => r.error(
                    rules::SINUSOIDAL_SHAPE,
                    loc.clone(),
                    format!("sinusoidal drift on node {} needs A > 0 and omega > 0, got A = {a}, omega = {omega}", node.id),
                ),
                Drift::Logistic { baseline: 0.0, .. } => r.error(
                    rules::RESOLUTION,
                    loc.clone(),
                    format!("logistic drift on node {} has carrying capacity 0", node.id),
                ),
                _ => {}
            }
            if node.node_type == NodeType::Propagation
                && matches!(rp.drift_type(), DriftType::Sinusoidal | DriftType::Constant)
            {
                r.error(
                    rules::TYPE_DRIFT,
                    loc.clone(),
                    format!(
                        "propagation node {} is given {} drift, which only demand_source nodes may use",
                        node.id,
                        rp.drift_type().as_str()
                    ),
                );
            }
            if rp.sigma < 0.0 {
                r.error(rules::SIGMA_PLAUSIBILITY, loc.clone(), format!("sigma {} is negative", rp.sigma));
            } else if rp.sigma >= 0.05 * rp.baseline.abs() {
                r.warn(
                    rules::SIGMA_PLAUSIBILITY,
                    loc,
                    format!(
                        "sigma {} is at least 5% of baseline {} on node {}",
                        rp.sigma, rp.baseline, node.id
                    ),
                );
            }
        }
    }
    r
}

fn check_layer(ps: &ParamSet, path: &str, r: &mut ValidationReport) {
    if let Some(k) = ps.kappa {
        if !(k > 0.01 && k < 0.5) {
            r.error(rules::KAPPA_RANGE, format!("{path}.kappa"), format!("kappa {k} is outside (0.01, 0.5)"));
        }
    }
    if let Some(l) = ps.lambda {
        if !(0.8..=1.5).contains(&l) {
            r.error(rules::LAMBDA_RANGE, format!("{path}.lambda"), format!("lambda {l} is outside [0.8, 1.5]"));
        }
    }
    if let Some(rate) = ps.r {
        if !(rate > 0.0 && rate < 0.1) {
            r.error(rules::LOGISTIC_RATE, format!("{path}.r"), format!("logistic rate {rate} is outside (0, 0.1)"));
        }
    }
    if let Some(a) = ps.diffusion_alpha {
        if a < 0.0 {
            r.error(
                rules::DIFFUSION_ALPHA,
                format!("{path}.diffusion_alpha"),
                format!("diffusion_alpha {a} is negative"),
            );
        } else if a > 1.0 {
            r.warn(
                rules::DIFFUSION_ALPHA,
                format!("{path}.diffusion_alpha"),
                format!("diffusion_alpha {a} exceeds 1"),
            );
        }
    }
}
