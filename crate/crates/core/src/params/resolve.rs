//! Hierarchy resolution and the drift / diffusion terms.

use super::{DiffusionShape, DriftType, ParamError, ParamSet, SdeParameters};
use crate::scenario::{NodeType, StructuredScenario};
use crate::NodeId;

/// Drift law with exactly the parameters it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drift {
    MeanReverting { kappa: f64, baseline: f64 },
    Sinusoidal { kappa: f64, baseline: f64, a: f64, omega: f64, phi: f64 },
    Constant { alpha: f64 },
    Logistic { r: f64, baseline: f64 },
}

impl Drift {
    pub fn drift_type(&self) -> DriftType {
        match self {
            Drift::MeanReverting { .. } => DriftType::MeanReverting,
            Drift::Sinusoidal { .. } => DriftType::Sinusoidal,
            Drift::Constant { .. } => DriftType::Constant,
            Drift::Logistic { .. } => DriftType::Logistic,
        }
    }

    /// The level a mean-reverting or sinusoidal drift pulls toward at time `t`.
    pub fn target(&self, t: f64) -> Option<f64> {
        match *self {
            Drift::MeanReverting { baseline, .. } => Some(baseline),
            Drift::Sinusoidal { baseline, a, omega, phi, .. } => Some(baseline + a * (omega * t + phi).sin()),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<f64, ParamError> {
        Ok(match *self {
            Drift::MeanReverting { kappa, baseline } => kappa * (baseline - x),
            Drift::Sinusoidal { kappa, baseline, a, omega, phi } => {
                kappa * (baseline + a * (omega * t + phi).sin() - x)
            }
            Drift::Constant { alpha } => alpha,
            Drift::Logistic { r, baseline } => {
                if baseline == 0.0 {
                    return Err(ParamError::Singular(
                        "logistic drift with baseline (carrying capacity) 0".into(),
                    ));
                }
                r * x * (1.0 - x / baseline)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diffusion {
    Constant,
    Sqrt,
    Linear { alpha: f64 },
}

impl Diffusion {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Diffusion::Constant => 1.0,
            Diffusion::Sqrt => (x.abs() + 1e-6).sqrt(),
            Diffusion::Linear { alpha } => 1.0 + alpha * x.abs(),
        }
    }

    pub fn shape(&self) -> DiffusionShape {
        match self {
            Diffusion::Constant => DiffusionShape::Constant,
            Diffusion::Sqrt => DiffusionShape::Sqrt,
            Diffusion::Linear { .. } => DiffusionShape::Linear,
        }
    }
}

/// Fully resolved parameters of one node at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedParams {
    pub node: NodeId,
    /// Step within the drift cycle that was resolved.
    pub step: u32,
    pub node_type: NodeType,
    pub drift: Drift,
    pub baseline: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub diffusion: Diffusion,
    /// Index of the override drift pattern in force, if any.
    pub pattern: Option<usize>,
    /// Field-wise merge of every layer, most specific first.
    pub merged: ParamSet,
}

impl ResolvedParams {
    pub fn drift_type(&self) -> DriftType {
        self.drift.drift_type()
    }
}

/// `f_i(x, t)` for the resolved drift law.
pub fn drift(rp: &ResolvedParams, x: f64, t: f64) -> Result<f64, ParamError> {
    rp.drift.eval(x, t)
}

/// `g_i(x)` for the resolved diffusion shape; the noise term is `sigma * g(x)`.
pub fn diffusion(rp: &ResolvedParams, x: f64) -> f64 {
    rp.diffusion.eval(x)
}

/// The group layer for `node`: the override's named group, else the first
/// group whose `node_type` matches the scenario node.
pub(crate) fn group_for(p: &SdeParameters, node: NodeId, node_type: NodeType) -> Option<&ParamSet> {
    match p.node_overrides.get(&node).and_then(|o| o.group.as_ref()) {
        Some(name) => p.group_params.get(name),
        None => p.group_params.values().find(|g| g.node_type == Some(node_type)),
    }
}

/// Index of the pattern in force at cycle step `t`: the one with the largest
/// start not after `t`, so gaps inherit the preceding pattern and the last
/// pattern persists past its end.
pub(crate) fn active_pattern(patterns: &[super::DriftConfig], t: u32) -> Option<usize> {
    patterns
        .iter()
        .enumerate()
        .filter(|(_, p)| p.time_range.start <= t)
        .max_by_key(|(i, p)| (p.time_range.start, *i))
        .map(|(i, _)| i)
}

/// Merge the layers for `node` with the pattern layer chosen by `pattern`.
pub(crate) fn merged_layers(
    p: &SdeParameters,
    node: NodeId,
    node_type: NodeType,
    pattern: Option<usize>,
) -> ParamSet {
    let over = p.node_overrides.get(&node);
    let mut merged = ParamSet::default();
    if let (Some(o), Some(i)) = (over, pattern) {
        merged = o.patterns()[i].params.clone();
    }
    if let Some(o) = over {
        merged.fill_from(&o.extra);
    }
    if let Some(g) = group_for(p, node, node_type) {
        merged.fill_from(g);
    }
    merged.fill_from(&p.global_defaults);
    merged.other.clear();
    merged
}

/// Turn a merged layer into resolved parameters, naming the first missing field.
pub(crate) fn finish(
    node: NodeId,
    step: u32,
    node_type: NodeType,
    pattern: Option<usize>,
    merged: ParamSet,
) -> Result<ResolvedParams, ParamError> {
    let drift_type = merged.drift_type.ok_or_else(|| ParamError::Resolution {
        node,
        step,
        field: "drift_type",
        drift: "unspecified".to_string(),
    })?;
    let need = |field: &'static str, v: Option<f64>| {
        v.ok_or_else(|| ParamError::Resolution {
            node,
            step,
            field,
            drift: drift_type.as_str().to_string(),
        })
    };
    let drift = match drift_type {
        DriftType::MeanReverting => Drift::MeanReverting {
            kappa: need("kappa", merged.kappa)?,
            baseline: need("baseline", merged.baseline)?,
        },
        DriftType::Sinusoidal => Drift::Sinusoidal {
            kappa: need("kappa", merged.kappa)?,
            baseline: need("baseline", merged.baseline)?,
            a: need("A", merged.a)?,
            omega: need("omega", merged.omega)?,
            phi: need("phi", merged.phi)?,
        },
        DriftType::Constant => Drift::Constant {
            alpha: need("alpha_drift", merged.alpha_drift)?,
        },
        DriftType::Logistic => Drift::Logistic {
            r: need("r", merged.r)?,
            baseline: need("baseline", merged.baseline)?,
        },
    };
    let baseline = need("baseline", merged.baseline)?;
    let lambda = need("lambda", merged.lambda)?;
    let sigma = need("sigma", merged.sigma)?;
    let diffusion = match merged.diffusion_shape.unwrap_or(DiffusionShape::Constant) {
        DiffusionShape::Constant => Diffusion::Constant,
        DiffusionShape::Sqrt => Diffusion::Sqrt,
        DiffusionShape::Linear => Diffusion::Linear {
            alpha: need("diffusion_alpha", merged.diffusion_alpha)?,
        },
    };
    Ok(ResolvedParams {
        node,
        step,
        node_type,
        drift,
        baseline,
        lambda,
        sigma,
        diffusion,
        pattern,
        merged,
    })
}

/// Resolve the parameters of `node` at step `t`.
pub fn resolve_node_params(
    p: &SdeParameters,
    s: &StructuredScenario,
    node: NodeId,
    t: u32,
) -> Result<ResolvedParams, ParamError> {
    let spec = s.node(node).ok_or(ParamError::UnknownNode(node))?;
    let step = match s.drift_patterns.period() {
        Some(period) => t % period,
        None => t,
    };
    let pattern = p
        .node_overrides
        .get(&node)
        .and_then(|o| active_pattern(o.patterns(), step));
    let merged = merged_layers(p, node, spec.node_type, pattern);
    finish(node, step, spec.node_type, pattern, merged)
}

#[cfg(test)]
mod tests {
    use super::super::tests::showcase_params;
    use super::super::{parse_params, DriftConfig, NodeOverride};
    use super::*;
    use crate::scenario::fixtures::showcase;
    use crate::scenario::StepRange;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn showcase_node0_mid_window() {
        let rp = resolve_node_params(&showcase_params(), &showcase(), 0, 20).unwrap();
        assert_eq!(
            rp.drift,
            Drift::Sinusoidal { kappa: 0.25, baseline: 100.0, a: 300.0, omega: 0.1309, phi: -1.7262 }
        );
        assert_eq!(rp.sigma, 0.8);
        // lambda comes from the demand_sources group
        assert_eq!(rp.lambda, 0.9);
        assert_eq!(rp.diffusion, Diffusion::Sqrt);
    }

    #[test]
    fn wraps_by_repeat_period() {
        let p = showcase_params();
        let s = showcase();
        let rp = resolve_node_params(&p, &s, 0, 50).unwrap();
        assert_eq!(rp.step, 2);
        assert_eq!(rp.drift, Drift::MeanReverting { kappa: 0.25, baseline: 100.0 });
        assert_eq!(rp.pattern, Some(0));
    }

    #[test]
    fn gaps_inherit_preceding_and_last_persists() {
        let p = showcase_params();
        let s = showcase();
        // step 13 sits between [0,13) and [14,34)
        assert_eq!(resolve_node_params(&p, &s, 0, 13).unwrap().pattern, Some(0));
        assert_eq!(resolve_node_params(&p, &s, 0, 34).unwrap().pattern, Some(1));
        assert_eq!(resolve_node_params(&p, &s, 0, 47).unwrap().pattern, Some(2));
    }

    #[test]
    fn fallback_chain() {
        let doc = r#"{
            "global_defaults": {"drift_type": "mean_reverting", "kappa": 0.2, "baseline": 50, "lambda": 1.0, "sigma": 0.1},
            "group_params": {"g": {"baseline": 70}},
            "node_overrides": {"0": {"group": "g"}}
        }"#;
        let p = parse_params(doc).unwrap();
        let mut s = showcase();
        s.drift_patterns.repeat = false;
        s.drift_patterns.repeat_period = None;
        let rp = resolve_node_params(&p, &s, 0, 3).unwrap();
        assert_eq!(rp.drift, Drift::MeanReverting { kappa: 0.2, baseline: 70.0 });
        assert_eq!(rp.sigma, 0.1);
        assert_eq!(rp.diffusion, Diffusion::Constant);
        // node 1 has no override; no group declares node_type, so globals apply
        assert_eq!(resolve_node_params(&p, &s, 1, 3).unwrap().baseline, 50.0);
    }

    #[test]
    fn missing_field_is_named() {
        let doc = r#"{"global_defaults": {"drift_type": "sinusoidal", "kappa": 0.2, "baseline": 50, "lambda": 1, "sigma": 0.1}}"#;
        let err = resolve_node_params(&parse_params(doc).unwrap(), &showcase(), 1, 5).unwrap_err();
        assert_eq!(
            err,
            ParamError::Resolution { node: 1, step: 5, field: "A", drift: "sinusoidal".into() }
        );
        let linear = r#"{"global_defaults": {"drift_type": "mean_reverting", "kappa": 0.2, "baseline": 50, "lambda": 1, "sigma": 0.1, "diffusion_shape": "linear"}}"#;
        assert!(matches!(
            resolve_node_params(&parse_params(linear).unwrap(), &showcase(), 1, 0),
            Err(ParamError::Resolution { field: "diffusion_alpha", .. })
        ));
    }

    #[test]
    fn drift_examples() {
        let mr = Drift::MeanReverting { kappa: 0.25, baseline: 100.0 };
        assert_eq!(mr.eval(100.0, 0.0).unwrap(), 0.0);
        assert_eq!(mr.eval(80.0, 0.0).unwrap(), 5.0);
        let lg = Drift::Logistic { r: 0.05, baseline: 100.0 };
        assert_eq!(lg.eval(100.0, 0.0).unwrap(), 0.0);
        let singular = Drift::Logistic { r: 0.05, baseline: 0.0 };
        assert!(matches!(singular.eval(1.0, 0.0), Err(ParamError::Singular(_))));
        assert_eq!(Drift::Constant { alpha: 1.5 }.eval(7.0, 3.0).unwrap(), 1.5);
    }

    #[test]
    fn diffusion_examples() {
        assert_eq!(Diffusion::Constant.eval(-123.0), 1.0);
        assert_relative_eq!(Diffusion::Sqrt.eval(4.0), 2.00000025, epsilon = 1e-12);
        assert_eq!(Diffusion::Linear { alpha: 0.7 }.eval(0.0), 1.0);
    }

    fn sentinel(v: f64) -> ParamSet {
        ParamSet {
            drift_type: Some(DriftType::MeanReverting),
            kappa: Some(v),
            baseline: Some(v),
            lambda: Some(v),
            sigma: Some(v),
            ..ParamSet::default()
        }
    }

    #[test]
    fn most_specific_layer_wins() {
        let s = showcase();
        let mut p = SdeParameters {
            global_defaults: sentinel(1.0),
            ..SdeParameters::default()
        };
        p.group_params.insert("g".into(), sentinel(2.0));
        let mut o = NodeOverride {
            group: Some("g".into()),
            ..NodeOverride::default()
        };
        let field_of = |p: &SdeParameters| {
            let rp = resolve_node_params(p, &s, 0, 5).unwrap();
            (rp.baseline, rp.lambda, rp.sigma)
        };
        p.node_overrides.insert(0, o.clone());
        assert_eq!(field_of(&p), (2.0, 2.0, 2.0));
        o.extra = sentinel(3.0);
        p.node_overrides.insert(0, o.clone());
        assert_eq!(field_of(&p), (3.0, 3.0, 3.0));
        o.drift_patterns = Some(vec![DriftConfig {
            time_range: StepRange::new(0, 48),
            params: sentinel(4.0),
        }]);
        p.node_overrides.insert(0, o);
        assert_eq!(field_of(&p), (4.0, 4.0, 4.0));
    }

    proptest! {
        #[test]
        fn drift_pulls_toward_target(x in -500.0f64..500.0, t in 0.0f64..200.0,
                                     kappa in 0.01f64..0.5, baseline in 1.0f64..300.0,
                                     a in 0.0f64..300.0, omega in 0.0f64..1.0, phi in -4.0f64..4.0) {
            for d in [
                Drift::MeanReverting { kappa, baseline },
                Drift::Sinusoidal { kappa, baseline, a, omega, phi },
            ] {
                let target = d.target(t).unwrap();
                prop_assert!(d.eval(x, t).unwrap() * (target - x) >= 0.0);
                prop_assert!((target - baseline).abs() <= a + 1e-12);
            }
        }

        #[test]
        fn diffusion_is_positive(x in -1e6f64..1e6, alpha in 0.0f64..5.0) {
            for g in [Diffusion::Constant, Diffusion::Sqrt, Diffusion::Linear { alpha }] {
                prop_assert!(g.eval(x) > 0.0);
            }
        }

        #[test]
        fn resolution_is_periodic(node in 0usize..3, t in 0u32..500) {
            let p = showcase_params();
            let s = showcase();
            prop_assert_eq!(
                resolve_node_params(&p, &s, node, t).unwrap(),
                resolve_node_params(&p, &s, node, t + 48).unwrap()
            );
        }
    }
}
