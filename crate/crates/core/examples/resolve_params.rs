//! Walk the parameter hierarchy for one node across a day and evaluate its
//! drift and diffusion terms.
//!
//! cargo run --example resolve_params

use stsynth::params::{parse_params, resolve_node_params, validate_params};
use stsynth::scenario::parse_scenario;

fn main() -> anyhow::Result<()> {
    let s = parse_scenario(include_str!("../fixtures/showcase/scenario.json"))?;
    let p = parse_params(include_str!("../fixtures/showcase/params.json"))?;

    let report = validate_params(&p, &s);
    println!("params approved: {}, warnings: {:?}", report.approved, report.rule_ids());

    for t in [0, 14, 20, 40, 50] {
        let rp = resolve_node_params(&p, &s, 0, t)?;
        let x = rp.baseline * 0.8;
        println!(
            "node 0 step {t:>2}: {:<14} sigma {:<4} drift(x={x}) = {:>8.3}, g(x) = {}",
            rp.drift_type().as_str(),
            rp.sigma,
            rp.drift.eval(x, t as f64)?,
            rp.diffusion.eval(x),
        );
    }
    Ok(())
}
