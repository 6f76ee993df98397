//! Parse the showcase scenario, run the rule checks, then break it on purpose.
//!
//! cargo run --example validate_scenario

use stsynth::scenario::{has_indirect_path, infer_seq_len, parse_scenario, validate_scenario, Edge};

const SCENARIO: &str = include_str!("../fixtures/showcase/scenario.json");

fn main() -> anyhow::Result<()> {
    let s = parse_scenario(SCENARIO)?;
    println!("{} nodes, {} edges, seq_len {}", s.num_nodes(), s.edges.len(), s.seq_len);
    println!("'{}' at '{}' -> {} steps", s.time_span, s.sampling_frequency, infer_seq_len(&s.time_span, &s.sampling_frequency)?);

    let report = validate_scenario(&s);
    println!("approved: {} ({} violations, {} warnings)", report.approved, report.violations.len(), report.warnings.len());

    for (src, tgt) in [(0, 2), (0, 0), (1, 1)] {
        println!("indirect {src} -> {tgt}: {}", has_indirect_path(&s, src, tgt)?);
    }

    // drop the only edge leaving node 0
    let mut broken = s.clone();
    broken.edges.retain(|e| e.edge() != Edge::new(0, 1));
    let report = validate_scenario(&broken);
    println!("without 0->1, approved: {}", report.approved);
    for v in &report.violations {
        println!("  {} at {}: {}", v.rule_id, v.location, v.detail);
    }
    Ok(())
}
