//! Effective coupling weights of every edge through a modulation window.
//!
//! cargo run --example adjacency

use stsynth::adjacency::{effective_weight, parse_modulation, validate_modulation_document};
use stsynth::scenario::parse_scenario;

fn main() -> anyhow::Result<()> {
    let s = parse_scenario(include_str!("../fixtures/showcase/scenario.json"))?;
    let doc = parse_modulation(include_str!("../fixtures/showcase/modulation.json"))?;
    println!("modulation approved: {}", validate_modulation_document(&doc, &s).approved);

    let b = doc.base_for(&s);
    let m = &doc.time_modulation;
    print!("step ");
    for e in &s.edges {
        print!("{:>7}", e.edge().to_string());
    }
    println!();
    for t in 12..24 {
        print!("{t:>4} ");
        for e in &s.edges {
            print!("{:>7.2}", effective_weight(&b, m, e.edge(), t)?);
        }
        println!();
    }
    for (i, edge, multiplier) in m.units(&s) {
        println!("window {} on {edge}: x{multiplier}", m.patterns[i].time_range);
    }
    Ok(())
}
