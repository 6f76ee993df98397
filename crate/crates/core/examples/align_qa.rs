//! Generate the alignment QA for the showcase and show a few of each kind.
//!
//! cargo run --example align_qa

use stsynth::adjacency::parse_modulation;
use stsynth::params::parse_params;
use stsynth::qa::{gen_all, to_jsonl, Category};
use stsynth::scenario::parse_scenario;

fn main() -> anyhow::Result<()> {
    let s = parse_scenario(include_str!("../fixtures/showcase/scenario.json"))?;
    let p = parse_params(include_str!("../fixtures/showcase/params.json"))?;
    let m = parse_modulation(include_str!("../fixtures/showcase/modulation.json"))?;
    let qs = gen_all(&s, &p, &m.base_for(&s), &m.time_modulation)?;

    for c in [Category::Temporal, Category::Spatial, Category::SpatialTemporal] {
        let of_kind: Vec<_> = qs.iter().filter(|q| q.category == c).collect();
        println!("== {} ({})", c.as_str(), of_kind.len());
        for q in of_kind.iter().take(3) {
            println!("Q: {}\nA: {}", q.question, q.answer);
        }
    }
    let jsonl = to_jsonl(&qs, s.task_id.as_deref());
    println!("== first record\n{}", jsonl.lines().next().unwrap_or_default());
    Ok(())
}
