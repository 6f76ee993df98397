//! Simulate the showcase network and print the trajectories as CSV.
//!
//! cargo run --example simulate -- [seed]

use stsynth::adjacency::parse_modulation;
use stsynth::params::parse_params;
use stsynth::scenario::parse_scenario;
use stsynth::simulator::{simulate, to_csv};
use stsynth::SimulationConfig;

fn main() -> anyhow::Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let s = parse_scenario(include_str!("../fixtures/showcase/scenario.json"))?;
    let p = parse_params(include_str!("../fixtures/showcase/params.json"))?;
    let m = parse_modulation(include_str!("../fixtures/showcase/modulation.json"))?;

    let tr = simulate(&s, &p, &m.base_for(&s), &m.time_modulation, &SimulationConfig::with_seed(seed))?;
    print!("{}", to_csv(&tr));
    for (i, row) in tr.values.iter().enumerate() {
        let (argmax, max) = row.iter().enumerate().fold((0, f64::MIN), |a, (t, &x)| if x > a.1 { (t, x) } else { a });
        eprintln!("node {}: peak {max:.1} at step {argmax}", tr.node_ids[i]);
    }
    Ok(())
}
