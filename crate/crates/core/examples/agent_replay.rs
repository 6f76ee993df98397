//! Replay the recorded agent conversation offline and print the loop trace.
//!
//! cargo run --example agent_replay

use std::path::Path;

use stsynth::agents::{run_pipeline, Limits, ScriptedBackend};
use stsynth::SimulationConfig;

fn main() -> anyhow::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/transcripts/showcase");
    let backend = ScriptedBackend::from_dir(&dir)?;
    let result = run_pipeline(&backend, 3, &Limits::default(), &SimulationConfig::with_seed(7))?;

    println!("rounds: {:?}", result.rounds);
    for ex in &result.transcripts {
        let first = ex.response.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        println!("{:<7} prompt {:>6} chars | {first}", ex.agent.to_string(), ex.prompt.len());
    }
    println!("scenario: {} nodes over {} steps", result.scenario.num_nodes(), result.trajectories.seq_len);
    Ok(())
}
