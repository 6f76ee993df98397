//! Run the agent loop against an OpenAI-compatible chat endpoint.
//!
//! STSYNTH_API_BASE=https://host/v1 STSYNTH_MODEL=name STSYNTH_API_KEY=... \
//!     cargo run --example live_agents -- 4

use stsynth::agents::{run_pipeline, LiveBackend, LiveConfig, Limits};
use stsynth::SimulationConfig;

fn main() -> anyhow::Result<()> {
    let nodes = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let cfg = match LiveConfig::from_env() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("live backend not configured: {e}");
            return Ok(());
        }
    };
    let backend = LiveBackend::new(cfg);
    let result = run_pipeline(&backend, nodes, &Limits::default(), &SimulationConfig::default())?;
    println!("{}", serde_json::to_string_pretty(&result.to_json())?);
    Ok(())
}
