//! Spatio-temporal data synthesis over graphs.
//!
//! The crate simulates node time series with a network stochastic
//! differential equation (mean-reverting / sinusoidal / constant / logistic
//! drift, state-dependent diffusion, delayed and time-modulated coupling),
//! validates the structured scenario documents that drive it, turns the
//! resulting artifacts into templated alignment QA, orchestrates the
//! LLM agent loop that authors those documents, and scores model responses
//! with group-relative rewards.
//!
//! Each area lives in its own module:
//!
//! - [`scenario`]: scenario documents, graph queries and rule checks
//! - [`params`]: hierarchical SDE parameters, drift and diffusion terms
//! - [`adjacency`]: base coupling matrix and windowed edge multipliers
//! - [`simulator`]: Euler–Maruyama integration with delays
//! - [`qa`]: alignment question generation
//! - [`agents`]: prompt templates, chat backends and the synthesis loop
//! - [`reward`]: format/task rewards, spatial bonus and advantages
//! - [`cli`]: the `stsynth` command line
//!
//! Runnable walkthroughs for every area live under `examples/`.

pub mod adjacency;
pub mod agents;
pub mod cli;
pub mod numfmt;
pub mod params;
pub mod qa;
pub mod report;
pub mod reward;
pub mod scenario;
pub mod simulator;

pub use adjacency::{BaseAdjacency, ModulationDocument, TimeModulation};
pub use params::{ResolvedParams, SdeParameters};
pub use report::{ValidationReport, Violation};
pub use scenario::StructuredScenario;
pub use simulator::{SimulationConfig, Trajectories};

/// Index of a node in a scenario graph.
pub type NodeId = usize;
