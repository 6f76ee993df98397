//! Per-node standard-normal streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::NodeId;

/// Standard-normal draws for one node. The sequence depends only on
/// `(seed, node)`: the seed keys the generator and the node index selects
/// its stream.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: u64, node: NodeId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(node as u64);
        Self { rng }
    }

    pub fn draw(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl Iterator for GaussianStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.draw())
    }
}

pub fn gaussian_stream(seed: u64, node: NodeId) -> GaussianStream {
    GaussianStream::new(seed, node)
}
