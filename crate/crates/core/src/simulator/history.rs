//! Sub-step state history used for delayed coupling.

use crate::NodeId;

/// Every stored sub-step state of every node. Index `k` holds the state at
/// time `k / substeps` (in sampling steps).
#[derive(Debug, Clone)]
pub struct History {
    substeps: u32,
    states: Vec<Vec<f64>>,
}

impl History {
    pub fn new(initial: &[f64], substeps: u32) -> Self {
        Self {
            substeps: substeps.max(1),
            states: initial.iter().map(|&x| vec![x]).collect(),
        }
    }

    pub fn push(&mut self, node: usize, x: f64) {
        self.states[node].push(x);
    }

    pub fn len(&self, node: usize) -> usize {
        self.states[node].len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// State at sub-step `k - tau * substeps`, or the initial state when that
    /// precedes the start.
    pub fn at_substep(&self, node: usize, k: usize, tau: u32) -> f64 {
        let back = tau as usize * self.substeps as usize;
        let buf = &self.states[node];
        let idx = k.saturating_sub(back);
        buf[idx.min(buf.len() - 1)]
    }

    /// State at the most recent stored sub-step at or before `t - tau`.
    pub fn delayed_state(&self, node: NodeId, t: f64, tau: u32) -> f64 {
        let buf = &self.states[node];
        let target = t - tau as f64;
        if target <= 0.0 {
            return buf[0];
        }
        // tolerance keeps exact sub-step times from rounding down a slot
        let idx = (target * self.substeps as f64 + 1e-9).floor() as usize;
        buf[idx.min(buf.len() - 1)]
    }
}

/// See [`History::delayed_state`].
pub fn delayed_state(history: &History, node: NodeId, t: f64, tau: u32) -> f64 {
    history.delayed_state(node, t, tau)
}
