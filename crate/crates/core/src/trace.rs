use num_bigint::BigUint;
use serde_json::{json, Value};

use crate::flow::{ArrivalVector, SwitchingFlow};
use crate::instance::{UndirectedView, VertexId};

/// A solver answer: a certificate flow, the arrivals it certifies, and
/// diagnostics.
#[derive(Clone, Debug)]
pub struct Solution {
    pub flow: SwitchingFlow,
    pub arrivals: ArrivalVector,
    pub trace: SolveTrace,
}

/// Per-solve diagnostics. All counters start at zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveTrace {
    pub max_recursion_depth: usize,
    pub binary_search_probes: u64,
    pub splitting_events: u64,
    /// Size of every balanced separator computed, in computation order.
    pub separators_found: Vec<usize>,
    pub subinstances_solved: u64,
    /// Bulk moves (round robin) or single-token moves (FIFO/LIFO).
    pub simulation_steps: u64,
    pub iterations: u64,
    pub boundaries: Vec<BoundaryRecord>,
    pub splits: Vec<SplitRecord>,
    pub guesses: Vec<GuessRecord>,
}

/// A point where the separator solver computed a fresh separator: at entry
/// and for every component of a split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryRecord {
    /// `G - T` of the (sub)instance, in its own vertex ids.
    pub view: UndirectedView,
    pub separator: Vec<VertexId>,
    pub separator_size: usize,
    pub non_terminals: usize,
    /// Deepest chain of nested binary searches observed below this boundary
    /// before the next split or base case.
    pub max_levels: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitRecord {
    /// Non-terminal count at the boundary whose separator was exhausted.
    pub parent_non_terminals: usize,
    pub component_sizes: Vec<usize>,
}

/// An accepted pivot guess together with the search range's upper end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuessRecord {
    pub pivot: VertexId,
    pub accepted: BigUint,
    pub upper: BigUint,
}

impl SolveTrace {
    pub(crate) fn note_depth(&mut self, depth: usize) {
        self.max_recursion_depth = self.max_recursion_depth.max(depth);
    }

    /// Compact JSON summary; long per-event lists are reduced to counts.
    pub fn to_json_value(&self) -> Value {
        json!({
            "max_recursion_depth": self.max_recursion_depth,
            "binary_search_probes": self.binary_search_probes,
            "splitting_events": self.splitting_events,
            "separators_found": self.separators_found.len(),
            "max_separator_size": self.separators_found.iter().max().copied().unwrap_or(0),
            "subinstances_solved": self.subinstances_solved,
            "simulation_steps": self.simulation_steps,
            "iterations": self.iterations,
        })
    }
}
