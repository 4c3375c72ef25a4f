//! Seeded random instances.
//!
//! All randomness comes from one SplitMix64 stream:
//!
//! ```text
//! state ← state + 0x9E3779B97F4A7C15
//! z ← state
//! z ← (z ⊕ (z ≫ 30)) · 0xBF58476D1CE4E5B9
//! z ← (z ⊕ (z ≫ 27)) · 0x94D049BB133111EB
//! output z ⊕ (z ≫ 31)
//! ```
//!
//! seeded with `state = seed`, all arithmetic mod 2⁶⁴. A draw below `k` is
//! the high word of `output · k` (no rejection). Draw order: terminals,
//! family skeleton, successors (`s0` then `s1`, vertices ascending), tokens.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use thiserror::Error;

use crate::instance::{predecessor_lists, Instance, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("need n ≥ terminals ≥ 1, got n={n}, terminals={terminals}")]
    Counts { n: usize, terminals: usize },
    #[error("token budget must be at least 1")]
    NoTokens,
    #[error("unknown family {0:?}")]
    UnknownFamily(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Successors uniform over all vertices.
    Uniform,
    /// Successors drawn from the neighbourhood of a random 2-tree, so the
    /// underlying undirected graph has treewidth at most 2.
    LowTreewidth,
    /// Up to two hub vertices; everyone else points forward or to a hub.
    LowFvs,
    /// Non-terminals point strictly forward; the last vertex is a terminal.
    Acyclic,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Uniform,
        Family::LowTreewidth,
        Family::LowFvs,
        Family::Acyclic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::LowTreewidth => "low_treewidth",
            Family::LowFvs => "low_fvs",
            Family::Acyclic => "acyclic",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, GenError> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| GenError::UnknownFamily(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub n: usize,
    pub terminals: usize,
    pub tokens: u64,
    pub family: Family,
    pub seed: u64,
}

/// SplitMix64 with multiply-high range reduction.
pub struct Prng(SplitMix64);

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng(SplitMix64::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform-ish in `[0, k)`; `k ≥ 1`.
    pub fn below(&mut self, k: usize) -> usize {
        ((self.next_u64() as u128 * k as u128) >> 64) as usize
    }

    /// `count` distinct values of `0..n` by partial Fisher–Yates, in draw order.
    pub fn sample(&mut self, n: usize, count: usize) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(count);
        pool
    }
}

/// Which successors vertex `v` may take.
enum Allowed {
    Any,
    List(Vec<Vec<VertexId>>),
}

impl Allowed {
    fn targets(&self, v: VertexId, n: usize) -> Vec<VertexId> {
        match self {
            Allowed::Any => (0..n).collect(),
            Allowed::List(lists) => lists[v].clone(),
        }
    }
}

pub fn generate(spec: &GenSpec) -> Result<Instance, GenError> {
    let GenSpec {
        n,
        terminals: k,
        tokens,
        family,
        seed,
    } = *spec;
    if k == 0 || k > n {
        return Err(GenError::Counts { n, terminals: k });
    }
    if tokens == 0 {
        return Err(GenError::NoTokens);
    }
    let mut rng = Prng::new(seed);
    let mut terminal = vec![false; n];
    let chosen: Vec<VertexId> = match family {
        Family::Uniform | Family::LowTreewidth => rng.sample(n, k),
        Family::LowFvs | Family::Acyclic => {
            let mut rest = rng.sample(n - 1, k - 1);
            rest.push(n - 1);
            rest
        }
    };
    for &t in &chosen {
        terminal[t] = true;
    }
    let allowed = match family {
        Family::Uniform => Allowed::Any,
        Family::LowTreewidth => Allowed::List(two_tree_neighbourhoods(n, &mut rng)),
        Family::Acyclic => Allowed::List(
            (0..n)
                .map(|v| {
                    if terminal[v] {
                        (0..n).collect()
                    } else {
                        (v + 1..n).collect()
                    }
                })
                .collect(),
        ),
        Family::LowFvs => {
            let free: Vec<VertexId> = (0..n).filter(|&v| !terminal[v]).collect();
            let hubs: Vec<VertexId> = rng
                .sample(free.len(), free.len().min(2))
                .into_iter()
                .map(|i| free[i])
                .collect();
            Allowed::List(
                (0..n)
                    .map(|v| {
                        if terminal[v] || hubs.contains(&v) {
                            (0..n).collect()
                        } else {
                            let mut t: Vec<VertexId> = (v + 1..n).collect();
                            t.extend(hubs.iter().copied().filter(|&h| h <= v));
                            t.sort_unstable();
                            t
                        }
                    })
                    .collect(),
            )
        }
    };
    let mut s0 = vec![0; n];
    let mut s1 = vec![0; n];
    for v in 0..n {
        let targets = allowed.targets(v, n);
        s0[v] = targets[rng.below(targets.len())];
        s1[v] = targets[rng.below(targets.len())];
    }
    repair(&mut s0, &mut s1, &terminal, &allowed);
    let mut counts = vec![0u64; n];
    let mut ordered = chosen.clone();
    ordered.sort_unstable();
    if tokens <= 1 << 20 {
        for _ in 0..tokens {
            counts[ordered[rng.below(k)]] += 1;
        }
    } else {
        let share = tokens / k as u64;
        for &t in &ordered {
            counts[t] = share;
        }
        for _ in 0..tokens % k as u64 {
            counts[ordered[rng.below(k)]] += 1;
        }
    }
    let names = (0..n).map(|v| format!("v{v}")).collect();
    let instance = Instance::from_parts(
        names,
        s0,
        s1,
        &ordered,
        counts.into_iter().map(BigUint::from).collect(),
    )
    .expect("generated instances are valid by construction");
    Ok(instance)
}

/// Closed neighbourhoods (sorted, including the vertex) of a random 2-tree:
/// vertex `i ≥ 2` attaches to both ends of a uniformly chosen existing edge.
fn two_tree_neighbourhoods(n: usize, rng: &mut Prng) -> Vec<Vec<VertexId>> {
    let mut adj: Vec<Vec<VertexId>> = (0..n).map(|v| vec![v]).collect();
    let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
    if n >= 2 {
        edges.push((0, 1));
        adj[0].push(1);
        adj[1].push(0);
    }
    for i in 2..n {
        let (a, b) = edges[rng.below(edges.len())];
        for u in [a, b] {
            edges.push((u, i));
            adj[u].push(i);
            adj[i].push(u);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

/// While some vertex cannot reach a terminal, takes the lowest such vertex
/// with an allowed target that can, and points its `s1` at the lowest one.
fn repair(s0: &mut [VertexId], s1: &mut [VertexId], terminal: &[bool], allowed: &Allowed) {
    let n = s0.len();
    loop {
        let reach = reaching(s0, s1, terminal);
        if reach.iter().all(|&r| r) {
            return;
        }
        let fix = (0..n).filter(|&v| !reach[v]).find_map(|v| {
            allowed
                .targets(v, n)
                .into_iter()
                .find(|&w| reach[w])
                .map(|w| (v, w))
        });
        let (v, w) = fix.expect("every family admits a repair edge");
        s1[v] = w;
    }
}

fn reaching(s0: &[VertexId], s1: &[VertexId], terminal: &[bool]) -> Vec<bool> {
    let preds = predecessor_lists(s0, s1);
    let mut seen = terminal.to_vec();
    let mut stack: Vec<VertexId> = (0..s0.len()).filter(|&v| terminal[v]).collect();
    while let Some(v) = stack.pop() {
        for &(u, _) in &preds[v] {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen
}
