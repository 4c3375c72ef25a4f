//! Switch graphs with terminals and starting tokens.
//!
//! Vertices are named by opaque strings in documents and mapped to dense
//! indices `0..n` in declaration order. Every vertex owns two edge slots,
//! keyed by `(vertex, Parity)`, even when both point at the same successor.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// Dense vertex index.
pub type VertexId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Even, Parity::Odd];
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => f.write_str("even"),
            Parity::Odd => f.write_str("odd"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),
    #[error("{field}({vertex}) references unknown vertex `{target}`")]
    UnknownSuccessor {
        field: &'static str,
        vertex: String,
        target: String,
    },
    #[error("{field} has no entry for vertex `{vertex}`")]
    MissingSuccessor { field: &'static str, vertex: String },
    #[error("{field} mentions unknown vertex `{vertex}`")]
    UnknownVertex { field: &'static str, vertex: String },
    #[error("terminals empty")]
    NoTerminals,
    #[error("tokens given for non-terminal `{0}`")]
    TokensOnNonTerminal(String),
    #[error("invalid token count for `{vertex}`: {reason}")]
    BadTokenCount { vertex: String, reason: String },
    #[error("total token count is zero")]
    NoTokens,
    #[error("no terminal reachable from {0}")]
    Unreachable(String),
}

/// A validated G-ARRIVAL instance. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    names: Vec<String>,
    index: HashMap<String, VertexId>,
    s0: Vec<VertexId>,
    s1: Vec<VertexId>,
    terminal: Vec<bool>,
    tokens: Vec<BigUint>,
    total: BigUint,
}

impl Instance {
    /// Builds and validates an instance from index-based parts.
    ///
    /// `tokens` is indexed by vertex and must be zero on non-terminals.
    pub fn from_parts(
        names: Vec<String>,
        s0: Vec<VertexId>,
        s1: Vec<VertexId>,
        terminals: &[VertexId],
        tokens: Vec<BigUint>,
    ) -> Result<Self, InstanceError> {
        let n = names.len();
        if s0.len() != n || s1.len() != n || tokens.len() != n {
            return Err(InstanceError::Schema(format!(
                "expected {n} entries in s0, s1 and tokens"
            )));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(InstanceError::DuplicateVertex(name.clone()));
            }
        }
        for (field, succ) in [("s0", &s0), ("s1", &s1)] {
            for (v, &w) in succ.iter().enumerate() {
                if w >= n {
                    return Err(InstanceError::UnknownSuccessor {
                        field,
                        vertex: names[v].clone(),
                        target: w.to_string(),
                    });
                }
            }
        }
        let mut terminal = vec![false; n];
        for &t in terminals {
            if t >= n {
                return Err(InstanceError::UnknownVertex {
                    field: "terminals",
                    vertex: t.to_string(),
                });
            }
            terminal[t] = true;
        }
        if !terminal.iter().any(|&t| t) {
            return Err(InstanceError::NoTerminals);
        }
        for v in 0..n {
            if !terminal[v] && !tokens[v].is_zero() {
                return Err(InstanceError::TokensOnNonTerminal(names[v].clone()));
            }
        }
        let total: BigUint = tokens.iter().sum();
        if total.is_zero() {
            return Err(InstanceError::NoTokens);
        }
        let inst = Instance {
            names,
            index,
            s0,
            s1,
            terminal,
            tokens,
            total,
        };
        if let Some(v) = inst.first_unreachable() {
            return Err(InstanceError::Unreachable(inst.names[v].clone()));
        }
        Ok(inst)
    }

    /// Convenience constructor with generated names `v0..v{n-1}`.
    pub fn from_indices(
        s0: Vec<VertexId>,
        s1: Vec<VertexId>,
        terminals: &[VertexId],
        tokens: Vec<BigUint>,
    ) -> Result<Self, InstanceError> {
        let names = (0..s0.len()).map(|i| format!("v{i}")).collect();
        Self::from_parts(names, s0, s1, terminals, tokens)
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<VertexId> {
        self.index.get(name).copied()
    }

    pub fn successor(&self, v: VertexId, parity: Parity) -> VertexId {
        match parity {
            Parity::Even => self.s0[v],
            Parity::Odd => self.s1[v],
        }
    }

    pub fn s0(&self) -> &[VertexId] {
        &self.s0
    }

    pub fn s1(&self) -> &[VertexId] {
        &self.s1
    }

    pub fn is_terminal(&self, v: VertexId) -> bool {
        self.terminal[v]
    }

    pub fn terminal_mask(&self) -> &[bool] {
        &self.terminal
    }

    pub fn terminals(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.n()).filter(|&v| self.terminal[v])
    }

    pub fn non_terminals(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.n()).filter(|&v| !self.terminal[v])
    }

    pub fn non_terminal_count(&self) -> usize {
        self.terminal.iter().filter(|&&t| !t).count()
    }

    /// Starting tokens `t⁺_v` (zero on non-terminals).
    pub fn tokens(&self, v: VertexId) -> &BigUint {
        &self.tokens[v]
    }

    pub fn token_vector(&self) -> &[BigUint] {
        &self.tokens
    }

    /// Total starting tokens `t⁺`.
    pub fn total_tokens(&self) -> &BigUint {
        &self.total
    }

    /// `2^|V| · t⁺`, the strict upper bound on any integral switching flow value.
    pub fn flow_bound(&self) -> BigUint {
        &self.total << self.n()
    }

    /// In-edges of every vertex as `(source, parity)` pairs, sources ascending.
    pub fn predecessors(&self) -> Vec<Vec<(VertexId, Parity)>> {
        predecessor_lists(&self.s0, &self.s1)
    }

    /// Returns a copy where `p` is promoted to a terminal holding `tokens` tokens.
    pub fn with_terminal(&self, p: VertexId, tokens: BigUint) -> Result<Self, InstanceError> {
        let mut t: Vec<VertexId> = self.terminals().collect();
        if !self.terminal[p] {
            t.push(p);
        }
        let mut tok = self.tokens.clone();
        tok[p] = tokens;
        Self::from_parts(self.names.clone(), self.s0.clone(), self.s1.clone(), &t, tok)
    }

    /// Returns the same switch graph with a different token assignment on
    /// the existing terminals.
    pub fn with_tokens(&self, tokens: Vec<BigUint>) -> Result<Self, InstanceError> {
        let t: Vec<VertexId> = self.terminals().collect();
        Self::from_parts(self.names.clone(), self.s0.clone(), self.s1.clone(), &t, tokens)
    }

    /// Reverse BFS from the terminals; the first vertex that cannot reach one.
    fn first_unreachable(&self) -> Option<VertexId> {
        let preds = self.predecessors();
        let mut seen = self.terminal.clone();
        let mut queue: VecDeque<VertexId> = self.terminals().collect();
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &preds[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen.iter().position(|&s| !s)
    }

    /// Parses the JSON instance format.
    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let doc: InstanceDoc =
            serde_json::from_str(text).map_err(|e| InstanceError::Schema(e.to_string()))?;
        doc.into_instance()
    }

    /// Serializes to the JSON instance format. Maps follow vertex order.
    pub fn to_json_value(&self) -> Value {
        let vertices: Vec<Value> = self.names.iter().map(|s| Value::from(s.as_str())).collect();
        let succ = |s: &[VertexId]| {
            let mut m = Map::new();
            for (v, &w) in s.iter().enumerate() {
                m.insert(self.names[v].clone(), Value::from(self.names[w].as_str()));
            }
            Value::Object(m)
        };
        let terminals: Vec<Value> = self.terminals().map(|v| Value::from(self.name(v))).collect();
        let mut tokens = Map::new();
        for v in self.terminals() {
            tokens.insert(self.names[v].clone(), count_to_json(&self.tokens[v]));
        }
        let mut out = Map::new();
        out.insert("vertices".into(), Value::Array(vertices));
        out.insert("s0".into(), succ(&self.s0));
        out.insert("s1".into(), succ(&self.s1));
        out.insert("terminals".into(), Value::Array(terminals));
        out.insert("tokens".into(), Value::Object(tokens));
        Value::Object(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("json values always serialize")
    }
}

pub(crate) fn predecessor_lists(s0: &[VertexId], s1: &[VertexId]) -> Vec<Vec<(VertexId, Parity)>> {
    let mut preds = vec![Vec::new(); s0.len()];
    for v in 0..s0.len() {
        preds[s0[v]].push((v, Parity::Even));
        preds[s1[v]].push((v, Parity::Odd));
    }
    preds
}

/// Unbounded counts are written as JSON numbers when they fit in 64 bits and
/// as decimal strings otherwise.
pub fn count_to_json(c: &BigUint) -> Value {
    match c.to_u64() {
        Some(x) => Value::from(x),
        None => Value::from(c.to_str_radix(10)),
    }
}

/// Reads a count given either as a JSON integer or a decimal string.
pub fn count_from_json(v: &Value) -> Result<BigUint, String> {
    match v {
        Value::Number(num) => num
            .as_u64()
            .map(BigUint::from)
            .ok_or_else(|| format!("`{num}` is not a nonnegative integer")),
        Value::String(s) => {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                return Err(format!("`{s}` is not a decimal integer"));
            }
            BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| format!("`{s}` does not parse"))
        }
        other => Err(format!("expected integer or decimal string, got {other}")),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    vertices: Vec<String>,
    s0: HashMap<String, String>,
    s1: HashMap<String, String>,
    terminals: Vec<String>,
    #[serde(default)]
    tokens: HashMap<String, Value>,
}

impl InstanceDoc {
    fn into_instance(self) -> Result<Instance, InstanceError> {
        let mut index = HashMap::new();
        for (i, name) in self.vertices.iter().enumerate() {
            if index.insert(name.as_str(), i).is_some() {
                return Err(InstanceError::DuplicateVertex(name.clone()));
            }
        }
        let succ = |field: &'static str, map: &HashMap<String, String>| {
            for key in map.keys() {
                if !index.contains_key(key.as_str()) {
                    return Err(InstanceError::UnknownVertex {
                        field,
                        vertex: key.clone(),
                    });
                }
            }
            self.vertices
                .iter()
                .map(|v| {
                    let target = map.get(v).ok_or_else(|| InstanceError::MissingSuccessor {
                        field,
                        vertex: v.clone(),
                    })?;
                    index.get(target.as_str()).copied().ok_or_else(|| {
                        InstanceError::UnknownSuccessor {
                            field,
                            vertex: v.clone(),
                            target: target.clone(),
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let s0 = succ("s0", &self.s0)?;
        let s1 = succ("s1", &self.s1)?;
        let mut terminals = Vec::with_capacity(self.terminals.len());
        let mut seen = HashSet::new();
        for t in &self.terminals {
            let i = *index.get(t.as_str()).ok_or_else(|| InstanceError::UnknownVertex {
                field: "terminals",
                vertex: t.clone(),
            })?;
            if seen.insert(i) {
                terminals.push(i);
            }
        }
        if terminals.is_empty() {
            return Err(InstanceError::NoTerminals);
        }
        let mut tokens = vec![BigUint::zero(); self.vertices.len()];
        for (name, value) in &self.tokens {
            let i = *index.get(name.as_str()).ok_or_else(|| InstanceError::UnknownVertex {
                field: "tokens",
                vertex: name.clone(),
            })?;
            if !seen.contains(&i) {
                return Err(InstanceError::TokensOnNonTerminal(name.clone()));
            }
            tokens[i] = count_from_json(value).map_err(|reason| InstanceError::BadTokenCount {
                vertex: name.clone(),
                reason,
            })?;
        }
        Instance::from_parts(self.vertices, s0, s1, &terminals, tokens)
    }
}

/// Simple undirected graph induced on a vertex subset: directions dropped,
/// parallel edges collapsed and self-loops removed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedView {
    vertices: Vec<VertexId>,
    adjacency: Vec<Vec<usize>>,
}

impl UndirectedView {
    /// Builds a view from local adjacency over `vertices` (ascending instance ids).
    pub fn from_edges(vertices: Vec<VertexId>, edges: &[(VertexId, VertexId)]) -> Self {
        let local: HashMap<VertexId, usize> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for &(a, b) in edges {
            if a == b {
                continue;
            }
            if let (Some(&i), Some(&j)) = (local.get(&a), local.get(&b)) {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        UndirectedView {
            vertices,
            adjacency,
        }
    }

    /// Instance ids of the view's vertices, ascending.
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Neighbours of the `i`-th view vertex, as local positions.
    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Edges as instance-id pairs `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for (i, list) in self.adjacency.iter().enumerate() {
            for &j in list {
                if i < j {
                    out.push((self.vertices[i], self.vertices[j]));
                }
            }
        }
        out
    }
}

/// The simple undirected graph on `keep`. Edges with an endpoint outside
/// `keep` are dropped.
pub fn undirected_view(instance: &Instance, keep: &[VertexId]) -> UndirectedView {
    let mut vertices = keep.to_vec();
    vertices.sort_unstable();
    vertices.dedup();
    let mut edges = Vec::with_capacity(2 * vertices.len());
    for &v in &vertices {
        edges.push((v, instance.s0[v]));
        edges.push((v, instance.s1[v]));
    }
    UndirectedView::from_edges(vertices, &edges)
}

/// View of `G - T`: the non-terminal vertices of `instance`.
pub fn non_terminal_view(instance: &Instance) -> UndirectedView {
    let keep: Vec<VertexId> = instance.non_terminals().collect();
    undirected_view(instance, &keep)
}
