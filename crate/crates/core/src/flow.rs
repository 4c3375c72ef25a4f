//! Switching flows: the certificate object for G-ARRIVAL answers.
//!
//! A switching flow `x` assigns a nonnegative integer to every edge slot and
//! satisfies three constraint families: switching behaviour
//! (`x(v,even) - x(v,odd) ∈ {0,1}`), flow conservation at non-terminals, and
//! the source constraint `out(v) = t⁺_v` at terminals. Any integral switching
//! flow certifies the arrivals: `in(v) = t⁻_v` for every terminal `v`.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::instance::{count_from_json, count_to_json, Instance, Parity, VertexId};

/// Per-edge-slot integer flow, indexed by source vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SwitchingFlow {
    even: Vec<BigUint>,
    odd: Vec<BigUint>,
}

impl SwitchingFlow {
    pub fn zero(n: usize) -> Self {
        SwitchingFlow {
            even: vec![BigUint::zero(); n],
            odd: vec![BigUint::zero(); n],
        }
    }

    pub fn from_vecs(even: Vec<BigUint>, odd: Vec<BigUint>) -> Self {
        assert_eq!(even.len(), odd.len(), "even and odd slots must align");
        SwitchingFlow { even, odd }
    }

    pub fn len(&self) -> usize {
        self.even.len()
    }

    pub fn is_empty(&self) -> bool {
        self.even.is_empty()
    }

    pub fn get(&self, v: VertexId, parity: Parity) -> &BigUint {
        match parity {
            Parity::Even => &self.even[v],
            Parity::Odd => &self.odd[v],
        }
    }

    pub fn set(&mut self, v: VertexId, parity: Parity, value: BigUint) {
        match parity {
            Parity::Even => self.even[v] = value,
            Parity::Odd => self.odd[v] = value,
        }
    }

    pub(crate) fn slot_mut(&mut self, v: VertexId, parity: Parity) -> &mut BigUint {
        match parity {
            Parity::Even => &mut self.even[v],
            Parity::Odd => &mut self.odd[v],
        }
    }

    /// `out(v) = x(v,even) + x(v,odd)`.
    pub fn out_flow(&self, v: VertexId) -> BigUint {
        &self.even[v] + &self.odd[v]
    }

    /// `in(v)`: sum over all edge slots whose head is `v`.
    pub fn in_flow(&self, instance: &Instance, v: VertexId) -> BigUint {
        self.in_flows(instance.s0(), instance.s1()).swap_remove(v)
    }

    pub(crate) fn in_flows(&self, s0: &[VertexId], s1: &[VertexId]) -> Vec<BigUint> {
        let mut inflow = vec![BigUint::zero(); self.len()];
        for v in 0..self.len() {
            inflow[s0[v]] += &self.even[v];
            inflow[s1[v]] += &self.odd[v];
        }
        inflow
    }

    /// Largest value on any edge slot.
    pub fn max_value(&self) -> BigUint {
        self.even
            .iter()
            .chain(self.odd.iter())
            .max()
            .cloned()
            .unwrap_or_default()
    }

    /// JSON flow document `{"flow": {"<vertex>": {"even": .., "odd": ..}}}`.
    pub fn to_json_value(&self, instance: &Instance) -> Value {
        let mut out = Map::new();
        out.insert("flow".into(), self.to_json_map(instance));
        Value::Object(out)
    }

    /// The inner `{"<vertex>": {"even": .., "odd": ..}}` object.
    pub fn to_json_map(&self, instance: &Instance) -> Value {
        let mut map = Map::new();
        for v in 0..self.len() {
            let mut slot = Map::new();
            slot.insert("even".into(), count_to_json(&self.even[v]));
            slot.insert("odd".into(), count_to_json(&self.odd[v]));
            map.insert(instance.name(v).to_string(), Value::Object(slot));
        }
        Value::Object(map)
    }

    /// Parses a flow document against `instance`. Extra top-level keys are
    /// ignored, so solver output can be fed back in directly.
    pub fn from_json(instance: &Instance, text: &str) -> Result<Self, FlowError> {
        let doc: Value =
            serde_json::from_str(text).map_err(|e| FlowError::Schema(e.to_string()))?;
        let map = doc
            .get("flow")
            .and_then(Value::as_object)
            .ok_or_else(|| FlowError::Schema("missing object field `flow`".into()))?;
        let n = instance.n();
        let mut flow = SwitchingFlow::zero(n);
        let mut seen = HashSet::new();
        for (name, slots) in map {
            let v = instance
                .index_of(name)
                .ok_or_else(|| FlowError::KeyMismatch(format!("unknown vertex `{name}`")))?;
            seen.insert(v);
            for parity in Parity::BOTH {
                let key = parity.to_string();
                let raw = slots
                    .get(&key)
                    .ok_or_else(|| FlowError::Schema(format!("`{name}` lacks `{key}`")))?;
                let value = count_from_json(raw)
                    .map_err(|e| FlowError::Schema(format!("`{name}.{key}`: {e}")))?;
                flow.set(v, parity, value);
            }
        }
        if seen.len() != n {
            let missing = (0..n).find(|v| !seen.contains(v)).expect("some vertex is missing");
            return Err(FlowError::KeyMismatch(format!(
                "no flow given for vertex `{}`",
                instance.name(missing)
            )));
        }
        Ok(flow)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("key mismatch: {0}")]
    KeyMismatch(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invalid switching flow: {0}")]
    Invalid(FlowReport),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ConstraintKind {
    #[serde(rename = "switching behavior")]
    SwitchingBehavior,
    #[serde(rename = "flow conservation")]
    FlowConservation,
    #[serde(rename = "source constraint")]
    SourceConstraint,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::SwitchingBehavior => "switching behavior",
            ConstraintKind::FlowConservation => "flow conservation",
            ConstraintKind::SourceConstraint => "source constraint",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ConstraintKind,
    pub vertex: String,
}

/// Outcome of [`verify_switching_flow`]. `valid` iff `violations` is empty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlowReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    /// Every edge value is strictly below `2^|V| · t⁺`.
    pub bound_ok: bool,
}

impl fmt::Display for FlowReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            return f.write_str("valid");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{} at {}", v.kind, v.vertex))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Exact check of all three constraint families plus the flow bound.
pub fn verify_switching_flow(
    instance: &Instance,
    flow: &SwitchingFlow,
) -> Result<FlowReport, FlowError> {
    if flow.len() != instance.n() {
        return Err(FlowError::KeyMismatch(format!(
            "flow covers {} vertices, instance has {}",
            flow.len(),
            instance.n()
        )));
    }
    let raw = check_flow(
        instance.s0(),
        instance.s1(),
        instance.terminal_mask(),
        instance.token_vector(),
        flow,
    );
    Ok(FlowReport {
        valid: raw.violations.is_empty(),
        violations: raw
            .violations
            .into_iter()
            .map(|(kind, v)| Violation {
                kind,
                vertex: instance.name(v).to_string(),
            })
            .collect(),
        bound_ok: raw.bound_ok,
    })
}

pub(crate) struct RawReport {
    pub violations: Vec<(ConstraintKind, VertexId)>,
    pub bound_ok: bool,
}

impl RawReport {
    pub fn valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Constraint check over raw parts; the bound uses the supplied tokens.
pub(crate) fn check_flow(
    s0: &[VertexId],
    s1: &[VertexId],
    terminal: &[bool],
    tokens: &[BigUint],
    flow: &SwitchingFlow,
) -> RawReport {
    let n = s0.len();
    let inflow = flow.in_flows(s0, s1);
    let mut violations = Vec::new();
    for v in 0..n {
        let (e, o) = (&flow.even[v], &flow.odd[v]);
        let switching_ok = e >= o && e - o <= BigUint::from(1u32);
        if !switching_ok {
            violations.push((ConstraintKind::SwitchingBehavior, v));
        }
        let out = e + o;
        if terminal[v] {
            if out != tokens[v] {
                violations.push((ConstraintKind::SourceConstraint, v));
            }
        } else if out != inflow[v] {
            violations.push((ConstraintKind::FlowConservation, v));
        }
    }
    let total: BigUint = tokens.iter().sum();
    RawReport {
        violations,
        bound_ok: flow.max_value() < (total << n),
    }
}

/// Terminal token counts `t⁻_v`, ordered by vertex index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ArrivalVector {
    entries: Vec<(VertexId, BigUint)>,
}

impl ArrivalVector {
    pub fn new(mut entries: Vec<(VertexId, BigUint)>) -> Self {
        entries.sort_by_key(|(v, _)| *v);
        ArrivalVector { entries }
    }

    /// Reads `in(v)` for every terminal from a per-vertex inflow table.
    pub(crate) fn from_inflow(terminal: &[bool], inflow: Vec<BigUint>) -> Self {
        let entries = inflow
            .into_iter()
            .enumerate()
            .filter(|(v, _)| terminal[*v])
            .collect();
        ArrivalVector { entries }
    }

    pub fn get(&self, v: VertexId) -> Option<&BigUint> {
        self.entries
            .binary_search_by_key(&v, |(u, _)| *u)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, &BigUint)> {
        self.entries.iter().map(|(v, c)| (*v, c))
    }

    pub fn total(&self) -> BigUint {
        self.entries.iter().map(|(_, c)| c).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Coordinate-wise `self ≤ other` over the same terminal set.
    pub fn le(&self, other: &ArrivalVector) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((a, x), (b, y))| a == b && x <= y)
    }

    pub fn to_json_value(&self, instance: &Instance) -> Value {
        let mut map = Map::new();
        for (v, c) in &self.entries {
            map.insert(instance.name(*v).to_string(), count_to_json(c));
        }
        Value::Object(map)
    }
}

/// Reads the arrivals certified by a valid switching flow.
pub fn arrivals_of(instance: &Instance, flow: &SwitchingFlow) -> Result<ArrivalVector, FlowError> {
    let report = verify_switching_flow(instance, flow)?;
    if !report.valid {
        return Err(FlowError::Invalid(report));
    }
    Ok(ArrivalVector::from_inflow(
        instance.terminal_mask(),
        flow.in_flows(instance.s0(), instance.s1()),
    ))
}
