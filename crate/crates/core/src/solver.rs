//! Recursive pivoting solvers.
//!
//! Each solver promotes one non-terminal `p` at a time to a terminal and
//! binary-searches the number of tokens `t⁺_p` it should start with: the
//! recursive answer's inflow `in(p)` is monotone in the guess, and a guess
//! with `in(p) = t⁺_p` turns the subinstance's switching flow into one for
//! the instance where `p` is an ordinary vertex. The strategies differ only
//! in which pivot they take and where the recursion bottoms out:
//!
//! * [`solve_recursive`]: lowest-index non-terminal, base case `T = V`.
//! * [`solve_separator`]: pivots from a smallest balanced separator of
//!   `G - T`; once it is used up, the instance splits into independent
//!   components that are solved separately and merged.
//! * [`solve_fvs`]: pivots from a smallest feedback vertex set, then greedy
//!   propagation once the non-terminal part is acyclic.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::decompose::{connected_components, smallest_balanced_separator, smallest_feedback_vertex_set};
use crate::flow::{arrivals_of, check_flow, FlowError, SwitchingFlow};
use crate::instance::{non_terminal_view, Instance, InstanceError, Parity, VertexId};
use crate::simulate::{acyclic_flow, base_flow, split_even_first, SimulateError};
use crate::trace::{BoundaryRecord, GuessRecord, Solution, SolveTrace, SplitRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("binary search for pivot {0} found no consistent guess")]
    NoConsistentGuess(String),
    #[error("component flows disagree on edge ({vertex}, {parity})")]
    MergeConflict { vertex: String, parity: Parity },
    #[error("merge left vertex {0} without a flow")]
    MergeIncomplete(String),
    #[error("recursive call returned an invalid flow: {0}")]
    IntermediateInvalid(String),
    #[error("solver produced an invalid result: {0}")]
    InvalidResult(FlowError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotKind {
    Arbitrary,
    Separator,
    Fvs,
}

/// Where the next pivot comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PivotStrategy {
    /// Any current non-terminal; the lowest index is taken.
    Arbitrary,
    /// Remaining members of a balanced separator, ascending.
    Separator(Vec<VertexId>),
    /// Remaining members of a feedback vertex set, ascending.
    Fvs(Vec<VertexId>),
}

impl PivotStrategy {
    pub fn kind(&self) -> PivotKind {
        match self {
            PivotStrategy::Arbitrary => PivotKind::Arbitrary,
            PivotStrategy::Separator(_) => PivotKind::Separator,
            PivotStrategy::Fvs(_) => PivotKind::Fvs,
        }
    }

    /// The next pivot given the current terminal mask, if any is left.
    pub fn choose(&self, terminal: &[bool]) -> Option<VertexId> {
        match self {
            PivotStrategy::Arbitrary => terminal.iter().position(|&t| !t),
            PivotStrategy::Separator(set) | PivotStrategy::Fvs(set) => {
                set.iter().copied().find(|&v| !terminal[v])
            }
        }
    }

    /// The strategy after `p` has been turned into a terminal.
    pub fn without(&self, p: VertexId) -> PivotStrategy {
        let strip = |set: &[VertexId]| set.iter().copied().filter(|&v| v != p).collect();
        match self {
            PivotStrategy::Arbitrary => PivotStrategy::Arbitrary,
            PivotStrategy::Separator(set) => PivotStrategy::Separator(strip(set)),
            PivotStrategy::Fvs(set) => PivotStrategy::Fvs(strip(set)),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    /// Reuse subinstance flows keyed by (terminal set, token vector).
    pub probe_cache: bool,
    /// Check every flow returned by a recursive call against its subinstance.
    pub verify_intermediate: bool,
}

/// Binary search for a guess `a` in `[0, upper]` with `probe(a) = a`.
///
/// `probe` returns the observed inflow for a guess plus an arbitrary payload.
/// The probe sequence is `⌈(ℓ+r)/2⌉` with `r ← a-1` when the inflow falls
/// short and `ℓ ← a+1` when it overshoots. Returns `None` if the range is
/// exhausted. The probe count is reported alongside.
pub fn bisect_guess<R, E>(
    upper: &BigUint,
    mut probe: impl FnMut(&BigUint) -> Result<(BigUint, R), E>,
) -> Result<(Option<(BigUint, R)>, u64), E> {
    let mut lo = BigUint::zero();
    let mut hi = upper.clone();
    let mut probes = 0u64;
    // `lo ≤ hi` rather than `lo < hi`: the final candidate still has to be
    // probed, otherwise a fixed point at `lo = hi` is never seen.
    while lo <= hi {
        let guess = (&lo + &hi + 1u32) >> 1u32;
        probes += 1;
        let (inflow, payload) = probe(&guess)?;
        if inflow == guess {
            return Ok((Some((guess, payload)), probes));
        }
        if inflow < guess {
            if guess.is_zero() {
                break;
            }
            hi = &guess - 1u32;
        } else {
            lo = &guess + 1u32;
        }
    }
    Ok((None, probes))
}

/// Promotes `p` to a terminal and binary-searches its token count using
/// `subsolver` on the promoted instances. Returns the accepted count and the
/// subinstance flow, which is a switching flow for `instance` itself.
pub fn binary_search_pivot(
    instance: &Instance,
    p: VertexId,
    mut subsolver: impl FnMut(&Instance) -> Result<SwitchingFlow, SolveError>,
) -> Result<(BigUint, SwitchingFlow, u64), SolveError> {
    let upper = instance.flow_bound();
    let (found, probes) = bisect_guess(&upper, |guess| {
        let sub = instance.with_terminal(p, guess.clone())?;
        let flow = subsolver(&sub)?;
        Ok::<_, SolveError>((flow.in_flow(&sub, p), flow))
    })?;
    match found {
        Some((accepted, flow)) => Ok((accepted, flow, probes)),
        None => Err(SolveError::NoConsistentGuess(instance.name(p).to_string())),
    }
}

/// Pivots on the lowest-index non-terminal; base case: every vertex a terminal.
pub fn solve_recursive(instance: &Instance) -> Result<Solution, SolveError> {
    solve_recursive_with(instance, &SolveOptions::default())
}

pub fn solve_recursive_with(
    instance: &Instance,
    options: &SolveOptions,
) -> Result<Solution, SolveError> {
    let mut trace = SolveTrace::default();
    let mut engine = Engine::new(instance, options);
    let mut state = State::of(instance);
    let outcome = engine.arbitrary(&mut state, 0, &mut trace)?;
    let flow = engine.materialize(outcome, &state);
    finish(instance, flow, trace)
}

/// Pivots on balanced separators and splits into components once one is used up.
pub fn solve_separator(instance: &Instance) -> Result<Solution, SolveError> {
    solve_separator_with(instance, &SolveOptions::default())
}

pub fn solve_separator_with(
    instance: &Instance,
    options: &SolveOptions,
) -> Result<Solution, SolveError> {
    let mut trace = SolveTrace::default();
    let flow = separator_entry(instance, options, 0, &mut trace)?;
    finish(instance, flow, trace)
}

/// Pivots from a smallest feedback vertex set, acyclic base case.
pub fn solve_fvs(instance: &Instance) -> Result<Solution, SolveError> {
    solve_fvs_with(instance, &SolveOptions::default())
}

pub fn solve_fvs_with(instance: &Instance, options: &SolveOptions) -> Result<Solution, SolveError> {
    let non_terminals: Vec<VertexId> = instance.non_terminals().collect();
    let fvs = smallest_feedback_vertex_set(instance, &non_terminals)
        .expect("removing every non-terminal leaves no cycle");
    let mut trace = SolveTrace::default();
    let mut engine = Engine::new(instance, options);
    let mut state = State::of(instance);
    let outcome = engine.fvs(&mut state, &PivotStrategy::Fvs(fvs), 0, &mut trace)?;
    let flow = engine.materialize(outcome, &state);
    finish(instance, flow, trace)
}

fn finish(instance: &Instance, flow: SwitchingFlow, trace: SolveTrace) -> Result<Solution, SolveError> {
    let arrivals = arrivals_of(instance, &flow).map_err(SolveError::InvalidResult)?;
    Ok(Solution {
        flow,
        arrivals,
        trace,
    })
}

/// One component of `G - T` with its subinstance `G_C`.
#[derive(Clone, Debug)]
pub struct SubInstance {
    /// The component `C`, as parent vertex ids.
    pub component: Vec<VertexId>,
    /// `G_C` on `C ∪ T`, vertices in parent order.
    pub instance: Instance,
    /// Parent id of each `G_C` vertex.
    pub to_parent: Vec<VertexId>,
}

/// Splits `instance` along the undirected components of `G - T`. Each
/// subinstance keeps `C ∪ T`; any edge leaving that set (necessarily out of a
/// terminal) becomes a self-loop on its source, per parity slot.
pub fn split_components(instance: &Instance) -> Result<Vec<SubInstance>, InstanceError> {
    let view = non_terminal_view(instance);
    let mut parts = Vec::new();
    for component in connected_components(&view) {
        let mut keep = vec![false; instance.n()];
        for &v in &component {
            keep[v] = true;
        }
        for v in instance.terminals() {
            keep[v] = true;
        }
        let to_parent: Vec<VertexId> = (0..instance.n()).filter(|&v| keep[v]).collect();
        let mut local = vec![usize::MAX; instance.n()];
        for (i, &v) in to_parent.iter().enumerate() {
            local[v] = i;
        }
        let remap = |succ: &[VertexId]| -> Vec<VertexId> {
            to_parent
                .iter()
                .enumerate()
                .map(|(i, &v)| if keep[succ[v]] { local[succ[v]] } else { i })
                .collect()
        };
        let names = to_parent.iter().map(|&v| instance.name(v).to_string()).collect();
        let terminals: Vec<VertexId> = to_parent
            .iter()
            .enumerate()
            .filter(|(_, &v)| instance.is_terminal(v))
            .map(|(i, _)| i)
            .collect();
        let tokens = to_parent.iter().map(|&v| instance.tokens(v).clone()).collect();
        let sub = Instance::from_parts(
            names,
            remap(instance.s0()),
            remap(instance.s1()),
            &terminals,
            tokens,
        )?;
        parts.push(SubInstance {
            component,
            instance: sub,
            to_parent,
        });
    }
    Ok(parts)
}

/// Combines component flows into a flow for `instance`. Edges out of a
/// component vertex come from that component; edges out of terminals must
/// agree across every subinstance that contains them.
pub fn merge_component_flows(
    instance: &Instance,
    parts: &[(SubInstance, SwitchingFlow)],
) -> Result<SwitchingFlow, SolveError> {
    let n = instance.n();
    let mut merged = SwitchingFlow::zero(n);
    let mut assigned = vec![false; n];
    for (sub, flow) in parts {
        for (i, &v) in sub.to_parent.iter().enumerate() {
            if assigned[v] {
                for parity in Parity::BOTH {
                    if merged.get(v, parity) != flow.get(i, parity) {
                        return Err(SolveError::MergeConflict {
                            vertex: instance.name(v).to_string(),
                            parity,
                        });
                    }
                }
                continue;
            }
            assigned[v] = true;
            for parity in Parity::BOTH {
                merged.set(v, parity, flow.get(i, parity).clone());
            }
        }
    }
    if let Some(v) = assigned.iter().position(|&a| !a) {
        return Err(SolveError::MergeIncomplete(instance.name(v).to_string()));
    }
    Ok(merged)
}

/// Entry of the separator solver on a (sub)instance: computes the separator
/// for `G - T`, opens a boundary record and recurses.
fn separator_entry(
    instance: &Instance,
    options: &SolveOptions,
    depth: usize,
    trace: &mut SolveTrace,
) -> Result<SwitchingFlow, SolveError> {
    let view = non_terminal_view(instance);
    let separator = smallest_balanced_separator(&view);
    trace.separators_found.push(separator.len());
    trace.boundaries.push(BoundaryRecord {
        separator: separator.vertices.clone(),
        separator_size: separator.len(),
        non_terminals: view.len(),
        max_levels: 0,
        view,
    });
    let boundary = trace.boundaries.len() - 1;
    let mut engine = Engine::new(instance, options);
    let mut state = State::of(instance);
    let strategy = PivotStrategy::Separator(separator.vertices);
    let outcome = engine.separator(&mut state, &strategy, boundary, 0, depth, trace)?;
    Ok(engine.materialize(outcome, &state))
}

/// Working terminal mask and token vector. Tokens on vertices that are not
/// currently terminals are stale leftovers of accepted guesses and only
/// matter for materializing an implicit base-case flow.
struct State {
    terminal: Vec<bool>,
    tokens: Vec<BigUint>,
}

impl State {
    fn of(instance: &Instance) -> Self {
        State {
            terminal: instance.terminal_mask().to_vec(),
            tokens: instance.token_vector().to_vec(),
        }
    }

    fn all_terminal(&self) -> bool {
        self.terminal.iter().all(|&t| t)
    }

    fn terminal_tokens(&self) -> Vec<BigUint> {
        self.tokens
            .iter()
            .zip(&self.terminal)
            .map(|(t, &is_t)| if is_t { t.clone() } else { BigUint::zero() })
            .collect()
    }

    fn total(&self) -> BigUint {
        self.tokens
            .iter()
            .zip(&self.terminal)
            .filter(|(_, &is_t)| is_t)
            .map(|(t, _)| t)
            .sum()
    }
}

/// A recursive call's flow. The base case is kept implicit: its flow is
/// `base_flow(tokens)` of the state at return time, which every caller
/// leaves untouched until it either accepts (and returns it upward) or
/// discards it with a new probe.
enum Outcome {
    Implicit,
    Explicit(SwitchingFlow),
}

struct Engine<'a> {
    instance: &'a Instance,
    options: &'a SolveOptions,
    preds: Vec<Vec<(VertexId, Parity)>>,
    cache: HashMap<(Vec<bool>, Vec<BigUint>), SwitchingFlow>,
}

impl<'a> Engine<'a> {
    fn new(instance: &'a Instance, options: &'a SolveOptions) -> Self {
        Engine {
            instance,
            options,
            preds: instance.predecessors(),
            cache: HashMap::new(),
        }
    }

    fn materialize(&self, outcome: Outcome, state: &State) -> SwitchingFlow {
        match outcome {
            Outcome::Implicit => base_flow(&state.tokens),
            Outcome::Explicit(flow) => flow,
        }
    }

    fn inflow(&self, outcome: &Outcome, state: &State, p: VertexId) -> BigUint {
        let mut total = BigUint::zero();
        for &(u, parity) in &self.preds[p] {
            match outcome {
                Outcome::Implicit => {
                    let (even, odd) = split_even_first(&state.tokens[u]);
                    total += if parity == Parity::Even { even } else { odd };
                }
                Outcome::Explicit(flow) => total += flow.get(u, parity),
            }
        }
        total
    }

    /// Promotes `p`, then binary-searches its tokens with `sub` solving the
    /// promoted state. On success `p` is demoted again and the accepted
    /// token count stays in `state.tokens[p]`.
    fn search(
        &mut self,
        state: &mut State,
        p: VertexId,
        trace: &mut SolveTrace,
        mut sub: impl FnMut(&mut Self, &mut State, &mut SolveTrace) -> Result<Outcome, SolveError>,
    ) -> Result<Outcome, SolveError> {
        let upper = state.total() << self.instance.n();
        state.terminal[p] = true;
        let mut probes = 0u64;
        let (found, _) = bisect_guess(&upper, |guess| {
            probes += 1;
            state.tokens[p] = guess.clone();
            let outcome = self.probe(state, trace, &mut sub)?;
            Ok::<_, SolveError>((self.inflow(&outcome, state, p), outcome))
        })?;
        trace.binary_search_probes += probes;
        state.terminal[p] = false;
        match found {
            Some((accepted, outcome)) => {
                trace.guesses.push(GuessRecord {
                    pivot: p,
                    accepted,
                    upper,
                });
                Ok(outcome)
            }
            None => Err(SolveError::NoConsistentGuess(self.instance.name(p).to_string())),
        }
    }

    fn probe(
        &mut self,
        state: &mut State,
        trace: &mut SolveTrace,
        sub: &mut impl FnMut(&mut Self, &mut State, &mut SolveTrace) -> Result<Outcome, SolveError>,
    ) -> Result<Outcome, SolveError> {
        let key = self
            .options
            .probe_cache
            .then(|| (state.terminal.clone(), state.terminal_tokens()));
        if let Some(flow) = key.as_ref().and_then(|k| self.cache.get(k)) {
            return Ok(Outcome::Explicit(flow.clone()));
        }
        let outcome = sub(self, state, trace)?;
        if !self.options.verify_intermediate && key.is_none() {
            return Ok(outcome);
        }
        let flow = self.materialize(outcome, state);
        if self.options.verify_intermediate {
            let report = check_flow(
                self.instance.s0(),
                self.instance.s1(),
                &state.terminal,
                &state.terminal_tokens(),
                &flow,
            );
            if !report.valid() {
                let (kind, v) = report.violations[0];
                return Err(SolveError::IntermediateInvalid(format!(
                    "{kind} at {}",
                    self.instance.name(v)
                )));
            }
        }
        if let Some(k) = key {
            self.cache.insert(k, flow.clone());
        }
        Ok(Outcome::Explicit(flow))
    }

    fn arbitrary(
        &mut self,
        state: &mut State,
        depth: usize,
        trace: &mut SolveTrace,
    ) -> Result<Outcome, SolveError> {
        trace.note_depth(depth);
        trace.subinstances_solved += 1;
        let Some(p) = PivotStrategy::Arbitrary.choose(&state.terminal) else {
            return Ok(Outcome::Implicit);
        };
        self.search(state, p, trace, |engine, state, trace| {
            engine.arbitrary(state, depth + 1, trace)
        })
    }

    fn fvs(
        &mut self,
        state: &mut State,
        strategy: &PivotStrategy,
        depth: usize,
        trace: &mut SolveTrace,
    ) -> Result<Outcome, SolveError> {
        trace.note_depth(depth);
        trace.subinstances_solved += 1;
        let Some(p) = strategy.choose(&state.terminal) else {
            let flow = acyclic_flow(
                self.instance.s0(),
                self.instance.s1(),
                &state.terminal,
                &state.tokens,
            )
            .map_err(|v| SimulateError::Cycle(self.instance.name(v).to_string()))?;
            return Ok(Outcome::Explicit(flow));
        };
        let rest = strategy.without(p);
        self.search(state, p, trace, |engine, state, trace| {
            engine.fvs(state, &rest, depth + 1, trace)
        })
    }

    fn separator(
        &mut self,
        state: &mut State,
        strategy: &PivotStrategy,
        boundary: usize,
        levels: usize,
        depth: usize,
        trace: &mut SolveTrace,
    ) -> Result<Outcome, SolveError> {
        trace.note_depth(depth);
        trace.subinstances_solved += 1;
        if state.all_terminal() {
            let record = &mut trace.boundaries[boundary];
            record.max_levels = record.max_levels.max(levels);
            return Ok(Outcome::Implicit);
        }
        if let Some(p) = strategy.choose(&state.terminal) {
            let rest = strategy.without(p);
            return self.search(state, p, trace, |engine, state, trace| {
                engine.separator(state, &rest, boundary, levels + 1, depth + 1, trace)
            });
        }
        {
            let record = &mut trace.boundaries[boundary];
            record.max_levels = record.max_levels.max(levels);
        }
        trace.splitting_events += 1;
        let current = Instance::from_parts(
            self.instance.names().to_vec(),
            self.instance.s0().to_vec(),
            self.instance.s1().to_vec(),
            &(0..self.instance.n())
                .filter(|&v| state.terminal[v])
                .collect::<Vec<_>>(),
            state.terminal_tokens(),
        )?;
        let parts = split_components(&current)?;
        trace.splits.push(SplitRecord {
            parent_non_terminals: trace.boundaries[boundary].non_terminals,
            component_sizes: parts.iter().map(|p| p.component.len()).collect(),
        });
        let mut solved = Vec::with_capacity(parts.len());
        for part in parts {
            let flow = separator_entry(&part.instance, self.options, depth + 1, trace)?;
            solved.push((part, flow));
        }
        Ok(Outcome::Explicit(merge_component_flows(&current, &solved)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::verify_switching_flow;
    use crate::simulate::run_profile;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn two_vertex(t: u64) -> Instance {
        Instance::from_parts(
            vec!["d".into(), "v".into()],
            vec![1, 1],
            vec![1, 0],
            &[0],
            vec![big(t), big(0)],
        )
        .unwrap()
    }

    #[test]
    fn all_terminal_instance_is_base_case() {
        let inst = Instance::from_indices(vec![1, 0], vec![1, 1], &[0, 1], vec![big(3), big(2)]).unwrap();
        for sol in [
            solve_recursive(&inst).unwrap(),
            solve_separator(&inst).unwrap(),
            solve_fvs(&inst).unwrap(),
        ] {
            assert_eq!(sol.flow, base_flow(inst.token_vector()));
            assert_eq!(sol.trace.binary_search_probes, 0);
            assert_eq!(sol.trace.max_recursion_depth, 0);
        }
    }

    #[test]
    fn two_vertex_accepts_two() {
        let inst = two_vertex(1);
        for sol in [
            solve_recursive(&inst).unwrap(),
            solve_separator(&inst).unwrap(),
            solve_fvs(&inst).unwrap(),
        ] {
            assert_eq!(sol.arrivals.get(0), Some(&big(1)));
            assert_eq!(sol.flow.get(1, Parity::Even), &big(1));
            assert_eq!(sol.flow.get(1, Parity::Odd), &big(1));
            assert_eq!(sol.trace.guesses.len(), 1);
            assert_eq!(sol.trace.guesses[0].accepted, big(2));
            assert_eq!(sol.trace.guesses[0].pivot, 1);
        }
    }

    #[test]
    fn public_pivot_search_matches() {
        let inst = two_vertex(1);
        let (accepted, flow, probes) = binary_search_pivot(&inst, 1, |sub| {
            Ok(crate::simulate::base_case_flow(sub)?)
        })
        .unwrap();
        assert_eq!(accepted, big(2));
        assert!(verify_switching_flow(&inst, &flow).unwrap().valid);
        // upper = 2^2 * 1 = 4: probes 2 (in = 1 + 1 = 2) accept at once
        assert_eq!(probes, 1);
    }

    #[test]
    fn bisect_finds_zero() {
        // monotone oracle with fixed point 0: f(a) = a / 2
        let upper = big(1 << 10) * big(3);
        let (found, probes) =
            bisect_guess(&upper, |a| Ok::<_, ()>((a >> 1u32, ()))).unwrap();
        assert_eq!(found.unwrap().0, big(0));
        let bound = upper.bits() + 1;
        assert!(probes <= bound, "{probes} > {bound}");
        assert!(probes >= 10);
    }

    #[test]
    fn bisect_reports_exhaustion() {
        // f(a) = a + 1 has no fixed point
        let (found, probes) =
            bisect_guess(&big(16), |a| Ok::<_, ()>((a + 1u32, ()))).unwrap();
        assert!(found.is_none());
        assert!(probes <= 6);
    }

    #[test]
    fn pivot_strategy_members_only() {
        let s = PivotStrategy::Separator(vec![2, 4]);
        let mask = vec![false, false, true, false, false];
        assert_eq!(s.choose(&mask), Some(4));
        assert_eq!(s.without(4).choose(&mask), None);
        assert_eq!(PivotStrategy::Arbitrary.choose(&mask), Some(0));
        assert_eq!(PivotStrategy::Fvs(vec![]).kind(), PivotKind::Fvs);
    }

    /// Terminal d=0 with s0 into C1 = {1} and s1 into C2 = {2}; both
    /// components return to d.
    fn two_components() -> Instance {
        Instance::from_indices(vec![1, 1, 0], vec![2, 0, 2], &[0], vec![big(5), big(0), big(0)]).unwrap()
    }

    #[test]
    fn split_rewrites_terminal_edges() {
        let inst = two_components();
        let parts = split_components(&inst).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].component, vec![1]);
        assert_eq!(parts[1].component, vec![2]);
        // in G_{C2} (vertices d, 2) the even edge of d left the set
        let g2 = &parts[1].instance;
        assert_eq!(parts[1].to_parent, vec![0, 2]);
        assert_eq!(g2.successor(0, Parity::Even), 0);
        assert_eq!(g2.successor(0, Parity::Odd), 1);
        let g1 = &parts[0].instance;
        assert_eq!(g1.successor(0, Parity::Odd), 0);
        assert_eq!(g1.successor(0, Parity::Even), 1);
    }

    #[test]
    fn merge_of_simulated_parts_verifies() {
        let inst = two_components();
        let parts = split_components(&inst).unwrap();
        let solved: Vec<_> = parts
            .into_iter()
            .map(|p| {
                let flow = run_profile(&p.instance).unwrap().flow;
                (p, flow)
            })
            .collect();
        let merged = merge_component_flows(&inst, &solved).unwrap();
        assert!(verify_switching_flow(&inst, &merged).unwrap().valid);
        let arrivals = arrivals_of(&inst, &merged).unwrap();
        assert_eq!(arrivals.total(), big(5));
        assert_eq!(arrivals, run_profile(&inst).unwrap().arrivals);
    }

    #[test]
    fn merge_detects_conflict() {
        let inst = two_components();
        let parts = split_components(&inst).unwrap();
        let mut solved: Vec<_> = parts
            .into_iter()
            .map(|p| {
                let flow = run_profile(&p.instance).unwrap().flow;
                (p, flow)
            })
            .collect();
        solved[1].1.set(0, Parity::Even, big(99));
        assert!(matches!(
            merge_component_flows(&inst, &solved),
            Err(SolveError::MergeConflict { .. })
        ));
    }

    #[test]
    fn separator_splits_two_components() {
        let inst = two_components();
        let sol = solve_separator_with(
            &inst,
            &SolveOptions {
                verify_intermediate: true,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert_eq!(sol.arrivals, run_profile(&inst).unwrap().arrivals);
        assert!(sol.trace.splitting_events >= 1);
        assert_eq!(sol.trace.boundaries[0].separator_size, 0);
    }

    #[test]
    fn cache_and_intermediate_checks_agree() {
        let inst = two_vertex(3);
        let plain = solve_recursive(&inst).unwrap();
        let opts = SolveOptions {
            probe_cache: true,
            verify_intermediate: true,
        };
        let cached = solve_recursive_with(&inst, &opts).unwrap();
        assert_eq!(plain.arrivals, cached.arrivals);
        assert_eq!(solve_fvs_with(&inst, &opts).unwrap().arrivals, plain.arrivals);
    }
}
