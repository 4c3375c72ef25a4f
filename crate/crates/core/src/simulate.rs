//! Direct token simulation and the two cheap special cases: the all-terminal
//! base case and greedy bulk propagation on acyclic instances.
//!
//! Every terminal first sends `⌈t⁺_v/2⌉` tokens along its even edge and
//! `⌊t⁺_v/2⌋` along its odd edge. Tokens on non-terminals then move one at a
//! time, each vertex alternating between its out-edges starting with the even
//! one. The resulting edge counts (the run profile) and arrivals do not
//! depend on the order in which tokens are moved.

use std::collections::VecDeque;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::flow::{ArrivalVector, SwitchingFlow};
use crate::instance::{Instance, Parity, VertexId};
use crate::trace::{Solution, SolveTrace};

/// Largest token total accepted by the single-token schedules.
const MAX_SINGLE_TOKENS: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulateError {
    #[error("step budget of {0} exceeded")]
    StepBudget(u64),
    #[error("{0} tokens are too many for single-token scheduling")]
    TooManyTokens(BigUint),
    #[error("directed cycle through non-terminal {0}")]
    Cycle(String),
    #[error("base case needs every vertex to be a terminal; {0} is not")]
    NotAllTerminals(String),
}

/// Order in which pending tokens are moved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Schedule {
    /// Sweep non-terminals by index, moving each vertex's whole pile at once.
    #[default]
    RoundRobin,
    /// One token at a time, oldest pending token first.
    Fifo,
    /// One token at a time, newest pending token first.
    Lifo,
}

#[derive(Clone, Debug, Default)]
pub struct SimulateOptions {
    pub schedule: Schedule,
    /// Overrides the default budget of `2^n · t⁺ · n` moves.
    pub step_budget: Option<u64>,
}

/// Default budget `2^n · t⁺ · n`, saturating at `u64::MAX`.
pub fn default_step_budget(instance: &Instance) -> u64 {
    let budget = (instance.total_tokens() << instance.n()) * BigUint::from(instance.n().max(1));
    budget.to_u64().unwrap_or(u64::MAX)
}

/// The run profile with the default round-robin schedule.
pub fn run_profile(instance: &Instance) -> Result<Solution, SimulateError> {
    run_profile_with(instance, &SimulateOptions::default())
}

pub fn run_profile_with(
    instance: &Instance,
    options: &SimulateOptions,
) -> Result<Solution, SimulateError> {
    let budget = options
        .step_budget
        .unwrap_or_else(|| default_step_budget(instance));
    let mut sim = Simulation::new(instance);
    match options.schedule {
        Schedule::RoundRobin => sim.round_robin(budget)?,
        Schedule::Fifo => sim.single_tokens(budget, false)?,
        Schedule::Lifo => sim.single_tokens(budget, true)?,
    }
    let trace = SolveTrace {
        simulation_steps: sim.steps,
        ..SolveTrace::default()
    };
    Ok(Solution {
        arrivals: ArrivalVector::from_inflow(instance.terminal_mask(), sim.arrived),
        flow: sim.flow,
        trace,
    })
}

struct Simulation<'a> {
    instance: &'a Instance,
    flow: SwitchingFlow,
    /// Tokens waiting at each non-terminal.
    pile: Vec<BigUint>,
    /// Next edge to use is odd.
    odd_next: Vec<bool>,
    /// Tokens that reached each terminal.
    arrived: Vec<BigUint>,
    steps: u64,
}

impl<'a> Simulation<'a> {
    fn new(instance: &'a Instance) -> Self {
        let n = instance.n();
        let mut sim = Simulation {
            instance,
            flow: SwitchingFlow::zero(n),
            pile: vec![BigUint::zero(); n],
            odd_next: vec![false; n],
            arrived: vec![BigUint::zero(); n],
            steps: 0,
        };
        for v in instance.terminals() {
            let (even, odd) = split_even_first(instance.tokens(v));
            sim.send(v, Parity::Even, even);
            sim.send(v, Parity::Odd, odd);
        }
        sim
    }

    fn send(&mut self, v: VertexId, parity: Parity, count: BigUint) {
        if count.is_zero() {
            return;
        }
        let w = self.instance.successor(v, parity);
        *self.flow.slot_mut(v, parity) += &count;
        if self.instance.is_terminal(w) {
            self.arrived[w] += count;
        } else {
            self.pile[w] += count;
        }
    }

    fn round_robin(&mut self, budget: u64) -> Result<(), SimulateError> {
        let movers: Vec<VertexId> = self.instance.non_terminals().collect();
        loop {
            let mut moved = false;
            for &v in &movers {
                if self.pile[v].is_zero() {
                    continue;
                }
                if self.steps >= budget {
                    return Err(SimulateError::StepBudget(budget));
                }
                self.steps += 1;
                moved = true;
                let m = std::mem::take(&mut self.pile[v]);
                let (first, second) = split_even_first(&m);
                let (a, b) = if self.odd_next[v] {
                    (Parity::Odd, Parity::Even)
                } else {
                    (Parity::Even, Parity::Odd)
                };
                if m.is_odd() {
                    self.odd_next[v] = !self.odd_next[v];
                }
                self.send(v, a, first);
                self.send(v, b, second);
            }
            if !moved {
                return Ok(());
            }
        }
    }

    fn single_tokens(&mut self, budget: u64, lifo: bool) -> Result<(), SimulateError> {
        let total = self.instance.total_tokens();
        if total > &BigUint::from(MAX_SINGLE_TOKENS) {
            return Err(SimulateError::TooManyTokens(total.clone()));
        }
        let mut pending: VecDeque<VertexId> = VecDeque::new();
        for v in self.instance.non_terminals() {
            let count = self.pile[v].to_u64().expect("bounded by total tokens");
            pending.extend(std::iter::repeat_n(v, count as usize));
        }
        self.pile.iter_mut().for_each(|p| p.set_zero());
        let one = BigUint::one();
        while let Some(v) = if lifo {
            pending.pop_back()
        } else {
            pending.pop_front()
        } {
            if self.steps >= budget {
                return Err(SimulateError::StepBudget(budget));
            }
            self.steps += 1;
            let parity = if self.odd_next[v] {
                Parity::Odd
            } else {
                Parity::Even
            };
            self.odd_next[v] = !self.odd_next[v];
            let w = self.instance.successor(v, parity);
            *self.flow.slot_mut(v, parity) += &one;
            if self.instance.is_terminal(w) {
                self.arrived[w] += &one;
            } else {
                pending.push_back(w);
            }
        }
        Ok(())
    }
}

/// `(⌈m/2⌉, ⌊m/2⌋)`.
pub(crate) fn split_even_first(m: &BigUint) -> (BigUint, BigUint) {
    let half = m >> 1u32;
    (m - &half, half)
}

/// The all-terminal base case: `x(v,even) = ⌈t⁺_v/2⌉`, `x(v,odd) = ⌊t⁺_v/2⌋`.
pub fn base_case_flow(instance: &Instance) -> Result<SwitchingFlow, SimulateError> {
    if let Some(v) = instance.non_terminals().next() {
        return Err(SimulateError::NotAllTerminals(instance.name(v).to_string()));
    }
    Ok(base_flow(instance.token_vector()))
}

pub(crate) fn base_flow(tokens: &[BigUint]) -> SwitchingFlow {
    let (even, odd) = tokens.iter().map(split_even_first).unzip();
    SwitchingFlow::from_vecs(even, odd)
}

/// Greedy bulk propagation in topological order. Requires that the
/// non-terminal part of the graph has no directed cycle.
pub fn solve_acyclic(instance: &Instance) -> Result<Solution, SimulateError> {
    let flow = acyclic_flow(
        instance.s0(),
        instance.s1(),
        instance.terminal_mask(),
        instance.token_vector(),
    )
    .map_err(|v| SimulateError::Cycle(instance.name(v).to_string()))?;
    let inflow = flow.in_flows(instance.s0(), instance.s1());
    Ok(Solution {
        arrivals: ArrivalVector::from_inflow(instance.terminal_mask(), inflow),
        flow,
        trace: SolveTrace::default(),
    })
}

/// Topological order of the non-terminals, or a vertex on a directed cycle.
pub(crate) fn non_terminal_order(
    s0: &[VertexId],
    s1: &[VertexId],
    terminal: &[bool],
) -> Result<Vec<VertexId>, VertexId> {
    let n = s0.len();
    let mut indegree = vec![0usize; n];
    for v in (0..n).filter(|&v| !terminal[v]) {
        for w in [s0[v], s1[v]] {
            if !terminal[w] {
                indegree[w] += 1;
            }
        }
    }
    let mut ready: VecDeque<VertexId> = (0..n)
        .filter(|&v| !terminal[v] && indegree[v] == 0)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_front() {
        order.push(v);
        for w in [s0[v], s1[v]] {
            if !terminal[w] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.push_back(w);
                }
            }
        }
    }
    let remaining = n - terminal.iter().filter(|&&t| t).count();
    if order.len() == remaining {
        return Ok(order);
    }
    // Every leftover vertex has a leftover predecessor; walking backwards
    // must revisit a vertex, and that vertex lies on a cycle.
    let left: Vec<bool> = (0..n).map(|v| !terminal[v] && indegree[v] > 0).collect();
    let preds = crate::instance::predecessor_lists(s0, s1);
    let mut v = (0..n).find(|&v| left[v]).expect("some vertex is left over");
    let mut visited = vec![false; n];
    while !visited[v] {
        visited[v] = true;
        v = preds[v]
            .iter()
            .map(|&(u, _)| u)
            .find(|&u| left[u])
            .expect("leftover vertices have leftover predecessors");
    }
    Err(v)
}

pub(crate) fn acyclic_flow(
    s0: &[VertexId],
    s1: &[VertexId],
    terminal: &[bool],
    tokens: &[BigUint],
) -> Result<SwitchingFlow, VertexId> {
    let order = non_terminal_order(s0, s1, terminal)?;
    let n = s0.len();
    let mut mass = vec![BigUint::zero(); n];
    let mut flow = SwitchingFlow::zero(n);
    let mut emit = |v: VertexId, m: &BigUint, mass: &mut Vec<BigUint>| {
        let (even, odd) = split_even_first(m);
        mass[s0[v]] += &even;
        mass[s1[v]] += &odd;
        flow.set(v, Parity::Even, even);
        flow.set(v, Parity::Odd, odd);
    };
    for v in (0..n).filter(|&v| terminal[v]) {
        emit(v, &tokens[v], &mut mass);
    }
    for v in order {
        let m = std::mem::take(&mut mass[v]);
        emit(v, &m, &mut mass);
    }
    Ok(flow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::verify_switching_flow;

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
    fn initial_split_only() {
        // T = V = {a, b}; s0(a)=b, s1(a)=a
        let inst = Instance::from_indices(vec![1, 1], vec![0, 1], &[0, 1], vec![big(3), big(0)])
            .unwrap();
        let sol = run_profile(&inst).unwrap();
        assert_eq!(sol.arrivals.get(0), Some(&big(1)));
        assert_eq!(sol.arrivals.get(1), Some(&big(2)));
        assert_eq!(sol.flow.get(0, Parity::Even), &big(2));
        assert_eq!(sol.flow.get(0, Parity::Odd), &big(1));
    }

    #[test]
    fn one_token_through_self_loop() {
        let sol = run_profile(&two_vertex(1)).unwrap();
        assert_eq!(sol.arrivals.get(0), Some(&big(1)));
        let expect = [(0, Parity::Even, 1), (0, Parity::Odd, 0), (1, Parity::Even, 1), (1, Parity::Odd, 1)];
        for (v, p, x) in expect {
            assert_eq!(sol.flow.get(v, p), &big(x), "{v} {p}");
        }
    }

    #[test]
    fn two_tokens_through_self_loop_any_schedule() {
        for schedule in [Schedule::RoundRobin, Schedule::Fifo, Schedule::Lifo] {
            let opts = SimulateOptions {
                schedule,
                step_budget: None,
            };
            let sol = run_profile_with(&two_vertex(2), &opts).unwrap();
            assert_eq!(sol.arrivals.get(0), Some(&big(2)));
            assert_eq!(sol.flow.get(1, Parity::Even), &big(2));
            assert_eq!(sol.flow.get(1, Parity::Odd), &big(2));
        }
    }

    #[test]
    fn step_budget_is_enforced() {
        let opts = SimulateOptions {
            schedule: Schedule::RoundRobin,
            step_budget: Some(1),
        };
        assert_eq!(
            run_profile_with(&two_vertex(1), &opts).unwrap_err(),
            SimulateError::StepBudget(1)
        );
    }

    #[test]
    fn base_case_splits() {
        let inst = Instance::from_indices(
            vec![1, 2, 0],
            vec![2, 0, 1],
            &[0, 1, 2],
            vec![big(0), big(5), big(4)],
        )
        .unwrap();
        let flow = base_case_flow(&inst).unwrap();
        let got: Vec<_> = (0..3)
            .map(|v| (flow.get(v, Parity::Even).clone(), flow.get(v, Parity::Odd).clone()))
            .collect();
        assert_eq!(got, vec![(big(0), big(0)), (big(3), big(2)), (big(2), big(2))]);
        assert!(base_case_flow(&two_vertex(1)).is_err());
    }

    #[test]
    fn chain_delivers_everything() {
        // d=0 terminal; v1 -> d, v2 -> v1, v3 -> v2 (both successors)
        let inst = Instance::from_indices(
            vec![3, 0, 1, 2],
            vec![3, 0, 1, 2],
            &[0],
            vec![big(7), big(0), big(0), big(0)],
        )
        .unwrap();
        let sol = solve_acyclic(&inst).unwrap();
        assert_eq!(sol.arrivals.get(0), Some(&big(7)));
        assert_eq!(sol.arrivals, run_profile(&inst).unwrap().arrivals);
    }

    #[test]
    fn self_loop_is_a_cycle() {
        assert_eq!(
            solve_acyclic(&two_vertex(1)).unwrap_err(),
            SimulateError::Cycle("v".into())
        );
    }

    #[test]
    fn diamond() {
        // d=0, d'=1 terminals; u=2, w=3. s0(d)=u, s1(d)=w, u and w go to d'.
        // d' sends to itself.
        let inst = Instance::from_indices(
            vec![2, 1, 1, 1],
            vec![3, 1, 1, 1],
            &[0, 1],
            vec![big(4), big(0), big(0), big(0)],
        )
        .unwrap();
        let sol = solve_acyclic(&inst).unwrap();
        assert_eq!(sol.arrivals.get(1), Some(&big(4)));
        assert_eq!(sol.arrivals.get(0), Some(&big(0)));
        assert_eq!(sol.flow, run_profile(&inst).unwrap().flow);
        assert!(verify_switching_flow(&inst, &sol.flow).unwrap().valid);
    }

    #[test]
    fn cycle_vertex_lies_on_cycle() {
        // 0 terminal; 1 -> 2 -> 3 -> 2 (cycle 2,3), 1 downstream-free
        let inst = Instance::from_indices(
            vec![1, 2, 3, 2],
            vec![1, 0, 0, 0],
            &[0],
            vec![big(1), big(0), big(0), big(0)],
        )
        .unwrap();
        match solve_acyclic(&inst) {
            Err(SimulateError::Cycle(v)) => assert!(v == "v2" || v == "v3", "{v}"),
            other => panic!("expected cycle, got {other:?}"),
        }
    }
}
