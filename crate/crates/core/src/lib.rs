//! Solvers for G-ARRIVAL: where do the tokens of a switch graph end up?
//!
//! Every solver returns an [`ArrivalVector`]; all but the contraction
//! strategy also return an integral [`SwitchingFlow`] certifying it, which
//! [`verify_switching_flow`] checks exactly.

pub mod contraction;
pub mod decompose;
pub mod flow;
pub mod generate;
pub mod instance;
pub mod simulate;
pub mod solver;
pub mod strategy;
pub mod trace;

pub use flow::{arrivals_of, verify_switching_flow, ArrivalVector, FlowError, FlowReport, SwitchingFlow};
pub use instance::{Instance, InstanceError, Parity, VertexId};
pub use simulate::{run_profile, run_profile_with, Schedule, SimulateError, SimulateOptions};
pub use solver::{solve_fvs, solve_recursive, solve_separator, SolveError, SolveOptions};
pub use trace::{Solution, SolveTrace};
pub use strategy::{crosscheck, solve_with, Outcome, Strategy, StrategyConfig, StrategyError};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/switch-graphs.md")]
    pub struct SwitchGraphs;
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub struct Simulation;
    #[doc = include_str!("../../../book/src/switching-flows.md")]
    pub struct SwitchingFlows;
    #[doc = include_str!("../../../book/src/recursive-solvers.md")]
    pub struct RecursiveSolvers;
    #[doc = include_str!("../../../book/src/contraction.md")]
    pub struct Contraction;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
