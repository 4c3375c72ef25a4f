//! Uniform entry point over all strategies, and cross-checking between them.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::contraction::{solve_contraction, ContractionError, ContractionOptions, ContractionOutcome};
use crate::flow::{verify_switching_flow, ArrivalVector, FlowReport, SwitchingFlow};
use crate::instance::Instance;
use crate::simulate::{run_profile_with, SimulateError, SimulateOptions};
use crate::solver::{solve_fvs_with, solve_recursive_with, solve_separator_with, SolveError, SolveOptions};
use crate::trace::{Solution, SolveTrace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Simulate,
    Recursive,
    Separator,
    Fvs,
    Contraction,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Simulate,
        Strategy::Recursive,
        Strategy::Separator,
        Strategy::Fvs,
        Strategy::Contraction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Simulate => "simulate",
            Strategy::Recursive => "recursive",
            Strategy::Separator => "separator",
            Strategy::Fvs => "fvs",
            Strategy::Contraction => "contraction",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown strategy {0:?}")]
pub struct UnknownStrategy(pub String);

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, UnknownStrategy> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Contraction(#[from] ContractionError),
}

#[derive(Clone, Debug, Default)]
pub struct StrategyConfig {
    pub simulate: SimulateOptions,
    pub solve: SolveOptions,
    pub contraction: ContractionOptions,
}

/// What any strategy returns.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub arrivals: ArrivalVector,
    /// Certificate; absent only for a contraction run whose fixed point is
    /// fractional.
    pub flow: Option<SwitchingFlow>,
    pub trace: SolveTrace,
    pub contraction: Option<ContractionOutcome>,
}

impl From<Solution> for Outcome {
    fn from(s: Solution) -> Self {
        Outcome {
            arrivals: s.arrivals,
            flow: Some(s.flow),
            trace: s.trace,
            contraction: None,
        }
    }
}

pub fn solve_with(
    instance: &Instance,
    strategy: Strategy,
    config: &StrategyConfig,
) -> Result<Outcome, StrategyError> {
    Ok(match strategy {
        Strategy::Simulate => run_profile_with(instance, &config.simulate)?.into(),
        Strategy::Recursive => solve_recursive_with(instance, &config.solve)?.into(),
        Strategy::Separator => solve_separator_with(instance, &config.solve)?.into(),
        Strategy::Fvs => solve_fvs_with(instance, &config.solve)?.into(),
        Strategy::Contraction => {
            let out = solve_contraction(instance, &config.contraction)?;
            Outcome {
                arrivals: out.arrivals.clone(),
                flow: out.flow.clone(),
                trace: SolveTrace {
                    iterations: out.iterations,
                    ..SolveTrace::default()
                },
                contraction: Some(out),
            }
        }
    })
}

/// A named solver for [`crosscheck`].
pub type NamedSolver<'a> = (String, Box<dyn Fn(&Instance) -> Result<Outcome, StrategyError> + 'a>);

/// The built-in strategies as named solvers.
pub fn named_solvers<'a>(strategies: &[Strategy], config: &'a StrategyConfig) -> Vec<NamedSolver<'a>> {
    strategies
        .iter()
        .map(|&s| -> NamedSolver<'a> {
            (
                s.as_str().to_string(),
                Box::new(move |inst: &Instance| solve_with(inst, s, config)),
            )
        })
        .collect()
}

/// A terminal on which a solver's arrivals differ from the reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disagreement {
    pub reference: String,
    pub strategy: String,
    pub terminal: String,
    pub expected: String,
    pub got: String,
}

#[derive(Clone, Debug, Default)]
pub struct CrosscheckReport {
    pub solvers: Vec<String>,
    pub disagreements: Vec<Disagreement>,
    /// Flows failing verification or the flow bound.
    pub invalid_flows: Vec<(String, FlowReport)>,
    /// Solvers that returned an error.
    pub failures: Vec<(String, String)>,
}

impl CrosscheckReport {
    pub fn agree(&self) -> bool {
        self.disagreements.is_empty() && self.invalid_flows.is_empty() && self.failures.is_empty()
    }
}

impl fmt::Display for CrosscheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.agree() {
            return write!(f, "{} agree", self.solvers.join(", "));
        }
        for d in &self.disagreements {
            writeln!(
                f,
                "{} vs {} at {}: {} != {}",
                d.strategy, d.reference, d.terminal, d.got, d.expected
            )?;
        }
        for (name, report) in &self.invalid_flows {
            writeln!(f, "{name}: {report}")?;
        }
        for (name, err) in &self.failures {
            writeln!(f, "{name}: {err}")?;
        }
        Ok(())
    }
}

/// Runs every solver, compares arrivals against the first one that succeeds,
/// and verifies every returned flow including the flow bound.
pub fn crosscheck(instance: &Instance, solvers: &[NamedSolver]) -> CrosscheckReport {
    let mut report = CrosscheckReport {
        solvers: solvers.iter().map(|(n, _)| n.clone()).collect(),
        ..CrosscheckReport::default()
    };
    let mut reference: Option<(String, ArrivalVector)> = None;
    for (name, solve) in solvers {
        let outcome = match solve(instance) {
            Ok(o) => o,
            Err(e) => {
                report.failures.push((name.clone(), e.to_string()));
                continue;
            }
        };
        if let Some(flow) = &outcome.flow {
            match verify_switching_flow(instance, flow) {
                Ok(r) if r.valid && r.bound_ok => {}
                Ok(r) => report.invalid_flows.push((name.clone(), r)),
                Err(e) => report.failures.push((name.clone(), e.to_string())),
            }
        }
        match &reference {
            None => reference = Some((name.clone(), outcome.arrivals)),
            Some((ref_name, expected)) => {
                for t in instance.terminals() {
                    let (want, got) = (expected.get(t), outcome.arrivals.get(t));
                    if want != got {
                        let show = |x: Option<&num_bigint::BigUint>| {
                            x.map_or_else(|| "missing".to_string(), |c| c.to_string())
                        };
                        report.disagreements.push(Disagreement {
                            reference: ref_name.clone(),
                            strategy: name.clone(),
                            terminal: instance.name(t).to_string(),
                            expected: show(want),
                            got: show(got),
                        });
                    }
                }
            }
        }
    }
    report
}
