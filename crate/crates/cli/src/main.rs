use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use serde_json::{json, Map, Value};

use garrival::contraction::{ratio_string, ContractionError, ContractionOptions};
use garrival::generate::{generate, Family, GenSpec};
use garrival::strategy::{crosscheck, named_solvers, solve_with, Outcome, Strategy, StrategyConfig, StrategyError};
use garrival::{verify_switching_flow, FlowError, Instance, SimulateOptions, SolveOptions, SwitchingFlow};

/// Solve, verify and generate G-ARRIVAL instances.
#[derive(Parser, Debug)]
#[command(name = "garrival", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an instance and print arrivals, certificate flow and trace.
    Solve {
        path: String,
        #[arg(long, default_value = "simulate")]
        strategy: Strategy,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check a flow document against an instance.
    Verify { instance: String, flow: String },
    /// Print a seeded random instance.
    Gen(GenArgs),
    /// Run several strategies and compare their answers.
    Crosscheck {
        /// Instance file; without it, instances are generated.
        path: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "simulate,recursive,separator,fvs")]
        strategies: Vec<Strategy>,
        #[command(flatten)]
        gen: GenArgs,
        /// Number of consecutive seeds to generate.
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Time strategies over generated instances; CSV on stdout.
    Bench {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, value_delimiter = ',', default_value = "simulate,recursive,separator,fvs")]
        strategies: Vec<Strategy>,
        #[arg(long, default_value_t = 1)]
        reps: u32,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct GenArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    terminals: usize,
    #[arg(long, default_value_t = 4)]
    tokens: u64,
    #[arg(long, default_value = "uniform")]
    family: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GenArgs {
    fn spec(&self, seed: u64) -> GenSpec {
        GenSpec {
            n: self.n,
            terminals: self.terminals,
            tokens: self.tokens,
            family: self.family,
            seed,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Slack in the contraction factor, as `p/q`.
    #[arg(long)]
    delta: Option<BigRational>,
    /// Residual target of the contraction iteration.
    #[arg(long)]
    eps: Option<BigRational>,
    /// Contraction factor; overrides `--delta`.
    #[arg(long)]
    lambda: Option<BigRational>,
    /// Move budget of the simulation.
    #[arg(long)]
    step_budget: Option<u64>,
    /// Memoize subinstance flows in the recursive solvers.
    #[arg(long)]
    probe_cache: bool,
}

impl SolverArgs {
    fn config(&self) -> StrategyConfig {
        let mut contraction = ContractionOptions::default();
        if let Some(d) = &self.delta {
            contraction.delta = d.clone();
        }
        contraction.eps = self.eps.clone();
        contraction.lambda = self.lambda.clone();
        StrategyConfig {
            simulate: SimulateOptions {
                step_budget: self.step_budget,
                ..SimulateOptions::default()
            },
            solve: SolveOptions {
                probe_cache: self.probe_cache,
                ..SolveOptions::default()
            },
            contraction,
        }
    }
}

/// A failure with its exit code: 1 for bad input, 2 for internal errors.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }

    fn internal(message: impl ToString) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }
}

fn strategy_failure(e: StrategyError) -> Failure {
    match e {
        StrategyError::Contraction(
            ContractionError::DeltaOutOfRange(_)
            | ContractionError::LambdaOutOfRange(_)
            | ContractionError::EpsOutOfRange(_)
            | ContractionError::MarginTooLarge(_),
        ) => Failure::input(e),
        e => Failure::internal(e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Solve {
            path,
            strategy,
            solver,
        } => {
            let instance = load_instance(&path)?;
            let outcome = solve_with(&instance, strategy, &solver.config()).map_err(strategy_failure)?;
            print_json(&solve_json(&instance, &outcome));
            Ok(0)
        }
        Command::Verify { instance, flow } => {
            let instance = load_instance(&instance)?;
            let text = read(&flow)?;
            let flow = SwitchingFlow::from_json(&instance, &text).map_err(Failure::input)?;
            let report = match verify_switching_flow(&instance, &flow) {
                Ok(r) => r,
                Err(e @ FlowError::KeyMismatch(_)) => return Err(Failure::input(e)),
                Err(e) => return Err(Failure::internal(e)),
            };
            print_json(&serde_json::to_value(&report).expect("report serializes"));
            Ok(if report.valid { 0 } else { 1 })
        }
        Command::Gen(args) => {
            let instance = generate(&args.spec(args.seed)).map_err(Failure::input)?;
            emit(&instance.to_json());
            Ok(0)
        }
        Command::Crosscheck {
            path,
            strategies,
            gen,
            count,
            solver,
        } => {
            let config = solver.config();
            let solvers = named_solvers(&strategies, &config);
            let instances: Vec<(String, Instance)> = match path {
                Some(p) => vec![(p.clone(), load_instance(&p)?)],
                None => (gen.seed..gen.seed + count)
                    .map(|seed| {
                        let inst = generate(&gen.spec(seed)).map_err(Failure::input)?;
                        Ok((format!("seed {seed}"), inst))
                    })
                    .collect::<Result<_, Failure>>()?,
            };
            let mut all_agree = true;
            let mut entries = Vec::new();
            for (label, inst) in &instances {
                let report = crosscheck(inst, &solvers);
                all_agree &= report.agree();
                let mut entry = Map::new();
                entry.insert("instance".into(), json!(label));
                entry.insert("agree".into(), json!(report.agree()));
                if !report.agree() {
                    entry.insert("details".into(), json!(report.to_string().trim_end()));
                }
                entries.push(Value::Object(entry));
            }
            print_json(&json!({
                "strategies": strategies.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
                "agree": all_agree,
                "instances": entries,
            }));
            Ok(if all_agree { 0 } else { 1 })
        }
        Command::Bench {
            gen,
            count,
            strategies,
            reps,
            solver,
        } => {
            let config = solver.config();
            emit("seed,n,strategy,wall_ns,depth,probes,splits,iterations");
            for seed in gen.seed..gen.seed + count {
                let instance = generate(&gen.spec(seed)).map_err(Failure::input)?;
                for &strategy in &strategies {
                    for _ in 0..reps {
                        let start = Instant::now();
                        let outcome = solve_with(&instance, strategy, &config).map_err(strategy_failure)?;
                        let wall = start.elapsed().as_nanos();
                        let t = &outcome.trace;
                        emit(&format!(
                            "{seed},{},{strategy},{wall},{},{},{},{}",
                            instance.n(),
                            t.max_recursion_depth,
                            t.binary_search_probes,
                            t.splitting_events,
                            t.iterations
                        ));
                    }
                }
            }
            Ok(0)
        }
    }
}

fn read(path: &str) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{path}: {e}")))
}

fn load_instance(path: &str) -> Result<Instance, Failure> {
    Instance::from_json(&read(path)?).map_err(|e| Failure::input(format!("{path}: {e}")))
}

/// Writes a line to stdout; a closed pipe is not an error worth reporting.
fn emit(line: &str) {
    let _ = writeln!(io::stdout().lock(), "{line}");
}

fn print_json(value: &Value) {
    emit(&serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn solve_json(instance: &Instance, outcome: &Outcome) -> Value {
    let mut out = Map::new();
    out.insert("arrivals".into(), outcome.arrivals.to_json_value(instance));
    if let Some(flow) = &outcome.flow {
        out.insert("flow".into(), flow.to_json_map(instance));
    }
    out.insert("trace".into(), outcome.trace.to_json_value());
    if let Some(c) = &outcome.contraction {
        out.insert("lambda".into(), json!(ratio_string(&c.lambda)));
        out.insert("delta".into(), json!(ratio_string(&c.delta)));
        out.insert("eps".into(), json!(ratio_string(&c.eps)));
        out.insert("iterations".into(), json!(c.iterations));
        out.insert("fixed_point".into(), c.fixed_point.to_json_value(instance));
    }
    Value::Object(out)
}
