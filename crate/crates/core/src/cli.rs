//! Command-line front end. Every verb prints either text or one JSON
//! object; exit codes are 0 (success), 1 (negative result) and 2 (usage or
//! model error).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::arena::{ArenaError, GameArena, Regime, TesterAction};
use crate::conformance::{
    alt_incl, alt_incl_bounded, angelic_complete, ioco_check, CheatReading, ConformanceError,
    DEFAULT_ALT_CAP,
};
use crate::harness::{run_suite, simulate_fair, HarnessError, OutputPolicy, Scheduler, SutAdapter};
use crate::parse::parse_sa;
use crate::play::{PlayError, ReachabilityGoal};
use crate::sa::{SaError, SuspensionAutomaton};
use crate::strategy::{FiniteTraceStrategy, StrategyError};
use crate::synthesis::{solve_reach, solve_reach_if, SynthesisError};
use crate::testcase::{load_testcase, validate_testcase, TestCase, TestCaseError};
use crate::testgen::{gen_suite, strategy_to_test, test_to_strategy, trace_set, TestGenError, DEFAULT_SUITE_CAP};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: SaError },
    #[error("{path}: {source}")]
    Test { path: PathBuf, source: TestCaseError },
    #[error("{path}: {source}")]
    StrategyFile { path: PathBuf, source: StrategyError },
    #[error(transparent)]
    Arena(#[from] ArenaError),
    #[error(transparent)]
    Play(#[from] PlayError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    TestGen(#[from] TestGenError),
    #[error(transparent)]
    Conformance(#[from] ConformanceError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    Random,
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reading {
    Intended,
    Literal,
}

#[derive(Debug, Parser)]
#[command(name = "ioco-games", version, about = "Game-based ioco test generation and checking")]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load an automaton and report its mixed states, or check a test case
    /// against a specification.
    Validate {
        file: PathBuf,
        /// Treat FILE as a test case for this specification.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value = "nd")]
        regime: Regime,
    },
    /// Print the game arena with its enabled actions and moves.
    Arena {
        file: PathBuf,
        #[arg(long)]
        regime: Regime,
        #[arg(long)]
        reset: bool,
    },
    /// Solve a reachability game and print the winning strategy.
    Synth {
        file: PathBuf,
        #[arg(long)]
        regime: Regime,
        #[arg(long)]
        reset: bool,
        /// Goal states; repeat or separate with commas.
        #[arg(long, required = true, value_delimiter = ',')]
        goal: Vec<String>,
        /// Write the strategy in exchange format.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate test cases up to a trace depth.
    GenTests {
        file: PathBuf,
        #[arg(long)]
        regime: Regime,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_SUITE_CAP)]
        cap: u128,
        /// Write one .tc file per test into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn a strategy file into a test case.
    Strat2test {
        spec: PathBuf,
        strategy: PathBuf,
        #[arg(long)]
        regime: Regime,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn a test case into a strategy.
    Test2strat {
        spec: PathBuf,
        test: PathBuf,
        #[arg(long)]
        regime: Regime,
    },
    /// Execute test cases against a simulated implementation.
    Run {
        #[arg(long)]
        regime: Regime,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long)]
        sut: PathBuf,
        #[arg(long, value_enum, default_value_t = Policy::Random)]
        policy: Policy,
        /// Make the implementation input-enabled with self-loops first.
        #[arg(long)]
        complete: bool,
        #[arg(required = true)]
        tests: Vec<PathBuf>,
    },
    /// Decide impl ioco spec.
    Ioco {
        implementation: PathBuf,
        spec: PathBuf,
        #[arg(long)]
        complete: bool,
    },
    /// Decide alternating trace inclusion of the nondeterministic arenas.
    AltIncl {
        implementation: PathBuf,
        spec: PathBuf,
        /// Search strategies explicitly instead of deciding through ioco.
        #[arg(long)]
        bounded: bool,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_ALT_CAP)]
        cap: u128,
        #[arg(long, value_enum, default_value_t = Reading::Intended)]
        reading: Reading,
        #[arg(long)]
        complete: bool,
    },
    /// Run the input-fair retry strategy against a randomized scheduler.
    SimulateFair {
        file: PathBuf,
        #[arg(long, required = true, value_delimiter = ',')]
        goal: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        runs: u64,
        #[arg(long, default_value_t = 200)]
        max_steps: usize,
        /// Always resolve conflicts towards the output.
        #[arg(long)]
        hostile: bool,
    },
}

struct Output {
    code: i32,
    text: String,
    json: Value,
}

impl Output {
    fn new(ok: bool, text: String, json: Value) -> Self {
        Output {
            code: if ok { 0 } else { 1 },
            text,
            json,
        }
    }
}

/// Parses `args` (program name first), executes, and writes the result.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    let format = cli.format;
    match execute(cli.command) {
        Ok(o) => {
            let body = match format {
                Format::Text => o.text,
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&o.json).expect("json values serialize");
                    s.push('\n');
                    s
                }
            };
            let _ = out.write_all(body.as_bytes());
            o.code
        }
        Err(e) => {
            match format {
                Format::Text => {
                    let _ = writeln!(err, "error: {e}");
                }
                Format::Json => {
                    let _ = writeln!(out, "{}", json!({ "error": e.to_string() }));
                }
            }
            2
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_sa(path: &Path) -> Result<SuspensionAutomaton, CliError> {
    parse_sa(&read(path)?).map_err(|source| CliError::Model {
        path: path.to_path_buf(),
        source,
    })
}

fn load_test(path: &Path) -> Result<TestCase, CliError> {
    load_testcase(&read(path)?).map_err(|source| CliError::Test {
        path: path.to_path_buf(),
        source,
    })
}

fn load_strategy(path: &Path) -> Result<FiniteTraceStrategy, CliError> {
    FiniteTraceStrategy::parse_exchange(&read(path)?).map_err(|source| CliError::StrategyFile {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn braces(names: &[String]) -> String {
    format!("{{{}}}", names.join(","))
}

fn joined<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

#[derive(Serialize)]
struct DecisionRow<'a> {
    trace: String,
    action: &'a TesterAction,
}

fn strategy_json(sigma: &FiniteTraceStrategy) -> Vec<DecisionRow<'_>> {
    sigma
        .decisions()
        .iter()
        .map(|(t, a)| DecisionRow {
            trace: t.to_string(),
            action: a,
        })
        .collect()
}

fn execute(command: Command) -> Result<Output, CliError> {
    match command {
        Command::Validate { file, spec, regime } => match spec {
            None => validate_sa(&file),
            Some(spec) => validate_test(&file, &spec, regime),
        },
        Command::Arena { file, regime, reset } => arena(&file, regime, reset),
        Command::Synth {
            file,
            regime,
            reset,
            goal,
            out,
        } => synth(&file, regime, reset, &goal, out.as_deref()),
        Command::GenTests {
            file,
            regime,
            depth,
            cap,
            out,
        } => gen_tests(&file, regime, depth, cap, out.as_deref()),
        Command::Strat2test {
            spec,
            strategy,
            regime,
            out,
        } => strat2test(&spec, &strategy, regime, out.as_deref()),
        Command::Test2strat { spec, test, regime } => test2strat(&spec, &test, regime),
        Command::Run {
            regime,
            seed,
            reps,
            sut,
            policy,
            complete,
            tests,
        } => run_tests(regime, seed, reps, &sut, policy, complete, &tests),
        Command::Ioco {
            implementation,
            spec,
            complete,
        } => ioco(&implementation, &spec, complete),
        Command::AltIncl {
            implementation,
            spec,
            bounded,
            depth,
            cap,
            reading,
            complete,
        } => alt_inclusion(&implementation, &spec, bounded.then_some(depth), cap, reading, complete),
        Command::SimulateFair {
            file,
            goal,
            seed,
            runs,
            max_steps,
            hostile,
        } => fair(&file, &goal, seed, runs, max_steps, hostile),
    }
}

fn validate_sa(file: &Path) -> Result<Output, CliError> {
    let sa = load_sa(file)?;
    let mixed = sa.state_names(&sa.mixed_states());
    let inputs: Vec<_> = sa.inputs().iter().collect();
    let outputs: Vec<_> = sa.outputs().iter().collect();
    let text = format!(
        "OK {}\nstates {}\ninputs {}\noutputs {}\ninput-enabled {}\nmixed {}\n",
        sa.name(),
        sa.num_states(),
        joined(&inputs),
        joined(&outputs),
        sa.is_input_enabled(),
        braces(&mixed)
    );
    let json = json!({
        "command": "validate",
        "kind": "automaton",
        "valid": true,
        "name": sa.name(),
        "states": sa.num_states(),
        "inputs": inputs,
        "outputs": outputs,
        "input_enabled": sa.is_input_enabled(),
        "mixed_states": mixed,
    });
    Ok(Output::new(true, text, json))
}

fn validate_test(file: &Path, spec: &Path, regime: Regime) -> Result<Output, CliError> {
    let t = load_test(file)?;
    let spec = load_sa(spec)?;
    let result = validate_testcase(&t, &spec, regime);
    let text = match &result {
        Ok(()) => format!("VALID {} {}\n", t.name(), regime),
        Err(v) => format!("INVALID {} {}\n{}\n", t.name(), regime, v),
    };
    let json = json!({
        "command": "validate",
        "kind": "test",
        "name": t.name(),
        "regime": regime,
        "valid": result.is_ok(),
        "violation": result.as_ref().err(),
    });
    Ok(Output::new(result.is_ok(), text, json))
}

fn arena(file: &Path, regime: Regime, reset: bool) -> Result<Output, CliError> {
    let sa = load_sa(file)?;
    let g = GameArena::new(&sa, regime, reset)?;
    let mut text = format!(
        "arena {} regime {} reset {} states {}\n",
        sa.name(),
        regime,
        reset,
        g.num_states()
    );
    let mut rows = Vec::new();
    for s in g.states() {
        let gamma1 = g.gamma1(s);
        let gamma2 = g.gamma2(s);
        text += &format!(
            "{} tester [{}] sut [{}]\n",
            g.display_state(s),
            joined(&gamma1),
            joined(&gamma2)
        );
        let mut moves = Vec::new();
        for a in &gamma1 {
            for x in &gamma2 {
                let succ: Vec<String> = g.moves(s, a, x).iter().map(|n| g.display_state(*n)).collect();
                text += &format!("  {a} {x} -> {}\n", succ.join(" "));
                moves.push(json!({ "action": a, "output": x, "successors": succ }));
            }
        }
        rows.push(json!({
            "state": g.display_state(s),
            "gamma1": gamma1,
            "gamma2": gamma2,
            "moves": moves,
        }));
    }
    let json = json!({
        "command": "arena",
        "automaton": sa.name(),
        "regime": regime,
        "resettable": reset,
        "num_states": g.num_states(),
        "states": rows,
    });
    Ok(Output::new(true, text, json))
}

fn synth(
    file: &Path,
    regime: Regime,
    reset: bool,
    goal_names: &[String],
    out: Option<&Path>,
) -> Result<Output, CliError> {
    let sa = load_sa(file)?;
    let goal = ReachabilityGoal::from_names(&sa, goal_names)?;
    let g = GameArena::new(&sa, regime, reset)?;
    let (result, requires_reset) = if regime == Regime::InputFair {
        let fair = solve_reach_if(&g, &goal)?;
        (fair.input_eager, Some(fair.requires_reset))
    } else {
        (solve_reach(&g, &goal)?, None)
    };
    // ranks refer to the arena the result was computed in
    let ranked_in = if regime == Regime::InputFair {
        g.with_regime(Regime::InputEager).with_reset(false)
    } else {
        g
    };
    let verdict = if result.winning { "WINNING" } else { "NOT-WINNING" };
    let mut text = format!("{verdict}\nregime {regime} goal {goal}\n");
    if let Some(r) = requires_reset {
        text += &format!("requires-reset {r}\n");
    }
    let ranks = result.rank_table(&ranked_in);
    for row in ranks.iter().filter(|r| r.rank.is_some()) {
        text += &format!("rank {} {}\n", row.state, row.rank.expect("filtered"));
    }
    if let Some(sigma) = &result.strategy {
        text += "strategy\n";
        text += &sigma.to_exchange();
        if let Some(path) = out {
            write(path, &sigma.to_exchange())?;
        }
    }
    let json = json!({
        "command": "synth",
        "automaton": sa.name(),
        "regime": regime,
        "resettable": reset,
        "goal": goal,
        "winning": result.winning,
        "requires_reset": requires_reset,
        "ranks": ranks,
        "strategy": result.strategy.as_ref().map(strategy_json),
    });
    Ok(Output::new(result.winning, text, json))
}

fn gen_tests(
    file: &Path,
    regime: Regime,
    depth: usize,
    cap: u128,
    out: Option<&Path>,
) -> Result<Output, CliError> {
    let sa = load_sa(file)?;
    let g = GameArena::new(&sa, regime, false)?;
    let suite = gen_suite(&g, depth, cap)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for t in &suite {
            write(&dir.join(format!("{}.tc", t.name())), &t.render())?;
        }
    }
    let mut text = format!("tests {}\n", suite.len());
    for t in &suite {
        match out {
            Some(_) => text += &format!("{}\n", t.name()),
            None => text += &format!("\n{}", t.render()),
        }
    }
    let tests: Vec<Value> = suite
        .iter()
        .map(|t| json!({ "name": t.name(), "source": t.render() }))
        .collect();
    let json = json!({
        "command": "gen-tests",
        "automaton": sa.name(),
        "regime": regime,
        "depth": depth,
        "count": suite.len(),
        "tests": tests,
    });
    Ok(Output::new(true, text, json))
}

fn strat2test(spec: &Path, strategy: &Path, regime: Regime, out: Option<&Path>) -> Result<Output, CliError> {
    let sa = load_sa(spec)?;
    let sigma = load_strategy(strategy)?;
    sigma.check(&sa)?;
    let g = GameArena::new(&sa, regime, false)?;
    let traces = trace_set(&sigma, &g)?;
    let t = strategy_to_test(&sigma, &g)?;
    if let Some(path) = out {
        write(path, &t.render())?;
    }
    let traces: Vec<String> = traces.iter().map(ToString::to_string).collect();
    let mut text = format!("traces {}\n", traces.len());
    for tr in &traces {
        text += &format!("  {tr}\n");
    }
    text += &t.render();
    let json = json!({
        "command": "strat2test",
        "regime": regime,
        "traces": traces,
        "test": { "name": t.name(), "source": t.render() },
    });
    Ok(Output::new(true, text, json))
}

fn test2strat(spec: &Path, test: &Path, regime: Regime) -> Result<Output, CliError> {
    let sa = load_sa(spec)?;
    let t = load_test(test)?;
    let g = GameArena::new(&sa, regime, false)?;
    let sigma = test_to_strategy(&t, &g)?;
    let json = json!({
        "command": "test2strat",
        "regime": regime,
        "test": t.name(),
        "strategy": strategy_json(&sigma),
    });
    Ok(Output::new(true, sigma.to_exchange(), json))
}

fn run_tests(
    regime: Regime,
    seed: u64,
    reps: usize,
    sut: &Path,
    policy: Policy,
    complete: bool,
    tests: &[PathBuf],
) -> Result<Output, CliError> {
    let mut model = load_sa(sut)?;
    if complete {
        model = angelic_complete(&model);
    }
    let policy = match policy {
        Policy::Random => OutputPolicy::Random,
        Policy::Adversarial => OutputPolicy::Adversarial,
    };
    let mut adapter = SutAdapter::new(model, policy)?;
    let mut loaded = tests.iter().map(|p| load_test(p)).collect::<Result<Vec<_>, _>>()?;
    loaded.sort_by(|a, b| a.name().cmp(b.name()));
    let rows = run_suite(&loaded, &mut adapter, regime, seed, reps)?;
    let mut text = String::new();
    let mut runs = Vec::new();
    let (mut pass, mut fail) = (0, 0);
    for row in &rows {
        pass += row.pass;
        fail += row.fail;
        for r in &row.runs {
            text += &format!("{} {} {} {}\n", row.test, r.seed, r.verdict, r.trace);
            runs.push(json!({
                "test": row.test,
                "seed": r.seed,
                "verdict": r.verdict,
                "trace": r.trace.to_string(),
            }));
        }
    }
    text += &format!("summary pass {pass} fail {fail}\n");
    let summary: Vec<Value> = rows
        .iter()
        .map(|r| json!({ "test": r.test, "pass": r.pass, "fail": r.fail }))
        .collect();
    let json = json!({
        "command": "run",
        "regime": regime,
        "seed": seed,
        "reps": reps,
        "runs": runs,
        "summary": summary,
        "pass": pass,
        "fail": fail,
    });
    Ok(Output::new(fail == 0, text, json))
}

fn load_pair(imp: &Path, spec: &Path, complete: bool) -> Result<(SuspensionAutomaton, SuspensionAutomaton), CliError> {
    let mut i = load_sa(imp)?;
    if complete {
        i = angelic_complete(&i);
    }
    Ok((i, load_sa(spec)?))
}

fn ioco(imp: &Path, spec: &Path, complete: bool) -> Result<Output, CliError> {
    let (i, s) = load_pair(imp, spec, complete)?;
    let report = ioco_check(&i, &s)?;
    let text = match &report.counterexample {
        None => "CONFORMS\n".to_string(),
        Some(c) => format!("NOT-CONFORMS\ncounterexample {} {}\n", c.trace, c.output),
    };
    let json = json!({
        "command": "ioco",
        "implementation": i.name(),
        "spec": s.name(),
        "conforms": report.holds,
        "counterexample": report.counterexample.as_ref().map(|c| json!({
            "trace": c.trace.to_string(),
            "output": c.output,
        })),
    });
    Ok(Output::new(report.holds, text, json))
}

fn alt_inclusion(
    imp: &Path,
    spec: &Path,
    bounded: Option<usize>,
    cap: u128,
    reading: Reading,
    complete: bool,
) -> Result<Output, CliError> {
    let (i, s) = load_pair(imp, spec, complete)?;
    let holds = match bounded {
        None => alt_incl(&i, &s)?,
        Some(depth) => {
            let ga = GameArena::new(&i, Regime::Nondeterministic, false)?;
            let gb = GameArena::new(&s, Regime::Nondeterministic, false)?;
            let reading = match reading {
                Reading::Intended => CheatReading::Intended,
                Reading::Literal => CheatReading::Literal,
            };
            alt_incl_bounded(&ga, &gb, depth, cap, reading)?
        }
    };
    let text = format!("{}\n", if holds { "INCLUDED" } else { "NOT-INCLUDED" });
    let json = json!({
        "command": "alt-incl",
        "implementation": i.name(),
        "spec": s.name(),
        "bounded_depth": bounded,
        "reading": format!("{reading:?}").to_lowercase(),
        "included": holds,
    });
    Ok(Output::new(holds, text, json))
}

fn fair(
    file: &Path,
    goal_names: &[String],
    seed: u64,
    runs: u64,
    max_steps: usize,
    hostile: bool,
) -> Result<Output, CliError> {
    if runs == 0 {
        return Err(CliError::Usage("--runs must be positive".into()));
    }
    let sa = load_sa(file)?;
    let goal = ReachabilityGoal::from_names(&sa, goal_names)?;
    let g = GameArena::new(&sa, Regime::Nondeterministic, true)?;
    let fair = solve_reach_if(&g, &goal)?;
    let scheduler = if hostile { Scheduler::Hostile } else { Scheduler::Fair };
    let mut text = String::new();
    let mut results = Vec::new();
    let Some(sigma) = fair.retry else {
        let json = json!({
            "command": "simulate-fair",
            "goal": goal,
            "winning": false,
            "runs": results,
            "reached": 0,
        });
        return Ok(Output::new(false, "NOT-WINNING\n".into(), json));
    };
    let mut reached = 0;
    for k in 0..runs {
        let s = seed.wrapping_add(k);
        let ok = simulate_fair(&g, &sigma, &goal, s, max_steps, scheduler);
        reached += u64::from(ok);
        text += &format!("{} {}\n", s, if ok { "REACHED" } else { "NOT-REACHED" });
        results.push(json!({ "seed": s, "reached": ok }));
    }
    text += &format!("reached {reached}/{runs}\n");
    let json = json!({
        "command": "simulate-fair",
        "goal": goal,
        "winning": true,
        "scheduler": if hostile { "hostile" } else { "fair" },
        "max_steps": max_steps,
        "runs": results,
        "reached": reached,
    });
    Ok(Output::new(reached == runs, text, json))
}
