//! Test execution against simulated implementations, with a per-step
//! adjudicator for the four regimes and replayable logs.

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::arena::{ArenaState, GameArena, Mark, Regime, TesterAction};
use crate::play::{PlayPrefix, ReachabilityGoal, Step, TesterStrategy};
use crate::sa::{Label, StateId, SuspensionAutomaton, Trace};
use crate::testcase::{TestCase, Verdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("test and implementation alphabets differ")]
    AlphabetMismatch,
    #[error("implementation {0} is not input-enabled")]
    NotInputEnabled(String),
    #[error("test {test} has no edge for {label} after {trace}")]
    TestIncomplete { test: String, trace: Trace, label: Label },
    #[error("test {0} did not reach a verdict")]
    NoVerdict(String),
    #[error("replay diverged at step {0}")]
    ReplayDiverged(usize),
}

/// How the simulated implementation picks its next output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputPolicy {
    /// Uniform over enabled outputs (quiescence included), from the run seed.
    Random,
    /// The listed outputs in order; a disabled or missing entry falls back
    /// to the smallest enabled output.
    Scripted(Vec<Label>),
    /// The smallest non-quiescent output, else quiescence.
    Adversarial,
}

/// An input-enabled automaton behind propose/apply operations.
#[derive(Debug, Clone)]
pub struct SutAdapter {
    model: SuspensionAutomaton,
    policy: OutputPolicy,
    state: StateId,
    script_pos: usize,
}

impl SutAdapter {
    pub fn new(model: SuspensionAutomaton, policy: OutputPolicy) -> Result<Self, HarnessError> {
        if !model.is_input_enabled() {
            return Err(HarnessError::NotInputEnabled(model.name().to_string()));
        }
        let state = model.initial();
        Ok(SutAdapter {
            model,
            policy,
            state,
            script_pos: 0,
        })
    }

    pub fn model(&self) -> &SuspensionAutomaton {
        &self.model
    }

    pub fn state(&self) -> StateId {
        self.state
    }

    pub fn reset(&mut self) {
        self.state = self.model.initial();
        self.script_pos = 0;
    }

    pub fn propose_output(&mut self, rng: &mut ChaCha8Rng) -> Label {
        let enabled: Vec<&Label> = self.model.enabled_outputs(self.state).collect();
        let smallest = || (*enabled.first().expect("non-blocking")).clone();
        match &self.policy {
            OutputPolicy::Random => (*enabled.choose(rng).expect("non-blocking")).clone(),
            OutputPolicy::Scripted(script) => {
                let want = script.get(self.script_pos);
                self.script_pos += 1;
                match want {
                    Some(l) if enabled.contains(&l) => l.clone(),
                    _ => smallest(),
                }
            }
            OutputPolicy::Adversarial => enabled
                .iter()
                .find(|l| !l.is_delta())
                .map(|l| (*l).clone())
                .unwrap_or_else(smallest),
        }
    }

    /// Advances by an executed label. Inputs are always accepted; outputs
    /// are the ones this adapter proposed.
    pub fn apply_label(&mut self, label: &Label) {
        self.state = self
            .model
            .successor(self.state, label)
            .expect("inputs enabled and outputs proposed by the adapter");
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecStep {
    pub proposed_input: Option<Label>,
    pub proposed_output: Label,
    pub executed: Label,
    /// The draw resolving a nondeterministic conflict; `true` grants the input.
    pub coin: Option<bool>,
    /// Test state after the step.
    pub test_state: String,
    /// Executed trace so far.
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionLog {
    pub test: String,
    pub regime: Regime,
    pub seed: u64,
    pub steps: Vec<ExecStep>,
    pub verdict: Verdict,
}

impl ExecutionLog {
    pub fn trace(&self) -> Trace {
        self.steps.last().map(|s| s.trace.clone()).unwrap_or_default()
    }

    /// Re-runs the adjudicator over the logged proposals and coins.
    pub fn replay(&self, t: &TestCase) -> Result<Verdict, HarnessError> {
        let mut q = t.initial();
        for (i, st) in self.steps.iter().enumerate() {
            if t.input_at(q) != st.proposed_input.as_ref() {
                return Err(HarnessError::ReplayDiverged(i));
            }
            let coin = st.coin;
            let executed = adjudicate(self.regime, st.proposed_input.as_ref(), &st.proposed_output, || {
                coin.unwrap_or(false)
            })
            .0;
            if executed != st.executed {
                return Err(HarnessError::ReplayDiverged(i));
            }
            q = t
                .automaton()
                .successor(q, &executed)
                .ok_or(HarnessError::ReplayDiverged(i))?;
        }
        t.verdict_of(q)
            .ok_or_else(|| HarnessError::NoVerdict(t.name().to_string()))
    }
}

/// The regime's conflict rule on concrete proposals. `coin` is drawn only
/// for a genuine nondeterministic conflict.
fn adjudicate(
    regime: Regime,
    input: Option<&Label>,
    output: &Label,
    coin: impl FnOnce() -> bool,
) -> (Label, Option<bool>) {
    let Some(a) = input else {
        return (output.clone(), None);
    };
    match regime {
        Regime::InputEager => (a.clone(), None),
        Regime::OutputEager if output.is_delta() => (a.clone(), None),
        Regime::OutputEager => (output.clone(), None),
        Regime::Nondeterministic | Regime::InputFair => {
            if output.is_delta() {
                (a.clone(), None)
            } else {
                let c = coin();
                (if c { a.clone() } else { output.clone() }, Some(c))
            }
        }
    }
}

/// Executes `t` against `sut` until a verdict.
pub fn run_test(
    t: &TestCase,
    sut: &mut SutAdapter,
    regime: Regime,
    seed: u64,
) -> Result<ExecutionLog, HarnessError> {
    let spec = t.automaton();
    if spec.inputs() != sut.model().inputs() || spec.outputs() != sut.model().outputs() {
        return Err(HarnessError::AlphabetMismatch);
    }
    sut.reset();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = t.initial();
    let mut trace = Trace::empty();
    let mut steps = Vec::new();
    loop {
        if let Some(verdict) = t.verdict_of(q) {
            return Ok(ExecutionLog {
                test: t.name().to_string(),
                regime,
                seed,
                steps,
                verdict,
            });
        }
        if steps.len() > spec.num_states() {
            return Err(HarnessError::NoVerdict(t.name().to_string()));
        }
        let input = t.input_at(q).cloned();
        let output = sut.propose_output(&mut rng);
        let (executed, coin) = adjudicate(regime, input.as_ref(), &output, || rng.random_bool(0.5));
        q = spec
            .successor(q, &executed)
            .ok_or_else(|| HarnessError::TestIncomplete {
                test: t.name().to_string(),
                trace: trace.clone(),
                label: executed.clone(),
            })?;
        sut.apply_label(&executed);
        trace.push(executed.clone());
        steps.push(ExecStep {
            proposed_input: input,
            proposed_output: output,
            executed,
            coin,
            test_state: spec.state_name(q).to_string(),
            trace: trace.clone(),
        });
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub verdict: Verdict,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteRow {
    pub test: String,
    pub pass: usize,
    pub fail: usize,
    pub runs: Vec<RunRecord>,
}

/// Runs every test `reps` times, in test-name order, with sub-seeds drawn
/// from a generator seeded by `seed`.
pub fn run_suite(
    tests: &[TestCase],
    sut: &mut SutAdapter,
    regime: Regime,
    seed: u64,
    reps: usize,
) -> Result<Vec<SuiteRow>, HarnessError> {
    let mut order: Vec<&TestCase> = tests.iter().collect();
    order.sort_by(|a, b| a.name().cmp(b.name()));
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(order.len());
    for t in order {
        let mut row = SuiteRow {
            test: t.name().to_string(),
            pass: 0,
            fail: 0,
            runs: Vec::with_capacity(reps),
        };
        for _ in 0..reps {
            let sub = seeds.next_u64();
            let log = run_test(t, sut, regime, sub)?;
            match log.verdict {
                Verdict::Pass => row.pass += 1,
                Verdict::Fail => row.fail += 1,
            }
            row.runs.push(RunRecord {
                seed: sub,
                verdict: log.verdict,
                trace: log.trace(),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Conflict resolution for [`simulate_fair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheduler {
    /// Grants a proposed input with probability one half per conflict.
    Fair,
    /// Always executes the output; violates fairness, for negative tests.
    Hostile,
}

/// Plays `sigma` in the arena against an implementation emitting uniform
/// non-quiescent outputs (quiescence only when nothing else is enabled).
/// True when the goal is visited within `max_steps` rounds.
pub fn simulate_fair(
    g: &GameArena,
    sigma: &dyn TesterStrategy,
    goal: &ReachabilityGoal,
    seed: u64,
    max_steps: usize,
    scheduler: Scheduler,
) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pi = PlayPrefix::new(g.initial());
    for _ in 0..max_steps {
        let s = pi.last();
        if goal.contains(s) {
            return true;
        }
        let a = sigma.decide(g, &pi);
        if a == TesterAction::Stop {
            return false;
        }
        let x = sut_output(g, s, &mut rng);
        let succ = g.moves(s, &a, &x);
        let next = match succ.as_slice() {
            [] => return false,
            [one] => *one,
            both => {
                let grant = match scheduler {
                    Scheduler::Fair => rng.random_bool(0.5),
                    Scheduler::Hostile => false,
                };
                let want = if grant { Mark::Input } else { Mark::Output };
                *both.iter().find(|n| n.mark == want).unwrap_or(&both[0])
            }
        };
        pi.push_unchecked(Step {
            action: a,
            output: x,
            next,
        });
    }
    goal.contains(pi.last())
}

fn sut_output(g: &GameArena, s: ArenaState, rng: &mut ChaCha8Rng) -> Label {
    let enabled = g.gamma2(s);
    let moving: Vec<&Label> = enabled.iter().filter(|l| !l.is_delta()).collect();
    match moving.choose(rng) {
        Some(l) => (*l).clone(),
        None => Label::delta(),
    }
}
