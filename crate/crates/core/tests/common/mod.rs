//! Shared fixtures and reference implementations written directly from the
//! definitions, without going through the arena or the solver.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use ioco_games::random::{random_sa, Shape};
use ioco_games::strategy::FiniteTraceStrategy;
use ioco_games::testcase::{load_testcase, TestCase};
use ioco_games::{parse_sa, Label, Regime, StateId, SuspensionAutomaton, TesterAction, Trace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn printer() -> SuspensionAutomaton {
    parse_sa(include_str!("../../fixtures/printer.sa")).unwrap()
}

pub fn mp3() -> SuspensionAutomaton {
    parse_sa(include_str!("../../fixtures/mp3.sa")).unwrap()
}

/// Input-enabled printer that may emit `scanned!` before any input.
pub fn mutant() -> SuspensionAutomaton {
    parse_sa(include_str!("../../fixtures/printer_mutant.sa")).unwrap()
}

pub fn observe_test() -> TestCase {
    load_testcase(include_str!("../../fixtures/printer_observe.tc")).unwrap()
}

pub fn observe_test_oe() -> TestCase {
    load_testcase(include_str!("../../fixtures/printer_observe_oe.tc")).unwrap()
}

pub fn observe_strategy() -> FiniteTraceStrategy {
    FiniteTraceStrategy::parse_exchange(include_str!("../../fixtures/printer_observe.strat")).unwrap()
}

pub fn l(s: &str) -> Label {
    Label::new(s).unwrap()
}

pub fn tr(s: &str) -> Trace {
    Trace::parse(s).unwrap()
}

pub fn traces(v: &[&str]) -> BTreeSet<Trace> {
    v.iter().map(|s| tr(s)).collect()
}

pub const SMALL: Shape = Shape {
    max_states: 4,
    max_inputs: 2,
    max_outputs: 2,
};

pub fn population(seed: u64, n: usize, shape: Shape) -> Vec<SuspensionAutomaton> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| random_sa(&mut rng, shape, &format!("r{i}"))).collect()
}

/// SA states reached when the tester plays `a` (`None` for observing) and
/// the implementation offers `x` at `q`.
pub fn oracle_successors(
    sa: &SuspensionAutomaton,
    regime: Regime,
    q: StateId,
    a: Option<&Label>,
    x: &Label,
) -> Vec<(StateId, u8)> {
    let by_output = (sa.successor(q, x).unwrap(), 2);
    let Some(a) = a else {
        return vec![by_output];
    };
    let by_input = (sa.successor(q, a).unwrap(), 1);
    match regime {
        Regime::InputEager => vec![by_input],
        _ if x.is_delta() => vec![by_input],
        Regime::OutputEager => vec![by_output],
        Regime::Nondeterministic | Regime::InputFair => vec![by_input, by_output],
    }
}

/// Whether the tester can force a visit to `goal` within `depth` rounds,
/// by plain minimax over SA states.
pub fn oracle_wins(
    sa: &SuspensionAutomaton,
    regime: Regime,
    goal: &BTreeSet<StateId>,
    q: StateId,
    depth: usize,
    memo: &mut HashMap<(StateId, usize), bool>,
) -> bool {
    if goal.contains(&q) {
        return true;
    }
    if depth == 0 {
        return false;
    }
    if let Some(&w) = memo.get(&(q, depth)) {
        return w;
    }
    let mut actions: Vec<Option<Label>> = sa.enabled_inputs(q).cloned().map(Some).collect();
    actions.push(None);
    let outputs: Vec<Label> = sa.enabled_outputs(q).cloned().collect();
    let w = actions.iter().any(|a| {
        outputs.iter().all(|x| {
            oracle_successors(sa, regime, q, a.as_ref(), x)
                .into_iter()
                .all(|(n, _)| oracle_wins(sa, regime, goal, n, depth - 1, memo))
        })
    });
    memo.insert((q, depth), w);
    w
}

/// Non-empty traces the strategy can produce, generated from the regime
/// rules on the SA.
pub fn oracle_trace_set(
    sa: &SuspensionAutomaton,
    regime: Regime,
    sigma: &FiniteTraceStrategy,
) -> BTreeSet<Trace> {
    let mut out = BTreeSet::new();
    let mut stack = vec![(Trace::empty(), sa.initial())];
    while let Some((rho, q)) = stack.pop() {
        let a = match sigma.decide_trace(&rho) {
            TesterAction::Stop | TesterAction::Reset => continue,
            TesterAction::Theta => None,
            TesterAction::Input(i) => Some(i),
        };
        for x in sa.enabled_outputs(q) {
            for (n, mark) in oracle_successors(sa, regime, q, a.as_ref(), x) {
                let label = if mark == 1 { a.clone().unwrap() } else { x.clone() };
                let next = rho.extended(label);
                if out.insert(next.clone()) {
                    stack.push((next, n));
                }
            }
        }
    }
    out
}

/// Suspension traces of `sa` up to length `k`.
pub fn straces_upto(sa: &SuspensionAutomaton, k: usize) -> Vec<Trace> {
    let mut all = vec![Trace::empty()];
    let mut layer = vec![(Trace::empty(), sa.initial())];
    for _ in 0..k {
        let mut next = Vec::new();
        for (rho, q) in layer {
            for (l, t) in sa.transitions(q) {
                let ext = rho.extended(l.clone());
                all.push(ext.clone());
                next.push((ext, *t));
            }
        }
        layer = next;
    }
    all
}

fn outs(sa: &SuspensionAutomaton, rho: &Trace) -> BTreeSet<Label> {
    sa.after_initial(rho)
        .map(|q| sa.enabled_outputs(q).cloned().collect())
        .unwrap_or_default()
}

/// ioco by enumerating specification traces up to length `k`.
pub fn oracle_ioco(imp: &SuspensionAutomaton, spec: &SuspensionAutomaton, k: usize) -> bool {
    straces_upto(spec, k)
        .iter()
        .all(|rho| outs(imp, rho).is_subset(&outs(spec, rho)))
}

pub fn oracle_mixed(sa: &SuspensionAutomaton) -> BTreeSet<String> {
    sa.states()
        .filter(|&q| {
            sa.enabled_inputs(q).next().is_some() && sa.enabled_outputs(q).any(|x| !x.is_delta())
        })
        .map(|q| sa.state_name(q).to_string())
        .collect()
}
