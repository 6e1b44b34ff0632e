//! Conversions between finite trace-based strategies and test cases, and
//! exhaustive suite generation up to a trace depth.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::arena::{GameArena, Regime, TesterAction};
use crate::sa::{SaBuilder, StateId, Trace};
use crate::strategy::{explore, successor_traces, FiniteTraceStrategy, StrategyError, TraceNode};
use crate::testcase::{TestCase, TestNode};

pub const DEFAULT_SUITE_CAP: u128 = 20_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TestGenError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("{count} strategies exceed the cap of {cap}")]
    ExplosionGuard { count: u128, cap: u128 },
}

/// `T_σ`: traces of outcome prefixes with at least one step and no `stop`
/// executed; empty when σ stops at once.
pub fn trace_set(sigma: &FiniteTraceStrategy, g: &GameArena) -> Result<BTreeSet<Trace>, StrategyError> {
    Ok(sigma
        .reachable(g)?
        .into_iter()
        .map(|n| n.trace)
        .filter(|t| !t.is_empty())
        .collect())
}

/// Whether playing `action` at `q` stimulates the implementation. Under
/// output-eager an input at a state without quiescence never executes, so
/// that state is an observation state of the test.
fn stimulates(g: &GameArena, q: StateId, action: &TesterAction) -> bool {
    match action {
        TesterAction::Input(_) => {
            g.regime() != Regime::OutputEager
                || g.sa().enabled_outputs(q).any(|x| x.is_delta())
        }
        _ => false,
    }
}

/// Builds the test case characterised by `T_σ`. Internal states are the
/// non-stop traces, named `t0, t1, ...` in trace order.
pub fn strategy_to_test(sigma: &FiniteTraceStrategy, g: &GameArena) -> Result<TestCase, TestGenError> {
    let nodes = sigma.reachable(g)?;
    let name = format!("{}_test", g.sa().name());
    Ok(build_test(&name, g, &nodes))
}

fn build_test(name: &str, g: &GameArena, nodes: &[TraceNode]) -> TestCase {
    let sa = g.sa();
    let by_trace: HashMap<&Trace, &TraceNode> = nodes.iter().map(|n| (&n.trace, n)).collect();
    let mut names: HashMap<&Trace, String> = HashMap::new();
    for n in nodes.iter().filter(|n| n.action != TesterAction::Stop) {
        let id = format!("t{}", names.len());
        names.insert(&n.trace, id);
    }
    let target = |t: &Trace| -> String {
        match by_trace.get(t) {
            Some(n) if n.action == TesterAction::Stop => "Pass".to_string(),
            Some(_) => names[t].clone(),
            None => "Fail".to_string(),
        }
    };

    let mut b = SaBuilder::new(name);
    for l in sa.inputs() {
        b.input(l.name()).expect("spec alphabet");
    }
    for l in sa.outputs() {
        b.output(l.name()).expect("spec alphabet");
    }
    b.initial(&target(&Trace::empty()));
    for n in nodes.iter().filter(|n| n.action != TesterAction::Stop) {
        let from = &names[&n.trace];
        let q = n.state;
        if stimulates(g, q, &n.action) {
            let a = match &n.action {
                TesterAction::Input(a) => a,
                _ => unreachable!(),
            };
            b.set_transition(from, a, &target(&n.trace.extended(a.clone())));
            if g.regime() != Regime::InputEager {
                for x in sa.outputs() {
                    let to = if sa.successor(q, x).is_some() {
                        target(&n.trace.extended(x.clone()))
                    } else {
                        "Fail".to_string()
                    };
                    b.set_transition(from, x, &to);
                }
            }
        } else {
            for x in sa.outputs_with_delta() {
                let to = if sa.successor(q, &x).is_some() {
                    target(&n.trace.extended(x.clone()))
                } else {
                    "Fail".to_string()
                };
                b.set_transition(from, &x, &to);
            }
        }
    }
    for v in ["Pass", "Fail"] {
        for x in sa.outputs_with_delta() {
            b.set_transition(v, &x, v);
        }
    }
    let automaton = b.build_unchecked().expect("generated test is well formed");
    TestCase::new(automaton, "Pass", "Fail").expect("verdict states exist")
}

/// `σ_T`: the unique input where the test offers one, `stop` once a trace
/// has passed through Pass, `θ` otherwise. Traces outside the test are
/// left to the default `stop`. The result lists every trace reachable in `g`.
pub fn test_to_strategy(t: &TestCase, g: &GameArena) -> Result<FiniteTraceStrategy, StrategyError> {
    let decide = |trace: &Trace, _q: StateId| -> TesterAction {
        let ta = t.automaton();
        let mut q = t.initial();
        for l in trace.labels() {
            if q == t.pass() {
                return TesterAction::Stop;
            }
            match ta.successor(q, l) {
                Some(n) => q = n,
                None => return TesterAction::Stop,
            }
        }
        if q == t.pass() || q == t.fail() {
            return TesterAction::Stop;
        }
        match t.input_at(q) {
            Some(a) => TesterAction::Input(a.clone()),
            None => TesterAction::Theta,
        }
    };
    let nodes = explore(g, t.automaton().num_states() + 1, decide)?;
    let mut s = FiniteTraceStrategy::new();
    for n in nodes {
        s.insert(n.trace, n.action);
    }
    Ok(s)
}

/// Number of decision trees rooted at `q` on the given level.
fn count_trees(
    g: &GameArena,
    q: StateId,
    level: usize,
    depth: usize,
    memo: &mut HashMap<(StateId, usize), u128>,
) -> u128 {
    if level == depth {
        return 1;
    }
    if let Some(&c) = memo.get(&(q, level)) {
        return c;
    }
    let mut total: u128 = if level == 0 { 0 } else { 1 };
    for a in choices(g, q) {
        let mut prod: u128 = 1;
        for (_, q2) in successor_traces(g, q, &a) {
            prod = prod.saturating_mul(count_trees(g, q2, level + 1, depth, memo));
        }
        total = total.saturating_add(prod);
    }
    memo.insert((q, level), total);
    total
}

fn choices(g: &GameArena, q: StateId) -> Vec<TesterAction> {
    let mut v: Vec<TesterAction> = g
        .sa()
        .enabled_inputs(q)
        .cloned()
        .map(TesterAction::Input)
        .collect();
    v.push(TesterAction::Theta);
    v
}

fn enumerate(
    g: &GameArena,
    trace: &Trace,
    q: StateId,
    level: usize,
    depth: usize,
) -> Vec<Vec<(Trace, TesterAction)>> {
    let mut out = Vec::new();
    if level == depth {
        return vec![vec![(trace.clone(), TesterAction::Stop)]];
    }
    if level > 0 {
        out.push(vec![(trace.clone(), TesterAction::Stop)]);
    }
    for a in choices(g, q) {
        let mut partial: Vec<Vec<(Trace, TesterAction)>> = vec![vec![(trace.clone(), a.clone())]];
        for (l, q2) in successor_traces(g, q, &a) {
            let sub = enumerate(g, &trace.extended(l), q2, level + 1, depth);
            let mut grown = Vec::with_capacity(partial.len() * sub.len());
            for p in &partial {
                for s in &sub {
                    let mut v = p.clone();
                    v.extend(s.iter().cloned());
                    grown.push(v);
                }
            }
            partial = grown;
        }
        out.extend(partial);
    }
    out
}

/// Every test obtainable from a finite trace-based strategy whose decisions
/// stop at trace depth `depth` at the latest. Depth 0 yields the bare-Pass
/// test; otherwise the root never stops. Tests with the same trace tree are
/// reported once, in enumeration order.
pub fn gen_suite(g: &GameArena, depth: usize, cap: u128) -> Result<Vec<TestCase>, TestGenError> {
    let sa = g.sa();
    let count = count_trees(g, sa.initial(), 0, depth, &mut HashMap::new());
    let count = if depth == 0 { 1 } else { count };
    if count > cap {
        return Err(TestGenError::ExplosionGuard { count, cap });
    }
    let trees = enumerate(g, &Trace::empty(), sa.initial(), 0, depth);
    let mut seen: BTreeSet<BTreeMap<Trace, TestNode>> = BTreeSet::new();
    let mut suite = Vec::new();
    for tree in trees {
        let mut sigma = FiniteTraceStrategy::new();
        for (t, a) in tree {
            sigma.insert(t, a);
        }
        let test = strategy_to_test(&sigma, g)?;
        if seen.insert(test.unfold()) {
            let name = format!(
                "{}_{}_d{}_{:04}",
                sa.name(),
                g.regime().tag().to_ascii_lowercase(),
                depth,
                suite.len()
            );
            suite.push(test.with_name(&name));
        }
    }
    Ok(suite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_sa;
    use crate::sa::SuspensionAutomaton;
    use crate::testcase::{load_testcase, validate_testcase};

    fn printer() -> SuspensionAutomaton {
        parse_sa(include_str!("../fixtures/printer.sa")).unwrap()
    }

    fn sigma_t() -> FiniteTraceStrategy {
        FiniteTraceStrategy::parse_exchange(
            "- -> print?\nprint? -> scan?\nprint? printed! -> theta\nprint? scan? -> theta\n",
        )
        .unwrap()
    }

    fn traces(v: &[&str]) -> BTreeSet<Trace> {
        v.iter().map(|s| Trace::parse(s).unwrap()).collect()
    }

    #[test]
    fn observe_test_from_strategy() {
        let p = printer();
        let nd = GameArena::new(&p, Regime::Nondeterministic, false).unwrap();
        assert_eq!(
            trace_set(&sigma_t(), &nd).unwrap(),
            traces(&[
                "print?",
                "print? printed!",
                "print? printed! delta",
                "print? scan?",
                "print? scan? printed!",
                "print? scan? scanned!",
            ])
        );
        let t = strategy_to_test(&sigma_t(), &nd).unwrap();
        validate_testcase(&t, &p, Regime::Nondeterministic).unwrap();
        let observe_test = load_testcase(include_str!("../fixtures/printer_observe.tc")).unwrap();
        assert!(t.equivalent(&observe_test));

        let ie = nd.with_regime(Regime::InputEager);
        assert_eq!(
            trace_set(&sigma_t(), &ie).unwrap(),
            traces(&["print?", "print? scan?", "print? scan? printed!", "print? scan? scanned!"])
        );
    }

    #[test]
    fn immediate_stop_gives_bare_pass() {
        let p = printer();
        let nd = GameArena::new(&p, Regime::Nondeterministic, false).unwrap();
        let t = strategy_to_test(&FiniteTraceStrategy::stop_immediately(), &nd).unwrap();
        assert_eq!(t.initial(), t.pass());
        assert!(trace_set(&FiniteTraceStrategy::new(), &nd).unwrap().is_empty());
        let back = test_to_strategy(&t, &nd).unwrap();
        assert_eq!(back.to_exchange(), "- -> stop\n");
    }

    #[test]
    fn observe_test_to_strategy() {
        let p = printer();
        let nd = GameArena::new(&p, Regime::Nondeterministic, false).unwrap();
        let observe_test = load_testcase(include_str!("../fixtures/printer_observe.tc")).unwrap();
        let s = test_to_strategy(&observe_test, &nd).unwrap();
        assert_eq!(s, sigma_t().restrict_reachable(&nd).unwrap());
    }

    #[test]
    fn observe_only_test() {
        let p = printer();
        let nd = GameArena::new(&p, Regime::Nondeterministic, false).unwrap();
        let mut sigma = FiniteTraceStrategy::new();
        sigma.insert(Trace::empty(), TesterAction::Theta);
        let t = strategy_to_test(&sigma, &nd).unwrap();
        let back = test_to_strategy(&t, &nd).unwrap();
        assert_eq!(back.decide_trace(&Trace::empty()), TesterAction::Theta);
        assert_eq!(back.decide_trace(&Trace::parse("delta").unwrap()), TesterAction::Stop);
        assert_eq!(back.len(), 2);
    }

    #[test]
    fn suite_sizes() {
        let p = printer();
        let nd = GameArena::new(&p, Regime::Nondeterministic, false).unwrap();
        assert_eq!(gen_suite(&nd, 0, DEFAULT_SUITE_CAP).unwrap().len(), 1);
        let d1 = gen_suite(&nd, 1, DEFAULT_SUITE_CAP).unwrap();
        assert_eq!(d1.len(), 3);
        assert!(matches!(
            gen_suite(&nd, 3, 5),
            Err(TestGenError::ExplosionGuard { cap: 5, .. })
        ));
    }

    #[test]
    fn mp3_depth_two_reaches_song() {
        let m = parse_sa(include_str!("../fixtures/mp3.sa")).unwrap();
        let nd = GameArena::new(&m, Regime::Nondeterministic, false).unwrap();
        let suite = gen_suite(&nd, 2, DEFAULT_SUITE_CAP).unwrap();
        let song = Trace::parse("play? song!").unwrap();
        assert!(suite
            .iter()
            .any(|t| t.unfold().get(&song) == Some(&TestNode::Pass)));
    }
}
