//! Finite trace-based tester strategies and the exploration of the traces
//! they can produce.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::arena::{ArenaState, GameArena, Mark, TesterAction};
use crate::play::{PlayPrefix, Step, TesterStrategy};
use crate::sa::{Label, StateId, SuspensionAutomaton, Trace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrategyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trace {trace} is not a suspension trace of the specification")]
    NotAStrace { trace: String },
    #[error("action {action} is not enabled after {trace}")]
    NotEnabled { trace: String, action: String },
    #[error("strategy decides differently on two prefixes with trace {trace}")]
    NotTraceBased { trace: String },
    #[error("strategy does not stop within {depth} steps")]
    NotFinite { depth: usize },
}

/// A trace reachable under some strategy, the SA state it leads to and the
/// action the strategy takes there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceNode {
    pub trace: Trace,
    pub state: StateId,
    pub action: TesterAction,
}

/// Traces that follow from playing `action` at SA state `q`, paired with
/// their SA states. Every enabled output is tried and both sides of a
/// conflict are kept.
pub(crate) fn successor_traces(
    g: &GameArena,
    q: StateId,
    action: &TesterAction,
) -> Vec<(Label, StateId)> {
    let s = ArenaState::new(q, Mark::Input);
    let mut out: Vec<(Label, StateId)> = Vec::new();
    for x in g.gamma2(s) {
        for n in g.moves(s, action, &x).iter() {
            let label = match (n.mark, action) {
                (Mark::Input, TesterAction::Input(a)) => a.clone(),
                _ => x.clone(),
            };
            let q2 = n.base.expect("non-stop moves stay in the automaton");
            if !out.iter().any(|(l, _)| *l == label) {
                out.push((label, q2));
            }
        }
    }
    out.sort();
    out
}

/// Breadth-first exploration of the trace tree induced by a trace-based
/// decision function. Fails if some trace longer than `max_len` still
/// receives a non-stop decision.
pub fn explore(
    g: &GameArena,
    max_len: usize,
    mut decide: impl FnMut(&Trace, StateId) -> TesterAction,
) -> Result<Vec<TraceNode>, StrategyError> {
    let sa = g.sa();
    let mut nodes = Vec::new();
    let mut frontier = vec![(Trace::empty(), sa.initial())];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (trace, q) in frontier {
            let action = decide(&trace, q);
            if action != TesterAction::Stop {
                if trace.len() >= max_len {
                    return Err(StrategyError::NotFinite { depth: max_len });
                }
                if !g.tester_enabled(ArenaState::new(q, Mark::Input), &action)
                    || action == TesterAction::Reset
                {
                    return Err(StrategyError::NotEnabled {
                        trace: trace.to_string(),
                        action: action.to_string(),
                    });
                }
                for (l, q2) in successor_traces(g, q, &action) {
                    next.push((trace.extended(l), q2));
                }
            }
            nodes.push(TraceNode { trace, state: q, action });
        }
        next.sort();
        frontier = next;
    }
    nodes.sort_by(|a, b| a.trace.cmp(&b.trace));
    Ok(nodes)
}

/// A finite, prefix-keyed map from traces to tester actions. Traces without
/// an entry are answered with `stop`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FiniteTraceStrategy {
    decisions: BTreeMap<Trace, TesterAction>,
}

impl FiniteTraceStrategy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stop_immediately() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, trace: Trace, action: TesterAction) -> &mut Self {
        self.decisions.insert(trace, action);
        self
    }

    pub fn get(&self, trace: &Trace) -> Option<&TesterAction> {
        self.decisions.get(trace)
    }

    pub fn decide_trace(&self, trace: &Trace) -> TesterAction {
        self.decisions
            .get(trace)
            .cloned()
            .unwrap_or(TesterAction::Stop)
    }

    pub fn decisions(&self) -> &BTreeMap<Trace, TesterAction> {
        &self.decisions
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    /// Longest key; every outcome stops within this many steps plus one.
    pub fn depth(&self) -> usize {
        self.decisions.keys().map(Trace::len).max().unwrap_or(0)
    }

    /// Every key is a suspension trace and every decision is enabled there.
    pub fn check(&self, sa: &SuspensionAutomaton) -> Result<(), StrategyError> {
        for (trace, action) in &self.decisions {
            let q = sa.after_initial(trace).ok_or_else(|| StrategyError::NotAStrace {
                trace: trace.to_string(),
            })?;
            let ok = match action {
                TesterAction::Input(a) => sa.successor(q, a).is_some(),
                TesterAction::Theta | TesterAction::Stop => true,
                TesterAction::Reset => false,
            };
            if !ok {
                return Err(StrategyError::NotEnabled {
                    trace: trace.to_string(),
                    action: action.to_string(),
                });
            }
        }
        Ok(())
    }

    /// The traces this strategy can produce in `g`, with their decisions.
    pub fn reachable(&self, g: &GameArena) -> Result<Vec<TraceNode>, StrategyError> {
        self.check(g.sa())?;
        explore(g, self.depth() + 1, |t, _| self.decide_trace(t))
    }

    /// Canonical form: one entry per reachable trace, stops included.
    pub fn restrict_reachable(&self, g: &GameArena) -> Result<FiniteTraceStrategy, StrategyError> {
        Ok(FiniteTraceStrategy {
            decisions: self
                .reachable(g)?
                .into_iter()
                .map(|n| (n.trace, n.action))
                .collect(),
        })
    }

    /// Reads a strategy off an oracle by exploring all outcomes up to
    /// `depth` rounds against every player-2 behaviour.
    pub fn from_oracle(
        g: &GameArena,
        oracle: &dyn TesterStrategy,
        depth: usize,
    ) -> Result<FiniteTraceStrategy, StrategyError> {
        let mut decisions: BTreeMap<Trace, TesterAction> = BTreeMap::new();
        let mut layer = vec![PlayPrefix::new(g.initial())];
        for round in 0..=depth {
            let mut next = Vec::new();
            for pi in &layer {
                let s = pi.last();
                if s.is_sink() {
                    continue;
                }
                let a = oracle.decide(g, pi);
                let trace = pi.trace();
                match decisions.get(&trace) {
                    Some(b) if *b != a => {
                        return Err(StrategyError::NotTraceBased {
                            trace: trace.to_string(),
                        })
                    }
                    _ => {
                        decisions.insert(trace.clone(), a.clone());
                    }
                }
                if a == TesterAction::Stop {
                    continue;
                }
                if round == depth {
                    return Err(StrategyError::NotFinite { depth });
                }
                if a == TesterAction::Reset || !g.tester_enabled(s, &a) {
                    return Err(StrategyError::NotEnabled {
                        trace: trace.to_string(),
                        action: a.to_string(),
                    });
                }
                for x in g.gamma2(s) {
                    for &n in g.moves(s, &a, &x).iter() {
                        next.push(pi.extended(Step {
                            action: a.clone(),
                            output: x.clone(),
                            next: n,
                        }));
                    }
                }
            }
            layer = next;
        }
        Ok(FiniteTraceStrategy { decisions })
    }

    /// `TRACE -> ACTION` lines in trace order, `-` for the empty trace.
    pub fn to_exchange(&self) -> String {
        let mut out = String::new();
        for (t, a) in &self.decisions {
            let _ = writeln!(out, "{} -> {}", t.to_exchange(), a);
        }
        out
    }

    pub fn parse_exchange(text: &str) -> Result<FiniteTraceStrategy, StrategyError> {
        let mut decisions = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| StrategyError::Parse {
                line: i + 1,
                message,
            };
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| err("expected 'TRACE -> ACTION'".into()))?;
            let trace = Trace::parse(lhs).map_err(|e| err(e.to_string()))?;
            let action = TesterAction::parse(rhs.trim())
                .ok_or_else(|| err(format!("unknown action {:?}", rhs.trim())))?;
            if decisions.insert(trace.clone(), action).is_some() {
                return Err(err(format!("duplicate entry for {trace}")));
            }
        }
        Ok(FiniteTraceStrategy { decisions })
    }
}

impl TesterStrategy for FiniteTraceStrategy {
    fn decide(&self, _g: &GameArena, pi: &PlayPrefix) -> TesterAction {
        if pi.last().is_sink() {
            TesterAction::Stop
        } else {
            self.decide_trace(&pi.trace())
        }
    }
}

#[derive(Serialize)]
struct Entry<'a> {
    trace: &'a Trace,
    action: &'a TesterAction,
}

impl Serialize for FiniteTraceStrategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(
            self.decisions
                .iter()
                .map(|(trace, action)| Entry { trace, action }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::Regime;
    use crate::parse::parse_sa;

    fn printer() -> SuspensionAutomaton {
        parse_sa(include_str!("../fixtures/printer.sa")).unwrap()
    }

    fn t(s: &str) -> Trace {
        Trace::parse(s).unwrap()
    }

    fn observe_strategy() -> FiniteTraceStrategy {
        FiniteTraceStrategy::parse_exchange(
            "- -> print?\nprint? -> scan?\nprint? printed! -> theta\nprint? scan? -> theta\n",
        )
        .unwrap()
    }

    #[test]
    fn exchange_round_trip() {
        let s = observe_strategy();
        assert_eq!(FiniteTraceStrategy::parse_exchange(&s.to_exchange()).unwrap(), s);
        assert!(s.to_exchange().starts_with("- -> print?\n"));
        assert!(FiniteTraceStrategy::parse_exchange("print? print?").is_err());
        assert!(FiniteTraceStrategy::parse_exchange("- -> jump").is_err());
    }

    #[test]
    fn reachable_traces_under_nd_and_ie() {
        let p = printer();
        let nd = GameArena::new(&p, Regime::Nondeterministic, false).unwrap();
        let s = observe_strategy();
        let traces: Vec<String> = s
            .reachable(&nd)
            .unwrap()
            .into_iter()
            .map(|n| n.trace.to_string())
            .collect();
        assert_eq!(
            traces,
            vec![
                "ε",
                "print?",
                "print? printed!",
                "print? scan?",
                "print? printed! delta",
                "print? scan? printed!",
                "print? scan? scanned!",
            ]
        );
        let ie = nd.with_regime(Regime::InputEager);
        assert_eq!(s.reachable(&ie).unwrap().len(), 5);
    }

    #[test]
    fn check_rejects_disabled_inputs() {
        let p = printer();
        let mut s = FiniteTraceStrategy::new();
        s.insert(t("print?"), TesterAction::Input(Label::new("print?").unwrap()));
        assert!(matches!(s.check(&p), Err(StrategyError::NotEnabled { .. })));
        let mut s = FiniteTraceStrategy::new();
        s.insert(t("printed!"), TesterAction::Theta);
        assert!(matches!(s.check(&p), Err(StrategyError::NotAStrace { .. })));
    }

    #[test]
    fn from_oracle_detects_non_trace_based_and_infinite() {
        let p = printer();
        let g = GameArena::new(&p, Regime::Nondeterministic, false).unwrap();
        let s = observe_strategy();
        let read = FiniteTraceStrategy::from_oracle(&g, &s, 4).unwrap();
        assert_eq!(read, s.restrict_reachable(&g).unwrap());

        let forever = |_: &GameArena, _: &PlayPrefix| TesterAction::Theta;
        assert_eq!(
            FiniteTraceStrategy::from_oracle(&g, &forever, 3),
            Err(StrategyError::NotFinite { depth: 3 })
        );
        let by_mark = |_: &GameArena, pi: &PlayPrefix| {
            if pi.len() >= 3 {
                TesterAction::Stop
            } else if pi.last().mark == Mark::Output {
                TesterAction::Stop
            } else {
                TesterAction::Theta
            }
        };
        assert!(FiniteTraceStrategy::from_oracle(&g, &by_mark, 4).is_ok());
    }

    #[test]
    fn oracle_depending_on_unexecuted_output_is_not_trace_based() {
        let p = parse_sa(include_str!("../fixtures/mp3.sa")).unwrap();
        let g = GameArena::new(&p, Regime::Nondeterministic, false).unwrap();
        // at (q1,1) after play?, propose quit?; the trace "play? quit?" is
        // reached whichever output was proposed alongside.
        let oracle = |_: &GameArena, pi: &PlayPrefix| match pi.len() {
            1 => TesterAction::Input(Label::new("play?").unwrap()),
            2 => TesterAction::Input(Label::new("quit?").unwrap()),
            3 if pi.steps()[1].output.name() == "song!" => TesterAction::Theta,
            _ => TesterAction::Stop,
        };
        assert!(matches!(
            FiniteTraceStrategy::from_oracle(&g, &oracle, 5),
            Err(StrategyError::NotTraceBased { .. })
        ));
    }
}
