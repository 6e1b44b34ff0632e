//! Input-output conformance on state pairs, action decision sequences,
//! cheating between tester strategies, and a bounded brute-force check of
//! alternating trace inclusion between nondeterministic arenas.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::arena::{ArenaState, GameArena, Mark, Regime, TesterAction};
use crate::play::{PlayPrefix, Step, TesterStrategy};
use crate::sa::{Label, StateId, SuspensionAutomaton, Trace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConformanceError {
    #[error("implementation {0} is not input-enabled")]
    NotInputEnabled(String),
    #[error("implementation and specification use different alphabets")]
    AlphabetMismatch,
    #[error("{count} strategy combinations exceed the cap of {cap}")]
    ExplosionGuard { count: u128, cap: u128 },
    #[error("alternating inclusion is defined on nondeterministic arenas")]
    NotNondeterministic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub trace: Trace,
    pub output: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IocoReport {
    pub holds: bool,
    pub counterexample: Option<Counterexample>,
}

fn check_pair(imp: &SuspensionAutomaton, spec: &SuspensionAutomaton) -> Result<(), ConformanceError> {
    if imp.inputs() != spec.inputs() || imp.outputs() != spec.outputs() {
        return Err(ConformanceError::AlphabetMismatch);
    }
    if !imp.is_input_enabled() {
        return Err(ConformanceError::NotInputEnabled(imp.name().to_string()));
    }
    Ok(())
}

/// Breadth-first search over reachable state pairs along suspension traces
/// of the specification, up to traces of length `max_len`.
fn ioco_search(
    imp: &SuspensionAutomaton,
    spec: &SuspensionAutomaton,
    max_len: Option<usize>,
) -> IocoReport {
    let mut seen: HashSet<(StateId, StateId)> = HashSet::new();
    let start = (imp.initial(), spec.initial());
    seen.insert(start);
    let mut layer = vec![(Trace::empty(), start)];
    while !layer.is_empty() {
        let mut next = Vec::new();
        for (rho, (qi, qs)) in layer {
            let bad = imp
                .enabled_outputs(qi)
                .find(|x| spec.successor(qs, x).is_none());
            if let Some(x) = bad {
                return IocoReport {
                    holds: false,
                    counterexample: Some(Counterexample {
                        trace: rho,
                        output: x.clone(),
                    }),
                };
            }
            if max_len.is_some_and(|m| rho.len() >= m) {
                continue;
            }
            for (l, &ts) in spec.transitions(qs) {
                let Some(ti) = imp.successor(qi, l) else {
                    continue;
                };
                if seen.insert((ti, ts)) {
                    next.push((rho.extended(l.clone()), (ti, ts)));
                }
            }
        }
        next.sort();
        layer = next;
    }
    IocoReport {
        holds: true,
        counterexample: None,
    }
}

/// `impl ioco spec`, with a shortest counterexample on failure.
pub fn ioco_check(imp: &SuspensionAutomaton, spec: &SuspensionAutomaton) -> Result<IocoReport, ConformanceError> {
    check_pair(imp, spec)?;
    Ok(ioco_search(imp, spec, None))
}

/// ioco restricted to specification traces of length at most `max_len`.
pub fn ioco_check_bounded(
    imp: &SuspensionAutomaton,
    spec: &SuspensionAutomaton,
    max_len: usize,
) -> Result<IocoReport, ConformanceError> {
    check_pair(imp, spec)?;
    Ok(ioco_search(imp, spec, Some(max_len)))
}

/// Length of the longest shortest trace on which a new state pair of the
/// product is first met.
pub fn product_horizon(imp: &SuspensionAutomaton, spec: &SuspensionAutomaton) -> usize {
    let mut seen: HashSet<(StateId, StateId)> = HashSet::new();
    let start = (imp.initial(), spec.initial());
    seen.insert(start);
    let mut layer = vec![start];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for (qi, qs) in layer {
            for (l, &ts) in spec.transitions(qs) {
                if let Some(ti) = imp.successor(qi, l) {
                    if seen.insert((ti, ts)) {
                        next.push((ti, ts));
                    }
                }
            }
        }
        if next.is_empty() {
            return depth;
        }
        depth += 1;
        layer = next;
    }
}

/// Adds a self-loop for every missing input.
pub fn angelic_complete(sa: &SuspensionAutomaton) -> SuspensionAutomaton {
    let mut b = sa.to_builder();
    for q in sa.states() {
        for a in sa.inputs() {
            if sa.successor(q, a).is_none() {
                b.set_transition(sa.state_name(q), a, sa.state_name(q));
            }
        }
    }
    b.build().expect("completion keeps the automaton valid")
}

/// `j₀⟨a₀,x₀⟩j₁ … jₖ`: a play prefix with the SA states erased.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionDecisionSequence {
    pub marks: Vec<Mark>,
    pub proposals: Vec<(TesterAction, Label)>,
}

impl fmt::Display for ActionDecisionSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.marks[0])?;
        for ((a, x), m) in self.proposals.iter().zip(&self.marks[1..]) {
            write!(f, "⟨{a},{x}⟩{m}")?;
        }
        Ok(())
    }
}

pub fn actions_of(pi: &PlayPrefix) -> ActionDecisionSequence {
    ActionDecisionSequence {
        marks: pi.states().map(|s| s.mark).collect(),
        proposals: pi
            .steps()
            .iter()
            .map(|s| (s.action.clone(), s.output.clone()))
            .collect(),
    }
}

/// How the quantifiers of the cheating condition are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CheatReading {
    /// Some prefix has a matched counterpart where B proposes something
    /// other than θ while A observes.
    #[default]
    Intended,
    /// `∃π ∀π′: actions(π)=actions(π′) ∧ σB(π′)≠θ ⟹ σA(π)=θ`, taken as
    /// written.
    Literal,
}

/// Replays the proposals of `pi` in `gb`, following the same marks.
fn matched_prefix(gb: &GameArena, pi: &PlayPrefix) -> Option<PlayPrefix> {
    let mut out = PlayPrefix::new(gb.initial());
    if pi.start().mark != out.start().mark {
        return None;
    }
    for st in pi.steps() {
        let n = *gb
            .moves(out.last(), &st.action, &st.output)
            .iter()
            .find(|n| n.mark == st.next.mark && n.is_sink() == st.next.is_sink())?;
        out.push_unchecked(Step {
            action: st.action.clone(),
            output: st.output.clone(),
            next: n,
        });
    }
    Some(out)
}

/// All prefixes of `g` with at most `depth` steps, every proposal pair and
/// resolution included.
fn all_prefixes(g: &GameArena, depth: usize) -> Vec<PlayPrefix> {
    let mut all = vec![PlayPrefix::new(g.initial())];
    let mut layer = all.clone();
    for _ in 0..depth {
        let mut next = Vec::new();
        for pi in &layer {
            let s = pi.last();
            for a in g.gamma1(s) {
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
        }
        all.extend(next.iter().cloned());
        layer = next;
    }
    all
}

/// Whether `sa_strat` (over `ga`) cheats on `sb_strat` (over `gb`) on some
/// prefix of at most `depth` steps.
pub fn cheats_on(
    ga: &GameArena,
    sa_strat: &dyn TesterStrategy,
    gb: &GameArena,
    sb_strat: &dyn TesterStrategy,
    depth: usize,
    reading: CheatReading,
) -> bool {
    all_prefixes(ga, depth).iter().any(|pi| {
        let a_obs = sa_strat.decide(ga, pi) == TesterAction::Theta;
        match (reading, matched_prefix(gb, pi)) {
            (CheatReading::Intended, Some(pb)) => a_obs && sb_strat.decide(gb, &pb) != TesterAction::Theta,
            (CheatReading::Intended, None) => false,
            (CheatReading::Literal, Some(pb)) => a_obs || sb_strat.decide(gb, &pb) == TesterAction::Theta,
            (CheatReading::Literal, None) => true,
        }
    })
}

pub const DEFAULT_ALT_CAP: u128 = 1_000_000;

/// Trace-based player-2 strategies restricted to traces shorter than `d`:
/// the nodes and their enabled outputs.
fn output_nodes(sa: &SuspensionAutomaton, d: usize) -> Vec<(Trace, Vec<Label>)> {
    let mut nodes = Vec::new();
    let mut layer = vec![(Trace::empty(), sa.initial())];
    for _ in 0..d {
        let mut next = Vec::new();
        for (rho, q) in layer {
            nodes.push((rho.clone(), sa.enabled_outputs(q).cloned().collect()));
            for (l, t) in sa.transitions(q) {
                next.push((rho.extended(l.clone()), *t));
            }
        }
        layer = next;
    }
    nodes
}

fn space_size(nodes: &[(Trace, Vec<Label>)]) -> u128 {
    nodes
        .iter()
        .fold(1u128, |acc, (_, xs)| acc.saturating_mul(xs.len() as u128))
}

/// The `k`-th output strategy in mixed-radix order.
fn nth_output_strategy(nodes: &[(Trace, Vec<Label>)], mut k: u128) -> BTreeMap<Trace, Label> {
    let mut m = BTreeMap::new();
    for (rho, xs) in nodes {
        let r = xs.len() as u128;
        m.insert(rho.clone(), xs[(k % r) as usize].clone());
        k /= r;
    }
    m
}

fn stop_tail(rho: &Trace, n: usize) -> Trace {
    let mut t = rho.clone();
    for _ in 0..n {
        t.push(TesterAction::Stop.executed_label().expect("meta"));
    }
    t
}

/// One player-1 strategy of B, restricted to its outcome against a fixed
/// player-2 strategy, with the outcome's prefix traces.
#[derive(Debug, Clone, Default)]
struct Outcome {
    decisions: BTreeMap<Trace, TesterAction>,
    traces: BTreeSet<Trace>,
}

fn merge(a: &Outcome, b: &Outcome) -> Outcome {
    let mut o = a.clone();
    o.decisions.extend(b.decisions.iter().map(|(k, v)| (k.clone(), v.clone())));
    o.traces.extend(b.traces.iter().cloned());
    o
}

struct AltSearch<'a> {
    ga: &'a GameArena<'a>,
    gb: &'a GameArena<'a>,
    depth: usize,
    reading: CheatReading,
}

impl AltSearch<'_> {
    /// Every outcome of a trace-based tester in B against `x_b`.
    fn b_outcomes(&self, x_b: &BTreeMap<Trace, Label>, rho: &Trace, q: StateId, level: usize) -> Vec<Outcome> {
        let mut here = Outcome::default();
        here.traces.insert(rho.clone());
        if level == self.depth {
            return vec![here];
        }
        let sb = ArenaState::new(q, Mark::Input);
        let x = &x_b[rho];
        let mut out = Vec::new();
        for a in self.gb.gamma1(sb) {
            if a == TesterAction::Reset {
                continue;
            }
            let mut base = here.clone();
            base.decisions.insert(rho.clone(), a.clone());
            if a == TesterAction::Stop {
                for k in 1..=self.depth - level {
                    base.traces.insert(stop_tail(rho, k));
                }
                out.push(base);
                continue;
            }
            let mut partial = vec![base];
            for n in self.gb.moves(sb, &a, x).iter() {
                let label = match (&a, n.mark) {
                    (TesterAction::Input(l), Mark::Input) => l.clone(),
                    _ => x.clone(),
                };
                let child = rho.extended(label);
                let subs = self.b_outcomes(x_b, &child, n.base.expect("in automaton"), level + 1);
                partial = partial
                    .iter()
                    .flat_map(|p| subs.iter().map(move |s| merge(p, s)))
                    .collect();
            }
            out.extend(partial);
        }
        out
    }

    /// Is there a tester in A whose outcome against `x_a` stays inside
    /// `ob` without cheating on B's tester?
    fn a_exists(
        &self,
        x_a: &BTreeMap<Trace, Label>,
        ob: &Outcome,
        rho: &Trace,
        qa: StateId,
        qb: StateId,
        level: usize,
        matched: bool,
    ) -> bool {
        if level == self.depth {
            return true;
        }
        let (sa_arena, sb_arena) = (self.ga.sa(), self.gb.sa());
        let s = ArenaState::new(qa, Mark::Input);
        let x = &x_a[rho];
        let b_decision = ob.decisions.get(rho);
        'actions: for a in self.ga.gamma1(s) {
            if a == TesterAction::Reset {
                continue;
            }
            if a == TesterAction::Theta {
                let forbidden = match self.reading {
                    CheatReading::Intended => matched && b_decision.is_some_and(|d| *d != TesterAction::Theta),
                    CheatReading::Literal => true,
                };
                if forbidden {
                    continue;
                }
            }
            if a == TesterAction::Stop {
                if ob.traces.contains(&stop_tail(rho, self.depth - level)) {
                    return true;
                }
                continue;
            }
            for n in self.ga.moves(s, &a, x).iter() {
                let label = match (&a, n.mark) {
                    (TesterAction::Input(l), Mark::Input) => l.clone(),
                    _ => x.clone(),
                };
                let child = rho.extended(label.clone());
                if !ob.traces.contains(&child) {
                    continue 'actions;
                }
                let qb2 = sb_arena.successor(qb, &label).expect("outcome trace of B");
                let step_matched = !label.is_input()
                    || sa_arena
                        .enabled_outputs(qa)
                        .any(|y| sb_arena.successor(qb, y).is_some());
                let qa2 = n.base.expect("in automaton");
                if !self.a_exists(x_a, ob, &child, qa2, qb2, level + 1, matched && step_matched) {
                    continue 'actions;
                }
            }
            return true;
        }
        false
    }

    /// Under the literal reading a tester of B that observes on a matched
    /// prefix, or a prefix of A without a counterpart, makes every tester
    /// of A cheat.
    fn literal_blocks(&self, ob: &Outcome) -> bool {
        ob.decisions.values().any(|a| *a == TesterAction::Theta)
            || all_prefixes(self.ga, self.depth.saturating_sub(1))
                .iter()
                .any(|pi| matched_prefix(self.gb, pi).is_none())
    }
}

/// Bounded alternating trace inclusion `G_A ⊑₂ G_B` over trace-based
/// strategies, comparing outcome prefixes with at most `depth` steps.
pub fn alt_incl_bounded(
    ga: &GameArena,
    gb: &GameArena,
    depth: usize,
    cap: u128,
    reading: CheatReading,
) -> Result<bool, ConformanceError> {
    let nd = |g: &GameArena| matches!(g.regime(), Regime::Nondeterministic | Regime::InputFair);
    if !nd(ga) || !nd(gb) {
        return Err(ConformanceError::NotNondeterministic);
    }
    check_pair(ga.sa(), gb.sa())?;
    let (a_sa, b_sa) = (ga.sa(), gb.sa());
    let a_nodes = output_nodes(a_sa, depth);
    let b_nodes = output_nodes(b_sa, depth);
    let (na, nb) = (space_size(&a_nodes), space_size(&b_nodes));
    let count = na.saturating_mul(nb);
    if count > cap {
        return Err(ConformanceError::ExplosionGuard { count, cap });
    }
    let search = AltSearch {
        ga,
        gb,
        depth,
        reading,
    };

    let b_strategy_ok = |x_a: &BTreeMap<Trace, Label>, x_b: &BTreeMap<Trace, Label>| {
        search
            .b_outcomes(x_b, &Trace::empty(), b_sa.initial(), 0)
            .iter()
            .all(|ob| {
                if reading == CheatReading::Literal && search.literal_blocks(ob) {
                    return false;
                }
                search.a_exists(x_a, ob, &Trace::empty(), a_sa.initial(), b_sa.initial(), 0, true)
            })
    };

    for ka in 0..na {
        let x_a = nth_output_strategy(&a_nodes, ka);
        // copy A's choices wherever B allows them
        let copy: BTreeMap<Trace, Label> = b_nodes
            .iter()
            .map(|(rho, xs)| {
                let pick = x_a.get(rho).filter(|x| xs.contains(x)).unwrap_or(&xs[0]);
                (rho.clone(), pick.clone())
            })
            .collect();
        let mut found = b_strategy_ok(&x_a, &copy);
        let mut kb = 0;
        while !found && kb < nb {
            let x_b = nth_output_strategy(&b_nodes, kb);
            if x_b != copy {
                found = b_strategy_ok(&x_a, &x_b);
            }
            kb += 1;
        }
        if !found {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Alternating trace inclusion of the nondeterministic arenas, decided
/// through ioco.
pub fn alt_incl(imp: &SuspensionAutomaton, spec: &SuspensionAutomaton) -> Result<bool, ConformanceError> {
    Ok(ioco_check(imp, spec)?.holds)
}
