//! Reachability synthesis for player 1: attractor with ranks, strategy
//! extraction, the input-fair retry construction and a brute-force oracle.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::arena::{ArenaState, GameArena, Mark, Regime, TesterAction};
use crate::play::{PlayPrefix, ReachabilityGoal, TesterStrategy};
use crate::strategy::{explore, FiniteTraceStrategy, StrategyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthesisError {
    #[error("the input-fair regime has no attractor of its own; use solve_reach_if")]
    InputFairArena,
    #[error("input-fair synthesis expects an arena with nondeterministic moves")]
    NotNondeterministic,
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

/// `{ s | ∃a ∈ Γ₁(s) ∀x ∈ Γ₂(s): ∅ ≠ moves(s,a,x) ⊆ t }`, with `t` given as a
/// membership vector over arena indices.
pub fn cpre(g: &GameArena, t: &[bool]) -> Vec<bool> {
    g.states()
        .map(|s| {
            let xs = g.gamma2(s);
            g.gamma1(s).iter().any(|a| {
                xs.iter().all(|x| {
                    let m = g.moves(s, a, x);
                    !m.is_empty() && m.iter().all(|n| t[g.index(*n)])
                })
            })
        })
        .collect()
}

/// Set-valued convenience wrapper around [`cpre`].
pub fn cpre_set(g: &GameArena, t: &BTreeSet<ArenaState>) -> BTreeSet<ArenaState> {
    let mut member = vec![false; g.num_states()];
    for s in t {
        member[g.index(*s)] = true;
    }
    cpre(g, &member)
        .into_iter()
        .enumerate()
        .filter(|(_, b)| *b)
        .map(|(i, _)| g.state_at(i))
        .collect()
}

/// Attractor ranks: `Some(0)` on the goal, `Some(k)` if added in round k,
/// `None` outside the attractor.
pub fn attractor_ranks(g: &GameArena, goal: &ReachabilityGoal) -> Vec<Option<u32>> {
    let mut rank: Vec<Option<u32>> = g
        .states()
        .map(|s| goal.contains(s).then_some(0))
        .collect();
    let mut k = 0;
    loop {
        k += 1;
        let member: Vec<bool> = rank.iter().map(Option::is_some).collect();
        let pre = cpre(g, &member);
        let mut grew = false;
        for (i, inside) in pre.into_iter().enumerate() {
            if inside && rank[i].is_none() {
                rank[i] = Some(k);
                grew = true;
            }
        }
        if !grew {
            return rank;
        }
    }
}

/// Worst-case rank after playing `a` at `s`; `None` if some successor lies
/// outside the attractor.
fn worst_rank(g: &GameArena, ranks: &[Option<u32>], s: ArenaState, a: &TesterAction) -> Option<u32> {
    let mut worst = 0;
    for x in g.gamma2(s) {
        for n in g.moves(s, a, &x).iter() {
            worst = worst.max(ranks[g.index(*n)]?);
        }
    }
    Some(worst)
}

/// The rank-decreasing action at `s`: least worst successor rank, ties
/// broken by action order. Goal states and states outside the attractor
/// get `stop`.
pub fn positional_choice(g: &GameArena, ranks: &[Option<u32>], s: ArenaState) -> TesterAction {
    match ranks[g.index(s)] {
        Some(r) if r > 0 => g
            .gamma1(s)
            .into_iter()
            .filter(|a| *a != TesterAction::Stop && *a != TesterAction::Reset)
            .filter_map(|a| worst_rank(g, ranks, s, &a).map(|w| (w, a)))
            .min()
            .map(|(_, a)| a)
            .unwrap_or(TesterAction::Stop),
        _ => TesterAction::Stop,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisResult {
    pub winning: bool,
    /// Present iff `winning`.
    pub strategy: Option<FiniteTraceStrategy>,
    /// Indexed by [`GameArena::index`].
    pub ranks: Vec<Option<u32>>,
}

impl SynthesisResult {
    pub fn rank(&self, g: &GameArena, s: ArenaState) -> Option<u32> {
        self.ranks[g.index(s)]
    }

    /// Rank table rows `(state, rank)` in arena order.
    pub fn rank_table(&self, g: &GameArena) -> Vec<RankRow> {
        g.states()
            .map(|s| RankRow {
                state: g.display_state(s),
                rank: self.ranks[g.index(s)],
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankRow {
    pub state: String,
    pub rank: Option<u32>,
}

/// Decides reachability of `goal` from the initial state and extracts a
/// trace-based winning strategy.
pub fn solve_reach(g: &GameArena, goal: &ReachabilityGoal) -> Result<SynthesisResult, SynthesisError> {
    if g.regime() == Regime::InputFair {
        return Err(SynthesisError::InputFairArena);
    }
    let ranks = attractor_ranks(g, goal);
    let winning = ranks[g.index(g.initial())].is_some();
    let strategy = if winning {
        let bound = ranks.iter().flatten().max().copied().unwrap_or(0) as usize + 1;
        let nodes = explore(g, bound, |_, q| {
            positional_choice(g, &ranks, ArenaState::new(q, Mark::Input))
        })?;
        let mut s = FiniteTraceStrategy::new();
        for n in nodes {
            s.insert(n.trace, n.action);
        }
        Some(s)
    } else {
        None
    };
    Ok(SynthesisResult {
        winning,
        strategy,
        ranks,
    })
}

/// Follows the input-eager witness in the nondeterministic arena. A
/// diversion (proposed input not executed) triggers `reset?` when the arena
/// allows it; leaving the witness' winning region does as well, or `stop`
/// without reset.
#[derive(Debug, Clone)]
pub struct RetryStrategy {
    ie_ranks: Vec<Option<u32>>,
    goal: ReachabilityGoal,
}

impl RetryStrategy {
    fn ie_choice(&self, g: &GameArena, s: ArenaState) -> TesterAction {
        let ie = g.with_regime(Regime::InputEager).with_reset(false);
        positional_choice(&ie, &self.ie_ranks, s)
    }

    pub fn in_witness_region(&self, g: &GameArena, s: ArenaState) -> bool {
        self.ie_ranks[g.index(s)].is_some()
    }
}

impl TesterStrategy for RetryStrategy {
    fn decide(&self, g: &GameArena, pi: &PlayPrefix) -> TesterAction {
        let s = pi.last();
        if s.is_sink() || self.goal.contains(s) {
            return TesterAction::Stop;
        }
        let diverted = pi
            .steps()
            .last()
            .is_some_and(|st| st.action.is_input() && st.next.mark == Mark::Output);
        if diverted && g.resettable() {
            return TesterAction::Reset;
        }
        if !self.in_witness_region(g, s) {
            return if g.resettable() {
                TesterAction::Reset
            } else {
                TesterAction::Stop
            };
        }
        self.ie_choice(g, s)
    }
}

#[derive(Debug, Clone)]
pub struct FairSynthesis {
    pub winning: bool,
    /// The input-eager solution the verdict is taken from.
    pub input_eager: SynthesisResult,
    pub retry: Option<RetryStrategy>,
    /// Some state reachable in the nondeterministic arena under the
    /// witness' choices lies outside its winning region, so recovering
    /// needs `reset?`.
    pub requires_reset: bool,
}

/// Input-fair synthesis: the verdict equals the input-eager one; the
/// strategy is the retry construction over the nondeterministic arena.
pub fn solve_reach_if(g: &GameArena, goal: &ReachabilityGoal) -> Result<FairSynthesis, SynthesisError> {
    if !matches!(g.regime(), Regime::Nondeterministic | Regime::InputFair) {
        return Err(SynthesisError::NotNondeterministic);
    }
    let ie = g.with_regime(Regime::InputEager).with_reset(false);
    let input_eager = solve_reach(&ie, goal)?;
    let ranks = &input_eager.ranks;

    let mut seen = vec![false; g.num_states()];
    let mut stack = vec![g.initial()];
    seen[g.index(g.initial())] = true;
    let mut requires_reset = false;
    let nd = g.with_reset(false);
    while let Some(s) = stack.pop() {
        if goal.contains(s) || s.is_sink() {
            continue;
        }
        if ranks[g.index(s)].is_none() {
            requires_reset = true;
            continue;
        }
        let a = positional_choice(&ie, ranks, s);
        for x in nd.gamma2(s) {
            for &n in nd.moves(s, &a, &x).iter() {
                if !seen[g.index(n)] {
                    seen[g.index(n)] = true;
                    stack.push(n);
                }
            }
        }
    }

    let winning = input_eager.winning;
    let retry = winning.then(|| RetryStrategy {
        ie_ranks: input_eager.ranks.clone(),
        goal: goal.clone(),
    });
    Ok(FairSynthesis {
        winning,
        input_eager,
        retry,
        requires_reset,
    })
}

/// Exhaustive game-tree search: can player 1 force a visit to the goal
/// within `depth` rounds against every output and every resolution?
pub fn solve_reach_bruteforce(g: &GameArena, goal: &ReachabilityGoal, depth: usize) -> bool {
    fn win(
        g: &GameArena,
        goal: &ReachabilityGoal,
        s: ArenaState,
        d: usize,
        memo: &mut HashMap<(usize, usize), bool>,
    ) -> bool {
        if goal.contains(s) {
            return true;
        }
        if d == 0 {
            return false;
        }
        if let Some(&v) = memo.get(&(g.index(s), d)) {
            return v;
        }
        let xs = g.gamma2(s);
        let v = g.gamma1(s).iter().any(|a| {
            xs.iter().all(|x| {
                g.moves(s, a, x)
                    .iter()
                    .all(|n| win(g, goal, *n, d - 1, memo))
            })
        });
        memo.insert((g.index(s), d), v);
        v
    }
    win(g, goal, g.initial(), depth, &mut HashMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_sa;
    use crate::sa::{Label, SuspensionAutomaton, Trace};

    fn printer() -> SuspensionAutomaton {
        parse_sa(include_str!("../fixtures/printer.sa")).unwrap()
    }

    fn at(sa: &SuspensionAutomaton, q: &str, m: Mark) -> ArenaState {
        ArenaState::new(sa.state_id(q).unwrap(), m)
    }

    #[test]
    fn cpre_examples() {
        let p = printer();
        let t: BTreeSet<ArenaState> = [at(&p, "q4", Mark::Input), at(&p, "q4", Mark::Output)].into();
        let ie = GameArena::new(&p, Regime::InputEager, false).unwrap();
        assert!(cpre_set(&ie, &t).contains(&at(&p, "q3", Mark::Input)));
        let nd = ie.with_regime(Regime::Nondeterministic);
        assert!(!cpre_set(&nd, &t).contains(&at(&p, "q3", Mark::Input)));
        let all: BTreeSet<ArenaState> = ie.states().collect();
        assert_eq!(cpre_set(&ie, &all), all);
    }

    #[test]
    fn printer_q4_per_regime() {
        let p = printer();
        let goal = ReachabilityGoal::from_names(&p, &["q4"]).unwrap();
        let ie = GameArena::new(&p, Regime::InputEager, false).unwrap();
        let r = solve_reach(&ie, &goal).unwrap();
        assert!(r.winning);
        let s = r.strategy.unwrap();
        assert_eq!(
            s.to_exchange(),
            "- -> print?\nprint? -> scan?\nprint? scan? -> stop\n"
        );
        for regime in [Regime::OutputEager, Regime::Nondeterministic] {
            assert!(!solve_reach(&ie.with_regime(regime), &goal).unwrap().winning);
        }
        assert_eq!(
            solve_reach(&ie.with_regime(Regime::InputFair), &goal).unwrap_err(),
            SynthesisError::InputFairArena
        );
    }

    #[test]
    fn goal_at_initial_stops_at_once() {
        let p = printer();
        let goal = ReachabilityGoal::from_names(&p, &["q0"]).unwrap();
        let nd = GameArena::new(&p, Regime::Nondeterministic, false).unwrap();
        let r = solve_reach(&nd, &goal).unwrap();
        assert!(r.winning);
        assert_eq!(r.strategy.unwrap().decide_trace(&Trace::empty()), TesterAction::Stop);
    }

    #[test]
    fn input_fair_retry() {
        let p = printer();
        let goal = ReachabilityGoal::from_names(&p, &["q4"]).unwrap();
        let g = GameArena::new(&p, Regime::Nondeterministic, true).unwrap();
        let fair = solve_reach_if(&g, &goal).unwrap();
        assert!(fair.winning);
        assert!(!fair.requires_reset);
        let retry = fair.retry.unwrap();
        let q3 = PlayPrefix::new(at(&p, "q3", Mark::Input));
        assert_eq!(
            retry.decide(&g, &q3),
            TesterAction::Input(Label::new("scan?").unwrap())
        );
        let diverted = crate::play::step(
            &g,
            &q3,
            &TesterAction::Input(Label::new("scan?").unwrap()),
            &Label::new("printed!").unwrap(),
            &mut crate::play::Scripted::new(vec![Mark::Output]),
        )
        .unwrap();
        assert_eq!(retry.decide(&g, &diverted), TesterAction::Reset);
    }

    #[test]
    fn mp3_q3_is_winning_even_input_eager() {
        let m = parse_sa(include_str!("../fixtures/mp3.sa")).unwrap();
        let goal = ReachabilityGoal::from_names(&m, &["q3"]).unwrap();
        let nd = GameArena::new(&m, Regime::Nondeterministic, true).unwrap();
        assert!(solve_reach_if(&nd, &goal).unwrap().winning);
        let ie = nd.with_regime(Regime::InputEager).with_reset(false);
        let s = solve_reach(&ie, &goal).unwrap().strategy.unwrap();
        assert_eq!(s.decide_trace(&Trace::empty()).to_string(), "play?");
    }

    #[test]
    fn bruteforce_edges() {
        let p = printer();
        let g = GameArena::new(&p, Regime::InputEager, false).unwrap();
        let q4 = ReachabilityGoal::from_names(&p, &["q4"]).unwrap();
        let q0 = ReachabilityGoal::from_names(&p, &["q0"]).unwrap();
        assert!(!solve_reach_bruteforce(&g, &q4, 0));
        assert!(solve_reach_bruteforce(&g, &q0, 0));
        assert!(solve_reach_bruteforce(&g, &q4, 2));
        assert!(!solve_reach_bruteforce(&g.with_regime(Regime::Nondeterministic), &q4, 8));
    }
}
