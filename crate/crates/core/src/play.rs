//! Plays, play prefixes, traces of plays, strategies as oracles, outcomes,
//! input-fairness on lassos and reachability winning.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::arena::{ArenaState, GameArena, Mark, TesterAction};
use crate::sa::{Label, StateId, SuspensionAutomaton, Trace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlayError {
    #[error("action pair ({action}, {output}) is not enabled at {state}")]
    DisabledAction {
        state: String,
        action: String,
        output: String,
    },
    #[error("step {position} does not follow the moves function")]
    Inconsistent { position: usize },
    #[error("unknown state {0} in goal")]
    UnknownState(String),
}

/// One round: the proposed pair and the resulting state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub action: TesterAction,
    pub output: Label,
    pub next: ArenaState,
}

impl Step {
    /// The label this step contributes to the play's trace.
    pub fn executed_label(&self) -> Label {
        match &self.action {
            TesterAction::Stop | TesterAction::Reset => {
                self.action.executed_label().expect("meta action")
            }
            TesterAction::Input(a) if self.next.mark == Mark::Input => a.clone(),
            _ => self.output.clone(),
        }
    }

    /// True when the input proposed by this step was executed.
    pub fn executed_input(&self) -> Option<&Label> {
        match &self.action {
            TesterAction::Input(a) if self.next.mark == Mark::Input => Some(a),
            _ => None,
        }
    }
}

/// A finite play prefix `π₀:ⱼ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlayPrefix {
    start: ArenaState,
    steps: Vec<Step>,
}

impl PlayPrefix {
    pub fn new(start: ArenaState) -> Self {
        PlayPrefix {
            start,
            steps: Vec::new(),
        }
    }

    pub fn start(&self) -> ArenaState {
        self.start
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Number of states, `|π|`.
    pub fn len(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn last(&self) -> ArenaState {
        self.steps.last().map_or(self.start, |s| s.next)
    }

    pub fn state_at(&self, j: usize) -> ArenaState {
        if j == 0 {
            self.start
        } else {
            self.steps[j - 1].next
        }
    }

    pub fn states(&self) -> impl Iterator<Item = ArenaState> + '_ {
        std::iter::once(self.start).chain(self.steps.iter().map(|s| s.next))
    }

    pub fn prefix(&self, states: usize) -> PlayPrefix {
        PlayPrefix {
            start: self.start,
            steps: self.steps[..states - 1].to_vec(),
        }
    }

    /// Appends a step without checking it against an arena.
    pub fn push_unchecked(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn extended(&self, step: Step) -> PlayPrefix {
        let mut p = self.clone();
        p.steps.push(step);
        p
    }

    /// The trace of the prefix: per step the executed input or output,
    /// with `stop`/`reset?` recorded as meta labels.
    pub fn trace(&self) -> Trace {
        Trace::from(self.steps.iter().map(Step::executed_label).collect::<Vec<_>>())
    }

    pub fn contains_stop(&self) -> bool {
        self.steps.iter().any(|s| s.action == TesterAction::Stop)
    }

    /// Checks every step against the arena.
    pub fn validate(&self, g: &GameArena) -> Result<(), PlayError> {
        let mut s = self.start;
        for (i, st) in self.steps.iter().enumerate() {
            if !g.moves(s, &st.action, &st.output).contains(&st.next) {
                return Err(PlayError::Inconsistent { position: i });
            }
            s = st.next;
        }
        Ok(())
    }

    pub fn display(&self, g: &GameArena) -> String {
        let mut out = g.display_state(self.start);
        for st in &self.steps {
            out.push_str(&format!("⟨{},{}⟩{}", st.action, st.output, g.display_state(st.next)));
        }
        out
    }
}

pub fn trace_of(pi: &PlayPrefix) -> Trace {
    pi.trace()
}

/// Picks one of two successors when the moves function offers a choice.
pub trait Resolver {
    fn choose(&mut self, from: ArenaState, options: &[ArenaState]) -> ArenaState;
}

/// Avoids goal states whenever possible; otherwise takes the output side.
#[derive(Debug, Clone)]
pub struct Adversarial<'g> {
    pub goal: &'g ReachabilityGoal,
}

impl Resolver for Adversarial<'_> {
    fn choose(&mut self, _from: ArenaState, options: &[ArenaState]) -> ArenaState {
        options
            .iter()
            .copied()
            .find(|s| !self.goal.contains(*s))
            .or_else(|| options.iter().copied().find(|s| s.mark == Mark::Output))
            .unwrap_or(options[0])
    }
}

/// Uniform draw from a seeded generator.
#[derive(Debug, Clone)]
pub struct Seeded {
    pub rng: ChaCha8Rng,
}

impl Resolver for Seeded {
    fn choose(&mut self, _from: ArenaState, options: &[ArenaState]) -> ArenaState {
        options[self.rng.random_range(0..options.len())]
    }
}

/// Follows a script of marks; falls back to the output side when the
/// script runs out.
#[derive(Debug, Clone, Default)]
pub struct Scripted {
    pub marks: Vec<Mark>,
    pos: usize,
}

impl Scripted {
    pub fn new(marks: Vec<Mark>) -> Self {
        Scripted { marks, pos: 0 }
    }
}

impl Resolver for Scripted {
    fn choose(&mut self, _from: ArenaState, options: &[ArenaState]) -> ArenaState {
        let want = self.marks.get(self.pos).copied().unwrap_or(Mark::Output);
        self.pos += 1;
        options
            .iter()
            .copied()
            .find(|s| s.mark == want)
            .unwrap_or(options[0])
    }
}

/// Extends `pi` by one round.
pub fn step(
    g: &GameArena,
    pi: &PlayPrefix,
    a: &TesterAction,
    x: &Label,
    resolver: &mut dyn Resolver,
) -> Result<PlayPrefix, PlayError> {
    let s = pi.last();
    let succ = g.moves(s, a, x);
    let next = match succ.len() {
        0 => {
            return Err(PlayError::DisabledAction {
                state: g.display_state(s),
                action: a.to_string(),
                output: x.to_string(),
            })
        }
        1 => succ.as_slice()[0],
        _ => resolver.choose(s, succ.as_slice()),
    };
    Ok(pi.extended(Step {
        action: a.clone(),
        output: x.clone(),
        next,
    }))
}

/// A player-1 strategy given as an oracle over play prefixes.
pub trait TesterStrategy {
    fn decide(&self, g: &GameArena, pi: &PlayPrefix) -> TesterAction;
}

/// A player-2 strategy given as an oracle over play prefixes.
pub trait SutStrategy {
    fn decide(&self, g: &GameArena, pi: &PlayPrefix) -> Label;
}

impl<F: Fn(&GameArena, &PlayPrefix) -> TesterAction> TesterStrategy for F {
    fn decide(&self, g: &GameArena, pi: &PlayPrefix) -> TesterAction {
        self(g, pi)
    }
}

impl<F: Fn(&GameArena, &PlayPrefix) -> Label> SutStrategy for F {
    fn decide(&self, g: &GameArena, pi: &PlayPrefix) -> Label {
        self(g, pi)
    }
}

/// All prefixes of `Outc(σ₁, σ₂)` with `depth` steps, every resolution of
/// the moves function included. Sorted and deduplicated.
pub fn outcomes_bounded(
    g: &GameArena,
    s1: &dyn TesterStrategy,
    s2: &dyn SutStrategy,
    depth: usize,
) -> Vec<PlayPrefix> {
    expand(g, depth, &mut |pi| {
        let a = s1.decide(g, pi);
        let x = s2.decide(g, pi);
        vec![(a, x)]
    })
}

/// Like [`outcomes_bounded`] but with player 2 ranging over every enabled
/// output at each round.
pub fn outcomes_any_sut(g: &GameArena, s1: &dyn TesterStrategy, depth: usize) -> Vec<PlayPrefix> {
    expand(g, depth, &mut |pi| {
        let a = s1.decide(g, pi);
        g.gamma2(pi.last()).into_iter().map(|x| (a.clone(), x)).collect()
    })
}

fn expand(
    g: &GameArena,
    depth: usize,
    choices: &mut dyn FnMut(&PlayPrefix) -> Vec<(TesterAction, Label)>,
) -> Vec<PlayPrefix> {
    let mut layer = vec![PlayPrefix::new(g.initial())];
    for _ in 0..depth {
        let mut next = Vec::new();
        for pi in &layer {
            let s = pi.last();
            for (a, x) in choices(pi) {
                for &n in g.moves(s, &a, &x).iter() {
                    next.push(pi.extended(Step {
                        action: a.clone(),
                        output: x.clone(),
                        next: n,
                    }));
                }
            }
        }
        next.sort();
        next.dedup();
        layer = next;
    }
    layer
}

/// An ultimately periodic play `stem · cycle^ω`. The cycle starts and ends
/// at the stem's last state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub stem: PlayPrefix,
    pub cycle: Vec<Step>,
}

impl Lasso {
    pub fn new(stem: PlayPrefix, cycle: Vec<Step>) -> Self {
        assert!(!cycle.is_empty(), "lasso cycle must be non-empty");
        Lasso { stem, cycle }
    }

    pub fn validate(&self, g: &GameArena) -> Result<(), PlayError> {
        self.stem.validate(g)?;
        let mut s = self.stem.last();
        for (i, st) in self.cycle.iter().enumerate() {
            if !g.moves(s, &st.action, &st.output).contains(&st.next) {
                return Err(PlayError::Inconsistent {
                    position: self.stem.steps().len() + i,
                });
            }
            s = st.next;
        }
        if s != self.stem.last() {
            return Err(PlayError::Inconsistent {
                position: self.stem.steps().len() + self.cycle.len(),
            });
        }
        Ok(())
    }

    /// Steps of the cycle paired with the state they leave from.
    fn cycle_rounds(&self) -> impl Iterator<Item = (ArenaState, &Step)> {
        let mut from = self.stem.last();
        self.cycle.iter().map(move |st| {
            let at = from;
            from = st.next;
            (at, st)
        })
    }

    fn stem_rounds(&self) -> impl Iterator<Item = (ArenaState, &Step)> {
        self.stem
            .steps()
            .iter()
            .enumerate()
            .map(|(j, st)| (self.stem.state_at(j), st))
    }
}

type Proposal = (StateId, Label);

fn proposals<'a>(rounds: impl Iterator<Item = (ArenaState, &'a Step)>) -> (BTreeSet<Proposal>, BTreeSet<Proposal>) {
    let mut proposed = BTreeSet::new();
    let mut executed = BTreeSet::new();
    for (at, st) in rounds {
        let (Some(q), TesterAction::Input(a)) = (at.base, &st.action) else {
            continue;
        };
        proposed.insert((q, a.clone()));
        if st.executed_input().is_some() {
            executed.insert((q, a.clone()));
        }
    }
    (proposed, executed)
}

/// Input-fairness of a lasso: inputs proposed in the stem must be executed
/// at their state somewhere; inputs proposed in the cycle recur forever and
/// must be executed inside the cycle.
pub fn is_input_fair(play: &Lasso) -> bool {
    let (stem_prop, stem_exec) = proposals(play.stem_rounds());
    let (cyc_prop, cyc_exec) = proposals(play.cycle_rounds());
    cyc_prop.is_subset(&cyc_exec)
        && stem_prop
            .iter()
            .all(|p| stem_exec.contains(p) || cyc_exec.contains(p))
}

/// A set `R ⊆ Q` of SA states, lifted to `R × {1,2}` in the arena.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(into = "Vec<String>")]
pub struct ReachabilityGoal {
    targets: BTreeSet<StateId>,
    names: Vec<String>,
}

impl ReachabilityGoal {
    pub fn new(sa: &SuspensionAutomaton, targets: BTreeSet<StateId>) -> Self {
        let names = sa.state_names(&targets);
        ReachabilityGoal { targets, names }
    }

    pub fn from_names<S: AsRef<str>>(
        sa: &SuspensionAutomaton,
        names: &[S],
    ) -> Result<Self, PlayError> {
        let mut targets = BTreeSet::new();
        for n in names {
            let q = sa
                .state_id(n.as_ref())
                .ok_or_else(|| PlayError::UnknownState(n.as_ref().to_string()))?;
            targets.insert(q);
        }
        Ok(Self::new(sa, targets))
    }

    pub fn targets(&self) -> &BTreeSet<StateId> {
        &self.targets
    }

    pub fn contains(&self, s: ArenaState) -> bool {
        s.base.is_some_and(|q| self.targets.contains(&q))
    }

    pub fn contains_state(&self, q: StateId) -> bool {
        self.targets.contains(&q)
    }
}

impl From<ReachabilityGoal> for Vec<String> {
    fn from(goal: ReachabilityGoal) -> Self {
        goal.names
    }
}

impl fmt::Display for ReachabilityGoal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names.join(","))
    }
}

pub fn is_winning_prefix(goal: &ReachabilityGoal, pi: &PlayPrefix) -> bool {
    pi.states().any(|s| goal.contains(s))
}

pub fn is_winning_lasso(goal: &ReachabilityGoal, play: &Lasso) -> bool {
    is_winning_prefix(goal, &play.stem) || play.cycle.iter().any(|st| goal.contains(st.next))
}
