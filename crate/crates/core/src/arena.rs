//! The game arena underlying a suspension automaton.
//!
//! Arena states are SA states tagged with the player whose action produced
//! them, plus the absorbing sink `(⊥,1)` reached by `stop`. The `moves`
//! function is computed on demand from the automaton and resolves
//! input/output conflicts according to the chosen [`Regime`].

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::sa::{Label, StateId, SuspensionAutomaton, RESERVED_LABELS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArenaError {
    #[error("automaton uses the reserved action name {0}")]
    ReservedLabel(String),
    #[error("unknown regime {0:?} (expected ie, oe, nd or if)")]
    UnknownRegime(String),
}

/// Test assumption deciding how a simultaneous input and output are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regime {
    /// Inputs win conflicts.
    InputEager,
    /// Outputs win conflicts unless only quiescence is offered.
    OutputEager,
    /// Either side may win.
    Nondeterministic,
    /// Same moves as `Nondeterministic`; only input-fair plays count.
    InputFair,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::InputEager,
        Regime::OutputEager,
        Regime::Nondeterministic,
        Regime::InputFair,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Regime::InputEager => "IE",
            Regime::OutputEager => "OE",
            Regime::Nondeterministic => "ND",
            Regime::InputFair => "IF",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl Serialize for Regime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

impl FromStr for Regime {
    type Err = ArenaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ie" => Ok(Regime::InputEager),
            "oe" => Ok(Regime::OutputEager),
            "nd" => Ok(Regime::Nondeterministic),
            "if" => Ok(Regime::InputFair),
            _ => Err(ArenaError::UnknownRegime(s.to_string())),
        }
    }
}

/// Which player's action produced an arena state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mark {
    Input = 1,
    Output = 2,
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

impl Serialize for Mark {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*self as u8)
    }
}

/// `(q, i)` for an SA state `q`, or `(⊥, 1)` when `base` is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArenaState {
    pub base: Option<StateId>,
    pub mark: Mark,
}

impl ArenaState {
    pub const SINK: ArenaState = ArenaState {
        base: None,
        mark: Mark::Input,
    };

    pub fn new(q: StateId, mark: Mark) -> Self {
        ArenaState {
            base: Some(q),
            mark,
        }
    }

    pub fn is_sink(&self) -> bool {
        self.base.is_none()
    }
}

/// A player-1 (tester) action: an input, `θ` (wait for output), `stop`, or
/// `reset?` in resettable arenas. The derived order (inputs, θ, stop,
/// reset?) is the tie-breaking order used by synthesis.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TesterAction {
    Input(Label),
    Theta,
    Stop,
    Reset,
}

impl TesterAction {
    pub fn parse(s: &str) -> Option<TesterAction> {
        match s {
            "theta" | "θ" => Some(TesterAction::Theta),
            "stop" => Some(TesterAction::Stop),
            "reset?" => Some(TesterAction::Reset),
            other => Label::input(other).ok().map(TesterAction::Input),
        }
    }

    pub fn is_input(&self) -> bool {
        matches!(self, TesterAction::Input(_))
    }

    /// The label recorded in a play trace when this action is executed.
    pub fn executed_label(&self) -> Option<Label> {
        match self {
            TesterAction::Input(l) => Some(l.clone()),
            TesterAction::Stop => Some(Label::meta("stop")),
            TesterAction::Reset => Some(Label::meta("reset?")),
            TesterAction::Theta => None,
        }
    }
}

impl fmt::Display for TesterAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TesterAction::Input(l) => write!(f, "{l}"),
            TesterAction::Theta => f.write_str("theta"),
            TesterAction::Stop => f.write_str("stop"),
            TesterAction::Reset => f.write_str("reset?"),
        }
    }
}

impl Serialize for TesterAction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Successor set of a move: empty, one or two states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Successors {
    items: [ArenaState; 2],
    len: u8,
}

impl Successors {
    const NONE: Successors = Successors {
        items: [ArenaState::SINK; 2],
        len: 0,
    };

    fn one(s: ArenaState) -> Self {
        Successors {
            items: [s, s],
            len: 1,
        }
    }

    fn two(a: ArenaState, b: ArenaState) -> Self {
        Successors {
            items: [a, b],
            len: 2,
        }
    }

    pub fn as_slice(&self) -> &[ArenaState] {
        &self.items[..self.len as usize]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ArenaState> {
        self.as_slice().iter()
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, s: &ArenaState) -> bool {
        self.as_slice().contains(s)
    }
}

impl<'a> IntoIterator for &'a Successors {
    type Item = &'a ArenaState;
    type IntoIter = std::slice::Iter<'a, ArenaState>;

    fn into_iter(self) -> Self::IntoIter {
        self.iter()
    }
}

/// The arena `G_A` (or `G_A^reset?`) of an automaton under a regime.
#[derive(Debug, Clone, Copy)]
pub struct GameArena<'a> {
    sa: &'a SuspensionAutomaton,
    regime: Regime,
    resettable: bool,
}

impl<'a> GameArena<'a> {
    pub fn new(
        sa: &'a SuspensionAutomaton,
        regime: Regime,
        resettable: bool,
    ) -> Result<Self, ArenaError> {
        for l in sa.inputs().iter().chain(sa.outputs()) {
            if RESERVED_LABELS.contains(&l.name()) {
                return Err(ArenaError::ReservedLabel(l.name().to_string()));
            }
        }
        Ok(GameArena {
            sa,
            regime,
            resettable,
        })
    }

    pub fn sa(&self) -> &'a SuspensionAutomaton {
        self.sa
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn resettable(&self) -> bool {
        self.resettable
    }

    /// The same automaton under another regime.
    pub fn with_regime(&self, regime: Regime) -> GameArena<'a> {
        GameArena { regime, ..*self }
    }

    pub fn with_reset(&self, resettable: bool) -> GameArena<'a> {
        GameArena {
            resettable,
            ..*self
        }
    }

    pub fn initial(&self) -> ArenaState {
        ArenaState::new(self.sa.initial(), Mark::Input)
    }

    pub fn num_states(&self) -> usize {
        2 * self.sa.num_states() + 1
    }

    /// Dense index in `0..num_states()`; the sink comes last.
    pub fn index(&self, s: ArenaState) -> usize {
        match s.base {
            Some(q) => 2 * q.index() + (s.mark as usize - 1),
            None => 2 * self.sa.num_states(),
        }
    }

    pub fn state_at(&self, i: usize) -> ArenaState {
        if i == 2 * self.sa.num_states() {
            ArenaState::SINK
        } else {
            let mark = if i % 2 == 0 { Mark::Input } else { Mark::Output };
            ArenaState::new(StateId((i / 2) as u32), mark)
        }
    }

    /// All arena states in index order.
    pub fn states(&self) -> impl Iterator<Item = ArenaState> + '_ {
        (0..self.num_states()).map(|i| self.state_at(i))
    }

    /// `Act₁`.
    pub fn tester_actions(&self) -> Vec<TesterAction> {
        let mut v: Vec<TesterAction> = self
            .sa
            .inputs()
            .iter()
            .cloned()
            .map(TesterAction::Input)
            .collect();
        v.push(TesterAction::Theta);
        v.push(TesterAction::Stop);
        if self.resettable {
            v.push(TesterAction::Reset);
        }
        v
    }

    /// `Act₂ = L_O^δ`.
    pub fn sut_actions(&self) -> Vec<Label> {
        self.sa.outputs_with_delta()
    }

    /// `Γ₁(s)` in tie-breaking order.
    pub fn gamma1(&self, s: ArenaState) -> Vec<TesterAction> {
        match s.base {
            None => vec![TesterAction::Stop],
            Some(q) => {
                let mut v: Vec<TesterAction> = self
                    .sa
                    .enabled_inputs(q)
                    .cloned()
                    .map(TesterAction::Input)
                    .collect();
                v.push(TesterAction::Theta);
                v.push(TesterAction::Stop);
                if self.resettable {
                    v.push(TesterAction::Reset);
                }
                v
            }
        }
    }

    /// `Γ₂(s)`; at the sink every output is enabled.
    pub fn gamma2(&self, s: ArenaState) -> Vec<Label> {
        match s.base {
            None => self.sa.outputs_with_delta(),
            Some(q) => self.sa.enabled_outputs(q).cloned().collect(),
        }
    }

    pub fn tester_enabled(&self, s: ArenaState, a: &TesterAction) -> bool {
        match (s.base, a) {
            (None, TesterAction::Stop) => true,
            (None, _) => false,
            (Some(_), TesterAction::Theta | TesterAction::Stop) => true,
            (Some(_), TesterAction::Reset) => self.resettable,
            (Some(q), TesterAction::Input(l)) => l.is_input() && self.sa.successor(q, l).is_some(),
        }
    }

    pub fn sut_enabled(&self, s: ArenaState, x: &Label) -> bool {
        match s.base {
            None => x.is_output_or_delta() && self.sa.has_label(x),
            Some(q) => x.is_output_or_delta() && self.sa.successor(q, x).is_some(),
        }
    }

    /// The `Moves` function. Empty exactly when one of the actions is
    /// disabled at `s`.
    pub fn moves(&self, s: ArenaState, a: &TesterAction, x: &Label) -> Successors {
        if !self.tester_enabled(s, a) || !self.sut_enabled(s, x) {
            return Successors::NONE;
        }
        let q = match (s.base, a) {
            (_, TesterAction::Stop) => return Successors::one(ArenaState::SINK),
            (Some(_), TesterAction::Reset) => return Successors::one(self.initial()),
            (Some(q), _) => q,
            (None, _) => unreachable!("only stop is enabled at the sink"),
        };
        let via_output = || ArenaState::new(self.sa.successor(q, x).expect("x enabled"), Mark::Output);
        let via_input = |l: &Label| {
            ArenaState::new(self.sa.successor(q, l).expect("input enabled"), Mark::Input)
        };
        match (self.regime, a) {
            (_, TesterAction::Theta) => Successors::one(via_output()),
            (Regime::InputEager, TesterAction::Input(l)) => Successors::one(via_input(l)),
            (Regime::OutputEager, TesterAction::Input(l)) => {
                if x.is_delta() {
                    Successors::one(via_input(l))
                } else {
                    Successors::one(via_output())
                }
            }
            (Regime::Nondeterministic | Regime::InputFair, TesterAction::Input(l)) => {
                if x.is_delta() {
                    Successors::one(via_input(l))
                } else {
                    Successors::two(via_input(l), via_output())
                }
            }
            _ => unreachable!("stop and reset handled above"),
        }
    }

    pub fn display_state(&self, s: ArenaState) -> String {
        match s.base {
            Some(q) => format!("({},{})", self.sa.state_name(q), s.mark),
            None => "(⊥,1)".to_string(),
        }
    }
}
