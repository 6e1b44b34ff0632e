//! Model-based testing of input/output systems as two-player concurrent
//! games: suspension automata, game arenas under test assumptions, strategy
//! synthesis, test-case generation, test execution and ioco conformance.

pub mod arena;
pub mod cli;
pub mod conformance;
pub mod harness;
pub mod parse;
pub mod play;
pub mod random;
pub mod sa;
pub mod strategy;
pub mod synthesis;
pub mod testcase;
pub mod testgen;

pub use arena::{ArenaError, ArenaState, GameArena, Mark, Regime, TesterAction};
pub use parse::{parse_sa, render_sa};
pub use sa::{Label, LabelKind, SaBuilder, SaError, StateId, SuspensionAutomaton, Trace};
