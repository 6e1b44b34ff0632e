//! Suspension automata: deterministic, non-blocking automata over inputs,
//! outputs and quiescence, together with the trace operations `after`,
//! `out` and `straces`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Reserved spelling of quiescence in files and traces.
pub const DELTA: &str = "delta";

/// Label names that the game construction injects and files may not declare.
pub const RESERVED_LABELS: [&str; 3] = ["theta", "stop", "reset?"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SaError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate transition for ({state}, {label})")]
    Determinism {
        line: usize,
        state: String,
        label: String,
    },
    #[error("alphabet error: {0}")]
    Alphabet(String),
    #[error("state {state} enables neither an output nor delta")]
    NonBlocking { state: String },
    #[error("invalid label {0:?}")]
    InvalidLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Input,
    Output,
    Quiescence,
    /// `stop` / `reset?` as they appear in play traces; never part of an alphabet.
    Meta,
}

/// An action label. The kind follows from the spelling: `name?` is an input,
/// `name!` an output and `delta` is quiescence.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    name: Arc<str>,
    kind: LabelKind,
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let body = s.strip_suffix(['?', '!']).unwrap_or(s);
    !body.is_empty()
        && body
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

impl Label {
    pub fn new(name: &str) -> Result<Self, SaError> {
        if !is_identifier(name) {
            return Err(SaError::InvalidLabel(name.to_string()));
        }
        let kind = if name == DELTA {
            LabelKind::Quiescence
        } else if name.ends_with('?') {
            LabelKind::Input
        } else if name.ends_with('!') {
            LabelKind::Output
        } else {
            return Err(SaError::InvalidLabel(name.to_string()));
        };
        Ok(Label {
            name: name.into(),
            kind,
        })
    }

    pub fn input(name: &str) -> Result<Self, SaError> {
        let l = Label::new(name)?;
        if l.kind != LabelKind::Input {
            return Err(SaError::InvalidLabel(name.to_string()));
        }
        Ok(l)
    }

    pub fn output(name: &str) -> Result<Self, SaError> {
        let l = Label::new(name)?;
        if l.kind != LabelKind::Output {
            return Err(SaError::InvalidLabel(name.to_string()));
        }
        Ok(l)
    }

    pub fn delta() -> Self {
        Label {
            name: DELTA.into(),
            kind: LabelKind::Quiescence,
        }
    }

    pub(crate) fn meta(name: &'static str) -> Self {
        Label {
            name: name.into(),
            kind: LabelKind::Meta,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn is_input(&self) -> bool {
        self.kind == LabelKind::Input
    }

    /// True for `L_O^δ`, i.e. outputs and quiescence.
    pub fn is_output_or_delta(&self) -> bool {
        matches!(self.kind, LabelKind::Output | LabelKind::Quiescence)
    }

    pub fn is_delta(&self) -> bool {
        self.kind == LabelKind::Quiescence
    }

    pub fn is_meta(&self) -> bool {
        self.kind == LabelKind::Meta
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name)
    }
}

/// A finite label sequence. Traces order by length first, then
/// lexicographically, which is the order used in every listing.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Trace(Vec<Label>);

impl Trace {
    pub fn empty() -> Self {
        Trace(Vec::new())
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, label: Label) {
        self.0.push(label);
    }

    pub fn extended(&self, label: Label) -> Trace {
        let mut t = self.clone();
        t.0.push(label);
        t
    }

    pub fn prefix(&self, len: usize) -> Trace {
        Trace(self.0[..len].to_vec())
    }

    pub fn last(&self) -> Option<&Label> {
        self.0.last()
    }

    pub fn contains_meta(&self) -> bool {
        self.0.iter().any(Label::is_meta)
    }

    /// Parses a whitespace-separated label list; `ε`, `-` and the empty
    /// string denote the empty trace.
    pub fn parse(text: &str) -> Result<Trace, SaError> {
        let text = text.trim();
        if text.is_empty() || text == "-" || text == "ε" {
            return Ok(Trace::empty());
        }
        text.split_whitespace()
            .map(Label::new)
            .collect::<Result<Vec<_>, _>>()
            .map(Trace)
    }

    /// Rendering used by the strategy exchange format (`-` for ε).
    pub fn to_exchange(&self) -> String {
        if self.0.is_empty() {
            "-".to_string()
        } else {
            self.to_string()
        }
    }
}

impl From<Vec<Label>> for Trace {
    fn from(v: Vec<Label>) -> Self {
        Trace(v)
    }
}

impl Ord for Trace {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Trace {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{self}⟩")
    }
}

impl Serialize for Trace {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub(crate) u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A deterministic suspension automaton. Values are validated on
/// construction and immutable afterwards.
#[derive(Clone)]
pub struct SuspensionAutomaton {
    name: String,
    state_names: Vec<String>,
    inputs: BTreeSet<Label>,
    outputs: BTreeSet<Label>,
    initial: StateId,
    trans: Vec<BTreeMap<Label, StateId>>,
}

impl SuspensionAutomaton {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.state_names.len() as u32).map(StateId)
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.state_names[q.index()]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_names
            .iter()
            .position(|n| n == name)
            .map(|i| StateId(i as u32))
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    /// `L_I`.
    pub fn inputs(&self) -> &BTreeSet<Label> {
        &self.inputs
    }

    /// `L_O`, without quiescence.
    pub fn outputs(&self) -> &BTreeSet<Label> {
        &self.outputs
    }

    /// `L_O^δ` in sorted order.
    pub fn outputs_with_delta(&self) -> Vec<Label> {
        let mut v: Vec<Label> = self.outputs.iter().cloned().collect();
        v.push(Label::delta());
        v.sort();
        v
    }

    pub fn has_label(&self, l: &Label) -> bool {
        l.is_delta() || self.inputs.contains(l) || self.outputs.contains(l)
    }

    pub fn successor(&self, q: StateId, l: &Label) -> Option<StateId> {
        self.trans[q.index()].get(l).copied()
    }

    pub fn transitions(&self, q: StateId) -> &BTreeMap<Label, StateId> {
        &self.trans[q.index()]
    }

    /// `in(q)`.
    pub fn enabled_inputs(&self, q: StateId) -> impl Iterator<Item = &Label> + '_ {
        self.trans[q.index()].keys().filter(|l| l.is_input())
    }

    /// `out(q)`, quiescence included.
    pub fn enabled_outputs(&self, q: StateId) -> impl Iterator<Item = &Label> + '_ {
        self.trans[q.index()]
            .keys()
            .filter(|l| l.is_output_or_delta())
    }

    pub fn after_state(&self, q: StateId, rho: &[Label]) -> Option<StateId> {
        rho.iter().try_fold(q, |s, l| self.successor(s, l))
    }

    /// `from after rho`; at most one state per source state.
    pub fn after(&self, from: &BTreeSet<StateId>, rho: &Trace) -> BTreeSet<StateId> {
        from.iter()
            .filter_map(|&q| self.after_state(q, rho.labels()))
            .collect()
    }

    /// `A after rho` as an optional state.
    pub fn after_initial(&self, rho: &Trace) -> Option<StateId> {
        self.after_state(self.initial, rho.labels())
    }

    /// `out(Q')`.
    pub fn out_set(&self, qs: &BTreeSet<StateId>) -> BTreeSet<Label> {
        qs.iter()
            .flat_map(|&q| self.enabled_outputs(q).cloned())
            .collect()
    }

    pub fn is_strace(&self, rho: &Trace) -> bool {
        self.after_initial(rho).is_some()
    }

    pub fn is_mixed(&self, q: StateId) -> bool {
        self.enabled_inputs(q).next().is_some() && self.enabled_outputs(q).any(|l| !l.is_delta())
    }

    pub fn mixed_states(&self) -> BTreeSet<StateId> {
        self.states().filter(|&q| self.is_mixed(q)).collect()
    }

    pub fn is_input_enabled(&self) -> bool {
        self.states()
            .all(|q| self.inputs.iter().all(|a| self.trans[q.index()].contains_key(a)))
    }

    pub fn reachable_states(&self) -> BTreeSet<StateId> {
        let mut seen = BTreeSet::from([self.initial]);
        let mut stack = vec![self.initial];
        while let Some(q) = stack.pop() {
            for &t in self.trans[q.index()].values() {
                if seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        seen
    }

    pub fn state_names(&self, qs: &BTreeSet<StateId>) -> Vec<String> {
        let mut v: Vec<String> = qs.iter().map(|&q| self.state_name(q).to_string()).collect();
        v.sort();
        v
    }

    /// Starts a builder pre-loaded with this automaton.
    pub fn to_builder(&self) -> SaBuilder {
        let mut b = SaBuilder::new(&self.name);
        b.inputs = self.inputs.clone();
        b.outputs = self.outputs.clone();
        b.initial = Some(self.state_name(self.initial).to_string());
        for q in self.states() {
            b.state(self.state_name(q));
            for (l, t) in &self.trans[q.index()] {
                b.transitions
                    .insert((q.0, l.clone()), (self.state_name(*t).to_string(), 0));
            }
        }
        b
    }

    fn canonical(&self) -> (BTreeSet<&str>, BTreeSet<(&str, &Label, &str)>) {
        let states = self.state_names.iter().map(String::as_str).collect();
        let edges = self
            .states()
            .flat_map(|q| {
                self.trans[q.index()]
                    .iter()
                    .map(move |(l, t)| (self.state_name(q), l, self.state_name(*t)))
            })
            .collect();
        (states, edges)
    }
}

/// Equality is by state names, not by internal numbering.
impl PartialEq for SuspensionAutomaton {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.state_name(self.initial) == other.state_name(other.initial)
            && self.canonical() == other.canonical()
    }
}

impl Eq for SuspensionAutomaton {}

impl fmt::Debug for SuspensionAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parse::render_sa(self))
    }
}

/// Incremental construction of an automaton. States are created on first
/// mention, in mention order.
#[derive(Debug, Clone)]
pub struct SaBuilder {
    name: String,
    state_names: Vec<String>,
    state_index: HashMap<String, u32>,
    inputs: BTreeSet<Label>,
    outputs: BTreeSet<Label>,
    initial: Option<String>,
    // (source, label) -> (target, source line)
    transitions: BTreeMap<(u32, Label), (String, usize)>,
}

impl SaBuilder {
    pub fn new(name: &str) -> Self {
        SaBuilder {
            name: name.to_string(),
            state_names: Vec::new(),
            state_index: HashMap::new(),
            inputs: BTreeSet::new(),
            outputs: BTreeSet::new(),
            initial: None,
            transitions: BTreeMap::new(),
        }
    }

    fn state(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.state_index.get(name) {
            return i;
        }
        let i = self.state_names.len() as u32;
        self.state_names.push(name.to_string());
        self.state_index.insert(name.to_string(), i);
        i
    }

    fn check_declared(&self, l: &Label) -> Result<(), SaError> {
        if l.name() == DELTA {
            return Err(SaError::Alphabet("delta is implicit and may not be declared".into()));
        }
        if RESERVED_LABELS.contains(&l.name()) {
            return Err(SaError::Alphabet(format!("{} is a reserved action name", l)));
        }
        if self.inputs.contains(l) || self.outputs.contains(l) {
            return Err(SaError::Alphabet(format!("label {} declared twice", l)));
        }
        Ok(())
    }

    pub fn input(&mut self, name: &str) -> Result<&mut Self, SaError> {
        let l = Label::new(name)?;
        self.check_declared(&l)?;
        if !l.is_input() {
            return Err(SaError::Alphabet(format!("input {name} must end in '?'")));
        }
        self.inputs.insert(l);
        Ok(self)
    }

    pub fn output(&mut self, name: &str) -> Result<&mut Self, SaError> {
        let l = Label::new(name)?;
        self.check_declared(&l)?;
        if l.kind() != LabelKind::Output {
            return Err(SaError::Alphabet(format!("output {name} must end in '!'")));
        }
        self.outputs.insert(l);
        Ok(self)
    }

    pub fn initial(&mut self, state: &str) -> &mut Self {
        self.state(state);
        self.initial = Some(state.to_string());
        self
    }

    pub fn transition(&mut self, from: &str, label: &str, to: &str) -> Result<&mut Self, SaError> {
        self.transition_at(0, from, label, to)
    }

    pub(crate) fn transition_at(
        &mut self,
        line: usize,
        from: &str,
        label: &str,
        to: &str,
    ) -> Result<&mut Self, SaError> {
        let l = Label::new(label).map_err(|_| SaError::Alphabet(format!("undeclared label {label}")))?;
        if !(l.is_delta() || self.inputs.contains(&l) || self.outputs.contains(&l)) {
            return Err(SaError::Alphabet(format!("undeclared label {label}")));
        }
        let s = self.state(from);
        self.state(to);
        if self.transitions.contains_key(&(s, l.clone())) {
            return Err(SaError::Determinism {
                line,
                state: from.to_string(),
                label: label.to_string(),
            });
        }
        self.transitions.insert((s, l), (to.to_string(), line));
        Ok(self)
    }

    /// Replaces or adds a transition (used for mutation).
    pub fn set_transition(&mut self, from: &str, label: &Label, to: &str) -> &mut Self {
        let s = self.state(from);
        self.state(to);
        self.transitions.insert((s, label.clone()), (to.to_string(), 0));
        self
    }

    pub fn remove_transition(&mut self, from: &str, label: &Label) -> &mut Self {
        if let Some(&s) = self.state_index.get(from) {
            self.transitions.remove(&(s, label.clone()));
        }
        self
    }

    pub fn rename(&mut self, name: &str) -> &mut Self {
        self.name = name.to_string();
        self
    }

    #[cfg(test)]
    pub(crate) fn force_input_for_tests(&mut self, name: &str) {
        self.inputs.insert(Label::new(name).unwrap());
    }

    /// Builds and checks the non-blocking requirement.
    pub fn build(&self) -> Result<SuspensionAutomaton, SaError> {
        let sa = self.build_unchecked()?;
        for q in sa.states() {
            if sa.enabled_outputs(q).next().is_none() {
                return Err(SaError::NonBlocking {
                    state: sa.state_name(q).to_string(),
                });
            }
        }
        Ok(sa)
    }

    /// Builds without the non-blocking check; test cases under the
    /// input-eager exception may have input states without outputs.
    pub fn build_unchecked(&self) -> Result<SuspensionAutomaton, SaError> {
        let initial = self
            .initial
            .as_ref()
            .ok_or_else(|| SaError::Parse {
                line: 0,
                message: "missing 'initial' directive".into(),
            })?;
        let mut trans = vec![BTreeMap::new(); self.state_names.len()];
        for ((s, l), (t, _)) in &self.transitions {
            trans[*s as usize].insert(l.clone(), StateId(self.state_index[t]));
        }
        Ok(SuspensionAutomaton {
            name: self.name.clone(),
            state_names: self.state_names.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            initial: StateId(self.state_index[initial]),
            trans,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lbl(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    fn tr(s: &str) -> Trace {
        Trace::parse(s).unwrap()
    }

    fn printer() -> SuspensionAutomaton {
        crate::parse::parse_sa(include_str!("../fixtures/printer.sa")).unwrap()
    }

    fn mp3() -> SuspensionAutomaton {
        crate::parse::parse_sa(include_str!("../fixtures/mp3.sa")).unwrap()
    }

    fn names(sa: &SuspensionAutomaton, qs: &BTreeSet<StateId>) -> Vec<String> {
        sa.state_names(qs)
    }

    #[test]
    fn label_kinds_follow_spelling() {
        assert_eq!(lbl("a?").kind(), LabelKind::Input);
        assert_eq!(lbl("x!").kind(), LabelKind::Output);
        assert_eq!(lbl("delta").kind(), LabelKind::Quiescence);
        assert!(Label::new("plain").is_err());
        assert!(Label::new("a b?").is_err());
        assert!(Label::new("?").is_err());
    }

    #[test]
    fn trace_order_is_length_first() {
        let mut v = vec![tr("b? a?"), tr("z!"), tr("-"), tr("a?")];
        v.sort();
        assert_eq!(v, vec![tr(""), tr("a?"), tr("z!"), tr("b? a?")]);
    }

    #[test]
    fn after_follows_transitions() {
        let p = printer();
        let q0 = BTreeSet::from([p.initial()]);
        assert_eq!(names(&p, &p.after(&q0, &tr("print? scan?"))), vec!["q4"]);
        assert_eq!(names(&p, &p.after(&q0, &tr("-"))), vec!["q0"]);
        assert!(p.after(&q0, &tr("printed!")).is_empty());
        assert!(p.after(&BTreeSet::new(), &tr("print?")).is_empty());
    }

    #[test]
    fn out_set_examples() {
        let p = printer();
        let q4 = BTreeSet::from([p.state_id("q4").unwrap()]);
        let q0 = BTreeSet::from([p.state_id("q0").unwrap()]);
        assert_eq!(p.out_set(&q4), BTreeSet::from([lbl("printed!"), lbl("scanned!")]));
        assert_eq!(p.out_set(&q0), BTreeSet::from([Label::delta()]));
        assert!(p.out_set(&BTreeSet::new()).is_empty());
    }

    #[test]
    fn straces_examples() {
        let p = printer();
        assert!(p.is_strace(&tr("scan? print? printed!")));
        assert!(p.is_strace(&tr("")));
        assert!(!p.is_strace(&tr("scanned!")));
    }

    #[test]
    fn mixed_states_of_the_fixtures() {
        let p = printer();
        assert_eq!(names(&p, &p.mixed_states()), vec!["q1", "q3"]);
        let m = mp3();
        assert_eq!(names(&m, &m.mixed_states()), vec!["q1", "q3"]);

        let mut b = SaBuilder::new("quiet");
        b.input("a?").unwrap().initial("s");
        b.transition("s", "a?", "s").unwrap();
        b.transition("s", "delta", "s").unwrap();
        assert!(b.build().unwrap().mixed_states().is_empty());
    }

    #[test]
    fn input_enabledness() {
        assert!(!printer().is_input_enabled());
        let mut b = SaBuilder::new("no_inputs");
        b.output("x!").unwrap().initial("s");
        b.transition("s", "x!", "s").unwrap();
        assert!(b.build().unwrap().is_input_enabled());
    }

    #[test]
    fn builder_rejects_duplicates_and_blocking() {
        let mut b = SaBuilder::new("d");
        b.input("play?").unwrap().initial("q0");
        b.transition("q0", "play?", "q1").unwrap();
        assert!(matches!(
            b.transition("q0", "play?", "q2"),
            Err(SaError::Determinism { .. })
        ));
        // q1 has no outgoing transitions at all
        b.transition("q0", "delta", "q0").unwrap();
        assert!(matches!(b.build(), Err(SaError::NonBlocking { state }) if state == "q1"));
    }

    #[test]
    fn builder_alphabet_errors() {
        let mut b = SaBuilder::new("a");
        assert!(b.input("x!").is_err());
        assert!(b.output("delta").is_err());
        assert!(b.input("reset?").is_err());
        b.input("a?").unwrap();
        assert!(b.input("a?").is_err());
        b.initial("s");
        assert!(matches!(b.transition("s", "b?", "s"), Err(SaError::Alphabet(_))));
    }
}
