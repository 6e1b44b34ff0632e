//! Test cases: acyclic automata with `Pass` and `Fail` sinks, their file
//! format, unfolding into trace trees, and well-formedness checking
//! against a specification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::arena::Regime;
use crate::parse::{parse_document, render_header, render_transitions};
use crate::sa::{Label, SaError, StateId, SuspensionAutomaton, Trace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TestCaseError {
    #[error(transparent)]
    Sa(#[from] SaError),
    #[error("missing '{0}' directive")]
    MissingVerdict(&'static str),
    #[error("verdict state {0} has no transitions")]
    UnknownVerdictState(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// A node of the unfolded test tree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TestNode {
    Input(Label),
    Observe,
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    automaton: SuspensionAutomaton,
    pass: StateId,
    fail: StateId,
}

impl TestCase {
    pub fn new(automaton: SuspensionAutomaton, pass: &str, fail: &str) -> Result<Self, TestCaseError> {
        let pass_id = automaton
            .state_id(pass)
            .ok_or_else(|| TestCaseError::UnknownVerdictState(pass.to_string()))?;
        let fail_id = automaton
            .state_id(fail)
            .ok_or_else(|| TestCaseError::UnknownVerdictState(fail.to_string()))?;
        Ok(TestCase {
            automaton,
            pass: pass_id,
            fail: fail_id,
        })
    }

    pub fn name(&self) -> &str {
        self.automaton.name()
    }

    pub fn automaton(&self) -> &SuspensionAutomaton {
        &self.automaton
    }

    pub fn pass(&self) -> StateId {
        self.pass
    }

    pub fn fail(&self) -> StateId {
        self.fail
    }

    pub fn initial(&self) -> StateId {
        self.automaton.initial()
    }

    pub fn verdict_of(&self, q: StateId) -> Option<Verdict> {
        if q == self.pass {
            Some(Verdict::Pass)
        } else if q == self.fail {
            Some(Verdict::Fail)
        } else {
            None
        }
    }

    /// The unique input enabled at `q`, if any.
    pub fn input_at(&self, q: StateId) -> Option<&Label> {
        self.automaton.enabled_inputs(q).next()
    }

    pub fn after(&self, trace: &Trace) -> Option<StateId> {
        self.automaton.after_initial(trace)
    }

    pub fn with_name(&self, name: &str) -> TestCase {
        let mut b = self.automaton.to_builder();
        b.rename(name);
        TestCase {
            automaton: b.build_unchecked().expect("renaming keeps validity"),
            ..self.clone()
        }
    }

    /// Trace tree of the test: every trace up to and including the first
    /// arrival at a verdict. Cyclic tests are cut after `num_states` steps.
    pub fn unfold(&self) -> BTreeMap<Trace, TestNode> {
        let mut out = BTreeMap::new();
        let mut stack = vec![(Trace::empty(), self.initial())];
        let limit = self.automaton.num_states();
        while let Some((trace, q)) = stack.pop() {
            let node = match self.verdict_of(q) {
                Some(Verdict::Pass) => TestNode::Pass,
                Some(Verdict::Fail) => TestNode::Fail,
                None => match self.input_at(q) {
                    Some(a) => TestNode::Input(a.clone()),
                    None => TestNode::Observe,
                },
            };
            let expand = matches!(node, TestNode::Input(_) | TestNode::Observe) && trace.len() < limit;
            out.insert(trace.clone(), node);
            if expand {
                for (l, t) in self.automaton.transitions(q) {
                    stack.push((trace.extended(l.clone()), *t));
                }
            }
        }
        out
    }

    /// Same unfolded tree, i.e. equal up to renaming of states.
    pub fn equivalent(&self, other: &TestCase) -> bool {
        self.unfold() == other.unfold()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        render_header(&self.automaton, &mut out);
        out.push_str(&format!(
            "pass {}\nfail {}\n",
            self.automaton.state_name(self.pass),
            self.automaton.state_name(self.fail)
        ));
        render_transitions(&self.automaton, &mut out);
        out
    }
}

/// Reads a test-case file: the automaton grammar plus `pass`/`fail`.
pub fn load_testcase(text: &str) -> Result<TestCase, TestCaseError> {
    let doc = parse_document(text, true)?;
    let pass = doc.pass.ok_or(TestCaseError::MissingVerdict("pass"))?;
    let fail = doc.fail.ok_or(TestCaseError::MissingVerdict("fail"))?;
    let sa = doc.builder.build_unchecked()?;
    TestCase::new(sa, &pass, &fail)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    AlphabetMismatch,
    VerdictSink,
    Cycle,
    StateShape,
    PassNotStrace,
    FailIsStrace,
    InputNotInSpec,
    BeyondFail,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{kind:?} at {witness}: {detail}")]
pub struct TestCaseViolation {
    pub kind: ViolationKind,
    pub witness: Trace,
    pub detail: String,
}

fn violation(kind: ViolationKind, witness: Trace, detail: impl Into<String>) -> TestCaseViolation {
    TestCaseViolation {
        kind,
        witness,
        detail: detail.into(),
    }
}

/// Shortest access trace of every reachable state.
fn access_traces(sa: &SuspensionAutomaton) -> Vec<Option<Trace>> {
    let mut acc: Vec<Option<Trace>> = vec![None; sa.num_states()];
    acc[sa.initial().index()] = Some(Trace::empty());
    let mut layer = vec![sa.initial()];
    while !layer.is_empty() {
        let mut next = Vec::new();
        for q in layer {
            let base = acc[q.index()].clone().expect("visited");
            for (l, t) in sa.transitions(q) {
                if acc[t.index()].is_none() {
                    acc[t.index()] = Some(base.extended(l.clone()));
                    next.push(*t);
                }
            }
        }
        layer = next;
    }
    acc
}

/// Checks the test-case conditions against `spec`. Pass and Fail trace
/// conditions are applied at the first arrival in a verdict state; inputs
/// must be enabled in the specification and non-verdict states must only
/// be reached by suspension traces of the specification.
pub fn validate_testcase(
    t: &TestCase,
    spec: &SuspensionAutomaton,
    regime: Regime,
) -> Result<(), TestCaseViolation> {
    use ViolationKind::*;
    let ta = t.automaton();
    let acc = access_traces(ta);
    let witness = |q: StateId| acc[q.index()].clone().unwrap_or_default();

    if ta.inputs() != spec.inputs() || ta.outputs() != spec.outputs() {
        return Err(violation(AlphabetMismatch, Trace::empty(), "test and specification alphabets differ"));
    }

    if t.pass == t.fail {
        return Err(violation(VerdictSink, witness(t.pass), "Pass and Fail coincide"));
    }
    let l_o_delta: BTreeSet<Label> = spec.outputs_with_delta().into_iter().collect();
    for v in [t.pass, t.fail] {
        let trans = ta.transitions(v);
        let labels: BTreeSet<Label> = trans.keys().cloned().collect();
        if labels != l_o_delta || trans.values().any(|&n| n != v) {
            return Err(violation(
                VerdictSink,
                witness(v),
                format!("{} must loop on exactly the outputs and delta", ta.state_name(v)),
            ));
        }
    }

    // cycles among non-verdict states
    let n = ta.num_states();
    let mut color = vec![0u8; n];
    for root in ta.states() {
        if color[root.index()] != 0 || t.verdict_of(root).is_some() {
            continue;
        }
        let mut stack = vec![(root, false)];
        while let Some((q, done)) = stack.pop() {
            if done {
                color[q.index()] = 2;
                continue;
            }
            if color[q.index()] != 0 {
                continue;
            }
            color[q.index()] = 1;
            stack.push((q, true));
            for &s in ta.transitions(q).values() {
                if t.verdict_of(s).is_some() {
                    continue;
                }
                match color[s.index()] {
                    0 => stack.push((s, false)),
                    1 => {
                        return Err(violation(
                            Cycle,
                            witness(s),
                            format!("cycle through {}", ta.state_name(s)),
                        ))
                    }
                    _ => {}
                }
            }
        }
    }

    let l_o: BTreeSet<Label> = spec.outputs().clone();
    for q in ta.states().filter(|&q| t.verdict_of(q).is_none()) {
        let ins: Vec<&Label> = ta.enabled_inputs(q).collect();
        let outs: BTreeSet<Label> = ta.enabled_outputs(q).cloned().collect();
        let observe = ins.is_empty() && outs == l_o_delta;
        let stimulate = ins.len() == 1 && (regime == Regime::InputEager || outs == l_o);
        if !(observe || stimulate) {
            return Err(violation(
                StateShape,
                witness(q),
                format!(
                    "{} must enable one input and all outputs, or delta and all outputs",
                    ta.state_name(q)
                ),
            ));
        }
    }

    // trace conditions, shortest witness first
    let mut layer = vec![(Trace::empty(), t.initial())];
    if t.initial() == t.fail {
        return Err(violation(FailIsStrace, Trace::empty(), "the empty trace leads to Fail"));
    }
    while !layer.is_empty() {
        layer.sort();
        let mut next = Vec::new();
        for (rho, q) in layer {
            if t.verdict_of(q).is_some() {
                continue;
            }
            let sq = spec.after_initial(&rho);
            for (l, target) in ta.transitions(q) {
                let ext = rho.extended(l.clone());
                if l.is_input() && sq.and_then(|s| spec.successor(s, l)).is_none() {
                    return Err(violation(InputNotInSpec, rho.clone(), format!("{l} is not enabled in the specification")));
                }
                let in_spec = spec.is_strace(&ext);
                match t.verdict_of(*target) {
                    Some(Verdict::Pass) if !in_spec => {
                        return Err(violation(PassNotStrace, ext, "trace to Pass is not a suspension trace"))
                    }
                    Some(Verdict::Fail) if in_spec => {
                        return Err(violation(FailIsStrace, ext, "trace to Fail is a suspension trace"))
                    }
                    None if !in_spec => {
                        return Err(violation(BeyondFail, ext, "testing continues after a non-conforming trace"))
                    }
                    _ => {}
                }
                next.push((ext, *target));
            }
        }
        layer = next;
    }
    Ok(())
}
