//! Seeded generation of small automata and single-edit mutants, for
//! population sweeps.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::sa::{Label, SaBuilder, SuspensionAutomaton};

const INPUT_NAMES: [&str; 4] = ["a?", "b?", "c?", "d?"];
const OUTPUT_NAMES: [&str; 4] = ["x!", "y!", "z!", "w!"];

/// Size bounds for [`random_sa`]; each count is drawn from `1..=max`
/// (`0..=max` for inputs).
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_states: usize,
    pub max_inputs: usize,
    pub max_outputs: usize,
}

/// A random deterministic, non-blocking automaton. Quiescence is always a
/// self-loop; every state enables at least one output or quiescence.
pub fn random_sa<R: Rng>(rng: &mut R, shape: Shape, name: &str) -> SuspensionAutomaton {
    let n = rng.random_range(1..=shape.max_states.max(1));
    let ni = rng.random_range(0..=shape.max_inputs.min(INPUT_NAMES.len()));
    let no = rng.random_range(1..=shape.max_outputs.clamp(1, OUTPUT_NAMES.len()));
    let states: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let mut b = SaBuilder::new(name);
    for i in &INPUT_NAMES[..ni] {
        b.input(i).expect("fresh input");
    }
    for o in &OUTPUT_NAMES[..no] {
        b.output(o).expect("fresh output");
    }
    b.initial(&states[0]);
    for q in &states {
        for i in &INPUT_NAMES[..ni] {
            if rng.random_bool(0.6) {
                let t = states.choose(rng).expect("non-empty");
                b.transition(q, i, t).expect("declared");
            }
        }
        let mut any_output = false;
        for o in &OUTPUT_NAMES[..no] {
            if rng.random_bool(0.4) {
                let t = states.choose(rng).expect("non-empty");
                b.transition(q, o, t).expect("declared");
                any_output = true;
            }
        }
        if !any_output || rng.random_bool(0.2) {
            b.transition(q, "delta", q).expect("delta");
        }
    }
    b.build().expect("generator keeps automata non-blocking")
}

/// One random edit that keeps the automaton valid: an extra output edge,
/// a redirected edge, or a removed output where another one remains.
pub fn mutate<R: Rng>(rng: &mut R, sa: &SuspensionAutomaton, name: &str) -> SuspensionAutomaton {
    let states: Vec<_> = sa.states().collect();
    let mut b = sa.to_builder();
    b.rename(name);
    let q = *states.choose(rng).expect("non-empty");
    let qn = sa.state_name(q).to_string();
    let target = sa.state_name(*states.choose(rng).expect("non-empty")).to_string();
    match rng.random_range(0..3) {
        0 => {
            let outs: Vec<&Label> = sa.outputs().iter().collect();
            if let Some(o) = outs.choose(rng) {
                b.set_transition(&qn, o, &target);
            }
        }
        1 => {
            let edges: Vec<&Label> = sa.transitions(q).keys().filter(|l| !l.is_delta()).collect();
            if let Some(l) = edges.choose(rng) {
                b.set_transition(&qn, l, &target);
            }
        }
        _ => {
            let outs: Vec<&Label> = sa.enabled_outputs(q).collect();
            if outs.len() > 1 {
                let l = outs.choose(rng).expect("non-empty");
                b.remove_transition(&qn, l);
            }
        }
    }
    b.build().expect("mutations keep automata non-blocking")
}
