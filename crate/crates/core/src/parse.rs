//! Line-oriented specification files.
//!
//! ```text
//! automaton NAME
//! inputs  a? b?
//! outputs x! y!
//! initial q0
//! q0 a? q1        # one transition per line; the label may be `delta`
//! ```
//!
//! Test-case files additionally carry `pass STATE` and `fail STATE`.

use std::fmt::Write as _;

use crate::sa::{is_identifier, SaBuilder, SaError, SuspensionAutomaton};

const KEYWORDS: [&str; 6] = ["automaton", "inputs", "outputs", "initial", "pass", "fail"];

pub(crate) struct Document {
    pub builder: SaBuilder,
    pub pass: Option<String>,
    pub fail: Option<String>,
}

fn err(line: usize, message: impl Into<String>) -> SaError {
    SaError::Parse {
        line,
        message: message.into(),
    }
}

fn state_token(line: usize, tok: &str) -> Result<(), SaError> {
    if !is_identifier(tok) || KEYWORDS.contains(&tok) {
        return Err(err(line, format!("invalid state identifier {tok:?}")));
    }
    Ok(())
}

fn once(line: usize, seen: bool, kw: &str) -> Result<(), SaError> {
    if seen {
        return Err(err(line, format!("duplicate '{kw}' directive")));
    }
    Ok(())
}

pub(crate) fn parse_document(text: &str, allow_verdicts: bool) -> Result<Document, SaError> {
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, raw)| {
            let content = raw.split('#').next().unwrap_or("");
            (i + 1, content.split_whitespace().collect::<Vec<_>>())
        })
        .filter(|(_, toks)| !toks.is_empty())
        .collect();

    let mut name = None;
    let mut inputs = None;
    let mut outputs = None;
    let mut initial = None;
    let mut pass = None;
    let mut fail = None;
    let mut transitions = Vec::new();

    for (line, toks) in &lines {
        let line = *line;
        match toks[0] {
            "automaton" => {
                once(line, name.is_some(), "automaton")?;
                if toks.len() != 2 {
                    return Err(err(line, "expected 'automaton NAME'"));
                }
                name = Some(toks[1].to_string());
            }
            "inputs" => {
                once(line, inputs.is_some(), "inputs")?;
                inputs = Some((line, toks[1..].to_vec()));
            }
            "outputs" => {
                once(line, outputs.is_some(), "outputs")?;
                outputs = Some((line, toks[1..].to_vec()));
            }
            "initial" => {
                once(line, initial.is_some(), "initial")?;
                if toks.len() != 2 {
                    return Err(err(line, "expected 'initial STATE'"));
                }
                state_token(line, toks[1])?;
                initial = Some(toks[1].to_string());
            }
            kw @ ("pass" | "fail") => {
                if !allow_verdicts {
                    return Err(err(line, format!("unknown directive '{kw}'")));
                }
                let slot = if kw == "pass" { &mut pass } else { &mut fail };
                once(line, slot.is_some(), kw)?;
                if toks.len() != 2 {
                    return Err(err(line, format!("expected '{kw} STATE'")));
                }
                state_token(line, toks[1])?;
                *slot = Some(toks[1].to_string());
            }
            _ if toks.len() == 3 => transitions.push((line, toks.clone())),
            other => return Err(err(line, format!("unknown directive '{other}'"))),
        }
    }

    let name = name.ok_or_else(|| err(0, "missing 'automaton' directive"))?;
    if !is_identifier(&name) {
        return Err(err(0, format!("invalid automaton name {name:?}")));
    }
    let initial = initial.ok_or_else(|| err(0, "missing 'initial' directive"))?;

    let mut b = SaBuilder::new(&name);
    b.initial(&initial);
    if let Some((line, ids)) = inputs {
        for id in ids {
            b.input(id).map_err(|e| relabel(line, e))?;
        }
    }
    if let Some((line, ids)) = outputs {
        for id in ids {
            b.output(id).map_err(|e| relabel(line, e))?;
        }
    }
    for (line, toks) in transitions {
        state_token(line, toks[0])?;
        state_token(line, toks[2])?;
        b.transition_at(line, toks[0], toks[1], toks[2])
            .map_err(|e| relabel(line, e))?;
    }
    Ok(Document {
        builder: b,
        pass,
        fail,
    })
}

fn relabel(line: usize, e: SaError) -> SaError {
    match e {
        SaError::Alphabet(m) => SaError::Alphabet(format!("line {line}: {m}")),
        SaError::InvalidLabel(l) => SaError::Alphabet(format!("line {line}: invalid label {l:?}")),
        other => other,
    }
}

/// Parses and validates a specification file.
pub fn parse_sa(text: &str) -> Result<SuspensionAutomaton, SaError> {
    parse_document(text, false)?.builder.build()
}

pub(crate) fn render_header(sa: &SuspensionAutomaton, out: &mut String) {
    let join = |set: &std::collections::BTreeSet<crate::sa::Label>| {
        set.iter().map(|l| l.name()).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(out, "automaton {}", sa.name());
    let _ = writeln!(out, "{}", format!("inputs {}", join(sa.inputs())).trim_end());
    let _ = writeln!(out, "{}", format!("outputs {}", join(sa.outputs())).trim_end());
    let _ = writeln!(out, "initial {}", sa.state_name(sa.initial()));
}

pub(crate) fn render_transitions(sa: &SuspensionAutomaton, out: &mut String) {
    for q in sa.states() {
        for (l, t) in sa.transitions(q) {
            let _ = writeln!(out, "{} {} {}", sa.state_name(q), l, sa.state_name(*t));
        }
    }
}

/// Renders an automaton in the file grammar; `parse_sa` inverts it.
pub fn render_sa(sa: &SuspensionAutomaton) -> String {
    let mut out = String::new();
    render_header(sa, &mut out);
    render_transitions(sa, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sa::{Label, SaError};

    const PRINTER: &str = include_str!("../fixtures/printer.sa");

    #[test]
    fn printer_fixture_loads() {
        let p = parse_sa(PRINTER).unwrap();
        assert_eq!(p.num_states(), 8);
        let delta_loops: Vec<&str> = p
            .states()
            .filter(|&q| p.successor(q, &Label::delta()) == Some(q))
            .map(|q| p.state_name(q))
            .collect();
        assert_eq!(delta_loops, vec!["q0", "q2", "q6"]);
    }

    #[test]
    fn blocking_state_is_rejected() {
        let text = "automaton b\ninputs a?\noutputs\ninitial s\ns a? t\nt a? s\ns delta s\n";
        assert_eq!(
            parse_sa(text),
            Err(SaError::NonBlocking { state: "t".into() })
        );
    }

    #[test]
    fn duplicate_transition_is_rejected() {
        let text = "automaton d\ninputs play?\noutputs\ninitial q0\nq0 play? q1\nq0 play? q2\nq0 delta q0\nq1 delta q1\nq2 delta q2\n";
        assert!(matches!(
            parse_sa(text),
            Err(SaError::Determinism { line: 6, .. })
        ));
    }

    #[test]
    fn alphabet_errors() {
        let undeclared = "automaton u\ninputs a?\noutputs\ninitial s\ns b? s\ns delta s\n";
        assert!(matches!(parse_sa(undeclared), Err(SaError::Alphabet(_))));
        let explicit_delta = "automaton u\ninputs a?\noutputs delta\ninitial s\ns delta s\n";
        assert!(matches!(parse_sa(explicit_delta), Err(SaError::Alphabet(_))));
        let wrong_suffix = "automaton u\ninputs x!\noutputs\ninitial s\ns delta s\n";
        assert!(matches!(parse_sa(wrong_suffix), Err(SaError::Alphabet(_))));
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(
            parse_sa("automaton a\nfrobnicate x\ninitial s\n"),
            Err(SaError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_sa("automaton a\ninputs\noutputs\ns delta s\n"),
            Err(SaError::Parse { .. })
        ));
        assert!(matches!(
            parse_sa("automaton a\ninitial s\npass s\ns delta s\n"),
            Err(SaError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# header\n\nautomaton c # trailing\ninputs\noutputs\ninitial s\n  s delta s  # loop\n";
        let sa = parse_sa(text).unwrap();
        assert_eq!(sa.num_states(), 1);
    }

    #[test]
    fn render_round_trips_the_fixture() {
        let p = parse_sa(PRINTER).unwrap();
        assert_eq!(parse_sa(&render_sa(&p)).unwrap(), p);
    }
}
