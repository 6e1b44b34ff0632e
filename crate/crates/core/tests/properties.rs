mod common;

use std::collections::{BTreeSet, HashMap};

use common::*;
use ioco_games::arena::ArenaState;
use ioco_games::conformance::{angelic_complete, cheats_on, ioco_check, ioco_check_bounded, CheatReading};
use ioco_games::harness::{run_test, OutputPolicy, SutAdapter};
use ioco_games::play::{outcomes_any_sut, is_winning_prefix, trace_of, ReachabilityGoal};
use ioco_games::random::{mutate, random_sa, Shape};
use ioco_games::synthesis::solve_reach;
use ioco_games::testcase::{validate_testcase, Verdict};
use ioco_games::testgen::{gen_suite, strategy_to_test, test_to_strategy, trace_set};
use ioco_games::{parse_sa, render_sa, GameArena, Label, Mark, Regime, SuspensionAutomaton, TesterAction, Trace};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sa_from(seed: u64) -> SuspensionAutomaton {
    random_sa(&mut ChaCha8Rng::seed_from_u64(seed), SMALL, "r")
}

/// A random walk over all labels of the alphabet, including ones the
/// automaton does not enable.
fn random_trace(sa: &SuspensionAutomaton, rng: &mut ChaCha8Rng, len: usize) -> Trace {
    let mut alphabet: Vec<Label> = sa.inputs().iter().cloned().collect();
    alphabet.extend(sa.outputs_with_delta());
    (0..len)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())].clone())
        .collect::<Vec<_>>()
        .into()
}

fn arena_triples(g: &GameArena) -> Vec<(ArenaState, TesterAction, Label)> {
    let mut out = Vec::new();
    for s in g.states() {
        for a in g.tester_actions() {
            for x in g.sut_actions() {
                out.push((s, a.clone(), x));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn render_parse_round_trip(seed in any::<u64>()) {
        let sa = sa_from(seed);
        prop_assert_eq!(parse_sa(&render_sa(&sa)).unwrap(), sa);
    }

    #[test]
    fn straces_are_prefix_closed(seed in any::<u64>(), len in 0usize..6) {
        let sa = sa_from(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..20 {
            let rho = random_trace(&sa, &mut rng, len);
            let q0: BTreeSet<_> = [sa.initial()].into();
            prop_assert!(sa.after(&q0, &rho).len() <= 1);
            if sa.is_strace(&rho) {
                for k in 0..rho.len() {
                    prop_assert!(sa.is_strace(&rho.prefix(k)));
                }
            }
        }
        for q in sa.reachable_states() {
            prop_assert!(!sa.out_set(&[q].into()).is_empty());
        }
    }

    #[test]
    fn arena_laws(seed in any::<u64>(), resettable in any::<bool>()) {
        let sa = sa_from(seed);
        let base = GameArena::new(&sa, Regime::Nondeterministic, resettable).unwrap();
        prop_assert_eq!(base.num_states(), 2 * sa.num_states() + 1);
        for r in Regime::ALL {
            let g = base.with_regime(r);
            for s in g.states() {
                prop_assert!(!g.gamma1(s).is_empty() && !g.gamma2(s).is_empty());
            }
            for (s, a, x) in arena_triples(&g) {
                let succ = g.moves(s, &a, &x);
                let enabled = g.tester_enabled(s, &a) && g.sut_enabled(s, &x);
                prop_assert_eq!(succ.is_empty(), !enabled);
                if !enabled || matches!(a, TesterAction::Stop | TesterAction::Reset) {
                    continue;
                }
                let q = s.base.unwrap();
                let expected: BTreeSet<ArenaState> = oracle_successors(&sa, r, q, match &a {
                    TesterAction::Input(i) => Some(i),
                    _ => None,
                }, &x)
                    .into_iter()
                    .map(|(n, m)| ArenaState::new(n, if m == 1 { Mark::Input } else { Mark::Output }))
                    .collect();
                let got: BTreeSet<ArenaState> = succ.iter().copied().collect();
                prop_assert_eq!(&got, &expected);
                if a == TesterAction::Theta {
                    prop_assert!(got.iter().all(|n| n.mark == Mark::Output));
                }
                let nd: BTreeSet<ArenaState> = g.with_regime(Regime::Nondeterministic).moves(s, &a, &x).iter().copied().collect();
                if matches!(r, Regime::InputEager | Regime::OutputEager) {
                    prop_assert!(got.is_subset(&nd));
                }
            }
        }
    }

    #[test]
    fn solver_matches_minimax(seed in any::<u64>()) {
        let sa = sa_from(seed);
        for r in [Regime::InputEager, Regime::OutputEager, Regime::Nondeterministic] {
            let g = GameArena::new(&sa, r, false).unwrap();
            for q in sa.states() {
                let goal = ReachabilityGoal::new(&sa, [q].into());
                let mut memo = HashMap::new();
                let expected = oracle_wins(&sa, r, goal.targets(), sa.initial(), sa.num_states() + 1, &mut memo);
                let res = solve_reach(&g, &goal).unwrap();
                prop_assert_eq!(res.winning, expected, "{} goal {}", r, sa.state_name(q));
                if let Some(sigma) = &res.strategy {
                    let horizon = res.rank(&g, g.initial()).unwrap() as usize + 1;
                    for pi in outcomes_any_sut(&g, sigma, horizon) {
                        prop_assert!(is_winning_prefix(&goal, &pi));
                    }
                }
            }
        }
    }

    #[test]
    fn enlarging_the_goal_keeps_winning(seed in any::<u64>(), mask in 0u32..16, extra in 0u32..16) {
        let sa = sa_from(seed);
        let pick = |m: u32| sa.states().filter(|q| m >> q.index() & 1 == 1).collect::<BTreeSet<_>>();
        let small = pick(mask);
        let large: BTreeSet<_> = small.union(&pick(extra)).copied().collect();
        for r in [Regime::InputEager, Regime::OutputEager, Regime::Nondeterministic] {
            let g = GameArena::new(&sa, r, false).unwrap();
            let w_small = solve_reach(&g, &ReachabilityGoal::new(&sa, small.clone())).unwrap().winning;
            let w_large = solve_reach(&g, &ReachabilityGoal::new(&sa, large.clone())).unwrap().winning;
            prop_assert!(!w_small || w_large);
        }
    }

    #[test]
    fn prefix_traces_are_straces(seed in any::<u64>()) {
        let sa = sa_from(seed);
        let g = GameArena::new(&sa, Regime::Nondeterministic, false).unwrap();
        let observe_or_first_input = |g: &GameArena, pi: &ioco_games::play::PlayPrefix| {
            match pi.last().base.and_then(|q| g.sa().enabled_inputs(q).next().cloned()) {
                Some(i) if pi.len() % 2 == 1 => TesterAction::Input(i),
                _ => TesterAction::Theta,
            }
        };
        for pi in outcomes_any_sut(&g, &observe_or_first_input, 3) {
            pi.validate(&g).unwrap();
            prop_assert!(sa.is_strace(&trace_of(&pi)));
        }
    }

    #[test]
    fn generated_tests_round_trip(seed in any::<u64>()) {
        let sa = sa_from(seed);
        for r in [Regime::InputEager, Regime::OutputEager, Regime::Nondeterministic] {
            let g = GameArena::new(&sa, r, false).unwrap();
            let Ok(suite) = gen_suite(&g, 2, 2_000) else { continue };
            for t in &suite {
                prop_assert!(validate_testcase(t, &sa, r).is_ok(), "{} {}", r, t.render());
                let sigma = test_to_strategy(t, &g).unwrap();
                prop_assert_eq!(trace_set(&sigma, &g).unwrap(), oracle_trace_set(&sa, r, &sigma));
                let back = strategy_to_test(&sigma, &g).unwrap();
                prop_assert!(back.equivalent(t));
                prop_assert_eq!(test_to_strategy(&back, &g).unwrap(), sigma.restrict_reachable(&g).unwrap());
            }
        }
    }

    #[test]
    fn ioco_matches_enumeration(seed in any::<u64>()) {
        let spec = sa_from(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(17));
        let imp = angelic_complete(&mutate(&mut rng, &spec, "m"));
        prop_assert!(ioco_check(&angelic_complete(&spec), &spec).unwrap().holds);
        for k in 0..4 {
            prop_assert_eq!(ioco_check_bounded(&imp, &spec, k).unwrap().holds, oracle_ioco(&imp, &spec, k));
        }
        let report = ioco_check(&imp, &spec).unwrap();
        if oracle_ioco(&imp, &spec, 5) {
            prop_assert!(report.counterexample.as_ref().is_none_or(|ce| ce.trace.len() >= 5));
        } else {
            prop_assert!(!report.holds);
        }
        if let Some(ce) = report.counterexample {
            // shortest: no violation on shorter traces
            if ce.trace.len() < 5 {
                prop_assert!(!oracle_ioco(&imp, &spec, ce.trace.len()));
                prop_assert!(ce.trace.is_empty() || oracle_ioco(&imp, &spec, ce.trace.len() - 1));
            }
            let qi = imp.after_initial(&ce.trace).unwrap();
            let qs = spec.after_initial(&ce.trace).unwrap();
            prop_assert!(imp.successor(qi, &ce.output).is_some());
            prop_assert!(spec.successor(qs, &ce.output).is_none());
        }
    }

    #[test]
    fn cheating_is_monotone_in_depth(seed in any::<u64>()) {
        let sa = angelic_complete(&sa_from(seed));
        let g = GameArena::new(&sa, Regime::Nondeterministic, false).unwrap();
        let Ok(suite) = gen_suite(&g, 2, 200) else { return Ok(()) };
        let strategies: Vec<_> = suite.iter().take(6).map(|t| test_to_strategy(t, &g).unwrap()).collect();
        for a in &strategies {
            for b in &strategies {
                let mut seen = false;
                for d in 0..3 {
                    let now = cheats_on(&g, a, &g, b, d, CheatReading::Intended);
                    prop_assert!(!seen || now);
                    seen = now;
                }
            }
        }
    }

    #[test]
    fn harness_verdicts_agree_with_the_spec(seed in any::<u64>()) {
        let spec = sa_from(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(!seed);
        let imp = angelic_complete(&mutate(&mut rng, &spec, "m"));
        let conforms = ioco_check(&imp, &spec).unwrap().holds;
        let mut sut = SutAdapter::new(imp, OutputPolicy::Random).unwrap();
        for r in Regime::ALL {
            let g = GameArena::new(&spec, r, false).unwrap();
            let Ok(suite) = gen_suite(&g, 2, 500) else { continue };
            for t in suite.iter().take(40) {
                let run_seed = rng.random::<u64>();
                let log = run_test(t, &mut sut, r, run_seed).unwrap();
                prop_assert_eq!(&log, &run_test(t, &mut sut, r, run_seed).unwrap());
                prop_assert_eq!(log.replay(t).unwrap(), log.verdict);
                let is_strace = spec.is_strace(&log.trace());
                prop_assert_eq!(log.verdict == Verdict::Pass, is_strace);
                if conforms {
                    prop_assert_eq!(log.verdict, Verdict::Pass);
                }
            }
        }
    }
}

#[test]
fn population_generator_covers_mixed_states() {
    let pop = population(3, 200, Shape { max_states: 4, max_inputs: 2, max_outputs: 2 });
    assert!(pop.iter().filter(|sa| !sa.mixed_states().is_empty()).count() > 50);
}
