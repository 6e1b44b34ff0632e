use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use ioco_games_ffi::*;

const PRINTER: &str = include_str!("../../core/fixtures/printer.sa");
const MUTANT: &str = include_str!("../../core/fixtures/printer_mutant.sa");

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    ig_string_free(s);
    out
}

unsafe fn spec(src: &str) -> *mut IgSpec {
    let mut h = ptr::null_mut();
    assert_eq!(ig_spec_parse(c(src).as_ptr(), &mut h), IgStatus::Ok);
    h
}

#[test]
fn parse_and_mixed_states() {
    unsafe {
        let p = spec(PRINTER);
        assert_eq!(ig_spec_num_states(p), 8);
        let mut names = ptr::null_mut();
        assert_eq!(ig_spec_mixed_states(p, &mut names), IgStatus::Ok);
        assert_eq!(take(names), "q1,q3");
        ig_spec_free(p);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut h = ptr::null_mut();
        let status = ig_spec_parse(c("automaton x\ninitial q0\nq0 go? q0\n").as_ptr(), &mut h);
        assert_eq!(status, IgStatus::Parse);
        assert!(h.is_null());
        let msg = CStr::from_ptr(ig_last_error()).to_str().unwrap();
        assert!(!msg.is_empty());
        assert_eq!(ig_spec_parse(ptr::null(), &mut h), IgStatus::NullArgument);
        let p = spec(PRINTER);
        assert!(ig_last_error().is_null());
        let mut names = ptr::null_mut();
        assert_eq!(ig_spec_mixed_states(ptr::null(), &mut names), IgStatus::NullArgument);
        ig_spec_free(p);
        ig_spec_free(ptr::null_mut());
        ig_string_free(ptr::null_mut());
    }
}

#[test]
fn synth_to_test_to_run() {
    unsafe {
        let p = spec(PRINTER);
        let mut winning = false;
        let mut sigma = ptr::null_mut();
        let st = ig_synth(p, IgRegime::InputEager, c("q4").as_ptr(), &mut winning, &mut sigma);
        assert_eq!(st, IgStatus::Ok);
        assert!(winning);
        let mut text = ptr::null_mut();
        assert_eq!(ig_strategy_render(sigma, &mut text), IgStatus::Ok);
        assert_eq!(take(text), "- -> print?\nprint? -> scan?\nprint? scan? -> stop\n");

        let mut t = ptr::null_mut();
        assert_eq!(ig_strategy_to_test(p, sigma, IgRegime::InputEager, &mut t), IgStatus::Ok);
        let mut rendered = ptr::null_mut();
        assert_eq!(ig_test_render(t, &mut rendered), IgStatus::Ok);
        let rendered = take(rendered);
        let mut t2 = ptr::null_mut();
        assert_eq!(ig_test_parse(c(&rendered).as_ptr(), &mut t2), IgStatus::Ok);

        let mut v = IgVerdict::Fail;
        for seed in 0..10 {
            assert_eq!(ig_run_test(t2, p, IgRegime::InputEager, seed, true, &mut v), IgStatus::Ok);
            assert_eq!(v, IgVerdict::Pass);
        }
        assert_eq!(ig_run_test(t2, p, IgRegime::InputEager, 0, false, &mut v), IgStatus::Model);

        let st = ig_synth(p, IgRegime::Nondeterministic, c("q4").as_ptr(), &mut winning, &mut sigma);
        assert_eq!(st, IgStatus::Ok);
        assert!(!winning && sigma.is_null());
        assert_eq!(
            ig_synth(p, IgRegime::InputFair, c("nowhere").as_ptr(), &mut winning, &mut sigma),
            IgStatus::Model
        );
        ig_test_free(t);
        ig_test_free(t2);
        ig_spec_free(p);
    }
}

#[test]
fn strategy_round_trip() {
    unsafe {
        let mut s = ptr::null_mut();
        let src = "- -> theta\ndelta -> stop\n";
        assert_eq!(ig_strategy_parse(c(src).as_ptr(), &mut s), IgStatus::Ok);
        let mut text = ptr::null_mut();
        assert_eq!(ig_strategy_render(s, &mut text), IgStatus::Ok);
        assert_eq!(take(text), src);
        ig_strategy_free(s);
        assert_eq!(ig_strategy_parse(c("nonsense").as_ptr(), &mut s), IgStatus::Parse);
    }
}

#[test]
fn ioco_reports_counterexample() {
    unsafe {
        let p = spec(PRINTER);
        let m = spec(MUTANT);
        let mut conforms = true;
        let mut ce = ptr::null_mut();
        assert_eq!(ig_ioco(m, p, &mut conforms, &mut ce), IgStatus::Ok);
        assert!(!conforms);
        assert_eq!(take(ce), "ε scanned!");
        assert_eq!(ig_ioco(p, p, &mut conforms, &mut ce), IgStatus::Model);
        ig_spec_free(p);
        ig_spec_free(m);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/ioco_games.h");
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(status.success());
}
