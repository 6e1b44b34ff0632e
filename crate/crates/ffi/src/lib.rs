//! C ABI over `ioco_games`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call
//! returns an [`IgStatus`]; on failure the message is available from
//! [`ig_last_error`] on the same thread. Strings returned through out
//! parameters are released with [`ig_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ioco_games::conformance::{angelic_complete, ioco_check};
use ioco_games::harness::{run_test, OutputPolicy, SutAdapter};
use ioco_games::play::ReachabilityGoal;
use ioco_games::strategy::FiniteTraceStrategy;
use ioco_games::synthesis::{solve_reach, solve_reach_if};
use ioco_games::testcase::{load_testcase, TestCase, Verdict};
use ioco_games::testgen::strategy_to_test;
use ioco_games::{parse_sa, GameArena, Regime, SuspensionAutomaton};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Model = 4,
    Unsupported = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IgRegime {
    InputEager = 0,
    OutputEager = 1,
    Nondeterministic = 2,
    InputFair = 3,
}

impl From<IgRegime> for Regime {
    fn from(r: IgRegime) -> Self {
        match r {
            IgRegime::InputEager => Regime::InputEager,
            IgRegime::OutputEager => Regime::OutputEager,
            IgRegime::Nondeterministic => Regime::Nondeterministic,
            IgRegime::InputFair => Regime::InputFair,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IgVerdict {
    Pass = 0,
    Fail = 1,
}

/// A parsed suspension automaton.
pub struct IgSpec(SuspensionAutomaton);

/// A finite trace-based tester strategy.
pub struct IgStrategy(FiniteTraceStrategy);

/// A test case.
pub struct IgTest(TestCase);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(IgStatus, String);

fn fail(status: IgStatus, message: impl ToString) -> Failure {
    Failure(status, message.to_string())
}

fn guarded(body: impl FnOnce() -> Result<(), Failure>) -> IgStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|_| Err(fail(IgStatus::Panic, "internal panic")));
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            IgStatus::Ok
        }
        Err(Failure(status, message)) => {
            let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
            LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
            status
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(IgStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(IgStatus::InvalidUtf8, e))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(IgStatus::NullArgument, "null handle"))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(IgStatus::NullArgument, "null out parameter"));
    }
    out.write(value);
    Ok(())
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("interior NULs removed").into_raw()
}

fn arena(spec: &SuspensionAutomaton, regime: Regime, resettable: bool) -> Result<GameArena<'_>, Failure> {
    GameArena::new(spec, regime, resettable).map_err(|e| fail(IgStatus::Model, e))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ig_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ig_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ig_spec_parse(source: *const c_char, out: *mut *mut IgSpec) -> IgStatus {
    guarded(|| {
        let sa = parse_sa(text(source)?).map_err(|e| fail(IgStatus::Parse, e))?;
        put(out, Box::into_raw(Box::new(IgSpec(sa))))
    })
}

/// # Safety
/// `spec` must be NULL or a handle from [`ig_spec_parse`], freed once.
#[no_mangle]
pub unsafe extern "C" fn ig_spec_free(spec: *mut IgSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// # Safety
/// `spec` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ig_spec_num_states(spec: *const IgSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.0.num_states())
}

/// Mixed states as a comma-separated list of names.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ig_spec_mixed_states(spec: *const IgSpec, out: *mut *mut c_char) -> IgStatus {
    guarded(|| {
        let sa = &handle(spec)?.0;
        let names = sa.state_names(&sa.mixed_states()).join(",");
        put(out, c_string(names))
    })
}

/// Solves the reachability game for the comma-separated `goal`. When
/// winning, `strategy` receives a finite witness (the input-eager one for
/// the input-fair regime); otherwise it is set to NULL.
///
/// # Safety
/// `spec` must be a live handle, `goal` a NUL-terminated string and both
/// out parameters writable.
#[no_mangle]
pub unsafe extern "C" fn ig_synth(
    spec: *const IgSpec,
    regime: IgRegime,
    goal: *const c_char,
    winning: *mut bool,
    strategy: *mut *mut IgStrategy,
) -> IgStatus {
    guarded(|| {
        let sa = &handle(spec)?.0;
        let names: Vec<&str> = text(goal)?.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        let goal = ReachabilityGoal::from_names(sa, &names).map_err(|e| fail(IgStatus::Model, e))?;
        let regime = Regime::from(regime);
        let result = if regime == Regime::InputFair {
            let g = arena(sa, Regime::Nondeterministic, false)?;
            solve_reach_if(&g, &goal).map(|f| f.input_eager)
        } else {
            solve_reach(&arena(sa, regime, false)?, &goal)
        }
        .map_err(|e| fail(IgStatus::Model, e))?;
        put(winning, result.winning)?;
        let handle = result
            .strategy
            .map_or(ptr::null_mut(), |s| Box::into_raw(Box::new(IgStrategy(s))));
        put(strategy, handle)
    })
}

/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ig_strategy_parse(source: *const c_char, out: *mut *mut IgStrategy) -> IgStatus {
    guarded(|| {
        let s = FiniteTraceStrategy::parse_exchange(text(source)?).map_err(|e| fail(IgStatus::Parse, e))?;
        put(out, Box::into_raw(Box::new(IgStrategy(s))))
    })
}

/// The strategy in `TRACE -> ACTION` exchange format.
///
/// # Safety
/// `strategy` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ig_strategy_render(strategy: *const IgStrategy, out: *mut *mut c_char) -> IgStatus {
    guarded(|| put(out, c_string(handle(strategy)?.0.to_exchange())))
}

/// # Safety
/// `strategy` must be NULL or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn ig_strategy_free(strategy: *mut IgStrategy) {
    if !strategy.is_null() {
        drop(Box::from_raw(strategy));
    }
}

/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ig_strategy_to_test(
    spec: *const IgSpec,
    strategy: *const IgStrategy,
    regime: IgRegime,
    out: *mut *mut IgTest,
) -> IgStatus {
    guarded(|| {
        let sa = &handle(spec)?.0;
        let sigma = &handle(strategy)?.0;
        sigma.check(sa).map_err(|e| fail(IgStatus::Model, e))?;
        let g = arena(sa, regime.into(), false)?;
        let t = strategy_to_test(sigma, &g).map_err(|e| fail(IgStatus::Unsupported, e))?;
        put(out, Box::into_raw(Box::new(IgTest(t))))
    })
}

/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ig_test_parse(source: *const c_char, out: *mut *mut IgTest) -> IgStatus {
    guarded(|| {
        let t = load_testcase(text(source)?).map_err(|e| fail(IgStatus::Parse, e))?;
        put(out, Box::into_raw(Box::new(IgTest(t))))
    })
}

/// The test case in the automaton file format.
///
/// # Safety
/// `test` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ig_test_render(test: *const IgTest, out: *mut *mut c_char) -> IgStatus {
    guarded(|| put(out, c_string(handle(test)?.0.render())))
}

/// # Safety
/// `test` must be NULL or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn ig_test_free(test: *mut IgTest) {
    if !test.is_null() {
        drop(Box::from_raw(test));
    }
}

/// Decides `implementation ioco spec`. `counterexample` receives
/// `"TRACE OUTPUT"` on failure and NULL otherwise.
///
/// # Safety
/// Handles must be live; out parameters must be writable.
#[no_mangle]
pub unsafe extern "C" fn ig_ioco(
    implementation: *const IgSpec,
    spec: *const IgSpec,
    conforms: *mut bool,
    counterexample: *mut *mut c_char,
) -> IgStatus {
    guarded(|| {
        let report = ioco_check(&handle(implementation)?.0, &handle(spec)?.0).map_err(|e| fail(IgStatus::Model, e))?;
        put(conforms, report.holds)?;
        let ce = report
            .counterexample
            .map_or(ptr::null_mut(), |c| c_string(format!("{} {}", c.trace, c.output)));
        put(counterexample, ce)
    })
}

/// Runs `test` once against `sut` with seeded random outputs. With
/// `complete`, the implementation is first made input-enabled with
/// self-loops.
///
/// # Safety
/// Handles must be live; `verdict` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ig_run_test(
    test: *const IgTest,
    sut: *const IgSpec,
    regime: IgRegime,
    seed: u64,
    complete: bool,
    verdict: *mut IgVerdict,
) -> IgStatus {
    guarded(|| {
        let t = &handle(test)?.0;
        let model = &handle(sut)?.0;
        let model = if complete { angelic_complete(model) } else { model.clone() };
        let mut adapter = SutAdapter::new(model, OutputPolicy::Random).map_err(|e| fail(IgStatus::Model, e))?;
        let log = run_test(t, &mut adapter, regime.into(), seed).map_err(|e| fail(IgStatus::Model, e))?;
        let v = match log.verdict {
            Verdict::Pass => IgVerdict::Pass,
            Verdict::Fail => IgVerdict::Fail,
        };
        put(verdict, v)
    })
}
