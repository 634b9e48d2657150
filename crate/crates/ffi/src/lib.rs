//! C ABI over `relay-tree`.
//!
//! Every fallible function returns an [`RtStatus`] and writes results through
//! out-pointers. On failure a description is kept per thread and can be read
//! with [`rt_last_error_message`]. Variable-length results live behind opaque
//! handles that the caller releases with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use relay_tree::{bounds, dynamics, oracle, regions, Error, ErrorTriplet, FusionRule, RegionLabel};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtStatus {
    Ok = 0,
    NullPointer = 1,
    /// A value was outside its admissible range.
    Range = 2,
    /// `alpha + beta >= 1`.
    Domain = 3,
    /// `q = 1` where region geometry is undefined.
    Degenerate = 4,
    ZeroError = 5,
    /// Sensor count not a power of two, or wrong height parity.
    SensorCount = 6,
    Overflow = 7,
    /// Enumeration exceeded its profile cap or height limit.
    Infeasible = 8,
    Parameter = 9,
    IndexOutOfBounds = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtRule {
    Or = 0,
    And = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtRegion {
    OutsideDomain = 0,
    UOutsideR = 1,
    RuOutsideB1 = 2,
    B1 = 3,
    LOutsideR = 4,
    RlOutsideB1Mirror = 5,
    B1Mirror = 6,
    /// Region geometry undefined (`q = 1`).
    Undefined = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtTriplet {
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtTrajectoryRecord {
    pub level: u32,
    pub state: RtTriplet,
    pub total_l: f64,
    /// Meaningless at level 0, see `has_rule`.
    pub rule_used: RtRule,
    pub has_rule: bool,
    pub region: RtRegion,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtProfile {
    pub alpha: f64,
    pub beta: f64,
    pub weight: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtMessageStatistics {
    pub p_no_data: f64,
    /// NaN when the root never has data.
    pub alpha: f64,
    pub beta: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtSimulationReport {
    pub trials_per_hypothesis: u64,
    pub seed: u64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub alpha_stderr: f64,
    pub beta_stderr: f64,
    pub no_data_h0: u64,
    pub no_data_h1: u64,
}

/// Opaque trajectory handle.
pub struct RtTrajectory(Vec<RtTrajectoryRecord>);

/// Opaque profile distribution handle.
pub struct RtProfileDistribution(oracle::ProfileDistribution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::from(c"error message contained NUL"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RtStatus {
    match e {
        Error::NotAProbability { .. } | Error::OpenUnitInterval { .. } => RtStatus::Range,
        Error::OutsideDomain { .. } => RtStatus::Domain,
        Error::DegenerateFailure => RtStatus::Degenerate,
        Error::ZeroError => RtStatus::ZeroError,
        Error::NotPowerOfTwo(_) | Error::WrongParity { .. } => RtStatus::SensorCount,
        Error::SensorCountOverflow => RtStatus::Overflow,
        Error::EnumerationInfeasible { .. } | Error::HeightTooLarge(..) => RtStatus::Infeasible,
        Error::NoTrials | Error::InvalidParameter(_) => RtStatus::Parameter,
    }
}

fn guard<F>(f: F) -> RtStatus
where
    F: FnOnce() -> Result<(), RtFailure> + UnwindSafe,
{
    match catch_unwind(f) {
        Ok(Ok(())) => RtStatus::Ok,
        Ok(Err(RtFailure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_owned());
            RtStatus::Panic
        }
    }
}

struct RtFailure(RtStatus, String);

impl From<Error> for RtFailure {
    fn from(e: Error) -> Self {
        RtFailure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> RtFailure {
    RtFailure(RtStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or point to a valid, aligned `T`.
unsafe fn read<'a, T>(p: *const T, what: &str) -> Result<&'a T, RtFailure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` must be null or point to writable, aligned memory for a `T`.
unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), RtFailure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

impl From<RtTriplet> for ErrorTriplet {
    fn from(t: RtTriplet) -> Self {
        ErrorTriplet {
            alpha: t.alpha,
            beta: t.beta,
            q: t.q,
        }
    }
}

impl From<ErrorTriplet> for RtTriplet {
    fn from(t: ErrorTriplet) -> Self {
        RtTriplet {
            alpha: t.alpha,
            beta: t.beta,
            q: t.q,
        }
    }
}

impl From<FusionRule> for RtRule {
    fn from(r: FusionRule) -> Self {
        match r {
            FusionRule::Or => RtRule::Or,
            FusionRule::And => RtRule::And,
        }
    }
}

impl From<RegionLabel> for RtRegion {
    fn from(l: RegionLabel) -> Self {
        match l {
            RegionLabel::OutsideDomain => RtRegion::OutsideDomain,
            RegionLabel::UOutsideR => RtRegion::UOutsideR,
            RegionLabel::RUOutsideB1 => RtRegion::RuOutsideB1,
            RegionLabel::B1 => RtRegion::B1,
            RegionLabel::LOutsideR => RtRegion::LOutsideR,
            RegionLabel::RLOutsideB1Mirror => RtRegion::RlOutsideB1Mirror,
            RegionLabel::B1Mirror => RtRegion::B1Mirror,
        }
    }
}

/// Message of the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn rt_select_rule(alpha: f64, beta: f64) -> RtRule {
    dynamics::select_rule(alpha, beta).into()
}

/// # Safety
/// `state` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rt_fuse_step(state: *const RtTriplet, out: *mut RtTriplet) -> RtStatus {
    guard(|| {
        let s = *read(state, "state")?;
        let s = ErrorTriplet::new(s.alpha, s.beta, s.q)?;
        write(out, dynamics::fuse_step(s).into(), "out")
    })
}

/// # Safety
/// `state` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rt_classify(state: *const RtTriplet, out: *mut RtRegion) -> RtStatus {
    guard(|| {
        let s = *read(state, "state")?;
        write(out, regions::classify(s.into())?.into(), "out")
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rt_b1_boundary_beta(alpha: f64, q: f64, out: *mut f64) -> RtStatus {
    guard(|| write(out, regions::b1_boundary_beta(alpha, q)?, "out"))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rt_ru_boundary_beta(alpha: f64, q: f64, out: *mut f64) -> RtStatus {
    guard(|| write(out, regions::ru_boundary_beta(alpha, q)?, "out"))
}

/// # Safety
/// `state` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rt_two_step_ratio(state: *const RtTriplet, out: *mut f64) -> RtStatus {
    guard(|| {
        let s = *read(state, "state")?;
        write(out, bounds::two_step_ratio(s.into())?, "out")
    })
}

/// Bounds on `log2(1/P_N)`, choosing the even- or odd-height form from `n`.
///
/// # Safety
/// `lower` and `upper` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rt_error_bounds(
    l0: f64,
    n: u64,
    lower: *mut f64,
    upper: *mut f64,
) -> RtStatus {
    guard(|| {
        let (lo, hi) = bounds::bounds_for(l0, n)?;
        write(lower, lo, "lower")?;
        write(upper, hi, "upper")
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rt_min_sensors_for_error(
    l0: f64,
    epsilon: f64,
    out: *mut u64,
) -> RtStatus {
    guard(|| write(out, bounds::min_sensors_for_error(l0, epsilon)?, "out"))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rt_root_failure_prob(q0: f64, n: u64, out: *mut f64) -> RtStatus {
    guard(|| write(out, bounds::root_failure_prob(q0, n)?, "out"))
}

/// Builds a trajectory of `levels + 1` records.
///
/// # Safety
/// `initial` and `out` must be valid pointers. On success `*out` owns a handle
/// to be released with [`rt_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn rt_trajectory_new(
    initial: *const RtTriplet,
    levels: u32,
    out: *mut *mut RtTrajectory,
) -> RtStatus {
    guard(|| {
        let s = *read(initial, "initial")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let records = dynamics::trajectory(s.into(), levels)?
            .into_iter()
            .map(|r| RtTrajectoryRecord {
                level: r.level,
                state: r.state.into(),
                total_l: r.total_l,
                rule_used: r.rule_used.map_or(RtRule::Or, Into::into),
                has_rule: r.rule_used.is_some(),
                region: r.region.map_or(RtRegion::Undefined, Into::into),
            })
            .collect();
        write(out, Box::into_raw(Box::new(RtTrajectory(records))), "out")
    })
}

/// # Safety
/// `handle` must be null or a live handle from [`rt_trajectory_new`].
#[no_mangle]
pub unsafe extern "C" fn rt_trajectory_len(handle: *const RtTrajectory) -> usize {
    handle.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rt_trajectory_get(
    handle: *const RtTrajectory,
    index: usize,
    out: *mut RtTrajectoryRecord,
) -> RtStatus {
    guard(|| {
        let t = read(handle, "handle")?;
        let rec = t.0.get(index).copied().ok_or_else(|| {
            RtFailure(
                RtStatus::IndexOutOfBounds,
                format!("index {index} >= {}", t.0.len()),
            )
        })?;
        write(out, rec, "out")
    })
}

/// # Safety
/// `handle` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn rt_trajectory_free(handle: *mut RtTrajectory) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Writes up to `capacity` level rules into `rules` and the full count into `len`.
///
/// # Safety
/// `initial` and `len` must be valid pointers; `rules` must hold `capacity`
/// entries (it may be null when `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn rt_level_rules(
    initial: *const RtTriplet,
    height: u32,
    rules: *mut RtRule,
    capacity: usize,
    len: *mut usize,
) -> RtStatus {
    guard(|| {
        let s = *read(initial, "initial")?;
        let derived = oracle::derive_level_rules(s.into(), height)?;
        if capacity > 0 && rules.is_null() {
            return Err(null("rules"));
        }
        for (i, r) in derived.iter().take(capacity).enumerate() {
            rules.add(i).write((*r).into());
        }
        write(len, derived.len(), "len")
    })
}

/// Exact root profile distribution. `cap` of 0 selects the default cap.
///
/// # Safety
/// `initial` and `out` must be valid pointers. On success `*out` owns a handle
/// to be released with [`rt_profiles_free`].
#[no_mangle]
pub unsafe extern "C" fn rt_exact_root_statistics(
    initial: *const RtTriplet,
    height: u32,
    cap: usize,
    out: *mut *mut RtProfileDistribution,
) -> RtStatus {
    guard(|| {
        let s = *read(initial, "initial")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cap = if cap == 0 {
            oracle::DEFAULT_PROFILE_CAP
        } else {
            cap
        };
        let dist = oracle::exact_root_statistics_with_cap(s.into(), height, cap)?;
        write(
            out,
            Box::into_raw(Box::new(RtProfileDistribution(dist))),
            "out",
        )
    })
}

/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rt_profiles_len(handle: *const RtProfileDistribution) -> usize {
    handle.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rt_profiles_no_data(handle: *const RtProfileDistribution) -> f64 {
    handle.as_ref().map_or(f64::NAN, |d| d.0.p_no_data)
}

/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rt_profiles_get(
    handle: *const RtProfileDistribution,
    index: usize,
    out: *mut RtProfile,
) -> RtStatus {
    guard(|| {
        let d = read(handle, "handle")?;
        let p = d.0.profiles.get(index).ok_or_else(|| {
            RtFailure(
                RtStatus::IndexOutOfBounds,
                format!("index {index} >= {}", d.0.len()),
            )
        })?;
        write(
            out,
            RtProfile {
                alpha: p.alpha,
                beta: p.beta,
                weight: p.weight,
            },
            "out",
        )
    })
}

/// Mean error pair given the root has data; NaN when it never does.
///
/// # Safety
/// `handle` must be a live handle; `alpha` and `beta` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rt_profiles_conditional_mean(
    handle: *const RtProfileDistribution,
    alpha: *mut f64,
    beta: *mut f64,
) -> RtStatus {
    guard(|| {
        let d = read(handle, "handle")?;
        let (a, b) = d.0.conditional_mean().unwrap_or((f64::NAN, f64::NAN));
        write(alpha, a, "alpha")?;
        write(beta, b, "beta")
    })
}

/// # Safety
/// `handle` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn rt_profiles_free(handle: *mut RtProfileDistribution) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `initial` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rt_exact_message_statistics(
    initial: *const RtTriplet,
    height: u32,
    out: *mut RtMessageStatistics,
) -> RtStatus {
    guard(|| {
        let s = *read(initial, "initial")?;
        let m = oracle::exact_message_statistics(s.into(), height)?;
        write(
            out,
            RtMessageStatistics {
                p_no_data: m.p_no_data,
                alpha: m.alpha.unwrap_or(f64::NAN),
                beta: m.beta.unwrap_or(f64::NAN),
            },
            "out",
        )
    })
}

/// # Safety
/// `initial` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rt_simulate(
    initial: *const RtTriplet,
    height: u32,
    trials: u64,
    seed: u64,
    out: *mut RtSimulationReport,
) -> RtStatus {
    guard(|| {
        let s = *read(initial, "initial")?;
        let r = oracle::simulate_monte_carlo(s.into(), height, trials, seed)?;
        write(
            out,
            RtSimulationReport {
                trials_per_hypothesis: r.trials_per_hypothesis,
                seed: r.seed,
                alpha_hat: r.alpha_hat,
                beta_hat: r.beta_hat,
                alpha_stderr: r.alpha_stderr,
                beta_stderr: r.beta_stderr,
                no_data_h0: r.no_data_h0,
                no_data_h1: r.no_data_h1,
            },
            "out",
        )
    })
}
