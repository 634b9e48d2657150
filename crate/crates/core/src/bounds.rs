//! Error-probability bounds for the fusion center and their asymptotics.
//!
//! All logarithms are base 2. Bounds are stated on `log2(1/P_N)` where
//! `P_N = L_{log2 N}` is the root's `alpha + beta` (twice the error
//! probability under equal priors).

use crate::dynamics::{self, fuse_step, ErrorTriplet};
use crate::error::{Error, Result};
use crate::regions;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(height: u32) -> Self {
        if height.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub n_sensors: u64,
    pub height: u32,
    pub parity: Parity,
    pub lower_log2_inv_p: f64,
    pub upper_log2_inv_p: f64,
    pub actual_log2_inv_p: Option<f64>,
    /// Whether the initial state satisfied the theorem hypothesis (state in R).
    /// `None` when only `L0` was supplied.
    pub initial_in_r: Option<bool>,
}

/// `L_{k+2} / L_k^2` after two fusion steps.
pub fn two_step_ratio(state: ErrorTriplet) -> Result<f64> {
    let state = ErrorTriplet::in_domain(state.alpha, state.beta, state.q)?;
    let l0 = state.total_error();
    if l0 == 0.0 {
        return Err(Error::ZeroError);
    }
    let l2 = fuse_step(fuse_step(state)).total_error();
    Ok(l2 / (l0 * l0))
}

/// Height of a tree with `n` leaves; `n` must be a power of two.
pub fn height_of(n: u64) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros())
}

fn check_l0(l0: f64) -> Result<f64> {
    if l0 > 0.0 && l0 < 1.0 {
        Ok((1.0 / l0).log2())
    } else {
        Err(Error::OpenUnitInterval {
            name: "L0",
            value: l0,
        })
    }
}

/// Even-height bounds on `log2(1/P_N)`.
pub fn theorem1_bounds(l0: f64, n: u64) -> Result<(f64, f64)> {
    let x = check_l0(l0)?;
    let height = height_of(n)?;
    if height % 2 != 0 {
        return Err(Error::WrongParity {
            height,
            found: "odd",
            expected: "even",
        });
    }
    // sqrt(N) = 2^(h/2) and log2 sqrt(N) = h/2, both exact.
    let root = (n as f64).sqrt();
    let log_root = f64::from(height / 2);
    Ok((
        root * (x - 2.0 * log_root / root),
        root * (x + log_root / root),
    ))
}

/// Odd-height bounds on `log2(1/P_N)`.
pub fn theorem2_bounds(l0: f64, n: u64) -> Result<(f64, f64)> {
    let x = check_l0(l0)?;
    let height = height_of(n)?;
    if height % 2 == 0 {
        return Err(Error::WrongParity {
            height,
            found: "even",
            expected: "odd",
        });
    }
    let half_root = (n as f64 / 2.0).sqrt();
    let double_root = (2.0 * n as f64).sqrt();
    let log_half_root = f64::from((height - 1) / 2);
    Ok((
        half_root * (x - 2.0 * log_half_root / half_root),
        double_root * (x + log_half_root / double_root),
    ))
}

/// Picks the theorem matching the parity of `log2 n`.
pub fn bounds_for(l0: f64, n: u64) -> Result<(f64, f64)> {
    match Parity::of(height_of(n)?) {
        Parity::Even => theorem1_bounds(l0, n),
        Parity::Odd => theorem2_bounds(l0, n),
    }
}

/// Bounds for a tree grown from `initial`, with the realized value from the
/// recursion and a flag telling whether the theorem hypothesis held.
pub fn bounds_report(initial: ErrorTriplet, n: u64) -> Result<BoundsReport> {
    let initial = ErrorTriplet::in_domain(initial.alpha, initial.beta, initial.q)?;
    let height = height_of(n)?;
    let (lower, upper) = bounds_for(initial.total_error(), n)?;
    let actual = *dynamics::log2_inv_total_path(initial, height)?
        .last()
        .expect("path holds height + 1 values");
    let initial_in_r = regions::in_invariant_region(initial).ok();
    Ok(BoundsReport {
        n_sensors: n,
        height,
        parity: Parity::of(height),
        lower_log2_inv_p: lower,
        upper_log2_inv_p: upper,
        actual_log2_inv_p: Some(actual),
        initial_in_r,
    })
}

/// Bounds report from `L0` alone.
pub fn bounds_report_from_l0(l0: f64, n: u64) -> Result<BoundsReport> {
    let height = height_of(n)?;
    let (lower, upper) = bounds_for(l0, n)?;
    Ok(BoundsReport {
        n_sensors: n,
        height,
        parity: Parity::of(height),
        lower_log2_inv_p: lower,
        upper_log2_inv_p: upper,
        actual_log2_inv_p: None,
        initial_in_r: None,
    })
}

/// Smallest `N = 4^m` whose even-height lower bound reaches `log2(1/epsilon)`.
pub fn min_sensors_for_error(l0: f64, epsilon: f64) -> Result<u64> {
    check_l0(l0)?;
    let target = (1.0 / check_open("epsilon", epsilon)?).log2();
    (0..=31u32)
        .map(|m| 1u64 << (2 * m))
        .find(|&n| {
            theorem1_bounds(l0, n)
                .map(|(lower, _)| lower >= target)
                .unwrap_or(false)
        })
        .ok_or(Error::SensorCountOverflow)
}

fn check_open(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::OpenUnitInterval { name, value })
    }
}

/// Failure probability at the root, `q0^n`.
pub fn root_failure_prob(q0: f64, n: u64) -> Result<f64> {
    dynamics::check_probability("q0", q0)?;
    height_of(n)?;
    Ok(if q0 == 0.0 || q0 == 1.0 {
        q0
    } else {
        (n as f64 * q0.log2()).exp2()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepFamily {
    /// `q0 = 1 - eta_N`
    Failure,
    /// `L0 = 1 - eta_N`
    Error,
}

impl SweepFamily {
    pub fn name(&self) -> &'static str {
        match self {
            SweepFamily::Failure => "failure",
            SweepFamily::Error => "error",
        }
    }

    /// Critical exponent `p` separating vanishing and non-vanishing regimes.
    pub fn threshold(&self) -> f64 {
        match self {
            SweepFamily::Failure => 1.0,
            SweepFamily::Error => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: u64,
    pub eta: f64,
    /// `q0` for the failure family, `L0` for the error family.
    pub base: f64,
    /// Failure family only.
    pub q_root: Option<f64>,
    /// Error family only.
    pub lower_log2_inv_p: Option<f64>,
    pub upper_log2_inv_p: Option<f64>,
}

/// Tabulates the root behaviour for `eta_N = c / N^p`.
pub fn asymptotic_sweep(
    family: SweepFamily,
    c: f64,
    p: f64,
    n_list: &[u64],
) -> Result<Vec<SweepRow>> {
    if !(c > 0.0 && c.is_finite()) || !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "c and p must be positive and finite, got c={c}, p={p}"
        )));
    }
    n_list
        .iter()
        .map(|&n| {
            height_of(n)?;
            let eta = c / (n as f64).powf(p);
            check_open("eta", eta)?;
            let base = 1.0 - eta;
            let row = match family {
                SweepFamily::Failure => SweepRow {
                    n,
                    eta,
                    base,
                    q_root: Some(root_failure_prob(base, n)?),
                    lower_log2_inv_p: None,
                    upper_log2_inv_p: None,
                },
                SweepFamily::Error => {
                    let (lo, hi) = bounds_for(check_open("L0", base)?, n)?;
                    SweepRow {
                        n,
                        eta,
                        base,
                        q_root: None,
                        lower_log2_inv_p: Some(lo),
                        upper_log2_inv_p: Some(hi),
                    }
                }
            };
            Ok(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const X: f64 = 1.736_965_594_166_206; // log2(1/0.3)

    fn t(alpha: f64, beta: f64, q: f64) -> ErrorTriplet {
        ErrorTriplet { alpha, beta, q }
    }

    #[test]
    fn log_constant() {
        assert!(((1.0f64 / 0.3).log2() - X).abs() < 1e-15);
    }

    #[test]
    fn two_step_ratio_examples() {
        // (0.1,0.2) -OR-> (0.19,0.04) -AND-> (0.0361, 0.0784)
        let r = two_step_ratio(t(0.1, 0.2, 0.0)).unwrap();
        assert!((r - 0.1145 / 0.09).abs() < 1e-13, "{r}");
        let r = two_step_ratio(t(0.2, 0.2, 0.1)).unwrap();
        assert!((0.5..=4.0).contains(&r));
        assert_eq!(two_step_ratio(t(0.0, 0.0, 0.3)), Err(Error::ZeroError));
    }

    #[test]
    fn theorem1_examples() {
        let (lo, hi) = theorem1_bounds(0.3, 4).unwrap();
        assert!((lo - 2.0 * (X - 1.0)).abs() < 1e-12 && (lo - 1.473_93).abs() < 1e-5);
        assert!((hi - 2.0 * (X + 0.5)).abs() < 1e-12 && (hi - 4.473_93).abs() < 1e-5);
        let x = (1.0f64 / 0.3).log2();
        assert_eq!(theorem1_bounds(0.3, 1).unwrap(), (x, x));
        assert!(matches!(
            theorem1_bounds(0.3, 8),
            Err(Error::WrongParity { .. })
        ));
        assert!(matches!(
            theorem1_bounds(0.3, 6),
            Err(Error::NotPowerOfTwo(6))
        ));
        assert!(matches!(
            theorem1_bounds(1.0, 4),
            Err(Error::OpenUnitInterval { .. })
        ));
    }

    #[test]
    fn theorem1_lower_eventually_increases() {
        for l0 in [0.05, 0.3, 0.7, 0.95] {
            let lows: Vec<f64> = (1..=10)
                .map(|m| theorem1_bounds(l0, 1 << (2 * m)).unwrap().0)
                .collect();
            let tail = &lows[5..];
            assert!(tail.windows(2).all(|w| w[1] > w[0]), "{l0}: {lows:?}");
        }
    }

    #[test]
    fn theorem2_examples() {
        let (lo, hi) = theorem2_bounds(0.3, 2).unwrap();
        assert!((lo - X).abs() < 1e-15 && (hi - 2.0 * X).abs() < 1e-15);
        let (lo, hi) = theorem2_bounds(0.3, 8).unwrap();
        assert!((lo - 2.0 * (X - 1.0)).abs() < 1e-12 && (lo - 1.473_93).abs() < 1e-5);
        assert!((hi - 4.0 * (X + 0.25)).abs() < 1e-12 && (hi - 7.947_86).abs() < 1e-5);
        assert!(matches!(
            theorem2_bounds(0.3, 4),
            Err(Error::WrongParity { .. })
        ));
    }

    #[test]
    fn min_sensors_examples() {
        // At the tie epsilon = L0 the height-0 tree already qualifies.
        assert_eq!(min_sensors_for_error(0.3, 0.3).unwrap(), 1);
        // lower(1) = 1.737, lower(4) = 1.474, lower(16) = 2.948 against 1.786
        assert_eq!(min_sensors_for_error(0.3, 0.29).unwrap(), 16);
        assert_eq!(min_sensors_for_error(0.3, 0.5).unwrap(), 1);
        assert_eq!(min_sensors_for_error(0.3, 1e-2).unwrap(), 64);
        assert!(min_sensors_for_error(0.3, 0.0).is_err());
        assert_eq!(
            min_sensors_for_error(1.0 - 1e-15, 1e-300),
            Err(Error::SensorCountOverflow)
        );
    }

    #[test]
    fn min_sensors_is_smallest() {
        for eps in [0.2, 1e-2, 1e-5, 1e-9] {
            let n = min_sensors_for_error(0.3, eps).unwrap();
            let target = (1.0 / eps).log2();
            assert!(theorem1_bounds(0.3, n).unwrap().0 >= target);
            let mut m = 1u64;
            while m < n {
                assert!(theorem1_bounds(0.3, m).unwrap().0 < target);
                m *= 4;
            }
        }
    }

    #[test]
    fn root_failure_examples() {
        assert!((root_failure_prob(0.5, 4).unwrap() - 0.0625).abs() < 1e-17);
        assert_eq!(root_failure_prob(1.0, 1 << 40).unwrap(), 1.0);
        assert_eq!(root_failure_prob(0.0, 8).unwrap(), 0.0);
        assert!(root_failure_prob(0.5, 3).is_err());
        // (1 - 2/N)^N -> e^-2
        let n = 1u64 << 20;
        let q = root_failure_prob(1.0 - 2.0 / n as f64, n).unwrap();
        assert!((q - (-2.0f64).exp()).abs() < 1e-5);
    }

    #[test]
    fn sweep_regimes() {
        let ns: Vec<u64> = (4..=20).map(|h| 1u64 << h).collect();
        let fast = asymptotic_sweep(SweepFamily::Failure, 1.0, 0.5, &ns).unwrap();
        assert!(fast.windows(2).all(|w| w[1].q_root <= w[0].q_root));
        assert!(fast.last().unwrap().q_root.unwrap() < 1e-100);

        let crit = asymptotic_sweep(SweepFamily::Failure, 2.0, 1.0, &ns).unwrap();
        let limit = (-2.0f64).exp();
        for row in &crit {
            // (1 - 2/N)^N approaches e^-2 from below, roughly as e^-2 (1 - 2/N)
            let q = row.q_root.unwrap();
            assert!(
                q <= limit && q >= limit * (1.0 - 4.0 / row.n as f64),
                "{row:?}"
            );
        }

        let slow = asymptotic_sweep(SweepFamily::Failure, 1.0, 2.0, &ns).unwrap();
        assert!(slow.last().unwrap().q_root.unwrap() > 0.9999);

        let err = asymptotic_sweep(SweepFamily::Error, 1.0, 0.25, &ns).unwrap();
        assert!(err
            .iter()
            .all(|r| r.lower_log2_inv_p.unwrap() <= r.upper_log2_inv_p.unwrap()));

        assert!(asymptotic_sweep(SweepFamily::Failure, 4.0, 1.0, &[2]).is_err());
        assert!(asymptotic_sweep(SweepFamily::Failure, -1.0, 1.0, &[2]).is_err());
        assert!(asymptotic_sweep(SweepFamily::Failure, 1.0, 1.0, &[3]).is_err());
    }

    #[test]
    fn report_flags_hypothesis() {
        let rep = bounds_report(t(0.1, 0.2, 0.0), 16).unwrap();
        assert_eq!(rep.initial_in_r, Some(true));
        assert_eq!(rep.parity, Parity::Even);
        let rep = bounds_report(t(0.01, 0.9, 0.0), 8).unwrap();
        assert_eq!(rep.initial_in_r, Some(false));
        assert_eq!(rep.parity, Parity::Odd);
        assert!(rep.actual_log2_inv_p.unwrap() > 0.0);
    }

    proptest! {
        #[test]
        fn theorem2_ordered(l0 in 1e-6f64..(1.0 - 1e-9), h in 0u32..30) {
            let n = 1u64 << (2 * h + 1);
            let (lo, hi) = theorem2_bounds(l0, n).unwrap();
            prop_assert!(lo <= hi);
        }

        #[test]
        fn root_failure_squares(q0 in 0.0f64..=1.0, h in 0u32..40) {
            let n = 1u64 << h;
            let a = root_failure_prob(q0, n).unwrap();
            let b = root_failure_prob(q0, 2 * n).unwrap();
            prop_assert!((a * a - b).abs() <= 8.0 * f64::EPSILON * b.max(f64::MIN_POSITIVE) || (a * a - b).abs() < 1e-300);
        }

        #[test]
        fn prop3_slower_with_failures(a in 0.0f64..0.5, b in 0.0f64..1.0, q1 in 0.0f64..1.0, q2 in 0.0f64..1.0) {
            prop_assume!(a <= b && a + b < 1.0);
            let (q1, q2) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            let l1 = fuse_step(t(a, b, q1)).total_error();
            let l2 = fuse_step(t(a, b, q2)).total_error();
            prop_assert!(l1 <= l2 * (1.0 + 1e-15));
        }
    }
}
