//! Region geometry of the `(alpha, beta, q)` state space.
//!
//! The upper prism `U` holds states with `beta >= alpha`, the lower prism `L`
//! those with `beta < alpha`. Inside `U`, `B1` is the set of states whose next
//! step crosses into `L`, and `R_U` is the mirror image of `f(B1)`. The union
//! `R = R_U ∪ R_L` is invariant under the recursion. States in `L` are
//! classified through their reflection.

use std::fmt;

use crate::dynamics::{log2_add, ErrorTriplet, LogTriplet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionLabel {
    OutsideDomain,
    UOutsideR,
    RUOutsideB1,
    B1,
    LOutsideR,
    RLOutsideB1Mirror,
    B1Mirror,
}

impl RegionLabel {
    pub fn name(&self) -> &'static str {
        match self {
            RegionLabel::OutsideDomain => "outside_domain",
            RegionLabel::UOutsideR => "u_outside_r",
            RegionLabel::RUOutsideB1 => "ru_outside_b1",
            RegionLabel::B1 => "b1",
            RegionLabel::LOutsideR => "l_outside_r",
            RegionLabel::RLOutsideB1Mirror => "rl_outside_b1_mirror",
            RegionLabel::B1Mirror => "b1_mirror",
        }
    }

    pub fn in_invariant_region(&self) -> bool {
        matches!(
            self,
            RegionLabel::B1
                | RegionLabel::RUOutsideB1
                | RegionLabel::B1Mirror
                | RegionLabel::RLOutsideB1Mirror
        )
    }

    fn mirrored(self) -> Self {
        match self {
            RegionLabel::UOutsideR => RegionLabel::LOutsideR,
            RegionLabel::RUOutsideB1 => RegionLabel::RLOutsideB1Mirror,
            RegionLabel::B1 => RegionLabel::B1Mirror,
            RegionLabel::LOutsideR => RegionLabel::UOutsideR,
            RegionLabel::RLOutsideB1Mirror => RegionLabel::RUOutsideB1,
            RegionLabel::B1Mirror => RegionLabel::B1,
            RegionLabel::OutsideDomain => RegionLabel::OutsideDomain,
        }
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_q(q: f64) -> Result<()> {
    if q == 1.0 {
        return Err(Error::DegenerateFailure);
    }
    crate::dynamics::check_probability("q", q)
}

/// Upper boundary of `B1` at fixed `q`: the `beta` at which the next state
/// lands exactly on `beta = alpha`.
///
/// Evaluated as `a(2 - a + aq) / (sqrt(D) + q)`, which equals
/// `(sqrt(D) - q) / (1 - q)` but does not cancel when `alpha` is tiny.
pub fn b1_boundary_beta(alpha: f64, q: f64) -> Result<f64> {
    crate::dynamics::check_probability("alpha", alpha)?;
    check_q(q)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let radicand =
        q * q + (1.0 - q) * (1.0 - q) * (2.0 * alpha - alpha * alpha) + 2.0 * q * (1.0 - q) * alpha;
    Ok(alpha * (2.0 - alpha + alpha * q) / (radicand.sqrt() + q))
}

/// Upper boundary of `R_U` at fixed `q`, evaluated as
/// `a(2(1+q) / (sqrt(q^2 + (1-q^2)a) + q) - 1)`.
pub fn ru_boundary_beta(alpha: f64, q: f64) -> Result<f64> {
    crate::dynamics::check_probability("alpha", alpha)?;
    check_q(q)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let s = (q * q + (1.0 - q * q) * alpha).sqrt();
    Ok(alpha * (2.0 * (1.0 + q) / (s + q) - 1.0))
}

fn log2(x: f64) -> f64 {
    x.log2()
}

/// `log2(1 - 2^x)` for `x < 0`.
fn log2_one_minus(x: f64) -> f64 {
    (-x.exp2()).ln_1p() / std::f64::consts::LN_2
}

/// [`b1_boundary_beta`] with `alpha` and `q` given as base-2 logarithms.
pub fn log2_b1_boundary_beta(log2_alpha: f64, log2_q: f64) -> f64 {
    if log2_alpha == f64::NEG_INFINITY {
        return log2_alpha;
    }
    let (a, q) = (log2_alpha.exp2(), log2_q.exp2());
    let l1q = log2_one_minus(log2_q);
    let log2_radicand = log2_add(
        2.0 * log2_q,
        log2_add(
            2.0 * l1q + log2_alpha + log2(2.0 - a),
            1.0 + log2_q + l1q + log2_alpha,
        ),
    );
    log2_alpha + log2(2.0 - a + a * q) - log2_add(0.5 * log2_radicand, log2_q)
}

/// [`ru_boundary_beta`] with `alpha` and `q` given as base-2 logarithms.
pub fn log2_ru_boundary_beta(log2_alpha: f64, log2_q: f64) -> f64 {
    if log2_alpha == f64::NEG_INFINITY {
        return log2_alpha;
    }
    let q = log2_q.exp2();
    let log2_s = 0.5 * log2_add(2.0 * log2_q, log2_one_minus(2.0 * log2_q) + log2_alpha);
    // g = log2(2(1+q) / (s+q)) >= 1
    let g = 1.0 + q.ln_1p() / std::f64::consts::LN_2 - log2_add(log2_s, log2_q);
    log2_alpha + g + log2_one_minus(-g)
}

/// Swaps the two error components.
pub fn reflect(state: ErrorTriplet) -> ErrorTriplet {
    ErrorTriplet {
        alpha: state.beta,
        beta: state.alpha,
        q: state.q,
    }
}

/// Exact (non-strict) membership classification. Rejects `q = 1`.
pub fn classify(state: ErrorTriplet) -> Result<RegionLabel> {
    let ErrorTriplet { alpha, beta, q } = ErrorTriplet::new(state.alpha, state.beta, state.q)?;
    check_q(q)?;
    if alpha + beta >= 1.0 {
        return Ok(RegionLabel::OutsideDomain);
    }
    if beta < alpha {
        return classify(reflect(state)).map(RegionLabel::mirrored);
    }
    let label = if beta <= b1_boundary_beta(alpha, q)? {
        RegionLabel::B1
    } else if beta <= ru_boundary_beta(alpha, q)? {
        RegionLabel::RUOutsideB1
    } else {
        RegionLabel::UOutsideR
    };
    Ok(label)
}

pub fn in_invariant_region(state: ErrorTriplet) -> Result<bool> {
    classify(state).map(|l| l.in_invariant_region())
}

/// [`classify`] for a state held in the log domain, so that states whose
/// errors underflow `f64` keep their label.
pub fn classify_log2(state: LogTriplet) -> Result<RegionLabel> {
    let LogTriplet {
        log2_alpha,
        log2_beta,
        log2_q,
    } = state;
    if [log2_alpha, log2_beta, log2_q]
        .iter()
        .any(|v| v.is_nan() || *v > 0.0)
    {
        return Err(Error::InvalidParameter(format!(
            "not a log2 probability triplet: {state:?}"
        )));
    }
    if log2_q == 0.0 {
        return Err(Error::DegenerateFailure);
    }
    if log2_add(log2_alpha, log2_beta) >= 0.0 {
        return Ok(RegionLabel::OutsideDomain);
    }
    if log2_beta < log2_alpha {
        let swapped = LogTriplet {
            log2_alpha: log2_beta,
            log2_beta: log2_alpha,
            log2_q,
        };
        return classify_log2(swapped).map(RegionLabel::mirrored);
    }
    let label = if log2_beta <= log2_b1_boundary_beta(log2_alpha, log2_q) {
        RegionLabel::B1
    } else if log2_beta <= log2_ru_boundary_beta(log2_alpha, log2_q) {
        RegionLabel::RUOutsideB1
    } else {
        RegionLabel::UOutsideR
    };
    Ok(label)
}
