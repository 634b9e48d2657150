//! One-level fusion recursion for a balanced binary relay tree.
//!
//! A level of the tree is summarized by the triplet `(alpha, beta, q)`: the
//! Type I and Type II error probabilities of a node's message, conditioned on
//! the node having data, and the probability that the node has no data at all.
//! Every node at a level shares the same triplet, so the tree collapses into a
//! discrete dynamical system driven by [`fuse_step`].

use crate::error::{Error, Result};
use crate::regions::{self, RegionLabel};

/// State of one tree level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTriplet {
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
}

impl ErrorTriplet {
    /// Builds a triplet, checking that every component lies in `[0, 1]`.
    pub fn new(alpha: f64, beta: f64, q: f64) -> Result<Self> {
        check_probability("alpha", alpha)?;
        check_probability("beta", beta)?;
        check_probability("q", q)?;
        Ok(Self { alpha, beta, q })
    }

    /// Builds a triplet and additionally requires `alpha + beta < 1`,
    /// the domain on which the region and bound analysis is defined.
    pub fn in_domain(alpha: f64, beta: f64, q: f64) -> Result<Self> {
        let s = Self::new(alpha, beta, q)?;
        s.check_domain()?;
        Ok(s)
    }

    pub fn check_domain(&self) -> Result<()> {
        let sum = self.alpha + self.beta;
        if sum < 1.0 {
            Ok(())
        } else {
            Err(Error::OutsideDomain { sum })
        }
    }

    pub fn total_error(&self) -> f64 {
        self.alpha + self.beta
    }

    pub fn errors(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::NotAProbability { name, value })
    }
}

/// Two-message fusion rule picked by the likelihood-ratio test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FusionRule {
    /// Decide 1 if either message is 1. Used when `alpha <= beta`.
    Or,
    /// Decide 1 only if both messages are 1. Used when `alpha > beta`.
    And,
}

impl FusionRule {
    pub fn name(&self) -> &'static str {
        match self {
            FusionRule::Or => "or",
            FusionRule::And => "and",
        }
    }

    /// Fuses two binary decisions.
    pub fn combine(&self, a: bool, b: bool) -> bool {
        match self {
            FusionRule::Or => a || b,
            FusionRule::And => a && b,
        }
    }
}

/// Ties go to the OR rule.
pub fn select_rule(alpha: f64, beta: f64) -> FusionRule {
    if alpha <= beta {
        FusionRule::Or
    } else {
        FusionRule::And
    }
}

/// Error pair after fusing two present messages with error pairs `a` and `b`.
pub fn apply_rule(rule: FusionRule, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    match rule {
        FusionRule::Or => (1.0 - (1.0 - a.0) * (1.0 - b.0), a.1 * b.1),
        FusionRule::And => (a.0 * b.0, 1.0 - (1.0 - a.1) * (1.0 - b.1)),
    }
}

/// Conditional-mean update of one level.
///
/// With probability `(1-q)^2` both children report and are fused, with
/// probability `2q(1-q)` a single message passes through unchanged, and with
/// probability `q^2` the parent has no data. The returned errors are the means
/// conditioned on the parent having data. Total on `[0,1]^3`.
pub fn fuse_step(state: ErrorTriplet) -> ErrorTriplet {
    let ErrorTriplet { alpha, beta, q } = state;
    let denom = 1.0 + q;
    let (alpha, beta) = match select_rule(alpha, beta) {
        FusionRule::Or => (
            ((1.0 - q) * (2.0 * alpha - alpha * alpha) + 2.0 * q * alpha) / denom,
            ((1.0 - q) * beta * beta + 2.0 * q * beta) / denom,
        ),
        FusionRule::And => (
            ((1.0 - q) * alpha * alpha + 2.0 * q * alpha) / denom,
            ((1.0 - q) * (2.0 * beta - beta * beta) + 2.0 * q * beta) / denom,
        ),
    };
    ErrorTriplet {
        alpha,
        beta,
        q: q * q,
    }
}

/// `alpha + beta`, i.e. twice the total error probability under equal priors.
pub fn total_error(state: ErrorTriplet) -> f64 {
    state.total_error()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub level: u32,
    pub state: ErrorTriplet,
    pub total_l: f64,
    /// Rule that produced this level from the one below; `None` at level 0.
    pub rule_used: Option<FusionRule>,
    /// `None` only when `q == 1`, where the region boundaries are undefined.
    pub region: Option<RegionLabel>,
}

impl TrajectoryRecord {
    fn new(
        level: u32,
        state: ErrorTriplet,
        shadow: LogTriplet,
        rule_used: Option<FusionRule>,
    ) -> Self {
        // Once an error is subnormal the linear state has lost its relative
        // precision, so the label comes from the log-domain copy instead.
        let region =
            if state.alpha.min(state.beta) >= f64::MIN_POSITIVE || state.alpha == state.beta {
                regions::classify(state).ok()
            } else {
                regions::classify_log2(shadow).ok()
            };
        Self {
            level,
            state,
            total_l: state.alpha + state.beta,
            rule_used,
            region,
        }
    }
}

/// Iterates [`fuse_step`] `levels` times, returning `levels + 1` records.
pub fn trajectory(initial: ErrorTriplet, levels: u32) -> Result<Vec<TrajectoryRecord>> {
    let initial = ErrorTriplet::new(initial.alpha, initial.beta, initial.q)?;
    initial.check_domain()?;
    let mut records = Vec::with_capacity(levels as usize + 1);
    let (mut state, mut shadow) = (initial, LogTriplet::from(initial));
    records.push(TrajectoryRecord::new(0, state, shadow, None));
    for level in 1..=levels {
        let rule = select_rule(state.alpha, state.beta);
        state = fuse_step(state);
        shadow = shadow.fuse_step();
        records.push(TrajectoryRecord::new(level, state, shadow, Some(rule)));
    }
    Ok(records)
}

/// Triplet stored as base-2 logarithms, for trees deep enough that the error
/// probabilities underflow `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTriplet {
    pub log2_alpha: f64,
    pub log2_beta: f64,
    pub log2_q: f64,
}

impl From<ErrorTriplet> for LogTriplet {
    fn from(s: ErrorTriplet) -> Self {
        Self {
            log2_alpha: s.alpha.log2(),
            log2_beta: s.beta.log2(),
            log2_q: s.q.log2(),
        }
    }
}

impl LogTriplet {
    pub fn log2_total(&self) -> f64 {
        log2_add(self.log2_alpha, self.log2_beta)
    }

    pub fn rule(&self) -> FusionRule {
        if self.log2_alpha <= self.log2_beta {
            FusionRule::Or
        } else {
            FusionRule::And
        }
    }

    /// Same update as [`fuse_step`], written multiplicatively:
    /// the growing error gets the factor `1 + w(1-x)` and the shrinking one
    /// the factor `w*x + (1-w)`, with `w = (1-q)/(1+q)`.
    pub fn fuse_step(&self) -> Self {
        let q = self.log2_q.exp2();
        let w = (1.0 - q) / (1.0 + q);
        let log2_w = (-q).ln_1p() / std::f64::consts::LN_2 - q.ln_1p() / std::f64::consts::LN_2;
        // log2(2q / (1+q))
        let log2_pass = 1.0 + self.log2_q - q.ln_1p() / std::f64::consts::LN_2;
        let grow = |lx: f64| lx + (w * (1.0 - lx.exp2())).ln_1p() / std::f64::consts::LN_2;
        let shrink = |lx: f64| lx + log2_add(log2_w + lx, log2_pass);
        let (log2_alpha, log2_beta) = match self.rule() {
            FusionRule::Or => (grow(self.log2_alpha), shrink(self.log2_beta)),
            FusionRule::And => (shrink(self.log2_alpha), grow(self.log2_beta)),
        };
        Self {
            log2_alpha,
            log2_beta,
            log2_q: 2.0 * self.log2_q,
        }
    }
}

/// `log2(2^a + 2^b)` without leaving the log domain.
pub(crate) fn log2_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2
}

/// `log2(1/L_k)` for `k = 0..=height`, computed in the log domain.
pub fn log2_inv_total_path(initial: ErrorTriplet, height: u32) -> Result<Vec<f64>> {
    let initial = ErrorTriplet::in_domain(initial.alpha, initial.beta, initial.q)?;
    let mut state = LogTriplet::from(initial);
    let mut out = Vec::with_capacity(height as usize + 1);
    out.push(-state.log2_total());
    for _ in 0..height {
        state = state.fuse_step();
        out.push(-state.log2_total());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(alpha: f64, beta: f64, q: f64) -> ErrorTriplet {
        ErrorTriplet { alpha, beta, q }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn deep_trajectory_keeps_region_labels() {
        // alpha reaches 0 in f64 after about 20 levels; labels must stay in R
        let path = trajectory(t(0.1, 0.2, 0.3), 40).unwrap();
        assert_eq!(path[30].state.alpha.min(path[30].state.beta), 0.0);
        assert!(path.iter().all(|r| r.region.unwrap().in_invariant_region()));
    }

    #[test]
    fn rule_selection() {
        assert_eq!(select_rule(0.1, 0.2), FusionRule::Or);
        assert_eq!(select_rule(0.2, 0.2), FusionRule::Or);
        assert_eq!(select_rule(0.3, 0.1), FusionRule::And);
    }

    #[test]
    fn rule_application() {
        let (a, b) = apply_rule(FusionRule::Or, (0.1, 0.2), (0.1, 0.2));
        assert!(close(a, 0.19, 1e-15) && close(b, 0.04, 1e-15));
        let (a, b) = apply_rule(FusionRule::And, (0.3, 0.1), (0.3, 0.1));
        assert!(close(a, 0.09, 1e-15) && close(b, 0.19, 1e-15));
        assert_eq!(
            apply_rule(FusionRule::Or, (0.0, 0.0), (0.0, 0.0)),
            (0.0, 0.0)
        );
    }

    #[test]
    fn fuse_step_examples() {
        let s = fuse_step(t(0.1, 0.2, 0.0));
        assert!(close(s.alpha, 0.19, 1e-15) && close(s.beta, 0.04, 1e-15) && s.q == 0.0);

        // Four leaf-failure cases at q = 1/2: both present (1/4), one present (1/2), none (1/4).
        let present = 0.75;
        let mean_alpha = (0.25 * 0.19 + 0.5 * 0.1) / present;
        let mean_beta = (0.25 * 0.04 + 0.5 * 0.2) / present;
        let s = fuse_step(t(0.1, 0.2, 0.5));
        assert!(close(s.alpha, 0.13, 1e-15));
        assert!(close(s.alpha, mean_alpha, 1e-15));
        assert!(close(s.beta, 0.44 / 3.0, 1e-15));
        assert!(close(s.beta, mean_beta, 1e-15));
        assert_eq!(s.q, 0.25);

        assert_eq!(fuse_step(t(0.0, 0.0, 0.7)), t(0.0, 0.0, 0.7 * 0.7));
    }

    #[test]
    fn total_error_examples() {
        assert!(close(total_error(t(0.1, 0.2, 0.5)), 0.3, 1e-15));
        assert_eq!(total_error(t(0.0, 0.0, 0.4)), 0.0);
        assert!(close(total_error(fuse_step(t(0.1, 0.2, 0.0))), 0.23, 1e-15));
    }

    #[test]
    fn trajectory_examples() {
        let init = t(0.1, 0.2, 0.5);
        let one = trajectory(init, 1).unwrap();
        assert_eq!(one.len(), 2);
        assert_eq!(one[0].state, init);
        assert_eq!(one[0].rule_used, None);
        assert_eq!(one[1].rule_used, Some(FusionRule::Or));
        assert!(close(one[1].state.alpha, 0.13, 1e-15));
        assert!(close(one[1].state.beta, 0.146_666_666_666_666_67, 1e-15));
        assert_eq!(one[1].state.q, 0.25);

        assert_eq!(trajectory(init, 0).unwrap().len(), 1);

        let long = trajectory(init, 20).unwrap();
        assert_eq!(long[20].state.q, 0.0);
        for r in &long {
            assert_eq!(r.total_l, r.state.alpha + r.state.beta);
        }
    }

    #[test]
    fn trajectory_rejects_outside_domain() {
        assert_eq!(
            trajectory(t(0.6, 0.5, 0.1), 3),
            Err(Error::OutsideDomain { sum: 0.6 + 0.5 })
        );
        assert!(matches!(
            trajectory(t(0.5, 0.5, 0.1), 3),
            Err(Error::OutsideDomain { .. })
        ));
        assert!(matches!(
            trajectory(t(0.1, 0.2, 1.5), 3),
            Err(Error::NotAProbability { name: "q", .. })
        ));
    }

    #[test]
    fn q_one_is_pass_through() {
        let s = t(0.12, 0.34, 1.0);
        assert_eq!(fuse_step(s), s);
        let recs = trajectory(s, 2).unwrap();
        assert!(recs.iter().all(|r| r.region.is_none()));
    }

    #[test]
    fn log_domain_survives_underflow() {
        let path = log2_inv_total_path(t(0.1, 0.2, 0.3), 24).unwrap();
        assert!(path.iter().all(|x| x.is_finite()));
        assert!(path[24] > 1100.0, "{}", path[24]);
    }

    fn unit() -> impl Strategy<Value = f64> {
        0.0f64..=1.0
    }

    proptest! {
        #[test]
        fn q_squares(a in unit(), b in unit(), q in unit()) {
            prop_assert_eq!(fuse_step(t(a, b, q)).q, q * q);
        }

        #[test]
        fn weighted_form_matches(a in unit(), b in unit(), q in unit()) {
            let w = (1.0 - q) / (1.0 + q);
            let both = apply_rule(select_rule(a, b), (a, b), (a, b));
            let s = fuse_step(t(a, b, q));
            prop_assert!(close(s.alpha, w * both.0 + (1.0 - w) * a, 1e-14));
            prop_assert!(close(s.beta, w * both.1 + (1.0 - w) * b, 1e-14));
        }

        #[test]
        fn zero_failure_reduces_to_pair_fusion(a in unit(), b in unit()) {
            let s = fuse_step(t(a, b, 0.0));
            let (ea, eb) = apply_rule(select_rule(a, b), (a, b), (a, b));
            prop_assert!(close(s.alpha, ea, 1e-15) && close(s.beta, eb, 1e-15));
        }

        #[test]
        fn swap_symmetry(a in unit(), b in unit(), q in unit()) {
            prop_assume!(a != b);
            let s = fuse_step(t(a, b, q));
            let m = fuse_step(t(b, a, q));
            prop_assert!(close(s.alpha, m.beta, 1e-15) && close(s.beta, m.alpha, 1e-15));
        }

        #[test]
        fn moves_toward_diagonal_before_b1(a in 0.0f64..0.5, b in 0.0f64..1.0, q in 0.0f64..1.0) {
            prop_assume!(a > 0.0 && a < b && a + b < 1.0);
            let s = fuse_step(t(a, b, q));
            prop_assume!(s.beta >= s.alpha);
            prop_assert!(s.alpha > a && s.beta < b);
        }

        #[test]
        fn log_domain_matches_linear(a in 0.001f64..0.5, b in 0.001f64..0.5, q in unit(), steps in 0u32..8) {
            let mut lin = t(a, b, q);
            let mut log = LogTriplet::from(lin);
            for _ in 0..steps {
                lin = fuse_step(lin);
                log = log.fuse_step();
            }
            let l = lin.alpha + lin.beta;
            prop_assume!(l > 1e-300);
            prop_assert!(((-log.log2_total()) - (-l.log2())).abs() <= 1e-9 * (1.0 + l.log2().abs()));
        }
    }
}
