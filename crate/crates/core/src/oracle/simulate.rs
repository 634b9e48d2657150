use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{ErrorTriplet, FusionRule};
use crate::error::{Error, Result};

/// Leaves per trial are `2^height`; keep one trial's buffer under 16 MiB.
pub const MAX_SIMULATION_HEIGHT: u32 = 24;

const TRIALS_PER_BLOCK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    fn index(self) -> u64 {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub trials_per_hypothesis: u64,
    pub seed: u64,
    /// Fraction of data-bearing H0 trials where the root decided 1.
    /// Zero when no H0 trial reached the root with data.
    pub alpha_hat: f64,
    pub beta_hat: f64,
    /// `sqrt(p(1-p)/effective_trials)`; infinite when there were no effective trials.
    pub alpha_stderr: f64,
    pub beta_stderr: f64,
    pub no_data_h0: u64,
    pub no_data_h1: u64,
    pub level_rules: Vec<FusionRule>,
}

impl SimulationReport {
    /// Root no-data trials over both hypotheses.
    pub fn no_data_count(&self) -> u64 {
        self.no_data_h0 + self.no_data_h1
    }

    /// Equal-prior total error probability estimate.
    pub fn total_error_hat(&self) -> f64 {
        0.5 * (self.alpha_hat + self.beta_hat)
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    no_data: u64,
    says_one: u64,
    says_zero: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(self, o: Tally) -> Tally {
        Tally {
            no_data: self.no_data + o.no_data,
            says_one: self.says_one + o.says_one,
            says_zero: self.says_zero + o.says_zero,
        }
    }
}

// message encoding in the per-trial buffer
const SILENT: u8 = 0;
const SAYS_ZERO: u8 = 1;
const SAYS_ONE: u8 = 2;

/// Expands a 64-bit seed into a ChaCha key with SplitMix64.
fn key_from_seed(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        chunk.copy_from_slice(&(z ^ (z >> 31)).to_le_bytes());
    }
    key
}

struct Sampler<'a> {
    leaf: ErrorTriplet,
    rules: &'a [FusionRule],
    base: ChaCha8Rng,
}

impl Sampler<'_> {
    /// Stream for `(hypothesis, trial)`; streams never overlap across keys.
    fn rng_for(&self, h: Hypothesis, trial: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream((trial << 1) | h.index());
        rng
    }

    fn run_trial(&self, h: Hypothesis, trial: u64, buf: &mut [u8]) -> u8 {
        let mut rng = self.rng_for(h, trial);
        for slot in buf.iter_mut() {
            *slot = if rng.gen_bool(self.leaf.q) {
                SILENT
            } else {
                let says_one = match h {
                    Hypothesis::H0 => rng.gen_bool(self.leaf.alpha),
                    Hypothesis::H1 => !rng.gen_bool(self.leaf.beta),
                };
                if says_one {
                    SAYS_ONE
                } else {
                    SAYS_ZERO
                }
            };
        }
        let mut width = buf.len();
        for rule in self.rules {
            width /= 2;
            for i in 0..width {
                buf[i] = match (buf[2 * i], buf[2 * i + 1]) {
                    (SILENT, m) | (m, SILENT) => m,
                    (a, b) => {
                        if rule.combine(a == SAYS_ONE, b == SAYS_ONE) {
                            SAYS_ONE
                        } else {
                            SAYS_ZERO
                        }
                    }
                };
            }
        }
        buf[0]
    }

    fn tally(&self, h: Hypothesis, trials: u64) -> Tally {
        let leaves = 1usize << self.rules.len();
        let blocks = trials.div_ceil(TRIALS_PER_BLOCK);
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut buf = vec![SILENT; leaves];
                let mut tally = Tally::default();
                let end = ((b + 1) * TRIALS_PER_BLOCK).min(trials);
                for trial in b * TRIALS_PER_BLOCK..end {
                    match self.run_trial(h, trial, &mut buf) {
                        SILENT => tally.no_data += 1,
                        SAYS_ONE => tally.says_one += 1,
                        _ => tally.says_zero += 1,
                    }
                }
                tally
            })
            .reduce(Tally::default, |a, b| a + b)
    }
}

fn estimate(errors: u64, effective: u64) -> (f64, f64) {
    if effective == 0 {
        return (0.0, f64::INFINITY);
    }
    let p = errors as f64 / effective as f64;
    (p, (p * (1.0 - p) / effective as f64).sqrt())
}

/// Message-level Monte Carlo of the relay tree.
///
/// Leaves fail with probability `q0`, otherwise emit a bit that is wrong
/// with probability `alpha0` (under H0) or `beta0` (under H1). Relays forward
/// a lone message and fuse two with the level's design-time rule. Trials where
/// the root receives nothing are counted but excluded from the estimates.
/// Results depend only on `seed`, not on the thread count.
pub fn simulate_monte_carlo(
    initial: ErrorTriplet,
    height: u32,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    if trials > u64::MAX >> 1 {
        return Err(Error::InvalidParameter(format!(
            "too many trials: {trials}"
        )));
    }
    if height > MAX_SIMULATION_HEIGHT {
        return Err(Error::HeightTooLarge(height, MAX_SIMULATION_HEIGHT));
    }
    let rules = super::derive_level_rules(initial, height)?;
    let sampler = Sampler {
        leaf: initial,
        rules: &rules,
        base: ChaCha8Rng::from_seed(key_from_seed(seed)),
    };
    let h0 = sampler.tally(Hypothesis::H0, trials);
    let h1 = sampler.tally(Hypothesis::H1, trials);
    let (alpha_hat, alpha_stderr) = estimate(h0.says_one, h0.says_one + h0.says_zero);
    let (beta_hat, beta_stderr) = estimate(h1.says_zero, h1.says_one + h1.says_zero);
    Ok(SimulationReport {
        trials_per_hypothesis: trials,
        seed,
        alpha_hat,
        beta_hat,
        alpha_stderr,
        beta_stderr,
        no_data_h0: h0.no_data,
        no_data_h1: h1.no_data,
        level_rules: rules,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(alpha: f64, beta: f64, q: f64) -> ErrorTriplet {
        ErrorTriplet { alpha, beta, q }
    }

    #[test]
    fn perfect_sensors_never_err() {
        for h in [0, 1, 4] {
            let r = simulate_monte_carlo(t(0.0, 0.0, 0.5), h, 20_000, 7).unwrap();
            assert_eq!((r.alpha_hat, r.beta_hat), (0.0, 0.0));
            assert_eq!(r.alpha_stderr, 0.0);
        }
    }

    #[test]
    fn two_level_schedule_or_then_and() {
        let r = simulate_monte_carlo(t(0.1, 0.2, 0.0), 2, 1_000_000, 11).unwrap();
        assert_eq!(r.level_rules, vec![FusionRule::Or, FusionRule::And]);
        assert_eq!(r.no_data_count(), 0);
        assert!(
            (r.alpha_hat - 0.0361).abs() <= 4.0 * r.alpha_stderr,
            "{r:?}"
        );
        assert!((r.beta_hat - 0.0784).abs() <= 4.0 * r.beta_stderr, "{r:?}");
    }

    #[test]
    fn nearly_dead_sensors() {
        let q = 0.9999;
        let trials = 1_000_000;
        let r = simulate_monte_carlo(t(0.1, 0.2, q), 1, trials, 3).unwrap();
        let p = q * q;
        let sd = (p * (1.0 - p) / trials as f64).sqrt();
        let frac = r.no_data_h0 as f64 / trials as f64;
        assert!((frac - p).abs() <= 5.0 * sd, "{frac} vs {p}");
    }

    #[test]
    fn all_failed_root_has_no_estimate() {
        let r = simulate_monte_carlo(t(0.1, 0.2, 1.0), 2, 100, 0).unwrap();
        assert_eq!(r.no_data_count(), 200);
        assert_eq!(r.alpha_hat, 0.0);
        assert!(r.alpha_stderr.is_infinite());
    }

    #[test]
    fn seeded_and_thread_independent() {
        let init = t(0.1, 0.2, 0.3);
        let a = simulate_monte_carlo(init, 5, 30_000, 42).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| simulate_monte_carlo(init, 5, 30_000, 42).unwrap());
        assert_eq!(a, b);
        let c = simulate_monte_carlo(init, 5, 30_000, 43).unwrap();
        assert_ne!(a.alpha_hat, c.alpha_hat);
        assert_eq!(a.level_rules, c.level_rules);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            simulate_monte_carlo(t(0.1, 0.2, 0.3), 2, 0, 1),
            Err(Error::NoTrials)
        );
        assert!(matches!(
            simulate_monte_carlo(t(0.6, 0.5, 0.3), 2, 10, 1),
            Err(Error::OutsideDomain { .. })
        ));
        assert!(matches!(
            simulate_monte_carlo(t(0.1, 0.2, 0.3), 25, 10, 1),
            Err(Error::HeightTooLarge(25, _))
        ));
    }
}
