use std::collections::HashMap;

use crate::dynamics::{apply_rule, ErrorTriplet, FusionRule};
use crate::error::{Error, Result};

/// Largest tree height accepted by the enumerators.
pub const MAX_ENUMERATION_HEIGHT: u32 = 20;

/// Default bound on the number of candidate profiles formed at one level,
/// before equal error pairs are merged.
pub const DEFAULT_PROFILE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub alpha: f64,
    pub beta: f64,
    pub weight: f64,
}

/// Exact distribution of a node's error pair over leaf-failure patterns.
///
/// `p_no_data` is the probability the node receives nothing; each profile is
/// the error pair the node has for a family of failure patterns, weighted by
/// that family's probability. Profiles are sorted by `(alpha, beta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDistribution {
    pub p_no_data: f64,
    pub profiles: Vec<Profile>,
}

impl ProfileDistribution {
    fn leaf(initial: ErrorTriplet) -> Self {
        let profiles = if initial.q < 1.0 {
            vec![Profile {
                alpha: initial.alpha,
                beta: initial.beta,
                weight: 1.0 - initial.q,
            }]
        } else {
            Vec::new()
        };
        Self {
            p_no_data: initial.q,
            profiles,
        }
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// `p_no_data` plus all profile weights; 1 up to rounding.
    pub fn total_mass(&self) -> f64 {
        self.p_no_data + self.data_mass()
    }

    fn data_mass(&self) -> f64 {
        self.profiles.iter().map(|p| p.weight).sum()
    }

    /// Mean error pair conditioned on the node having data.
    pub fn conditional_mean(&self) -> Option<(f64, f64)> {
        let mass = self.data_mass();
        if mass == 0.0 {
            return None;
        }
        let (a, b) = self.profiles.iter().fold((0.0, 0.0), |(a, b), p| {
            (a + p.weight * p.alpha, b + p.weight * p.beta)
        });
        Some((a / mass, b / mass))
    }

    /// Distribution one level up: two independent copies of `self` fused by `rule`.
    fn fuse(&self, rule: FusionRule, level: u32, cap: usize) -> Result<Self> {
        let n = self.profiles.len() as u128;
        if n * (n + 1) / 2 + n > cap as u128 {
            return Err(Error::EnumerationInfeasible { level, cap });
        }
        let mut merged: HashMap<(u64, u64), Profile> = HashMap::new();
        let mut add = |alpha: f64, beta: f64, weight: f64| {
            merged
                .entry((alpha.to_bits(), beta.to_bits()))
                .and_modify(|p| p.weight += weight)
                .or_insert(Profile {
                    alpha,
                    beta,
                    weight,
                });
        };

        // exactly one child reports, in either order
        for p in &self.profiles {
            add(p.alpha, p.beta, 2.0 * self.p_no_data * p.weight);
        }
        for (i, a) in self.profiles.iter().enumerate() {
            for b in &self.profiles[i..] {
                let weight = if std::ptr::eq(a, b) {
                    a.weight * a.weight
                } else {
                    2.0 * a.weight * b.weight
                };
                let (alpha, beta) = apply_rule(rule, (a.alpha, a.beta), (b.alpha, b.beta));
                add(alpha, beta, weight);
            }
        }

        let mut profiles: Vec<Profile> = merged.into_values().filter(|p| p.weight > 0.0).collect();
        profiles.sort_by(|x, y| x.alpha.total_cmp(&y.alpha).then(x.beta.total_cmp(&y.beta)));
        Ok(Self {
            p_no_data: self.p_no_data * self.p_no_data,
            profiles,
        })
    }
}

fn check_height(height: u32) -> Result<()> {
    if height > MAX_ENUMERATION_HEIGHT {
        Err(Error::HeightTooLarge(height, MAX_ENUMERATION_HEIGHT))
    } else {
        Ok(())
    }
}

/// Root profile distribution by brute-force level-by-level combination.
pub fn exact_root_statistics(initial: ErrorTriplet, height: u32) -> Result<ProfileDistribution> {
    exact_root_statistics_with_cap(initial, height, DEFAULT_PROFILE_CAP)
}

pub fn exact_root_statistics_with_cap(
    initial: ErrorTriplet,
    height: u32,
    cap: usize,
) -> Result<ProfileDistribution> {
    check_height(height)?;
    let rules = super::derive_level_rules(initial, height)?;
    let mut dist = ProfileDistribution::leaf(initial);
    for (k, rule) in rules.into_iter().enumerate() {
        dist = dist.fuse(rule, k as u32 + 1, cap)?;
    }
    Ok(dist)
}

/// Exact root statistics from the distribution of the root's *message*.
///
/// Each node emits nothing, a 0 or a 1. Under each hypothesis the three
/// outcome probabilities of a parent follow from the nine joint outcomes of
/// its two independent children, so this runs in `O(height)` at any height.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageStatistics {
    pub p_no_data: f64,
    /// `P(root says 1 | H0, root has data)`; `None` when the root never has data.
    pub alpha: Option<f64>,
    /// `P(root says 0 | H1, root has data)`.
    pub beta: Option<f64>,
    /// `[P(none), P(0), P(1)]` at the root under H0 and H1.
    pub outcomes_h0: [f64; 3],
    pub outcomes_h1: [f64; 3],
}

const NONE: usize = 0;
const ZERO: usize = 1;
const ONE: usize = 2;

fn fuse_outcomes(child: &[f64; 3], rule: FusionRule) -> [f64; 3] {
    let mut parent = [0.0; 3];
    for (x, px) in child.iter().enumerate() {
        for (y, py) in child.iter().enumerate() {
            let out = match (x, y) {
                (NONE, other) | (other, NONE) => other,
                (x, y) => {
                    if rule.combine(x == ONE, y == ONE) {
                        ONE
                    } else {
                        ZERO
                    }
                }
            };
            parent[out] += px * py;
        }
    }
    parent
}

pub fn exact_message_statistics(initial: ErrorTriplet, height: u32) -> Result<MessageStatistics> {
    let rules = super::derive_level_rules(initial, height)?;
    let ErrorTriplet { alpha, beta, q } = initial;
    let mut h0 = [q, (1.0 - q) * (1.0 - alpha), (1.0 - q) * alpha];
    let mut h1 = [q, (1.0 - q) * beta, (1.0 - q) * (1.0 - beta)];
    for rule in rules {
        h0 = fuse_outcomes(&h0, rule);
        h1 = fuse_outcomes(&h1, rule);
    }
    let conditional = |num: f64, other: f64| {
        let mass = num + other;
        (mass > 0.0).then(|| num / mass)
    };
    Ok(MessageStatistics {
        p_no_data: h0[NONE],
        alpha: conditional(h0[ONE], h0[ZERO]),
        beta: conditional(h1[ZERO], h1[ONE]),
        outcomes_h0: h0,
        outcomes_h1: h1,
    })
}
