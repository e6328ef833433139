//! Seeded Monte Carlo estimates of expected social cost.
//!
//! Samples are split into fixed blocks of [`BLOCK_SIZE`]; block `b` draws
//! from ChaCha8 seeded with `seed` on stream `b`, so any split of blocks
//! across threads sees the same random numbers. Within a sample the
//! committee is drawn first, then one fair coin per tied issue in index
//! order. Social costs are integers, so block sums and sums of squares are
//! exact and the merged estimate does not depend on the reduction order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use serde_json::{json, Map};

use crate::error::{validation, Result};
use crate::exact_eval::{EvalMethod, EvalReport};
use crate::metrics::{cost_ratio, distance_matrix, optimal_cost_from_supports, CostRatio, DistanceMatrix};
use crate::profiles::PreferenceProfile;
use crate::rules::{
    delegation_weights_by, draw_committee, mindist_committee_probs, mindist_committee_rule, MinDistRule, Rule,
};

/// Samples per independently seeded block.
pub const BLOCK_SIZE: u64 = 1024;

/// Largest voter count for which the distance matrix is precomputed.
const DISTANCE_MATRIX_MAX_N: usize = 4096;

/// Sample mean of the social cost with its standard error and normal 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    /// `mean -/+ 1.96 std_error`
    pub ci95: (f64, f64),
    pub seed: u64,
}

impl McEstimate {
    pub fn contains(&self, value: f64) -> bool {
        self.ci95.0 <= value && value <= self.ci95.1
    }
}

impl Serialize for McEstimate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("McEstimate", 5)?;
        s.serialize_field("mean", &self.mean)?;
        s.serialize_field("std_error", &self.std_error)?;
        s.serialize_field("samples", &self.samples)?;
        s.serialize_field("ci95", &[self.ci95.0, self.ci95.1])?;
        s.serialize_field("seed", &self.seed)?;
        s.end()
    }
}

/// Everything a sampler needs that does not change between samples.
enum Prepared {
    Maj,
    Committee { k: usize, weighted: Option<Distances> },
    MinDist(MinDistRule),
}

enum Distances {
    Matrix(DistanceMatrix),
    OnDemand,
}

struct Sampler<'a> {
    profile: &'a PreferenceProfile,
    supports: Vec<usize>,
    prepared: Prepared,
}

impl<'a> Sampler<'a> {
    fn new(profile: &'a PreferenceProfile, rule: Rule, cap: u64) -> Result<Self> {
        let n = profile.voters();
        rule.validate_for(n)?;
        let prepared = match rule {
            Rule::Maj => Prepared::Maj,
            Rule::Rd => Prepared::Committee { k: 1, weighted: None },
            Rule::KMaj(k) => Prepared::Committee { k, weighted: None },
            Rule::KRep(k) => Prepared::Committee {
                k,
                weighted: Some(if n <= DISTANCE_MATRIX_MAX_N {
                    Distances::Matrix(distance_matrix(profile))
                } else {
                    Distances::OnDemand
                }),
            },
            // The argmin set is deterministic; only the pick among ties and the coins are random.
            Rule::MinDist(k) => Prepared::MinDist(mindist_committee_rule(profile, k, cap)?),
        };
        Ok(Sampler {
            profile,
            supports: profile.supports(),
            prepared,
        })
    }

    fn cost_of(&self, issue: usize, one: bool) -> u64 {
        let s = self.supports[issue];
        if one {
            (self.profile.voters() - s) as u64
        } else {
            s as u64
        }
    }

    /// Cost for per-issue probabilities in `{0, 1/2, 1}`, flipping coins on the halves.
    fn cost_from_probs(&self, probs: impl Iterator<Item = f64>, rng: &mut ChaCha8Rng) -> u64 {
        probs
            .enumerate()
            .map(|(j, p)| {
                let one = if p == 0.5 { rng.gen::<bool>() } else { p == 1.0 };
                self.cost_of(j, one)
            })
            .sum()
    }

    fn sample(&self, rng: &mut ChaCha8Rng, pool: &mut [usize]) -> u64 {
        let profile = self.profile;
        let m = profile.issues();
        match &self.prepared {
            Prepared::Maj => {
                let n = profile.voters();
                let probs = self.supports.iter().map(|&s| match (2 * s).cmp(&n) {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Less => 0.0,
                    std::cmp::Ordering::Equal => 0.5,
                });
                self.cost_from_probs(probs, rng)
            }
            Prepared::Committee { k, weighted: None } => {
                let members = draw_committee(rng, pool, *k).to_vec();
                let probs: Vec<f64> = (0..m)
                    .map(|j| {
                        let ones = members.iter().filter(|&&c| profile.get(c, j)).count();
                        match (2 * ones).cmp(k) {
                            std::cmp::Ordering::Greater => 1.0,
                            std::cmp::Ordering::Less => 0.0,
                            std::cmp::Ordering::Equal => 0.5,
                        }
                    })
                    .collect();
                self.cost_from_probs(probs.into_iter(), rng)
            }
            Prepared::Committee {
                k,
                weighted: Some(dist),
            } => {
                let members = draw_committee(rng, pool, *k).to_vec();
                let n = profile.voters();
                let weights = match dist {
                    Distances::Matrix(d) => delegation_weights_by(n, &members, |i, c| d.get(i, c)),
                    Distances::OnDemand => delegation_weights_by(n, &members, |i, c| profile.distance(i, c) as u32),
                };
                self.cost_from_probs(weights.outcome_probs(profile).into_iter(), rng)
            }
            Prepared::MinDist(rule) => {
                let pick = rng.gen_range(0..rule.committees.len());
                let probs = mindist_committee_probs(profile, &rule.committees[pick]);
                self.cost_from_probs(probs.into_iter(), rng)
            }
        }
    }
}

/// Block `b` of the sample stream: `(count, sum, sum of squares)`.
fn run_block(sampler: &Sampler<'_>, seed: u64, block: u64, count: u64) -> (u64, u128, u128) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let mut pool: Vec<usize> = (0..sampler.profile.voters()).collect();
    let mut sum = 0u128;
    let mut sum_sq = 0u128;
    for _ in 0..count {
        let x = sampler.sample(&mut rng, &mut pool) as u128;
        sum += x;
        sum_sq += x * x;
    }
    (count, sum, sum_sq)
}

fn estimate(samples: u64, sum: u128, sum_sq: u128, seed: u64) -> McEstimate {
    let nf = samples as f64;
    let mean = sum as f64 / nf;
    // N * sum_sq - sum^2 is exact when it fits; otherwise fall back to floats.
    let centered = (samples as u128)
        .checked_mul(sum_sq)
        .and_then(|a| sum.checked_mul(sum).map(|b| (a - b) as f64))
        .unwrap_or_else(|| (nf * sum_sq as f64 - (sum as f64).powi(2)).max(0.0));
    let variance = centered / (nf * (nf - 1.0));
    let std_error = (variance / nf).sqrt();
    McEstimate {
        mean,
        std_error,
        samples,
        ci95: (mean - 1.96 * std_error, mean + 1.96 * std_error),
        seed,
    }
}

/// Monte Carlo estimate of the expected social cost of `rule` on `profile`.
///
/// Deterministic given `seed`, independent of the rayon pool size.
pub fn mc_expected_cost(profile: &PreferenceProfile, rule: Rule, samples: u64, seed: u64) -> Result<McEstimate> {
    mc_expected_cost_with_cap(profile, rule, samples, seed, crate::Caps::default().enumeration_cap)
}

/// As [`mc_expected_cost`]; `cap` bounds the committee enumeration of the min-distance rule.
pub fn mc_expected_cost_with_cap(profile: &PreferenceProfile, rule: Rule, samples: u64, seed: u64, cap: u64) -> Result<McEstimate> {
    if samples < 2 {
        return Err(validation(format!("need at least 2 samples, got {samples}")));
    }
    let sampler = Sampler::new(profile, rule, cap)?;
    let blocks = samples.div_ceil(BLOCK_SIZE);
    let (sum, sum_sq) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let count = BLOCK_SIZE.min(samples - b * BLOCK_SIZE);
            let (_, s, sq) = run_block(&sampler, seed, b, count);
            (s, sq)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(estimate(samples, sum, sum_sq, seed))
}

/// Estimated cost together with its ratio to the exact optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McRatio {
    pub estimate: McEstimate,
    pub optimal_cost: f64,
    pub ratio: CostRatio,
}

pub fn mc_ratio(profile: &PreferenceProfile, rule: Rule, samples: u64, seed: u64) -> Result<McRatio> {
    let estimate = mc_expected_cost(profile, rule, samples, seed)?;
    let optimal_cost = optimal_cost_from_supports(&profile.supports(), profile.voters()) as f64;
    Ok(McRatio {
        estimate,
        optimal_cost,
        ratio: cost_ratio(estimate.mean, optimal_cost)?,
    })
}

/// The estimate packaged as an [`EvalReport`] with replay metadata in `detail`.
pub fn mc_report(profile: &PreferenceProfile, rule: Rule, samples: u64, seed: u64, cap: u64) -> Result<EvalReport> {
    let est = mc_expected_cost_with_cap(profile, rule, samples, seed, cap)?;
    let optimal = optimal_cost_from_supports(&profile.supports(), profile.voters()) as f64;
    let mut detail = Map::new();
    detail.insert("rule".into(), json!(rule));
    detail.insert("samples".into(), json!(est.samples));
    detail.insert("seed".into(), json!(est.seed));
    detail.insert("std_error".into(), json!(est.std_error));
    detail.insert("ci95".into(), json!([est.ci95.0, est.ci95.1]));
    EvalReport::new(est.mean, optimal, EvalMethod::MonteCarlo, detail)
}
