//! Exact expected costs and approximation ratios.

mod hypergeom;
mod optimality;
mod scan;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub use hypergeom::{
    hypergeom_pmf, hypergeom_pmf_exact, hypergeom_pmf_with, p_committee_selects_one,
    p_committee_selects_one_with, HypergeomParams,
};
pub use optimality::{
    optimal_issue_wise_thresholds, optimality_check, pair_cost, Deviation, OptimalityCheck,
    Threshold, ThresholdReport,
};
pub use scan::{
    ar_one_issue_kmaj, ar_one_issue_kmaj_exact, ar_one_issue_kmaj_many, one_issue_ratio_exact,
    selects_one_curve, selects_one_exact, OneIssueAr, ANCHOR_EVERY,
};

use crate::combin::{binomial_u64, factorial_u64, next_permutation, Combinations};
use crate::config::Caps;
use crate::error::{validation, Error, Result};
use crate::metrics::{cost_ratio, distance_matrix, optimal_cost_from_supports, CostRatio};
use crate::profiles::PreferenceProfile;
use crate::rules::{delegation_weights_from, mindist_committee_rule, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMethod {
    ExactHypergeometric,
    ExactEnumeration,
    MonteCarlo,
}

/// Expected and optimal cost of a rule on one profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub expected_cost: f64,
    pub optimal_cost: f64,
    pub ratio: CostRatio,
    pub method: EvalMethod,
    pub detail: Map<String, Value>,
}

impl EvalReport {
    pub(crate) fn new(expected_cost: f64, optimal_cost: f64, method: EvalMethod, detail: Map<String, Value>) -> Result<Self> {
        Ok(EvalReport {
            expected_cost,
            optimal_cost,
            ratio: cost_ratio(expected_cost, optimal_cost)?,
            method,
            detail,
        })
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(validation(format!("committee size k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    Ok(())
}

/// Distinct issue supports with their multiplicities, in increasing support order.
fn support_histogram(profile: &PreferenceProfile) -> BTreeMap<usize, u64> {
    let mut hist = BTreeMap::new();
    for s in profile.supports() {
        *hist.entry(s).or_insert(0) += 1;
    }
    hist
}

/// Exact expected cost of k-sortition through the hypergeometric law.
///
/// Expectations decompose over issues even though one committee votes on
/// all of them: `E[SC] = sum_j (1 - pi_j) n1_j + pi_j (n - n1_j)`.
pub fn kmaj_expected_cost_exact(profile: &PreferenceProfile, k: usize) -> Result<EvalReport> {
    kmaj_expected_cost_exact_with(profile, k, &Caps::default())
}

pub fn kmaj_expected_cost_exact_with(profile: &PreferenceProfile, k: usize, caps: &Caps) -> Result<EvalReport> {
    let n = profile.voters();
    check_k(n, k)?;
    let hist = support_histogram(profile);
    let mut expected = 0.0;
    for (&s, &count) in &hist {
        let params = HypergeomParams::new(n as u64, s as u64, k as u64)?;
        let pi = p_committee_selects_one_with(params, caps.exact_binomial_max_n);
        expected += count as f64 * ((1.0 - pi) * s as f64 + pi * (n - s) as f64);
    }
    let optimal = optimal_cost_from_supports(&profile.supports(), n) as f64;
    let mut detail = Map::new();
    detail.insert("k".into(), json!(k));
    detail.insert("distinct_supports".into(), json!(hist.len()));
    EvalReport::new(expected, optimal, EvalMethod::ExactHypergeometric, detail)
}

/// Exact rational ratio of k-sortition; `None` encodes `C / 0 = inf`.
pub fn kmaj_ratio_rational(profile: &PreferenceProfile, k: usize) -> Result<Option<BigRational>> {
    let n = profile.voters();
    check_k(n, k)?;
    let mut expected = BigRational::zero();
    let mut optimal = 0u64;
    for (&s, &count) in &support_histogram(profile) {
        let pi = selects_one_exact(n as u64, s as u64, k as u64)?;
        let one = BigRational::from_integer(BigInt::from(1));
        let cost = (one - &pi) * BigInt::from(s) + pi * BigInt::from(n - s);
        expected += cost * BigInt::from(count);
        optimal += count * s.min(n - s) as u64;
    }
    Ok(if optimal > 0 {
        Some(expected / BigInt::from(optimal))
    } else if expected.is_zero() {
        Some(BigRational::from_integer(BigInt::from(1)))
    } else {
        None
    })
}

/// Committee rules the enumeration oracle understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommitteeRule {
    KMaj,
    KRep,
}

/// Average of the per-committee expected cost over all `C(n, k)` committees.
///
/// Every per-committee outcome probability is 0, 1/2 or 1, so twice the
/// per-committee cost is an integer; sums are kept exact and the reduction
/// is independent of how the work is split.
pub fn enumerate_expected_cost(profile: &PreferenceProfile, k: usize, rule: CommitteeRule, cap: u64) -> Result<EvalReport> {
    let n = profile.voters();
    check_k(n, k)?;
    let count = committee_count_within(n, k, cap)?;
    let supports = profile.supports();
    let m = profile.issues();
    let dist = match rule {
        CommitteeRule::KRep => Some(distance_matrix(profile)),
        CommitteeRule::KMaj => None,
    };
    let twice_total: u128 = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut acc = 0u128;
            for members in Combinations::with_first(n, k, first) {
                let weights = dist.as_ref().map(|d| delegation_weights_from(d, &members));
                let probs: Vec<f64> = match &weights {
                    Some(w) => w.outcome_probs(profile),
                    None => (0..m)
                        .map(|j| {
                            let ones = members.iter().filter(|&&c| profile.get(c, j)).count();
                            match (2 * ones).cmp(&k) {
                                std::cmp::Ordering::Greater => 1.0,
                                std::cmp::Ordering::Less => 0.0,
                                std::cmp::Ordering::Equal => 0.5,
                            }
                        })
                        .collect(),
                };
                for (&s, &p) in supports.iter().zip(&probs) {
                    let twice_p = (2.0 * p) as u128;
                    acc += twice_p * (n - s) as u128 + (2 - twice_p) * s as u128;
                }
            }
            acc
        })
        .sum();
    let expected = twice_total as f64 / (2.0 * count as f64);
    let optimal = optimal_cost_from_supports(&supports, n) as f64;
    let mut detail = Map::new();
    detail.insert("rule".into(), json!(rule));
    detail.insert("k".into(), json!(k));
    detail.insert("committees".into(), json!(count));
    EvalReport::new(expected, optimal, EvalMethod::ExactEnumeration, detail)
}

fn committee_count_within(n: usize, k: usize, cap: u64) -> Result<u64> {
    let count = binomial_u64(n as u64, k as u64);
    match count {
        Some(c) if c <= cap => Ok(c),
        _ => Err(Error::ResourceLimit(format!(
            "C({n}, {k}) = {} committees exceeds the enumeration cap {cap}",
            count.map_or("more than 2^64".to_string(), |c| c.to_string())
        ))),
    }
}

/// Exact evaluation of any rule: hypergeometric for MAJ (`k = n`), RD
/// (`k = 1`) and k-sortition; enumeration for the other committee rules.
pub fn evaluate_exact(profile: &PreferenceProfile, rule: Rule, caps: &Caps) -> Result<EvalReport> {
    let n = profile.voters();
    rule.validate_for(n)?;
    let mut report = match rule {
        Rule::Maj => kmaj_expected_cost_exact_with(profile, n, caps)?,
        Rule::Rd => kmaj_expected_cost_exact_with(profile, 1, caps)?,
        Rule::KMaj(k) => kmaj_expected_cost_exact_with(profile, k, caps)?,
        Rule::KRep(k) => enumerate_expected_cost(profile, k, CommitteeRule::KRep, caps.enumeration_cap)?,
        Rule::MinDist(k) => {
            let r = mindist_committee_rule(profile, k, caps.enumeration_cap)?;
            let optimal = optimal_cost_from_supports(&profile.supports(), n) as f64;
            let mut detail = Map::new();
            detail.insert("k".into(), json!(k));
            detail.insert("argmin_committees".into(), json!(r.committees.len()));
            detail.insert("min_total_distance".into(), json!(r.min_total_distance));
            EvalReport::new(r.expected_cost(profile), optimal, EvalMethod::ExactEnumeration, detail)?
        }
    };
    report.detail.insert("rule".into(), serde_json::to_value(rule).expect("rule serializes"));
    Ok(report)
}

/// Largest voter count whose `n!` permutations are averaged exactly.
pub const EXACT_PERMUTATION_MAX_N: usize = 7;

/// Average of `cost(profile permuted)` over voter permutations.
///
/// All `n!` permutations for `n <= 7` (then `samples` and `seed` are
/// unused); otherwise `samples` uniform permutations drawn from `seed`.
/// An anonymous rule returns its unpermuted cost.
pub fn permutation_average_cost<F>(profile: &PreferenceProfile, cost: F, samples: usize, seed: u64) -> Result<f64>
where
    F: Fn(&PreferenceProfile) -> Result<f64>,
{
    if samples == 0 {
        return Err(validation("samples must be at least 1"));
    }
    let n = profile.voters();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    if n <= EXACT_PERMUTATION_MAX_N {
        loop {
            total += cost(&profile.permute_voters(&perm)?)?;
            if !next_permutation(&mut perm) {
                break;
            }
        }
        let count = factorial_u64(n).expect("7! fits in u64");
        Ok(total / count as f64)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            perm.shuffle(&mut rng);
            total += cost(&profile.permute_voters(&perm)?)?;
        }
        Ok(total / samples as f64)
    }
}
