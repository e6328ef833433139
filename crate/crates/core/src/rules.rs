//! Voting rules as outcome distributions.
//!
//! Every rule here is issue-wise given its committee: the probability that
//! issue `j` is decided as 1 depends only on the committee members' column
//! `j` (and on the member weights, which may depend on all issues). Rules
//! are therefore described by per-issue probability vectors, which is all
//! the expected social cost needs.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::combin::{binomial_u64, Combinations};
use crate::error::{validation, Error, Result};
use crate::metrics::{distance_matrix, expected_cost_from_supports, DistanceMatrix};
use crate::profiles::PreferenceProfile;

/// Relative tolerance for ties between floating-point weight sums.
pub const WEIGHT_TIE_TOLERANCE: f64 = 1e-12;

/// The rules selectable by id: `maj`, `rd`, `kmaj`, `krep`, `mindist`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    /// Whole-population majority, ties decided by a fair coin.
    Maj,
    /// Random dictator: a uniformly random voter's row is the outcome.
    Rd,
    /// k-sortition: uniform size-`k` committee, simple majority per issue.
    KMaj(usize),
    /// Weighted k-sortition: uniform committee, weights from delegation to
    /// the closest members, weighted majority per issue.
    KRep(usize),
    /// The committee minimizing total distance to the voters, weighted by
    /// each member's total distance to the population.
    MinDist(usize),
}

impl Rule {
    pub fn id(&self) -> &'static str {
        match self {
            Rule::Maj => "maj",
            Rule::Rd => "rd",
            Rule::KMaj(_) => "kmaj",
            Rule::KRep(_) => "krep",
            Rule::MinDist(_) => "mindist",
        }
    }

    /// Resolves a rule id; committee rules need `k`.
    pub fn from_id(id: &str, k: Option<usize>) -> Result<Self> {
        let need_k = || k.ok_or_else(|| validation(format!("rule `{id}` needs a committee size k")));
        match id {
            "maj" => Ok(Rule::Maj),
            "rd" => Ok(Rule::Rd),
            "kmaj" => Ok(Rule::KMaj(need_k()?)),
            "krep" => Ok(Rule::KRep(need_k()?)),
            "mindist" => Ok(Rule::MinDist(need_k()?)),
            other => Err(validation(format!(
                "unknown rule id `{other}` (expected maj, rd, kmaj, krep, mindist)"
            ))),
        }
    }

    /// Committee size, if the rule uses one.
    pub fn committee_size(&self) -> Option<usize> {
        match *self {
            Rule::Maj => None,
            Rule::Rd => Some(1),
            Rule::KMaj(k) | Rule::KRep(k) | Rule::MinDist(k) => Some(k),
        }
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        match self.committee_size() {
            Some(k) if k == 0 || k > n => Err(validation(format!(
                "committee size k = {k} must satisfy 1 <= k <= n = {n}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.committee_size() {
            Some(k) if !matches!(self, Rule::Rd) => write!(f, "{}(k={k})", self.id()),
            _ => f.write_str(self.id()),
        }
    }
}

impl FromStr for Rule {
    type Err = Error;

    /// Accepts `maj`, `rd`, or `<id>:<k>` such as `kmaj:3`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((id, k)) => {
                let k = k.parse().map_err(|_| validation(format!("bad committee size in `{s}`")))?;
                Rule::from_id(id, Some(k))
            }
            None => Rule::from_id(s, None),
        }
    }
}

impl Serialize for Rule {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Rule", 2)?;
        s.serialize_field("id", self.id())?;
        s.serialize_field("k", &self.committee_size())?;
        s.end()
    }
}

/// A set of distinct voters, optionally with positive weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Committee {
    members: Vec<usize>,
    weights: Option<Vec<f64>>,
}

impl Committee {
    /// Sorts `members` and checks they are distinct indices below `n`.
    pub fn new(mut members: Vec<usize>, n: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(validation("a committee needs at least one member"));
        }
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(validation("committee members must be distinct"));
        }
        if let Some(&last) = members.last() {
            if last >= n {
                return Err(validation(format!("member {last} out of range for {n} voters")));
            }
        }
        Ok(Committee { members, weights: None })
    }

    /// Attaches weights given in the same order as the sorted members.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.members.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} members",
                weights.len(),
                self.members.len()
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(validation("committee weights must be positive and finite"));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// An inter-committee rule applied to one issue at a time.
#[derive(Debug, Clone, PartialEq)]
pub enum IssueWiseRule {
    /// (Weighted) majority; exact ties give probability 1/2.
    Majority,
    /// Anonymous unweighted rule `h_q`: probability of 1 when `q` of the `k`
    /// members support 1 (`table.len() == k + 1`).
    Table(Vec<f64>),
}

impl IssueWiseRule {
    /// Probability of outcome 1 when `supporters` of `k` unweighted members hold 1.
    pub fn prob_one_count(&self, supporters: usize, k: usize) -> f64 {
        match self {
            IssueWiseRule::Majority => majority_prob(2 * supporters as u128, k as u128),
            IssueWiseRule::Table(h) => h[supporters],
        }
    }

    /// Probability of outcome 1 given the weight behind 1 and the total weight.
    pub fn prob_one_weighted(&self, weight_one: f64, total: f64) -> f64 {
        match self {
            IssueWiseRule::Majority => float_majority_prob(weight_one, total),
            IssueWiseRule::Table(_) => panic!("table rules are defined on supporter counts only"),
        }
    }
}

#[inline]
fn majority_prob(twice_ones: u128, total: u128) -> f64 {
    match twice_ones.cmp(&total) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Less => 0.0,
        std::cmp::Ordering::Equal => 0.5,
    }
}

#[inline]
fn float_majority_prob(weight_one: f64, total: f64) -> f64 {
    let diff = 2.0 * weight_one - total;
    if diff.abs() <= WEIGHT_TIE_TOLERANCE * total.abs() {
        0.5
    } else if diff > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Whole-population majority: 1 above `n/2`, 0 below, 1/2 on a tie.
pub fn maj_outcome_probs(profile: &PreferenceProfile) -> Vec<f64> {
    let n = profile.voters() as u128;
    profile
        .supports()
        .into_iter()
        .map(|s| majority_prob(2 * s as u128, n))
        .collect()
}

/// Random dictator expected cost `(1/n) sum_i SC(x_i)`.
///
/// `sum_i SC(x_i)` is the sum of all pairwise distances, an exact integer.
pub fn rd_expected_cost(profile: &PreferenceProfile) -> f64 {
    let n = profile.voters();
    let total: u64 = profile
        .supports()
        .iter()
        .map(|&s| 2 * (s as u64) * (n - s) as u64)
        .sum();
    total as f64 / n as f64
}

/// Marginal `Pr[z_j = 1] = n1_j / n` of the random dictator.
pub fn rd_outcome_probs(profile: &PreferenceProfile) -> Vec<f64> {
    let n = profile.voters() as f64;
    profile.supports().into_iter().map(|s| s as f64 / n).collect()
}

/// Draws `k` distinct indices by a partial Fisher-Yates shuffle of `pool`.
///
/// `pool` must hold a permutation of `0..n`; it is left permuted, which does
/// not bias later draws. The returned slice is in draw order.
pub(crate) fn draw_committee<'a, R: Rng + ?Sized>(rng: &mut R, pool: &'a mut [usize], k: usize) -> &'a [usize] {
    let n = pool.len();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    &pool[..k]
}

/// A uniformly random size-`k` committee, deterministic given the seed.
pub fn sample_committee_uniform(n: usize, k: usize, seed: u64) -> Result<Committee> {
    if k == 0 || k > n {
        return Err(validation(format!("committee size k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..n).collect();
    let members = draw_committee(&mut rng, &mut pool, k).to_vec();
    Committee::new(members, n)
}

/// Per-issue probability of outcome 1 under (weighted) majority of the committee.
pub fn committee_majority_probs(profile: &PreferenceProfile, committee: &Committee) -> Result<Vec<f64>> {
    check_members(profile, committee.members())?;
    let members = committee.members();
    Ok(match committee.weights() {
        None => (0..profile.issues())
            .map(|j| {
                let ones = members.iter().filter(|&&c| profile.get(c, j)).count();
                majority_prob(2 * ones as u128, members.len() as u128)
            })
            .collect(),
        Some(w) => {
            let total: f64 = w.iter().sum();
            (0..profile.issues())
                .map(|j| {
                    let ones: f64 = members
                        .iter()
                        .zip(w)
                        .filter(|(&c, _)| profile.get(c, j))
                        .map(|(_, &wc)| wc)
                        .sum();
                    float_majority_prob(ones, total)
                })
                .collect()
        }
    })
}

/// Applies an unweighted issue-wise rule to the committee on every issue.
pub fn committee_rule_probs(profile: &PreferenceProfile, members: &[usize], rule: &IssueWiseRule) -> Result<Vec<f64>> {
    check_members(profile, members)?;
    if let IssueWiseRule::Table(h) = rule {
        if h.len() != members.len() + 1 {
            return Err(Error::Dimension(format!(
                "threshold table has {} entries for a committee of {}",
                h.len(),
                members.len()
            )));
        }
    }
    Ok((0..profile.issues())
        .map(|j| {
            let ones = members.iter().filter(|&&c| profile.get(c, j)).count();
            rule.prob_one_count(ones, members.len())
        })
        .collect())
}

fn check_members(profile: &PreferenceProfile, members: &[usize]) -> Result<()> {
    if members.is_empty() {
        return Err(validation("a committee needs at least one member"));
    }
    if let Some(&bad) = members.iter().find(|&&c| c >= profile.voters()) {
        return Err(validation(format!("member {bad} out of range for {} voters", profile.voters())));
    }
    Ok(())
}

/// Delegation weights of committee members.
///
/// Every voter, members included, splits one unit of weight equally among
/// its closest members, so the weights sum to `n`. Weights are kept exactly
/// as integer multiples of `1 / scale`, where `scale` is the lcm of the tie
/// sizes that occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct DelegationWeights {
    members: Vec<usize>,
    repr: WeightRepr,
}

#[derive(Debug, Clone, PartialEq)]
enum WeightRepr {
    Exact { scale: u128, units: Vec<u128> },
    // Only reached if the exact scale overflows u128.
    Approx(Vec<f64>),
}

impl DelegationWeights {
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn values(&self) -> Vec<f64> {
        match &self.repr {
            WeightRepr::Exact { scale, units } => units.iter().map(|&u| u as f64 / *scale as f64).collect(),
            WeightRepr::Approx(v) => v.clone(),
        }
    }

    /// Exact weights as `(numerators, common denominator)` when available.
    pub fn exact(&self) -> Option<(&[u128], u128)> {
        match &self.repr {
            WeightRepr::Exact { scale, units } => Some((units, *scale)),
            WeightRepr::Approx(_) => None,
        }
    }

    pub fn total(&self) -> f64 {
        match &self.repr {
            WeightRepr::Exact { scale, units } => units.iter().sum::<u128>() as f64 / *scale as f64,
            WeightRepr::Approx(v) => v.iter().sum(),
        }
    }

    /// Weighted-majority probability of 1 on `issue`.
    fn prob_one(&self, profile: &PreferenceProfile, issue: usize) -> f64 {
        match &self.repr {
            WeightRepr::Exact { units, .. } => {
                let mut ones = 0u128;
                let mut total = 0u128;
                for (&c, &u) in self.members.iter().zip(units) {
                    total += u;
                    if profile.get(c, issue) {
                        ones += u;
                    }
                }
                majority_prob(2 * ones, total)
            }
            WeightRepr::Approx(v) => {
                let total: f64 = v.iter().sum();
                let ones: f64 = self
                    .members
                    .iter()
                    .zip(v)
                    .filter(|(&c, _)| profile.get(c, issue))
                    .map(|(_, &w)| w)
                    .sum();
                float_majority_prob(ones, total)
            }
        }
    }

    /// Weighted-majority probabilities on every issue.
    pub fn outcome_probs(&self, profile: &PreferenceProfile) -> Vec<f64> {
        (0..profile.issues()).map(|j| self.prob_one(profile, j)).collect()
    }
}

/// Delegation weights of `members` computed from the profile's distances.
pub fn delegation_weights(profile: &PreferenceProfile, members: &[usize]) -> Result<DelegationWeights> {
    check_members(profile, members)?;
    let dist = distance_matrix(profile);
    Ok(delegation_weights_from(&dist, members))
}

/// Delegation weights from a precomputed distance matrix; `members` must be valid.
pub fn delegation_weights_from(dist: &DistanceMatrix, members: &[usize]) -> DelegationWeights {
    delegation_weights_by(dist.len(), members, |i, c| dist.get(i, c))
}

/// Delegation weights for `n` voters with distances supplied by `dist(voter, member)`.
pub(crate) fn delegation_weights_by(n: usize, members: &[usize], dist: impl Fn(usize, usize) -> u32) -> DelegationWeights {
    let mut closest: Vec<(u32, u32)> = Vec::with_capacity(n);
    let mut scale: Option<u128> = Some(1);
    for i in 0..n {
        let mut best = u32::MAX;
        let mut count = 0u32;
        for &c in members {
            let d = dist(i, c);
            if d < best {
                best = d;
                count = 1;
            } else if d == best {
                count += 1;
            }
        }
        closest.push((best, count));
        scale = scale.and_then(|s| {
            let l = s.lcm(&(count as u128));
            // Leave room for summing n shares of size `scale`.
            l.checked_mul(n as u128).map(|_| l)
        });
    }

    let repr = match scale {
        Some(scale) => {
            let mut units = vec![0u128; members.len()];
            for (i, &(best, count)) in closest.iter().enumerate() {
                let share = scale / count as u128;
                for (slot, &c) in members.iter().enumerate() {
                    if dist(i, c) == best {
                        units[slot] += share;
                    }
                }
            }
            WeightRepr::Exact { scale, units }
        }
        None => {
            let mut w = vec![0f64; members.len()];
            for (i, &(best, count)) in closest.iter().enumerate() {
                for (slot, &c) in members.iter().enumerate() {
                    if dist(i, c) == best {
                        w[slot] += 1.0 / count as f64;
                    }
                }
            }
            WeightRepr::Approx(w)
        }
    };
    DelegationWeights {
        members: members.to_vec(),
        repr,
    }
}

/// Weighted k-sortition outcome probabilities for a fixed committee.
pub fn krep_outcome_probs(profile: &PreferenceProfile, members: &[usize]) -> Result<Vec<f64>> {
    Ok(delegation_weights(profile, members)?.outcome_probs(profile))
}

/// The min-total-distance committee rule: uniform over the committees `C`
/// minimizing `sum_i min_{c in C} d(x_i, x_c)`, each weighted by
/// `w_c = sum_i d(x_i, x_c)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinDistRule {
    pub k: usize,
    /// The argmin committees, each carrying its distance-sum weights.
    pub committees: Vec<Committee>,
    pub min_total_distance: u64,
}

impl MinDistRule {
    /// Marginal `Pr[z_j = 1]`, averaged uniformly over the argmin committees.
    pub fn outcome_probs(&self, profile: &PreferenceProfile) -> Vec<f64> {
        let mut acc = vec![0f64; profile.issues()];
        for c in &self.committees {
            for (a, p) in acc.iter_mut().zip(mindist_committee_probs(profile, c)) {
                *a += p;
            }
        }
        let count = self.committees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= count);
        acc
    }

    pub fn expected_cost(&self, profile: &PreferenceProfile) -> f64 {
        expected_cost_from_supports(&profile.supports(), profile.voters(), &self.outcome_probs(profile))
    }
}

/// Integer distance-sum weights of one argmin committee, by member.
fn mindist_weights(c: &Committee) -> Vec<u64> {
    c.weights()
        .map(|w| w.iter().map(|&x| x as u64).collect())
        .unwrap_or_else(|| vec![0; c.size()])
}

/// Weighted majority with integer distance-sum weights; all-zero weights
/// fall back to the unweighted majority of the members.
pub(crate) fn mindist_committee_probs(profile: &PreferenceProfile, c: &Committee) -> Vec<f64> {
    let w = mindist_weights(c);
    let total: u64 = w.iter().sum();
    (0..profile.issues())
        .map(|j| {
            if total == 0 {
                let ones = c.members().iter().filter(|&&m| profile.get(m, j)).count();
                majority_prob(2 * ones as u128, c.size() as u128)
            } else {
                let ones: u64 = c
                    .members()
                    .iter()
                    .zip(&w)
                    .filter(|(&m, _)| profile.get(m, j))
                    .map(|(_, &x)| x)
                    .sum();
                majority_prob(2 * ones as u128, total as u128)
            }
        })
        .collect()
}

/// Enumerates all `C(n, k)` committees (at most `cap`) to find the argmin set.
pub fn mindist_committee_rule(profile: &PreferenceProfile, k: usize, cap: u64) -> Result<MinDistRule> {
    let n = profile.voters();
    Rule::MinDist(k).validate_for(n)?;
    let count = binomial_u64(n as u64, k as u64).unwrap_or(u64::MAX);
    if count > cap {
        return Err(Error::ResourceLimit(format!(
            "C({n}, {k}) = {} committees exceeds the enumeration cap {cap}",
            if count == u64::MAX { "more than 2^64".to_string() } else { count.to_string() }
        )));
    }
    let dist = distance_matrix(profile);
    let mut best = u64::MAX;
    let mut argmin: Vec<Vec<usize>> = Vec::new();
    for members in Combinations::new(n, k) {
        let total: u64 = (0..n)
            .map(|i| members.iter().map(|&c| dist.get(i, c)).min().unwrap_or(0) as u64)
            .sum();
        if total < best {
            best = total;
            argmin.clear();
        }
        if total == best {
            argmin.push(members);
        }
    }
    let committees = argmin
        .into_iter()
        .map(|members| {
            let weights: Vec<f64> = members
                .iter()
                .map(|&c| dist.row(c).iter().map(|&d| d as u64).sum::<u64>() as f64)
                .collect();
            let committee = Committee::new(members, n)?;
            // Zero weights are legal here (the rule's weights are distances), so bypass
            // the positivity check of `with_weights`.
            Ok(Committee {
                weights: Some(weights),
                ..committee
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MinDistRule {
        k,
        committees,
        min_total_distance: best,
    })
}
