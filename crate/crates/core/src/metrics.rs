//! Hamming distance, social cost, the optimal outcome and the ratio convention.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{validation, Error, Result};
use crate::profiles::PreferenceProfile;

/// A decision on every issue.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct OutcomeVector(Vec<bool>);

impl OutcomeVector {
    pub fn new(bits: Vec<bool>) -> Self {
        OutcomeVector(bits)
    }

    /// From 0/1 values; anything else is rejected.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(validation(format!("outcome entry {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(OutcomeVector)
    }

    pub fn zeros(m: usize) -> Self {
        OutcomeVector(vec![false; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, issue: usize) -> bool {
        self.0[issue]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn complement(&self) -> Self {
        OutcomeVector(self.0.iter().map(|b| !b).collect())
    }

    /// The row of `voter` as an outcome vector.
    pub fn from_voter(profile: &PreferenceProfile, voter: usize) -> Self {
        OutcomeVector((0..profile.issues()).map(|j| profile.get(voter, j)).collect())
    }
}

pub fn hamming(a: &OutcomeVector, b: &OutcomeVector) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("vectors of length {} and {}", a.len(), b.len())));
    }
    Ok(a.0.iter().zip(&b.0).filter(|(x, y)| x != y).count())
}

/// `SC(z)`: the total distance from every voter to `z`.
pub fn social_cost(profile: &PreferenceProfile, z: &OutcomeVector) -> Result<u64> {
    if z.len() != profile.issues() {
        return Err(Error::Dimension(format!(
            "outcome has {} entries, profile has {} issues",
            z.len(),
            profile.issues()
        )));
    }
    Ok(cost_from_supports(&profile.supports(), profile.voters(), z))
}

/// Social cost of `z` given the per-issue supporter counts.
pub(crate) fn cost_from_supports(supports: &[usize], n: usize, z: &OutcomeVector) -> u64 {
    supports
        .iter()
        .zip(z.as_slice())
        .map(|(&s, &bit)| if bit { (n - s) as u64 } else { s as u64 })
        .sum()
}

/// Expected social cost of an issue-wise product distribution with
/// `Pr[z_j = 1] = probs[j]`.
pub fn expected_social_cost(profile: &PreferenceProfile, probs: &[f64]) -> Result<f64> {
    if probs.len() != profile.issues() {
        return Err(Error::Dimension(format!(
            "{} probabilities for {} issues",
            probs.len(),
            profile.issues()
        )));
    }
    Ok(expected_cost_from_supports(&profile.supports(), profile.voters(), probs))
}

pub(crate) fn expected_cost_from_supports(supports: &[usize], n: usize, probs: &[f64]) -> f64 {
    supports
        .iter()
        .zip(probs)
        .map(|(&s, &pr)| pr * (n - s) as f64 + (1.0 - pr) * s as f64)
        .sum()
}

/// The issue-wise majority vector and its cost `sum_j min(n1_j, n - n1_j)`.
///
/// Exact ties report 0; the cost is the same either way.
pub fn optimal_outcome(profile: &PreferenceProfile) -> (OutcomeVector, u64) {
    let n = profile.voters();
    let supports = profile.supports();
    let z = OutcomeVector(supports.iter().map(|&s| 2 * s > n).collect());
    (z, optimal_cost_from_supports(&supports, n))
}

pub(crate) fn optimal_cost_from_supports(supports: &[usize], n: usize) -> u64 {
    supports.iter().map(|&s| s.min(n - s) as u64).sum()
}

/// Symmetric `n x n` matrix of pairwise Hamming distances between voters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<u32>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> u32 {
        self.d[a * self.n + b]
    }

    pub fn row(&self, a: usize) -> &[u32] {
        &self.d[a * self.n..(a + 1) * self.n]
    }

    /// True when all off-diagonal entries are equal.
    pub fn is_equidistant(&self) -> bool {
        let first = if self.n > 1 { self.get(0, 1) } else { 0 };
        (0..self.n).all(|a| (0..self.n).all(|b| a == b || self.get(a, b) == first))
    }
}

pub fn distance_matrix(profile: &PreferenceProfile) -> DistanceMatrix {
    let n = profile.voters();
    let mut d = vec![0u32; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let v = profile.distance(a, b) as u32;
            d[a * n + b] = v;
            d[b * n + a] = v;
        }
    }
    DistanceMatrix { n, d }
}

/// Value of a cost ratio: finite, or the distinguished `+inf` of `C / 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioValue {
    Finite(f64),
    Infinite,
}

/// Expected over optimal cost with `0/0 = 1` and `C/0 = +inf` for `C > 0`.
///
/// Serializes as `{"num": .., "den": .., "value": number | "inf"}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostRatio {
    pub numerator: f64,
    pub denominator: f64,
    pub value: RatioValue,
}

impl CostRatio {
    pub fn is_infinite(&self) -> bool {
        self.value == RatioValue::Infinite
    }

    /// The value as a float, with the infinite case mapped to `f64::INFINITY`.
    pub fn value_f64(&self) -> f64 {
        match self.value {
            RatioValue::Finite(v) => v,
            RatioValue::Infinite => f64::INFINITY,
        }
    }
}

impl Serialize for CostRatio {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("CostRatio", 3)?;
        s.serialize_field("num", &self.numerator)?;
        s.serialize_field("den", &self.denominator)?;
        match self.value {
            RatioValue::Finite(v) => s.serialize_field("value", &v)?,
            RatioValue::Infinite => s.serialize_field("value", "inf")?,
        }
        s.end()
    }
}

pub fn cost_ratio(expected_cost: f64, optimal_cost: f64) -> Result<CostRatio> {
    if !(expected_cost >= 0.0) || !(optimal_cost >= 0.0) {
        return Err(validation(format!(
            "costs must be non-negative numbers, got {expected_cost} / {optimal_cost}"
        )));
    }
    let value = if optimal_cost > 0.0 {
        RatioValue::Finite(expected_cost / optimal_cost)
    } else if expected_cost == 0.0 {
        RatioValue::Finite(1.0)
    } else {
        RatioValue::Infinite
    };
    Ok(CostRatio {
        numerator: expected_cost,
        denominator: optimal_cost,
        value,
    })
}
