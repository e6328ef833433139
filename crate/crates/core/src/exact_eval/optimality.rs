//! Optimal anonymous issue-wise committee rule on the equidistant worst case.
//!
//! For the equidistant profile `X` with support `n1 < n/2` and its
//! complement `X'`, a committee holding `q` supporters of 1 occurs with
//! weight `a_q = C(n1, q) C(n - n1, k - q)` in `X` and
//! `b_q = C(n - n1, q) C(n1, k - q)` in `X'`. The objective
//! `SC(g(X)) + SC(g(X'))` is linear in each `h_q` with slope proportional
//! to `(n - 2 n1)(a_q - b_q)`, so the minimizer sets `h_q = 0` where
//! `a_q > b_q`, `h_q = 1` where `a_q < b_q`, and is indifferent on ties.

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::hypergeom::{binomial_big, ratio_to_f64};
use crate::error::{validation, Result};

/// Optimal probability of outcome 1 for a committee count `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threshold {
    Zero,
    One,
    /// Both choices give the same objective.
    Free,
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threshold::Zero => serializer.serialize_u8(0),
            Threshold::One => serializer.serialize_u8(1),
            Threshold::Free => serializer.serialize_str("free"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub n: u64,
    pub n1: u64,
    pub k: u64,
    /// Indexed by `q = 0..=k`.
    pub thresholds: Vec<Threshold>,
    /// Counts `q != k/2` where the optimum contradicts simple majority.
    pub deviations: Vec<u64>,
    /// Counts `q != k/2` left free because both weights vanish.
    pub free_off_center: Vec<u64>,
}

impl ThresholdReport {
    pub fn matches_majority(&self) -> bool {
        self.deviations.is_empty()
    }
}

fn weights(n: u64, n1: u64, k: u64, q: u64) -> (BigUint, BigUint) {
    let a = binomial_big(n1, q) * binomial_big(n - n1, k - q);
    let b = binomial_big(n - n1, q) * binomial_big(n1, k - q);
    (a, b)
}

/// Minimizes `SC(g(X)) + SC(g(X'))` over anonymous issue-wise thresholds `h_q`.
pub fn optimal_issue_wise_thresholds(n: u64, n1: u64, k: u64) -> Result<ThresholdReport> {
    if n1 == 0 || 2 * n1 > n {
        return Err(validation(format!("need 1 <= n1 <= n/2, got n={n}, n1={n1}")));
    }
    if k == 0 || k > n {
        return Err(validation(format!("committee size k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    let mut thresholds = Vec::with_capacity(k as usize + 1);
    let mut deviations = Vec::new();
    let mut free_off_center = Vec::new();
    for q in 0..=k {
        let (a, b) = weights(n, n1, k, q);
        let t = match a.cmp(&b) {
            std::cmp::Ordering::Greater => Threshold::Zero,
            std::cmp::Ordering::Less => Threshold::One,
            std::cmp::Ordering::Equal => Threshold::Free,
        };
        if 2 * q != k {
            let majority = if 2 * q < k { Threshold::Zero } else { Threshold::One };
            match t {
                Threshold::Free => free_off_center.push(q),
                t if t != majority => deviations.push(q),
                _ => {}
            }
        }
        thresholds.push(t);
    }
    // Equal supports make X and X' the same profile: every count is a tie.
    debug_assert!(2 * n1 != n || thresholds.iter().all(|&t| t == Threshold::Free));
    Ok(ThresholdReport {
        n,
        n1,
        k,
        thresholds,
        deviations,
        free_off_center,
    })
}

/// `(SC(g(X)) + SC(g(X'))) / m` for the rule `h` (with `h.len() == k + 1`).
pub fn pair_cost(n: u64, n1: u64, k: u64, h: &[f64]) -> Result<f64> {
    if h.len() as u64 != k + 1 {
        return Err(validation(format!("threshold table needs k + 1 = {} entries", k + 1)));
    }
    if 2 * n1 > n || k == 0 || k > n {
        return Err(validation(format!("invalid (n, n1, k) = ({n}, {n1}, {k})")));
    }
    let total = binomial_big(n, k);
    let (n0, n1f) = ((n - n1) as f64, n1 as f64);
    let mut acc = 0.0;
    for (q, &hq) in (0..=k).zip(h) {
        let (a, b) = weights(n, n1, k, q);
        let (a, b) = (ratio_to_f64(&a, &total), ratio_to_f64(&b, &total));
        acc += a * (n0 * hq + n1f * (1.0 - hq)) + b * (n1f * hq + n0 * (1.0 - hq));
    }
    Ok(acc)
}

/// One off-center disagreement found by [`optimality_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Deviation {
    pub n: u64,
    pub n1: u64,
    pub k: u64,
    pub q: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptimalityCheck {
    pub n_max: u64,
    pub k_max: u64,
    /// `(n, n1, k)` triples examined.
    pub cases: u64,
    pub deviations: Vec<Deviation>,
    /// Off-center counts where both weights vanish (so either choice is optimal).
    pub free_off_center: u64,
}

/// Runs [`optimal_issue_wise_thresholds`] over `2 <= n <= n_max`,
/// `1 <= n1 <= n/2`, `1 <= k <= min(k_max, n)`.
pub fn optimality_check(n_max: u64, k_max: u64) -> Result<OptimalityCheck> {
    if n_max < 2 || k_max < 1 {
        return Err(validation("need n_max >= 2 and k_max >= 1"));
    }
    let per_n: Vec<(u64, Vec<Deviation>, u64)> = (2..=n_max)
        .into_par_iter()
        .map(|n| {
            let mut cases = 0;
            let mut devs = Vec::new();
            let mut free = 0;
            for n1 in 1..=n / 2 {
                for k in 1..=k_max.min(n) {
                    let r = optimal_issue_wise_thresholds(n, n1, k)?;
                    cases += 1;
                    free += r.free_off_center.len() as u64;
                    devs.extend(r.deviations.iter().map(|&q| Deviation { n, n1, k, q }));
                }
            }
            Ok((cases, devs, free))
        })
        .collect::<Result<_>>()?;
    let mut out = OptimalityCheck {
        n_max,
        k_max,
        cases: 0,
        deviations: Vec::new(),
        free_off_center: 0,
    };
    for (c, d, f) in per_n {
        out.cases += c;
        out.deviations.extend(d);
        out.free_off_center += f;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Threshold::*;

    #[test]
    fn examples() {
        let r = optimal_issue_wise_thresholds(10, 3, 3).unwrap();
        assert_eq!(r.thresholds, vec![Zero, Zero, One, One]);
        assert!(r.matches_majority());

        let r = optimal_issue_wise_thresholds(8, 4, 2).unwrap();
        assert_eq!(r.thresholds[1], Free);
        assert!(r.matches_majority());

        let r = optimal_issue_wise_thresholds(7, 2, 1).unwrap();
        assert_eq!(r.thresholds, vec![Zero, One]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(optimal_issue_wise_thresholds(10, 0, 3).is_err());
        assert!(optimal_issue_wise_thresholds(10, 6, 3).is_err());
        assert!(optimal_issue_wise_thresholds(10, 3, 11).is_err());
        assert!(optimality_check(1, 3).is_err());
    }

    #[test]
    fn small_grid_has_no_deviations() {
        let r = optimality_check(16, 7).unwrap();
        assert!(r.deviations.is_empty(), "{:?}", r.deviations);
        assert!(r.cases > 0);
    }

    #[test]
    fn vanishing_weights_are_counted_as_free() {
        // n1 = 1, k = 5: counts q = 2, 3 need more 1-supporters (or 0-supporters) than exist.
        let r = optimal_issue_wise_thresholds(6, 1, 5).unwrap();
        assert_eq!(r.thresholds[2], Free);
        assert!(r.free_off_center.contains(&2));
        assert!(r.deviations.is_empty());
    }

    proptest! {
        // Brute-force oracle: no random threshold table beats majority.
        #[test]
        fn majority_minimizes_pair_cost(
            n in 2u64..25,
            n1_frac in 0.0f64..1.0,
            k_frac in 0.0f64..1.0,
            h in prop::collection::vec(0.0f64..=1.0, 26),
        ) {
            let n1 = 1 + ((n / 2 - 1) as f64 * n1_frac) as u64;
            let k = 1 + ((n - 1) as f64 * k_frac) as u64;
            let maj: Vec<f64> = (0..=k)
                .map(|q| match (2 * q).cmp(&k) {
                    std::cmp::Ordering::Less => 0.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Greater => 1.0,
                })
                .collect();
            let best = pair_cost(n, n1, k, &maj).unwrap();
            let other = pair_cost(n, n1, k, &h[..=k as usize]).unwrap();
            prop_assert!(best <= other * (1.0 + 1e-12));
        }
    }
}
