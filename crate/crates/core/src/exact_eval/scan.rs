//! One-issue approximation ratio of k-sortition.
//!
//! By issue cloning the approximation ratio over all profiles equals the
//! worst one-issue ratio `1 + pi(n1) (n - 2 n1) / n1` over `1 <= n1 <= n/2`,
//! where `pi(n1)` is the probability that a random committee picks the
//! minority alternative. The float scan walks `n1` upward and updates the
//! tail probabilities in O(1) per step:
//!
//! `P_{K+1}(xi >= t) - P_K(xi >= t) = (k/n) HG(n-1, K, k-1)(t-1)`
//!
//! (the added supporter is on the committee with probability `k/n` and tips
//! the count exactly when the other `k-1` members hold `t-1` supporters).
//! The pmf factor follows its own ratio recurrence and is re-anchored
//! against a direct evaluation every [`ANCHOR_EVERY`] steps.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::hypergeom::{binomial_big, ln_hypergeom_pmf_saddle};
use crate::error::{validation, Result};

/// Recurrence steps between direct re-evaluations of the pmf factor.
pub const ANCHOR_EVERY: u64 = 64;

/// Rescaling step for the pmf factor, as a natural log.
const LN_SCALE: f64 = 460.0;

/// Running `P_K(xi >= t)` as `K` increases by one.
///
/// The pmf factor is held as `g * exp(-scale_ln)` so that long stretches
/// below the smallest normal float keep their relative precision.
struct TailScan {
    n: u64,
    draws: u64,
    /// Count that the other `draws - 1` members must hold: `t - 1`.
    x: u64,
    step: f64,
    big_k: u64,
    g: f64,
    scale_ln: f64,
    tail: f64,
}

impl TailScan {
    fn new(n: u64, draws: u64, t: u64) -> Self {
        let mut s = TailScan {
            n,
            draws,
            x: t - 1,
            step: draws as f64 / n as f64,
            big_k: 0,
            g: 0.0,
            scale_ln: 0.0,
            tail: 0.0,
        };
        s.anchor(0);
        s
    }

    fn anchor(&mut self, big_k: u64) {
        let ln_g = ln_hypergeom_pmf_saddle(self.n - 1, big_k, self.draws - 1, self.x);
        self.scale_ln = if ln_g == f64::NEG_INFINITY {
            0.0
        } else if ln_g < -600.0 {
            LN_SCALE * ((-ln_g - 300.0) / LN_SCALE).ceil()
        } else {
            0.0
        };
        self.g = (ln_g + self.scale_ln).exp();
    }

    fn renormalize(&mut self) {
        if self.scale_ln > 0.0 && self.g > 1e100 {
            self.g *= (-LN_SCALE).exp();
            self.scale_ln -= LN_SCALE;
        } else if self.g < 1e-100 && self.g > 0.0 {
            self.g *= LN_SCALE.exp();
            self.scale_ln += LN_SCALE;
        }
    }

    /// Moves from `K` to `K + 1`.
    fn advance(&mut self) {
        if self.g > 0.0 {
            let term = if self.scale_ln == 0.0 {
                self.g
            } else {
                self.g * (-self.scale_ln).exp()
            };
            self.tail += self.step * term;
        }
        let next = self.big_k + 1;
        if next < self.x {
            self.g = 0.0;
        } else if next == self.x || (next - self.x) % ANCHOR_EVERY == 0 {
            self.anchor(next);
        } else {
            // C(K+1, x)/C(K, x) times C(N-K-1, d-x)/C(N-K, d-x), with N = n-1, d = draws-1.
            let big_n = (self.n - 1) as f64;
            let k = self.big_k as f64;
            let rest = (self.draws - 1 - self.x) as f64;
            let num = (big_n - k - rest).max(0.0);
            self.g = self.g * (k + 1.0) / (k + 1.0 - self.x as f64) * num / (big_n - k);
            self.renormalize();
        }
        self.big_k = next;
    }
}

/// `pi(n1)` for `n1 = 0..=max_n1`: the probability that a uniform size-`k`
/// committee of `n` voters picks 1 when `n1` voters support it.
pub fn selects_one_curve(n: u64, k: u64, max_n1: u64) -> Result<Vec<f64>> {
    if k == 0 || k > n {
        return Err(validation(format!("committee size k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    if max_n1 > n {
        return Err(validation(format!("n1 = {max_n1} exceeds n = {n}")));
    }
    let mut out = Vec::with_capacity(max_n1 as usize + 1);
    out.push(0.0);
    if max_n1 == 0 {
        return Ok(out);
    }
    if n == 1 {
        out.push(1.0);
        return Ok(out);
    }
    let (mut lo, mut hi) = if k % 2 == 1 {
        (TailScan::new(n, k, k.div_ceil(2)), None)
    } else {
        (TailScan::new(n, k, k / 2), Some(TailScan::new(n, k, k / 2 + 1)))
    };
    for _ in 0..max_n1 {
        lo.advance();
        let pi = match hi.as_mut() {
            None => lo.tail,
            Some(h) => {
                h.advance();
                0.5 * (lo.tail + h.tail)
            }
        };
        out.push(pi.clamp(0.0, 1.0));
    }
    Ok(out)
}

/// Worst one-issue ratio of k-sortition and the smallest `n1` attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneIssueAr {
    pub n: u64,
    pub k: u64,
    pub ratio: f64,
    /// 0 when no non-unanimous profile exceeds ratio 1.
    pub worst_n1: u64,
}

/// Approximation ratio of k-sortition over all profiles with `n` voters.
pub fn ar_one_issue_kmaj(n: u64, k: u64) -> Result<OneIssueAr> {
    let curve = selects_one_curve(n, k, n / 2)?;
    let mut best = OneIssueAr {
        n,
        k,
        ratio: 1.0,
        worst_n1: 0,
    };
    for (n1, &pi) in curve.iter().enumerate().skip(1) {
        let n1 = n1 as u64;
        let r = 1.0 + pi * (n - 2 * n1) as f64 / n1 as f64;
        if r > best.ratio {
            best.ratio = r;
            best.worst_n1 = n1;
        }
    }
    Ok(best)
}

/// [`ar_one_issue_kmaj`] for every `k` in `ks`, evaluated in parallel, in input order.
pub fn ar_one_issue_kmaj_many(n: u64, ks: &[u64]) -> Result<Vec<OneIssueAr>> {
    ks.par_iter().map(|&k| ar_one_issue_kmaj(n, k)).collect()
}

/// Exact `pi(n1)` as a rational.
pub fn selects_one_exact(n: u64, n1: u64, k: u64) -> Result<BigRational> {
    if k == 0 || k > n || n1 > n {
        return Err(validation(format!("need 1 <= k <= n and n1 <= n, got n={n}, n1={n1}, k={k}")));
    }
    let mut twice_num = BigInt::zero();
    for q in 0..=k.min(n1) {
        if 2 * q < k {
            continue;
        }
        let w = BigInt::from(binomial_big(n1, q) * binomial_big(n - n1, k - q));
        twice_num += if 2 * q == k { w } else { w * 2 };
    }
    let den = BigInt::from(binomial_big(n, k)) * 2;
    Ok(BigRational::new(twice_num, den))
}

/// Exact one-issue ratio `1 + pi (n - 2 n1) / n1`; 1 for the unanimous `n1 = 0`.
pub fn one_issue_ratio_exact(n: u64, n1: u64, k: u64) -> Result<BigRational> {
    if n1 == 0 {
        return Ok(BigRational::one());
    }
    let pi = selects_one_exact(n, n1, k)?;
    let gap = BigInt::from(n) - BigInt::from(2 * n1);
    Ok(BigRational::one() + pi * BigRational::new(gap, BigInt::from(n1)))
}

/// Exact rational counterpart of [`ar_one_issue_kmaj`], returning `(ratio, worst n1)`.
pub fn ar_one_issue_kmaj_exact(n: u64, k: u64) -> Result<(BigRational, u64)> {
    if k == 0 || k > n {
        return Err(validation(format!("committee size k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    let mut best = (BigRational::one(), 0);
    for n1 in 1..=n / 2 {
        let r = one_issue_ratio_exact(n, n1, k)?;
        if r > best.0 {
            best = (r, n1);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_eval::hypergeom::{p_committee_selects_one, HypergeomParams};
    use num_traits::ToPrimitive;

    #[test]
    fn curve_matches_direct_summation() {
        for &(n, k) in &[(2u64, 1u64), (2, 2), (7, 3), (40, 6), (129, 17), (1000, 250), (3001, 64)] {
            let curve = selects_one_curve(n, k, n).unwrap();
            for (n1, &pi) in curve.iter().enumerate() {
                let direct = p_committee_selects_one(HypergeomParams::new(n, n1 as u64, k).unwrap());
                assert!(
                    (pi - direct).abs() <= 1e-12 * direct.max(1e-300) + 1e-300,
                    "n={n} k={k} n1={n1}: {pi} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn float_scan_agrees_with_rationals() {
        for n in 1..=40u64 {
            for k in 1..=n {
                let fast = ar_one_issue_kmaj(n, k).unwrap();
                let (exact, worst) = ar_one_issue_kmaj_exact(n, k).unwrap();
                let exact = exact.to_f64().unwrap();
                assert!((fast.ratio - exact).abs() <= 1e-12 * exact, "n={n} k={k}");
                if (fast.ratio - exact).abs() == 0.0 {
                    assert_eq!(fast.worst_n1, worst, "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn random_dictator_worst_case() {
        // n = 2 is excluded: its only split n1 = 1 is a tie with ratio 1.
        for n in [3u64, 10, 57] {
            let (r, n1) = ar_one_issue_kmaj_exact(n, 1).unwrap();
            assert_eq!(r, BigRational::new(BigInt::from(2 * n - 2), BigInt::from(n)));
            assert_eq!(n1, 1);
            let fast = ar_one_issue_kmaj(n, 1).unwrap();
            assert_eq!(fast.worst_n1, 1);
        }
    }

    #[test]
    fn full_committee_is_majority() {
        for n in [1u64, 3, 9, 101] {
            let r = ar_one_issue_kmaj(n, n).unwrap();
            assert_eq!(r.ratio, 1.0);
            assert_eq!(r.worst_n1, 0);
        }
    }

    #[test]
    fn three_sortition_near_limit() {
        let r = ar_one_issue_kmaj(30_000, 3).unwrap();
        let limit = 1.0 + (7.0 * 7f64.sqrt() - 10.0) / 27.0;
        assert!((r.ratio - limit).abs() < 1e-2);
        let frac = r.worst_n1 as f64 / 30_000.0;
        assert!((frac - (4.0 - 7f64.sqrt()) / 6.0).abs() < 0.01);
    }

    #[test]
    fn many_preserves_order() {
        let rows = ar_one_issue_kmaj_many(50, &[5, 1, 3]).unwrap();
        assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), vec![5, 1, 3]);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(ar_one_issue_kmaj(5, 0).is_err());
        assert!(ar_one_issue_kmaj(5, 6).is_err());
        assert!(ar_one_issue_kmaj_exact(5, 6).is_err());
        assert!(selects_one_curve(5, 2, 6).is_err());
    }
}
