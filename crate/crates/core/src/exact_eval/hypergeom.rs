//! Hypergeometric probabilities.
//!
//! Two independent routes: exact big-integer binomials (used up to a
//! configurable population size) and Catherine Loader's saddle-point
//! formulation, which writes each binomial density through the Stirling
//! remainder `stirlerr` and the deviance `bd0` and keeps full relative
//! precision for populations where `ln(n!)` alone would lose digits.

use std::f64::consts::PI;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{validation, Result};

/// Law of the number of successes among `draws` items taken without
/// replacement from `population` items of which `successes` are successes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct HypergeomParams {
    pub population: u64,
    pub successes: u64,
    pub draws: u64,
}

impl HypergeomParams {
    /// Requires `successes <= population` and `1 <= draws <= population`.
    pub fn new(population: u64, successes: u64, draws: u64) -> Result<Self> {
        if successes > population {
            return Err(validation(format!(
                "successes {successes} exceed population {population}"
            )));
        }
        if draws == 0 || draws > population {
            return Err(validation(format!(
                "draws must satisfy 1 <= k <= n, got k={draws}, n={population}"
            )));
        }
        Ok(HypergeomParams {
            population,
            successes,
            draws,
        })
    }

    /// Support `[max(0, k - (n - K)), min(k, K)]`.
    pub fn support(&self) -> (u64, u64) {
        let failures = self.population - self.successes;
        (self.draws.saturating_sub(failures), self.draws.min(self.successes))
    }

    pub fn mean(&self) -> f64 {
        self.draws as f64 * self.successes as f64 / self.population as f64
    }

    /// `k p (1 - p) (n - k) / (n - 1)`, zero for a population of one.
    pub fn variance(&self) -> f64 {
        let n = self.population as f64;
        if self.population < 2 {
            return 0.0;
        }
        let p = self.successes as f64 / n;
        let k = self.draws as f64;
        k * p * (1.0 - p) * (n - k) / (n - 1.0)
    }
}

pub(crate) fn binomial_big(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Exact `C(K, q) C(n - K, k - q) / C(n, k)`, rounded once per factor to `f64`.
pub fn hypergeom_pmf_exact(params: HypergeomParams, q: u64) -> f64 {
    let (lo, hi) = params.support();
    if q < lo || q > hi {
        return 0.0;
    }
    let HypergeomParams {
        population: n,
        successes: big_k,
        draws: k,
    } = params;
    let num = binomial_big(big_k, q) * binomial_big(n - big_k, k - q);
    let den = binomial_big(n, k);
    ratio_to_f64(&num, &den)
}

/// `num / den` for big integers whose ratio lies in `[0, 1]`.
pub(crate) fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    // Shift both into the 2^1000 range so each converts without overflow;
    // the ratio is unchanged and each conversion is correctly rounded.
    let bits = den.bits();
    let shift = bits.saturating_sub(1000);
    let n = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

/// Hypergeometric probability of exactly `q` successes.
///
/// Exact big-integer route for `population <= 1000`, saddle-point route beyond.
pub fn hypergeom_pmf(params: HypergeomParams, q: u64) -> f64 {
    hypergeom_pmf_with(params, q, crate::Caps::default().exact_binomial_max_n)
}

pub fn hypergeom_pmf_with(params: HypergeomParams, q: u64, exact_max_n: u64) -> f64 {
    if params.population <= exact_max_n {
        hypergeom_pmf_exact(params, q)
    } else {
        hypergeom_pmf_saddle(params.population, params.successes, params.draws, q)
    }
}

/// Saddle-point hypergeometric pmf; accepts `draws = 0` and an empty population.
pub(crate) fn hypergeom_pmf_saddle(population: u64, successes: u64, draws: u64, q: u64) -> f64 {
    ln_hypergeom_pmf_saddle(population, successes, draws, q).exp()
}

/// Natural log of [`hypergeom_pmf_saddle`]; `-inf` off the support. Stays
/// finite where the pmf itself underflows.
pub(crate) fn ln_hypergeom_pmf_saddle(population: u64, successes: u64, draws: u64, q: u64) -> f64 {
    let failures = population - successes;
    if q > successes || q > draws || draws - q > failures {
        return f64::NEG_INFINITY;
    }
    if draws == 0 || population == draws {
        // Nothing drawn, or everything drawn: the count is deterministic.
        return 0.0;
    }
    let p = draws as f64 / population as f64;
    let qq = (population - draws) as f64 / population as f64;
    let l1 = ln_dbinom_raw(q as f64, successes as f64, p, qq);
    let l2 = ln_dbinom_raw((draws - q) as f64, failures as f64, p, qq);
    let l3 = ln_dbinom_raw(draws as f64, population as f64, p, qq);
    l1 + l2 - l3
}

/// `ln(n!) - ln(sqrt(2 pi n) (n/e)^n)` for integer `n`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        if n == 0.0 {
            return 0.0;
        }
        // n! is exact in f64 for n <= 18.
        let fact: f64 = (1..=n as u64).map(|i| i as f64).product();
        return fact.ln() - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x / np) + np - x`, evaluated without cancellation near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
    }
    x * (x / np).ln() + np - x
}

/// Log binomial density of `x` successes in `n` trials with `p + q = 1`.
fn ln_dbinom_raw(x: f64, n: f64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if x == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    if x == 0.0 {
        if n == 0.0 {
            return 0.0;
        }
        return if p < 0.1 { -bd0(n, n * q) - n * p } else { n * q.ln() };
    }
    if x == n {
        return if q < 0.1 { -bd0(n, n * p) - n * q } else { n * p.ln() };
    }
    if x < 0.0 || x > n {
        return f64::NEG_INFINITY;
    }
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q);
    let lf = (2.0 * PI).ln() + x.ln() + (-x / n).ln_1p();
    lc - 0.5 * lf
}

/// Probability that a uniformly random committee of `draws` members picks
/// alternative 1 by simple majority when `successes` of `population` voters
/// support it: `Pr(xi > k/2) + Pr(xi = k/2) / 2`.
pub fn p_committee_selects_one(params: HypergeomParams) -> f64 {
    p_committee_selects_one_with(params, crate::Caps::default().exact_binomial_max_n)
}

pub fn p_committee_selects_one_with(params: HypergeomParams, exact_max_n: u64) -> f64 {
    let k = params.draws;
    let (_, hi) = params.support();
    let mut acc = 0.0;
    // Summed from the largest count down: the terms grow toward the mode.
    let mut q = hi;
    while 2 * q > k {
        acc += hypergeom_pmf_with(params, q, exact_max_n);
        if q == 0 {
            break;
        }
        q -= 1;
    }
    if k % 2 == 0 {
        acc += 0.5 * hypergeom_pmf_with(params, k / 2, exact_max_n);
    }
    acc.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hg(n: u64, big_k: u64, k: u64) -> HypergeomParams {
        HypergeomParams::new(n, big_k, k).unwrap()
    }

    #[test]
    fn pmf_examples() {
        assert!((hypergeom_pmf(hg(5, 2, 2), 1) - 0.6).abs() < 1e-15);
        assert_eq!(hypergeom_pmf(hg(5, 0, 3), 0), 1.0);
        assert_eq!(hypergeom_pmf(hg(5, 0, 3), 1), 0.0);
        let total: f64 = (0..=9).map(|q| hypergeom_pmf(hg(50, 17, 9), q)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(HypergeomParams::new(5, 6, 1).is_err());
        assert!(HypergeomParams::new(5, 2, 0).is_err());
        assert!(HypergeomParams::new(5, 2, 6).is_err());
        assert_eq!(hg(10, 8, 5).support(), (3, 5));
    }

    #[test]
    fn saddle_point_matches_exact_binomials() {
        let mut worst: f64 = 0.0;
        for &n in &[2u64, 7, 16, 31, 64, 200, 513, 1000] {
            for big_k in [0, 1, n / 7, n / 3, n / 2, n - 1, n] {
                for k in [1, 2, 3, n / 5 + 1, n / 2, n] {
                    if k == 0 || k > n {
                        continue;
                    }
                    let params = hg(n, big_k, k);
                    let (lo, hi) = params.support();
                    for q in lo..=hi {
                        let exact = hypergeom_pmf_exact(params, q);
                        let saddle = hypergeom_pmf_saddle(n, big_k, k, q);
                        if exact > 1e-300 {
                            worst = worst.max((saddle - exact).abs() / exact);
                        }
                    }
                }
            }
        }
        assert!(worst <= 1e-12, "worst relative error {worst:e}");
    }

    #[test]
    fn normalization_up_to_large_populations() {
        for &n in &[10u64, 999, 1001, 20_000, 100_000] {
            for big_k in [1, n / 10, n / 2] {
                for k in [1, 7, 64.min(n), 501.min(n)] {
                    let params = hg(n, big_k, k);
                    let (lo, hi) = params.support();
                    let total: f64 = (lo..=hi).map(|q| hypergeom_pmf(params, q)).sum();
                    assert!((total - 1.0).abs() <= 1e-12, "n={n} K={big_k} k={k}: {total}");
                }
            }
        }
    }

    #[test]
    fn moments_match_enumeration() {
        // Brute force over all k-subsets of a labelled population.
        for (n, big_k, k) in [(8u64, 3u64, 4u64), (10, 5, 3), (9, 2, 9), (7, 7, 2)] {
            let mut count = 0f64;
            let mut s1 = 0f64;
            let mut s2 = 0f64;
            for c in crate::Combinations::new(n as usize, k as usize) {
                let x = c.iter().filter(|&&i| (i as u64) < big_k).count() as f64;
                count += 1.0;
                s1 += x;
                s2 += x * x;
            }
            let mean = s1 / count;
            let var = s2 / count - mean * mean;
            let params = hg(n, big_k, k);
            assert!((params.mean() - mean).abs() < 1e-12);
            assert!((params.variance() - var).abs() < 1e-12, "{n} {big_k} {k}");
        }
    }

    #[test]
    fn selects_one_examples() {
        // Dropping one 1-voter leaves a 0-majority and vice versa; 2 of 4 committees each.
        assert!((p_committee_selects_one(hg(4, 2, 3)) - 0.5).abs() < 1e-15);
        assert_eq!(p_committee_selects_one(hg(9, 0, 5)), 0.0);
        // pmf 0.2 / 0.6 / 0.2 for q = 0, 1, 2.
        assert!((p_committee_selects_one(hg(6, 3, 2)) - 0.5).abs() < 1e-15);
        assert!((p_committee_selects_one(hg(7, 7, 4)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn selects_one_monotone_in_support() {
        for &(n, k) in &[(12u64, 5u64), (30, 4), (1500, 11)] {
            let mut prev = -1.0;
            for big_k in 0..=n {
                let p = p_committee_selects_one(hg(n, big_k, k));
                assert!(p >= prev - 1e-15, "n={n} k={k} K={big_k}");
                prev = p;
            }
        }
    }
}
