//! Closed-form bounds, constants, regret and committee-size scans.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{validation, Result};
use crate::exact_eval::{ar_one_issue_kmaj, selects_one_curve};
use crate::normal::normal_cdf;

/// Upper bound on the approximation ratio of k-sortition: `1 + 6 e^{-1/2} / sqrt(k)`.
pub fn kmaj_upper_bound(k: u64) -> f64 {
    1.0 + 6.0 * (-0.5f64).exp() / (k as f64).sqrt()
}

/// Lower bound `1 + 2 (Phi(-1) - 1/sqrt(k)) / sqrt(k)`.
///
/// Only meaningful for `n >` [`lower_bound_min_n`]`(k) - 1`, and below 1 (vacuous) for small `k`.
pub fn kmaj_lower_bound(k: u64) -> f64 {
    let rk = (k as f64).sqrt();
    1.0 + 2.0 * (normal_cdf(-1.0) - 1.0 / rk) / rk
}

/// Smallest population `2 (k + 1)^2` for which the lower bound is claimed.
pub fn lower_bound_min_n(k: u64) -> u64 {
    2 * (k + 1) * (k + 1)
}

pub fn lower_bound_applies(n: u64, k: u64) -> bool {
    lower_bound_min_n(k) <= n
}

/// Large-population limit of the 3-sortition ratio and the worst minority share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kmaj3Limit {
    /// `1 + (7 sqrt 7 - 10) / 27`
    pub value: f64,
    /// `(4 - sqrt 7) / 6`
    pub argmax_fraction: f64,
}

pub fn kmaj3_exact_limit() -> Kmaj3Limit {
    let s7 = 7f64.sqrt();
    Kmaj3Limit {
        value: 1.0 + (7.0 * s7 - 10.0) / 27.0,
        argmax_fraction: (4.0 - s7) / 6.0,
    }
}

/// One-issue approximation ratio of weighted k-sortition,
/// `1 + (1 - 1/k)^{k-1} / (k 2^{k-1})`, with `0^0 = 1` so that `k = 1` gives 2.
pub fn krep_one_issue_ar(k: u64) -> f64 {
    let kf = k as f64;
    let base = if k == 1 { 1.0 } else { (1.0 - 1.0 / kf).powf(kf - 1.0) };
    1.0 + base / (kf * 2f64.powf(kf - 1.0))
}

/// Upper bound for weighted k-sortition on `m` i.i.d. issues:
/// `1 + m^{m+1} exp(-k / (2m)^m)`.
pub fn krep_iid_upper_bound(m: u64, k: u64) -> f64 {
    let mf = m as f64;
    1.0 + mf.powf(mf + 1.0) * (-(k as f64) / (2.0 * mf).powf(mf)).exp()
}

/// The sharper intermediate form `1 + m 2^{m+1} exp(-k / (2m)^m)`.
pub fn krep_iid_intermediate_bound(m: u64, k: u64) -> f64 {
    let mf = m as f64;
    1.0 + mf * 2f64.powf(mf + 1.0) * (-(k as f64) / (2.0 * mf).powf(mf)).exp()
}

/// Lower bound for weighted k-sortition with many issues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KrepManyIssueLower {
    /// 9/8
    pub value: f64,
    /// Cluster share maximizing the two-cluster curve at `k = 1`.
    pub alpha_at_k1: f64,
}

pub fn krep_many_issue_lower() -> KrepManyIssueLower {
    KrepManyIssueLower {
        value: 9.0 / 8.0,
        alpha_at_k1: 0.75,
    }
}

/// Two-cluster ratio curve `2 alpha + alpha^k - 2 alpha^{k+1}`.
pub fn two_cluster_curve(alpha: f64, k: u64) -> f64 {
    2.0 * alpha + alpha.powf(k as f64) - 2.0 * alpha.powf(k as f64 + 1.0)
}

/// `3/2 - (3/4)^k / 2`, the curve at `alpha = 3/4`.
pub fn two_cluster_curve_three_quarters(k: u64) -> f64 {
    1.5 - 0.5 * 0.75f64.powf(k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

/// A bound value, optionally checked against an observation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub params: Map<String, Value>,
    pub bound_value: f64,
    pub side: Side,
    pub compared_to: Option<f64>,
    pub satisfied: Option<bool>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, params: Map<String, Value>, bound_value: f64, side: Side) -> Self {
        BoundReport {
            name: name.into(),
            params,
            bound_value,
            side,
            compared_to: None,
            satisfied: None,
        }
    }

    /// Records `observed` and whether it lies on the permitted side of the bound.
    pub fn compare(mut self, observed: f64) -> Self {
        self.compared_to = Some(observed);
        self.satisfied = Some(match self.side {
            Side::Upper => observed <= self.bound_value,
            Side::Lower => observed >= self.bound_value,
        });
        self
    }
}

/// `(expected_cost + c k m) - optimal_cost`.
pub fn regret(expected_cost: f64, optimal_cost: f64, c: f64, k: u64, m: u64) -> f64 {
    expected_cost + c * (k * m) as f64 - optimal_cost
}

/// Profiles over which a regret scan takes its worst case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileFamily {
    /// All single-issue profiles with `n` voters; by issue cloning this is
    /// the worst case per issue of any profile.
    #[default]
    OneIssue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretRow {
    pub k: u64,
    pub worst_regret: f64,
    pub worst_n1: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretScan {
    pub n: u64,
    pub c: f64,
    pub family: ProfileFamily,
    pub best_k: u64,
    pub best_regret: f64,
    pub rows: Vec<RegretRow>,
}

/// Worst-case one-issue regret of k-sortition for one `k`:
/// `max_{n1} pi(n1) (n - 2 n1) + c k`.
pub fn worst_one_issue_regret(n: u64, c: f64, k: u64) -> Result<RegretRow> {
    let curve = selects_one_curve(n, k, n / 2)?;
    let mut row = RegretRow {
        k,
        worst_regret: f64::NEG_INFINITY,
        worst_n1: 0,
    };
    for (n1, &pi) in curve.iter().enumerate() {
        let r = regret(pi * (n - 2 * n1 as u64) as f64, 0.0, c, k, 1);
        if r > row.worst_regret {
            row.worst_regret = r;
            row.worst_n1 = n1 as u64;
        }
    }
    Ok(row)
}

/// Committee size minimizing worst-case regret over `grid` (first in grid order on ties).
pub fn optimal_k_scan(n: u64, c: f64, grid: &[u64], family: ProfileFamily) -> Result<RegretScan> {
    if !(c > 0.0) {
        return Err(validation(format!("elicitation cost c must be positive, got {c}")));
    }
    if grid.is_empty() {
        return Err(validation("committee size grid is empty"));
    }
    if let Some(&bad) = grid.iter().find(|&&k| k == 0 || k > n) {
        return Err(validation(format!("grid value k = {bad} must satisfy 1 <= k <= n = {n}")));
    }
    let rows: Vec<RegretRow> = match family {
        ProfileFamily::OneIssue => grid
            .par_iter()
            .map(|&k| worst_one_issue_regret(n, c, k))
            .collect::<Result<_>>()?,
    };
    let best = rows
        .iter()
        .fold(None::<&RegretRow>, |best, r| match best {
            Some(b) if b.worst_regret <= r.worst_regret => Some(b),
            _ => Some(r),
        })
        .expect("grid is nonempty");
    Ok(RegretScan {
        n,
        c,
        family,
        best_k: best.k,
        best_regret: best.worst_regret,
        rows,
    })
}

/// Accepted range for `k*(8n) / k*(n)`, bracketing `8^{2/3} = 4`.
pub const SCALING_RATIO_RANGE: (f64, f64) = (2.8, 5.8);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingCheck {
    pub n_small: u64,
    pub n_large: u64,
    pub c: f64,
    pub k_small: u64,
    pub k_large: u64,
    pub ratio: f64,
    /// Ratio predicted by `k* ~ (n / c)^{2/3}`.
    pub predicted: f64,
    pub consistent: bool,
}

/// Compares the optimal committee sizes at `n` and `8n`.
pub fn regret_scaling_check(n: u64, c: f64, grid: &[u64]) -> Result<ScalingCheck> {
    let n_large = 8 * n;
    let small_grid: Vec<u64> = grid.iter().copied().filter(|&k| k <= n).collect();
    let small = optimal_k_scan(n, c, &small_grid, ProfileFamily::OneIssue)?;
    let large = optimal_k_scan(n_large, c, grid, ProfileFamily::OneIssue)?;
    let ratio = large.best_k as f64 / small.best_k as f64;
    Ok(ScalingCheck {
        n_small: n,
        n_large,
        c,
        k_small: small.best_k,
        k_large: large.best_k,
        ratio,
        predicted: 8f64.powf(2.0 / 3.0),
        consistent: (SCALING_RATIO_RANGE.0..=SCALING_RATIO_RANGE.1).contains(&ratio),
    })
}

/// One row of plot data: exact ratio of k-sortition against both bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArBoundRow {
    pub n: u64,
    pub k: u64,
    pub exact_ar: f64,
    pub worst_n1: u64,
    pub upper: f64,
    pub lower: f64,
    pub lower_applicable: bool,
    pub upper_satisfied: bool,
}

/// Exact ratio and bounds for each `k` in `ks`, in input order.
pub fn ar_bound_table(n: u64, ks: &[u64]) -> Result<Vec<ArBoundRow>> {
    ks.par_iter()
        .map(|&k| {
            let ar = ar_one_issue_kmaj(n, k)?;
            let upper = kmaj_upper_bound(k);
            Ok(ArBoundRow {
                n,
                k,
                exact_ar: ar.ratio,
                worst_n1: ar.worst_n1,
                upper,
                lower: kmaj_lower_bound(k),
                lower_applicable: lower_bound_applies(n, k),
                upper_satisfied: ar.ratio <= upper,
            })
        })
        .collect()
}

pub const AR_BOUND_CSV_HEADER: &str = "n,k,exact_ar,worst_n1,upper,lower,lower_applicable,upper_satisfied";

/// CSV with a header line; `f64` fields use the shortest round-trip form.
pub fn ar_bound_csv(rows: &[ArBoundRow]) -> String {
    let mut out = String::from(AR_BOUND_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n, r.k, r.exact_ar, r.worst_n1, r.upper, r.lower, r.lower_applicable, r.upper_satisfied
        ));
    }
    out
}

/// Every closed-form value for one `(k, m)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormRow {
    pub k: u64,
    pub m: u64,
    pub kmaj_upper: f64,
    pub kmaj_lower: f64,
    pub krep_one_issue: f64,
    pub krep_iid_upper: f64,
    pub krep_iid_intermediate: f64,
}

/// Rows ordered by `k`, then `m`, in the order given.
pub fn closed_form_table(ks: &[u64], ms: &[u64]) -> Result<Vec<ClosedFormRow>> {
    if ks.is_empty() || ms.is_empty() {
        return Err(validation("k and m lists must be nonempty"));
    }
    if ks.contains(&0) || ms.contains(&0) {
        return Err(validation("k and m must be at least 1"));
    }
    Ok(ks
        .iter()
        .flat_map(|&k| {
            ms.iter().map(move |&m| ClosedFormRow {
                k,
                m,
                kmaj_upper: kmaj_upper_bound(k),
                kmaj_lower: kmaj_lower_bound(k),
                krep_one_issue: krep_one_issue_ar(k),
                krep_iid_upper: krep_iid_upper_bound(m, k),
                krep_iid_intermediate: krep_iid_intermediate_bound(m, k),
            })
        })
        .collect())
}

pub const CLOSED_FORM_CSV_HEADER: &str = "k,m,kmaj_upper,kmaj_lower,krep_one_issue,krep_iid_upper,krep_iid_intermediate";

pub fn closed_form_csv(rows: &[ClosedFormRow]) -> String {
    let mut out = String::from(CLOSED_FORM_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.k, r.m, r.kmaj_upper, r.kmaj_lower, r.krep_one_issue, r.krep_iid_upper, r.krep_iid_intermediate
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kmaj_bounds() {
        assert!((kmaj_upper_bound(1) - 4.639).abs() < 1e-3);
        assert!((kmaj_upper_bound(9) - 2.2131).abs() < 1e-4);
        assert!((1..200).all(|k| kmaj_upper_bound(k + 1) < kmaj_upper_bound(k)));
        assert!(kmaj_lower_bound(4) < 1.0);
        assert!((kmaj_lower_bound(100) - 1.01173).abs() < 1e-5);
        assert!(lower_bound_applies(50, 4));
        assert!(!lower_bound_applies(49, 4));
    }

    #[test]
    fn constants() {
        let l = kmaj3_exact_limit();
        assert!((l.value - 1.315_565_15).abs() < 1e-8);
        assert!((l.argmax_fraction - 0.22571).abs() < 1e-5);
        // The limit is the maximum over p of 1 + pi(p)(1 - 2p)/p with
        // pi(p) = 3p^2 - 2p^3 (at least two of three members in the minority).
        let f = |p: f64| 1.0 + (3.0 * p * p - 2.0 * p * p * p) * (1.0 - 2.0 * p) / p;
        let best = (1..50_000).map(|i| f(i as f64 / 100_000.0)).fold(0.0, f64::max);
        assert!((best - l.value).abs() < 1e-8);

        assert_eq!(krep_many_issue_lower().value, 1.125);
        assert_eq!(two_cluster_curve(0.75, 1), 1.125);
        assert_eq!(two_cluster_curve_three_quarters(1), 1.125);
        for k in 1..30 {
            assert!((two_cluster_curve(0.75, k) - two_cluster_curve_three_quarters(k)).abs() < 1e-15);
        }
        assert!((two_cluster_curve(0.75, 200) - 1.5).abs() < 1e-12);
        // alpha = 3/4 maximizes the k = 1 curve 2a + a - 2a^2.
        let best = (0..=1000).map(|i| i as f64 / 1000.0).fold((0.0, 0.0), |b, a| {
            let v = two_cluster_curve(a, 1);
            if v > b.1 { (a, v) } else { b }
        });
        assert_eq!(best.0, 0.75);
    }

    #[test]
    fn krep_closed_forms() {
        assert_eq!(krep_one_issue_ar(1), 2.0);
        assert_eq!(krep_one_issue_ar(2), 1.125);
        assert!((krep_one_issue_ar(3) - (1.0 + 4.0 / 9.0 / 12.0)).abs() < 1e-15);
        // Beyond k ~ 45 the excess over 1 drops below f64 resolution.
        for k in 2..40 {
            assert!(krep_one_issue_ar(k + 1) < krep_one_issue_ar(k));
            assert!(krep_one_issue_ar(k) < kmaj_upper_bound(k));
        }
        assert!((krep_iid_upper_bound(1, 10) - (1.0 + (-5f64).exp())).abs() < 1e-15);
        assert!((krep_iid_intermediate_bound(2, 64) - (1.0 + 16.0 * (-4f64).exp())).abs() < 1e-13);
        assert!((krep_iid_upper_bound(2, 64) - (1.0 + 8.0 * (-4f64).exp())).abs() < 1e-13);
        assert!(krep_iid_upper_bound(3, 100_000) - 1.0 < 1e-12);
    }

    #[test]
    fn bound_report_sides() {
        let r = BoundReport::new("kmaj-upper", Map::new(), 2.0, Side::Upper).compare(1.5);
        assert_eq!(r.satisfied, Some(true));
        let r = BoundReport::new("kmaj-lower", Map::new(), 2.0, Side::Lower).compare(1.5);
        assert_eq!(r.satisfied, Some(false));
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["side"], "lower");
        assert_eq!(json["compared_to"], 1.5);
    }

    #[test]
    fn regret_extremes() {
        assert_eq!(regret(10.0, 7.0, 0.5, 4, 2), 7.0);
        let grid: Vec<u64> = (1..=99).step_by(2).collect();
        let expensive = optimal_k_scan(200, 1e6, &grid, ProfileFamily::OneIssue).unwrap();
        assert_eq!(expensive.best_k, 1);
        let cheap = optimal_k_scan(200, 1e-12, &grid, ProfileFamily::OneIssue).unwrap();
        assert_eq!(cheap.best_k, 99);
        assert_eq!(cheap.rows.len(), grid.len());
        assert!(optimal_k_scan(200, 0.0, &grid, ProfileFamily::OneIssue).is_err());
        assert!(optimal_k_scan(200, 1.0, &[], ProfileFamily::OneIssue).is_err());
        assert!(optimal_k_scan(200, 1.0, &[201], ProfileFamily::OneIssue).is_err());
    }

    #[test]
    fn tables() {
        let rows = ar_bound_table(101, &[1, 3, 101]).unwrap();
        assert!(rows.iter().all(|r| r.upper_satisfied));
        assert_eq!(rows[2].exact_ar, 1.0);
        let csv = ar_bound_csv(&rows);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with(AR_BOUND_CSV_HEADER));

        let rows = closed_form_table(&[9, 2], &[1, 2]).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!((rows[0].k, rows[0].m), (9, 1));
        assert!((rows[0].kmaj_upper - 2.2131).abs() < 1e-4);
        assert_eq!(rows[2].krep_one_issue, 1.125);
        assert!(closed_form_table(&[], &[1]).is_err());
        assert_eq!(closed_form_csv(&rows).lines().count(), 5);
    }
}
