//! Preference profiles, the profile file format, and profile generators.
//!
//! Rows are stored bit-packed (64 issues per word) so Hamming distances on
//! profiles with tens of thousands of issues reduce to popcounts.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combin::{factorial_u64, next_permutation};
use crate::error::{validation, Error, Result};

const WORD_BITS: usize = 64;

/// An `n x m` binary matrix; row `i` holds voter `i`'s positions on the `m` issues.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PreferenceProfile {
    voters: usize,
    issues: usize,
    words_per_row: usize,
    // Unused high bits of each row's last word are always zero.
    words: Vec<u64>,
}

impl std::fmt::Debug for PreferenceProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PreferenceProfile({}x{})", self.voters, self.issues)?;
        if self.voters * self.issues <= 256 {
            for i in 0..self.voters {
                f.write_str("\n  ")?;
                for j in 0..self.issues {
                    f.write_char(if self.get(i, j) { '1' } else { '0' })?;
                }
            }
        }
        Ok(())
    }
}

impl PreferenceProfile {
    fn zeroed(voters: usize, issues: usize) -> Result<Self> {
        if voters == 0 || issues == 0 {
            return Err(validation(format!(
                "profile needs at least one voter and one issue, got {voters}x{issues}"
            )));
        }
        let words_per_row = issues.div_ceil(WORD_BITS);
        Ok(PreferenceProfile {
            voters,
            issues,
            words_per_row,
            words: vec![0; voters * words_per_row],
        })
    }

    /// Builds a profile by evaluating `f(voter, issue)` for every cell.
    pub fn from_fn(voters: usize, issues: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut p = Self::zeroed(voters, issues)?;
        for i in 0..voters {
            for j in 0..issues {
                if f(i, j) {
                    p.set(i, j);
                }
            }
        }
        Ok(p)
    }

    /// Rows of 0/1 values; every row must have the same non-zero length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let voters = rows.len();
        let issues = rows.first().map_or(0, |r| r.as_ref().len());
        let mut p = Self::zeroed(voters, issues)?;
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != issues {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {issues}",
                    row.len()
                )));
            }
            for (j, &b) in row.iter().enumerate() {
                match b {
                    0 => {}
                    1 => p.set(i, j),
                    other => {
                        return Err(validation(format!("entry ({i}, {j}) is {other}, not 0 or 1")))
                    }
                }
            }
        }
        Ok(p)
    }

    #[inline]
    pub fn voters(&self) -> usize {
        self.voters
    }

    #[inline]
    pub fn issues(&self) -> usize {
        self.issues
    }

    #[inline]
    pub fn get(&self, voter: usize, issue: usize) -> bool {
        debug_assert!(voter < self.voters && issue < self.issues);
        let w = self.words[voter * self.words_per_row + issue / WORD_BITS];
        (w >> (issue % WORD_BITS)) & 1 == 1
    }

    #[inline]
    fn set(&mut self, voter: usize, issue: usize) {
        self.words[voter * self.words_per_row + issue / WORD_BITS] |= 1 << (issue % WORD_BITS);
    }

    pub(crate) fn row_words(&self, voter: usize) -> &[u64] {
        let start = voter * self.words_per_row;
        &self.words[start..start + self.words_per_row]
    }

    pub fn row(&self, voter: usize) -> Vec<u8> {
        (0..self.issues).map(|j| self.get(voter, j) as u8).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.voters).map(|i| self.row(i)).collect()
    }

    /// Hamming distance between two voters.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        self.row_words(a)
            .iter()
            .zip(self.row_words(b))
            .map(|(x, y)| (x ^ y).count_ones() as usize)
            .sum()
    }

    /// Number of ones in a voter's row (its distance to the all-zero vector).
    pub fn ones_in_row(&self, voter: usize) -> usize {
        self.row_words(voter).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of voters holding 1 on `issue`.
    pub fn support(&self, issue: usize) -> usize {
        (0..self.voters).filter(|&i| self.get(i, issue)).count()
    }

    /// Per-issue supporter counts of alternative 1.
    pub fn supports(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.issues];
        for i in 0..self.voters {
            for (w, word) in self.row_words(i).iter().enumerate() {
                let mut bits = *word;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    counts[w * WORD_BITS + b] += 1;
                    bits &= bits - 1;
                }
            }
        }
        counts
    }

    /// `pi(X)`: row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_voters(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.voters {
            return Err(Error::Dimension(format!(
                "permutation has length {}, profile has {} voters",
                perm.len(),
                self.voters
            )));
        }
        let mut seen = vec![false; self.voters];
        for &p in perm {
            if p >= self.voters || std::mem::replace(&mut seen[p], true) {
                return Err(validation("not a permutation of the voter indices"));
            }
        }
        let mut out = self.clone();
        for (i, &src) in perm.iter().enumerate() {
            let dst = i * self.words_per_row;
            out.words[dst..dst + self.words_per_row].copy_from_slice(self.row_words(src));
        }
        Ok(out)
    }

    /// The one-issue profile formed by column `issue`.
    pub fn restrict_to_issue(&self, issue: usize) -> Result<Self> {
        if issue >= self.issues {
            return Err(Error::Dimension(format!(
                "issue {issue} out of range for {} issues",
                self.issues
            )));
        }
        Self::from_fn(self.voters, 1, |i, _| self.get(i, issue))
    }

    /// True when every voter holds the same position on every issue.
    pub fn is_unanimous(&self) -> bool {
        (1..self.voters).all(|i| self.row_words(i) == self.row_words(0))
    }
}

/// One-issue profile description: `n1` of `n` voters prefer alternative 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SingleIssueSpec {
    n: usize,
    n1: usize,
}

impl SingleIssueSpec {
    pub fn new(n: usize, n1: usize) -> Result<Self> {
        if n == 0 {
            return Err(validation("single-issue profile needs n >= 1"));
        }
        if n1 > n {
            return Err(validation(format!("n1 = {n1} exceeds n = {n}")));
        }
        Ok(SingleIssueSpec { n, n1 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    /// Fraction of supporters of alternative 1.
    pub fn p(&self) -> f64 {
        self.n1 as f64 / self.n as f64
    }
}

/// `n x 1` profile whose first `n1` voters hold 1.
pub fn make_single_issue(spec: SingleIssueSpec) -> Result<PreferenceProfile> {
    PreferenceProfile::from_fn(spec.n, 1, |i, _| i < spec.n1)
}

/// Repeats each issue `copies` times in place: issue `j` becomes issues
/// `j*copies .. (j+1)*copies`. Distances and costs scale by `copies`.
pub fn clone_issues(profile: &PreferenceProfile, copies: usize) -> Result<PreferenceProfile> {
    if copies == 0 {
        return Err(validation("copies must be at least 1"));
    }
    let m = profile
        .issues()
        .checked_mul(copies)
        .ok_or_else(|| Error::ResourceLimit("cloned issue count overflows".into()))?;
    PreferenceProfile::from_fn(profile.voters(), m, |i, j| profile.get(i, j / copies))
}

/// Flips every voter's position on every issue.
pub fn complement(profile: &PreferenceProfile) -> PreferenceProfile {
    let mut out = profile.clone();
    let tail = profile.issues % WORD_BITS;
    let last_mask = if tail == 0 { u64::MAX } else { (1u64 << tail) - 1 };
    for row in out.words.chunks_mut(profile.words_per_row) {
        for w in row.iter_mut() {
            *w = !*w;
        }
        if let Some(last) = row.last_mut() {
            *last &= last_mask;
        }
    }
    out
}

/// The derandomized equidistant profile with `m = n!` issues.
///
/// Issues are the permutations `pi` of `0..n` in lexicographic order; voter `i`
/// holds 1 on issue `pi` iff `pi(i) < n1`. Every issue then has exactly `n1`
/// supporters and all distinct voters are at the same distance
/// `n! * 2p(1-p) / (1 - 1/n)` with `p = n1/n`.
pub fn equidistant_profile(n: usize, n1: usize) -> Result<PreferenceProfile> {
    equidistant_profile_with_cap(n, n1, crate::Caps::default().equidistant_max_n)
}

pub fn equidistant_profile_with_cap(n: usize, n1: usize, max_n: usize) -> Result<PreferenceProfile> {
    if n1 == 0 || n1 > n {
        return Err(validation(format!("equidistant profile needs 1 <= n1 <= n, got n={n}, n1={n1}")));
    }
    if n > max_n {
        return Err(Error::ResourceLimit(format!(
            "equidistant profile with n={n} has n! issues; cap is n <= {max_n}"
        )));
    }
    let m = factorial_u64(n)
        .and_then(|f| usize::try_from(f).ok())
        .ok_or_else(|| Error::ResourceLimit(format!("{n}! issues do not fit in memory")))?;
    let mut profile = PreferenceProfile::zeroed(n, m)?;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut issue = 0;
    loop {
        for (voter, &image) in perm.iter().enumerate() {
            if image < n1 {
                profile.set(voter, issue);
            }
        }
        issue += 1;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    debug_assert_eq!(issue, m);
    Ok(profile)
}

/// The common pairwise distance of [`equidistant_profile`]`(n, n1)`, computed as
/// the exact integer `2 * n1 * (n - n1) * (n - 2)!`.
pub fn equidistant_distance(n: usize, n1: usize) -> Option<u64> {
    if n < 2 || n1 > n {
        return None;
    }
    let tail = factorial_u64(n - 2)?;
    (2 * n1 as u64 * (n - n1) as u64).checked_mul(tail)
}

/// Parameters of the two-cluster construction: a diffuse cluster `P` of
/// i.i.d. Bernoulli(`p`) voters and a unanimous cluster `Q` sharing one
/// Bernoulli(`q`) vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoClusterParams {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub max_attempts: usize,
}

impl TwoClusterParams {
    pub fn new(n: usize, m: usize, alpha: f64, p: f64, q: f64, epsilon: f64, seed: u64) -> Self {
        TwoClusterParams {
            n,
            m,
            alpha,
            p,
            q,
            epsilon,
            seed,
            max_attempts: 1000,
        }
    }

    /// `|P| = round(alpha * n)`.
    pub fn cluster_p_size(&self) -> usize {
        (self.alpha * self.n as f64).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(0.0 < self.q && self.q < self.p && self.p < 0.5) {
            return Err(validation(format!(
                "two-cluster profile needs 0 < q < p < 1/2, got p={}, q={}",
                self.p, self.q
            )));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(validation(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.epsilon > 0.0) {
            return Err(validation(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.m == 0 {
            return Err(validation("m must be at least 1"));
        }
        let sp = self.cluster_p_size();
        if sp == 0 || sp >= self.n {
            return Err(validation(format!(
                "round(alpha * n) = {sp} leaves an empty cluster for n = {}",
                self.n
            )));
        }
        if self.max_attempts == 0 {
            return Err(validation("max_attempts must be at least 1"));
        }
        Ok(())
    }
}

/// Realized distance statistics of an accepted two-cluster profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    /// Largest `|d / E[d] - 1|` over all checked pairs and voter-to-zero distances.
    pub max_relative_deviation: f64,
    pub min_pp_distance: Option<usize>,
    pub max_pq_distance: usize,
    pub expected_pp: f64,
    pub expected_pq: f64,
    pub expected_p_to_zero: f64,
    pub expected_q_to_zero: f64,
}

#[derive(Debug, Clone)]
pub struct TwoClusterProfile {
    pub profile: PreferenceProfile,
    /// Voters `0..cluster_p` form `P`; the rest form `Q`.
    pub cluster_p: usize,
    /// Number of sampled realizations, including the accepted one.
    pub attempts: usize,
    pub report: ConcentrationReport,
}

/// Samples the two-cluster profile until its realized distances concentrate.
///
/// A realization is accepted when every voter-voter and voter-to-zero distance
/// is within a factor `1 +/- epsilon` of its expectation and every `P`-`P`
/// distance exceeds every `P`-`Q` distance. Deterministic given the seed.
pub fn two_cluster_profile(params: &TwoClusterParams) -> Result<TwoClusterProfile> {
    params.validate()?;
    let TwoClusterParams { n, m, p, q, epsilon, .. } = *params;
    let sp = params.cluster_p_size();
    let mf = m as f64;
    let expected_pp = 2.0 * p * (1.0 - p) * mf;
    let expected_pq = (p * (1.0 - q) + q * (1.0 - p)) * mf;
    let expected_p0 = p * mf;
    let expected_q0 = q * mf;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for attempt in 1..=params.max_attempts {
        let xi: Vec<bool> = (0..m).map(|_| rng.gen_bool(q)).collect();
        let mut rows = vec![false; sp * m];
        for cell in rows.iter_mut() {
            *cell = rng.gen_bool(p);
        }
        let profile = PreferenceProfile::from_fn(n, m, |i, j| if i < sp { rows[i * m + j] } else { xi[j] })?;

        let mut worst = 0.0f64;
        let mut within = |d: usize, expected: f64| {
            let dev = if expected > 0.0 {
                (d as f64 / expected - 1.0).abs()
            } else if d == 0 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(dev);
        };
        let mut min_pp: Option<usize> = None;
        let mut max_pq = 0usize;
        for i in 0..n {
            within(profile.ones_in_row(i), if i < sp { expected_p0 } else { expected_q0 });
            for i2 in i + 1..n {
                let d = profile.distance(i, i2);
                match (i < sp, i2 < sp) {
                    (true, true) => {
                        within(d, expected_pp);
                        min_pp = Some(min_pp.map_or(d, |x| x.min(d)));
                    }
                    (true, false) => {
                        within(d, expected_pq);
                        max_pq = max_pq.max(d);
                    }
                    _ => within(d, 0.0),
                }
            }
        }
        let separated = min_pp.is_none_or(|d| d > max_pq);
        if worst <= epsilon && separated {
            return Ok(TwoClusterProfile {
                profile,
                cluster_p: sp,
                attempts: attempt,
                report: ConcentrationReport {
                    max_relative_deviation: worst,
                    min_pp_distance: min_pp,
                    max_pq_distance: max_pq,
                    expected_pp,
                    expected_pq,
                    expected_p_to_zero: expected_p0,
                    expected_q_to_zero: expected_q0,
                },
            });
        }
    }
    Err(Error::Generation(format!(
        "distances did not concentrate within {} attempts (epsilon={epsilon}, m={m}); try a larger m",
        params.max_attempts
    )))
}

/// Profile with i.i.d. Bernoulli(`p`) entries; deterministic given the seed.
pub fn iid_issue_profile(n: usize, m: usize, p: f64, seed: u64) -> Result<PreferenceProfile> {
    if !(0.0..=1.0).contains(&p) {
        return Err(validation(format!("p must lie in [0, 1], got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PreferenceProfile::from_fn(n, m, |_, _| rng.gen_bool(p))
}

/// Renders a profile in the text format: `n,m` then one comma-separated 0/1 row per voter.
pub fn format_profile(profile: &PreferenceProfile) -> String {
    let mut out = String::with_capacity(profile.voters * (2 * profile.issues + 1) + 16);
    let _ = writeln!(out, "{},{}", profile.voters, profile.issues);
    for i in 0..profile.voters {
        for j in 0..profile.issues {
            if j > 0 {
                out.push(',');
            }
            out.push(if profile.get(i, j) { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

pub fn parse_profile(text: &str) -> Result<PreferenceProfile> {
    let mut lines = text.split('\n');
    let header = lines.next().unwrap_or("");
    let (n, m) = parse_header(header)?;
    let mut body: Vec<&str> = lines.collect();
    // A single trailing newline terminates the last row.
    if body.last() == Some(&"") {
        body.pop();
    }
    if body.len() != n {
        return Err(Error::Dimension(format!(
            "header declares {n} voters but the file has {} rows",
            body.len()
        )));
    }
    let mut profile = PreferenceProfile::zeroed(n, m)?;
    for (i, line) in body.iter().enumerate() {
        let mut count = 0;
        for (j, cell) in line.split(',').enumerate() {
            count += 1;
            if j >= m {
                continue;
            }
            match cell.as_bytes() {
                b"0" => {}
                b"1" => profile.set(i, j),
                _ => {
                    return Err(Error::Parse {
                        row: i + 1,
                        col: j + 1,
                        msg: format!("expected 0 or 1, found {cell:?}"),
                    })
                }
            }
        }
        if count != m {
            return Err(Error::Dimension(format!(
                "row {} has {count} cells, header declares {m}",
                i + 1
            )));
        }
    }
    Ok(profile)
}

fn parse_header(header: &str) -> Result<(usize, usize)> {
    let bad = |msg: &str| Error::Parse { row: 0, col: 0, msg: format!("header {header:?}: {msg}") };
    let (a, b) = header.split_once(',').ok_or_else(|| bad("expected `n,m`"))?;
    let n: usize = a.parse().map_err(|_| bad("n is not a non-negative integer"))?;
    let m: usize = b.parse().map_err(|_| bad("m is not a non-negative integer"))?;
    if n == 0 || m == 0 {
        return Err(bad("n and m must be positive"));
    }
    Ok((n, m))
}

pub fn read_profile(path: impl AsRef<Path>) -> Result<PreferenceProfile> {
    parse_profile(&std::fs::read_to_string(path)?)
}

pub fn write_profile(profile: &PreferenceProfile, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_profile(profile))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{distance_matrix, optimal_outcome};
    use proptest::prelude::*;

    fn random_profile(n: usize, m: usize, seed: u64) -> PreferenceProfile {
        iid_issue_profile(n, m, 0.5, seed).unwrap()
    }

    #[test]
    fn single_issue_examples() {
        let p = make_single_issue(SingleIssueSpec::new(10, 1).unwrap()).unwrap();
        assert_eq!((p.voters(), p.issues()), (10, 1));
        assert_eq!(p.support(0), 1);
        assert!(p.get(0, 0));

        let p = make_single_issue(SingleIssueSpec::new(4, 2).unwrap()).unwrap();
        assert_eq!(p.to_rows(), vec![vec![1], vec![1], vec![0], vec![0]]);

        let p = make_single_issue(SingleIssueSpec::new(5, 0).unwrap()).unwrap();
        assert_eq!(p.support(0), 0);

        assert!(matches!(SingleIssueSpec::new(3, 4), Err(Error::Validation(_))));
    }

    #[test]
    fn cloning_repeats_each_issue() {
        let base = PreferenceProfile::from_rows(&[[1u8], [0], [0]]).unwrap();
        let cloned = clone_issues(&base, 3).unwrap();
        assert_eq!(cloned.to_rows(), vec![vec![1, 1, 1], vec![0, 0, 0], vec![0, 0, 0]]);
        assert_eq!(base.distance(0, 1), 1);
        assert_eq!(cloned.distance(0, 1), 3);
        assert!(clone_issues(&base, 0).is_err());
    }

    #[test]
    fn cloning_scales_optimal_cost() {
        // The optimum is recomputed on the cloned profile, not derived from the original.
        for seed in 0..10 {
            let x = random_profile(7, 5, seed);
            for copies in [2, 3, 70] {
                let c = clone_issues(&x, copies).unwrap();
                assert_eq!(optimal_outcome(&c).1, copies as u64 * optimal_outcome(&x).1);
                for a in 0..7 {
                    for b in 0..7 {
                        assert_eq!(c.distance(a, b), copies * x.distance(a, b));
                    }
                }
            }
        }
    }

    #[test]
    fn complement_examples() {
        let zeros = PreferenceProfile::from_fn(3, 70, |_, _| false).unwrap();
        let ones = complement(&zeros);
        assert!((0..3).all(|i| ones.ones_in_row(i) == 70));

        let x = random_profile(6, 5, 11);
        assert_eq!(distance_matrix(&complement(&x)), distance_matrix(&x));
        assert_eq!(complement(&complement(&x)), x);
    }

    #[test]
    fn equidistant_three_voters() {
        let x = equidistant_profile(3, 1).unwrap();
        assert_eq!((x.voters(), x.issues()), (3, 6));
        // Pairs differ on the permutations sending exactly one of them to the
        // single supported slot: 2 + 2 of the 6.
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(x.distance(a, b), if a == b { 0 } else { 4 });
            }
        }
        assert_eq!(equidistant_distance(3, 1), Some(4));

        let all = equidistant_profile(3, 3).unwrap();
        assert!(all.is_unanimous());
        assert!((0..3).all(|i| all.ones_in_row(i) == 6));
    }

    #[test]
    fn equidistant_column_sums() {
        let x = equidistant_profile(4, 2).unwrap();
        assert_eq!(x.issues(), 24);
        assert!(x.supports().iter().all(|&s| s == 2));
    }

    #[test]
    fn equidistant_distance_matches_closed_form() {
        for n in 2..=6usize {
            for n1 in 1..=n {
                let p = n1 as f64 / n as f64;
                let closed = factorial_u64(n).unwrap() as f64 * 2.0 * p * (1.0 - p) / (1.0 - 1.0 / n as f64);
                let exact = equidistant_distance(n, n1).unwrap() as f64;
                assert!((closed - exact).abs() < 1e-9 * closed.max(1.0), "n={n} n1={n1}");
            }
        }
    }

    #[test]
    fn equidistant_cap_and_validation() {
        assert!(matches!(equidistant_profile(9, 2), Err(Error::ResourceLimit(_))));
        assert!(equidistant_profile_with_cap(2, 1, 1).is_err());
        assert!(matches!(equidistant_profile(3, 0), Err(Error::Validation(_))));
        assert!(matches!(equidistant_profile(3, 4), Err(Error::Validation(_))));
    }

    #[test]
    fn iid_extremes() {
        let z = iid_issue_profile(5, 9, 0.0, 1).unwrap();
        assert!((0..5).all(|i| z.ones_in_row(i) == 0));
        let o = iid_issue_profile(5, 9, 1.0, 1).unwrap();
        assert!((0..5).all(|i| o.ones_in_row(i) == 9));
        assert!(iid_issue_profile(5, 9, 1.5, 1).is_err());
        assert_eq!(iid_issue_profile(4, 4, 0.3, 9).unwrap(), iid_issue_profile(4, 4, 0.3, 9).unwrap());
    }

    #[test]
    fn iid_column_sums_concentrate() {
        let (n, m, p) = (1000usize, 100usize, 0.3f64);
        let x = iid_issue_profile(n, m, p, 2024).unwrap();
        let mean = x.supports().iter().sum::<usize>() as f64 / m as f64;
        // Standard deviation of the mean of 100 Binomial(1000, 0.3) column sums.
        let sd = (n as f64 * p * (1.0 - p) / m as f64).sqrt();
        assert!((mean - p * n as f64).abs() <= 4.0 * sd, "mean {mean}");
    }

    #[test]
    fn two_cluster_separates_clusters() {
        let params = TwoClusterParams::new(40, 20_000, 0.75, 0.05, 0.04, 0.1, 7);
        let out = two_cluster_profile(&params).unwrap();
        assert_eq!(out.cluster_p, 30);
        let x = &out.profile;
        let mut min_pp = usize::MAX;
        let mut max_pq = 0;
        for a in 0..40 {
            for b in a + 1..40 {
                let d = x.distance(a, b);
                match (a < 30, b < 30) {
                    (true, true) => min_pp = min_pp.min(d),
                    (true, false) => max_pq = max_pq.max(d),
                    _ => assert_eq!(d, 0),
                }
            }
        }
        assert!(min_pp > max_pq, "{min_pp} <= {max_pq}");
        assert!(out.report.max_relative_deviation <= 0.1);

        let again = two_cluster_profile(&params).unwrap();
        assert_eq!(again.profile, out.profile);
    }

    #[test]
    fn two_cluster_validation_and_failure() {
        let mut params = TwoClusterParams::new(10, 100, 0.5, 0.05, 0.05, 0.1, 1);
        assert!(matches!(two_cluster_profile(&params), Err(Error::Validation(_))));
        params.q = 0.04;
        params.alpha = 1.0;
        assert!(matches!(two_cluster_profile(&params), Err(Error::Validation(_))));
        // m = 5 cannot concentrate to 1%.
        let tiny = TwoClusterParams {
            max_attempts: 20,
            ..TwoClusterParams::new(10, 5, 0.5, 0.3, 0.2, 0.01, 3)
        };
        assert!(matches!(two_cluster_profile(&tiny), Err(Error::Generation(_))));
    }

    #[test]
    fn parse_errors() {
        let err = parse_profile("2,3\n0,1,0\n1,2,0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, col: 2, .. }), "{err:?}");
        let err = parse_profile("3,2\n0,1\n1,0\n").unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
        let err = parse_profile("2,2\n0,1\n1,0,1\n").unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
        let err = parse_profile("2,2\n0,1\r\n1,0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, col: 2, .. }));
        assert!(parse_profile("0,2\n").is_err());
        assert!(parse_profile("2;2\n").is_err());
        let ok = parse_profile("2,2\n0,1\n1,0").unwrap();
        assert_eq!(ok.to_rows(), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let x = random_profile(5, 7, 3);
        write_profile(&x, &path).unwrap();
        assert_eq!(read_profile(&path).unwrap(), x);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("5,7\n"));
        assert!(!text.contains(",\n"));
    }

    proptest! {
        #[test]
        fn text_round_trip(rows in (1usize..8, 1usize..140).prop_flat_map(|(n, m)| {
            proptest::collection::vec(proptest::collection::vec(0u8..2, m), n)
        })) {
            let x = PreferenceProfile::from_rows(&rows).unwrap();
            prop_assert_eq!(parse_profile(&format_profile(&x)).unwrap(), x.clone());
            prop_assert_eq!(x.to_rows(), rows);
        }

        #[test]
        fn complement_is_involutive_and_keeps_distances(seed in any::<u64>(), n in 1usize..7, m in 1usize..150) {
            let x = random_profile(n, m, seed);
            let c = complement(&x);
            prop_assert_eq!(complement(&c), x.clone());
            for a in 0..n {
                prop_assert_eq!(c.ones_in_row(a), m - x.ones_in_row(a));
                for b in 0..n {
                    prop_assert_eq!(c.distance(a, b), x.distance(a, b));
                }
            }
        }
    }
}
