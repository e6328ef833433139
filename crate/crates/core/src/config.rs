use serde::{Deserialize, Serialize};

/// Resource caps that gate exponential-time paths.
///
/// Every field has a default so a partial config file only overrides what it names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    /// Largest number of committees `C(n, k)` an enumeration may visit.
    pub enumeration_cap: u64,
    /// Up to this population size hypergeometric terms use exact big-integer binomials.
    pub exact_binomial_max_n: u64,
    /// Largest voter count accepted by the equidistant generator (`m = n!` issues).
    pub equidistant_max_n: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            enumeration_cap: 1_000_000,
            exact_binomial_max_n: 1000,
            equidistant_max_n: 8,
        }
    }
}
