//! Committee-based voting rules on binary multi-issue preference profiles.
//!
//! A profile is an `n x m` 0/1 matrix: `n` voters, each with a position on `m`
//! binary issues. The cost of an outcome vector is the total Hamming distance
//! from it to every voter; the majority vector on each issue is optimal. This
//! crate evaluates how far randomized committee rules fall from that optimum:
//!
//! * [`rules`]: full majority, random dictator, k-sortition (uniform committee,
//!   simple majority), weighted k-sortition (members weighted by delegation
//!   to the closest member) and the min-total-distance committee rule.
//! * [`exact_eval`]: exact expected costs via the hypergeometric law, a
//!   brute-force committee enumeration oracle, one-issue approximation ratio
//!   scans and the coefficient comparison behind the optimality of majority.
//! * [`montecarlo`]: seeded, block-parallel estimation at scales enumeration
//!   cannot reach.
//! * [`bounds`]: closed-form bounds and constants, regret and committee size.
//! * [`profiles`]: profile storage, the text file format and adversarial
//!   generators (cloned issues, equidistant n!-issue profiles, two clusters).
//!
//! ```
//! use sortition_core::{exact_eval, profiles};
//!
//! let profile = profiles::make_single_issue(profiles::SingleIssueSpec::new(10, 1)?)?;
//! let report = exact_eval::kmaj_expected_cost_exact(&profile, 1)?;
//! assert!((report.ratio.value_f64() - 1.8).abs() < 1e-12);
//! # Ok::<(), sortition_core::Error>(())
//! ```

pub mod bounds;
mod combin;
pub mod config;
mod error;
pub mod exact_eval;
pub mod metrics;
pub mod montecarlo;
pub mod normal;
pub mod profiles;
pub mod rules;

pub use combin::{binomial_u64, Combinations};
pub use config::Caps;
pub use error::{Error, Result};
pub use exact_eval::{EvalMethod, EvalReport, HypergeomParams};
pub use metrics::{CostRatio, DistanceMatrix, OutcomeVector};
pub use montecarlo::McEstimate;
pub use profiles::PreferenceProfile;
pub use rules::{Committee, Rule};
