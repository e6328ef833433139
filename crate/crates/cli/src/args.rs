use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "sortition", version, about = "Evaluate committee voting rules on binary multi-issue profiles")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,

    /// Seed for randomized commands; one is generated and printed when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML file overriding resource caps.
    #[arg(long, global = true)]
    pub caps_config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Generate a profile file.
    Gen(GenArgs),
    /// Expected cost and ratio of a rule on a profile file.
    Eval(EvalArgs),
    /// Exact one-issue approximation ratio of k-sortition against its bounds.
    ArSearch(ArSearchArgs),
    /// Monte Carlo estimate of a rule's cost and ratio.
    Mc(McArgs),
    /// Table of closed-form bounds.
    Bounds(BoundsArgs),
    /// Check that majority thresholds are optimal on equidistant profiles.
    OptimalityCheck(OptimalityArgs),
    /// Worst-case regret per committee size and the minimizing size.
    RegretScan(RegretArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[command(subcommand)]
    pub kind: GenKind,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GenKind {
    /// One issue, `n1` of `n` voters supporting 1.
    SingleIssue {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// `n!` issues, one per voter permutation; all voters pairwise equidistant.
    Equidistant {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// A diffuse cluster P and a near-unanimous cluster Q.
    TwoCluster {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        max_attempts: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Independent issues, each voter supporting 1 with probability `p`.
    Iid {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Hypergeometric for maj/rd/kmaj, enumeration for krep/mindist within the cap, else Monte Carlo.
    Auto,
    /// Hypergeometric (maj, rd, kmaj only).
    Exact,
    /// Committee enumeration.
    Enum,
    /// Monte Carlo.
    Mc,
}

#[derive(Debug, Args, Serialize)]
pub struct RuleArgs {
    /// Rule id: maj, rd, kmaj, krep, mindist.
    #[arg(long)]
    pub rule: String,
    /// Committee size for kmaj, krep, mindist.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
    /// Samples when Monte Carlo is used.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub rule: RuleArgs,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ArSearchArgs {
    #[arg(long)]
    pub n: u64,
    /// Committee sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    /// Committee sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<u64>,
    /// Issue counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub m: Vec<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimalityArgs {
    #[arg(long, default_value_t = 30)]
    pub n_max: u64,
    #[arg(long, default_value_t = 9)]
    pub k_max: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct RegretArgs {
    #[arg(long)]
    pub n: u64,
    /// Elicitation cost per member and issue.
    #[arg(long)]
    pub c: f64,
    #[arg(long, default_value_t = 1)]
    pub k_min: u64,
    #[arg(long)]
    pub k_max: u64,
    #[arg(long, default_value_t = 1)]
    pub k_step: u64,
    /// Also scan at 8n and compare the optimal sizes.
    #[arg(long)]
    pub check_scaling: bool,
}
