use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sortition_core::bounds::{self, ProfileFamily};
use sortition_core::exact_eval::{self, CommitteeRule};
use sortition_core::metrics::CostRatio;
use sortition_core::montecarlo::{self, McRatio};
use sortition_core::profiles::{self, PreferenceProfile, SingleIssueSpec, TwoClusterParams};
use sortition_core::{binomial_u64, Caps, Error, EvalReport, Rule};

use crate::args::{Cli, Command, Format, GenArgs, GenKind, Method, RuleArgs};

/// An invariant check completed but found counterexamples.
#[derive(Debug)]
pub struct DeviationFound(pub String);

impl std::fmt::Display for DeviationFound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DeviationFound {}

/// Everything needed to replay a run; embedded in every JSON output.
#[derive(Debug, Serialize)]
struct RunConfig<'a> {
    #[serde(flatten)]
    command: &'a Command,
    format: Format,
    seed: u64,
    threads: usize,
    caps: Caps,
    version: &'static str,
}

struct Ctx<'a> {
    config: RunConfig<'a>,
}

impl Ctx<'_> {
    fn seed(&self) -> u64 {
        self.config.seed
    }

    fn caps(&self) -> &Caps {
        &self.config.caps
    }

    /// Prints `result` as JSON with the run config, or `csv` verbatim.
    fn emit(&self, result: impl Serialize, csv: impl FnOnce() -> String) -> Result<()> {
        match self.config.format {
            Format::Json => {
                let doc = json!({ "config": &self.config, "result": result });
                println!("{}", serde_json::to_string_pretty(&doc)?);
            }
            Format::Csv => print!("{}", csv()),
        }
        Ok(())
    }
}

fn load_caps(path: Option<&Path>) -> Result<Caps> {
    match path {
        None => Ok(Caps::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading caps config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing caps config {}", p.display()))
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let caps = load_caps(cli.caps_config.as_deref())?;
    let randomized = matches!(
        &cli.command,
        Command::Mc(_) | Command::Eval(_) | Command::Gen(GenArgs { kind: GenKind::TwoCluster { .. } | GenKind::Iid { .. } })
    );
    // Recorded for every command; announced only where it matters.
    let seed = cli.seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        if randomized {
            eprintln!("generated seed: {s}");
        }
        s
    });
    let ctx = Ctx {
        config: RunConfig {
            command: &cli.command,
            format: cli.format,
            seed,
            threads: rayon::current_num_threads(),
            caps,
            version: env!("CARGO_PKG_VERSION"),
        },
    };
    match &cli.command {
        Command::Gen(g) => gen(&ctx, &g.kind),
        Command::Eval(a) => eval(&ctx, &a.profile, &a.rule, a.method, a.samples),
        Command::Mc(a) => mc(&ctx, &a.profile, &a.rule, a.samples),
        Command::ArSearch(a) => ar_search(&ctx, a.n, &a.k),
        Command::Bounds(a) => bounds_table(&ctx, &a.k, &a.m),
        Command::OptimalityCheck(a) => optimality(&ctx, a.n_max, a.k_max),
        Command::RegretScan(a) => regret_scan(&ctx, a),
    }
}

fn support_histogram(profile: &PreferenceProfile) -> Vec<(usize, usize)> {
    let mut hist = std::collections::BTreeMap::new();
    for s in profile.supports() {
        *hist.entry(s).or_insert(0usize) += 1;
    }
    hist.into_iter().collect()
}

fn gen(ctx: &Ctx<'_>, kind: &GenKind) -> Result<()> {
    let (profile, out, extra) = match kind {
        GenKind::SingleIssue { n, n1, out } => {
            (profiles::make_single_issue(SingleIssueSpec::new(*n, *n1)?)?, out, json!({}))
        }
        GenKind::Equidistant { n, n1, out } => {
            let p = profiles::equidistant_profile_with_cap(*n, *n1, ctx.caps().equidistant_max_n)?;
            let distance = profiles::equidistant_distance(*n, *n1);
            (p, out, json!({ "common_distance": distance }))
        }
        GenKind::TwoCluster {
            n,
            m,
            p,
            q,
            alpha,
            eps,
            max_attempts,
            out,
        } => {
            let mut params = TwoClusterParams::new(*n, *m, *alpha, *p, *q, *eps, ctx.seed());
            params.max_attempts = *max_attempts;
            let tc = profiles::two_cluster_profile(&params)?;
            let extra = json!({
                "cluster_p": tc.cluster_p,
                "attempts": tc.attempts,
                "concentration": tc.report,
            });
            (tc.profile, out, extra)
        }
        GenKind::Iid { n, m, p, out } => (profiles::iid_issue_profile(*n, *m, *p, ctx.seed())?, out, json!({})),
    };
    profiles::write_profile(&profile, out).with_context(|| format!("writing profile {}", out.display()))?;
    let hist = support_histogram(&profile);
    let result = json!({
        "path": out,
        "n": profile.voters(),
        "m": profile.issues(),
        "support_histogram": hist.iter().map(|&(s, c)| json!({"support": s, "count": c})).collect::<Vec<_>>(),
        "generator": extra,
    });
    ctx.emit(result, || {
        let mut s = String::from("support,count\n");
        for (support, count) in &hist {
            let _ = writeln!(s, "{support},{count}");
        }
        s
    })
}

fn read(path: &Path) -> Result<PreferenceProfile> {
    profiles::read_profile(path).with_context(|| format!("reading profile {}", path.display()))
}

fn parse_rule(args: &RuleArgs) -> Result<Rule> {
    Ok(Rule::from_id(&args.rule, args.k)?)
}

fn ratio_cell(r: &CostRatio) -> String {
    if r.is_infinite() {
        "inf".into()
    } else {
        r.value_f64().to_string()
    }
}

fn enumerate(profile: &PreferenceProfile, rule: Rule, caps: &Caps) -> Result<EvalReport> {
    let n = profile.voters();
    let cap = caps.enumeration_cap;
    Ok(match rule {
        Rule::Maj => exact_eval::enumerate_expected_cost(profile, n, CommitteeRule::KMaj, cap)?,
        Rule::Rd => exact_eval::enumerate_expected_cost(profile, 1, CommitteeRule::KMaj, cap)?,
        Rule::KMaj(k) => exact_eval::enumerate_expected_cost(profile, k, CommitteeRule::KMaj, cap)?,
        Rule::KRep(k) => exact_eval::enumerate_expected_cost(profile, k, CommitteeRule::KRep, cap)?,
        Rule::MinDist(_) => exact_eval::evaluate_exact(profile, rule, caps)?,
    })
}

fn eval(ctx: &Ctx<'_>, path: &Path, rule_args: &RuleArgs, method: Method, samples: u64) -> Result<()> {
    let profile = read(path)?;
    let rule = parse_rule(rule_args)?;
    rule.validate_for(profile.voters())?;
    let caps = ctx.caps();
    let mc = || montecarlo::mc_report(&profile, rule, samples, ctx.seed(), caps.enumeration_cap);
    let report = match method {
        Method::Exact => match rule {
            Rule::Maj | Rule::Rd | Rule::KMaj(_) => exact_eval::evaluate_exact(&profile, rule, caps)?,
            _ => {
                return Err(Error::Validation(format!(
                    "no hypergeometric evaluation for `{}`; use --method enum or mc",
                    rule.id()
                ))
                .into())
            }
        },
        Method::Enum => enumerate(&profile, rule, caps)?,
        Method::Mc => mc()?,
        Method::Auto => match rule {
            Rule::Maj | Rule::Rd | Rule::KMaj(_) => exact_eval::evaluate_exact(&profile, rule, caps)?,
            Rule::KRep(k) | Rule::MinDist(k) => {
                let within = binomial_u64(profile.voters() as u64, k as u64).is_some_and(|c| c <= caps.enumeration_cap);
                if within {
                    exact_eval::evaluate_exact(&profile, rule, caps)?
                } else {
                    mc()?
                }
            }
        },
    };
    ctx.emit(&report, || {
        format!(
            "expected_cost,optimal_cost,ratio,method\n{},{},{},{}\n",
            report.expected_cost,
            report.optimal_cost,
            ratio_cell(&report.ratio),
            serde_json::to_value(report.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
        )
    })
}

fn mc(ctx: &Ctx<'_>, path: &Path, rule_args: &RuleArgs, samples: u64) -> Result<()> {
    let profile = read(path)?;
    let rule = parse_rule(rule_args)?;
    let r: McRatio = montecarlo::mc_ratio(&profile, rule, samples, ctx.seed())?;
    let result = json!({ "rule": rule, "estimate": r.estimate, "optimal_cost": r.optimal_cost, "ratio": r.ratio });
    ctx.emit(result, || {
        let e = r.estimate;
        format!(
            "mean,std_error,samples,ci_low,ci_high,seed,optimal_cost,ratio\n{},{},{},{},{},{},{},{}\n",
            e.mean,
            e.std_error,
            e.samples,
            e.ci95.0,
            e.ci95.1,
            e.seed,
            r.optimal_cost,
            ratio_cell(&r.ratio)
        )
    })
}

fn ar_search(ctx: &Ctx<'_>, n: u64, ks: &[u64]) -> Result<()> {
    let rows = bounds::ar_bound_table(n, ks)?;
    ctx.emit(&rows, || bounds::ar_bound_csv(&rows))
}

fn bounds_table(ctx: &Ctx<'_>, ks: &[u64], ms: &[u64]) -> Result<()> {
    let rows = bounds::closed_form_table(ks, ms)?;
    let result = json!({
        "rows": rows,
        "kmaj3_limit": bounds::kmaj3_exact_limit(),
        "krep_many_issue_lower": bounds::krep_many_issue_lower(),
    });
    ctx.emit(result, || bounds::closed_form_csv(&rows))
}

fn optimality(ctx: &Ctx<'_>, n_max: u64, k_max: u64) -> Result<()> {
    let check = exact_eval::optimality_check(n_max, k_max)?;
    eprintln!(
        "{} deviations over {} cases ({} off-center counts free)",
        check.deviations.len(),
        check.cases,
        check.free_off_center
    );
    ctx.emit(&check, || {
        let mut s = String::from("n,n1,k,q\n");
        for d in &check.deviations {
            let _ = writeln!(s, "{},{},{},{}", d.n, d.n1, d.k, d.q);
        }
        s
    })?;
    if check.deviations.is_empty() {
        Ok(())
    } else {
        Err(DeviationFound(format!("{} deviations from majority thresholds", check.deviations.len())).into())
    }
}

fn regret_scan(ctx: &Ctx<'_>, a: &crate::args::RegretArgs) -> Result<()> {
    if a.k_step == 0 || a.k_min == 0 || a.k_min > a.k_max {
        return Err(Error::Validation("need 1 <= k-min <= k-max and k-step >= 1".into()).into());
    }
    let grid: Vec<u64> = (a.k_min..=a.k_max).step_by(a.k_step as usize).collect();
    let mut scans = vec![bounds::optimal_k_scan(a.n, a.c, &grid, ProfileFamily::OneIssue)?];
    let mut scaling = None;
    if a.check_scaling {
        scans.push(bounds::optimal_k_scan(8 * a.n, a.c, &grid, ProfileFamily::OneIssue)?);
        let ratio = scans[1].best_k as f64 / scans[0].best_k as f64;
        let (lo, hi) = bounds::SCALING_RATIO_RANGE;
        scaling = Some(json!({
            "k_small": scans[0].best_k,
            "k_large": scans[1].best_k,
            "ratio": ratio,
            "predicted": 8f64.powf(2.0 / 3.0),
            "consistent": (lo..=hi).contains(&ratio),
        }));
    }
    let result: Value = json!({ "scans": scans, "scaling": scaling });
    ctx.emit(result, || {
        let mut s = String::from("n,k,worst_regret,worst_n1\n");
        for scan in &scans {
            for r in &scan.rows {
                let _ = writeln!(s, "{},{},{},{}", scan.n, r.k, r.worst_regret, r.worst_n1);
            }
        }
        s
    })
}
