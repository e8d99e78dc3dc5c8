//! `amd`: command-line front end for the auction engine and experiments.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 invalid input or failed operation.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amd_core::constructions::{
    build_family, builtin_shatter_instance, check_shattering, family_size, verify_lower_bound,
    Family, HSet, LowerBoundInstance, ShatterInstance, ShatterReport, VerifyReport,
};
use amd_core::engine::{run_auction, AuctionOutcome, AuctionParams};
use amd_core::learning::{
    empirical_rademacher, eval_bound, lambda_gap_experiment, uc_experiment, BoundQuery,
    BoundResult, GapReport, RademacherEstimate, UcReport,
};
use amd_core::mba::{build_mba_curve, optimize_mba, MbaCurve, MbaOptimum};
use amd_core::sampling::{sample_profiles, ProfileDistribution, SampleSet};
use amd_core::search::{grid_search, local_search_mbarp, SearchConfig, SearchResult, SearchSpace};
use amd_core::valuation::ValuationProfile;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use output::{fmt_float, json, write_atomic, Table};

#[derive(Debug, Parser)]
#[command(
    name = "amd",
    version,
    about = "Sample-based automated mechanism design lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Artifact path; written atomically. Without it the artifact goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Artifact format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Master seed for every random choice.
    #[arg(long, global = true, env = "AMD_SEED", default_value_t = 0)]
    seed: u64,

    /// Worker thread cap; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one auction on one valuation profile.
    RunAuction {
        /// Auction parameters (JSON, tagged by "class").
        #[arg(long)]
        auction: PathBuf,
        /// Valuation profile (JSON).
        #[arg(long)]
        profile: PathBuf,
    },
    /// Piecewise-linear MBA revenue curve of one profile.
    Curve {
        #[arg(long)]
        profile: PathBuf,
    },
    /// Maximize empirical revenue over a sample.
    Optimize {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        /// Upper end of the discount range for the exact MBA optimizer
        /// (default: n times the sample's value bound).
        #[arg(long)]
        c_max: Option<f64>,
        /// Search configuration (JSON); the global seed replaces its seed.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Class searched when no configuration is given.
        #[arg(long, value_enum, default_value_t = SpaceClass::Mba)]
        class: SpaceClass,
        /// Grid points per axis when no configuration is given.
        #[arg(long, default_value_t = 101)]
        resolution: usize,
    },
    /// Verify the revenue claims of a lower-bound family instance.
    Verify {
        /// Instance file (JSON); replaces the family flags.
        #[arg(long, conflicts_with_all = ["family", "subset_seed", "h"])]
        instance: Option<PathBuf>,
        #[arg(long, value_parser = parse_family, required_unless_present = "instance")]
        family: Option<Family>,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        /// Seed of a uniformly random subset H of the family.
        #[arg(long, conflicts_with = "h")]
        subset_seed: Option<u64>,
        /// Explicit subset H as a hex bitmask ("0x...").
        #[arg(long)]
        h: Option<String>,
        /// Also write the built instance here.
        #[arg(long)]
        save_instance: Option<PathBuf>,
    },
    /// Label a sample by auction revenue against witnesses and count labelings.
    Shatter {
        /// Built-in instance name or instance file (JSON).
        #[arg(long)]
        instance: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
    },
    /// Uniform-convergence experiment over an auction grid.
    Uc {
        /// Profile distribution (JSON, tagged by "kind").
        #[arg(long)]
        dist: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Sample sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Reference sample size (default: 10 times the largest size).
        #[arg(long)]
        reference_size: Option<usize>,
    },
    /// Empirical Rademacher complexity of an auction grid on a sample.
    Rademacher {
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Monte Carlo sign draws; 0 enumerates all sign vectors.
        #[arg(long, default_value_t = 0)]
        draws: u64,
    },
    /// Train the lambda-auction lower-bound construction and measure its gap.
    Gap {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        n_train: usize,
    },
    /// Evaluate a generalization bound.
    Bounds {
        #[command(subcommand)]
        which: BoundCommand,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Exact breakpoint optimizer (MBA only).
    Exact,
    Grid,
    /// Coordinate and pattern search (MBARP only).
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpaceClass {
    Mba,
    Mbarp,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Sample set (JSON).
    #[arg(long, conflicts_with = "dist", required_unless_present = "dist")]
    samples: Option<PathBuf>,
    /// Distribution to draw the sample from, using the global seed.
    #[arg(long, requires = "count")]
    dist: Option<PathBuf>,
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Auction grid: JSON list of auction parameters.
    #[arg(
        long,
        conflicts_with = "mba_grid",
        required_unless_present = "mba_grid"
    )]
    grid: Option<PathBuf>,
    /// MBA grid "lo:hi:count" of evenly spaced discounts.
    #[arg(long)]
    mba_grid: Option<String>,
}

#[derive(Debug, Subcommand)]
enum BoundCommand {
    /// Pseudo-dimension bound.
    Pseudo {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        delta: f64,
    },
    /// Rademacher-complexity bound.
    Rademacher {
        #[arg(long)]
        r_n: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        delta: f64,
    },
    /// Rademacher complexity of bounded affine maximizer auctions.
    AmaRademacher {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        w_min: f64,
        #[arg(long)]
        w_max: f64,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long)]
        h_v: f64,
        #[arg(long)]
        samples: u64,
    },
    /// Additive-error guarantee of approximate empirical revenue maximization.
    ErmAdditive {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        rho: f64,
    },
    /// Multiplicative-error guarantee of approximate empirical revenue maximization.
    ErmMultiplicative {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        l_star: f64,
    },
}

impl BoundCommand {
    fn query(&self) -> BoundQuery {
        match *self {
            BoundCommand::Pseudo {
                d,
                c,
                samples,
                delta,
            } => BoundQuery::Pseudo {
                d,
                c,
                samples,
                delta,
            },
            BoundCommand::Rademacher {
                r_n,
                c,
                samples,
                delta,
            } => BoundQuery::Rademacher {
                r_n,
                c,
                samples,
                delta,
            },
            BoundCommand::AmaRademacher {
                n,
                m,
                w_min,
                w_max,
                lambda_max,
                h_v,
                samples,
            } => BoundQuery::AmaRademacher {
                n,
                m,
                w_min,
                w_max,
                lambda_max,
                h_v,
                samples,
            },
            BoundCommand::ErmAdditive {
                epsilon,
                c,
                delta,
                samples,
                rho,
            } => BoundQuery::ErmAdditive {
                epsilon,
                c,
                delta,
                samples,
                rho,
            },
            BoundCommand::ErmMultiplicative {
                epsilon,
                c,
                delta,
                samples,
                alpha,
                l_star,
            } => BoundQuery::ErmMultiplicative {
                epsilon,
                c,
                delta,
                samples,
                alpha,
                l_star,
            },
        }
    }
}

fn parse_family(s: &str) -> Result<Family, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| {
        format!("unknown family {s:?}; expected lambda-lb, vvca-lb or bundle-reserve-lb")
    })
}

/// Why a command did not produce an artifact.
struct Failure(String);

impl From<amd_core::Error> for Failure {
    fn from(e: amd_core::Error) -> Failure {
        Failure(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(msg.into())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Outcome<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// A rendered artifact plus a human-readable summary.
struct Artifact {
    body: String,
    summary: String,
    /// Set when the artifact reports a failed verification.
    failed: bool,
}

fn artifact<T: Serialize>(
    format: Format,
    value: &T,
    csv: impl FnOnce(&T) -> Table,
    summary: String,
) -> Artifact {
    let body = match format {
        Format::Json => json(value),
        Format::Csv => csv(value).render(),
    };
    Artifact {
        body,
        summary,
        failed: false,
    }
}

fn load_sample(args: &SampleArgs, seed: u64) -> Outcome<SampleSet> {
    if let Some(path) = &args.samples {
        let sample: SampleSet = read_json(path)?;
        sample.validate()?;
        return Ok(sample);
    }
    let dist: ProfileDistribution = read_json(args.dist.as_ref().expect("clap requires dist"))?;
    let count = args.count.expect("clap requires count");
    Ok(sample_profiles(&dist, count, seed)?)
}

fn load_grid(args: &GridArgs) -> Outcome<Vec<AuctionParams>> {
    if let Some(path) = &args.grid {
        return read_json(path);
    }
    let spec = args.mba_grid.as_deref().expect("clap requires a grid");
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || invalid(format!("mba grid must be lo:hi:count, got {spec:?}"));
    let [lo, hi, count] = parts[..] else {
        return Err(bad());
    };
    let (lo, hi): (f64, f64) = (
        lo.parse().map_err(|_| bad())?,
        hi.parse().map_err(|_| bad())?,
    );
    let count: usize = count.parse().map_err(|_| bad())?;
    if count == 0 || !lo.is_finite() || !hi.is_finite() || lo > hi || (count == 1 && lo != hi) {
        return Err(bad());
    }
    Ok((0..count)
        .map(|k| {
            let c = if k + 1 == count {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (count - 1) as f64
            };
            AuctionParams::Mba { c }
        })
        .collect())
}

fn run_auction_cmd(cli: &Cli, auction: &Path, profile: &Path) -> Outcome<Artifact> {
    let params: AuctionParams = read_json(auction)?;
    let profile: ValuationProfile = read_json(profile)?;
    let out = run_auction(&params, &profile)?;
    let summary = format!("revenue: {}", fmt_float(out.revenue));
    Ok(artifact(cli.format, &out, outcome_table, summary))
}

fn outcome_table(out: &AuctionOutcome) -> Table {
    let mut t = Table::new(["bidder", "bundle", "payment"]);
    for (j, p) in out.payments.iter().enumerate() {
        let bundle = out.chosen.bundle_of(j + 1);
        t.push(vec![j.to_string(), bundle.0.to_string(), fmt_float(*p)]);
    }
    t.push(vec![
        "revenue".into(),
        String::new(),
        fmt_float(out.revenue),
    ]);
    t
}

fn curve_cmd(cli: &Cli, profile: &Path) -> Outcome<Artifact> {
    let profile: ValuationProfile = read_json(profile)?;
    let curve = build_mba_curve(&profile)?;
    let summary = format!(
        "{} segments, c* = {}",
        curve.segments.len(),
        fmt_float(curve.c_star)
    );
    Ok(artifact(cli.format, &curve, curve_table, summary))
}

fn curve_table(curve: &MbaCurve) -> Table {
    let mut t = Table::new(["start", "end", "slope", "intercept"]);
    for s in &curve.segments {
        t.push(vec![
            fmt_float(s.start),
            s.end.map(fmt_float).unwrap_or_default(),
            fmt_float(s.slope),
            fmt_float(s.intercept),
        ]);
    }
    t
}

#[allow(clippy::too_many_arguments)]
fn optimize_cmd(
    cli: &Cli,
    sample: &SampleArgs,
    method: Method,
    c_max: Option<f64>,
    config: Option<&Path>,
    class: SpaceClass,
    resolution: usize,
) -> Outcome<Artifact> {
    let sample = load_sample(sample, cli.seed)?;
    if method == Method::Exact {
        if config.is_some() || class != SpaceClass::Mba {
            return Err(invalid(
                "the exact optimizer handles MBA only; use --method grid or local",
            ));
        }
        let c_max = c_max.unwrap_or(sample.n() as f64 * sample.value_bound());
        let best = optimize_mba(&sample, c_max)?;
        let summary = format!(
            "c = {}, revenue = {}{}",
            fmt_float(best.c_best),
            fmt_float(best.avg_revenue),
            if best.attained {
                ""
            } else {
                " (supremum, not attained)"
            }
        );
        return Ok(artifact(cli.format, &best, optimum_table, summary));
    }
    let mut config = match config {
        Some(path) => read_json::<SearchConfig>(path)?,
        None => SearchConfig::new(match class {
            SpaceClass::Mba => SearchSpace::default_mba(&sample, resolution),
            SpaceClass::Mbarp => SearchSpace::default_mbarp(&sample, resolution),
        }),
    };
    config.seed = cli.seed;
    let result = match method {
        Method::Grid => grid_search(&config, &sample)?,
        _ => local_search_mbarp(&sample, &config)?,
    };
    let summary = format!(
        "best {:?}, revenue = {}, {} evaluations",
        result
            .coords
            .iter()
            .map(|x| fmt_float(*x))
            .collect::<Vec<_>>(),
        fmt_float(result.value),
        result.evaluations
    );
    Ok(artifact(cli.format, &result, search_table, summary))
}

fn optimum_table(best: &MbaOptimum) -> Table {
    let mut t = Table::new(["c_best", "avg_revenue", "attained"]);
    t.push(vec![
        fmt_float(best.c_best),
        fmt_float(best.avg_revenue),
        best.attained.to_string(),
    ]);
    t
}

fn search_table(result: &SearchResult) -> Table {
    let dims = result.coords.len();
    let mut header = vec!["run".to_string(), "iteration".to_string()];
    header.extend((0..dims).map(|k| format!("x{k}")));
    header.push("value".into());
    let mut t = Table::new(header);
    let row = |run: String, it: String, coords: &[f64], value: f64| {
        let mut r = vec![run, it];
        r.extend(coords.iter().map(|x| fmt_float(*x)));
        r.push(fmt_float(value));
        r
    };
    for tr in &result.trace {
        t.push(row(
            tr.run.to_string(),
            tr.iteration.to_string(),
            &tr.coords,
            tr.value,
        ));
    }
    t.push(row(
        "best".into(),
        result.evaluations.to_string(),
        &result.coords,
        result.value,
    ));
    t
}

#[allow(clippy::too_many_arguments)]
fn verify_cmd(
    cli: &Cli,
    instance: Option<&Path>,
    family: Option<Family>,
    n: usize,
    m: usize,
    gamma: f64,
    subset_seed: Option<u64>,
    h: Option<&str>,
    save: Option<&Path>,
) -> Outcome<Artifact> {
    let inst: LowerBoundInstance = match instance {
        Some(path) => read_json(path)?,
        None => {
            let family = family.expect("clap requires family");
            let len = family_size(family, n, m)
                .ok_or_else(|| invalid(format!("{family} is not defined for n={n}, m={m}")))?;
            let len = usize::try_from(len).map_err(|_| invalid("family too large"))?;
            let h = match (h, subset_seed) {
                (Some(hex), _) => HSet::from_hex(hex)?,
                (None, Some(s)) => HSet::random(len, s),
                (None, None) => HSet::random(len, cli.seed),
            };
            build_family(family, n, m, gamma, &h)?
        }
    };
    if let Some(path) = save {
        write_atomic(path, &json(&inst))
            .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    let report = verify_lower_bound(&inst)?;
    let mut summary = format!(
        "{}: {} profiles, all_ok: {}",
        report.family,
        report.rows.len(),
        report.all_ok
    );
    for &l in &report.violations {
        let row = &report.rows[l];
        let relation = serde_json::to_value(row.claim.relation).expect("relation serializes");
        summary.push_str(&format!(
            "\nviolated claim: profile {l}: revenue {} {} {} fails",
            fmt_float(row.revenue),
            relation.as_str().unwrap_or("?"),
            fmt_float(row.claim.value)
        ));
    }
    let mut art = artifact(cli.format, &report, verify_table, summary);
    art.failed = !report.all_ok;
    Ok(art)
}

fn verify_table(report: &VerifyReport) -> Table {
    let mut t = Table::new(["index", "in_h", "revenue", "relation", "claim", "ok"]);
    for r in &report.rows {
        let relation = serde_json::to_value(r.claim.relation).expect("relation serializes");
        t.push(vec![
            r.index.to_string(),
            r.in_h.to_string(),
            fmt_float(r.revenue),
            relation.as_str().unwrap_or("?").to_string(),
            fmt_float(r.claim.value),
            r.ok.to_string(),
        ]);
    }
    t
}

fn shatter_cmd(cli: &Cli, instance: &str, n: usize, m: usize) -> Outcome<Artifact> {
    let path = Path::new(instance);
    let inst: ShatterInstance = if path.is_file() {
        read_json(path)?
    } else {
        builtin_shatter_instance(instance, n, m)?
    };
    let report = check_shattering(&inst)?;
    let summary = shatter_text(&inst, &report);
    Ok(artifact(
        cli.format,
        &report,
        |r| shatter_table(&inst, r),
        summary,
    ))
}

fn auction_label(a: &AuctionParams) -> String {
    match a {
        AuctionParams::Mba { c } => format!("mba c={}", fmt_float(*c)),
        other => other.class_name().to_string(),
    }
}

fn shatter_text(inst: &ShatterInstance, report: &ShatterReport) -> String {
    let mut lines = vec![];
    let mut head = format!("{:<16}", "auction");
    for i in 0..inst.samples.len() {
        head.push_str(&format!("{:>12}", format!("v{}", i + 1)));
    }
    lines.push(head);
    for (a, row) in inst.auctions.iter().zip(&report.revenues) {
        let mut line = format!("{:<16}", auction_label(a));
        for r in row {
            line.push_str(&format!("{:>12}", fmt_float(*r)));
        }
        lines.push(line);
    }
    let mut wit = format!("{:<16}", "witness");
    for z in &inst.witnesses {
        wit.push_str(&format!("{:>12}", fmt_float(*z)));
    }
    lines.push(wit);
    lines.push(format!("labelings: {}", report.achieved_labelings));
    lines.push(format!("shattered: {}", report.shattered));
    lines.join("\n")
}

fn shatter_table(inst: &ShatterInstance, report: &ShatterReport) -> Table {
    let k = inst.samples.len();
    let mut header = vec!["auction".to_string()];
    header.extend((0..k).map(|i| format!("revenue_{i}")));
    header.extend((0..k).map(|i| format!("label_{i}")));
    let mut t = Table::new(header);
    for (a, (revs, labels)) in report.revenues.iter().zip(&report.labels).enumerate() {
        let mut row = vec![a.to_string()];
        row.extend(revs.iter().map(|r| fmt_float(*r)));
        row.extend(labels.iter().map(|l| l.to_string()));
        t.push(row);
    }
    t
}

fn uc_cmd(
    cli: &Cli,
    dist: &Path,
    grid: &GridArgs,
    sizes: &[usize],
    trials: usize,
    reference_size: Option<usize>,
) -> Outcome<Artifact> {
    let dist: ProfileDistribution = read_json(dist)?;
    let grid = load_grid(grid)?;
    let largest = sizes.iter().copied().max().unwrap_or(0);
    let reference_size = reference_size.unwrap_or(10 * largest);
    let report = uc_experiment(&dist, &grid, sizes, trials, reference_size, cli.seed)?;
    let summary = report
        .summary
        .iter()
        .map(|s| {
            format!(
                "N={}: mean sup deviation {}",
                s.samples,
                fmt_float(s.mean_sup_deviation)
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    Ok(artifact(cli.format, &report, uc_table, summary))
}

fn uc_table(report: &UcReport) -> Table {
    let mut t = Table::new(["samples", "trial", "sup_deviation"]);
    for r in &report.rows {
        t.push(vec![
            r.samples.to_string(),
            r.trial.to_string(),
            fmt_float(r.sup_deviation),
        ]);
    }
    t
}

fn rademacher_cmd(
    cli: &Cli,
    sample: &SampleArgs,
    grid: &GridArgs,
    draws: u64,
) -> Outcome<Artifact> {
    let sample = load_sample(sample, cli.seed)?;
    let grid = load_grid(grid)?;
    let est = empirical_rademacher(&sample, &grid, draws, cli.seed)?;
    let summary = format!(
        "rademacher: {} (se {}, {} sign vectors{})",
        fmt_float(est.mean),
        fmt_float(est.std_error),
        est.draws,
        if est.exact { ", exact" } else { "" }
    );
    Ok(artifact(cli.format, &est, rademacher_table, summary))
}

fn rademacher_table(est: &RademacherEstimate) -> Table {
    let mut t = Table::new(["mean", "std_error", "draws", "exact"]);
    t.push(vec![
        fmt_float(est.mean),
        fmt_float(est.std_error),
        est.draws.to_string(),
        est.exact.to_string(),
    ]);
    t
}

fn gap_cmd(cli: &Cli, n: usize, m: usize, gamma: f64, n_train: usize) -> Outcome<Artifact> {
    let report = lambda_gap_experiment(n, m, gamma, n_train, cli.seed)?;
    let summary = format!(
        "empirical {}, expected {}, gap {}",
        fmt_float(report.empirical_rev),
        fmt_float(report.expected_rev),
        fmt_float(report.gap)
    );
    Ok(artifact(cli.format, &report, gap_table, summary))
}

fn gap_table(r: &GapReport) -> Table {
    let mut t = Table::new([
        "n",
        "m",
        "gamma",
        "family_size",
        "n_train",
        "empirical_rev",
        "expected_rev",
        "gap",
    ]);
    t.push(vec![
        r.n.to_string(),
        r.m.to_string(),
        fmt_float(r.gamma),
        r.family_size.to_string(),
        r.draws.len().to_string(),
        fmt_float(r.empirical_rev),
        fmt_float(r.expected_rev),
        fmt_float(r.gap),
    ]);
    t
}

fn bounds_cmd(cli: &Cli, which: &BoundCommand) -> Outcome<Artifact> {
    let result = eval_bound(&which.query())?;
    let summary = format!(
        "{}{}",
        fmt_float(result.value),
        if result.order_of_magnitude {
            " (order of magnitude)"
        } else {
            ""
        }
    );
    Ok(artifact(cli.format, &result, bound_table, summary))
}

/// The query's fields in name order, then the value.
fn bound_table(result: &BoundResult) -> Table {
    let serde_json::Value::Object(fields) =
        serde_json::to_value(result.query).expect("query serializes")
    else {
        unreachable!("queries serialize as objects")
    };
    let mut header = vec![];
    let mut row = vec![];
    for (k, v) in fields {
        header.push(k);
        row.push(match v {
            serde_json::Value::Number(x) if !x.is_f64() => x.to_string(),
            serde_json::Value::Number(x) => fmt_float(x.as_f64().expect("finite")),
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        });
    }
    header.extend(["value".to_string(), "order_of_magnitude".to_string()]);
    row.extend([
        fmt_float(result.value),
        result.order_of_magnitude.to_string(),
    ]);
    let mut t = Table::new(header);
    t.push(row);
    t
}

fn dispatch(cli: &Cli) -> Outcome<Artifact> {
    match &cli.command {
        Command::RunAuction { auction, profile } => run_auction_cmd(cli, auction, profile),
        Command::Curve { profile } => curve_cmd(cli, profile),
        Command::Optimize {
            sample,
            method,
            c_max,
            config,
            class,
            resolution,
        } => optimize_cmd(
            cli,
            sample,
            *method,
            *c_max,
            config.as_deref(),
            *class,
            *resolution,
        ),
        Command::Verify {
            instance,
            family,
            n,
            m,
            gamma,
            subset_seed,
            h,
            save_instance,
        } => verify_cmd(
            cli,
            instance.as_deref(),
            *family,
            *n,
            *m,
            *gamma,
            *subset_seed,
            h.as_deref(),
            save_instance.as_deref(),
        ),
        Command::Shatter { instance, n, m } => shatter_cmd(cli, instance, *n, *m),
        Command::Uc {
            dist,
            grid,
            sizes,
            trials,
            reference_size,
        } => uc_cmd(cli, dist, grid, sizes, *trials, *reference_size),
        Command::Rademacher {
            sample,
            grid,
            draws,
        } => rademacher_cmd(cli, sample, grid, *draws),
        Command::Gap {
            n,
            m,
            gamma,
            n_train,
        } => gap_cmd(cli, *n, *m, *gamma, *n_train),
        Command::Bounds { which } => bounds_cmd(cli, which),
    }
}

/// With `--out` the artifact goes to the file and the summary to stdout;
/// otherwise the artifact goes to stdout and the summary to stderr.
fn emit(cli: &Cli, art: &Artifact) -> Outcome<()> {
    match &cli.out {
        Some(path) => {
            write_atomic(path, &art.body)
                .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
            println!("{}", art.summary);
        }
        None => {
            print!("{}", art.body);
            eprintln!("{}", art.summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .expect("thread pool is configured once");
    }
    match dispatch(&cli).and_then(|art| emit(&cli, &art).map(|()| art.failed)) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
