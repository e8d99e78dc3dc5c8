//! Generalization experiments and explicit bound formulas.
//!
//! Function classes are always finite grids of auctions supplied by the
//! caller; "sup over the class" means the max over that grid.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::{build_lambda_lb, HSet, LbMechanism};
use crate::engine::{revenue, AuctionParams};
use crate::error::{domain, validation, Error, Result};
use crate::sampling::{derive_seed, sample_profiles, stream_rng, ProfileDistribution, SampleSet};
use crate::valuation::ValuationProfile;

/// Largest sample size for exact sign enumeration.
pub const EXACT_RADEMACHER_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    pub mean: f64,
    /// Zero in exact mode.
    pub std_error: f64,
    /// Sign vectors averaged over (`2^N` in exact mode).
    pub draws: u64,
    pub exact: bool,
}

fn check_grid(grid: &[AuctionParams]) -> Result<()> {
    if grid.is_empty() {
        return Err(validation("auction grid must be nonempty"));
    }
    Ok(())
}

/// `revenues[a][i]` for every grid auction `a` and sample profile `i`.
fn revenue_matrix(grid: &[AuctionParams], profiles: &[ValuationProfile]) -> Result<Vec<Vec<f64>>> {
    grid.par_iter()
        .map(|a| profiles.iter().map(|p| revenue(a, p)).collect())
        .collect()
}

fn correlation_sup(revenues: &[Vec<f64>], signs: impl Fn(usize) -> f64, n: usize) -> f64 {
    revenues
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(0.0, |acc, (i, r)| acc + signs(i) * r)
                / n as f64
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Empirical Rademacher complexity of the revenue functions of `grid` on
/// `sample`. `draws = 0` enumerates all `2^N` sign vectors.
pub fn empirical_rademacher(
    sample: &SampleSet,
    grid: &[AuctionParams],
    draws: u64,
    seed: u64,
) -> Result<RademacherEstimate> {
    sample.validate()?;
    check_grid(grid)?;
    let n = sample.len();
    let revenues = revenue_matrix(grid, &sample.profiles)?;

    if draws == 0 {
        if n > EXACT_RADEMACHER_MAX {
            return Err(Error::Capacity {
                what: "exact Rademacher sign vectors",
                n: sample.n(),
                m: sample.m(),
                needed: 1u128 << n,
                cap: 1 << EXACT_RADEMACHER_MAX,
            });
        }
        let total = 1u64 << n;
        let sups: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|bits| {
                correlation_sup(
                    &revenues,
                    |i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 },
                    n,
                )
            })
            .collect();
        let mean = sups.iter().fold(0.0, |acc, s| acc + s) / total as f64;
        return Ok(RademacherEstimate {
            mean,
            std_error: 0.0,
            draws: total,
            exact: true,
        });
    }

    let sups: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            let signs: Vec<f64> = (0..n)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect();
            correlation_sup(&revenues, |i| signs[i], n)
        })
        .collect();
    let k = draws as f64;
    let mean = sups.iter().fold(0.0, |acc, s| acc + s) / k;
    let var = if draws > 1 {
        sups.iter().fold(0.0, |acc, s| acc + (s - mean).powi(2)) / (k - 1.0)
    } else {
        0.0
    };
    Ok(RademacherEstimate {
        mean,
        std_error: (var / k).sqrt(),
        draws,
        exact: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcRow {
    pub samples: usize,
    pub trial: usize,
    /// Max over the grid of `|empirical mean - reference mean|`.
    pub sup_deviation: f64,
    pub deviations: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcSummary {
    pub samples: usize,
    pub trials: usize,
    pub mean_sup_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcReport {
    pub grid: Vec<AuctionParams>,
    pub reference_size: usize,
    /// Reference mean revenue per grid auction.
    pub reference: Vec<f64>,
    pub rows: Vec<UcRow>,
    pub summary: Vec<UcSummary>,
}

fn mean_revenues(grid: &[AuctionParams], profiles: &[ValuationProfile]) -> Result<Vec<f64>> {
    let matrix = revenue_matrix(grid, profiles)?;
    Ok(matrix
        .iter()
        .map(|row| row.iter().fold(0.0, |acc, r| acc + r) / row.len() as f64)
        .collect())
}

/// Measures how far empirical revenue strays from a large reference sample,
/// uniformly over the grid, for each sample size in `sizes`.
pub fn uc_experiment(
    dist: &ProfileDistribution,
    grid: &[AuctionParams],
    sizes: &[usize],
    trials: usize,
    reference_size: usize,
    seed: u64,
) -> Result<UcReport> {
    dist.validate()?;
    check_grid(grid)?;
    let largest = *sizes
        .iter()
        .max()
        .ok_or_else(|| validation("at least one sample size is required"))?;
    if sizes.contains(&0) {
        return Err(validation("sample sizes must be at least 1"));
    }
    if trials == 0 {
        return Err(validation("at least one trial is required"));
    }
    if reference_size < 10 * largest {
        return Err(validation(format!(
            "reference sample of {reference_size} is below 10x the largest size {largest}"
        )));
    }
    let (n, m) = dist.dims();
    for a in grid {
        a.validate(n, m)?;
    }

    let reference_set = sample_profiles(dist, reference_size, derive_seed(seed, u64::MAX))?;
    let reference = mean_revenues(grid, &reference_set.profiles)?;

    let mut rows = Vec::with_capacity(sizes.len() * trials);
    let mut summary = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let block = (0..trials)
            .map(|trial| {
                let s = sample_profiles(
                    dist,
                    size,
                    derive_seed(derive_seed(seed, size as u64), trial as u64),
                )?;
                let means = mean_revenues(grid, &s.profiles)?;
                let deviations: Vec<f64> = means
                    .iter()
                    .zip(&reference)
                    .map(|(e, r)| (e - r).abs())
                    .collect();
                Ok(UcRow {
                    samples: size,
                    trial,
                    sup_deviation: deviations.iter().fold(0.0, |a: f64, d| a.max(*d)),
                    deviations,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mean = block.iter().fold(0.0, |acc, r| acc + r.sup_deviation) / trials as f64;
        summary.push(UcSummary {
            samples: size,
            trials,
            mean_sup_deviation: mean,
        });
        rows.extend(block);
    }
    Ok(UcReport {
        grid: grid.to_vec(),
        reference_size,
        reference,
        rows,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub family_size: usize,
    /// Drawn profile indices, with repetition, in draw order.
    pub draws: Vec<usize>,
    /// The distinct drawn profiles.
    pub h: HSet,
    pub empirical_rev: f64,
    /// Exact mean over the uniform distribution on the family.
    pub expected_rev: f64,
    pub gap: f64,
}

/// Trains the lambda-auction of the lower-bound family on `n_train` uniform
/// draws from it and compares training revenue with exact expected revenue.
pub fn lambda_gap_experiment(
    n: usize,
    m: usize,
    gamma: f64,
    n_train: usize,
    seed: u64,
) -> Result<GapReport> {
    let probe = build_lambda_lb(n, m, gamma, &HSet::empty())?;
    let size = probe.profiles.len();
    if n_train == 0 || n_train >= size {
        return Err(domain(format!(
            "training size must lie in [1, {size}), got {n_train}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let draws: Vec<usize> = (0..n_train).map(|_| rng.gen_range(0..size)).collect();
    let h = HSet::from_indices(draws.iter().copied());
    let instance = build_lambda_lb(n, m, gamma, &h)?;
    let LbMechanism::Auction(params) = &instance.mechanism else {
        unreachable!("lambda family uses an auction")
    };
    let revenues = instance
        .profiles
        .par_iter()
        .map(|p| revenue(params, p))
        .collect::<Result<Vec<f64>>>()?;
    let empirical_rev = draws.iter().fold(0.0, |acc, &l| acc + revenues[l]) / n_train as f64;
    let expected_rev = revenues.iter().fold(0.0, |acc, r| acc + r) / size as f64;
    Ok(GapReport {
        n,
        m,
        gamma,
        family_size: size,
        draws,
        h,
        empirical_rev,
        expected_rev,
        gap: empirical_rev - expected_rev,
    })
}

/// A bound to evaluate; all logarithms are natural.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "which", rename_all = "kebab-case")]
pub enum BoundQuery {
    /// `c sqrt(2 d ln(e N / d) / N) + c sqrt(ln(1/delta) / (2N))`.
    Pseudo {
        d: u64,
        c: f64,
        samples: u64,
        delta: f64,
    },
    /// `2 R_N + c sqrt(2 ln(2/delta) / N)`.
    Rademacher {
        r_n: f64,
        c: f64,
        samples: u64,
        delta: f64,
    },
    /// Rademacher complexity of bounded AMAs with leading constant 1.
    AmaRademacher {
        n: usize,
        m: usize,
        w_min: f64,
        w_max: f64,
        lambda_max: f64,
        h_v: f64,
        samples: u64,
    },
    /// `epsilon + c sqrt(ln(4/delta) / (2N)) + rho`.
    ErmAdditive {
        epsilon: f64,
        c: f64,
        delta: f64,
        samples: u64,
        rho: f64,
    },
    /// `epsilon + (1 + alpha) c sqrt(ln(4/delta) / (2N)) + alpha L*`.
    ErmMultiplicative {
        epsilon: f64,
        c: f64,
        delta: f64,
        samples: u64,
        alpha: f64,
        l_star: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub query: BoundQuery,
    pub value: f64,
    /// True when the formula is an O(.) expression evaluated with constant 1.
    pub order_of_magnitude: bool,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(domain(format!("{name} must be finite and >= 0, got {x}")));
    }
    Ok(())
}

fn check_samples(samples: u64) -> Result<f64> {
    if samples == 0 {
        return Err(domain("sample size must be at least 1"));
    }
    Ok(samples as f64)
}

/// Evaluates one bound formula.
pub fn eval_bound(query: &BoundQuery) -> Result<BoundResult> {
    let (value, order_of_magnitude) = match *query {
        BoundQuery::Pseudo {
            d,
            c,
            samples,
            delta,
        } => {
            check_delta(delta)?;
            check_nonneg("c", c)?;
            let n = check_samples(samples)?;
            if d == 0 || samples < d {
                return Err(domain(format!(
                    "pseudo bound needs 1 <= d <= N, got d={d}, N={samples}"
                )));
            }
            let d = d as f64;
            let growth = c * (2.0 * d * (std::f64::consts::E * n / d).ln() / n).sqrt();
            (growth + c * ((1.0 / delta).ln() / (2.0 * n)).sqrt(), false)
        }
        BoundQuery::Rademacher {
            r_n,
            c,
            samples,
            delta,
        } => {
            check_delta(delta)?;
            check_nonneg("c", c)?;
            check_nonneg("R_N", r_n)?;
            let n = check_samples(samples)?;
            (2.0 * r_n + c * (2.0 * (2.0 / delta).ln() / n).sqrt(), false)
        }
        BoundQuery::AmaRademacher {
            n,
            m,
            w_min,
            w_max,
            lambda_max,
            h_v,
            samples,
        } => {
            if n < 2 || m < 1 {
                return Err(domain(format!(
                    "AMA bound needs n >= 2, m >= 1, got n={n}, m={m}"
                )));
            }
            if !(w_min > 0.0 && w_max >= w_min && w_max.is_finite()) {
                return Err(domain(format!(
                    "weight bounds must satisfy 0 < w_min <= w_max, got [{w_min}, {w_max}]"
                )));
            }
            check_nonneg("H_lambda", lambda_max)?;
            check_nonneg("H_v", h_v)?;
            let big_n = check_samples(samples)?;
            let (nf, mf) = (n as f64, m as f64);
            let h_hat = h_v.max(1.0);
            let lead = nf.powf(mf + 2.0) * (w_max * h_v + lambda_max) / w_min;
            let rate = (mf * nf.ln() / big_n).sqrt();
            let tail =
                nf * h_hat * (nf * w_max + lambda_max) / w_min + (nf.powf(mf) * big_n.ln()).sqrt();
            (lead * rate * tail, true)
        }
        BoundQuery::ErmAdditive {
            epsilon,
            c,
            delta,
            samples,
            rho,
        } => {
            check_delta(delta)?;
            check_nonneg("epsilon", epsilon)?;
            check_nonneg("c", c)?;
            check_nonneg("rho", rho)?;
            let n = check_samples(samples)?;
            (
                epsilon + c * ((4.0 / delta).ln() / (2.0 * n)).sqrt() + rho,
                false,
            )
        }
        BoundQuery::ErmMultiplicative {
            epsilon,
            c,
            delta,
            samples,
            alpha,
            l_star,
        } => {
            check_delta(delta)?;
            check_nonneg("epsilon", epsilon)?;
            check_nonneg("c", c)?;
            check_nonneg("L*", l_star)?;
            if !(0.0..1.0).contains(&alpha) {
                return Err(domain(format!("alpha must lie in [0, 1), got {alpha}")));
            }
            let n = check_samples(samples)?;
            let hoeffding = c * ((4.0 / delta).ln() / (2.0 * n)).sqrt();
            (epsilon + (1.0 + alpha) * hoeffding + alpha * l_star, false)
        }
    };
    Ok(BoundResult {
        query: *query,
        value,
        order_of_magnitude,
    })
}
