//! Sample-based parameter search: exhaustive grids for every class and a
//! multi-restart coordinate ascent for MBARPs.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{revenue, welfare, Ama, AuctionParams, Boosts, Mechanism};
use crate::error::{validation, Error, Result};
use crate::sampling::{stream_rng, SampleSet};
use crate::valuation::AllocationSpace;

/// Largest grid [`grid_search`] will enumerate.
pub const GRID_CAP: u128 = 10_000_000;

/// Mean revenue of `params` over `sample`, summed in sample order.
pub fn empirical_revenue(params: &AuctionParams, sample: &SampleSet) -> Result<f64> {
    if sample.is_empty() {
        return Err(validation("sample must be nonempty"));
    }
    let revenues = sample
        .profiles
        .par_iter()
        .map(|p| revenue(params, p))
        .collect::<Result<Vec<f64>>>()?;
    Ok(revenues.iter().fold(0.0, |acc, r| acc + r) / sample.len() as f64)
}

/// One search coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// `resolution` evenly spaced points from `lo` to `hi` inclusive.
    Range {
        lo: f64,
        hi: f64,
        resolution: usize,
    },
    Points(Vec<f64>),
}

impl Axis {
    pub fn range(lo: f64, hi: f64, resolution: usize) -> Axis {
        Axis::Range { lo, hi, resolution }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Axis::Range { lo, hi, resolution } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(validation(format!("empty axis range [{lo}, {hi}]")));
                }
                if *resolution < 2 {
                    return Err(validation(format!(
                        "axis resolution must be >= 2, got {resolution}"
                    )));
                }
            }
            Axis::Points(points) => {
                if points.is_empty() || points.iter().any(|x| !x.is_finite()) {
                    return Err(validation("axis points must be finite and nonempty"));
                }
            }
        }
        Ok(())
    }

    fn len(&self) -> usize {
        match self {
            Axis::Range { resolution, .. } => *resolution,
            Axis::Points(points) => points.len(),
        }
    }

    fn at(&self, k: usize) -> f64 {
        match self {
            Axis::Range { lo, hi, resolution } => {
                if k + 1 == *resolution {
                    *hi
                } else {
                    lo + (hi - lo) * k as f64 / (*resolution - 1) as f64
                }
            }
            Axis::Points(points) => points[k],
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match self {
            Axis::Range { lo, hi, .. } => (*lo, *hi),
            Axis::Points(points) => points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                    (a.min(*x), b.max(*x))
                }),
        }
    }

    /// Same box, `factor` times the resolution of a range axis.
    fn refined(&self, factor: usize) -> Axis {
        match self {
            Axis::Range { lo, hi, resolution } => Axis::Range {
                lo: *lo,
                hi: *hi,
                resolution: (resolution - 1) * factor + 1,
            },
            points => points.clone(),
        }
    }
}

/// Searchable parameter family. Coordinates are ordered as the fields are listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum SearchSpace {
    Mba {
        c: Axis,
    },
    Mbarp {
        c: Axis,
        reserves: Vec<Axis>,
    },
    /// Boosts `scale * pattern`.
    Lambda {
        pattern: Boosts,
        scale: Axis,
    },
    Ama {
        weights: Vec<Axis>,
        pattern: Boosts,
        scale: Axis,
    },
    /// Per-bidder terms `scale * pattern[i][b]`.
    Vvca {
        weights: Vec<Axis>,
        pattern: Vec<Vec<f64>>,
        scale: Axis,
    },
}

impl SearchSpace {
    /// `c in [0, n H_v]`, `r_j in [0, H_v]` with `H_v` the sample's value bound.
    pub fn default_mba(sample: &SampleSet, resolution: usize) -> SearchSpace {
        let h_v = sample.value_bound();
        SearchSpace::Mba {
            c: Axis::range(0.0, sample.n() as f64 * h_v, resolution),
        }
    }

    pub fn default_mbarp(sample: &SampleSet, resolution: usize) -> SearchSpace {
        let h_v = sample.value_bound();
        SearchSpace::Mbarp {
            c: Axis::range(0.0, sample.n() as f64 * h_v, resolution),
            reserves: vec![Axis::range(0.0, h_v, resolution); sample.m()],
        }
    }

    pub fn axes(&self) -> Vec<&Axis> {
        match self {
            SearchSpace::Mba { c } => vec![c],
            SearchSpace::Mbarp { c, reserves } => std::iter::once(c).chain(reserves).collect(),
            SearchSpace::Lambda { scale, .. } => vec![scale],
            SearchSpace::Ama { weights, scale, .. } | SearchSpace::Vvca { weights, scale, .. } => {
                weights.iter().chain(std::iter::once(scale)).collect()
            }
        }
    }

    /// Every range axis refined by `factor`; point axes are kept.
    pub fn refined(&self, factor: usize) -> SearchSpace {
        let r = |a: &Axis| a.refined(factor);
        match self {
            SearchSpace::Mba { c } => SearchSpace::Mba { c: r(c) },
            SearchSpace::Mbarp { c, reserves } => SearchSpace::Mbarp {
                c: r(c),
                reserves: reserves.iter().map(r).collect(),
            },
            SearchSpace::Lambda { pattern, scale } => SearchSpace::Lambda {
                pattern: pattern.clone(),
                scale: r(scale),
            },
            SearchSpace::Ama {
                weights,
                pattern,
                scale,
            } => SearchSpace::Ama {
                weights: weights.iter().map(r).collect(),
                pattern: pattern.clone(),
                scale: r(scale),
            },
            SearchSpace::Vvca {
                weights,
                pattern,
                scale,
            } => SearchSpace::Vvca {
                weights: weights.iter().map(r).collect(),
                pattern: pattern.clone(),
                scale: r(scale),
            },
        }
    }

    /// Auction at coordinates `x`.
    pub fn params_at(&self, x: &[f64]) -> AuctionParams {
        match self {
            SearchSpace::Mba { .. } => AuctionParams::Mba { c: x[0] },
            SearchSpace::Mbarp { .. } => AuctionParams::Mbarp {
                c: x[0],
                reserves: x[1..].to_vec(),
            },
            SearchSpace::Lambda { pattern, .. } => AuctionParams::LambdaAuction {
                boosts: pattern.scaled(x[0]),
            },
            SearchSpace::Ama { pattern, .. } => {
                let (w, s) = x.split_at(x.len() - 1);
                AuctionParams::GeneralAma(Ama {
                    weights: w.to_vec(),
                    boosts: pattern.scaled(s[0]),
                })
            }
            SearchSpace::Vvca { pattern, .. } => {
                let (w, s) = x.split_at(x.len() - 1);
                AuctionParams::Vvca {
                    weights: w.to_vec(),
                    c: pattern
                        .iter()
                        .map(|row| row.iter().map(|v| v * s[0]).collect())
                        .collect(),
                }
            }
        }
    }

    fn validate(&self, sample: &SampleSet) -> Result<()> {
        for axis in self.axes() {
            axis.validate()?;
        }
        let origin: Vec<f64> = self.axes().iter().map(|a| a.at(0)).collect();
        self.params_at(&origin).validate(sample.n(), sample.m())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalSearch {
    pub restarts: usize,
    /// Initial pattern step as a fraction of each coordinate's box width.
    pub initial_step: f64,
    pub shrink: f64,
    /// Pattern search stops once the step fraction falls below this.
    pub min_step: f64,
    /// Cap on accepted moves per restart.
    pub max_moves: usize,
}

impl Default for LocalSearch {
    fn default() -> LocalSearch {
        LocalSearch {
            restarts: 8,
            initial_step: 0.25,
            shrink: 0.5,
            min_step: 1e-3,
            max_moves: 200,
        }
    }
}

impl LocalSearch {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(validation("local search needs at least one restart"));
        }
        if !(self.initial_step > 0.0 && self.min_step > 0.0) {
            return Err(validation("local search steps must be positive"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(validation(format!(
                "shrink factor must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub space: SearchSpace,
    #[serde(default)]
    pub local: LocalSearch,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub trace: bool,
}

impl SearchConfig {
    pub fn new(space: SearchSpace) -> SearchConfig {
        SearchConfig {
            space,
            local: LocalSearch::default(),
            seed: 0,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// Restart index for local search; 0 for grids.
    pub run: usize,
    pub iteration: usize,
    pub coords: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub params: AuctionParams,
    pub coords: Vec<f64>,
    /// Empirical mean revenue of `params`.
    pub value: f64,
    /// Number of empirical-revenue evaluations.
    pub evaluations: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRow>,
}

/// Evaluates every grid vertex and returns the lexicographically first maximizer.
pub fn grid_search(config: &SearchConfig, sample: &SampleSet) -> Result<SearchResult> {
    sample.validate()?;
    let space = &config.space;
    space.validate(sample)?;
    let axes = space.axes();
    let total = axes
        .iter()
        .fold(1u128, |acc, a| acc.saturating_mul(a.len() as u128));
    if total > GRID_CAP {
        return Err(Error::Capacity {
            what: "grid vertices",
            n: sample.n(),
            m: sample.m(),
            needed: total,
            cap: GRID_CAP,
        });
    }
    let vertex = |mut k: usize| -> Vec<f64> {
        let mut x = vec![0.0; axes.len()];
        for (slot, axis) in x.iter_mut().zip(&axes).rev() {
            *slot = axis.at(k % axis.len());
            k /= axis.len();
        }
        x
    };
    let values = (0..total as usize)
        .into_par_iter()
        .map(|k| empirical_revenue(&space.params_at(&vertex(k)), sample))
        .collect::<Result<Vec<f64>>>()?;

    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    let trace = if config.trace {
        values
            .iter()
            .enumerate()
            .map(|(k, &value)| TraceRow {
                run: 0,
                iteration: k,
                coords: vertex(k),
                value,
            })
            .collect()
    } else {
        Vec::new()
    };
    let coords = vertex(best);
    Ok(SearchResult {
        params: space.params_at(&coords),
        coords,
        value: values[best],
        evaluations: total as u64,
        trace,
    })
}

/// Multi-restart coordinate ascent over `(c, r_1, ..., r_m)` within the box of
/// an MBARP search space.
pub fn local_search_mbarp(sample: &SampleSet, config: &SearchConfig) -> Result<SearchResult> {
    local_search_mbarp_from(sample, config, &[])
}

/// As [`local_search_mbarp`], with explicit starting points run before the
/// random restarts.
pub fn local_search_mbarp_from(
    sample: &SampleSet,
    config: &SearchConfig,
    starts: &[Vec<f64>],
) -> Result<SearchResult> {
    sample.validate()?;
    if !matches!(config.space, SearchSpace::Mbarp { .. }) {
        return Err(validation("local search requires an mbarp search space"));
    }
    config.space.validate(sample)?;
    config.local.validate()?;
    let bounds: Vec<(f64, f64)> = config.space.axes().iter().map(|a| a.bounds()).collect();
    if let Some(s) = starts.iter().find(|s| s.len() != bounds.len()) {
        return Err(Error::Dimension(format!(
            "start point has {} coordinates, expected {}",
            s.len(),
            bounds.len()
        )));
    }

    let runs = starts.len() + config.local.restarts;
    let results = (0..runs)
        .into_par_iter()
        .map(|k| {
            let start = match starts.get(k) {
                Some(s) => s
                    .iter()
                    .zip(&bounds)
                    .map(|(x, (lo, hi))| x.clamp(*lo, *hi))
                    .collect(),
                None => {
                    let mut rng = stream_rng(config.seed, k as u64);
                    bounds
                        .iter()
                        .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
                        .collect()
                }
            };
            Ascent::new(sample, config, &bounds, k).run(start)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (k, r) in results.iter().enumerate() {
        if r.value > results[best].value {
            best = k;
        }
    }
    let evaluations = results.iter().map(|r| r.evaluations).sum();
    let trace = if config.trace {
        results
            .iter()
            .flat_map(|r| r.trace.iter().cloned())
            .collect()
    } else {
        Vec::new()
    };
    let winner = &results[best];
    Ok(SearchResult {
        params: config.space.params_at(&winner.coords),
        coords: winner.coords.clone(),
        value: winner.value,
        evaluations,
        trace,
    })
}

struct Ascent<'a> {
    sample: &'a SampleSet,
    config: &'a SearchConfig,
    bounds: &'a [(f64, f64)],
    run: usize,
    evaluations: u64,
    trace: Vec<TraceRow>,
}

impl<'a> Ascent<'a> {
    fn new(
        sample: &'a SampleSet,
        config: &'a SearchConfig,
        bounds: &'a [(f64, f64)],
        run: usize,
    ) -> Ascent<'a> {
        Ascent {
            sample,
            config,
            bounds,
            run,
            evaluations: 0,
            trace: Vec::new(),
        }
    }

    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        empirical_revenue(&self.config.space.params_at(x), self.sample)
    }

    fn record(&mut self, x: &[f64], value: f64) {
        if self.config.trace {
            let iteration = self.trace.len();
            self.trace.push(TraceRow {
                run: self.run,
                iteration,
                coords: x.to_vec(),
                value,
            });
        }
    }

    fn run(mut self, mut x: Vec<f64>) -> Result<SearchResult> {
        let local = self.config.local;
        let mut value = self.eval(&x)?;
        self.record(&x, value);
        let mut rng = stream_rng(self.config.seed ^ 0x5eed, self.run as u64);
        let mut moves = 0;
        let mut step = local.initial_step;
        'outer: while moves < local.max_moves {
            let mut improved = false;
            for d in 0..x.len() {
                if let Some((t, v)) = self.line_search(&x, d, value)? {
                    x[d] = t;
                    value = v;
                    improved = true;
                    moves += 1;
                    self.record(&x, value);
                    if moves >= local.max_moves {
                        break 'outer;
                    }
                }
            }
            if improved {
                continue;
            }
            loop {
                if step < local.min_step {
                    break 'outer;
                }
                let trial: Vec<f64> = x
                    .iter()
                    .zip(self.bounds)
                    .map(|(xi, (lo, hi))| {
                        let delta = step * (hi - lo);
                        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                        (xi + sign * delta).clamp(*lo, *hi)
                    })
                    .collect();
                let v = self.eval(&trial)?;
                if v > value {
                    x = trial;
                    value = v;
                    moves += 1;
                    self.record(&x, value);
                    continue 'outer;
                }
                step *= local.shrink;
            }
        }
        Ok(SearchResult {
            params: self.config.space.params_at(&x),
            coords: x,
            value,
            evaluations: self.evaluations,
            trace: self.trace,
        })
    }

    /// Exact maximization along coordinate `d`; returns a strictly better point.
    fn line_search(&mut self, x: &[f64], d: usize, current: f64) -> Result<Option<(f64, f64)>> {
        let (lo, hi) = self.bounds[d];
        if hi <= lo {
            return Ok(None);
        }
        let mut candidates = vec![lo, hi];
        for bp in coordinate_breakpoints(&self.config.space, x, d, self.sample)? {
            let eps = 1e-9f64.max(1e-9 * bp.abs());
            for t in [bp - eps, bp, bp + eps] {
                if t >= lo && t <= hi {
                    candidates.push(t);
                }
            }
        }
        candidates.sort_by(f64::total_cmp);
        candidates.dedup();
        self.evaluations += candidates.len() as u64;
        let space = &self.config.space;
        let values = candidates
            .par_iter()
            .map(|&t| {
                let mut y = x.to_vec();
                y[d] = t;
                empirical_revenue(&space.params_at(&y), self.sample)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut best: Option<(f64, f64)> = None;
        for (&t, &v) in candidates.iter().zip(&values) {
            if v > best.map_or(current, |b| b.1) {
                best = Some((t, v));
            }
        }
        Ok(best)
    }
}

/// Points along coordinate `d` where some argmax allocation of some profile
/// can change. Along any MBARP coordinate each allocation's objective has
/// slope 0 or 1, so every (profile, problem) pair has at most one such point.
fn coordinate_breakpoints(
    space: &SearchSpace,
    x: &[f64],
    d: usize,
    sample: &SampleSet,
) -> Result<Vec<f64>> {
    let mut base = x.to_vec();
    base[d] = 0.0;
    let params = space.params_at(&base);
    let (n, m) = (sample.n(), sample.m());
    let alloc = AllocationSpace::shared(n, m)?;
    let mech = Mechanism::from_params(&params);
    let rising = |o: usize| -> bool {
        if d == 0 {
            alloc.grand_to_bidder(o)
        } else {
            alloc.bundle(o, 0).contains(d - 1)
        }
    };
    let per_profile: Vec<Vec<f64>> = sample
        .profiles
        .par_iter()
        .map(|profile| {
            let mut flat = vec![f64::NEG_INFINITY; n + 1];
            let mut slope = vec![f64::NEG_INFINITY; n + 1];
            let mut wv = vec![0.0; n];
            for o in 0..alloc.len() {
                mech.fill_weighted(profile, &alloc, o, &mut wv);
                let extra = mech.extra(&alloc, o);
                let target = if rising(o) { &mut slope } else { &mut flat };
                target[0] = target[0].max(welfare(&wv, None) + extra);
                for j in 0..n {
                    target[j + 1] = target[j + 1].max(welfare(&wv, Some(j)) + extra);
                }
            }
            flat.iter()
                .zip(&slope)
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect();
    Ok(per_profile.into_iter().flatten().collect())
}
