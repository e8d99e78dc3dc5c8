//! Exhaustive evaluation of affine maximizer auctions and their subclasses.
//!
//! Every auction is run by enumerating all `(n+1)^m` allocations. The chosen
//! allocation maximizes `sum_j w_j v_j(o_j) + lambda(o)` (plus the seller's
//! reserve value for MBARPs); bidder `j` pays
//! `(1/w_j) [obj_-j(o_-j) - obj_-j(o*)]`, where `obj_-j` drops `j`'s own value
//! term but keeps the boost.
//!
//! Ties on the boosted objective go to the allocation with the larger
//! unboosted bidder welfare, then to the smaller allocation index. The same
//! rule is used for the removed-bidder problems.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::valuation::{allocation_count, Allocation, AllocationSpace, Bundle, ValuationProfile};

/// Boost tables with at most this many allocations are stored densely.
pub const DENSE_BOOST_LIMIT: u128 = 1 << 16;

/// Per-allocation additive boosts `lambda(o)`, zero where not listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoostsRepr", into = "BoostsRepr")]
pub enum Boosts {
    Dense(Vec<f64>),
    /// Sorted by allocation index, no duplicates.
    Sparse(Vec<(u64, f64)>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BoostsRepr {
    Dense(Vec<f64>),
    Sparse(Vec<(u64, f64)>),
}

impl TryFrom<BoostsRepr> for Boosts {
    type Error = Error;

    fn try_from(repr: BoostsRepr) -> Result<Boosts> {
        match repr {
            BoostsRepr::Dense(values) => Ok(Boosts::Dense(values)),
            BoostsRepr::Sparse(entries) => Boosts::sparse(entries),
        }
    }
}

impl From<Boosts> for BoostsRepr {
    fn from(b: Boosts) -> BoostsRepr {
        match b {
            Boosts::Dense(values) => BoostsRepr::Dense(values),
            Boosts::Sparse(entries) => BoostsRepr::Sparse(entries),
        }
    }
}

impl Boosts {
    pub fn zero() -> Boosts {
        Boosts::Sparse(Vec::new())
    }

    /// Sparse table from arbitrary-order entries; duplicate indices are an error.
    pub fn sparse(mut entries: Vec<(u64, f64)>) -> Result<Boosts> {
        entries.sort_by_key(|e| e.0);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(validation(format!("duplicate boost index {}", w[0].0)));
        }
        Ok(Boosts::Sparse(entries))
    }

    /// Picks the dense layout when the allocation space is small enough.
    pub fn from_entries(entries: Vec<(u64, f64)>, count: u128) -> Result<Boosts> {
        if count <= DENSE_BOOST_LIMIT {
            let mut dense = vec![0.0; count as usize];
            for (i, v) in entries {
                let slot = dense
                    .get_mut(i as usize)
                    .ok_or_else(|| Error::Dimension(format!("boost index {i} >= {count}")))?;
                *slot = v;
            }
            Ok(Boosts::Dense(dense))
        } else {
            Boosts::sparse(entries)
        }
    }

    #[inline]
    pub fn get(&self, index: u64) -> f64 {
        match self {
            Boosts::Dense(values) => values[index as usize],
            Boosts::Sparse(entries) => entries
                .binary_search_by_key(&index, |e| e.0)
                .map(|k| entries[k].1)
                .unwrap_or(0.0),
        }
    }

    pub fn scaled(&self, t: f64) -> Boosts {
        match self {
            Boosts::Dense(values) => Boosts::Dense(values.iter().map(|v| v * t).collect()),
            Boosts::Sparse(entries) => {
                Boosts::Sparse(entries.iter().map(|&(i, v)| (i, v * t)).collect())
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Boosts::Dense(values) => values.iter().fold(0.0, |a, v| a.max(v.abs())),
            Boosts::Sparse(entries) => entries.iter().fold(0.0, |a, e| a.max(e.1.abs())),
        }
    }

    fn validate(&self, count: u128) -> Result<()> {
        match self {
            Boosts::Dense(values) => {
                if values.len() as u128 != count {
                    return Err(validation(format!(
                        "dense boost table has {} entries, expected {count}",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(validation("boosts must be finite"));
                }
            }
            Boosts::Sparse(entries) => {
                if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(validation("sparse boosts must be sorted and unique"));
                }
                if let Some(&(i, _)) = entries.iter().find(|e| e.0 as u128 >= count) {
                    return Err(Error::Dimension(format!(
                        "boost index {i} out of range ({count} allocations)"
                    )));
                }
                if entries.iter().any(|e| !e.1.is_finite()) {
                    return Err(validation("boosts must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// A general affine maximizer: per-bidder weights and per-allocation boosts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ama {
    pub weights: Vec<f64>,
    pub boosts: Boosts,
}

/// Parameters of an auction from any class of the hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum AuctionParams {
    #[serde(rename = "ama")]
    GeneralAma(Ama),
    /// `c[i][b]` is bidder `i`'s boost term when it receives exactly bundle `b`.
    Vvca { weights: Vec<f64>, c: Vec<Vec<f64>> },
    #[serde(rename = "lambda")]
    LambdaAuction { boosts: Boosts },
    /// Discount `c` on allocations giving one bidder every item.
    Mba { c: f64 },
    /// MBA plus per-item reserves held by the seller.
    Mbarp { c: f64, reserves: Vec<f64> },
}

impl AuctionParams {
    /// Plain VCG for `n` bidders.
    pub fn vcg(n: usize) -> AuctionParams {
        AuctionParams::GeneralAma(Ama {
            weights: vec![1.0; n],
            boosts: Boosts::zero(),
        })
    }

    pub fn class_name(&self) -> &'static str {
        match self {
            AuctionParams::GeneralAma(_) => "ama",
            AuctionParams::Vvca { .. } => "vvca",
            AuctionParams::LambdaAuction { .. } => "lambda",
            AuctionParams::Mba { .. } => "mba",
            AuctionParams::Mbarp { .. } => "mbarp",
        }
    }

    /// Checks shapes and signs against an `(n, m)` market.
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        let count = allocation_count(n, m);
        let check_weights = |w: &[f64]| -> Result<()> {
            if w.len() != n {
                return Err(Error::Dimension(format!(
                    "{} weights given for n={n} bidders",
                    w.len()
                )));
            }
            if let Some(x) = w.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return Err(validation(format!("weights must be positive, got {x}")));
            }
            Ok(())
        };
        let check_discount = |c: f64| -> Result<()> {
            if !(c.is_finite() && c >= 0.0) {
                return Err(validation(format!("discount c must be >= 0, got {c}")));
            }
            Ok(())
        };
        match self {
            AuctionParams::GeneralAma(ama) => {
                check_weights(&ama.weights)?;
                ama.boosts.validate(count)
            }
            AuctionParams::Vvca { weights, c } => {
                check_weights(weights)?;
                if c.len() != n || c.iter().any(|row| row.len() != 1 << m) {
                    return Err(Error::Dimension(format!(
                        "VVCA terms must be an {n} x {} matrix",
                        1 << m
                    )));
                }
                if c.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(validation("VVCA terms must be finite"));
                }
                Ok(())
            }
            AuctionParams::LambdaAuction { boosts } => boosts.validate(count),
            AuctionParams::Mba { c } => check_discount(*c),
            AuctionParams::Mbarp { c, reserves } => {
                check_discount(*c)?;
                if reserves.len() != m {
                    return Err(Error::Dimension(format!(
                        "{} reserves given for m={m} items",
                        reserves.len()
                    )));
                }
                if let Some(r) = reserves.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
                    return Err(validation(format!("reserves must be >= 0, got {r}")));
                }
                Ok(())
            }
        }
    }

    /// Checks declared bounds `H_w_low <= w_i <= H_w_high` and `|lambda| <= H_lambda`.
    pub fn check_bounds(&self, n: usize, m: usize, bounds: &ParamBounds) -> Result<()> {
        let (weights, max_boost) = match lower_to_general(self, n, m)? {
            Lowered::Ama(ama) => (ama.weights, ama.boosts.max_abs()),
            Lowered::Mbarp => match self {
                AuctionParams::Mbarp { c, .. } => (vec![1.0; n], *c),
                _ => unreachable!(),
            },
        };
        if let Some(w) = weights
            .iter()
            .find(|&&w| w < bounds.w_min || w > bounds.w_max)
        {
            return Err(validation(format!(
                "weight {w} outside declared [{}, {}]",
                bounds.w_min, bounds.w_max
            )));
        }
        if max_boost > bounds.lambda_max {
            return Err(validation(format!(
                "boost magnitude {max_boost} exceeds declared {}",
                bounds.lambda_max
            )));
        }
        Ok(())
    }
}

/// Declared parameter bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub w_min: f64,
    pub w_max: f64,
    pub lambda_max: f64,
}

/// `U = (n / H_w_low) (n H_w_high H_v + H_lambda)`, the largest revenue an AMA
/// within `bounds` can raise when every value is at most `h_v`.
pub fn revenue_upper_bound(n: usize, bounds: &ParamBounds, h_v: f64) -> f64 {
    let n = n as f64;
    n / bounds.w_min * (n * bounds.w_max * h_v + bounds.lambda_max)
}

/// Result of [`lower_to_general`].
#[derive(Debug, Clone, PartialEq)]
pub enum Lowered {
    Ama(Ama),
    /// MBARPs give the seller a valuation and are not plain AMAs.
    Mbarp,
}

/// Rewrites any non-MBARP auction as an explicit weights-and-boosts AMA.
pub fn lower_to_general(params: &AuctionParams, n: usize, m: usize) -> Result<Lowered> {
    params.validate(n, m)?;
    let space = || AllocationSpace::shared(n, m);
    let count = allocation_count(n, m);
    let ama = match params {
        AuctionParams::GeneralAma(ama) => ama.clone(),
        AuctionParams::LambdaAuction { boosts } => Ama {
            weights: vec![1.0; n],
            boosts: boosts.clone(),
        },
        AuctionParams::Vvca { weights, c } => {
            let space = space()?;
            let rule = BoostRule::PerBidder(c);
            let entries = (0..space.len())
                .map(|o| (o as u64, rule.boost(&space, o)))
                .filter(|e| count <= DENSE_BOOST_LIMIT || e.1 != 0.0)
                .collect();
            Ama {
                weights: weights.clone(),
                boosts: Boosts::from_entries(entries, count)?,
            }
        }
        AuctionParams::Mba { c } => {
            let space = space()?;
            let entries = (0..space.len())
                .filter(|&o| space.grand_to_bidder(o))
                .map(|o| (o as u64, *c))
                .collect();
            Ama {
                weights: vec![1.0; n],
                boosts: Boosts::from_entries(entries, count)?,
            }
        }
        AuctionParams::Mbarp { .. } => return Ok(Lowered::Mbarp),
    };
    Ok(Lowered::Ama(ama))
}

/// Allocation, payments and revenue of one auction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    /// `o*`.
    pub chosen: Allocation,
    /// `removed[j]` is `o_-j` for bidder row `j`.
    pub removed: Vec<Allocation>,
    /// Payment of each bidder row.
    pub payments: Vec<f64>,
    pub revenue: f64,
    /// Boosted objective at `o*`.
    pub objective: f64,
}

pub(crate) enum BoostRule<'a> {
    Table(&'a Boosts),
    PerBidder(&'a [Vec<f64>]),
    Grand(f64),
}

impl BoostRule<'_> {
    #[inline]
    pub(crate) fn boost(&self, space: &AllocationSpace, o: usize) -> f64 {
        match self {
            BoostRule::Table(b) => b.get(o as u64),
            BoostRule::PerBidder(c) => {
                let bundles = space.bundles(o);
                c.iter()
                    .enumerate()
                    .fold(0.0, |acc, (i, row)| acc + row[bundles[i + 1] as usize])
            }
            BoostRule::Grand(c) => {
                if space.grand_to_bidder(o) {
                    *c
                } else {
                    0.0
                }
            }
        }
    }
}

pub(crate) enum SellerRule<'a> {
    Nothing,
    /// Per-item reserves, added over the items the seller keeps.
    Items(&'a [f64]),
    /// Reserve per bundle, indexed by bundle id.
    Bundles(&'a [f64]),
}

impl SellerRule<'_> {
    #[inline]
    fn value(&self, kept: Bundle) -> Option<f64> {
        match self {
            SellerRule::Nothing => None,
            SellerRule::Items(r) => Some(
                r.iter()
                    .enumerate()
                    .filter(|(j, _)| kept.contains(*j))
                    .fold(0.0, |acc, (_, r)| acc + r),
            ),
            SellerRule::Bundles(r) => Some(r[kept.id()]),
        }
    }
}

/// A lowered mechanism ready for enumeration.
pub(crate) struct Mechanism<'a> {
    pub(crate) weights: Option<&'a [f64]>,
    pub(crate) boost: BoostRule<'a>,
    pub(crate) seller: SellerRule<'a>,
}

impl<'a> Mechanism<'a> {
    pub(crate) fn from_params(params: &'a AuctionParams) -> Mechanism<'a> {
        match params {
            AuctionParams::GeneralAma(ama) => Mechanism {
                weights: Some(&ama.weights),
                boost: BoostRule::Table(&ama.boosts),
                seller: SellerRule::Nothing,
            },
            AuctionParams::Vvca { weights, c } => Mechanism {
                weights: Some(weights),
                boost: BoostRule::PerBidder(c),
                seller: SellerRule::Nothing,
            },
            AuctionParams::LambdaAuction { boosts } => Mechanism {
                weights: None,
                boost: BoostRule::Table(boosts),
                seller: SellerRule::Nothing,
            },
            AuctionParams::Mba { c } => Mechanism {
                weights: None,
                boost: BoostRule::Grand(*c),
                seller: SellerRule::Nothing,
            },
            AuctionParams::Mbarp { c, reserves } => Mechanism {
                weights: None,
                boost: BoostRule::Grand(*c),
                seller: SellerRule::Items(reserves),
            },
        }
    }

    #[inline]
    pub(crate) fn weight(&self, bidder: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[bidder])
    }

    /// Boost plus seller value of allocation `o`; the part of the objective
    /// that no removed-bidder problem drops.
    #[inline]
    pub(crate) fn extra(&self, space: &AllocationSpace, o: usize) -> f64 {
        let boost = self.boost.boost(space, o);
        match self.seller.value(space.bundle(o, 0)) {
            Some(s) => boost + s,
            None => boost,
        }
    }

    #[inline]
    pub(crate) fn fill_weighted(
        &self,
        profile: &ValuationProfile,
        space: &AllocationSpace,
        o: usize,
        out: &mut [f64],
    ) {
        let bundles = space.bundles(o);
        for (i, slot) in out.iter_mut().enumerate() {
            let v = profile.value(i, Bundle(bundles[i + 1]));
            *slot = match self.weights {
                Some(w) => w[i] * v,
                None => v,
            };
        }
    }
}

/// Left-to-right sum of `values`, optionally skipping one entry.
#[inline]
pub(crate) fn welfare(values: &[f64], skip: Option<usize>) -> f64 {
    values
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .fold(0.0, |acc, (_, v)| acc + v)
}

#[derive(Clone, Copy)]
struct Best {
    index: usize,
    objective: f64,
    unboosted: f64,
}

impl Best {
    fn new() -> Best {
        Best {
            index: usize::MAX,
            objective: f64::NEG_INFINITY,
            unboosted: f64::NEG_INFINITY,
        }
    }

    #[inline]
    fn offer(&mut self, index: usize, objective: f64, unboosted: f64) {
        if objective > self.objective || (objective == self.objective && unboosted > self.unboosted)
        {
            *self = Best {
                index,
                objective,
                unboosted,
            };
        }
    }
}

struct Solved {
    best: Vec<Best>,
    payments: Vec<f64>,
    revenue: f64,
}

fn solve(mech: &Mechanism<'_>, profile: &ValuationProfile, space: &AllocationSpace) -> Solved {
    let n = profile.n();
    let mut wv = vec![0.0; n];
    // slot 0: full problem; slot j + 1: bidder j removed
    let mut best = vec![Best::new(); n + 1];
    for o in 0..space.len() {
        mech.fill_weighted(profile, space, o, &mut wv);
        let extra = mech.extra(space, o);
        let full = welfare(&wv, None);
        best[0].offer(o, full + extra, full);
        for j in 0..n {
            let partial = welfare(&wv, Some(j));
            best[j + 1].offer(o, partial + extra, partial);
        }
    }

    let chosen = best[0].index;
    mech.fill_weighted(profile, space, chosen, &mut wv);
    let extra = mech.extra(space, chosen);
    let payments: Vec<f64> = (0..n)
        .map(|j| (best[j + 1].objective - (welfare(&wv, Some(j)) + extra)) / mech.weight(j))
        .collect();
    let revenue = payments.iter().fold(0.0, |acc, p| acc + p);
    Solved {
        best,
        payments,
        revenue,
    }
}

pub(crate) fn evaluate(
    mech: &Mechanism<'_>,
    profile: &ValuationProfile,
    space: &AllocationSpace,
) -> AuctionOutcome {
    let Solved {
        best,
        payments,
        revenue,
    } = solve(mech, profile, space);
    AuctionOutcome {
        chosen: space.allocation(best[0].index),
        removed: best[1..]
            .iter()
            .map(|b| space.allocation(b.index))
            .collect(),
        payments,
        revenue,
        objective: best[0].objective,
    }
}

fn space_for(params: &AuctionParams, profile: &ValuationProfile) -> Result<Arc<AllocationSpace>> {
    params.validate(profile.n(), profile.m())?;
    AllocationSpace::shared(profile.n(), profile.m())
}

/// Runs `params` on `profile` by exhaustive enumeration.
pub fn run_auction(params: &AuctionParams, profile: &ValuationProfile) -> Result<AuctionOutcome> {
    let space = space_for(params, profile)?;
    Ok(evaluate(&Mechanism::from_params(params), profile, &space))
}

/// Revenue only; same evaluation as [`run_auction`].
pub fn revenue(params: &AuctionParams, profile: &ValuationProfile) -> Result<f64> {
    let space = space_for(params, profile)?;
    Ok(solve(&Mechanism::from_params(params), profile, &space).revenue)
}

/// Unit-weight auction where the seller (agent 0) values the bundle it keeps at
/// `reserves[bundle]` and there is no grand-bundle discount.
pub fn run_bundle_reserve_auction(
    reserves: &[f64],
    profile: &ValuationProfile,
) -> Result<AuctionOutcome> {
    let m = profile.m();
    if reserves.len() != 1 << m {
        return Err(Error::Dimension(format!(
            "bundle reserves need {} entries, got {}",
            1 << m,
            reserves.len()
        )));
    }
    if let Some(r) = reserves.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(validation(format!("bundle reserves must be >= 0, got {r}")));
    }
    let space = AllocationSpace::shared(profile.n(), m)?;
    let mech = Mechanism {
        weights: None,
        boost: BoostRule::Grand(0.0),
        seller: SellerRule::Bundles(reserves),
    };
    Ok(evaluate(&mech, profile, &space))
}

/// Utility of `bidder` (row index) under its true valuation when it reports `report`.
pub fn utility_under_report(
    params: &AuctionParams,
    profile: &ValuationProfile,
    bidder: usize,
    report: &[f64],
) -> Result<f64> {
    let reported = profile.with_row(bidder, report.to_vec())?;
    let outcome = run_auction(params, &reported)?;
    let held = outcome.chosen.bundle_of(bidder + 1);
    Ok(profile.value(bidder, held) - outcome.payments[bidder])
}
