//! Lower-bound valuation families and shattering witnesses, checked against
//! the engine.
//!
//! Each family is a set `V` of `{0,1}`-valued profiles, a subset `H` of `V`
//! and an auction that earns a positive revenue on `H` and nothing off it.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::engine::{run_auction, run_bundle_reserve_auction, AuctionParams, Boosts};
use crate::error::{domain, validation, Error, Result};
use crate::sampling::stream_rng;
use crate::valuation::{allocation_count, AllocationSpace, Bundle, ValuationProfile, MAX_ITEMS};

/// Absolute tolerance for claim checks.
pub const CLAIM_TOLERANCE: f64 = 1e-9;

/// Membership bitmask over the profiles of a family; bit `l` is profile `l`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HSet {
    words: Vec<u64>,
}

impl HSet {
    pub fn empty() -> HSet {
        HSet::default()
    }

    pub fn all(len: usize) -> HSet {
        HSet::from_indices(0..len)
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> HSet {
        let mut h = HSet::empty();
        for l in indices {
            h.insert(l);
        }
        h
    }

    /// Each of `len` members included independently with probability 1/2.
    pub fn random(len: usize, seed: u64) -> HSet {
        let mut rng = stream_rng(seed, 0);
        HSet::from_indices((0..len).filter(|_| rng.gen::<bool>()))
    }

    pub fn insert(&mut self, l: usize) {
        let (w, b) = (l / 64, l % 64);
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << b;
    }

    pub fn contains(&self, l: usize) -> bool {
        self.words
            .get(l / 64)
            .is_some_and(|w| w >> (l % 64) & 1 == 1)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// One past the highest member, or 0 when empty.
    pub fn span(&self) -> usize {
        self.words
            .iter()
            .rposition(|&w| w != 0)
            .map_or(0, |k| 64 * k + 64 - self.words[k].leading_zeros() as usize)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if self.span() > len {
            return Err(validation(format!(
                "H names profile {} but the family has {len}",
                self.span() - 1
            )));
        }
        Ok(())
    }

    /// Hex digits, most significant first, with a `0x` prefix.
    pub fn to_hex(&self) -> String {
        let span = self.span();
        if span == 0 {
            return "0x0".into();
        }
        let digits = span.div_ceil(4);
        let mut s = String::with_capacity(digits + 2);
        s.push_str("0x");
        for d in (0..digits).rev() {
            let nibble = (0..4).fold(0u32, |acc, k| acc | (self.contains(4 * d + k) as u32) << k);
            s.push(char::from_digit(nibble, 16).unwrap());
        }
        s
    }

    pub fn from_hex(text: &str) -> Result<HSet> {
        let body = text.strip_prefix("0x").unwrap_or(text);
        if body.is_empty() {
            return Err(validation("empty hex bitmask"));
        }
        let mut h = HSet::empty();
        for (d, ch) in body.chars().rev().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| validation(format!("invalid hex digit {ch:?} in {text:?}")))?;
            for k in 0..4 {
                if nibble >> k & 1 == 1 {
                    h.insert(4 * d + k);
                }
            }
        }
        Ok(h)
    }
}

impl fmt::Display for HSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for HSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for HSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<HSet, D::Error> {
        let text = String::deserialize(d)?;
        HSet::from_hex(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    LambdaLb,
    VvcaLb,
    BundleReserveLb,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::LambdaLb => "lambda-lb",
            Family::VvcaLb => "vvca-lb",
            Family::BundleReserveLb => "bundle-reserve-lb",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub relation: Relation,
    pub value: f64,
}

impl Claim {
    pub fn holds(&self, revenue: f64) -> bool {
        match self.relation {
            Relation::Eq => (revenue - self.value).abs() <= CLAIM_TOLERANCE,
            Relation::Ge => revenue >= self.value - CLAIM_TOLERANCE,
        }
    }
}

/// Mechanism a family is evaluated under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbMechanism {
    Auction(AuctionParams),
    /// Seller valuation per bundle id; unit weights and no discount.
    BundleReserves(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundInstance {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub h: HSet,
    pub profiles: Vec<ValuationProfile>,
    pub mechanism: LbMechanism,
    pub claims: Vec<Claim>,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(())
}

fn claims_for(len: usize, h: &HSet, inside: Claim) -> Vec<Claim> {
    let zero = Claim {
        relation: Relation::Eq,
        value: 0.0,
    };
    (0..len)
        .map(|l| if h.contains(l) { inside } else { zero })
        .collect()
}

/// Full allocations other than the `n` that give one bidder every item, in
/// increasing index order.
fn split_allocations(space: &AllocationSpace) -> Vec<usize> {
    (0..space.len())
        .filter(|&o| space.bundle(o, 0).is_empty() && !space.grand_to_bidder(o))
        .collect()
}

/// Profile where every bidder values exactly the items it holds in `o` at 1.
fn profile_of(space: &AllocationSpace, o: usize) -> Result<ValuationProfile> {
    let items: Vec<Vec<f64>> = (1..=space.n())
        .map(|i| {
            let held = space.bundle(o, i);
            (0..space.m())
                .map(|j| if held.contains(j) { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    ValuationProfile::additive(&items)
}

/// `n` bidders, `m` items: `|V| = n^m - n`, lambda-auction boosting every
/// allocation by `1 - gamma` except the members of `H`.
pub fn build_lambda_lb(n: usize, m: usize, gamma: f64, h: &HSet) -> Result<LowerBoundInstance> {
    if n < 2 || m < 2 {
        return Err(validation(format!(
            "lambda-lb needs n, m >= 2, got n={n}, m={m}"
        )));
    }
    check_gamma(gamma)?;
    let space = AllocationSpace::shared(n, m)?;
    let chosen = split_allocations(&space);
    h.check_len(chosen.len())?;
    let profiles = chosen
        .iter()
        .map(|&o| profile_of(&space, o))
        .collect::<Result<Vec<_>>>()?;

    let count = allocation_count(n, m);
    let mut entries: Vec<(u64, f64)> = (0..count as u64).map(|o| (o, 1.0 - gamma)).collect();
    for (l, &o) in chosen.iter().enumerate() {
        if h.contains(l) {
            entries[o].1 = 0.0;
        }
    }
    let boosts = Boosts::from_entries(entries, count)?;
    let claims = claims_for(
        profiles.len(),
        h,
        Claim {
            relation: Relation::Ge,
            value: 2.0 - 2.0 * gamma,
        },
    );
    Ok(LowerBoundInstance {
        family: Family::LambdaLb,
        n,
        m,
        gamma,
        h: h.clone(),
        profiles,
        mechanism: LbMechanism::Auction(AuctionParams::LambdaAuction { boosts }),
        claims,
    })
}

/// Two bidders, `m` items: `|V| = 2^m - 2`, one profile per proper nonempty
/// bundle `b` with bidder 2 wanting `b` and bidder 1 its complement.
pub fn build_vvca_lb(m: usize, gamma: f64, h: &HSet) -> Result<LowerBoundInstance> {
    if !(2..=MAX_ITEMS).contains(&m) {
        return Err(validation(format!(
            "vvca-lb needs 2 <= m <= {MAX_ITEMS}, got {m}"
        )));
    }
    check_gamma(gamma)?;
    AllocationSpace::shared(2, m)?;
    let grand = Bundle::grand(m);
    let bundles: Vec<Bundle> = (1..grand.0).map(Bundle).collect();
    h.check_len(bundles.len())?;

    let indicator = |b: Bundle| -> Vec<f64> {
        (0..m)
            .map(|j| if b.contains(j) { 1.0 } else { 0.0 })
            .collect()
    };
    let profiles = bundles
        .iter()
        .map(|&b| ValuationProfile::additive(&[indicator(b.complement(m)), indicator(b)]))
        .collect::<Result<Vec<_>>>()?;

    let kappa = (1.0 - gamma) / 4.0;
    let mut c = vec![vec![kappa; 1 << m]; 2];
    for (l, &b) in bundles.iter().enumerate() {
        if h.contains(l) {
            c[0][b.complement(m).id()] = 0.0;
            c[1][b.id()] = 0.0;
        }
    }
    let claims = claims_for(
        profiles.len(),
        h,
        Claim {
            relation: Relation::Eq,
            value: 1.0 - gamma,
        },
    );
    Ok(LowerBoundInstance {
        family: Family::VvcaLb,
        n: 2,
        m,
        gamma,
        h: h.clone(),
        profiles,
        mechanism: LbMechanism::Auction(AuctionParams::Vvca {
            weights: vec![1.0, 1.0],
            c,
        }),
        claims,
    })
}

/// One bidder (padded with `n - 1` zero bidders), even `m`: `|V| = C(m, m/2)`,
/// one profile per half-size bundle, priced by monotone bundle reserves.
pub fn build_bundle_reserve_lb(
    m: usize,
    gamma: f64,
    h: &HSet,
    n: usize,
) -> Result<LowerBoundInstance> {
    if m % 2 == 1 {
        return Err(Error::Unsupported(format!(
            "bundle-reserve-lb needs an even number of items, got m={m}"
        )));
    }
    if !(2..=MAX_ITEMS).contains(&m) {
        return Err(validation(format!(
            "bundle-reserve-lb needs 2 <= m <= {MAX_ITEMS}, got {m}"
        )));
    }
    if n == 0 {
        return Err(validation("bundle-reserve-lb needs at least one bidder"));
    }
    check_gamma(gamma)?;
    AllocationSpace::shared(n, m)?;
    let half = m / 2;
    let bundles: Vec<Bundle> = (0..1u32 << m)
        .map(Bundle)
        .filter(|b| b.len() == half)
        .collect();
    h.check_len(bundles.len())?;

    let profiles = bundles
        .iter()
        .map(|&target| {
            let row: Vec<f64> = (0..1u32 << m)
                .map(|b| {
                    let b = Bundle(b);
                    if b.len() > half || b == target {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            ValuationProfile::dense(vec![row])?.padded(n)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut reserves: Vec<f64> = (0..1u32 << m)
        .map(|b| {
            if Bundle(b).len() > half {
                1.0 - gamma
            } else {
                0.0
            }
        })
        .collect();
    for (l, &b) in bundles.iter().enumerate() {
        if !h.contains(l) {
            reserves[b.complement(m).id()] = 1.0 - gamma;
        }
    }
    let claims = claims_for(
        profiles.len(),
        h,
        Claim {
            relation: Relation::Eq,
            value: 1.0 - gamma,
        },
    );
    Ok(LowerBoundInstance {
        family: Family::BundleReserveLb,
        n,
        m,
        gamma,
        h: h.clone(),
        profiles,
        mechanism: LbMechanism::BundleReserves(reserves),
        claims,
    })
}

/// Builds any family from its name; `n` is ignored by `vvca-lb`.
pub fn build_family(
    family: Family,
    n: usize,
    m: usize,
    gamma: f64,
    h: &HSet,
) -> Result<LowerBoundInstance> {
    match family {
        Family::LambdaLb => build_lambda_lb(n, m, gamma, h),
        Family::VvcaLb => build_vvca_lb(m, gamma, h),
        Family::BundleReserveLb => build_bundle_reserve_lb(m, gamma, h, n.max(1)),
    }
}

/// Size of `V` for a family, or `None` when the family does not exist there.
pub fn family_size(family: Family, n: usize, m: usize) -> Option<u128> {
    match family {
        Family::LambdaLb => (n as u128).checked_pow(m as u32).map(|x| x - n as u128),
        Family::VvcaLb => Some((1u128 << m) - 2),
        Family::BundleReserveLb => m
            .is_multiple_of(2)
            .then(|| (0..m / 2).fold(1u128, |acc, k| acc * (m - k) as u128 / (k + 1) as u128)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub index: usize,
    pub in_h: bool,
    pub revenue: f64,
    pub claim: Claim,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub family: Family,
    pub rows: Vec<VerifyRow>,
    /// Indices of profiles whose claim failed.
    pub violations: Vec<usize>,
    pub all_ok: bool,
}

/// Runs the instance's mechanism on every profile and checks each claim.
pub fn verify_lower_bound(instance: &LowerBoundInstance) -> Result<VerifyReport> {
    if instance.profiles.len() != instance.claims.len() {
        return Err(validation(format!(
            "{} profiles but {} claims",
            instance.profiles.len(),
            instance.claims.len()
        )));
    }
    instance.h.check_len(instance.profiles.len())?;
    let revenues = instance
        .profiles
        .par_iter()
        .map(|p| match &instance.mechanism {
            LbMechanism::Auction(params) => run_auction(params, p).map(|o| o.revenue),
            LbMechanism::BundleReserves(r) => run_bundle_reserve_auction(r, p).map(|o| o.revenue),
        })
        .collect::<Result<Vec<f64>>>()?;
    let rows: Vec<VerifyRow> = revenues
        .iter()
        .zip(&instance.claims)
        .enumerate()
        .map(|(index, (&revenue, &claim))| VerifyRow {
            index,
            in_h: instance.h.contains(index),
            revenue,
            claim,
            ok: claim.holds(revenue),
        })
        .collect();
    let violations: Vec<usize> = rows.iter().filter(|r| !r.ok).map(|r| r.index).collect();
    Ok(VerifyReport {
        family: instance.family,
        all_ok: violations.is_empty(),
        rows,
        violations,
    })
}

/// Samples, per-sample witnesses and the auctions probing them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShatterInstance {
    pub samples: Vec<ValuationProfile>,
    pub witnesses: Vec<f64>,
    pub auctions: Vec<AuctionParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShatterReport {
    /// `revenues[a][i]` is auction `a` on sample `i`.
    pub revenues: Vec<Vec<f64>>,
    /// `labels[a][i]` is true when that revenue exceeds witness `i` by more than
    /// [`CLAIM_TOLERANCE`].
    pub labels: Vec<Vec<bool>>,
    pub achieved_labelings: usize,
    pub shattered: bool,
}

/// Counts the distinct above/below-witness label vectors realized by the auctions.
pub fn check_shattering(instance: &ShatterInstance) -> Result<ShatterReport> {
    if instance.samples.len() != instance.witnesses.len() {
        return Err(validation(format!(
            "{} samples but {} witnesses",
            instance.samples.len(),
            instance.witnesses.len()
        )));
    }
    if instance.samples.len() >= 64 {
        return Err(validation(
            "shattering checks support fewer than 64 samples",
        ));
    }
    let revenues = instance
        .auctions
        .par_iter()
        .map(|a| {
            instance
                .samples
                .iter()
                .map(|p| run_auction(a, p).map(|o| o.revenue))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<Vec<bool>> = revenues
        .iter()
        .map(|row| {
            row.iter()
                .zip(&instance.witnesses)
                .map(|(r, z)| *r > z + CLAIM_TOLERANCE)
                .collect()
        })
        .collect();
    let mut distinct: Vec<&Vec<bool>> = labels.iter().collect();
    distinct.sort();
    distinct.dedup();
    let achieved_labelings = distinct.len();
    Ok(ShatterReport {
        shattered: achieved_labelings == 1 << instance.samples.len(),
        achieved_labelings,
        revenues,
        labels,
    })
}

/// Named shattering witnesses.
pub fn builtin_shatter_instance(name: &str, n: usize, m: usize) -> Result<ShatterInstance> {
    match name {
        "mba-table1" => mba_table1(n, m),
        _ => Err(validation(format!("unknown shatter instance {name:?}"))),
    }
}

/// Two bidders value every bundle of at least `floor(m/2)` items at 3; in the
/// second profile the grand bundle is worth 4. Further bidders value nothing.
fn mba_table1(n: usize, m: usize) -> Result<ShatterInstance> {
    if n < 2 || m < 2 {
        return Err(validation(format!(
            "mba-table1 needs n, m >= 2, got n={n}, m={m}"
        )));
    }
    if m > MAX_ITEMS {
        return Err(validation(format!(
            "mba-table1 needs m <= {MAX_ITEMS}, got {m}"
        )));
    }
    let threshold = m / 2;
    let grand = Bundle::grand(m);
    let row = |grand_value: f64| -> Vec<f64> {
        (0..1u32 << m)
            .map(|b| {
                let b = Bundle(b);
                if b == grand {
                    grand_value
                } else if b.len() >= threshold && !b.is_empty() {
                    3.0
                } else {
                    0.0
                }
            })
            .collect()
    };
    let profile = |grand_value: f64| -> Result<ValuationProfile> {
        ValuationProfile::dense(vec![row(grand_value), row(grand_value)])?.padded(n)
    };
    Ok(ShatterInstance {
        samples: vec![profile(3.0)?, profile(4.0)?],
        witnesses: vec![3.0, 4.0],
        auctions: [0.0, 1.5, 2.5, 2.0]
            .iter()
            .map(|&c| AuctionParams::Mba { c })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hset_hex_roundtrip() {
        let h = HSet::from_indices([0, 5, 70]);
        assert_eq!(HSet::from_hex(&h.to_hex()).unwrap(), h);
        assert_eq!(HSet::from_indices([0, 1, 3]).to_hex(), "0xb");
        assert_eq!(HSet::empty().to_hex(), "0x0");
        assert_eq!(HSet::from_hex("0x0").unwrap(), HSet::empty());
        assert_eq!(HSet::all(24).count(), 24);
        assert!(HSet::from_hex("0xg").is_err());
        let text = serde_json::to_string(&h).unwrap();
        assert_eq!(serde_json::from_str::<HSet>(&text).unwrap(), h);
    }

    #[test]
    fn lambda_family_sizes() {
        let all = build_lambda_lb(2, 2, 0.5, &HSet::all(2)).unwrap();
        assert_eq!(all.profiles.len(), 2);
        assert!(all.claims.iter().all(|c| *c
            == Claim {
                relation: Relation::Ge,
                value: 1.0
            }));
        let none = build_lambda_lb(2, 2, 0.5, &HSet::empty()).unwrap();
        assert!(none.claims.iter().all(|c| *c
            == Claim {
                relation: Relation::Eq,
                value: 0.0
            }));
        assert_eq!(
            build_lambda_lb(3, 3, 0.5, &HSet::empty())
                .unwrap()
                .profiles
                .len(),
            24
        );
        assert!(build_lambda_lb(1, 2, 0.5, &HSet::empty()).is_err());
        assert!(build_lambda_lb(2, 2, 1.0, &HSet::empty()).is_err());
        assert!(build_lambda_lb(2, 2, 0.5, &HSet::from_indices([2])).is_err());
    }

    #[test]
    fn lambda_family_verifies() {
        for h in [HSet::all(2), HSet::empty(), HSet::from_indices([1])] {
            let inst = build_lambda_lb(2, 2, 0.5, &h).unwrap();
            assert!(verify_lower_bound(&inst).unwrap().all_ok, "H = {h}");
        }
    }

    #[test]
    fn tampered_boost_is_caught() {
        let mut inst = build_lambda_lb(2, 2, 0.5, &HSet::all(2)).unwrap();
        let LbMechanism::Auction(AuctionParams::LambdaAuction {
            boosts: Boosts::Dense(b),
        }) = &mut inst.mechanism
        else {
            panic!()
        };
        // profile 0 is the allocation (item 0 -> bidder 2, item 1 -> bidder 1), index 2 + 1*3
        b[5] = 0.5;
        let report = verify_lower_bound(&inst).unwrap();
        assert!(!report.all_ok);
        assert_eq!(report.violations, vec![0]);
    }

    #[test]
    fn vvca_family() {
        let all = build_vvca_lb(2, 0.5, &HSet::all(2)).unwrap();
        assert_eq!(all.profiles.len(), 2);
        let report = verify_lower_bound(&all).unwrap();
        assert!(report.all_ok);
        assert!(report.rows.iter().all(|r| r.revenue == 0.5));
        let none = build_vvca_lb(2, 0.5, &HSet::empty()).unwrap();
        assert!(verify_lower_bound(&none)
            .unwrap()
            .rows
            .iter()
            .all(|r| r.revenue == 0.0));
        assert_eq!(
            build_vvca_lb(4, 0.5, &HSet::empty())
                .unwrap()
                .profiles
                .len(),
            14
        );
    }

    #[test]
    fn vvca_family_random_subsets() {
        for seed in 0..20 {
            let h = HSet::random(6, seed);
            let inst = build_vvca_lb(3, 0.25, &h).unwrap();
            assert!(verify_lower_bound(&inst).unwrap().all_ok, "seed {seed}");
        }
    }

    #[test]
    fn bundle_reserve_family() {
        let all = build_bundle_reserve_lb(2, 0.5, &HSet::all(2), 1).unwrap();
        let report = verify_lower_bound(&all).unwrap();
        assert!(report.rows.iter().all(|r| r.revenue == 0.5));
        let none = build_bundle_reserve_lb(2, 0.5, &HSet::empty(), 1).unwrap();
        assert!(verify_lower_bound(&none)
            .unwrap()
            .rows
            .iter()
            .all(|r| r.revenue == 0.0));
        assert_eq!(
            build_bundle_reserve_lb(4, 0.5, &HSet::empty(), 1)
                .unwrap()
                .profiles
                .len(),
            6
        );
        assert!(matches!(
            build_bundle_reserve_lb(3, 0.5, &HSet::empty(), 1),
            Err(Error::Unsupported(_))
        ));
        let padded = build_bundle_reserve_lb(4, 0.5, &HSet::from_indices([1, 4]), 3).unwrap();
        assert!(verify_lower_bound(&padded).unwrap().all_ok);
    }

    #[test]
    fn family_size_formulas() {
        for (n, m) in [(2, 2), (2, 3), (3, 2), (3, 3), (2, 4)] {
            let inst = build_lambda_lb(n, m, 0.5, &HSet::empty()).unwrap();
            assert_eq!(
                family_size(Family::LambdaLb, n, m),
                Some(inst.profiles.len() as u128)
            );
        }
        for m in 2..=5 {
            let inst = build_vvca_lb(m, 0.5, &HSet::empty()).unwrap();
            assert_eq!(
                family_size(Family::VvcaLb, 2, m),
                Some(inst.profiles.len() as u128)
            );
        }
        for m in [2, 4, 6] {
            let inst = build_bundle_reserve_lb(m, 0.5, &HSet::empty(), 1).unwrap();
            assert_eq!(
                family_size(Family::BundleReserveLb, 1, m),
                Some(inst.profiles.len() as u128)
            );
        }
        assert_eq!(family_size(Family::BundleReserveLb, 1, 3), None);
    }

    #[test]
    fn builtin_mba_instance_shatters() {
        let inst = builtin_shatter_instance("mba-table1", 2, 2).unwrap();
        let report = check_shattering(&inst).unwrap();
        assert_eq!(
            report.revenues,
            vec![
                vec![0.0, 2.0],
                vec![3.0, 5.0],
                vec![5.0, 4.0],
                vec![4.0, 6.0]
            ]
        );
        assert!(report.shattered);
        assert_eq!(report.achieved_labelings, 4);
        for (n, m) in [(3, 2), (2, 4), (2, 3)] {
            let other = check_shattering(&builtin_shatter_instance("mba-table1", n, m).unwrap());
            assert_eq!(other.unwrap().revenues, report.revenues, "n={n} m={m}");
        }
        assert!(builtin_shatter_instance("nope", 2, 2).is_err());
    }

    #[test]
    fn single_auction_cannot_shatter() {
        let mut inst = builtin_shatter_instance("mba-table1", 2, 2).unwrap();
        inst.samples.truncate(1);
        inst.witnesses.truncate(1);
        inst.auctions.truncate(1);
        let report = check_shattering(&inst).unwrap();
        assert_eq!(report.achieved_labelings, 1);
        assert!(!report.shattered);
    }

    #[test]
    fn instance_json_roundtrip() {
        let inst = build_vvca_lb(2, 0.5, &HSet::from_indices([1])).unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        assert!(text.contains("\"h\":\"0x2\""));
        assert_eq!(
            serde_json::from_str::<LowerBoundInstance>(&text).unwrap(),
            inst
        );
    }
}
