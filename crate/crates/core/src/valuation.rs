//! Bundles, allocations and valuation profiles.
//!
//! Bundles are bitmasks over the `m` items (bit `j` set iff item `j` is in the
//! bundle). An allocation assigns every item to an agent in `0..=n`, where
//! agent `0` is the seller and agent `k >= 1` is the bidder stored in row
//! `k - 1` of a [`ValuationProfile`].

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

/// Largest number of allocations the exhaustive engine will enumerate.
pub const ALLOCATION_CAP: u64 = 1 << 20;

/// Largest item count for which bundles fit the bitmask representation used here.
pub const MAX_ITEMS: usize = 20;

/// A set of items encoded as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bundle(pub u32);

impl Bundle {
    pub const EMPTY: Bundle = Bundle(0);

    pub fn grand(m: usize) -> Bundle {
        Bundle(((1u64 << m) - 1) as u32)
    }

    /// Encodes an item set. Duplicate indices are harmless.
    pub fn from_items(items: &[usize], m: usize) -> Result<Bundle> {
        check_items(m)?;
        let mut bits = 0u32;
        for &j in items {
            if j >= m {
                return Err(Error::Dimension(format!(
                    "item index {j} out of range for m={m}"
                )));
            }
            bits |= 1 << j;
        }
        Ok(Bundle(bits))
    }

    /// Decodes the bundle back into its sorted item indices.
    pub fn items(self) -> Vec<usize> {
        (0..32).filter(|&j| self.0 & (1 << j) != 0).collect()
    }

    pub fn id(self) -> usize {
        self.0 as usize
    }

    pub fn contains(self, item: usize) -> bool {
        item < 32 && self.0 & (1 << item) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn complement(self, m: usize) -> Bundle {
        Bundle(!self.0 & Bundle::grand(m).0)
    }

    pub fn is_disjoint(self, other: Bundle) -> bool {
        self.0 & other.0 == 0
    }

    pub fn union(self, other: Bundle) -> Bundle {
        Bundle(self.0 | other.0)
    }
}

impl fmt::Display for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, j) in self.items().into_iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

fn check_items(m: usize) -> Result<()> {
    if m == 0 || m > MAX_ITEMS {
        return Err(Error::Dimension(format!(
            "item count m={m} must lie in 1..={MAX_ITEMS}"
        )));
    }
    Ok(())
}

/// Number of allocations `(n+1)^m`, saturating on overflow.
pub fn allocation_count(n: usize, m: usize) -> u128 {
    let base = n as u128 + 1;
    let mut count: u128 = 1;
    for _ in 0..m {
        count = count.saturating_mul(base);
    }
    count
}

/// An assignment of each item to an agent (0 = seller / unallocated).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Allocation {
    pub index: u64,
    pub assignee: Vec<usize>,
}

impl Allocation {
    /// Decodes a canonical index: `index = sum_j assignee[j] * (n+1)^j`.
    pub fn from_index(index: u64, n: usize, m: usize) -> Result<Allocation> {
        let count = allocation_count(n, m);
        if index as u128 >= count {
            return Err(Error::Dimension(format!(
                "allocation index {index} out of range for (n={n}, m={m})"
            )));
        }
        let base = n as u64 + 1;
        let mut rest = index;
        let assignee = (0..m)
            .map(|_| {
                let a = (rest % base) as usize;
                rest /= base;
                a
            })
            .collect();
        Ok(Allocation { index, assignee })
    }

    pub fn from_assignee(assignee: Vec<usize>, n: usize) -> Result<Allocation> {
        let base = n as u64 + 1;
        let mut index = 0u64;
        let mut place = 1u64;
        for &a in &assignee {
            if a > n {
                return Err(Error::Dimension(format!(
                    "assignee {a} exceeds bidder count n={n}"
                )));
            }
            index = index
                .checked_add(a as u64 * place)
                .ok_or_else(|| Error::Dimension("allocation index overflow".into()))?;
            place = place.saturating_mul(base);
        }
        Ok(Allocation { index, assignee })
    }

    /// Bundle held by `agent` (0 = seller).
    pub fn bundle_of(&self, agent: usize) -> Bundle {
        let bits = self
            .assignee
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == agent)
            .fold(0u32, |acc, (j, _)| acc | (1 << j));
        Bundle(bits)
    }
}

/// Precomputed bundle table for every allocation of an `(n, m)` market.
///
/// `bundle(o, a)` is agent `a`'s bundle in allocation `o`; allocations are
/// stored in increasing canonical index.
#[derive(Debug)]
pub struct AllocationSpace {
    n: usize,
    m: usize,
    count: usize,
    bundles: Vec<u32>,
}

impl AllocationSpace {
    pub fn new(n: usize, m: usize) -> Result<AllocationSpace> {
        Self::with_cap(n, m, ALLOCATION_CAP)
    }

    pub fn with_cap(n: usize, m: usize, cap: u64) -> Result<AllocationSpace> {
        check_items(m)?;
        if n == 0 {
            return Err(Error::Dimension("bidder count n must be at least 1".into()));
        }
        let count = allocation_count(n, m);
        if count > cap as u128 {
            return Err(Error::Capacity {
                what: "allocation enumeration",
                n,
                m,
                needed: count,
                cap: cap as u128,
            });
        }
        let count = count as usize;
        let agents = n + 1;
        let mut bundles = vec![0u32; count * agents];
        let mut digits = vec![0usize; m];
        for o in 0..count {
            let row = &mut bundles[o * agents..(o + 1) * agents];
            for (j, &a) in digits.iter().enumerate() {
                row[a] |= 1 << j;
            }
            // odometer increment, item 0 is the least significant digit
            for d in digits.iter_mut() {
                *d += 1;
                if *d == agents {
                    *d = 0;
                } else {
                    break;
                }
            }
        }
        Ok(AllocationSpace {
            n,
            m,
            count,
            bundles,
        })
    }

    /// Shared, lazily built table for `(n, m)`.
    pub fn shared(n: usize, m: usize) -> Result<Arc<AllocationSpace>> {
        type Cache = RwLock<HashMap<(usize, usize), Arc<AllocationSpace>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(space) = cache
            .read()
            .expect("allocation cache poisoned")
            .get(&(n, m))
        {
            return Ok(Arc::clone(space));
        }
        let space = Arc::new(AllocationSpace::new(n, m)?);
        cache
            .write()
            .expect("allocation cache poisoned")
            .entry((n, m))
            .or_insert_with(|| Arc::clone(&space));
        Ok(space)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub fn bundle(&self, alloc: usize, agent: usize) -> Bundle {
        Bundle(self.bundles[alloc * (self.n + 1) + agent])
    }

    /// Bundles of agents `0..=n` in allocation `alloc`.
    #[inline]
    pub fn bundles(&self, alloc: usize) -> &[u32] {
        &self.bundles[alloc * (self.n + 1)..(alloc + 1) * (self.n + 1)]
    }

    /// True when some real bidder (1..=n) holds every item.
    #[inline]
    pub fn grand_to_bidder(&self, alloc: usize) -> bool {
        let grand = Bundle::grand(self.m).0;
        self.bundles(alloc)[1..].contains(&grand)
    }

    pub fn allocation(&self, alloc: usize) -> Allocation {
        Allocation::from_index(alloc as u64, self.n, self.m).expect("index within space")
    }
}

/// Yields all `(n+1)^m` allocations in increasing index order.
pub fn enumerate_allocations(n: usize, m: usize) -> Result<impl Iterator<Item = Allocation>> {
    enumerate_allocations_capped(n, m, ALLOCATION_CAP)
}

pub fn enumerate_allocations_capped(
    n: usize,
    m: usize,
    cap: u64,
) -> Result<impl Iterator<Item = Allocation>> {
    check_items(m)?;
    if n == 0 {
        return Err(Error::Dimension("bidder count n must be at least 1".into()));
    }
    let count = allocation_count(n, m);
    if count > cap as u128 {
        return Err(Error::Capacity {
            what: "allocation enumeration",
            n,
            m,
            needed: count,
            cap: cap as u128,
        });
    }
    Ok((0..count as u64).map(move |i| Allocation::from_index(i, n, m).expect("in range")))
}

/// Set-wise valuations of `n` bidders over all `2^m` bundles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileSpec", into = "ProfileSpec")]
pub struct ValuationProfile {
    n: usize,
    m: usize,
    values: Vec<Vec<f64>>,
    h_v: Option<f64>,
}

/// Input forms accepted for a profile; either a dense matrix or per-item
/// additive values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuations: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub additive: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_v: Option<f64>,
}

impl TryFrom<ProfileSpec> for ValuationProfile {
    type Error = Error;

    fn try_from(spec: ProfileSpec) -> Result<Self> {
        build_profile(spec)
    }
}

impl From<ValuationProfile> for ProfileSpec {
    fn from(p: ValuationProfile) -> Self {
        ProfileSpec {
            n: p.n,
            m: p.m,
            valuations: Some(p.values),
            additive: None,
            h_v: p.h_v,
        }
    }
}

/// Builds a validated dense profile from either input form.
pub fn build_profile(spec: ProfileSpec) -> Result<ValuationProfile> {
    let profile = match (spec.valuations, spec.additive) {
        (Some(values), None) => ValuationProfile::dense(values)?,
        (None, Some(items)) => ValuationProfile::additive(&items)?,
        (Some(_), Some(_)) => {
            return Err(validation(
                "profile must give exactly one of `valuations` or `additive`",
            ))
        }
        (None, None) => {
            return Err(validation(
                "profile has neither `valuations` nor `additive`",
            ))
        }
    };
    if profile.n != spec.n || profile.m != spec.m {
        return Err(validation(format!(
            "declared (n={}, m={}) does not match data (n={}, m={})",
            spec.n, spec.m, profile.n, profile.m
        )));
    }
    match spec.h_v {
        Some(h) => profile.with_bound(h),
        None => Ok(profile),
    }
}

impl ValuationProfile {
    /// Dense `n x 2^m` matrix; `values[i][0]` must be zero.
    pub fn dense(values: Vec<Vec<f64>>) -> Result<ValuationProfile> {
        let n = values.len();
        if n == 0 {
            return Err(validation("profile needs at least one bidder"));
        }
        let width = values[0].len();
        if width < 2 || !width.is_power_of_two() {
            return Err(validation(format!(
                "row length {width} is not 2^m for some m >= 1"
            )));
        }
        let m = width.trailing_zeros() as usize;
        check_items(m)?;
        for (i, row) in values.iter().enumerate() {
            if row.len() != width {
                return Err(validation(format!(
                    "ragged matrix: row {i} has {} entries, expected {width}",
                    row.len()
                )));
            }
            if row[0] != 0.0 {
                return Err(validation(format!(
                    "bidder {i} values the empty bundle at {}, expected 0",
                    row[0]
                )));
            }
            if let Some((b, v)) = row
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
            {
                return Err(validation(format!(
                    "bidder {i} has invalid value {v} on bundle {b}"
                )));
            }
        }
        Ok(ValuationProfile {
            n,
            m,
            values,
            h_v: None,
        })
    }

    /// Expands per-item values `items[i][j]` into `v_i(b) = sum_{j in b} items[i][j]`.
    pub fn additive(items: &[Vec<f64>]) -> Result<ValuationProfile> {
        let n = items.len();
        if n == 0 {
            return Err(validation("profile needs at least one bidder"));
        }
        let m = items[0].len();
        check_items(m)?;
        let mut values = Vec::with_capacity(n);
        for (i, row) in items.iter().enumerate() {
            if row.len() != m {
                return Err(validation(format!(
                    "ragged additive spec: row {i} has {} items, expected {m}",
                    row.len()
                )));
            }
            if let Some((j, v)) = row
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
            {
                return Err(validation(format!(
                    "bidder {i} has invalid value {v} on item {j}"
                )));
            }
            // v(b) = v(b without its lowest item) + v(lowest item); the same
            // association order for every bundle keeps disjoint unions exact
            // whenever the item values themselves add exactly.
            let mut row_values = vec![0.0; 1 << m];
            for b in 1usize..(1 << m) {
                let low = b.trailing_zeros() as usize;
                row_values[b] = row_values[b & (b - 1)] + row[low];
            }
            values.push(row_values);
        }
        Ok(ValuationProfile {
            n,
            m,
            values,
            h_v: None,
        })
    }

    /// Declares an upper bound `H_v` on every value.
    pub fn with_bound(mut self, h_v: f64) -> Result<ValuationProfile> {
        if !(h_v.is_finite() && h_v > 0.0) {
            return Err(validation(format!("H_v must be positive, got {h_v}")));
        }
        if let Some(v) = self.values.iter().flatten().find(|&&v| v > h_v) {
            return Err(validation(format!("value {v} exceeds declared H_v={h_v}")));
        }
        self.h_v = Some(h_v);
        Ok(self)
    }

    /// All-zero profile.
    pub fn zeros(n: usize, m: usize) -> Result<ValuationProfile> {
        check_items(m)?;
        ValuationProfile::dense(vec![vec![0.0; 1 << m]; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h_v(&self) -> Option<f64> {
        self.h_v
    }

    /// Value of bidder row `bidder` (0-based) for `bundle`.
    #[inline]
    pub fn value(&self, bidder: usize, bundle: Bundle) -> f64 {
        self.values[bidder][bundle.id()]
    }

    pub fn row(&self, bidder: usize) -> &[f64] {
        &self.values[bidder]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Largest value in the profile.
    pub fn max_value(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |a, &b| a.max(b))
    }

    /// Copy with one bidder's row replaced (used for misreports).
    pub fn with_row(&self, bidder: usize, row: Vec<f64>) -> Result<ValuationProfile> {
        if bidder >= self.n {
            return Err(Error::Dimension(format!(
                "bidder {bidder} out of range for n={}",
                self.n
            )));
        }
        let mut values = self.values.clone();
        values[bidder] = row;
        ValuationProfile::dense(values)
    }

    /// Same valuations with extra all-zero bidders appended.
    pub fn padded(&self, n: usize) -> Result<ValuationProfile> {
        if n < self.n {
            return Err(Error::Dimension(format!(
                "cannot pad a {}-bidder profile down to {n}",
                self.n
            )));
        }
        let mut values = self.values.clone();
        values.resize(n, vec![0.0; 1 << self.m]);
        ValuationProfile::dense(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_codec_examples() {
        assert_eq!(Bundle::from_items(&[], 2).unwrap(), Bundle(0));
        assert_eq!(Bundle::from_items(&[0, 1], 2).unwrap(), Bundle(3));
        assert_eq!(Bundle::from_items(&[1], 3).unwrap(), Bundle(2));
        assert_eq!(Bundle(5).items(), vec![0, 2]);
        assert_eq!(Bundle::grand(3), Bundle(7));
        assert!(matches!(
            Bundle::from_items(&[3], 3),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn bundle_codec_is_bijective() {
        for m in 1..=6 {
            for id in 0u32..(1 << m) {
                let b = Bundle(id);
                assert_eq!(Bundle::from_items(&b.items(), m).unwrap(), b);
            }
        }
    }

    #[test]
    fn allocation_counts() {
        assert_eq!(enumerate_allocations(1, 1).unwrap().count(), 2);
        assert_eq!(enumerate_allocations(2, 2).unwrap().count(), 9);
        assert_eq!(enumerate_allocations(3, 3).unwrap().count(), 64);
    }

    #[test]
    fn enumeration_is_increasing_and_matches_space() {
        let space = AllocationSpace::new(2, 3).unwrap();
        for (k, a) in enumerate_allocations(2, 3).unwrap().enumerate() {
            assert_eq!(a.index, k as u64);
            for agent in 0..=2 {
                assert_eq!(a.bundle_of(agent), space.bundle(k, agent));
            }
            let union = (0..=2).fold(Bundle::EMPTY, |u, ag| u.union(a.bundle_of(ag)));
            assert_eq!(union, Bundle::grand(3));
        }
    }

    #[test]
    fn capacity_error_names_dimensions() {
        let err = enumerate_allocations(3, 11).err().unwrap();
        match err {
            Error::Capacity { n, m, .. } => assert_eq!((n, m), (3, 11)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(AllocationSpace::with_cap(2, 2, 8).is_err());
    }

    #[test]
    fn additive_profile_example() {
        let p = ValuationProfile::additive(&[vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert_eq!(p.row(0), &[0.0, 3.0, 0.0, 3.0]);
        assert_eq!(p.row(1), &[0.0, 0.0, 4.0, 4.0]);
    }

    #[test]
    fn dense_profile_validation() {
        let p = ValuationProfile::dense(vec![vec![0.0, 3.0, 3.0, 3.0]]).unwrap();
        assert_eq!(p.m(), 2);
        assert!(ValuationProfile::dense(vec![vec![1.0, 2.0, 2.0, 2.0]]).is_err());
        assert!(ValuationProfile::dense(vec![vec![0.0, -1.0]]).is_err());
        assert!(ValuationProfile::dense(vec![vec![0.0, 1.0], vec![0.0, 1.0, 1.0, 1.0]]).is_err());
        assert!(ValuationProfile::dense(vec![vec![0.0, 1.0, 2.0]]).is_err());
        assert!(ValuationProfile::additive(&[vec![1.0, -2.0]]).is_err());
    }

    #[test]
    fn declared_bound_is_checked() {
        let p = ValuationProfile::additive(&[vec![1.0, 1.0]]).unwrap();
        assert!(p.clone().with_bound(1.5).is_err());
        assert_eq!(p.with_bound(2.0).unwrap().h_v(), Some(2.0));
    }

    #[test]
    fn profile_json_forms() {
        let dense: ValuationProfile =
            serde_json::from_str(r#"{"n":2,"m":2,"valuations":[[0,3,0,3],[0,0,4,4]]}"#).unwrap();
        let additive: ValuationProfile =
            serde_json::from_str(r#"{"n":2,"m":2,"additive":[[3,0],[0,4]]}"#).unwrap();
        assert_eq!(dense, additive);
        let back: ValuationProfile =
            serde_json::from_str(&serde_json::to_string(&dense).unwrap()).unwrap();
        assert_eq!(back, dense);
        assert!(serde_json::from_str::<ValuationProfile>(
            r#"{"n":3,"m":2,"additive":[[3,0],[0,4]]}"#
        )
        .is_err());
    }
}
