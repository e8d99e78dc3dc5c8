//! Seeded profile distributions and sample sets.
//!
//! Sample `k` of a draw with seed `s` is generated from its own ChaCha stream
//! `(s, k)`, so the result does not depend on how generation is scheduled.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::valuation::ValuationProfile;

/// Deterministic RNG for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes two words into a child seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileDistribution {
    /// Additive bidders; every per-item value is i.i.d. uniform on `[0, h_v)`.
    IidUniformAdditive {
        n: usize,
        m: usize,
        h_v: f64,
    },
    UniformOverFiniteSet {
        profiles: Vec<ValuationProfile>,
    },
    PointMass {
        profile: ValuationProfile,
    },
}

impl ProfileDistribution {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProfileDistribution::IidUniformAdditive { n, m, h_v } => {
                if !(h_v.is_finite() && *h_v > 0.0) {
                    return Err(validation(format!("h_v must be positive, got {h_v}")));
                }
                if *n == 0 || *m == 0 {
                    return Err(validation("iid-uniform-additive needs n, m >= 1"));
                }
                Ok(())
            }
            ProfileDistribution::UniformOverFiniteSet { profiles } => {
                let first = profiles.first().ok_or_else(|| {
                    validation("uniform-over-finite-set needs at least one profile")
                })?;
                if profiles
                    .iter()
                    .any(|p| p.n() != first.n() || p.m() != first.m())
                {
                    return Err(validation("finite-set profiles disagree on (n, m)"));
                }
                Ok(())
            }
            ProfileDistribution::PointMass { .. } => Ok(()),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            ProfileDistribution::IidUniformAdditive { n, m, .. } => (*n, *m),
            ProfileDistribution::UniformOverFiniteSet { profiles } => {
                (profiles[0].n(), profiles[0].m())
            }
            ProfileDistribution::PointMass { profile } => (profile.n(), profile.m()),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> ValuationProfile {
        match self {
            ProfileDistribution::IidUniformAdditive { n, m, h_v } => {
                let items: Vec<Vec<f64>> = (0..*n)
                    .map(|_| (0..*m).map(|_| rng.gen::<f64>() * h_v).collect())
                    .collect();
                ValuationProfile::additive(&items)
                    .and_then(|p| p.with_bound(*m as f64 * h_v))
                    .expect("uniform draws are valid")
            }
            ProfileDistribution::UniformOverFiniteSet { profiles } => {
                profiles[rng.gen_range(0..profiles.len())].clone()
            }
            ProfileDistribution::PointMass { profile } => profile.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub seed: u64,
    pub profiles: Vec<ValuationProfile>,
}

impl SampleSet {
    /// Wraps explicit profiles; all must share `(n, m)`.
    pub fn new(seed: u64, profiles: Vec<ValuationProfile>) -> Result<SampleSet> {
        let set = SampleSet { seed, profiles };
        set.validate()?;
        Ok(set)
    }

    pub fn n(&self) -> usize {
        self.profiles[0].n()
    }

    pub fn m(&self) -> usize {
        self.profiles[0].m()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Largest declared or observed value across the sample.
    pub fn value_bound(&self) -> f64 {
        self.profiles
            .iter()
            .map(|p| p.h_v().unwrap_or_else(|| p.max_value()))
            .fold(0.0, f64::max)
    }

    /// Checks the invariants for sets that came in through deserialization.
    pub fn validate(&self) -> Result<()> {
        let first = self
            .profiles
            .first()
            .ok_or_else(|| validation("sample set must be nonempty"))?;
        if self
            .profiles
            .iter()
            .any(|p| p.n() != first.n() || p.m() != first.m())
        {
            return Err(validation("sample profiles disagree on (n, m)"));
        }
        Ok(())
    }
}

/// Draws `count` i.i.d. profiles from `dist`.
pub fn sample_profiles(dist: &ProfileDistribution, count: usize, seed: u64) -> Result<SampleSet> {
    dist.validate()?;
    if count == 0 {
        return Err(validation("sample size must be at least 1"));
    }
    let profiles: Vec<ValuationProfile> = (0..count as u64)
        .into_par_iter()
        .map(|k| dist.draw(&mut stream_rng(seed, k)))
        .collect();
    Ok(SampleSet { seed, profiles })
}
