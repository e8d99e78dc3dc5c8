//! Seeded random instances shared by the integration suites.

#![allow(dead_code)]

use amd_core::engine::{Ama, AuctionParams, Boosts};
use amd_core::valuation::{allocation_count, ValuationProfile};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const CLASSES: [&str; 5] = ["ama", "vvca", "lambda", "mba", "mbarp"];

pub fn dims(rng: &mut ChaCha8Rng) -> (usize, usize) {
    (rng.gen_range(1..=3), rng.gen_range(1..=3))
}

/// Dense profile with continuous values in `[0, scale)` on nonempty bundles.
pub fn dense_profile(rng: &mut ChaCha8Rng, n: usize, m: usize, scale: f64) -> ValuationProfile {
    let rows = (0..n).map(|_| random_row(rng, m, scale)).collect();
    ValuationProfile::dense(rows).unwrap()
}

pub fn random_row(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> Vec<f64> {
    (0..1usize << m)
        .map(|b| {
            if b == 0 {
                0.0
            } else {
                rng.gen::<f64>() * scale
            }
        })
        .collect()
}

/// Dense profile with small integer values, so that ties are exact.
pub fn integer_profile(rng: &mut ChaCha8Rng, n: usize, m: usize, top: u32) -> ValuationProfile {
    let rows = (0..n)
        .map(|_| {
            (0..1usize << m)
                .map(|b| {
                    if b == 0 {
                        0.0
                    } else {
                        rng.gen_range(0..=top) as f64
                    }
                })
                .collect()
        })
        .collect();
    ValuationProfile::dense(rows).unwrap()
}

pub fn additive_profile(rng: &mut ChaCha8Rng, n: usize, m: usize, scale: f64) -> ValuationProfile {
    let items: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| rng.gen::<f64>() * scale).collect())
        .collect();
    ValuationProfile::additive(&items).unwrap()
}

fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.5..2.0)).collect()
}

/// Random auction of the named class for an `(n, m)` market.
pub fn auction(rng: &mut ChaCha8Rng, class: &str, n: usize, m: usize) -> AuctionParams {
    let count = allocation_count(n, m) as usize;
    let boosts = |rng: &mut ChaCha8Rng| {
        Boosts::Dense((0..count).map(|_| rng.gen_range(-1.0..1.0)).collect())
    };
    match class {
        "ama" => AuctionParams::GeneralAma(Ama {
            weights: weights(rng, n),
            boosts: boosts(rng),
        }),
        "vvca" => AuctionParams::Vvca {
            weights: weights(rng, n),
            c: (0..n)
                .map(|_| (0..1 << m).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
        },
        "lambda" => AuctionParams::LambdaAuction {
            boosts: boosts(rng),
        },
        "mba" => AuctionParams::Mba {
            c: rng.gen_range(0.0..3.0),
        },
        "mbarp" => AuctionParams::Mbarp {
            c: rng.gen_range(0.0..3.0),
            reserves: (0..m).map(|_| rng.gen_range(0.0..1.5)).collect(),
        },
        other => panic!("unknown class {other}"),
    }
}
