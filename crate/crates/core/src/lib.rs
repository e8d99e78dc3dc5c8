//! Combinatorial auction engine and sample-based mechanism design tools.
//!
//! The crate evaluates affine maximizer auctions (AMAs) and their subclasses
//! by exhaustive enumeration, searches their parameters on samples, builds
//! shattering constructions and runs generalization experiments.

pub mod constructions;
pub mod engine;
pub mod error;
pub mod learning;
pub mod mba;
pub mod sampling;
pub mod search;
pub mod valuation;

pub use engine::{run_auction, AuctionOutcome, AuctionParams, Boosts};
pub use error::{Error, Result};
pub use valuation::{Allocation, AllocationSpace, Bundle, ValuationProfile};
