//! Joint user pairing and bandwidth allocation for a two-user-per-group
//! semantic downlink.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: path loss, shadowing and the per-user rate function `F(b)`.
//! - [`latency_energy`]: user and system parameters, delays and energies.
//! - [`bandwidth`]: latency bounds and the KKT water-filling allocator.
//! - [`distortion`]: distortion tables and a synthetic generator.
//! - [`pairing`]: cost matrices, minimum-cost perfect matching and k-best
//!   enumeration.
//! - [`solver`]: the joint method and the baselines.
//! - [`scenario`] and [`sweep`]: instance generation and bandwidth sweeps.

pub mod bandwidth;
pub mod channel;
pub mod distortion;
pub mod error;
pub mod latency_energy;
pub mod pairing;
mod root;
pub mod scenario;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};

// The guide's code blocks run as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/rate.md")]
    mod rate {}
    #[doc = include_str!("../../../book/src/allocation.md")]
    mod allocation {}
    #[doc = include_str!("../../../book/src/pairing.md")]
    mod pairing {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/distortion-tables.md")]
    mod distortion_tables {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
