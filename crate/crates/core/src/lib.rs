//! Prime-gap analysis toolkit.
//!
//! The crate is organised bottom-up:
//!
//! * [`sieve`]: segmented prime generation, the ordered gap stream and a
//!   random-access [`PrimeTable`](sieve::PrimeTable);
//! * [`analytic`]: `li`, smooth Selberg asymptotics, Dusart bounds and the
//!   other closed forms;
//! * [`selberg`]: the sums `S1`, `S2`, Chebyshev `θ` and the partial-sum scan;
//! * [`fluct`]: fluctuation functions `f`, `f̂`, `b`, `k`, `Δ` and all of the
//!   per-prime condition scans;
//! * [`fit`]: the triple-log fit of `k(x)` and the Skewes estimate;
//! * [`cli`]: run configuration, checkpoints and the command implementations.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod fit;
pub mod fluct;
pub mod selberg;
pub mod sieve;
pub mod stream;
pub mod sum;

pub use error::{Error, Result};
