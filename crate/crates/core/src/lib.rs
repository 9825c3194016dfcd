//! Quicksort with unreliable comparisons.
//!
//! Simulates Quicksort whose element comparisons err independently with
//! probability `p`, counts the inversions left in the output and compares the
//! normalized count `I(n,p)/(n^2 p)` with its three limit laws:
//!
//! * `p -> c > 0`: the fixed point `X_c` of a contracting distributional
//!   equation, sampled by population iteration ([`limit_laws::sample_xc_pool`]);
//! * `p -> 0`, `np -> inf`: half the area under the FIND process
//!   ([`fragmentation::sample_x_hat`]);
//! * `np -> lambda`: a Poisson functional of a random fragmentation tree
//!   ([`limit_laws::sample_x_lambda`]), whose moments are computed exactly
//!   by [`moments`].
//!
//! The [`harness`] module runs regime sweeps and Wasserstein-1 comparisons.

pub mod error;
pub mod fragmentation;
pub mod harness;
pub mod inversions;
pub mod limit_laws;
pub mod moments;
pub mod noisy_sort;
pub mod rng;
pub mod tolerances;

pub use error::{Error, Result};
pub use inversions::{count_inversions, random_permutation, InversionCount, Permutation};
pub use noisy_sort::{noisy_quicksort, ErrorModel, SortTrace};
pub use rng::{SeedPath, Stream};
