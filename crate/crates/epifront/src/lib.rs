//! Simulation and threshold analysis for a degenerate epidemic model with
//! nonlocal dispersal and free boundaries.
//!
//! Two coupled densities live on a moving interval `[g(t), h(t)]`: the
//! infectious agents `u`, which disperse through a convolution kernel, and
//! the infected humans `v`, which do not move. The interval's endpoints
//! expand in proportion to the kernel mass that `u` throws past them.
//!
//! Every run ends in one of two ways — the range grows without bound while
//! `(u, v)` locks onto the endemic equilibrium `(K1, K2)`, or the range
//! stays bounded and both densities die out — and the crate computes each
//! quantity that decides between them:
//!
//! * [`growth::r0`] and [`growth::theta`]: the reproduction number and the
//!   effective linear growth rate;
//! * [`spectral::lambda_p`]: the principal eigenvalue of the nonlocal
//!   operator on an interval;
//! * [`spectral::l_star`]: the critical range length;
//! * [`classify::mu_star`]: the critical front-response coefficient;
//! * [`dynamics::run_fb`] and [`classify::classify`]: full simulations and
//!   their spreading/vanishing verdicts.
//!
//! The `epifront` binary exposes all of it behind JSON configs; see the
//! guide in `book/` for a walk-through.

// `!(x > 0.0)`-style comparisons reject NaN, which `x <= 0.0` would let
// through; index loops over several parallel slices stay as loops.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod classify;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod grid;
pub mod growth;
pub mod interval;
pub mod kernel;
pub mod report;
pub mod spectral;

pub use classify::{ClassifyConfig, Outcome, Verdict};
pub use dynamics::{InitialData, InitialShape, SimConfig, SimState, Trajectory};
pub use grid::{ActiveWindow, Field, Grid};
pub use growth::{GrowthLaw, ModelParams};
pub use kernel::Kernel;
