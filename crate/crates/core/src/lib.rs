//! One-dimensional multichannel total-variation denoising and TV flow,
//! engineered so that the completely local jump estimates of the underlying
//! theory are machine-verified properties of every solve.
//!
//! The pieces:
//! - [`signal`]: uniform grids, piecewise-constant multichannel signals, and
//!   the discrete total-variation quantities (per-edge jumps, windowed TV,
//!   Lipschitz constants).
//! - [`prox`]: certified ROF solves via convex duality; every report carries
//!   an exact duality gap.
//! - [`taut_string`]: exact non-iterative solver for the scalar case, used
//!   as an independent oracle.
//! - [`smoothed`]: the ε-regularized energy, its Euler-Lagrange solver, and
//!   the p-energy bounds it satisfies.
//! - [`flow`]: total-variation flow as iterated resolvents, with
//!   trajectory-level verification.
//! - [`properties`]: randomized, seeded suites binding each estimate to an
//!   executable check with machine-readable reports.
//! - [`cert`]: the certificate-to-tolerance conversions shared by all
//!   checks.

pub mod cert;
pub mod error;
pub mod flow;
pub mod generate;
pub mod io;
pub mod properties;
pub mod prox;
pub mod signal;
pub mod smoothed;
pub mod taut_string;
mod util;

pub use error::{Result, TvError};
pub use signal::{edge_jumps, lipschitz_constant, tv, tv_window, EdgeJumps, Grid, Signal, Window};
