//! Load-adaptive antenna activation for multi-cell massive MIMO downlinks.
//!
//! The crate dimensions a reference network at peak load, maps a daily load
//! profile to per-interval user-count distributions through a
//! state-dependent loss queue, and lets every base station pick its number
//! of active antennas per user state through best-response iteration.
//!
//! Module map:
//!
//! * [`geometry`]: 19-cell hexagonal layout with wrap-around and the
//!   coupling gains derived from it.
//! * [`rate`]: zero-forcing per-user rate lower bound and a Monte-Carlo
//!   ergodic-rate oracle.
//! * [`power`]: power-amplifier laws and the affine base-station power model.
//! * [`traffic`]: daily load profiles and the state-dependent queue.
//! * [`game`]: per-state best response, Gauss-Seidel sweeps and structural
//!   checks of the resulting game.
//! * [`dimensioning`]: reference design search and the activity fixed point.
//! * [`experiment`]: daily runs, sweeps and result emission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dimensioning;
pub mod experiment;
pub mod game;
pub mod geometry;
pub mod power;
pub mod rate;
pub mod search;
pub mod traffic;

mod error;

pub use config::{PaKind, SimConfig, SystemParams};
pub use error::{Error, Result};
