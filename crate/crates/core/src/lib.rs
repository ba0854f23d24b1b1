//! Link-level simulator for two-relay virtual full-duplex relaying.
//!
//! Two half-duplex relays alternate between receiving the source's current
//! frame and forwarding the previous one. Relays remove the inter-relay
//! interference with a QR rotation and forward whatever they decoded; the
//! destination runs an iterative joint MAP detector / turbo decoder that
//! weights the relay stream by an estimated relay error probability.
//!
//! Module map:
//! - [`numerics`]: matrices, QR, seeded fading and noise, real-valued model
//! - [`fec`]: the serially concatenated code and its BCJR decoder
//! - [`phy`]: constellation, joint MAP detector, error-probability estimator
//! - [`nodes`]: slot schedule, relay and destination behaviour
//! - [`sim`]: scenarios, link budgets, Monte Carlo campaigns

pub mod error;
pub mod fec;
pub mod logsum;
pub mod nodes;
pub mod numerics;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod phy;
pub mod sim;

pub use error::{Error, Result};
