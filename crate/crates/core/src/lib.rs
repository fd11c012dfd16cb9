//! Link-level simulation of interference alignment and joint-transmission
//! CoMP for three 2-antenna base stations and three 2-antenna mobiles over
//! OFDM, driven by compressed (Givens-angle) CSI feedback.
//!
//! Pipeline per drop: [`scenario`] draws channels, [`codec`] compresses and
//! rebuilds each mobile's concatenated channel, [`beamforming`] designs the
//! precoders, [`phy_link`] evaluates the true post-combining SINR and
//! [`link_adapt`] turns it into throughput. [`harness`] runs the sweeps.

pub mod beamforming;
pub mod codec;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod link_adapt;
pub mod phy_link;
pub mod scenario;

pub use error::{CodecError, Error, Result};
