//! Passive target detection from unknown communication signals in a
//! multi-static ISAC network: the GLRT detector, its large-sample theory,
//! joint transmit beamforming, and Monte Carlo experiment drivers.

pub mod asymptotics;
pub mod beamform;
pub mod detector;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod random;
pub mod scenario;
pub mod sdp;
pub mod waveform;

pub use error::{Error, Result};
