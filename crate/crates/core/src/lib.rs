//! Location-aided routing for vehicular ad hoc networks over Wi-Fi Direct,
//! with commitment-based key agreement that exposes man-in-the-middle
//! attackers, and a discrete-event simulator to measure it.

pub mod cli;
pub mod crypto;
pub mod engine;
pub mod geo;
pub mod link;
pub mod mobility;
pub mod routing;
