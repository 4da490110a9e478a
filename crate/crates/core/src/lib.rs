//! Secure downlink transmission for near-field XL-MIMO.
//!
//! The crate models a base station with a uniform planar array serving `K`
//! legitimate users (LUEs) while `E` eavesdroppers (EUEs) listen in. Data is
//! beamfocused with a matrix `W`; artificial noise (AN) is radiated in the
//! null space of the legitimate channels. The minimum secrecy rate over all
//! LUE/EUE pairs is maximized by alternating
//!
//! * an SCA round on `W` (tight concave surrogates, solved by a projected
//!   first-order method, see [`sca`]), and
//! * a golden-section search on the data/AN power split `ε` (see [`power`]).
//!
//! [`algorithm`] wires both into the two-stage loop and dispatches the
//! baseline schemes used for comparison.

pub mod algorithm;
pub mod channel;
mod clock;
pub mod error;
pub mod linalg;
pub mod pattern;
pub mod power;
pub mod precoding;
pub mod rates;
pub mod sca;

pub use algorithm::{
    optimize_channels, run_algorithm1, run_scheme, run_scheme_on_channels, CsiMode, LinkBudget,
    RunOptions, Scheme, SolutionReport,
};
pub use channel::{
    ArrayGeometry, Cell, ChannelSet, Point, Scenario, ScenarioConfig, UePlacement, UeRole,
};
pub use error::{Error, Result};
pub use linalg::C64;
pub use precoding::{AnNormalization, PrecodingState};
pub use rates::{RateEvaluator, UeId};

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a power in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Converts nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}
