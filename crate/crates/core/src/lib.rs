//! Simulation and analysis toolkit for a four-wave-mixing heralded single-photon
//! source in a ladder-scheme atomic vapor.
//!
//! The crate is organised around the time-tag stream: [`sim`] produces tag
//! streams from a source model, [`tagstream`] stores and merges them, and
//! [`correlate`] reduces them to the usual figures of merit (cross-correlation
//! peak, heralding efficiency, heralded auto-correlation, HOM visibility).
//! [`phasematch`] and [`mode`] hold the closed-form optics.

pub mod correlate;
pub mod error;
pub mod fmt;
pub mod mode;
pub mod phasematch;
pub mod sim;
pub mod tagstream;

pub use correlate::{
    g2_cross, g2_peak, heralded_g2c, heralding_efficiency, hom_profile, AutocorrResult,
    CorrelationHistogram, HeraldWindow, HeraldingResult, HistogramParams, HomParams, HomProfile,
};
pub use error::{Error, Result};
pub use mode::{DelaySampler, TemporalMode};
pub use phasematch::{OpticalGeometry, PhaseMatchResult, ScanRow};
pub use sim::{ChannelMap, HomOptions, SourceConfig};
pub use tagstream::{TagStream, TimeTag};

/// Picoseconds per second.
pub const PS_PER_S: f64 = 1e12;
