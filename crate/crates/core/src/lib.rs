//! Simulation core for RIS-assisted radar respiration monitoring.
//!
//! The crate synthesizes the dual-path radar channel (direct path plus a
//! path reflected by a reconfigurable intelligent surface), computes the
//! closed-form dual-constraint transmit precoder, runs the temporal, spatial
//! and opportunistic sensing strategies and extracts respiration
//! displacement and rate from both paths.
//!
//! Module map:
//!
//! | module      | contents                                                   |
//! |-------------|------------------------------------------------------------|
//! | `geometry`  | array configuration, placement, ULA steering vectors       |
//! | `channel`   | Rician draws, LoS channels, RIS focusing, end-to-end matrix |
//! | `beamform`  | minimum-norm dual-constraint and fixed-power precoders     |
//! | `physio`    | displacement traces, angle-dependent chest RCS             |
//! | `sigproc`   | waveform, matched filter, clutter filter, demodulation, spectra, root-MUSIC |
//! | `strategy`  | transmission schedules and the evaluate/reconfigure loop   |
//! | `scenario`  | full acquisitions and gamma sweeps                         |
//! | `config`    | declarative scenario files with unit-suffixed quantities   |
//! | `selftest`  | executable acceptance checks                               |

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub mod beamform;
pub mod channel;
pub mod config;
pub mod geometry;
pub mod physio;
pub mod rng;
pub mod scenario;
pub mod selftest;
pub mod sigproc;
pub mod strategy;
pub mod units;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Which of the two sensing paths a quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Direct,
    Ris,
}

impl PathKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PathKind::Direct => "direct",
            PathKind::Ris => "ris",
        }
    }

    pub fn other(self) -> PathKind {
        match self {
            PathKind::Direct => PathKind::Ris,
            PathKind::Ris => PathKind::Direct,
        }
    }

    pub const BOTH: [PathKind; 2] = [PathKind::Direct, PathKind::Ris];
}

impl std::fmt::Display for PathKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("ill-conditioned constraints: steering correlation |a_c| = {0} is too close to 1")]
    IllConditioned(f64),
    #[error("frequency {freq} Hz violates Nyquist for sample rate {rate} Hz")]
    Nyquist { freq: f64, rate: f64 },
    #[error("zero-magnitude sample at slow-time index {0}; phase is undefined")]
    ZeroSample(usize),
    #[error("slow-time index {0} belongs to neither slot set")]
    UnscheduledSlot(usize),
    #[error("trace ingestion failed for {path}: {reason}")]
    Ingest { path: String, reason: String },
    #[error("direction estimation failed: {0}")]
    Doa(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
