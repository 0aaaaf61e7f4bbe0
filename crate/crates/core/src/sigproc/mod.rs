//! Receive chain: matched filtering, clutter removal, receive-side path
//! separation, phase demodulation, spectral peak quality and root-MUSIC.

pub mod clutter;
pub mod demod;
pub mod doa;
pub mod spectrum;
pub mod waveform;

pub use clutter::{clutter_filter, moving_average_response};
pub use demod::{combine, detrend, phase_demodulate, separate_paths, unwrap_phase};
pub use doa::root_music_doa;
pub use spectrum::{main_lobe_width, peak_quality, power_spectrum, power_spectrum_nfft, Spectrum, VitalSignEstimate};
pub use waveform::{make_waveform, matched_filter, Waveform};
