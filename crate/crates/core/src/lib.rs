//! Analysis toolkit for frequency-shift-keyed (FSK) pulse trains used as
//! combined communications and radar waveforms.
//!
//! An FSK waveform is a train of `L` rectangular sub-pulses of duration `T`,
//! each carrying one of `M` orthogonal tones spaced by `Δf = i/T`. The data
//! symbols pick the tone of each sub-pulse, so the waveform doubles as a
//! frequency-coded radar pulse with unit peak-to-average power ratio.
//!
//! The crate covers the full analysis pipeline:
//!
//! * [`waveform`] — waveform families, the index ↔ frequency-sequence codec,
//!   baseband envelope sampling and PAPR.
//! * [`ambiguity`] — the complex ambiguity function, its cuts, the closed-form
//!   delay–Doppler lattice sidelobes, sampled surfaces and local-maxima peak
//!   sidelobe extraction.
//! * [`stats`] — exact sidelobe laws, the independence-based peak-sidelobe
//!   CDF approximation, exhaustive and Monte Carlo oracles, and Wasserstein-1
//!   distances between CDFs.
//! * [`optimizer`] — min-max design of per-sub-pulse initial phases that
//!   suppresses the lattice peak sidelobe level of each waveform.
//! * [`comms`] — sufficient-statistic level simulation of the communications
//!   link with coherent, non-coherent and joint maximum-likelihood detectors.
//!
//! Enumeration, sampling and batch work are data-parallel when the `parallel`
//! feature (default) is enabled; results are identical with or without it.

pub mod ambiguity;
pub mod comms;
mod error;
mod exec;
pub mod optimizer;
pub mod rng;
pub mod stats;
pub mod waveform;

pub use error::{Error, Result};
pub use waveform::{FskWaveform, SampledEnvelope, WaveformSpec};
