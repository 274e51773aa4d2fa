//! Waveform families, concrete waveforms and the baseband envelope.
//!
//! A family is fixed by [`WaveformSpec`]: `L` sub-pulses of duration `T`
//! seconds, `M`-ary tones spaced `Δf = i/T` apart (`i` a non-zero integer so
//! that tones stay orthogonal over one sub-pulse). A concrete [`FskWaveform`]
//! adds the per-sub-pulse frequency indices and initial phases.
//!
//! The complex envelope is
//!
//! ```text
//! s(t) = sqrt(1/(L T)) Σ_l p(t - lT) exp(j (ω_l (t - lT) + θ_l))
//! ```
//!
//! with `p` the unit rectangular pulse on `[0, T]` and `ω_l = 2π f_l Δf`.
//! The amplitude makes the waveform unit-energy, and because every sample of
//! the envelope has the same magnitude the PAPR is identically 1.
//!
//! Waveform indices are the base-`M` encoding of the frequency sequence with
//! the most significant digit on sub-pulse 0: for `M = 4, L = 3` the index 10
//! is `022`, i.e. the sequence `[0, 2, 2]`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static parameters of an FSK waveform family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformSpec {
    /// Number of sub-pulses `L`.
    pub num_subpulses: usize,
    /// Modulation order `M` (number of tones), at least 2.
    pub mod_order: usize,
    /// Sub-pulse duration `T` in seconds.
    pub subpulse_duration: f64,
    /// Non-zero integer `i` in `Δf = i/T`.
    pub freq_step_multiple: i64,
}

impl WaveformSpec {
    pub fn new(
        num_subpulses: usize,
        mod_order: usize,
        subpulse_duration: f64,
        freq_step_multiple: i64,
    ) -> Result<Self> {
        if num_subpulses == 0 {
            return Err(Error::InvalidSpec("need at least one sub-pulse".into()));
        }
        if mod_order < 2 {
            return Err(Error::InvalidSpec(format!(
                "modulation order must be at least 2, got {mod_order}"
            )));
        }
        if !(subpulse_duration > 0.0) || !subpulse_duration.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "sub-pulse duration must be positive, got {subpulse_duration}"
            )));
        }
        if freq_step_multiple == 0 {
            return Err(Error::InvalidSpec(
                "frequency step multiple must be non-zero".into(),
            ));
        }
        Ok(Self {
            num_subpulses,
            mod_order,
            subpulse_duration,
            freq_step_multiple,
        })
    }

    /// Tone spacing `Δf = i/T` in Hz (signed).
    pub fn freq_step(&self) -> f64 {
        self.freq_step_multiple as f64 / self.subpulse_duration
    }

    /// Total waveform duration `L T` in seconds.
    pub fn duration(&self) -> f64 {
        self.num_subpulses as f64 * self.subpulse_duration
    }

    /// Number of waveforms `M^L` in the family, if representable.
    pub fn family_size(&self) -> Option<u128> {
        (self.mod_order as u128).checked_pow(self.num_subpulses as u32)
    }

    /// Decode a waveform index into its frequency-index sequence.
    ///
    /// Digit `l` of the base-`M` expansion (most significant first) is the
    /// tone of sub-pulse `l`.
    pub fn freq_sequence_from_index(&self, index: u128) -> Result<Vec<u32>> {
        let count = self.family_size().ok_or_else(|| {
            Error::InvalidSpec(format!(
                "family size {}^{} not representable",
                self.mod_order, self.num_subpulses
            ))
        })?;
        if index >= count {
            return Err(Error::IndexOutOfRange { index, count });
        }
        let m = self.mod_order as u128;
        let mut digits = vec![0u32; self.num_subpulses];
        let mut rest = index;
        for d in digits.iter_mut().rev() {
            *d = (rest % m) as u32;
            rest /= m;
        }
        Ok(digits)
    }

    /// Encode a frequency-index sequence back into its waveform index.
    pub fn index_from_freq_sequence(&self, freq_indices: &[u32]) -> Result<u128> {
        if freq_indices.len() != self.num_subpulses {
            return Err(Error::InvalidFreqSequence(format!(
                "expected {} entries, got {}",
                self.num_subpulses,
                freq_indices.len()
            )));
        }
        let m = self.mod_order as u128;
        let mut index: u128 = 0;
        for &f in freq_indices {
            if f as usize >= self.mod_order {
                return Err(Error::InvalidFreqSequence(format!(
                    "frequency index {f} out of range 0..{}",
                    self.mod_order
                )));
            }
            index = index * m + f as u128;
        }
        Ok(index)
    }
}

/// A concrete waveform: frequency-index sequence plus initial phases.
#[derive(Debug, Clone, PartialEq)]
pub struct FskWaveform {
    spec: WaveformSpec,
    freq_indices: Vec<u32>,
    phases: Vec<f64>,
}

impl FskWaveform {
    /// Build a waveform, canonicalizing phases into `[0, 2π)`.
    pub fn new(spec: WaveformSpec, freq_indices: Vec<u32>, phases: Vec<f64>) -> Result<Self> {
        if freq_indices.len() != spec.num_subpulses {
            return Err(Error::InvalidFreqSequence(format!(
                "expected {} frequency indices, got {}",
                spec.num_subpulses,
                freq_indices.len()
            )));
        }
        if phases.len() != spec.num_subpulses {
            return Err(Error::InvalidFreqSequence(format!(
                "expected {} phases, got {}",
                spec.num_subpulses,
                phases.len()
            )));
        }
        for &f in &freq_indices {
            if f as usize >= spec.mod_order {
                return Err(Error::InvalidFreqSequence(format!(
                    "frequency index {f} out of range 0..{}",
                    spec.mod_order
                )));
            }
        }
        let phases = phases.into_iter().map(wrap_phase).collect();
        Ok(Self {
            spec,
            freq_indices,
            phases,
        })
    }

    /// Waveform `index` of the family with all-zero phases.
    pub fn from_index(spec: WaveformSpec, index: u128) -> Result<Self> {
        let freq = spec.freq_sequence_from_index(index)?;
        let phases = vec![0.0; spec.num_subpulses];
        Self::new(spec, freq, phases)
    }

    /// Uniformly random frequency sequence, all-zero phases.
    pub fn random<R: Rng>(spec: WaveformSpec, rng: &mut R) -> Self {
        let freq = (0..spec.num_subpulses)
            .map(|_| rng.gen_range(0..spec.mod_order as u32))
            .collect();
        Self::new(spec, freq, vec![0.0; spec.num_subpulses]).expect("random sequence is valid")
    }

    /// Same frequency sequence with different initial phases.
    pub fn with_phases(&self, phases: Vec<f64>) -> Result<Self> {
        Self::new(self.spec, self.freq_indices.clone(), phases)
    }

    pub fn spec(&self) -> &WaveformSpec {
        &self.spec
    }

    pub fn freq_indices(&self) -> &[u32] {
        &self.freq_indices
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// True when every sub-pulse carries the same tone.
    pub fn is_constant_frequency(&self) -> bool {
        self.freq_indices.windows(2).all(|w| w[0] == w[1])
    }

    /// Angular frequency `ω_l = 2π f_l Δf` of sub-pulse `l`.
    pub fn omega(&self, l: usize) -> f64 {
        TAU * self.freq_indices[l] as f64 * self.spec.freq_step()
    }

    /// Waveform index of this frequency sequence.
    pub fn index(&self) -> Result<u128> {
        self.spec.index_from_freq_sequence(&self.freq_indices)
    }

    /// Complex envelope value `s(t)`; zero outside `[0, LT)`.
    pub fn envelope_at(&self, t: f64) -> Complex64 {
        let spec = &self.spec;
        if t < 0.0 || t >= spec.duration() {
            return Complex64::new(0.0, 0.0);
        }
        let l = ((t / spec.subpulse_duration) as usize).min(spec.num_subpulses - 1);
        let amp = (1.0 / (spec.num_subpulses as f64 * spec.subpulse_duration)).sqrt();
        let local_t = t - l as f64 * spec.subpulse_duration;
        let phase = self.omega(l) * local_t + self.phases[l];
        amp * Complex64::from_polar(1.0, phase)
    }
}

fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to TAU itself for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Samples of the baseband envelope on `[0, LT)`.
#[derive(Debug, Clone)]
pub struct SampledEnvelope {
    pub sample_rate: f64,
    pub samples: Vec<Complex64>,
}

impl SampledEnvelope {
    /// Signal energy `Σ|x|² / fs`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.sample_rate
    }
}

/// Sample the envelope of `waveform` at `sample_rate` Hz.
///
/// The rate must resolve the highest tone (`fs ≥ 2 M |Δf|`) and give an
/// integral number of samples per sub-pulse, so the sampled energy equals the
/// continuous unit energy exactly.
pub fn sample_envelope(waveform: &FskWaveform, sample_rate: f64) -> Result<SampledEnvelope> {
    let spec = waveform.spec();
    let floor = 2.0 * spec.mod_order as f64 * spec.freq_step().abs();
    if !(sample_rate >= floor) {
        return Err(Error::InvalidSampleRate {
            rate: sample_rate,
            reason: format!("below the design floor 2·M·|Δf| = {floor} Hz"),
        });
    }
    let per_subpulse = sample_rate * spec.subpulse_duration;
    let spp = per_subpulse.round();
    if (per_subpulse - spp).abs() > 1e-9 * per_subpulse {
        return Err(Error::InvalidSampleRate {
            rate: sample_rate,
            reason: "rate must give an integral number of samples per sub-pulse".into(),
        });
    }
    let spp = spp as usize;
    let amp = (1.0 / (spec.num_subpulses as f64 * spec.subpulse_duration)).sqrt();
    let mut samples = Vec::with_capacity(spec.num_subpulses * spp);
    for l in 0..spec.num_subpulses {
        let omega = waveform.omega(l);
        let theta = waveform.phases()[l];
        for j in 0..spp {
            let local_t = j as f64 / sample_rate;
            samples.push(amp * Complex64::from_polar(1.0, omega * local_t + theta));
        }
    }
    Ok(SampledEnvelope {
        sample_rate,
        samples,
    })
}

/// Default envelope sampling at 16 samples per period of the highest tone.
pub fn sample_envelope_default(waveform: &FskWaveform) -> Result<SampledEnvelope> {
    let spec = waveform.spec();
    let rate = 16.0 * spec.mod_order as f64 * spec.freq_step().abs();
    sample_envelope(waveform, rate)
}

/// Peak-to-average power ratio of a sampled envelope.
///
/// Power spreads below 1e-12 relative are quantization noise of the trig
/// evaluation, not modulation; such envelopes are constant-modulus and the
/// ratio is exactly 1.
pub fn papr(envelope: &SampledEnvelope) -> Result<f64> {
    if envelope.samples.is_empty() {
        return Err(Error::EmptyInput("envelope has no samples"));
    }
    let mut max_p = f64::MIN;
    let mut min_p = f64::MAX;
    let mut sum = 0.0;
    for s in &envelope.samples {
        let p = s.norm_sqr();
        max_p = max_p.max(p);
        min_p = min_p.min(p);
        sum += p;
    }
    if max_p - min_p <= 1e-12 * max_p {
        return Ok(1.0);
    }
    Ok(max_p / (sum / envelope.samples.len() as f64))
}

/// JSON wire format for a waveform.
///
/// `{"L":…, "M":…, "T_seconds":…, "freq_step_multiple":…, "freq_indices":[…],
/// "phases_rad":[…]}`; absent phases mean all-zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveformJson {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T_seconds")]
    pub t_seconds: f64,
    pub freq_step_multiple: i64,
    pub freq_indices: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases_rad: Option<Vec<f64>>,
}

impl FskWaveform {
    pub fn to_json(&self) -> WaveformJson {
        WaveformJson {
            l: self.spec.num_subpulses,
            m: self.spec.mod_order,
            t_seconds: self.spec.subpulse_duration,
            freq_step_multiple: self.spec.freq_step_multiple,
            freq_indices: self.freq_indices.clone(),
            phases_rad: Some(self.phases.clone()),
        }
    }

    pub fn from_json(json: &WaveformJson) -> Result<Self> {
        let spec = WaveformSpec::new(json.l, json.m, json.t_seconds, json.freq_step_multiple)?;
        let phases = json
            .phases_rad
            .clone()
            .unwrap_or_else(|| vec![0.0; json.l]);
        Self::new(spec, json.freq_indices.clone(), phases)
    }
}
