//! Sufficient-statistic simulation of the FSK communications link.
//!
//! The receiver correlates each sub-pulse against all `M` tone templates.
//! Conditioned on the channel vector `h` and the transmitted waveform, the
//! correlator outputs are
//!
//! ```text
//! y[m, l] = μ[m, l] + n[m, l],
//! μ[m, l] = sqrt(1/L) ‖h‖² e^{jθ_l}   if m = k_l (the sent tone), else 0,
//! n[m, l] ~ CN(0, ‖h‖² N₀ / L)        i.i.d.
//! ```
//!
//! so the link is simulated at the statistic level, with no waveform-rate
//! signal processing. Three detectors act on a bank:
//!
//! * coherent: `argmax_m Re y[m, l]` (maximum likelihood for zero phases),
//! * non-coherent: `argmax_m |y[m, l]|`, invariant to initial phases,
//! * joint ML: marginalizes the waveform index over all `M^L` candidates
//!   with their designed phases, per received sub-pulse.
//!
//! The quoted SNR is the per-sub-pulse ratio `γ = E[‖h‖²]·(1/L)/N₀` with
//! `E[‖h‖²] = N` receive antennas, in dB.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ambiguity::fmt_sig;
use crate::error::{Error, Result};
use crate::exec;
use crate::optimizer::PhaseTable;
use crate::rng::{self, substream};
use crate::waveform::WaveformSpec;

/// Joint-ML codebooks are capped at 2^24 waveforms.
pub const JOINT_ML_BUDGET_BITS: f64 = 24.0;

/// Receive-channel model; the gain vector is normalized to `E[‖h‖²] = N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum ChannelModel {
    /// Deterministic all-ones gains (pure AWGN).
    Awgn { num_rx_antennas: usize },
    /// Per-antenna Rician fading with LOS-to-scatter power ratio `k_factor`.
    Rician { num_rx_antennas: usize, k_factor: f64 },
}

impl ChannelModel {
    pub fn num_rx_antennas(&self) -> usize {
        match *self {
            ChannelModel::Awgn { num_rx_antennas } => num_rx_antennas,
            ChannelModel::Rician {
                num_rx_antennas, ..
            } => num_rx_antennas,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_rx_antennas() == 0 {
            return Err(Error::InvalidParameter(
                "need at least one receive antenna".into(),
            ));
        }
        if let ChannelModel::Rician { k_factor, .. } = *self {
            if !(k_factor >= 0.0) {
                return Err(Error::InvalidParameter(
                    "Rician K factor must be nonnegative".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One fading realization of the channel gain vector.
pub fn draw_channel<R: Rng>(model: &ChannelModel, rng: &mut R) -> Vec<Complex64> {
    match *model {
        ChannelModel::Awgn { num_rx_antennas } => {
            vec![Complex64::new(1.0, 0.0); num_rx_antennas]
        }
        ChannelModel::Rician {
            num_rx_antennas,
            k_factor,
        } => {
            if k_factor.is_infinite() {
                return vec![Complex64::new(1.0, 0.0); num_rx_antennas];
            }
            let los = (k_factor / (k_factor + 1.0)).sqrt();
            let scatter = (1.0 / (k_factor + 1.0)).sqrt() * FRAC_1_SQRT_2;
            (0..num_rx_antennas)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(los + scatter * re, scatter * im)
                })
                .collect()
        }
    }
}

fn h_norm_sq(h: &[Complex64]) -> f64 {
    h.iter().map(|z| z.norm_sqr()).sum()
}

/// Noise power-spectral density from the quoted per-sub-pulse SNR.
pub fn noise_psd(spec: &WaveformSpec, num_rx_antennas: usize, snr_db: f64) -> f64 {
    let gamma = 10f64.powf(snr_db / 10.0);
    num_rx_antennas as f64 / (spec.num_subpulses as f64 * gamma)
}

/// Matched-correlator outputs for one received waveform.
#[derive(Debug, Clone)]
pub struct CorrelatorBank {
    /// `y[l*M + m]`: tone `m` correlation of sub-pulse `l`.
    y: Vec<Complex64>,
    mod_order: usize,
    num_subpulses: usize,
    h_norm_sq: f64,
    noise_psd: f64,
}

impl CorrelatorBank {
    /// Noiseless bank: exactly the conditional means.
    pub fn noiseless(digits: &[u32], phases: &[f64], mod_order: usize, h: &[Complex64]) -> Self {
        Self::build(digits, phases, mod_order, h, 0.0)
    }

    /// Simulated bank at the quoted SNR; draws `L·M` noise samples from `rng`
    /// in `(l, m)` order.
    pub fn simulate<R: Rng>(
        digits: &[u32],
        phases: &[f64],
        mod_order: usize,
        h: &[Complex64],
        noise_psd: f64,
        rng: &mut R,
    ) -> Self {
        Self::build(digits, phases, mod_order, h, noise_psd).with_rng(rng)
    }

    fn build(
        digits: &[u32],
        phases: &[f64],
        mod_order: usize,
        h: &[Complex64],
        noise_psd: f64,
    ) -> Self {
        let l_count = digits.len();
        let hn2 = h_norm_sq(h);
        let amp = (1.0 / l_count as f64).sqrt() * hn2;
        let mut y = vec![Complex64::new(0.0, 0.0); l_count * mod_order];
        for (l, (&digit, &theta)) in digits.iter().zip(phases).enumerate() {
            y[l * mod_order + digit as usize] = amp * Complex64::from_polar(1.0, theta);
        }
        Self {
            y,
            mod_order,
            num_subpulses: l_count,
            h_norm_sq: hn2,
            noise_psd,
        }
    }

    fn with_rng<R: Rng>(mut self, rng: &mut R) -> Self {
        let sigma =
            (self.h_norm_sq * self.noise_psd / self.num_subpulses as f64).sqrt() * FRAC_1_SQRT_2;
        for slot in self.y.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *slot += Complex64::new(sigma * re, sigma * im);
        }
        self
    }

    pub fn value(&self, m: usize, l: usize) -> Complex64 {
        self.y[l * self.mod_order + m]
    }

    pub fn mod_order(&self) -> usize {
        self.mod_order
    }

    pub fn num_subpulses(&self) -> usize {
        self.num_subpulses
    }

    pub fn h_norm_sq(&self) -> f64 {
        self.h_norm_sq
    }

    /// Per-correlator complex noise variance `‖h‖² N₀ / L`.
    pub fn noise_variance(&self) -> f64 {
        self.h_norm_sq * self.noise_psd / self.num_subpulses as f64
    }

    /// Rotate the noise of every column `l` by `e^{jθ_l}` while keeping the
    /// same mean structure it was built with. Used to couple runs with and
    /// without designed phases: circular symmetry makes the rotated noise
    /// identically distributed.
    fn rotate_columns(&mut self, phases: &[f64]) {
        for (l, &theta) in phases.iter().enumerate() {
            let rot = Complex64::from_polar(1.0, theta);
            for m in 0..self.mod_order {
                self.y[l * self.mod_order + m] *= rot;
            }
        }
    }
}

/// Coherent per-symbol detection: `argmax_m Re y[m, l]`, lowest index wins
/// ties. Maximum likelihood for the zero-phase waveform.
pub fn detect_coherent(bank: &CorrelatorBank, l: usize) -> usize {
    let mut best = 0usize;
    let mut best_v = f64::MIN;
    for m in 0..bank.mod_order {
        let v = bank.value(m, l).re;
        if v > best_v {
            best_v = v;
            best = m;
        }
    }
    best
}

/// Non-coherent per-symbol detection: `argmax_m |y[m, l]|`, phase-agnostic.
pub fn detect_noncoherent(bank: &CorrelatorBank, l: usize) -> usize {
    let mut best = 0usize;
    let mut best_v = f64::MIN;
    for m in 0..bank.mod_order {
        let v = bank.value(m, l).norm_sqr();
        if v > best_v {
            best_v = v;
            best = m;
        }
    }
    best
}

/// Complete phase codebook of a family: digits and unit phasors of every
/// waveform, for the joint-ML detector.
#[derive(Debug, Clone)]
pub struct PhaseCodebook {
    spec: WaveformSpec,
    digits: Vec<Vec<u32>>,
    phasors: Vec<Vec<Complex64>>,
}

impl PhaseCodebook {
    /// Build from a table covering the whole `M^L` family.
    pub fn from_table(spec: &WaveformSpec, table: &PhaseTable) -> Result<Self> {
        let bits = spec.num_subpulses as f64 * (spec.mod_order as f64).log2();
        if bits > JOINT_ML_BUDGET_BITS {
            return Err(Error::EnumerationBudget {
                required: spec.family_size().unwrap_or(u128::MAX),
                budget: 1 << 24,
            });
        }
        table.check_family(spec.num_subpulses, spec.mod_order)?;
        let count = spec.family_size().expect("within budget") as usize;
        let mut digits = Vec::with_capacity(count);
        let mut phasors = Vec::with_capacity(count);
        for index in 0..count as u128 {
            let seq = spec.freq_sequence_from_index(index)?;
            let phases = table.get(index).expect("family checked");
            phasors.push(
                phases
                    .iter()
                    .map(|&t| Complex64::from_polar(1.0, t))
                    .collect(),
            );
            digits.push(seq);
        }
        Ok(Self {
            spec: *spec,
            digits,
            phasors,
        })
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self, index: usize) -> &[u32] {
        &self.digits[index]
    }

    pub fn phases_phasors(&self, index: usize) -> &[Complex64] {
        &self.phasors[index]
    }

    /// Log-likelihood scores of every candidate waveform, up to a common
    /// constant: `(2a/σ²) Σ_l Re(conj(y[k_l, l]) e^{jθ_l})`. With zero noise
    /// variance the unscaled correlation sums are returned (the ML limit).
    fn scores(&self, bank: &CorrelatorBank, out: &mut Vec<f64>) {
        let amp = (1.0 / self.spec.num_subpulses as f64).sqrt() * bank.h_norm_sq;
        let sigma2 = bank.noise_variance();
        let scale = if sigma2 > 0.0 { 2.0 * amp / sigma2 } else { 1.0 };
        out.clear();
        for (digits, phasors) in self.digits.iter().zip(&self.phasors) {
            let mut acc = 0.0;
            for (l, (&d, u)) in digits.iter().zip(phasors).enumerate() {
                acc += (bank.value(d as usize, l).conj() * u).re;
            }
            out.push(scale * acc);
        }
    }

    /// Marginalized per-symbol decisions for every sub-pulse of the bank.
    fn detect_all(&self, bank: &CorrelatorBank, scores: &mut Vec<f64>, out: &mut Vec<usize>) {
        self.scores(bank, scores);
        let m = self.spec.mod_order;
        let l_count = self.spec.num_subpulses;
        let zero_noise = bank.noise_variance() == 0.0;
        out.clear();
        for l in 0..l_count {
            let mut best_k = 0usize;
            let mut best_xi = f64::NEG_INFINITY;
            for k in 0..m {
                // ξ_k = log Σ_{i: digit_l(i) = k} exp(score_i), max-shifted;
                // in the zero-noise limit the max alone decides
                let mut smax = f64::NEG_INFINITY;
                for (i, digits) in self.digits.iter().enumerate() {
                    if digits[l] as usize == k {
                        smax = smax.max(scores[i]);
                    }
                }
                let xi = if zero_noise {
                    smax
                } else {
                    let mut acc = 0.0;
                    for (i, digits) in self.digits.iter().enumerate() {
                        if digits[l] as usize == k {
                            acc += (scores[i] - smax).exp();
                        }
                    }
                    smax + acc.ln()
                };
                if xi > best_xi {
                    best_xi = xi;
                    best_k = k;
                }
            }
            out.push(best_k);
        }
    }
}

/// Joint maximum-likelihood detection of sub-pulse `l`, marginalizing the
/// waveform index over the codebook.
pub fn detect_joint_ml(bank: &CorrelatorBank, codebook: &PhaseCodebook, l: usize) -> Result<usize> {
    if l >= bank.num_subpulses() || bank.num_subpulses() != codebook.spec.num_subpulses {
        return Err(Error::InvalidParameter(
            "bank and codebook dimensions disagree".into(),
        ));
    }
    let mut scores = Vec::new();
    let mut decisions = Vec::new();
    codebook.detect_all(bank, &mut scores, &mut decisions);
    Ok(decisions[l])
}

/// Detector families exposed by the link simulation. The `*Before` kinds
/// transmit the raw zero-phase waveform; the `*After` kinds transmit the
/// designed phases from a phase table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    CoherentBefore,
    NoncoherentBefore,
    NoncoherentAfter,
    JointMlAfter,
}

impl DetectorKind {
    pub fn needs_phase_table(&self) -> bool {
        matches!(self, DetectorKind::NoncoherentAfter | DetectorKind::JointMlAfter)
    }

    pub fn label(&self) -> &'static str {
        match self {
            DetectorKind::CoherentBefore => "coherent-before",
            DetectorKind::NoncoherentBefore => "noncoherent-before",
            DetectorKind::NoncoherentAfter => "noncoherent-after",
            DetectorKind::JointMlAfter => "joint-ml-after",
        }
    }
}

/// One SNR point of a symbol-error-rate curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SerPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub errors: u64,
    pub ser: f64,
    pub ci95: f64,
}

/// Symbol-error-rate estimates over an SNR grid.
#[derive(Debug, Clone)]
pub struct SerCurve {
    pub detector: DetectorKind,
    pub points: Vec<SerPoint>,
}

impl SerCurve {
    /// CSV rows: `snr_db,trials,errors,ser,ci95`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "snr_db,trials,errors,ser,ci95")?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_sig(p.snr_db),
                p.trials,
                p.errors,
                fmt_sig(p.ser),
                fmt_sig(p.ci95)
            )?;
        }
        Ok(())
    }
}

/// SNR (dB) at which the curve crosses `target`, by log-linear
/// interpolation between the bracketing grid points.
pub fn snr_at_ser(curve: &SerCurve, target: f64) -> Option<f64> {
    let pts = &curve.points;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.ser >= target && target >= b.ser && a.ser > 0.0 && b.ser > 0.0 && a.ser != b.ser {
            let t = (target.ln() - a.ser.ln()) / (b.ser.ln() - a.ser.ln());
            return Some(a.snr_db + t * (b.snr_db - a.snr_db));
        }
    }
    None
}

struct TrialSetup<'a> {
    spec: WaveformSpec,
    detector: DetectorKind,
    channel: ChannelModel,
    table: Option<&'a PhaseTable>,
    table_keys: Vec<u128>,
    codebook: Option<PhaseCodebook>,
}

/// Monte Carlo SER estimation.
///
/// Per trial: one channel realization (the coherence block is the whole
/// waveform), one uniformly drawn waveform, one correlator bank, `L` symbol
/// decisions. Trial `t` of SNR point `s` owns the substream
/// `(seed, (s, t))`, so curves are reproducible and scheduling-independent.
///
/// `NoncoherentAfter` draws the waveform uniformly from the phase table's
/// key set (detection is phase-invariant and per-symbol errors are
/// tone-symmetric, so a sampled table leaves the SER law unchanged);
/// `JointMlAfter` requires a table covering the whole family.
pub fn simulate_ser(
    spec: &WaveformSpec,
    detector: DetectorKind,
    channel: &ChannelModel,
    snr_grid_db: &[f64],
    trials: u64,
    seed: u64,
    phases: Option<&PhaseTable>,
) -> Result<SerCurve> {
    channel.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    if snr_grid_db.is_empty() {
        return Err(Error::InvalidParameter("empty SNR grid".into()));
    }
    let table = match (detector.needs_phase_table(), phases) {
        (true, None) => {
            return Err(Error::PhaseTable(format!(
                "{} needs a phase table",
                detector.label()
            )))
        }
        (true, Some(t)) => {
            t.check_dims(spec.num_subpulses, spec.mod_order)?;
            if t.is_empty() {
                return Err(Error::PhaseTable("phase table is empty".into()));
            }
            Some(t)
        }
        (false, _) => None,
    };
    let codebook = if detector == DetectorKind::JointMlAfter {
        Some(PhaseCodebook::from_table(spec, table.expect("checked"))?)
    } else {
        None
    };
    let setup = TrialSetup {
        spec: *spec,
        detector,
        channel: *channel,
        table,
        table_keys: table.map(|t| t.indices().collect()).unwrap_or_default(),
        codebook,
    };

    let mut points = Vec::with_capacity(snr_grid_db.len());
    for (s_idx, &snr_db) in snr_grid_db.iter().enumerate() {
        let n0 = noise_psd(spec, channel.num_rx_antennas(), snr_db);
        let snr_tag = rng::stream_id(rng::TAG_SER, s_idx as u64);
        let errors: u64 = exec::map_chunks(trials, 2048, |range| {
            let mut scores = Vec::new();
            let mut decisions = Vec::new();
            let mut errs = 0u64;
            for t in range {
                let mut rng = substream(seed, snr_tag, t);
                errs += run_trial(&setup, n0, &mut rng, &mut scores, &mut decisions);
            }
            errs
        })
        .into_iter()
        .sum();
        let symbols = trials * spec.num_subpulses as u64;
        let ser = errors as f64 / symbols as f64;
        points.push(SerPoint {
            snr_db,
            trials,
            errors,
            ser,
            ci95: 1.96 * (ser * (1.0 - ser) / symbols as f64).sqrt(),
        });
    }
    Ok(SerCurve { detector, points })
}

fn run_trial<R: Rng>(
    setup: &TrialSetup<'_>,
    n0: f64,
    rng: &mut R,
    scores: &mut Vec<f64>,
    decisions: &mut Vec<usize>,
) -> u64 {
    let spec = &setup.spec;
    let m = spec.mod_order;
    let h = draw_channel(&setup.channel, rng);
    let zero_phases = vec![0.0; spec.num_subpulses];
    let (digits, phases): (Vec<u32>, Vec<f64>) = match setup.detector {
        DetectorKind::CoherentBefore | DetectorKind::NoncoherentBefore => {
            let digits = (0..spec.num_subpulses)
                .map(|_| rng.gen_range(0..m as u32))
                .collect();
            (digits, zero_phases)
        }
        DetectorKind::NoncoherentAfter => {
            let pos = rng.gen_range(0..setup.table_keys.len());
            let index = setup.table_keys[pos];
            let digits = spec.freq_sequence_from_index(index).expect("table key valid");
            let phases = setup.table.expect("table").get(index).expect("key").to_vec();
            (digits, phases)
        }
        DetectorKind::JointMlAfter => {
            let count = setup.codebook.as_ref().expect("codebook").len();
            let index = rng.gen_range(0..count as u64) as u128;
            let digits = spec.freq_sequence_from_index(index).expect("in family");
            let phases = setup
                .table
                .expect("table")
                .get(index)
                .expect("family covered")
                .to_vec();
            (digits, phases)
        }
    };
    let bank = CorrelatorBank::simulate(&digits, &phases, m, &h, n0, rng);
    let mut errors = 0u64;
    match setup.detector {
        DetectorKind::CoherentBefore => {
            for (l, &d) in digits.iter().enumerate() {
                errors += (detect_coherent(&bank, l) != d as usize) as u64;
            }
        }
        DetectorKind::NoncoherentBefore | DetectorKind::NoncoherentAfter => {
            for (l, &d) in digits.iter().enumerate() {
                errors += (detect_noncoherent(&bank, l) != d as usize) as u64;
            }
        }
        DetectorKind::JointMlAfter => {
            let codebook = setup.codebook.as_ref().expect("codebook");
            codebook.detect_all(&bank, scores, decisions);
            for (l, &d) in digits.iter().enumerate() {
                errors += (decisions[l] != d as usize) as u64;
            }
        }
    }
    errors
}

/// Non-coherent error counts with and without designed phases under
/// rotation-coupled noise.
///
/// Both runs share one base noise draw per trial; the phased run rotates
/// every correlator of column `l` by `e^{jθ_l}`, which leaves the noise law
/// unchanged and makes the two banks differ by a per-column unit rotation.
/// Magnitudes therefore agree sample by sample and the two error counts are
/// identical; the returned pair makes that equality observable.
pub fn noncoherent_coupled_error_counts(
    spec: &WaveformSpec,
    table: &PhaseTable,
    channel: &ChannelModel,
    snr_db: f64,
    trials: u64,
    seed: u64,
) -> Result<(u64, u64)> {
    channel.validate()?;
    table.check_dims(spec.num_subpulses, spec.mod_order)?;
    if table.is_empty() {
        return Err(Error::PhaseTable("phase table is empty".into()));
    }
    let keys: Vec<u128> = table.indices().collect();
    let n0 = noise_psd(spec, channel.num_rx_antennas(), snr_db);
    let m = spec.mod_order;
    let totals = exec::map_chunks(trials, 2048, |range| {
        let mut zero_errs = 0u64;
        let mut phased_errs = 0u64;
        for t in range {
            let mut rng = substream(seed, rng::TAG_SER, t);
            let h = draw_channel(channel, &mut rng);
            let pos = rng.gen_range(0..keys.len());
            let index = keys[pos];
            let digits = spec.freq_sequence_from_index(index).expect("table key valid");
            let phases = table.get(index).expect("key").to_vec();
            let zeros = vec![0.0; spec.num_subpulses];
            let base = CorrelatorBank::simulate(&digits, &zeros, m, &h, n0, &mut rng);
            // phased bank: rotate means and noise together per column
            let mut phased = base.clone();
            phased.rotate_columns(&phases);
            for (l, &d) in digits.iter().enumerate() {
                zero_errs += (detect_noncoherent(&base, l) != d as usize) as u64;
                phased_errs += (detect_noncoherent(&phased, l) != d as usize) as u64;
            }
        }
        (zero_errs, phased_errs)
    });
    let mut zero = 0u64;
    let mut phased = 0u64;
    for (z, p) in totals {
        zero += z;
        phased += p;
    }
    Ok((zero, phased))
}
