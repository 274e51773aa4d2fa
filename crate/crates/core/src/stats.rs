//! Probability laws of the lattice sidelobes and peak sidelobe level.
//!
//! Under uniform independent tone selection each sidelobe indicator
//! `X_{k,r}(l)` is Bernoulli with success probability `(M-|r|)/M²`, and the
//! scaled-binomial law
//!
//! ```text
//! P[Ã(k,r) = i/L] = C(L-k, i) p^i (1-p)^{L-k-i},   p = (M-|r|)/M²
//! ```
//!
//! models the sidelobe at each lattice point. The peak-sidelobe CDF is
//! approximated by the product of the per-point CDFs over the domain, as if
//! the sidelobes were independent. [`exhaustive_psl_cdf`] and
//! [`monte_carlo_psl_cdf`] provide the exact and sampled reference laws, and
//! [`wasserstein1`] the distance used to compare them.
//!
//! Caveat observed by the exhaustive oracle: the indicators along one lag
//! chain are pairwise dependent for `r ≠ 0` (two adjacent indicators cannot
//! both fire when they pin the shared tone to two different values), so the
//! scaled-binomial law is exact only for `r = 0` or `k = L-1`. See the test
//! suite for the smallest counterexample.

use std::io::Write;

use serde::Serialize;

use crate::ambiguity::{fmt_sig, GridPoint};
use crate::error::{Error, Result};
use crate::exec;
use crate::optimizer::{optimize_phases, OptimizerConfig, PhaseTable};
use crate::rng::{self, substream};
use crate::waveform::{FskWaveform, WaveformSpec};

/// Default enumeration budget for exhaustive oracles (`M^L` waveforms).
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1 << 24;

/// A distribution with finite support, stored through its CDF.
///
/// Lattice-valued laws (sidelobe levels, zero-phase peak sidelobes) build
/// their support as exact ratios `i/L`, so equal values collide exactly and
/// supports from different constructions line up bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<f64>,
    cdf: Vec<f64>,
    samples: Option<u64>,
}

impl DiscreteDistribution {
    /// Build from support points and probability masses.
    pub fn from_pmf(support: Vec<f64>, pmf: Vec<f64>) -> Result<Self> {
        if support.len() != pmf.len() || support.is_empty() {
            return Err(Error::InvalidDistribution(
                "support and pmf must be non-empty and equal length".into(),
            ));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDistribution(
                "support must be strictly increasing".into(),
            ));
        }
        if pmf.iter().any(|&p| !(-1e-15..=1.0 + 1e-12).contains(&p)) {
            return Err(Error::InvalidDistribution("masses outside [0, 1]".into()));
        }
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in &pmf {
            acc += p.max(0.0);
            cdf.push(acc);
        }
        let total = *cdf.last().unwrap();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {total}, not 1"
            )));
        }
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Self {
            support,
            cdf,
            samples: None,
        })
    }

    /// Build a lattice law from masses on `{0/denom, …, n/denom}`.
    pub fn from_lattice_pmf(denom: usize, pmf: Vec<f64>) -> Result<Self> {
        let support = (0..pmf.len()).map(|i| i as f64 / denom as f64).collect();
        Self::from_pmf(support, pmf)
    }

    /// Build a lattice law from integer counts on `{0/denom, …}`.
    pub fn from_lattice_counts(denom: usize, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("no observations".into()));
        }
        let pmf = counts.iter().map(|&c| c as f64 / total as f64).collect();
        let mut dist = Self::from_lattice_pmf(denom, pmf)?;
        dist.samples = Some(total);
        Ok(dist)
    }

    /// Empirical law of a batch of observed values.
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("no samples"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not be NaN"));
        let n = sorted.len() as f64;
        let mut support = Vec::new();
        let mut cdf = Vec::new();
        let mut seen = 0usize;
        let mut idx = 0usize;
        while idx < sorted.len() {
            let v = sorted[idx];
            while idx < sorted.len() && sorted[idx] == v {
                idx += 1;
            }
            seen = idx;
            support.push(v);
            cdf.push(seen as f64 / n);
        }
        debug_assert_eq!(seen, sorted.len());
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Self {
            support,
            cdf,
            samples: Some(values.len() as u64),
        })
    }

    /// Build directly from cumulative values.
    pub fn from_cdf(support: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        if support.len() != cdf.len() || support.is_empty() {
            return Err(Error::InvalidDistribution(
                "support and cdf must be non-empty and equal length".into(),
            ));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDistribution(
                "support must be strictly increasing".into(),
            ));
        }
        if cdf.windows(2).any(|w| w[0] > w[1] + 1e-15) {
            return Err(Error::InvalidDistribution("cdf must be nondecreasing".into()));
        }
        if (cdf.last().unwrap() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "cdf ends at {}, not 1",
                cdf.last().unwrap()
            )));
        }
        let mut cdf = cdf;
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Self {
            support,
            cdf,
            samples: None,
        })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Probability masses, recovered from the CDF steps.
    pub fn pmf(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cdf.len());
        let mut prev = 0.0;
        for &c in &self.cdf {
            out.push(c - prev);
            prev = c;
        }
        out
    }

    /// Number of underlying observations for empirical laws.
    pub fn sample_count(&self) -> Option<u64> {
        self.samples
    }

    /// Right-continuous CDF evaluation at `x`.
    pub fn cdf_at(&self, x: f64) -> f64 {
        match self.support.partition_point(|&s| s <= x) {
            0 => 0.0,
            i => self.cdf[i - 1],
        }
    }

    /// Smallest support point with CDF ≥ `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < q);
        self.support[i.min(self.support.len() - 1)]
    }

    /// Mean of the law.
    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(self.pmf())
            .map(|(&x, p)| x * p)
            .sum()
    }

    /// CSV export: `value,probability` (PMF) or `value,cdf`.
    pub fn write_csv<W: Write>(&self, mut w: W, as_cdf: bool) -> std::io::Result<()> {
        if as_cdf {
            writeln!(w, "value,cdf")?;
            for (x, c) in self.support.iter().zip(&self.cdf) {
                writeln!(w, "{},{}", fmt_sig(*x), fmt_sig(*c))?;
            }
        } else {
            writeln!(w, "value,probability")?;
            for (x, p) in self.support.iter().zip(self.pmf()) {
                writeln!(w, "{},{}", fmt_sig(*x), fmt_sig(p))?;
            }
        }
        Ok(())
    }
}

fn validate_point(l: usize, m: usize, k: usize, r: i32) -> Result<()> {
    if k == 0 || !GridPoint::new(k, r).in_domain(l, m) {
        return Err(Error::PointOutsideDomain { k, r });
    }
    Ok(())
}

/// Bernoulli success probability of a sidelobe indicator: `(M-|r|)/M²`.
pub fn indicator_probability(m: usize, r: i32) -> f64 {
    (m as f64 - r.unsigned_abs() as f64) / (m as f64 * m as f64)
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    // multiplicative recurrence, stable for the probabilities involved here
    let q = 1.0 - p;
    let mut out = Vec::with_capacity(n + 1);
    let mut cur = q.powi(n as i32);
    for i in 0..=n {
        out.push(cur);
        if i < n {
            cur = cur * (n - i) as f64 / (i + 1) as f64 * (p / q);
        }
    }
    out
}

fn binomial_cdf_at(n: usize, p: f64, j: i64) -> f64 {
    if j < 0 {
        return 0.0;
    }
    if j as usize >= n {
        return 1.0;
    }
    binomial_pmf(n, p)[..=(j as usize)].iter().sum()
}

/// Scaled-binomial law of the sidelobe at `(k, r)`: support `{i/L}`,
/// `i ∈ 0..=L-k`.
pub fn sl_pmf(l: usize, m: usize, k: usize, r: i32) -> Result<DiscreteDistribution> {
    validate_point(l, m, k, r)?;
    let pmf = binomial_pmf(l - k, indicator_probability(m, r));
    DiscreteDistribution::from_lattice_pmf(l, pmf)
}

/// Exact numerators of the scaled-binomial masses over the common
/// denominator `M^(2(L-k))`, for rational comparison against enumeration.
pub fn sl_pmf_exact(l: usize, m: usize, k: usize, r: i32) -> Result<(Vec<u128>, u128)> {
    validate_point(l, m, k, r)?;
    let n = l - k;
    let m = m as u128;
    let a = m - r.unsigned_abs() as u128; // success numerator over M²
    let b = m * m - a; // failure numerator
    let denom = (m * m).pow(n as u32);
    let mut numerators = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut num: u128 = binomial_coeff(n, i);
        for _ in 0..i {
            num *= a;
        }
        for _ in 0..(n - i) {
            num *= b;
        }
        numerators.push(num);
    }
    Ok((numerators, denom))
}

fn binomial_coeff(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut num: u128 = 1;
    for i in 0..k {
        num = num * (n - i) as u128 / (i + 1) as u128;
    }
    num
}

/// Treatment of the `k = 0, r ≠ 0` lattice points in the peak-sidelobe CDF
/// approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum K0Mode {
    /// Those sidelobes are structurally zero (a tone never differs from
    /// itself); they contribute nothing. The mathematically exact choice.
    PointMass,
    /// Apply the scaled-binomial model with `n = L` on the half axis
    /// `r > 0` only, the fundamental domain of the AF symmetry. Closest to
    /// the published distance tables.
    HalfAxisBinomial,
    /// Apply the scaled-binomial model with `n = L` on both half axes.
    FullAxisBinomial,
}

impl K0Mode {
    pub const ALL: [K0Mode; 3] = [
        K0Mode::PointMass,
        K0Mode::HalfAxisBinomial,
        K0Mode::FullAxisBinomial,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            K0Mode::PointMass => "point-mass",
            K0Mode::HalfAxisBinomial => "half-axis-binomial",
            K0Mode::FullAxisBinomial => "full-axis-binomial",
        }
    }
}

/// Independence-based approximation of the peak-sidelobe CDF: the product of
/// the per-point sidelobe CDFs over the domain, on support `{i/L}`,
/// `i ∈ 0..=L`.
pub fn approx_psl_cdf(l: usize, m: usize, k0: K0Mode) -> Result<DiscreteDistribution> {
    if l < 2 {
        return Err(Error::InvalidParameter(
            "peak-sidelobe approximation needs at least two sub-pulses".into(),
        ));
    }
    // per-(k, r) binomial CDF tables, reused across the support sweep
    let mut cdf = Vec::with_capacity(l + 1);
    for i in 0..=l as i64 {
        let mut f = 1.0;
        for k in 1..l {
            for r in -(m as i32 - 1)..=(m as i32 - 1) {
                f *= binomial_cdf_at(l - k, indicator_probability(m, r), i);
            }
        }
        match k0 {
            K0Mode::PointMass => {}
            K0Mode::HalfAxisBinomial => {
                for r in 1..m as i32 {
                    f *= binomial_cdf_at(l, indicator_probability(m, r), i);
                }
            }
            K0Mode::FullAxisBinomial => {
                for r in 1..m as i32 {
                    let c = binomial_cdf_at(l, indicator_probability(m, r), i);
                    f *= c * c;
                }
            }
        }
        cdf.push(f);
    }
    let support = (0..=l).map(|i| i as f64 / l as f64).collect();
    DiscreteDistribution::from_cdf(support, cdf)
}

/// Largest lattice coincidence count of a frequency sequence (PSL is this
/// over `L`). Zero-phase fast path used by the enumeration oracles.
fn max_coincidence_count(freq: &[u32], scratch: &mut [u32]) -> u32 {
    let l = freq.len();
    let m1 = (scratch.len() - 1) / 2; // M-1
    let mut best = 0u32;
    for k in 1..l {
        scratch.fill(0);
        for lpos in k..l {
            let r = freq[lpos - k] as i32 - freq[lpos] as i32;
            let slot = (r + m1 as i32) as usize;
            scratch[slot] += 1;
            best = best.max(scratch[slot]);
        }
        if best as usize >= l - k - 1 {
            break; // longer lags have at most l-k-1 coincidences
        }
    }
    best
}

fn decode_digits(mut index: u128, m: u128, out: &mut [u32]) {
    for d in out.iter_mut().rev() {
        *d = (index % m) as u32;
        index /= m;
    }
}

/// Exact peak-sidelobe CDF over every waveform of the `(L, M)` family.
///
/// With a phase table the per-waveform phases are applied before measuring
/// the PSL (post-suppression law); the table must cover the whole family.
pub fn exhaustive_psl_cdf(
    l: usize,
    m: usize,
    phases: Option<&PhaseTable>,
    budget: u128,
) -> Result<DiscreteDistribution> {
    let spec = WaveformSpec::new(l, m, 1.0, 1)?;
    let count = spec.family_size().ok_or(Error::EnumerationBudget {
        required: u128::MAX,
        budget,
    })?;
    if count > budget {
        return Err(Error::EnumerationBudget {
            required: count,
            budget,
        });
    }
    if let Some(table) = phases {
        table.check_family(l, m)?;
        // continuous-valued PSLs
        let chunks = exec::map_chunks(count as u64, 4096, |range| {
            let mut digits = vec![0u32; l];
            let mut out = Vec::with_capacity((range.end - range.start) as usize);
            for idx in range {
                decode_digits(idx as u128, m as u128, &mut digits);
                let phase = table.get(idx as u128).expect("checked complete");
                let wf = FskWaveform::new(spec, digits.clone(), phase.to_vec())
                    .expect("valid enumeration");
                out.push(wf.grid_psl());
            }
            out
        });
        let values: Vec<f64> = chunks.into_iter().flatten().collect();
        DiscreteDistribution::from_samples(&values)
    } else {
        // zero phases: PSL is an exact lattice value i/L
        let chunks = exec::map_chunks(count as u64, 8192, |range| {
            let mut digits = vec![0u32; l];
            let mut scratch = vec![0u32; 2 * m - 1];
            let mut tally = vec![0u64; l + 1];
            for idx in range {
                decode_digits(idx as u128, m as u128, &mut digits);
                tally[max_coincidence_count(&digits, &mut scratch) as usize] += 1;
            }
            tally
        });
        let mut tally = vec![0u64; l + 1];
        for part in chunks {
            for (t, p) in tally.iter_mut().zip(part) {
                *t += p;
            }
        }
        DiscreteDistribution::from_lattice_counts(l, &tally)
    }
}

/// Empirical peak-sidelobe CDF over `n` uniformly drawn waveforms.
///
/// Each sample owns the substream `(seed, sample index)`, so the law is
/// reproducible and independent of scheduling. With an optimizer
/// configuration the drawn waveform is phase-optimized first
/// (post-suppression law at family sizes where enumeration is hopeless).
pub fn monte_carlo_psl_cdf(
    l: usize,
    m: usize,
    n: u64,
    seed: u64,
    optimize: Option<&OptimizerConfig>,
) -> Result<DiscreteDistribution> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let spec = WaveformSpec::new(l, m, 1.0, 1)?;
    if let Some(config) = optimize {
        let values = exec::map_indices(n as usize, |i| {
            let mut rng = substream(seed, rng::TAG_PSL_MC, i as u64);
            let wf = FskWaveform::random(spec, &mut rng);
            let mut item = config.clone();
            item.seed = rng::stream_id(seed ^ config.seed, i as u64);
            optimize_phases(&wf, &item)
                .expect("optimizer accepts any valid waveform")
                .achieved_psl
        });
        DiscreteDistribution::from_samples(&values)
    } else {
        let chunks = exec::map_chunks(n, 2048, |range| {
            let mut scratch = vec![0u32; 2 * m - 1];
            let mut tally = vec![0u64; l + 1];
            for i in range {
                let mut rng = substream(seed, rng::TAG_PSL_MC, i);
                let wf = FskWaveform::random(spec, &mut rng);
                tally[max_coincidence_count(wf.freq_indices(), &mut scratch) as usize] += 1;
            }
            tally
        });
        let mut tally = vec![0u64; l + 1];
        for part in chunks {
            for (t, p) in tally.iter_mut().zip(part) {
                *t += p;
            }
        }
        DiscreteDistribution::from_lattice_counts(l, &tally)
    }
}

/// Grid PSL values for a list of sampled waveforms (shared stream with
/// [`monte_carlo_psl_cdf`], so coupled comparisons use the same ensembles).
pub fn sample_waveforms(l: usize, m: usize, n: u64, seed: u64) -> Vec<FskWaveform> {
    let spec = WaveformSpec::new(l, m, 1.0, 1).expect("valid spec");
    exec::map_indices(n as usize, |i| {
        let mut rng = substream(seed, rng::TAG_PSL_MC, i as u64);
        FskWaveform::random(spec, &mut rng)
    })
}

/// Printed closed-form correlation between two lattice sidelobes: zero for
/// different delays, `-(M-|r|)/(M²-(M-|r|))` for equal delay and different
/// Doppler.
pub fn sl_correlation_printed(
    l: usize,
    m: usize,
    k: usize,
    r: i32,
    k2: usize,
    r2: i32,
) -> Result<f64> {
    validate_point(l, m, k, r)?;
    validate_point(l, m, k2, r2)?;
    if (k, r) == (k2, r2) {
        return Err(Error::InvalidParameter(
            "correlation of a sidelobe with itself is 1; pick distinct points".into(),
        ));
    }
    if k != k2 {
        return Ok(0.0);
    }
    let a = (m - r.unsigned_abs() as usize) as f64;
    Ok(-a / ((m * m) as f64 - a))
}

/// Symmetric covariance-based variant of the same correlation,
/// `-sqrt(p p' / ((1-p)(1-p')))`, which the Monte Carlo estimator tracks.
pub fn sl_correlation_symmetric(
    l: usize,
    m: usize,
    k: usize,
    r: i32,
    k2: usize,
    r2: i32,
) -> Result<f64> {
    validate_point(l, m, k, r)?;
    validate_point(l, m, k2, r2)?;
    if (k, r) == (k2, r2) {
        return Err(Error::InvalidParameter(
            "correlation of a sidelobe with itself is 1; pick distinct points".into(),
        ));
    }
    if k != k2 {
        return Ok(0.0);
    }
    let p = indicator_probability(m, r);
    let p2 = indicator_probability(m, r2);
    Ok(-(p * p2 / ((1.0 - p) * (1.0 - p2))).sqrt())
}

/// Monte Carlo comparison of a sidelobe-pair correlation against the printed
/// closed form.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub point_a: (usize, i32),
    pub point_b: (usize, i32),
    pub printed_formula_value: f64,
    pub empirical_value: f64,
    pub standard_error: f64,
    pub samples: u64,
}

/// Pearson correlation of `(Ã(k,r), Ã(k',r'))` over i.i.d. uniform frequency
/// sequences. Passing the same point twice is the self-correlation
/// diagnostic and returns 1 up to rounding.
pub fn sl_correlation_empirical(
    l: usize,
    m: usize,
    k: usize,
    r: i32,
    k2: usize,
    r2: i32,
    samples: u64,
    seed: u64,
) -> Result<CorrelationReport> {
    validate_point(l, m, k, r)?;
    validate_point(l, m, k2, r2)?;
    if samples < 10_000 {
        return Err(Error::InvalidParameter(
            "need at least 10^4 samples for a stable correlation estimate".into(),
        ));
    }
    let spec = WaveformSpec::new(l, m, 1.0, 1)?;
    let pa = GridPoint::new(k, r);
    let pb = GridPoint::new(k2, r2);
    let sums = exec::map_chunks(samples, 4096, |range| {
        let mut acc = [0.0f64; 5]; // Σx, Σy, Σx², Σy², Σxy
        for i in range {
            let mut rng = substream(seed, rng::TAG_CORR, i);
            let wf = FskWaveform::random(spec, &mut rng);
            let x = wf.grid_sidelobe(pa).expect("validated");
            let y = wf.grid_sidelobe(pb).expect("validated");
            acc[0] += x;
            acc[1] += y;
            acc[2] += x * x;
            acc[3] += y * y;
            acc[4] += x * y;
        }
        acc
    });
    let mut s = [0.0f64; 5];
    for part in sums {
        for (a, p) in s.iter_mut().zip(part) {
            *a += p;
        }
    }
    let n = samples as f64;
    let cov = s[4] / n - (s[0] / n) * (s[1] / n);
    let vx = s[2] / n - (s[0] / n) * (s[0] / n);
    let vy = s[3] / n - (s[1] / n) * (s[1] / n);
    let rho = if pa == pb { 1.0 } else { cov / (vx * vy).sqrt() };
    let printed = if pa == pb {
        1.0
    } else {
        sl_correlation_printed(l, m, k, r, k2, r2)?
    };
    Ok(CorrelationReport {
        point_a: (k, r),
        point_b: (k2, r2),
        printed_formula_value: printed,
        empirical_value: rho,
        standard_error: (1.0 - rho * rho).abs() / n.sqrt(),
        samples,
    })
}

/// Wasserstein-1 distance: the L1 area between two piecewise-constant CDFs,
/// summed over the merged breakpoints.
pub fn wasserstein1(f1: &DiscreteDistribution, f2: &DiscreteDistribution) -> Result<f64> {
    for f in [f1, f2] {
        if (f.cdf.last().unwrap() - 1.0).abs() > 1e-9 || f.cdf.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidDistribution(
                "wasserstein1 needs valid CDFs".into(),
            ));
        }
    }
    let mut merged: Vec<f64> = f1.support.iter().chain(&f2.support).copied().collect();
    merged.sort_by(|a, b| a.partial_cmp(b).unwrap());
    merged.dedup();
    let mut area = 0.0;
    for w in merged.windows(2) {
        area += (f1.cdf_at(w[0]) - f2.cdf_at(w[0])).abs() * (w[1] - w[0]);
    }
    Ok(area)
}

/// JSON report for a Wasserstein distance between two laws.
#[derive(Debug, Clone, Serialize)]
pub struct WassersteinReport {
    pub w1: f64,
    pub n1: u64,
    pub n2: u64,
}

impl WassersteinReport {
    pub fn new(f1: &DiscreteDistribution, f2: &DiscreteDistribution) -> Result<Self> {
        Ok(Self {
            w1: wasserstein1(f1, f2)?,
            n1: f1.sample_count().unwrap_or(f1.support.len() as u64),
            n2: f2.sample_count().unwrap_or(f2.support.len() as u64),
        })
    }
}

/// Horizontal (quantile) gap between two CDFs over a probability grid.
pub fn max_quantile_gap(f1: &DiscreteDistribution, f2: &DiscreteDistribution, steps: usize) -> f64 {
    (1..steps)
        .map(|i| {
            let q = i as f64 / steps as f64;
            (f1.quantile(q) - f2.quantile(q)).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_trial_sidelobe_law() {
        // one Bernoulli trial at k = L-1: P(0) = 3/4, P(1/4) = 1/4
        let d = sl_pmf(4, 2, 3, 1).unwrap();
        assert_eq!(d.support(), &[0.0, 0.25]);
        let pmf = d.pmf();
        assert!((pmf[0] - 0.75).abs() < 1e-15);
        assert!((pmf[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sidelobe_pmf_sums_to_one() {
        for (l, m) in [(4usize, 2usize), (6, 3), (8, 4), (12, 8)] {
            for k in 1..l {
                for r in -(m as i32 - 1)..=(m as i32 - 1) {
                    let total: f64 = sl_pmf(l, m, k, r).unwrap().pmf().iter().sum();
                    assert!((total - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sidelobe_pmf_rejects_bad_points() {
        assert!(sl_pmf(4, 2, 0, 1).is_err());
        assert!(sl_pmf(4, 2, 4, 0).is_err());
        assert!(sl_pmf(4, 2, 1, 2).is_err());
    }

    #[test]
    fn r0_sidelobe_law_matches_enumeration_exactly() {
        // exhaustive tally over all 16 waveforms of (L=4, M=2) at (k=1, r=0)
        let spec = WaveformSpec::new(4, 2, 1.0, 1).unwrap();
        let mut counts = vec![0u64; 4];
        for idx in 0..16u128 {
            let wf = FskWaveform::from_index(spec, idx).unwrap();
            let v = wf.grid_sidelobe(GridPoint::new(1, 0)).unwrap();
            counts[(v * 4.0).round() as usize] += 1;
        }
        let (nums, denom) = sl_pmf_exact(4, 2, 1, 0).unwrap();
        for (i, &c) in counts.iter().enumerate() {
            // c / 16 == nums[i] / denom, cross-multiplied
            assert_eq!(c as u128 * denom, nums[i] * 16);
        }
        // and the f64 law agrees with the exact one
        let pmf = sl_pmf(4, 2, 1, 0).unwrap().pmf();
        for (i, &numer) in nums.iter().enumerate() {
            assert!((pmf[i] - numer as f64 / denom as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn binomial_law_is_inexact_for_offset_doppler() {
        // smallest counterexample: (L=3, M=2, k=1, r=1). Two chained
        // indicators would pin the middle tone to both values at once, so
        // the top mass is zero while the binomial model gives 1/16.
        let spec = WaveformSpec::new(3, 2, 1.0, 1).unwrap();
        let mut counts = vec![0u64; 3];
        for idx in 0..8u128 {
            let wf = FskWaveform::from_index(spec, idx).unwrap();
            let v = wf.grid_sidelobe(GridPoint::new(1, 1)).unwrap();
            counts[(v * 3.0).round() as usize] += 1;
        }
        assert_eq!(counts, vec![4, 4, 0]);
        let model = sl_pmf(3, 2, 1, 1).unwrap().pmf();
        assert!((model[2] - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn sidelobe_means_decrease_away_from_origin() {
        let (l, m) = (8usize, 4usize);
        for r in 0..m as i32 {
            let means: Vec<f64> = (1..l).map(|k| sl_pmf(l, m, k, r).unwrap().mean()).collect();
            assert!(means.windows(2).all(|w| w[0] > w[1]));
        }
        for k in 1..l {
            let means: Vec<f64> = (0..m as i32)
                .map(|r| sl_pmf(l, m, k, r).unwrap().mean())
                .collect();
            assert!(means.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn approx_cdf_shape() {
        for mode in K0Mode::ALL {
            let d = approx_psl_cdf(6, 3, mode).unwrap();
            assert_eq!(d.support().len(), 7);
            assert!(d.cdf().windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(*d.cdf().last().unwrap(), 1.0);
            // PSL never exceeds (L-1)/L, so the point-mass mode saturates there
            if mode == K0Mode::PointMass {
                assert!((d.cdf_at(5.0 / 6.0) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exhaustive_l2_m2_is_point_mass_at_half() {
        let d = exhaustive_psl_cdf(2, 2, None, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert_eq!(d.cdf_at(0.49), 0.0);
        assert_eq!(d.cdf_at(0.5), 1.0);
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        assert!(matches!(
            exhaustive_psl_cdf(30, 4, None, 1 << 20),
            Err(Error::EnumerationBudget { .. })
        ));
    }

    #[test]
    fn monte_carlo_is_deterministic_and_converges() {
        let a = monte_carlo_psl_cdf(4, 4, 20_000, 9, None).unwrap();
        let b = monte_carlo_psl_cdf(4, 4, 20_000, 9, None).unwrap();
        assert_eq!(a, b);
        let exact = exhaustive_psl_cdf(4, 4, None, DEFAULT_ENUMERATION_BUDGET).unwrap();
        let w = wasserstein1(&a, &exact).unwrap();
        assert!(w < 0.01, "w1 = {w}");
    }

    #[test]
    fn printed_correlation_values() {
        assert_eq!(sl_correlation_printed(8, 4, 1, 0, 2, 1).unwrap(), 0.0);
        assert!((sl_correlation_printed(4, 2, 1, 0, 1, 1).unwrap() + 1.0).abs() < 1e-15);
        assert!((sl_correlation_printed(8, 4, 1, 0, 1, 2).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        assert!(sl_correlation_printed(8, 4, 1, 1, 1, 1).is_err());
    }

    #[test]
    fn empirical_correlation_tracks_symmetric_form() {
        let rep = sl_correlation_empirical(8, 4, 1, 0, 1, 1, 100_000, 5).unwrap();
        let sym = sl_correlation_symmetric(8, 4, 1, 0, 1, 1).unwrap();
        assert!(
            (rep.empirical_value - sym).abs() < 3.0 * rep.standard_error,
            "empirical {} vs symmetric {} (se {})",
            rep.empirical_value,
            sym,
            rep.standard_error
        );
        // and visibly diverges from the printed non-symmetric value
        assert!((rep.empirical_value - rep.printed_formula_value).abs() > 10.0 * rep.standard_error);
    }

    #[test]
    fn cross_delay_correlation_vanishes() {
        let rep = sl_correlation_empirical(8, 4, 1, 0, 2, 1, 20_000, 6).unwrap();
        assert_eq!(rep.printed_formula_value, 0.0);
        assert!(rep.empirical_value.abs() < 3.0 * rep.standard_error.max(1.0 / 20_000f64.sqrt()));
    }

    #[test]
    fn self_correlation_diagnostic() {
        let rep = sl_correlation_empirical(6, 3, 2, 1, 2, 1, 10_000, 7).unwrap();
        assert_eq!(rep.empirical_value, 1.0);
    }

    #[test]
    fn wasserstein_point_masses() {
        let at = |x: f64| DiscreteDistribution::from_pmf(vec![x], vec![1.0]).unwrap();
        assert_eq!(wasserstein1(&at(0.0), &at(0.0)).unwrap(), 0.0);
        assert!((wasserstein1(&at(0.0), &at(1.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((wasserstein1(&at(0.25), &at(0.75)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn wasserstein_rejects_non_cdf() {
        let good = DiscreteDistribution::from_pmf(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let mut bad = good.clone();
        bad.cdf[1] = 0.7;
        assert!(wasserstein1(&good, &bad).is_err());
    }

    proptest! {
        #[test]
        fn wasserstein_metric_properties(
            raw1 in proptest::collection::vec(0.01f64..1.0, 3..6),
            raw2 in proptest::collection::vec(0.01f64..1.0, 3..6),
            raw3 in proptest::collection::vec(0.01f64..1.0, 3..6),
        ) {
            let build = |raw: &[f64]| {
                let total: f64 = raw.iter().sum();
                let pmf: Vec<f64> = raw.iter().map(|x| x / total).collect();
                let support: Vec<f64> = (0..raw.len()).map(|i| i as f64 * 0.37 + 0.1).collect();
                DiscreteDistribution::from_pmf(support, pmf).unwrap()
            };
            let (a, b, c) = (build(&raw1), build(&raw2), build(&raw3));
            let ab = wasserstein1(&a, &b).unwrap();
            let ba = wasserstein1(&b, &a).unwrap();
            let ac = wasserstein1(&a, &c).unwrap();
            let cb = wasserstein1(&c, &b).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab <= ac + cb + 1e-12);
        }
    }
}
