//! Ambiguity function of FSK pulse trains and its delay–Doppler lattice.
//!
//! The complex ambiguity function of a unit-energy waveform `s` is
//!
//! ```text
//! Â(τ, ω) = ∫ s(t) s*(t - τ) e^{-jωt} dt,      A(τ, ω) = |Â(τ, ω)|
//! ```
//!
//! For the rectangular-pulse FSK train the integral splits into a double sum
//! of shifted single-pulse ambiguities, which this module evaluates in closed
//! form. On the lattice `τ = kT`, `ω = 2πrΔf` the sidelobes collapse to the
//! simple counting form
//!
//! ```text
//! Ã(k, r) = |Σ_{l=k}^{L-1} X_{k,r}(l) e^{j(θ_l - θ_{l-k})}| / L,
//! X_{k,r}(l) = 1  iff  f[l-k] - f[l] = r,
//! ```
//!
//! evaluated over the half-plane domain `𝒟 = {0 ≤ k < L, |r| ≤ M-1} \ {(0,0)}`.
//! Note the lattice convention mirrors Doppler relative to the integral
//! above: `Ã(k, r) = A(kT, -2πrΔf) = A(-kT, 2πrΔf)`. Peak sidelobe levels and
//! all sidelobe statistics are invariant under that mirror.
//!
//! [`sampled_af_surface`] rasterizes `A` on a lattice-aligned grid (exact
//! integer phase reduction keeps it cheap and bit-stable), and
//! [`AfSurface::local_maxima_psl`] extracts the peak sidelobe over local
//! maxima outside the mainlobe cell `|τ| < T ∧ |ω| < 2πΔf`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec;
use crate::waveform::{FskWaveform, WaveformSpec};

/// Relative Doppler threshold below which the removable `ω → 0` limit of the
/// pulse ambiguity is used.
const OMEGA_EPS: f64 = 1e-8;

/// Complex ambiguity of the unit rectangular pulse on `[0, T]`.
///
/// Zero for `|τ| ≥ T`; at `|ω|T` below 1e-8 the analytic limit `T - |τ|`
/// replaces the 0/0 expression.
pub fn pulse_caf(tau: f64, omega: f64, t: f64) -> Complex64 {
    if tau.abs() >= t {
        return Complex64::new(0.0, 0.0);
    }
    if (omega * t).abs() < OMEGA_EPS {
        return Complex64::new(t - tau.abs(), 0.0);
    }
    let jw = Complex64::new(0.0, omega);
    if tau >= 0.0 {
        (Complex64::from_polar(1.0, -omega * tau) - Complex64::from_polar(1.0, -omega * t)) / jw
    } else {
        (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -omega * (t + tau))) / jw
    }
}

impl FskWaveform {
    /// Closed-form complex ambiguity `Â(τ, ω)` of this waveform.
    pub fn complex_af(&self, tau: f64, omega: f64) -> Complex64 {
        let spec = self.spec();
        let l_count = spec.num_subpulses;
        let t = spec.subpulse_duration;
        let phases = self.phases();
        // only pulse pairs with |τ + (n-l)T| < T overlap
        let ratio = -tau / t;
        let d_lo = (ratio - 1.0).ceil() as i64;
        let d_hi = (ratio + 1.0).floor() as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for d in d_lo..=d_hi {
            let s = tau + d as f64 * t;
            if s.abs() >= t {
                continue;
            }
            let l_start = (-d).max(0);
            let l_end = (l_count as i64 - 1).min(l_count as i64 - 1 - d);
            if l_start > l_end {
                continue;
            }
            for l in l_start as usize..=l_end as usize {
                let n = (l as i64 + d) as usize;
                let wl = self.omega(l);
                let wn = self.omega(n);
                let pulse = pulse_caf(s, omega + wn - wl, t);
                if pulse.norm_sqr() == 0.0 {
                    continue;
                }
                let phase = wn * (d as f64 * t + tau) - omega * l as f64 * t + phases[l] - phases[n];
                acc += pulse * Complex64::from_polar(1.0, phase);
            }
        }
        acc / (l_count as f64 * t)
    }

    /// Ambiguity magnitude `A(τ, ω)`.
    pub fn af_magnitude(&self, tau: f64, omega: f64) -> f64 {
        self.complex_af(tau, omega).norm()
    }

    /// Zero-Doppler cut `A(τ, 0)` over the given delays.
    pub fn zero_doppler_cut(&self, taus: &[f64]) -> Vec<f64> {
        taus.iter().map(|&tau| self.af_magnitude(tau, 0.0)).collect()
    }
}

impl WaveformSpec {
    /// Zero-delay cut `A(0, ω)`; identical for every waveform of the family.
    pub fn zero_delay_cut(&self, omegas: &[f64]) -> Vec<f64> {
        let l_count = self.num_subpulses as f64;
        let t = self.subpulse_duration;
        omegas
            .iter()
            .map(|&omega| {
                let pulse = pulse_caf(0.0, omega, t);
                let comb: Complex64 = (0..self.num_subpulses)
                    .map(|l| Complex64::from_polar(1.0, -omega * l as f64 * t))
                    .sum();
                (pulse * comb).norm() / (l_count * t)
            })
            .collect()
    }
}

/// A point of the delay–Doppler lattice: delay `kT`, Doppler `2πrΔf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridPoint {
    pub k: usize,
    pub r: i32,
}

impl GridPoint {
    pub fn new(k: usize, r: i32) -> Self {
        Self { k, r }
    }

    /// Membership in the sidelobe domain `𝒟` for an `(L, M)` family.
    pub fn in_domain(&self, num_subpulses: usize, mod_order: usize) -> bool {
        self.k < num_subpulses
            && self.r.unsigned_abs() < mod_order as u32
            && !(self.k == 0 && self.r == 0)
    }
}

/// All of `𝒟` in `(k, r)` order; `L(2M-1) - 1` points.
pub fn domain(num_subpulses: usize, mod_order: usize) -> Vec<GridPoint> {
    let mut points = Vec::with_capacity(num_subpulses * (2 * mod_order - 1) - 1);
    for k in 0..num_subpulses {
        for r in -(mod_order as i32 - 1)..=(mod_order as i32 - 1) {
            if k == 0 && r == 0 {
                continue;
            }
            points.push(GridPoint::new(k, r));
        }
    }
    points
}

/// Non-empty sidelobe groups of a frequency sequence: for each `(k, r)` the
/// sub-pulse positions `l ≥ k` with `f[l-k] - f[l] = r`, in `(k, r)` order.
pub(crate) fn sidelobe_groups(freq: &[u32]) -> Vec<(usize, i32, Vec<usize>)> {
    let l_count = freq.len();
    let mut groups: BTreeMap<(usize, i32), Vec<usize>> = BTreeMap::new();
    for k in 1..l_count {
        for l in k..l_count {
            let r = freq[l - k] as i32 - freq[l] as i32;
            groups.entry((k, r)).or_default().push(l);
        }
    }
    groups
        .into_iter()
        .map(|((k, r), ls)| (k, r, ls))
        .collect()
}

/// Magnitude of one sidelobe group under the given phases.
///
/// A single contributing term is a unit phasor, whose magnitude is 1 exactly;
/// evaluating cos²+sin² would round it.
pub(crate) fn group_magnitude(members: &[usize], k: usize, phases: &[f64]) -> f64 {
    if members.len() == 1 {
        return 1.0;
    }
    let mut z = Complex64::new(0.0, 0.0);
    for &l in members {
        z += Complex64::from_polar(1.0, phases[l] - phases[l - k]);
    }
    z.norm()
}

impl FskWaveform {
    /// Lattice sidelobe `Ã(k, r)`; the origin returns 1.
    pub fn grid_sidelobe(&self, point: GridPoint) -> Result<f64> {
        let spec = self.spec();
        if point.k == 0 && point.r == 0 {
            return Ok(1.0);
        }
        if !point.in_domain(spec.num_subpulses, spec.mod_order) {
            return Err(Error::PointOutsideDomain {
                k: point.k,
                r: point.r,
            });
        }
        let freq = self.freq_indices();
        let members: Vec<usize> = (point.k..spec.num_subpulses)
            .filter(|&l| freq[l - point.k] as i32 - freq[l] as i32 == point.r)
            .collect();
        if members.is_empty() {
            return Ok(0.0);
        }
        Ok(group_magnitude(&members, point.k, self.phases()) / spec.num_subpulses as f64)
    }

    /// All lattice sidelobes over `𝒟`.
    pub fn grid_sidelobe_map(&self) -> GridSidelobeMap {
        let spec = self.spec();
        let mut values: BTreeMap<GridPoint, f64> = domain(spec.num_subpulses, spec.mod_order)
            .into_iter()
            .map(|p| (p, 0.0))
            .collect();
        let scale = spec.num_subpulses as f64;
        for (k, r, members) in sidelobe_groups(self.freq_indices()) {
            let value = group_magnitude(&members, k, self.phases()) / scale;
            values.insert(GridPoint::new(k, r), value);
        }
        GridSidelobeMap {
            num_subpulses: spec.num_subpulses,
            mod_order: spec.mod_order,
            values,
        }
    }

    /// Peak sidelobe level over the lattice domain.
    pub fn grid_psl(&self) -> f64 {
        let scale = self.spec().num_subpulses as f64;
        sidelobe_groups(self.freq_indices())
            .iter()
            .map(|(k, _, members)| group_magnitude(members, *k, self.phases()) / scale)
            .fold(0.0, f64::max)
    }
}

/// Sidelobe values over the lattice domain `𝒟`.
#[derive(Debug, Clone)]
pub struct GridSidelobeMap {
    num_subpulses: usize,
    mod_order: usize,
    values: BTreeMap<GridPoint, f64>,
}

impl GridSidelobeMap {
    pub fn value(&self, point: GridPoint) -> Option<f64> {
        self.values.get(&point).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (GridPoint, f64)> + '_ {
        self.values.iter().map(|(&p, &v)| (p, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_subpulses(&self) -> usize {
        self.num_subpulses
    }

    pub fn mod_order(&self) -> usize {
        self.mod_order
    }

    /// Maximum sidelobe of the map.
    pub fn psl(&self) -> f64 {
        self.values.values().fold(0.0f64, |a, &b| a.max(b))
    }
}

/// Sampled magnitude of the ambiguity surface.
///
/// Delay axis `[-LT, LT]` in steps of `T/oversampling`; Doppler axis
/// `±2πMΔf` in steps of `2πΔf/oversampling` (one step of margin beyond the
/// outermost lattice Doppler `±2π(M-1)Δf`). Rows index delay.
#[derive(Debug, Clone)]
pub struct AfSurface {
    pub delay_axis: Vec<f64>,
    pub doppler_axis: Vec<f64>,
    pub magnitude: Vec<Vec<f64>>,
    oversampling: u32,
    subpulse_duration: f64,
    freq_step: f64,
}

/// Rasterize the ambiguity surface of `waveform` at `oversampling` samples
/// per sub-pulse delay and per Doppler step.
///
/// Sample points are exact lattice fractions, so every phase in the closed
/// form is an integer multiple of `2π/V²` (`V` the oversampling); they are
/// reduced in integer arithmetic and read from one table of `V²` phasors.
/// The half-plane `τ ≥ 0` is evaluated and `A(-τ, -ω) = A(τ, ω)` fills the
/// rest.
pub fn sampled_af_surface(waveform: &FskWaveform, oversampling: u32) -> Result<AfSurface> {
    if oversampling < 4 {
        return Err(Error::SurfaceTooCoarse {
            got: oversampling,
            min: 4,
        });
    }
    let spec = *waveform.spec();
    let l_count = spec.num_subpulses;
    let m = spec.mod_order;
    let t = spec.subpulse_duration;
    let step_i = spec.freq_step_multiple;
    let v = oversampling as i64;
    let v2 = (v * v) as usize;

    let n_delay = (l_count as i64) * v; // p in [-n_delay, n_delay]
    let n_dopp = (m as i64) * v; // q in [-n_dopp, n_dopp]

    let delay_axis: Vec<f64> = (-n_delay..=n_delay).map(|p| p as f64 * t / v as f64).collect();
    let doppler_axis: Vec<f64> = (-n_dopp..=n_dopp)
        .map(|q| TAU * spec.freq_step() * q as f64 / v as f64)
        .collect();

    // e^{-j 2π k / V²} for k in 0..V²
    let cis_neg: Vec<Complex64> = (0..v2)
        .map(|k| Complex64::from_polar(1.0, -TAU * k as f64 / v2 as f64))
        .collect();
    let reduce = |k: i64| -> usize { k.rem_euclid((v2) as i64) as usize };

    let freq: Vec<i64> = waveform.freq_indices().iter().map(|&f| f as i64).collect();
    let phases = waveform.phases();
    let pair: Vec<Complex64> = (0..l_count * l_count)
        .map(|idx| Complex64::from_polar(1.0, phases[idx / l_count] - phases[idx % l_count]))
        .collect();
    let pair_phase = |l: usize, n: usize| -> Complex64 { pair[l * l_count + n] };

    let scale = 1.0 / (l_count as f64 * t);
    let rows_nonneg = exec::map_indices((n_delay + 1) as usize, |pi| {
        let p = pi as i64; // delay index ≥ 0
        let mut row = vec![0.0f64; (2 * n_dopp + 1) as usize];
        // overlapping diagonals d with |p + dV| < V
        let d_lo = -(p + v - 1).div_euclid(v);
        let d_hi = (v - 1 - p).div_euclid(v);
        for (qi, slot) in row.iter_mut().enumerate() {
            let q = qi as i64 - n_dopp;
            let mut acc = Complex64::new(0.0, 0.0);
            for d in d_lo..=d_hi {
                let ps = p + d * v;
                if ps.abs() >= v {
                    continue;
                }
                let l_start = (-d).max(0);
                let l_end = (l_count as i64 - 1).min(l_count as i64 - 1 - d);
                if l_start > l_end {
                    continue;
                }
                for l in l_start as usize..=l_end as usize {
                    let n = (l as i64 + d) as usize;
                    let u = q + v * (freq[n] - freq[l]);
                    // pulse ambiguity at (ps·T/V, 2π·i·u/(T·V))
                    let pulse = if step_i * u == 0 {
                        Complex64::new(t * (v - ps.abs()) as f64 / v as f64, 0.0)
                    } else {
                        let iu = step_i * u;
                        let (c1, c2) = if ps >= 0 {
                            (cis_neg[reduce(iu * ps)], cis_neg[reduce(iu * v)])
                        } else {
                            (Complex64::new(1.0, 0.0), cis_neg[reduce(iu * (v + ps))])
                        };
                        // divide by jΩ with Ω = 2π·i·u/(T·V)
                        let inv = t * v as f64 / (TAU * iu as f64);
                        Complex64::new(0.0, -inv) * (c1 - c2)
                    };
                    if pulse.norm_sqr() == 0.0 {
                        continue;
                    }
                    // e^{j(ω_n(dT+τ) - ω l T)} = e^{j 2π i (f_n (dV+p) - q l) / V · ...}
                    let outer = reduce(-(step_i * (freq[n] * (d * v + p) - q * l as i64)) * v);
                    acc += pulse * cis_neg[outer] * pair_phase(l, n);
                }
            }
            *slot = acc.norm() * scale;
        }
        row
    });

    let total_rows = (2 * n_delay + 1) as usize;
    let mut magnitude = vec![Vec::new(); total_rows];
    for (pi, row) in rows_nonneg.into_iter().enumerate() {
        let row_idx = n_delay as usize + pi;
        if pi > 0 {
            // A(-τ, -ω) = A(τ, ω)
            let mirrored: Vec<f64> = row.iter().rev().copied().collect();
            magnitude[n_delay as usize - pi] = mirrored;
        }
        magnitude[row_idx] = row;
    }

    Ok(AfSurface {
        delay_axis,
        doppler_axis,
        magnitude,
        oversampling,
        subpulse_duration: t,
        freq_step: spec.freq_step(),
    })
}

impl AfSurface {
    pub fn oversampling(&self) -> u32 {
        self.oversampling
    }

    /// Sample nearest to `(tau, omega)`.
    pub fn value_near(&self, tau: f64, omega: f64) -> f64 {
        let v = self.oversampling as f64;
        let pi = ((tau / self.subpulse_duration * v).round() as i64
            + (self.delay_axis.len() as i64 - 1) / 2)
            .clamp(0, self.delay_axis.len() as i64 - 1) as usize;
        let qi = ((omega / (TAU * self.freq_step) * v).round() as i64
            + (self.doppler_axis.len() as i64 - 1) / 2)
            .clamp(0, self.doppler_axis.len() as i64 - 1) as usize;
        self.magnitude[pi][qi]
    }

    /// Peak sidelobe over local maxima of the sampled surface.
    ///
    /// The open mainlobe cell `|τ| < T ∧ |ω| < 2πΔf` is carved out of the
    /// surface; a remaining sample qualifies when it is ≥ its remaining
    /// neighbours (plateaus count once through the max). Ignoring excluded
    /// neighbours keeps lag-one lattice sidelobes from being swallowed by
    /// the mainlobe skirt, so the result never falls below the lattice PSL.
    /// Needs `oversampling ≥ 8`.
    pub fn local_maxima_psl(&self) -> Result<f64> {
        if self.oversampling < 8 {
            return Err(Error::SurfaceTooCoarse {
                got: self.oversampling,
                min: 8,
            });
        }
        let v = self.oversampling as i64;
        let rows = self.magnitude.len() as i64;
        let cols = self.magnitude[0].len() as i64;
        let mid_p = (rows - 1) / 2;
        let mid_q = (cols - 1) / 2;
        let excluded = |pi: i64, qi: i64| (pi - mid_p).abs() < v && (qi - mid_q).abs() < v;
        let mut best = 0.0f64;
        for pi in 0..rows {
            for qi in 0..cols {
                if excluded(pi, qi) {
                    continue;
                }
                let value = self.magnitude[pi as usize][qi as usize];
                if value <= best {
                    continue;
                }
                let mut is_max = true;
                'neigh: for dp in -1..=1i64 {
                    for dq in -1..=1i64 {
                        if dp == 0 && dq == 0 {
                            continue;
                        }
                        let (np, nq) = (pi + dp, qi + dq);
                        if np < 0 || np >= rows || nq < 0 || nq >= cols || excluded(np, nq) {
                            continue;
                        }
                        if self.magnitude[np as usize][nq as usize] > value {
                            is_max = false;
                            break 'neigh;
                        }
                    }
                }
                if is_max {
                    best = value;
                }
            }
        }
        Ok(best)
    }

    /// CSV export with header `tau_seconds,omega_rad_per_s,magnitude`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "tau_seconds,omega_rad_per_s,magnitude")?;
        for (pi, tau) in self.delay_axis.iter().enumerate() {
            for (qi, omega) in self.doppler_axis.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{}",
                    fmt_sig(*tau),
                    fmt_sig(*omega),
                    fmt_sig(self.magnitude[pi][qi])
                )?;
            }
        }
        Ok(())
    }
}

/// Two-column CSV for AF cuts.
pub fn write_cut_csv<W: Write>(
    mut w: W,
    axis_name: &str,
    axis: &[f64],
    magnitude: &[f64],
) -> std::io::Result<()> {
    writeln!(w, "{axis_name},magnitude")?;
    for (x, y) in axis.iter().zip(magnitude) {
        writeln!(w, "{},{}", fmt_sig(*x), fmt_sig(*y))?;
    }
    Ok(())
}

/// 12-significant-digit float formatting used by all CSV output.
pub(crate) fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

/// Doppler of lattice index `r` for a spec: `2πrΔf`.
pub fn lattice_omega(spec: &WaveformSpec, r: i32) -> f64 {
    TAU * r as f64 * spec.freq_step()
}

/// Delay of lattice index `k`: `kT`.
pub fn lattice_tau(spec: &WaveformSpec, k: usize) -> f64 {
    k as f64 * spec.subpulse_duration
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::sample_envelope_default;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn spec(l: usize, m: usize) -> WaveformSpec {
        WaveformSpec::new(l, m, 1.0, 1).unwrap()
    }

    #[test]
    fn pulse_caf_limits() {
        let t = 0.7;
        assert!((pulse_caf(0.0, 0.0, t).re - t).abs() < 1e-12);
        // sub-pulse orthogonality at integer multiples of 2π/T
        for r in [-3i32, -1, 1, 2] {
            let w = TAU * r as f64 / t;
            assert!(pulse_caf(0.0, w, t).norm() < 1e-12);
        }
        assert!((pulse_caf(t / 2.0, 0.0, t).re - t / 2.0).abs() < 1e-12);
        assert_eq!(pulse_caf(t, 1.0, t), Complex64::new(0.0, 0.0));
        assert_eq!(pulse_caf(-1.5 * t, 1.0, t), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn pulse_caf_matches_integral_off_grid() {
        // direct Riemann check of the closed form at generic (τ, ω)
        let t = 1.0f64;
        for &(tau, omega) in &[(0.3f64, 2.1f64), (-0.45, 5.7), (0.8, -3.3), (-0.2, 0.9)] {
            let n = 400_000;
            let lo = tau.max(0.0);
            let hi = (t + tau).min(t);
            let mut acc = Complex64::new(0.0, 0.0);
            let h = (hi - lo) / n as f64;
            for j in 0..n {
                let x = lo + (j as f64 + 0.5) * h;
                acc += Complex64::from_polar(1.0, -omega * x) * h;
            }
            let closed = pulse_caf(tau, omega, t);
            assert!((closed - acc).norm() < 1e-8, "tau={tau} omega={omega}");
        }
    }

    #[test]
    fn complex_af_origin_and_decay() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let wf = FskWaveform::random(spec(6, 4), &mut rng);
        let origin = wf.complex_af(0.0, 0.0);
        assert!((origin - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(wf.complex_af(6.0, 1.3).norm(), 0.0);
        assert_eq!(wf.complex_af(-7.2, -0.3).norm(), 0.0);
    }

    #[test]
    fn complex_af_matches_hand_integral_l2() {
        // f = [0, 1]: the only overlap at τ = T is the cross term, giving
        // A(T, 2πΔf) = 1/2 and A(T, -2πΔf) = 0.
        let wf = FskWaveform::new(spec(2, 2), vec![0, 1], vec![0.0, 0.0]).unwrap();
        assert!((wf.af_magnitude(1.0, TAU) - 0.5).abs() < 1e-12);
        assert!(wf.af_magnitude(1.0, -TAU) < 1e-12);
    }

    #[test]
    fn af_symmetry_and_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = spec(5, 3);
        let mut wf = FskWaveform::random(s, &mut rng);
        let phases: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..TAU)).collect();
        wf = wf.with_phases(phases).unwrap();
        for _ in 0..100 {
            let tau = rng.gen_range(-5.0..5.0);
            let omega = rng.gen_range(-20.0..20.0);
            let a = wf.af_magnitude(tau, omega);
            let b = wf.af_magnitude(-tau, -omega);
            assert!((a - b).abs() < 1e-9);
            assert!(a <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn grid_sidelobe_examples() {
        let s = spec(2, 2);
        let same = FskWaveform::new(s, vec![0, 0], vec![0.0, 0.0]).unwrap();
        assert_eq!(same.grid_sidelobe(GridPoint::new(1, 0)).unwrap(), 0.5);

        let hop = FskWaveform::new(s, vec![0, 1], vec![0.0, 0.0]).unwrap();
        assert_eq!(hop.grid_sidelobe(GridPoint::new(1, -1)).unwrap(), 0.5);
        assert_eq!(hop.grid_sidelobe(GridPoint::new(1, 0)).unwrap(), 0.0);

        let phased = FskWaveform::new(s, vec![0, 0], vec![0.0, PI]).unwrap();
        assert_eq!(phased.grid_sidelobe(GridPoint::new(1, 0)).unwrap(), 0.5);

        assert_eq!(same.grid_sidelobe(GridPoint::new(0, 0)).unwrap(), 1.0);
        assert!(same.grid_sidelobe(GridPoint::new(0, 1)).unwrap() == 0.0);
        assert!(same.grid_sidelobe(GridPoint::new(2, 0)).is_err());
    }

    #[test]
    fn grid_matches_mirrored_complex_af() {
        // Ã(k, r) = A(kT, -2πrΔf): lattice convention vs the integral.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = spec(6, 4);
        let mut wf = FskWaveform::random(s, &mut rng);
        let phases: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..TAU)).collect();
        wf = wf.with_phases(phases).unwrap();
        for point in domain(6, 4) {
            let lattice = wf.grid_sidelobe(point).unwrap();
            let tau = lattice_tau(&s, point.k);
            let omega = -lattice_omega(&s, point.r);
            assert!(
                (lattice - wf.af_magnitude(tau, omega)).abs() < 1e-9,
                "mismatch at {point:?}"
            );
        }
    }

    #[test]
    fn map_covers_domain_and_psl_set_l4_m2() {
        // exhaustive over all 16 waveforms: zero-phase PSL is i/4, i ∈ {1,2,3}
        let s = spec(4, 2);
        for idx in 0..16u128 {
            let wf = FskWaveform::from_index(s, idx).unwrap();
            let map = wf.grid_sidelobe_map();
            assert_eq!(map.len(), 4 * 3 - 1);
            for r in [-1i32, 1] {
                assert_eq!(map.value(GridPoint::new(0, r)).unwrap(), 0.0);
            }
            let psl = map.psl();
            assert!((psl * 4.0).fract().abs() < 1e-12);
            assert!((0.25..=0.75).contains(&psl));
            assert!((wf.grid_psl() - psl).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_frequency_ridge() {
        let s = spec(5, 3);
        let wf = FskWaveform::new(s, vec![2; 5], vec![0.0; 5]).unwrap();
        for k in 1..5 {
            let v = wf.grid_sidelobe(GridPoint::new(k, 0)).unwrap();
            assert_eq!(v, (5 - k) as f64 / 5.0);
        }
        assert_eq!(wf.grid_psl(), 0.8);
    }

    #[test]
    fn zero_delay_cut_is_sequence_independent() {
        let s = spec(4, 3);
        let omegas: Vec<f64> = (0..40).map(|i| -15.0 + 0.77 * i as f64).collect();
        let cut = s.zero_delay_cut(&omegas);
        assert!((cut[0] - s.zero_delay_cut(&[omegas[0]])[0]).abs() < 1e-15);
        // matches the full AF of any member waveform
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..3 {
            let wf = FskWaveform::random(s, &mut rng);
            for (i, &w) in omegas.iter().enumerate() {
                assert!((wf.af_magnitude(0.0, w) - cut[i]).abs() < 1e-10);
            }
        }
        // Dirichlet zeros at ω = 2πΔf q/L, q not a multiple of L
        for q in [1i32, 2, 3, 5] {
            let w = TAU * q as f64 / 4.0;
            let v = s.zero_delay_cut(&[w])[0];
            assert!(v < 1e-10, "q={q}: {v}");
        }
        assert!((s.zero_delay_cut(&[0.0])[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_subpulse_triangle() {
        let s = WaveformSpec::new(1, 2, 1.0, 1).unwrap();
        let wf = FskWaveform::from_index(s, 0).unwrap();
        let taus: Vec<f64> = (-10..=10).map(|i| i as f64 / 10.0).collect();
        let cut = wf.zero_doppler_cut(&taus);
        for (i, &tau) in taus.iter().enumerate() {
            assert!((cut[i] - (1.0 - tau.abs())).abs() < 1e-12);
        }
    }

    #[test]
    fn surface_agrees_with_generic_af() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s = spec(4, 3);
        let mut wf = FskWaveform::random(s, &mut rng);
        let phases: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..TAU)).collect();
        wf = wf.with_phases(phases).unwrap();
        let surface = sampled_af_surface(&wf, 8).unwrap();
        assert!((surface.value_near(0.0, 0.0) - 1.0).abs() < 1e-9);
        for _ in 0..200 {
            let pi = rng.gen_range(0..surface.delay_axis.len());
            let qi = rng.gen_range(0..surface.doppler_axis.len());
            let generic = wf.af_magnitude(surface.delay_axis[pi], surface.doppler_axis[qi]);
            assert!(
                (surface.magnitude[pi][qi] - generic).abs() < 1e-9,
                "at ({pi},{qi})"
            );
        }
    }

    #[test]
    fn surface_hits_grid_sidelobes_mirrored() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = spec(5, 3);
        let wf = FskWaveform::random(s, &mut rng);
        let surface = sampled_af_surface(&wf, 8).unwrap();
        for point in domain(5, 3) {
            let expect = wf.grid_sidelobe(point).unwrap();
            let got = surface.value_near(lattice_tau(&s, point.k), -lattice_omega(&s, point.r));
            assert!((expect - got).abs() < 1e-9, "{point:?}: {expect} vs {got}");
        }
    }

    #[test]
    fn local_maxima_psl_constant_frequency() {
        let s = spec(6, 2);
        let wf = FskWaveform::new(s, vec![1; 6], vec![0.0; 6]).unwrap();
        let surface = sampled_af_surface(&wf, 16).unwrap();
        let lm = surface.local_maxima_psl().unwrap();
        let expect = 5.0 / 6.0; // ridge peak at (T, 0)
        assert!((lm - expect).abs() < 5e-3, "lm = {lm}");
        assert!(lm >= expect - 1e-12);
    }

    #[test]
    fn local_maxima_psl_bounds_grid_psl() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let s = spec(8, 4);
        for _ in 0..15 {
            let wf = FskWaveform::random(s, &mut rng);
            let surface = sampled_af_surface(&wf, 8).unwrap();
            let lm = surface.local_maxima_psl().unwrap();
            let grid = wf.grid_psl();
            assert!(
                lm >= grid - 1e-12,
                "local-maxima {lm} under grid {grid}"
            );
            assert!(lm <= grid + 1.0 / 8.0 + 1e-9);
        }
    }

    #[test]
    fn coarse_surface_rejected_for_local_maxima() {
        let s = spec(3, 2);
        let wf = FskWaveform::from_index(s, 0).unwrap();
        let surface = sampled_af_surface(&wf, 4).unwrap();
        assert!(matches!(
            surface.local_maxima_psl(),
            Err(Error::SurfaceTooCoarse { .. })
        ));
        assert!(sampled_af_surface(&wf, 3).is_err());
    }

    #[test]
    fn envelope_energy_backs_af_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let wf = FskWaveform::random(spec(3, 4), &mut rng);
        let env = sample_envelope_default(&wf).unwrap();
        assert!((env.energy() - 1.0).abs() < 1e-9);
    }
}
