//! Two-dimensional quantum-phase interference patterns, their Fourier
//! peaks, TPPI phase-to-time remapping and evolution paths on the phase
//! torus.
//!
//! Phase-to-time convention: a pulse phase phi is equivalent to free
//! evolution with phi = 2*pi*delta_f*t (delta_f in MHz, t in microseconds).

use crate::error::{Error, Result};
use crate::linalg::CMat3;
use crate::pulse::{pulse_propagator, relaxation_map, PulseSpec, RelaxationParams, SequenceProgram};
use crate::spin::SpinSystem;
use crate::state::DensityMatrix;
use crate::tomo::{prepare_psi1, prepare_psi2, READOUT_DELAY_US};
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const TAU: f64 = core::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreparedState {
    Psi1,
    Psi2,
}

/// Additive Gaussian measurement noise with a fixed seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

/// N x N grid of M0+ over (phi_plus, phi_minus), both axes uniform over
/// [0, 2*pi). Row index follows phi_plus, column index phi_minus.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePattern {
    n: usize,
    values: Vec<f64>,
}

impl PhasePattern {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid { n });
        }
        if values.len() != n * n {
            return Err(Error::InvalidGrid { n: values.len() });
        }
        for &v in &values {
            if !(v.is_finite() && (-1.0 - 1e-9..=1.0 + 1e-9).contains(&v)) {
                return Err(Error::InvalidGrid { n });
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The sampled phase axis, identical for both directions.
    pub fn phi_axis(&self) -> Vec<f64> {
        (0..self.n).map(|k| TAU * k as f64 / self.n as f64).collect()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Mean-removed, max-|.|-normalized copy; all-constant input maps to
    /// all zeros.
    pub fn normalized(&self) -> Self {
        let mean = self.mean();
        let mut out: Vec<f64> = self.values.iter().map(|v| v - mean).collect();
        let max = out.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
        if max > 0.0 {
            for v in &mut out {
                *v /= max;
            }
        }
        Self { n: self.n, values: out }
    }

    /// Largest elementwise |a - b|.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max(libm::fabs(a - b)))
    }

    /// Pearson correlation between two patterns.
    pub fn correlation(&self, other: &Self) -> f64 {
        let (ma, mb) = (self.mean(), other.mean());
        let mut num = 0.0;
        let mut da = 0.0;
        let mut db = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            num += (a - ma) * (b - mb);
            da += (a - ma) * (a - ma);
            db += (b - mb) * (b - mb);
        }
        num / libm::sqrt(da * db)
    }

    /// Bilinear interpolation with periodic wrap at fractional phases (rad).
    pub fn sample(&self, phi_plus: f64, phi_minus: f64) -> f64 {
        let n = self.n as f64;
        let x = crate::linalg::wrap_positive(phi_plus / TAU * n, n);
        let y = crate::linalg::wrap_positive(phi_minus / TAU * n, n);
        let (i0, fx) = (x as usize % self.n, x - libm::floor(x));
        let (j0, fy) = (y as usize % self.n, y - libm::floor(y));
        let i1 = (i0 + 1) % self.n;
        let j1 = (j0 + 1) % self.n;
        let v00 = self.value(i0, j0);
        let v01 = self.value(i0, j1);
        let v10 = self.value(i1, j0);
        let v11 = self.value(i1, j1);
        v00 * (1.0 - fx) * (1.0 - fy) + v01 * (1.0 - fx) * fy + v10 * fx * (1.0 - fy) + v11 * fx * fy
    }
}

/// Simulates the interference experiment on an N x N phase grid: the
/// preparation pulses get extra phases (phi_plus, phi_minus), the reversion
/// pulses (negated tips, unshifted phases) follow in reversed order, then
/// M0+ is read out. `rabi_mhz` switches all pulses to the finite model;
/// `relax` enables the decoherence readout delay.
pub fn interference_pattern(
    state: PreparedState,
    n: usize,
    sys: &SpinSystem,
    rabi_mhz: Option<f64>,
    relax: Option<&RelaxationParams>,
    noise: Option<&NoiseSpec>,
) -> Result<PhasePattern> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid { n });
    }
    let prep = preparation(state);
    let prep = match rabi_mhz {
        Some(r) => prep.with_finite_model(r)?,
        None => prep,
    };
    let pulses: Vec<PulseSpec> = prep.pulses().copied().collect();
    debug_assert_eq!(pulses.len(), 2);
    let (p1, p2) = (pulses[0], pulses[1]);

    // reversion propagator is phase-independent; the two shifted
    // preparation propagators each depend on a single phase
    let reversion =
        pulse_propagator(sys, &p1.reverted())? * pulse_propagator(sys, &p2.reverted())?;
    let mut a_cache: Vec<CMat3> = Vec::with_capacity(n);
    let mut b_cache: Vec<CMat3> = Vec::with_capacity(n);
    for k in 0..n {
        let phi = TAU * k as f64 / n as f64;
        a_cache.push(pulse_propagator(sys, &p1.phase_shifted(phi))?);
        b_cache.push(pulse_propagator(sys, &p2.phase_shifted(phi))?);
    }

    let rho0 = *DensityMatrix::ground().matrix();
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let u = reversion * b_cache[j] * a_cache[i];
            let mut m = u * rho0 * u.adjoint();
            if let Some(r) = relax {
                m = relaxation_map(&m, READOUT_DELAY_US, r);
            }
            values.push((m[(0, 0)].re - m[(1, 1)].re) / 2.0);
        }
    }

    if let Some(ns) = noise {
        if !(ns.sigma >= 0.0 && ns.sigma.is_finite()) {
            return Err(Error::InvalidProgram { reason: "noise sigma must be finite and >= 0" });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(ns.seed);
        let normal = Normal::new(0.0, ns.sigma)
            .map_err(|_| Error::InvalidProgram { reason: "invalid noise sigma" })?;
        for v in &mut values {
            *v = (*v + normal.sample(&mut rng)).clamp(-1.0, 1.0);
        }
    }

    PhasePattern::new(n, values)
}

fn preparation(state: PreparedState) -> SequenceProgram {
    match state {
        PreparedState::Psi1 => prepare_psi1(),
        PreparedState::Psi2 => prepare_psi2(),
    }
}

/// The closed-form ideal patterns: -1/2 cos(phi_plus + phi_minus) for the
/// two-level superposition, and
/// -4/9 cos(phi_plus) - 1/9 cos(phi_minus) - 4/9 cos(phi_plus + phi_minus)
/// for the three-level one.
pub fn analytic_pattern(state: PreparedState, n: usize) -> Result<PhasePattern> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid { n });
    }
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        let pp = TAU * i as f64 / n as f64;
        for j in 0..n {
            let pm = TAU * j as f64 / n as f64;
            values.push(analytic_point(state, pp, pm));
        }
    }
    PhasePattern::new(n, values)
}

/// Pointwise evaluation of the analytic interference forms.
pub fn analytic_point(state: PreparedState, phi_plus: f64, phi_minus: f64) -> f64 {
    match state {
        PreparedState::Psi1 => -0.5 * libm::cos(phi_plus + phi_minus),
        PreparedState::Psi2 => {
            -4.0 / 9.0 * libm::cos(phi_plus) - 1.0 / 9.0 * libm::cos(phi_minus)
                - 4.0 / 9.0 * libm::cos(phi_plus + phi_minus)
        }
    }
}

/// Integer-frequency peaks of a pattern's 2D DFT, normalized so the
/// largest magnitude is 1. Keys are (k_plus, k_minus) in (-N/2, N/2].
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPeaks {
    entries: BTreeMap<(i32, i32), f64>,
}

impl FourierPeaks {
    pub fn entries(&self) -> &BTreeMap<(i32, i32), f64> {
        &self.entries
    }

    /// Normalized magnitude at a frequency pair, 0 if below threshold.
    pub fn magnitude(&self, k_plus: i32, k_minus: i32) -> f64 {
        self.entries.get(&(k_plus, k_minus)).copied().unwrap_or(0.0)
    }
}

/// 2D FFT of the pattern, reported as normalized magnitudes at or above
/// `threshold` (relative to the strongest bin).
pub fn fourier_peaks(p: &PhasePattern, threshold: f64) -> FourierPeaks {
    let n = p.n();
    let mut grid: Vec<Complex64> =
        p.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut scratch = alloc::vec![Complex64::new(0.0, 0.0); n];
    // rows (phi_minus direction)
    for i in 0..n {
        scratch.copy_from_slice(&grid[i * n..(i + 1) * n]);
        fft_inplace(&mut scratch);
        grid[i * n..(i + 1) * n].copy_from_slice(&scratch);
    }
    // columns (phi_plus direction)
    for j in 0..n {
        for i in 0..n {
            scratch[i] = grid[i * n + j];
        }
        fft_inplace(&mut scratch);
        for i in 0..n {
            grid[i * n + j] = scratch[i];
        }
    }
    let mags: Vec<f64> = grid.iter().map(|z| z.norm()).collect();
    let max = mags.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut entries = BTreeMap::new();
    if max > 0.0 {
        let half = n as i32 / 2;
        for ki in 0..n {
            for kj in 0..n {
                let mag = mags[ki * n + kj] / max;
                if mag >= threshold {
                    let kp = signed_freq(ki as i32, n as i32, half);
                    let km = signed_freq(kj as i32, n as i32, half);
                    entries.insert((kp, km), mag);
                }
            }
        }
    }
    FourierPeaks { entries }
}

fn signed_freq(k: i32, n: i32, half: i32) -> i32 {
    if k <= half {
        k
    } else {
        k - n
    }
}

/// Iterative radix-2 Cooley-Tukey; length must be a power of two.
fn fft_inplace(buf: &mut [Complex64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    // bit reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -TAU / len as f64;
        let wl = Complex64::new(libm::cos(ang), libm::sin(ang));
        let mut start = 0;
        while start < n {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = buf[start + k];
                let v = buf[start + k + len / 2] * w;
                buf[start + k] = u + v;
                buf[start + k + len / 2] = u - v;
                w *= wl;
            }
            start += len;
        }
        len <<= 1;
    }
}

/// Offset-frequency pair driving the fictitious evolutions, MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionSchedule {
    pub delta_f_plus_mhz: f64,
    pub delta_f_minus_mhz: f64,
}

impl EvolutionSchedule {
    pub fn new(delta_f_plus_mhz: f64, delta_f_minus_mhz: f64) -> Self {
        Self { delta_f_plus_mhz, delta_f_minus_mhz }
    }

    /// Schedule with delta_f_plus / delta_f_minus = ratio under the
    /// constraint delta_f_plus + delta_f_minus = -3 * d_zz.
    pub fn for_d_zz(d_zz_mhz: f64, ratio: f64) -> Result<Self> {
        if d_zz_mhz == 0.0 || !ratio.is_finite() || ratio == -1.0 {
            return Err(Error::DegenerateEngineering);
        }
        let minus = -3.0 * d_zz_mhz / (1.0 + ratio);
        Ok(Self { delta_f_plus_mhz: ratio * minus, delta_f_minus_mhz: minus })
    }

    pub fn ratio(&self) -> f64 {
        self.delta_f_plus_mhz / self.delta_f_minus_mhz
    }

    /// Mixing angle arctan(delta_f_plus / delta_f_minus), rad.
    pub fn theta_mix(&self) -> f64 {
        libm::atan2(self.delta_f_plus_mhz, self.delta_f_minus_mhz)
    }
}

/// A pattern relabeled onto fictitious-evolution time axes, microseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub t_plus_us: Vec<f64>,
    pub t_minus_us: Vec<f64>,
    /// Row-major, rows along t_plus, unchanged from the source pattern.
    pub values: Vec<f64>,
}

/// TPPI remap t = phi / (2*pi*delta_f): pure axis relabeling.
pub fn tppi_remap(p: &PhasePattern, s: &EvolutionSchedule) -> Result<TimeGrid> {
    if s.delta_f_plus_mhz == 0.0 || s.delta_f_minus_mhz == 0.0 {
        return Err(Error::RemapUndefined);
    }
    let axis = p.phi_axis();
    Ok(TimeGrid {
        t_plus_us: axis.iter().map(|phi| phi / (TAU * s.delta_f_plus_mhz)).collect(),
        t_minus_us: axis.iter().map(|phi| phi / (TAU * s.delta_f_minus_mhz)).collect(),
        values: p.values().to_vec(),
    })
}

/// Samples the pattern along the physical path phi(t) = 2*pi*delta_f*t,
/// returning (t_us, M0+) pairs.
pub fn evolution_trace(
    p: &PhasePattern,
    s: &EvolutionSchedule,
    t_max_us: f64,
    n_samples: usize,
) -> Result<Vec<(f64, f64)>> {
    if n_samples < 2 {
        return Err(Error::InvalidProgram { reason: "trace needs at least 2 samples" });
    }
    let mut out = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let t = t_max_us * k as f64 / (n_samples - 1) as f64;
        let v = p.sample(TAU * s.delta_f_plus_mhz * t, TAU * s.delta_f_minus_mhz * t);
        out.push((t, v));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClosureReport {
    /// Rational frequency ratio p/q in lowest terms: the path closes after
    /// p windings of phi1 and q of phi2.
    Closed { p: i64, q: i64, closure_time_us: f64 },
    /// No rational ratio within tolerance; smallest distance of return to
    /// the origin achieved over the sampled span.
    Incommensurate { min_return_distance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusPath {
    /// (t_us, phi1, phi2) with both phases reduced mod 2*pi.
    pub samples: Vec<(f64, f64, f64)>,
    pub closure: ClosureReport,
}

pub const RATIONALIZE_TOL: f64 = 1e-9;
pub const RATIONALIZE_MAX_DEN: i64 = 1_000_000;

/// Winding line (2*pi*delta_f_plus*t, 2*pi*delta_f_minus*t) on the torus
/// with a commensurability classification of the frequency ratio.
pub fn torus_path(s: &EvolutionSchedule, t_max_us: f64, n_samples: usize) -> Result<TorusPath> {
    if s.delta_f_plus_mhz == 0.0 || s.delta_f_minus_mhz == 0.0 {
        return Err(Error::RemapUndefined);
    }
    if !(t_max_us > 0.0) || n_samples < 2 {
        return Err(Error::InvalidProgram { reason: "torus path needs t_max > 0 and >= 2 samples" });
    }
    let mut samples = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let t = t_max_us * k as f64 / (n_samples - 1) as f64;
        samples.push((
            t,
            crate::linalg::wrap_positive(TAU * s.delta_f_plus_mhz * t, TAU),
            crate::linalg::wrap_positive(TAU * s.delta_f_minus_mhz * t, TAU),
        ));
    }
    let ratio = libm::fabs(s.ratio());
    let closure = match rationalize(ratio, RATIONALIZE_TOL, RATIONALIZE_MAX_DEN) {
        Some((p, q)) => ClosureReport::Closed {
            p,
            q,
            closure_time_us: q as f64 / libm::fabs(s.delta_f_minus_mhz),
        },
        None => {
            let mut min = f64::INFINITY;
            for &(_, p1, p2) in samples.iter().skip(1) {
                let d1 = p1.min(TAU - p1);
                let d2 = p2.min(TAU - p2);
                min = min.min(libm::sqrt(d1 * d1 + d2 * d2));
            }
            ClosureReport::Incommensurate { min_return_distance: min }
        }
    };
    Ok(TorusPath { samples, closure })
}

/// Continued-fraction rationalization of x > 0. A convergent p/q (q up to
/// `max_den`) is accepted when |x - p/q| <= tol/q; the q-scaling keeps the
/// acceptance region of each rational disjoint from the convergents of
/// nearby irrationals.
pub fn rationalize(x: f64, tol: f64, max_den: i64) -> Option<(i64, i64)> {
    if !(x > 0.0 && x.is_finite()) {
        return None;
    }
    let (mut p_prev, mut q_prev) = (1i64, 0i64);
    let (mut p, mut q) = (libm::floor(x) as i64, 1i64);
    let mut frac = x - libm::floor(x);
    loop {
        if q > max_den {
            return None;
        }
        let approx = p as f64 / q as f64;
        if libm::fabs(x - approx) <= tol / q as f64 {
            return Some((p, q));
        }
        if frac == 0.0 {
            return None;
        }
        let inv = 1.0 / frac;
        let a = libm::floor(inv) as i64;
        frac = inv - libm::floor(inv);
        let p_next = a.checked_mul(p)?.checked_add(p_prev)?;
        let q_next = a.checked_mul(q)?.checked_add(q_prev)?;
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
    }
}

/// Engineered offsets and waiting time accumulating exactly (phi1, phi2):
/// delta_f = -3 * d_zz * phi / (phi1 + phi2) MHz and
/// t = -(phi1 + phi2) / (3 * 2*pi * d_zz) us, so that
/// 2*pi*delta_f*t = phi and delta_f_plus + delta_f_minus = -3*d_zz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEngineering {
    pub delta_f_plus_mhz: f64,
    pub delta_f_minus_mhz: f64,
    pub wait_time_us: f64,
}

pub fn phase_engineering(phi1: f64, phi2: f64, d_zz_mhz: f64) -> Result<PhaseEngineering> {
    let total = phi1 + phi2;
    if total == 0.0 || d_zz_mhz == 0.0 || !total.is_finite() {
        return Err(Error::DegenerateEngineering);
    }
    // deriving the detunings from the rounded wait time keeps the
    // 2*pi*delta_f*t = phi round trip exact to a couple of ulps
    let wait_time_us = -total / (3.0 * TAU * d_zz_mhz);
    Ok(PhaseEngineering {
        delta_f_plus_mhz: phi1 / (TAU * wait_time_us),
        delta_f_minus_mhz: phi2 / (TAU * wait_time_us),
        wait_time_us,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const PI: f64 = core::f64::consts::PI;

    fn test_system() -> SpinSystem {
        SpinSystem::new(2.0037, 3299.0, 9250.5, 9160.5, 9340.5)
    }

    #[test]
    fn analytic_values() {
        assert_abs_diff_eq!(
            analytic_point(PreparedState::Psi1, PI / 2.0, PI / 2.0),
            0.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(analytic_point(PreparedState::Psi2, 0.0, 0.0), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            analytic_point(PreparedState::Psi2, PI, 0.0),
            7.0 / 9.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn simulated_psi1_matches_analytic() {
        let sys = test_system();
        let sim = interference_pattern(PreparedState::Psi1, 32, &sys, None, None, None).unwrap();
        let ana = analytic_pattern(PreparedState::Psi1, 32).unwrap();
        let dev = sim.normalized().max_deviation(&ana.normalized());
        assert!(dev < 1e-6, "max deviation {dev}");
        // the zero-phase cell is the global minimum (perfect reversion)
        let min = sim.values().iter().cloned().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(sim.value(0, 0), min, epsilon = 1e-12);
    }

    #[test]
    fn simulated_psi2_matches_analytic() {
        let sys = test_system();
        let sim = interference_pattern(PreparedState::Psi2, 32, &sys, None, None, None).unwrap();
        let ana = analytic_pattern(PreparedState::Psi2, 32).unwrap();
        let dev = sim.normalized().max_deviation(&ana.normalized());
        assert!(dev < 1e-6, "max deviation {dev}");
        assert!(sim.normalized().correlation(&ana.normalized()) > 0.999999);
    }

    #[test]
    fn psi1_peaks_only_at_one_one() {
        let ana = analytic_pattern(PreparedState::Psi1, 32).unwrap();
        let peaks = fourier_peaks(&ana, 0.05);
        assert_abs_diff_eq!(peaks.magnitude(1, 1), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(peaks.magnitude(-1, -1), 1.0, epsilon = 1e-9);
        assert_eq!(peaks.entries().len(), 2);
    }

    #[test]
    fn psi2_peak_ratios() {
        let ana = analytic_pattern(PreparedState::Psi2, 64).unwrap();
        let peaks = fourier_peaks(&ana, 0.01);
        let a = peaks.magnitude(1, 0);
        let b = peaks.magnitude(0, 1);
        let c = peaks.magnitude(1, 1);
        assert_abs_diff_eq!(a / c, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b / c, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn constant_pattern_dc_peak() {
        let p = PhasePattern::new(16, alloc::vec![0.25; 256]).unwrap();
        let peaks = fourier_peaks(&p, 0.05);
        assert_eq!(peaks.entries().len(), 1);
        assert_abs_diff_eq!(peaks.magnitude(0, 0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let sys = test_system();
        let noise = NoiseSpec { sigma: 0.05, seed: 7 };
        let a =
            interference_pattern(PreparedState::Psi1, 16, &sys, None, None, Some(&noise)).unwrap();
        let b =
            interference_pattern(PreparedState::Psi1, 16, &sys, None, None, Some(&noise)).unwrap();
        assert_eq!(a, b);
        let c = interference_pattern(
            PreparedState::Psi1,
            16,
            &sys,
            None,
            None,
            Some(&NoiseSpec { sigma: 0.05, seed: 8 }),
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn grid_validation() {
        let sys = test_system();
        assert!(interference_pattern(PreparedState::Psi1, 7, &sys, None, None, None).is_err());
        assert!(analytic_pattern(PreparedState::Psi1, 48).is_err());
    }

    #[test]
    fn tppi_axis_span() {
        let p = analytic_pattern(PreparedState::Psi1, 16).unwrap();
        let s = EvolutionSchedule::new(90.0, 90.0);
        let g = tppi_remap(&p, &s).unwrap();
        // 2*pi phase at 90 MHz is one 1/90 us = 11.1 ns period
        let step = g.t_plus_us[1] - g.t_plus_us[0];
        assert_abs_diff_eq!(step * 16.0, 1.0 / 90.0, epsilon = 1e-12);
        // flipped sign mirrors the axis
        let gm = tppi_remap(&p, &EvolutionSchedule::new(-90.0, 90.0)).unwrap();
        assert_abs_diff_eq!(gm.t_plus_us[1], -g.t_plus_us[1], epsilon = 1e-15);
        assert!(tppi_remap(&p, &EvolutionSchedule::new(0.0, 90.0)).is_err());
    }

    #[test]
    fn trace_matches_analytic_time_form() {
        let p = analytic_pattern(PreparedState::Psi1, 64).unwrap();
        let s = EvolutionSchedule::new(90.0, 90.0);
        let trace = evolution_trace(&p, &s, 1.0 / 90.0, 200).unwrap();
        for &(t, v) in &trace {
            let expect = -0.5 * libm::cos(TAU * 180.0 * t);
            // bilinear interpolation error O(h^2) with h = 2*pi/64
            assert_abs_diff_eq!(v, expect, epsilon = 3e-3);
        }
        assert_abs_diff_eq!(trace[0].1, p.value(0, 0), epsilon = 1e-12);
    }

    #[test]
    fn torus_closures() {
        for (ratio, p, q) in [(1.0, 1i64, 1i64), (0.5, 1, 2), (2.0, 2, 1)] {
            let s = EvolutionSchedule::for_d_zz(-59.35, ratio).unwrap();
            let path = torus_path(&s, 1.0, 256).unwrap();
            match path.closure {
                ClosureReport::Closed { p: cp, q: cq, closure_time_us } => {
                    assert_eq!((cp, cq), (p, q), "ratio {ratio}");
                    assert_abs_diff_eq!(
                        closure_time_us,
                        q as f64 / libm::fabs(s.delta_f_minus_mhz),
                        epsilon = 1e-12
                    );
                }
                other => panic!("ratio {ratio} not closed: {other:?}"),
            }
        }
    }

    #[test]
    fn sqrt_two_is_incommensurate() {
        let s = EvolutionSchedule::for_d_zz(-59.35, libm::sqrt(2.0)).unwrap();
        // 200 windings of the slower axis
        let t_max = 200.0 / libm::fabs(s.delta_f_minus_mhz);
        let path = torus_path(&s, t_max, 20_000).unwrap();
        match path.closure {
            ClosureReport::Incommensurate { min_return_distance } => {
                assert!(min_return_distance > 0.0);
            }
            other => panic!("sqrt(2) misclassified: {other:?}"),
        }
    }

    #[test]
    fn rationalize_cases() {
        assert_eq!(rationalize(0.5, 1e-9, 1_000_000), Some((1, 2)));
        assert_eq!(rationalize(2.0, 1e-9, 1_000_000), Some((2, 1)));
        assert_eq!(rationalize(22.0 / 7.0, 1e-9, 1_000_000), Some((22, 7)));
        assert_eq!(rationalize(libm::sqrt(2.0), 1e-9, 1_000_000), None);
        assert_eq!(rationalize(core::f64::consts::PI, 1e-9, 1_000_000), None);
    }

    #[test]
    fn phase_engineering_round_trip() {
        let pe = phase_engineering(1.3, -0.4, -59.35).unwrap();
        assert_abs_diff_eq!(TAU * pe.delta_f_plus_mhz * pe.wait_time_us, 1.3, epsilon = 1e-12);
        assert_abs_diff_eq!(TAU * pe.delta_f_minus_mhz * pe.wait_time_us, -0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(
            pe.delta_f_plus_mhz + pe.delta_f_minus_mhz,
            3.0 * 59.35,
            epsilon = 1e-12
        );
        // symmetric phases give equal offsets
        let sym = phase_engineering(0.7, 0.7, -59.35).unwrap();
        assert_abs_diff_eq!(sym.delta_f_plus_mhz, sym.delta_f_minus_mhz, epsilon = 1e-15);
        assert!(phase_engineering(1.0, -1.0, -59.35).is_err());
        assert!(phase_engineering(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn schedule_constraint() {
        let s = EvolutionSchedule::for_d_zz(-59.35, 0.5).unwrap();
        assert_abs_diff_eq!(
            s.delta_f_plus_mhz + s.delta_f_minus_mhz,
            3.0 * 59.35,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(s.ratio(), 0.5, epsilon = 1e-15);
        assert!(EvolutionSchedule::for_d_zz(0.0, 1.0).is_err());
        assert!(EvolutionSchedule::for_d_zz(-59.35, -1.0).is_err());
    }
}
