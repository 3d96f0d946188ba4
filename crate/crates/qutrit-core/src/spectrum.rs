//! Powder-averaged echo-detected field-sweep spectrum and orientation
//! selection.
//!
//! Each molecular orientation contributes two resonance lines at fixed
//! detection frequency f0: absorption (+1) on 0 <-> + and emission (-1) on
//! 0 <-> -, per the pseudopure |0>-overpopulated triplet. Matrix-element
//! weighting is deliberately omitted (unit weights per transition).

use crate::error::{Error, Result};
use crate::spin::{
    hamiltonian_matrix, transition_frequencies, LabTensor, Orientation, SpinSystem, ZfsParameters,
    BOHR_MAGNETON_MHZ_PER_G,
};
use alloc::vec::Vec;

const TAU: f64 = core::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub field_gauss: Vec<f64>,
    /// Signed intensity per field point: absorption positive, emission
    /// negative; normalized per orientation.
    pub intensity: Vec<f64>,
    pub broadening_fwhm_gauss: f64,
    /// Set when no resonance fell inside the requested field range.
    pub empty: bool,
}

/// Equal-area orientation grid via the golden-angle (Fibonacci) spiral.
pub fn fibonacci_orientations(n: usize) -> Vec<Orientation> {
    let golden = (1.0 + libm::sqrt(5.0)) / 2.0;
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let theta = libm::acos(z.clamp(-1.0, 1.0));
            let phi = crate::linalg::wrap_positive(TAU * k as f64 / golden, TAU);
            Orientation::new(theta, phi).expect("spiral angles are in range")
        })
        .collect()
}

/// Resonance fields (B for 0<->+, B for 0<->-) of one orientation at the
/// system's detection frequency, found by root-finding f_transition(B) = f0.
/// None when the transition cannot be labeled or has no root in the
/// search bracket.
pub fn resonance_fields_for_orientation(
    sys: &SpinSystem,
    zfs: &ZfsParameters,
    o: &Orientation,
) -> (Option<f64>, Option<f64>) {
    let lab = LabTensor::principal(zfs)
        .rotate_to_lab(o)
        .with_drive_sign_convention();
    let center = sys.f0_mhz / (sys.g_factor * BOHR_MAGNETON_MHZ_PER_G);
    let width = 3.0 * (libm::fabs(zfs.d()) + libm::fabs(zfs.e()))
        / (sys.g_factor * BOHR_MAGNETON_MHZ_PER_G)
        + 50.0;
    (
        solve_resonance(sys, &lab, center, width, true),
        solve_resonance(sys, &lab, center, width, false),
    )
}

fn transition_offset(sys: &SpinSystem, lab: &LabTensor, b: f64, plus: bool) -> Option<f64> {
    let h = hamiltonian_matrix(sys.g_factor, b, lab);
    let tf = transition_frequencies(&h).ok()?;
    Some(if plus { tf.f_zero_to_plus } else { tf.f_zero_to_minus } - sys.f0_mhz)
}

/// Secant iteration on the monotone map B -> f_transition(B); the Zeeman
/// term dominates, so convergence is fast and bracketing is unnecessary.
fn solve_resonance(
    sys: &SpinSystem,
    lab: &LabTensor,
    center: f64,
    width: f64,
    plus: bool,
) -> Option<f64> {
    let mut b0 = (center - width).max(1.0);
    let mut b1 = center + width;
    let mut f0 = transition_offset(sys, lab, b0, plus)?;
    let mut f1 = transition_offset(sys, lab, b1, plus)?;
    for _ in 0..60 {
        if libm::fabs(f1) < 1e-9 {
            return Some(b1);
        }
        let denom = f1 - f0;
        if denom == 0.0 {
            return None;
        }
        let b2 = b1 - f1 * (b1 - b0) / denom;
        if !b2.is_finite() || b2 <= 0.0 {
            return None;
        }
        b0 = b1;
        f0 = f1;
        b1 = b2;
        f1 = transition_offset(sys, lab, b1, plus)?;
    }
    None
}

/// Powder average over `n_orientations` equal-area orientations, convolved
/// with a Gaussian of the given FWHM.
pub fn powder_spectrum(
    sys: &SpinSystem,
    zfs: &ZfsParameters,
    field_range_gauss: (f64, f64),
    n_points: usize,
    n_orientations: usize,
    broadening_fwhm_gauss: f64,
) -> Result<SpectrumResult> {
    if n_orientations < 100 {
        return Err(Error::InvalidProgram { reason: "powder average needs >= 100 orientations" });
    }
    let (lo, hi) = field_range_gauss;
    if !(lo < hi) || n_points < 2 || !(broadening_fwhm_gauss > 0.0) {
        return Err(Error::EmptyWindow);
    }
    let field: Vec<f64> = (0..n_points)
        .map(|k| lo + (hi - lo) * k as f64 / (n_points - 1) as f64)
        .collect();
    let mut intensity = alloc::vec![0.0f64; n_points];
    let four_ln2 = 4.0 * libm::log(2.0);
    let cutoff = 6.0 * broadening_fwhm_gauss;
    let mut in_range = 0usize;
    for o in fibonacci_orientations(n_orientations) {
        let (bp, bm) = resonance_fields_for_orientation(sys, zfs, &o);
        for (b_res, weight) in [(bp, 1.0), (bm, -1.0)] {
            let Some(b_res) = b_res else { continue };
            if b_res >= lo && b_res <= hi {
                in_range += 1;
            }
            for (k, &b) in field.iter().enumerate() {
                let d = b - b_res;
                if libm::fabs(d) <= cutoff {
                    intensity[k] += weight
                        * libm::exp(-four_ln2 * d * d
                            / (broadening_fwhm_gauss * broadening_fwhm_gauss));
                }
            }
        }
    }
    let norm = 1.0 / n_orientations as f64;
    for v in &mut intensity {
        *v *= norm;
    }
    Ok(SpectrumResult {
        field_gauss: field,
        intensity,
        broadening_fwhm_gauss,
        empty: in_range == 0,
    })
}

impl SpectrumResult {
    /// Linear interpolation of the intensity at an arbitrary field; zero
    /// outside the computed range.
    pub fn intensity_at(&self, b_gauss: f64) -> f64 {
        let n = self.field_gauss.len();
        let lo = self.field_gauss[0];
        let dx = self.field_gauss[1] - self.field_gauss[0];
        let x = (b_gauss - lo) / dx;
        if x < 0.0 || x > (n - 1) as f64 {
            return 0.0;
        }
        let i = (x as usize).min(n - 2);
        let f = x - i as f64;
        self.intensity[i] * (1.0 - f) + self.intensity[i + 1] * f
    }

    /// Largest |intensity|.
    pub fn peak(&self) -> f64 {
        self.intensity.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)))
    }

    /// Worst |I(B) + I(2c - B)| over the grid for a mirror center c.
    pub fn asymmetry_about(&self, center_gauss: f64) -> f64 {
        self.field_gauss
            .iter()
            .zip(&self.intensity)
            .fold(0.0f64, |m, (&b, &v)| {
                m.max(libm::fabs(v + self.intensity_at(2.0 * center_gauss - b)))
            })
    }

    /// The center of antisymmetry: the mirror point minimizing the worst
    /// asymmetry, searched within +/- 2 G of the range midpoint. Second
    /// order Zeeman/ZFS cross terms displace it slightly below the nominal
    /// resonance field.
    pub fn symmetry_center(&self) -> f64 {
        let mid = (self.field_gauss[0] + self.field_gauss[self.field_gauss.len() - 1]) / 2.0;
        let mut best = mid;
        let mut best_val = f64::INFINITY;
        let steps = 400;
        for k in 0..=steps {
            let c = mid - 2.0 + 4.0 * k as f64 / steps as f64;
            let v = self.asymmetry_about(c);
            if v < best_val {
                best_val = v;
                best = c;
            }
        }
        best
    }
}

/// An orientation addressed by a field window, with its lab-frame D_zz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedOrientation {
    pub theta: f64,
    pub phi: f64,
    pub d_zz_mhz: f64,
}

/// Orientations whose 0<->+ or 0<->- resonance field falls inside the
/// window at the system's detection frequency.
pub fn orientation_selection(
    sys: &SpinSystem,
    zfs: &ZfsParameters,
    window_gauss: (f64, f64),
    n_orientations: usize,
) -> Result<Vec<SelectedOrientation>> {
    let (lo, hi) = window_gauss;
    if !(lo < hi) {
        return Err(Error::EmptyWindow);
    }
    let mut out = Vec::new();
    for o in fibonacci_orientations(n_orientations) {
        let (bp, bm) = resonance_fields_for_orientation(sys, zfs, &o);
        let hit = |b: Option<f64>| b.map(|b| b >= lo && b <= hi).unwrap_or(false);
        if hit(bp) || hit(bm) {
            let lab = LabTensor::principal(zfs)
                .rotate_to_lab(&o)
                .with_drive_sign_convention();
            out.push(SelectedOrientation { theta: o.theta(), phi: o.phi(), d_zz_mhz: lab.d_zz() });
        }
    }
    Ok(out)
}

/// Mode of the |D_zz| distribution with the given bin width, MHz.
pub fn dzz_mode(selected: &[SelectedOrientation], bin_mhz: f64) -> Option<f64> {
    if selected.is_empty() || !(bin_mhz > 0.0) {
        return None;
    }
    let max = selected
        .iter()
        .fold(0.0f64, |m, s| m.max(libm::fabs(s.d_zz_mhz)));
    let n_bins = (max / bin_mhz) as usize + 1;
    let mut counts = alloc::vec![0usize; n_bins];
    for s in selected {
        let k = (libm::fabs(s.d_zz_mhz) / bin_mhz) as usize;
        counts[k.min(n_bins - 1)] += 1;
    }
    let best = counts.iter().enumerate().max_by_key(|&(_, c)| *c)?.0;
    Some((best as f64 + 0.5) * bin_mhz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference_setup() -> (SpinSystem, ZfsParameters) {
        (
            SpinSystem::new(2.0037, 3299.0, 9250.5, 9160.5, 9340.5),
            ZfsParameters::new(152.0, 50.4).unwrap(),
        )
    }

    #[test]
    fn fibonacci_grid_covers_sphere() {
        let os = fibonacci_orientations(1000);
        assert_eq!(os.len(), 1000);
        let mean_z: f64 =
            os.iter().map(|o| libm::cos(o.theta())).sum::<f64>() / os.len() as f64;
        assert_abs_diff_eq!(mean_z, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn spectrum_is_antisymmetric_about_center() {
        let (sys, zfs) = reference_setup();
        let c = crate::spin::resonance_field(9250.5, 2.0037);
        let res = powder_spectrum(&sys, &zfs, (c - 300.0, c + 300.0), 1201, 1500, 15.0).unwrap();
        assert!(!res.empty);
        let peak = res.peak();
        assert!(peak > 0.0);
        let center = res.symmetry_center();
        // second-order shifts move the center slightly below nominal
        assert_abs_diff_eq!(center, c, epsilon = 1.0);
        assert!(
            res.asymmetry_about(center) < 0.02 * peak,
            "asymmetry {} vs peak {peak}",
            res.asymmetry_about(center)
        );
    }

    #[test]
    fn total_intensity_integrates_to_zero() {
        let (sys, zfs) = reference_setup();
        let res =
            powder_spectrum(&sys, &zfs, (3299.0 - 400.0, 3299.0 + 400.0), 401, 400, 15.0).unwrap();
        let total: f64 = res.intensity.iter().sum();
        let absolute: f64 = res.intensity.iter().map(|v| libm::fabs(*v)).sum();
        assert!(libm::fabs(total) < 1e-6 * absolute, "net {total}, abs {absolute}");
    }

    #[test]
    fn zero_zfs_cancels_exactly() {
        let sys = SpinSystem::new(2.0037, 3299.0, 9250.5, 9250.5, 9250.5);
        let zfs = ZfsParameters::new(0.0, 0.0).unwrap();
        let res = powder_spectrum(&sys, &zfs, (3200.0, 3400.0), 201, 200, 15.0).unwrap();
        for v in &res.intensity {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn doubling_d_doubles_spread() {
        let sys = SpinSystem::new(2.0037, 3299.0, 9250.5, 9160.5, 9340.5);
        let spread = |d: f64| {
            let zfs = ZfsParameters::new(d, 0.0).unwrap();
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for o in fibonacci_orientations(400) {
                let (bp, bm) = resonance_fields_for_orientation(&sys, &zfs, &o);
                for b in [bp, bm].into_iter().flatten() {
                    lo = lo.min(b);
                    hi = hi.max(b);
                }
            }
            hi - lo
        };
        let s1 = spread(152.0);
        let s2 = spread(304.0);
        assert_abs_diff_eq!(s2 / s1, 2.0, epsilon = 0.05);
    }

    #[test]
    fn empty_range_flagged() {
        let (sys, zfs) = reference_setup();
        let res = powder_spectrum(&sys, &zfs, (1000.0, 1100.0), 51, 200, 15.0).unwrap();
        assert!(res.empty);
    }

    #[test]
    fn full_window_selects_everything() {
        let (sys, zfs) = reference_setup();
        let sel = orientation_selection(&sys, &zfs, (3000.0, 3600.0), 500).unwrap();
        assert_eq!(sel.len(), 500);
    }

    #[test]
    fn edge_window_selects_extreme_dzz() {
        let (sys, zfs) = reference_setup();
        // outermost emission edge: |D_zz| near the extreme principal value
        let full = orientation_selection(&sys, &zfs, (3000.0, 3600.0), 2000).unwrap();
        let b_max = {
            let mut m = f64::NEG_INFINITY;
            for o in fibonacci_orientations(2000) {
                let (bp, bm) = resonance_fields_for_orientation(&sys, &zfs, &o);
                for b in [bp, bm].into_iter().flatten() {
                    m = m.max(b);
                }
            }
            m
        };
        let edge = orientation_selection(&sys, &zfs, (b_max - 2.0, b_max + 2.0), 2000).unwrap();
        assert!(!edge.is_empty());
        assert!(edge.len() < full.len());
        let mode = dzz_mode(&edge, 5.0).unwrap();
        // extreme principal value is |-D/3 - E| = 101.07 MHz
        assert_abs_diff_eq!(mode, 101.07, epsilon = 6.0);
    }

    #[test]
    fn invalid_inputs_rejected() {
        let (sys, zfs) = reference_setup();
        assert!(powder_spectrum(&sys, &zfs, (3200.0, 3400.0), 101, 50, 15.0).is_err());
        assert!(powder_spectrum(&sys, &zfs, (3400.0, 3200.0), 101, 200, 15.0).is_err());
        assert!(orientation_selection(&sys, &zfs, (3400.0, 3200.0), 200).is_err());
    }
}
