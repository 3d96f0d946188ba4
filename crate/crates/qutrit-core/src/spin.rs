//! Spin-1 Hamiltonian construction: zero-field-splitting tensor, lab-frame
//! rotation, energy levels and transition frequencies.
//!
//! Units: energies and frequencies in MHz, magnetic fields in Gauss, angles
//! in radians. The basis is (|+>, |0>, |->) ordered by decreasing M_S.

use crate::error::{Error, Result};
use crate::linalg::{cr, eigh, CMat3, RMat3};
use num_complex::Complex64;

/// Bohr magneton over Planck constant, MHz per Gauss.
pub const BOHR_MAGNETON_MHZ_PER_G: f64 = 1.399_624_493_6;

/// Zero-field-splitting parameters D and E in MHz.
///
/// Convention: principal values D_x = -D/3 + E, D_y = -D/3 - E, D_z = 2D/3,
/// which is traceless with |E| <= |D|/3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZfsParameters {
    d_mhz: f64,
    e_mhz: f64,
}

impl ZfsParameters {
    pub fn new(d_mhz: f64, e_mhz: f64) -> Result<Self> {
        if libm::fabs(e_mhz) > libm::fabs(d_mhz) / 3.0 + 1e-12 {
            return Err(Error::ZfsConvention { d_mhz, e_mhz });
        }
        Ok(Self { d_mhz, e_mhz })
    }

    pub fn d(&self) -> f64 {
        self.d_mhz
    }

    pub fn e(&self) -> f64 {
        self.e_mhz
    }
}

/// Tilt of the molecular frame relative to the lab frame (field along lab z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    theta: f64,
    phi: f64,
}

impl Orientation {
    /// theta in [0, pi], phi in [0, 2*pi).
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=core::f64::consts::PI).contains(&theta)
            || !(0.0..core::f64::consts::TAU).contains(&phi)
        {
            return Err(Error::InvalidOrientation { theta, phi });
        }
        Ok(Self { theta, phi })
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// R_z(phi) * R_y(theta); its third column is the field direction
    /// (sin(theta)cos(phi), sin(theta)sin(phi), cos(theta)) expressed in
    /// molecular coordinates.
    pub fn rotation(&self) -> RMat3 {
        let (st, ct) = (libm::sin(self.theta), libm::cos(self.theta));
        let (sp, cp) = (libm::sin(self.phi), libm::cos(self.phi));
        let ry = RMat3::new(ct, 0.0, st, 0.0, 1.0, 0.0, -st, 0.0, ct);
        let rz = RMat3::new(cp, -sp, 0.0, sp, cp, 0.0, 0.0, 0.0, 1.0);
        rz * ry
    }
}

/// A 3x3 real symmetric traceless ZFS tensor, in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabTensor {
    m: RMat3,
}

impl LabTensor {
    /// Principal-frame tensor diag(-D/3 + E, -D/3 - E, 2D/3).
    pub fn principal(zfs: &ZfsParameters) -> Self {
        let d = zfs.d();
        let e = zfs.e();
        Self {
            m: RMat3::from_diagonal(&nalgebra::Vector3::new(
                -d / 3.0 + e,
                -d / 3.0 - e,
                2.0 * d / 3.0,
            )),
        }
    }

    /// R^T * T * R: the tensor expressed in the lab frame whose z axis
    /// points along the field, with the field direction given by the polar
    /// angles (theta, phi) in molecular coordinates. The trace is preserved.
    pub fn rotate_to_lab(&self, o: &Orientation) -> Self {
        let r = o.rotation();
        Self { m: r.transpose() * self.m * r }
    }

    /// Flips the overall sign of the tensor.
    ///
    /// The drive bookkeeping fixes the sign of the lab tensor so that the
    /// 0 <-> + transition sits below the detection frequency and
    /// delta_f_plus + delta_f_minus = -3 * D_zz holds with positive offsets.
    /// At the operating point (theta = 40 deg) the geometric rotation yields
    /// D_zz ~ +59.4 MHz, so the tensor used in the Hamiltonian is its
    /// negation (D_zz ~ -59.4 MHz).
    pub fn with_drive_sign_convention(&self) -> Self {
        Self { m: -self.m }
    }

    pub fn matrix(&self) -> &RMat3 {
        &self.m
    }

    pub fn d_zz(&self) -> f64 {
        self.m[(2, 2)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }
}

/// Static experiment context: g-factor, field, detection and drive
/// frequencies. Frequency offsets are always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSystem {
    pub g_factor: f64,
    pub b0_gauss: f64,
    /// Detection frequency, MHz.
    pub f0_mhz: f64,
    /// Drive frequency of the 0 <-> + transition, MHz.
    pub f_plus_mhz: f64,
    /// Drive frequency of the 0 <-> - transition, MHz.
    pub f_minus_mhz: f64,
}

impl SpinSystem {
    pub fn new(g_factor: f64, b0_gauss: f64, f0_mhz: f64, f_plus_mhz: f64, f_minus_mhz: f64) -> Self {
        Self { g_factor, b0_gauss, f0_mhz, f_plus_mhz, f_minus_mhz }
    }

    /// Builds the system for a given lab tensor: drive frequencies are the
    /// exact transition frequencies at b0 and the detection frequency is
    /// placed midway between them.
    pub fn from_lab_tensor(g_factor: f64, b0_gauss: f64, lab: &LabTensor) -> Result<Self> {
        let h = hamiltonian_matrix(g_factor, b0_gauss, lab);
        let tf = transition_frequencies(&h)?;
        Ok(Self {
            g_factor,
            b0_gauss,
            f0_mhz: 0.5 * (tf.f_zero_to_plus + tf.f_zero_to_minus),
            f_plus_mhz: tf.f_zero_to_plus,
            f_minus_mhz: tf.f_zero_to_minus,
        })
    }

    /// delta_f_plus = +(f0 - f_plus)
    pub fn delta_f_plus(&self) -> f64 {
        self.f0_mhz - self.f_plus_mhz
    }

    /// delta_f_minus = -(f0 - f_minus)
    pub fn delta_f_minus(&self) -> f64 {
        self.f_minus_mhz - self.f0_mhz
    }

    /// Frequency separation between the two allowed transitions, MHz.
    pub fn transition_separation(&self) -> f64 {
        self.f_minus_mhz - self.f_plus_mhz
    }
}

/// Spin-1 operators (S_x, S_y, S_z) in the (|+>, |0>, |->) basis.
pub fn spin_operators() -> [CMat3; 3] {
    let s = 1.0 / libm::sqrt(2.0);
    let sx = CMat3::new(
        cr(0.0), cr(s), cr(0.0),
        cr(s), cr(0.0), cr(s),
        cr(0.0), cr(s), cr(0.0),
    );
    let sy = CMat3::new(
        cr(0.0), Complex64::new(0.0, -s), cr(0.0),
        Complex64::new(0.0, s), cr(0.0), Complex64::new(0.0, -s),
        cr(0.0), Complex64::new(0.0, s), cr(0.0),
    );
    let sz = CMat3::from_diagonal(&nalgebra::Vector3::new(cr(1.0), cr(0.0), cr(-1.0)));
    [sx, sy, sz]
}

/// H = nu0 * S_z + S^T . T . S in MHz, with nu0 = g * mu_B * B0 / h.
pub fn hamiltonian(sys: &SpinSystem, lab: &LabTensor) -> CMat3 {
    hamiltonian_matrix(sys.g_factor, sys.b0_gauss, lab)
}

pub fn hamiltonian_matrix(g_factor: f64, b0_gauss: f64, lab: &LabTensor) -> CMat3 {
    let nu0 = g_factor * BOHR_MAGNETON_MHZ_PER_G * b0_gauss;
    let s = spin_operators();
    let mut h = s[2] * cr(nu0);
    for a in 0..3 {
        for b in 0..3 {
            let t = lab.matrix()[(a, b)];
            if t != 0.0 {
                h += s[a] * s[b] * cr(t);
            }
        }
    }
    h
}

/// Energies labeled by M_S, as (E_plus, E_zero, E_minus).
///
/// Labels are assigned by the basis-overlap permutation with the largest
/// total weight; no minimum-overlap threshold is applied, so this stays
/// usable down to zero field (where the labels follow the dominant
/// component rather than a good quantum number).
pub fn labeled_levels(h: &CMat3) -> [f64; 3] {
    let (assign, _) = label_assignment(h);
    assign
}

fn label_assignment(h: &CMat3) -> ([f64; 3], f64) {
    let (vals, vecs) = eigh(h);
    // overlap[b][k] = |<b|v_k>|^2
    let mut overlap = [[0.0f64; 3]; 3];
    for b in 0..3 {
        for k in 0..3 {
            overlap[b][k] = vecs[(b, k)].norm_sqr();
        }
    }
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0],
    ];
    let mut best = PERMS[0];
    let mut best_w = f64::MIN;
    for p in PERMS {
        let w = overlap[0][p[0]] + overlap[1][p[1]] + overlap[2][p[2]];
        if w > best_w {
            best_w = w;
            best = p;
        }
    }
    let energies = [vals[best[0]], vals[best[1]], vals[best[2]]];
    let min_overlap = overlap[0][best[0]]
        .min(overlap[1][best[1]])
        .min(overlap[2][best[2]]);
    (energies, min_overlap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionFrequencies {
    /// E(|+>) - E(|0>), MHz.
    pub f_zero_to_plus: f64,
    /// E(|0>) - E(|->), MHz.
    pub f_zero_to_minus: f64,
}

/// Exact eigenvalue differences of the two allowed transitions, with levels
/// labeled by dominant basis overlap. Fails if any assigned overlap is
/// below 0.7 (high-field labeling breaks down).
pub fn transition_frequencies(h: &CMat3) -> Result<TransitionFrequencies> {
    let (e, min_overlap) = label_assignment(h);
    if min_overlap < 0.7 {
        return Err(Error::AmbiguousLabeling { best_overlap: min_overlap });
    }
    Ok(TransitionFrequencies {
        f_zero_to_plus: e[0] - e[1],
        f_zero_to_minus: e[1] - e[2],
    })
}

/// B0 = h * f0 / (g * mu_B), in Gauss.
pub fn resonance_field(f0_mhz: f64, g_factor: f64) -> f64 {
    f0_mhz / (g_factor * BOHR_MAGNETON_MHZ_PER_G)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference_zfs() -> ZfsParameters {
        ZfsParameters::new(152.0, 50.4).unwrap()
    }

    #[test]
    fn principal_tensor_values() {
        let t = LabTensor::principal(&reference_zfs());
        let m = t.matrix();
        assert_abs_diff_eq!(m[(0, 0)], -0.2667, epsilon = 1e-3);
        assert_abs_diff_eq!(m[(1, 1)], -101.0667, epsilon = 1e-3);
        assert_abs_diff_eq!(m[(2, 2)], 101.3333, epsilon = 1e-3);
        assert_abs_diff_eq!(t.trace(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn principal_tensor_zero_and_axial() {
        let z = LabTensor::principal(&ZfsParameters::new(0.0, 0.0).unwrap());
        assert_eq!(z.matrix(), &RMat3::zeros());

        let a = LabTensor::principal(&ZfsParameters::new(152.0, 0.0).unwrap());
        assert_abs_diff_eq!(a.matrix()[(0, 0)], -50.6667, epsilon = 1e-3);
        assert_abs_diff_eq!(a.matrix()[(1, 1)], -50.6667, epsilon = 1e-3);
        assert_abs_diff_eq!(a.matrix()[(2, 2)], 101.3333, epsilon = 1e-3);
    }

    #[test]
    fn rejects_convention_violation() {
        assert!(matches!(
            ZfsParameters::new(152.0, 60.0),
            Err(Error::ZfsConvention { .. })
        ));
    }

    #[test]
    fn identity_rotation_is_noop() {
        let t = LabTensor::principal(&reference_zfs());
        let r = t.rotate_to_lab(&Orientation::new(0.0, 0.0).unwrap());
        assert!((r.matrix() - t.matrix()).abs().max() < 1e-12);
    }

    #[test]
    fn forty_degree_tilt_dzz() {
        let t = LabTensor::principal(&reference_zfs());
        let lab = t.rotate_to_lab(&Orientation::from_degrees(40.0, 0.0).unwrap());
        assert_abs_diff_eq!(lab.d_zz(), 59.4, epsilon = 0.1);
        assert_abs_diff_eq!(lab.trace(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn y_axis_along_field() {
        let t = LabTensor::principal(&reference_zfs());
        let lab = t.rotate_to_lab(&Orientation::from_degrees(90.0, 90.0).unwrap());
        assert_abs_diff_eq!(lab.d_zz(), -101.0667, epsilon = 1e-3);
    }

    #[test]
    fn zeeman_only_hamiltonian() {
        let sys = SpinSystem::new(2.0037, 3299.0, 0.0, 0.0, 0.0);
        let zero = LabTensor::principal(&ZfsParameters::new(0.0, 0.0).unwrap());
        let h = hamiltonian(&sys, &zero);
        let nu0 = 2.0037 * BOHR_MAGNETON_MHZ_PER_G * 3299.0;
        assert_abs_diff_eq!(h[(0, 0)].re, nu0, epsilon = 1e-9);
        assert_abs_diff_eq!(h[(1, 1)].re, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(h[(2, 2)].re, -nu0, epsilon = 1e-9);
        // nu0 consistent with the 9.2505 GHz detection band
        assert_abs_diff_eq!(nu0, 9250.5, epsilon = 2.0);
    }

    #[test]
    fn zero_field_zero_tensor() {
        let sys = SpinSystem::new(2.0037, 0.0, 0.0, 0.0, 0.0);
        let zero = LabTensor::principal(&ZfsParameters::new(0.0, 0.0).unwrap());
        let h = hamiltonian(&sys, &zero);
        assert!(crate::linalg::max_abs(&h) < 1e-12);
    }

    #[test]
    fn degenerate_transitions_without_zfs() {
        let sys = SpinSystem::new(2.0037, 3299.0, 0.0, 0.0, 0.0);
        let zero = LabTensor::principal(&ZfsParameters::new(0.0, 0.0).unwrap());
        let tf = transition_frequencies(&hamiltonian(&sys, &zero)).unwrap();
        assert_abs_diff_eq!(tf.f_zero_to_plus, tf.f_zero_to_minus, epsilon = 1e-9);
    }

    #[test]
    fn operating_point_offsets() {
        let lab = LabTensor::principal(&reference_zfs())
            .rotate_to_lab(&Orientation::from_degrees(40.0, 0.0).unwrap())
            .with_drive_sign_convention();
        let sys = SpinSystem::from_lab_tensor(2.0037, 3299.0, &lab).unwrap();
        assert_abs_diff_eq!(sys.delta_f_plus(), 90.0, epsilon = 1.0);
        assert_abs_diff_eq!(sys.delta_f_minus(), 90.0, epsilon = 1.0);
        // offsets exchange when the tensor sign flips
        let sys2 =
            SpinSystem::from_lab_tensor(2.0037, 3299.0, &lab.with_drive_sign_convention()).unwrap();
        assert!(sys2.f_plus_mhz > sys2.f0_mhz);
        assert!(sys2.f_minus_mhz < sys2.f0_mhz);
    }

    #[test]
    fn resonance_field_values() {
        assert_abs_diff_eq!(resonance_field(9250.5, 2.0037), 3299.0, epsilon = 1.0);
        assert_abs_diff_eq!(
            resonance_field(9250.5, 2.0 * 2.0037),
            resonance_field(9250.5, 2.0037) / 2.0,
            epsilon = 1e-9
        );
        assert_eq!(resonance_field(0.0, 2.0037), 0.0);
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let lab = LabTensor::principal(&reference_zfs())
            .rotate_to_lab(&Orientation::from_degrees(63.0, 1.1).unwrap());
        let sys = SpinSystem::new(2.0037, 3299.0, 0.0, 0.0, 0.0);
        assert!(crate::linalg::hermiticity_defect(&hamiltonian(&sys, &lab)) < 1e-12);
    }
}
