//! Qutrit density matrices over the (|+>, |0>, |->) basis.

use crate::error::{Error, Result};
use crate::linalg::{cr, eigh, hermiticity_defect, hermitize, projector, trace_re, CMat3, CVec3};
use num_complex::Complex64;

pub const PLUS: usize = 0;
pub const ZERO_LEVEL: usize = 1;
pub const MINUS: usize = 2;

/// A validated 3x3 density matrix: Hermitian, unit trace, positive
/// semidefinite (within tolerances).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: CMat3,
}

pub const DEFAULT_TOL: f64 = 1e-10;

impl DensityMatrix {
    /// Validates with the default tolerances (1e-10 on Hermiticity and
    /// trace, eigenvalues >= -1e-10).
    pub fn new(m: CMat3) -> Result<Self> {
        Self::with_psd_tolerance(m, DEFAULT_TOL)
    }

    /// Same gate with a relaxed PSD tolerance; used for matrices transcribed
    /// from rounded published data.
    pub fn with_psd_tolerance(m: CMat3, psd_tol: f64) -> Result<Self> {
        let hd = hermiticity_defect(&m);
        if hd > DEFAULT_TOL {
            return Err(Error::InvalidDensityMatrix { reason: "not Hermitian", value: hd });
        }
        let tr = trace_re(&m);
        if libm::fabs(tr - 1.0) > DEFAULT_TOL {
            return Err(Error::InvalidDensityMatrix { reason: "trace not 1", value: tr });
        }
        let (vals, _) = eigh(&m);
        if vals[0] < -psd_tol {
            return Err(Error::InvalidDensityMatrix {
                reason: "negative eigenvalue",
                value: vals[0],
            });
        }
        let purity = (m * m).trace().re;
        if purity > 1.0 + 10.0 * psd_tol {
            return Err(Error::InvalidDensityMatrix { reason: "purity above 1", value: purity });
        }
        Ok(Self { m: hermitize(&m) })
    }

    /// Symmetrizes and trace-normalizes a transcribed matrix before
    /// validating it with a relaxed PSD tolerance of 0.02.
    pub fn from_printed(m: CMat3) -> Result<Self> {
        let h = hermitize(&m);
        let tr = trace_re(&h);
        if libm::fabs(tr) < 1e-6 {
            return Err(Error::InvalidDensityMatrix { reason: "trace near 0", value: tr });
        }
        Self::with_psd_tolerance(h * cr(1.0 / tr), 0.02)
    }

    pub fn pure(ket: &CVec3) -> Self {
        let n = ket.norm();
        let v = ket * cr(1.0 / n);
        Self { m: projector(&v) }
    }

    /// |0><0|, the pseudopure initial state after photoexcitation.
    pub fn ground() -> Self {
        Self::pure(&CVec3::new(cr(0.0), cr(1.0), cr(0.0)))
    }

    pub fn maximally_mixed() -> Self {
        Self { m: CMat3::identity() * cr(1.0 / 3.0) }
    }

    /// Projector of (|+> + |->)/sqrt(2).
    pub fn psi1_ideal() -> Self {
        Self::pure(&CVec3::new(cr(1.0), cr(0.0), cr(1.0)))
    }

    /// Projector of (|+> + |0> + |->)/sqrt(3).
    pub fn psi2_ideal() -> Self {
        Self::pure(&CVec3::new(cr(1.0), cr(1.0), cr(1.0)))
    }

    pub fn matrix(&self) -> &CMat3 {
        &self.m
    }

    pub fn populations(&self) -> [f64; 3] {
        [self.m[(0, 0)].re, self.m[(1, 1)].re, self.m[(2, 2)].re]
    }

    pub fn coherence(&self, a: usize, b: usize) -> Complex64 {
        self.m[(a, b)]
    }

    /// Tr(rho^2), in [1/3, 1].
    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pure_states_have_unit_purity() {
        assert_abs_diff_eq!(DensityMatrix::psi1_ideal().purity(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(DensityMatrix::psi2_ideal().purity(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(DensityMatrix::maximally_mixed().purity(), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_trace() {
        let m = CMat3::identity();
        assert!(matches!(
            DensityMatrix::new(m),
            Err(Error::InvalidDensityMatrix { reason: "trace not 1", .. })
        ));
    }

    #[test]
    fn rejects_negative_population() {
        let m = CMat3::from_diagonal(&nalgebra::Vector3::new(cr(1.2), cr(-0.2), cr(0.0)));
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn psi2_populations_uniform() {
        let p = DensityMatrix::psi2_ideal();
        for v in p.populations() {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.coherence(PLUS, MINUS).re, 1.0 / 3.0, epsilon = 1e-12);
    }
}
