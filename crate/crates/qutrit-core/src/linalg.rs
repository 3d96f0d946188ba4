//! Small dense linear algebra helpers for 3x3 complex Hermitian matrices.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

pub type CMat3 = Matrix3<Complex64>;
pub type CVec3 = Vector3<Complex64>;
pub type RMat3 = Matrix3<f64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// (m + m^dagger) / 2
pub fn hermitize(m: &CMat3) -> CMat3 {
    (m + m.adjoint()) * cr(0.5)
}

/// Largest |element| of m - m^dagger.
pub fn hermiticity_defect(m: &CMat3) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest elementwise |a - b|.
pub fn max_abs_diff(a: &CMat3, b: &CMat3) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs(m: &CMat3) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascending.
pub fn eigh(m: &CMat3) -> (Vector3<f64>, CMat3) {
    let se = hermitize(m).symmetric_eigen();
    // sort ascending
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals = Vector3::new(
        se.eigenvalues[idx[0]],
        se.eigenvalues[idx[1]],
        se.eigenvalues[idx[2]],
    );
    let vecs = CMat3::from_columns(&[
        se.eigenvectors.column(idx[0]).into_owned(),
        se.eigenvectors.column(idx[1]).into_owned(),
        se.eigenvectors.column(idx[2]).into_owned(),
    ]);
    (vals, vecs)
}

/// exp(-i * scale * h) for Hermitian h; the result is unitary.
pub fn exp_neg_i(h: &CMat3, scale: f64) -> CMat3 {
    let (vals, vecs) = eigh(h);
    let mut d = CMat3::zeros();
    for k in 0..3 {
        let a = -scale * vals[k];
        d[(k, k)] = Complex64::new(libm::cos(a), libm::sin(a));
    }
    &vecs * d * vecs.adjoint()
}

/// Principal square root of a PSD Hermitian matrix; eigenvalues in
/// [-clamp_tol, 0) are clamped to zero.
pub fn sqrt_psd(m: &CMat3, clamp_tol: f64) -> Option<CMat3> {
    let (vals, vecs) = eigh(m);
    let mut d = CMat3::zeros();
    for k in 0..3 {
        let v = vals[k];
        if v < -clamp_tol {
            return None;
        }
        d[(k, k)] = cr(libm::sqrt(v.max(0.0)));
    }
    Some(&vecs * d * vecs.adjoint())
}

/// || u^dagger u - 1 ||_max
pub fn unitarity_defect(u: &CMat3) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &CMat3::identity())
}

/// Outer product |v><v|.
pub fn projector(v: &CVec3) -> CMat3 {
    v * v.adjoint()
}

/// x reduced into [0, modulus); f64::rem_euclid is unavailable in core.
pub fn wrap_positive(x: f64, modulus: f64) -> f64 {
    let r = x % modulus;
    if r < 0.0 {
        r + modulus
    } else {
        r
    }
}

pub fn trace_re(m: &CMat3) -> f64 {
    (m[(0, 0)] + m[(1, 1)] + m[(2, 2)]).re
}
