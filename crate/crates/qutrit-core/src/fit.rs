//! Least-squares exponential fits for relaxation traces: echo decay
//! A*exp(-t/tau) and inversion/saturation recovery y_inf + a*exp(-t/tau).

use crate::error::{Error, Result};
use alloc::vec::Vec;
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpDecayFit {
    pub amplitude: f64,
    pub tau: f64,
    pub rms_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryFit {
    pub baseline: f64,
    pub amplitude: f64,
    pub tau: f64,
    pub rms_residual: f64,
}

/// Fits y = A * exp(-t / tau). Initialized by a log-linear regression over
/// the positive samples, refined by Gauss-Newton.
pub fn fit_exponential_decay(t: &[f64], y: &[f64]) -> Result<ExpDecayFit> {
    if t.len() != y.len() || t.len() < 3 {
        return Err(Error::EmptyWindow);
    }
    let (mut a, mut tau) = log_linear_init(t, y)?;
    for _ in 0..60 {
        // residual r = y - A e; J columns d/dA = e, d/dtau = A t e / tau^2
        let mut jtj = Matrix2::<f64>::zeros();
        let mut jtr = Vector2::<f64>::zeros();
        for (&ti, &yi) in t.iter().zip(y) {
            let e = libm::exp(-ti / tau);
            let j = Vector2::new(e, a * ti * e / (tau * tau));
            jtj += j * j.transpose();
            jtr += j * (yi - a * e);
        }
        let Some(step) = jtj.lu().solve(&jtr) else { break };
        a += step[0];
        tau += step[1];
        if !(a.is_finite() && tau.is_finite() && tau > 0.0) {
            return Err(Error::FitDiverged);
        }
        if step.norm() < 1e-12 * (1.0 + tau) {
            break;
        }
    }
    let rms = rms_residual(t, y, |ti| a * libm::exp(-ti / tau));
    Ok(ExpDecayFit { amplitude: a, tau, rms_residual: rms })
}

/// Fits y = y_inf + a * exp(-t / tau) (a < 0 for inversion recovery).
pub fn fit_recovery(t: &[f64], y: &[f64]) -> Result<RecoveryFit> {
    if t.len() != y.len() || t.len() < 4 {
        return Err(Error::EmptyWindow);
    }
    // late-time average as the baseline guess, then log fit on |y - y_inf|
    let tail = t.len() / 4;
    let mut baseline = y[y.len() - tail.max(1)..].iter().sum::<f64>() / tail.max(1) as f64;
    let shifted: Vec<f64> = y.iter().map(|v| v - baseline).collect();
    let (mut a, mut tau) = log_linear_init_signed(t, &shifted)?;
    for _ in 0..80 {
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for (&ti, &yi) in t.iter().zip(y) {
            let e = libm::exp(-ti / tau);
            let j = Vector3::new(1.0, e, a * ti * e / (tau * tau));
            jtj += j * j.transpose();
            jtr += j * (yi - baseline - a * e);
        }
        let Some(step) = jtj.lu().solve(&jtr) else { break };
        baseline += step[0];
        a += step[1];
        tau += step[2];
        if !(baseline.is_finite() && a.is_finite() && tau.is_finite() && tau > 0.0) {
            return Err(Error::FitDiverged);
        }
        if step.norm() < 1e-12 * (1.0 + tau) {
            break;
        }
    }
    let rms = rms_residual(t, y, |ti| baseline + a * libm::exp(-ti / tau));
    Ok(RecoveryFit { baseline, amplitude: a, tau, rms_residual: rms })
}

fn log_linear_init(t: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(_, &yi)| yi > 0.0)
        .map(|(&ti, &yi)| (ti, libm::log(yi)))
        .collect();
    line_to_exp(&pts, 1.0)
}

fn log_linear_init_signed(t: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    // dominant sign decides the amplitude sign; tiny tail values are noise
    let peak = y.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    if peak == 0.0 {
        return Err(Error::FitDiverged);
    }
    let sign = if y[0] >= 0.0 { 1.0 } else { -1.0 };
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(_, &yi)| sign * yi > 1e-6 * peak)
        .map(|(&ti, &yi)| (ti, libm::log(sign * yi)))
        .collect();
    line_to_exp(&pts, sign)
}

fn line_to_exp(pts: &[(f64, f64)], sign: f64) -> Result<(f64, f64)> {
    if pts.len() < 2 {
        return Err(Error::FitDiverged);
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return Err(Error::FitDiverged);
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    if slope >= 0.0 {
        return Err(Error::FitDiverged);
    }
    Ok((sign * libm::exp(intercept), -1.0 / slope))
}

fn rms_residual(t: &[f64], y: &[f64], model: impl Fn(f64) -> f64) -> f64 {
    let ss: f64 = t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let r = yi - model(ti);
            r * r
        })
        .sum();
    libm::sqrt(ss / t.len() as f64)
}
