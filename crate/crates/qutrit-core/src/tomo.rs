//! Superposition-state preparation, population-difference readout, density
//! matrix tomography and Uhlmann fidelity.

use crate::error::{Error, Result};
use crate::linalg::{cr, eigh, hermitize, sqrt_psd, CMat3};
use crate::pulse::{
    pulse_propagator, relaxation_map, run_sequence, PulseSpec, RelaxationParams, SequenceProgram,
    Transition,
};
use crate::spin::SpinSystem;
use crate::state::DensityMatrix;
use alloc::vec::Vec;
use nalgebra::{SMatrix, SVector};

const FRAC_PI_2: f64 = core::f64::consts::FRAC_PI_2;
const PI: f64 = core::f64::consts::PI;

/// Decoherence delay inserted before the readout pulse, microseconds
/// (several T2, so residual coherences are negligible at readout).
pub const READOUT_DELAY_US: f64 = 40.0;

/// Base phases of the two preparation pulses. They make the ideally
/// prepared kets real and positive ((|+> + |->)/sqrt(2) and
/// (|+> + |0> + |->)/sqrt(3)) and cancel from every interference pattern,
/// which only depends on the phase shifts applied on top of them.
pub const PREP_BASE_PHASE_PLUS: f64 = -FRAC_PI_2;
pub const PREP_BASE_PHASE_MINUS: f64 = FRAC_PI_2;

/// pi/2 on 0 <-> + followed by pi on 0 <-> -; on |0><0| this yields
/// (|+> + |->)/sqrt(2).
pub fn prepare_psi1() -> SequenceProgram {
    SequenceProgram::from_pulses(alloc::vec![
        PulseSpec::ideal(Transition::Plus, FRAC_PI_2, PREP_BASE_PHASE_PLUS),
        PulseSpec::ideal(Transition::Minus, PI, PREP_BASE_PHASE_MINUS),
    ])
    .expect("static program is nonempty")
}

/// arccos(1/3) on 0 <-> + followed by pi/2 on 0 <-> -; on |0><0| this
/// yields (|+> + |0> + |->)/sqrt(3).
pub fn prepare_psi2() -> SequenceProgram {
    SequenceProgram::from_pulses(alloc::vec![
        PulseSpec::ideal(Transition::Plus, libm::acos(1.0 / 3.0), PREP_BASE_PHASE_PLUS),
        PulseSpec::ideal(Transition::Minus, FRAC_PI_2, PREP_BASE_PHASE_MINUS),
    ])
    .expect("static program is nonempty")
}

/// Simulated FID readout: optional decoherence delay, then half the
/// population difference across the addressed transition. For the 0 <-> +
/// transition this is the M0+ observable, calibrated so |0><0| reads -1/2.
pub fn measure_population_difference(
    rho: &DensityMatrix,
    transition: Transition,
    relax: Option<&RelaxationParams>,
) -> f64 {
    let mut m = *rho.matrix();
    if let Some(r) = relax {
        m = relaxation_map(&m, READOUT_DELAY_US, r);
    }
    let (u, l) = transition.levels();
    (m[(u, u)].re - m[(l, l)].re) / 2.0
}

/// A tomography measurement setting: analysis pulses, then a
/// population-difference readout on one transition.
#[derive(Debug, Clone)]
pub struct Setting {
    pub label: &'static str,
    pub pulses: Vec<PulseSpec>,
    pub readout: Transition,
}

/// The fixed 10-setting tomography set: bare populations on both
/// transitions, both quadratures of the two single-quantum coherences, and
/// composite pi + pi/2 settings (both orders, both quadratures) that bring
/// the double-quantum coherence rho(+,-) onto a population difference.
pub fn standard_settings(rabi_mhz: Option<f64>) -> Result<Vec<Setting>> {
    use Transition::{Minus, Plus};
    let mk = |t: Transition, tip: f64, phase: f64| -> Result<PulseSpec> {
        match rabi_mhz {
            None => Ok(PulseSpec::ideal(t, tip, phase)),
            Some(r) => PulseSpec::finite(t, tip, phase, r),
        }
    };
    Ok(alloc::vec![
        Setting { label: "pop_plus", pulses: Vec::new(), readout: Plus },
        Setting { label: "pop_minus", pulses: Vec::new(), readout: Minus },
        Setting { label: "coh_0p_x", pulses: alloc::vec![mk(Plus, FRAC_PI_2, 0.0)?], readout: Plus },
        Setting {
            label: "coh_0p_y",
            pulses: alloc::vec![mk(Plus, FRAC_PI_2, FRAC_PI_2)?],
            readout: Plus,
        },
        Setting { label: "coh_0m_x", pulses: alloc::vec![mk(Minus, FRAC_PI_2, 0.0)?], readout: Minus },
        Setting {
            label: "coh_0m_y",
            pulses: alloc::vec![mk(Minus, FRAC_PI_2, FRAC_PI_2)?],
            readout: Minus,
        },
        Setting {
            label: "coh_pm_x_via_plus",
            pulses: alloc::vec![mk(Minus, PI, 0.0)?, mk(Plus, FRAC_PI_2, 0.0)?],
            readout: Plus,
        },
        Setting {
            label: "coh_pm_y_via_plus",
            pulses: alloc::vec![mk(Minus, PI, 0.0)?, mk(Plus, FRAC_PI_2, FRAC_PI_2)?],
            readout: Plus,
        },
        Setting {
            label: "coh_pm_x_via_minus",
            pulses: alloc::vec![mk(Plus, PI, 0.0)?, mk(Minus, FRAC_PI_2, 0.0)?],
            readout: Minus,
        },
        Setting {
            label: "coh_pm_y_via_minus",
            pulses: alloc::vec![mk(Plus, PI, 0.0)?, mk(Minus, FRAC_PI_2, FRAC_PI_2)?],
            readout: Minus,
        },
    ])
}

const N_SETTINGS: usize = 10;
const N_PARAMS: usize = 8;

#[derive(Debug, Clone)]
pub struct TomographyResult {
    pub rho: DensityMatrix,
    pub settings_used: Vec<&'static str>,
    /// Euclidean norm of the least-squares residual.
    pub residual: f64,
}

/// Runs the preparation on |0><0| and reconstructs the resulting state.
/// `relax` controls the decoherence delay in each simulated readout (the
/// reconstruction accounts for it, so it introduces no bias); `rabi_mhz`
/// switches the analysis pulses to the finite model.
pub fn tomography(
    prep: &SequenceProgram,
    sys: &SpinSystem,
    relax: Option<&RelaxationParams>,
    rabi_mhz: Option<f64>,
) -> Result<TomographyResult> {
    let rho = run_sequence(&DensityMatrix::ground(), prep, sys)?;
    tomography_of_state(&rho, sys, relax, rabi_mhz)
}

/// Tomography of a directly injected state (bypasses preparation).
pub fn tomography_of_state(
    rho: &DensityMatrix,
    sys: &SpinSystem,
    relax: Option<&RelaxationParams>,
    rabi_mhz: Option<f64>,
) -> Result<TomographyResult> {
    let settings = standard_settings(rabi_mhz)?;
    let basis = parameter_basis();

    // signal is affine-linear in rho: s_i = c_i + sum_j A_ij x_j for
    // rho = I/3 + sum_j x_j B_j
    let third = CMat3::identity() * cr(1.0 / 3.0);
    let mut a = SMatrix::<f64, N_SETTINGS, N_PARAMS>::zeros();
    let mut y = SVector::<f64, N_SETTINGS>::zeros();
    for (i, s) in settings.iter().enumerate() {
        let c = setting_signal(sys, &third, s, relax)?;
        y[i] = setting_signal(sys, rho.matrix(), s, relax)? - c;
        for (j, b) in basis.iter().enumerate() {
            // the measurement map is linear, so basis signals need no offset
            a[(i, j)] = setting_signal(sys, b, s, relax)?;
        }
    }

    let svd = a.svd(true, true);
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10).count();
    if rank < N_PARAMS {
        return Err(Error::SettingsIncomplete { rank });
    }
    let x = svd.solve(&y, 1e-12).map_err(|_| Error::SettingsIncomplete { rank })?;
    let residual = (a * x - y).norm();

    let mut m = third;
    for (j, b) in basis.iter().enumerate() {
        m += b * cr(x[j]);
    }
    let rho_rec = project_to_physical(&m)?;
    Ok(TomographyResult {
        rho: rho_rec,
        settings_used: settings.iter().map(|s| s.label).collect(),
        residual,
    })
}

fn setting_signal(
    sys: &SpinSystem,
    m: &CMat3,
    s: &Setting,
    relax: Option<&RelaxationParams>,
) -> Result<f64> {
    let mut m = *m;
    for p in &s.pulses {
        let u = pulse_propagator(sys, p)?;
        m = u * m * u.adjoint();
    }
    if let Some(r) = relax {
        m = relaxation_map(&m, READOUT_DELAY_US, r);
    }
    let (u, l) = s.readout.levels();
    Ok((m[(u, u)].re - m[(l, l)].re) / 2.0)
}

/// Traceless Hermitian basis spanning the 8 free real parameters: two
/// diagonal generators plus Re/Im generators of the three coherences.
fn parameter_basis() -> [CMat3; N_PARAMS] {
    let i = crate::linalg::I;
    let mut out = [CMat3::zeros(); N_PARAMS];
    out[0][(0, 0)] = cr(1.0);
    out[0][(1, 1)] = cr(-1.0);
    out[1][(1, 1)] = cr(1.0);
    out[1][(2, 2)] = cr(-1.0);
    let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
    for (k, &(p, q)) in pairs.iter().enumerate() {
        let mut x = CMat3::zeros();
        x[(p, q)] = cr(1.0);
        x[(q, p)] = cr(1.0);
        out[2 + 2 * k] = x;
        let mut yb = CMat3::zeros();
        yb[(p, q)] = -i;
        yb[(q, p)] = i;
        out[3 + 2 * k] = yb;
    }
    out
}

/// Eigenvalue clipping to the PSD cone followed by trace renormalization.
fn project_to_physical(m: &CMat3) -> Result<DensityMatrix> {
    let h = hermitize(m);
    let (vals, vecs) = eigh(&h);
    let mut clipped = [0.0f64; 3];
    let mut total = 0.0;
    for k in 0..3 {
        clipped[k] = vals[k].max(0.0);
        total += clipped[k];
    }
    if total <= 0.0 {
        return Err(Error::InvalidDensityMatrix { reason: "projection collapsed to zero", value: total });
    }
    let mut d = CMat3::zeros();
    for k in 0..3 {
        d[(k, k)] = cr(clipped[k] / total);
    }
    DensityMatrix::new(vecs * d * vecs.adjoint())
}

/// Uhlmann fidelity F = [Tr sqrt(sqrt(sigma) rho sqrt(sigma))]^2, clamped to
/// [0, 1]. Accepts slightly non-PSD inputs (rounded published data) up to
/// the DensityMatrix ingestion tolerance.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let ss = sqrt_psd(sigma.matrix(), 0.05).ok_or(Error::InvalidDensityMatrix {
        reason: "fidelity input not PSD",
        value: 0.0,
    })?;
    let m = hermitize(&(ss * rho.matrix() * ss));
    let (vals, _) = eigh(&m);
    // sqrt amplifies eigenvalue noise near zero (sqrt(1e-16) = 1e-8), so
    // drop eigenvalues at roundoff scale before summing
    let scale = libm::fabs(vals[0]).max(libm::fabs(vals[2])).max(1e-300);
    let mut s = 0.0;
    for k in 0..3 {
        if vals[k] < -0.05 {
            return Err(Error::InvalidDensityMatrix { reason: "fidelity input not PSD", value: vals[k] });
        }
        if vals[k] > 1e-12 * scale {
            s += libm::sqrt(vals[k]);
        }
    }
    Ok((s * s).clamp(0.0, 1.0))
}

/// Tr(rho^2).
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}
