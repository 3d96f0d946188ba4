//! Transition-selective pulses and free evolution with relaxation.
//!
//! Propagators are expressed in the frame that co-rotates with each level's
//! free evolution, so an on-resonance selective pulse approaches the ideal
//! two-level rotation embedded in the addressed subspace and a zero-amplitude
//! pulse is the identity. The drive phase enters through the M_S-raising part
//! of each transition: a state driven up on 0 <-> + acquires exp(-i*phase)
//! while one driven down on 0 <-> - acquires exp(+i*phase) (|0> being the
//! upper level of that pair), which is what makes the two pulse phases add in
//! the interference pattern.

use crate::error::{Error, Result};
use crate::linalg::{cr, exp_neg_i, CMat3};
use crate::spin::SpinSystem;
use crate::state::DensityMatrix;
use alloc::vec::Vec;
use num_complex::Complex64;

const TAU: f64 = core::f64::consts::TAU;
const MAX_STEPS: u64 = 10_000_000;

/// One of the two allowed single-quantum transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    /// 0 <-> +
    Plus,
    /// 0 <-> -
    Minus,
}

impl Transition {
    /// (higher-M_S, lower-M_S) basis indices of the driven pair.
    pub fn levels(self) -> (usize, usize) {
        match self {
            Transition::Plus => (0, 1),
            Transition::Minus => (1, 2),
        }
    }

    pub fn other(self) -> Transition {
        match self {
            Transition::Plus => Transition::Minus,
            Transition::Minus => Transition::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseModel {
    /// Instantaneous rotation.
    Ideal,
    /// Rectangular pulse integrated in the rotating frame, including the
    /// off-resonant drive of the spectator transition.
    Finite { duration_us: f64, rabi_mhz: f64 },
}

/// A phase-controlled selective pulse. A negative tip angle is a reversion
/// pulse (rotation in the opposite sense).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub transition: Transition,
    pub tip: f64,
    pub phase: f64,
    pub model: PulseModel,
}

impl PulseSpec {
    pub fn ideal(transition: Transition, tip: f64, phase: f64) -> Self {
        Self { transition, tip, phase, model: PulseModel::Ideal }
    }

    /// Finite pulse with the duration implied by tip = 2*pi*rabi*duration.
    pub fn finite(transition: Transition, tip: f64, phase: f64, rabi_mhz: f64) -> Result<Self> {
        if rabi_mhz <= 0.0 {
            return Err(Error::InvalidPulse { reason: "rabi frequency must be positive" });
        }
        let duration_us = libm::fabs(tip) / (TAU * rabi_mhz);
        Ok(Self {
            transition,
            tip,
            phase,
            model: PulseModel::Finite { duration_us, rabi_mhz },
        })
    }

    /// Finite pulse with explicit duration; rejected unless
    /// |tip| = 2*pi*rabi*duration within 1e-6.
    pub fn finite_with_duration(
        transition: Transition,
        tip: f64,
        phase: f64,
        rabi_mhz: f64,
        duration_us: f64,
    ) -> Result<Self> {
        if duration_us <= 0.0 {
            return Err(Error::InvalidPulse { reason: "duration must be positive" });
        }
        if libm::fabs(libm::fabs(tip) - TAU * rabi_mhz * duration_us) > 1e-6 {
            return Err(Error::InvalidPulse { reason: "tip angle inconsistent with rabi * duration" });
        }
        Ok(Self {
            transition,
            tip,
            phase,
            model: PulseModel::Finite { duration_us, rabi_mhz },
        })
    }

    /// Copy with the phase shifted by `delta`.
    pub fn phase_shifted(&self, delta: f64) -> Self {
        Self { phase: self.phase + delta, ..*self }
    }

    /// Copy with the tip angle negated (reversion pulse).
    pub fn reverted(&self) -> Self {
        match self.model {
            PulseModel::Ideal => Self { tip: -self.tip, ..*self },
            PulseModel::Finite { duration_us, rabi_mhz } => Self {
                tip: -self.tip,
                model: PulseModel::Finite { duration_us, rabi_mhz },
                ..*self
            },
        }
    }
}

/// exp(-i*(tip/2)*(cos(phi)*X_t + sin(phi)*Y_t)) with X_t, Y_t the Pauli
/// generators embedded in the 2D subspace of `transition`, identity on the
/// spectator level.
pub fn ideal_rotation(transition: Transition, tip: f64, phase: f64) -> CMat3 {
    let (u, l) = transition.levels();
    let c = libm::cos(tip / 2.0);
    let s = libm::sin(tip / 2.0);
    let mut m = CMat3::identity();
    m[(u, u)] = cr(c);
    m[(l, l)] = cr(c);
    let raise = Complex64::new(libm::cos(phase), -libm::sin(phase));
    m[(u, l)] = -crate::linalg::I * raise * cr(s);
    m[(l, u)] = -crate::linalg::I * raise.conj() * cr(s);
    m
}

/// Time-ordered propagator of a rectangular finite pulse in the rotating
/// frame. The drive is resonant with the addressed transition and couples to
/// the spectator transition with equal strength, detuned by the transition
/// separation of `sys`.
pub fn finite_pulse_propagator(sys: &SpinSystem, p: &PulseSpec) -> Result<CMat3> {
    let PulseModel::Finite { duration_us, rabi_mhz } = p.model else {
        return Err(Error::InvalidPulse { reason: "finite_pulse_propagator requires a FINITE model" });
    };
    let separation = sys.transition_separation();
    // f_transition - f_drive for the two coherence channels
    let (nu_plus_block, nu_minus_block) = match p.transition {
        Transition::Plus => (0.0, separation),
        Transition::Minus => (-separation, 0.0),
    };
    let amp = if p.tip < 0.0 { -rabi_mhz / 2.0 } else { rabi_mhz / 2.0 };
    let (n_steps, dt) = step_schedule(duration_us, rabi_mhz, separation)?;
    let mut u = CMat3::identity();
    for k in 0..n_steps {
        let t = (k as f64 + 0.5) * dt;
        let mut h = CMat3::zeros();
        let a1 = TAU * nu_plus_block * t - p.phase;
        let a2 = TAU * nu_minus_block * t - p.phase;
        h[(0, 1)] = Complex64::new(libm::cos(a1), libm::sin(a1)) * cr(amp);
        h[(1, 2)] = Complex64::new(libm::cos(a2), libm::sin(a2)) * cr(amp);
        h[(1, 0)] = h[(0, 1)].conj();
        h[(2, 1)] = h[(1, 2)].conj();
        u = exp_neg_i(&h, TAU * dt) * u;
    }
    Ok(u)
}

fn step_schedule(duration_us: f64, rabi_mhz: f64, separation_mhz: f64) -> Result<(u64, f64)> {
    // ||H|| dt < 0.05 rad, where the rate also covers the spectator
    // oscillation that must be resolved
    let rate = TAU * (rabi_mhz + libm::fabs(separation_mhz)).max(1e-9);
    let n = libm::ceil(duration_us * rate / 0.05);
    if !(n.is_finite()) || n > MAX_STEPS as f64 {
        return Err(Error::StepOverflow { steps: if n.is_finite() { n as u64 } else { u64::MAX } });
    }
    let n = (n as u64).max(1);
    Ok((n, duration_us / n as f64))
}

/// Phenomenological T1/T2 relaxation parameters, in microseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationParams {
    t1_us: f64,
    t2_us: f64,
}

impl RelaxationParams {
    pub fn new(t1_us: f64, t2_us: f64) -> Result<Self> {
        if !(t1_us > 0.0 && t2_us > 0.0 && t2_us <= 2.0 * t1_us) {
            return Err(Error::InvalidRelaxation { t1_us, t2_us });
        }
        Ok(Self { t1_us, t2_us })
    }

    /// T1 = 10.7 ms, T2 = 9.4 us.
    pub fn c70_triplet() -> Self {
        Self { t1_us: 10_700.0, t2_us: 9.4 }
    }

    pub fn t1_us(&self) -> f64 {
        self.t1_us
    }

    pub fn t2_us(&self) -> f64 {
        self.t2_us
    }
}

/// Linear relaxation map on a raw matrix: off-diagonals decay with T2,
/// diagonals relax toward the uniform population vector with T1. Works on
/// any matrix (trace is preserved), which lets tomography apply it to
/// non-state basis elements.
pub fn relaxation_map(m: &CMat3, t_us: f64, r: &RelaxationParams) -> CMat3 {
    let f1 = libm::exp(-t_us / r.t1_us);
    let f2 = libm::exp(-t_us / r.t2_us);
    let tr3 = (m[(0, 0)] + m[(1, 1)] + m[(2, 2)]) * cr(1.0 / 3.0);
    let mut out = CMat3::zeros();
    for a in 0..3 {
        for b in 0..3 {
            out[(a, b)] = if a == b {
                tr3 + (m[(a, a)] - tr3) * cr(f1)
            } else {
                m[(a, b)] * cr(f2)
            };
        }
    }
    out
}

/// Free evolution of a state for `t_us` under T1/T2 relaxation.
pub fn apply_relaxation(rho: &DensityMatrix, t_us: f64, r: &RelaxationParams) -> DensityMatrix {
    let m = relaxation_map(rho.matrix(), t_us, r);
    DensityMatrix::new(m).expect("relaxation preserves density-matrix invariants")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Pulse(PulseSpec),
    Delay(f64),
}

/// An ordered pulse/delay program with optional relaxation. Delays act as
/// pure relaxation (coherent free-evolution phases are absorbed into the
/// co-rotating frame).
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceProgram {
    steps: Vec<Step>,
    relaxation: Option<RelaxationParams>,
    /// Interleave relaxation with the integration steps of finite pulses.
    /// Off by default: pulse durations are far below T2.
    pub relax_during_finite_pulses: bool,
}

impl SequenceProgram {
    pub fn new(steps: Vec<Step>, relaxation: Option<RelaxationParams>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidProgram { reason: "empty program" });
        }
        for s in &steps {
            if let Step::Delay(d) = s {
                if !(d.is_finite() && *d >= 0.0) {
                    return Err(Error::InvalidProgram { reason: "delay must be finite and >= 0" });
                }
            }
        }
        Ok(Self { steps, relaxation, relax_during_finite_pulses: false })
    }

    pub fn from_pulses(pulses: Vec<PulseSpec>) -> Result<Self> {
        Self::new(pulses.into_iter().map(Step::Pulse).collect(), None)
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn relaxation(&self) -> Option<&RelaxationParams> {
        self.relaxation.as_ref()
    }

    pub fn pulses(&self) -> impl Iterator<Item = &PulseSpec> {
        self.steps.iter().filter_map(|s| match s {
            Step::Pulse(p) => Some(p),
            Step::Delay(_) => None,
        })
    }

    pub fn with_relaxation(mut self, r: Option<RelaxationParams>) -> Self {
        self.relaxation = r;
        self
    }

    /// Replaces every ideal pulse by a finite one at the given Rabi
    /// frequency; finite pulses are kept as they are.
    pub fn with_finite_model(mut self, rabi_mhz: f64) -> Result<Self> {
        for s in &mut self.steps {
            if let Step::Pulse(p) = s {
                if p.model == PulseModel::Ideal {
                    *p = PulseSpec::finite(p.transition, p.tip, p.phase, rabi_mhz)?;
                }
            }
        }
        Ok(self)
    }
}

/// Propagator of a single pulse under its model.
pub fn pulse_propagator(sys: &SpinSystem, p: &PulseSpec) -> Result<CMat3> {
    match p.model {
        PulseModel::Ideal => Ok(ideal_rotation(p.transition, p.tip, p.phase)),
        PulseModel::Finite { .. } => finite_pulse_propagator(sys, p),
    }
}

/// Left-to-right application of the program to a state.
pub fn run_sequence(
    rho0: &DensityMatrix,
    prog: &SequenceProgram,
    sys: &SpinSystem,
) -> Result<DensityMatrix> {
    let mut m = *rho0.matrix();
    for step in &prog.steps {
        match step {
            Step::Pulse(p) => {
                if prog.relax_during_finite_pulses {
                    if let (PulseModel::Finite { duration_us, rabi_mhz }, Some(r)) =
                        (p.model, prog.relaxation())
                    {
                        m = finite_pulse_with_relaxation(sys, p, &m, duration_us, rabi_mhz, r)?;
                        continue;
                    }
                }
                let u = pulse_propagator(sys, p)?;
                m = u * m * u.adjoint();
            }
            Step::Delay(d) => {
                if let Some(r) = prog.relaxation() {
                    m = relaxation_map(&m, *d, r);
                }
            }
        }
    }
    DensityMatrix::new(m)
}

fn finite_pulse_with_relaxation(
    sys: &SpinSystem,
    p: &PulseSpec,
    m0: &CMat3,
    duration_us: f64,
    rabi_mhz: f64,
    r: &RelaxationParams,
) -> Result<CMat3> {
    let separation = sys.transition_separation();
    let (nu_plus_block, nu_minus_block) = match p.transition {
        Transition::Plus => (0.0, separation),
        Transition::Minus => (-separation, 0.0),
    };
    let amp = if p.tip < 0.0 { -rabi_mhz / 2.0 } else { rabi_mhz / 2.0 };
    let (n_steps, dt) = step_schedule(duration_us, rabi_mhz, separation)?;
    let mut m = *m0;
    for k in 0..n_steps {
        let t = (k as f64 + 0.5) * dt;
        let mut h = CMat3::zeros();
        let a1 = TAU * nu_plus_block * t - p.phase;
        let a2 = TAU * nu_minus_block * t - p.phase;
        h[(0, 1)] = Complex64::new(libm::cos(a1), libm::sin(a1)) * cr(amp);
        h[(1, 2)] = Complex64::new(libm::cos(a2), libm::sin(a2)) * cr(amp);
        h[(1, 0)] = h[(0, 1)].conj();
        h[(2, 1)] = h[(1, 2)].conj();
        let u = exp_neg_i(&h, TAU * dt);
        m = u * m * u.adjoint();
        m = relaxation_map(&m, dt, r);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, unitarity_defect};
    use approx::assert_abs_diff_eq;

    fn test_system() -> SpinSystem {
        // 180 MHz transition separation, symmetric about f0
        SpinSystem::new(2.0037, 3299.0, 9250.5, 9160.5, 9340.5)
    }

    #[test]
    fn zero_tip_is_identity() {
        let u = ideal_rotation(Transition::Plus, 0.0, 1.2);
        assert!(max_abs_diff(&u, &CMat3::identity()) < 1e-15);
    }

    #[test]
    fn pi_pulse_flips_population() {
        let u = ideal_rotation(Transition::Plus, core::f64::consts::PI, 0.0);
        let rho = DensityMatrix::ground();
        let out = u * rho.matrix() * u.adjoint();
        assert_abs_diff_eq!(out[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[(2, 2)].re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn psi1_pulse_pair() {
        let u1 = ideal_rotation(Transition::Plus, core::f64::consts::FRAC_PI_2, 0.0);
        let u2 = ideal_rotation(Transition::Minus, core::f64::consts::PI, 0.0);
        let rho = DensityMatrix::ground();
        let out = u2 * u1 * rho.matrix() * u1.adjoint() * u2.adjoint();
        assert_abs_diff_eq!(out[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out[(1, 1)].re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[(2, 2)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out[(0, 2)].norm(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn propagators_are_unitary() {
        let sys = test_system();
        for &rabi in &[5.0, 20.0, 120.0] {
            let p = PulseSpec::finite(Transition::Plus, core::f64::consts::FRAC_PI_2, 0.4, rabi)
                .unwrap();
            let u = finite_pulse_propagator(&sys, &p).unwrap();
            assert!(unitarity_defect(&u) < 1e-8, "rabi {rabi}");
        }
    }

    // The deviation bounds are frozen from direct integration at a 180 MHz
    // transition separation with the spec'd tip = 2*pi*rabi*duration pulses.
    #[test]
    fn finite_approaches_ideal_in_selective_regime() {
        let sys = test_system();
        let ideal = ideal_rotation(Transition::Plus, core::f64::consts::FRAC_PI_2, 0.3);
        let mut prev = f64::INFINITY;
        let expected = [0.012, 0.048, 0.070];
        for (&rabi, &bound) in [20.0, 10.0, 5.0].iter().zip(expected.iter().rev()) {
            let p = PulseSpec::finite(Transition::Plus, core::f64::consts::FRAC_PI_2, 0.3, rabi)
                .unwrap();
            let u = finite_pulse_propagator(&sys, &p).unwrap();
            let dev = max_abs_diff(&u, &ideal);
            assert!(dev < bound, "rabi {rabi}: dev {dev} >= {bound}");
            assert!(dev < prev, "selectivity error must shrink as rabi decreases");
            prev = dev;
        }
    }

    #[test]
    fn strong_pulse_loses_selectivity() {
        let sys = test_system();
        let p =
            PulseSpec::finite(Transition::Plus, core::f64::consts::FRAC_PI_2, 0.0, 500.0).unwrap();
        let u = finite_pulse_propagator(&sys, &p).unwrap();
        let rho = DensityMatrix::ground();
        let out = u * rho.matrix() * u.adjoint();
        // bandwidth exceeds the 180 MHz splitting: spectator level populated
        assert!(out[(2, 2)].re > 0.01, "spectator population {}", out[(2, 2)].re);
    }

    #[test]
    fn zero_amplitude_pulse_is_free_evolution() {
        let sys = test_system();
        let p = PulseSpec::finite_with_duration(Transition::Plus, 0.0, 0.0, 0.0, 0.05);
        // zero rabi with zero tip is consistent; the propagator is the
        // identity in the co-rotating frame
        let p = match p {
            Ok(p) => p,
            Err(_) => return, // constructor may reject zero rabi; covered below
        };
        let u = finite_pulse_propagator(&sys, &p).unwrap();
        assert!(max_abs_diff(&u, &CMat3::identity()) < 1e-10);
    }

    #[test]
    fn inconsistent_tip_rejected() {
        assert!(PulseSpec::finite_with_duration(
            Transition::Plus,
            core::f64::consts::PI,
            0.0,
            20.0,
            1.0
        )
        .is_err());
    }

    #[test]
    fn relaxation_examples() {
        let r = RelaxationParams::c70_triplet();
        let psi1 = DensityMatrix::psi1_ideal();
        assert_eq!(apply_relaxation(&psi1, 0.0, &r), psi1);

        let out = apply_relaxation(&psi1, 40.0, &r);
        let expect = 0.5 * libm::exp(-40.0 / 9.4);
        assert_abs_diff_eq!(out.coherence(0, 2).norm(), expect, epsilon = 1e-12);
        assert!(out.coherence(0, 2).norm() < 0.0072);
        // populations barely move over 40 us << T1
        assert_abs_diff_eq!(out.populations()[0], 0.5, epsilon = 1e-3);

        let late = apply_relaxation(&psi1, 1e9, &r);
        for v in late.populations() {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn relaxation_semigroup() {
        let r = RelaxationParams::new(100.0, 12.0).unwrap();
        let rho = DensityMatrix::psi2_ideal();
        let a = apply_relaxation(&apply_relaxation(&rho, 7.0, &r), 13.0, &r);
        let b = apply_relaxation(&rho, 20.0, &r);
        assert!(max_abs_diff(a.matrix(), b.matrix()) < 1e-10);
    }

    #[test]
    fn reversion_restores_state() {
        let sys = test_system();
        let p = PulseSpec::ideal(Transition::Plus, 1.1, 0.0);
        let prog = SequenceProgram::from_pulses(alloc::vec![p, p.reverted()]).unwrap();
        let rho = DensityMatrix::psi2_ideal();
        let out = run_sequence(&rho, &prog, &sys).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-10);
    }

    #[test]
    fn delay_only_program_preserves_state_without_relaxation() {
        let sys = test_system();
        let prog = SequenceProgram::new(alloc::vec![Step::Delay(10.0)], None).unwrap();
        let rho = DensityMatrix::psi1_ideal();
        let out = run_sequence(&rho, &prog, &sys).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn sequence_preserves_purity_without_relaxation() {
        let sys = test_system();
        let prog = SequenceProgram::from_pulses(alloc::vec![
            PulseSpec::ideal(Transition::Plus, 0.7, 0.1),
            PulseSpec::ideal(Transition::Minus, 2.0, -0.6),
            PulseSpec::ideal(Transition::Plus, -1.3, 2.2),
        ])
        .unwrap();
        let rho = DensityMatrix::ground();
        let out = run_sequence(&rho, &prog, &sys).unwrap();
        assert_abs_diff_eq!(out.purity(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn invalid_relaxation_rejected() {
        assert!(RelaxationParams::new(-1.0, 1.0).is_err());
        assert!(RelaxationParams::new(1.0, 3.0).is_err());
        assert!(RelaxationParams::new(10.0, 20.0).is_ok());
    }
}
