//! Simulation core for pulsed-EPR manipulation of a spin-1 qutrit: the
//! photoexcited triplet sublevels (|+>, |0>, |->) of a molecule with
//! zero-field splitting, driven by transition-selective microwave pulses.
//!
//! Functionality: Hamiltonian and transition frequencies (`spin`),
//! phase-controlled pulse propagation with T1/T2 relaxation (`pulse`),
//! superposition preparation, tomography and fidelity (`tomo`),
//! two-dimensional phase-interference patterns with Fourier and TPPI/torus
//! analysis (`interference`), powder field-sweep spectra (`spectrum`) and
//! exponential relaxation fits (`fit`).
//!
//! Units throughout: frequencies in MHz, fields in Gauss, times in
//! microseconds, angles in radians.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod fit;
pub mod interference;
pub mod linalg;
pub mod pulse;
pub mod spectrum;
pub mod spin;
pub mod state;
pub mod tomo;

pub use error::{Error, Result};
pub use interference::{
    analytic_pattern, evolution_trace, fourier_peaks, interference_pattern, phase_engineering,
    torus_path, tppi_remap, ClosureReport, EvolutionSchedule, FourierPeaks, NoiseSpec,
    PhaseEngineering, PhasePattern, PreparedState, TimeGrid, TorusPath,
};
pub use pulse::{
    apply_relaxation, finite_pulse_propagator, ideal_rotation, run_sequence, PulseModel,
    PulseSpec, RelaxationParams, SequenceProgram, Step, Transition,
};
pub use spectrum::{
    dzz_mode, orientation_selection, powder_spectrum, SelectedOrientation, SpectrumResult,
};
pub use spin::{
    hamiltonian, labeled_levels, resonance_field, transition_frequencies, LabTensor, Orientation,
    SpinSystem, ZfsParameters, BOHR_MAGNETON_MHZ_PER_G,
};
pub use state::DensityMatrix;
pub use tomo::{
    fidelity, measure_population_difference, prepare_psi1, prepare_psi2, purity, tomography,
    tomography_of_state, TomographyResult, READOUT_DELAY_US,
};
