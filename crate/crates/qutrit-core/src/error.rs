use core::fmt;

/// Errors produced by the simulation primitives.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// |E| exceeds |D|/3, violating the conventional ZFS ordering.
    ZfsConvention { d_mhz: f64, e_mhz: f64 },
    /// Orientation angles outside theta in [0, pi], phi in [0, 2*pi).
    InvalidOrientation { theta: f64, phi: f64 },
    /// No eigenvector overlaps a basis state strongly enough to label the
    /// levels in the high-field scheme.
    AmbiguousLabeling { best_overlap: f64 },
    /// A matrix failed the density-matrix invariant gate.
    InvalidDensityMatrix { reason: &'static str, value: f64 },
    /// Relaxation times must be positive with T2 <= 2*T1.
    InvalidRelaxation { t1_us: f64, t2_us: f64 },
    /// Pulse parameters are inconsistent (tip angle vs rabi * duration) or
    /// otherwise unusable.
    InvalidPulse { reason: &'static str },
    /// A finite pulse would require more integration steps than allowed.
    StepOverflow { steps: u64 },
    /// A sequence program was empty or contained a non-finite duration.
    InvalidProgram { reason: &'static str },
    /// The tomography measurement settings do not determine the state.
    SettingsIncomplete { rank: usize },
    /// Phase-to-time remapping is undefined for a zero offset frequency.
    RemapUndefined,
    /// Phase engineering is undefined for phi1 + phi2 = 0 or D_zz = 0.
    DegenerateEngineering,
    /// Pattern grids must be at least 8x8 with a power-of-two size.
    InvalidGrid { n: usize },
    /// An exponential fit failed to converge.
    FitDiverged,
    /// A requested window or range contained no data.
    EmptyWindow,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ZfsConvention { d_mhz, e_mhz } => write!(
                f,
                "|E| = {} MHz exceeds |D|/3 = {} MHz",
                if *e_mhz < 0.0 { -e_mhz } else { *e_mhz },
                libm::fabs(*d_mhz) / 3.0
            ),
            Error::InvalidOrientation { theta, phi } => {
                write!(f, "orientation out of range: theta = {theta}, phi = {phi}")
            }
            Error::AmbiguousLabeling { best_overlap } => write!(
                f,
                "cannot label eigenstates by M_S: best overlap {best_overlap} < 0.7 \
                 (outside the high-field regime)"
            ),
            Error::InvalidDensityMatrix { reason, value } => {
                write!(f, "invalid density matrix: {reason} ({value})")
            }
            Error::InvalidRelaxation { t1_us, t2_us } => {
                write!(f, "invalid relaxation times: T1 = {t1_us} us, T2 = {t2_us} us")
            }
            Error::InvalidPulse { reason } => write!(f, "invalid pulse: {reason}"),
            Error::StepOverflow { steps } => {
                write!(f, "finite pulse integration needs {steps} steps (limit 1e7)")
            }
            Error::InvalidProgram { reason } => write!(f, "invalid sequence program: {reason}"),
            Error::SettingsIncomplete { rank } => {
                write!(f, "tomography settings span rank {rank} < 8")
            }
            Error::RemapUndefined => write!(f, "TPPI remap undefined: offset frequency is zero"),
            Error::DegenerateEngineering => {
                write!(f, "phase engineering undefined for phi1 + phi2 = 0 or D_zz = 0")
            }
            Error::InvalidGrid { n } => {
                write!(f, "grid size {n} must be a power of two and at least 8")
            }
            Error::FitDiverged => write!(f, "exponential fit did not converge"),
            Error::EmptyWindow => write!(f, "window contains no data"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
