use anyhow::{bail, Context, Result};
use qutrit_core::{
    LabTensor, Orientation, PreparedState, RelaxationParams, SpinSystem, ZfsParameters,
};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<RelaxationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulses: Option<PulseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub g: f64,
    #[serde(rename = "B0_gauss")]
    pub b0_gauss: f64,
    #[serde(rename = "f0_MHz")]
    pub f0_mhz: f64,
    #[serde(rename = "D_MHz")]
    pub d_mhz: f64,
    #[serde(rename = "E_MHz")]
    pub e_mhz: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationConfig {
    pub t1_us: f64,
    pub t2_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseModelKind {
    Ideal,
    Finite,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub model: PulseModelKind,
    #[serde(rename = "rabi_MHz", default = "default_rabi")]
    pub rabi_mhz: f64,
}

fn default_rabi() -> f64 {
    20.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Psi1,
    Psi2,
}

impl StateKind {
    pub fn prepared(self) -> PreparedState {
        match self {
            StateKind::Psi1 => PreparedState::Psi1,
            StateKind::Psi2 => PreparedState::Psi2,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PatternConfig {
    #[serde(default = "default_grid")]
    pub grid_n: usize,
    #[serde(default)]
    pub state: Option<StateKind>,
    #[serde(default)]
    pub noise_sigma: f64,
}

fn default_grid() -> usize {
    64
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(rename = "delta_f_plus_MHz", default, skip_serializing_if = "Option::is_none")]
    pub delta_f_plus_mhz: Option<f64>,
    #[serde(rename = "delta_f_minus_MHz", default, skip_serializing_if = "Option::is_none")]
    pub delta_f_minus_mhz: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let s = &self.system;
        for (name, v) in [("g", s.g), ("B0_gauss", s.b0_gauss), ("f0_MHz", s.f0_mhz)] {
            if !(v > 0.0) {
                bail!("system.{name} must be positive, got {v}");
            }
        }
        if let Some(r) = &self.relaxation {
            if !(r.t1_us > 0.0) || !(r.t2_us > 0.0) {
                bail!("relaxation times must be positive");
            }
        }
        if let Some(p) = &self.pulses {
            if !(p.rabi_mhz > 0.0) {
                bail!("pulses.rabi_MHz must be positive, got {}", p.rabi_mhz);
            }
        }
        if let Some(p) = &self.pattern {
            if !(p.noise_sigma >= 0.0) {
                bail!("pattern.noise_sigma must be non-negative, got {}", p.noise_sigma);
            }
        }
        if let Some(sch) = &self.schedule {
            let explicit = sch.delta_f_plus_mhz.is_some() || sch.delta_f_minus_mhz.is_some();
            if sch.ratio.is_some() && explicit {
                bail!("schedule: give either ratio or explicit detunings, not both");
            }
            if explicit && (sch.delta_f_plus_mhz.is_none() || sch.delta_f_minus_mhz.is_none()) {
                bail!("schedule: explicit detunings need both delta_f_plus_MHz and delta_f_minus_MHz");
            }
        }
        Ok(())
    }

    /// Lab-frame tensor and spin system at the configured operating point.
    /// Drive frequencies are the exact transition frequencies; the detection
    /// frequency is taken from the config rather than recomputed.
    pub fn build(&self) -> Result<(ZfsParameters, LabTensor, SpinSystem)> {
        let s = &self.system;
        let zfs = ZfsParameters::new(s.d_mhz, s.e_mhz)?;
        let o = Orientation::from_degrees(s.theta_deg, s.phi_deg)?;
        let lab = LabTensor::principal(&zfs).rotate_to_lab(&o).with_drive_sign_convention();
        let mut sys = SpinSystem::from_lab_tensor(s.g, s.b0_gauss, &lab)?;
        sys.f0_mhz = s.f0_mhz;
        Ok((zfs, lab, sys))
    }

    pub fn relaxation_params(&self) -> Result<Option<RelaxationParams>> {
        match &self.relaxation {
            Some(r) => Ok(Some(RelaxationParams::new(r.t1_us, r.t2_us)?)),
            None => Ok(None),
        }
    }

    /// Finite-model Rabi frequency, or None for ideal pulses.
    pub fn finite_rabi(&self) -> Option<f64> {
        match &self.pulses {
            Some(p) if p.model == PulseModelKind::Finite => Some(p.rabi_mhz),
            _ => None,
        }
    }
}
