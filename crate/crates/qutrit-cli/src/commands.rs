use crate::config::{ExperimentConfig, StateKind};
use crate::formats::{
    read_pattern_csv, write_grid_csv, write_json, write_rows_csv, DensityJson,
};
use anyhow::{bail, Context, Result};
use qutrit_core::spin::{hamiltonian_matrix, labeled_levels, resonance_field};
use qutrit_core::{
    dzz_mode, fidelity, fourier_peaks, interference_pattern, orientation_selection,
    powder_spectrum, prepare_psi1, prepare_psi2, run_sequence, tomography, torus_path,
    tppi_remap, ClosureReport, DensityMatrix, EvolutionSchedule, NoiseSpec, SequenceProgram,
};
use serde::Serialize;
use std::path::{Path, PathBuf};

const DEG: f64 = 180.0 / std::f64::consts::PI;

pub fn out_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    cfg.output
        .as_ref()
        .and_then(|o| o.directory.as_deref())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn cmd_levels(cfg: &ExperimentConfig, out: &Path, grid: usize) -> Result<()> {
    if grid < 2 {
        bail!("levels needs a grid of at least 2 points, got {grid}");
    }
    let (_, lab, sys) = cfg.build()?;
    let b_max = 2.0 * sys.b0_gauss;
    let mut rows = Vec::with_capacity(grid);
    for k in 0..grid {
        let b = b_max * k as f64 / (grid - 1) as f64;
        let h = hamiltonian_matrix(sys.g_factor, b, &lab);
        let [e_plus, e_zero, e_minus] = labeled_levels(&h);
        rows.push(vec![b, e_plus, e_zero, e_minus]);
    }
    write_rows_csv(&out.join("levels.csv"), "B0_gauss,E_plus_MHz,E_zero_MHz,E_minus_MHz", &rows)
}

#[derive(Serialize)]
struct SelectionJson {
    window_gauss: [f64; 2],
    #[serde(rename = "dzz_mode_MHz", skip_serializing_if = "Option::is_none")]
    dzz_mode_mhz: Option<f64>,
    orientations: Vec<SelectedJson>,
}

#[derive(Serialize)]
struct SelectedJson {
    theta_deg: f64,
    phi_deg: f64,
    #[serde(rename = "dzz_MHz")]
    dzz_mhz: f64,
}

pub fn cmd_edfs(cfg: &ExperimentConfig, out: &Path, grid: usize) -> Result<()> {
    const N_ORIENTATIONS: usize = 5000;
    const FWHM_GAUSS: f64 = 15.0;
    let (zfs, _, sys) = cfg.build()?;
    let center = resonance_field(sys.f0_mhz, sys.g_factor);
    let spec = powder_spectrum(
        &sys,
        &zfs,
        (center - 150.0, center + 150.0),
        grid.max(2),
        N_ORIENTATIONS,
        FWHM_GAUSS,
    )?;
    let rows: Vec<Vec<f64>> = spec
        .field_gauss
        .iter()
        .zip(&spec.intensity)
        .map(|(&b, &i)| vec![b, i])
        .collect();
    write_rows_csv(&out.join("spectrum.csv"), "B_gauss,intensity", &rows)?;

    let window = (sys.b0_gauss - 64.0, sys.b0_gauss + 64.0);
    let selected = orientation_selection(&sys, &zfs, window, N_ORIENTATIONS)?;
    let orientations = selected
        .iter()
        .map(|s| SelectedJson {
            theta_deg: s.theta * DEG,
            phi_deg: s.phi * DEG,
            dzz_mhz: s.d_zz_mhz,
        })
        .collect();
    write_json(
        &out.join("selection.json"),
        &SelectionJson {
            window_gauss: [window.0, window.1],
            dzz_mode_mhz: dzz_mode(&selected, 4.0),
            orientations,
        },
    )
}

fn preparation(cfg: &ExperimentConfig, state: StateKind) -> Result<SequenceProgram> {
    let prog = match state {
        StateKind::Psi1 => prepare_psi1(),
        StateKind::Psi2 => prepare_psi2(),
    };
    let prog = match cfg.finite_rabi() {
        Some(rabi) => prog.with_finite_model(rabi)?,
        None => prog,
    };
    Ok(match cfg.relaxation_params()? {
        Some(r) => prog.with_relaxation(Some(r)),
        None => prog,
    })
}

fn ideal_state(state: StateKind) -> DensityMatrix {
    match state {
        StateKind::Psi1 => DensityMatrix::psi1_ideal(),
        StateKind::Psi2 => DensityMatrix::psi2_ideal(),
    }
}

pub fn cmd_prepare(cfg: &ExperimentConfig, out: &Path, state: StateKind) -> Result<()> {
    let (_, _, sys) = cfg.build()?;
    let prog = preparation(cfg, state)?;
    let rho = run_sequence(&DensityMatrix::ground(), &prog, &sys)?;
    write_json(&out.join("density.json"), &DensityJson::from_matrix(rho.matrix()))
}

#[derive(Serialize)]
struct TomographyJson {
    re: [[f64; 3]; 3],
    im: [[f64; 3]; 3],
    fidelity: f64,
    purity: f64,
    residual: f64,
}

pub fn cmd_tomo(cfg: &ExperimentConfig, out: &Path, state: StateKind) -> Result<()> {
    let (_, _, sys) = cfg.build()?;
    let prog = preparation(cfg, state)?;
    let relax = cfg.relaxation_params()?;
    let res = tomography(&prog, &sys, relax.as_ref(), cfg.finite_rabi())?;
    let ideal = ideal_state(state);
    let d = DensityJson::from_matrix(res.rho.matrix());
    write_json(
        &out.join("tomography.json"),
        &TomographyJson {
            re: d.re,
            im: d.im,
            fidelity: fidelity(&res.rho, &ideal)?,
            purity: res.rho.purity(),
            residual: res.residual,
        },
    )?;
    let mut rows = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            let v = res.rho.matrix()[(i, j)];
            let w = ideal.matrix()[(i, j)];
            rows.push(vec![i as f64, j as f64, v.re, v.im, w.re, w.im]);
        }
    }
    write_rows_csv(&out.join("tomography.csv"), "row,col,re,im,ideal_re,ideal_im", &rows)
}

#[derive(Serialize)]
struct PatternMeta {
    grid_n: usize,
    state: StateKind,
    noise_sigma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(rename = "rabi_MHz", skip_serializing_if = "Option::is_none")]
    rabi_mhz: Option<f64>,
}

pub fn cmd_interfere(
    cfg: &ExperimentConfig,
    out: &Path,
    grid: Option<usize>,
    state: Option<StateKind>,
    seed: u64,
) -> Result<()> {
    let (_, _, sys) = cfg.build()?;
    let pat = cfg.pattern.as_ref();
    let n = grid.or(pat.map(|p| p.grid_n)).unwrap_or(64);
    let state = state.or(pat.and_then(|p| p.state)).unwrap_or(StateKind::Psi1);
    let sigma = pat.map(|p| p.noise_sigma).unwrap_or(0.0);
    let noise = (sigma > 0.0).then_some(NoiseSpec { sigma, seed });
    let rabi = cfg.finite_rabi();
    let relax = cfg.relaxation_params()?;
    let p = interference_pattern(state.prepared(), n, &sys, rabi, relax.as_ref(), noise.as_ref())?;
    let axis = p.phi_axis();
    write_grid_csv(
        &out.join("pattern.csv"),
        "phi_plus_rad\\phi_minus_rad",
        &axis,
        &axis,
        p.values(),
    )?;
    write_json(
        &out.join("pattern_meta.json"),
        &PatternMeta {
            grid_n: n,
            state,
            noise_sigma: sigma,
            seed: noise.map(|n| n.seed),
            rabi_mhz: rabi,
        },
    )
}

#[derive(Serialize)]
struct PeakJson {
    k_plus: i32,
    k_minus: i32,
    magnitude: f64,
}

pub fn cmd_fft(pattern: &Path, out: &Path) -> Result<()> {
    let p = read_pattern_csv(pattern)?;
    let peaks = fourier_peaks(&p, 1e-6);
    let list: Vec<PeakJson> = peaks
        .entries()
        .iter()
        .map(|(&(k_plus, k_minus), &magnitude)| PeakJson { k_plus, k_minus, magnitude })
        .collect();
    write_json(&out.join("peaks.json"), &list)
}

pub fn schedule(cfg: &ExperimentConfig, ratio_flag: Option<f64>) -> Result<EvolutionSchedule> {
    let (_, lab, _) = cfg.build()?;
    if let Some(r) = ratio_flag {
        return Ok(EvolutionSchedule::for_d_zz(lab.d_zz(), r)?);
    }
    let sch = cfg
        .schedule
        .as_ref()
        .context("no schedule in config and no --ratio given")?;
    if let Some(r) = sch.ratio {
        return Ok(EvolutionSchedule::for_d_zz(lab.d_zz(), r)?);
    }
    match (sch.delta_f_plus_mhz, sch.delta_f_minus_mhz) {
        (Some(p), Some(m)) => Ok(EvolutionSchedule::new(p, m)),
        _ => bail!("schedule needs ratio or both explicit detunings"),
    }
}

pub fn cmd_tppi(
    cfg: &ExperimentConfig,
    pattern: &Path,
    out: &Path,
    ratio: Option<f64>,
) -> Result<()> {
    let p = read_pattern_csv(pattern)?;
    let s = schedule(cfg, ratio)?;
    let grid = tppi_remap(&p, &s)?;
    write_grid_csv(
        &out.join("remap.csv"),
        "t_plus_us\\t_minus_us",
        &grid.t_minus_us,
        &grid.t_plus_us,
        &grid.values,
    )?;
    // two periods of the slower detuning, sampled well above the grid rate
    let slow = s.delta_f_plus_mhz.abs().min(s.delta_f_minus_mhz.abs());
    if !(slow > 0.0) {
        bail!("schedule has a zero detuning; no evolution trace");
    }
    let trace = qutrit_core::evolution_trace(&p, &s, 2.0 / slow, 512)?;
    let rows: Vec<Vec<f64>> = trace.iter().map(|&(t, v)| vec![t, v]).collect();
    write_rows_csv(&out.join("trace.csv"), "t_us,M0plus", &rows)
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum ClosureJson {
    Closed { p: i64, q: i64, closure_time_us: f64 },
    Incommensurate { min_return_distance: f64 },
}

pub fn cmd_torus(
    cfg: &ExperimentConfig,
    out: &Path,
    ratio: Option<f64>,
    t_max_us: f64,
    samples: usize,
) -> Result<()> {
    let s = schedule(cfg, ratio)?;
    let path = torus_path(&s, t_max_us, samples)?;
    let rows: Vec<Vec<f64>> =
        path.samples.iter().map(|&(t, p1, p2)| vec![t, p1, p2]).collect();
    write_rows_csv(&out.join("path.csv"), "t_us,phi1_rad,phi2_rad", &rows)?;
    let closure = match path.closure {
        ClosureReport::Closed { p, q, closure_time_us } => {
            ClosureJson::Closed { p, q, closure_time_us }
        }
        ClosureReport::Incommensurate { min_return_distance } => {
            ClosureJson::Incommensurate { min_return_distance }
        }
    };
    write_json(&out.join("closure.json"), &closure)
}
