use anyhow::{bail, Context, Result};
use qutrit_core::linalg::CMat3;
use qutrit_core::PhasePattern;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Grid CSV with a corner label, the column axis in the header row and the
/// row axis in the first column.
pub fn write_grid_csv(
    path: &Path,
    corner: &str,
    col_axis: &[f64],
    row_axis: &[f64],
    values: &[f64],
) -> Result<()> {
    let mut out = String::from(corner);
    for c in col_axis {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for (i, r) in row_axis.iter().enumerate() {
        let _ = write!(out, "{r}");
        for j in 0..col_axis.len() {
            let _ = write!(out, ",{}", values[i * col_axis.len() + j]);
        }
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn write_rows_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = format!("{header}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    write_text(path, &out)
}

/// Reads a grid CSV written by `write_grid_csv` back into a phase pattern,
/// ignoring both axes (the pattern is defined on the canonical phase grid).
pub fn read_pattern_csv(path: &Path) -> Result<PhasePattern> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading pattern {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("pattern file is empty")?;
    let n_cols = header.split(',').count().saturating_sub(1);
    let mut values = Vec::new();
    let mut n_rows = 0usize;
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n_cols + 1 {
            bail!("pattern row {} has {} cells, expected {}", k + 2, cells.len(), n_cols + 1);
        }
        for c in &cells[1..] {
            values.push(
                c.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad number {c:?} in pattern row {}", k + 2))?,
            );
        }
        n_rows += 1;
    }
    if n_rows != n_cols {
        bail!("pattern grid is {n_rows}x{n_cols}, expected square");
    }
    Ok(PhasePattern::new(n_rows, values)?)
}

#[derive(Serialize)]
pub struct DensityJson {
    pub re: [[f64; 3]; 3],
    pub im: [[f64; 3]; 3],
}

impl DensityJson {
    pub fn from_matrix(m: &CMat3) -> Self {
        let mut re = [[0.0; 3]; 3];
        let mut im = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                re[i][j] = m[(i, j)].re;
                im[i][j] = m[(i, j)].im;
            }
        }
        Self { re, im }
    }
}
