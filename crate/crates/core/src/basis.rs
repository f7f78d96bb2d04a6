//! Tensor-product histogram basis on the unit cube.
//!
//! Each axis of `[0, 1]^k` is cut into `m` intervals of width `1/m`. The
//! first interval is closed, `[0, 1/m]`; every other interval is half-open,
//! `((i-1)/m, i/m]`, so interior boundaries belong to the lower cell.
//! Cells are linearized row-major over the per-axis indices.

use crate::error::{MnccError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    var_dim: usize,
    cells_per_axis: usize,
    total_cells: usize,
}

impl BasisSpec {
    pub fn new(var_dim: usize, cells_per_axis: usize) -> Result<Self> {
        if var_dim == 0 || cells_per_axis == 0 {
            return Err(MnccError::InvalidArgument(
                "basis dimension and cells per axis must be positive".into(),
            ));
        }
        let total_cells = (0..var_dim)
            .try_fold(1usize, |acc, _| acc.checked_mul(cells_per_axis))
            .ok_or_else(|| MnccError::InvalidArgument("basis too large".into()))?;
        Ok(Self {
            var_dim,
            cells_per_axis,
            total_cells,
        })
    }

    /// Basis with `total` cells on `[0,1]^var_dim`; `total` must be a perfect
    /// `var_dim`-th power.
    pub fn with_total_cells(var_dim: usize, total: usize) -> Result<Self> {
        if var_dim == 0 || total == 0 {
            return Err(MnccError::InvalidArgument(
                "basis dimension and cell count must be positive".into(),
            ));
        }
        let guess = (total as f64).powf(1.0 / var_dim as f64).round() as usize;
        for m in guess.saturating_sub(1).max(1)..=guess + 1 {
            if let Ok(spec) = Self::new(var_dim, m) {
                if spec.total_cells == total {
                    return Ok(spec);
                }
            }
        }
        Err(MnccError::InvalidArgument(format!(
            "{total} cells is not a perfect power of dimension {var_dim}"
        )))
    }

    pub fn var_dim(&self) -> usize {
        self.var_dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn total_cells(&self) -> usize {
        self.total_cells
    }
}

fn axis_cell(v: f64, m: usize) -> usize {
    // ceil(v*m) - 1 with the closed first cell; the comparison against the
    // exact boundary fixes rounding in v*m.
    if v <= 0.0 {
        return 0;
    }
    let mut i = (v * m as f64).ceil() as usize;
    i = i.clamp(1, m);
    if i > 1 && v <= (i - 1) as f64 / m as f64 {
        i -= 1;
    } else if i < m && v > i as f64 / m as f64 {
        i += 1;
    }
    i - 1
}

/// Zero-based linear index of the cell containing `x`.
pub fn cell_index0(x: &[f64], spec: &BasisSpec) -> Result<usize> {
    if x.len() != spec.var_dim {
        return Err(MnccError::InvalidArgument(format!(
            "point has {} coordinates, basis expects {}",
            x.len(),
            spec.var_dim
        )));
    }
    let m = spec.cells_per_axis;
    let mut idx = 0usize;
    for &v in x {
        if !(0.0..=1.0).contains(&v) {
            return Err(MnccError::Domain(format!("basis coordinate {v} outside [0, 1]")));
        }
        idx = idx * m + axis_cell(v, m);
    }
    Ok(idx)
}

/// One-based cell index, in `1..=total_cells`.
pub fn cell_index(x: &[f64], spec: &BasisSpec) -> Result<usize> {
    cell_index0(x, spec).map(|i| i + 1)
}

/// One-hot indicator vector of the cell containing `x`.
pub fn evaluate_basis(x: &[f64], spec: &BasisSpec) -> Result<Vec<f64>> {
    let i = cell_index0(x, spec)?;
    let mut out = vec![0.0; spec.total_cells];
    out[i] = 1.0;
    Ok(out)
}

/// Coefficients `a` with `a · basis(x) = 1` for every `x`.
pub fn partition_coefficients(spec: &BasisSpec) -> Vec<f64> {
    vec![1.0; spec.total_cells]
}
