//! Kernel estimate of the maximal nonlinear conditional correlation at a
//! point `z`, restricted to the histogram bases on X and Y.
//!
//! With `X*`, `Y*` the basis vectors of a row drawn with probability
//! proportional to its kernel weight at `z`, the conditional moment
//! matrices are `V11 = E X*X*ᵀ`, `V12 = E X*Y*ᵀ` and `V22 = E Y*Y*ᵀ`.
//! The estimate is the second singular value of the whitened cross-moment
//! matrix `V11^{-1/2} V12 V22^{-1/2}`; the leading singular value is the
//! trivial correlation 1 of the constant functions. The same number is the
//! square root of the largest eigenvalue of
//! `V12 V22⁻¹ V21 V11⁻¹ - V11 a aᵀ`, which [`rho_hat_eigen`] evaluates as a
//! cross-check.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{cell_index0, BasisSpec};
use crate::error::{MnccError, Result};
use crate::kernel::{kde_from_raw_sum, normalized_weights, KernelConfig};
use crate::linalg::{sym_apply, sym_eigen, trace};
use crate::quad::integrate;
use crate::sample::Sample;
use crate::special::normal_cdf;

/// Regularized matrices with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Ridge added to `V11` and `V22` before inversion: `relative · trace / dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub relative: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Self { relative: 1e-10 }
    }
}

impl Regularization {
    pub fn none() -> Self {
        Self { relative: 0.0 }
    }

    fn ridge_for(&self, m: &DMatrix<f64>) -> f64 {
        self.relative * trace(m) / m.nrows() as f64
    }

    fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let r = self.ridge_for(m);
        m + DMatrix::<f64>::identity(m.nrows(), m.ncols()) * r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMoments {
    pub v11: DMatrix<f64>,
    pub v12: DMatrix<f64>,
    pub v22: DMatrix<f64>,
}

impl ConditionalMoments {
    pub fn p(&self) -> usize {
        self.v11.nrows()
    }

    pub fn q(&self) -> usize {
        self.v22.nrows()
    }

    /// Moments with the roles of X and Y exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            v11: self.v22.clone(),
            v12: self.v12.transpose(),
            v22: self.v11.clone(),
        }
    }

    /// Moments of one-hot bases from cell labels and normalized weights.
    pub fn from_weighted_cells(cells_x: &[usize], cells_y: &[usize], weights: &[f64], p: usize, q: usize) -> Self {
        let mut v12 = DMatrix::<f64>::zeros(p, q);
        for ((&i, &j), &w) in cells_x.iter().zip(cells_y).zip(weights) {
            v12[(i, j)] += w;
        }
        let row: Vec<f64> = (0..p).map(|i| v12.row(i).sum()).collect();
        let col: Vec<f64> = (0..q).map(|j| v12.column(j).sum()).collect();
        Self {
            v11: DMatrix::from_diagonal(&DVector::from_vec(row)),
            v12,
            v22: DMatrix::from_diagonal(&DVector::from_vec(col)),
        }
    }
}

/// Zero-based basis cells of every observation.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAssignments {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub p: usize,
    pub q: usize,
}

pub fn assign_cells(sample: &Sample, bx: &BasisSpec, by: &BasisSpec) -> Result<CellAssignments> {
    let x = (0..sample.n())
        .map(|i| cell_index0(sample.x_row(i), bx))
        .collect::<Result<Vec<_>>>()?;
    let y = (0..sample.n())
        .map(|i| cell_index0(sample.y_row(i), by))
        .collect::<Result<Vec<_>>>()?;
    Ok(CellAssignments {
        x,
        y,
        p: bx.total_cells(),
        q: by.total_cells(),
    })
}

/// Kernel plug-in estimates of `V11`, `V12`, `V22` at `z`.
pub fn estimate_moments(
    sample: &Sample,
    bx: &BasisSpec,
    by: &BasisSpec,
    z: &[f64],
    cfg: &KernelConfig,
) -> Result<ConditionalMoments> {
    let cells = assign_cells(sample, bx, by)?;
    let w = normalized_weights(z, sample.z_values(), cfg)?;
    Ok(ConditionalMoments::from_weighted_cells(
        &cells.x,
        &cells.y,
        &w.normalized,
        cells.p,
        cells.q,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoParts {
    pub rho: f64,
    pub rho_squared_raw: f64,
}

impl RhoParts {
    fn from_raw(raw: f64) -> Self {
        Self {
            rho: clip_rho(raw),
            rho_squared_raw: raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub z: Vec<f64>,
    pub fz_hat: f64,
    pub rho: f64,
    pub rho_squared_raw: f64,
}

/// `sqrt` of the squared correlation clipped to `[0, 1]`.
pub fn clip_rho(rho_squared_raw: f64) -> f64 {
    rho_squared_raw.clamp(0.0, 1.0).sqrt()
}

fn inverse_sqrt(m: &DMatrix<f64>, reg: &Regularization) -> Result<DMatrix<f64>> {
    let e = sym_eigen(&reg.apply(m));
    let hi = e.values[0];
    let lo = *e.values.last().expect("non-empty");
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(MnccError::SingularMoments {
            condition: if lo > 0.0 { hi / lo } else { f64::INFINITY },
        });
    }
    Ok(sym_apply(&e, |v| 1.0 / v.sqrt()))
}

/// `V11^{-1/2} V12 V22^{-1/2}` with regularized `V11`, `V22`.
pub fn whitened_cross_moments(m: &ConditionalMoments, reg: &Regularization) -> Result<DMatrix<f64>> {
    let w1 = inverse_sqrt(&m.v11, reg)?;
    let w2 = inverse_sqrt(&m.v22, reg)?;
    Ok(w1 * &m.v12 * w2)
}

/// Squared singular values of `b`, descending.
fn squared_singular_values(b: &DMatrix<f64>) -> Vec<f64> {
    let gram = if b.nrows() <= b.ncols() {
        b * b.transpose()
    } else {
        b.transpose() * b
    };
    sym_eigen(&gram).values
}

/// The estimate from the whitened cross-moment matrix.
pub fn rho_hat(m: &ConditionalMoments, reg: &Regularization) -> Result<RhoParts> {
    let b = whitened_cross_moments(m, reg)?;
    let s2 = squared_singular_values(&b);
    let raw = s2.get(1).copied().unwrap_or(0.0);
    Ok(RhoParts::from_raw(raw))
}

fn checked_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    let hi = eig.eigenvalues.max();
    let lo = eig.eigenvalues.min();
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(MnccError::SingularMoments {
            condition: if lo > 0.0 { hi / lo } else { f64::INFINITY },
        });
    }
    m.clone().try_inverse().ok_or(MnccError::SingularMoments {
        condition: f64::INFINITY,
    })
}

/// `V12 (V22+r)⁻¹ V21 (V11+r)⁻¹ - V11 a aᵀ`.
pub fn g_matrix(m: &ConditionalMoments, a_star: &[f64], reg: &Regularization) -> Result<DMatrix<f64>> {
    if a_star.len() != m.p() {
        return Err(MnccError::InvalidArgument(format!(
            "partition coefficients have length {}, expected {}",
            a_star.len(),
            m.p()
        )));
    }
    let inv11 = checked_inverse(&reg.apply(&m.v11))?;
    let inv22 = checked_inverse(&reg.apply(&m.v22))?;
    let a = DVector::from_column_slice(a_star);
    Ok(&m.v12 * inv22 * m.v12.transpose() * inv11 - &m.v11 * &a * a.transpose())
}

/// The estimate from the largest eigenvalue of [`g_matrix`].
pub fn rho_hat_eigen(m: &ConditionalMoments, a_star: &[f64], reg: &Regularization) -> Result<RhoParts> {
    let g = g_matrix(m, a_star, reg)?;
    let eig = g.complex_eigenvalues();
    let top = eig
        .iter()
        .max_by(|x, y| x.re.total_cmp(&y.re))
        .copied()
        .ok_or_else(|| MnccError::Numerical("empty spectrum".into()))?;
    if top.im.abs() > 1e-8 {
        return Err(MnccError::Numerical(format!(
            "leading eigenvalue has imaginary part {:e}",
            top.im
        )));
    }
    Ok(RhoParts::from_raw(top.re))
}

/// Estimate at a single point, including `f̂_Z(z)`.
pub fn estimate_rho(
    sample: &Sample,
    bx: &BasisSpec,
    by: &BasisSpec,
    z: &[f64],
    cfg: &KernelConfig,
    reg: &Regularization,
) -> Result<RhoEstimate> {
    let cells = assign_cells(sample, bx, by)?;
    estimate_rho_with_cells(sample, &cells, z, cfg, reg)
}

pub(crate) fn estimate_rho_with_cells(
    sample: &Sample,
    cells: &CellAssignments,
    z: &[f64],
    cfg: &KernelConfig,
    reg: &Regularization,
) -> Result<RhoEstimate> {
    let w = normalized_weights(z, sample.z_values(), cfg)?;
    let m = ConditionalMoments::from_weighted_cells(&cells.x, &cells.y, &w.normalized, cells.p, cells.q);
    let parts = rho_hat(&m, reg)?;
    Ok(RhoEstimate {
        z: z.to_vec(),
        fz_hat: kde_from_raw_sum(w.raw_sum, sample.n(), cfg),
        rho: parts.rho,
        rho_squared_raw: parts.rho_squared_raw,
    })
}

/// Two-cell population value for a bivariate normal pair with correlation
/// `rho_xy`: `|corr(1{X≤0}, 1{Y≤0})| = (2/π)|asin ρ|`.
pub fn rho_population_bvn(rho_xy: f64) -> f64 {
    (2.0 / std::f64::consts::PI * rho_xy.clamp(-1.0, 1.0).asin()).abs()
}

/// `E ρ²(Z)` for the two-cell bases when `U = Φ(Z)` is uniform and the
/// conditional correlation is `a|1 - 2U|`.
pub fn mean_rho_squared_uniform(a: f64) -> f64 {
    integrate(
        |u| rho_population_bvn(a * (1.0 - 2.0 * u).abs()).powi(2),
        0.0,
        1.0,
        1e-14,
    )
}

/// As [`mean_rho_squared_uniform`] but with `U = Φ(Z0)`, `Z0` standard
/// Cauchy.
pub fn mean_rho_squared_cauchy(a: f64) -> f64 {
    // Z0 = tan(π(V - 1/2)) with V uniform
    integrate(
        |v| {
            let z0 = (std::f64::consts::PI * (v - 0.5)).tan();
            rho_population_bvn(a * (1.0 - 2.0 * normal_cdf(z0)).abs()).powi(2)
        },
        0.0,
        1.0,
        1e-14,
    )
}
