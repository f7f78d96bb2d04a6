use crate::error::{MnccError, Result};

/// `n` observations of `(x, y, z)` stored row-major, one flat buffer per
/// variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    n: usize,
    dx: usize,
    dy: usize,
    dz: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl Sample {
    pub fn new(dx: usize, dy: usize, dz: usize, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        if dx == 0 || dy == 0 || dz == 0 {
            return Err(MnccError::InvalidArgument("dimensions must be positive".into()));
        }
        if !x.len().is_multiple_of(dx) {
            return Err(MnccError::InvalidArgument("x buffer is not a multiple of d_x".into()));
        }
        let n = x.len() / dx;
        if n == 0 {
            return Err(MnccError::InvalidArgument("sample is empty".into()));
        }
        if y.len() != n * dy || z.len() != n * dz {
            return Err(MnccError::InvalidArgument(format!(
                "inconsistent row counts: x has {n} rows, y has {} values, z has {} values",
                y.len(),
                z.len()
            )));
        }
        if x.iter().chain(&y).chain(&z).any(|v| !v.is_finite()) {
            return Err(MnccError::InvalidArgument(
                "sample contains NaN or infinite values".into(),
            ));
        }
        Ok(Self { n, dx, dy, dz, x, y, z })
    }

    /// One-dimensional sample from three equal-length columns.
    pub fn from_columns(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        Self::new(1, 1, 1, x, y, z)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dx(&self) -> usize {
        self.dx
    }
    pub fn dy(&self) -> usize {
        self.dy
    }
    pub fn dz(&self) -> usize {
        self.dz
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dx..(i + 1) * self.dx]
    }
    pub fn y_row(&self, i: usize) -> &[f64] {
        &self.y[i * self.dy..(i + 1) * self.dy]
    }
    pub fn z_row(&self, i: usize) -> &[f64] {
        &self.z[i * self.dz..(i + 1) * self.dz]
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x
    }
    pub fn y_values(&self) -> &[f64] {
        &self.y
    }
    pub fn z_values(&self) -> &[f64] {
        &self.z
    }

    pub fn in_unit_cube(&self) -> bool {
        self.x
            .iter()
            .chain(&self.y)
            .chain(&self.z)
            .all(|v| (0.0..=1.0).contains(v))
    }

    /// New sample made of the given rows of `self`, X, Y and Z rows chosen
    /// independently.
    pub fn gather(&self, x_rows: &[usize], y_rows: &[usize], z_rows: &[usize]) -> Sample {
        assert!(x_rows.len() == y_rows.len() && y_rows.len() == z_rows.len());
        let pick = |buf: &[f64], d: usize, rows: &[usize]| -> Vec<f64> {
            rows.iter()
                .flat_map(|&r| buf[r * d..(r + 1) * d].iter().copied())
                .collect()
        };
        Sample {
            n: x_rows.len(),
            dx: self.dx,
            dy: self.dy,
            dz: self.dz,
            x: pick(&self.x, self.dx, x_rows),
            y: pick(&self.y, self.dy, y_rows),
            z: pick(&self.z, self.dz, z_rows),
        }
    }

    /// Rows of `self` in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Sample {
        self.gather(rows, rows, rows)
    }

    /// Apply `f` to every coordinate.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Sample {
        Sample {
            x: self.x.iter().map(|&v| f(v)).collect(),
            y: self.y.iter().map(|&v| f(v)).collect(),
            z: self.z.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Concatenate rows of two samples with matching dimensions.
    pub fn concat(&self, other: &Sample) -> Result<Sample> {
        if (self.dx, self.dy, self.dz) != (other.dx, other.dy, other.dz) {
            return Err(MnccError::InvalidArgument("dimension mismatch".into()));
        }
        let join = |a: &[f64], b: &[f64]| a.iter().chain(b).copied().collect::<Vec<_>>();
        Ok(Sample {
            n: self.n + other.n,
            dx: self.dx,
            dy: self.dy,
            dz: self.dz,
            x: join(&self.x, &other.x),
            y: join(&self.y, &other.y),
            z: join(&self.z, &other.z),
        })
    }
}
