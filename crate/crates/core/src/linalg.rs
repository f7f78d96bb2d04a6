//! Small dense symmetric eigensolver (cyclic Jacobi).
//!
//! The matrices handled here are at most a few dozen rows, so the Jacobi
//! method is accurate to working precision and fast enough.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector of `values[k]`.
    pub vectors: DMatrix<f64>,
}

/// Eigen-decomposition of the symmetric part of `a`.
pub fn sym_eigen(a: &DMatrix<f64>) -> SymEigen {
    assert!(a.is_square(), "sym_eigen needs a square matrix");
    let n = a.nrows();
    let mut m = (a + a.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        let scale: f64 = m.iter().map(|x| x * x).sum();
        if off <= 1e-32 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymEigen { values, vectors }
}

/// Largest eigenvalue of a symmetric matrix.
pub fn largest_sym_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 1 {
        return a[(0, 0)];
    }
    sym_eigen(a).values[0]
}

/// `f(A)` for symmetric `A` applied through its spectrum.
pub fn sym_apply(e: &SymEigen, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let d = DVector::from_iterator(e.values.len(), e.values.iter().map(|&x| f(x)));
    &e.vectors * DMatrix::from_diagonal(&d) * e.vectors.transpose()
}

pub fn trace(a: &DMatrix<f64>) -> f64 {
    a.diagonal().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_matrix() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.2, 3.0, 1.0]));
        let e = sym_eigen(&a);
        assert_eq!(e.values, vec![3.0, 1.0, 0.2]);
    }

    #[test]
    fn agrees_with_nalgebra() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                4.0, 1.0, -2.0, 2.0, 1.0, 2.0, 0.0, 1.0, -2.0, 0.0, 3.0, -2.0, 2.0, 1.0, -2.0, -1.0,
            ],
        );
        let mine = sym_eigen(&a);
        let mut theirs: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in mine.values.iter().zip(&theirs) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        let rebuilt = sym_apply(&mine, |x| x);
        assert!((rebuilt - a).abs().max() < 1e-12);
    }

    #[test]
    fn inverse_square_root() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let w = sym_apply(&sym_eigen(&a), |x| 1.0 / x.sqrt());
        let id = &w * &a * &w;
        assert!((id - DMatrix::identity(2, 2)).abs().max() < 1e-12);
    }
}
