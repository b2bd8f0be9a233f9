use super::matrix::DenseMatrix;
use super::vector::{l2, Vector};
use super::LinalgError;

/// Relative threshold on a diagonal entry of `R` below which the column is
/// treated as linearly dependent on the preceding ones.
const RANK_TOL: f64 = 1e-11;

/// Householder QR factorization of a tall matrix with full column rank.
///
/// The reflectors are stored below the diagonal of `qr` (unit leading
/// entry implied) and `R` occupies the upper triangle.
#[derive(Debug, Clone)]
pub struct QrFactor {
    rows: usize,
    cols: usize,
    qr: Vec<f64>,
    tau: Vec<f64>,
}

impl QrFactor {
    pub fn new(a: &DenseMatrix) -> Result<Self, LinalgError> {
        let (rows, cols) = (a.rows(), a.cols());
        if cols > rows {
            return Err(LinalgError::RankDeficient { column: rows });
        }
        let mut qr = a.data().to_vec();
        let mut tau = vec![0.0; cols];
        let scale = (0..cols)
            .map(|j| l2(a.col(j)))
            .fold(0.0f64, f64::max);
        for k in 0..cols {
            let (head, tail) = qr.split_at_mut(k * rows + rows);
            let colk = &mut head[k * rows..];
            let norm = l2(&colk[k..]);
            if norm <= RANK_TOL * scale || norm == 0.0 {
                return Err(LinalgError::RankDeficient { column: k });
            }
            let x0 = colk[k];
            let beta = if x0 >= 0.0 { -norm } else { norm };
            let t = (beta - x0) / beta;
            let inv = 1.0 / (x0 - beta);
            for v in &mut colk[k + 1..] {
                *v *= inv;
            }
            colk[k] = beta;
            tau[k] = t;
            // apply H_k to the remaining columns
            for j in 0..cols - k - 1 {
                let colj = &mut tail[j * rows..(j + 1) * rows];
                let mut s = colj[k];
                for i in k + 1..rows {
                    s += colk[i] * colj[i];
                }
                s *= t;
                colj[k] -= s;
                for i in k + 1..rows {
                    colj[i] -= s * colk[i];
                }
            }
        }
        Ok(Self { rows, cols, qr, tau })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.qr[j * self.rows + i]
    }

    /// Overwrites `y` with `Qᵀ y`.
    fn apply_qt(&self, y: &mut [f64]) {
        for k in 0..self.cols {
            let v = &self.qr[k * self.rows..(k + 1) * self.rows];
            let mut s = y[k];
            for i in k + 1..self.rows {
                s += v[i] * y[i];
            }
            s *= self.tau[k];
            y[k] -= s;
            for i in k + 1..self.rows {
                y[i] -= s * v[i];
            }
        }
    }

    /// Solves `R x = b` in place on the leading `cols` entries.
    fn back_substitute(&self, b: &mut [f64]) {
        for i in (0..self.cols).rev() {
            let mut s = b[i];
            for j in i + 1..self.cols {
                s -= self.r(i, j) * b[j];
            }
            b[i] = s / self.r(i, i);
        }
    }

    /// Solves `Rᵀ x = b` in place.
    fn forward_substitute_transposed(&self, b: &mut [f64]) {
        for i in 0..self.cols {
            let mut s = b[i];
            for j in 0..i {
                s -= self.r(j, i) * b[j];
            }
            b[i] = s / self.r(i, i);
        }
    }

    /// Least-squares solution of `A x ≈ y`.
    pub fn solve(&self, y: &[f64]) -> Result<Vector, LinalgError> {
        if y.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows,
                found: y.len(),
            });
        }
        let mut work = y.to_vec();
        self.apply_qt(&mut work);
        self.back_substitute(&mut work);
        work.truncate(self.cols);
        Ok(Vector::from_vec_unchecked(work))
    }

    /// Solves the Gram system `AᵀA x = rhs` via `RᵀR`.
    pub fn solve_gram(&self, rhs: &[f64]) -> Result<Vector, LinalgError> {
        if rhs.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: rhs.len(),
            });
        }
        let mut work = rhs.to_vec();
        self.forward_substitute_transposed(&mut work);
        self.back_substitute(&mut work);
        Ok(Vector::from_vec_unchecked(work))
    }
}

/// Least-squares solve `min ‖A x − y‖₂` through Householder QR.
///
/// Fails with [`LinalgError::RankDeficient`] when `A` lacks full column rank.
pub fn ls_solve(a: &DenseMatrix, y: &[f64]) -> Result<Vector, LinalgError> {
    QrFactor::new(a)?.solve(y)
}
