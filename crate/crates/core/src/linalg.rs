//! Dense row-major matrices and a symmetric eigensolver.
//!
//! Everything here runs at desk scale (dimensions in the tens), so the
//! implementations favor exactness and zero dependencies: eigenvalues come
//! from cyclic Jacobi rotations, and spectral norms from the eigenvalues of
//! the smaller Gram matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty { name: "matrix" });
        }
        let cols = rows[0].len();
        if cols == 0 {
            return Err(Error::Empty { name: "matrix row" });
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in &rows {
            if row.len() != cols {
                return Err(Error::DimMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        if !crate::math::all_finite(&data) {
            return Err(Error::NonFinite { name: "matrix" });
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// `scale · u vᵀ`. The product order keeps `outer(u, u, s)` bitwise
    /// symmetric, which the exact symmetry check downstream relies on.
    pub fn outer(u: &[f64], v: &[f64], scale: f64) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for i in 0..u.len() {
            for j in 0..v.len() {
                m.data[i * v.len() + j] = scale * (u[i] * v[j]);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scale(mut self, s: f64) -> Self {
        for v in &mut self.data {
            *v *= s;
        }
        self
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| crate::math::dot(self.row(i), x))
            .collect())
    }

    /// `Aᵀ z` without materializing the transpose.
    pub fn tr_mul_vec(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.rows {
            return Err(Error::DimMismatch {
                expected: self.rows,
                got: z.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let zi = z[i];
            for (j, o) in out.iter_mut().enumerate() {
                *o += zi * self.get(i, j);
            }
        }
        Ok(out)
    }

    /// `xᵀ A x` for square `A`.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        if self.rows != self.cols {
            return Err(Error::DimMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        let ax = self.mul_vec(x)?;
        Ok(crate::math::dot(x, &ax))
    }

    /// Exact (bitwise) symmetry. Tilting operations reject anything else.
    pub fn check_symmetric(&self) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::DimMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if self.get(i, j) != self.get(j, i) {
                    return Err(Error::AsymmetricMatrix { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// `AᵀA` (cols × cols).
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..self.rows {
                    s += self.get(k, i) * self.get(k, j);
                }
                g.set(i, j, s);
                g.set(j, i, s);
            }
        }
        g
    }

    /// `AAᵀ` (rows × rows).
    pub fn gram_t(&self) -> Matrix {
        let n = self.rows;
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let s = crate::math::dot(self.row(i), self.row(j));
                g.set(i, j, s);
                g.set(j, i, s);
            }
        }
        g
    }

    /// Largest singular value, via the eigenvalues of the smaller Gram matrix.
    pub fn spectral_norm(&self) -> f64 {
        let gram = if self.rows <= self.cols {
            self.gram_t()
        } else {
            self.gram()
        };
        let eigs = sym_eigenvalues(&gram).expect("gram matrix is square and symmetric");
        eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    m.check_symmetric()?;
    let n = m.rows;
    let mut a = m.clone();
    let frob: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a.get(i, j).powi(2))
        .sum::<f64>()
        .sqrt();
    let tol = 1e-15 * frob.max(1e-300);
    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a.get(i, j).abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= tol {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = {
                    let s = if theta >= 0.0 { 1.0 } else { -1.0 };
                    s / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(eigs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigenvalues_of_diagonal() {
        let m = Matrix::from_rows(vec![vec![3.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let e = sym_eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn eigenvalues_of_rank_one_outer() {
        // -7 wwᵀ with w = (1, -1): eigenvalues {-14, 0}.
        let m = Matrix::outer(&[1.0, -1.0], &[1.0, -1.0], -7.0);
        let e = sym_eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(e[0], -14.0, epsilon = 1e-10);
        assert_abs_diff_eq!(e[1], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn spectral_norm_of_row_vector() {
        let l = Matrix::from_rows(vec![vec![3.0, 4.0]]).unwrap();
        assert_abs_diff_eq!(l.spectral_norm(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn asymmetric_rejected() {
        let m = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0 + 1e-15, 0.0]]).unwrap();
        assert!(matches!(
            m.check_symmetric(),
            Err(Error::AsymmetricMatrix { .. })
        ));
    }

    #[test]
    fn quadratic_form_matches_manual() {
        let m = Matrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = [1.0, -2.0];
        // 2*1 + 1*(-2)*2 + 3*4 = 10
        assert_abs_diff_eq!(m.quadratic_form(&x).unwrap(), 10.0, epsilon = 1e-12);
    }
}
