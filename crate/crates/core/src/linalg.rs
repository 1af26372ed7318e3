//! Dense exact linear algebra over the rationals.

use std::fmt;

use num_traits::{One, Zero};

use crate::expr::Rational;

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].to_string()).collect())
            .collect();
        write!(f, "{rows:?}")
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Matrix {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let data: Vec<Rational> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), r * c, "ragged rows");
        Matrix { rows: r, cols: c, data }
    }

    /// Build a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<Rational>]) -> Matrix {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = v.clone();
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

    pub fn row(&self, i: usize) -> Vec<Rational> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = &self[(i, k)] * &other[(k, j)];
                    out[(i, j)] += v;
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| &self[(i, j)] * &v[j]).sum())
            .collect()
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, k: &Rational) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * k).collect() }
    }

    pub fn trace(&self) -> Rational {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip();
            for j in 0..m.cols {
                m[(r, j)] = &m[(r, j)] * &inv;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in 0..m.cols {
                        let v = &f * &m[(r, j)];
                        m[(i, j)] -= v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{v : M v = 0}`.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Rational::zero(); self.cols];
                v[f] = Rational::one();
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = -r[(row, f)].clone();
                }
                v
            })
            .collect()
    }

    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = Matrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Rational::one();
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = r[(i, n + j)].clone();
            }
        }
        Some(inv)
    }

    /// Solve `M x = b` when the solution exists and is unique.
    pub fn solve(&self, b: &[Rational]) -> Option<Vec<Rational>> {
        let mut aug = Matrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let (r, pivots) = aug.rref();
        if pivots.contains(&self.cols) || pivots.len() < self.cols {
            return None;
        }
        Some((0..self.cols).map(|i| r[(i, self.cols)].clone()).collect())
    }

    pub fn determinant(&self) -> Rational {
        assert_eq!(self.rows, self.cols, "square matrix required");
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Rational::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else {
                return Rational::zero();
            };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let pivot = m[(c, c)].clone();
            det *= &pivot;
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = &m[(i, c)] / &pivot;
                for j in c..n {
                    let v = &f * &m[(c, j)];
                    m[(i, j)] -= v;
                }
            }
        }
        det
    }

    /// Coefficients of `det(t I - M)`, lowest degree first.
    pub fn characteristic_polynomial(&self) -> Vec<Rational> {
        // Faddeev-LeVerrier.
        let n = self.rows;
        let mut coeffs = vec![Rational::zero(); n + 1];
        coeffs[n] = Rational::one();
        let mut m_k = Matrix::zeros(n, n);
        for k in 1..=n {
            let shifted = {
                let mut s = m_k.clone();
                for i in 0..n {
                    s[(i, i)] += &coeffs[n - k + 1];
                }
                s
            };
            m_k = self.mul(&shifted);
            let c = -m_k.trace() / Rational::from_integer(k.into());
            coeffs[n - k] = c;
        }
        coeffs
    }
}

/// Dot product of rational vectors.
pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{int, rat};

    fn m(rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect())
    }

    #[test]
    fn rank_and_nullspace() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(a.rank(), 2);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(a.apply(&ns[0]).iter().all(Zero::is_zero));
    }

    #[test]
    fn inverse_round_trip() {
        let a = m(&[&[2, 1], &[5, 3]]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), Matrix::identity(2));
        assert!(m(&[&[1, 2], &[2, 4]]).inverse().is_none());
    }

    #[test]
    fn characteristic_polynomial_matches_trace_and_determinant() {
        let a = Matrix::from_rows(vec![vec![int(-1), rat(4, 5)], vec![rat(2, 5), rat(-7, 5)]]);
        let p = a.characteristic_polynomial();
        assert_eq!(p[2], int(1));
        assert_eq!(p[1], -a.trace());
        assert_eq!(p[0], a.determinant());
    }

    #[test]
    fn solve_unique() {
        let a = m(&[&[1, 1], &[1, -1]]);
        assert_eq!(a.solve(&[int(3), int(1)]).unwrap(), vec![int(2), int(1)]);
    }
}
