use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use serde::{Deserialize, Serialize};

use super::{ExactError, Rational};

/// Dense rational vector.
pub type QVec = Vec<Rational>;

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

pub fn add_vec(a: &[Rational], b: &[Rational]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub_vec(a: &[Rational], b: &[Rational]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale_vec(a: &[Rational], s: &Rational) -> QVec {
    a.iter().map(|x| x * s).collect()
}

pub fn int_vec(v: &[i64]) -> QVec {
    v.iter().map(|&x| Rational::from_int(x)).collect()
}

pub fn is_zero_vec(v: &[Rational]) -> bool {
    v.iter().all(Rational::is_zero)
}

/// Row-major dense matrix over the rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

/// Reduced row echelon form together with its pivot columns.
pub struct Rref {
    pub matrix: RationalMatrix,
    pub pivots: Vec<usize>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn diagonal(d: &[Rational]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, x) in d.iter().enumerate() {
            m[(i, i)] = x.clone();
        }
        m
    }

    /// Builds a matrix from rows; every row must have `cols` entries.
    pub fn from_rows(rows: Vec<QVec>, cols: usize) -> Result<Self, ExactError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(ExactError::Shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend(r);
        }
        Ok(RationalMatrix {
            rows: n,
            cols,
            data,
        })
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows = rows.iter().map(|r| int_vec(r)).collect();
        Self::from_rows(rows, cols).expect("ragged integer rows")
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[QVec], rows: usize) -> Result<Self, ExactError> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(ExactError::Shape(format!(
                    "column {j} has {} entries, expected {rows}",
                    c.len()
                )));
            }
            for (i, x) in c.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> QVec {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<QVec> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn columns(&self) -> Vec<QVec> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[Rational]) -> QVec {
        assert_eq!(v.len(), self.cols, "matrix-vector shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `vᵀ · self`.
    pub fn vec_mul(&self, v: &[Rational]) -> QVec {
        assert_eq!(v.len(), self.rows, "vector-matrix shape mismatch");
        let mut out = vec![Rational::zero(); self.cols];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                let x = &self[(i, j)];
                if !x.is_zero() {
                    *o += vi * x;
                }
            }
        }
        out
    }

    /// `vᵀ · self · w`.
    pub fn bilinear(&self, v: &[Rational], w: &[Rational]) -> Rational {
        dot(v, &self.mul_vec(w))
    }

    pub fn scale(&self, s: &Rational) -> Self {
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Rational::is_zero)
    }

    pub fn rref(&self) -> Rref {
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
            for j in c..m.cols {
                let v = &m[(r, j)] * &inv;
                m[(r, j)] = v;
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone();
                for j in c..m.cols {
                    if m[(r, j)].is_zero() {
                        continue;
                    }
                    let v = &m[(i, j)] - &(&f * &m[(r, j)]);
                    m[(i, j)] = v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        Rref { matrix: m, pivots }
    }

    pub fn rank(&self) -> usize {
        self.rref().pivots.len()
    }

    /// Basis of the right null space `{x : self·x = 0}`.
    pub fn nullspace(&self) -> Vec<QVec> {
        let Rref { matrix, pivots } = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Rational::zero(); self.cols];
                v[f] = Rational::one();
                for (r, &p) in pivots.iter().enumerate() {
                    v[p] = -&matrix[(r, f)];
                }
                v
            })
            .collect()
    }

    /// Some solution of `self·x = b`, or `None` if the system is inconsistent.
    pub fn solve(&self, b: &[Rational]) -> Option<QVec> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let Rref { matrix, pivots } = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Rational::zero(); self.cols];
        for (r, &p) in pivots.iter().enumerate() {
            x[p] = matrix[(r, self.cols)].clone();
        }
        Some(x)
    }

    pub fn inverse(&self) -> Result<Self, ExactError> {
        if !self.is_square() {
            return Err(ExactError::Shape("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Rational::one();
        }
        let Rref { matrix, pivots } = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(ExactError::Singular);
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = matrix[(i, n + j)].clone();
            }
        }
        Ok(inv)
    }

    pub fn determinant(&self) -> Rational {
        assert!(self.is_square(), "determinant of non-square matrix");
        let mut m = self.clone();
        let n = m.rows;
        let mut det = Rational::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m[(i, c)].is_zero()) else {
                return Rational::zero();
            };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let piv = m[(c, c)].clone();
            det *= &piv;
            let inv = piv.recip();
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = &m[(i, c)] * &inv;
                for j in c..n {
                    let v = &m[(i, j)] - &(&f * &m[(c, j)]);
                    m[(i, j)] = v;
                }
            }
        }
        det
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn block_diag(a: &Self, b: &Self) -> Self {
        let mut m = Self::zeros(a.rows + b.rows, a.cols + b.cols);
        for i in 0..a.rows {
            for j in 0..a.cols {
                m[(i, j)] = a[(i, j)].clone();
            }
        }
        for i in 0..b.rows {
            for j in 0..b.cols {
                m[(a.rows + i, a.cols + j)] = b[(i, j)].clone();
            }
        }
        m
    }

    /// `[a | b]`.
    pub fn hstack(a: &Self, b: &Self) -> Self {
        assert_eq!(a.rows, b.rows, "hstack row mismatch");
        let mut m = Self::zeros(a.rows, a.cols + b.cols);
        for i in 0..a.rows {
            for j in 0..a.cols {
                m[(i, j)] = a[(i, j)].clone();
            }
            for j in 0..b.cols {
                m[(i, a.cols + j)] = b[(i, j)].clone();
            }
        }
        m
    }

    /// Factor a symmetric positive definite matrix as `L·D·Lᵀ`.
    ///
    /// `L` is unit lower triangular and `D` is returned as its diagonal.
    pub fn ldlt(&self) -> Result<(RationalMatrix, QVec), ExactError> {
        if !self.is_symmetric() {
            return Err(ExactError::NotSymmetric);
        }
        let n = self.rows;
        let mut l = Self::identity(n);
        let mut d: QVec = Vec::with_capacity(n);
        for j in 0..n {
            let mut dj = self[(j, j)].clone();
            for k in 0..j {
                if !l[(j, k)].is_zero() {
                    dj -= &(&l[(j, k)] * &l[(j, k)]) * &d[k];
                }
            }
            if !dj.is_positive() {
                return Err(ExactError::NotPositiveDefinite);
            }
            let inv = dj.recip();
            for i in j + 1..n {
                let mut s = self[(i, j)].clone();
                for k in 0..j {
                    if !l[(i, k)].is_zero() && !l[(j, k)].is_zero() {
                        s -= &(&l[(i, k)] * &l[(j, k)]) * &d[k];
                    }
                }
                l[(i, j)] = &s * &inv;
            }
            d.push(dj);
        }
        Ok((l, d))
    }
}

impl Index<(usize, usize)> for RationalMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &RationalMatrix {
    type Output = RationalMatrix;
    fn mul(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = RationalMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.rows).map(|i| self.row(i)))
            .finish()
    }
}

impl Serialize for RationalMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RationalMatrix {
    /// Rows of `"p/q"` strings. An empty list deserializes to a 0×0 matrix.
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<QVec>::deserialize(deserializer)?;
        let cols = rows.first().map_or(0, Vec::len);
        RationalMatrix::from_rows(rows, cols).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    #[test]
    fn ldlt_identity() {
        let (l, d) = RationalMatrix::identity(3).ldlt().unwrap();
        assert_eq!(l, RationalMatrix::identity(3));
        assert!(d.iter().all(Rational::is_one));
    }

    #[test]
    fn ldlt_a2_gram() {
        let g = RationalMatrix::from_i64_rows(&[&[2, 1], &[1, 2]]);
        let (l, d) = g.ldlt().unwrap();
        assert_eq!(d, vec![q(2), Rational::new(3, 2)]);
        let back = &(&l * &RationalMatrix::diagonal(&d)) * &l.transpose();
        assert_eq!(back, g);
    }

    #[test]
    fn ldlt_rejects_indefinite_and_asymmetric() {
        let g = RationalMatrix::from_i64_rows(&[&[1, 2], &[2, 1]]);
        assert!(matches!(g.ldlt(), Err(ExactError::NotPositiveDefinite)));
        let g = RationalMatrix::from_i64_rows(&[&[1, 2], &[0, 1]]);
        assert!(matches!(g.ldlt(), Err(ExactError::NotSymmetric)));
    }

    #[test]
    fn inverse_and_determinant() {
        let g = RationalMatrix::from_i64_rows(&[&[2, -1], &[-1, 2]]);
        assert_eq!(g.determinant(), q(3));
        let inv = g.inverse().unwrap();
        assert_eq!(&inv * &g, RationalMatrix::identity(2));
        assert_eq!(inv.determinant(), Rational::new(1, 3));
        let sing = RationalMatrix::from_i64_rows(&[&[1, 2], &[2, 4]]);
        assert!(sing.inverse().is_err());
        assert_eq!(sing.determinant(), q(0));
    }

    #[test]
    fn nullspace_and_solve() {
        let m = RationalMatrix::from_i64_rows(&[&[1, 1, 0], &[0, 1, 1]]);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(is_zero_vec(&m.mul_vec(&ns[0])));
        let x = m.solve(&[q(2), q(3)]).unwrap();
        assert_eq!(m.mul_vec(&x), vec![q(2), q(3)]);
        let inconsistent = RationalMatrix::from_i64_rows(&[&[1, 1], &[1, 1]]);
        assert!(inconsistent.solve(&[q(0), q(1)]).is_none());
    }

    proptest::proptest! {
        #[test]
        fn ldlt_reassembles(entries in proptest::collection::vec(-4i64..5, 9)) {
            // AᵀA + I is positive definite for any A
            let a = RationalMatrix::from_rows(
                entries.chunks(3).map(int_vec).collect(), 3).unwrap();
            let mut g = &a.transpose() * &a;
            for i in 0..3 { g[(i, i)] += Rational::one(); }
            let (l, d) = g.ldlt().unwrap();
            proptest::prop_assert!(d.iter().all(Rational::is_positive));
            let back = &(&l * &RationalMatrix::diagonal(&d)) * &l.transpose();
            proptest::prop_assert_eq!(back, g);
        }
    }
}
