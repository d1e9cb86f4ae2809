use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{ExactError, Rational, RationalMatrix};

/// Row-major dense matrix over the integers.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged integer rows");
            for (j, &x) in r.iter().enumerate() {
                m[(i, j)] = BigInt::from(x);
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>, cols: usize) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.into_iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged integer rows");
            for (j, x) in r.into_iter().enumerate() {
                m[(i, j)] = x;
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

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
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

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = &self[(i, k)] * &rhs[(k, j)];
                    out[(i, j)] += v;
                }
            }
        }
        out
    }

    pub fn to_rational(&self) -> RationalMatrix {
        let mut m = RationalMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = Rational::from_bigint(self[(i, j)].clone());
            }
        }
        m
    }

    pub fn determinant(&self) -> BigInt {
        self.to_rational().determinant().numer()
    }

    fn row_combine(
        &mut self,
        r1: usize,
        r2: usize,
        a: &BigInt,
        b: &BigInt,
        c: &BigInt,
        d: &BigInt,
    ) {
        // (row r1, row r2) <- (a·r1 + b·r2, c·r1 + d·r2)
        for j in 0..self.cols {
            let x = self[(r1, j)].clone();
            let y = self[(r2, j)].clone();
            self[(r1, j)] = a * &x + b * &y;
            self[(r2, j)] = c * &x + d * &y;
        }
    }

    fn row_axpy(&mut self, target: usize, src: usize, f: &BigInt) {
        for j in 0..self.cols {
            let v = f * &self[(src, j)];
            self[(target, j)] -= v;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -&self[(r, j)];
            self[(r, j)] = v;
        }
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.rows).map(|i| self.row(i)))
            .finish()
    }
}

/// Row Hermite normal form.
///
/// Returns `(H, U)` with `U·M = H`, `U` unimodular, `H` upper echelon with
/// positive pivots and entries above each pivot reduced into `[0, pivot)`.
/// Zero rows collect at the bottom.
pub fn hnf(m: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let mut h = m.clone();
    let mut u = IntMatrix::identity(m.rows);
    let mut pr = 0;
    for pc in 0..h.cols {
        if pr == h.rows {
            break;
        }
        for r in pr + 1..h.rows {
            if h[(r, pc)].is_zero() {
                continue;
            }
            let a = h[(pr, pc)].clone();
            let b = h[(r, pc)].clone();
            let e = a.extended_gcd(&b);
            let (g, x, y) = (e.gcd, e.x, e.y);
            let c = -(&b / &g);
            let d = &a / &g;
            // [[x, y], [-b/g, a/g]] has determinant 1
            h.row_combine(pr, r, &x, &y, &c, &d);
            u.row_combine(pr, r, &x, &y, &c, &d);
        }
        if h[(pr, pc)].is_zero() {
            continue;
        }
        if h[(pr, pc)].is_negative() {
            h.negate_row(pr);
            u.negate_row(pr);
        }
        let piv = h[(pr, pc)].clone();
        for r in 0..pr {
            let q = h[(r, pc)].div_floor(&piv);
            if !q.is_zero() {
                h.row_axpy(r, pr, &q);
                u.row_axpy(r, pr, &q);
            }
        }
        pr += 1;
    }
    (h, u)
}

/// Nonzero rows of the row Hermite normal form: a canonical basis of the
/// lattice spanned by the rows of `m`.
pub fn hnf_basis(m: &IntMatrix) -> Vec<Vec<BigInt>> {
    let (h, _) = hnf(m);
    (0..h.rows)
        .map(|i| h.row(i).to_vec())
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .collect()
}

/// Least common multiple of the denominators in a rational slice.
pub fn common_denominator(v: &[Rational]) -> BigInt {
    v.iter().fold(BigInt::one(), |acc, x| acc.lcm(&x.denom()))
}

/// Positive multiple of `v` with coprime integer entries (zero stays zero).
pub fn primitive_vec(v: &[Rational]) -> Vec<Rational> {
    let l = common_denominator(v);
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&l / x.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    ints.into_iter()
        .map(|x| Rational::from_bigint(x / &g))
        .collect()
}

/// Scale each row by the lcm of its denominators.
pub fn clear_denominators(m: &RationalMatrix) -> IntMatrix {
    let mut out = IntMatrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        let l = common_denominator(m.row(i));
        for j in 0..m.cols() {
            let x = &m[(i, j)];
            out[(i, j)] = x.numer() * (&l / x.denom());
        }
    }
    out
}

/// Basis of the saturated integer kernel `{z ∈ Zⁿ : M·z = 0}`.
///
/// The basis is returned in row Hermite normal form, so it is canonical
/// for the kernel lattice.
pub fn integer_kernel(m: &RationalMatrix) -> Vec<Vec<BigInt>> {
    let n = m.cols();
    if m.rows() == 0 {
        return (0..n)
            .map(|i| (0..n).map(|j| BigInt::from((i == j) as i64)).collect())
            .collect();
    }
    let a = clear_denominators(m);
    let (h, u) = hnf(&a.transpose());
    let rank = (0..h.rows())
        .filter(|&i| h.row(i).iter().any(|x| !x.is_zero()))
        .count();
    let kernel: Vec<Vec<BigInt>> = (rank..n).map(|i| u.row(i).to_vec()).collect();
    if kernel.is_empty() {
        return kernel;
    }
    hnf_basis(&IntMatrix::from_rows(kernel, n))
}

/// Largest integer `m` with `m² ≤ q`.
pub fn isqrt_floor(q: &Rational) -> Result<BigInt, ExactError> {
    if q.is_negative() {
        return Err(ExactError::NegativeInput);
    }
    Ok(q.floor().sqrt())
}

/// Smallest nonnegative integer `m` with `m² ≥ q`.
pub fn isqrt_ceil(q: &Rational) -> Result<BigInt, ExactError> {
    if q.is_negative() {
        return Err(ExactError::NegativeInput);
    }
    let c = q.ceil();
    if c.is_zero() {
        return Ok(BigInt::zero());
    }
    Ok((c - 1u32).sqrt() + 1u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big_rows(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect()
    }

    #[test]
    fn hnf_identity() {
        let (h, u) = hnf(&IntMatrix::identity(2));
        assert_eq!(h, IntMatrix::identity(2));
        assert_eq!(u, IntMatrix::identity(2));
    }

    #[test]
    fn hnf_small_cases() {
        // gcd of the first column is 1; the lattice is Z²·... with det 2
        let m = IntMatrix::from_i64_rows(&[&[2, 4], &[1, 3]]);
        let (h, u) = hnf(&m);
        assert_eq!(h, IntMatrix::from_i64_rows(&[&[1, 1], &[0, 2]]));
        assert_eq!(u.mul(&m), h);

        let m = IntMatrix::from_i64_rows(&[&[2, 0], &[4, 0]]);
        let (h, _) = hnf(&m);
        assert_eq!(h, IntMatrix::from_i64_rows(&[&[2, 0], &[0, 0]]));

        let zero = IntMatrix::zeros(2, 3);
        assert_eq!(hnf(&zero).0, zero);
    }

    #[test]
    fn kernel_examples() {
        let k = integer_kernel(&RationalMatrix::from_i64_rows(&[&[1, 1]]));
        assert_eq!(k, big_rows(&[&[1, -1]]));

        let m = RationalMatrix::from_rows(vec![vec![Rational::new(1, 2), Rational::new(-1, 3)]], 2)
            .unwrap();
        assert_eq!(integer_kernel(&m), big_rows(&[&[2, 3]]));

        let zero = RationalMatrix::zeros(1, 2);
        assert_eq!(integer_kernel(&zero), big_rows(&[&[1, 0], &[0, 1]]));

        let full = RationalMatrix::identity(2);
        assert!(integer_kernel(&full).is_empty());
    }

    #[test]
    fn isqrt_examples() {
        assert_eq!(isqrt_floor(&Rational::zero()).unwrap(), BigInt::from(0));
        assert_eq!(
            isqrt_floor(&Rational::from_int(10)).unwrap(),
            BigInt::from(3)
        );
        assert_eq!(isqrt_floor(&Rational::new(9, 4)).unwrap(), BigInt::from(1));
        assert_eq!(isqrt_ceil(&Rational::new(9, 4)).unwrap(), BigInt::from(2));
        assert_eq!(isqrt_ceil(&Rational::from_int(9)).unwrap(), BigInt::from(3));
        assert_eq!(isqrt_ceil(&Rational::new(1, 100)).unwrap(), BigInt::from(1));
        assert!(isqrt_floor(&Rational::from_int(-1)).is_err());
    }

    proptest! {
        #[test]
        fn hnf_is_unimodular_transform(entries in proptest::collection::vec(-6i64..7, 12)) {
            let rows: Vec<&[i64]> = entries.chunks(4).collect();
            let m = IntMatrix::from_i64_rows(&rows);
            let (h, u) = hnf(&m);
            prop_assert_eq!(u.mul(&m), h.clone());
            prop_assert_eq!(u.determinant().abs(), BigInt::one());
            // echelon with positive pivots and reduced entries above them
            let mut last_pivot: Option<usize> = None;
            for i in 0..h.rows() {
                match (0..h.cols()).find(|&j| !h[(i, j)].is_zero()) {
                    None => last_pivot = Some(usize::MAX),
                    Some(p) => {
                        prop_assert!(last_pivot.map_or(true, |lp| lp != usize::MAX && p > lp));
                        prop_assert!(h[(i, p)].is_positive());
                        for r in 0..i {
                            prop_assert!(!h[(r, p)].is_negative() && h[(r, p)] < h[(i, p)]);
                        }
                        last_pivot = Some(p);
                    }
                }
            }
        }

        #[test]
        fn kernel_is_saturated(entries in proptest::collection::vec(-3i64..4, 8)) {
            let rows: Vec<&[i64]> = entries.chunks(4).collect();
            let m = RationalMatrix::from_i64_rows(&rows);
            let basis = integer_kernel(&m);
            prop_assert_eq!(basis.len(), 4 - m.rank());
            for v in &basis {
                let q: Vec<Rational> = v.iter().cloned().map(Rational::from_bigint).collect();
                prop_assert!(m.mul_vec(&q).iter().all(Rational::is_zero));
            }
            // every kernel point in a small box is an integer combination
            let b = IntMatrix::from_rows(basis.clone(), 4).to_rational();
            for z in itertools_box(4, 2) {
                let zq: Vec<Rational> = z.iter().map(|&x| Rational::from_int(x)).collect();
                if !m.mul_vec(&zq).iter().all(Rational::is_zero) {
                    continue;
                }
                let coeffs = b.transpose().solve(&zq);
                prop_assert!(coeffs.is_some());
                prop_assert!(coeffs.unwrap().iter().all(Rational::is_integer));
            }
        }
    }

    fn itertools_box(n: usize, r: i64) -> Vec<Vec<i64>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (-r..=r).map(move |x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        out
    }
}
