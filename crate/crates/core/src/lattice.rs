//! Lattices in Gram-first form.
//!
//! Every algorithm downstream consumes only the rational Gram matrix of a
//! basis, so lattices whose natural coordinates are irrational can still be
//! handled exactly. When a rational embedding is known it is kept alongside
//! and used for reporting and for the explicit lift constructions.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{
    common_denominator, dot, hnf_basis, int_vec, integer_kernel, ExactError, IntMatrix, QVec,
    Rational, RationalMatrix,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("basis columns are linearly dependent")]
    DependentBasis,
    #[error("invalid dimension {d} for family {family}")]
    InvalidDimension { family: Family, d: usize },
    #[error("invalid Gram matrix: {0}")]
    InvalidGram(ExactError),
    #[error("embedding does not reproduce the Gram matrix")]
    EmbeddingMismatch,
    #[error("cannot parse lattice name {0:?}")]
    Parse(String),
    #[error("coefficient {0} does not fit in i64")]
    CoefficientOverflow(BigInt),
}

/// Integer coordinates of a lattice vector with respect to the basis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(pub Vec<i64>);

impl LatticeVector {
    pub fn zero(k: usize) -> Self {
        LatticeVector(vec![0; k])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn neg(&self) -> Self {
        LatticeVector(self.0.iter().map(|c| -c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        LatticeVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        LatticeVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn to_rational(&self) -> QVec {
        int_vec(&self.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Lattice families with built-in constructors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Z,
    A,
    D,
    E6,
    E7,
    E8,
    /// Dual of `A_d`.
    Astar,
    /// `2·D_d*`, the integral scaling of the dual of `D_d`.
    DstarScaled,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Z => "Z",
            Family::A => "A",
            Family::D => "D",
            Family::E6 => "E6",
            Family::E7 => "E7",
            Family::E8 => "E8",
            Family::Astar => "Astar",
            Family::DstarScaled => "Dstar",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = LatticeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Z" => Family::Z,
            "A" => Family::A,
            "D" => Family::D,
            "E6" => Family::E6,
            "E7" => Family::E7,
            "E8" => Family::E8,
            "Astar" | "A*" => Family::Astar,
            "Dstar" | "D*" | "Dstar_scaled" => Family::DstarScaled,
            _ => return Err(LatticeError::Parse(s.to_string())),
        })
    }
}

/// A full-rank lattice in its own linear span, stored by the Gram matrix of
/// a basis and, optionally, a rational embedding of that basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    rank: usize,
    gram: RationalMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<RationalMatrix>,
    #[serde(default)]
    label: String,
}

impl Lattice {
    /// Lattice spanned by the columns of `basis`.
    pub fn from_basis(
        basis: RationalMatrix,
        label: impl Into<String>,
    ) -> Result<Self, LatticeError> {
        if basis.rank() < basis.cols() {
            return Err(LatticeError::DependentBasis);
        }
        let gram = &basis.transpose() * &basis;
        Ok(Lattice {
            rank: basis.cols(),
            gram,
            embedding: Some(basis),
            label: label.into(),
        })
    }

    /// Lattice known only through its Gram matrix.
    pub fn from_gram(gram: RationalMatrix, label: impl Into<String>) -> Result<Self, LatticeError> {
        gram.ldlt().map_err(LatticeError::InvalidGram)?;
        Ok(Lattice {
            rank: gram.rows(),
            gram,
            embedding: None,
            label: label.into(),
        })
    }

    /// Lattice generated by a (possibly dependent) set of rational vectors,
    /// reduced to a basis through the Hermite normal form.
    pub fn from_generators(
        generators: &[QVec],
        ambient: usize,
        label: impl Into<String>,
    ) -> Result<Self, LatticeError> {
        let all: Vec<Rational> = generators.iter().flatten().cloned().collect();
        let den = common_denominator(&all);
        let rows: Vec<Vec<BigInt>> = generators
            .iter()
            .map(|g| {
                assert_eq!(g.len(), ambient, "generator dimension mismatch");
                g.iter().map(|x| x.numer() * (&den / x.denom())).collect()
            })
            .collect();
        let basis = hnf_basis(&IntMatrix::from_rows(rows, ambient));
        let den_q = Rational::from_bigint(den).recip();
        let columns: Vec<QVec> = basis
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|x| &Rational::from_bigint(x) * &den_q)
                    .collect()
            })
            .collect();
        let b =
            RationalMatrix::from_columns(&columns, ambient).expect("consistent generator shape");
        Self::from_basis(b, label)
    }

    /// Re-validates a deserialized document.
    pub fn validate(&self) -> Result<(), LatticeError> {
        if self.gram.rows() != self.rank || self.gram.cols() != self.rank {
            return Err(LatticeError::InvalidGram(ExactError::Shape(format!(
                "rank {} but gram is {}x{}",
                self.rank,
                self.gram.rows(),
                self.gram.cols()
            ))));
        }
        self.gram.ldlt().map_err(LatticeError::InvalidGram)?;
        if let Some(b) = &self.embedding {
            if b.cols() != self.rank || &b.transpose() * b != self.gram {
                return Err(LatticeError::EmbeddingMismatch);
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn gram(&self) -> &RationalMatrix {
        &self.gram
    }

    pub fn embedding(&self) -> Option<&RationalMatrix> {
        self.embedding.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Squared norm of a rational coefficient vector.
    pub fn qform(&self, c: &[Rational]) -> Rational {
        self.gram.bilinear(c, c)
    }

    pub fn inner(&self, a: &[Rational], b: &[Rational]) -> Rational {
        self.gram.bilinear(a, b)
    }

    pub fn norm2(&self, v: &LatticeVector) -> Rational {
        self.qform(&v.to_rational())
    }

    /// Ambient coordinates of a coefficient vector, if an embedding is known.
    pub fn embed(&self, c: &[Rational]) -> Option<QVec> {
        self.embedding.as_ref().map(|b| b.mul_vec(c))
    }

    /// Coefficient coordinates of an ambient point, or `None` when the point
    /// is off the lattice's linear span or no embedding is known.
    pub fn coefficients_of(&self, x: &[Rational]) -> Option<QVec> {
        let b = self.embedding.as_ref()?;
        let c = b.solve(x)?;
        (b.mul_vec(&c) == x).then_some(c)
    }

    /// Membership test for an ambient point.
    pub fn contains(&self, x: &[Rational]) -> bool {
        self.coefficients_of(x)
            .is_some_and(|c| c.iter().all(Rational::is_integer))
    }

    /// `Λ*`: Gram `G⁻¹`, embedding `B·G⁻¹`.
    pub fn dual(&self) -> Lattice {
        let inv = self
            .gram
            .inverse()
            .expect("Gram matrix is positive definite");
        Lattice {
            rank: self.rank,
            embedding: self.embedding.as_ref().map(|b| b * &inv),
            gram: inv,
            label: format!("dual({})", self.label),
        }
    }

    /// `Λ × Γ` with block-diagonal Gram matrix.
    pub fn product(&self, other: &Lattice) -> Lattice {
        let embedding = match (&self.embedding, &other.embedding) {
            (Some(a), Some(b)) => Some(RationalMatrix::block_diag(a, b)),
            _ => None,
        };
        Lattice {
            rank: self.rank + other.rank,
            gram: RationalMatrix::block_diag(&self.gram, &other.gram),
            embedding,
            label: format!("{}x{}", self.label, other.label),
        }
    }

    /// Sublattice `{x ∈ Λ : ⟨x, c_i⟩ = 0}` for rational coefficient-space
    /// functionals `c_i` (rows of `constraints`).
    pub fn kernel_sublattice(
        &self,
        constraints: &RationalMatrix,
        label: impl Into<String>,
    ) -> Result<Lattice, LatticeError> {
        let k = integer_kernel(constraints);
        let sub = IntMatrix::from_rows(k, self.rank).to_rational().transpose();
        match &self.embedding {
            Some(b) => Lattice::from_basis(b * &sub, label),
            None => Lattice::from_gram(&(&sub.transpose() * &self.gram) * &sub, label),
        }
    }

    /// LLL-reduced basis of the same lattice (δ = 3/4) and the unimodular
    /// change of basis `U`: new basis vector `j` has coefficients `U[·, j]`.
    pub fn lll_reduced(&self) -> (Lattice, RationalMatrix) {
        let (gram, u) = lll_gram(&self.gram);
        let embedding = self.embedding.as_ref().map(|b| b * &u);
        (
            Lattice {
                rank: self.rank,
                gram,
                embedding,
                label: self.label.clone(),
            },
            u,
        )
    }
}

/// LLL reduction driven by the Gram matrix alone.
fn lll_gram(gram: &RationalMatrix) -> (RationalMatrix, RationalMatrix) {
    let n = gram.rows();
    let mut g = gram.clone();
    let mut u = RationalMatrix::identity(n);
    if n < 2 {
        return (g, u);
    }
    let delta = Rational::new(3, 4);
    // b_k -= q b_j, applied to G and U
    let reduce =
        |g: &mut RationalMatrix, u: &mut RationalMatrix, k: usize, j: usize, q: &Rational| {
            let gkk = &(&g[(k, k)] - &(&(q * &g[(k, j)]) * &Rational::from_int(2)))
                + &(&(q * q) * &g[(j, j)]);
            for i in 0..n {
                let v = &g[(i, k)] - &(q * &g[(i, j)]);
                g[(i, k)] = v.clone();
                g[(k, i)] = v;
            }
            g[(k, k)] = gkk;
            for i in 0..n {
                let v = &u[(i, k)] - &(q * &u[(i, j)]);
                u[(i, k)] = v;
            }
        };
    let mut k = 1;
    while k < n {
        for j in (0..k).rev() {
            let (l, _) = g.ldlt().expect("Gram matrix is positive definite");
            let q = Rational::from_bigint(l[(k, j)].round());
            if !q.is_zero() {
                reduce(&mut g, &mut u, k, j, &q);
            }
        }
        let (l, d) = g.ldlt().expect("Gram matrix is positive definite");
        let mu = &l[(k, k - 1)];
        if d[k] >= &(&delta - &(mu * mu)) * &d[k - 1] {
            k += 1;
        } else {
            for i in 0..n {
                let (a, b) = (g[(i, k)].clone(), g[(i, k - 1)].clone());
                g[(i, k)] = b;
                g[(i, k - 1)] = a;
            }
            for i in 0..n {
                let (a, b) = (g[(k, i)].clone(), g[(k - 1, i)].clone());
                g[(k, i)] = b;
                g[(k - 1, i)] = a;
            }
            for i in 0..n {
                let (a, b) = (u[(i, k)].clone(), u[(i, k - 1)].clone());
                u[(i, k)] = b;
                u[(i, k - 1)] = a;
            }
            k = (k - 1).max(1);
        }
    }
    (g, u)
}

fn unit(n: usize, i: usize) -> QVec {
    let mut v = vec![Rational::zero(); n];
    v[i] = Rational::one();
    v
}

fn d_basis_columns(d: usize) -> Vec<QVec> {
    let mut cols: Vec<QVec> = (0..d - 1)
        .map(|i| {
            let mut v = unit(d, i);
            v[i + 1] = Rational::from_int(-1);
            v
        })
        .collect();
    let mut last = unit(d, d - 2);
    last[d - 1] = Rational::one();
    cols.push(last);
    cols
}

/// The built-in families, embedded in their customary coordinates.
///
/// `A_d` lives in the sum-zero hyperplane of `R^{d+1}`; `Astar` is generated
/// by `A_d` together with `(1/(d+1))·(1,…,1,−d)`; `Dstar` is the scaled
/// `2·D_d* = 2Zᵈ ∪ (1 + 2Zᵈ)`; `E7`, `E6` are cut out of `E8` by the
/// orthogonality conditions against `e7+e8` and `e6+e8`.
pub fn root_lattice(family: Family, d: usize) -> Result<Lattice, LatticeError> {
    let bad = || LatticeError::InvalidDimension { family, d };
    let label = match family {
        Family::E6 | Family::E7 | Family::E8 => family.name().to_string(),
        _ => format!("{}{}", family.name(), d),
    };
    match family {
        Family::Z => {
            if d == 0 {
                return Err(bad());
            }
            Lattice::from_basis(RationalMatrix::identity(d), label)
        }
        Family::A => {
            if d == 0 {
                return Err(bad());
            }
            let cols: Vec<QVec> = (0..d)
                .map(|i| {
                    let mut v = unit(d + 1, i);
                    v[i + 1] = Rational::from_int(-1);
                    v
                })
                .collect();
            Lattice::from_basis(RationalMatrix::from_columns(&cols, d + 1).unwrap(), label)
        }
        Family::D => {
            if d < 2 {
                return Err(bad());
            }
            Lattice::from_basis(
                RationalMatrix::from_columns(&d_basis_columns(d), d).unwrap(),
                label,
            )
        }
        Family::Astar => {
            if d == 0 {
                return Err(bad());
            }
            let a = root_lattice(Family::A, d)?;
            let mut gens = a.embedding().unwrap().columns();
            let n = Rational::from_int(d as i64 + 1);
            let mut v1: QVec = vec![&Rational::one() / &n; d + 1];
            v1[d] = &Rational::from_int(-(d as i64)) / &n;
            gens.push(v1);
            Lattice::from_generators(&gens, d + 1, label)
        }
        Family::DstarScaled => {
            if d == 0 {
                return Err(bad());
            }
            let mut gens: Vec<QVec> = (0..d)
                .map(|i| {
                    let mut v = vec![Rational::zero(); d];
                    v[i] = Rational::from_int(2);
                    v
                })
                .collect();
            gens.push(vec![Rational::one(); d]);
            Lattice::from_generators(&gens, d, label)
        }
        Family::E8 => {
            if d != 8 {
                return Err(bad());
            }
            let mut gens = d_basis_columns(8);
            gens.push(vec![Rational::new(1, 2); 8]);
            Lattice::from_generators(&gens, 8, label)
        }
        Family::E7 | Family::E6 => {
            let expected = if family == Family::E7 { 7 } else { 6 };
            if d != expected {
                return Err(bad());
            }
            let e8 = root_lattice(Family::E8, 8)?;
            let mut normals = vec![{
                let mut v = vec![Rational::zero(); 8];
                v[6] = Rational::one();
                v[7] = Rational::one();
                v
            }];
            if family == Family::E6 {
                let mut v = vec![Rational::zero(); 8];
                v[5] = Rational::one();
                v[7] = Rational::one();
                normals.push(v);
            }
            let b = e8.embedding().unwrap();
            let rows: Vec<QVec> = normals.iter().map(|n| b.vec_mul(n)).collect();
            e8.kernel_sublattice(&RationalMatrix::from_rows(rows, 8).unwrap(), label)
        }
    }
}

/// `Λ_d(a) = {x ∈ Zᵈ : x_1 ≡ … ≡ x_d mod a}`, generated by `a·e_i` and `1`.
pub fn congruence_lattice(d: usize, a: u64) -> Result<Lattice, LatticeError> {
    if d == 0 || a == 0 {
        return Err(LatticeError::Parse(format!("cong:d={d},a={a}")));
    }
    let mut gens: Vec<QVec> = (0..d)
        .map(|i| {
            let mut v = vec![Rational::zero(); d];
            v[i] = Rational::from_int(a as i64);
            v
        })
        .collect();
    gens.push(vec![Rational::one(); d]);
    Lattice::from_generators(&gens, d, format!("cong:d={d},a={a}"))
}

/// Parses the shorthands `Z3`, `A3`, `D4`, `E8`, `Astar3`, `Dstar4` and
/// `cong:d=4,a=2`.
pub fn parse_lattice_name(name: &str) -> Result<Lattice, LatticeError> {
    let bad = || LatticeError::Parse(name.to_string());
    let s = name.trim();
    if let Some(rest) = s.strip_prefix("cong:") {
        let mut d = None;
        let mut a = None;
        for kv in rest.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            let v: u64 = v.trim().parse().map_err(|_| bad())?;
            match k.trim() {
                "d" => d = Some(v as usize),
                "a" => a = Some(v),
                _ => return Err(bad()),
            }
        }
        return congruence_lattice(d.ok_or_else(bad)?, a.ok_or_else(bad)?);
    }
    for (prefix, family) in [
        ("Astar", Family::Astar),
        ("Dstar", Family::DstarScaled),
        ("Z", Family::Z),
        ("A", Family::A),
        ("D", Family::D),
        ("E", Family::E8),
    ] {
        if let Some(num) = s.strip_prefix(prefix) {
            let d: usize = num.parse().map_err(|_| bad())?;
            let family = match (family, d) {
                (Family::E8, 6) => Family::E6,
                (Family::E8, 7) => Family::E7,
                (f, _) => f,
            };
            return root_lattice(family, d);
        }
    }
    Err(bad())
}

/// Exact membership oracle for `Λ_d(a)` in ambient coordinates.
pub fn in_congruence_lattice(x: &[Rational], a: u64) -> bool {
    if !x.iter().all(Rational::is_integer) {
        return false;
    }
    let a = BigInt::from(a);
    let first = x[0].numer();
    x.iter().all(|v| {
        let diff = v.numer() - &first;
        (diff % &a) == BigInt::from(0)
    })
}

/// Lattice determinant squared, i.e. `det(gram)`.
pub fn gram_determinant(l: &Lattice) -> Rational {
    l.gram().determinant()
}

/// `true` when every embedded basis vector sums to zero.
pub fn basis_in_sum_zero_hyperplane(l: &Lattice) -> bool {
    l.embedding().is_some_and(|b| {
        b.columns()
            .iter()
            .all(|c| dot(c, &vec![Rational::one(); c.len()]).is_zero())
    })
}
