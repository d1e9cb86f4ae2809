//! From 0/1 constraint systems to lattices whose polar Voronoi cell has a
//! face projecting onto the solution polytope.
//!
//! Ambient coordinates of the gadget lattice are `(z', t)` with the last
//! coordinate measured in units of `α = √alphaSq`; the inner product is
//! `diag(1, …, 1, alphaSq)`, so every quantity stays rational.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enumeration::Enumerator;
use crate::exact::{dot, integer_kernel, QVec, Rational, RationalMatrix};
use crate::lattice::{Lattice, LatticeVector};
use crate::voronoi::{max_rank, polar_face, VoronoiError};

/// Largest variable count enumerated exhaustively.
pub const MAX_ENUM_VARS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GadgetError {
    #[error("slack of row {row} at x = {point:?} is {slack}, not 0 or 1")]
    SlackViolation {
        point: Vec<u8>,
        row: usize,
        slack: Rational,
    },
    #[error("{0} variables exceed the enumeration limit of {MAX_ENUM_VARS}")]
    TooManyVariables(usize),
    #[error("no 0/1 solutions")]
    NoSolutions,
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("0/1 point {point:?} has squared norm {norm2}, expected {alpha_sq}")]
    UnequalNorm {
        point: Vec<u8>,
        norm2: u64,
        alpha_sq: u64,
    },
    #[error("lattice rank {rank} exceeds the cap {cap}")]
    RankLimit { rank: usize, cap: usize },
    #[error("invalid graph: {0}")]
    Graph(String),
}

/// `{x ∈ {0,1}^k : A x ≤ b}` with its solutions listed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroOneSystem {
    pub k: usize,
    pub a: RationalMatrix,
    pub b: QVec,
    pub x: Vec<Vec<u8>>,
}

fn bits(mask: u64, k: usize) -> Vec<u8> {
    (0..k).map(|i| ((mask >> i) & 1) as u8).collect()
}

fn to_q(x: &[u8]) -> QVec {
    x.iter().map(|&b| Rational::from_int(b as i64)).collect()
}

/// All `x ∈ {0,1}^k` with `A x ≤ b`, sorted lexicographically.
pub fn enumerate_solutions(
    a: &RationalMatrix,
    b: &[Rational],
) -> Result<Vec<Vec<u8>>, GadgetError> {
    let k = a.cols();
    if k > MAX_ENUM_VARS {
        return Err(GadgetError::TooManyVariables(k));
    }
    let mut out: Vec<Vec<u8>> = (0..1u64 << k)
        .map(|m| bits(m, k))
        .filter(|x| {
            let ax = a.mul_vec(&to_q(x));
            ax.iter().zip(b).all(|(l, r)| l <= r)
        })
        .collect();
    out.sort();
    Ok(out)
}

impl ZeroOneSystem {
    pub fn new(a: RationalMatrix, b: QVec) -> Result<Self, GadgetError> {
        if a.rows() != b.len() {
            return Err(GadgetError::Inconsistent(format!(
                "{} rows but {} right-hand sides",
                a.rows(),
                b.len()
            )));
        }
        let x = enumerate_solutions(&a, &b)?;
        Ok(ZeroOneSystem {
            k: a.cols(),
            a,
            b,
            x,
        })
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }
}

/// Simple undirected graph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, GadgetError> {
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GadgetError::Graph(format!("edge ({u},{v}) outside 0..{n}")));
            }
            if u == v {
                return Err(GadgetError::Graph(format!("loop at {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Graph {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::new(n, &edges).unwrap()
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::new(n, &edges).unwrap()
    }

    /// Every graph on `n` labelled nodes, one per edge subset.
    pub fn all_on(n: usize) -> Vec<Graph> {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        (0..1u64 << pairs.len())
            .map(|mask| {
                let edges: Vec<(usize, usize)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, e)| *e)
                    .collect();
                Graph { n, edges }
            })
            .collect()
    }

    /// Parses JSON `{"n": .., "edges": [[u, v], ..]}` or edge-list lines
    /// `u v` (0-based). In the line format an optional `n <count>` line
    /// declares isolated trailing nodes; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, GadgetError> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let g: Graph = serde_json::from_str(trimmed)
                .map_err(|e| GadgetError::Graph(format!("line {}: {e}", e.line())))?;
            return Graph::new(g.n, &g.edges);
        }
        let mut n = 0usize;
        let mut declared = None;
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let bad = || GadgetError::Graph(format!("line {}: cannot parse {line:?}", lineno + 1));
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["n", c] => declared = Some(c.parse::<usize>().map_err(|_| bad())?),
                [u, v] => {
                    let u: usize = u.parse().map_err(|_| bad())?;
                    let v: usize = v.parse().map_err(|_| bad())?;
                    n = n.max(u + 1).max(v + 1);
                    edges.push((u, v));
                }
                _ => return Err(bad()),
            }
        }
        if let Some(d) = declared {
            if d < n {
                return Err(GadgetError::Graph(format!(
                    "declared n = {d} but an edge uses node {}",
                    n - 1
                )));
            }
            n = d;
        }
        Graph::new(n, &edges)
    }
}

/// Edge constraints `x_u + x_v ≤ 1`; solutions are the stable sets.
pub fn stable_set_instance(g: &Graph) -> Result<ZeroOneSystem, GadgetError> {
    let mut a = RationalMatrix::zeros(g.edges.len(), g.n);
    for (r, &(u, v)) in g.edges.iter().enumerate() {
        a[(r, u)] = Rational::one();
        a[(r, v)] = Rational::one();
    }
    ZeroOneSystem::new(a, vec![Rational::one(); g.edges.len()])
}

/// Correlation system on `Y ∈ {0,1}^{n×n}` (row-major), one triple of rows
/// `Y_ij ≤ Y_ii`, `Y_ij ≤ Y_jj`, `Y_ii + Y_jj − Y_ij ≤ 1` per ordered pair
/// `i ≠ j`. The solutions are the matrices `x xᵀ`.
pub fn correlation_instance(n: usize) -> Result<ZeroOneSystem, GadgetError> {
    let k = n * n;
    let idx = |i: usize, j: usize| i * n + j;
    let mut rows = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut r1 = vec![Rational::zero(); k];
            r1[idx(i, j)] = Rational::one();
            r1[idx(i, i)] = Rational::from_int(-1);
            let mut r2 = vec![Rational::zero(); k];
            r2[idx(i, j)] = Rational::one();
            r2[idx(j, j)] = Rational::from_int(-1);
            let mut r3 = vec![Rational::zero(); k];
            r3[idx(i, i)] = Rational::one();
            r3[idx(j, j)] = Rational::one();
            r3[idx(i, j)] = Rational::from_int(-1);
            rows.extend([r1, r2, r3]);
            b.extend([Rational::zero(), Rational::zero(), Rational::one()]);
        }
    }
    let a = RationalMatrix::from_rows(rows, k).expect("rows have length n²");
    let mut x: Vec<Vec<u8>> = (0..1u64 << n)
        .map(|m| {
            let v = bits(m, n);
            (0..k).map(|t| v[t / n] * v[t % n]).collect()
        })
        .collect();
    x.sort();
    Ok(ZeroOneSystem { k, a, b, x })
}

/// The embedded point set `X'` together with the affine hull data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlackEmbedding {
    pub xprime: Vec<Vec<u8>>,
    /// Equation blocks `E y = f` of `Ax + s = b`, `x + x' = 1`, `s + s' = 1`.
    pub equations: RationalMatrix,
    pub rhs: QVec,
    /// Direction space of the affine solution set.
    pub l_basis: Vec<QVec>,
    pub h: QVec,
    pub alpha_sq: u64,
}

/// Maps `x` to `(x, 1 − x, s, 1 − s)` with `s = b − Ax`; requires every
/// slack to be 0 or 1.
pub fn slack_embedding(sys: &ZeroOneSystem) -> Result<SlackEmbedding, GadgetError> {
    let (k, m) = (sys.k, sys.m());
    let n = 2 * k + 2 * m;
    let mut xprime = Vec::with_capacity(sys.x.len());
    for x in &sys.x {
        let ax = sys.a.mul_vec(&to_q(x));
        let mut s = Vec::with_capacity(m);
        for (row, (l, r)) in ax.iter().zip(&sys.b).enumerate() {
            let slack = r - l;
            if slack.is_zero() {
                s.push(0u8);
            } else if slack.is_one() {
                s.push(1u8);
            } else {
                return Err(GadgetError::SlackViolation {
                    point: x.clone(),
                    row,
                    slack,
                });
            }
        }
        let mut y = x.clone();
        y.extend(x.iter().map(|v| 1 - v));
        y.extend(s.iter().copied());
        y.extend(s.iter().map(|v| 1 - v));
        xprime.push(y);
    }
    xprime.sort();
    let mut e = RationalMatrix::zeros(k + 2 * m, n);
    let mut f = Vec::with_capacity(k + 2 * m);
    for r in 0..m {
        for c in 0..k {
            e[(r, c)] = sys.a[(r, c)].clone();
        }
        e[(r, 2 * k + r)] = Rational::one();
        f.push(sys.b[r].clone());
    }
    for c in 0..k {
        e[(m + c, c)] = Rational::one();
        e[(m + c, k + c)] = Rational::one();
        f.push(Rational::one());
    }
    for r in 0..m {
        e[(m + k + r, 2 * k + r)] = Rational::one();
        e[(m + k + r, 2 * k + m + r)] = Rational::one();
        f.push(Rational::one());
    }
    let h = to_q(xprime.first().ok_or(GadgetError::NoSolutions)?);
    Ok(SlackEmbedding {
        xprime,
        l_basis: e.nullspace(),
        equations: e,
        rhs: f,
        h,
        alpha_sq: (k + m) as u64,
    })
}

/// The gadget lattice in α-unit ambient coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqualNormLattice {
    pub lattice: Lattice,
    /// Columns are the basis vectors in ambient `(z', t)` coordinates.
    pub basis: RationalMatrix,
    pub alpha_sq: u64,
    /// Coefficients of the orthogonal projection of `(0, −1)` onto `lin(Λ)`.
    pub p: QVec,
    /// Squared distance from `(0, −1)` to `lin(Λ)`.
    pub p_perp_norm2: Rational,
}

impl EqualNormLattice {
    pub fn ambient(&self, coeffs: &[Rational]) -> QVec {
        self.basis.mul_vec(coeffs)
    }

    pub fn weighted_norm2(&self, y: &[Rational]) -> Rational {
        let n = y.len();
        let w = Rational::from_int(self.alpha_sq as i64);
        let mut s: Rational = y[..n - 1].iter().map(|v| v * v).sum();
        s += &(&w * &(&y[n - 1] * &y[n - 1]));
        s
    }
}

/// `Λ = {(z', t) ∈ Z^N × Z : z' + t·h ∈ L, ⟨1, z'⟩ + t·alphaSq = 0}` with
/// weight `alphaSq` on `t`, LLL-reduced.
pub fn equal_norm_lattice(
    l_basis: &[QVec],
    h: &[Rational],
    alpha_sq: u64,
) -> Result<EqualNormLattice, GadgetError> {
    if alpha_sq == 0 {
        return Err(GadgetError::Inconsistent("alphaSq must be positive".into()));
    }
    let n = h.len();
    let normals: Vec<QVec> = if l_basis.is_empty() {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Rational::from_int((i == j) as i64))
                    .collect()
            })
            .collect()
    } else {
        if l_basis.iter().any(|v| v.len() != n) {
            return Err(GadgetError::Inconsistent(
                "direction vectors and h differ in length".into(),
            ));
        }
        RationalMatrix::from_rows(l_basis.to_vec(), n)
            .unwrap()
            .nullspace()
    };
    let mut rows: Vec<QVec> = normals
        .iter()
        .map(|e| {
            let mut r = e.clone();
            r.push(dot(e, h));
            r
        })
        .collect();
    let mut sum = vec![Rational::one(); n];
    sum.push(Rational::from_int(alpha_sq as i64));
    rows.push(sum);
    let c = RationalMatrix::from_rows(rows, n + 1).unwrap();
    let kernel = integer_kernel(&c);
    if kernel.is_empty() {
        return Err(GadgetError::Inconsistent("lattice is trivial".into()));
    }
    let cols: Vec<QVec> = kernel
        .iter()
        .map(|r| r.iter().cloned().map(Rational::from_bigint).collect())
        .collect();
    let k0 = RationalMatrix::from_columns(&cols, n + 1).unwrap();
    let mut wdiag = vec![Rational::one(); n];
    wdiag.push(Rational::from_int(alpha_sq as i64));
    let w = RationalMatrix::diagonal(&wdiag);
    let gram = &(&k0.transpose() * &w) * &k0;
    let raw =
        Lattice::from_gram(gram, "gadget").map_err(|e| GadgetError::Inconsistent(e.to_string()))?;
    let (lattice, u) = raw.lll_reduced();
    let basis = &k0 * &u;
    let mut p_amb = vec![Rational::zero(); n];
    p_amb.push(Rational::from_int(-1));
    let rhs = (&basis.transpose() * &w).mul_vec(&p_amb);
    let p = lattice
        .gram()
        .solve(&rhs)
        .expect("Gram matrix is invertible");
    let p_perp_norm2 = &Rational::from_int(alpha_sq as i64) - &lattice.qform(&p);
    Ok(EqualNormLattice {
        lattice,
        basis,
        alpha_sq,
        p,
        p_perp_norm2,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetInstance {
    pub k: usize,
    pub m: usize,
    pub a: RationalMatrix,
    pub b: QVec,
    pub x: Vec<Vec<u8>>,
    pub xprime: Vec<Vec<u8>>,
    pub alpha_sq: u64,
    pub h: QVec,
    pub l_basis: Vec<QVec>,
    pub lattice: EqualNormLattice,
}

impl GadgetInstance {
    pub fn rank(&self) -> usize {
        self.lattice.lattice.rank()
    }

    pub fn dim_h(&self) -> usize {
        self.l_basis.len()
    }

    /// Rebuilds the lattice from a replacement `h`, keeping everything else.
    pub fn with_h(&self, h: QVec) -> Result<GadgetInstance, GadgetError> {
        let lattice = equal_norm_lattice(&self.l_basis, &h, self.alpha_sq)?;
        Ok(GadgetInstance {
            h,
            lattice,
            ..self.clone()
        })
    }
}

/// Full pipeline for a 0/1 system: slack embedding, then the lattice.
pub fn build_gadget(sys: &ZeroOneSystem) -> Result<GadgetInstance, GadgetError> {
    let emb = slack_embedding(sys)?;
    let lattice = equal_norm_lattice(&emb.l_basis, &emb.h, emb.alpha_sq)?;
    Ok(GadgetInstance {
        k: sys.k,
        m: sys.m(),
        a: sys.a.clone(),
        b: sys.b.clone(),
        x: sys.x.clone(),
        xprime: emb.xprime,
        alpha_sq: emb.alpha_sq,
        h: emb.h,
        l_basis: emb.l_basis,
        lattice,
    })
}

/// Gadget for an affine subspace `h + span(l_basis)` given directly; `X`
/// is its set of 0/1 points, which must share the squared norm `alphaSq`.
pub fn raw_gadget(
    l_basis: &[QVec],
    h: &[Rational],
    alpha_sq: u64,
) -> Result<GadgetInstance, GadgetError> {
    let n = h.len();
    if n > MAX_ENUM_VARS {
        return Err(GadgetError::TooManyVariables(n));
    }
    let normals: Vec<QVec> = if l_basis.is_empty() {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Rational::from_int((i == j) as i64))
                    .collect()
            })
            .collect()
    } else {
        RationalMatrix::from_rows(l_basis.to_vec(), n)
            .map_err(|e| GadgetError::Inconsistent(e.to_string()))?
            .nullspace()
    };
    let offsets: Vec<Rational> = normals.iter().map(|e| dot(e, h)).collect();
    let mut x = Vec::new();
    for mask in 0..1u64 << n {
        let v = bits(mask, n);
        let vq = to_q(&v);
        if normals.iter().zip(&offsets).all(|(e, o)| &dot(e, &vq) == o) {
            let norm2 = v.iter().map(|&b| b as u64).sum::<u64>();
            if norm2 != alpha_sq {
                return Err(GadgetError::UnequalNorm {
                    point: v,
                    norm2,
                    alpha_sq,
                });
            }
            x.push(v);
        }
    }
    x.sort();
    let lattice = equal_norm_lattice(l_basis, h, alpha_sq)?;
    Ok(GadgetInstance {
        k: n,
        m: 0,
        a: RationalMatrix::zeros(0, n),
        b: vec![],
        xprime: x.clone(),
        x,
        alpha_sq,
        h: h.to_vec(),
        l_basis: l_basis.to_vec(),
        lattice,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GadgetCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Offending points in ambient coordinates.
    pub witnesses: Vec<QVec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GadgetReport {
    pub passed: bool,
    pub k: usize,
    pub m: usize,
    pub solutions: usize,
    pub alpha_sq: u64,
    pub dim_h: usize,
    pub rank: usize,
    pub closest_count: usize,
    pub face_vertices: usize,
    pub checks: Vec<GadgetCheck>,
}

fn set_diff(a: &BTreeSet<QVec>, b: &BTreeSet<QVec>) -> Vec<QVec> {
    a.difference(b).cloned().collect()
}

fn check(name: &str, passed: bool, detail: String, witnesses: Vec<QVec>) -> GadgetCheck {
    GadgetCheck {
        name: name.into(),
        passed,
        detail,
        witnesses,
    }
}

/// Checks (1) `cl(p, Λ) = {0} ∪ {(x', −1)}` at squared distance alphaSq,
/// (2) the polar face has vertices `(x', −1)/alphaSq`, and (3) scaling the
/// first `k` coordinates of those vertices by alphaSq gives `X` bijectively.
pub fn verify_gadget(g: &GadgetInstance) -> Result<GadgetReport, GadgetError> {
    let gl = &g.lattice;
    let cap = max_rank();
    if gl.lattice.rank() > cap {
        return Err(GadgetError::RankLimit {
            rank: gl.lattice.rank(),
            cap,
        });
    }
    let alpha = Rational::from_int(g.alpha_sq as i64);
    let u_set: BTreeSet<QVec> = std::iter::once(vec![Rational::zero(); g.h.len() + 1])
        .chain(g.xprime.iter().map(|x| {
            let mut v = to_q(x);
            v.push(Rational::from_int(-1));
            v
        }))
        .collect();
    let mut checks = Vec::new();

    let (d2, closest) = Enumerator::new(&gl.lattice).closest_vectors(&gl.p);
    let dist2 = &d2 + &gl.p_perp_norm2;
    let found: BTreeSet<QVec> = closest
        .iter()
        .map(|z| gl.ambient(&z.to_rational()))
        .collect();
    let mut w = set_diff(&found, &u_set);
    w.extend(set_diff(&u_set, &found));
    let ok1 = dist2 == alpha && w.is_empty();
    checks.push(check(
        "closest set",
        ok1,
        format!(
            "dist2 = {dist2} (expected {alpha}), |cl| = {} (expected {})",
            found.len(),
            u_set.len()
        ),
        w,
    ));

    let expected_face: BTreeSet<QVec> = u_set
        .iter()
        .filter(|u| !u.iter().all(Rational::is_zero))
        .map(|u| u.iter().map(|v| v / &alpha).collect())
        .collect();
    let mut face_vertices: Vec<QVec> = vec![];
    match polar_face(&gl.lattice, &gl.p) {
        Err(VoronoiError::NotClosest { witness, .. }) => {
            checks.push(check(
                "polar face",
                false,
                "origin is not a closest lattice point".into(),
                vec![gl.ambient(&witness.to_rational())],
            ));
        }
        Err(e) => return Err(GadgetError::Inconsistent(e.to_string())),
        Ok(pf) => {
            face_vertices = match pf.face {
                Some(f) => f
                    .vertices()
                    .unwrap()
                    .iter()
                    .map(|v| gl.ambient(v))
                    .collect(),
                None => vec![],
            };
            let got: BTreeSet<QVec> = face_vertices.iter().cloned().collect();
            let mut w = set_diff(&got, &expected_face);
            w.extend(set_diff(&expected_face, &got));
            checks.push(check(
                "polar face",
                w.is_empty(),
                format!("{} vertices (expected {})", got.len(), expected_face.len()),
                w,
            ));
        }
    }

    let projected: Vec<QVec> = face_vertices
        .iter()
        .map(|v| v[..g.k].iter().map(|c| c * &alpha).collect())
        .collect();
    let projected_set: BTreeSet<QVec> = projected.iter().cloned().collect();
    let x_set: BTreeSet<QVec> = g.x.iter().map(|x| to_q(x)).collect();
    let mut w = set_diff(&projected_set, &x_set);
    w.extend(set_diff(&x_set, &projected_set));
    let bijective = projected_set.len() == projected.len();
    checks.push(check(
        "projection onto X",
        w.is_empty() && bijective,
        format!(
            "{} images, {} distinct, |X| = {}",
            projected.len(),
            projected_set.len(),
            x_set.len()
        ),
        w,
    ));

    Ok(GadgetReport {
        passed: checks.iter().all(|c| c.passed),
        k: g.k,
        m: g.m,
        solutions: g.x.len(),
        alpha_sq: g.alpha_sq,
        dim_h: g.dim_h(),
        rank: gl.lattice.rank(),
        closest_count: closest.len(),
        face_vertices: face_vertices.len(),
        checks,
    })
}

/// Lattice vectors of the gadget in ambient coordinates, for reporting.
pub fn ambient_vectors(g: &EqualNormLattice, zs: &[LatticeVector]) -> Vec<QVec> {
    zs.iter().map(|z| g.ambient(&z.to_rational())).collect()
}
