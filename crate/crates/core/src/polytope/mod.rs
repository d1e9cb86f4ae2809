//! Exact polyhedral kernel: H- and V-descriptions, conversions between them,
//! duality, affine images, projections, exact linear programming and slack
//! matrices.

mod dd;
mod fm;
mod lp;
mod slack;

pub use dd::{extreme_rays, facet_enumeration, vertex_enumeration};
pub use fm::fm_project;
pub use lp::{
    lp_feasible, maximize, verify_certificate, Feasibility, LinearProgram, LpError, LpResult,
    LpSession,
};
pub use slack::{slack_matrix, slack_rank_bounds, SlackMatrix, SlackRankBounds};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{dot, primitive_vec, scale_vec, sub_vec, QVec, Rational, RationalMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolytopeError {
    #[error("polyhedron is unbounded")]
    Unbounded,
    #[error("polyhedron is empty")]
    Empty,
    #[error("origin is not in the relative interior")]
    OriginNotInterior,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative slack {value} at inequality {row}, vertex {col}")]
    NegativeSlack {
        row: usize,
        col: usize,
        value: Rational,
    },
    #[error("inequality is not valid for the polytope: {0}")]
    InvalidInequality(String),
    #[error("polytope has no {0} description")]
    MissingDescription(&'static str),
}

/// `normal·x ≤ rhs` (or `=` when used as an equation).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: QVec,
    pub rhs: Rational,
}

impl Halfspace {
    pub fn new(normal: QVec, rhs: Rational) -> Self {
        Halfspace { normal, rhs }
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        dot(&self.normal, x)
    }

    /// `rhs − normal·x`.
    pub fn slack(&self, x: &[Rational]) -> Rational {
        &self.rhs - &self.eval(x)
    }

    pub fn is_trivial(&self) -> bool {
        self.normal.iter().all(Rational::is_zero)
    }

    /// Positive rescaling to coprime integers.
    pub fn canonical_inequality(&self) -> Halfspace {
        let mut all = self.normal.clone();
        all.push(self.rhs.clone());
        let mut p = primitive_vec(&all);
        let rhs = p.pop().unwrap();
        Halfspace { normal: p, rhs }
    }

    /// Coprime integers with the first nonzero normal entry positive.
    pub fn canonical_equation(&self) -> Halfspace {
        let h = self.canonical_inequality();
        match h.normal.iter().find(|x| !x.is_zero()) {
            Some(x) if x.is_negative() => h.negated(),
            _ => h,
        }
    }

    pub fn negated(&self) -> Halfspace {
        Halfspace {
            normal: self.normal.iter().map(|x| -x).collect(),
            rhs: -&self.rhs,
        }
    }

    /// Rescaled to right-hand side 1 (requires `rhs > 0`).
    pub fn unit_rhs(&self) -> Halfspace {
        assert!(
            self.rhs.is_positive(),
            "unit_rhs needs a positive right-hand side"
        );
        let s = self.rhs.recip();
        Halfspace {
            normal: scale_vec(&self.normal, &s),
            rhs: Rational::one(),
        }
    }
}

/// `{x : a_i·x ≤ b_i, e_j·x = f_j}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HDesc {
    pub dim: usize,
    pub inequalities: Vec<Halfspace>,
    #[serde(default)]
    pub equations: Vec<Halfspace>,
}

impl HDesc {
    pub fn new(dim: usize, inequalities: Vec<Halfspace>, equations: Vec<Halfspace>) -> Self {
        for h in inequalities.iter().chain(&equations) {
            assert_eq!(h.dim(), dim, "halfspace dimension mismatch");
        }
        HDesc {
            dim,
            inequalities,
            equations,
        }
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: &Rational, hi: &Rational) -> Self {
        let mut ineqs = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            let mut e = vec![Rational::zero(); dim];
            e[i] = Rational::one();
            ineqs.push(Halfspace::new(e.clone(), hi.clone()));
            ineqs.push(Halfspace::new(scale_vec(&e, &Rational::from_int(-1)), -lo));
        }
        HDesc::new(dim, ineqs, vec![])
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.inequalities.iter().all(|h| !h.slack(x).is_negative())
            && self.equations.iter().all(|h| h.slack(x).is_zero())
    }

    /// Equations in reduced echelon form with coprime integer rows, and
    /// their pivot columns. `None` when the equations are inconsistent.
    pub fn reduced_equations(&self) -> Option<(Vec<Halfspace>, Vec<usize>)> {
        if self.equations.is_empty() {
            return Some((vec![], vec![]));
        }
        let rows: Vec<QVec> = self
            .equations
            .iter()
            .map(|e| {
                let mut r = e.normal.clone();
                r.push(e.rhs.clone());
                r
            })
            .collect();
        let m = RationalMatrix::from_rows(rows, self.dim + 1).unwrap();
        let rref = m.rref();
        if rref.pivots.contains(&self.dim) {
            return None;
        }
        let eqs = (0..rref.pivots.len())
            .map(|i| {
                let r = rref.matrix.row(i);
                Halfspace::new(r[..self.dim].to_vec(), r[self.dim].clone()).canonical_equation()
            })
            .collect();
        Some((eqs, rref.pivots))
    }

    /// Canonical form for set comparison: equations reduced, each inequality
    /// reduced modulo the equations and scaled to coprime integers, trivial
    /// inequalities dropped, duplicates removed, everything sorted. Returns
    /// `None` when the equations are inconsistent.
    pub fn canonical(&self) -> Option<HDesc> {
        let (eqs, pivots) = self.reduced_equations()?;
        let mut ineqs: Vec<Halfspace> = Vec::new();
        for h in &self.inequalities {
            let mut a = h.normal.clone();
            let mut b = h.rhs.clone();
            for (e, &p) in eqs.iter().zip(&pivots) {
                if a[p].is_zero() {
                    continue;
                }
                let f = &a[p] / &e.normal[p];
                for (aj, ej) in a.iter_mut().zip(&e.normal) {
                    *aj -= &f * ej;
                }
                b -= &f * &e.rhs;
            }
            let g = Halfspace::new(a, b);
            if g.is_trivial() {
                if g.rhs.is_negative() {
                    // infeasible row, keep it so the set stays empty
                    ineqs.push(Halfspace::new(g.normal, Rational::from_int(-1)));
                }
                continue;
            }
            ineqs.push(g.canonical_inequality());
        }
        ineqs.sort();
        ineqs.dedup();
        Some(HDesc {
            dim: self.dim,
            inequalities: ineqs,
            equations: eqs,
        })
    }

    /// Orthogonal projection of `a` onto the common null space of the
    /// equation normals.
    pub fn project_onto_lineality(&self, a: &[Rational]) -> QVec {
        if self.equations.is_empty() {
            return a.to_vec();
        }
        let e = RationalMatrix::from_rows(
            self.equations.iter().map(|h| h.normal.clone()).collect(),
            self.dim,
        )
        .unwrap();
        let rref = e.rref();
        let rows: Vec<QVec> = rref.matrix.to_rows()[..rref.pivots.len()].to_vec();
        let f = RationalMatrix::from_rows(rows, self.dim).unwrap();
        let fft = &f * &f.transpose();
        let coef = fft.solve(&f.mul_vec(a)).expect("independent rows");
        sub_vec(a, &f.transpose().mul_vec(&coef))
    }
}

/// `x ↦ matrix·x + offset`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineMap {
    pub matrix: RationalMatrix,
    pub offset: QVec,
}

impl AffineMap {
    pub fn new(matrix: RationalMatrix, offset: QVec) -> Self {
        assert_eq!(matrix.rows(), offset.len(), "offset dimension mismatch");
        AffineMap { matrix, offset }
    }

    pub fn linear(matrix: RationalMatrix) -> Self {
        let n = matrix.rows();
        AffineMap {
            matrix,
            offset: vec![Rational::zero(); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        AffineMap::linear(RationalMatrix::identity(n))
    }

    pub fn source_dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn target_dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, x: &[Rational]) -> QVec {
        let mut y = self.matrix.mul_vec(x);
        for (yi, oi) in y.iter_mut().zip(&self.offset) {
            *yi += oi;
        }
        y
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            matrix: &self.matrix * &other.matrix,
            offset: self.apply(&other.offset),
        }
    }
}

/// A polytope with whichever descriptions are known. When both are present
/// they describe the same set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Polytope {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<HDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<QVec>>,
}

impl Polytope {
    pub fn from_h(h: HDesc) -> Self {
        Polytope {
            dim: h.dim,
            h: Some(h),
            vertices: None,
        }
    }

    /// Trusts that every point is a vertex; sorts and removes duplicates.
    pub fn from_vertices(dim: usize, mut vertices: Vec<QVec>) -> Self {
        for v in &vertices {
            assert_eq!(v.len(), dim, "vertex dimension mismatch");
        }
        vertices.sort();
        vertices.dedup();
        Polytope {
            dim,
            h: None,
            vertices: Some(vertices),
        }
    }

    /// Convex hull of arbitrary points, keeping both descriptions.
    pub fn from_points(dim: usize, points: Vec<QVec>) -> Result<Self, PolytopeError> {
        let mut pts = points;
        pts.sort();
        pts.dedup();
        if pts.is_empty() {
            return Err(PolytopeError::Empty);
        }
        let h = facet_enumeration(dim, &pts)?;
        let verts = extreme_points(&h, &pts);
        Ok(Polytope {
            dim,
            h: Some(h),
            vertices: Some(verts),
        })
    }

    pub fn with_both(h: HDesc, vertices: Vec<QVec>) -> Self {
        let mut p = Polytope::from_vertices(h.dim, vertices);
        p.h = Some(h);
        p
    }

    pub fn h(&self) -> Option<&HDesc> {
        self.h.as_ref()
    }

    pub fn vertices(&self) -> Option<&[QVec]> {
        self.vertices.as_deref()
    }

    /// Computes the vertex description if missing.
    pub fn ensure_vertices(&mut self) -> Result<&[QVec], PolytopeError> {
        if self.vertices.is_none() {
            let h = self
                .h
                .as_ref()
                .ok_or(PolytopeError::MissingDescription("H"))?;
            self.vertices = Some(vertex_enumeration(h)?);
        }
        Ok(self.vertices.as_deref().unwrap())
    }

    /// Computes an irredundant H-description from the vertices if missing.
    pub fn ensure_h(&mut self) -> Result<&HDesc, PolytopeError> {
        if self.h.is_none() {
            let v = self
                .vertices
                .as_ref()
                .ok_or(PolytopeError::MissingDescription("V"))?;
            self.h = Some(facet_enumeration(self.dim, v)?);
        }
        Ok(self.h.as_ref().unwrap())
    }

    /// Both descriptions, with the H-description irredundant.
    pub fn complete(&self) -> Result<Polytope, PolytopeError> {
        let mut p = self.clone();
        let v = p.ensure_vertices()?.to_vec();
        let h = facet_enumeration(self.dim, &v)?;
        Ok(Polytope::with_both(h, v))
    }

    pub fn contains(&self, x: &[Rational]) -> Result<bool, PolytopeError> {
        match (&self.h, &self.vertices) {
            (Some(h), _) => Ok(h.contains(x)),
            (None, Some(_)) => {
                let mut p = self.clone();
                Ok(p.ensure_h()?.contains(x))
            }
            _ => Err(PolytopeError::MissingDescription("any")),
        }
    }

    /// Dimension of the affine hull (needs the vertices).
    pub fn affine_dimension(&self) -> Result<usize, PolytopeError> {
        let mut p = self.clone();
        let v = p.ensure_vertices()?;
        let diffs: Vec<QVec> = v.iter().map(|x| sub_vec(x, &v[0])).collect();
        Ok(RationalMatrix::from_rows(diffs, self.dim).unwrap().rank())
    }

    pub fn is_full_dimensional(&self) -> Result<bool, PolytopeError> {
        Ok(self.affine_dimension()? == self.dim)
    }

    /// Origin strictly inside relative to the affine hull, decided on an
    /// irredundant H-description.
    pub fn contains_origin_in_relative_interior(&self) -> Result<bool, PolytopeError> {
        let c = self.complete()?;
        let h = c.h.unwrap();
        Ok(h.equations.iter().all(|e| e.rhs.is_zero())
            && h.inequalities.iter().all(|i| i.rhs.is_positive()))
    }

    /// Same point set, compared on sorted vertex lists.
    pub fn same_set(&self, other: &Polytope) -> Result<bool, PolytopeError> {
        let mut a = self.clone();
        let mut b = other.clone();
        let va = a.ensure_vertices()?.to_vec();
        let vb = b.ensure_vertices()?.to_vec();
        Ok(va == vb)
    }

    pub fn scale(&self, s: &Rational) -> Polytope {
        assert!(s.is_positive(), "scale factor must be positive");
        let h = self.h.as_ref().map(|h| HDesc {
            dim: h.dim,
            inequalities: h
                .inequalities
                .iter()
                .map(|i| Halfspace::new(i.normal.clone(), &i.rhs * s))
                .collect(),
            equations: h
                .equations
                .iter()
                .map(|i| Halfspace::new(i.normal.clone(), &i.rhs * s))
                .collect(),
        });
        let vertices = self
            .vertices
            .as_ref()
            .map(|vs| vs.iter().map(|v| scale_vec(v, s)).collect::<Vec<_>>());
        let mut p = Polytope {
            dim: self.dim,
            h,
            vertices,
        };
        if let Some(v) = p.vertices.as_mut() {
            v.sort();
        }
        p
    }

    /// Image under an invertible linear map `x ↦ M·x`; `m_inv_t` is `M⁻ᵀ`.
    pub fn linear_image_invertible(
        &self,
        m: &RationalMatrix,
        m_inv_t: &RationalMatrix,
    ) -> Polytope {
        let h = self.h.as_ref().map(|h| {
            let map = |hs: &Halfspace| Halfspace::new(m_inv_t.mul_vec(&hs.normal), hs.rhs.clone());
            HDesc {
                dim: h.dim,
                inequalities: h.inequalities.iter().map(map).collect(),
                equations: h.equations.iter().map(map).collect(),
            }
        });
        let vertices = self.vertices.as_ref().map(|vs| {
            let mut out: Vec<QVec> = vs.iter().map(|v| m.mul_vec(v)).collect();
            out.sort();
            out
        });
        Polytope {
            dim: self.dim,
            h,
            vertices,
        }
    }
}

/// Points of `pts` (all inside `h`) that are vertices: their tight
/// inequalities together with the equations pin down a single point.
fn extreme_points(h: &HDesc, pts: &[QVec]) -> Vec<QVec> {
    let mut out = Vec::new();
    for p in pts {
        let mut rows: Vec<QVec> = h.equations.iter().map(|e| e.normal.clone()).collect();
        rows.extend(
            h.inequalities
                .iter()
                .filter(|i| i.slack(p).is_zero())
                .map(|i| i.normal.clone()),
        );
        let r = if rows.is_empty() {
            0
        } else {
            RationalMatrix::from_rows(rows, h.dim).unwrap().rank()
        };
        if r == h.dim {
            out.push(p.clone());
        }
    }
    out.sort();
    out
}

/// Polar `P° = {y ∈ lin(P) : ⟨x,y⟩ ≤ 1 ∀x ∈ P}` with both descriptions.
pub fn dualize(p: &Polytope) -> Result<Polytope, PolytopeError> {
    let c = p.complete()?;
    let h = c.h.as_ref().unwrap();
    if !(h.equations.iter().all(|e| e.rhs.is_zero())
        && h.inequalities.iter().all(|i| i.rhs.is_positive()))
    {
        return Err(PolytopeError::OriginNotInterior);
    }
    let verts: Vec<QVec> = h
        .inequalities
        .iter()
        .map(|i| h.project_onto_lineality(&i.unit_rhs().normal))
        .collect();
    let ineqs: Vec<Halfspace> = c
        .vertices
        .as_ref()
        .unwrap()
        .iter()
        .map(|v| Halfspace::new(v.clone(), Rational::one()))
        .collect();
    let hd = HDesc::new(p.dim, ineqs, h.equations.clone());
    Ok(Polytope::with_both(hd, verts))
}

/// Image of a polytope under an affine map (hull of mapped vertices).
pub fn affine_image(p: &Polytope, map: &AffineMap) -> Result<Polytope, PolytopeError> {
    if map.source_dim() != p.dim {
        return Err(PolytopeError::DimensionMismatch {
            expected: p.dim,
            got: map.source_dim(),
        });
    }
    let mut q = p.clone();
    let pts: Vec<QVec> = q.ensure_vertices()?.iter().map(|v| map.apply(v)).collect();
    Polytope::from_points(map.target_dim(), pts)
}

/// Cartesian product `P × Q` (H-description; vertices when both known).
pub fn cartesian_product(p: &Polytope, q: &Polytope) -> Result<Polytope, PolytopeError> {
    let n = p.dim + q.dim;
    let mut a = p.clone();
    let mut b = q.clone();
    let ha = a.ensure_h()?.clone();
    let hb = b.ensure_h()?.clone();
    let pad = |h: &Halfspace, left: bool| {
        let mut v = vec![Rational::zero(); n];
        let off = if left { 0 } else { p.dim };
        for (i, x) in h.normal.iter().enumerate() {
            v[off + i] = x.clone();
        }
        Halfspace::new(v, h.rhs.clone())
    };
    let ineqs = ha
        .inequalities
        .iter()
        .map(|h| pad(h, true))
        .chain(hb.inequalities.iter().map(|h| pad(h, false)))
        .collect();
    let eqs = ha
        .equations
        .iter()
        .map(|h| pad(h, true))
        .chain(hb.equations.iter().map(|h| pad(h, false)))
        .collect();
    let h = HDesc::new(n, ineqs, eqs);
    let va = a.ensure_vertices()?.to_vec();
    let vb = b.ensure_vertices()?.to_vec();
    let verts = va
        .iter()
        .flat_map(|x| vb.iter().map(move |y| [x.clone(), y.clone()].concat()))
        .collect();
    Ok(Polytope::with_both(h, verts))
}
