//! Extended formulations as values: a polyhedron `Q`, an affine map `π`,
//! and the polytope `π(Q)` is claimed to be. Combinators build new lifts
//! from old ones; [`verify_lift`] proves the claim per instance with exact
//! linear programming.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{dot, scale_vec, QVec, Rational, RationalMatrix};
use crate::lattice::{congruence_lattice, root_lattice, Family, Lattice, LatticeError};
use crate::polytope::{
    affine_image, lp_feasible, AffineMap, Feasibility, HDesc, Halfspace, LpResult, LpSession,
    Polytope, PolytopeError,
};
use crate::voronoi::{cell_from_relevant, dual_cell_from_relevant, relevant_vectors, VoronoiError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LiftError {
    #[error("target dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("union member {0} is empty")]
    EmptyMember(usize),
    #[error("union of no lifts")]
    EmptyUnion,
    #[error("no root-cell lift for {family} in dimension {d}")]
    InvalidFamily { family: String, d: usize },
    #[error("lifted polyhedron is unbounded")]
    Unbounded,
    #[error("inequality is not valid for the projection: maximum {max} exceeds {rhs}")]
    InvalidInequality { max: Rational, rhs: Rational },
    #[error("lift has no target polytope")]
    NoTarget,
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Voronoi(#[from] VoronoiError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// How the lift relates to the cell it is reported for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    /// `π(Q)` is the polytope itself.
    Direct,
    /// `π(Q)` is the polar; the same size bound transfers by polarity.
    Polar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftMeta {
    pub name: String,
    pub route: Route,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl LiftMeta {
    fn named(name: impl Into<String>) -> Self {
        LiftMeta {
            name: name.into(),
            route: Route::Direct,
            notes: vec![],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lift {
    pub q: HDesc,
    pub proj: AffineMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Polytope>,
    pub meta: LiftMeta,
}

fn zeros(n: usize) -> QVec {
    vec![Rational::zero(); n]
}

fn pad(h: &Halfspace, offset: usize, total: usize) -> Halfspace {
    let mut v = zeros(total);
    for (i, x) in h.normal.iter().enumerate() {
        v[offset + i] = x.clone();
    }
    Halfspace::new(v, h.rhs.clone())
}

/// Horizontal concatenation `[A | B]`.
fn hcat(a: &RationalMatrix, b: &RationalMatrix) -> RationalMatrix {
    RationalMatrix::hstack(a, b)
}

impl Lift {
    pub fn facet_count(&self) -> usize {
        self.q.inequalities.len()
    }

    pub fn lifted_dim(&self) -> usize {
        self.q.dim
    }

    pub fn target_dim(&self) -> usize {
        self.proj.target_dim()
    }

    pub fn with_target(mut self, target: Polytope) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.meta.name = name.into();
        self
    }

    /// `Q = P`, `π = id`, from an H-description.
    pub fn identity(p: &Polytope) -> Result<Lift, LiftError> {
        let mut p = p.clone();
        let h = p.ensure_h()?.clone();
        Ok(Lift {
            proj: AffineMap::identity(h.dim),
            q: h,
            target: Some(p),
            meta: LiftMeta::named("identity"),
        })
    }

    /// `Q` = standard simplex over the points, `π(λ) = Σ λ_i v_i`. A single
    /// point becomes the zero-dimensional lift with no variables.
    pub fn simplex_hull(dim: usize, points: &[QVec]) -> Lift {
        let mut pts = points.to_vec();
        pts.sort();
        pts.dedup();
        assert!(!pts.is_empty(), "simplex hull of no points");
        if pts.len() == 1 {
            return Lift::point(&pts[0]);
        }
        let n = pts.len();
        let ineqs = (0..n)
            .map(|i| {
                let mut v = zeros(n);
                v[i] = Rational::from_int(-1);
                Halfspace::new(v, Rational::zero())
            })
            .collect();
        let eq = Halfspace::new(vec![Rational::one(); n], Rational::one());
        let m = RationalMatrix::from_columns(&pts, dim).unwrap();
        Lift {
            q: HDesc::new(n, ineqs, vec![eq]),
            proj: AffineMap::linear(m),
            target: Some(Polytope::from_vertices(dim, pts)),
            meta: LiftMeta::named("simplex hull"),
        }
    }

    /// The single point `x`: no lifted variables, `π` is the constant map.
    pub fn point(x: &[Rational]) -> Lift {
        Lift {
            q: HDesc::new(0, vec![], vec![]),
            proj: AffineMap::new(RationalMatrix::zeros(x.len(), 0), x.to_vec()),
            target: Some(Polytope::from_vertices(x.len(), vec![x.to_vec()])),
            meta: LiftMeta::named("point"),
        }
    }

    /// `conv{−g, g}` as the image of `[−1, 1]`.
    pub fn segment(g: &[Rational]) -> Lift {
        let m = RationalMatrix::from_columns(&[g.to_vec()], g.len()).unwrap();
        let neg: QVec = g.iter().map(|x| -x).collect();
        Lift {
            q: HDesc::cube(1, &Rational::from_int(-1), &Rational::one()),
            proj: AffineMap::linear(m),
            target: Some(Polytope::from_vertices(g.len(), vec![neg, g.to_vec()])),
            meta: LiftMeta::named("segment"),
        }
    }
}

/// `Q1 × Q2` with the block projection; targets multiply.
pub fn lift_product(l1: &Lift, l2: &Lift) -> Result<Lift, LiftError> {
    let (n1, n2) = (l1.q.dim, l2.q.dim);
    let n = n1 + n2;
    let q = HDesc::new(
        n,
        l1.q.inequalities
            .iter()
            .map(|h| pad(h, 0, n))
            .chain(l2.q.inequalities.iter().map(|h| pad(h, n1, n)))
            .collect(),
        l1.q.equations
            .iter()
            .map(|h| pad(h, 0, n))
            .chain(l2.q.equations.iter().map(|h| pad(h, n1, n)))
            .collect(),
    );
    let matrix = RationalMatrix::block_diag(&l1.proj.matrix, &l2.proj.matrix);
    let offset = [l1.proj.offset.clone(), l2.proj.offset.clone()].concat();
    let target = match (&l1.target, &l2.target) {
        (Some(a), Some(b)) => Some(crate::polytope::cartesian_product(a, b)?),
        _ => None,
    };
    Ok(Lift {
        q,
        proj: AffineMap::new(matrix, offset),
        target,
        meta: LiftMeta::named(format!("({}) x ({})", l1.meta.name, l2.meta.name)),
    })
}

/// Target vertices, enumerated from the H-description when needed.
fn target_vertices(l: &Lift) -> Option<Vec<QVec>> {
    let mut t = l.target.clone()?;
    t.ensure_vertices().ok().map(|v| v.to_vec())
}

fn same_target_dim(l1: &Lift, l2: &Lift) -> Result<(), LiftError> {
    if l1.target_dim() != l2.target_dim() {
        return Err(LiftError::DimensionMismatch(
            l1.target_dim(),
            l2.target_dim(),
        ));
    }
    Ok(())
}

fn stack_q(l1: &Lift, l2: &Lift) -> HDesc {
    let (n1, n2) = (l1.q.dim, l2.q.dim);
    let n = n1 + n2;
    HDesc::new(
        n,
        l1.q.inequalities
            .iter()
            .map(|h| pad(h, 0, n))
            .chain(l2.q.inequalities.iter().map(|h| pad(h, n1, n)))
            .collect(),
        l1.q.equations
            .iter()
            .map(|h| pad(h, 0, n))
            .chain(l2.q.equations.iter().map(|h| pad(h, n1, n)))
            .collect(),
    )
}

/// `(y, z) ↦ π1(y) + π2(z)`.
pub fn lift_minkowski(l1: &Lift, l2: &Lift) -> Result<Lift, LiftError> {
    same_target_dim(l1, l2)?;
    let q = stack_q(l1, l2);
    let matrix = hcat(&l1.proj.matrix, &l2.proj.matrix);
    let offset: QVec = l1
        .proj
        .offset
        .iter()
        .zip(&l2.proj.offset)
        .map(|(a, b)| a + b)
        .collect();
    let target = match (target_vertices(l1), target_vertices(l2)) {
        (Some(a), Some(b)) => {
            let pts = a
                .iter()
                .flat_map(|x| {
                    b.iter()
                        .map(move |y| x.iter().zip(y).map(|(u, v)| u + v).collect::<QVec>())
                })
                .collect();
            Some(Polytope::from_points(l1.target_dim(), pts)?)
        }
        _ => None,
    };
    Ok(Lift {
        q,
        proj: AffineMap::new(matrix, offset),
        target,
        meta: LiftMeta::named(format!("({}) + ({})", l1.meta.name, l2.meta.name)),
    })
}

/// `{(y, z) ∈ Q1 × Q2 : π1(y) = π2(z)}` projected by `π1`.
pub fn lift_intersection(l1: &Lift, l2: &Lift) -> Result<Lift, LiftError> {
    same_target_dim(l1, l2)?;
    let mut q = stack_q(l1, l2);
    let n1 = l1.q.dim;
    for i in 0..l1.target_dim() {
        let mut row = zeros(q.dim);
        for j in 0..n1 {
            row[j] = l1.proj.matrix[(i, j)].clone();
        }
        for j in 0..l2.q.dim {
            row[n1 + j] = -&l2.proj.matrix[(i, j)];
        }
        let rhs = &l2.proj.offset[i] - &l1.proj.offset[i];
        if row.iter().all(Rational::is_zero) && rhs.is_zero() {
            continue;
        }
        q.equations.push(Halfspace::new(row, rhs));
    }
    let matrix = hcat(
        &l1.proj.matrix,
        &RationalMatrix::zeros(l1.target_dim(), l2.q.dim),
    );
    let target = match (
        l1.target.as_ref().and_then(|t| t.h()),
        l2.target.as_ref().and_then(|t| t.h()),
    ) {
        (Some(a), Some(b)) => {
            let mut h = a.clone();
            h.inequalities.extend(b.inequalities.iter().cloned());
            h.equations.extend(b.equations.iter().cloned());
            Some(Polytope::from_h(h))
        }
        _ => None,
    };
    Ok(Lift {
        q,
        proj: AffineMap::new(matrix, l1.proj.offset.clone()),
        target,
        meta: LiftMeta::named(format!("({}) & ({})", l1.meta.name, l2.meta.name)),
    })
}

/// Whether `λ ≥ 0` follows from the homogenized block `A y ≤ λ b, E y = λ f`.
fn scale_sign_implied(q: &HDesc) -> bool {
    if q.dim == 0 {
        return false;
    }
    let n = q.dim + 1;
    let hom = |h: &Halfspace| {
        let mut v = h.normal.clone();
        v.push(-&h.rhs);
        Halfspace::new(v, Rational::zero())
    };
    let mut ineqs: Vec<Halfspace> = q.inequalities.iter().map(hom).collect();
    let mut lower = zeros(n);
    lower[q.dim] = Rational::from_int(-1);
    ineqs.push(Halfspace::new(lower, Rational::one()));
    let sys = HDesc::new(n, ineqs, q.equations.iter().map(hom).collect());
    let mut obj = zeros(n);
    obj[q.dim] = Rational::from_int(-1);
    match LpSession::new(&sys) {
        Err(_) => true,
        Ok(mut s) => match s.maximize(&obj) {
            LpResult::Optimal { value, .. } => !value.is_positive(),
            LpResult::Unbounded => false,
        },
    }
}

/// Balas union: blocks `(y_i, λ_i)` with `A_i y_i ≤ λ_i b_i`,
/// `E_i y_i = λ_i f_i`, `Σ λ_i = 1`, and `π = Σ (M_i y_i + λ_i o_i)`.
/// `λ_i ≥ 0` is added only for blocks that do not already imply it, which
/// is the case for single points.
pub fn lift_union(lifts: &[Lift]) -> Result<Lift, LiftError> {
    let first = lifts.first().ok_or(LiftError::EmptyUnion)?;
    let td = first.target_dim();
    for l in lifts {
        same_target_dim(first, l)?;
    }
    for (i, l) in lifts.iter().enumerate() {
        if LpSession::new(&l.q).is_err() {
            return Err(LiftError::EmptyMember(i));
        }
    }
    let n: usize = lifts.iter().map(|l| l.q.dim + 1).sum();
    let mut ineqs = Vec::new();
    let mut eqs = Vec::new();
    let mut matrix = RationalMatrix::zeros(td, n);
    let mut sum = zeros(n);
    let mut added = 0usize;
    let mut off = 0;
    for l in lifts {
        let lam = off + l.q.dim;
        let hom = |h: &Halfspace| {
            let mut v = pad(h, off, n);
            v.normal[lam] = -&h.rhs;
            v.rhs = Rational::zero();
            v
        };
        ineqs.extend(l.q.inequalities.iter().map(hom));
        eqs.extend(l.q.equations.iter().map(hom));
        if !scale_sign_implied(&l.q) {
            let mut v = zeros(n);
            v[lam] = Rational::from_int(-1);
            ineqs.push(Halfspace::new(v, Rational::zero()));
            added += 1;
        }
        for r in 0..td {
            for c in 0..l.q.dim {
                matrix[(r, off + c)] = l.proj.matrix[(r, c)].clone();
            }
            matrix[(r, lam)] = l.proj.offset[r].clone();
        }
        sum[lam] = Rational::one();
        off = lam + 1;
    }
    eqs.push(Halfspace::new(sum, Rational::one()));
    let member_vertices: Option<Vec<Vec<QVec>>> = lifts.iter().map(target_vertices).collect();
    let target = match member_vertices {
        Some(vs) => Some(Polytope::from_points(td, vs.concat())?),
        None => None,
    };
    let mut meta = LiftMeta::named(format!("union of {} lifts", lifts.len()));
    meta.notes.push(format!("sign rows added: {added}"));
    Ok(Lift {
        q: HDesc::new(n, ineqs, eqs),
        proj: AffineMap::linear(matrix),
        target,
        meta,
    })
}

fn permutations(v: &[Rational]) -> Vec<QVec> {
    let mut sorted = v.to_vec();
    sorted.sort();
    let mut out = vec![sorted.clone()];
    // lexicographic successor over the multiset
    loop {
        let n = sorted.len();
        let Some(i) = (0..n.saturating_sub(1))
            .rev()
            .find(|&i| sorted[i] < sorted[i + 1])
        else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| sorted[j] > sorted[i]).unwrap();
        sorted.swap(i, j);
        sorted[i + 1..].reverse();
        out.push(sorted.clone());
    }
    out
}

/// Orbit polytope `conv{σ(v)}` as the image of the Birkhoff polytope under
/// `τ(X)_i = Σ_j v_j X_ij`.
pub fn lift_orbit(v: &[Rational]) -> Lift {
    let d = v.len();
    let n = d * d;
    let ineqs = (0..n)
        .map(|k| {
            let mut r = zeros(n);
            r[k] = Rational::from_int(-1);
            Halfspace::new(r, Rational::zero())
        })
        .collect();
    let mut eqs = Vec::with_capacity(2 * d);
    for i in 0..d {
        let mut row = zeros(n);
        let mut col = zeros(n);
        for j in 0..d {
            row[i * d + j] = Rational::one();
            col[j * d + i] = Rational::one();
        }
        eqs.push(Halfspace::new(row, Rational::one()));
        eqs.push(Halfspace::new(col, Rational::one()));
    }
    let mut m = RationalMatrix::zeros(d, n);
    for i in 0..d {
        for j in 0..d {
            m[(i, i * d + j)] = v[j].clone();
        }
    }
    Lift {
        q: HDesc::new(n, ineqs, eqs),
        proj: AffineMap::linear(m),
        target: Some(Polytope::from_vertices(d, permutations(v))),
        meta: LiftMeta::named(format!("orbit of {}", fmt_vec(v))),
    }
}

fn fmt_vec(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

/// Zonotope `Σ [−g_i/2, g_i/2]` as the image of `[−1, 1]^m`.
pub fn lift_zonotope(generators: &[QVec]) -> Lift {
    let m = generators.len();
    assert!(m >= 1, "zonotope needs a generator");
    let dim = generators[0].len();
    let half = Rational::new(1, 2);
    let cols: Vec<QVec> = generators.iter().map(|g| scale_vec(g, &half)).collect();
    Lift {
        q: HDesc::cube(m, &Rational::from_int(-1), &Rational::one()),
        proj: AffineMap::linear(RationalMatrix::from_columns(&cols, dim).unwrap()),
        target: None,
        meta: LiftMeta::named(format!("zonotope with {m} generators")),
    }
}

/// Generators `(e_i − e_j)/(d+1)`, `i < j`, of the Voronoi cell of `A_d*`.
pub fn astar_zonotope_generators(d: usize) -> Vec<QVec> {
    let n = d + 1;
    let s = Rational::new(1, n as i64);
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut g = zeros(n);
            g[i] = s.clone();
            g[j] = -&s;
            out.push(g);
        }
    }
    out
}

fn embedded(l: &Lattice, p: &Polytope) -> Result<Polytope, LiftError> {
    let b = l.embedding().expect("family lattices carry an embedding");
    Ok(affine_image(p, &AffineMap::linear(b.clone()))?)
}

/// Voronoi cell of `l` in its embedding coordinates.
pub fn embedded_voronoi_cell(l: &Lattice) -> Result<Polytope, LiftError> {
    let rv = relevant_vectors(l)?;
    let mut cell = cell_from_relevant(&rv);
    cell.ensure_vertices()?;
    embedded(l, &cell)
}

/// Dual Voronoi cell of `l` in its embedding coordinates.
pub fn embedded_dual_voronoi_cell(l: &Lattice) -> Result<Polytope, LiftError> {
    let rv = relevant_vectors(l)?;
    embedded(l, &dual_cell_from_relevant(&rv))
}

fn unit(n: usize, i: usize, s: Rational) -> QVec {
    let mut v = zeros(n);
    v[i] = s;
    v
}

fn cross_points(d: usize, r: &Rational) -> Vec<QVec> {
    (0..d)
        .flat_map(|i| [unit(d, i, r.clone()), unit(d, i, -r)])
        .collect()
}

fn cube_lift(d: usize) -> Lift {
    let c = Polytope::from_h(HDesc::cube(d, &Rational::from_int(-1), &Rational::one()));
    Lift::identity(&c).unwrap().with_name(format!("[-1,1]^{d}"))
}

/// The named Voronoi-cell lifts: simplex sums for `A_d` and crosspolytope ∩
/// cube for `D_d` (both of the polar cell), the Birkhoff orbit lift for
/// `A_d*`, and cube ∩ scaled crosspolytope for the scaled `D_d*`.
pub fn lift_root_cell(family: Family, d: usize) -> Result<Lift, LiftError> {
    let bad = || LiftError::InvalidFamily {
        family: family.to_string(),
        d,
    };
    let lattice = root_lattice(family, d).map_err(|_| bad())?;
    let mut lift = match family {
        Family::A => {
            let n = d + 1;
            let simplex: Vec<QVec> = (0..n).map(|i| unit(n, i, Rational::one())).collect();
            let neg: Vec<QVec> = (0..n).map(|i| unit(n, i, Rational::from_int(-1))).collect();
            let s = Lift::simplex_hull(n, &simplex);
            let t = Lift::simplex_hull(n, &neg);
            let mut l = lift_minkowski(&s, &t)?;
            l.meta.route = Route::Polar;
            l.target = Some(embedded_dual_voronoi_cell(&lattice)?);
            l
        }
        Family::D => {
            let cross = Lift::simplex_hull(d, &cross_points(d, &Rational::from_int(2)));
            let mut l = lift_intersection(&cross, &cube_lift(d))?;
            l.meta.route = Route::Polar;
            l.target = Some(embedded_dual_voronoi_cell(&lattice)?);
            l
        }
        Family::Astar => {
            let s = Rational::new(1, 2 * d as i64 + 2);
            let v: QVec = (0..=d)
                .map(|i| &s * &Rational::from_int(2 * i as i64 - d as i64))
                .collect();
            let mut l = lift_orbit(&v);
            l.target = Some(embedded_voronoi_cell(&lattice)?);
            l
        }
        Family::DstarScaled => {
            let cross = Lift::simplex_hull(d, &cross_points(d, &Rational::new(d as i64, 2)));
            let mut l = lift_intersection(&cube_lift(d), &cross)?;
            l.target = Some(embedded_voronoi_cell(&lattice)?);
            l
        }
        _ => return Err(bad()),
    };
    lift.meta.name = format!(
        "{}{} {}",
        family,
        d,
        match lift.meta.route {
            Route::Direct => "cell",
            Route::Polar => "polar cell",
        }
    );
    if lift.meta.route == Route::Polar {
        lift.meta
            .notes
            .push("lift of the polar cell; xc(P) = xc(P°) transfers the size".into());
    }
    Ok(lift)
}

/// Pieces of the congruence-lattice construction, with labels.
pub fn congruence_pieces(d: usize, a: u64) -> Vec<(String, Lift)> {
    let dq = d as i64;
    let aq = a as i64;
    let mut out = Vec::new();
    out.push((
        "V(+-1)".to_string(),
        Lift::segment(&vec![Rational::new(2, dq); d]),
    ));
    out.push((
        format!("V(+-{a})"),
        Lift::simplex_hull(d, &cross_points(d, &Rational::new(2, aq))),
    ));
    for k in 1..d {
        let lo = (aq * k as i64).div_euclid(dq);
        let hi = (aq * k as i64 + dq - 1).div_euclid(dq);
        let mut ells = vec![lo, hi];
        ells.dedup();
        for l in ells {
            let norm = k as i64 * (aq - l) * (aq - l) + (dq - k as i64) * l * l;
            let s = Rational::new(2, norm);
            let v: QVec = (0..d)
                .map(|i| {
                    if i < k {
                        &s * &Rational::from_int(aq - l)
                    } else {
                        &s * &Rational::from_int(-l)
                    }
                })
                .collect();
            out.push((format!("V({k},{l})"), lift_orbit(&v)));
        }
    }
    out
}

/// Balas union of the congruence pieces; the target is the polar Voronoi
/// cell of `Λ_d(a)`. Pieces contributing no vertex of the target are
/// listed in the notes.
pub fn lift_congruence_cell(d: usize, a: u64) -> Result<Lift, LiftError> {
    if d < 2 || a < 1 {
        return Err(LiftError::InvalidFamily {
            family: format!("cong a={a}"),
            d,
        });
    }
    let lattice = congruence_lattice(d, a)?;
    let target = embedded_dual_voronoi_cell(&lattice)?;
    let pieces = congruence_pieces(d, a);
    let tv = target.vertices().unwrap();
    let redundant: Vec<String> = pieces
        .iter()
        .filter(|(_, l)| {
            let pv = l.target.as_ref().unwrap().vertices().unwrap();
            !pv.iter().any(|p| tv.binary_search(p).is_ok())
        })
        .map(|(n, _)| n.clone())
        .collect();
    let lifts: Vec<Lift> = pieces.into_iter().map(|(_, l)| l).collect();
    let mut lift = lift_union(&lifts)?;
    lift.target = Some(target);
    lift.meta.name = format!("cong:d={d},a={a} polar cell");
    lift.meta.route = Route::Polar;
    lift.meta
        .notes
        .push(format!("redundant pieces: [{}]", redundant.join(", ")));
    Ok(lift)
}

/// Restricts `Q` to the preimage of the face `⟨c, x⟩ = δ` of the target.
pub fn lift_face(l: &Lift, c: &[Rational], delta: &Rational) -> Result<Lift, LiftError> {
    if c.len() != l.target_dim() {
        return Err(LiftError::DimensionMismatch(c.len(), l.target_dim()));
    }
    let pulled = l.proj.matrix.vec_mul(c);
    let shift = dot(c, &l.proj.offset);
    let mut s = LpSession::new(&l.q).map_err(|_| PolytopeError::Empty)?;
    match s.maximize(&pulled) {
        LpResult::Unbounded => return Err(LiftError::Unbounded),
        LpResult::Optimal { value, .. } => {
            let max = &value + &shift;
            if &max > delta {
                return Err(LiftError::InvalidInequality {
                    max,
                    rhs: delta.clone(),
                });
            }
        }
    }
    let mut q = l.q.clone();
    let eq = Halfspace::new(pulled, delta - &shift);
    if !(eq.is_trivial() && eq.rhs.is_zero()) {
        q.equations.push(eq);
    }
    let target = target_vertices(l).map(|vs| {
        let face: Vec<QVec> = vs.iter().filter(|v| &dot(c, v) == delta).cloned().collect();
        Polytope::from_vertices(l.target_dim(), face)
    });
    let mut meta = l.meta.clone();
    meta.name = format!("face of {}", l.meta.name);
    Ok(Lift {
        q,
        proj: l.proj.clone(),
        target,
        meta,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Escape {
    /// Index into the target inequalities (equations follow them).
    pub constraint: usize,
    pub point: QVec,
    pub excess: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LiftReport {
    pub name: String,
    pub exact: bool,
    pub facet_count: usize,
    pub lifted_dim: usize,
    pub target_facets: usize,
    pub target_vertices: usize,
    pub escaped: Vec<Escape>,
    pub missed_vertices: Vec<QVec>,
}

fn chunked_maximize(session: &LpSession, objectives: &[QVec]) -> Vec<LpResult> {
    let chunk = objectives
        .len()
        .div_ceil(rayon::current_num_threads().max(1))
        .max(1);
    objectives
        .par_chunks(chunk)
        .flat_map_iter(|objs| {
            let mut s = session.clone();
            objs.iter().map(|o| s.maximize(o)).collect::<Vec<_>>()
        })
        .collect()
}

/// Proves `π(Q) = target` exactly.
///
/// (a) `π(Q) ⊆ target`: every target inequality is maximized over `Q`.
/// (b) `target ⊆ π(Q)`: for each target vertex `v`, the sum `c` of its
/// tight facet normals has `v` as unique maximizer on the target, so
/// `v ∈ π(Q)` iff `max_Q c·π(y) = c·v` once (a) holds. When (a) fails the
/// membership of each vertex is decided by a feasibility LP instead.
pub fn verify_lift(l: &Lift) -> Result<LiftReport, LiftError> {
    let target = l.target.as_ref().ok_or(LiftError::NoTarget)?.complete()?;
    let th = target.h().unwrap();
    let tv = target.vertices().unwrap();
    let n = l.q.dim;
    let m = &l.proj.matrix;
    let o = &l.proj.offset;
    let mut report = LiftReport {
        name: l.meta.name.clone(),
        exact: false,
        facet_count: l.facet_count(),
        lifted_dim: n,
        target_facets: th.inequalities.len(),
        target_vertices: tv.len(),
        escaped: vec![],
        missed_vertices: vec![],
    };
    let session = match LpSession::new(&l.q) {
        Ok(s) => s,
        Err(_) => {
            report.missed_vertices = tv.to_vec();
            return Ok(report);
        }
    };
    // boundedness: every coordinate bounded above and below
    let mut dirs: Vec<QVec> = Vec::with_capacity(2 * n);
    for j in 0..n {
        dirs.push(unit(n, j, Rational::one()));
        dirs.push(unit(n, j, Rational::from_int(-1)));
    }
    if chunked_maximize(&session, &dirs)
        .iter()
        .any(|r| matches!(r, LpResult::Unbounded))
    {
        return Err(LiftError::Unbounded);
    }

    // (a)
    let mut constraints: Vec<(Halfspace, bool)> =
        th.inequalities.iter().map(|h| (h.clone(), false)).collect();
    for e in &th.equations {
        constraints.push((e.clone(), true));
        constraints.push((e.negated(), true));
    }
    let objectives: Vec<QVec> = constraints
        .iter()
        .map(|(h, _)| m.vec_mul(&h.normal))
        .collect();
    let results = chunked_maximize(&session, &objectives);
    for (idx, ((h, _), r)) in constraints.iter().zip(&results).enumerate() {
        match r {
            LpResult::Unbounded => return Err(LiftError::Unbounded),
            LpResult::Optimal { value, point } => {
                let max = value + &dot(&h.normal, o);
                if max > h.rhs {
                    let constraint = if idx < th.inequalities.len() {
                        idx
                    } else {
                        th.inequalities.len() + (idx - th.inequalities.len()) / 2
                    };
                    report.escaped.push(Escape {
                        constraint,
                        point: l.proj.apply(point),
                        excess: &max - &h.rhs,
                    });
                }
            }
        }
    }

    // (b)
    if report.escaped.is_empty() {
        let vertex_objs: Vec<QVec> = tv
            .iter()
            .map(|v| {
                let mut c = zeros(target.dim);
                for h in th.inequalities.iter().filter(|h| h.slack(v).is_zero()) {
                    for (ci, hi) in c.iter_mut().zip(&h.normal) {
                        *ci += hi;
                    }
                }
                c
            })
            .collect();
        let pulled: Vec<QVec> = vertex_objs.iter().map(|c| m.vec_mul(c)).collect();
        let results = chunked_maximize(&session, &pulled);
        for ((v, c), r) in tv.iter().zip(&vertex_objs).zip(&results) {
            if let LpResult::Optimal { value, .. } = r {
                if value + &dot(c, o) < dot(c, v) {
                    report.missed_vertices.push(v.clone());
                }
            }
        }
    } else {
        let missed: Vec<QVec> = tv
            .par_iter()
            .filter(|v| {
                let eqs: Vec<Halfspace> = (0..target.dim)
                    .map(|i| Halfspace::new(m.row(i).to_vec(), &v[i] - &o[i]))
                    .collect();
                matches!(lp_feasible(&l.q, Some(&eqs)), Feasibility::Infeasible(_))
            })
            .cloned()
            .collect();
        report.missed_vertices = missed;
    }
    report.exact = report.escaped.is_empty() && report.missed_vertices.is_empty();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int_vec;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    fn square_lift() -> Lift {
        Lift::identity(&Polytope::from_h(HDesc::cube(2, &q(-1), &q(1)))).unwrap()
    }

    #[test]
    fn identity_square_verifies() {
        let r = verify_lift(&square_lift()).unwrap();
        assert!(r.exact);
        assert_eq!(r.facet_count, 4);
    }

    #[test]
    fn product_of_segments() {
        let seg = Lift::segment(&int_vec(&[1]));
        let sq = lift_product(&seg, &seg).unwrap();
        assert_eq!(sq.facet_count(), 4);
        assert!(verify_lift(&sq).unwrap().exact);
        let with_point = lift_product(&seg, &Lift::point(&int_vec(&[5]))).unwrap();
        assert_eq!(with_point.facet_count(), 2);
        assert!(verify_lift(&with_point).unwrap().exact);
    }

    #[test]
    fn minkowski_of_unit_segments() {
        let s1 = Lift::simplex_hull(2, &[int_vec(&[0, 0]), int_vec(&[1, 0])]);
        let s2 = Lift::simplex_hull(2, &[int_vec(&[0, 0]), int_vec(&[0, 1])]);
        let sq = lift_minkowski(&s1, &s2).unwrap();
        assert_eq!(sq.facet_count(), 4);
        let r = verify_lift(&sq).unwrap();
        assert!(r.exact);
        assert_eq!(r.target_vertices, 4);
        let shifted = lift_minkowski(&square_lift(), &Lift::point(&int_vec(&[3, 0]))).unwrap();
        let mut t = shifted.target.clone().unwrap();
        assert!(t.ensure_vertices().unwrap().contains(&int_vec(&[4, 1])));
        assert!(verify_lift(&shifted).unwrap().exact);
    }

    #[test]
    fn intersection_square_diamond_is_octagon() {
        let diamond = Polytope::from_points(
            2,
            vec![
                int_vec(&[3, 0]),
                int_vec(&[-3, 0]),
                int_vec(&[0, 3]),
                int_vec(&[0, -3]),
            ],
        )
        .unwrap();
        let sq = Polytope::from_h(HDesc::cube(2, &q(-2), &q(2)));
        let l = lift_intersection(
            &Lift::identity(&sq).unwrap(),
            &Lift::identity(&diamond).unwrap(),
        )
        .unwrap();
        assert_eq!(l.facet_count(), 8);
        let r = verify_lift(&l).unwrap();
        assert!(r.exact);
        assert_eq!(r.target_vertices, 8);
    }

    #[test]
    fn union_of_points_is_segment() {
        let l = lift_union(&[Lift::point(&int_vec(&[-1])), Lift::point(&int_vec(&[1]))]).unwrap();
        assert_eq!(l.facet_count(), 2);
        assert!(verify_lift(&l).unwrap().exact);
        let sq = square_lift();
        let twice = lift_union(&[sq.clone(), sq.clone()]).unwrap();
        assert_eq!(twice.facet_count(), 8);
        assert!(
            verify_lift(&twice.with_target(sq.target.clone().unwrap()))
                .unwrap()
                .exact
        );
    }

    #[test]
    fn orbit_examples() {
        let c = lift_orbit(&int_vec(&[2, 2, 2]));
        assert_eq!(c.target.as_ref().unwrap().vertices().unwrap().len(), 1);
        assert!(verify_lift(&c).unwrap().exact);
        let s = lift_orbit(&int_vec(&[1, 2]));
        assert_eq!(
            s.target.as_ref().unwrap().vertices().unwrap(),
            &[int_vec(&[1, 2]), int_vec(&[2, 1])]
        );
        assert!(verify_lift(&s).unwrap().exact);
        assert_eq!(s.facet_count(), 4);
    }

    #[test]
    fn zonotope_examples() {
        let z = lift_zonotope(&[int_vec(&[1, 0]), int_vec(&[0, 1])]);
        let half = Rational::new(1, 2);
        let sq = Polytope::from_h(HDesc::cube(2, &-&half, &half));
        let z = z.with_target(sq);
        assert_eq!(z.facet_count(), 4);
        assert!(verify_lift(&z).unwrap().exact);
        let seg = lift_zonotope(&[int_vec(&[2, 2])]).with_target(Polytope::from_vertices(
            2,
            vec![int_vec(&[-1, -1]), int_vec(&[1, 1])],
        ));
        assert!(verify_lift(&seg).unwrap().exact);
    }

    #[test]
    fn root_cells_small() {
        for (f, d, facets) in [
            (Family::A, 2, 6),
            (Family::A, 3, 8),
            (Family::D, 3, 12),
            (Family::Astar, 2, 9),
            (Family::DstarScaled, 3, 12),
        ] {
            let l = lift_root_cell(f, d).unwrap();
            assert_eq!(l.facet_count(), facets, "{f}{d}");
            let r = verify_lift(&l).unwrap();
            assert!(r.exact, "{f}{d}: {r:?}");
        }
        let ast2 = lift_root_cell(Family::Astar, 2).unwrap();
        assert_eq!(verify_lift(&ast2).unwrap().target_vertices, 6);
        assert!(lift_root_cell(Family::E8, 8).is_err());
    }

    #[test]
    fn corrupted_projection_detected() {
        let mut l = lift_root_cell(Family::A, 3).unwrap();
        l.proj.matrix[(0, 0)] = q(2);
        let r = verify_lift(&l).unwrap();
        assert!(!r.exact);
        assert!(!r.escaped.is_empty() || !r.missed_vertices.is_empty());
    }

    #[test]
    fn shrunk_projection_reports_missed() {
        let mut l = square_lift();
        l.proj.matrix = l.proj.matrix.scale(&Rational::new(1, 2));
        let r = verify_lift(&l).unwrap();
        assert!(r.escaped.is_empty());
        assert_eq!(r.missed_vertices.len(), 4);
    }

    #[test]
    fn congruence_degenerate_case() {
        let l = lift_congruence_cell(2, 1).unwrap();
        let r = verify_lift(&l).unwrap();
        assert!(r.exact, "{r:?}");
        assert_eq!(r.target_vertices, 4);
    }

    #[test]
    fn face_lifts() {
        let sq = square_lift();
        let same = lift_face(&sq, &[q(0), q(0)], &q(0)).unwrap();
        assert_eq!(same.q, sq.q);
        let z = lift_zonotope(&[int_vec(&[2, 0]), int_vec(&[0, 2])]);
        let z = z.with_target(Polytope::from_h(HDesc::cube(2, &q(-1), &q(1))));
        let f = lift_face(&z, &[q(1), q(0)], &q(1)).unwrap();
        assert_eq!(f.facet_count(), z.facet_count());
        let r = verify_lift(&f).unwrap();
        assert!(r.exact, "{r:?}");
        assert_eq!(r.target_vertices, 2);
        assert!(matches!(
            lift_face(&z, &[q(1), q(0)], &q(0)),
            Err(LiftError::InvalidInequality { .. })
        ));
    }

    #[test]
    fn json_roundtrip() {
        let l = lift_root_cell(Family::Astar, 2).unwrap();
        let s = serde_json::to_string(&l).unwrap();
        let back: Lift = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
    }
}
