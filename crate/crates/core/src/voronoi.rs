//! Relevant vectors, Voronoi cells, their duals and polar faces.
//!
//! All polytopes live in coefficient coordinates: a point `x` stands for
//! `B·x`, so the cell inequality `⟨B x, B w⟩ ≤ ½‖B w‖²` reads
//! `(G w)·x ≤ ½ wᵀG w`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::enumeration::Enumerator;
use crate::exact::{scale_vec, QVec, Rational, RationalMatrix};
use crate::lattice::{Lattice, LatticeVector};
use crate::polytope::{dualize, HDesc, Halfspace, LpResult, LpSession, Polytope, PolytopeError};

pub const DEFAULT_MAX_RANK: usize = 12;

/// Rank cap for the coset sweep, overridable with `VXC_MAX_RANK`.
pub fn max_rank() -> usize {
    std::env::var("VXC_MAX_RANK")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_RANK)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VoronoiError {
    #[error("rank {rank} exceeds the enumeration cap {cap} (set VXC_MAX_RANK to raise it)")]
    RankLimit { rank: usize, cap: usize },
    #[error("origin is not among the closest lattice points (distance² {origin_dist2} > {dist2}, e.g. {witness})")]
    NotClosest {
        dist2: Rational,
        origin_dist2: Rational,
        witness: LatticeVector,
    },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelevantVector {
    pub coeffs: LatticeVector,
    pub norm2: Rational,
}

/// `F(Λ)`: the facet vectors of the Voronoi cell, sorted by coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelevantVectorSet {
    pub lattice: Lattice,
    pub vectors: Vec<RelevantVector>,
}

impl RelevantVectorSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn coeffs(&self) -> Vec<LatticeVector> {
        self.vectors.iter().map(|v| v.coeffs.clone()).collect()
    }

    /// Cell inequality `(G w)·x ≤ ½‖w‖²` for each relevant vector.
    pub fn inequalities(&self) -> Vec<Halfspace> {
        let g = self.lattice.gram();
        self.vectors
            .iter()
            .map(|v| {
                let normal = g.mul_vec(&v.coeffs.to_rational());
                Halfspace::new(normal, &v.norm2 / &Rational::from_int(2))
            })
            .collect()
    }

    /// `x` lies in the closed Voronoi cell.
    pub fn contains(&self, x: &[Rational]) -> bool {
        self.inequalities()
            .iter()
            .all(|h| !h.slack(x).is_negative())
    }
}

fn check_rank(l: &Lattice) -> Result<(), VoronoiError> {
    let cap = max_rank();
    if l.rank() > cap {
        return Err(VoronoiError::RankLimit {
            rank: l.rank(),
            cap,
        });
    }
    Ok(())
}

/// Coset sweep: for each nonzero class `c ∈ Λ/2Λ` with 0/1 coefficients,
/// the shortest vectors of `c + 2Λ` are relevant exactly when they are a
/// single pair `±v`.
pub fn relevant_vectors(l: &Lattice) -> Result<RelevantVectorSet, VoronoiError> {
    check_rank(l)?;
    let k = l.rank();
    let e = Enumerator::new(l);
    let mut vectors: Vec<RelevantVector> = (1u64..(1u64 << k))
        .into_par_iter()
        .flat_map_iter(|mask| {
            let c = LatticeVector((0..k).map(|i| ((mask >> i) & 1) as i64).collect());
            let (m, reps) = e.coset_shortest(&c).expect("nonzero class");
            let keep = reps.len() == 2;
            reps.into_iter()
                .filter(move |_| keep)
                .map(move |v| RelevantVector {
                    coeffs: v,
                    norm2: m.clone(),
                })
        })
        .collect();
    vectors.sort_by(|a, b| a.coeffs.cmp(&b.coeffs));
    Ok(RelevantVectorSet {
        lattice: l.clone(),
        vectors,
    })
}

/// `VC(Λ)` as an H-description, one inequality per relevant vector.
pub fn voronoi_cell(l: &Lattice) -> Result<Polytope, VoronoiError> {
    let rv = relevant_vectors(l)?;
    Ok(cell_from_relevant(&rv))
}

pub fn cell_from_relevant(rv: &RelevantVectorSet) -> Polytope {
    Polytope::from_h(HDesc::new(rv.lattice.rank(), rv.inequalities(), vec![]))
}

/// `VC(Λ)°` as a V-description: the points `2w/‖w‖²`, `w ∈ F(Λ)`.
pub fn dual_voronoi_cell(l: &Lattice) -> Result<Polytope, VoronoiError> {
    let rv = relevant_vectors(l)?;
    Ok(dual_cell_from_relevant(&rv))
}

pub fn dual_cell_from_relevant(rv: &RelevantVectorSet) -> Polytope {
    let verts = rv
        .vectors
        .iter()
        .map(|v| {
            scale_vec(
                &v.coeffs.to_rational(),
                &(&Rational::from_int(2) / &v.norm2),
            )
        })
        .collect();
    Polytope::from_vertices(rv.lattice.rank(), verts)
}

/// Polar of a full-dimensional `P` with respect to the form `G`:
/// `{y : xᵀG y ≤ 1 ∀x ∈ P}`.
pub fn dualize_with_form(p: &Polytope, gram: &RationalMatrix) -> Result<Polytope, PolytopeError> {
    let std = dualize(p)?;
    let inv = gram.inverse().expect("Gram matrix is invertible");
    Ok(std.linear_image_invertible(&inv, gram))
}

/// Face of `VC(Λ)°` cut out by `p`: `conv{2z/‖z‖² : z ∈ cl(p,Λ)∖{0}}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolarFace {
    pub dist2: Rational,
    pub closest: Vec<LatticeVector>,
    /// `2z/‖z‖²` for each nonzero closest vector, in the order of `closest`.
    pub generators: Vec<QVec>,
    /// Hull of the generators; `None` when `cl(p,Λ) = {0}`.
    pub face: Option<Polytope>,
}

pub fn polar_face(l: &Lattice, p: &[Rational]) -> Result<PolarFace, VoronoiError> {
    check_rank(l)?;
    let e = Enumerator::new(l);
    let (dist2, closest) = e.closest_vectors(p);
    if !closest.iter().any(LatticeVector::is_zero) {
        return Err(VoronoiError::NotClosest {
            origin_dist2: l.qform(p),
            dist2,
            witness: closest[0].clone(),
        });
    }
    let generators: Vec<QVec> = closest
        .iter()
        .filter(|z| !z.is_zero())
        .map(|z| scale_vec(&z.to_rational(), &(&Rational::from_int(2) / &l.norm2(z))))
        .collect();
    let face = if generators.is_empty() {
        None
    } else {
        Some(Polytope::from_points(l.rank(), generators.clone())?)
    };
    Ok(PolarFace {
        dist2,
        closest,
        generators,
        face,
    })
}

/// `x ∈ VC(Λ)` (coefficient coordinates).
pub fn cell_membership(l: &Lattice, x: &[Rational]) -> Result<bool, VoronoiError> {
    Ok(relevant_vectors(l)?.contains(x))
}

/// Facet vectors found without the coset characterization: every nonzero
/// lattice vector with `‖w‖² ≤ tr(G)` gives a candidate inequality, and the
/// candidates that are irredundant by exact LP are returned.
///
/// The radius is safe because `w/2` lies on the cell boundary, so
/// `‖w‖ ≤ 2μ ≤ (Σ‖b_i‖²)^{1/2}` with `μ` the covering radius.
pub fn facet_vectors_by_lp(l: &Lattice) -> Vec<LatticeVector> {
    let k = l.rank();
    let g = l.gram();
    let trace: Rational = (0..k).map(|i| g[(i, i)].clone()).sum();
    let e = Enumerator::new(l);
    let cands: Vec<LatticeVector> = e
        .in_ball(&vec![Rational::zero(); k], &trace)
        .into_iter()
        .filter(|z| !z.is_zero())
        .collect();
    let ineqs: Vec<Halfspace> = cands
        .iter()
        .map(|z| {
            let zr = z.to_rational();
            Halfspace::new(
                g.mul_vec(&zr),
                &g.bilinear(&zr, &zr) / &Rational::from_int(2),
            )
        })
        .collect();
    let mut out: Vec<LatticeVector> = (0..cands.len())
        .into_par_iter()
        .filter(|&i| {
            let others: Vec<Halfspace> = ineqs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, h)| h.clone())
                .collect();
            let mut s = LpSession::new(&HDesc::new(k, others, vec![])).expect("origin is feasible");
            match s.maximize(&ineqs[i].normal) {
                LpResult::Unbounded => true,
                LpResult::Optimal { value, .. } => value > ineqs[i].rhs,
            }
        })
        .map(|i| cands[i].clone())
        .collect();
    out.sort();
    out
}

/// Embedded coordinates `B·x` of coefficient vectors, when an embedding exists.
pub fn embed_all(l: &Lattice, xs: &[QVec]) -> Option<Vec<QVec>> {
    xs.iter().map(|x| l.embed(x)).collect()
}

/// A point `x` and a closest lattice vector `z` with `x − z ∉ VC(Λ)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TilingViolation {
    pub point: QVec,
    pub closest: LatticeVector,
}

/// Checks `x − z ∈ VC(Λ)` for every `z ∈ cl(x, Λ)` (coefficient coordinates).
pub fn tiling_violations(rv: &RelevantVectorSet, points: &[QVec]) -> Vec<TilingViolation> {
    let e = Enumerator::new(&rv.lattice);
    points
        .par_iter()
        .flat_map_iter(|x| {
            let (_, closest) = e.closest_vectors(x);
            closest
                .into_iter()
                .filter(|z| {
                    let d: QVec = x.iter().zip(z.to_rational()).map(|(a, b)| a - &b).collect();
                    !rv.contains(&d)
                })
                .map(|z| TilingViolation {
                    point: x.clone(),
                    closest: z,
                })
                .collect::<Vec<_>>()
        })
        .collect()
}
