//! Double description: extreme rays of pointed cones, and the vertex/facet
//! conversions built on it.

use super::{lp_feasible, Feasibility, HDesc, Halfspace, PolytopeError};
use crate::exact::{dot, primitive_vec, sub_vec, QVec, Rational, RationalMatrix};

#[derive(Clone)]
struct Ray {
    v: QVec,
    zeros: Vec<u64>,
}

fn set_bit(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

fn popcount(bits: &[u64]) -> u32 {
    bits.iter().map(|w| w.count_ones()).sum()
}

fn and(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

/// Extreme rays of the cone `{x ∈ R^dim : r·x ≥ 0 for every row r}`, as
/// coprime integer vectors in sorted order. Returns `None` when the cone is
/// not pointed (the rows do not have full rank).
///
/// Constraints are inserted in the given order, starting from a simplicial
/// cone on the first independent rows; two rays are combined only when no
/// third ray is tight on every constraint they share.
pub fn extreme_rays(dim: usize, rows: &[QVec]) -> Option<Vec<QVec>> {
    if dim == 0 {
        return Some(vec![]);
    }
    let rows: Vec<QVec> = rows
        .iter()
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .map(|r| primitive_vec(r))
        .collect();
    let words = rows.len().div_ceil(64).max(1);

    // initial simplicial cone
    let mut basis_idx: Vec<usize> = Vec::new();
    let mut basis_rows: Vec<QVec> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut trial = basis_rows.clone();
        trial.push(r.clone());
        if RationalMatrix::from_rows(trial.clone(), dim)
            .unwrap()
            .rank()
            == trial.len()
        {
            basis_rows = trial;
            basis_idx.push(i);
            if basis_idx.len() == dim {
                break;
            }
        }
    }
    if basis_idx.len() < dim {
        return None;
    }
    let inv = RationalMatrix::from_rows(basis_rows, dim)
        .unwrap()
        .inverse()
        .unwrap();
    let mut rays: Vec<Ray> = (0..dim)
        .map(|j| {
            let mut zeros = vec![0u64; words];
            for (k, &bi) in basis_idx.iter().enumerate() {
                if k != j {
                    set_bit(&mut zeros, bi);
                }
            }
            Ray {
                v: primitive_vec(&inv.column(j)),
                zeros,
            }
        })
        .collect();

    for (i, a) in rows.iter().enumerate() {
        if basis_idx.contains(&i) {
            continue;
        }
        let vals: Vec<Rational> = rays.iter().map(|r| dot(a, &r.v)).collect();
        let plus: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].is_positive()).collect();
        let minus: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].is_negative()).collect();
        if minus.is_empty() {
            for (k, r) in rays.iter_mut().enumerate() {
                if vals[k].is_zero() {
                    set_bit(&mut r.zeros, i);
                }
            }
            continue;
        }
        let mut new_rays: Vec<Ray> = Vec::new();
        for &p in &plus {
            for &n in &minus {
                let common = and(&rays[p].zeros, &rays[n].zeros);
                if (popcount(&common) as usize) + 2 < dim {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(k, r)| k == p || k == n || !subset(&common, &r.zeros));
                if !adjacent {
                    continue;
                }
                let v: QVec = rays[n]
                    .v
                    .iter()
                    .zip(&rays[p].v)
                    .map(|(xn, xp)| &(&vals[p] * xn) - &(&vals[n] * xp))
                    .collect();
                let mut zeros = common;
                set_bit(&mut zeros, i);
                new_rays.push(Ray {
                    v: primitive_vec(&v),
                    zeros,
                });
            }
        }
        let mut kept: Vec<Ray> = Vec::with_capacity(rays.len() + new_rays.len());
        for (k, mut r) in rays.into_iter().enumerate() {
            if vals[k].is_negative() {
                continue;
            }
            if vals[k].is_zero() {
                set_bit(&mut r.zeros, i);
            }
            kept.push(r);
        }
        kept.extend(new_rays);
        rays = kept;
    }
    let mut out: Vec<QVec> = rays.into_iter().map(|r| r.v).collect();
    out.sort();
    out.dedup();
    Some(out)
}

/// Vertices of a bounded H-description, sorted.
pub fn vertex_enumeration(h: &HDesc) -> Result<Vec<QVec>, PolytopeError> {
    let n = h.dim;
    let (x0, basis) = if h.equations.is_empty() {
        (
            vec![Rational::zero(); n],
            RationalMatrix::identity(n).columns(),
        )
    } else {
        let e =
            RationalMatrix::from_rows(h.equations.iter().map(|e| e.normal.clone()).collect(), n)
                .unwrap();
        let f: QVec = h.equations.iter().map(|e| e.rhs.clone()).collect();
        let x0 = e.solve(&f).ok_or(PolytopeError::Empty)?;
        (x0, e.nullspace())
    };
    let k = basis.len();
    let c: Vec<QVec> = h
        .inequalities
        .iter()
        .map(|i| basis.iter().map(|b| dot(&i.normal, b)).collect())
        .collect();
    let d: QVec = h.inequalities.iter().map(|i| i.slack(&x0)).collect();
    if k == 0 {
        return if d.iter().all(|x| !x.is_negative()) {
            Ok(vec![x0])
        } else {
            Err(PolytopeError::Empty)
        };
    }
    let rank_c = if c.is_empty() {
        0
    } else {
        RationalMatrix::from_rows(c.clone(), k).unwrap().rank()
    };
    if rank_c < k {
        return match lp_feasible(h, None) {
            Feasibility::Feasible(_) => Err(PolytopeError::Unbounded),
            Feasibility::Infeasible(_) => Err(PolytopeError::Empty),
        };
    }
    let mut rows: Vec<QVec> = c
        .iter()
        .zip(&d)
        .map(|(ci, di)| {
            let mut r: QVec = ci.iter().map(|x| -x).collect();
            r.push(di.clone());
            r
        })
        .collect();
    let mut s = vec![Rational::zero(); k + 1];
    s[k] = Rational::one();
    rows.push(s);
    let rays = extreme_rays(k + 1, &rows).expect("cone is pointed");
    let mut verts = Vec::new();
    let mut recession = false;
    for r in rays {
        let s = &r[k];
        if s.is_zero() {
            recession = true;
            continue;
        }
        let mut x = x0.clone();
        for (t, b) in r[..k].iter().zip(&basis) {
            let coef = t / s;
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += &coef * bi;
            }
        }
        verts.push(x);
    }
    if verts.is_empty() {
        return Err(PolytopeError::Empty);
    }
    if recession {
        return Err(PolytopeError::Unbounded);
    }
    verts.sort();
    verts.dedup();
    Ok(verts)
}

/// Irredundant H-description of `conv(points)`: affine-hull equations plus
/// one inequality per facet, with normals in the hull's direction space.
pub fn facet_enumeration(dim: usize, points: &[QVec]) -> Result<HDesc, PolytopeError> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.is_empty() {
        return Err(PolytopeError::Empty);
    }
    for p in &pts {
        if p.len() != dim {
            return Err(PolytopeError::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    let v1 = pts[0].clone();
    let diffs: Vec<QVec> = pts.iter().map(|p| sub_vec(p, &v1)).collect();
    let dmat = RationalMatrix::from_rows(diffs.clone(), dim).unwrap();
    let equations: Vec<Halfspace> = dmat
        .nullspace()
        .into_iter()
        .map(|a| {
            let rhs = dot(&a, &v1);
            Halfspace::new(a, rhs).canonical_equation()
        })
        .collect();
    let pivots = dmat.transpose().rref().pivots;
    let dir: Vec<QVec> = pivots.iter().map(|&j| diffs[j].clone()).collect();
    let kdim = dir.len();
    if kdim == 0 {
        return Ok(HDesc::new(dim, vec![], equations));
    }
    let m = RationalMatrix::from_columns(&dir, dim).unwrap();
    let coords: Vec<QVec> = diffs.iter().map(|x| m.solve(x).expect("in span")).collect();
    let rows: Vec<QVec> = coords
        .iter()
        .map(|u| {
            let mut r: QVec = u.iter().map(|x| -x).collect();
            r.push(Rational::one());
            r
        })
        .collect();
    let rays = extreme_rays(kdim + 1, &rows).expect("valid-inequality cone is pointed");
    let gram_inv = (&m.transpose() * &m).inverse().unwrap();
    let mut ineqs: Vec<Halfspace> = rays
        .into_iter()
        .filter(|r| r[..kdim].iter().any(|x| !x.is_zero()))
        .map(|r| {
            let a = m.mul_vec(&gram_inv.mul_vec(&r[..kdim]));
            let rhs = &r[kdim] + &dot(&a, &v1);
            Halfspace::new(a, rhs).canonical_inequality()
        })
        .collect();
    ineqs.sort();
    ineqs.dedup();
    Ok(HDesc::new(dim, ineqs, equations))
}
