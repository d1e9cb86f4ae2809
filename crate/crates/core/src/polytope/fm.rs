//! Fourier–Motzkin projection with LP-based redundancy removal after each
//! elimination step.

use super::lp::{LpResult, LpSession};
use super::{HDesc, Halfspace};
use crate::exact::{QVec, Rational};

fn restrict(h: &Halfspace, coords: &[usize]) -> Halfspace {
    Halfspace::new(
        coords.iter().map(|&j| h.normal[j].clone()).collect(),
        h.rhs.clone(),
    )
}

/// Removes inequalities implied by the others (LP check per row).
fn remove_redundant(ineqs: Vec<Halfspace>, eqs: &[Halfspace], coords: &[usize]) -> Vec<Halfspace> {
    let mut keep: Vec<bool> = vec![true; ineqs.len()];
    for i in 0..ineqs.len() {
        let others: Vec<Halfspace> = ineqs
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i && keep[k])
            .map(|(_, h)| restrict(h, coords))
            .collect();
        let sys = HDesc::new(
            coords.len(),
            others,
            eqs.iter().map(|e| restrict(e, coords)).collect(),
        );
        let target = restrict(&ineqs[i], coords);
        let redundant = match LpSession::new(&sys) {
            Err(_) => true,
            Ok(mut s) => match s.maximize(&target.normal) {
                LpResult::Unbounded => false,
                LpResult::Optimal { value, .. } => value <= target.rhs,
            },
        };
        if redundant {
            keep[i] = false;
        }
    }
    ineqs
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(h, _)| h)
        .collect()
}

fn tidy(rows: Vec<Halfspace>) -> Vec<Halfspace> {
    let mut out: Vec<Halfspace> = Vec::new();
    for h in rows {
        if h.is_trivial() {
            if h.rhs.is_negative() {
                out.push(h.canonical_inequality());
            }
            continue;
        }
        out.push(h.canonical_inequality());
    }
    out.sort();
    out.dedup();
    out
}

/// H-description of the projection of `h` onto the coordinates `keep`
/// (in that order).
pub fn fm_project(h: &HDesc, keep: &[usize]) -> HDesc {
    let n = h.dim;
    let mut ineqs: Vec<Halfspace> = tidy(h.inequalities.clone());
    let mut eqs: Vec<Halfspace> = h.equations.clone();
    let mut remaining: Vec<usize> = (0..n).collect();
    for j in 0..n {
        if keep.contains(&j) {
            continue;
        }
        remaining.retain(|&c| c != j);
        if let Some(pos) = eqs.iter().position(|e| !e.normal[j].is_zero()) {
            let e = eqs.remove(pos);
            let substitute = |row: &mut Halfspace| {
                if row.normal[j].is_zero() {
                    return;
                }
                let f = &row.normal[j] / &e.normal[j];
                for (a, b) in row.normal.iter_mut().zip(&e.normal) {
                    *a -= &f * b;
                }
                row.rhs -= &f * &e.rhs;
            };
            for r in eqs.iter_mut() {
                substitute(r);
            }
            for r in ineqs.iter_mut() {
                substitute(r);
            }
            ineqs = tidy(ineqs);
            continue;
        }
        let (mut pos, mut neg, mut zero) = (Vec::new(), Vec::new(), Vec::new());
        for r in ineqs {
            if r.normal[j].is_positive() {
                pos.push(r);
            } else if r.normal[j].is_negative() {
                neg.push(r);
            } else {
                zero.push(r);
            }
        }
        let mut next = zero;
        for p in &pos {
            for q in &neg {
                let sp = p.normal[j].recip();
                let sq = (-&q.normal[j]).recip();
                let normal: QVec = p
                    .normal
                    .iter()
                    .zip(&q.normal)
                    .map(|(a, b)| &(a * &sp) + &(b * &sq))
                    .collect();
                let rhs = &(&p.rhs * &sp) + &(&q.rhs * &sq);
                let mut row = Halfspace::new(normal, rhs);
                row.normal[j] = Rational::zero();
                next.push(row);
            }
        }
        eqs.retain(|e| !e.is_trivial() || !e.rhs.is_zero());
        ineqs = remove_redundant(tidy(next), &eqs, &remaining);
    }
    let out_ineqs = ineqs.iter().map(|r| restrict(r, keep)).collect();
    let out_eqs = eqs
        .iter()
        .map(|r| restrict(r, keep))
        .filter(|e| !e.is_trivial() || !e.rhs.is_zero())
        .collect();
    HDesc::new(keep.len(), out_ineqs, out_eqs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int_vec;
    use crate::exact::RationalMatrix;
    use crate::polytope::{affine_image, vertex_enumeration, AffineMap, Polytope};

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    #[test]
    fn square_to_segment() {
        let sq = HDesc::cube(2, &q(-1), &q(1));
        let seg = fm_project(&sq, &[0]);
        assert_eq!(
            vertex_enumeration(&seg).unwrap(),
            vec![int_vec(&[-1]), int_vec(&[1])]
        );
        assert_eq!(seg.inequalities.len(), 2);
    }

    #[test]
    fn cube_to_square() {
        let cube = HDesc::cube(3, &q(-1), &q(1));
        let sq = fm_project(&cube, &[0, 1]);
        assert_eq!(sq.canonical(), HDesc::cube(2, &q(-1), &q(1)).canonical());
    }

    #[test]
    fn projection_with_equations_matches_vertex_image() {
        // simplex x+y+z = 1, x,y,z ≥ 0 onto (x, y)
        let h = HDesc::new(
            3,
            vec![
                Halfspace::new(int_vec(&[-1, 0, 0]), q(0)),
                Halfspace::new(int_vec(&[0, -1, 0]), q(0)),
                Halfspace::new(int_vec(&[0, 0, -1]), q(0)),
            ],
            vec![Halfspace::new(int_vec(&[1, 1, 1]), q(1))],
        );
        let proj = fm_project(&h, &[0, 1]);
        let img = affine_image(
            &Polytope::from_h(h),
            &AffineMap::linear(RationalMatrix::from_i64_rows(&[&[1, 0, 0], &[0, 1, 0]])),
        )
        .unwrap();
        assert_eq!(vertex_enumeration(&proj).unwrap(), img.vertices().unwrap());
    }

    #[test]
    fn skewed_projection() {
        // octahedron |x|+|y|+|z| ≤ 1 projected onto (x+z-ish): keep y only
        let mut ineqs = Vec::new();
        for s in 0..8 {
            let v = [
                1 - 2 * (s & 1),
                1 - 2 * ((s >> 1) & 1),
                1 - 2 * ((s >> 2) & 1),
            ];
            ineqs.push(Halfspace::new(int_vec(&v), q(1)));
        }
        let oct = HDesc::new(3, ineqs, vec![]);
        let p = fm_project(&oct, &[1]);
        assert_eq!(
            vertex_enumeration(&p).unwrap(),
            vec![int_vec(&[-1]), int_vec(&[1])]
        );
        assert_eq!(p.inequalities.len(), 2);
    }
}
