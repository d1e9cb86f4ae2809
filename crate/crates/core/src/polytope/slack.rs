//! Slack matrices and bounds on their nonnegative rank.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Polytope, PolytopeError};
use crate::exact::{QVec, RationalMatrix};

/// Support dimensions up to which the minimum rectangle cover is searched
/// exhaustively.
pub const EXACT_COVER_CAP: usize = 20;
const NODE_BUDGET: u64 = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlackMatrix {
    pub entries: RationalMatrix,
    /// Inequality index for each row.
    pub row_labels: Vec<usize>,
    /// Vertex index for each column.
    pub col_labels: Vec<usize>,
}

/// `S_ij = b_i − ⟨a_i, v_j⟩` over the inequalities (rows) and vertices
/// (columns) of `p`. With `unit_rhs`, inequalities with positive right-hand
/// side are first rescaled to right-hand side 1.
pub fn slack_matrix(p: &Polytope, unit_rhs: bool) -> Result<SlackMatrix, PolytopeError> {
    let h = p.h().ok_or(PolytopeError::MissingDescription("H"))?;
    let v = p.vertices().ok_or(PolytopeError::MissingDescription("V"))?;
    let rows: Vec<QVec> = h
        .inequalities
        .iter()
        .enumerate()
        .map(|(i, ineq)| {
            let ineq = if unit_rhs && ineq.rhs.is_positive() {
                ineq.unit_rhs()
            } else {
                ineq.clone()
            };
            v.iter()
                .enumerate()
                .map(|(j, x)| {
                    let s = ineq.slack(x);
                    if s.is_negative() {
                        Err(PolytopeError::NegativeSlack {
                            row: i,
                            col: j,
                            value: s,
                        })
                    } else {
                        Ok(s)
                    }
                })
                .collect::<Result<QVec, _>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(SlackMatrix {
        entries: RationalMatrix::from_rows(rows, v.len()).unwrap(),
        row_labels: (0..h.inequalities.len()).collect(),
        col_labels: (0..v.len()).collect(),
    })
}

/// `rank ≤ r₊(S)` and `rectangle_cover ≤ r₊(S)`. When `cover_exact` is
/// false the cover value is a fooling-set lower bound rather than the exact
/// minimum cover.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlackRankBounds {
    pub rank: usize,
    pub rectangle_cover: usize,
    pub cover_exact: bool,
}

impl SlackRankBounds {
    /// Best lower bound on the nonnegative rank.
    pub fn lower(&self) -> usize {
        self.rank.max(self.rectangle_cover)
    }
}

fn support(s: &RationalMatrix) -> Vec<Vec<bool>> {
    (0..s.rows())
        .map(|i| s.row(i).iter().map(|x| !x.is_zero()).collect())
        .collect()
}

/// Largest set of support cells no two of which fit in a common rectangle.
fn fooling_set(sup: &[Vec<bool>]) -> usize {
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    for (i, row) in sup.iter().enumerate() {
        for (j, &on) in row.iter().enumerate() {
            if on && chosen.iter().all(|&(k, l)| !sup[i][l] || !sup[k][j]) {
                chosen.push((i, j));
            }
        }
    }
    chosen.len()
}

/// Exact minimum cover of the support by all-nonzero rectangles, or `None`
/// when the search budget runs out.
fn min_rectangle_cover(sup: &[Vec<bool>]) -> Option<usize> {
    let m = sup.len();
    let n = sup.first().map_or(0, |r| r.len());
    // orient so rows index the smaller side
    let sup: Vec<Vec<bool>> = if m > n {
        (0..n)
            .map(|j| (0..m).map(|i| sup[i][j]).collect())
            .collect()
    } else {
        sup.to_vec()
    };
    let row_bits: Vec<u64> = sup
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold(0u64, |acc, (j, &b)| acc | ((b as u64) << j))
        })
        .collect();
    let mut cells: Vec<(usize, usize)> = Vec::new();
    for (i, r) in sup.iter().enumerate() {
        for (j, &b) in r.iter().enumerate() {
            if b {
                cells.push((i, j));
            }
        }
    }
    if cells.is_empty() {
        return Some(0);
    }
    // maximal rectangles: column sets are the nonempty intersections of
    // row supports, rows are everything containing them
    let mut col_sets: HashSet<u64> = HashSet::new();
    let mut work: Vec<u64> = row_bits.iter().copied().filter(|&r| r != 0).collect();
    while let Some(c) = work.pop() {
        if !col_sets.insert(c) {
            continue;
        }
        for &r in &row_bits {
            let c2 = c & r;
            if c2 != 0 && !col_sets.contains(&c2) {
                work.push(c2);
            }
        }
    }
    let mut rects: Vec<(u64, u64)> = col_sets
        .into_iter()
        .map(|c| {
            let rows = row_bits
                .iter()
                .enumerate()
                .filter(|(_, &r)| r & c == c)
                .fold(0u64, |acc, (k, _)| acc | (1 << k));
            (rows, c)
        })
        .collect();
    rects.sort();
    let words = cells.len().div_ceil(64);
    let cell_sets: Vec<Vec<u64>> = rects
        .iter()
        .map(|&(rs, cs)| {
            let mut bits = vec![0u64; words];
            for (k, &(i, j)) in cells.iter().enumerate() {
                if rs >> i & 1 == 1 && cs >> j & 1 == 1 {
                    bits[k / 64] |= 1 << (k % 64);
                }
            }
            bits
        })
        .collect();
    let mut covering: Vec<Vec<usize>> = vec![Vec::new(); cells.len()];
    for (r, bits) in cell_sets.iter().enumerate() {
        for (k, cov) in covering.iter_mut().enumerate() {
            if bits[k / 64] >> (k % 64) & 1 == 1 {
                cov.push(r);
            }
        }
    }
    let full: Vec<u64> = (0..words)
        .map(|w| {
            let bitsw = (cells.len() - w * 64).min(64);
            if bitsw == 64 {
                u64::MAX
            } else {
                (1u64 << bitsw) - 1
            }
        })
        .collect();

    // greedy upper bound
    let mut unc = full.clone();
    let mut greedy = 0;
    while unc.iter().any(|&w| w != 0) {
        let best = cell_sets
            .iter()
            .max_by_key(|b| {
                b.iter()
                    .zip(&unc)
                    .map(|(x, u)| (x & u).count_ones())
                    .sum::<u32>()
            })
            .unwrap();
        for (u, b) in unc.iter_mut().zip(best) {
            *u &= !b;
        }
        greedy += 1;
    }
    let max_rect = cell_sets
        .iter()
        .map(|b| b.iter().map(|w| w.count_ones()).sum::<u32>())
        .max()
        .unwrap();

    struct Ctx<'a> {
        cell_sets: &'a [Vec<u64>],
        covering: &'a [Vec<usize>],
        best: usize,
        nodes: u64,
        max_rect: u32,
    }
    fn search(ctx: &mut Ctx<'_>, unc: &[u64], depth: usize) -> bool {
        ctx.nodes += 1;
        if ctx.nodes > NODE_BUDGET {
            return false;
        }
        let left: u32 = unc.iter().map(|w| w.count_ones()).sum();
        if left == 0 {
            ctx.best = ctx.best.min(depth);
            return true;
        }
        let lb = left.div_ceil(ctx.max_rect) as usize;
        if depth + lb >= ctx.best {
            return true;
        }
        // branch on the uncovered cell with fewest covering rectangles
        let mut pick: Option<(usize, usize)> = None;
        for (w, &word) in unc.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let k = w * 64 + b;
                let c = ctx.covering[k].len();
                if pick.is_none_or(|(_, pc)| c < pc) {
                    pick = Some((k, c));
                }
            }
        }
        let (k, _) = pick.unwrap();
        let mut opts: Vec<usize> = ctx.covering[k].clone();
        opts.sort_by_key(|&r| {
            std::cmp::Reverse(
                ctx.cell_sets[r]
                    .iter()
                    .zip(unc)
                    .map(|(x, u)| (x & u).count_ones())
                    .sum::<u32>(),
            )
        });
        for r in opts {
            let next: Vec<u64> = unc
                .iter()
                .zip(&ctx.cell_sets[r])
                .map(|(u, x)| u & !x)
                .collect();
            if !search(ctx, &next, depth + 1) {
                return false;
            }
        }
        true
    }
    let mut ctx = Ctx {
        cell_sets: &cell_sets,
        covering: &covering,
        best: greedy,
        nodes: 0,
        max_rect,
    };
    let done = search(&mut ctx, &full, 0);
    done.then_some(ctx.best)
}

/// Exact linear rank and a rectangle-cover lower bound for `r₊(S)`.
pub fn slack_rank_bounds(s: &RationalMatrix) -> SlackRankBounds {
    let rank = s.rank();
    let sup = support(s);
    let small = s.rows().min(s.cols()) <= EXACT_COVER_CAP && s.rows().max(s.cols()) <= 64;
    if small && s.rows().max(s.cols()) <= EXACT_COVER_CAP {
        if let Some(c) = min_rectangle_cover(&sup) {
            return SlackRankBounds {
                rank,
                rectangle_cover: c,
                cover_exact: true,
            };
        }
    }
    SlackRankBounds {
        rank,
        rectangle_cover: fooling_set(&sup),
        cover_exact: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int_vec, Rational};
    use crate::polytope::{HDesc, Polytope};

    #[test]
    fn segment_slack() {
        let seg = Polytope::from_points(1, vec![int_vec(&[-1]), int_vec(&[1])]).unwrap();
        let s = slack_matrix(&seg, false).unwrap();
        // inequalities sorted: −x ≤ 1, x ≤ 1 ; vertices −1, 1
        assert_eq!(
            s.entries,
            RationalMatrix::from_i64_rows(&[&[0, 2], &[2, 0]])
        );
    }

    #[test]
    fn bounds_examples() {
        let diag = RationalMatrix::from_i64_rows(&[&[1, 0, 0], &[0, 2, 0], &[0, 0, 3]]);
        assert_eq!(
            slack_rank_bounds(&diag),
            SlackRankBounds {
                rank: 3,
                rectangle_cover: 3,
                cover_exact: true
            }
        );
        let ones = RationalMatrix::from_i64_rows(&[&[1, 1], &[1, 1]]);
        assert_eq!(
            slack_rank_bounds(&ones),
            SlackRankBounds {
                rank: 1,
                rectangle_cover: 1,
                cover_exact: true
            }
        );
        let sq = Polytope::from_h(HDesc::cube(
            2,
            &Rational::from_int(-1),
            &Rational::from_int(1),
        ))
        .complete()
        .unwrap();
        let s = slack_matrix(&sq, false).unwrap();
        let b = slack_rank_bounds(&s.entries);
        assert_eq!((b.rank, b.rectangle_cover, b.cover_exact), (3, 4, true));
    }

    /// Brute-force minimum cover over all rectangle families, tiny matrices.
    fn brute_cover(sup: &[Vec<bool>]) -> usize {
        let m = sup.len();
        let n = sup[0].len();
        let mut rects = Vec::new();
        for rs in 1u32..(1 << m) {
            for cs in 1u32..(1 << n) {
                let ok = (0..m)
                    .all(|i| rs >> i & 1 == 0 || (0..n).all(|j| cs >> j & 1 == 0 || sup[i][j]));
                if ok {
                    rects.push((rs, cs));
                }
            }
        }
        let cells: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| sup[i][j])
            .collect();
        if cells.is_empty() {
            return 0;
        }
        for k in 1..=cells.len() {
            let mut idx: Vec<usize> = (0..k).collect();
            loop {
                if cells.iter().all(|&(i, j)| {
                    idx.iter()
                        .any(|&r| rects[r].0 >> i & 1 == 1 && rects[r].1 >> j & 1 == 1)
                }) {
                    return k;
                }
                // next combination
                let mut p = k;
                loop {
                    if p == 0 {
                        break;
                    }
                    p -= 1;
                    if idx[p] < rects.len() - k + p {
                        idx[p] += 1;
                        for q in p + 1..k {
                            idx[q] = idx[q - 1] + 1;
                        }
                        break;
                    }
                    if p == 0 {
                        p = usize::MAX;
                        break;
                    }
                }
                if p == usize::MAX {
                    break;
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn cover_matches_brute_force_on_small_patterns() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let m = rng.gen_range(1..=3);
            let n = rng.gen_range(1..=3);
            let sup: Vec<Vec<bool>> = (0..m)
                .map(|_| (0..n).map(|_| rng.gen_bool(0.6)).collect())
                .collect();
            assert_eq!(
                min_rectangle_cover(&sup),
                Some(brute_cover(&sup)),
                "{sup:?}"
            );
            assert!(fooling_set(&sup) <= brute_cover(&sup));
        }
    }
}
