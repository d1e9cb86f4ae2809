//! Exact rational simplex on a dense tableau.
//!
//! Free variables are split into differences of nonnegative ones unless the
//! system already contains `−x_j ≤ 0`. Phase I drives out artificial
//! variables once; an [`LpSession`] then answers any number of objectives
//! over the same region, each warm-started from the previous optimal basis.
//! Entering variables follow the largest reduced cost, switching to Bland's
//! rule during runs of degenerate pivots, which rules out cycling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{HDesc, Halfspace};
use crate::exact::{dot, QVec, Rational};

const DEGENERATE_RUN: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpResult {
    Optimal { value: Rational, point: QVec },
    Unbounded,
}

/// Farkas multipliers: `y ≥ 0` on inequalities and free `ν` on equations
/// with `Aᵀy + Eᵀν = 0` and `bᵀy + fᵀν < 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub inequality_multipliers: QVec,
    pub equation_multipliers: QVec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(QVec),
    Infeasible(Certificate),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

#[derive(Clone, Copy, Debug)]
enum VarCol {
    Nonneg(usize),
    Split(usize, usize),
}

/// Feasible region in standard form with a current feasible basis.
#[derive(Clone, Debug)]
pub struct LpSession {
    dim: usize,
    vars: Vec<VarCol>,
    ncols: usize,
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
}

fn pivot(rows: &mut [Vec<Rational>], obj: Option<&mut Vec<Rational>>, r: usize, c: usize) {
    let inv = rows[r][c].recip();
    if !inv.is_one() {
        for x in rows[r].iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
    }
    let nz: Vec<usize> = (0..rows[r].len())
        .filter(|&j| !rows[r][j].is_zero())
        .collect();
    let prow: Vec<(usize, Rational)> = nz.iter().map(|&j| (j, rows[r][j].clone())).collect();
    let eliminate = |row: &mut Vec<Rational>| {
        let f = row[c].clone();
        if f.is_zero() {
            return;
        }
        for (j, v) in &prow {
            row[*j] -= &f * v;
        }
    };
    for (i, row) in rows.iter_mut().enumerate() {
        if i != r {
            eliminate(row);
        }
    }
    if let Some(o) = obj {
        eliminate(o);
    }
}

/// Maximizes over `rows` with reduced-cost row `obj` (last entry tracks
/// minus the objective value). Columns `>= allowed` never enter.
/// Returns `false` on unboundedness.
fn optimize(
    rows: &mut [Vec<Rational>],
    basis: &mut [usize],
    obj: &mut Vec<Rational>,
    allowed: usize,
) -> bool {
    let rhs = obj.len() - 1;
    let mut degenerate = 0usize;
    loop {
        let enter = if degenerate >= DEGENERATE_RUN {
            (0..allowed).find(|&j| obj[j].is_positive())
        } else {
            let mut best: Option<usize> = None;
            for j in 0..allowed {
                if obj[j].is_positive() && best.is_none_or(|b| obj[j] > obj[b]) {
                    best = Some(j);
                }
            }
            best
        };
        let Some(c) = enter else { return true };
        let mut leave: Option<(usize, Rational)> = None;
        for (i, row) in rows.iter().enumerate() {
            if !row[c].is_positive() {
                continue;
            }
            let ratio = &row[rhs] / &row[c];
            let better = match &leave {
                None => true,
                Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let Some((r, ratio)) = leave else {
            return false;
        };
        if ratio.is_zero() {
            degenerate += 1;
        } else {
            degenerate = 0;
        }
        pivot(rows, Some(obj), r, c);
        basis[r] = c;
    }
}

impl LpSession {
    /// Runs phase I on `h`; fails when the region is empty.
    pub fn new(h: &HDesc) -> Result<Self, LpError> {
        let n = h.dim;
        // detect explicit nonnegativity rows −c·x_j ≤ 0
        let mut nonneg = vec![false; n];
        let mut dropped = vec![false; h.inequalities.len()];
        for (i, ineq) in h.inequalities.iter().enumerate() {
            if !ineq.rhs.is_zero() {
                continue;
            }
            let nz: Vec<usize> = (0..n).filter(|&j| !ineq.normal[j].is_zero()).collect();
            if nz.len() == 1 && ineq.normal[nz[0]].is_negative() && !nonneg[nz[0]] {
                nonneg[nz[0]] = true;
                dropped[i] = true;
            }
        }
        let mut vars = Vec::with_capacity(n);
        let mut ncols = 0;
        for &nn in &nonneg {
            if nn {
                vars.push(VarCol::Nonneg(ncols));
                ncols += 1;
            } else {
                vars.push(VarCol::Split(ncols, ncols + 1));
                ncols += 2;
            }
        }
        let kept: Vec<&Halfspace> = h
            .inequalities
            .iter()
            .zip(&dropped)
            .filter(|(_, d)| !**d)
            .map(|(i, _)| i)
            .collect();
        let slack0 = ncols;
        let nslack = kept.len();
        let nrows = nslack + h.equations.len();
        let art0 = slack0 + nslack;
        // artificial columns allocated lazily
        let mut needs_art = Vec::with_capacity(nrows);
        let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(nrows);
        let fill = |row: &mut Vec<Rational>, normal: &[Rational]| {
            for (j, a) in normal.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                match vars[j] {
                    VarCol::Nonneg(c) => row[c] = a.clone(),
                    VarCol::Split(p, m) => {
                        row[p] = a.clone();
                        row[m] = -a;
                    }
                }
            }
        };
        for (k, ineq) in kept.iter().enumerate() {
            let mut row = vec![Rational::zero(); art0];
            fill(&mut row, &ineq.normal);
            row[slack0 + k] = Rational::one();
            let mut rhs = ineq.rhs.clone();
            if rhs.is_negative() {
                for x in row.iter_mut() {
                    *x = -&*x;
                }
                rhs = -rhs;
                needs_art.push(true);
            } else {
                needs_art.push(false);
            }
            row.push(rhs);
            rows.push(row);
        }
        for eq in &h.equations {
            let mut row = vec![Rational::zero(); art0];
            fill(&mut row, &eq.normal);
            let mut rhs = eq.rhs.clone();
            if rhs.is_negative() {
                for x in row.iter_mut() {
                    *x = -&*x;
                }
                rhs = -rhs;
            }
            row.push(rhs);
            rows.push(row);
            needs_art.push(true);
        }
        let nart = needs_art.iter().filter(|&&b| b).count();
        let total = art0 + nart;
        let mut basis = vec![0usize; nrows];
        let mut a = art0;
        for (i, row) in rows.iter_mut().enumerate() {
            let rhs = row.pop().unwrap();
            row.resize(total, Rational::zero());
            if needs_art[i] {
                row[a] = Rational::one();
                basis[i] = a;
                a += 1;
            } else {
                basis[i] = slack0 + i;
            }
            row.push(rhs);
        }
        if nart > 0 {
            // maximize −Σ artificials; reduced costs = Σ of artificial rows
            let mut obj = vec![Rational::zero(); total + 1];
            for (i, row) in rows.iter().enumerate() {
                if basis[i] >= art0 {
                    for (o, x) in obj.iter_mut().zip(row) {
                        if !x.is_zero() {
                            *o += x;
                        }
                    }
                }
            }
            for o in obj[art0..total].iter_mut() {
                *o = Rational::zero();
            }
            optimize(&mut rows, &mut basis, &mut obj, art0);
            // obj[rhs] = Σ artificial values at optimum
            if !obj[total].is_zero() {
                return Err(LpError::Infeasible);
            }
            let mut i = 0;
            while i < rows.len() {
                if basis[i] >= art0 {
                    match (0..art0).find(|&j| !rows[i][j].is_zero()) {
                        Some(j) => {
                            pivot(&mut rows, None, i, j);
                            basis[i] = j;
                            i += 1;
                        }
                        None => {
                            rows.remove(i);
                            basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
            for row in rows.iter_mut() {
                let rhs = row.pop().unwrap();
                row.truncate(art0);
                row.push(rhs);
            }
        }
        Ok(LpSession {
            dim: n,
            vars,
            ncols: art0,
            rows,
            basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Current basic feasible solution in the original variables.
    pub fn point(&self) -> QVec {
        let mut col = vec![Rational::zero(); self.ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            col[b] = self.rows[i][self.ncols].clone();
        }
        self.vars
            .iter()
            .map(|v| match *v {
                VarCol::Nonneg(c) => col[c].clone(),
                VarCol::Split(p, m) => &col[p] - &col[m],
            })
            .collect()
    }

    /// Maximizes `c·x` over the region, warm-started from the last basis.
    pub fn maximize(&mut self, c: &[Rational]) -> LpResult {
        assert_eq!(c.len(), self.dim, "objective dimension mismatch");
        let mut cost = vec![Rational::zero(); self.ncols];
        for (j, cj) in c.iter().enumerate() {
            match self.vars[j] {
                VarCol::Nonneg(col) => cost[col] = cj.clone(),
                VarCol::Split(p, m) => {
                    cost[p] = cj.clone();
                    cost[m] = -cj;
                }
            }
        }
        let mut obj = cost.clone();
        obj.push(Rational::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            for (o, x) in obj.iter_mut().zip(&self.rows[i]) {
                if !x.is_zero() {
                    *o -= &cost[b] * x;
                }
            }
        }
        if !optimize(&mut self.rows, &mut self.basis, &mut obj, self.ncols) {
            return LpResult::Unbounded;
        }
        let point = self.point();
        let value = dot(c, &point);
        LpResult::Optimal { value, point }
    }
}

/// One-shot maximization; `None` when infeasible.
pub fn maximize(h: &HDesc, c: &[Rational]) -> Option<LpResult> {
    LpSession::new(h).ok().map(|mut s| s.maximize(c))
}

/// Feasibility of `h` (optionally with extra equations), with a witness
/// point or a Farkas certificate.
pub fn lp_feasible(h: &HDesc, extra_equations: Option<&[Halfspace]>) -> Feasibility {
    let mut sys = h.clone();
    if let Some(extra) = extra_equations {
        sys.equations.extend(extra.iter().cloned());
    }
    match LpSession::new(&sys) {
        Ok(s) => Feasibility::Feasible(s.point()),
        Err(LpError::Infeasible) => Feasibility::Infeasible(farkas(&sys)),
    }
}

fn farkas(h: &HDesc) -> Certificate {
    let mi = h.inequalities.len();
    let me = h.equations.len();
    let nv = mi + me;
    let mut ineqs = Vec::with_capacity(mi);
    for i in 0..mi {
        let mut v = vec![Rational::zero(); nv];
        v[i] = Rational::from_int(-1);
        ineqs.push(Halfspace::new(v, Rational::zero()));
    }
    let mut eqs = Vec::with_capacity(h.dim + 1);
    for j in 0..h.dim {
        let v: QVec = h
            .inequalities
            .iter()
            .chain(&h.equations)
            .map(|r| r.normal[j].clone())
            .collect();
        eqs.push(Halfspace::new(v, Rational::zero()));
    }
    let b: QVec = h
        .inequalities
        .iter()
        .chain(&h.equations)
        .map(|r| r.rhs.clone())
        .collect();
    eqs.push(Halfspace::new(b, Rational::from_int(-1)));
    let sys = HDesc::new(nv, ineqs, eqs);
    let s = LpSession::new(&sys).expect("Farkas alternative holds for an infeasible system");
    let mut y = s.point();
    let nu = y.split_off(mi);
    Certificate {
        inequality_multipliers: y,
        equation_multipliers: nu,
    }
}

/// Checks a Farkas certificate exactly.
pub fn verify_certificate(h: &HDesc, cert: &Certificate) -> bool {
    if cert.inequality_multipliers.len() != h.inequalities.len()
        || cert.equation_multipliers.len() != h.equations.len()
        || cert
            .inequality_multipliers
            .iter()
            .any(Rational::is_negative)
    {
        return false;
    }
    let rows = h.inequalities.iter().chain(&h.equations);
    let mults: Vec<&Rational> = cert
        .inequality_multipliers
        .iter()
        .chain(&cert.equation_multipliers)
        .collect();
    let mut combo = vec![Rational::zero(); h.dim];
    let mut rhs = Rational::zero();
    for (r, m) in rows.zip(&mults) {
        for (c, a) in combo.iter_mut().zip(&r.normal) {
            *c += *m * a;
        }
        rhs += *m * &r.rhs;
    }
    combo.iter().all(Rational::is_zero) && rhs.is_negative()
}

/// Convenience wrapper kept for callers that build programs incrementally.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub dim: usize,
    pub inequalities: Vec<Halfspace>,
    pub equations: Vec<Halfspace>,
}

impl LinearProgram {
    pub fn new(dim: usize) -> Self {
        LinearProgram {
            dim,
            ..Default::default()
        }
    }

    pub fn le(&mut self, normal: QVec, rhs: Rational) -> &mut Self {
        self.inequalities.push(Halfspace::new(normal, rhs));
        self
    }

    pub fn eq(&mut self, normal: QVec, rhs: Rational) -> &mut Self {
        self.equations.push(Halfspace::new(normal, rhs));
        self
    }

    pub fn to_hdesc(&self) -> HDesc {
        HDesc::new(self.dim, self.inequalities.clone(), self.equations.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int_vec;
    use proptest::prelude::*;

    fn q(n: i64) -> Rational {
        Rational::from_int(n)
    }

    #[test]
    fn infeasible_certificate_example() {
        let h = HDesc::new(
            1,
            vec![
                Halfspace::new(int_vec(&[1]), q(1)),
                Halfspace::new(int_vec(&[-1]), q(-2)),
            ],
            vec![],
        );
        match lp_feasible(&h, None) {
            Feasibility::Infeasible(c) => {
                assert_eq!(c.inequality_multipliers, int_vec(&[1, 1]));
                assert!(verify_certificate(&h, &c));
            }
            f => panic!("expected infeasible, got {f:?}"),
        }
    }

    #[test]
    fn point_membership_in_square() {
        let sq = HDesc::cube(2, &q(0), &q(1));
        let extra = vec![
            Halfspace::new(int_vec(&[1, 0]), Rational::new(1, 2)),
            Halfspace::new(int_vec(&[0, 1]), Rational::new(1, 2)),
        ];
        assert_eq!(
            lp_feasible(&sq, Some(&extra)),
            Feasibility::Feasible(vec![Rational::new(1, 2); 2])
        );
        let outside = vec![Halfspace::new(int_vec(&[1, 1]), q(3))];
        match lp_feasible(&sq, Some(&outside)) {
            Feasibility::Infeasible(c) => {
                let mut sys = sq.clone();
                sys.equations.extend(outside);
                assert!(verify_certificate(&sys, &c));
            }
            f => panic!("expected infeasible, got {f:?}"),
        }
    }

    #[test]
    fn session_warm_starts() {
        let cube = HDesc::cube(3, &q(-1), &q(2));
        let mut s = LpSession::new(&cube).unwrap();
        for (c, v) in [
            (int_vec(&[1, 1, 1]), 6),
            (int_vec(&[-1, 0, 0]), 1),
            (int_vec(&[1, -2, 3]), 10),
        ] {
            match s.maximize(&c) {
                LpResult::Optimal { value, point } => {
                    assert_eq!(value, q(v));
                    assert!(cube.contains(&point));
                }
                LpResult::Unbounded => panic!("bounded"),
            }
        }
    }

    #[test]
    fn unbounded_detected() {
        let h = HDesc::new(2, vec![Halfspace::new(int_vec(&[-1, 0]), q(0))], vec![]);
        assert_eq!(maximize(&h, &int_vec(&[1, 0])), Some(LpResult::Unbounded));
        assert!(matches!(
            maximize(&h, &int_vec(&[-1, 0])),
            Some(LpResult::Optimal { .. })
        ));
    }

    #[test]
    fn equations_and_redundant_rows() {
        // simplex x+y+z = 1, x,y,z ≥ 0 with a duplicated equation
        let lp = LinearProgram::new(3)
            .le(int_vec(&[-1, 0, 0]), q(0))
            .le(int_vec(&[0, -1, 0]), q(0))
            .le(int_vec(&[0, 0, -1]), q(0))
            .eq(int_vec(&[1, 1, 1]), q(1))
            .eq(int_vec(&[2, 2, 2]), q(2))
            .to_hdesc();
        match maximize(&lp, &int_vec(&[1, 3, 2])) {
            Some(LpResult::Optimal { value, point }) => {
                assert_eq!(value, q(3));
                assert_eq!(point, int_vec(&[0, 1, 0]));
            }
            r => panic!("{r:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        /// LP optimum over a box-bounded random polytope equals the best vertex.
        #[test]
        fn optimum_matches_vertex_scan(
            rows in proptest::collection::vec((proptest::collection::vec(-3i64..=3, 2), 0i64..=4), 0..5),
            c in proptest::collection::vec(-3i64..=3, 2),
        ) {
            let mut h = HDesc::cube(2, &q(-3), &q(3));
            for (a, b) in rows {
                h.inequalities.push(Halfspace::new(int_vec(&a), q(b)));
            }
            let c = int_vec(&c);
            let verts = super::super::vertex_enumeration(&h).unwrap();
            let best = verts.iter().map(|v| dot(&c, v)).max().unwrap();
            match maximize(&h, &c) {
                Some(LpResult::Optimal { value, point }) => {
                    prop_assert_eq!(value, best);
                    prop_assert!(h.contains(&point));
                }
                r => prop_assert!(false, "unexpected {:?}", r),
            }
        }

        #[test]
        fn certificates_verify(
            rows in proptest::collection::vec((proptest::collection::vec(-3i64..=3, 2), -4i64..=4), 1..7),
        ) {
            let h = HDesc::new(
                2,
                rows.iter().map(|(a, b)| Halfspace::new(int_vec(a), q(*b))).collect(),
                vec![],
            );
            match lp_feasible(&h, None) {
                Feasibility::Feasible(x) => prop_assert!(h.contains(&x)),
                Feasibility::Infeasible(c) => prop_assert!(verify_certificate(&h, &c)),
            }
        }
    }
}
