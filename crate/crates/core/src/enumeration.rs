//! Exact lattice-point enumeration on the LDLᵀ form of the Gram matrix.
//!
//! With `G = L·D·Lᵀ` the quadratic form splits as
//! `Σ_i D_i (y_i + Σ_{j>i} L_{ji} y_j)²`, so fixing coordinates from the last
//! one down leaves a one-dimensional interval for each next coordinate. All
//! bounds are compared exactly; the search visits each coordinate in
//! zig-zag order around the interval centre so that a shrinking radius
//! (closest/shortest vector searches) prunes early.

use num_traits::ToPrimitive;

use crate::exact::{sub_vec, QVec, Rational, RationalMatrix};
use crate::lattice::{Lattice, LatticeVector};

/// Precomputed LDLᵀ data for repeated searches on the same lattice.
#[derive(Clone, Debug)]
pub struct Enumerator {
    k: usize,
    /// `lt[i][j] = L_{ji}` for `j > i`.
    lt: Vec<Vec<Rational>>,
    d: Vec<Rational>,
    gram: RationalMatrix,
}

struct Search<'a> {
    radius: Rational,
    visit: &'a mut dyn FnMut(&[i64], &Rational, &mut Rational),
}

impl Enumerator {
    pub fn new(lattice: &Lattice) -> Self {
        Self::from_gram(lattice.gram())
    }

    pub fn from_gram(gram: &RationalMatrix) -> Self {
        let (l, d) = gram
            .ldlt()
            .expect("lattice Gram matrix is positive definite");
        let k = gram.rows();
        let lt = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        if j > i {
                            l[(j, i)].clone()
                        } else {
                            Rational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Enumerator {
            k,
            lt,
            d,
            gram: gram.clone(),
        }
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn qform(&self, v: &[Rational]) -> Rational {
        self.gram.bilinear(v, v)
    }

    /// Runs the depth-first search. `visit` receives each point with
    /// squared distance `≤` the current radius and may lower the radius.
    fn search(
        &self,
        center: &[Rational],
        r2: Rational,
        visit: &mut dyn FnMut(&[i64], &Rational, &mut Rational),
    ) {
        assert_eq!(center.len(), self.k, "center dimension mismatch");
        if self.k == 0 {
            let mut r = r2;
            visit(&[], &Rational::zero(), &mut r);
            return;
        }
        let mut state = Search { radius: r2, visit };
        let mut x = vec![0i64; self.k];
        let mut y = vec![Rational::zero(); self.k];
        self.descend(
            self.k - 1,
            center,
            &mut x,
            &mut y,
            &Rational::zero(),
            &mut state,
        );
    }

    fn descend(
        &self,
        i: usize,
        center: &[Rational],
        x: &mut [i64],
        y: &mut [Rational],
        partial: &Rational,
        st: &mut Search<'_>,
    ) {
        let mut s = center[i].clone();
        for j in i + 1..self.k {
            if !self.lt[i][j].is_zero() {
                s -= &self.lt[i][j] * &y[j];
            }
        }
        let x0 = s.round().to_i64().expect("coefficient fits in i64");
        let di = &self.d[i];
        // zig-zag: x0, x0+1, x0-1, x0+2, ... ; each direction stops at its
        // first failure since the term is convex in x.
        let mut up_alive = true;
        let mut down_alive = true;
        let mut step: i64 = 0;
        while up_alive || down_alive {
            for dir in [1i64, -1] {
                if step == 0 && dir == -1 {
                    continue;
                }
                let alive = if dir == 1 { up_alive } else { down_alive };
                if !alive {
                    continue;
                }
                let xi = x0 + dir * step;
                let diff = &Rational::from_int(xi) - &s;
                let term = partial + &(di * &(&diff * &diff));
                if term > st.radius {
                    if dir == 1 {
                        up_alive = false;
                    } else {
                        down_alive = false;
                    }
                    if step == 0 {
                        down_alive = false;
                    }
                    continue;
                }
                x[i] = xi;
                y[i] = &Rational::from_int(xi) - &center[i];
                if i == 0 {
                    (st.visit)(x, &term, &mut st.radius);
                } else {
                    self.descend(i - 1, center, x, y, &term, st);
                }
            }
            step += 1;
        }
    }

    /// All `z` with `(z−c)ᵀG(z−c) ≤ r2`, lexicographically sorted.
    pub fn in_ball(&self, center: &[Rational], r2: &Rational) -> Vec<LatticeVector> {
        let mut out = Vec::new();
        if r2.is_negative() {
            return out;
        }
        self.search(center, r2.clone(), &mut |x, _, _| {
            out.push(LatticeVector(x.to_vec()))
        });
        out.sort();
        out
    }

    /// Minimizers of `(z−c)ᵀG(z−c)` over the lattice, starting from radius `r2`
    /// (which must be at least the optimum).
    fn minimizers(
        &self,
        center: &[Rational],
        r2: Rational,
        skip_zero: bool,
    ) -> (Rational, Vec<LatticeVector>) {
        let mut best: Option<Rational> = None;
        let mut out: Vec<LatticeVector> = Vec::new();
        self.search(center, r2, &mut |x, dist, radius| {
            if skip_zero && x.iter().all(|&c| c == 0) {
                return;
            }
            match &best {
                Some(b) if dist > b => {}
                Some(b) if dist == b => out.push(LatticeVector(x.to_vec())),
                _ => {
                    best = Some(dist.clone());
                    *radius = dist.clone();
                    out.clear();
                    out.push(LatticeVector(x.to_vec()));
                }
            }
        });
        out.sort();
        (best.expect("initial radius bounds the optimum"), out)
    }

    pub fn shortest_vectors(&self) -> (Rational, Vec<LatticeVector>) {
        assert!(self.k >= 1, "shortest vectors need rank at least 1");
        let r0 = (0..self.k)
            .map(|i| self.gram[(i, i)].clone())
            .min()
            .unwrap();
        self.minimizers(&vec![Rational::zero(); self.k], r0, true)
    }

    pub fn closest_vectors(&self, x: &[Rational]) -> (Rational, Vec<LatticeVector>) {
        let rounded: QVec = x.iter().map(|v| Rational::from_bigint(v.round())).collect();
        let r0 = self.qform(&sub_vec(x, &rounded));
        self.minimizers(x, r0, false)
    }

    /// Minimizers of the norm over the coset `c + 2Λ`.
    pub fn coset_shortest(&self, c: &LatticeVector) -> Option<(Rational, Vec<LatticeVector>)> {
        if c.0.iter().all(|v| v % 2 == 0) {
            return None;
        }
        let half: QVec = c.0.iter().map(|&v| Rational::new(-v, 2)).collect();
        let (dist2, ys) = self.closest_vectors(&half);
        let mut reps: Vec<LatticeVector> = ys
            .into_iter()
            .map(|y| LatticeVector(c.0.iter().zip(&y.0).map(|(ci, yi)| ci + 2 * yi).collect()))
            .collect();
        reps.sort();
        Some((&dist2 * &Rational::from_int(4), reps))
    }
}

/// Lattice vectors `z` with `(z−center)ᵀ·G·(z−center) ≤ r2`, sorted.
pub fn enumerate_in_ball(
    lattice: &Lattice,
    center: &[Rational],
    r2: &Rational,
) -> Vec<LatticeVector> {
    Enumerator::new(lattice).in_ball(center, r2)
}

/// Minimum squared norm and all shortest nonzero vectors.
pub fn shortest_vectors(lattice: &Lattice) -> (Rational, Vec<LatticeVector>) {
    Enumerator::new(lattice).shortest_vectors()
}

/// Squared distance from `x` (coefficient coordinates) to the lattice and
/// every lattice vector attaining it.
pub fn closest_vectors(lattice: &Lattice, x: &[Rational]) -> (Rational, Vec<LatticeVector>) {
    Enumerator::new(lattice).closest_vectors(x)
}

/// Shortest vectors of `c + 2Λ`; `None` for the trivial coset `c ∈ 2Λ`.
pub fn coset_shortest(
    lattice: &Lattice,
    c: &LatticeVector,
) -> Option<(Rational, Vec<LatticeVector>)> {
    Enumerator::new(lattice).coset_shortest(c)
}
