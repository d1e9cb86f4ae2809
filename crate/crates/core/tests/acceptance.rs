//! Acceptance suite. Prints one PASS/FAIL line per check and exits nonzero
//! if any check fails. All comparisons are exact rational equalities.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use vxc_core::enumeration::shortest_vectors;
use vxc_core::exact::{QVec, Rational};
use vxc_core::gadgets::{
    build_gadget, correlation_instance, slack_embedding, stable_set_instance, verify_gadget, Graph,
};
use vxc_core::lattice::{root_lattice, Family, Lattice, LatticeVector};
use vxc_core::lifts::{
    astar_zonotope_generators, embedded_voronoi_cell, lift_congruence_cell, lift_root_cell,
    lift_zonotope, verify_lift, Lift,
};
use vxc_core::polytope::{
    cartesian_product, dualize, facet_enumeration, slack_matrix, vertex_enumeration, Polytope,
};
use vxc_core::suite::random_points;
use vxc_core::voronoi::{
    cell_from_relevant, facet_vectors_by_lp, relevant_vectors, tiling_violations,
};

const SEED: u64 = 0x5eed;

struct Tally {
    failed: Vec<String>,
    total: usize,
}

impl Tally {
    fn line(&mut self, criterion: u32, ok: bool, what: &str, elapsed: Duration) {
        self.total += 1;
        let tag = if ok { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {criterion}. {what} ({:.2}s)",
            elapsed.as_secs_f64()
        );
        if !ok {
            self.failed.push(format!("{criterion}. {what}"));
        }
    }
}

fn lattice(f: Family, d: usize) -> Lattice {
    root_lattice(f, d).unwrap()
}

/// Lattices of rank ≤ 4 from every family that has members there.
fn small_lattices() -> Vec<Lattice> {
    let mut out = Vec::new();
    for d in 1..=4 {
        out.push(lattice(Family::Z, d));
        out.push(lattice(Family::A, d));
        out.push(lattice(Family::Astar, d));
    }
    for d in 2..=4 {
        out.push(lattice(Family::D, d));
        out.push(lattice(Family::DstarScaled, d));
    }
    out
}

fn criterion_1(t: &mut Tally) {
    let limit = Duration::from_secs(60);
    let mut check = |label: String, l: Lattice, expected: usize| {
        let start = Instant::now();
        let got = relevant_vectors(&l).map(|r| r.len());
        let el = start.elapsed();
        let ok = got.as_ref().ok() == Some(&expected) && el < limit;
        t.line(
            1,
            ok,
            &format!("|F({label})| = {:?}, expected {expected}", got.ok()),
            el,
        );
    };
    for d in 1..=8 {
        check(format!("Z{d}"), lattice(Family::Z, d), 2 * d);
    }
    for d in 1..=6 {
        check(format!("A{d}"), lattice(Family::A, d), d * (d + 1));
    }
    for d in 3..=6 {
        check(format!("D{d}"), lattice(Family::D, d), 2 * d * (d - 1));
    }
    for d in 1..=6 {
        // the count 2d + 2^d needs d ≥ 3; below that the lattice is rectangular
        let expected = if d >= 3 { 2 * d + (1 << d) } else { 2 * d };
        check(
            format!("Dstar{d}"),
            lattice(Family::DstarScaled, d),
            expected,
        );
    }
    for d in 1..=5 {
        check(
            format!("Astar{d}"),
            lattice(Family::Astar, d),
            2 * ((1 << d) - 1),
        );
    }
    // E8: facet vectors coincide with the minimal vectors found by ball enumeration
    let start = Instant::now();
    let e8 = lattice(Family::E8, 8);
    let rv = relevant_vectors(&e8).unwrap();
    let (min, shortest) = shortest_vectors(&e8);
    let coeffs: Vec<LatticeVector> = rv.coeffs();
    let same = coeffs.iter().collect::<BTreeSet<_>>() == shortest.iter().collect::<BTreeSet<_>>();
    let el = start.elapsed();
    t.line(
        1,
        rv.len() == 240
            && shortest.len() == 240
            && min == Rational::from_int(2)
            && same
            && el < limit,
        &format!(
            "|F(E8)| = {}, ball at norm 2 has {} vectors, sets equal = {same}",
            rv.len(),
            shortest.len()
        ),
        el,
    );
}

fn lift_line(t: &mut Tally, l: &Lift, expected_facets: Option<usize>, label: &str) {
    let start = Instant::now();
    let r = verify_lift(l);
    let el = start.elapsed();
    let (ok, detail) = match r {
        Ok(r) => {
            let facets_ok = expected_facets.is_none_or(|e| e == r.facet_count);
            (
                r.exact && facets_ok,
                format!(
                    "{label}: exact = {}, facets = {} (expected {}), target {}V/{}F",
                    r.exact,
                    r.facet_count,
                    expected_facets.map_or("-".into(), |e| e.to_string()),
                    r.target_vertices,
                    r.target_facets
                ),
            )
        }
        Err(e) => (false, format!("{label}: {e}")),
    };
    t.line(2, ok, &detail, el);
}

fn criterion_2(t: &mut Tally) {
    let start = Instant::now();
    let before = t.failed.len();
    for (family, max_d, facets) in [
        (
            Family::A,
            5,
            &(|d: usize| 2 * (d + 1)) as &dyn Fn(usize) -> usize,
        ),
        (Family::D, 5, &|d| 4 * d),
        (Family::Astar, 4, &|d| (d + 1) * (d + 1)),
        (Family::DstarScaled, 4, &|d| 4 * d),
    ] {
        for d in 2..=max_d {
            let l = lift_root_cell(family, d).unwrap();
            lift_line(t, &l, Some(facets(d)), &format!("root cell {family}{d}"));
        }
    }
    for d in 2..=4 {
        for a in 1..=3u64 {
            let l = lift_congruence_cell(d, a).unwrap();
            // pieces: one segment, one crosspolytope, at most 2(d−1) orbits
            let bound = 2 + 2 * d + 2 * (d - 1) * d * d;
            let label = format!(
                "congruence d={d} a={a} (facets {} <= {bound})",
                l.facet_count()
            );
            if l.facet_count() > bound {
                t.line(2, false, &label, Duration::ZERO);
                continue;
            }
            lift_line(t, &l, None, &label);
        }
    }
    for d in 1..=4 {
        let gens = astar_zonotope_generators(d);
        let target = embedded_voronoi_cell(&lattice(Family::Astar, d)).unwrap();
        let l = lift_zonotope(&gens).with_target(target);
        let ok_count = gens.len() <= d * (d + 1) / 2;
        lift_line(
            t,
            &l,
            Some(2 * gens.len()),
            &format!("zonotope Astar{d}, {} generators", gens.len()),
        );
        if !ok_count {
            t.line(
                2,
                false,
                &format!("zonotope Astar{d} generator count {}", gens.len()),
                Duration::ZERO,
            );
        }
    }
    let el = start.elapsed();
    t.line(
        2,
        el < Duration::from_secs(120) && t.failed.len() == before,
        "all lift verifications exact within 120 s",
        el,
    );
}

/// Closest lattice points to `(0, −1)` straight from the lattice definition:
/// integer `(z', t)` with `E z' + t f = 0` and `⟨1, z'⟩ + t·alphaSq = 0`,
/// searched over the ball that contains every candidate beating the origin.
fn brute_force_closest(g: &Graph) -> (BTreeSet<QVec>, BTreeSet<QVec>) {
    let sys = stable_set_instance(g).unwrap();
    let emb = slack_embedding(&sys).unwrap();
    let n = emb.h.len();
    let a2 = emb.alpha_sq as i64;
    let mut best = i64::MAX;
    let mut found: BTreeSet<QVec> = BTreeSet::new();
    for t in -2i64..=0 {
        let budget = a2 - a2 * (t + 1) * (t + 1);
        let mut z = vec![0i64; n];
        fn rec(i: usize, left: i64, z: &mut Vec<i64>, visit: &mut dyn FnMut(&[i64])) {
            if i == z.len() {
                visit(z);
                return;
            }
            let mut v = 0i64;
            while v * v <= left {
                for s in if v == 0 { vec![0] } else { vec![v, -v] } {
                    z[i] = s;
                    rec(i + 1, left - s * s, z, visit);
                }
                v += 1;
            }
            z[i] = 0;
        }
        let mut visit = |z: &[i64]| {
            let zq: QVec = z.iter().map(|&v| Rational::from_int(v)).collect();
            let sum: i64 = z.iter().sum();
            if sum + t * a2 != 0 {
                return;
            }
            let in_l = (0..emb.equations.rows()).all(|r| {
                let lhs: Rational = (0..n).map(|c| &emb.equations[(r, c)] * &zq[c]).sum();
                lhs + &emb.rhs[r] * &Rational::from_int(t) == Rational::zero()
            });
            if !in_l {
                return;
            }
            let d = z.iter().map(|v| v * v).sum::<i64>() + a2 * (t + 1) * (t + 1);
            let mut p = zq.clone();
            p.push(Rational::from_int(t));
            if d < best {
                best = d;
                found.clear();
            }
            if d == best {
                found.insert(p);
            }
        };
        rec(0, budget, &mut z, &mut visit);
    }
    let mut expected: BTreeSet<QVec> = BTreeSet::new();
    expected.insert(vec![Rational::zero(); n + 1]);
    for x in &emb.xprime {
        let mut p: QVec = x.iter().map(|&b| Rational::from_int(b as i64)).collect();
        p.push(Rational::from_int(-1));
        expected.insert(p);
    }
    assert_eq!(best, a2, "origin is at distance alphaSq");
    (found, expected)
}

fn stable_sets_oracle(g: &Graph) -> usize {
    (0..1u32 << g.n)
        .filter(|m| {
            g.edges
                .iter()
                .all(|&(u, v)| !(m >> u & 1 == 1 && m >> v & 1 == 1))
        })
        .count()
}

fn criterion_3(t: &mut Tally) {
    for n in 1..=5 {
        let start = Instant::now();
        let graphs = Graph::all_on(n);
        let failures: Vec<String> = graphs
            .par_iter()
            .filter_map(|g| {
                let sys = stable_set_instance(g).unwrap();
                if sys.x.len() != stable_sets_oracle(g) {
                    return Some(format!("{:?}: stable set count", g.edges));
                }
                let inst = build_gadget(&sys).unwrap();
                let r = verify_gadget(&inst).unwrap();
                (!(r.passed && r.rank <= n + 1 && r.face_vertices == sys.x.len()))
                    .then(|| format!("{:?}: passed = {}, rank = {}", g.edges, r.passed, r.rank))
            })
            .collect();
        t.line(
            3,
            failures.is_empty(),
            &format!(
                "all {} graphs on {n} nodes: three checks pass, rank <= {}{}",
                graphs.len(),
                n + 1,
                fmt_fail(&failures)
            ),
            start.elapsed(),
        );
    }
    let start = Instant::now();
    let mut bad = Vec::new();
    for n in 1..=3 {
        for g in Graph::all_on(n) {
            let (found, expected) = brute_force_closest(&g);
            let inst = build_gadget(&stable_set_instance(&g).unwrap()).unwrap();
            let r = verify_gadget(&inst).unwrap();
            if found != expected || r.closest_count != found.len() {
                bad.push(format!("{:?}", g.edges));
            }
        }
    }
    t.line(
        3,
        bad.is_empty(),
        &format!(
            "brute-force closest sets equal U for all graphs on <= 3 nodes{}",
            fmt_fail(&bad)
        ),
        start.elapsed(),
    );
    for n in 2..=3 {
        let start = Instant::now();
        let inst = build_gadget(&correlation_instance(n).unwrap()).unwrap();
        let r = verify_gadget(&inst).unwrap();
        t.line(
            3,
            r.passed && r.face_vertices == 1 << n && r.rank <= n * n + 1,
            &format!(
                "correlation n={n}: passed = {}, face vertices = {} (expected {}), rank = {} <= {}",
                r.passed,
                r.face_vertices,
                1 << n,
                r.rank,
                n * n + 1
            ),
            start.elapsed(),
        );
    }
}

fn fmt_fail(v: &[String]) -> String {
    if v.is_empty() {
        String::new()
    } else {
        format!(
            "; failures: {}",
            v.iter().take(5).cloned().collect::<Vec<_>>().join(", ")
        )
    }
}

fn cell(l: &Lattice) -> Polytope {
    cell_from_relevant(&relevant_vectors(l).unwrap())
        .complete()
        .unwrap()
}

fn criterion_4(t: &mut Tally) {
    for l in small_lattices() {
        let start = Instant::now();
        let p = cell(&l);
        let pd = dualize(&p).unwrap().complete().unwrap();
        let pdd = dualize(&pd).unwrap();
        let involution = pdd.same_set(&p).unwrap();
        let s = slack_matrix(&p, true).unwrap().entries;
        let sd = slack_matrix(&pd, true).unwrap().entries;
        // rows of S(P°) are vertices of P°, i.e. facet normals of P; match them up
        let ph = p.h().unwrap();
        let pv = p.vertices().unwrap();
        let pdv = pd.vertices().unwrap();
        let pdh = pd.h().unwrap();
        let row_of = |y: &QVec| {
            ph.inequalities
                .iter()
                .position(|h| &h.unit_rhs().normal == y)
        };
        let col_of =
            |h: &vxc_core::polytope::Halfspace| pv.iter().position(|v| v == &h.unit_rhs().normal);
        let mut transpose_ok = sd.rows() == s.cols() && sd.cols() == s.rows();
        if transpose_ok {
            'outer: for (i, h) in pdh.inequalities.iter().enumerate() {
                let Some(vj) = col_of(h) else {
                    transpose_ok = false;
                    break;
                };
                for (j, y) in pdv.iter().enumerate() {
                    let Some(fi) = row_of(y) else {
                        transpose_ok = false;
                        break 'outer;
                    };
                    if sd[(i, j)] != s[(fi, vj)] {
                        transpose_ok = false;
                        break 'outer;
                    }
                }
            }
        }
        t.line(
            4,
            involution && transpose_ok,
            &format!(
                "{}: dual of dual = cell: {involution}, S(P°) = S(P)ᵀ: {transpose_ok}",
                l.label()
            ),
            start.elapsed(),
        );
    }
}

fn criterion_5(t: &mut Tally) {
    let pool: Vec<Lattice> = vec![
        lattice(Family::Z, 1),
        lattice(Family::Z, 2),
        lattice(Family::A, 2),
        lattice(Family::A, 3),
        lattice(Family::D, 3),
        lattice(Family::Astar, 2),
        lattice(Family::Astar, 3),
        lattice(Family::DstarScaled, 2),
        lattice(Family::DstarScaled, 3),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut trials = 0;
    while trials < 5 {
        let a = &pool[rng.gen_range(0..pool.len())];
        let b = &pool[rng.gen_range(0..pool.len())];
        if a.rank() + b.rank() > 6 {
            continue;
        }
        trials += 1;
        let start = Instant::now();
        let prod = a.product(b);
        let ra = relevant_vectors(a).unwrap().coeffs();
        let rb = relevant_vectors(b).unwrap().coeffs();
        let mut expected: Vec<LatticeVector> = ra
            .iter()
            .map(|v| LatticeVector([v.0.clone(), vec![0; b.rank()]].concat()))
            .chain(
                rb.iter()
                    .map(|v| LatticeVector([vec![0; a.rank()], v.0.clone()].concat())),
            )
            .collect();
        expected.sort();
        let mut got = relevant_vectors(&prod).unwrap().coeffs();
        got.sort();
        let rel_ok = got == expected;
        let cells_ok = cell(&prod)
            .same_set(&cartesian_product(&cell(a), &cell(b)).unwrap())
            .unwrap();
        t.line(
            5,
            rel_ok && cells_ok,
            &format!(
                "{} x {}: relevant vectors factor: {rel_ok}, VC factors: {cells_ok}",
                a.label(),
                b.label()
            ),
            start.elapsed(),
        );
    }
}

fn criterion_6(t: &mut Tally) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for l in small_lattices() {
        let start = Instant::now();
        let rv = relevant_vectors(&l).unwrap();
        let pts = random_points(&mut rng, l.rank(), 1000);
        let v = tiling_violations(&rv, &pts);
        t.line(
            6,
            v.is_empty(),
            &format!("{}: 1000 points, {} tiling violations", l.label(), v.len()),
            start.elapsed(),
        );
    }
}

fn dd_roundtrip(p: &Polytope) -> bool {
    let v = p.vertices().unwrap().to_vec();
    let h = facet_enumeration(p.dim, &v).unwrap();
    let v2 = vertex_enumeration(&h).unwrap();
    let h2 = facet_enumeration(p.dim, &v2).unwrap();
    v2 == v && h2.canonical() == h.canonical() && h.canonical() == p.h().unwrap().canonical()
}

fn criterion_7(t: &mut Tally) {
    for l in small_lattices() {
        let start = Instant::now();
        let mut sweep = relevant_vectors(&l).unwrap().coeffs();
        sweep.sort();
        let mut lp = facet_vectors_by_lp(&l);
        lp.sort();
        let agree = sweep == lp;
        let p = cell(&l);
        let pd = dualize(&p).unwrap().complete().unwrap();
        let rt = dd_roundtrip(&p) && dd_roundtrip(&pd);
        t.line(
            7,
            agree && rt,
            &format!("{}: coset sweep = LP irredundancy ({} vectors): {agree}, DD roundtrip on cell and polar: {rt}", l.label(), sweep.len()),
            start.elapsed(),
        );
    }
    let start = Instant::now();
    let mut all = true;
    let mut count = 0;
    for (f, dmax) in [
        (Family::A, 4),
        (Family::D, 4),
        (Family::Astar, 4),
        (Family::DstarScaled, 4),
    ] {
        for d in 2..=dmax {
            let l = lift_root_cell(f, d).unwrap();
            let tgt = l.target.unwrap().complete().unwrap();
            all &= dd_roundtrip(&tgt);
            count += 1;
        }
    }
    t.line(
        7,
        all,
        &format!("DD roundtrip on {count} lift targets"),
        start.elapsed(),
    );
}

fn criterion_8(t: &mut Tally) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let lifts: Vec<Lift> = [
        (Family::A, 3),
        (Family::D, 3),
        (Family::Astar, 3),
        (Family::DstarScaled, 3),
        (Family::A, 4),
    ]
    .iter()
    .map(|&(f, d)| lift_root_cell(f, d).unwrap())
    .chain([lift_congruence_cell(3, 2).unwrap()])
    .collect();
    let start = Instant::now();
    let mut detected = 0;
    for _ in 0..20 {
        let mut l = lifts[rng.gen_range(0..lifts.len())].clone();
        let (r, c) = (
            rng.gen_range(0..l.proj.matrix.rows()),
            rng.gen_range(0..l.proj.matrix.cols()),
        );
        let mut delta = 0i64;
        while delta == 0 {
            delta = rng.gen_range(-2..=2);
        }
        l.proj.matrix[(r, c)] += &Rational::from_int(delta);
        let rep = verify_lift(&l).unwrap();
        if !rep.exact && (!rep.escaped.is_empty() || !rep.missed_vertices.is_empty()) {
            detected += 1;
        }
    }
    t.line(
        8,
        detected == 20,
        &format!("corrupted lift projections detected in {detected}/20 trials"),
        start.elapsed(),
    );

    let start = Instant::now();
    let mut detected = 0;
    for _ in 0..20 {
        let n = rng.gen_range(2..=5);
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let edges: Vec<(usize, usize)> = pairs.into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        let g = Graph::new(n, &edges).unwrap();
        let inst = build_gadget(&stable_set_instance(&g).unwrap()).unwrap();
        let mut h = inst.h.clone();
        let i = rng.gen_range(0..h.len());
        h[i] += &Rational::from_int(if rng.gen_bool(0.5) { 1 } else { -1 });
        match inst.with_h(h) {
            Ok(bad) => {
                let r = verify_gadget(&bad).unwrap();
                if !r.checks[0].passed && !r.checks[0].witnesses.is_empty() {
                    detected += 1;
                }
            }
            Err(_) => detected += 1,
        }
    }
    t.line(
        8,
        detected == 20,
        &format!("perturbed gadget h detected in {detected}/20 trials"),
        start.elapsed(),
    );
}

fn main() {
    let mut t = Tally {
        failed: vec![],
        total: 0,
    };
    let start = Instant::now();
    criterion_1(&mut t);
    criterion_2(&mut t);
    criterion_3(&mut t);
    criterion_4(&mut t);
    criterion_5(&mut t);
    criterion_6(&mut t);
    criterion_7(&mut t);
    criterion_8(&mut t);
    println!(
        "acceptance: {} checks, {} failed, {:.1}s",
        t.total,
        t.failed.len(),
        start.elapsed().as_secs_f64()
    );
    if !t.failed.is_empty() {
        for f in &t.failed {
            println!("  failed: {f}");
        }
        std::process::exit(1);
    }
}
