//! Batch verification over lattice families, producing a table of relevant
//! vector counts, lift sizes, exactness, slack-matrix brackets and tiling
//! checks. Timings go to the text rendering only, so the JSON form is
//! reproducible byte for byte.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exact::{QVec, Rational};
use crate::lattice::{congruence_lattice, root_lattice, Family, Lattice};
use crate::lifts::{lift_congruence_cell, lift_root_cell, verify_lift, Lift, LiftReport, Route};
use crate::polytope::{slack_matrix, slack_rank_bounds};
use crate::voronoi::{relevant_vectors, tiling_violations, RelevantVectorSet};

/// Closed-form facet-vector counts where they are known.
pub fn expected_relevant_count(family: Family, d: usize) -> Option<usize> {
    match family {
        Family::Z => Some(2 * d),
        Family::A => Some(d * (d + 1)),
        Family::D if d >= 3 => Some(2 * d * (d - 1)),
        Family::DstarScaled if d >= 3 => Some(2 * d + (1 << d)),
        Family::Astar => Some(2 * ((1 << d) - 1)),
        Family::E6 => Some(72),
        Family::E7 => Some(126),
        Family::E8 => Some(240),
        _ => None,
    }
}

/// Closed-form facet count of the named root-cell lift.
pub fn expected_lift_facets(family: Family, d: usize) -> Option<usize> {
    match family {
        Family::A => Some(2 * (d + 1)),
        Family::D | Family::DstarScaled => Some(4 * d),
        Family::Astar => Some((d + 1) * (d + 1)),
        _ => None,
    }
}

/// Seeded random rational points with coordinates in `[-3, 3]` and
/// denominators up to 12.
pub fn random_points(rng: &mut impl Rng, dim: usize, count: usize) -> Vec<QVec> {
    (0..count)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let den: i64 = rng.gen_range(1..=12);
                    let num: i64 = rng.gen_range(-3 * den..=3 * den);
                    Rational::new(num, den)
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub families: Vec<Family>,
    pub min_d: usize,
    pub max_d: usize,
    pub congruence: Vec<(usize, u64)>,
    pub seed: u64,
    pub tiling_points: usize,
    pub slack_bounds: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            families: vec![Family::A, Family::D, Family::Astar, Family::DstarScaled],
            min_d: 2,
            max_d: 4,
            congruence: vec![],
            seed: 0,
            tiling_points: 100,
            slack_bounds: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Bracket {
    pub rank: usize,
    pub rectangle_cover: usize,
    pub cover_exact: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteRow {
    pub label: String,
    pub rank: usize,
    pub relevant: usize,
    pub expected_relevant: Option<usize>,
    pub lift_facets: Option<usize>,
    pub expected_lift_facets: Option<usize>,
    pub route: Option<Route>,
    pub lift: Option<LiftReport>,
    /// Slack-matrix lower bounds for the lifted polytope.
    pub slack: Option<Bracket>,
    pub tiling_points: usize,
    pub tiling_violations: usize,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub seconds: f64,
}

impl SuiteRow {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn verdict(&self) -> &'static str {
        match (&self.lift, self.passed()) {
            (_, false) => "FAILED",
            (Some(_), true) => "exact",
            (None, true) => "ok",
        }
    }

    pub fn line(&self, timings: bool) -> String {
        let mut s = format!("{}: relevant = {}", self.label, self.relevant);
        match self.lift_facets {
            Some(f) => write!(s, ", lift facets = {f}").unwrap(),
            None => s.push_str(", lift facets = -"),
        }
        write!(s, ", verified = {}", self.verdict()).unwrap();
        if let Some(l) = &self.lift {
            write!(
                s,
                ", cell = {} vertices / {} facets",
                l.target_vertices, l.target_facets
            )
            .unwrap();
        }
        if let Some(b) = &self.slack {
            let rel = if b.cover_exact { "=" } else { ">=" };
            write!(
                s,
                ", slack rank = {}, rectangle cover {rel} {}",
                b.rank, b.rectangle_cover
            )
            .unwrap();
        }
        if self.tiling_points > 0 {
            write!(
                s,
                ", tiling violations = {}/{}",
                self.tiling_violations, self.tiling_points
            )
            .unwrap();
        }
        if timings {
            write!(s, ", time = {:.3}s", self.seconds).unwrap();
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub rows: Vec<SuiteRow>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn text(&self, timings: bool) -> String {
        let mut s = String::new();
        for r in &self.rows {
            s.push_str(&r.line(timings));
            s.push('\n');
            for f in &r.failures {
                writeln!(s, "  failure: {f}").unwrap();
            }
        }
        let failed = self.rows.iter().filter(|r| !r.passed()).count();
        writeln!(s, "{} rows, {} failed", self.rows.len(), failed).unwrap();
        s
    }
}

fn check_lattice(
    label: String,
    lattice: &Lattice,
    lift: Option<Lift>,
    expected_relevant: Option<usize>,
    expected_facets: Option<usize>,
    opts: &SuiteOptions,
    rng: &mut ChaCha8Rng,
) -> SuiteRow {
    let start = Instant::now();
    let mut failures = Vec::new();
    let rv: Option<RelevantVectorSet> = match relevant_vectors(lattice) {
        Ok(rv) => Some(rv),
        Err(e) => {
            failures.push(format!("relevant vectors: {e}"));
            None
        }
    };
    let relevant = rv.as_ref().map_or(0, |r| r.len());
    if let Some(e) = expected_relevant {
        if rv.is_some() && e != relevant {
            failures.push(format!("relevant vector count {relevant}, expected {e}"));
        }
    }
    let mut report = None;
    let mut slack = None;
    let route = lift.as_ref().map(|l| l.meta.route);
    let lift_facets = lift.as_ref().map(Lift::facet_count);
    if let (Some(e), Some(f)) = (expected_facets, lift_facets) {
        if e != f {
            failures.push(format!("lift has {f} facets, expected {e}"));
        }
    }
    if let Some(l) = &lift {
        match verify_lift(l) {
            Ok(r) => {
                if !r.exact {
                    failures.push(format!(
                        "lift not exact: {} escaped, {} missed",
                        r.escaped.len(),
                        r.missed_vertices.len()
                    ));
                }
                report = Some(r);
            }
            Err(e) => failures.push(format!("lift verification: {e}")),
        }
        if opts.slack_bounds {
            let bracket = l
                .target
                .as_ref()
                .and_then(|t| t.complete().ok())
                .and_then(|t| slack_matrix(&t, true).ok())
                .map(|s| slack_rank_bounds(&s.entries));
            if let Some(b) = bracket {
                if let Some(f) = lift_facets {
                    if b.lower() > f {
                        failures.push(format!(
                            "slack lower bound {} exceeds lift size {f}",
                            b.lower()
                        ));
                    }
                }
                slack = Some(Bracket {
                    rank: b.rank,
                    rectangle_cover: b.rectangle_cover,
                    cover_exact: b.cover_exact,
                });
            }
        }
    }
    let mut tiling = 0;
    if let Some(rv) = &rv {
        let pts = random_points(rng, lattice.rank(), opts.tiling_points);
        tiling = tiling_violations(rv, &pts).len();
        if tiling > 0 {
            failures.push(format!("{tiling} tiling violations"));
        }
    }
    SuiteRow {
        label,
        rank: lattice.rank(),
        relevant,
        expected_relevant,
        lift_facets,
        expected_lift_facets: expected_facets,
        route,
        lift: report,
        slack,
        tiling_points: if rv.is_some() { opts.tiling_points } else { 0 },
        tiling_violations: tiling,
        failures,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every `(family, d)` with `min_d ≤ d ≤ max_d` the family admits,
/// then the listed congruence lattices.
pub fn run_suite(opts: &SuiteOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rows = Vec::new();
    for &family in &opts.families {
        for d in opts.min_d..=opts.max_d {
            let Ok(lattice) = root_lattice(family, d) else {
                continue;
            };
            let label = lattice.label().to_string();
            let lift = match family {
                Family::A | Family::D | Family::Astar | Family::DstarScaled => {
                    match lift_root_cell(family, d) {
                        Ok(l) => Some(l),
                        Err(e) => {
                            let mut row =
                                check_lattice(label, &lattice, None, None, None, opts, &mut rng);
                            row.failures.push(format!("lift construction: {e}"));
                            rows.push(row);
                            continue;
                        }
                    }
                }
                _ => None,
            };
            rows.push(check_lattice(
                label,
                &lattice,
                lift,
                expected_relevant_count(family, d),
                expected_lift_facets(family, d),
                opts,
                &mut rng,
            ));
        }
    }
    for &(d, a) in &opts.congruence {
        let label = format!("cong:d={d},a={a}");
        match congruence_lattice(d, a) {
            Ok(lattice) => {
                let lift = lift_congruence_cell(d, a).ok();
                let mut row =
                    check_lattice(label, &lattice, lift.clone(), None, None, opts, &mut rng);
                if lift.is_none() {
                    row.failures.push("lift construction failed".into());
                }
                rows.push(row);
            }
            Err(e) => rows.push(SuiteRow {
                label,
                rank: d,
                relevant: 0,
                expected_relevant: None,
                lift_facets: None,
                expected_lift_facets: None,
                route: None,
                lift: None,
                slack: None,
                tiling_points: 0,
                tiling_violations: 0,
                failures: vec![e.to_string()],
                seconds: 0.0,
            }),
        }
    }
    let passed = rows.iter().all(SuiteRow::passed);
    SuiteReport {
        seed: opts.seed,
        rows,
        passed,
    }
}
