use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use vxc_core::enumeration::closest_vectors;
use vxc_core::exact::{parse_qvec, QVec, Rational};
use vxc_core::gadgets::{
    build_gadget, correlation_instance, raw_gadget, stable_set_instance, verify_gadget, Graph,
};
use vxc_core::lattice::{parse_lattice_name, root_lattice, Family, Lattice};
use vxc_core::lifts::{
    astar_zonotope_generators, embedded_voronoi_cell, lift_congruence_cell, lift_face, lift_orbit,
    lift_root_cell, lift_union, lift_zonotope, verify_lift, Lift,
};
use vxc_core::polytope::{dualize, slack_matrix, slack_rank_bounds, HDesc, Polytope};
use vxc_core::suite::{run_suite, SuiteOptions};
use vxc_core::voronoi::{dual_voronoi_cell, polar_face, relevant_vectors, voronoi_cell};

/// Malformed input or arguments; exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(
    name = "vxc",
    version,
    about = "Exact lattice Voronoi cells, closest vectors and verified lifts"
)]
struct Cli {
    /// Worker threads for internal parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for randomized property checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the JSON result here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and combine lattices.
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Closest lattice vectors to a point given in coefficient coordinates.
    Cvp {
        lattice: String,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Facet vectors, Voronoi cells and polar faces.
    #[command(subcommand)]
    Voronoi(VoronoiCmd),
    /// Polytope conversions and slack matrices.
    #[command(subcommand)]
    Polytope(PolytopeCmd),
    /// Construct, combine and verify lifts.
    #[command(subcommand)]
    Lift(LiftCmd),
    /// Lattices with a polar-cell face projecting onto a 0/1 polytope.
    #[command(subcommand)]
    Gadget(GadgetCmd),
    /// Batch verification.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// Lattice from a name such as A3, Dstar4, E8, cong:d=4,a=2.
    Build {
        name: String,
    },
    Dual {
        lattice: String,
    },
    Product {
        first: String,
        second: String,
    },
}

#[derive(Subcommand)]
enum VoronoiCmd {
    RelevantVectors {
        lattice: String,
    },
    Cell {
        lattice: String,
        /// Polar cell instead of the cell.
        #[arg(long)]
        dual: bool,
    },
    PolarFace {
        lattice: String,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
}

#[derive(Subcommand)]
enum PolytopeCmd {
    Dualize {
        polytope: PathBuf,
    },
    Vertices {
        polytope: PathBuf,
    },
    Facets {
        polytope: PathBuf,
    },
    Slack {
        polytope: PathBuf,
        /// Keep the stored right-hand sides instead of scaling them to 1.
        #[arg(long)]
        raw_rhs: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LiftKind {
    RootCell,
    Congruence,
    Zonotope,
    Orbit,
}

#[derive(Args)]
struct BuildArgs {
    kind: LiftKind,
    /// Family for root-cell and zonotope lifts (A, D, Astar, Dstar).
    #[arg(long)]
    family: Option<Family>,
    #[arg(short, long)]
    d: Option<usize>,
    /// Modulus of the congruence lattice.
    #[arg(long)]
    a: Option<u64>,
    /// Vector whose permutations span the orbit polytope.
    #[arg(long, allow_hyphen_values = true)]
    vector: Option<String>,
}

#[derive(Subcommand)]
enum LiftCmd {
    Build(BuildArgs),
    /// Prove π(Q) equals the stored target; exit 1 with witnesses otherwise.
    Verify {
        lift: PathBuf,
    },
    Union {
        #[arg(required = true)]
        lifts: Vec<PathBuf>,
    },
    Face {
        lift: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        normal: String,
        #[arg(long, allow_hyphen_values = true)]
        rhs: String,
    },
}

#[derive(Subcommand)]
enum GadgetCmd {
    /// Graph file: lines `u v` (0-based) or JSON {"n": .., "edges": [[u, v], ..]}.
    StableSet {
        graph: PathBuf,
        #[arg(long)]
        verify: bool,
        /// Add 1 to coordinate i of h before building the lattice (negative control).
        #[arg(long)]
        perturb_h: Option<usize>,
    },
    Correlation {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        perturb_h: Option<usize>,
    },
    /// JSON {"h": [..], "l_basis": [[..], ..], "alpha_sq": ..}.
    Raw {
        input: PathBuf,
        #[arg(long)]
        verify: bool,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    Suite {
        #[arg(long, value_delimiter = ',', default_value = "A,D,Astar,Dstar")]
        families: Vec<Family>,
        #[arg(long, default_value_t = 2)]
        min_d: usize,
        #[arg(long, default_value_t = 4)]
        max_d: usize,
        /// Congruence lattices as d:a pairs, e.g. 3:2,4:3.
        #[arg(long, value_delimiter = ',')]
        congruence: Vec<String>,
        #[arg(long, default_value_t = 100)]
        tiling_points: usize,
        /// Skip the slack-matrix rank and rectangle-cover brackets.
        #[arg(long)]
        no_slack: bool,
    },
}

#[derive(Deserialize)]
struct RawGadgetInput {
    h: QVec,
    #[serde(default)]
    l_basis: Vec<QVec>,
    alpha_sq: u64,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| {
        usage(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

/// A lattice name, or a path to a lattice JSON file.
fn load_lattice(arg: &str) -> Result<Lattice> {
    let path = Path::new(arg);
    if path.is_file() {
        let l: Lattice = read_json(path)?;
        l.validate().map_err(|e| usage(format!("{arg}: {e}")))?;
        return Ok(l);
    }
    parse_lattice_name(arg).map_err(|e| usage(format!("{arg}: {e}")))
}

fn load_polytope(path: &Path) -> Result<Polytope> {
    let p: Polytope = read_json(path)?;
    let bad = |e: vxc_core::polytope::PolytopeError| usage(format!("{}: {e}", path.display()));
    match (p.h(), p.vertices()) {
        (Some(h), Some(v)) => Ok(Polytope::with_both(h.clone(), v.to_vec())),
        (Some(h), None) => Ok(Polytope::from_h(h.clone())),
        (None, Some(v)) => Polytope::from_points(p.dim, v.to_vec()).map_err(bad),
        (None, None) => Err(usage(format!(
            "{}: polytope needs `h` or `vertices`",
            path.display()
        ))),
    }
}

fn point_arg(s: &str, dim: usize) -> Result<QVec> {
    let p = parse_qvec(s).map_err(|e| usage(format!("point {s:?}: {e}")))?;
    if p.len() != dim {
        return Err(usage(format!(
            "point has {} coordinates, lattice rank is {dim}",
            p.len()
        )));
    }
    Ok(p)
}

fn write_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Returns whether everything that was checked passed.
fn run(cli: Cli) -> Result<bool> {
    let out = &cli.output;
    match cli.command {
        Command::Lattice(cmd) => {
            let l = match cmd {
                LatticeCmd::Build { name } => {
                    parse_lattice_name(&name).map_err(|e| usage(format!("{name}: {e}")))?
                }
                LatticeCmd::Dual { lattice } => load_lattice(&lattice)?.dual(),
                LatticeCmd::Product { first, second } => {
                    load_lattice(&first)?.product(&load_lattice(&second)?)
                }
            };
            write_json(out, &l)?;
        }
        Command::Cvp { lattice, point } => {
            let l = load_lattice(&lattice)?;
            let x = point_arg(&point, l.rank())?;
            let (dist2, closest) = closest_vectors(&l, &x);
            let embedded: Option<Vec<QVec>> =
                closest.iter().map(|z| l.embed(&z.to_rational())).collect();
            write_json(
                out,
                &json!({ "dist2": dist2, "closest": closest, "embedded": embedded }),
            )?;
        }
        Command::Voronoi(cmd) => match cmd {
            VoronoiCmd::RelevantVectors { lattice } => {
                let l = load_lattice(&lattice)?;
                let rv = relevant_vectors(&l)?;
                write_json(
                    out,
                    &json!({ "lattice": l.label(), "count": rv.len(), "vectors": rv.vectors }),
                )?;
            }
            VoronoiCmd::Cell { lattice, dual } => {
                let l = load_lattice(&lattice)?;
                let cell = if dual {
                    dual_voronoi_cell(&l)?
                } else {
                    voronoi_cell(&l)?
                };
                write_json(out, &cell.complete()?)?;
            }
            VoronoiCmd::PolarFace { lattice, point } => {
                let l = load_lattice(&lattice)?;
                let p = point_arg(&point, l.rank())?;
                let f = polar_face(&l, &p)?;
                write_json(
                    out,
                    &json!({
                        "dist2": f.dist2,
                        "closest": f.closest,
                        "generators": f.generators,
                        "vertices": f.face.as_ref().and_then(|p| p.vertices()),
                    }),
                )?;
            }
        },
        Command::Polytope(cmd) => match cmd {
            PolytopeCmd::Dualize { polytope } => {
                write_json(out, &dualize(&load_polytope(&polytope)?)?.complete()?)?
            }
            PolytopeCmd::Vertices { polytope } => {
                let mut p = load_polytope(&polytope)?;
                write_json(out, &p.ensure_vertices()?)?;
            }
            PolytopeCmd::Facets { polytope } => {
                let p = load_polytope(&polytope)?.complete()?;
                let h: &HDesc = p.h().expect("complete polytope has an H-description");
                write_json(out, h)?;
            }
            PolytopeCmd::Slack { polytope, raw_rhs } => {
                let p = load_polytope(&polytope)?.complete()?;
                let s = slack_matrix(&p, !raw_rhs)?;
                let b = slack_rank_bounds(&s.entries);
                write_json(
                    out,
                    &json!({
                        "rows": s.entries.to_rows(),
                        "row_labels": s.row_labels,
                        "col_labels": s.col_labels,
                        "rank": b.rank,
                        "rectangle_cover": b.rectangle_cover,
                        "cover_exact": b.cover_exact,
                    }),
                )?;
            }
        },
        Command::Lift(cmd) => return run_lift(cmd, out),
        Command::Gadget(cmd) => return run_gadget(cmd, out),
        Command::Verify(VerifyCmd::Suite {
            families,
            min_d,
            max_d,
            congruence,
            tiling_points,
            no_slack,
        }) => {
            let congruence = congruence
                .iter()
                .map(|s| {
                    let (d, a) = s
                        .split_once(':')
                        .ok_or_else(|| usage(format!("congruence pair {s:?}: expected d:a")))?;
                    let d = d
                        .trim()
                        .parse()
                        .map_err(|_| usage(format!("congruence pair {s:?}")))?;
                    let a = a
                        .trim()
                        .parse()
                        .map_err(|_| usage(format!("congruence pair {s:?}")))?;
                    Ok((d, a))
                })
                .collect::<Result<Vec<(usize, u64)>>>()?;
            let opts = SuiteOptions {
                families,
                min_d,
                max_d,
                congruence,
                seed: cli.seed,
                tiling_points,
                slack_bounds: !no_slack,
            };
            let report = run_suite(&opts);
            print!("{}", report.text(true));
            if let Some(p) = out {
                write_json(&Some(p.clone()), &report)?;
            }
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn run_lift(cmd: LiftCmd, out: &Option<PathBuf>) -> Result<bool> {
    match cmd {
        LiftCmd::Build(b) => {
            let need_d = || b.d.ok_or_else(|| usage("missing --d"));
            let lift = match b.kind {
                LiftKind::RootCell => {
                    let f = b.family.ok_or_else(|| usage("missing --family"))?;
                    lift_root_cell(f, need_d()?).map_err(|e| usage(e.to_string()))?
                }
                LiftKind::Congruence => {
                    let a = b.a.ok_or_else(|| usage("missing --a"))?;
                    lift_congruence_cell(need_d()?, a).map_err(|e| usage(e.to_string()))?
                }
                LiftKind::Zonotope => {
                    let d = need_d()?;
                    if !matches!(b.family, None | Some(Family::Astar)) {
                        return Err(usage("zonotope lifts are built for the Astar family"));
                    }
                    let l = root_lattice(Family::Astar, d).map_err(|e| usage(e.to_string()))?;
                    lift_zonotope(&astar_zonotope_generators(d))
                        .with_target(embedded_voronoi_cell(&l)?)
                        .with_name(format!("Astar{d} zonotope"))
                }
                LiftKind::Orbit => {
                    let v = b
                        .vector
                        .as_deref()
                        .ok_or_else(|| usage("missing --vector"))?;
                    lift_orbit(&parse_qvec(v).map_err(|e| usage(format!("vector: {e}")))?)
                }
            };
            write_json(out, &lift)?;
            Ok(true)
        }
        LiftCmd::Verify { lift } => {
            let l: Lift = read_json(&lift)?;
            let r = verify_lift(&l)?;
            write_json(out, &r)?;
            if r.exact {
                eprintln!("{}: verified = exact ({} facets)", r.name, r.facet_count);
            } else {
                eprintln!(
                    "{}: verification FAILED ({} escaped, {} missed)",
                    r.name,
                    r.escaped.len(),
                    r.missed_vertices.len()
                );
                for e in &r.escaped {
                    eprintln!(
                        "  escaped: constraint {} at {:?} by {}",
                        e.constraint,
                        fmt_vec(&e.point),
                        e.excess
                    );
                }
                for v in &r.missed_vertices {
                    eprintln!("  missed vertex: {}", fmt_vec(v));
                }
            }
            Ok(r.exact)
        }
        LiftCmd::Union { lifts } => {
            let ls: Vec<Lift> = lifts.iter().map(|p| read_json(p)).collect::<Result<_>>()?;
            write_json(out, &lift_union(&ls).map_err(|e| usage(e.to_string()))?)?;
            Ok(true)
        }
        LiftCmd::Face { lift, normal, rhs } => {
            let l: Lift = read_json(&lift)?;
            let c = parse_qvec(&normal).map_err(|e| usage(format!("normal: {e}")))?;
            let delta: Rational = rhs
                .trim()
                .parse()
                .map_err(|_| usage(format!("rhs {rhs:?}")))?;
            write_json(
                out,
                &lift_face(&l, &c, &delta).map_err(|e| usage(e.to_string()))?,
            )?;
            Ok(true)
        }
    }
}

fn fmt_vec(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

fn run_gadget(cmd: GadgetCmd, out: &Option<PathBuf>) -> Result<bool> {
    let (mut instance, verify, perturb) = match cmd {
        GadgetCmd::StableSet {
            graph,
            verify,
            perturb_h,
        } => {
            let g = Graph::parse(&read_text(&graph)?)
                .map_err(|e| usage(format!("{}: {e}", graph.display())))?;
            (build_gadget(&stable_set_instance(&g)?)?, verify, perturb_h)
        }
        GadgetCmd::Correlation {
            n,
            verify,
            perturb_h,
        } => {
            if n == 0 {
                return Err(usage("--n must be positive"));
            }
            (build_gadget(&correlation_instance(n)?)?, verify, perturb_h)
        }
        GadgetCmd::Raw { input, verify } => {
            let r: RawGadgetInput = read_json(&input)?;
            let g = raw_gadget(&r.l_basis, &r.h, r.alpha_sq)
                .map_err(|e| usage(format!("{}: {e}", input.display())))?;
            (g, verify, None)
        }
    };
    if let Some(i) = perturb {
        let mut h = instance.h.clone();
        if i >= h.len() {
            return Err(usage(format!(
                "--perturb-h {i}: h has {} coordinates",
                h.len()
            )));
        }
        h[i] += &Rational::one();
        instance = instance.with_h(h)?;
    }
    if !verify {
        write_json(out, &instance)?;
        eprintln!(
            "|X| = {}, alphaSq = {}, rank = {}",
            instance.x.len(),
            instance.alpha_sq,
            instance.rank()
        );
        return Ok(true);
    }
    let r = verify_gadget(&instance)?;
    write_json(out, &r)?;
    eprintln!(
        "|X| = {}, alphaSq = {}, rank = {} (dim H = {}), |cl(p)| = {}, face vertices = {}: {}",
        r.solutions,
        r.alpha_sq,
        r.rank,
        r.dim_h,
        r.closest_count,
        r.face_vertices,
        if r.passed { "verified" } else { "FAILED" }
    );
    for c in r.checks.iter().filter(|c| !c.passed) {
        eprintln!("  {} failed: {}", c.name, c.detail);
        for w in &c.witnesses {
            eprintln!("    witness {}", fmt_vec(w));
        }
    }
    Ok(r.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .expect("thread pool set once");
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
