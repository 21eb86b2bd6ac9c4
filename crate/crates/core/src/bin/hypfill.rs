use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hypfill::bounds::{self, BoundsError, SurfaceSummary};
use hypfill::brooks_makover::{self, DEFAULT_DEGREE_THRESHOLD};
use hypfill::dual::{self, DualError, DualInput, OracleOutcome};
use hypfill::fill_graph::{self, EmbeddedGraph, GraphError, GraphJson, ShortenConfig};
use hypfill::fixtures;
use hypfill::hyp::{self, HypError};
use hypfill::surface::{SurfaceError, TriangulatedSurface};

#[derive(Parser)]
#[command(name = "hypfill", version, about = "Filling graphs and curves on hyperbolic surfaces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample random cusped surfaces and write per-sample statistics as CSV.
    BmSample(BmSampleArgs),
    /// Shorten the pruned skeleton of a closed surface to a balanced trivalent graph.
    Shorten(ShortenArgs),
    /// Dual curves of a graph, with the length comparison when it applies.
    Dual(DualArgs),
    /// Certify that dual curves are in minimal position.
    Certify(CertifyArgs),
    /// Length bounds for a genus and a list of short geodesic lengths.
    Bounds(BoundsArgs),
    /// Run the invariant suite.
    Selftest,
}

#[derive(Args)]
struct BmSampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the aggregate JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DEGREE_THRESHOLD)]
    threshold: usize,
}

#[derive(Args)]
struct ShortenArgs {
    /// Closed surface JSON.
    #[arg(long)]
    surface: PathBuf,
    /// Output graph JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-iteration CSV log.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    max_iterations: Option<usize>,
}

#[derive(Args)]
struct DualArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "source")]
struct CertifySource {
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Surface JSON whose triangulation supplies the curves.
    #[arg(long)]
    triangulation: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    source: CertifySource,
    /// Also search the universal cover to this depth.
    #[arg(long)]
    oracle_depth: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    g: u64,
    /// CSV file of closed geodesic lengths below 1.
    #[arg(long)]
    lengths: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failed run: exit status 1 for broken invariants, 2 for bad input.
struct Fail {
    code: u8,
    msg: String,
}

fn input(msg: impl ToString) -> Fail {
    Fail {
        code: 2,
        msg: msg.to_string(),
    }
}

fn invariant(msg: impl ToString) -> Fail {
    Fail {
        code: 1,
        msg: msg.to_string(),
    }
}

fn hyp_fail(e: HypError) -> Fail {
    match e {
        HypError::Convergence { .. } => invariant(e),
        _ => input(e),
    }
}

fn surface_fail(e: SurfaceError) -> Fail {
    match e {
        SurfaceError::Hyp(h) => hyp_fail(h),
        _ => input(e),
    }
}

fn graph_fail(e: GraphError) -> Fail {
    match e {
        GraphError::Invariant(_) | GraphError::NoProgress(_) | GraphError::Retry(_) => invariant(e),
        GraphError::Surface(s) => surface_fail(s),
        GraphError::Hyp(h) => hyp_fail(h),
        _ => input(e),
    }
}

fn dual_fail(e: DualError) -> Fail {
    match e {
        DualError::Invariant(_) => invariant(e),
        DualError::Graph(g) => graph_fail(g),
        DualError::Surface(s) => surface_fail(s),
        DualError::Hyp(h) => hyp_fail(h),
        _ => input(e),
    }
}

fn bounds_fail(e: BoundsError) -> Fail {
    input(e)
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_surface(path: &Path) -> Result<TriangulatedSurface, Fail> {
    TriangulatedSurface::from_json_str(&read(path)?).map_err(surface_fail)
}

fn load_graph(path: &Path) -> Result<EmbeddedGraph, Fail> {
    let j: GraphJson = serde_json::from_str(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
    EmbeddedGraph::from_json(&j).map_err(graph_fail)
}

fn emit_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<(), Fail> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| input(e)),
    }
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Fail> {
    let mut s = serde_json::to_string_pretty(value).map_err(invariant)?;
    s.push('\n');
    emit_bytes(path, s.as_bytes())
}

fn bm_sample(a: BmSampleArgs) -> Result<(), Fail> {
    let stats =
        brooks_makover::run_statistics(a.n, a.samples, a.seed, a.threshold).map_err(dual_fail)?;
    let mut csv = Vec::new();
    brooks_makover::write_csv(&stats.rows, &mut csv).map_err(invariant)?;
    emit_bytes(a.out.as_deref(), &csv)?;
    if let Some(p) = a.summary {
        emit_json(Some(&p), &stats.aggregates)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ShortenSummary {
    converged: bool,
    iterations: usize,
    length: f64,
    max_angle_deviation: f64,
    genus: usize,
}

fn shorten(a: ShortenArgs) -> Result<(), Fail> {
    let s = load_surface(&a.surface)?;
    let start = fill_graph::shortening_start(&s).map_err(graph_fail)?;
    let mut cfg = ShortenConfig::default();
    if let Some(m) = a.max_iterations {
        cfg.max_iterations = m;
    }
    let r = fill_graph::shorten_to_local_min(&start, &s, &cfg).map_err(graph_fail)?;
    emit_json(a.out.as_deref(), &r.graph.to_json())?;
    if let Some(p) = a.log {
        let mut buf = Vec::new();
        fill_graph::write_log_csv(&r.log, &mut buf).map_err(invariant)?;
        emit_bytes(Some(&p), &buf)?;
    }
    let summary = ShortenSummary {
        converged: r.converged,
        iterations: r.iterations,
        length: r.graph.total_length(),
        max_angle_deviation: r.max_angle_deviation,
        genus: r.graph.genus(),
    };
    eprintln!("{}", serde_json::to_string(&summary).map_err(invariant)?);
    if !r.converged {
        return Err(invariant(format!(
            "no convergence after {} iterations (max angle deviation {:e})",
            r.iterations, r.max_angle_deviation
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct DualReport {
    curves: dual::CurveSystemJson,
    sandwich: Option<dual::Sandwich>,
    /// Why the length comparison was skipped.
    #[serde(skip_serializing_if = "Option::is_none")]
    sandwich_skipped: Option<String>,
}

fn dual_cmd(a: DualArgs) -> Result<(), Fail> {
    let g = load_graph(&a.graph)?;
    let d = dual::dual_of_graph(&g).map_err(dual_fail)?;
    let c = dual::decompose_curves(&d);
    let (sandwich, skipped) = match dual::length_sandwich(&g, &d, &c) {
        Ok(s) => (Some(s), None),
        Err(DualError::Precondition(m)) => (None, Some(m)),
        Err(e) => return Err(dual_fail(e)),
    };
    emit_json(
        a.out.as_deref(),
        &DualReport {
            curves: c.to_json(d.cells()),
            sandwich,
            sandwich_skipped: skipped,
        },
    )
}

fn certify(a: CertifyArgs) -> Result<(), Fail> {
    let cert = if let Some(p) = a.source.graph {
        let g = load_graph(&p)?;
        let d = dual::dual_of_graph(&g).map_err(dual_fail)?;
        let c = dual::decompose_curves(&d);
        dual::certify_minimal_position(DualInput::Graph(&g), &c, a.oracle_depth).map_err(dual_fail)?
    } else {
        let p = a.source.triangulation.expect("clap enforces one source");
        let s = load_surface(&p)?;
        let d = dual::dual_of_triangulation(&s).map_err(dual_fail)?;
        let c = dual::decompose_curves(&d);
        dual::certify_minimal_position(DualInput::Triangulation(s.combinatorics()), &c, a.oracle_depth)
            .map_err(dual_fail)?
    };
    emit_json(a.out.as_deref(), &cert)
}

fn bounds_cmd(a: BoundsArgs) -> Result<(), Fail> {
    let lengths = match &a.lengths {
        Some(p) => bounds::parse_lengths(&read(p)?).map_err(bounds_fail)?,
        None => Vec::new(),
    };
    let s = SurfaceSummary::new(a.g, lengths).map_err(bounds_fail)?;
    let report = bounds::genus_length_bounds(&s).map_err(bounds_fail)?;
    if !(report.lower < report.upper) {
        return Err(invariant("lower bound is not below upper bound"));
    }
    emit_json(a.out.as_deref(), &report)
}

type Check = (&'static str, fn() -> Result<(), String>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn check_collar() -> Result<(), String> {
    let a = hyp::collar_half_width(1.0).map_err(|e| e.to_string())?;
    let b = hyp::collar_half_width(0.5).map_err(|e| e.to_string())?;
    ensure((a - 1.06).abs() <= 0.01 && (b - 1.73).abs() <= 0.01, || format!("widths {a}, {b}"))?;
    for k in 1..=1000 {
        let (lo, v, hi) = hyp::f_bounds_check(k as f64 * 0.01).map_err(|e| e.to_string())?;
        ensure(lo <= v && v <= hi, || format!("f sandwich fails at {}", k as f64 * 0.01))?;
    }
    Ok(())
}

fn check_fixtures() -> Result<(), String> {
    for (name, json) in fixtures::closed_fixtures() {
        let s = TriangulatedSurface::from_json_str(json).map_err(|e| e.to_string())?;
        let e = s.euler_data();
        ensure(e.vertices as i64 - e.edges as i64 + e.faces as i64 == 2 - 2 * e.genus as i64, || {
            format!("{name}: Euler characteristic")
        })?;
        for v in 0..e.vertices {
            let h = s.vertex_holonomy(v).distance_from_identity();
            ensure(h < 1e-8, || format!("{name}: holonomy {h} at vertex {v}"))?;
        }
    }
    Ok(())
}

fn check_shortening() -> Result<(), String> {
    let s = fixtures::load(fixtures::GENUS2_DEG8);
    let g = fill_graph::shortening_start(&s).map_err(|e| e.to_string())?;
    let r = fill_graph::shorten_to_local_min(&g, &s, &ShortenConfig::default()).map_err(|e| e.to_string())?;
    ensure(r.converged, || "genus 2 did not converge".into())?;
    let len = r.graph.total_length();
    ensure(len >= 2.0 * std::f64::consts::PI, || format!("length {len} below 2π"))?;
    ensure(r.log.windows(2).all(|w| w[1].length < w[0].length), || "length not monotone".into())?;
    let d = dual::dual_of_graph(&r.graph).map_err(|e| e.to_string())?;
    let c = dual::decompose_curves(&d);
    dual::length_sandwich(&r.graph, &d, &c).map_err(|e| e.to_string())?;
    Ok(())
}

fn check_disk_cases() -> Result<(), String> {
    let areas: Vec<_> = dual::gauss_bonnet_case_areas().map_err(|e| e.to_string())?.into_iter().map(|x| x.1).collect();
    let want = [(-2, 1), (-5, 3), (-4, 3), (-4, 3), (-1, 1), (-2, 3)];
    ensure(areas.iter().zip(want).all(|(a, (n, d))| *a == num_rational::Rational64::new(n, d)), || {
        format!("areas {areas:?}")
    })?;
    let bounds: Vec<_> = dual::euler_case_bounds().map_err(|e| e.to_string())?.into_iter().map(|x| x.1).collect();
    let want = [(0, 1), (1, 6), (1, 3), (1, 3), (1, 2), (2, 3)];
    ensure(bounds.iter().zip(want).all(|(a, (n, d))| *a == num_rational::Rational64::new(n, d)), || {
        format!("bounds {bounds:?}")
    })
}

fn check_oracle() -> Result<(), String> {
    let s = fixtures::load(fixtures::GENUS2_DEG8);
    let d = dual::dual_of_triangulation(&s).map_err(|e| e.to_string())?;
    let c = dual::decompose_curves(&d);
    let o = dual::oracle_search(d.cells(), &c, dual::ORACLE_DEPTH).map_err(|e| e.to_string())?;
    ensure(o == OracleOutcome::None, || format!("certified surface gave {o:?}"))?;
    let sum = fixtures::connected_sum(&fixtures::icosahedron(), 0, s.combinatorics(), 0).map_err(|e| e.to_string())?;
    let cells = dual::CellComplex::of_triangulation(&sum);
    let c = dual::CurveSystem {
        curves: dual::trace_strands(&cells)
            .into_iter()
            .map(|steps| dual::Curve { steps, length: 0.0 })
            .collect(),
        total_length: 0.0,
    };
    let o = dual::oracle_search(&cells, &c, dual::ORACLE_DEPTH).map_err(|e| e.to_string())?;
    ensure(matches!(o, OracleOutcome::Witness(_)), || format!("counterexample gave {o:?}"))
}

fn check_inscribed() -> Result<(), String> {
    for n in [1, 4, 16] {
        let p = brooks_makover::sample_pattern(n, 1).map_err(|e| e.to_string())?;
        let s = brooks_makover::build_cusped_surface(&p).map_err(|e| e.to_string())?;
        let c = brooks_makover::inscribed_filling_geodesics(&s).map_err(|e| e.to_string())?;
        brooks_makover::filling_length_bounds(&s, &c).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn check_bounds() -> Result<(), String> {
    ensure(bounds::seven_g_threshold(10_000) == Some(bounds::SEVEN_G_THRESHOLD), || {
        "threshold moved".into()
    })?;
    let r = bounds::exact_min(1_000_000).map_err(|e| e.to_string())? / 1e6;
    ensure((r - 7.0510).abs() < 1e-3, || format!("ratio {r}"))
}

fn selftest() -> Result<(), Fail> {
    let checks: [Check; 7] = [
        ("collar", check_collar),
        ("fixtures", check_fixtures),
        ("shortening", check_shortening),
        ("disk-cases", check_disk_cases),
        ("oracle", check_oracle),
        ("inscribed", check_inscribed),
        ("bounds", check_bounds),
    ];
    let mut failed = 0;
    for (name, f) in checks {
        match f() {
            Ok(()) => println!("ok   {name}"),
            Err(m) => {
                failed += 1;
                println!("FAIL {name}: {m}");
            }
        }
    }
    if failed > 0 {
        return Err(invariant(format!("{failed} checks failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.cmd {
        Cmd::BmSample(a) => bm_sample(a),
        Cmd::Shorten(a) => shorten(a),
        Cmd::Dual(a) => dual_cmd(a),
        Cmd::Certify(a) => certify(a),
        Cmd::Bounds(a) => bounds_cmd(a),
        Cmd::Selftest => selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
