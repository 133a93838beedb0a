//! `disperse`: generate arrival/departure instances, run placement
//! algorithms over them, check the proven guarantees, and turn traces into
//! flat data files.
//!
//! Exit codes: 0 all checks pass, 1 usage or input error, 2 a guarantee
//! check failed, 3 internal consistency failure (a verification suite found
//! a mismatch, or the library detected an impossible state).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use disperse_core::adversary::{adaptive_cd_adversary, gen_sequential, GeneratorSpec};
use disperse_core::algo1d::epsilon_to_level;
use disperse_core::algo2d::{build_square_config, case_of, predicted_dmin_square, SquareCase, SquareState};
use disperse_core::bounds::DEFAULT_ORACLE_BUDGET;
use disperse_core::events::EventKind;
use disperse_core::report::{
    evaluate_run, placement_svg, ratio_table_csv, run, slice_csv, verify_suite, AlgorithmSpec,
    Objective, RunOptions, VERIFY_SUITES,
};
use disperse_core::sim::simulate;
use disperse_core::{tol, BoundaryFlag, Error, EventSequence, PlacementTrace, Polytope, Result};

const EXIT_GUARANTEE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "disperse",
    version,
    about = "Online dispersion simulator: keep arriving and departing points \
             far from each other and from the container boundary"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write an instance file from a seeded generator family.
    Gen(GenArgs),
    /// Run a placement algorithm over an instance and report objectives,
    /// ratios, and the guarantee check.
    Run(RunArgs),
    /// Run one of the library's verification suites.
    Verify(VerifyArgs),
    /// Turn placement traces into CSV tables or an SVG snapshot.
    Report(ReportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    /// Staircase: point i arrives at time i, everything departs together.
    Sequential,
    /// r-1 early arrivals, r staggered arrivals, one shared departure.
    #[value(alias = "three_stage")]
    ThreeStage,
    /// Uniform arrival and departure times over the horizon.
    Random,
    /// Uniform arrivals, one shared departure at the horizon.
    #[value(alias = "insert_only_random")]
    InsertOnlyRandom,
    /// Departure times chosen after observing the placements; only valid
    /// under `run --adversary adaptive-cd`.
    #[value(alias = "adaptive_cd")]
    AdaptiveCd,
}

#[derive(Args)]
struct GenArgs {
    /// Generator family.
    #[arg(long, value_enum)]
    family: Family,
    /// Point count (sequential, random, insert-only-random).
    #[arg(long)]
    n: Option<usize>,
    /// Wave size for three-stage (the instance has 2r - 1 points).
    #[arg(long)]
    r: Option<usize>,
    /// Seed for the random families.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Time horizon for the random families.
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoName {
    /// Table-driven segment placement at level --l (or --epsilon, converted).
    Line,
    /// Exact harmonic segment placement (unbounded table).
    LineExact,
    /// Round/case square placement with band ratio --c.
    Square,
    /// Grid-search greedy for dimension >= 2 (--epsilon, optional --gamma).
    Greedy,
    /// Largest-gap splitting on the segment.
    GreedySegment,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Builtin {
    Segment,
    Square,
    Cube3,
}

impl Builtin {
    fn build(self) -> Polytope {
        match self {
            Builtin::Segment => Polytope::unit_segment(),
            Builtin::Square => Polytope::unit_square(),
            Builtin::Cube3 => Polytope::unit_cube(3),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    /// All-time worst case: the minimum distance ever maintained.
    Atwc,
    /// Cumulative distance: the time integral of the minimum distance.
    Cd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AdversaryName {
    /// Keep whichever pair the algorithm placed closest until time --t.
    #[value(alias = "adaptive_cd")]
    AdaptiveCd,
}

#[derive(Args)]
struct RunArgs {
    /// Instance file produced by `gen` (one `arrival departure` pair per line).
    #[arg(long, conflicts_with = "adversary")]
    instance: Option<PathBuf>,
    /// Online placement algorithm.
    #[arg(long, value_enum)]
    algo: Option<AlgoName>,
    /// Level for `line`; the position table holds 2^(l+1) - 1 entries.
    #[arg(long)]
    l: Option<u32>,
    /// For `line`: smallest level whose ceiling is within epsilon of the
    /// limit. For `greedy`: the guarantee slack in (0, 1).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Band ratio for `square`.
    #[arg(long, default_value_t = 1.271)]
    c: f64,
    /// Covering-rate override for `greedy`; defaults to the container's.
    #[arg(long)]
    gamma: Option<f64>,
    /// Score pairwise distances only, ignoring the container boundary.
    #[arg(long)]
    no_boundary: bool,
    /// Built-in container; defaults to the algorithm's natural one.
    #[arg(long, value_enum, conflicts_with = "polytope")]
    builtin: Option<Builtin>,
    /// Container described as halfspace JSON.
    #[arg(long)]
    polytope: Option<PathBuf>,
    /// Objective the run is scored on.
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Atwc)]
    objective: ObjectiveArg,
    /// Route the integral objective through the offline group reduction,
    /// driving the --algo-atwc algorithm as a black box.
    #[arg(long)]
    offline: bool,
    /// Black-box anytime algorithm for --offline.
    #[arg(long = "algo-atwc", value_enum)]
    algo_atwc: Option<AlgoName>,
    /// Generate the instance adaptively against the running algorithm
    /// instead of reading --instance.
    #[arg(long, value_enum)]
    adversary: Option<AdversaryName>,
    /// Point count for --adversary.
    #[arg(long)]
    n: Option<usize>,
    /// Retention time of the kept points for --adversary.
    #[arg(long, default_value_t = 1000.0)]
    t: f64,
    /// Report file (schema-versioned JSON); stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Also write the placement trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite to run.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(VERIFY_SUITES))]
    suite: String,
    /// Evaluation budget for oracle-backed checks; overrides the
    /// DISPERSE_ORACLE_BUDGET environment variable.
    #[arg(long)]
    oracle_budget: Option<u64>,
    /// Square suite only: emit the first N per-position rows as CSV
    /// (n, dmin, predicted, case, round) instead of the JSON summary.
    #[arg(long)]
    rows: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Trace files (JSON lines) from `run --trace`; one file yields the
    /// per-slice table, several yield the merged ratio table.
    #[arg(long = "trace", required = true, num_args = 1..)]
    traces: Vec<PathBuf>,
    /// Container the traces were produced in.
    #[arg(long, value_enum, conflicts_with = "polytope")]
    builtin: Option<Builtin>,
    /// Container described as halfspace JSON.
    #[arg(long)]
    polytope: Option<PathBuf>,
    /// Score pairwise distances only, ignoring the container boundary.
    #[arg(long)]
    no_boundary: bool,
    /// Render an SVG scatter of the points present at this time (single
    /// trace only) instead of CSV.
    #[arg(long)]
    svg_at: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Clap's own exit convention clashes with ours (it uses 2 for
            // usage errors, which here means a guarantee violation).
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Gen(a) => gen_cmd(a),
        Cmd::Run(a) => run_cmd(a),
        Cmd::Verify(a) => verify_cmd(a),
        Cmd::Report(a) => report_cmd(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Internal(_) => EXIT_INTERNAL,
                _ => 1,
            })
        }
    }
}

fn invalid(msg: &str) -> Error {
    Error::InvalidArgument(msg.into())
}

fn need<T>(v: Option<T>, flag: &str, family: &str) -> Result<T> {
    v.ok_or_else(|| invalid(&format!("the {family} family needs {flag}")))
}

/// Write `text` to the file or stdout, ending with exactly one newline.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    let mut owned = text.to_string();
    if !owned.ends_with('\n') {
        owned.push('\n');
    }
    match path {
        Some(p) => fs::write(p, owned)?,
        None => print!("{owned}"),
    }
    Ok(())
}

fn container(builtin: Option<Builtin>, file: Option<&Path>, default: Builtin) -> Result<Polytope> {
    match file {
        Some(p) => Polytope::from_json(&fs::read_to_string(p)?),
        None => Ok(builtin.unwrap_or(default).build()),
    }
}

fn gen_cmd(a: GenArgs) -> Result<u8> {
    let spec = match a.family {
        Family::Sequential => GeneratorSpec::Sequential { n: need(a.n, "--n", "sequential")? },
        Family::ThreeStage => GeneratorSpec::ThreeStage { r: need(a.r, "--r", "three-stage")? },
        Family::Random => GeneratorSpec::Random {
            n: need(a.n, "--n", "random")?,
            seed: a.seed,
            horizon: a.horizon,
        },
        Family::InsertOnlyRandom => GeneratorSpec::InsertOnlyRandom {
            n: need(a.n, "--n", "insert-only-random")?,
            seed: a.seed,
            horizon: a.horizon,
        },
        Family::AdaptiveCd => {
            return Err(invalid(
                "the adaptive family reacts to an algorithm's placements; \
                 drive it with `run --adversary adaptive-cd` instead",
            ))
        }
    };
    emit(a.out.as_deref(), &spec.generate()?.to_instance_text())?;
    Ok(0)
}

fn build_spec(name: AlgoName, a: &RunArgs) -> Result<AlgorithmSpec> {
    Ok(match name {
        AlgoName::Line => {
            let level = match (a.l, a.epsilon) {
                (Some(l), None) => l,
                (None, Some(eps)) => epsilon_to_level(eps)?,
                (None, None) => return Err(invalid("line needs --l or --epsilon")),
                (Some(_), Some(_)) => {
                    return Err(invalid("pass either --l or --epsilon, not both"))
                }
            };
            AlgorithmSpec::Line { level }
        }
        AlgoName::LineExact => AlgorithmSpec::LineExact,
        AlgoName::Square => AlgorithmSpec::Square { c: a.c },
        AlgoName::Greedy => AlgorithmSpec::Greedy {
            epsilon: a.epsilon.ok_or_else(|| invalid("greedy needs --epsilon"))?,
            gamma: a.gamma,
        },
        AlgoName::GreedySegment => AlgorithmSpec::SegmentGreedy,
    })
}

fn default_builtin(name: AlgoName) -> Builtin {
    match name {
        AlgoName::Line | AlgoName::LineExact | AlgoName::GreedySegment => Builtin::Segment,
        AlgoName::Square | AlgoName::Greedy => Builtin::Square,
    }
}

fn run_cmd(a: RunArgs) -> Result<u8> {
    let flag = if a.no_boundary {
        BoundaryFlag::PAIRWISE_ONLY
    } else {
        BoundaryFlag::WITH_BOUNDARY
    };
    let objective = match a.objective {
        ObjectiveArg::Atwc => Objective::Atwc,
        ObjectiveArg::Cd => Objective::Cd,
    };
    let selector = if a.offline {
        if a.algo.is_some() {
            return Err(invalid("offline runs name the black box with --algo-atwc, not --algo"));
        }
        a.algo_atwc
            .ok_or_else(|| invalid("--offline needs --algo-atwc"))?
    } else {
        if a.algo_atwc.is_some() {
            return Err(invalid("--algo-atwc applies to --offline runs only"));
        }
        a.algo.ok_or_else(|| invalid("--algo is required"))?
    };
    let spec = build_spec(selector, &a)?;
    let poly = container(a.builtin, a.polytope.as_deref(), default_builtin(selector))?;
    let opts = RunOptions { objective, flag, offline: a.offline };

    let (report, trace) = if a.adversary.is_some() {
        if a.offline {
            return Err(invalid(
                "the adaptive adversary feeds the algorithm online; it cannot \
                 drive the offline reduction",
            ));
        }
        if objective != Objective::Cd {
            return Err(invalid(
                "the adaptive adversary targets the integral objective; pass --objective cd",
            ));
        }
        let n = a.n.ok_or_else(|| invalid("--adversary needs --n"))?;
        spec.check_compatibility(&poly, flag)?;
        let mut algo = spec.build(&poly, flag)?;
        let (seq, trace) = adaptive_cd_adversary(algo.as_mut(), n, a.t, &poly, flag)?;
        let report = evaluate_run(&seq, &spec, &poly, &opts, &trace)?;
        (report, trace)
    } else {
        let path = a
            .instance
            .as_deref()
            .ok_or_else(|| invalid("--instance is required (or --adversary)"))?;
        let seq = EventSequence::from_instance_text(&fs::read_to_string(path)?)?;
        run(&seq, &spec, &poly, &opts)?
    };

    if let Some(p) = &a.trace {
        fs::write(p, trace.to_jsonl())?;
    }
    emit(a.out.as_deref(), &report.to_json())?;
    if report.passed {
        return Ok(0);
    }
    // The report itself is still written; the exit code and diagnostic flag
    // the violation for scripts.
    if let Some(g) = &report.guarantee {
        eprintln!(
            "guarantee violation: {}: measured {} exceeds ceiling {}",
            g.description, g.measured, g.ceiling
        );
        if g.conservative {
            eprintln!(
                "note: the reference is an upper bound, not an exact optimum, \
                 so the measurement bounds the true ratio from above and the \
                 miss does not prove a real violation"
            );
        }
    }
    Ok(EXIT_GUARANTEE)
}

fn resolve_budget(flag: Option<u64>) -> Result<u64> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var("DISPERSE_ORACLE_BUDGET") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| invalid(&format!("DISPERSE_ORACLE_BUDGET must be an integer, got {s:?}"))),
        Err(_) => Ok(DEFAULT_ORACLE_BUDGET),
    }
}

/// Per-position identity rows for the square algorithm at the default band
/// ratio: simulated minimum distance, the closed form it must equal, and the
/// regime (case within round) the position falls into.
fn square_rows_csv(rows: usize) -> Result<(String, bool)> {
    let cfg = build_square_config(1.271)?;
    let square = Polytope::unit_square();
    let seq = gen_sequential(rows)?;
    let mut algo = SquareState::new(cfg.clone());
    let trace = simulate(&seq, &mut algo, &square, BoundaryFlag::WITH_BOUNDARY)?;
    let mut csv = String::from("n,dmin,predicted,case,round\n");
    let mut ok = true;
    let mut n = 0u64;
    for r in &trace.records {
        if r.kind != EventKind::Arrive {
            continue;
        }
        n += 1;
        let d = r.dmin.ok_or_else(|| {
            Error::Internal("arrival without a minimum distance in a boundary-scored run".into())
        })?;
        let want = predicted_dmin_square(n, &cfg)?;
        ok &= tol::close_rel(d, want, tol::CLOSED_FORM_REL);
        let (round, case) = case_of(n)?;
        let case = match case {
            SquareCase::Initial(g) => g,
            SquareCase::Round(j) => j,
        };
        csv.push_str(&format!("{n},{d},{want},{case},{round}\n"));
    }
    Ok((csv, ok))
}

fn verify_cmd(a: VerifyArgs) -> Result<u8> {
    let budget = resolve_budget(a.oracle_budget)?;
    if let Some(rows) = a.rows {
        if a.suite != "square" {
            return Err(invalid("--rows applies to the square suite only"));
        }
        let (csv, ok) = square_rows_csv(rows)?;
        emit(a.out.as_deref(), &csv)?;
        return Ok(if ok { 0 } else { EXIT_INTERNAL });
    }
    let summary = verify_suite(&a.suite, budget)?;
    emit(a.out.as_deref(), &summary.to_json())?;
    Ok(if summary.passed { 0 } else { EXIT_INTERNAL })
}

fn report_cmd(a: ReportArgs) -> Result<u8> {
    let flag = if a.no_boundary {
        BoundaryFlag::PAIRWISE_ONLY
    } else {
        BoundaryFlag::WITH_BOUNDARY
    };
    let poly = container(a.builtin, a.polytope.as_deref(), Builtin::Segment)?;
    let mut traces = Vec::with_capacity(a.traces.len());
    for p in &a.traces {
        let name = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| p.display().to_string());
        traces.push((name, PlacementTrace::from_jsonl(&fs::read_to_string(p)?)?));
    }
    let text = if let Some(at) = a.svg_at {
        if traces.len() != 1 {
            return Err(invalid("--svg-at renders a single trace"));
        }
        placement_svg(&traces[0].1, &poly, at)?
    } else if traces.len() == 1 {
        slice_csv(&traces[0].1, &poly, flag)?
    } else {
        ratio_table_csv(&traces, &poly, flag)?
    };
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}
