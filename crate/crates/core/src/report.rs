//! Run evaluation, guarantee verification suites, and flat-file reporting.
//!
//! `run` drives one algorithm over one instance and produces a
//! [`RunReport`]: objective values, reference bounds, ratios, the
//! algorithm's proven ceiling, and an operational pass/fail check. The
//! `verify_suite` entry points re-derive each module's closed-form
//! identities and guarantees at desk scale. The CSV/SVG helpers turn traces
//! into flat plot data. All outputs are deterministic byte for byte.

use serde::Serialize;

use crate::algo1d::{
    build_harmonic_config, exact_apx, exact_dmin, guarantee_ceiling, predicted_dmin,
    ExactLineState, LineState,
};
use crate::algo2d::{
    build_square_config, case_of, predicted_dmin_square, square_guarantee_ceiling, SquareCase,
    SquareState,
};
use crate::algokd::{build_greedy_config, GreedyState, SegmentGreedyState};
use crate::bounds::{disp_kd_lower, disp_segment, brute_force_disp};
use crate::cd_reduction::{cd_upper_bound, dispersion_reference, run_acd, select_pair,
                          verify_selection};
use crate::events::{
    atwc_value, cd_value, max_simultaneous, slice_series, EventKind, EventSequence,
    PlacementTrace, SliceRow,
};
use crate::geometry::{BoundaryFlag, Point, Polytope};
use crate::sim::{simulate, OnlineAlgorithm};
use crate::{adversary, tol, Error, Result};

/// Version stamp carried by every JSON document this module emits.
pub const SCHEMA_VERSION: u32 = 1;

/// Algorithm selector with its parameters, as named on the command line.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name")]
pub enum AlgorithmSpec {
    /// Table-driven segment placement at a fixed level.
    #[serde(rename = "line")]
    Line { level: u32 },
    /// Exact harmonic segment placement (unbounded table).
    #[serde(rename = "line-exact")]
    LineExact,
    /// Round/case square placement with band ratio c.
    #[serde(rename = "square")]
    Square { c: f64 },
    /// Grid-search greedy for dimension >= 2; `gamma` falls back to the
    /// container's covering rate when absent.
    #[serde(rename = "greedy")]
    Greedy { epsilon: f64, gamma: Option<f64> },
    /// Largest-gap splitting on the segment (the greedy selector pointed at
    /// a one-dimensional container).
    #[serde(rename = "greedy-segment")]
    SegmentGreedy,
}

impl AlgorithmSpec {
    /// The proven worst-case ratio this algorithm is held to.
    pub fn competitive_ceiling(&self) -> Result<f64> {
        match *self {
            AlgorithmSpec::Line { level } => {
                Ok(guarantee_ceiling(&build_harmonic_config(level)?))
            }
            AlgorithmSpec::LineExact => Ok(2.0 * std::f64::consts::LN_2),
            AlgorithmSpec::Square { c } => {
                Ok(square_guarantee_ceiling(&build_square_config(c)?))
            }
            AlgorithmSpec::Greedy { epsilon, gamma } => {
                build_greedy_config(epsilon, gamma.unwrap_or(1.0), BoundaryFlag::WITH_BOUNDARY)?;
                Ok(2.0 / (1.0 - epsilon))
            }
            AlgorithmSpec::SegmentGreedy => Ok(2.0),
        }
    }

    /// Reject (algorithm, container, flag) combinations whose guarantees do
    /// not transfer.
    pub fn check_compatibility(&self, poly: &Polytope, flag: BoundaryFlag) -> Result<()> {
        let need_segment = |who: &str| {
            if poly.name == "segment" {
                Ok(())
            } else {
                Err(Error::Incompatible(format!(
                    "{who} places on the unit segment, not on \"{}\"",
                    poly.name
                )))
            }
        };
        match self {
            AlgorithmSpec::Line { .. } | AlgorithmSpec::LineExact => {
                need_segment("the line algorithm")?;
                if !flag.with_boundary {
                    return Err(Error::Incompatible(
                        "the segment table analysis includes the boundary term; \
                         rerun without --no-boundary"
                            .into(),
                    ));
                }
                Ok(())
            }
            AlgorithmSpec::Square { .. } => {
                if poly.name != "square" {
                    return Err(Error::Incompatible(format!(
                        "the square algorithm places on the unit square, not on \"{}\"",
                        poly.name
                    )));
                }
                if !flag.with_boundary {
                    return Err(Error::Incompatible(
                        "the square analysis includes the boundary term; \
                         rerun without --no-boundary"
                            .into(),
                    ));
                }
                Ok(())
            }
            AlgorithmSpec::Greedy { .. } => {
                if poly.dim < 2 {
                    return Err(Error::Incompatible(
                        "the grid greedy requires dimension >= 2; pick the \
                         greedy-segment algorithm for the segment"
                            .into(),
                    ));
                }
                Ok(())
            }
            AlgorithmSpec::SegmentGreedy => {
                need_segment("largest-gap placement")?;
                if !flag.with_boundary {
                    return Err(Error::Incompatible(
                        "largest-gap placement treats the segment ends as \
                         boundaries; rerun without --no-boundary"
                            .into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Instantiate a fresh handle for this selector on `poly`.
    pub fn build(&self, poly: &Polytope, flag: BoundaryFlag) -> Result<Box<dyn OnlineAlgorithm>> {
        self.check_compatibility(poly, flag)?;
        Ok(match *self {
            AlgorithmSpec::Line { level } => {
                Box::new(LineState::new(build_harmonic_config(level)?))
            }
            AlgorithmSpec::LineExact => Box::new(ExactLineState::new()),
            AlgorithmSpec::Square { c } => Box::new(SquareState::new(build_square_config(c)?)),
            AlgorithmSpec::Greedy { epsilon, gamma } => {
                let g = gamma.unwrap_or(poly.covering_rate);
                Box::new(GreedyState::new(
                    build_greedy_config(epsilon, g, flag)?,
                    poly.clone(),
                )?)
            }
            AlgorithmSpec::SegmentGreedy => Box::new(SegmentGreedyState::new()),
        })
    }
}

/// Which objective a run is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Atwc,
    Cd,
}

/// Run configuration beyond the algorithm itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub objective: Objective,
    pub flag: BoundaryFlag,
    /// Integral objective only: route the instance through the offline
    /// group reduction with the selected algorithm as the black box.
    pub offline: bool,
}

/// A reference value with its provenance: exact optimum or upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reference {
    pub value: f64,
    pub exact: bool,
}

/// A reported ratio; `is_upper_bound` marks that the reference (hence the
/// ratio) only bounds the true competitive ratio from above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratio {
    pub value: f64,
    pub is_upper_bound: bool,
}

/// The operational guarantee check of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuaranteeCheck {
    /// What was measured against what.
    pub description: String,
    /// Worst measured value.
    pub measured: f64,
    /// Allowed ceiling for the measurement.
    pub ceiling: f64,
    /// True when the measurement leans on an inexact reference, so a miss
    /// does not prove a real violation.
    pub conservative: bool,
    pub passed: bool,
}

/// Instance shape digest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstanceDigest {
    /// Points in the sequence.
    pub n: usize,
    /// Maximum simultaneously present points.
    pub m: usize,
    /// Last departure time.
    pub t_end: f64,
}

/// Full evaluation of one run, serializable as schema-1 JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub algorithm: AlgorithmSpec,
    pub objective: Objective,
    pub offline: bool,
    pub with_boundary: bool,
    pub instance: InstanceDigest,
    pub atwc_value: f64,
    pub cd_value: f64,
    /// Dispersion reference at the instance's peak occupancy; the anytime
    /// optimum equals it when exact.
    pub atwc_reference: Reference,
    /// Slice-sum reference for the integral objective.
    pub cd_reference: Reference,
    pub ratio_atwc: Ratio,
    pub ratio_cd: Ratio,
    /// The algorithm's proven worst-case ratio.
    pub competitive_ceiling: f64,
    pub guarantee: Option<GuaranteeCheck>,
    pub passed: bool,
    pub slices: Vec<SliceRow>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }
}

/// Walk a trace's timestamp batches; after every batch containing an
/// arrival, check the recorded minimum distance against a per-count floor.
/// Returns the worst floor/achieved margin seen (<= 1 means all clear).
fn worst_arrival_margin(
    trace: &PlacementTrace,
    floor: &dyn Fn(usize) -> Result<f64>,
) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut count = 0usize;
    let mut i = 0usize;
    let records = &trace.records;
    while i < records.len() {
        let t = records[i].t;
        let mut batch_arrived = false;
        let mut batch_dmin = None;
        while i < records.len() && records[i].t == t {
            match records[i].kind {
                EventKind::Arrive => {
                    count += 1;
                    batch_arrived = true;
                }
                EventKind::Depart => count -= 1,
            }
            if records[i].dmin.is_some() {
                batch_dmin = records[i].dmin;
            }
            i += 1;
        }
        if batch_arrived {
            if let Some(d) = batch_dmin {
                let f = floor(count)?;
                if f > 0.0 {
                    worst = worst.max(f / d);
                }
            }
        }
    }
    Ok(worst)
}

/// Drive one algorithm over one instance and evaluate the outcome.
///
/// The anytime objective simulates the algorithm online; the integral
/// objective does too unless `offline` routes it through the group
/// reduction with the algorithm as black box. The report's guarantee check
/// depends on the pairing: ratio-vs-ceiling for the closed-form segment and
/// square algorithms, the per-arrival covering floor for the greedy, twice
/// the black box's ceiling for offline integral runs, and none for online
/// integral runs (no fixed ceiling is claimed there).
pub fn run(
    seq: &EventSequence,
    spec: &AlgorithmSpec,
    poly: &Polytope,
    opts: &RunOptions,
) -> Result<(RunReport, PlacementTrace)> {
    spec.check_compatibility(poly, opts.flag)?;
    if opts.offline && opts.objective != Objective::Cd {
        return Err(Error::InvalidArgument(
            "offline mode applies to the integral objective only".into(),
        ));
    }
    let mut algo = spec.build(poly, opts.flag)?;
    let trace = if opts.offline {
        run_acd(seq, algo.as_mut(), poly, opts.flag)?.1
    } else {
        simulate(seq, algo.as_mut(), poly, opts.flag)?
    };
    let report = evaluate_run(seq, spec, poly, opts, &trace)?;
    Ok((report, trace))
}

/// Score an already-computed trace of `spec` on `seq`. This is [`run`]
/// without the simulation step, for callers that obtained the trace some
/// other way (the adaptive adversary replays its own observations, so
/// re-running the algorithm from scratch could diverge on order-sensitive
/// state).
pub fn evaluate_run(
    seq: &EventSequence,
    spec: &AlgorithmSpec,
    poly: &Polytope,
    opts: &RunOptions,
    trace: &PlacementTrace,
) -> Result<RunReport> {
    let n = seq.len();
    let m = max_simultaneous(seq);
    let atwc = atwc_value(trace, poly, opts.flag)?;
    let cd = cd_value(trace, poly, opts.flag)?;

    let (atwc_ref, atwc_ref_exact) = dispersion_reference(m, poly)?;
    let cd_ref = cd_upper_bound(seq, poly)?;
    // The references are boundary-inclusive optima; without the boundary
    // term they still reference the run but no longer pin the optimum.
    let atwc_exact = atwc_ref_exact && opts.flag.with_boundary;
    let cd_exact = cd_ref.exact && opts.flag.with_boundary;

    let ceiling = spec.competitive_ceiling()?;
    let guarantee = match (opts.objective, opts.offline, spec) {
        (Objective::Atwc, _, AlgorithmSpec::Greedy { epsilon, gamma }) => {
            let g = gamma.unwrap_or(poly.covering_rate);
            let k = poly.dim;
            let eps = *epsilon;
            let floor =
                move |count: usize| Ok((1.0 - eps) / 2.0 * disp_kd_lower(count, k, g)?);
            let measured = worst_arrival_margin(trace, &floor)?;
            Some(GuaranteeCheck {
                description: "worst over arrivals of required covering floor / achieved \
                              minimum distance"
                    .into(),
                measured,
                ceiling: 1.0,
                conservative: false,
                passed: measured <= 1.0 + 1e-9,
            })
        }
        (Objective::Atwc, _, AlgorithmSpec::SegmentGreedy) => {
            let floor = |count: usize| Ok(0.5 * disp_segment(count)?);
            let measured = worst_arrival_margin(trace, &floor)?;
            Some(GuaranteeCheck {
                description: "worst over arrivals of half the segment optimum / achieved \
                              minimum distance"
                    .into(),
                measured,
                ceiling: 1.0,
                conservative: false,
                passed: measured <= 1.0 + 1e-9,
            })
        }
        (Objective::Atwc, _, _) => {
            let measured = atwc_ref / atwc;
            Some(GuaranteeCheck {
                description: "anytime ratio: dispersion reference at peak occupancy / \
                              maintained minimum"
                    .into(),
                measured,
                ceiling,
                conservative: !atwc_exact,
                passed: measured <= ceiling + 1e-9,
            })
        }
        (Objective::Cd, true, _) => {
            let measured = cd_ref.value / cd;
            let cd_ceiling = 2.0 * ceiling;
            Some(GuaranteeCheck {
                description: "integral ratio: slice-sum reference / achieved integral, \
                              against twice the black box's ceiling"
                    .into(),
                measured,
                ceiling: cd_ceiling,
                conservative: !cd_exact,
                passed: measured <= cd_ceiling + 1e-9,
            })
        }
        (Objective::Cd, false, _) => None,
    };

    let report = RunReport {
        schema: SCHEMA_VERSION,
        algorithm: spec.clone(),
        objective: opts.objective,
        offline: opts.offline,
        with_boundary: opts.flag.with_boundary,
        instance: InstanceDigest { n, m, t_end: seq.t_end() },
        atwc_value: atwc,
        cd_value: cd,
        atwc_reference: Reference { value: atwc_ref, exact: atwc_exact },
        cd_reference: Reference { value: cd_ref.value, exact: cd_exact },
        ratio_atwc: Ratio { value: atwc_ref / atwc, is_upper_bound: !atwc_exact },
        ratio_cd: Ratio { value: cd_ref.value / cd, is_upper_bound: !cd_exact },
        competitive_ceiling: ceiling,
        passed: guarantee.as_ref().is_none_or(|g| g.passed),
        guarantee,
        slices: slice_series(trace, poly, opts.flag)?,
    };
    Ok(report)
}

/// One named check inside a verification suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name: name.into(), passed, detail }
}

/// Machine-readable outcome of one verification suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    fn gather(suite: &str, checks: Vec<CheckResult>) -> Self {
        SuiteReport {
            schema: SCHEMA_VERSION,
            suite: suite.into(),
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

/// The suites `verify_suite` accepts.
pub const VERIFY_SUITES: &[&str] = &["line", "line-exact", "square", "greedy", "cd", "oracle"];

/// Run one named verification suite. `oracle_budget` caps brute-force work
/// in the suites that consult the oracle.
pub fn verify_suite(suite: &str, oracle_budget: u64) -> Result<SuiteReport> {
    match suite {
        "line" => verify_line(),
        "line-exact" => verify_line_exact(),
        "square" => verify_square(),
        "greedy" => verify_greedy(oracle_budget),
        "cd" => verify_cd(),
        "oracle" => verify_oracle(oracle_budget),
        other => Err(Error::InvalidArgument(format!(
            "unknown suite \"{other}\"; choose one of {}",
            VERIFY_SUITES.join(", ")
        ))),
    }
}

/// Simulated per-arrival minimum distances of an insert-only staircase run.
fn staircase_dmins(
    algo: &mut dyn OnlineAlgorithm,
    n: usize,
    poly: &Polytope,
) -> Result<Vec<f64>> {
    let seq = adversary::gen_sequential(n)?;
    let trace = simulate(&seq, algo, poly, BoundaryFlag::WITH_BOUNDARY)?;
    let mut out = Vec::with_capacity(n);
    for r in &trace.records {
        if r.kind == EventKind::Arrive {
            out.push(r.dmin.ok_or_else(|| {
                Error::Internal("arrival record lacks a minimum distance".into())
            })?);
        }
    }
    Ok(out)
}

fn verify_line() -> Result<SuiteReport> {
    let seg = Polytope::unit_segment();
    let mut checks = Vec::new();
    let n = 10_000usize;
    for l in 1..=5u32 {
        let cfg = build_harmonic_config(l)?;
        let dmins = staircase_dmins(&mut LineState::new(cfg.clone()), n, &seg)?;
        let mut worst_rel = 0.0f64;
        let mut worst_ratio = 0.0f64;
        let mut worst_small = 0.0f64;
        for (i, &d) in dmins.iter().enumerate() {
            let m = i + 1;
            let want = predicted_dmin(m, &cfg)?;
            let rel = (d - want).abs() / want.abs().max(1.0);
            worst_rel = worst_rel.max(rel);
            let ratio = disp_segment(m)? / d;
            worst_ratio = worst_ratio.max(ratio);
            if m <= cfg.r {
                worst_small = worst_small.max(ratio);
            }
        }
        let ceiling = guarantee_ceiling(&cfg);
        let small_want = (2.0 - 1.0 / (1u64 << l) as f64) * cfg.sigma;
        checks.push(check(
            &format!("identity-l{l}"),
            worst_rel <= 1e-12,
            format!("max relative gap simulated vs predicted over m <= {n}: {worst_rel:.3e}"),
        ));
        checks.push(check(
            &format!("guarantee-l{l}"),
            worst_ratio <= ceiling + 1e-9,
            format!("max ratio {worst_ratio:.12} vs ceiling {ceiling:.12}"),
        ));
        checks.push(check(
            &format!("table-peak-l{l}"),
            tol::close_rel(worst_small, small_want, 1e-12),
            format!("max ratio within the table {worst_small:.15} vs {small_want:.15}"),
        ));
    }
    Ok(SuiteReport::gather("line", checks))
}

fn verify_line_exact() -> Result<SuiteReport> {
    let two_ln2 = 2.0 * std::f64::consts::LN_2;
    let mut checks = Vec::new();

    let mut worst = 0.0f64;
    let mut worst_d = 0;
    for d in 1..=100_000u64 {
        let a = exact_apx(d)?;
        if a > worst {
            worst = a;
            worst_d = d;
        }
    }
    checks.push(check(
        "apx-below-limit",
        worst < two_ln2,
        format!("max apx over d <= 1e5 is {worst:.12} at d = {worst_d}, limit {two_ln2:.12}"),
    ));

    let tail = exact_apx(1u64 << 20)?;
    checks.push(check(
        "apx-limit-approach",
        (tail - two_ln2).abs() <= 1e-5,
        format!("apx(2^20) = {tail:.12}, |gap to 2 ln 2| = {:.3e}", (tail - two_ln2).abs()),
    ));

    let seg = Polytope::unit_segment();
    let n = 4096usize;
    let dmins = staircase_dmins(&mut ExactLineState::new(), n, &seg)?;
    let mut worst_rel = 0.0f64;
    for (i, &d) in dmins.iter().enumerate() {
        let want = exact_dmin((i + 1) as u64)?;
        worst_rel = worst_rel.max((d - want).abs() / want.abs().max(1.0));
    }
    checks.push(check(
        "identity",
        worst_rel <= 1e-9,
        format!("max relative gap simulated vs closed form over m <= {n}: {worst_rel:.3e}"),
    ));

    Ok(SuiteReport::gather("line-exact", checks))
}

/// Positions created in round i, per case, from the case ranges.
fn square_case_counts(round: u32) -> Result<[u64; 5]> {
    let side = |j: u32| -> u64 {
        let s = 7 * (1u64 << j) - 1;
        s * s
    };
    let lo = side(round);
    let hi = side(round + 1);
    let mut counts = [0u64; 5];
    for n in lo + 1..=hi {
        match case_of(n)? {
            (r, SquareCase::Round(c)) if r == round as i64 => counts[c as usize - 1] += 1,
            other => {
                return Err(Error::Internal(format!(
                    "position {n} classified as {other:?}, expected round {round}"
                )))
            }
        }
    }
    Ok(counts)
}

fn verify_square() -> Result<SuiteReport> {
    let mut checks = Vec::new();

    // Per-round, per-case counts against the closed forms: with p = 2^i,
    // the five cases create (4p-1)^2, 24p^2-14p+2, (3p-1)^2, 32p^2+6p-3,
    // and 66p^2+8p-1 positions.
    for round in 0..=4u32 {
        let p = 1u64 << round;
        let want = [
            (4 * p - 1) * (4 * p - 1),
            24 * p * p - 14 * p + 2,
            (3 * p - 1) * (3 * p - 1),
            32 * p * p + 6 * p - 3,
            66 * p * p + 8 * p - 1,
        ];
        let got = square_case_counts(round)?;
        checks.push(check(
            &format!("case-counts-round{round}"),
            got == want,
            format!("per-case counts {got:?} vs closed forms {want:?}"),
        ));
    }

    // Identity sweep at desk scale (three full rounds).
    let cfg = build_square_config(1.271)?;
    let sq = Polytope::unit_square();
    let n = 12_321usize;
    let dmins = staircase_dmins(&mut SquareState::new(cfg.clone()), n, &sq)?;
    let mut worst_rel = 0.0f64;
    for (i, &d) in dmins.iter().enumerate() {
        let want = predicted_dmin_square((i + 1) as u64, &cfg)?;
        worst_rel = worst_rel.max((d - want).abs() / want.abs().max(1.0));
    }
    checks.push(check(
        "identity",
        worst_rel <= 1e-12,
        format!("max relative gap simulated vs closed form over n <= {n}: {worst_rel:.3e}"),
    ));

    Ok(SuiteReport::gather("square", checks))
}

fn verify_greedy(oracle_budget: u64) -> Result<SuiteReport> {
    let sq = Polytope::unit_square();
    let mut checks = Vec::new();
    for eps in [0.1, 0.5] {
        let spec = AlgorithmSpec::Greedy { epsilon: eps, gamma: None };
        let mut algo = spec.build(&sq, BoundaryFlag::WITH_BOUNDARY)?;
        let dmins = staircase_dmins(algo.as_mut(), 50, &sq)?;
        let mut worst_margin = 0.0f64;
        for (i, &d) in dmins.iter().enumerate() {
            let floor = (1.0 - eps) / 2.0 * disp_kd_lower(i + 1, 2, 1.0)?;
            worst_margin = worst_margin.max(floor / d);
        }
        checks.push(check(
            &format!("covering-floor-eps{eps}"),
            worst_margin <= 1.0 + 1e-9,
            format!("worst required/achieved margin over n <= 50: {worst_margin:.6}"),
        ));

        let ceiling = 2.0 / (1.0 - eps) + 0.05;
        let mut worst_ratio = 0.0f64;
        for n in 1..=4usize {
            let (opt, _) =
                brute_force_disp(n, &sq, BoundaryFlag::WITH_BOUNDARY, 41, oracle_budget)?;
            worst_ratio = worst_ratio.max(opt / dmins[n - 1]);
        }
        checks.push(check(
            &format!("oracle-ratio-eps{eps}"),
            worst_ratio <= ceiling,
            format!("worst oracle/achieved ratio over n <= 4: {worst_ratio:.6} vs {ceiling}"),
        ));
    }
    Ok(SuiteReport::gather("greedy", checks))
}

fn verify_cd() -> Result<SuiteReport> {
    use rand::{Rng, SeedableRng};
    let mut checks = Vec::new();
    let seg = Polytope::unit_segment();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2026);
    let mut bad_selection = 0usize;
    let mut pass_breaches = 0usize;
    for _ in 0..200 {
        let n = rng.gen_range(1..=60);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let s = rng.gen_range(0..50) as f64;
                (s, s + rng.gen_range(1..=15) as f64)
            })
            .collect();
        let seq = EventSequence::from_pairs(&pairs)?;
        let pair = select_pair(&seq)?;
        if verify_selection(&pair, seq.points()).is_err() {
            bad_selection += 1;
        }
        let mut algo = SegmentGreedyState::new();
        let (asg, _) = run_acd(&seq, &mut algo, &seg, BoundaryFlag::WITH_BOUNDARY)?;
        if asg.passes() > max_simultaneous(&seq) {
            pass_breaches += 1;
        }
    }
    checks.push(check(
        "selection-properties",
        bad_selection == 0,
        format!("{bad_selection} of 200 seeded selections violated disjointness or coverage"),
    ));
    checks.push(check(
        "pass-budget",
        pass_breaches == 0,
        format!("{pass_breaches} of 200 reductions exceeded the simultaneity pass budget"),
    ));

    let cfg = build_harmonic_config(3)?;
    let ceiling = 2.0 * guarantee_ceiling(&cfg);
    let mut worst = 0.0f64;
    for seed in 0..30u64 {
        let seq = adversary::gen_random(20, seed, 30.0)?;
        let mut algo = LineState::new(cfg.clone());
        let (_, trace) = run_acd(&seq, &mut algo, &seg, BoundaryFlag::WITH_BOUNDARY)?;
        let achieved = cd_value(&trace, &seg, BoundaryFlag::WITH_BOUNDARY)?;
        let reference = cd_upper_bound(&seq, &seg)?;
        worst = worst.max(reference.value / achieved);
    }
    checks.push(check(
        "integral-ratio",
        worst <= ceiling + 1e-9,
        format!("worst reference/achieved integral ratio over 30 seeds: {worst:.6} vs \
                 ceiling {ceiling:.6}"),
    ));

    Ok(SuiteReport::gather("cd", checks))
}

fn verify_oracle(oracle_budget: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let seg = Polytope::unit_segment();
    let mut worst = 0.0f64;
    for n in 1..=5usize {
        let (v, _) =
            brute_force_disp(n, &seg, BoundaryFlag::WITH_BOUNDARY, 1001, oracle_budget)?;
        worst = worst.max((v - 1.0 / (n as f64 + 1.0)).abs());
    }
    checks.push(check(
        "segment",
        worst <= 1e-3,
        format!("max |oracle - 1/(n+1)| over n <= 5: {worst:.3e}"),
    ));

    let sq = Polytope::unit_square();
    for (n, want) in [(1usize, 0.5), (2, 0.36940), (5, 0.29290)] {
        let (v, _) = brute_force_disp(n, &sq, BoundaryFlag::WITH_BOUNDARY, 101, oracle_budget)?;
        checks.push(check(
            &format!("square-n{n}"),
            (v - want).abs() <= 0.01,
            format!("oracle {v:.5} vs reference {want}"),
        ));
    }
    Ok(SuiteReport::gather("oracle", checks))
}

/// Format a float for CSV/SVG output (shortest round-trip form).
fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Per-slice series of one trace: columns t (slice start), n_present, dmin
/// (empty when undefined).
pub fn slice_csv(trace: &PlacementTrace, poly: &Polytope, flag: BoundaryFlag) -> Result<String> {
    let rows = slice_series(trace, poly, flag)?;
    let mut out = String::from("t,n_present,dmin\n");
    for r in rows {
        out.push_str(&fmt(r.left));
        out.push(',');
        out.push_str(&r.count.to_string());
        out.push(',');
        if let Some(d) = r.dmin {
            out.push_str(&fmt(d));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Merged per-slice ratio table across several traces, keyed by a caller
/// label (typically the algorithm or file name). Columns: source, slice
/// bounds, population, achieved minimum, dispersion reference with its
/// exactness, and reference/achieved.
pub fn ratio_table_csv(
    entries: &[(String, PlacementTrace)],
    poly: &Polytope,
    flag: BoundaryFlag,
) -> Result<String> {
    let mut out = String::from("source,left,right,count,dmin,reference,reference_exact,ratio\n");
    for (label, trace) in entries {
        for r in slice_series(trace, poly, flag)? {
            if r.count == 0 {
                continue;
            }
            let (reference, exact) = dispersion_reference(r.count, poly)?;
            out.push_str(label);
            out.push(',');
            out.push_str(&fmt(r.left));
            out.push(',');
            out.push_str(&fmt(r.right));
            out.push(',');
            out.push_str(&r.count.to_string());
            out.push(',');
            if let Some(d) = r.dmin {
                out.push_str(&fmt(d));
                out.push(',');
                out.push_str(&fmt(reference));
                out.push(',');
                out.push_str(if exact { "true" } else { "false" });
                out.push(',');
                out.push_str(&fmt(reference / d));
            } else {
                out.push(',');
                out.push_str(&fmt(reference));
                out.push(',');
                out.push_str(if exact { "true" } else { "false" });
                out.push(',');
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Scatter of the points present at time `at`, as a standalone SVG.
///
/// The canvas maps the container's bounding box; one-dimensional traces
/// draw on a horizontal axis, higher-dimensional ones project onto the
/// first two coordinates.
pub fn placement_svg(trace: &PlacementTrace, poly: &Polytope, at: f64) -> Result<String> {
    if !at.is_finite() || at < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "snapshot time must be a finite nonnegative value, got {at}"
        )));
    }
    let mut present: std::collections::BTreeMap<u64, Point> = std::collections::BTreeMap::new();
    for r in &trace.records {
        match r.kind {
            EventKind::Arrive => {
                if r.t <= at {
                    let pos = r.pos.clone().ok_or_else(|| Error::MalformedTrace {
                        record: r.id as usize,
                        reason: "arrival without a position".into(),
                    })?;
                    present.insert(r.id, pos);
                }
            }
            EventKind::Depart => {
                // Closed lifetimes: a departure exactly at the snapshot
                // still counts as present.
                if r.t < at {
                    present.remove(&r.id);
                }
            }
        }
    }

    let (lo, hi) = (&poly.bbox.0, &poly.bbox.1);
    let span = |axis: usize| -> (f64, f64) {
        if axis < poly.dim {
            (lo.coords[axis], hi.coords[axis])
        } else {
            (0.0, 1.0)
        }
    };
    let (x0, x1) = span(0);
    let (y0, y1) = span(1);
    let size = 400.0;
    let margin = 20.0;
    let sx = size / (x1 - x0);
    let sy = size / (y1 - y0);
    let map_x = |x: f64| margin + (x - x0) * sx;
    let map_y = |y: f64| margin + size - (y - y0) * sy;

    let total = size + 2.0 * margin;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"{total}\" \
         viewBox=\"0 0 {total} {total}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"{margin}\" y=\"{margin}\" width=\"{size}\" height=\"{size}\" \
         fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n"
    ));
    if poly.dim == 1 {
        let y = margin + size / 2.0;
        svg.push_str(&format!(
            "  <line x1=\"{margin}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#999\" \
             stroke-width=\"1\"/>\n",
            margin + size
        ));
        for (id, p) in &present {
            svg.push_str(&format!(
                "  <circle cx=\"{}\" cy=\"{y}\" r=\"4\" fill=\"#1f77b4\"><title>{id}</title>\
                 </circle>\n",
                fmt(map_x(p.coords[0]))
            ));
        }
    } else {
        for (id, p) in &present {
            svg.push_str(&format!(
                "  <circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"#1f77b4\"><title>{id}</title>\
                 </circle>\n",
                fmt(map_x(p.coords[0])),
                fmt(map_y(p.coords[1]))
            ));
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
