//! Event sequences, timeline slicing, and the two trace objectives.
//!
//! A point is present over the closed interval [s, d]: presence at time t
//! means `s <= t <= d`, so points sharing an endpoint coexist at that
//! instant. The simultaneity statistic, the timeline slices, and both
//! objective evaluators all follow this reading consistently.
//!
//! The all-time worst case (ATWC) of a trace is the minimum of d_min over
//! time; the cumulative distance (CD) is the integral of d_min over time.
//! Both are piecewise evaluations over the slices cut at event times.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{d_min, BoundaryFlag, Point, Polytope};
use crate::{Error, Result};

/// One point of an instance: arrival and departure times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPoint {
    pub id: u64,
    pub s: f64,
    pub d: f64,
}

/// A validated arrival/departure schedule, sorted by arrival time
/// (ties by id).
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    points: Vec<TimedPoint>,
}

/// Collapse -0.0 onto 0.0 so time values can be grouped by bit pattern.
fn canon_time(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t
    }
}

impl EventSequence {
    pub fn new(mut points: Vec<TimedPoint>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for p in &mut points {
            p.s = canon_time(p.s);
            p.d = canon_time(p.d);
        }
        for p in &points {
            if !p.s.is_finite() || !p.d.is_finite() {
                return Err(Error::InvalidSequence(format!(
                    "point {} has non-finite times ({}, {})",
                    p.id, p.s, p.d
                )));
            }
            if p.s < 0.0 {
                return Err(Error::InvalidSequence(format!(
                    "point {} arrives at negative time {}",
                    p.id, p.s
                )));
            }
            if !(p.d > p.s) {
                return Err(Error::InvalidSequence(format!(
                    "point {} must depart strictly after arriving (s={}, d={})",
                    p.id, p.s, p.d
                )));
            }
            if !seen.insert(p.id) {
                return Err(Error::InvalidSequence(format!("duplicate id {}", p.id)));
            }
        }
        points.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.id.cmp(&b.id)));
        Ok(Self { points })
    }

    /// Build from bare (s, d) pairs, assigning ids 0.. in the given order.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .enumerate()
                .map(|(i, &(s, d))| TimedPoint { id: i as u64, s, d })
                .collect(),
        )
    }

    pub fn points(&self) -> &[TimedPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// End of the timeline: the last departure (0 for an empty sequence).
    pub fn t_end(&self) -> f64 {
        self.points.iter().map(|p| p.d).fold(0.0, f64::max)
    }

    /// Parse the instance text format: one "s d" pair per line, `#` lines
    /// and blank lines ignored. Ids are assigned 0.. in file order.
    pub fn from_instance_text(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>, lineno: usize| -> Result<f64> {
                let tok = tok.ok_or(Error::MalformedInstance {
                    line: lineno + 1,
                    reason: "expected two numbers".into(),
                })?;
                tok.parse::<f64>().map_err(|_| Error::MalformedInstance {
                    line: lineno + 1,
                    reason: format!("not a number: {tok:?}"),
                })
            };
            let s = parse(it.next(), lineno)?;
            let d = parse(it.next(), lineno)?;
            if it.next().is_some() {
                return Err(Error::MalformedInstance {
                    line: lineno + 1,
                    reason: "trailing tokens after \"s d\"".into(),
                });
            }
            points.push(TimedPoint { id: points.len() as u64, s, d });
        }
        Self::new(points).map_err(|e| match e {
            Error::InvalidSequence(reason) => Error::MalformedInstance { line: 0, reason },
            other => other,
        })
    }

    /// Render in the instance text format, one point per line in id order.
    pub fn to_instance_text(&self) -> String {
        let mut by_id = self.points.clone();
        by_id.sort_by_key(|p| p.id);
        let mut out = String::new();
        for p in &by_id {
            out.push_str(&format!("{} {}\n", p.s, p.d));
        }
        out
    }
}

/// Maximum number of simultaneously present points, with presence over
/// closed intervals: coincident departure/arrival times overlap.
pub fn max_simultaneous(seq: &EventSequence) -> usize {
    let mut arrivals: Vec<f64> = seq.points.iter().map(|p| p.s).collect();
    let mut departures: Vec<f64> = seq.points.iter().map(|p| p.d).collect();
    arrivals.sort_by(f64::total_cmp);
    departures.sort_by(f64::total_cmp);
    // The count |{i : s_i <= t <= d_i}| only increases at arrival times, so
    // scanning those suffices.
    let mut m = 0usize;
    let mut dep_done = 0usize; // departures strictly before the current t
    for (arrived, &t) in arrivals.iter().enumerate() {
        while dep_done < departures.len() && departures[dep_done] < t {
            dep_done += 1;
        }
        m = m.max(arrived + 1 - dep_done);
    }
    m
}

/// One timeline slice. Ordinary slices span the open time between two
/// consecutive event times; instant slices (`left == right`) mark a single
/// moment where a departure and an arrival coincide, so the instantaneous
/// present set exceeds both neighboring slices.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSlice {
    pub left: f64,
    pub right: f64,
    /// Ids present throughout the slice, ascending.
    pub present: Vec<u64>,
}

impl TimeSlice {
    pub fn count(&self) -> usize {
        self.present.len()
    }

    pub fn length(&self) -> f64 {
        self.right - self.left
    }

    pub fn is_instant(&self) -> bool {
        self.left == self.right
    }
}

/// The timeline [0, T] cut at every event time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimelineSlices {
    pub slices: Vec<TimeSlice>,
    pub t_end: f64,
}

/// Cut [0, T] at the sorted distinct event times and record the present set
/// of each piece. When arrivals and departures share a time t, an extra
/// zero-length slice [t, t] holds the full instantaneous set; this keeps
/// `max_simultaneous` equal to the maximum slice count.
pub fn slice_timeline(seq: &EventSequence) -> TimelineSlices {
    slice_lifetimes(seq.points())
}

pub(crate) fn slice_lifetimes(points: &[TimedPoint]) -> TimelineSlices {
    if points.is_empty() {
        return TimelineSlices { slices: vec![], t_end: 0.0 };
    }
    let mut times: Vec<f64> = points.iter().flat_map(|p| [p.s, p.d]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let t_end = *times.last().expect("non-empty");

    let mut arrivals_at: HashMap<u64, Vec<u64>> = HashMap::new();
    let mut departures_at: HashMap<u64, Vec<u64>> = HashMap::new();
    for p in points {
        arrivals_at.entry(p.s.to_bits()).or_default().push(p.id);
        // A point may arrive at the very end of the timeline and never get
        // a slice of positive length; treating d == s as
        // arrival-without-departure keeps trace-derived lifetimes usable.
        if p.d > p.s {
            departures_at.entry(p.d.to_bits()).or_default().push(p.id);
        }
    }

    let mut slices = Vec::new();
    let mut present: Vec<u64> = Vec::new();
    if times[0] > 0.0 {
        slices.push(TimeSlice { left: 0.0, right: times[0], present: vec![] });
    }
    for (i, &t) in times.iter().enumerate() {
        let arriving = arrivals_at.get(&t.to_bits());
        let departing = departures_at.get(&t.to_bits());
        if let Some(ids) = arriving {
            present.extend(ids);
            present.sort_unstable();
        }
        if arriving.is_some() && departing.is_some() {
            slices.push(TimeSlice { left: t, right: t, present: present.clone() });
        }
        if let Some(ids) = departing {
            present.retain(|id| !ids.contains(id));
        }
        if let Some(&next) = times.get(i + 1) {
            slices.push(TimeSlice { left: t, right: next, present: present.clone() });
        }
    }
    debug_assert!(present.is_empty());
    TimelineSlices { slices, t_end }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Arrive,
    Depart,
}

/// One line of a placement trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub kind: EventKind,
    pub id: u64,
    /// Set for arrivals, null for departures.
    pub pos: Option<Point>,
    /// d_min holding once the record's whole timestamp is applied (the
    /// piecewise-constant value of the slice it opens); null while
    /// undefined. Informational: the evaluators recompute from positions.
    pub dmin: Option<f64>,
}

/// Time-ordered placement/departure log of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlacementTrace {
    pub records: Vec<TraceRecord>,
}

impl PlacementTrace {
    /// Serialize as JSON lines, one record per event.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("plain data serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let r: TraceRecord =
                serde_json::from_str(line).map_err(|e| Error::MalformedTrace {
                    record: i + 1,
                    reason: e.to_string(),
                })?;
            records.push(r);
        }
        Ok(Self { records })
    }

    /// End of the trace timeline (0 for an empty trace).
    pub fn t_end(&self) -> f64 {
        self.records.iter().map(|r| r.t).fold(0.0, f64::max)
    }
}

/// A point's lifetime as reconstructed from a trace. Points still present
/// when the trace ends get `d == t_end`.
struct LifeEntry {
    id: u64,
    s: f64,
    d: f64,
    pos: Point,
}

fn trace_lifetimes(trace: &PlacementTrace) -> Result<Vec<LifeEntry>> {
    let mut entries: Vec<LifeEntry> = Vec::new();
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut last_t = f64::NEG_INFINITY;
    for (i, r) in trace.records.iter().enumerate() {
        let record = i + 1;
        if !r.t.is_finite() || r.t < 0.0 {
            return Err(Error::MalformedTrace {
                record,
                reason: format!("bad timestamp {}", r.t),
            });
        }
        if r.t < last_t {
            return Err(Error::MalformedTrace {
                record,
                reason: format!("timestamps must be non-decreasing ({} after {})", r.t, last_t),
            });
        }
        last_t = r.t;
        match r.kind {
            EventKind::Arrive => {
                let pos = r.pos.clone().ok_or(Error::MalformedTrace {
                    record,
                    reason: "arrival without a position".into(),
                })?;
                if index.contains_key(&r.id) {
                    return Err(Error::MalformedTrace {
                        record,
                        reason: format!("id {} arrives twice", r.id),
                    });
                }
                index.insert(r.id, entries.len());
                entries.push(LifeEntry { id: r.id, s: canon_time(r.t), d: f64::NAN, pos });
            }
            EventKind::Depart => {
                let &idx = index.get(&r.id).ok_or(Error::MalformedTrace {
                    record,
                    reason: format!("departure of unknown id {}", r.id),
                })?;
                if !entries[idx].d.is_nan() {
                    return Err(Error::MalformedTrace {
                        record,
                        reason: format!("id {} departs twice", r.id),
                    });
                }
                entries[idx].d = canon_time(r.t);
            }
        }
    }
    let t_end = if last_t.is_finite() { last_t } else { 0.0 };
    for e in &mut entries {
        if e.d.is_nan() {
            e.d = t_end;
        }
    }
    Ok(entries)
}

/// Incrementally maintained minimum distance of a mutable point set.
///
/// Arrivals update the cached minimum in O(|set|); departures invalidate it,
/// and the next query pays one full recomputation. Sequences that only ever
/// add points (the common large workloads) never hit the slow path.
pub(crate) struct DminTracker {
    flag: BoundaryFlag,
    cached: f64,
    valid: bool,
}

impl DminTracker {
    pub(crate) fn new(flag: BoundaryFlag) -> Self {
        Self { flag, cached: f64::INFINITY, valid: true }
    }

    /// Fold a new point in; `others` is the set before the addition.
    pub(crate) fn on_arrive(&mut self, q: &Point, others: &[Point], poly: &Polytope) {
        if !self.valid {
            return;
        }
        if self.flag.with_boundary {
            self.cached = self.cached.min(poly.signed_boundary_distance(q).max(0.0));
        }
        for p in others {
            self.cached = self.cached.min(p.distance(q));
        }
    }

    pub(crate) fn on_depart(&mut self) {
        self.valid = false;
    }

    /// Minimum distance of `points`, or `None` while the objective is
    /// undefined (empty set, or a single point without the boundary term).
    pub(crate) fn query(&mut self, points: &[Point], poly: &Polytope) -> Option<f64> {
        if !self.valid {
            self.cached = d_min(points, poly, self.flag).unwrap_or(f64::INFINITY);
            self.valid = true;
        }
        let need = if self.flag.with_boundary { 1 } else { 2 };
        (points.len() >= need).then_some(self.cached)
    }
}

/// Both objectives of one trace, evaluated in a single sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceObjectives {
    /// Minimum of d_min over the whole timeline; +infinity if d_min is
    /// never defined.
    pub atwc: f64,
    /// Integral of d_min over the timeline; undefined stretches contribute 0.
    pub cd: f64,
}

/// Evaluate a trace against a polytope: validates every placement, then
/// sweeps the slices accumulating the minimum and the integral of d_min.
pub fn evaluate_trace(
    trace: &PlacementTrace,
    poly: &Polytope,
    flag: BoundaryFlag,
) -> Result<TraceObjectives> {
    let entries = trace_lifetimes(trace)?;
    for e in &entries {
        if e.pos.dim() != poly.dim {
            return Err(Error::DimensionMismatch { left: e.pos.dim(), right: poly.dim });
        }
        poly.boundary_distance(&e.pos)?;
    }

    let mut times: Vec<f64> = entries.iter().flat_map(|e| [e.s, e.d]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut arrivals_at: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut departures_at: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, e) in entries.iter().enumerate() {
        arrivals_at.entry(e.s.to_bits()).or_default().push(i);
        if e.d > e.s {
            departures_at.entry(e.d.to_bits()).or_default().push(i);
        }
    }

    let mut present: Vec<Point> = Vec::new();
    let mut slot_of: HashMap<usize, usize> = HashMap::new(); // entry -> present index
    let mut entry_at: Vec<usize> = Vec::new(); // present index -> entry
    let mut tracker = DminTracker::new(flag);
    let mut atwc = f64::INFINITY;
    let mut cd = 0.0;

    for (i, &t) in times.iter().enumerate() {
        let arriving = arrivals_at.get(&t.to_bits());
        let departing = departures_at.get(&t.to_bits());
        if let Some(ids) = arriving {
            for &e in ids {
                tracker.on_arrive(&entries[e].pos, &present, poly);
                slot_of.insert(e, present.len());
                entry_at.push(e);
                present.push(entries[e].pos.clone());
            }
        }
        if arriving.is_some() && departing.is_some() {
            // Instant where a departure meets an arrival: the full closed
            // set exists only at this moment. It binds the minimum but has
            // zero measure.
            if let Some(v) = tracker.query(&present, poly) {
                atwc = atwc.min(v);
            }
        }
        if let Some(ids) = departing {
            for &e in ids {
                let slot = slot_of.remove(&e).expect("departing entry is present");
                present.swap_remove(slot);
                entry_at.swap_remove(slot);
                if slot < entry_at.len() {
                    slot_of.insert(entry_at[slot], slot);
                }
                tracker.on_depart();
            }
        }
        if let Some(&next) = times.get(i + 1) {
            if let Some(v) = tracker.query(&present, poly) {
                atwc = atwc.min(v);
                cd += (next - t) * v;
            }
        }
    }
    Ok(TraceObjectives { atwc, cd })
}

/// Minimum of d_min over the trace's timeline (+infinity when never
/// defined: no points at all, or never two points without the boundary
/// term).
pub fn atwc_value(trace: &PlacementTrace, poly: &Polytope, flag: BoundaryFlag) -> Result<f64> {
    Ok(evaluate_trace(trace, poly, flag)?.atwc)
}

/// Integral of d_min over the trace's timeline; slices where d_min is
/// undefined contribute 0.
pub fn cd_value(trace: &PlacementTrace, poly: &Polytope, flag: BoundaryFlag) -> Result<f64> {
    Ok(evaluate_trace(trace, poly, flag)?.cd)
}

/// Per-slice evaluation row for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceRow {
    pub left: f64,
    pub right: f64,
    pub count: usize,
    /// d_min over the slice, None where undefined.
    pub dmin: Option<f64>,
}

/// Materialized per-slice d_min table of a trace (desk-scale reporting).
pub fn slice_series(
    trace: &PlacementTrace,
    poly: &Polytope,
    flag: BoundaryFlag,
) -> Result<Vec<SliceRow>> {
    let entries = trace_lifetimes(trace)?;
    for e in &entries {
        poly.boundary_distance(&e.pos)?;
    }
    let pos_of: HashMap<u64, &Point> = entries.iter().map(|e| (e.id, &e.pos)).collect();
    let lifetimes: Vec<TimedPoint> =
        entries.iter().map(|e| TimedPoint { id: e.id, s: e.s, d: e.d }).collect();
    let sliced = slice_lifetimes(&lifetimes);
    Ok(sliced
        .slices
        .iter()
        .map(|sl| {
            let pts: Vec<Point> =
                sl.present.iter().map(|id| (*pos_of[id]).clone()).collect();
            SliceRow {
                left: sl.left,
                right: sl.right,
                count: sl.count(),
                dmin: d_min(&pts, poly, flag),
            }
        })
        .collect())
}
