//! The event loop: drives an online algorithm over an event sequence and
//! records a placement trace, plus the occupied/vacant position registry
//! shared by all placement algorithms.
//!
//! Events are processed grouped by timestamp, arrivals before departures.
//! Presence is closed in time, so a point departing at t and one arriving
//! at t coexist for that instant; placing the newcomer before releasing the
//! leaver's position keeps algorithms from recycling a slot that is still,
//! momentarily, occupied.

use std::collections::HashMap;

use crate::events::{DminTracker, EventKind, EventSequence, PlacementTrace, TraceRecord};
use crate::geometry::{BoundaryFlag, Point, Polytope};
use crate::{Error, Result};

/// An online placement algorithm: must answer every arrival with a position
/// immediately and irrevocably.
pub trait OnlineAlgorithm {
    fn on_arrive(&mut self, id: u64) -> Result<Point>;
    fn on_depart(&mut self, id: u64) -> Result<()>;
}

/// How a registry orders its vacant positions for reuse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReuseOrder {
    /// Smallest coordinate vector, compared first-to-last (1-D and the
    /// k-D greedy).
    CoordinateLex,
    /// Row-major: last coordinate first, so 2-D picks the lowest (y, x).
    RowMajor,
}

impl ReuseOrder {
    fn cmp(self, a: &Point, b: &Point) -> std::cmp::Ordering {
        match self {
            ReuseOrder::CoordinateLex => a.lex_cmp(b),
            ReuseOrder::RowMajor => {
                for (x, y) in a.coords.iter().rev().zip(b.coords.iter().rev()) {
                    match x.total_cmp(y) {
                        std::cmp::Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                std::cmp::Ordering::Equal
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    pos: Point,
    occupant: Option<u64>,
}

/// The pool of positions an algorithm has ever created. Positions are never
/// deleted: departures only relabel a slot vacant, and arrivals reuse the
/// smallest vacant slot before any new position is created.
#[derive(Debug, Clone)]
pub struct PositionRegistry {
    slots: Vec<Slot>,
    by_id: HashMap<u64, usize>,
    order: ReuseOrder,
}

impl PositionRegistry {
    pub fn new(order: ReuseOrder) -> Self {
        Self { slots: Vec::new(), by_id: HashMap::new(), order }
    }

    /// Number of positions ever created.
    pub fn created(&self) -> usize {
        self.slots.len()
    }

    pub fn occupied(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_present(&self, id: u64) -> bool {
        self.by_id.contains_key(&id)
    }

    /// Positions currently holding a point.
    pub fn occupied_positions(&self) -> impl Iterator<Item = &Point> {
        self.slots.iter().filter(|s| s.occupant.is_some()).map(|s| &s.pos)
    }

    /// Every position ever created, in creation order.
    pub fn all_positions(&self) -> impl Iterator<Item = &Point> {
        self.slots.iter().map(|s| &s.pos)
    }

    /// Occupy the smallest vacant position, if any.
    pub fn occupy_vacant(&mut self, id: u64) -> Result<Option<Point>> {
        if self.by_id.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        let vacant = self
            .slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.occupant.is_none())
            .min_by(|(_, a), (_, b)| self.order.cmp(&a.pos, &b.pos));
        match vacant {
            Some((i, _)) => {
                self.slots[i].occupant = Some(id);
                self.by_id.insert(id, i);
                Ok(Some(self.slots[i].pos.clone()))
            }
            None => Ok(None),
        }
    }

    /// Create a brand-new position occupied by `id`.
    pub fn create(&mut self, pos: Point, id: u64) -> Result<()> {
        if self.by_id.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.by_id.insert(id, self.slots.len());
        self.slots.push(Slot { pos, occupant: Some(id) });
        Ok(())
    }

    /// Relabel `id`'s slot vacant.
    pub fn depart(&mut self, id: u64) -> Result<Point> {
        let slot = self.by_id.remove(&id).ok_or(Error::UnknownId(id))?;
        self.slots[slot].occupant = None;
        Ok(self.slots[slot].pos.clone())
    }
}

/// Drive `algo` over `seq` and record the trace.
///
/// Within one timestamp all arrivals are delivered before any departure, and
/// every record of that timestamp carries the d_min holding after the whole
/// timestamp is applied (the value of the slice the timestamp opens), or
/// null while the objective is undefined. Every returned position is
/// validated against the polytope.
pub fn simulate(
    seq: &EventSequence,
    algo: &mut dyn OnlineAlgorithm,
    poly: &Polytope,
    flag: BoundaryFlag,
) -> Result<PlacementTrace> {
    // (t, departure?, id); arrivals sort before departures at equal times.
    let mut events: Vec<(f64, bool, u64)> = Vec::with_capacity(2 * seq.len());
    for p in seq.points() {
        events.push((p.s, false, p.id));
        events.push((p.d, true, p.id));
    }
    events.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
    });

    let mut records: Vec<TraceRecord> = Vec::with_capacity(events.len());
    let mut present: Vec<Point> = Vec::new();
    let mut slot_of: HashMap<u64, usize> = HashMap::new();
    let mut id_at: Vec<u64> = Vec::new();
    let mut tracker = DminTracker::new(flag);

    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        let batch_start = records.len();
        while i < events.len() && events[i].0 == t {
            let (_, is_departure, id) = events[i];
            if is_departure {
                algo.on_depart(id)?;
                let slot = slot_of.remove(&id).expect("departing id is present");
                present.swap_remove(slot);
                id_at.swap_remove(slot);
                if slot < id_at.len() {
                    slot_of.insert(id_at[slot], slot);
                }
                tracker.on_depart();
                records.push(TraceRecord {
                    t,
                    kind: EventKind::Depart,
                    id,
                    pos: None,
                    dmin: None,
                });
            } else {
                let pos = algo.on_arrive(id)?;
                if pos.dim() != poly.dim {
                    return Err(Error::DimensionMismatch { left: pos.dim(), right: poly.dim });
                }
                poly.boundary_distance(&pos)?;
                tracker.on_arrive(&pos, &present, poly);
                slot_of.insert(id, present.len());
                id_at.push(id);
                present.push(pos.clone());
                records.push(TraceRecord {
                    t,
                    kind: EventKind::Arrive,
                    id,
                    pos: Some(pos),
                    dmin: None,
                });
            }
            i += 1;
        }
        let dmin = tracker.query(&present, poly);
        for r in &mut records[batch_start..] {
            r.dmin = dmin;
        }
    }
    Ok(PlacementTrace { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::atwc_value;

    /// Places points at scripted positions, recording the call order.
    struct Scripted {
        positions: Vec<Point>,
        next: usize,
        calls: Vec<String>,
    }

    impl Scripted {
        fn new(xs: &[f64]) -> Self {
            Self {
                positions: xs.iter().map(|&x| Point::new(vec![x])).collect(),
                next: 0,
                calls: vec![],
            }
        }
    }

    impl OnlineAlgorithm for Scripted {
        fn on_arrive(&mut self, id: u64) -> Result<Point> {
            self.calls.push(format!("+{id}"));
            let p = self.positions[self.next].clone();
            self.next += 1;
            Ok(p)
        }

        fn on_depart(&mut self, id: u64) -> Result<()> {
            self.calls.push(format!("-{id}"));
            Ok(())
        }
    }

    #[test]
    fn simulate_orders_arrivals_before_departures() {
        let seg = Polytope::unit_segment();
        // Point 0 departs at 1 exactly when point 1 arrives.
        let seq = EventSequence::from_pairs(&[(0.0, 1.0), (1.0, 2.0)]).unwrap();
        let mut algo = Scripted::new(&[0.4, 0.6]);
        let trace = simulate(&seq, &mut algo, &seg, BoundaryFlag::WITH_BOUNDARY).unwrap();
        assert_eq!(algo.calls, vec!["+0", "+1", "-0", "-1"]);
        // All of timestamp 1 shares the post-timestamp value: point 1 alone.
        assert_eq!(trace.records[1].t, 1.0);
        assert_eq!(trace.records[1].dmin, Some(0.4));
        assert_eq!(trace.records[2].dmin, Some(0.4));
        // Each point alone keeps 0.4 from the boundary, but for the instant
        // t = 1 both are present 0.2 apart, and that pins the minimum.
        let atwc = atwc_value(&trace, &seg, BoundaryFlag::WITH_BOUNDARY).unwrap();
        assert!((atwc - 0.2).abs() < 1e-15);
    }

    #[test]
    fn simulate_rejects_outside_positions() {
        let seg = Polytope::unit_segment();
        let seq = EventSequence::from_pairs(&[(0.0, 1.0)]).unwrap();
        let mut algo = Scripted::new(&[1.5]);
        assert!(matches!(
            simulate(&seq, &mut algo, &seg, BoundaryFlag::WITH_BOUNDARY),
            Err(Error::OutsidePolytope { .. })
        ));
    }

    #[test]
    fn registry_reuses_smallest_vacant() {
        let mut reg = PositionRegistry::new(ReuseOrder::CoordinateLex);
        reg.create(Point::new(vec![0.6]), 0).unwrap();
        reg.create(Point::new(vec![0.2]), 1).unwrap();
        reg.create(Point::new(vec![0.4]), 2).unwrap();
        reg.depart(0).unwrap();
        reg.depart(1).unwrap();
        let p = reg.occupy_vacant(3).unwrap().unwrap();
        assert_eq!(p.coords, vec![0.2]);
        let p = reg.occupy_vacant(4).unwrap().unwrap();
        assert_eq!(p.coords, vec![0.6]);
        assert_eq!(reg.occupy_vacant(5).unwrap(), None);
        assert_eq!(reg.created(), 3);
        assert!(matches!(reg.depart(99), Err(Error::UnknownId(99))));
        assert!(matches!(reg.occupy_vacant(4), Err(Error::DuplicateId(4))));
    }

    #[test]
    fn registry_row_major_order() {
        let mut reg = PositionRegistry::new(ReuseOrder::RowMajor);
        reg.create(Point::new(vec![0.1, 0.9]), 0).unwrap();
        reg.create(Point::new(vec![0.9, 0.1]), 1).unwrap();
        reg.depart(0).unwrap();
        reg.depart(1).unwrap();
        // Lowest y wins even though its x is larger.
        let p = reg.occupy_vacant(2).unwrap().unwrap();
        assert_eq!(p.coords, vec![0.9, 0.1]);
    }
}
