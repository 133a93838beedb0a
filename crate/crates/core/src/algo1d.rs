//! Online placement on the unit segment.
//!
//! The table-driven algorithm fixes a level `l`, precomputes `r = 2^l - 1`
//! positions from partial harmonic sums, and hands them out in an order that
//! keeps the worst-case minimum distance within a constant factor of the
//! offline optimum. Once the table is exhausted it falls back to splitting
//! the largest remaining gap. A second, table-free variant places points at
//! logarithmic splits and is analyzed exactly.

use crate::geometry::Point;
use crate::sim::{OnlineAlgorithm, PositionRegistry, ReuseOrder};
use crate::{Error, Result};

/// Largest supported level; `r = 2^l - 1` positions are materialized.
pub const MAX_LEVEL: u32 = 20;

/// Precomputed position table for one level.
#[derive(Debug, Clone)]
pub struct HarmonicConfig {
    /// Level; the table holds `2^l - 1` positions.
    pub l: u32,
    /// Table size `r = 2^l - 1`.
    pub r: usize,
    /// Normalizer `sigma = sum_{i=r+1}^{2r+1} 1/i`.
    pub sigma: f64,
    /// Anchor positions `q_1 < q_2 < ... < q_r`, all in (0, 1).
    /// `q[i]` stores `q_{i+1}`.
    pub q: Vec<f64>,
    /// Placement order: the d-th fresh point goes to `tau[d - 1]`.
    pub tau: Vec<f64>,
}

/// Builds the level-`l` table.
///
/// The anchors are normalized harmonic prefixes,
/// `q_i = (1/sigma) * sum_{j=r+1}^{r+i} 1/j`, and the placement order visits
/// them the way a breadth-first walk visits a complete binary tree: the
/// middle anchor first, then the quarter anchors, and so on. That order
/// guarantees that after any number of fresh placements the occupied anchors
/// are evenly spread across the index range.
pub fn build_harmonic_config(l: u32) -> Result<HarmonicConfig> {
    if l == 0 || l > MAX_LEVEL {
        return Err(Error::InvalidArgument(format!(
            "level must be in 1..={MAX_LEVEL}, got {l}"
        )));
    }
    let r = (1usize << l) - 1;
    let sigma: f64 = (r + 1..=2 * r + 1).map(|i| 1.0 / i as f64).sum();
    let mut q = Vec::with_capacity(r);
    let mut acc = 0.0;
    for j in r + 1..=2 * r {
        acc += 1.0 / j as f64;
        q.push(acc / sigma);
    }
    let mut tau = Vec::with_capacity(r);
    for d in 1..=r {
        let i = d.ilog2();
        let s = d - (1 << i);
        let idx = (2 * s + 1) << (l - i - 1);
        tau.push(q[idx - 1]);
    }
    Ok(HarmonicConfig { l, r, sigma, q, tau })
}

/// Smallest level whose worst-case guarantee is within `1 + eps` of the
/// limiting one: `l = ceil(log2(2/eps + 1) - 1)`, at least 1.
pub fn epsilon_to_level(eps: f64) -> Result<u32> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive and finite, got {eps}"
        )));
    }
    let l = ((2.0 / eps + 1.0).log2() - 1.0).ceil().max(1.0) as u32;
    if l > MAX_LEVEL {
        return Err(Error::InvalidArgument(format!(
            "epsilon {eps} needs level {l}, above the supported {MAX_LEVEL}"
        )));
    }
    Ok(l)
}

/// Closed-form minimum distance (pairwise and to the segment ends) right
/// after the m-th point is placed on an insert-only sequence.
///
/// While the table lasts (`m <= r`) the minimum is a block of the harmonic
/// tail: with `m = 2^i + s`,
/// `(1/sigma) * sum 1/j` for `j` from `2^l + (2s+1)*2^(l-i-1)`
/// through `2^l - 1 + (2s+2)*2^(l-i-1)`.
/// Past the table (`m > r`) every gap has been halved `l'` times, where
/// `l' = floor(log2(m / (r+1)))`, and with `i = floor(m / 2^l') - r` the
/// minimum is `1 / (2^(l'+1) * sigma * (r + i))`.
pub fn predicted_dmin(m: usize, cfg: &HarmonicConfig) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "prediction needs at least one point".into(),
        ));
    }
    let r = cfg.r;
    if m <= r {
        let i = m.ilog2();
        let s = m - (1 << i);
        let step = 1usize << (cfg.l - i - 1);
        let lo = (1 << cfg.l) + (2 * s + 1) * step;
        let hi = (1 << cfg.l) - 1 + (2 * s + 2) * step;
        let sum: f64 = (lo..=hi).map(|j| 1.0 / j as f64).sum();
        Ok(sum / cfg.sigma)
    } else {
        let lp = (m / (r + 1)).ilog2();
        let i = (m >> lp) - r;
        Ok(1.0 / ((1u64 << (lp + 1)) as f64 * cfg.sigma * (r + i) as f64))
    }
}

/// Worst-case ratio ceiling for the table-driven algorithm: `2 * sigma`.
pub fn guarantee_ceiling(cfg: &HarmonicConfig) -> f64 {
    2.0 * cfg.sigma
}

/// Table-driven online placement on the unit segment.
///
/// Arrivals reuse the leftmost vacant position when one exists, then consume
/// the precomputed table in order, then split the largest gap between
/// created positions (segment ends included), leftmost gap on ties.
pub struct LineState {
    cfg: HarmonicConfig,
    registry: PositionRegistry,
    next_fresh: usize,
}

impl LineState {
    pub fn new(cfg: HarmonicConfig) -> Self {
        Self {
            cfg,
            registry: PositionRegistry::new(ReuseOrder::CoordinateLex),
            next_fresh: 0,
        }
    }

    pub fn config(&self) -> &HarmonicConfig {
        &self.cfg
    }

    /// Number of distinct positions created so far.
    pub fn created_positions(&self) -> usize {
        self.registry.created()
    }

    fn fresh_position(&mut self) -> f64 {
        if self.next_fresh < self.cfg.tau.len() {
            let x = self.cfg.tau[self.next_fresh];
            self.next_fresh += 1;
            x
        } else {
            largest_gap_midpoint(self.registry.all_positions().map(|p| p.coords[0]))
        }
    }
}

/// Midpoint of the largest gap induced by `xs` on [0, 1], leftmost on ties.
pub(crate) fn largest_gap_midpoint(xs: impl Iterator<Item = f64>) -> f64 {
    let mut pts: Vec<f64> = xs.collect();
    pts.push(0.0);
    pts.push(1.0);
    pts.sort_by(f64::total_cmp);
    let mut best_lo = 0.0;
    let mut best_len = f64::NEG_INFINITY;
    for w in pts.windows(2) {
        let len = w[1] - w[0];
        if len > best_len {
            best_len = len;
            best_lo = w[0];
        }
    }
    best_lo + best_len / 2.0
}

impl OnlineAlgorithm for LineState {
    fn on_arrive(&mut self, id: u64) -> Result<Point> {
        if let Some(p) = self.registry.occupy_vacant(id)? {
            return Ok(p);
        }
        let pos = Point::new(vec![self.fresh_position()]);
        self.registry.create(pos.clone(), id)?;
        Ok(pos)
    }

    fn on_depart(&mut self, id: u64) -> Result<()> {
        self.registry.depart(id).map(|_| ())
    }
}

/// d-th fresh position of the exact variant: with `d = 2^i + s`,
/// `log2(1 + (2s+1)/2^(i+1))`.
pub fn exact_tau(d: u64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("position index starts at 1".into()));
    }
    let i = d.ilog2();
    let s = d - (1 << i);
    Ok(((2 * s + 1) as f64 / (2.0f64).powi(i as i32 + 1)).ln_1p() / std::f64::consts::LN_2)
}

/// Closed-form minimum distance after m points of the exact variant:
/// with `m = 2^i + s`, `log2(1 + 1/(2^(i+1) + 2s + 1))`.
pub fn exact_dmin(m: u64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "prediction needs at least one point".into(),
        ));
    }
    let i = m.ilog2();
    let s = m - (1 << i);
    Ok((1.0 / ((2.0f64).powi(i as i32 + 1) + (2 * s + 1) as f64)).ln_1p()
        / std::f64::consts::LN_2)
}

/// Exact ratio of the offline optimum `1/(d+1)` to the minimum distance the
/// exact variant maintains at d points. Strictly below `2 ln 2` for every d
/// and approaches it as d grows.
pub fn exact_apx(d: u64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("ratio needs at least one point".into()));
    }
    let i = d.ilog2();
    let s = d - (1 << i);
    let denom = ((1 << (i + 1)) + 2 * s + 1) as f64;
    Ok(std::f64::consts::LN_2 / (((1 << i) + s + 1) as f64 * (1.0 / denom).ln_1p()))
}

/// Table-free online placement at logarithmic split points.
///
/// The d-th fresh position is `exact_tau(d)`; the supply never runs out, so
/// there is no gap-splitting phase. Vacant positions are reused leftmost
/// first.
pub struct ExactLineState {
    registry: PositionRegistry,
    next_fresh: u64,
}

impl ExactLineState {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        Self {
            registry: PositionRegistry::new(ReuseOrder::CoordinateLex),
            next_fresh: 1,
        }
    }

    pub fn created_positions(&self) -> usize {
        self.registry.created()
    }
}

impl OnlineAlgorithm for ExactLineState {
    fn on_arrive(&mut self, id: u64) -> Result<Point> {
        if let Some(p) = self.registry.occupy_vacant(id)? {
            return Ok(p);
        }
        let pos = Point::new(vec![exact_tau(self.next_fresh)?]);
        self.next_fresh += 1;
        self.registry.create(pos.clone(), id)?;
        Ok(pos)
    }

    fn on_depart(&mut self, id: u64) -> Result<()> {
        self.registry.depart(id).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::disp_segment;
    use crate::geometry::{d_min, BoundaryFlag, Polytope};
    use crate::tol;
    use proptest::prelude::*;

    #[test]
    fn level_one_table() {
        let cfg = build_harmonic_config(1).unwrap();
        assert_eq!(cfg.r, 1);
        assert!((cfg.sigma - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(cfg.q.len(), 1);
        assert!((cfg.q[0] - 0.6).abs() < 1e-15);
        assert_eq!(cfg.tau, cfg.q);
    }

    #[test]
    fn level_three_placement_order() {
        let cfg = build_harmonic_config(3).unwrap();
        let want: Vec<f64> = [4, 2, 6, 1, 3, 5, 7]
            .iter()
            .map(|&i: &usize| cfg.q[i - 1])
            .collect();
        assert_eq!(cfg.tau, want);
    }

    /// Placement order must match a literal breadth-first interval split:
    /// emit the midpoint index of (0, 2^l), then recurse on both halves.
    #[test]
    fn placement_order_is_breadth_first_split() {
        for l in 1..=8u32 {
            let cfg = build_harmonic_config(l).unwrap();
            let mut order = Vec::new();
            let mut queue = std::collections::VecDeque::new();
            queue.push_back((0usize, 1usize << l));
            while let Some((lo, hi)) = queue.pop_front() {
                let mid = (lo + hi) / 2;
                order.push(mid);
                if mid - lo >= 2 {
                    queue.push_back((lo, mid));
                    queue.push_back((mid, hi));
                }
            }
            let want: Vec<f64> = order.iter().map(|&i| cfg.q[i - 1]).collect();
            assert_eq!(cfg.tau, want, "level {l}");
        }
    }

    #[test]
    fn anchors_strictly_increasing_inside_unit_interval() {
        for l in 1..=10u32 {
            let cfg = build_harmonic_config(l).unwrap();
            assert_eq!(cfg.q.len(), cfg.r);
            assert!(cfg.q[0] > 0.0);
            assert!(*cfg.q.last().unwrap() < 1.0);
            for w in cfg.q.windows(2) {
                assert!(w[0] < w[1]);
            }
        }
    }

    #[test]
    fn level_bounds_rejected() {
        assert!(build_harmonic_config(0).is_err());
        assert!(build_harmonic_config(MAX_LEVEL + 1).is_err());
    }

    #[test]
    fn predicted_values_level_one() {
        let cfg = build_harmonic_config(1).unwrap();
        assert!((predicted_dmin(1, &cfg).unwrap() - 0.4).abs() < 1e-15);
        assert!((predicted_dmin(2, &cfg).unwrap() - 0.3).abs() < 1e-15);
        assert!(predicted_dmin(0, &cfg).is_err());
    }

    #[test]
    fn predicted_value_past_table() {
        let cfg = build_harmonic_config(3).unwrap();
        let want = 1.0 / (16.0 * cfg.sigma);
        assert!((predicted_dmin(8, &cfg).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn worst_ratio_hits_ceiling_shape() {
        // Max of optimum/maintained over the table regime is (2 - 2^-l) sigma.
        for l in 1..=6u32 {
            let cfg = build_harmonic_config(l).unwrap();
            let mut worst = 0.0f64;
            for m in 1..=cfg.r {
                let ratio = disp_segment(m).unwrap() / predicted_dmin(m, &cfg).unwrap();
                worst = worst.max(ratio);
            }
            let want = (2.0 - 0.5f64.powi(l as i32)) * cfg.sigma;
            assert!(
                tol::close_rel(worst, want, 1e-12),
                "l={l}: worst {worst} vs {want}"
            );
            assert!(worst < guarantee_ceiling(&cfg));
        }
    }

    /// Drives the placement through arrivals only and checks the maintained
    /// minimum distance against the closed form after every arrival.
    fn check_identity(l: u32, n: usize, rel: f64) {
        let cfg = build_harmonic_config(l).unwrap();
        let seg = Polytope::unit_segment();
        let mut algo = LineState::new(cfg.clone());
        let mut pts: Vec<Point> = Vec::with_capacity(n);
        for m in 1..=n {
            pts.push(algo.on_arrive(m as u64).unwrap());
            let got = d_min(&pts, &seg, BoundaryFlag::WITH_BOUNDARY).unwrap();
            let want = predicted_dmin(m, &cfg).unwrap();
            assert!(
                tol::close_rel(got, want, rel),
                "l={l} m={m}: maintained {got} vs predicted {want}"
            );
        }
    }

    #[test]
    fn maintained_distance_matches_prediction() {
        for l in 1..=3u32 {
            check_identity(l, 200, 1e-12);
        }
    }

    #[test]
    fn exact_positions() {
        assert!((exact_tau(1).unwrap() - 0.5849625007211562).abs() < 1e-12);
        assert!((exact_tau(2).unwrap() - 0.3219280948873623).abs() < 1e-12);
        assert!((exact_tau(3).unwrap() - 0.8073549220576042).abs() < 1e-12);
        assert!(exact_tau(0).is_err());
    }

    #[test]
    fn exact_ratio_below_limit() {
        assert!((exact_apx(1).unwrap() - 1.2047104198266045).abs() < 1e-12);
        let limit = 2.0 * std::f64::consts::LN_2;
        for d in 1..=10_000u64 {
            assert!(exact_apx(d).unwrap() < limit, "d={d}");
        }
    }

    #[test]
    fn exact_maintained_distance_matches_prediction() {
        let seg = Polytope::unit_segment();
        let mut algo = ExactLineState::new();
        let mut pts = Vec::new();
        for m in 1..=300u64 {
            pts.push(algo.on_arrive(m).unwrap());
            let got = d_min(&pts, &seg, BoundaryFlag::WITH_BOUNDARY).unwrap();
            let want = exact_dmin(m).unwrap();
            assert!(
                tol::close_rel(got, want, 1e-12),
                "m={m}: maintained {got} vs predicted {want}"
            );
        }
    }

    #[test]
    fn gap_splitting_after_table() {
        // Level 1 creates 0.6 first; the next two fresh points split [0,0.6]
        // and then [0.6,1].
        let cfg = build_harmonic_config(1).unwrap();
        let mut algo = LineState::new(cfg);
        assert!((algo.on_arrive(1).unwrap().coords[0] - 0.6).abs() < 1e-12);
        assert!((algo.on_arrive(2).unwrap().coords[0] - 0.3).abs() < 1e-12);
        assert!((algo.on_arrive(3).unwrap().coords[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn gap_ties_split_leftmost() {
        // All gaps exactly 0.25 (representable), so the tie rule decides.
        let mid = largest_gap_midpoint([0.25, 0.5, 0.75].into_iter());
        assert_eq!(mid, 0.125);
        // Equal-largest at both ends.
        let mid = largest_gap_midpoint([0.5].into_iter());
        assert_eq!(mid, 0.25);
    }

    #[test]
    fn vacancies_reused_leftmost_first() {
        let cfg = build_harmonic_config(2).unwrap();
        let mut algo = LineState::new(cfg.clone());
        let p1 = algo.on_arrive(1).unwrap();
        let p2 = algo.on_arrive(2).unwrap();
        let p3 = algo.on_arrive(3).unwrap();
        assert_eq!(algo.created_positions(), 3);
        algo.on_depart(1).unwrap();
        algo.on_depart(3).unwrap();
        let leftmost = if p1.coords[0] < p3.coords[0] { &p1 } else { &p3 };
        assert_eq!(&algo.on_arrive(4).unwrap(), leftmost);
        // No new position was created for the reuse.
        assert_eq!(algo.created_positions(), 3);
        let _ = p2;
        assert!(algo.on_depart(99).is_err());
    }

    proptest! {
        /// Created positions track the historical maximum of simultaneously
        /// present points, never the total number of arrivals.
        #[test]
        fn created_positions_track_peak_occupancy(ops in proptest::collection::vec(any::<bool>(), 1..200)) {
            let cfg = build_harmonic_config(2).unwrap();
            let mut algo = LineState::new(cfg);
            let mut present: Vec<u64> = Vec::new();
            let mut next_id = 0u64;
            let mut peak = 0usize;
            for arrive in ops {
                if arrive || present.is_empty() {
                    algo.on_arrive(next_id).unwrap();
                    present.push(next_id);
                    next_id += 1;
                    peak = peak.max(present.len());
                } else {
                    let id = present.remove(present.len() / 2);
                    algo.on_depart(id).unwrap();
                }
            }
            prop_assert_eq!(algo.created_positions(), peak);
        }

        /// Two co-present points never share a position.
        #[test]
        fn no_collisions_under_churn(ops in proptest::collection::vec(any::<bool>(), 1..200)) {
            let cfg = build_harmonic_config(3).unwrap();
            let mut algo = LineState::new(cfg);
            let mut present: Vec<(u64, f64)> = Vec::new();
            let mut next_id = 0u64;
            for arrive in ops {
                if arrive || present.is_empty() {
                    let p = algo.on_arrive(next_id).unwrap();
                    for (_, x) in &present {
                        prop_assert_ne!(*x, p.coords[0]);
                    }
                    present.push((next_id, p.coords[0]));
                    next_id += 1;
                } else {
                    let (id, _) = present.remove(present.len() / 3);
                    algo.on_depart(id).unwrap();
                }
            }
        }
    }

    #[test]
    fn epsilon_level_selection() {
        assert_eq!(epsilon_to_level(1.0).unwrap(), 1);
        assert_eq!(epsilon_to_level(0.1).unwrap(), 4);
        assert!(epsilon_to_level(0.0).is_err());
        assert!(epsilon_to_level(f64::NAN).is_err());
        assert!(epsilon_to_level(1e-9).is_err());
    }
}
