//! Grid-search greedy placement for polytopes in dimension k >= 2.
//!
//! The exact greedy puts each new point at the position maximizing the
//! minimum of the distances to the existing points (and to the boundary,
//! when the objective includes it). That argmax ranges over a continuum, so
//! instead the search scans the centers of a uniform grid laid over the
//! minimum bounding cube. The per-axis slice count grows with the number of
//! existing points and shrinks with the covering rate and the accuracy
//! parameter, sized so that some grid center always achieves at least
//! (1 - epsilon)/2 times the reference optimum.
//!
//! One dimension is the exception where the exact greedy is computable
//! directly: [`SegmentGreedyState`] places largest-gap midpoints on the unit
//! segment with no grid at all.

use crate::geometry::{BoundaryFlag, Point, Polytope};
use crate::sim::{OnlineAlgorithm, PositionRegistry, ReuseOrder};
use crate::{Error, Result};

/// Parameters of the grid-search greedy.
#[derive(Debug, Clone, Copy)]
pub struct GreedyConfig {
    /// Accuracy loss: the maintained distance stays within a (1 - epsilon)
    /// factor of the exact greedy's. Smaller epsilon means a finer grid and
    /// an m^k cost per arrival.
    pub epsilon: f64,
    /// Covering rate of the container: edge ratio of its maximum inscribed
    /// cube to its minimum bounding cube. Trusted input, never verified.
    pub gamma: f64,
    /// Whether boundary distance enters the objective.
    pub flag: BoundaryFlag,
}

/// Validate epsilon in (0, 1) and gamma in (0, 1].
pub fn build_greedy_config(epsilon: f64, gamma: f64, flag: BoundaryFlag) -> Result<GreedyConfig> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    Ok(GreedyConfig { epsilon, gamma, flag })
}

/// Grid slices per axis with `existing` points already placed:
/// ceil(sqrt(k) * (existing^(1/k) + 2) / (gamma * epsilon)).
pub fn grid_slices(existing: usize, k: usize, cfg: &GreedyConfig) -> usize {
    let root = (existing as f64).powf(1.0 / k as f64);
    ((k as f64).sqrt() * (root + 2.0) / (cfg.gamma * cfg.epsilon)).ceil() as usize
}

/// Candidate positions for one arrival over the m^k grid covering the
/// anchored minimum bounding cube. Under the boundary objective these are
/// exactly the cube centers lying in the container; without it, every grid
/// cube contributes its center when inside, else the first of its corners
/// (coordinate order) that is — any point of a cube meeting the container
/// is an admissible stand-in once the boundary term is gone.
fn candidates(poly: &Polytope, m: usize, flag: BoundaryFlag) -> Vec<Point> {
    let k = poly.dim;
    let anchor = &poly.bbox.0.coords;
    let edge = poly.bounding_cube_edge();
    let mut out = Vec::new();
    let mut idx = vec![0usize; k];
    loop {
        let center = Point::new(
            idx.iter()
                .zip(anchor)
                .map(|(&t, lo)| lo + edge * (2 * t + 1) as f64 / (2 * m) as f64)
                .collect(),
        );
        if poly.contains(&center) {
            out.push(center);
        } else if !flag.with_boundary {
            for mask in 0..(1usize << k) {
                // Axis 0 in the most significant bit: masks enumerate the
                // corners in lexicographic order.
                let corner = Point::new(
                    idx.iter()
                        .enumerate()
                        .zip(anchor)
                        .map(|((axis, &t), lo)| {
                            let bit = (mask >> (k - 1 - axis)) & 1;
                            lo + edge * (t + bit) as f64 / m as f64
                        })
                        .collect(),
                );
                if poly.contains(&corner) {
                    out.push(corner);
                    break;
                }
            }
        }
        // Odometer over {0..m}^k, last axis fastest.
        let mut axis = k;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < m {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// One greedy step: the candidate maximizing the minimum of distances to
/// `existing` (plus the boundary distance under that objective), exact ties
/// going to the lexicographically smallest point.
///
/// The container must have dimension >= 2; its recorded bounding-cube
/// anchor and edge map the normalized grid into original coordinates, so
/// distances and containment are evaluated unscaled.
pub fn greedy_next(existing: &[Point], poly: &Polytope, cfg: &GreedyConfig) -> Result<Point> {
    if poly.dim < 2 {
        return Err(Error::Incompatible(
            "the grid greedy requires dimension >= 2; one-dimensional containers \
             have exact largest-gap placement instead"
                .into(),
        ));
    }
    for p in existing {
        if p.dim() != poly.dim {
            return Err(Error::DimensionMismatch { left: p.dim(), right: poly.dim });
        }
    }
    let m = grid_slices(existing.len(), poly.dim, cfg);
    let mut best: Option<(f64, Point)> = None;
    for c in candidates(poly, m, cfg.flag) {
        let mut value = if cfg.flag.with_boundary {
            poly.signed_boundary_distance(&c).max(0.0)
        } else {
            f64::INFINITY
        };
        for p in existing {
            value = value.min(c.distance(p));
        }
        let better = match &best {
            None => true,
            Some((v, b)) => {
                value > *v || (value == *v && c.lex_cmp(b) == std::cmp::Ordering::Less)
            }
        };
        if better {
            best = Some((value, c));
        }
    }
    match best {
        Some((_, point)) => Ok(point),
        None => Err(Error::NoGridCenter { m, gamma: cfg.gamma }),
    }
}

/// Online wrapper around [`greedy_next`]: arrivals reuse the
/// lexicographically smallest vacant position and run the grid search only
/// when every created position is occupied, so the search always sees the
/// full set of created positions.
pub struct GreedyState {
    cfg: GreedyConfig,
    poly: Polytope,
    registry: PositionRegistry,
}

impl GreedyState {
    pub fn new(cfg: GreedyConfig, poly: Polytope) -> Result<Self> {
        if poly.dim < 2 {
            return Err(Error::Incompatible(
                "the grid greedy requires dimension >= 2; one-dimensional containers \
                 have exact largest-gap placement instead"
                    .into(),
            ));
        }
        Ok(Self {
            cfg,
            poly,
            registry: PositionRegistry::new(ReuseOrder::CoordinateLex),
        })
    }

    pub fn config(&self) -> &GreedyConfig {
        &self.cfg
    }
}

impl OnlineAlgorithm for GreedyState {
    fn on_arrive(&mut self, id: u64) -> Result<Point> {
        if let Some(pos) = self.registry.occupy_vacant(id)? {
            return Ok(pos);
        }
        let existing: Vec<Point> = self.registry.all_positions().cloned().collect();
        let pos = greedy_next(&existing, &self.poly, &self.cfg)?;
        self.registry.create(pos.clone(), id)?;
        Ok(pos)
    }

    fn on_depart(&mut self, id: u64) -> Result<()> {
        self.registry.depart(id)?;
        Ok(())
    }
}

/// Exact greedy on the unit segment: each created position is the midpoint
/// of the largest gap between the existing positions and the endpoints,
/// leftmost gap on ties. In one dimension this computes the true greedy
/// argmax under the boundary objective, no grid needed.
pub struct SegmentGreedyState {
    registry: PositionRegistry,
}

impl SegmentGreedyState {
    pub fn new() -> Self {
        Self {
            registry: PositionRegistry::new(ReuseOrder::CoordinateLex),
        }
    }
}

impl Default for SegmentGreedyState {
    fn default() -> Self {
        Self::new()
    }
}

impl OnlineAlgorithm for SegmentGreedyState {
    fn on_arrive(&mut self, id: u64) -> Result<Point> {
        if let Some(pos) = self.registry.occupy_vacant(id)? {
            return Ok(pos);
        }
        let x =
            crate::algo1d::largest_gap_midpoint(self.registry.all_positions().map(|p| p.coords[0]));
        let pos = Point::new(vec![x]);
        self.registry.create(pos.clone(), id)?;
        Ok(pos)
    }

    fn on_depart(&mut self, id: u64) -> Result<()> {
        self.registry.depart(id)?;
        Ok(())
    }
}
