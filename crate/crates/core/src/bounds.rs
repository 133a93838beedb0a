//! Reference optima: closed-form dispersion values and bounds for the
//! segment, the unit square, and k-dimensional polytopes, plus an
//! independent brute-force grid oracle for small instances.
//!
//! The oracle is deliberately unrelated to the placement algorithms: it
//! searches n-tuples of grid positions for the maximin configuration and
//! returns a witness whose exact minimum is the reported value, so the
//! result is always a valid lower bound on the true optimum.

use crate::geometry::{BoundaryFlag, Point, Polytope};
use crate::{Error, Result};

/// Default work budget for the brute-force oracle (candidate evaluations).
pub const DEFAULT_ORACLE_BUDGET: u64 = 100_000_000;

/// Lower/upper reference bounds on the optimal dispersion for one n, with
/// the exact value when it is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispBound {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    pub exact: Option<f64>,
}

/// Optimal dispersion of n points on the unit segment: 1/(n+1).
pub fn disp_segment(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("disp_segment requires n >= 1".into()));
    }
    Ok(1.0 / (n as f64 + 1.0))
}

/// Known exact optima on the unit square at the start of each reference
/// group; the group value applies as the reference for every larger n up to
/// the next head (dispersion is non-increasing in n).
const SQUARE_GROUPS: [(usize, f64); 7] = [
    (1, 0.5),
    (2, 0.36940),
    (5, 0.29290),
    (6, 0.27292),
    (8, 0.25434),
    (9, 0.25),
    (18, 0.18769),
];

/// Reference dispersion value for n points in the unit square, for
/// 1 <= n <= 36: the exact optimum of the group head, valid as an upper
/// reference for the whole group. None for n > 36.
pub fn disp_square_exact_small(n: usize) -> Result<Option<f64>> {
    if n < 1 {
        return Err(Error::InvalidArgument("disp_square_exact_small requires n >= 1".into()));
    }
    if n > 36 {
        return Ok(None);
    }
    let value = SQUARE_GROUPS
        .iter()
        .rev()
        .find(|&&(head, _)| head <= n)
        .map(|&(_, v)| v)
        .expect("group heads start at 1");
    Ok(Some(value))
}

/// Packing-argument bounds on the optimal dispersion in the unit square:
/// 2/(5+sqrt(2*sqrt(3)*n)) <= Disp(n) <= 2/(2+sqrt(2*sqrt(3)*n)).
/// `exact` is filled where the true optimum is known (the group heads of
/// the small-n reference table).
pub fn disp_square_bounds(n: usize) -> Result<DispBound> {
    if n < 1 {
        return Err(Error::InvalidArgument("disp_square_bounds requires n >= 1".into()));
    }
    let root = (2.0 * 3.0f64.sqrt() * n as f64).sqrt();
    let exact = SQUARE_GROUPS.iter().find(|&&(head, _)| head == n).map(|&(_, v)| v);
    Ok(DispBound { n, lower: 2.0 / (5.0 + root), upper: 2.0 / (2.0 + root), exact })
}

/// Dimension-generic lower bound through the covering rate:
/// Disp(n; P) >= gamma / (n^(1/k) + 2) for the minimum bounding cube edge
/// normalized to 1.
pub fn disp_kd_lower(n: usize, k: usize, gamma: f64) -> Result<f64> {
    if n < 1 || k < 1 {
        return Err(Error::InvalidArgument(format!(
            "disp_kd_lower requires n >= 1 and k >= 1, got n={n}, k={k}"
        )));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "disp_kd_lower requires gamma in (0, 1], got {gamma}"
        )));
    }
    Ok(gamma / ((n as f64).powf(1.0 / k as f64) + 2.0))
}

struct Budget {
    spent: u64,
    cap: u64,
}

impl Budget {
    fn charge(&mut self, amount: u64) -> Result<()> {
        self.spent = self.spent.saturating_add(amount);
        if self.spent > self.cap {
            Err(Error::BudgetExceeded { spent: self.spent, budget: self.cap })
        } else {
            Ok(())
        }
    }
}

/// Objective of a fixed tuple: minimum pairwise distance, and minimum
/// boundary distance when the flag includes it.
fn tuple_value(points: &[Point], poly: &Polytope, flag: BoundaryFlag) -> f64 {
    let mut best = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        if flag.with_boundary {
            best = best.min(poly.signed_boundary_distance(p).max(0.0));
        }
        for q in &points[i + 1..] {
            best = best.min(p.distance(q));
        }
    }
    best
}

/// Brute-force maximin dispersion of n points over a grid of
/// `grid_res`^k candidate positions inside P (k in {1, 2}).
///
/// Returns the best value found and its witness; the value is the exact
/// minimum of the witness tuple, hence a lower bound on the true optimum,
/// converging to it as the grid refines. Deterministic: ties break to the
/// lexicographically smallest witness. `budget` caps the total search work
/// in candidate evaluations.
pub fn brute_force_disp(
    n: usize,
    poly: &Polytope,
    flag: BoundaryFlag,
    grid_res: usize,
    budget: u64,
) -> Result<(f64, Vec<Point>)> {
    if n < 1 {
        return Err(Error::InvalidArgument("oracle requires n >= 1".into()));
    }
    if grid_res < 2 {
        return Err(Error::InvalidArgument("oracle requires grid_res >= 2".into()));
    }
    if !flag.with_boundary && n < 2 {
        return Err(Error::InvalidArgument(
            "the pairwise-only objective is undefined for a single point".into(),
        ));
    }
    let mut bdg = Budget { spent: 0, cap: budget };
    match poly.dim {
        1 => oracle_1d(n, poly, flag, grid_res, &mut bdg),
        2 => oracle_2d(n, poly, flag, grid_res, &mut bdg),
        k => Err(Error::InvalidArgument(format!(
            "oracle supports dimensions 1 and 2, polytope has {k}"
        ))),
    }
}

/// Exact 1-D grid maximin: bisection on the threshold with a left-to-right
/// greedy feasibility sweep (the greedy is exact in one dimension).
fn oracle_1d(
    n: usize,
    poly: &Polytope,
    flag: BoundaryFlag,
    res: usize,
    bdg: &mut Budget,
) -> Result<(f64, Vec<Point>)> {
    let (lo, hi) = (poly.bbox.0.coords[0], poly.bbox.1.coords[0]);
    let h = (hi - lo) / (res - 1) as f64;
    bdg.charge(res as u64)?;
    let mut xs: Vec<f64> = Vec::with_capacity(res);
    let mut bds: Vec<f64> = Vec::with_capacity(res);
    for t in 0..res {
        let x = lo + t as f64 * h;
        let p = Point::new(vec![x]);
        if poly.contains(&p) {
            xs.push(x);
            bds.push(poly.signed_boundary_distance(&p).max(0.0));
        }
    }
    if xs.len() < n {
        return Err(Error::InvalidArgument(format!(
            "only {} grid candidates inside the polytope, need {n}",
            xs.len()
        )));
    }

    // Greedy feasibility: place each point at the leftmost admissible
    // candidate; exact because moving a point left never hurts later ones.
    let feasible = |d: f64, bdg: &mut Budget| -> Result<Option<Vec<usize>>> {
        let mut picks = Vec::with_capacity(n);
        let mut i = 0usize;
        for _ in 0..n {
            while i < xs.len() {
                bdg.charge(1)?;
                let ok_bd = !flag.with_boundary || bds[i] >= d;
                let ok_gap = picks
                    .last()
                    .is_none_or(|&p: &usize| xs[i] - xs[p] >= d);
                if ok_bd && ok_gap {
                    break;
                }
                i += 1;
            }
            if i == xs.len() {
                return Ok(None);
            }
            picks.push(i);
            i += 1;
        }
        Ok(Some(picks))
    };

    let mut d_lo = 0.0;
    let mut d_hi = 2.0 * (hi - lo);
    let mut witness = feasible(0.0, bdg)?.expect("enough candidates for threshold 0");
    for _ in 0..100 {
        let mid = 0.5 * (d_lo + d_hi);
        match feasible(mid, bdg)? {
            Some(w) => {
                witness = w;
                d_lo = mid;
            }
            None => d_hi = mid,
        }
    }
    let points: Vec<Point> = witness.iter().map(|&i| Point::new(vec![xs[i]])).collect();
    Ok((tuple_value(&points, poly, flag), points))
}

/// Candidate grid for one resolution: lexicographically ordered in-polytope
/// positions with precomputed boundary distances.
struct Grid2 {
    res: usize,
    h: [f64; 2],
    lo: [f64; 2],
    pts: Vec<Point>,
    bds: Vec<f64>,
}

impl Grid2 {
    fn build(poly: &Polytope, res: usize, bdg: &mut Budget) -> Result<Self> {
        let lo = [poly.bbox.0.coords[0], poly.bbox.0.coords[1]];
        let hi = [poly.bbox.1.coords[0], poly.bbox.1.coords[1]];
        let h = [(hi[0] - lo[0]) / (res - 1) as f64, (hi[1] - lo[1]) / (res - 1) as f64];
        bdg.charge((res * res) as u64)?;
        let mut pts = Vec::new();
        let mut bds = Vec::new();
        for ix in 0..res {
            for iy in 0..res {
                let p = Point::new(vec![lo[0] + ix as f64 * h[0], lo[1] + iy as f64 * h[1]]);
                if poly.contains(&p) {
                    bds.push(poly.signed_boundary_distance(&p).max(0.0));
                    pts.push(p);
                }
            }
        }
        Ok(Self { res, h, lo, pts, bds })
    }

    /// Nearest grid index pair for a continuous position.
    fn snap_index(&self, p: &Point) -> [i64; 2] {
        [
            ((p.coords[0] - self.lo[0]) / self.h[0]).round() as i64,
            ((p.coords[1] - self.lo[1]) / self.h[1]).round() as i64,
        ]
    }

    fn point_at(&self, idx: [i64; 2]) -> Option<Point> {
        let r = self.res as i64;
        (idx[0] >= 0 && idx[0] < r && idx[1] >= 0 && idx[1] < r).then(|| {
            Point::new(vec![
                self.lo[0] + idx[0] as f64 * self.h[0],
                self.lo[1] + idx[1] as f64 * self.h[1],
            ])
        })
    }
}

/// One point's own objective at `pos`: its boundary distance (when the flag
/// includes it) and its distances to the other tuple members.
fn local_objective(
    pos: &Point,
    tuple: &[Point],
    skip: usize,
    poly: &Polytope,
    flag: BoundaryFlag,
) -> f64 {
    let mut v = if flag.with_boundary {
        poly.signed_boundary_distance(pos).max(0.0)
    } else {
        f64::INFINITY
    };
    for (j, q) in tuple.iter().enumerate() {
        if j != skip {
            v = v.min(pos.distance(q));
        }
    }
    v
}

/// Deterministic coordinate ascent: repeatedly move each point to the
/// position in a small index window that strictly improves the point's own
/// local objective, until a full pass improves nothing.
///
/// Maximizing the local objective (not the whole tuple's minimum) matters:
/// the global minimum plateaus as soon as two symmetric constraints bind,
/// while local improvements keep walking each point toward the balanced
/// configuration and never decrease the global minimum.
fn local_ascent(
    tuple: &mut [Point],
    grid: &Grid2,
    poly: &Polytope,
    flag: BoundaryFlag,
    window: i64,
    bdg: &mut Budget,
) -> Result<f64> {
    for _pass in 0..200 {
        let mut improved = false;
        for i in 0..tuple.len() {
            let center = grid.snap_index(&tuple[i]);
            let mut best_pos = tuple[i].clone();
            let mut best_val = local_objective(&tuple[i], tuple, i, poly, flag);
            for dx in -window..=window {
                for dy in -window..=window {
                    bdg.charge(1)?;
                    let Some(cand) = grid.point_at([center[0] + dx, center[1] + dy]) else {
                        continue;
                    };
                    if !poly.contains(&cand) {
                        continue;
                    }
                    let v = local_objective(&cand, tuple, i, poly, flag);
                    if v > best_val {
                        best_val = v;
                        best_pos = cand;
                        improved = true;
                    }
                }
            }
            tuple[i] = best_pos;
        }
        if !improved {
            break;
        }
    }
    Ok(tuple_value(tuple, poly, flag))
}

/// Exact branch-and-bound maximin over the candidates of one (coarse) grid.
/// Explores tuples in lexicographic order with strict-improvement pruning,
/// so the first optimal witness found is the lexicographically least.
fn coarse_exact(
    n: usize,
    grid: &Grid2,
    flag: BoundaryFlag,
    seed_value: f64,
    bdg: &mut Budget,
) -> Result<Option<Vec<usize>>> {
    let m = grid.pts.len();
    let mut best = seed_value;
    let mut witness: Option<Vec<usize>> = None;
    // minds[level][j]: min distance from candidate j to the tuple prefix
    // chosen[0..=level]. prefix_val[level]: the prefix tuple's own minimum.
    let mut minds: Vec<Vec<f64>> = vec![vec![f64::INFINITY; m]; n];
    let mut prefix_val: Vec<f64> = vec![f64::INFINITY; n + 1];
    let mut chosen: Vec<usize> = Vec::with_capacity(n);

    // Iterative DFS over (level, next index to try).
    let mut frame: Vec<usize> = vec![0; n + 1];
    let mut level = 0usize;
    loop {
        if frame[level] >= m + level + 1 - n {
            // Exhausted this level.
            if level == 0 {
                break;
            }
            level -= 1;
            chosen.pop();
            frame[level] += 1;
            continue;
        }
        let i = frame[level];
        bdg.charge(1)?;
        let mut v = prefix_val[level];
        if level > 0 {
            v = v.min(minds[level - 1][i]);
        }
        if flag.with_boundary {
            v = v.min(grid.bds[i]);
        }
        if v <= best {
            frame[level] += 1;
            continue;
        }
        if level + 1 == n {
            best = v;
            let mut w = chosen.clone();
            w.push(i);
            witness = Some(w);
            frame[level] += 1;
            continue;
        }
        // Descend: fold candidate i's distances into the next level's map.
        bdg.charge((m - i) as u64)?;
        let (lower, upper) = minds.split_at_mut(level);
        let src: &[f64] = if level == 0 { &[] } else { &lower[level - 1] };
        for j in (i + 1)..m {
            let prev = if level == 0 { f64::INFINITY } else { src[j] };
            upper[0][j] = prev.min(grid.pts[i].distance(&grid.pts[j]));
        }
        chosen.push(i);
        prefix_val[level + 1] = v;
        level += 1;
        frame[level] = i + 1;
    }
    Ok(witness)
}

fn oracle_2d(
    n: usize,
    poly: &Polytope,
    flag: BoundaryFlag,
    res: usize,
    bdg: &mut Budget,
) -> Result<(f64, Vec<Point>)> {
    // Coarsen until exhaustive search is tractable (tighter for larger
    // tuples), then refine back up.
    let coarse_target: usize = match n {
        0..=4 => 360,
        5 => 190,
        _ => 96,
    };
    let mut ladder = vec![res];
    let grid = Grid2::build(poly, res, bdg)?;
    if grid.pts.is_empty() {
        return Err(Error::InvalidArgument(
            "no grid candidate lies inside the polytope".into(),
        ));
    }
    if grid.pts.len() < n {
        return Err(Error::InvalidArgument(format!(
            "only {} grid candidates inside the polytope, need {n}",
            grid.pts.len()
        )));
    }
    let mut coarse = grid;
    while coarse.pts.len() > coarse_target && coarse.res > 5 {
        let next = (coarse.res - 1) / 2 + 1;
        ladder.push(next);
        coarse = Grid2::build(poly, next, bdg)?;
    }
    ladder.reverse();

    if coarse.pts.len() < n {
        return Err(Error::InvalidArgument(format!(
            "coarse grid keeps only {} candidates inside the polytope, need {n}",
            coarse.pts.len()
        )));
    }

    // Farthest-point greedy incumbent on the coarse grid.
    let mut tuple: Vec<Point> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best_i = usize::MAX;
        let mut best_v = f64::NEG_INFINITY;
        for (i, p) in coarse.pts.iter().enumerate() {
            bdg.charge(1)?;
            let mut v = if flag.with_boundary { coarse.bds[i] } else { f64::INFINITY };
            for q in &tuple {
                v = v.min(p.distance(q));
            }
            if tuple.is_empty() && !flag.with_boundary {
                // Any lone first point works; take the lexicographic least.
                v = 0.0;
            }
            if v > best_v {
                best_v = v;
                best_i = i;
            }
        }
        tuple.push(coarse.pts[best_i].clone());
    }
    let incumbent = local_ascent(&mut tuple, &coarse, poly, flag, 2, bdg)?;

    // Exact optimum on the coarse grid (strictly better than the incumbent
    // minus epsilon, so equal-value lexicographic improvements still win).
    if let Some(w) = coarse_exact(n, &coarse, flag, incumbent - 1e-12, bdg)? {
        tuple = w.iter().map(|&i| coarse.pts[i].clone()).collect();
    }

    // Walk the resolution ladder, snapping and locally improving.
    for &r in &ladder[1..] {
        let grid = Grid2::build(poly, r, bdg)?;
        for i in 0..n {
            let c = grid.snap_index(&tuple[i]);
            // Snap to the in-polytope candidate near the old position that
            // best serves this point's own objective, holding the rest of
            // the tuple fixed. Consecutive grids need not share lattice
            // points, so the old position may not exist on the new grid.
            let mut best: Option<(f64, Point)> = None;
            for dx in -2i64..=2 {
                for dy in -2i64..=2 {
                    bdg.charge(1)?;
                    let Some(cand) = grid.point_at([c[0] + dx, c[1] + dy]) else { continue };
                    if !poly.contains(&cand) {
                        continue;
                    }
                    let v = local_objective(&cand, &tuple, i, poly, flag);
                    let better = match &best {
                        None => true,
                        Some((bv, bp)) => {
                            v > *bv
                                || (v == *bv && cand.lex_cmp(bp) == std::cmp::Ordering::Less)
                        }
                    };
                    if better {
                        best = Some((v, cand));
                    }
                }
            }
            let (_, cand) = best.ok_or_else(|| {
                Error::InvalidArgument("refinement window left the polytope".into())
            })?;
            tuple[i] = cand;
        }
        local_ascent(&mut tuple, &grid, poly, flag, 3, bdg)?;
    }
    Ok((tuple_value(&tuple, poly, flag), tuple))
}
