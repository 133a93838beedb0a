//! Online placement in the unit square.
//!
//! The square is carved by an asymmetric 7x7 grid: three cells of edge `x`
//! against the left/bottom boundary, four cells of edge `c*x` against the
//! right/top, with `x = 1/(3+4c)`. The first 36 positions are the interior
//! grid vertices in a fixed order; afterwards the algorithm proceeds in
//! rounds, splitting every cell into four by creating centers and edge
//! midpoints region by region. Colored regions (green, pink, red, orange,
//! blue, yellow) drive the order; their per-case candidate counts have
//! closed forms that are re-verified at run time, and any mismatch is an
//! internal error.

use std::f64::consts::SQRT_2;

use crate::geometry::Point;
use crate::sim::{OnlineAlgorithm, PositionRegistry, ReuseOrder};
use crate::{Error, Result};

/// Default band ratio; keeps the worst-case ratio at (3+4c)/(4c).
pub const DEFAULT_C: f64 = 1.271;

/// Geometry shared by the placement algorithm and its predictors.
#[derive(Debug, Clone)]
pub struct SquareConfig {
    /// Band ratio, strictly between 1 and sqrt(2).
    pub c: f64,
    /// Small cell edge, `1/(3+4c)`.
    pub x: f64,
    /// Large cell edge, `c*x`.
    pub cx: f64,
    /// The 36 pre-fixed positions in creation order.
    pub q36: Vec<Point>,
}

/// Grid-vertex indices (a, b) of q_1..q_36 in creation order.
const Q36_INDICES: [(u64, u64); 36] = [
    (3, 3),
    (5, 5),
    (3, 5),
    (5, 3),
    (4, 4),
    (4, 2),
    (2, 4),
    (2, 2),
    (5, 4),
    (4, 5),
    (6, 6),
    (6, 5),
    (6, 4),
    (6, 3),
    (5, 6),
    (4, 6),
    (3, 6),
    (3, 4),
    (4, 3),
    (5, 2),
    (2, 5),
    (2, 3),
    (3, 2),
    (6, 2),
    (6, 1),
    (5, 1),
    (4, 1),
    (3, 1),
    (2, 1),
    (1, 1),
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (1, 6),
    (2, 6),
];

/// Coordinate of vertex index `t` on a grid refined `2^pow`-fold: the first
/// `3*2^pow` subunits have width `x/2^pow`, the rest `cx/2^pow`.
fn vertex_coord(x: f64, cx: f64, t: u64, pow: u32) -> f64 {
    let cap = 3u64 << pow;
    let xs = t.min(cap);
    let cs = t - xs;
    (xs as f64 * x + cs as f64 * cx) / (1u64 << pow) as f64
}

pub fn build_square_config(c: f64) -> Result<SquareConfig> {
    if !c.is_finite() || c <= 1.0 || c >= SQRT_2 {
        return Err(Error::InvalidArgument(format!(
            "band ratio must satisfy 1 < c < sqrt(2), got {c}"
        )));
    }
    let x = 1.0 / (3.0 + 4.0 * c);
    let cx = c * x;
    let q36 = Q36_INDICES
        .iter()
        .map(|&(a, b)| {
            Point::new(vec![
                vertex_coord(x, cx, a, 0),
                vertex_coord(x, cx, b, 0),
            ])
        })
        .collect();
    Ok(SquareConfig { c, x, cx, q36 })
}

/// Which regime position n falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SquareCase {
    /// One of the seven distance groups of the first 36 positions.
    Initial(u8),
    /// One of the five per-round cases.
    Round(u8),
}

/// Locates position n: round -1 with its distance group for n <= 36,
/// otherwise the round `i >= 0` with `(7*2^i-1)^2 < n <= (7*2^(i+1)-1)^2`
/// and the case whose range contains n.
pub fn case_of(n: u64) -> Result<(i64, SquareCase)> {
    if n == 0 {
        return Err(Error::InvalidArgument("positions are numbered from 1".into()));
    }
    if n <= 36 {
        let group = match n {
            1 => 1,
            2..=4 => 2,
            5 => 3,
            6..=7 => 4,
            8 => 5,
            9..=17 => 6,
            _ => 7,
        };
        return Ok((-1, SquareCase::Initial(group)));
    }
    if n > grid_total(28) {
        return Err(Error::InvalidArgument(format!(
            "position index {n} exceeds the supported range"
        )));
    }
    let mut i = 0u32;
    while grid_total(i + 1) < n {
        i += 1;
    }
    let p2 = 1u64 << i;
    let p4 = p2 * p2;
    let case = if n <= 65 * p4 - 22 * p2 + 2 {
        1
    } else if n <= 89 * p4 - 36 * p2 + 4 {
        2
    } else if n <= 98 * p4 - 42 * p2 + 5 {
        3
    } else if n <= 130 * p4 - 36 * p2 + 2 {
        4
    } else {
        5
    };
    Ok((i as i64, SquareCase::Round(case)))
}

/// Positions existing once round i completes: `(7*2^(i+1)-1)^2`.
/// `grid_total(0)` = 36, the pre-fixed set.
fn grid_total(i_plus_1: u32) -> u64 {
    let side = 7 * (1u64 << i_plus_1) - 1;
    side * side
}

/// Closed-form minimum distance (pairwise and to the square boundary) right
/// after position n is created, for sequential arrivals.
pub fn predicted_dmin_square(n: u64, cfg: &SquareConfig) -> Result<f64> {
    let (round, case) = case_of(n)?;
    let (x, cx) = (cfg.x, cfg.cx);
    match case {
        SquareCase::Initial(g) => Ok(match g {
            1 => 3.0 * x,
            2 => 2.0 * cx,
            3 => SQRT_2 * cx,
            4 => (1.0 + cfg.c * cfg.c).sqrt() * x,
            5 => SQRT_2 * x,
            6 => cx,
            _ => x,
        }),
        SquareCase::Round(case) => {
            let base = match case {
                1 => SQRT_2 * cx,
                2 => (1.0 + cfg.c * cfg.c).sqrt() * x,
                3 => SQRT_2 * x,
                4 => cx,
                _ => x,
            };
            Ok(base / (1u64 << (round as u32 + 1)) as f64)
        }
    }
}

/// Worst-case ratio ceiling of the square algorithm: `(3+4c)/(4c)`.
pub fn square_guarantee_ceiling(cfg: &SquareConfig) -> f64 {
    (3.0 + 4.0 * cfg.c) / (4.0 * cfg.c)
}

/// Inclusive cell-index rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rect {
    u0: u64,
    u1: u64,
    v0: u64,
    v1: u64,
}

impl Rect {
    fn contains(&self, u: u64, v: u64) -> bool {
        self.u0 <= u && u <= self.u1 && self.v0 <= v && v <= self.v1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Color {
    Green,
    Pink,
    Red,
    Orange,
    Blue,
    Yellow,
}

/// The colored areas entering a round, in units of the cells about to be
/// split. Outer strips (yellow, orange, blue) stay one cell wide; the
/// interior areas (green, pink, red) absorb whatever the strips release.
#[derive(Debug, Clone)]
struct RegionLayout {
    /// Cells per dimension: 7 * 2^round.
    m: u64,
    /// Index where the `cx` band starts: 3 * 2^round.
    b: u64,
    green: Vec<Rect>,
    pink: Vec<Rect>,
    red: Vec<Rect>,
    orange: Vec<Rect>,
    blue: Vec<Rect>,
    yellow: Vec<Rect>,
}

impl RegionLayout {
    /// Layout entering round 0, straight from the 36-position figure.
    fn initial() -> Self {
        let (m, b) = (7u64, 3u64);
        RegionLayout {
            m,
            b,
            green: vec![rect(b, m - 2, b, m - 2)],
            pink: vec![rect(1, b - 1, b, m - 2), rect(b, m - 2, 1, b - 1)],
            red: vec![rect(1, b - 1, 1, b - 1)],
            orange: vec![rect(m - 1, m - 1, b, m - 1), rect(b, m - 1, m - 1, m - 1)],
            blue: vec![rect(1, b - 1, m - 1, m - 1), rect(m - 1, m - 1, 1, b - 1)],
            yellow: vec![rect(0, 0, 0, m - 1), rect(0, m - 1, 0, 0)],
        }
    }

    /// End-of-round update. In the halved units the yellow, blue, and orange
    /// strips shrink back to single-cell width against their boundary; green
    /// takes the band released by orange, pink the band released by blue,
    /// and the yellow band goes to blue, pink, and red, so every interior
    /// area stays a rectangle (or a pair of them).
    fn advance(&mut self) {
        self.m *= 2;
        self.b *= 2;
        let (m, b) = (self.m, self.b);
        self.yellow = vec![rect(0, 0, 0, m - 1), rect(0, m - 1, 0, 0)];
        self.orange = vec![rect(m - 1, m - 1, b, m - 1), rect(b, m - 1, m - 1, m - 1)];
        self.blue = vec![rect(1, b - 1, m - 1, m - 1), rect(m - 1, m - 1, 1, b - 1)];
        self.green = vec![rect(b, m - 2, b, m - 2)];
        self.pink = vec![rect(1, b - 1, b, m - 2), rect(b, m - 2, 1, b - 1)];
        self.red = vec![rect(1, b - 1, 1, b - 1)];
    }

    fn color_of(&self, u: u64, v: u64) -> Color {
        let hit = |rs: &[Rect]| rs.iter().any(|r| r.contains(u, v));
        if hit(&self.green) {
            Color::Green
        } else if hit(&self.pink) {
            Color::Pink
        } else if hit(&self.red) {
            Color::Red
        } else if hit(&self.orange) {
            Color::Orange
        } else if hit(&self.blue) {
            Color::Blue
        } else {
            debug_assert!(hit(&self.yellow));
            Color::Yellow
        }
    }
}

fn rect(u0: u64, u1: u64, v0: u64, v1: u64) -> Rect {
    Rect { u0, u1, v0, v1 }
}

/// Creation stages of one round, in order. Centers split the cells of the
/// named region; the vertex stages walk the refined grid. Vertex stages
/// precede their sibling center stages so the per-case minimum distance
/// drops to its closed-form value at the first position of the case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    GreenCenters,
    PinkCenters,
    RedCenters,
    QuadVertices,
    OrangeBlueCenters,
    LeftoverVertices,
    YellowCenters,
    Done,
}

impl Stage {
    fn next(self) -> Stage {
        use Stage::*;
        match self {
            GreenCenters => PinkCenters,
            PinkCenters => RedCenters,
            RedCenters => QuadVertices,
            QuadVertices => OrangeBlueCenters,
            OrangeBlueCenters => LeftoverVertices,
            LeftoverVertices => YellowCenters,
            YellowCenters => Done,
            Done => Done,
        }
    }

    /// Case this stage contributes to (1-based).
    fn case(self) -> usize {
        use Stage::*;
        match self {
            GreenCenters => 1,
            PinkCenters => 2,
            RedCenters => 3,
            QuadVertices | OrangeBlueCenters => 4,
            LeftoverVertices | YellowCenters => 5,
            Done => 5,
        }
    }
}

/// Lazy row-major walk over one round's creations, verifying per-case
/// counts against their closed forms as each case completes.
#[derive(Debug)]
struct RoundCursor {
    round: u32,
    stage: Stage,
    /// Scan cursor: cell (u, v) for center stages, refined vertex for
    /// vertex stages. `v` is the outer (slow) axis.
    u: u64,
    v: u64,
    issued: [u64; 5],
    expected: [u64; 5],
}

impl RoundCursor {
    fn new(round: u32) -> Self {
        let p2 = 1u64 << round;
        let p4 = p2 * p2;
        let start = grid_total(round);
        let c1 = 65 * p4 - 22 * p2 + 2;
        let c2 = 89 * p4 - 36 * p2 + 4;
        let c3 = 98 * p4 - 42 * p2 + 5;
        let c4 = 130 * p4 - 36 * p2 + 2;
        let end = grid_total(round + 1);
        RoundCursor {
            round,
            stage: Stage::GreenCenters,
            u: 0,
            v: 0,
            issued: [0; 5],
            expected: [c1 - start, c2 - c1, c3 - c2, c4 - c3, end - c4],
        }
    }

    /// Eligibility of a refined vertex for the two vertex stages. Old-cell
    /// centers (both indices odd) belong to center stages and old vertices
    /// (both even) already exist, so only edge midpoints qualify. A quad
    /// vertex must touch the green or orange area and must not touch the
    /// blue or pink areas; every other midpoint is left over for case 5.
    fn midpoint_is_quad(layout: &RegionLayout, uu: u64, vv: u64) -> bool {
        // Interior vertex: all four touching refined cells exist, and each
        // refined cell inherits the color of the old cell containing it.
        debug_assert!(uu >= 1 && vv >= 1 && uu < 2 * layout.m && vv < 2 * layout.m);
        let mut any_go = false;
        for a in [uu - 1, uu] {
            for b in [vv - 1, vv] {
                match layout.color_of(a / 2, b / 2) {
                    Color::Green | Color::Orange => any_go = true,
                    Color::Pink | Color::Blue => return false,
                    _ => {}
                }
            }
        }
        any_go
    }

    /// Next creation of this round, or None when the round is complete.
    /// Emits refined-vertex coordinates at scale 2^(round+1).
    fn next(&mut self, layout: &RegionLayout) -> Result<Option<(u64, u64)>> {
        let m = layout.m;
        loop {
            match self.stage {
                Stage::GreenCenters
                | Stage::PinkCenters
                | Stage::RedCenters
                | Stage::OrangeBlueCenters
                | Stage::YellowCenters => {
                    while self.v < m {
                        let (u, v) = (self.u, self.v);
                        self.u += 1;
                        if self.u == m {
                            self.u = 0;
                            self.v += 1;
                        }
                        let color = layout.color_of(u, v);
                        let want = match self.stage {
                            Stage::GreenCenters => color == Color::Green,
                            Stage::PinkCenters => color == Color::Pink,
                            Stage::RedCenters => color == Color::Red,
                            Stage::OrangeBlueCenters => {
                                color == Color::Orange || color == Color::Blue
                            }
                            _ => color == Color::Yellow,
                        };
                        if want {
                            self.issued[self.stage.case() - 1] += 1;
                            return Ok(Some((2 * u + 1, 2 * v + 1)));
                        }
                    }
                }
                Stage::QuadVertices | Stage::LeftoverVertices => {
                    let side = 2 * m;
                    if self.u == 0 && self.v == 0 {
                        // Interior vertices start at 1.
                        self.u = 1;
                        self.v = 1;
                    }
                    while self.v < side {
                        let (uu, vv) = (self.u, self.v);
                        self.u += 1;
                        if self.u == side {
                            self.u = 1;
                            self.v += 1;
                        }
                        // Edge midpoints have exactly one odd coordinate.
                        if (uu + vv) % 2 == 0 {
                            continue;
                        }
                        let quad = Self::midpoint_is_quad(layout, uu, vv);
                        if quad == (self.stage == Stage::QuadVertices) {
                            self.issued[self.stage.case() - 1] += 1;
                            return Ok(Some((uu, vv)));
                        }
                    }
                }
                Stage::Done => return Ok(None),
            }
            // Scan exhausted: at case boundaries, check the count.
            let case = self.stage.case();
            let closes_case = matches!(
                self.stage,
                Stage::GreenCenters
                    | Stage::PinkCenters
                    | Stage::RedCenters
                    | Stage::OrangeBlueCenters
                    | Stage::YellowCenters
            );
            if closes_case && self.issued[case - 1] != self.expected[case - 1] {
                return Err(Error::Internal(format!(
                    "round {} case {case} created {} positions, expected {}",
                    self.round,
                    self.issued[case - 1],
                    self.expected[case - 1]
                )));
            }
            self.stage = self.stage.next();
            self.u = 0;
            self.v = 0;
        }
    }
}

/// Online placement state for the unit square.
pub struct SquareState {
    cfg: SquareConfig,
    registry: PositionRegistry,
    layout: RegionLayout,
    cursor: Option<RoundCursor>,
}

impl SquareState {
    pub fn new(cfg: SquareConfig) -> Self {
        Self {
            cfg,
            registry: PositionRegistry::new(ReuseOrder::RowMajor),
            layout: RegionLayout::initial(),
            cursor: None,
        }
    }

    pub fn config(&self) -> &SquareConfig {
        &self.cfg
    }

    pub fn created_positions(&self) -> usize {
        self.registry.created()
    }

    fn next_fresh(&mut self) -> Result<Point> {
        let n = self.registry.created() as u64;
        if n < 36 {
            return Ok(self.cfg.q36[n as usize].clone());
        }
        loop {
            if self.cursor.is_none() {
                self.cursor = Some(RoundCursor::new(0));
            }
            let cursor = self.cursor.as_mut().unwrap();
            if let Some((uu, vv)) = cursor.next(&self.layout)? {
                let pow = cursor.round + 1;
                return Ok(Point::new(vec![
                    vertex_coord(self.cfg.x, self.cfg.cx, uu, pow),
                    vertex_coord(self.cfg.x, self.cfg.cx, vv, pow),
                ]));
            }
            // Round complete: total created must match the refined grid.
            let round = cursor.round;
            if n != grid_total(round + 1) {
                return Err(Error::Internal(format!(
                    "round {round} ended with {n} positions, expected {}",
                    grid_total(round + 1)
                )));
            }
            self.layout.advance();
            self.cursor = Some(RoundCursor::new(round + 1));
        }
    }
}

impl OnlineAlgorithm for SquareState {
    fn on_arrive(&mut self, id: u64) -> Result<Point> {
        if let Some(p) = self.registry.occupy_vacant(id)? {
            return Ok(p);
        }
        let pos = self.next_fresh()?;
        self.registry.create(pos.clone(), id)?;
        Ok(pos)
    }

    fn on_depart(&mut self, id: u64) -> Result<()> {
        self.registry.depart(id).map(|_| ())
    }
}
