//! Points, halfspace polytopes, and the dispersion/packing conversion.
//!
//! A container is a convex polytope given in halfspace form `a·p <= b`
//! together with a bounding box, a covering rate, and optionally the radius
//! of its insphere. The bounding box and covering rate are trusted input:
//! computing a maximum inscribed cube is deliberately out of scope, the
//! polytope description plays the role of an oracle.

use serde::{Deserialize, Serialize};

use crate::{tol, Error, Result};

/// A k-dimensional location, unitless, in the polytope's own coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Euclidean distance.
    ///
    /// Panics if the dimensions differ; mixing dimensions is a programming
    /// error, not a data condition.
    pub fn distance(&self, other: &Point) -> f64 {
        assert_eq!(
            self.dim(),
            other.dim(),
            "dimension mismatch: {} vs {}",
            self.dim(),
            other.dim()
        );
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Total lexicographic order on coordinate vectors; used as the
    /// deterministic tie-break everywhere a rule says "pick any".
    pub fn lex_cmp(&self, other: &Point) -> std::cmp::Ordering {
        for (a, b) in self.coords.iter().zip(&other.coords) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.dim().cmp(&other.dim())
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// One constraint `normal · p <= offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    /// Signed residual `offset - normal·p`, normalized by `|normal|`:
    /// the distance of `p` to the constraint plane, negative outside.
    fn signed_distance(&self, p: &Point) -> f64 {
        let dot: f64 = self.normal.iter().zip(&p.coords).map(|(a, c)| a * c).sum();
        let norm: f64 = self.normal.iter().map(|a| a * a).sum::<f64>().sqrt();
        (self.offset - dot) / norm
    }

    /// Raw residual `normal·p - offset` (positive outside), used for the
    /// absolute containment tolerance.
    fn raw_excess(&self, p: &Point) -> f64 {
        let dot: f64 = self.normal.iter().zip(&p.coords).map(|(a, c)| a * c).sum();
        dot - self.offset
    }
}

/// Whether the distance to the container boundary participates in the
/// objective. With the boundary term the objective is full dispersion; without
/// it only pairwise distances count, so the objective is undefined until two
/// points are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryFlag {
    pub with_boundary: bool,
}

impl BoundaryFlag {
    pub const WITH_BOUNDARY: BoundaryFlag = BoundaryFlag { with_boundary: true };
    pub const PAIRWISE_ONLY: BoundaryFlag = BoundaryFlag { with_boundary: false };
}

/// Convex polytope in halfspace form.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    pub dim: usize,
    pub halfspaces: Vec<Halfspace>,
    /// Axis-aligned bounding box (lo, hi); trusted to contain the feasible
    /// region.
    pub bbox: (Point, Point),
    /// Edge-length ratio of the maximum inscribed cube to the minimum
    /// bounding cube, in (0, 1]; trusted input.
    pub covering_rate: f64,
    /// Radius of the insphere, if known; enables the dispersion/packing
    /// conversion.
    pub insphere_radius: Option<f64>,
    /// Short name for reports ("segment", "square", "cube3", or "custom").
    pub name: String,
}

impl Polytope {
    pub fn new(
        dim: usize,
        halfspaces: Vec<Halfspace>,
        bbox: (Point, Point),
        covering_rate: f64,
        insphere_radius: Option<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPolytope("dimension must be >= 1".into()));
        }
        if halfspaces.is_empty() {
            return Err(Error::InvalidPolytope("no halfspaces".into()));
        }
        for (i, h) in halfspaces.iter().enumerate() {
            if h.normal.len() != dim {
                return Err(Error::InvalidPolytope(format!(
                    "halfspace {i} has dimension {} (expected {dim})",
                    h.normal.len()
                )));
            }
            if h.normal.iter().map(|a| a * a).sum::<f64>() == 0.0 {
                return Err(Error::InvalidPolytope(format!("halfspace {i} has zero normal")));
            }
            if !h.normal.iter().all(|a| a.is_finite()) || !h.offset.is_finite() {
                return Err(Error::InvalidPolytope(format!("halfspace {i} is not finite")));
            }
        }
        if bbox.0.dim() != dim || bbox.1.dim() != dim {
            return Err(Error::InvalidPolytope("bounding box dimension mismatch".into()));
        }
        let mut shortest_edge = f64::INFINITY;
        for (lo, hi) in bbox.0.coords.iter().zip(&bbox.1.coords) {
            if !(lo < hi) {
                return Err(Error::InvalidPolytope("bounding box edges must have positive length".into()));
            }
            shortest_edge = shortest_edge.min(hi - lo);
        }
        if !(covering_rate > 0.0 && covering_rate <= 1.0) {
            return Err(Error::InvalidPolytope(format!(
                "covering rate {covering_rate} outside (0, 1]"
            )));
        }
        if let Some(x) = insphere_radius {
            if !(x > 0.0) || x > shortest_edge / 2.0 + tol::CONTAINMENT_ABS {
                return Err(Error::InvalidPolytope(format!(
                    "insphere radius {x} outside (0, {}]",
                    shortest_edge / 2.0
                )));
            }
        }
        Ok(Self {
            dim,
            halfspaces,
            bbox,
            covering_rate,
            insphere_radius,
            name: "custom".into(),
        })
    }

    fn axis_box(dim: usize, lo: f64, hi: f64) -> (Vec<Halfspace>, (Point, Point)) {
        let mut hs = Vec::with_capacity(2 * dim);
        for axis in 0..dim {
            let mut up = vec![0.0; dim];
            up[axis] = 1.0;
            hs.push(Halfspace { normal: up, offset: hi });
            let mut down = vec![0.0; dim];
            down[axis] = -1.0;
            hs.push(Halfspace { normal: down, offset: -lo });
        }
        let bbox = (Point::new(vec![lo; dim]), Point::new(vec![hi; dim]));
        (hs, bbox)
    }

    /// The unit segment [0, 1].
    pub fn unit_segment() -> Self {
        let (hs, bbox) = Self::axis_box(1, 0.0, 1.0);
        let mut p = Self::new(1, hs, bbox, 1.0, Some(0.5)).expect("valid by construction");
        p.name = "segment".into();
        p
    }

    /// The unit square [0, 1]^2.
    pub fn unit_square() -> Self {
        let (hs, bbox) = Self::axis_box(2, 0.0, 1.0);
        let mut p = Self::new(2, hs, bbox, 1.0, Some(0.5)).expect("valid by construction");
        p.name = "square".into();
        p
    }

    /// The unit cube [0, 1]^k.
    pub fn unit_cube(dim: usize) -> Self {
        let (hs, bbox) = Self::axis_box(dim, 0.0, 1.0);
        let mut p = Self::new(dim, hs, bbox, 1.0, Some(0.5)).expect("valid by construction");
        p.name = if dim == 3 { "cube3".into() } else { format!("cube{dim}") };
        p
    }

    /// Construct a built-in container by name.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "segment" => Ok(Self::unit_segment()),
            "square" => Ok(Self::unit_square()),
            "cube3" => Ok(Self::unit_cube(3)),
            other => Err(Error::InvalidArgument(format!(
                "unknown built-in polytope {other:?} (expected segment, square, or cube3)"
            ))),
        }
    }

    /// Membership with an absolute tolerance on the raw halfspace residuals;
    /// boundary points count as inside.
    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim
            && self
                .halfspaces
                .iter()
                .all(|h| h.raw_excess(p) <= tol::CONTAINMENT_ABS)
    }

    /// Minimum normalized distance of `p` to the constraint planes; negative
    /// when `p` violates some halfspace.
    pub fn signed_boundary_distance(&self, p: &Point) -> f64 {
        self.halfspaces
            .iter()
            .map(|h| h.signed_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from an interior point to the boundary.
    pub fn boundary_distance(&self, p: &Point) -> Result<f64> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch { left: p.dim(), right: self.dim });
        }
        for (i, h) in self.halfspaces.iter().enumerate() {
            let excess = h.raw_excess(p);
            if excess > tol::CONTAINMENT_ABS {
                return Err(Error::OutsidePolytope { halfspace: i, residual: excess });
            }
        }
        // Containment allows a residual up to the tolerance, so clamp the
        // tiny negative distances that produces.
        Ok(self.signed_boundary_distance(p).max(0.0))
    }

    /// Longest bounding-box edge: the edge length of the minimum bounding
    /// cube used for normalization and scaled reference bounds.
    pub fn bounding_cube_edge(&self) -> f64 {
        self.bbox
            .0
            .coords
            .iter()
            .zip(&self.bbox.1.coords)
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max)
    }
}

/// Minimum distance of a point set: pairwise distances, plus each point's
/// boundary distance when the flag includes the boundary term.
///
/// Returns `None` where the objective is undefined: no points at all, or a
/// single point under the pairwise-only objective. Positions are trusted to
/// lie inside the polytope; validation happens where traces are built.
pub fn d_min(points: &[Point], poly: &Polytope, flag: BoundaryFlag) -> Option<f64> {
    let need = if flag.with_boundary { 1 } else { 2 };
    if points.len() < need {
        return None;
    }
    let mut best = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        if flag.with_boundary {
            best = best.min(poly.signed_boundary_distance(p).max(0.0));
        }
        for q in &points[i + 1..] {
            best = best.min(p.distance(q));
        }
    }
    Some(best)
}

/// Dispersion value from the dispersal-packing radius, through the insphere
/// radius `x`: `2·x·dp / (x + dp)`.
pub fn disp_from_dp(dp: f64, x: f64) -> Result<f64> {
    if !(dp > 0.0) || !(x > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "disp_from_dp requires positive inputs, got dp={dp}, x={x}"
        )));
    }
    Ok(2.0 * x * dp / (x + dp))
}

/// Inverse of [`disp_from_dp`]: `x·disp / (2x - disp)`.
///
/// The conversion has a pole at `disp = 2x` (a dispersion value can never
/// reach the insphere diameter), so `disp` must lie in (0, 2x).
pub fn dp_from_disp(disp: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !(disp > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dp_from_disp requires positive inputs, got disp={disp}, x={x}"
        )));
    }
    if disp >= 2.0 * x {
        return Err(Error::InvalidArgument(format!(
            "dp_from_disp: disp={disp} is not below the pole 2x={}",
            2.0 * x
        )));
    }
    Ok(x * disp / (2.0 * x - disp))
}

/// Serialized polytope layout: halfspace rows are `[a_1, .., a_k, b]`.
#[derive(Serialize, Deserialize)]
struct PolytopeJson {
    dim: usize,
    halfspaces: Vec<Vec<f64>>,
    bbox: [Vec<f64>; 2],
    covering_rate: f64,
    insphere_radius: Option<f64>,
}

impl Polytope {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: PolytopeJson = serde_json::from_str(text)
            .map_err(|e| Error::InvalidPolytope(format!("bad JSON: {e}")))?;
        let mut halfspaces = Vec::with_capacity(raw.halfspaces.len());
        for (i, row) in raw.halfspaces.iter().enumerate() {
            if row.len() != raw.dim + 1 {
                return Err(Error::InvalidPolytope(format!(
                    "halfspace row {i} has {} entries (expected {} coefficients plus offset)",
                    row.len(),
                    raw.dim
                )));
            }
            halfspaces.push(Halfspace {
                normal: row[..raw.dim].to_vec(),
                offset: row[raw.dim],
            });
        }
        let [lo, hi] = raw.bbox;
        Self::new(
            raw.dim,
            halfspaces,
            (Point::new(lo), Point::new(hi)),
            raw.covering_rate,
            raw.insphere_radius,
        )
    }

    pub fn to_json(&self) -> String {
        let raw = PolytopeJson {
            dim: self.dim,
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| {
                    let mut row = h.normal.clone();
                    row.push(h.offset);
                    row
                })
                .collect(),
            bbox: [self.bbox.0.coords.clone(), self.bbox.1.coords.clone()],
            covering_rate: self.covering_rate,
            insphere_radius: self.insphere_radius,
        };
        serde_json::to_string_pretty(&raw).expect("plain data serializes")
    }
}
