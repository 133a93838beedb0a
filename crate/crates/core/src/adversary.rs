//! Instance generators: stress families with known structure plus the
//! adaptive adversary that punishes greedy placement on the integral
//! objective.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::events::{EventSequence, PlacementTrace};
use crate::geometry::{BoundaryFlag, Point, Polytope};
use crate::sim::{simulate, OnlineAlgorithm};
use crate::{Error, Result};

/// A reproducible instance family with its parameters. `generate` covers
/// the closed-form and seeded families; the adaptive family needs a live
/// algorithm handle and runs through [`adaptive_cd_adversary`] instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorSpec {
    Sequential { n: usize },
    ThreeStage { r: usize },
    Random { n: usize, seed: u64, horizon: f64 },
    InsertOnlyRandom { n: usize, seed: u64, horizon: f64 },
    AdaptiveCd { n: usize, t: f64 },
}

impl GeneratorSpec {
    /// Instantiate the family. Errors with `Incompatible` for the adaptive
    /// family, which cannot be generated without an algorithm to observe.
    pub fn generate(&self) -> Result<EventSequence> {
        match *self {
            GeneratorSpec::Sequential { n } => gen_sequential(n),
            GeneratorSpec::ThreeStage { r } => gen_three_stage(r),
            GeneratorSpec::Random { n, seed, horizon } => gen_random(n, seed, horizon),
            GeneratorSpec::InsertOnlyRandom { n, seed, horizon } => {
                gen_insert_only_random(n, seed, horizon)
            }
            GeneratorSpec::AdaptiveCd { .. } => Err(Error::Incompatible(
                "the adaptive family reacts to an algorithm's placements; \
                 drive it with adaptive_cd_adversary instead of generate"
                    .into(),
            )),
        }
    }
}

/// Staircase arrivals: point i arrives at time i (1-based) and everything
/// departs together at n + 1, so occupancy ramps up one point at a time and
/// peaks at n.
pub fn gen_sequential(n: usize) -> Result<EventSequence> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "sequential family needs at least one point".into(),
        ));
    }
    let d = (n + 1) as f64;
    let pairs: Vec<(f64, f64)> = (1..=n).map(|i| (i as f64, d)).collect();
    EventSequence::from_pairs(&pairs)
}

/// Two-wave arrivals: r - 1 points land at time 0, then r more land one per
/// unit time at 1..r, and all 2r - 1 depart together at r + 1. The second
/// wave forces an online algorithm to refine a configuration it already
/// committed to.
pub fn gen_three_stage(r: usize) -> Result<EventSequence> {
    if r < 2 {
        return Err(Error::InvalidArgument(
            "three-stage family needs r >= 2".into(),
        ));
    }
    let d = (r + 1) as f64;
    let mut pairs = vec![(0.0, d); r - 1];
    pairs.extend((1..=r).map(|i| (i as f64, d)));
    EventSequence::from_pairs(&pairs)
}

fn check_random_params(n: usize, horizon: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "random families need at least one point".into(),
        ));
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "horizon must be a positive finite time, got {horizon}"
        )));
    }
    Ok(())
}

/// Seeded uniform lifetimes: arrivals uniform over [0, horizon), departures
/// uniform over (arrival, horizon], ids assigned in arrival order. The same
/// (n, seed, horizon) reproduces the sequence bit for bit.
pub fn gen_random(n: usize, seed: u64, horizon: f64) -> Result<EventSequence> {
    check_random_params(n, horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let s = rng.gen_range(0.0..horizon);
            // 1 - u lies in (0, 1], putting d in (s, horizon]; rounding can
            // still collapse d onto s, so retry on the degenerate draw.
            loop {
                let d = s + (horizon - s) * (1.0 - rng.gen::<f64>());
                if d > s {
                    break (s, d);
                }
            }
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    EventSequence::from_pairs(&pairs)
}

/// Seeded arrival-only load: arrivals uniform over [0, horizon), every
/// point departing together at the horizon. Under a shared departure the
/// worst slice of the timeline is the final one, so the integral and
/// anytime objectives rank algorithms identically.
pub fn gen_insert_only_random(n: usize, seed: u64, horizon: f64) -> Result<EventSequence> {
    check_random_params(n, horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(0.0..horizon), horizon))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    EventSequence::from_pairs(&pairs)
}

/// Adaptive integral-objective adversary. All n points arrive at time 0;
/// after observing the placements, the pair realizing the minimum distance
/// stays until `t` while everything else departs at time 1 (when the
/// boundary realizes the minimum, the single offending point stays
/// instead). A placement that ever lets two points sit close together is
/// thus charged for that closeness over almost the whole horizon.
///
/// The handle must be fresh. Returns the realized sequence together with
/// the algorithm's trace on it.
pub fn adaptive_cd_adversary(
    algo: &mut dyn OnlineAlgorithm,
    n: usize,
    t: f64,
    poly: &Polytope,
    flag: BoundaryFlag,
) -> Result<(EventSequence, PlacementTrace)> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "the adaptive adversary needs at least two points".into(),
        ));
    }
    if !t.is_finite() || t <= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "the retention time must exceed the departure time 1, got {t}"
        )));
    }
    let mut positions: Vec<Point> = Vec::with_capacity(n);
    for id in 0..n {
        positions.push(algo.on_arrive(id as u64)?);
    }

    // Closest pair, first (i, j) on ties.
    let mut pair = (0usize, 1usize);
    let mut pair_d = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let d = positions[i].distance(&positions[j]);
            if d < pair_d {
                pair_d = d;
                pair = (i, j);
            }
        }
    }
    // Closest boundary approach, if the boundary counts.
    let mut lone = 0usize;
    let mut lone_d = f64::INFINITY;
    if flag.with_boundary {
        for (i, p) in positions.iter().enumerate() {
            let d = poly.boundary_distance(p)?;
            if d < lone_d {
                lone_d = d;
                lone = i;
            }
        }
    }
    let kept: Vec<usize> = if pair_d <= lone_d {
        vec![pair.0, pair.1]
    } else {
        vec![lone]
    };

    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (0.0, if kept.contains(&i) { t } else { 1.0 }))
        .collect();
    let seq = EventSequence::from_pairs(&pairs)?;

    // Finish driving the handle through the realized departures.
    for id in 0..n {
        if !kept.contains(&id) {
            algo.on_depart(id as u64)?;
        }
    }
    for &id in &kept {
        algo.on_depart(id as u64)?;
    }

    // Replay the observed placements over the realized timeline to get a
    // validated, annotated trace of the run.
    let pos_of = positions
        .into_iter()
        .enumerate()
        .map(|(i, p)| (i as u64, p))
        .collect();
    let trace = simulate(&seq, &mut ReplayPositions { pos_of }, poly, flag)?;
    Ok((seq, trace))
}

struct ReplayPositions {
    pos_of: std::collections::HashMap<u64, Point>,
}

impl OnlineAlgorithm for ReplayPositions {
    fn on_arrive(&mut self, id: u64) -> Result<Point> {
        self.pos_of.get(&id).cloned().ok_or(Error::UnknownId(id))
    }

    fn on_depart(&mut self, id: u64) -> Result<()> {
        if self.pos_of.contains_key(&id) {
            Ok(())
        } else {
            Err(Error::UnknownId(id))
        }
    }
}
