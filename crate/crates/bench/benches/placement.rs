//! Throughput of the placement algorithms on insert-only staircases, the
//! brute-force oracle, and the offline integral reduction. Staircases are
//! the natural workload: every arrival raises the occupancy, so the per-event
//! cost is exercised at every size up to n.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use disperse_core::adversary::{adaptive_cd_adversary, gen_random, gen_sequential};
use disperse_core::algo1d::{build_harmonic_config, ExactLineState, LineState};
use disperse_core::algo2d::{build_square_config, SquareState};
use disperse_core::algokd::{build_greedy_config, GreedyState, SegmentGreedyState};
use disperse_core::bounds::{brute_force_disp, DEFAULT_ORACLE_BUDGET};
use disperse_core::cd_reduction::run_acd;
use disperse_core::sim::simulate;
use disperse_core::{BoundaryFlag, OnlineAlgorithm, Polytope};

const FLAG: BoundaryFlag = BoundaryFlag::WITH_BOUNDARY;

fn staircase(c: &mut Criterion) {
    let mut group = c.benchmark_group("staircase-4096");
    group.sample_size(10);
    let seg = Polytope::unit_segment();
    let square = Polytope::unit_square();
    let seq = gen_sequential(4096).unwrap();

    let line_cfg = build_harmonic_config(3).unwrap();
    group.bench_function("line-l3", |b| {
        b.iter_batched(
            || LineState::new(line_cfg.clone()),
            |mut algo| simulate(&seq, &mut algo as &mut dyn OnlineAlgorithm, &seg, FLAG).unwrap(),
            BatchSize::LargeInput,
        )
    });

    group.bench_function("line-exact", |b| {
        b.iter_batched(
            ExactLineState::new,
            |mut algo| simulate(&seq, &mut algo as &mut dyn OnlineAlgorithm, &seg, FLAG).unwrap(),
            BatchSize::LargeInput,
        )
    });

    let square_cfg = build_square_config(1.271).unwrap();
    group.bench_function("square", |b| {
        b.iter_batched(
            || SquareState::new(square_cfg.clone()),
            |mut algo| {
                simulate(&seq, &mut algo as &mut dyn OnlineAlgorithm, &square, FLAG).unwrap()
            },
            BatchSize::LargeInput,
        )
    });

    group.bench_function("greedy-segment", |b| {
        b.iter_batched(
            SegmentGreedyState::new,
            |mut algo| simulate(&seq, &mut algo as &mut dyn OnlineAlgorithm, &seg, FLAG).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn greedy_grid_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("greedy");
    group.sample_size(10);
    let square = Polytope::unit_square();
    let seq = gen_sequential(64).unwrap();
    let cfg = build_greedy_config(0.1, 1.0, FLAG).unwrap();
    group.bench_function("staircase-64-eps0.1", |b| {
        b.iter_batched(
            || GreedyState::new(cfg, square.clone()).unwrap(),
            |mut algo| {
                simulate(&seq, &mut algo as &mut dyn OnlineAlgorithm, &square, FLAG).unwrap()
            },
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    let square = Polytope::unit_square();
    group.bench_function("square-n4-res41", |b| {
        b.iter(|| brute_force_disp(4, &square, FLAG, 41, DEFAULT_ORACLE_BUDGET).unwrap())
    });
    group.finish();
}

fn integral_reduction(c: &mut Criterion) {
    let mut group = c.benchmark_group("cd-reduction");
    group.sample_size(10);
    let seg = Polytope::unit_segment();
    let seq = gen_random(100, 5, 50.0).unwrap();
    let cfg = build_harmonic_config(3).unwrap();
    group.bench_function("random-100-line-l3", |b| {
        b.iter_batched(
            || LineState::new(cfg.clone()),
            |mut algo| run_acd(&seq, &mut algo as &mut dyn OnlineAlgorithm, &seg, FLAG).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn adversary(c: &mut Criterion) {
    let mut group = c.benchmark_group("adversary");
    group.sample_size(10);
    let seg = Polytope::unit_segment();
    group.bench_function("adaptive-cd-n32", |b| {
        b.iter_batched(
            SegmentGreedyState::new,
            |mut algo| {
                adaptive_cd_adversary(&mut algo as &mut dyn OnlineAlgorithm, 32, 1000.0, &seg, FLAG)
                    .unwrap()
            },
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, staircase, greedy_grid_search, oracle, integral_reduction, adversary);
criterion_main!(benches);
