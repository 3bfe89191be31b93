//! Sequential versus rayon execution of the data-parallel stages.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fingersplit::cli::{plan_on, RunConfig};
use fingersplit::collision::CollisionProxy;
use fingersplit::context::PlanContext;
use fingersplit::cpo::{run_cpo, CpoParams};
use fingersplit::kinematics::HandModel;
use fingersplit::par::Execution;
use fingersplit::splitter::{map_parallel_grasp, seed_antipodal, SeedParams, SplitterParams};
use fingersplit::surface::shapes;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn stages(c: &mut Criterion) {
    let hand = HandModel::default_barrett();
    let surface = shapes::scan_blob(151, 300, 7);
    let proxy = CollisionProxy::with_default_cell(&surface).unwrap();
    let seeding = SeedParams::default();
    let max_width = seeding.width_fraction * hand.max_span();
    let params = SplitterParams::default();
    let line_search = CpoParams {
        line_search: true,
        ..CpoParams::default()
    };

    let mut group = c.benchmark_group("stages");
    group.sample_size(10);
    for (name, execution) in MODES {
        let mut ctx = PlanContext::new(&surface, &hand, &proxy);
        ctx.execution = execution;
        let grasp = seed_antipodal(&surface, &seeding, max_width, &ctx).unwrap();
        let state = map_parallel_grasp(&grasp, &params, &ctx).unwrap();

        group.bench_function(BenchmarkId::new("seed", name), |b| {
            b.iter(|| seed_antipodal(black_box(&surface), &seeding, max_width, &ctx).unwrap())
        });
        group.bench_function(BenchmarkId::new("map", name), |b| {
            b.iter(|| map_parallel_grasp(black_box(&grasp), &params, &ctx).unwrap())
        });
        group.bench_function(BenchmarkId::new("cpo_line_search", name), |b| {
            b.iter(|| run_cpo(black_box(&state), &line_search, &ctx).unwrap())
        });
    }
    group.finish();
}

fn batch(c: &mut Criterion) {
    let hand = HandModel::default_barrett();
    let fixtures = shapes::fixture_set();
    let mut group = c.benchmark_group("batch");
    group.sample_size(10);
    for (name, execution) in MODES {
        let cfg = RunConfig {
            execution,
            ..RunConfig::default()
        };
        group.bench_function(BenchmarkId::new("fixtures", name), |b| {
            b.iter(|| {
                execution.map_slice(&fixtures, |(_, s)| {
                    plan_on(s, &hand, &cfg).unwrap().result.metrics_after
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, stages, batch);
criterion_main!(benches);
