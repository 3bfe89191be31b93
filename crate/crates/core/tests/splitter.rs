use fingersplit::collision::CollisionProxy;
use fingersplit::context::PlanContext;
use fingersplit::kinematics::HandModel;
use fingersplit::par::Execution;
use fingersplit::splitter::{run_split, seed_antipodal, PlanResult, SeedParams, SplitterParams, Termination};
use fingersplit::surface::{shapes, SurfaceModel};
use fingersplit::trace::Phase;

fn plan(surface: &SurfaceModel, seed: u64, execution: Execution) -> PlanResult {
    let hand = HandModel::default_barrett();
    let proxy = CollisionProxy::with_default_cell(surface).unwrap();
    let mut ctx = PlanContext::new(surface, &hand, &proxy);
    ctx.execution = execution;
    let seeding = SeedParams {
        seed,
        ..SeedParams::default()
    };
    let g = seed_antipodal(surface, &seeding, seeding.width_fraction * hand.max_span(), &ctx).unwrap();
    run_split(&g, &SplitterParams::default(), &ctx).unwrap()
}

fn assert_monotone(r: &PlanResult) {
    for w in r.trace.windows(2) {
        assert!(
            w[1].q_total >= w[0].q_total - 1e-12,
            "{} -> {}",
            w[0].q_total,
            w[1].q_total
        );
    }
    assert_eq!(r.trace.last().unwrap().q_total, r.metrics_after.q_total);
}

#[test]
fn quality_never_decreases_across_seeds() {
    let surfaces = [shapes::uv_sphere(0.04, 60, 120), shapes::torus(0.04, 0.015, 120, 45)];
    for surface in &surfaces {
        for seed in 0..4 {
            let r = plan(surface, seed, Execution::Parallel);
            assert_monotone(&r);
            assert!(r.metrics_after.q_total > r.metrics_before.q_total);
            assert_ne!(r.termination, Termination::MaxOuter);
        }
    }
}

#[test]
fn sequential_and_parallel_plans_are_identical() {
    let surface = shapes::scan_blob(61, 120, 3);
    let a = plan(&surface, 5, Execution::Sequential);
    let b = plan(&surface, 5, Execution::Parallel);
    assert_eq!(a.final_state.q, b.final_state.q);
    assert_eq!(a.final_state.palm, b.final_state.palm);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.phases, b.phases);
}

#[test]
fn fingertips_stay_on_the_sphere() {
    let surface = shapes::uv_sphere(0.04, 120, 240);
    let r = plan(&surface, 0, Execution::Parallel);
    let worst = r.trace.iter().map(|row| row.gap).fold(0.0, f64::max);
    assert!(worst <= 1e-3, "fingertip gap {worst}");
    // contacts are surface points
    for c in &r.final_state.contacts {
        assert!((c.position.norm() - 0.04).abs() < 1e-9);
    }
}

#[test]
fn phases_alternate_on_the_elongated_tool() {
    let surface = shapes::tool(0.24, 0.035, 0.008, 200, 64);
    let r = plan(&surface, 0, Execution::Parallel);
    assert_monotone(&r);
    assert!(r.outer_iterations >= 2);
    let order: Vec<Phase> = r.phases.iter().map(|p| p.phase).collect();
    for (k, p) in order.iter().enumerate() {
        assert_eq!(*p, if k % 2 == 0 { Phase::Cpo } else { Phase::Ppo });
    }
    assert!(r.iterations(Phase::Cpo) > 0 && r.iterations(Phase::Ppo) > 0);
    // both phases contribute accepted steps to the trace
    assert!(r.trace.iter().any(|row| row.phase == Phase::Cpo));
    assert!(r.trace.iter().any(|row| row.phase == Phase::Ppo));
}
