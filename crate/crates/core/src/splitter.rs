//! Outer loop: map a two-contact parallel grasp onto the hand, then alternate
//! contact and palm optimisation until neither makes progress.

use std::time::{Duration, Instant};

use log::{debug, info, warn};
use nalgebra::{DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collision::col_detect;
use crate::context::PlanContext;
use crate::cpo::{misaligned, quality_of, run_cpo, trace_row, CpoParams};
use crate::error::{Error, Result};
use crate::kinematics::{contact_frame, GraspState, Pose};
use crate::linalg::damped_pinv;
use crate::ppo::{run_ppo, PpoParams};
use crate::quality::{evaluate_metrics, q_hand, FrictionModel, MetricReport};
use crate::surface::SurfaceModel;
use crate::trace::{Phase, StopReason, Timing, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParallelGrasp {
    pub c1: Vector3<f64>,
    pub c2: Vector3<f64>,
    pub v_ap: Vector3<f64>,
}

impl ParallelGrasp {
    pub fn new(c1: Vector3<f64>, c2: Vector3<f64>, v_ap: Vector3<f64>) -> Result<Self> {
        if (c1 - c2).norm() <= 0.0 {
            return Err(Error::InfeasibleGrasp("coincident contacts".into()));
        }
        let v_ap = v_ap
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InfeasibleGrasp("zero approach vector".into()))?;
        Ok(ParallelGrasp { c1, c2, v_ap })
    }

    pub fn width(&self) -> f64 {
        (self.c2 - self.c1).norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitterParams {
    /// Both phases stopping in fewer than `m` passes ends the outer loop.
    pub m: usize,
    pub max_outer: usize,
    pub cpo: CpoParams,
    pub ppo: PpoParams,
    /// Half spacing of the two fingers sharing the first contact (m).
    pub pad_split: f64,
    pub contact_tolerance: f64,
    pub map_steps: usize,
    /// Spacing of the palm stand-off search (m).
    pub depth_step: f64,
    /// Finger indices for the roles (first of pair, second of pair, thumb).
    pub assignment: [usize; 3],
    pub friction: FrictionModel,
}

impl Default for SplitterParams {
    fn default() -> Self {
        SplitterParams {
            m: 2,
            max_outer: 20,
            cpo: CpoParams::default(),
            ppo: PpoParams::default(),
            pad_split: 0.005,
            contact_tolerance: 1e-3,
            map_steps: 100,
            depth_step: 0.002,
            assignment: [0, 1, 2],
            friction: FrictionModel::default(),
        }
    }
}

impl SplitterParams {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.max_outer == 0 {
            return Err(Error::Parameter("m and max_outer must be positive".into()));
        }
        if !(self.pad_split >= 0.0 && self.contact_tolerance > 0.0 && self.depth_step > 0.0) {
            return Err(Error::Parameter(
                "pad_split, contact_tolerance and depth_step must be valid lengths".into(),
            ));
        }
        let mut roles = self.assignment;
        roles.sort_unstable();
        if roles != [0, 1, 2] {
            return Err(Error::Parameter("assignment must be a permutation of 0, 1, 2".into()));
        }
        self.cpo.validate()?;
        self.ppo.validate()
    }
}

// --- seeding ---------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedParams {
    pub n_samples: usize,
    pub mu: f64,
    pub seed: u64,
    /// Widest admissible pair as a fraction of the hand's maximum span.
    pub width_fraction: f64,
    pub n_directions: usize,
}

impl Default for SeedParams {
    fn default() -> Self {
        SeedParams {
            n_samples: 4000,
            mu: 0.5,
            seed: 0,
            width_fraction: 0.5,
            n_directions: 16,
        }
    }
}

/// Whether the segment between two surface points lies inside both friction
/// cones.
pub fn antipodal(c1: &Vector3<f64>, n1: &Vector3<f64>, c2: &Vector3<f64>, n2: &Vector3<f64>, mu: f64) -> bool {
    let axis = c2 - c1;
    let len = axis.norm();
    if len <= 0.0 {
        return false;
    }
    let cos_limit = mu.atan().cos();
    let u = axis / len;
    n1.dot(&-u) >= cos_limit * n1.norm() && n2.dot(&u) >= cos_limit * n2.norm()
}

/// Approach direction perpendicular to the grasp axis whose stand-off point,
/// `standoff` behind the grasp centre, lies farthest from the surface; the
/// first candidate wins ties.
pub fn approach_direction(
    surface: &SurfaceModel,
    c1: &Vector3<f64>,
    c2: &Vector3<f64>,
    standoff: f64,
    n_directions: usize,
) -> Option<Vector3<f64>> {
    let frame = contact_frame(&(c2 - c1))?;
    let (e1, e2) = (frame.column(0).into_owned(), frame.column(1).into_owned());
    let mid = (c1 + c2) * 0.5;
    let n = n_directions.max(1);
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for k in 0..n {
        let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let v = e1 * a.cos() + e2 * a.sin();
        let p = mid - v * standoff;
        let clearance = (surface.nearest_neighbor(&p).position - p).norm();
        if best.is_none_or(|(b, _)| clearance > b + 1e-12) {
            best = Some((clearance, v));
        }
    }
    best.map(|(_, v)| v)
}

/// Distance from the palm to the farthest fingertip position it can reach.
pub fn hand_length(hand: &crate::kinematics::HandModel) -> f64 {
    hand.fingers
        .iter()
        .map(|f| f.joints[0].origin.norm() + f.reach())
        .fold(0.0, f64::max)
}

/// Samples vertex pairs and returns the widest antipodal one within the
/// width limit. Deterministic for a given seed and independent of the
/// execution strategy.
pub fn seed_antipodal(
    surface: &SurfaceModel,
    params: &SeedParams,
    max_width: f64,
    ctx: &PlanContext,
) -> Result<ParallelGrasp> {
    if params.n_samples == 0 || !(params.mu > 0.0) {
        return Err(Error::Parameter("seeding needs n_samples >= 1 and mu > 0".into()));
    }
    let n = surface.len();
    if n < 2 {
        return Err(Error::Seeding("surface has fewer than two vertices".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let pairs: Vec<(usize, usize)> = (0..params.n_samples)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect();
    let verts = surface.vertices();
    let normals = surface.vertex_normals();
    let widths = ctx.execution.map_slice(&pairs, |&(i, j)| {
        let w = (verts[j] - verts[i]).norm();
        (w <= max_width && antipodal(&verts[i], &normals[i], &verts[j], &normals[j], params.mu)).then_some(w)
    });
    let mut best: Option<(f64, usize)> = None;
    for (k, w) in widths.iter().enumerate() {
        if let Some(w) = *w {
            if best.is_none_or(|(b, _)| w > b) {
                best = Some((w, k));
            }
        }
    }
    let (_, k) = best.ok_or_else(|| Error::Seeding(format!("no antipodal pair among {} samples", params.n_samples)))?;
    let (i, j) = pairs[k];
    let (c1, c2) = (verts[i], verts[j]);
    let v_ap = approach_direction(surface, &c1, &c2, hand_length(ctx.hand), params.n_directions)
        .ok_or_else(|| Error::Seeding("degenerate grasp axis".into()))?;
    ParallelGrasp::new(c1, c2, v_ap)
}

// --- mapping ---------------------------------------------------------------

/// Palm orientation for a parallel grasp: z along the approach, x along the
/// grasp axis projected off the approach.
pub fn palm_orientation(g: &ParallelGrasp) -> Result<Matrix3<f64>> {
    let z = g.v_ap;
    let axis = g.c2 - g.c1;
    let x = (axis - z * z.dot(&axis))
        .try_normalize(1e-9)
        .ok_or_else(|| Error::InfeasibleGrasp("grasp axis parallel to the approach vector".into()))?;
    Ok(Matrix3::from_columns(&[x, z.cross(&x), z]))
}

#[derive(Debug, Clone)]
struct MapCandidate {
    state: GraspState,
    residual: f64,
    aligned: bool,
    collides: bool,
    q_hand: f64,
}

/// Drives the fingertips toward fixed targets with the stiffness tracker.
fn track(
    palm: &Pose,
    q0: &DVector<f64>,
    targets: &[Vector3<f64>; 3],
    assignment: &[usize; 3],
    steps: usize,
    params: &CpoParams,
    ctx: &PlanContext,
) -> (DVector<f64>, f64) {
    let hand = ctx.hand;
    let mut q = q0.clone();
    let mut residual = f64::INFINITY;
    for step in 0..=steps {
        let tips = hand.fk_fingertips(palm, &q);
        let mut err = DVector::zeros(3 * tips.len());
        residual = 0.0f64;
        for (role, &finger) in assignment.iter().enumerate() {
            let e = targets[role] - tips[finger].translation;
            residual = residual.max(e.norm());
            for k in 0..3 {
                err[3 * finger + k] = params.k_cpo[3 * finger + k] * e[k];
            }
        }
        if step == steps {
            break;
        }
        let j = hand.jacobian_q2c(palm, &q);
        let qdot = damped_pinv(&j, crate::cpo::PINV_DAMPING) * err;
        q = hand.clamp(&(q + qdot * params.t_s));
    }
    (q, residual)
}

/// Tracker start postures: base joints centred, the remaining joints at
/// decreasing fractions of their range.
fn preshapes(hand: &crate::kinematics::HandModel) -> Vec<DVector<f64>> {
    [0.5, 0.25, 0.1]
        .iter()
        .map(|&t| {
            let mut q = hand.midpoints();
            for (fi, finger) in hand.fingers.iter().enumerate() {
                let range = hand.finger_range(fi);
                for (j, idx) in range.enumerate().skip(1) {
                    let l = finger.limits[j];
                    q[idx] = l[0] + t * (l[1] - l[0]);
                }
            }
            q
        })
        .collect()
}

/// Places the hand on a parallel grasp: the paired fingers straddle `c1`,
/// the thumb takes `c2`, and the palm stand-off is chosen by a depth search
/// that prefers reachable, aligned, collision-free and well-centred joints.
pub fn map_parallel_grasp(g: &ParallelGrasp, params: &SplitterParams, ctx: &PlanContext) -> Result<GraspState> {
    let hand = ctx.hand;
    if hand.finger_count() != 3 {
        return Err(Error::Hand(format!(
            "planner needs 3 fingers, model has {}",
            hand.finger_count()
        )));
    }
    let span = hand.max_span();
    if g.width() > span {
        return Err(Error::InfeasibleGrasp(format!(
            "contacts {:.4} m apart exceed the hand span {:.4} m",
            g.width(),
            span
        )));
    }
    let rotation = palm_orientation(g)?;
    let y = rotation.column(1).into_owned();
    let z = rotation.column(2).into_owned();
    let targets = [g.c1 + y * params.pad_split, g.c1 - y * params.pad_split, g.c2];
    let mid = (g.c1 + g.c2) * 0.5;
    let max_depth = hand_length(hand);
    let n_depths = (max_depth / params.depth_step).ceil() as usize + 1;
    let limits = hand.limits();

    let starts = preshapes(hand);
    let candidates = ctx.execution.map_range(n_depths * starts.len(), |k| {
        let palm = Pose::new(rotation, mid - z * ((k / starts.len()) as f64 * params.depth_step));
        let q0 = &starts[k % starts.len()];
        let (q, residual) = track(
            &palm,
            q0,
            &targets,
            &params.assignment,
            params.map_steps,
            &params.cpo,
            ctx,
        );
        let tips = hand.fk_fingertips(&palm, &q);
        let contacts: Vec<_> = tips
            .iter()
            .map(|t| ctx.surface.nearest_neighbor(&t.translation))
            .collect();
        let pads = hand.fingertip_normals(&palm, &q);
        let aligned = !misaligned(&contacts, &pads, params.cpo.gamma, ctx);
        let collides = col_detect(hand, &palm, &q, ctx.proxy, &ctx.collision);
        MapCandidate {
            q_hand: q_hand(&q, &limits),
            state: GraspState {
                palm,
                q,
                contacts,
                object_pose: Pose::identity(),
            },
            residual,
            aligned,
            collides,
        }
    });

    let tol = 10.0 * params.contact_tolerance;
    let feasible = |c: &MapCandidate| c.residual <= tol && c.aligned && !c.collides;
    let best = candidates
        .iter()
        .filter(|c| feasible(c))
        .reduce(|a, b| if b.q_hand > a.q_hand { b } else { a });
    let chosen = match best {
        Some(c) => c,
        None => {
            let fallback = candidates
                .iter()
                .min_by(|a, b| {
                    (a.collides, !a.aligned)
                        .cmp(&(b.collides, !b.aligned))
                        .then(a.residual.total_cmp(&b.residual))
                })
                .expect("at least one depth");
            warn!(
                "map: no reachable collision-free placement (residual {:.2e} m, aligned {}, collision {}); continuing",
                fallback.residual, fallback.aligned, fallback.collides
            );
            fallback
        }
    };
    if chosen.residual > tol {
        warn!("map: tracker residual {:.2e} m exceeds {:.2e} m", chosen.residual, tol);
    }
    debug!(
        "map: palm stand-off {:.4} m, residual {:.2e} m",
        (chosen.state.palm.translation - mid).norm(),
        chosen.residual
    );
    Ok(chosen.state.clone())
}

// --- outer loop ------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxOuter,
    Error(String),
}

impl Termination {
    pub fn label(&self) -> String {
        match self {
            Termination::Converged => "converged".into(),
            Termination::MaxOuter => "max_outer".into(),
            Termination::Error(e) => format!("error: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub phase: Phase,
    pub outer: usize,
    pub iterations: usize,
    pub reason: StopReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanTiming {
    pub map: Duration,
    pub cpo: Timing,
    pub ppo: Timing,
    pub total: Duration,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub initial: GraspState,
    pub final_state: GraspState,
    pub outer_iterations: usize,
    pub phases: Vec<PhaseRecord>,
    /// Initial row followed by every accepted step, in order.
    pub trace: Vec<TraceRow>,
    pub termination: Termination,
    pub metrics_before: MetricReport,
    pub metrics_after: MetricReport,
    pub timing: PlanTiming,
}

impl PlanResult {
    pub fn iterations(&self, phase: Phase) -> usize {
        self.phases
            .iter()
            .filter(|p| p.phase == phase)
            .map(|p| p.iterations)
            .sum()
    }
}

/// Maps the grasp onto the hand and alternates the two phases.
pub fn run_split(g: &ParallelGrasp, params: &SplitterParams, ctx: &PlanContext) -> Result<PlanResult> {
    params.validate()?;
    let start = Instant::now();
    let initial = map_parallel_grasp(g, params, ctx)?;
    let mut timing = PlanTiming {
        map: start.elapsed(),
        ..PlanTiming::default()
    };
    let metrics_before = evaluate_metrics(&initial, ctx.hand, &ctx.weights, &params.friction)?;
    let mut state = initial.clone();
    let mut trace = vec![trace_row(Phase::Init, 0, &state, ctx, (0.0, 0.0))];
    let mut phases = Vec::new();
    let mut termination = Termination::MaxOuter;
    let mut outer = 0;

    while outer < params.max_outer {
        outer += 1;
        let cpo = match run_cpo(&state, &params.cpo, ctx) {
            Ok(o) => o,
            Err(e) => {
                termination = Termination::Error(e.to_string());
                break;
            }
        };
        timing.cpo += cpo.timing;
        phases.push(PhaseRecord {
            phase: Phase::Cpo,
            outer,
            iterations: cpo.iterations,
            reason: cpo.reason,
        });
        trace.extend(cpo.trace);
        state = cpo.state;

        let ppo = match run_ppo(&state, &params.ppo, ctx) {
            Ok(o) => o,
            Err(e) => {
                termination = Termination::Error(e.to_string());
                break;
            }
        };
        timing.ppo += ppo.timing;
        phases.push(PhaseRecord {
            phase: Phase::Ppo,
            outer,
            iterations: ppo.iterations,
            reason: ppo.reason,
        });
        trace.extend(ppo.trace);
        state = ppo.state;
        debug!(
            "outer {outer}: cpo {} ({}), ppo {} ({}), Q = {:.6e}",
            cpo.iterations,
            cpo.reason.as_str(),
            ppo.iterations,
            ppo.reason.as_str(),
            quality_of(&state, ctx).0
        );
        if cpo.iterations < params.m && ppo.iterations < params.m {
            termination = Termination::Converged;
            break;
        }
    }
    let metrics_after = evaluate_metrics(&state, ctx.hand, &ctx.weights, &params.friction)?;
    timing.total = start.elapsed();
    info!(
        "plan: {} after {outer} outer iterations, Q {:.6e} -> {:.6e}",
        termination.label(),
        metrics_before.q_total,
        metrics_after.q_total
    );
    Ok(PlanResult {
        initial,
        final_state: state,
        outer_iterations: outer,
        phases,
        trace,
        termination,
        metrics_before,
        metrics_after,
        timing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::CollisionProxy;
    use crate::kinematics::HandModel;
    use crate::par::Execution;
    use crate::surface::shapes;

    fn brute_force_widest(surface: &SurfaceModel, mu: f64, max_width: f64) -> f64 {
        let (v, n) = (surface.vertices(), surface.vertex_normals());
        let mut best = 0.0f64;
        for i in 0..v.len() {
            for j in 0..v.len() {
                let w = (v[i] - v[j]).norm();
                if i != j && w <= max_width && w > best && antipodal(&v[i], &n[i], &v[j], &n[j], mu) {
                    best = w;
                }
            }
        }
        best
    }

    #[test]
    fn antipodal_test_is_symmetric_and_respects_the_cone() {
        let (a, b) = (Vector3::new(-1.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0));
        assert!(antipodal(&a, &-Vector3::x(), &b, &Vector3::x(), 0.5));
        assert!(antipodal(&b, &Vector3::x(), &a, &-Vector3::x(), 0.5));
        // tilt just inside and just outside atan(0.5)
        let tilt = |deg: f64| {
            let t = deg.to_radians();
            Vector3::new(t.cos(), t.sin(), 0.0)
        };
        let limit = 0.5f64.atan().to_degrees();
        assert!(antipodal(&a, &-Vector3::x(), &b, &tilt(limit - 0.1), 0.5));
        assert!(!antipodal(&a, &-Vector3::x(), &b, &tilt(limit + 0.1), 0.5));
        assert!(!antipodal(&a, &Vector3::x(), &b, &Vector3::x(), 0.5));
    }

    #[test]
    fn sphere_seed_is_nearly_diametral() {
        let hand = HandModel::default_barrett();
        let surface = shapes::fibonacci_sphere(0.04, 500);
        let proxy = CollisionProxy::with_default_cell(&surface).unwrap();
        let ctx = PlanContext::new(&surface, &hand, &proxy);
        let params = SeedParams::default();
        let g = seed_antipodal(&surface, &params, 1.0, &ctx).unwrap();
        let best = brute_force_widest(&surface, params.mu, 1.0);
        assert!((best - 0.08).abs() < 1e-3);
        assert!(g.width() >= 0.97 * best, "seed {} vs best {}", g.width(), best);
        assert!(g.v_ap.dot(&(g.c2 - g.c1)).abs() < 1e-12);
    }

    #[test]
    fn thin_plate_seed_spans_the_thickness() {
        let hand = HandModel::default_barrett();
        let surface = shapes::plate(0.08, 0.06, 0.01, 0.004);
        let proxy = CollisionProxy::with_default_cell(&surface).unwrap();
        let ctx = PlanContext::new(&surface, &hand, &proxy);
        let params = SeedParams {
            n_samples: 50_000,
            ..SeedParams::default()
        };
        let g = seed_antipodal(&surface, &params, 0.02, &ctx).unwrap();
        assert!((g.c1.z + g.c2.z).abs() < 1e-9 && (g.c1.z - g.c2.z).abs() > 0.0099);
        assert!(g.width() <= brute_force_widest(&surface, params.mu, 0.02) + 1e-15);
    }

    #[test]
    fn seeding_is_deterministic_across_strategies() {
        let hand = HandModel::default_barrett();
        let surface = shapes::scan_blob(40, 80, 3);
        let proxy = CollisionProxy::with_default_cell(&surface).unwrap();
        let mut ctx = PlanContext::new(&surface, &hand, &proxy);
        let params = SeedParams::default();
        let a = seed_antipodal(&surface, &params, 0.1, &ctx).unwrap();
        let b = seed_antipodal(&surface, &params, 0.1, &ctx).unwrap();
        ctx.execution = Execution::Sequential;
        let c = seed_antipodal(&surface, &params, 0.1, &ctx).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let other = seed_antipodal(&surface, &SeedParams { seed: 1, ..params }, 0.1, &ctx).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn seeding_without_candidates_fails() {
        let hand = HandModel::default_barrett();
        // tetrahedron vertex normals are 55 degrees off every edge
        let surface = SurfaceModel::from_raw(crate::surface::RawMesh {
            positions: vec![
                Vector3::new(1.0, 1.0, 1.0),
                Vector3::new(1.0, -1.0, -1.0),
                Vector3::new(-1.0, 1.0, -1.0),
                Vector3::new(-1.0, -1.0, 1.0),
            ],
            triangles: vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
            normals: None,
        })
        .unwrap();
        let proxy = CollisionProxy::with_default_cell(&surface).unwrap();
        let ctx = PlanContext::new(&surface, &hand, &proxy);
        let params = SeedParams::default();
        assert!(matches!(
            seed_antipodal(&surface, &params, 1.0, &ctx),
            Err(Error::Seeding(_))
        ));
    }

    fn sphere_grasp(v_ap: Vector3<f64>) -> (SurfaceModel, ParallelGrasp) {
        let surface = shapes::uv_sphere(0.04, 60, 120);
        let c1 = surface.nearest_neighbor(&Vector3::new(-0.04, 0.0, 0.0)).position;
        let c2 = surface.nearest_neighbor(&Vector3::new(0.04, 0.0, 0.0)).position;
        (surface, ParallelGrasp::new(c1, c2, v_ap).unwrap())
    }

    #[test]
    fn map_on_sphere_reaches_the_surface() {
        let hand = HandModel::default_barrett();
        let (surface, g) = sphere_grasp(Vector3::z());
        let proxy = CollisionProxy::with_default_cell(&surface).unwrap();
        let ctx = PlanContext::new(&surface, &hand, &proxy);
        let params = SplitterParams::default();
        let state = map_parallel_grasp(&g, &params, &ctx).unwrap();
        let mid = (g.c1 + g.c2) * 0.5;
        let offset = state.palm.translation - mid;
        // palm sits behind the grasp centre along the approach axis
        assert!(offset.cross(&g.v_ap).norm() < 1e-12 && offset.dot(&g.v_ap) < 0.0);
        assert!((state.palm.rotation.column(2) - g.v_ap).norm() < 1e-12);
        for tip in state.fingertips_in_object(&hand) {
            // closed-form distance to the sphere, allowing for facet sag
            assert!((tip.norm() - 0.04).abs() <= params.contact_tolerance, "{}", tip.norm());
        }
        assert!(state.contact_gap(&hand) <= params.contact_tolerance);
    }

    #[test]
    fn negated_approach_mirrors_the_palm() {
        let hand = HandModel::default_barrett();
        let params = SplitterParams::default();
        let (surface, up) = sphere_grasp(Vector3::z());
        let down = ParallelGrasp::new(up.c1, up.c2, -Vector3::z()).unwrap();
        let proxy = CollisionProxy::with_default_cell(&surface).unwrap();
        let ctx = PlanContext::new(&surface, &hand, &proxy);
        let a = map_parallel_grasp(&up, &params, &ctx).unwrap();
        let b = map_parallel_grasp(&down, &params, &ctx).unwrap();
        let mid = (up.c1 + up.c2) * 0.5;
        let (da, db) = ((a.palm.translation - mid).z, (b.palm.translation - mid).z);
        assert!(da < 0.0 && db > 0.0);
        assert!((da + db).abs() <= params.depth_step + 1e-12);
        // the mirror image of each fingertip lies near a fingertip of the other placement
        let (ta, tb) = (a.fingertips_in_object(&hand), b.fingertips_in_object(&hand));
        for t in &ta {
            let mirrored = Vector3::new(t.x, t.y, -t.z);
            let nearest = tb.iter().map(|u| (u - mirrored).norm()).fold(f64::INFINITY, f64::min);
            assert!(nearest < 5e-3, "{nearest}");
        }
    }

    #[test]
    fn grasp_wider_than_the_hand_is_rejected() {
        let hand = HandModel::default_barrett();
        let surface = shapes::uv_sphere(0.3, 20, 40);
        let proxy = CollisionProxy::with_default_cell(&surface).unwrap();
        let ctx = PlanContext::new(&surface, &hand, &proxy);
        let g = ParallelGrasp::new(Vector3::new(-0.3, 0.0, 0.0), Vector3::new(0.3, 0.0, 0.0), Vector3::z()).unwrap();
        assert!(g.width() > hand.max_span());
        assert!(matches!(
            map_parallel_grasp(&g, &SplitterParams::default(), &ctx),
            Err(Error::InfeasibleGrasp(_))
        ));
    }

    #[test]
    fn degenerate_grasps_are_rejected() {
        let p = Vector3::new(0.01, 0.0, 0.0);
        assert!(ParallelGrasp::new(p, p, Vector3::z()).is_err());
        assert!(ParallelGrasp::new(p, -p, Vector3::zeros()).is_err());
        let along = ParallelGrasp::new(p, -p, Vector3::x()).unwrap();
        assert!(palm_orientation(&along).is_err());
    }
}
