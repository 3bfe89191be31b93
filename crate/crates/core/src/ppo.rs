//! Palm pose optimisation: improve joint centring by moving the object
//! relative to the palm while the object-frame contacts stay fixed.

use std::time::Instant;

use log::{debug, info};
use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::collision::col_detect;
use crate::context::PlanContext;
use crate::cpo::{misaligned, quality_of, trace_row, PINV_DAMPING, STATIONARY_NORM};
use crate::error::{Error, Result};
use crate::kinematics::{grasp_map, hand_jacobian, se3_exp, GraspState, Pose, Twist};
use crate::linalg::{damped_pinv, solve_psd};
use crate::quality::grad_q_hand;
use crate::trace::{Phase, StopReason, Timing, TraceRow};

const M_RANK_TOL: f64 = 1e-12;
const ZERO_PROGRESS: f64 = 1e-12;
const ZERO_PROGRESS_LIMIT: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoParams {
    /// Joint-motion trust region (rad).
    pub sigma_ppo: f64,
    pub k_ppo: [f64; 9],
    pub delta_p: f64,
    pub gamma: f64,
    pub max_iters: usize,
    pub t_s: f64,
}

impl Default for PpoParams {
    fn default() -> Self {
        PpoParams {
            sigma_ppo: 0.5,
            k_ppo: [2.0; 9],
            delta_p: 0.0,
            gamma: 0.6,
            max_iters: 50,
            t_s: 0.05,
        }
    }
}

impl PpoParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_ppo > 0.0) {
            return Err(Error::Parameter("sigma_ppo must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Parameter("gamma must lie in (0, 1]".into()));
        }
        if self.max_iters == 0 || !(self.t_s > 0.0) {
            return Err(Error::Parameter("max_iters and t_s must be positive".into()));
        }
        if self.k_ppo.iter().any(|k| !k.is_finite()) {
            return Err(Error::Parameter("k_ppo must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PpoOutcome {
    /// Object pose in the palm frame.
    pub object_pose_in_palm: Pose,
    pub q: DVector<f64>,
    /// Final state with the palm moved by the inverse of the object motion.
    pub state: GraspState,
    pub iterations: usize,
    pub reason: StopReason,
    pub trace: Vec<TraceRow>,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoStep {
    /// Scaled object twist.
    pub v_des: Twist,
    pub d_c: Vector6<f64>,
    pub d_q: DVector<f64>,
}

/// Solves the tangent problem of the palm stage in closed form. `None` when
/// the joint-space direction vanishes.
pub fn ppo_tangent_step(g: &DMatrix<f64>, jh: &DMatrix<f64>, grad_q: &DVector<f64>, sigma: f64) -> Option<PpoStep> {
    let m = g.transpose() * g + jh * jh.transpose();
    let rhs = jh * grad_q;
    let y = solve_psd(
        &m,
        &DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice()),
        M_RANK_TOL,
    );
    let y = y.column(0).into_owned();
    let d_c = Vector6::from_iterator((g * &y).iter().copied());
    let d_q = grad_q - jh.transpose() * &y;
    let norm = d_q.norm();
    if norm < STATIONARY_NORM {
        return None;
    }
    Some(PpoStep {
        v_des: Twist::from_vector(&(d_c * (sigma / norm))),
        d_c,
        d_q,
    })
}

/// `|G^T d_c - J_h d_q| / (|d_c| + |d_q|)`.
pub fn grasp_residual(g: &DMatrix<f64>, jh: &DMatrix<f64>, d_c: &Vector6<f64>, d_q: &DVector<f64>) -> f64 {
    let lhs = g.transpose() * DVector::from_column_slice(d_c.as_slice());
    (lhs - jh * d_q).norm() / (d_c.norm() + d_q.norm()).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone)]
pub struct PpoCandidate {
    pub object_pose_in_palm: Pose,
    pub q: DVector<f64>,
    /// Desired palm-frame contact positions under the updated pose.
    pub targets: Vec<Vector3<f64>>,
    pub qdot: DVector<f64>,
}

/// Moves the object pose along `v_des` for one time step and tracks the
/// transported contacts with the fingertips.
pub fn ppo_project(
    g_po: &Pose,
    v_des: &Twist,
    q: &DVector<f64>,
    contacts: &[Vector3<f64>],
    params: &PpoParams,
    hand: &crate::kinematics::HandModel,
) -> PpoCandidate {
    let g_des = se3_exp(g_po, v_des, params.t_s);
    let palm = Pose::identity();
    let tips = hand.fk_fingertips(&palm, q);
    let mut rhs = DVector::zeros(3 * contacts.len());
    let mut targets = Vec::with_capacity(contacts.len());
    for (i, (c, tip)) in contacts.iter().zip(&tips).enumerate() {
        let target = g_des.transform_point(c);
        let vel = g_des.rotation * (v_des.linear - c.cross(&v_des.angular));
        let e = target - tip.translation;
        for k in 0..3 {
            rhs[3 * i + k] = vel[k] + params.k_ppo[3 * i + k] * e[k];
        }
        targets.push(target);
    }
    let j = hand.jacobian_q2c(&palm, q);
    let qdot = damped_pinv(&j, PINV_DAMPING) * rhs;
    let q_des = hand.clamp(&(q + &qdot * params.t_s));
    PpoCandidate {
        object_pose_in_palm: g_des,
        q: q_des,
        targets,
        qdot,
    }
}

/// Iterates palm-stage steps with the contacts fixed in the object frame.
pub fn run_ppo(initial: &GraspState, params: &PpoParams, ctx: &PlanContext) -> Result<PpoOutcome> {
    params.validate()?;
    let hand = ctx.hand;
    let limits = hand.limits();
    let contacts = initial.contact_positions();
    let mut g_po = initial.palm.inverse() * initial.object_pose;
    let mut state = initial.clone();
    let mut q_now = quality_of(&state, ctx).0;
    let mut trace = Vec::new();
    let mut timing = Timing::default();
    let mut stalled = 0;
    let mut reason = StopReason::MaxIters;
    let mut iterations = 0;

    for it in 1..=params.max_iters {
        iterations = it;
        let t0 = Instant::now();
        let grad = grad_q_hand(&state.q, &limits) * ctx.weights.w2;
        let g = grasp_map(&state.contacts, &g_po)?;
        let jh = hand_jacobian(hand, &Pose::identity(), &state.q, &state.contacts, &g_po)?;
        let Some(step) = ppo_tangent_step(&g, &jh, &grad, params.sigma_ppo) else {
            timing.tangent += t0.elapsed();
            reason = StopReason::QualityConverged;
            debug!("ppo: stationary at iteration {it}");
            break;
        };
        let residual = grasp_residual(&g, &jh, &step.d_c, &step.d_q);
        let t1 = Instant::now();
        timing.tangent += t1 - t0;
        let cand = ppo_project(&g_po, &step.v_des, &state.q, &contacts, params, hand);
        timing.projection += t1.elapsed();

        let mut next = state.clone();
        next.q = cand.q.clone();
        next.palm = state.object_pose * cand.object_pose_in_palm.inverse();
        let q_cand = quality_of(&next, ctx).0;
        let gain = q_cand - q_now;
        if gain <= params.delta_p {
            reason = StopReason::QualityConverged;
            debug!("ppo: no quality gain ({gain:e}) at iteration {it}");
            break;
        }
        let palm_in_object = cand.object_pose_in_palm.inverse();
        let pads: Vec<_> = hand.fingertip_normals(&palm_in_object, &cand.q).into_iter().collect();
        if misaligned(&state.contacts, &pads, params.gamma, ctx) {
            reason = StopReason::NormalLimit;
            debug!("ppo: alignment stop at iteration {it}");
            break;
        }
        let t2 = Instant::now();
        let hit = col_detect(hand, &palm_in_object, &cand.q, ctx.proxy, &ctx.collision);
        timing.collision += t2.elapsed();
        if hit {
            reason = StopReason::Collision;
            debug!("ppo: collision at iteration {it}");
            break;
        }

        g_po = cand.object_pose_in_palm;
        state = next;
        q_now = q_cand;
        let gap = (cand.targets.iter())
            .zip(hand.fk_fingertips(&Pose::identity(), &state.q))
            .map(|(t, f)| (t - f.translation).norm())
            .fold(0.0, f64::max);
        trace.push(trace_row(Phase::Ppo, it, &state, ctx, (residual, gap)));

        if gain <= ZERO_PROGRESS {
            stalled += 1;
            if stalled >= ZERO_PROGRESS_LIMIT {
                info!("ppo: {ZERO_PROGRESS_LIMIT} consecutive steps without measurable progress, stopping");
                reason = StopReason::QualityConverged;
                break;
            }
        } else {
            stalled = 0;
        }
    }

    Ok(PpoOutcome {
        object_pose_in_palm: g_po,
        q: state.q.clone(),
        state,
        iterations,
        reason,
        trace,
        timing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::CollisionProxy;
    use crate::kinematics::HandModel;
    use crate::quality::QualityWeights;
    use crate::surface::{shapes, SurfacePoint};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(seed: u64) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let hand = HandModel::default_barrett();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = DVector::from_iterator(8, hand.limits().iter().map(|l| rng.random_range(l[0]..l[1])));
        let contacts: Vec<_> = (0..3)
            .map(|k| SurfacePoint {
                position: Vector3::from_fn(|_, _| rng.random_range(-0.05..0.05)),
                normal: Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
                vertex_id: k,
            })
            .collect();
        let g_po = Pose::new(
            crate::kinematics::rotation_about(&Vector3::new(0.2, 0.9, -0.3).normalize(), rng.random_range(-3.0..3.0)),
            Vector3::new(0.0, 0.0, 0.1),
        );
        let g = grasp_map(&contacts, &g_po).unwrap();
        let jh = hand_jacobian(&hand, &Pose::identity(), &q, &contacts, &g_po).unwrap();
        let grad = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
        (g, jh, grad)
    }

    /// Minimum-distance projection of `(0, grad)` onto `G^T d_c = J_h d_q`
    /// through the full KKT system.
    fn kkt_oracle(g: &DMatrix<f64>, jh: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
        let n = 6 + grad.len();
        let m = jh.nrows();
        let mut a = DMatrix::zeros(m, n);
        a.view_mut((0, 0), (m, 6)).copy_from(&g.transpose());
        a.view_mut((0, 6), (m, grad.len())).copy_from(&(-jh));
        let mut k = DMatrix::zeros(n + m, n + m);
        k.view_mut((0, 0), (n, n)).fill_with_identity();
        k.view_mut((0, n), (n, m)).copy_from(&a.transpose());
        k.view_mut((n, 0), (m, n)).copy_from(&a);
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(6, grad.len()).copy_from(grad);
        k.lu().solve(&rhs).unwrap().rows(0, n).into_owned()
    }

    #[test]
    fn closed_form_matches_kkt_oracle() {
        for seed in 0..50 {
            let (g, jh, grad) = random_instance(seed);
            let step = ppo_tangent_step(&g, &jh, &grad, 0.5).unwrap();
            let ours = DVector::from_iterator(14, step.d_c.iter().chain(step.d_q.iter()).copied());
            let oracle = kkt_oracle(&g, &jh, &grad);
            let cos = ours.dot(&oracle) / (ours.norm() * oracle.norm());
            assert!(cos >= 1.0 - 1e-9, "seed {seed}: cos {cos}");
            assert!((ours.norm() - oracle.norm()).abs() <= 1e-6 * oracle.norm());
        }
    }

    proptest! {
        #[test]
        fn step_satisfies_grasp_constraint(seed in 0u64..10_000, sigma in 0.01f64..2.0) {
            let (g, jh, grad) = random_instance(seed);
            let step = ppo_tangent_step(&g, &jh, &grad, sigma).unwrap();
            prop_assert!(grasp_residual(&g, &jh, &step.d_c, &step.d_q) <= 1e-9);
            prop_assert!((step.v_des.to_vector().norm() - sigma * step.d_c.norm() / step.d_q.norm()).abs() <= 1e-12 * sigma.max(1.0) * (1.0 + step.v_des.to_vector().norm()));
            prop_assert!(grad.dot(&step.d_q) >= -1e-12);
        }
    }

    #[test]
    fn zero_gradient_is_stationary() {
        let (g, jh, _) = random_instance(4);
        assert!(ppo_tangent_step(&g, &jh, &DVector::zeros(8), 0.5).is_none());
    }

    #[test]
    fn projection_transports_contacts_rigidly() {
        let hand = HandModel::default_barrett();
        let q = hand.midpoints();
        let g_po = Pose::from_translation(Vector3::new(0.0, 0.0, 0.12));
        let contacts = vec![
            Vector3::new(0.03, 0.0, 0.0),
            Vector3::new(-0.03, 0.01, 0.0),
            Vector3::new(0.0, -0.02, 0.01),
        ];
        let v = Twist::new(Vector3::new(0.01, -0.02, 0.005), Vector3::new(0.3, -0.1, 0.2));
        let params = PpoParams::default();
        let cand = ppo_project(&g_po, &v, &q, &contacts, &params, &hand);
        let moved = se3_exp(&g_po, &v, params.t_s);
        for (t, c) in cand.targets.iter().zip(&contacts) {
            assert!((t - moved.transform_point(c)).norm() < 1e-15);
        }
        // pairwise distances preserved
        for i in 0..3 {
            for j in 0..i {
                let before = (contacts[i] - contacts[j]).norm();
                let after = (cand.targets[i] - cand.targets[j]).norm();
                assert!((before - after).abs() < 1e-14);
            }
        }
    }

    fn sphere_state(hand: &HandModel, q: DVector<f64>, surface: &crate::surface::SurfaceModel) -> GraspState {
        let palm = Pose::from_translation(Vector3::new(0.0, 0.0, -0.15));
        let contacts = hand
            .fk_fingertips(&palm, &q)
            .iter()
            .map(|t| surface.nearest_neighbor(&t.translation))
            .collect();
        GraspState {
            palm,
            q,
            contacts,
            object_pose: Pose::identity(),
        }
    }

    #[test]
    fn centred_joints_stop_immediately() {
        let hand = HandModel::default_barrett();
        let surface = shapes::uv_sphere(0.04, 30, 60);
        let proxy = CollisionProxy::with_default_cell(&surface).unwrap();
        let ctx = PlanContext::new(&surface, &hand, &proxy);
        let state = sphere_state(&hand, hand.midpoints(), &surface);
        let out = run_ppo(&state, &PpoParams::default(), &ctx).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.reason, StopReason::QualityConverged);
        assert_eq!(out.state, state);
    }

    #[test]
    fn contacts_never_move_in_object_frame() {
        let hand = HandModel::default_barrett();
        let surface = shapes::uv_sphere(0.04, 30, 60);
        let proxy = CollisionProxy::with_default_cell(&surface).unwrap();
        let mut ctx = PlanContext::new(&surface, &hand, &proxy);
        ctx.weights = QualityWeights { w1: 0.0, w2: 1.0 };
        let mut q = hand.midpoints();
        q[0] += 0.3;
        q[4] -= 0.2;
        q[7] += 0.2;
        let state = sphere_state(&hand, q, &surface);
        let out = run_ppo(&state, &PpoParams::default(), &ctx).unwrap();
        assert_eq!(out.state.contacts, state.contacts);
        let mut last = quality_of(&state, &ctx).0;
        for row in &out.trace {
            assert!(row.q_total > last);
            assert!(row.residual_a <= 1e-9);
            last = row.q_total;
        }
    }

    fn contacts_at_tips(hand: &HandModel, q: &DVector<f64>, g_po: &Pose) -> Vec<Vector3<f64>> {
        let inv = g_po.inverse();
        hand.fk_fingertips(&Pose::identity(), q)
            .iter()
            .map(|t| inv.transform_point(&t.translation))
            .collect()
    }

    #[test]
    fn zero_twist_on_contacts_is_a_fixed_point() {
        let hand = HandModel::default_barrett();
        let q = hand.midpoints();
        let g_po = Pose::from_translation(Vector3::new(0.01, 0.0, 0.1));
        let contacts = contacts_at_tips(&hand, &q, &g_po);
        let cand = ppo_project(&g_po, &Twist::zero(), &q, &contacts, &PpoParams::default(), &hand);
        assert!((&cand.q - &q).amax() < 1e-12);
        assert!((cand.object_pose_in_palm.translation - g_po.translation).norm() < 1e-15);
    }

    #[test]
    fn fingertips_follow_a_decaying_twist() {
        let hand = HandModel::default_barrett();
        let params = PpoParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let mut q = hand.midpoints();
            let mut g_po = Pose::from_translation(Vector3::new(0.0, 0.0, 0.1));
            let contacts = contacts_at_tips(&hand, &q, &g_po);
            // a twist the fingers can follow: the palm-stage direction for a
            // random joint gradient
            let points: Vec<_> = contacts
                .iter()
                .zip(hand.fingertip_normals(&g_po.inverse(), &q))
                .enumerate()
                .map(|(k, (c, n))| SurfacePoint {
                    position: *c,
                    normal: -n,
                    vertex_id: k,
                })
                .collect();
            let g = grasp_map(&points, &g_po).unwrap();
            let jh = hand_jacobian(&hand, &Pose::identity(), &q, &points, &g_po).unwrap();
            let grad = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
            let mut v = ppo_tangent_step(&g, &jh, &grad, params.sigma_ppo).unwrap().v_des;
            let mut err = 0.0;
            for _ in 0..20 {
                let cand = ppo_project(&g_po, &v, &q, &contacts, &params, &hand);
                g_po = cand.object_pose_in_palm;
                q = cand.q;
                let tips = hand.fk_fingertips(&Pose::identity(), &q);
                err = cand
                    .targets
                    .iter()
                    .zip(&tips)
                    .map(|(t, f)| (t - f.translation).norm())
                    .fold(0.0, f64::max);
                v = v.scaled(0.5);
            }
            assert!(err < 1e-3, "tracking error {err}");
        }
    }
}
