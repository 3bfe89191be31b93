//! Contact point optimisation: improve the grasp quality by sliding the
//! contacts over the surface while the palm stays fixed.

use std::time::Instant;

use log::{debug, info};
use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::collision::col_detect;
use crate::context::PlanContext;
use crate::error::{Error, Result};
use crate::kinematics::GraspState;
use crate::linalg::{damped_pinv, null_space_projector};
use crate::quality::{grad_q_hand, grad_q_object, q_hand, q_object};
use crate::trace::{Phase, StopReason, Timing, TraceRow};

pub const STATIONARY_NORM: f64 = 1e-12;
pub const PINV_DAMPING: f64 = 1e-6;
const RANK_TOL: f64 = 1e-10;
const ZERO_PROGRESS: f64 = 1e-12;
const ZERO_PROGRESS_LIMIT: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CpoParams {
    pub sigma_cpo: f64,
    /// Diagonal of the tracking gain (1/s), one entry per contact coordinate.
    pub k_cpo: [f64; 9],
    pub delta_c: f64,
    pub gamma: f64,
    pub max_iters: usize,
    pub t_s: f64,
    pub line_search: bool,
    pub ls_samples: usize,
}

impl Default for CpoParams {
    fn default() -> Self {
        CpoParams {
            sigma_cpo: 0.15,
            k_cpo: [2.0; 9],
            delta_c: 0.0,
            gamma: 0.6,
            max_iters: 50,
            t_s: 0.05,
            line_search: false,
            ls_samples: 10,
        }
    }
}

impl CpoParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_cpo > 0.0) {
            return Err(Error::Parameter("sigma_cpo must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Parameter("gamma must lie in (0, 1]".into()));
        }
        if self.max_iters == 0 || !(self.t_s > 0.0) {
            return Err(Error::Parameter("max_iters and t_s must be positive".into()));
        }
        if self.line_search && self.ls_samples == 0 {
            return Err(Error::Parameter("ls_samples must be positive".into()));
        }
        if self.k_cpo.iter().any(|k| !k.is_finite()) {
            return Err(Error::Parameter("k_cpo must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CpoOutcome {
    pub state: GraspState,
    pub iterations: usize,
    pub reason: StopReason,
    pub trace: Vec<TraceRow>,
    pub timing: Timing,
}

/// Constraint matrix `[N^T 0; -I J]` of the tangent problem.
pub fn constraint_matrix(normals: &[Vector3<f64>], jacobian: &DMatrix<f64>) -> DMatrix<f64> {
    let nc = 3 * normals.len();
    let dof = jacobian.ncols();
    let mut a = DMatrix::zeros(normals.len() + nc, nc + dof);
    for (i, n) in normals.iter().enumerate() {
        a.fixed_view_mut::<1, 3>(i, 3 * i).copy_from(&n.transpose());
    }
    let r0 = normals.len();
    for k in 0..nc {
        a[(r0 + k, k)] = -1.0;
    }
    a.view_mut((r0, nc), (nc, dof)).copy_from(jacobian);
    a
}

/// Projection of the quality gradient onto the null space of the tangent
/// constraints. `None` when the projected gradient vanishes.
pub fn cpo_direction(grad: &DVector<f64>, jacobian: &DMatrix<f64>, normals: &[Vector3<f64>]) -> Option<DVector<f64>> {
    let a = constraint_matrix(normals, jacobian);
    let d0 = null_space_projector(&a, RANK_TOL) * grad;
    (d0.norm() >= STATIONARY_NORM).then_some(d0)
}

/// Fixed-length tangent step `sigma * d0 / |d0|`, split into contact and
/// joint parts.
pub fn cpo_tangent_step(
    grad: &DVector<f64>,
    jacobian: &DMatrix<f64>,
    normals: &[Vector3<f64>],
    sigma: f64,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let d0 = cpo_direction(grad, jacobian, normals)?;
    let d = &d0 * (sigma / d0.norm());
    Some(split(&d, 3 * normals.len()))
}

fn split(d: &DVector<f64>, nc: usize) -> (DVector<f64>, DVector<f64>) {
    (d.rows(0, nc).into_owned(), d.rows(nc, d.len() - nc).into_owned())
}

/// Relative residuals `(|N^T d_c|, |d_c - J d_q|) / |d|`.
pub fn tangent_residuals(
    d_c: &DVector<f64>,
    d_q: &DVector<f64>,
    jacobian: &DMatrix<f64>,
    normals: &[Vector3<f64>],
) -> (f64, f64) {
    let scale = (d_c.norm_squared() + d_q.norm_squared()).sqrt().max(f64::MIN_POSITIVE);
    let normal: f64 = normals
        .iter()
        .enumerate()
        .map(|(i, n)| n.dot(&d_c.fixed_rows::<3>(3 * i)).powi(2))
        .sum::<f64>()
        .sqrt();
    let kin = (d_c - jacobian * d_q).norm();
    (normal / scale, kin / scale)
}

/// A projected candidate and the fingertip pad normals at its joints, both
/// in object frame.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub state: GraspState,
    pub pad_normals: Vec<Vector3<f64>>,
}

/// One tracking-controller step toward the surface points nearest to
/// `c + d_c`, followed by snapping the new fingertips to the surface.
pub fn cpo_project(state: &GraspState, d_c: &DVector<f64>, params: &CpoParams, ctx: &PlanContext) -> Candidate {
    let hand = ctx.hand;
    let palm = state.palm_in_object();
    let tips = hand.fk_fingertips(&palm, &state.q);
    let mut err = DVector::zeros(3 * tips.len());
    for (i, (tip, c)) in tips.iter().zip(&state.contacts).enumerate() {
        let target = c.position + d_c.fixed_rows::<3>(3 * i);
        let c_ref = ctx.surface.nearest_neighbor(&target).position;
        let e = c_ref - tip.translation;
        for k in 0..3 {
            err[3 * i + k] = params.k_cpo[3 * i + k] * e[k];
        }
    }
    let j = hand.jacobian_q2c(&palm, &state.q);
    let qdot = damped_pinv(&j, PINV_DAMPING) * err;
    let q_des = hand.clamp(&(&state.q + qdot * params.t_s));
    let new_tips = hand.fk_fingertips(&palm, &q_des);
    let contacts = new_tips
        .iter()
        .map(|t| ctx.surface.nearest_neighbor(&t.translation))
        .collect();
    let pad_normals = new_tips
        .iter()
        .zip(&hand.fingers)
        .map(|(t, f)| t.rotation * f.fingertip_normal)
        .collect();
    Candidate {
        state: GraspState {
            palm: state.palm,
            q: q_des,
            contacts,
            object_pose: state.object_pose,
        },
        pad_normals,
    }
}

/// `(Q, Q_o, Q_h)` of a state.
pub fn quality_of(state: &GraspState, ctx: &PlanContext) -> (f64, f64, f64) {
    let qo = q_object(&state.contact_positions());
    let qh = q_hand(&state.q, &ctx.hand.limits());
    (ctx.weights.total(qo, qh), qo, qh)
}

pub(crate) fn trace_row(
    phase: Phase,
    iteration: usize,
    state: &GraspState,
    ctx: &PlanContext,
    residuals: (f64, f64),
) -> TraceRow {
    let (q_total, q_object, q_hand) = quality_of(state, ctx);
    let c = state.contact_positions();
    TraceRow {
        phase,
        iteration,
        q_total,
        q_object,
        q_hand,
        contacts: [c[0], c[1], c[2]],
        residual_a: residuals.0,
        residual_b: residuals.1,
        gap: state.contact_gap(ctx.hand),
    }
}

pub(crate) fn misaligned(
    contacts: &[crate::surface::SurfacePoint],
    pad_normals: &[Vector3<f64>],
    gamma: f64,
    ctx: &PlanContext,
) -> bool {
    contacts
        .iter()
        .zip(pad_normals)
        .any(|(c, n)| ctx.alignment.fires(c.normal.dot(n), gamma))
}

/// Iterates tangent steps and projections at a fixed palm pose. A candidate
/// that triggers any stop condition is discarded.
pub fn run_cpo(initial: &GraspState, params: &CpoParams, ctx: &PlanContext) -> Result<CpoOutcome> {
    params.validate()?;
    let hand = ctx.hand;
    let limits = hand.limits();
    let palm = initial.palm_in_object();
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
        let positions = state.contact_positions();
        let normals = state.contact_normals();
        let mut grad = DVector::zeros(9 + hand.dof());
        grad.rows_mut(0, 9)
            .copy_from(&(grad_q_object(&positions) * ctx.weights.w1));
        grad.rows_mut(9, hand.dof())
            .copy_from(&(grad_q_hand(&state.q, &limits) * ctx.weights.w2));
        let j = hand.jacobian_q2c(&palm, &state.q);
        let Some(d0) = cpo_direction(&grad, &j, &normals) else {
            timing.tangent += t0.elapsed();
            reason = StopReason::QualityConverged;
            debug!("cpo: stationary at iteration {it}");
            break;
        };
        let alpha_max = params.sigma_cpo / d0.norm();
        let (d, candidate) = if params.line_search {
            let n = params.ls_samples;
            let tried = ctx.execution.map_range(n, |k| {
                let d = &d0 * (alpha_max * (k + 1) as f64 / n as f64);
                let cand = cpo_project(&state, &d.rows(0, 9).into_owned(), params, ctx);
                let q = quality_of(&cand.state, ctx).0;
                (d, cand, q)
            });
            let best = tried
                .into_iter()
                .reduce(|best, x| if x.2 > best.2 { x } else { best })
                .expect("ls_samples >= 1");
            (best.0, best.1)
        } else {
            let d = &d0 * alpha_max;
            let t1 = Instant::now();
            timing.tangent += t1 - t0;
            let cand = cpo_project(&state, &d.rows(0, 9).into_owned(), params, ctx);
            timing.projection += t1.elapsed();
            (d, cand)
        };
        if params.line_search {
            timing.tangent += t0.elapsed();
        }
        let (d_c, d_q) = split(&d, 9);
        let residuals = tangent_residuals(&d_c, &d_q, &j, &normals);

        let q_cand = quality_of(&candidate.state, ctx).0;
        let gain = q_cand - q_now;
        if gain <= params.delta_c {
            reason = StopReason::QualityConverged;
            debug!("cpo: no quality gain ({gain:e}) at iteration {it}");
            break;
        }
        if misaligned(&candidate.state.contacts, &candidate.pad_normals, params.gamma, ctx) {
            reason = StopReason::NormalLimit;
            debug!("cpo: alignment stop at iteration {it}");
            break;
        }
        let t2 = Instant::now();
        let hit = col_detect(hand, &palm, &candidate.state.q, ctx.proxy, &ctx.collision);
        timing.collision += t2.elapsed();
        if hit {
            reason = StopReason::Collision;
            debug!("cpo: collision at iteration {it}");
            break;
        }

        state = candidate.state;
        q_now = q_cand;
        trace.push(trace_row(Phase::Cpo, it, &state, ctx, residuals));

        if gain <= ZERO_PROGRESS {
            stalled += 1;
            if stalled >= ZERO_PROGRESS_LIMIT {
                info!("cpo: {ZERO_PROGRESS_LIMIT} consecutive steps without measurable progress, stopping");
                reason = StopReason::QualityConverged;
                break;
            }
        } else {
            stalled = 0;
        }
    }

    Ok(CpoOutcome {
        state,
        iterations,
        reason,
        trace,
        timing,
    })
}
