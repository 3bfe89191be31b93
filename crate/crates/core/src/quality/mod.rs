//! Composite grasp quality, its gradients, and the evaluation metrics.

mod wrench;

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kinematics::{grasp_map, GraspState, HandModel, Pose};

pub use wrench::{ferrari_canny, friction_edges, grasp_isotropy, wrench_points, wrench_volume};

/// Weights of `Q = w1 * Q_o + w2 * Q_h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityWeights {
    pub w1: f64,
    pub w2: f64,
}

impl Default for QualityWeights {
    fn default() -> Self {
        Self { w1: 1.0, w2: 0.01 }
    }
}

impl QualityWeights {
    pub fn object_only() -> Self {
        Self { w1: 1.0, w2: 0.0 }
    }

    pub fn total(&self, q_object: f64, q_hand: f64) -> f64 {
        self.w1 * q_object + self.w2 * q_hand
    }
}

/// Friction model used by the Ferrari–Canny metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrictionModel {
    pub mu: f64,
    pub m_edges: usize,
}

impl Default for FrictionModel {
    fn default() -> Self {
        Self { mu: 0.5, m_edges: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub q_total: f64,
    pub q_object: f64,
    pub q_hand: f64,
    pub isotropy: f64,
    pub wrench_volume: f64,
    pub ferrari_canny: f64,
}

/// Twice the area of the contact triangle.
pub fn q_object(contacts: &[Vector3<f64>]) -> f64 {
    let [c1, c2, c3] = [contacts[0], contacts[1], contacts[2]];
    (c2 - c1).cross(&(c3 - c1)).norm()
}

/// Gradient of [`q_object`], stacked per contact. Zero for collinear contacts.
pub fn grad_q_object(contacts: &[Vector3<f64>]) -> DVector<f64> {
    let [c1, c2, c3] = [contacts[0], contacts[1], contacts[2]];
    let cross = (c2 - c1).cross(&(c3 - c1));
    let norm = cross.norm();
    let mut g = DVector::zeros(9);
    if norm <= 1e-300 {
        return g;
    }
    let u = cross / norm;
    let parts = [u.cross(&(c3 - c2)), u.cross(&(c1 - c3)), u.cross(&(c2 - c1))];
    for (i, p) in parts.iter().enumerate() {
        g.fixed_rows_mut::<3>(3 * i).copy_from(p);
    }
    g
}

/// Joint-centring term, `-0.5 * sum(((q - mid) / range)^2)`.
pub fn q_hand(q: &DVector<f64>, limits: &[[f64; 2]]) -> f64 {
    -0.5 * q
        .iter()
        .zip(limits)
        .map(|(&qi, l)| {
            let x = (qi - 0.5 * (l[0] + l[1])) / (l[1] - l[0]);
            x * x
        })
        .sum::<f64>()
}

pub fn grad_q_hand(q: &DVector<f64>, limits: &[[f64; 2]]) -> DVector<f64> {
    DVector::from_iterator(
        q.len(),
        q.iter().zip(limits).map(|(&qi, l)| {
            let range = l[1] - l[0];
            -(qi - 0.5 * (l[0] + l[1])) / (range * range)
        }),
    )
}

/// Full metric report for a grasp state. Wrench metrics are taken about the
/// object origin.
pub fn evaluate_metrics(
    state: &GraspState,
    hand: &HandModel,
    weights: &QualityWeights,
    friction: &FrictionModel,
) -> Result<MetricReport> {
    let positions = state.contact_positions();
    let normals = state.contact_normals();
    let qo = q_object(&positions);
    let qh = q_hand(&state.q, &hand.limits());
    let g = grasp_map(&state.contacts, &Pose::identity())?;
    Ok(MetricReport {
        q_total: weights.total(qo, qh),
        q_object: qo,
        q_hand: qh,
        isotropy: grasp_isotropy(&g),
        wrench_volume: wrench_volume(&g),
        ferrari_canny: ferrari_canny(&positions, &normals, friction.mu, friction.m_edges),
    })
}
