//! Grasp state, contact frames, grasp map and hand Jacobian.
//!
//! All functions take poses expressed in one common frame in which the palm
//! is considered static. The grasp map is written in object (body)
//! coordinates so that `G^T V = J_h qdot` holds for a body twist `V`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::hand::HandModel;
use super::pose::{skew, Pose};
use crate::error::{Error, Result};
use crate::surface::SurfacePoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspState {
    /// Palm pose in world.
    pub palm: Pose,
    pub q: DVector<f64>,
    /// Contacts in object frame.
    pub contacts: Vec<SurfacePoint>,
    /// Object pose in world.
    pub object_pose: Pose,
}

impl GraspState {
    pub fn palm_in_object(&self) -> Pose {
        self.object_pose.inverse() * self.palm
    }

    pub fn contact_positions(&self) -> Vec<Vector3<f64>> {
        self.contacts.iter().map(|c| c.position).collect()
    }

    pub fn contact_normals(&self) -> Vec<Vector3<f64>> {
        self.contacts.iter().map(|c| c.normal).collect()
    }

    /// Fingertip positions in object frame.
    pub fn fingertips_in_object(&self, hand: &HandModel) -> Vec<Vector3<f64>> {
        hand.fk_fingertips(&self.palm_in_object(), &self.q)
            .into_iter()
            .map(|p| p.translation)
            .collect()
    }

    /// Largest fingertip-to-contact distance.
    pub fn contact_gap(&self, hand: &HandModel) -> f64 {
        self.fingertips_in_object(hand)
            .iter()
            .zip(&self.contacts)
            .map(|(f, c)| (f - c.position).norm())
            .fold(0.0, f64::max)
    }
}

/// Right-handed contact frame with z along `inward`. x is the global x axis
/// projected onto the tangent plane, or global y when x is nearly normal.
pub fn contact_frame(inward: &Vector3<f64>) -> Option<Matrix3<f64>> {
    let z = inward.try_normalize(1e-12)?;
    let project = |a: Vector3<f64>| a - z * z.dot(&a);
    let x = project(Vector3::x())
        .try_normalize(1e-3)
        .or_else(|| project(Vector3::y()).try_normalize(1e-3))?;
    let y = z.cross(&x);
    Some(Matrix3::from_columns(&[x, y, z]))
}

/// Contact frames in the common frame, for contacts carried by an object at
/// `object_pose`.
pub fn contact_frames(contacts: &[SurfacePoint], object_pose: &Pose) -> Result<Vec<Matrix3<f64>>> {
    contacts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let inward = -(object_pose.rotation * c.normal);
            contact_frame(&inward).ok_or(Error::DegenerateContact(i))
        })
        .collect()
}

/// `6 x 3n` grasp map for frictional point contacts in body coordinates:
/// block `i` is `[R_ci; [c_i]x R_ci]` with `c_i` and `R_ci` in object frame.
pub fn grasp_map(contacts: &[SurfacePoint], object_pose: &Pose) -> Result<DMatrix<f64>> {
    let frames = contact_frames(contacts, object_pose)?;
    let rt = object_pose.rotation.transpose();
    let mut g = DMatrix::zeros(6, 3 * contacts.len());
    for (i, (c, frame)) in contacts.iter().zip(&frames).enumerate() {
        let r_obj = rt * frame;
        g.fixed_view_mut::<3, 3>(0, 3 * i).copy_from(&r_obj);
        g.fixed_view_mut::<3, 3>(3, 3 * i)
            .copy_from(&(skew(&c.position) * r_obj));
    }
    Ok(g)
}

/// `3n x dof` hand Jacobian: fingertip Jacobian blocks rotated into the
/// contact frames.
pub fn hand_jacobian(
    hand: &HandModel,
    palm: &Pose,
    q: &DVector<f64>,
    contacts: &[SurfacePoint],
    object_pose: &Pose,
) -> Result<DMatrix<f64>> {
    let frames = contact_frames(contacts, object_pose)?;
    let mut jh = hand.jacobian_q2c(palm, q);
    for (i, frame) in frames.iter().enumerate() {
        let block = frame.transpose() * jh.rows(3 * i, 3);
        jh.rows_mut(3 * i, 3).copy_from(&block);
    }
    Ok(jh)
}
