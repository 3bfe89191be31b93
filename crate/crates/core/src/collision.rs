//! Stop-condition collision test: hand link primitives against a sparse
//! point proxy of the object.

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{HandModel, Pose};
use crate::surface::SurfaceModel;

/// Primitive geometry in its own frame. Capsules run along local z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Capsule { radius: f64, half_length: f64 },
    Box { half_extents: Vector3<f64> },
}

/// Which rigid body a primitive rides on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkRef {
    Palm,
    /// Frame after joint `joint` of finger `finger`.
    Finger {
        finger: usize,
        joint: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionPrimitive {
    pub shape: Shape,
    pub local_pose: Pose,
    pub attached: LinkRef,
}

impl CollisionPrimitive {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.shape {
            Shape::Capsule { radius, half_length } => radius > 0.0 && half_length > 0.0,
            Shape::Box { half_extents } => half_extents.iter().all(|&h| h > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Hand(format!(
                "non-positive primitive dimensions: {:?}",
                self.shape
            )))
        }
    }

    /// Euclidean distance from a point in the primitive frame to the solid
    /// (zero inside).
    pub fn distance_local(&self, p: &Vector3<f64>) -> f64 {
        match self.shape {
            Shape::Capsule { radius, half_length } => {
                let z = p.z.clamp(-half_length, half_length);
                ((p - Vector3::new(0.0, 0.0, z)).norm() - radius).max(0.0)
            }
            Shape::Box { half_extents } => {
                let d = p.abs() - half_extents;
                d.map(|c| c.max(0.0)).norm()
            }
        }
    }

    /// World-frame bounds of the primitive placed at `frame`, grown by `margin`.
    fn bounds(&self, frame: &Pose, margin: f64) -> (Vector3<f64>, Vector3<f64>) {
        let r = &frame.rotation;
        let c = frame.translation;
        let ext = match self.shape {
            Shape::Capsule { radius, half_length } => r.column(2).abs() * half_length + Vector3::repeat(radius),
            Shape::Box { half_extents } => r.abs() * half_extents,
        };
        let ext = ext + Vector3::repeat(margin);
        (c - ext, c + ext)
    }
}

/// Downsampled object points used for collision checks, in object frame.
#[derive(Debug, Clone)]
pub struct CollisionProxy {
    pub points: Vec<Vector3<f64>>,
    pub source_cell: f64,
}

impl CollisionProxy {
    /// Default cell: 2% of the bounding-box diagonal.
    pub const DEFAULT_CELL_FRACTION: f64 = 0.02;

    pub fn from_surface(surface: &SurfaceModel, cell: f64) -> Result<Self> {
        let points = surface.downsample(cell)?;
        if points.is_empty() {
            return Err(Error::Parameter("empty collision proxy".into()));
        }
        Ok(CollisionProxy {
            points,
            source_cell: cell,
        })
    }

    pub fn with_default_cell(surface: &SurfaceModel) -> Result<Self> {
        Self::from_surface(surface, surface.bbox().diagonal() * Self::DEFAULT_CELL_FRACTION)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollisionParams {
    /// Inflation of every primitive (m).
    pub clearance: f64,
    /// Depth below the fingertip pad plane that is ignored on distal links (m).
    pub pad_depth: f64,
}

impl Default for CollisionParams {
    fn default() -> Self {
        CollisionParams {
            clearance: 0.0,
            pad_depth: 1e-3,
        }
    }
}

/// A primitive posed in the proxy frame, plus its pad clip plane if it sits
/// on a distal link.
struct Placed<'a> {
    prim: &'a CollisionPrimitive,
    frame: Pose,
    inv: Pose,
    pad: Option<(Vector3<f64>, Vector3<f64>)>,
}

fn place<'a>(hand: &'a HandModel, palm: &Pose, q: &DVector<f64>) -> Vec<Placed<'a>> {
    let mut out = Vec::new();
    for prim in &hand.palm_primitives {
        let frame = palm * &prim.local_pose;
        out.push(Placed {
            prim,
            inv: frame.inverse(),
            frame,
            pad: None,
        });
    }
    for (fi, finger) in hand.fingers.iter().enumerate() {
        let qi = hand.finger_q(q, fi);
        let frames = finger.link_frames(palm, qi);
        let last = finger.joints.len() - 1;
        let tip = finger.tip_pose(frames.last().unwrap());
        let pad_normal = tip.rotation * finger.fingertip_normal;
        for prim in &finger.link_primitives {
            let LinkRef::Finger { joint, .. } = prim.attached else {
                continue;
            };
            let frame = frames[joint] * prim.local_pose;
            out.push(Placed {
                prim,
                inv: frame.inverse(),
                frame,
                pad: (joint == last).then_some((tip.translation, pad_normal)),
            });
        }
    }
    out
}

/// Every hand primitive with its pose in the frame of `palm`.
pub fn posed_primitives<'a>(hand: &'a HandModel, palm: &Pose, q: &DVector<f64>) -> Vec<(Pose, &'a CollisionPrimitive)> {
    place(hand, palm, q).into_iter().map(|pl| (pl.frame, pl.prim)).collect()
}

fn hits(pl: &Placed, p: &Vector3<f64>, params: &CollisionParams) -> bool {
    if let Some((tip, n)) = pl.pad {
        if (p - tip).dot(&n) > -params.pad_depth {
            return false;
        }
    }
    pl.prim.distance_local(&pl.inv.transform_point(p)) <= params.clearance
}

/// True when any proxy point lies inside any (inflated) hand primitive.
/// `palm` is the palm pose expressed in the proxy's frame.
pub fn col_detect(
    hand: &HandModel,
    palm: &Pose,
    q: &DVector<f64>,
    proxy: &CollisionProxy,
    params: &CollisionParams,
) -> bool {
    first_collision(hand, palm, q, proxy, params).is_some()
}

/// `(primitive, point)` indices of the first detected collision. Primitive
/// indices count palm primitives first, then fingers in order.
pub fn first_collision(
    hand: &HandModel,
    palm: &Pose,
    q: &DVector<f64>,
    proxy: &CollisionProxy,
    params: &CollisionParams,
) -> Option<(usize, usize)> {
    let placed = place(hand, palm, q);
    for (k, pl) in placed.iter().enumerate() {
        let (lo, hi) = pl.prim.bounds(&pl.frame, params.clearance);
        for (i, p) in proxy.points.iter().enumerate() {
            if p.x < lo.x || p.y < lo.y || p.z < lo.z || p.x > hi.x || p.y > hi.y || p.z > hi.z {
                continue;
            }
            if hits(pl, p, params) {
                return Some((k, i));
            }
        }
    }
    None
}
