//! Hand description: serial revolute chains on a common palm.

use std::ops::Range;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::pose::{rotation_about, Pose};
use crate::collision::{CollisionPrimitive, LinkRef, Shape};
use crate::error::{Error, Result};

const DEFAULT_HAND_JSON: &str = include_str!("../../data/barrett8.json");

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub axis: Unit<Vector3<f64>>,
    /// Joint origin in the parent frame.
    pub origin: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointChain {
    pub name: String,
    pub joints: Vec<Joint>,
    /// Per-joint `[q_min, q_max]` (rad).
    pub limits: Vec<[f64; 2]>,
    /// Fingertip position in the last link frame.
    pub fingertip_offset: Vector3<f64>,
    /// Unit normal of the fingertip pad in the last link frame.
    pub fingertip_normal: Vector3<f64>,
    pub link_primitives: Vec<CollisionPrimitive>,
}

impl JointChain {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    /// Frame after each joint, starting from `base`.
    pub fn link_frames(&self, base: &Pose, q: &[f64]) -> Vec<Pose> {
        let mut frames = Vec::with_capacity(self.joints.len());
        let mut cur = *base;
        for (j, joint) in self.joints.iter().enumerate() {
            let step = Pose::new(rotation_about(&joint.axis, q[j]), joint.origin);
            cur = cur * step;
            frames.push(cur);
        }
        frames
    }

    /// Fingertip frame: last link rotation, fingertip position.
    pub fn tip_pose(&self, last: &Pose) -> Pose {
        Pose::new(last.rotation, last.transform_point(&self.fingertip_offset))
    }

    pub fn fingertip(&self, base: &Pose, q: &[f64]) -> Pose {
        let frames = self.link_frames(base, q);
        self.tip_pose(frames.last().expect("chains have at least one joint"))
    }

    /// 3 x dof translational Jacobian of the fingertip, in `base`'s frame of
    /// reference.
    pub fn jacobian(&self, base: &Pose, q: &[f64]) -> DMatrix<f64> {
        let frames = self.link_frames(base, q);
        let tip = self.tip_pose(frames.last().unwrap()).translation;
        let mut jac = DMatrix::zeros(3, self.dof());
        let mut parent = *base;
        for (j, joint) in self.joints.iter().enumerate() {
            let origin = parent.transform_point(&joint.origin);
            let axis = parent.rotation * joint.axis.into_inner();
            jac.fixed_view_mut::<3, 1>(0, j).copy_from(&axis.cross(&(tip - origin)));
            parent = frames[j];
        }
        jac
    }

    /// Upper bound on the distance from the first joint origin to the tip.
    pub fn reach(&self) -> f64 {
        self.joints.iter().skip(1).map(|j| j.origin.norm()).sum::<f64>() + self.fingertip_offset.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandModel {
    pub name: String,
    pub fingers: Vec<JointChain>,
    pub palm_primitives: Vec<CollisionPrimitive>,
    offsets: Vec<usize>,
}

impl HandModel {
    /// Decoupled 8-DOF Barrett-like hand shipped with the crate.
    pub fn default_barrett() -> Self {
        Self::from_json(DEFAULT_HAND_JSON).expect("bundled hand config is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: HandConfig = serde_json::from_str(text)?;
        cfg.build()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn dof(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn finger_count(&self) -> usize {
        self.fingers.len()
    }

    pub fn finger_range(&self, finger: usize) -> Range<usize> {
        self.offsets[finger]..self.offsets[finger + 1]
    }

    pub fn finger_q<'a>(&self, q: &'a DVector<f64>, finger: usize) -> &'a [f64] {
        &q.as_slice()[self.finger_range(finger)]
    }

    pub fn lower(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dof(),
            self.fingers.iter().flat_map(|f| f.limits.iter().map(|l| l[0])),
        )
    }

    pub fn upper(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dof(),
            self.fingers.iter().flat_map(|f| f.limits.iter().map(|l| l[1])),
        )
    }

    pub fn limits(&self) -> Vec<[f64; 2]> {
        self.fingers.iter().flat_map(|f| f.limits.iter().copied()).collect()
    }

    pub fn midpoints(&self) -> DVector<f64> {
        (self.lower() + self.upper()) * 0.5
    }

    pub fn clamp(&self, q: &DVector<f64>) -> DVector<f64> {
        let (lo, hi) = (self.lower(), self.upper());
        DVector::from_iterator(q.len(), (0..q.len()).map(|i| q[i].clamp(lo[i], hi[i])))
    }

    /// Replaces every joint limit, keeping geometry.
    pub fn with_limits(mut self, lo: f64, hi: f64) -> Self {
        for f in &mut self.fingers {
            for l in &mut f.limits {
                *l = [lo, hi];
            }
        }
        self
    }

    /// Fingertip frames for every finger, with the palm at `palm`.
    pub fn fk_fingertips(&self, palm: &Pose, q: &DVector<f64>) -> Vec<Pose> {
        (0..self.fingers.len())
            .map(|i| self.fingers[i].fingertip(palm, self.finger_q(q, i)))
            .collect()
    }

    /// Fingertip pad normals in the same frame as `palm`.
    pub fn fingertip_normals(&self, palm: &Pose, q: &DVector<f64>) -> Vec<Vector3<f64>> {
        self.fk_fingertips(palm, q)
            .iter()
            .zip(&self.fingers)
            .map(|(t, f)| t.rotation * f.fingertip_normal)
            .collect()
    }

    /// Block-diagonal `3F x dof` fingertip Jacobian.
    pub fn jacobian_q2c(&self, palm: &Pose, q: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(3 * self.fingers.len(), self.dof());
        for (i, finger) in self.fingers.iter().enumerate() {
            let block = finger.jacobian(palm, self.finger_q(q, i));
            jac.view_mut((3 * i, self.offsets[i]), (3, finger.dof()))
                .copy_from(&block);
        }
        jac
    }

    /// Upper bound on the distance between any two fingertips.
    pub fn max_span(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in self.fingers.iter().enumerate() {
            for b in &self.fingers[i + 1..] {
                let d = (a.joints[0].origin - b.joints[0].origin).norm();
                best = best.max(d + a.reach() + b.reach());
            }
        }
        best
    }

    pub fn to_config(&self) -> HandConfig {
        HandConfig::from_model(self)
    }
}

// --- config file -----------------------------------------------------------

/// JSON hand description. See `docs/hand-config.md` for the schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HandConfig {
    #[serde(default)]
    pub name: String,
    pub fingers: Vec<FingerConfig>,
    #[serde(default)]
    pub palm: Vec<PrimitiveConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FingerConfig {
    #[serde(default)]
    pub name: String,
    pub joints: Vec<JointConfig>,
    pub fingertip_offset: [f64; 3],
    pub fingertip_normal: [f64; 3],
    #[serde(default)]
    pub links: Vec<LinkConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointConfig {
    pub axis: [f64; 3],
    pub origin: [f64; 3],
    pub limits: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Index of the joint whose child frame carries the primitive.
    pub joint: usize,
    #[serde(flatten)]
    pub primitive: PrimitiveConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimitiveConfig {
    /// Segment `from`-`to` swept by a sphere of `radius`.
    Capsule { from: [f64; 3], to: [f64; 3], radius: f64 },
    Box {
        center: [f64; 3],
        half_extents: [f64; 3],
        /// Row-major; identity when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<[f64; 9]>,
    },
}

fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

impl PrimitiveConfig {
    fn build(&self, attached: LinkRef) -> Result<CollisionPrimitive> {
        let prim = match *self {
            PrimitiveConfig::Capsule { from, to, radius } => {
                let (a, b) = (v3(from), v3(to));
                let axis = b - a;
                let len = axis.norm();
                if len == 0.0 {
                    return Err(Error::Hand("capsule with coincident endpoints".into()));
                }
                let z = axis / len;
                // any rotation taking local z onto the segment direction
                let rot = match Unit::try_new(Vector3::z().cross(&z), 1e-12) {
                    Some(u) => rotation_about(&u, z.z.clamp(-1.0, 1.0).acos()),
                    None if z.z > 0.0 => Matrix3::identity(),
                    None => rotation_about(&Vector3::x(), std::f64::consts::PI),
                };
                CollisionPrimitive {
                    shape: Shape::Capsule {
                        radius,
                        half_length: len / 2.0,
                    },
                    local_pose: Pose::new(rot, (a + b) / 2.0),
                    attached,
                }
            }
            PrimitiveConfig::Box {
                center,
                half_extents,
                rotation,
            } => CollisionPrimitive {
                shape: Shape::Box {
                    half_extents: v3(half_extents),
                },
                local_pose: Pose::new(
                    rotation
                        .map(|r| Matrix3::from_row_slice(&r))
                        .unwrap_or_else(Matrix3::identity),
                    v3(center),
                ),
                attached,
            },
        };
        prim.validate()?;
        Ok(prim)
    }

    fn from_primitive(p: &CollisionPrimitive) -> Self {
        match p.shape {
            Shape::Capsule { radius, half_length } => {
                let d = p.local_pose.rotation.column(2) * half_length;
                let (a, b) = (p.local_pose.translation - d, p.local_pose.translation + d);
                PrimitiveConfig::Capsule {
                    from: [a.x, a.y, a.z],
                    to: [b.x, b.y, b.z],
                    radius,
                }
            }
            Shape::Box { half_extents } => {
                let (rotation, center) = p.local_pose.to_row_major();
                PrimitiveConfig::Box {
                    center,
                    half_extents: [half_extents.x, half_extents.y, half_extents.z],
                    rotation: Some(rotation),
                }
            }
        }
    }
}

impl HandConfig {
    pub fn build(&self) -> Result<HandModel> {
        if self.fingers.is_empty() {
            return Err(Error::Hand("hand has no fingers".into()));
        }
        let mut fingers = Vec::with_capacity(self.fingers.len());
        let mut offsets = vec![0];
        for (fi, f) in self.fingers.iter().enumerate() {
            if f.joints.is_empty() {
                return Err(Error::Hand(format!("finger {fi} has no joints")));
            }
            let mut joints = Vec::new();
            let mut limits = Vec::new();
            for (ji, j) in f.joints.iter().enumerate() {
                let axis = Unit::try_new(v3(j.axis), 1e-12)
                    .ok_or_else(|| Error::Hand(format!("finger {fi} joint {ji}: zero axis")))?;
                if !(j.limits[0] < j.limits[1]) {
                    return Err(Error::Hand(format!(
                        "finger {fi} joint {ji}: limits {:?} not increasing",
                        j.limits
                    )));
                }
                joints.push(Joint {
                    axis,
                    origin: v3(j.origin),
                });
                limits.push(j.limits);
            }
            let normal = v3(f.fingertip_normal)
                .try_normalize(1e-12)
                .ok_or_else(|| Error::Hand(format!("finger {fi}: zero fingertip normal")))?;
            let link_primitives = f
                .links
                .iter()
                .map(|l| {
                    if l.joint >= joints.len() {
                        return Err(Error::Hand(format!("finger {fi}: link on missing joint {}", l.joint)));
                    }
                    l.primitive.build(LinkRef::Finger {
                        finger: fi,
                        joint: l.joint,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            offsets.push(offsets.last().unwrap() + joints.len());
            fingers.push(JointChain {
                name: if f.name.is_empty() {
                    format!("F{}", fi + 1)
                } else {
                    f.name.clone()
                },
                joints,
                limits,
                fingertip_offset: v3(f.fingertip_offset),
                fingertip_normal: normal,
                link_primitives,
            });
        }
        let palm_primitives = self
            .palm
            .iter()
            .map(|p| p.build(LinkRef::Palm))
            .collect::<Result<Vec<_>>>()?;
        Ok(HandModel {
            name: self.name.clone(),
            fingers,
            palm_primitives,
            offsets,
        })
    }

    fn from_model(h: &HandModel) -> Self {
        HandConfig {
            name: h.name.clone(),
            fingers: h
                .fingers
                .iter()
                .map(|f| FingerConfig {
                    name: f.name.clone(),
                    joints: f
                        .joints
                        .iter()
                        .zip(&f.limits)
                        .map(|(j, l)| JointConfig {
                            axis: [j.axis.x, j.axis.y, j.axis.z],
                            origin: [j.origin.x, j.origin.y, j.origin.z],
                            limits: *l,
                        })
                        .collect(),
                    fingertip_offset: [f.fingertip_offset.x, f.fingertip_offset.y, f.fingertip_offset.z],
                    fingertip_normal: [f.fingertip_normal.x, f.fingertip_normal.y, f.fingertip_normal.z],
                    links: f
                        .link_primitives
                        .iter()
                        .map(|p| LinkConfig {
                            joint: match p.attached {
                                LinkRef::Finger { joint, .. } => joint,
                                LinkRef::Palm => 0,
                            },
                            primitive: PrimitiveConfig::from_primitive(p),
                        })
                        .collect(),
                })
                .collect(),
            palm: h.palm_primitives.iter().map(PrimitiveConfig::from_primitive).collect(),
        }
    }
}
