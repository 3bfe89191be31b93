//! Rigid-body poses, the multi-finger hand model and grasp kinematics.

mod grasp;
mod hand;
mod pose;

pub use grasp::{contact_frame, contact_frames, grasp_map, hand_jacobian, GraspState};
pub use hand::{FingerConfig, HandConfig, HandModel, Joint, JointChain, JointConfig, LinkConfig, PrimitiveConfig};
pub use pose::{exp_twist, orthonormalize, rotation_about, se3_exp, skew, Pose, Twist};
