//! Shared, immutable inputs of a planning run.

use serde::{Deserialize, Serialize};

use crate::collision::{CollisionParams, CollisionProxy};
use crate::kinematics::HandModel;
use crate::par::Execution;
use crate::quality::QualityWeights;
use crate::surface::SurfaceModel;

/// When the surface/pad normal test ends an inner loop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentPredicate {
    /// Stop when `|n_des . n_f| < gamma` (pad no longer facing the surface).
    #[default]
    Misalignment,
    /// Stop when `|n_des . n_f| >= gamma`.
    PaperLiteral,
}

impl AlignmentPredicate {
    pub fn fires(self, cosine: f64, gamma: f64) -> bool {
        match self {
            AlignmentPredicate::Misalignment => cosine.abs() < gamma,
            AlignmentPredicate::PaperLiteral => cosine.abs() >= gamma,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PlanContext<'a> {
    pub surface: &'a SurfaceModel,
    pub hand: &'a HandModel,
    pub proxy: &'a CollisionProxy,
    pub collision: CollisionParams,
    pub weights: QualityWeights,
    pub alignment: AlignmentPredicate,
    pub execution: Execution,
}

impl<'a> PlanContext<'a> {
    pub fn new(surface: &'a SurfaceModel, hand: &'a HandModel, proxy: &'a CollisionProxy) -> Self {
        PlanContext {
            surface,
            hand,
            proxy,
            collision: CollisionParams::default(),
            weights: QualityWeights::default(),
            alignment: AlignmentPredicate::default(),
            execution: Execution::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicates_are_complementary() {
        for c in [-1.0, -0.61, -0.6, -0.2, 0.0, 0.3, 0.6, 0.9] {
            let a = AlignmentPredicate::Misalignment.fires(c, 0.6);
            let b = AlignmentPredicate::PaperLiteral.fires(c, 0.6);
            assert_ne!(a, b);
        }
        assert!(AlignmentPredicate::Misalignment.fires(0.1, 0.6));
        assert!(!AlignmentPredicate::Misalignment.fires(-0.95, 0.6));
    }
}
