//! Per-iteration records and termination reasons shared by the optimisation
//! stages.

use std::time::Duration;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Cpo,
    Ppo,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Cpo => "cpo",
            Phase::Ppo => "ppo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    QualityConverged,
    NormalLimit,
    Collision,
    MaxIters,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::QualityConverged => "quality_converged",
            StopReason::NormalLimit => "normal_limit",
            StopReason::Collision => "collision",
            StopReason::MaxIters => "max_iters",
        }
    }
}

/// One accepted state. `residual_*` are relative constraint residuals of
/// the tangent direction that produced it (zero for the initial row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub phase: Phase,
    pub iteration: usize,
    pub q_total: f64,
    pub q_object: f64,
    pub q_hand: f64,
    pub contacts: [Vector3<f64>; 3],
    pub residual_a: f64,
    pub residual_b: f64,
    /// Largest fingertip-to-contact distance (m).
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub tangent: Duration,
    pub projection: Duration,
    pub collision: Duration,
}

impl Timing {
    pub fn total(&self) -> Duration {
        self.tangent + self.projection + self.collision
    }
}

impl std::ops::AddAssign for Timing {
    fn add_assign(&mut self, rhs: Self) {
        self.tangent += rhs.tangent;
        self.projection += rhs.projection;
        self.collision += rhs.collision;
    }
}
