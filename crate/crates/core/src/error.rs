use thiserror::Error;

use crate::config::NeckId;

pub type Result<T> = std::result::Result<T, MaxfaceError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaxfaceError {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("logarithmic growths do not sum to zero (sum = {sum:e})")]
    NonZeroGrowthSum { sum: f64 },

    #[error("{position} is not a pole of the level form")]
    NotAPole { position: crate::C64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular jacobian: rank {rank}, expected {expected}")]
    SingularJacobian { rank: usize, expected: usize },

    #[error("repeated root {root}")]
    RepeatedRoot { root: crate::C64 },

    #[error("configuration is not balanced (residual {residual:e})")]
    NotBalanced { residual: f64 },

    #[error("gluing disks overlap: {0}")]
    DisksOverlap(String),

    #[error("evaluation at a pole (level {level}, z = {z})")]
    PoleEvaluation { level: usize, z: crate::C64 },

    #[error("integration path passes through a pole")]
    PathThroughPole,

    #[error("point is not reachable: {0}")]
    UnreachablePoint(String),

    #[error("t e^(i theta) lies outside the annulus of neck {neck}")]
    OutsideAnnulus { neck: NeckId },

    #[error("theta grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("no vertical mirror through the neck")]
    NoMirror,

    #[error("charts disagree across a seam by {gap:e} (tolerance {tolerance:e})")]
    SeamMismatch { gap: f64, tolerance: f64 },

    #[error("refinement did not reduce the defect (from {initial:e} to {best:e})")]
    NoImprovement { initial: f64, best: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl MaxfaceError {
    /// Solver failures as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            MaxfaceError::NoConvergence { .. }
                | MaxfaceError::SingularJacobian { .. }
                | MaxfaceError::NotBalanced { .. }
                | MaxfaceError::SeamMismatch { .. }
                | MaxfaceError::NoImprovement { .. }
                | MaxfaceError::GridTooCoarse(_)
        )
    }
}
