use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation matrix is not orthonormal with determinant +1")]
    NotOrthonormal,
    #[error("quaternion has zero or non-finite norm")]
    DegenerateQuaternion,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("configuration has {got} angles, chain has {expected} joints")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("IK did not converge: residual {pos:.4} m / {rot:.4} rad after {iters} iterations")]
    Unreachable { pos: f64, rot: f64, iters: usize },
    #[error("joint {joint}: limits [{lo}, {hi}] are empty")]
    EmptyLimits { joint: usize, lo: f64, hi: f64 },
    #[error("age-group reduction collapses joint {joint}: hi {hi} - {reduction} <= lo {lo}")]
    CollapsedLimits {
        joint: usize,
        lo: f64,
        hi: f64,
        reduction: f64,
    },
    #[error("age-group reductions require a 4-DOF limb chain, got {0} joints")]
    NotALimb(usize),
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
}

/// Configuration file problems. `line` is 1-based when the location is known.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Invalid {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Semantic { path: String, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraspError {
    #[error("no feasible grasp candidate")]
    NoGraspFound,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("robot cannot realize the coupled end-effector pose: {0}")]
    Unreachable(KinematicsError),
    #[error("IK handshake failed in the {stage} stage: {source}")]
    HandshakeFailed {
        stage: &'static str,
        source: KinematicsError,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("nominal trajectory infeasible at waypoint {index}")]
    Infeasible { index: usize },
    #[error("no collision-free rollout for segment starting at waypoint {index}")]
    Blocked { index: usize },
    #[error("planning exceeded {limit_s:.1} s")]
    Timeout { limit_s: f64 },
    #[error("start or goal configuration outside joint limits")]
    OutOfRange,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BathingError {
    #[error("no feasible next limb configuration after {rounds} rounds")]
    NoFeasibleGoal { rounds: usize },
}

#[derive(Debug, Error)]
pub enum TrialError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("could not sample a feasible trial setup after {attempts} attempts")]
    NoSetup { attempts: usize },
    #[error(transparent)]
    Grasp(#[from] GraspError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
