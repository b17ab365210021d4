//! Rigid grasp coupling between the robot and the limb, and the IK handshake
//! that projects a robot configuration onto the coupled manifold.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{CouplingError, KinematicsError};
use crate::geometry::Pose;
use crate::kinematics::{ChainSpec, IkParams};

/// Fixed contact transforms for one grasp episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingTransforms {
    /// Contact frame in the end-effector frame.
    pub t_eef_cp: Pose,
    /// Contact frame in the grasped limb link frame.
    pub t_limb_cp: Pose,
    /// Limb link that carries the contact.
    pub limb_link: usize,
}

pub fn transforms_from_grasp(
    cp_pose: &Pose,
    limb_pose: &Pose,
    eef_pose: &Pose,
    limb_link: usize,
) -> CouplingTransforms {
    CouplingTransforms {
        t_eef_cp: eef_pose.inverse().compose(cp_pose),
        t_limb_cp: limb_pose.inverse().compose(cp_pose),
        limb_link,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledState {
    pub q_r: DVector<f64>,
    pub q_h: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Handshake {
    pub state: CoupledState,
    /// Limb solution before clamping, used for out-of-range accounting.
    pub q_h_raw: DVector<f64>,
}

pub fn default_limb_ik() -> IkParams {
    IkParams {
        max_iters: 100,
        clamp_each_iter: false,
        best_fit: Some((0.05, 0.5)),
        ..IkParams::default()
    }
}

/// Robot and limb chains joined by a grasp.
#[derive(Clone, Debug)]
pub struct CoupledSystem {
    pub robot: ChainSpec,
    pub limb: ChainSpec,
    pub tf: CouplingTransforms,
    pub robot_ik: IkParams,
    pub limb_ik: IkParams,
}

impl CoupledSystem {
    pub fn new(robot: ChainSpec, limb: ChainSpec, tf: CouplingTransforms) -> Self {
        Self {
            robot,
            limb,
            tf,
            robot_ik: IkParams::default(),
            limb_ik: default_limb_ik(),
        }
    }

    pub fn robot_contact(&self, q_r: &[f64]) -> Pose {
        self.robot.end_pose(q_r).compose(&self.tf.t_eef_cp)
    }

    pub fn limb_contact(&self, q_h: &[f64]) -> Pose {
        self.limb
            .frame_pose(q_h, self.tf.limb_link, &self.tf.t_limb_cp)
    }

    /// End-effector pose that holds the limb at `q_h`.
    pub fn eef_for_limb(&self, q_h: &[f64]) -> Pose {
        self.limb_contact(q_h).compose(&self.tf.t_eef_cp.inverse())
    }

    pub fn robot_from_limb(
        &self,
        q_h: &[f64],
        seed: &[f64],
    ) -> Result<DVector<f64>, CouplingError> {
        self.robot
            .inverse_kinematics(&self.eef_for_limb(q_h), seed, &self.robot_ik)
            .map(|s| s.q)
            .map_err(CouplingError::Unreachable)
    }

    /// Limb configuration matching the robot's contact frame, not clamped.
    pub fn limb_from_robot(
        &self,
        q_r: &[f64],
        seed: &[f64],
    ) -> Result<DVector<f64>, CouplingError> {
        self.solve_limb(&self.robot_contact(q_r), seed)
            .map_err(CouplingError::Unreachable)
    }

    fn solve_limb(&self, target: &Pose, seed: &[f64]) -> Result<DVector<f64>, KinematicsError> {
        let link = self.tf.limb_link;
        let offset = &self.tf.t_limb_cp;
        match self
            .limb
            .inverse_kinematics_frame(link, offset, target, seed, &self.limb_ik)
        {
            Ok(sol) => Ok(sol.q),
            Err(first) => match self.elbow_seed(target, seed) {
                Some(alt) => self
                    .limb
                    .inverse_kinematics_frame(link, offset, target, alt.as_slice(), &self.limb_ik)
                    .map(|s| s.q)
                    .map_err(|_| first),
                None => Err(first),
            },
        }
    }

    /// Seed whose elbow angle matches the shoulder-to-contact distance.
    fn elbow_seed(&self, target: &Pose, seed: &[f64]) -> Option<DVector<f64>> {
        use crate::kinematics::limb::{DOF, ELBOW};
        if self.limb.dof() != DOF || self.tf.limb_link < ELBOW {
            return None;
        }
        let l1 = self.limb.joints[ELBOW].origin.translation.norm();
        let p = if self.tf.limb_link == ELBOW {
            self.tf.t_limb_cp.translation
        } else {
            self.limb
                .tool
                .transform_point(&self.tf.t_limb_cp.translation)
        };
        let d = (target.translation - self.limb.base.translation).norm();
        // |(l1,0,0) + R(θ) p|² = d² with R about -y: l1·(p.x cosθ - p.z sinθ) = c
        let c = 0.5 * (d * d - l1 * l1 - p.norm_squared());
        let (a, b) = (l1 * p.x, l1 * p.z);
        let r = a.hypot(b);
        if r < 1e-9 {
            return None;
        }
        let theta = (c / r).clamp(-1.0, 1.0).acos() - b.atan2(a);
        let mut out = DVector::from_column_slice(seed);
        out[ELBOW] = theta;
        Some(out)
    }

    /// One pass: limb IK from the end-effector, clamp, limb FK, recomposed
    /// end-effector pose, robot IK seeded with `q_r`.
    pub fn handshake(&self, q_r: &[f64], seed_h: &[f64]) -> Result<Handshake, CouplingError> {
        let target = self.robot_contact(q_r);
        let q_h_raw =
            self.solve_limb(&target, seed_h)
                .map_err(|source| CouplingError::HandshakeFailed {
                    stage: "limb",
                    source,
                })?;
        let q_h = self.limb.clamp_to_limits(q_h_raw.as_slice());
        let eef = self.eef_for_limb(q_h.as_slice());
        let q_r = self
            .robot
            .inverse_kinematics(&eef, q_r, &self.robot_ik)
            .map_err(|source| CouplingError::HandshakeFailed {
                stage: "robot",
                source,
            })?
            .q;
        Ok(Handshake {
            state: CoupledState { q_r, q_h },
            q_h_raw,
        })
    }

    /// Discrepancy between the robot-side and limb-side contact frames.
    pub fn residual(&self, state: &CoupledState) -> (f64, f64) {
        self.robot_contact(state.q_r.as_slice())
            .distance(&self.limb_contact(state.q_h.as_slice()))
    }

    pub fn is_consistent(&self, state: &CoupledState) -> bool {
        let (p, r) = self.residual(state);
        p <= self.robot_ik.pos_tol && r <= self.robot_ik.rot_tol
    }
}
