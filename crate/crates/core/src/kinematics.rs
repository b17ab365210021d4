//! Serial chains: forward kinematics, geometric Jacobians, damped
//! least-squares IK and joint-limit handling for both the robot and the
//! 4-DOF human arm.

use std::collections::BTreeMap;

use nalgebra::{DVector, Dyn, Matrix6, OMatrix, Unit, Vector3, Vector6, U6};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::KinematicsError;
use crate::geometry::{rotation_vector, Pose};

pub type RobotConfig = DVector<f64>;
pub type LimbConfig = DVector<f64>;
pub type Jacobian = OMatrix<f64, U6, Dyn>;

/// Index names for the human arm joints.
pub mod limb {
    pub const FLEXION: usize = 0;
    pub const EXTERNAL_ROTATION: usize = 1;
    pub const ABDUCTION: usize = 2;
    pub const ELBOW: usize = 3;
    pub const DOF: usize = 4;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    #[default]
    Revolute,
    Prismatic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub axis: Unit<Vector3<f64>>,
    /// Pose of this joint's frame in the parent link frame at q = 0.
    pub origin: Pose,
    pub limits: (f64, f64),
}

impl Joint {
    pub fn revolute(name: &str, axis: Vector3<f64>, origin: Pose, limits: (f64, f64)) -> Self {
        Self {
            name: name.to_string(),
            kind: JointKind::Revolute,
            axis: Unit::new_normalize(axis),
            origin,
            limits,
        }
    }

    pub fn prismatic(name: &str, axis: Vector3<f64>, origin: Pose, limits: (f64, f64)) -> Self {
        Self {
            kind: JointKind::Prismatic,
            ..Self::revolute(name, axis, origin, limits)
        }
    }

    #[inline]
    fn motion(&self, q: f64) -> Pose {
        match self.kind {
            JointKind::Revolute => Pose::from_axis_angle(&self.axis, q),
            JointKind::Prismatic => Pose::from_translation(self.axis.into_inner() * q),
        }
    }
}

/// Unbranched serial chain. Link `i` is the frame after joint `i`; the end
/// frame is the last link composed with `tool`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    pub name: String,
    pub base: Pose,
    pub joints: Vec<Joint>,
    pub tool: Pose,
    pub frames: BTreeMap<String, usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IkParams {
    pub max_iters: usize,
    pub pos_tol: f64,
    pub rot_tol: f64,
    pub damping: f64,
    /// Clip into limits after every iteration.
    pub clamp_each_iter: bool,
    /// Largest joint-space step per iteration.
    pub max_step: f64,
    /// Meters per radian used to weigh orientation error.
    pub rot_weight: f64,
    /// When set, the solver minimizes the residual instead of requiring an
    /// exact match and accepts any stationary point within these bounds.
    pub best_fit: Option<(f64, f64)>,
}

impl Default for IkParams {
    fn default() -> Self {
        Self {
            max_iters: 200,
            pos_tol: 1e-3,
            rot_tol: 1e-2,
            damping: 1e-2,
            clamp_each_iter: true,
            max_step: 0.4,
            rot_weight: 0.3,
            best_fit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IkSolution {
    pub q: DVector<f64>,
    pub pos_err: f64,
    pub rot_err: f64,
    pub iters: usize,
}

impl ChainSpec {
    pub fn new(
        name: &str,
        base: Pose,
        joints: Vec<Joint>,
        tool: Pose,
    ) -> Result<Self, KinematicsError> {
        for (i, j) in joints.iter().enumerate() {
            if !(j.limits.0 < j.limits.1) {
                return Err(KinematicsError::EmptyLimits {
                    joint: i,
                    lo: j.limits.0,
                    hi: j.limits.1,
                });
            }
        }
        Ok(Self {
            name: name.to_string(),
            base,
            joints,
            tool,
            frames: BTreeMap::new(),
        })
    }

    pub fn with_frame(mut self, name: &str, link: usize) -> Self {
        self.frames.insert(name.to_string(), link);
        self
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn frame(&self, name: &str) -> Result<usize, KinematicsError> {
        self.frames
            .get(name)
            .copied()
            .ok_or_else(|| KinematicsError::UnknownFrame(name.to_string()))
    }

    pub fn lower(&self) -> DVector<f64> {
        DVector::from_iterator(self.dof(), self.joints.iter().map(|j| j.limits.0))
    }

    pub fn upper(&self) -> DVector<f64> {
        DVector::from_iterator(self.dof(), self.joints.iter().map(|j| j.limits.1))
    }

    fn check_dim(&self, q: &[f64]) -> Result<(), KinematicsError> {
        if q.len() != self.dof() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.dof(),
                got: q.len(),
            });
        }
        Ok(())
    }

    /// World pose of every link followed by the end frame (`dof + 1` poses).
    pub fn forward_kinematics(&self, q: &[f64]) -> Vec<Pose> {
        let mut out = Vec::with_capacity(self.dof() + 1);
        self.fk_into(q, &mut out);
        out
    }

    pub fn fk_into(&self, q: &[f64], out: &mut Vec<Pose>) {
        debug_assert_eq!(q.len(), self.dof());
        out.clear();
        let mut acc = self.base;
        for (joint, &angle) in self.joints.iter().zip(q) {
            acc = acc.compose(&joint.origin).compose(&joint.motion(angle));
            out.push(acc);
        }
        out.push(acc.compose(&self.tool));
    }

    pub fn end_pose(&self, q: &[f64]) -> Pose {
        *self
            .forward_kinematics(q)
            .last()
            .expect("fk yields at least the end frame")
    }

    /// World pose of `offset` attached to `link` (`link == dof` is the end frame).
    pub fn frame_pose(&self, q: &[f64], link: usize, offset: &Pose) -> Pose {
        self.forward_kinematics(q)[link].compose(offset)
    }

    /// Geometric Jacobian of the end frame: linear rows over angular rows.
    pub fn jacobian(&self, q: &[f64]) -> Jacobian {
        let frames = self.forward_kinematics(q);
        let end = frames[self.dof()].translation;
        self.jacobian_at(&frames, self.dof(), &end)
    }

    /// Jacobian of a point rigidly attached to `link`, using precomputed frames.
    /// Joints after `link` contribute zero columns.
    pub fn jacobian_at(&self, frames: &[Pose], link: usize, point: &Vector3<f64>) -> Jacobian {
        let n = self.dof();
        let mut jac = Jacobian::zeros(n);
        let last = link.min(n.saturating_sub(1));
        if n == 0 {
            return jac;
        }
        for k in 0..=last {
            let f = &frames[k];
            let axis = f.rotation * self.joints[k].axis.into_inner();
            let (lin, ang) = match self.joints[k].kind {
                JointKind::Revolute => (axis.cross(&(point - f.translation)), axis),
                JointKind::Prismatic => (axis, Vector3::zeros()),
            };
            jac.fixed_view_mut::<3, 1>(0, k).copy_from(&lin);
            jac.fixed_view_mut::<3, 1>(3, k).copy_from(&ang);
        }
        jac
    }

    /// Upper bound on the distance from the base to the end frame.
    pub fn max_reach(&self) -> f64 {
        self.joints
            .iter()
            .map(|j| match j.kind {
                JointKind::Revolute => j.origin.translation.norm(),
                JointKind::Prismatic => {
                    j.origin.translation.norm() + j.limits.0.abs().max(j.limits.1.abs())
                }
            })
            .sum::<f64>()
            + self.tool.translation.norm()
    }

    pub fn clamp_to_limits(&self, q: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            q.len(),
            q.iter()
                .zip(&self.joints)
                .map(|(&v, j)| v.clamp(j.limits.0, j.limits.1)),
        )
    }

    /// Same pose, with every revolute angle shifted by whole turns toward the
    /// middle of its range (staying within limits).
    pub fn wrap_to_center(&self, q: &[f64]) -> DVector<f64> {
        use std::f64::consts::TAU;
        DVector::from_iterator(
            q.len(),
            q.iter().zip(&self.joints).map(|(&v, j)| {
                if j.kind != JointKind::Revolute {
                    return v;
                }
                let mid = 0.5 * (j.limits.0 + j.limits.1);
                let w = v - ((v - mid) / TAU).round() * TAU;
                if w >= j.limits.0 && w <= j.limits.1 {
                    w
                } else {
                    v
                }
            }),
        )
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.iter()
            .zip(&self.joints)
            .all(|(&v, j)| v >= j.limits.0 && v <= j.limits.1)
    }

    /// Per-joint distance outside the limits (zero when inside).
    pub fn exceedance(&self, q: &[f64]) -> Vec<f64> {
        q.iter()
            .zip(&self.joints)
            .map(|(&v, j)| (j.limits.0 - v).max(v - j.limits.1).max(0.0))
            .collect()
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_iterator(
            self.dof(),
            self.joints
                .iter()
                .map(|j| rng.random_range(j.limits.0..=j.limits.1)),
        )
    }

    /// Damped least-squares IK for the end frame.
    pub fn inverse_kinematics(
        &self,
        target: &Pose,
        seed: &[f64],
        params: &IkParams,
    ) -> Result<IkSolution, KinematicsError> {
        self.inverse_kinematics_frame(self.dof(), &Pose::identity(), target, seed, params)
    }

    /// Damped least-squares IK for the frame `offset` attached to `link`.
    pub fn inverse_kinematics_frame(
        &self,
        link: usize,
        offset: &Pose,
        target: &Pose,
        seed: &[f64],
        params: &IkParams,
    ) -> Result<IkSolution, KinematicsError> {
        self.check_dim(seed)?;
        let n = self.dof();
        let mut q = DVector::from_column_slice(seed);
        let mut frames = Vec::with_capacity(n + 1);
        let (pos_tol, rot_tol) = (params.pos_tol, params.rot_tol);
        let w = params.rot_weight;

        let mut iters = 0;
        loop {
            self.fk_into(q.as_slice(), &mut frames);
            let current = frames[link].compose(offset);
            let dp = target.translation - current.translation;
            let dr = rotation_vector(&(target.rotation * current.rotation.transpose()));
            let (pos_err, rot_err) = (dp.norm(), dr.norm());
            if pos_err <= pos_tol && rot_err <= rot_tol {
                return Ok(IkSolution {
                    q,
                    pos_err,
                    rot_err,
                    iters,
                });
            }
            if iters >= params.max_iters {
                return self.finish_best_fit(q, pos_err, rot_err, iters, params);
            }
            iters += 1;

            let mut jac = self.jacobian_at(&frames, link, &current.translation);
            for mut col in jac.column_iter_mut() {
                col.fixed_rows_mut::<3>(3).scale_mut(w);
            }
            let err = Vector6::new(dp.x, dp.y, dp.z, w * dr.x, w * dr.y, w * dr.z);
            let lambda2 = params.damping * params.damping;
            let solve = |jac: &Jacobian| -> Option<DVector<f64>> {
                let jjt: Matrix6<f64> = jac * jac.transpose() + Matrix6::identity() * lambda2;
                Some(jac.transpose() * jjt.cholesky()?.solve(&err))
            };
            let Some(mut dq) = solve(&jac) else {
                return self.finish_best_fit(q, pos_err, rot_err, iters, params);
            };
            if params.clamp_each_iter {
                // joints pinned at a limit and pushed outward drop out of the step
                let mut pinned = false;
                for (i, j) in self.joints.iter().enumerate() {
                    if (q[i] <= j.limits.0 && dq[i] < 0.0) || (q[i] >= j.limits.1 && dq[i] > 0.0) {
                        jac.column_mut(i).fill(0.0);
                        pinned = true;
                    }
                }
                if pinned {
                    if let Some(d) = solve(&jac) {
                        dq = d;
                    }
                }
            }
            let step = dq.norm();
            if step > params.max_step {
                dq *= params.max_step / step;
            }
            q += &dq;
            if params.clamp_each_iter {
                for (v, j) in q.iter_mut().zip(&self.joints) {
                    *v = v.clamp(j.limits.0, j.limits.1);
                }
            }
            if params.best_fit.is_some() && step < 1e-7 {
                self.fk_into(q.as_slice(), &mut frames);
                let (pos_err, rot_err) = frames[link].compose(offset).distance(target);
                return self.finish_best_fit(q, pos_err, rot_err, iters, params);
            }
        }
    }

    fn finish_best_fit(
        &self,
        q: DVector<f64>,
        pos_err: f64,
        rot_err: f64,
        iters: usize,
        params: &IkParams,
    ) -> Result<IkSolution, KinematicsError> {
        match params.best_fit {
            Some((p, r)) if pos_err <= p && rot_err <= r => Ok(IkSolution {
                q,
                pos_err,
                rot_err,
                iters,
            }),
            _ => Err(KinematicsError::Unreachable {
                pos: pos_err,
                rot: rot_err,
                iters,
            }),
        }
    }
}

/// Shoulder range reductions by age group, applied to the maxima of
/// flexion, external rotation and abduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AgeGroup {
    #[serde(rename = "20-39")]
    Age20To39,
    #[serde(rename = "40-59")]
    Age40To59,
    #[serde(rename = "60-79")]
    Age60To79,
    #[serde(rename = "80+")]
    Age80Plus,
    #[default]
    #[serde(rename = "none")]
    None,
}

impl AgeGroup {
    pub const ALL_REDUCED: [AgeGroup; 4] = [
        AgeGroup::Age20To39,
        AgeGroup::Age40To59,
        AgeGroup::Age60To79,
        AgeGroup::Age80Plus,
    ];

    pub fn reductions(self) -> [f64; 3] {
        match self {
            AgeGroup::Age20To39 => [0.2617, 0.3086, 0.4278],
            AgeGroup::Age40To59 => [0.3544, 0.5720, 0.5149],
            AgeGroup::Age60To79 => [0.5734, 0.7114, 0.7617],
            AgeGroup::Age80Plus => [0.8175, 0.7240, 1.0662],
            AgeGroup::None => [0.0; 3],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AgeGroup::Age20To39 => "20-39",
            AgeGroup::Age40To59 => "40-59",
            AgeGroup::Age60To79 => "60-79",
            AgeGroup::Age80Plus => "80+",
            AgeGroup::None => "none",
        }
    }
}

impl std::str::FromStr for AgeGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "20-39" => Ok(AgeGroup::Age20To39),
            "40-59" => Ok(AgeGroup::Age40To59),
            "60-79" => Ok(AgeGroup::Age60To79),
            "80+" => Ok(AgeGroup::Age80Plus),
            "none" => Ok(AgeGroup::None),
            other => Err(format!("unknown age group `{other}`")),
        }
    }
}

impl std::fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Reduces the shoulder maxima of a 4-DOF limb chain; the elbow is untouched.
pub fn apply_age_group(chain: &ChainSpec, group: AgeGroup) -> Result<ChainSpec, KinematicsError> {
    if chain.dof() != limb::DOF {
        return Err(KinematicsError::NotALimb(chain.dof()));
    }
    let mut out = chain.clone();
    for (i, reduction) in group.reductions().into_iter().enumerate() {
        let (lo, hi) = out.joints[i].limits;
        if hi - reduction <= lo {
            return Err(KinematicsError::CollapsedLimits {
                joint: i,
                lo,
                hi,
                reduction,
            });
        }
        out.joints[i].limits.1 = hi - reduction;
    }
    Ok(out)
}

/// Built-in human arm: three intersecting shoulder axes and an elbow hinge.
/// Link 2 carries the upper arm along local +x, link 3 the forearm.
pub fn default_limb_chain(base: Pose) -> ChainSpec {
    limb_chain_with(base, 0.30, 0.27, default_limb_limits())
}

/// Flexion, external rotation, abduction and elbow ranges (rad). The 3.14 is a
/// range bound, not pi.
#[allow(clippy::approx_constant)]
pub fn default_limb_limits() -> [(f64, f64); 4] {
    [(-0.6, 3.14), (-1.2, 1.57), (-0.5, 3.0), (0.0, 2.6)]
}

pub fn limb_chain_with(base: Pose, upper: f64, forearm: f64, limits: [(f64, f64); 4]) -> ChainSpec {
    let joints = vec![
        Joint::revolute(
            "shoulder_flexion",
            -Vector3::y(),
            Pose::identity(),
            limits[0],
        ),
        Joint::revolute(
            "shoulder_external_rotation",
            Vector3::x(),
            Pose::identity(),
            limits[1],
        ),
        Joint::revolute(
            "shoulder_abduction",
            Vector3::z(),
            Pose::identity(),
            limits[2],
        ),
        Joint::revolute(
            "elbow",
            -Vector3::y(),
            Pose::from_translation(Vector3::new(upper, 0.0, 0.0)),
            limits[3],
        ),
    ];
    ChainSpec::new(
        "limb",
        base,
        joints,
        Pose::from_translation(Vector3::new(forearm, 0.0, 0.0)),
    )
    .expect("built-in limits are non-empty")
    .with_frame("upper_arm", 2)
    .with_frame("forearm", 3)
    .with_frame("wrist", 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix4, Rotation3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
        loop {
            let v = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if v.norm() > 0.2 {
                return v.normalize();
            }
        }
    }

    fn random_chain(rng: &mut ChaCha8Rng, n: usize) -> ChainSpec {
        let joints = (0..n)
            .map(|i| {
                let axis = Unit::new_normalize(random_unit(rng));
                let mut origin = Pose::from_axis_angle(&axis, rng.random_range(-1.0..1.0));
                origin.translation = random_unit(rng) * rng.random_range(0.05..0.3);
                Joint::revolute(&format!("j{i}"), random_unit(rng), origin, (-3.0, 3.0))
            })
            .collect();
        ChainSpec::new(
            "rand",
            Pose::identity(),
            joints,
            Pose::from_translation(Vector3::new(0.1, 0.0, 0.0)),
        )
        .unwrap()
    }

    /// Independent oracle: multiply homogeneous matrices built with Rodrigues' formula.
    fn matrix_chain_oracle(chain: &ChainSpec, q: &[f64]) -> Matrix4<f64> {
        let mut m = chain.base.to_homogeneous();
        for (j, &a) in chain.joints.iter().zip(q) {
            let k = j.axis.into_inner();
            let kx = nalgebra::Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
            let r = nalgebra::Matrix3::identity() + kx * a.sin() + kx * kx * (1.0 - a.cos());
            let mut mot = Matrix4::identity();
            mot.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
            m = m * j.origin.to_homogeneous() * mot;
        }
        m * chain.tool.to_homogeneous()
    }

    #[test]
    fn zero_config_is_product_of_origins() {
        let chain = default_limb_chain(Pose::from_translation(Vector3::new(0.1, 0.2, 0.3)));
        let frames = chain.forward_kinematics(&[0.0; 4]);
        assert_eq!(frames.len(), 5);
        assert_relative_eq!(
            frames[4].translation,
            Vector3::new(0.67, 0.2, 0.3),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            frames[3].translation,
            Vector3::new(0.40, 0.2, 0.3),
            epsilon = 1e-12
        );
    }

    #[test]
    fn single_joint_rotates_end_frame() {
        let chain = ChainSpec::new(
            "one",
            Pose::identity(),
            vec![Joint::revolute(
                "z",
                Vector3::z(),
                Pose::identity(),
                (-3.0, 3.0),
            )],
            Pose::from_translation(Vector3::x()),
        )
        .unwrap();
        let theta = 0.7;
        let end = chain.end_pose(&[theta]);
        let expected = Rotation3::from_axis_angle(&Vector3::z_axis(), theta).into_inner();
        assert_relative_eq!(end.rotation, expected, epsilon = 1e-12);
        assert_relative_eq!(
            end.translation,
            Vector3::new(theta.cos(), theta.sin(), 0.0),
            epsilon = 1e-12
        );

        let j = chain.jacobian(&[0.0]);
        assert_relative_eq!(
            j.fixed_view::<3, 1>(0, 0).into_owned(),
            Vector3::y(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            j.fixed_view::<3, 1>(3, 0).into_owned(),
            Vector3::z(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn limb_fk_matches_matrix_chain_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let chain = default_limb_chain(Pose::from_translation(Vector3::new(0.0, -0.2, 0.7)));
        for _ in 0..200 {
            let q = chain.sample_uniform(&mut rng);
            let got = chain.end_pose(q.as_slice()).to_homogeneous();
            assert!((got - matrix_chain_oracle(&chain, q.as_slice())).norm() < 1e-10);
        }
        for n in [1, 3, 6, 7] {
            let chain = random_chain(&mut rng, n);
            let q = chain.sample_uniform(&mut rng);
            let got = chain.end_pose(q.as_slice()).to_homogeneous();
            assert!((got - matrix_chain_oracle(&chain, q.as_slice())).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_length_links_have_zero_linear_jacobian() {
        let joints = vec![
            Joint::revolute("a", Vector3::z(), Pose::identity(), (-3.0, 3.0)),
            Joint::revolute("b", Vector3::x(), Pose::identity(), (-3.0, 3.0)),
        ];
        let chain = ChainSpec::new("zero", Pose::identity(), joints, Pose::identity()).unwrap();
        let j = chain.jacobian(&[0.3, -0.4]);
        assert!(j.fixed_rows::<3>(0).norm() < 1e-15);
        assert!(j.fixed_rows::<3>(3).norm() > 0.5);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = 1e-6;
        for trial in 0..100 {
            let chain = random_chain(&mut rng, 1 + trial % 7);
            let q = chain.sample_uniform(&mut rng);
            let jac = chain.jacobian(q.as_slice());
            for k in 0..chain.dof() {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[k] += h;
                qm[k] -= h;
                let (pp, pm) = (chain.end_pose(qp.as_slice()), chain.end_pose(qm.as_slice()));
                let lin = (pp.translation - pm.translation) / (2.0 * h);
                let ang = rotation_vector(&(pp.rotation * pm.rotation.transpose())) / (2.0 * h);
                assert!((lin - jac.fixed_view::<3, 1>(0, k)).norm() < 1e-5);
                assert!((ang - jac.fixed_view::<3, 1>(3, k)).norm() < 1e-5);
            }
        }
    }

    #[test]
    fn ik_fixed_point_returns_seed() {
        let chain = default_limb_chain(Pose::identity());
        let seed = DVector::from_vec(vec![0.4, 0.2, 0.3, 1.0]);
        let target = chain.end_pose(seed.as_slice());
        let sol = chain
            .inverse_kinematics(&target, seed.as_slice(), &IkParams::default())
            .unwrap();
        assert_eq!(sol.iters, 0);
        assert_eq!(sol.q, seed);
    }

    #[test]
    fn ik_converges_on_perturbed_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let chain = crate::config::default_robot_chain(Pose::identity());
        let params = IkParams::default();
        for _ in 0..100 {
            let seed = chain.sample_uniform(&mut rng) * 0.5;
            let mut moved = seed.clone();
            for v in moved.iter_mut() {
                *v += rng.random_range(-0.1..0.1);
            }
            let target = chain.end_pose(moved.as_slice());
            let sol = chain
                .inverse_kinematics(&target, seed.as_slice(), &params)
                .unwrap();
            let (p, r) = chain.end_pose(sol.q.as_slice()).distance(&target);
            assert!(p <= 1e-3 && r <= 1e-2);
            assert_eq!(chain.clamp_to_limits(sol.q.as_slice()), sol.q);
        }
    }

    #[test]
    fn ik_rejects_out_of_workspace() {
        let chain = default_limb_chain(Pose::identity());
        let target = Pose::from_translation(Vector3::new(10.0, 0.0, 0.0));
        let err = chain
            .inverse_kinematics(&target, &[0.0; 4], &IkParams::default())
            .unwrap_err();
        assert!(matches!(err, KinematicsError::Unreachable { .. }));
    }

    #[test]
    fn clamp_behaviour() {
        let chain = default_limb_chain(Pose::identity());
        let q = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(chain.clamp_to_limits(&q).as_slice(), &q);
        let hi = chain.joints[0].limits.1;
        let c = chain.clamp_to_limits(&[hi + 0.3, 0.0, 0.0, 0.0]);
        assert_eq!(c[0], hi);
        let wild = [9.0, -9.0, 0.2, 7.0];
        let once = chain.clamp_to_limits(&wild);
        assert_eq!(chain.clamp_to_limits(once.as_slice()), once);
        let ex = chain.exceedance(&[hi + 0.3, 0.0, 0.0, -0.5]);
        assert_relative_eq!(ex[0], 0.3, epsilon = 1e-12);
        assert_relative_eq!(ex[3], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn age_group_reductions() {
        let chain = default_limb_chain(Pose::identity());
        let young = apply_age_group(&chain, AgeGroup::Age20To39).unwrap();
        let base = default_limb_limits();
        assert_relative_eq!(young.joints[0].limits.1, base[0].1 - 0.2617);
        assert_relative_eq!(young.joints[1].limits.1, base[1].1 - 0.3086);
        assert_relative_eq!(young.joints[2].limits.1, base[2].1 - 0.4278);
        assert_eq!(young.joints[3].limits, base[3]);
        let old = apply_age_group(&chain, AgeGroup::Age80Plus).unwrap();
        assert_relative_eq!(old.joints[0].limits.1, base[0].1 - 0.8175);
        assert_relative_eq!(old.joints[1].limits.1, base[1].1 - 0.7240);
        assert_relative_eq!(old.joints[2].limits.1, base[2].1 - 1.0662);
        assert_eq!(apply_age_group(&chain, AgeGroup::None).unwrap(), chain);

        let mut tight = chain.clone();
        tight.joints[2].limits = (0.0, 0.4);
        assert!(matches!(
            apply_age_group(&tight, AgeGroup::Age20To39),
            Err(KinematicsError::CollapsedLimits { joint: 2, .. })
        ));
    }

    #[test]
    fn fk_is_bit_deterministic() {
        let chain = crate::config::default_robot_chain(Pose::identity());
        let q = [0.1, -1.2, 1.4, -0.3, 1.57, 0.2];
        let a = chain.forward_kinematics(&q);
        let b = chain.forward_kinematics(&q);
        assert_eq!(a, b);
    }
}
