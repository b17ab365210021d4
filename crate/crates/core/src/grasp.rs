//! Antipodal grasp candidates on the limb surface, force-closure checks,
//! reachability filtering and distance/orientation scoring.

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::csdf::{min_clearance, world_points, ControlPointSet, CsdfParams};
use crate::error::GraspError;
use crate::geometry::{Pose, UnitQuaternion};
use crate::kinematics::{ChainSpec, IkParams};
use crate::par;
use crate::scene::{Scene, Segment, SurfacePoint, SurfacePointCloud};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraspParams {
    pub friction_mu: f64,
    /// Largest angle between `n_a` and `-n_b` (radians).
    pub antipodal_angle_tol: f64,
    pub gripper_width: [f64; 2],
    pub approach_standoff: f64,
    pub alpha: f64,
    /// Limb segments eligible for grasping.
    pub segments: Vec<Segment>,
    /// Surface samples per segment used to build the candidate cloud.
    pub cloud_per_segment: usize,
}

impl Default for GraspParams {
    fn default() -> Self {
        Self {
            friction_mu: 0.5,
            antipodal_angle_tol: 10f64.to_radians(),
            gripper_width: [0.02, 0.10],
            approach_standoff: 0.08,
            alpha: 0.5,
            segments: vec![Segment::Forearm],
            cloud_per_segment: 48,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grasp {
    pub contact_a: SurfacePoint,
    pub contact_b: SurfacePoint,
    /// Gripper frame: y along the contact line, z the approach direction.
    pub eef_pose: Pose,
    pub segment: Segment,
    pub d: f64,
    pub r: f64,
    pub score: f64,
}

impl Grasp {
    pub fn width(&self) -> f64 {
        (self.contact_b.position - self.contact_a.position).norm()
    }

    /// Contact frame; it coincides with the gripper frame.
    pub fn contact_frame(&self) -> Pose {
        self.eef_pose
    }

    /// Gripper pose backed off along the approach axis.
    pub fn pre_pose(&self, standoff: f64) -> Pose {
        self.eef_pose
            .compose(&Pose::from_translation(Vector3::new(0.0, 0.0, -standoff)))
    }
}

fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}

/// True iff the contact line lies inside both friction cones.
pub fn check_force_closure(a: &SurfacePoint, b: &SurfacePoint, mu: f64) -> bool {
    let line = b.position - a.position;
    if line.norm() < 1e-12 {
        return false;
    }
    let half = mu.atan();
    angle_between(&line, &(-a.normal)) <= half && angle_between(&(-line), &(-b.normal)) <= half
}

pub fn is_antipodal(a: &SurfacePoint, b: &SurfacePoint, params: &GraspParams) -> bool {
    if a.segment != b.segment || !params.segments.contains(&a.segment) {
        return false;
    }
    if angle_between(&a.normal, &(-b.normal)) > params.antipodal_angle_tol {
        return false;
    }
    let w = (b.position - a.position).norm();
    if w < params.gripper_width[0] || w > params.gripper_width[1] {
        return false;
    }
    check_force_closure(a, b, params.friction_mu)
}

/// Principal axis of each segment's points, sign-fixed so the first point
/// lies on the negative side.
fn principal_axis(points: &[&SurfacePoint]) -> Vector3<f64> {
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p.position).sum::<Vector3<f64>>() / n;
    let mut cov = nalgebra::Matrix3::zeros();
    for p in points {
        let d = p.position - mean;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let axis = eig.eigenvectors.column(eig.eigenvalues.imax()).into_owned();
    // sign from the lexicographically smallest point so the result does not
    // depend on point order
    let first = points
        .iter()
        .map(|p| p.position)
        .min_by(|a, b| a.as_slice().partial_cmp(b.as_slice()).unwrap())
        .unwrap();
    if (first - mean).dot(&axis) > 0.0 {
        -axis
    } else {
        axis
    }
}

fn build_pose(a: &SurfacePoint, b: &SurfacePoint, axis: &Vector3<f64>, flip: bool) -> Option<Pose> {
    let y = (b.position - a.position).normalize();
    let z = axis.cross(&y);
    if z.norm() < 1e-6 {
        return None;
    }
    let z = if flip { -z.normalize() } else { z.normalize() };
    let x = y.cross(&z);
    let rotation = nalgebra::Matrix3::from_columns(&[x, y, z]);
    Some(Pose::new(rotation, 0.5 * (a.position + b.position)))
}

fn canonical_key(g: &Grasp) -> [f64; 13] {
    let mut k = [0.0; 13];
    k[..3].copy_from_slice(g.contact_a.position.as_slice());
    k[3..6].copy_from_slice(g.contact_b.position.as_slice());
    k[6..9].copy_from_slice(g.eef_pose.rotation.column(2).as_slice());
    k[9..12].copy_from_slice(g.eef_pose.translation.as_slice());
    k[12] = g.segment as u8 as f64;
    k
}

/// Every antipodal, width-feasible, force-closed pair within a segment, with
/// two approach directions each. The output is sorted canonically, so it does
/// not depend on the order of the cloud. The enumeration is exhaustive and
/// does not use randomness; `_seed` is kept for interface symmetry.
pub fn sample_antipodal(cloud: &SurfacePointCloud, params: &GraspParams, _seed: u64) -> Vec<Grasp> {
    let mut out = Vec::new();
    for &segment in &params.segments {
        let pts: Vec<&SurfacePoint> = cloud
            .points
            .iter()
            .filter(|p| p.segment == segment)
            .collect();
        if pts.len() < 2 {
            continue;
        }
        let axis = principal_axis(&pts);
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i == j {
                    continue;
                }
                let (a, b) = (pts[i], pts[j]);
                // each unordered pair once, ordered by position
                if a.position.as_slice() >= b.position.as_slice() {
                    continue;
                }
                if !is_antipodal(a, b, params) {
                    continue;
                }
                for flip in [false, true] {
                    if let Some(eef_pose) = build_pose(a, b, &axis, flip) {
                        out.push(Grasp {
                            contact_a: *a,
                            contact_b: *b,
                            eef_pose,
                            segment,
                            d: 0.0,
                            r: 0.0,
                            score: 0.0,
                        });
                    }
                }
            }
        }
    }
    out.sort_by(|x, y| canonical_key(x).partial_cmp(&canonical_key(y)).unwrap());
    out
}

/// Robot model used for reachability and collision checks.
#[derive(Clone, Debug)]
pub struct RobotModel {
    pub chain: ChainSpec,
    pub controls: ControlPointSet,
    pub ik: IkParams,
    pub csdf: CsdfParams,
    /// IK seeds tried in order.
    pub seeds: Vec<DVector<f64>>,
}

impl RobotModel {
    pub fn clearance(&self, q: &[f64], scene: &Scene, exclude: &[&str]) -> f64 {
        min_clearance(
            &world_points(&self.controls, &self.chain, q),
            &scene.obstacles(exclude),
        )
    }

    /// First collision-free IK solution over the seed list.
    pub fn solve_clear(
        &self,
        target: &Pose,
        scene: &Scene,
        exclude: &[&str],
        extra_seed: Option<&DVector<f64>>,
    ) -> Option<DVector<f64>> {
        if (target.translation - self.chain.base.translation).norm() > self.chain.max_reach() {
            return None;
        }
        extra_seed
            .into_iter()
            .chain(self.seeds.iter())
            .find_map(|seed| {
                let sol = self
                    .chain
                    .inverse_kinematics(target, seed.as_slice(), &self.ik)
                    .ok()?;
                (self.clearance(sol.q.as_slice(), scene, exclude) > self.csdf.rho).then_some(sol.q)
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleGrasp {
    pub grasp: Grasp,
    pub q_grasp: DVector<f64>,
    pub q_pre: DVector<f64>,
}

/// Keeps grasps whose pose and pre-pose have collision-free IK solutions.
/// The limb is excluded while holding it and included at the pre-pose.
pub fn filter_feasible(
    grasps: &[Grasp],
    robot: &RobotModel,
    scene: &Scene,
    params: &GraspParams,
) -> Vec<FeasibleGrasp> {
    let checked = par::map(grasps, |g| {
        let q_grasp = robot.solve_clear(&g.eef_pose, scene, &["limb"], None)?;
        let q_pre = robot.solve_clear(
            &g.pre_pose(params.approach_standoff),
            scene,
            &[],
            Some(&q_grasp),
        )?;
        Some(FeasibleGrasp {
            grasp: g.clone(),
            q_grasp,
            q_pre,
        })
    });
    checked.into_iter().flatten().collect()
}

/// Min–max constants used to normalize `d` and `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub d_min: f64,
    pub d_max: f64,
    pub r_min: f64,
    pub r_max: f64,
}

fn unit_scale(v: f64, lo: f64, hi: f64) -> f64 {
    if hi - lo > 0.0 {
        (v - lo) / (hi - lo)
    } else {
        0.0
    }
}

/// Fills `d`, `r` and `score` for every grasp and returns the normalization.
pub fn score_all(grasps: &mut [Grasp], reference: &Pose, alpha: f64) -> Normalization {
    let q_ref = UnitQuaternion::from_rotation_unchecked(&reference.rotation);
    for g in grasps.iter_mut() {
        g.d = (g.eef_pose.translation - reference.translation).norm();
        g.r = UnitQuaternion::from_rotation_unchecked(&g.eef_pose.rotation).dot(&q_ref);
    }
    let fold = |f: fn(&Grasp) -> f64| {
        grasps
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    let (d_min, d_max) = fold(|g| g.d);
    let (r_min, r_max) = fold(|g| g.r);
    for g in grasps.iter_mut() {
        g.score =
            alpha * unit_scale(g.d, d_min, d_max) - (1.0 - alpha) * unit_scale(g.r, r_min, r_max);
    }
    Normalization {
        d_min,
        d_max,
        r_min,
        r_max,
    }
}

/// Indices ordered by score, ties to the lower index.
pub fn ranking(grasps: &[Grasp]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..grasps.len()).collect();
    idx.sort_by(|&a, &b| grasps[a].score.total_cmp(&grasps[b].score).then(a.cmp(&b)));
    idx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedGrasp {
    pub index: usize,
    pub grasp: Grasp,
    pub normalization: Normalization,
}

/// Scores the candidates and returns the one with the smallest score.
pub fn score_and_select(
    grasps: &[Grasp],
    reference: &Pose,
    alpha: f64,
) -> Result<SelectedGrasp, GraspError> {
    if grasps.is_empty() {
        return Err(GraspError::NoGraspFound);
    }
    let mut scored = grasps.to_vec();
    let normalization = score_all(&mut scored, reference, alpha);
    let index = ranking(&scored)[0];
    Ok(SelectedGrasp {
        index,
        grasp: scored[index].clone(),
        normalization,
    })
}

/// Reference frame for scoring: the posed capsule of the grasped segment.
pub fn segment_reference(scene: &Scene, segment: Segment) -> Option<Pose> {
    scene
        .attachment(segment)
        .map(|a| scene.primitives[a.primitive].pose)
}
