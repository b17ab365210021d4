//! Wiping targets on the limb, front/back feasibility pruning, wiping stroke
//! synthesis, coverage accounting, point labeling and next-configuration
//! scoring.

use nalgebra::{DVector, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coupling::CoupledSystem;
use crate::csdf::{min_clearance, world_points, ControlPointSet, CsdfParams};
use crate::error::BathingError;
use crate::geometry::Pose;
use crate::grasp::RobotModel;
use crate::kinematics::ChainSpec;
use crate::par;
use crate::scene::{chain_capsules, Scene, Segment, Shape, SurfacePointCloud};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub w_feasibility: f64,
    pub w_closeness: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            w_feasibility: 1.0,
            w_closeness: -0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BathingParams {
    pub rows: usize,
    pub per_row: usize,
    pub r_w: f64,
    pub contact_radius: f64,
    pub sample_size: usize,
    pub standoff: f64,
    pub n_candidates: usize,
    pub max_iterations: usize,
    pub weights: ScoreWeights,
    /// World direction separating the front targets from the back ones.
    pub front_axis: [f64; 3],
    pub redraw_rounds: usize,
    /// Radius of the capsules standing in for the frozen manipulation robot.
    pub holder_radius: f64,
}

impl Default for BathingParams {
    fn default() -> Self {
        Self {
            rows: 4,
            per_row: 8,
            r_w: 0.03,
            contact_radius: 0.02,
            sample_size: 5,
            standoff: 0.05,
            n_candidates: 50,
            max_iterations: 10,
            weights: ScoreWeights::default(),
            front_axis: [0.0, 0.0, 1.0],
            redraw_rounds: 3,
            holder_radius: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WipingTarget {
    /// Position and outward normal in the link frame.
    pub local: Vector3<f64>,
    pub local_normal: Vector3<f64>,
    pub link: usize,
    pub segment: Segment,
    pub row: usize,
    /// Position along the stroke, used for in-row ordering.
    pub along: f64,
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub covered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WipingTargetSet {
    pub targets: Vec<WipingTarget>,
    pub axis: Vector3<f64>,
}

impl WipingTargetSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn coverage(&self) -> f64 {
        if self.targets.is_empty() {
            return 0.0;
        }
        self.targets.iter().filter(|t| t.covered).count() as f64 / self.targets.len() as f64
    }

    pub fn uncovered(&self) -> Vec<usize> {
        (0..self.targets.len())
            .filter(|&i| !self.targets[i].covered)
            .collect()
    }

    pub fn n_rows(&self) -> usize {
        self.targets.iter().map(|t| t.row + 1).max().unwrap_or(0)
    }

    /// Moves every target with the limb configuration `q`.
    pub fn reposition(&mut self, limb: &ChainSpec, q: &[f64]) {
        let frames = limb.forward_kinematics(q);
        for t in &mut self.targets {
            t.position = frames[t.link].transform_point(&t.local);
            t.normal = frames[t.link].transform_vector(&t.local_normal);
        }
    }

    pub fn posed(&self, limb: &ChainSpec, q: &[f64]) -> Self {
        let mut out = self.clone();
        out.reposition(limb, q);
        out
    }
}

/// Tool frame at a target: z into the surface, x along the limb segment.
pub fn target_pose(limb_frames: &[Pose], t: &WipingTarget) -> Pose {
    let frame = &limb_frames[t.link];
    let z = -frame.transform_vector(&t.local_normal);
    let axis = frame.rotation.column(0).into_owned();
    let x = (axis - z * z.dot(&axis)).normalize();
    Pose::new(
        Matrix3::from_columns(&[x, z.cross(&x), z]),
        frame.transform_point(&t.local),
    )
}

/// `rows × per_row` targets on each limb capsule. Row `k` is an axial stroke
/// at azimuth `2π(k + ½)/rows`; points sit at the centers of `per_row` equal
/// cells along the segment.
pub fn generate_targets(
    limb: &ChainSpec,
    scene: &Scene,
    q: &[f64],
    rows: usize,
    per_row: usize,
    front_axis: Vector3<f64>,
) -> WipingTargetSet {
    let mut targets = Vec::new();
    let mut attachments: Vec<_> = scene.attachments.iter().collect();
    attachments.sort_by_key(|a| a.link);
    for (s, a) in attachments.into_iter().enumerate() {
        let Shape::Capsule { length, radius } = scene.primitives[a.primitive].shape else {
            continue;
        };
        for k in 0..rows {
            let phi = std::f64::consts::TAU * (k as f64 + 0.5) / rows as f64;
            let n_local = Vector3::new(0.0, phi.cos(), phi.sin());
            for j in 0..per_row {
                let x = ((j as f64 + 0.5) / per_row as f64 - 0.5) * length;
                let on_capsule = Vector3::new(x, 0.0, 0.0) + n_local * radius;
                targets.push(WipingTarget {
                    local: a.local.transform_point(&on_capsule),
                    local_normal: a.local.transform_vector(&n_local),
                    link: a.link,
                    segment: a.segment,
                    row: s * rows + k,
                    along: x,
                    position: Vector3::zeros(),
                    normal: Vector3::zeros(),
                    covered: false,
                });
            }
        }
    }
    let mut set = WipingTargetSet {
        targets,
        axis: front_axis.normalize(),
    };
    set.reposition(limb, q);
    set
}

/// Median split of `alpha` values: the median is the value of rank
/// `⌊N/2⌋` in ascending order and ties go to the front.
pub fn median_split(alpha: &[f64]) -> (Vec<usize>, Vec<usize>) {
    if alpha.is_empty() {
        return (vec![], vec![]);
    }
    let mut sorted = alpha.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = sorted[alpha.len() / 2];
    (0..alpha.len()).partition(|&i| alpha[i] >= med)
}

/// Representatives spread evenly over a subset.
pub fn representatives(subset: &[usize], k: usize) -> Vec<usize> {
    if subset.len() <= k {
        return subset.to_vec();
    }
    (0..k).map(|i| subset[i * subset.len() / k]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSelection {
    pub front_kept: bool,
    pub back_kept: bool,
    pub front: Vec<usize>,
    pub back: Vec<usize>,
    pub feasible: Vec<usize>,
}

/// Front/back pruning of the uncovered targets: a half is kept when any of
/// its representatives has a collision-free IK solution.
pub fn select_feasible(
    set: &WipingTargetSet,
    limb: &ChainSpec,
    q_h: &[f64],
    robot: &RobotModel,
    scene: &Scene,
    sample_size: usize,
) -> FeasibleSelection {
    let idx = set.uncovered();
    let alpha: Vec<f64> = idx
        .iter()
        .map(|&i| set.axis.dot(&set.targets[i].position))
        .collect();
    let (f, b) = median_split(&alpha);
    let front: Vec<usize> = f.into_iter().map(|i| idx[i]).collect();
    let back: Vec<usize> = b.into_iter().map(|i| idx[i]).collect();
    let frames = limb.forward_kinematics(q_h);
    let kept = |subset: &[usize]| {
        representatives(subset, sample_size).iter().any(|&i| {
            robot
                .solve_clear(&target_pose(&frames, &set.targets[i]), scene, &[], None)
                .is_some()
        })
    };
    let front_kept = kept(&front);
    let back_kept = kept(&back);
    let mut feasible = Vec::new();
    if front_kept {
        feasible.extend(&front);
    }
    if back_kept {
        feasible.extend(&back);
    }
    feasible.sort_unstable();
    FeasibleSelection {
        front_kept,
        back_kept,
        front,
        back,
        feasible,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopKind {
    Approach,
    Target(usize),
    Retreat,
    Rest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WipeStop {
    pub kind: StopKind,
    pub q_r: DVector<f64>,
    pub row: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct WipePlan {
    pub stops: Vec<WipeStop>,
    pub reached: Vec<usize>,
    pub skipped: Vec<usize>,
}

impl WipePlan {
    /// Stops grouped by stroke: approach, targets, retreat.
    pub fn strokes(&self) -> Vec<&[WipeStop]> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, s) in self.stops.iter().enumerate() {
            match s.kind {
                StopKind::Approach => start = Some(i),
                StopKind::Retreat => {
                    if let Some(a) = start.take() {
                        out.push(&self.stops[a..=i]);
                    }
                }
                _ => {}
            }
        }
        out
    }
}

/// Per row: approach pose, the reachable targets in stroke order, retreat
/// pose. Unreachable targets are skipped; rows with no reachable target are
/// dropped. The plan ends at `rest`.
pub fn wiping_trajectory(
    set: &WipingTargetSet,
    feasible: &[usize],
    limb: &ChainSpec,
    q_h: &[f64],
    robot: &RobotModel,
    scene: &Scene,
    standoff: f64,
    rest: &DVector<f64>,
) -> WipePlan {
    let frames = limb.forward_kinematics(q_h);
    let back_off = Pose::from_translation(Vector3::new(0.0, 0.0, -standoff));
    let mut plan = WipePlan::default();
    let mut seed = rest.clone();
    let mut rows: Vec<usize> = feasible.iter().map(|&i| set.targets[i].row).collect();
    rows.sort_unstable();
    rows.dedup();
    for row in rows {
        let mut members: Vec<usize> = feasible
            .iter()
            .copied()
            .filter(|&i| set.targets[i].row == row)
            .collect();
        members.sort_by(|&a, &b| {
            set.targets[a]
                .along
                .total_cmp(&set.targets[b].along)
                .then(a.cmp(&b))
        });
        let mut hits: Vec<(usize, DVector<f64>)> = Vec::new();
        let mut local_seed = seed.clone();
        for &i in &members {
            let pose = target_pose(&frames, &set.targets[i]);
            match robot.solve_clear(&pose, scene, &[], Some(&local_seed)) {
                Some(q) => {
                    local_seed = q.clone();
                    hits.push((i, q));
                }
                None => plan.skipped.push(i),
            }
        }
        let (Some(first), Some(last)) = (hits.first(), hits.last()) else {
            continue;
        };
        let approach = robot.solve_clear(
            &target_pose(&frames, &set.targets[first.0]).compose(&back_off),
            scene,
            &[],
            Some(&first.1),
        );
        let retreat = robot.solve_clear(
            &target_pose(&frames, &set.targets[last.0]).compose(&back_off),
            scene,
            &[],
            Some(&last.1),
        );
        let (Some(approach), Some(retreat)) = (approach, retreat) else {
            plan.skipped.extend(hits.iter().map(|h| h.0));
            continue;
        };
        plan.stops.push(WipeStop {
            kind: StopKind::Approach,
            q_r: approach,
            row: Some(row),
        });
        for (i, q) in hits {
            plan.reached.push(i);
            plan.stops.push(WipeStop {
                kind: StopKind::Target(i),
                q_r: q,
                row: Some(row),
            });
        }
        seed = retreat.clone();
        plan.stops.push(WipeStop {
            kind: StopKind::Retreat,
            q_r: retreat,
            row: Some(row),
        });
    }
    plan.skipped.sort_unstable();
    plan.stops.push(WipeStop {
        kind: StopKind::Rest,
        q_r: rest.clone(),
        row: None,
    });
    plan
}

fn point_segment_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_squared();
    let t = if l2 > 0.0 {
        ((p - a).dot(&ab) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

/// Distance from `p` to a sampled path, treated as a polyline.
pub fn path_distance(p: &Vector3<f64>, path: &[Vector3<f64>]) -> f64 {
    match path.len() {
        0 => f64::INFINITY,
        1 => (p - path[0]).norm(),
        _ => path
            .windows(2)
            .map(|w| point_segment_distance(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Marks targets within `contact_radius` of the executed tool path.
pub fn mark_covered(
    set: &mut WipingTargetSet,
    path: &[Vector3<f64>],
    contact_radius: f64,
) -> usize {
    let mut newly = 0;
    for t in set.targets.iter_mut().filter(|t| !t.covered) {
        if path_distance(&t.position, path) <= contact_radius {
            t.covered = true;
            newly += 1;
        }
    }
    newly
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub position: Vector3<f64>,
    pub label: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPointCloud {
    pub points: Vec<LabeledPoint>,
    pub r_w: f64,
}

/// Label 1 for points within `r_w` of an uncovered target.
pub fn label_cloud(
    cloud: &SurfacePointCloud,
    set: &WipingTargetSet,
    r_w: f64,
) -> LabeledPointCloud {
    let open: Vec<&Vector3<f64>> = set
        .targets
        .iter()
        .filter(|t| !t.covered)
        .map(|t| &t.position)
        .collect();
    let points = cloud
        .points
        .iter()
        .map(|p| LabeledPoint {
            position: p.position,
            label: open.iter().any(|v| (p.position - *v).norm() <= r_w) as u8,
        })
        .collect();
    LabeledPointCloud { points, r_w }
}

/// Weighted sum of the reachable fraction and the joint-space distance.
pub fn eq2_score(reachable: &[bool], dq: f64, weights: &ScoreWeights) -> f64 {
    let m = reachable.len();
    let s_feas = if m == 0 {
        0.0
    } else {
        reachable.iter().filter(|&&r| r).count() as f64 / m as f64
    };
    weights.w_feasibility * s_feas + weights.w_closeness * dq
}

/// Everything needed to judge a candidate limb configuration for wiping.
#[derive(Clone, Debug)]
pub struct BathingWorld {
    /// Scene with limb attachments and the static obstacles.
    pub scene: Scene,
    pub limb_controls: ControlPointSet,
    /// Manipulation robot holding the limb.
    pub holder: CoupledSystem,
    pub holder_controls: ControlPointSet,
    /// Tag excluded from the holder's collision checks (the grasped segment).
    pub holder_exclude: String,
    pub wiper: RobotModel,
    pub wiper_rest: DVector<f64>,
    pub csdf: CsdfParams,
    pub holder_radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateEval {
    pub score: f64,
    pub reachable: usize,
    pub q_r_hold: DVector<f64>,
}

impl BathingWorld {
    pub fn limb_clearance(&self, q_h: &[f64]) -> f64 {
        let posed = self.scene.posed(&self.holder.limb, q_h);
        min_clearance(
            &world_points(&self.limb_controls, &self.holder.limb, q_h),
            &posed.obstacles(&["limb"]),
        )
    }

    pub fn holder_clearance(&self, q_r: &[f64], q_h: &[f64]) -> f64 {
        let posed = self.scene.posed(&self.holder.limb, q_h);
        min_clearance(
            &world_points(&self.holder_controls, &self.holder.robot, q_r),
            &posed.obstacles(&[self.holder_exclude.as_str()]),
        )
    }

    /// Scene seen by the wiping robot: posed limb plus the frozen holder.
    pub fn wiping_scene(&self, q_h: &[f64], q_r_hold: &[f64]) -> Scene {
        self.scene
            .posed(&self.holder.limb, q_h)
            .with_extra(chain_capsules(
                &self.holder.robot,
                q_r_hold,
                self.holder_radius,
                "holder",
            ))
    }

    /// Holder configuration for `q_h`, if it exists and is collision-free.
    pub fn hold(&self, q_h: &[f64], seed: &[f64]) -> Option<DVector<f64>> {
        let rho = self.csdf.rho;
        if self.limb_clearance(q_h) <= rho {
            return None;
        }
        let q_r = self.holder.robot_from_limb(q_h, seed).ok()?;
        (self.holder_clearance(q_r.as_slice(), q_h) > rho).then_some(q_r)
    }

    /// Per uncovered target: collision-checked IK reachability at `q_h`.
    pub fn reachability(&self, set: &WipingTargetSet, q_h: &[f64], q_r_hold: &[f64]) -> Vec<bool> {
        let scene = self.wiping_scene(q_h, q_r_hold);
        let frames = self.holder.limb.forward_kinematics(q_h);
        set.targets
            .iter()
            .filter(|t| !t.covered)
            .map(|t| {
                self.wiper
                    .solve_clear(&target_pose(&frames, t), &scene, &[], None)
                    .is_some()
            })
            .collect()
    }

    /// Eq. 2 style score of `q_cand`; `None` when the limb collides or the
    /// holder cannot keep its grasp there.
    pub fn score_candidate(
        &self,
        q_init: &DVector<f64>,
        q_cand: &DVector<f64>,
        set: &WipingTargetSet,
        hold_seed: &[f64],
        weights: &ScoreWeights,
    ) -> Option<CandidateEval> {
        let q_r_hold = self.hold(q_cand.as_slice(), hold_seed)?;
        let reach = self.reachability(set, q_cand.as_slice(), q_r_hold.as_slice());
        Some(CandidateEval {
            score: eq2_score(&reach, (q_init - q_cand).norm(), weights),
            reachable: reach.iter().filter(|&&r| r).count(),
            q_r_hold,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NextConfig {
    pub q_h: DVector<f64>,
    pub eval: CandidateEval,
    pub round: usize,
    pub index: usize,
    /// Scores per candidate of the winning round (`None` for infeasible ones).
    pub scores: Vec<Option<f64>>,
}

/// Uniform limb samples scored in parallel; the best feasible one that
/// `accept` approves wins. Each round draws a fresh batch.
pub fn next_config_random(
    world: &BathingWorld,
    q_init: &DVector<f64>,
    set: &WipingTargetSet,
    hold_seed: &[f64],
    params: &BathingParams,
    seed: u64,
    mode: par::Mode,
    accept: &mut dyn FnMut(&DVector<f64>, &CandidateEval) -> bool,
) -> Result<NextConfig, BathingError> {
    use rand::Rng;
    let limb = &world.holder.limb;
    for round in 0..params.redraw_rounds.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(round as u64);
        let candidates: Vec<DVector<f64>> = (0..params.n_candidates.max(1))
            .map(|_| {
                DVector::from_iterator(
                    limb.dof(),
                    limb.joints
                        .iter()
                        .map(|j| rng.random_range(j.limits.0..=j.limits.1)),
                )
            })
            .collect();
        let evals = par::map_with(mode, &candidates, |q| {
            world.score_candidate(q_init, q, set, hold_seed, &params.weights)
        });
        let mut order: Vec<usize> = (0..candidates.len())
            .filter(|&i| evals[i].is_some())
            .collect();
        order.sort_by(|&a, &b| {
            let (sa, sb) = (
                evals[a].as_ref().unwrap().score,
                evals[b].as_ref().unwrap().score,
            );
            sb.total_cmp(&sa).then(a.cmp(&b))
        });
        if let Some(&index) = order.first() {
            let eval = evals[index].clone().unwrap();
            if accept(&candidates[index], &eval) {
                return Ok(NextConfig {
                    q_h: candidates[index].clone(),
                    eval,
                    round,
                    index,
                    scores: evals.iter().map(|e| e.as_ref().map(|e| e.score)).collect(),
                });
            }
        }
    }
    Err(BathingError::NoFeasibleGoal {
        rounds: params.redraw_rounds.max(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn eq2_examples() {
        let w = ScoreWeights::default();
        assert_relative_eq!(
            eq2_score(&[true, false, true, false], 0.5, &w),
            0.45,
            epsilon = 1e-12
        );
        assert_relative_eq!(eq2_score(&[true, true], 0.0, &w), 1.0);
        assert_relative_eq!(eq2_score(&[false, false], 0.7, &w), -0.07, epsilon = 1e-12);
    }

    #[test]
    fn median_split_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let n = rng.random_range(1..80);
            let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (f, b) = median_split(&alpha);
            assert_eq!(f.len() + b.len(), n);
            if n % 2 == 1 {
                assert_eq!(f.len(), b.len() + 1);
            } else {
                assert_eq!(f.len(), b.len());
            }
            let min_front = f.iter().map(|&i| alpha[i]).fold(f64::INFINITY, f64::min);
            assert!(b.iter().all(|&i| alpha[i] < min_front));
        }
    }

    #[test]
    fn polyline_coverage_oracle() {
        let mut set = WipingTargetSet {
            targets: (0..10)
                .map(|i| WipingTarget {
                    local: Vector3::zeros(),
                    local_normal: Vector3::z(),
                    link: 0,
                    segment: Segment::Forearm,
                    row: 0,
                    along: 0.0,
                    position: Vector3::new(i as f64 * 0.1, if i < 3 { 0.01 } else { 0.05 }, 0.0),
                    normal: Vector3::z(),
                    covered: false,
                })
                .collect(),
            axis: Vector3::z(),
        };
        assert_eq!(mark_covered(&mut set, &[], 0.02), 0);
        let path = vec![Vector3::new(-0.1, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0)];
        assert_eq!(mark_covered(&mut set, &path, 0.02), 3);
        assert_relative_eq!(set.coverage(), 0.3);
        assert_eq!(mark_covered(&mut set, &path, 0.02), 0);
    }

    #[test]
    fn labels_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mk = |rng: &mut ChaCha8Rng| {
            Vector3::new(rng.random_range(0.0..0.3), rng.random_range(0.0..0.3), 0.0)
        };
        let targets: Vec<WipingTarget> = (0..20)
            .map(|i| WipingTarget {
                local: Vector3::zeros(),
                local_normal: Vector3::z(),
                link: 0,
                segment: Segment::UpperArm,
                row: 0,
                along: 0.0,
                position: mk(&mut rng),
                normal: Vector3::z(),
                covered: i % 3 == 0,
            })
            .collect();
        let set = WipingTargetSet {
            targets,
            axis: Vector3::z(),
        };
        let cloud = SurfacePointCloud {
            points: (0..300)
                .map(|_| crate::scene::SurfacePoint {
                    position: mk(&mut rng),
                    normal: Vector3::z(),
                    segment: Segment::UpperArm,
                })
                .collect(),
        };
        let labeled = label_cloud(&cloud, &set, 0.03);
        for (lp, p) in labeled.points.iter().zip(&cloud.points) {
            let d = set
                .targets
                .iter()
                .filter(|t| !t.covered)
                .map(|t| (t.position - p.position).norm())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(lp.label == 1, d <= 0.03);
        }
        let mut all = set.clone();
        all.targets.iter_mut().for_each(|t| t.covered = true);
        assert!(label_cloud(&cloud, &all, 0.03)
            .points
            .iter()
            .all(|p| p.label == 0));
    }
}
