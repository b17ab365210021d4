//! Scenario files, seeded manipulation and bathing trials, campaign
//! aggregation and the exported record formats.
//!
//! Trial setups are rejection-sampled: a limb configuration is drawn
//! uniformly within the (age-reduced) limits and kept when the limb clears
//! the scene and the holding robot reaches the grasp without collision.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bathing::{
    generate_targets, next_config_random, select_feasible, wiping_trajectory, BathingParams,
    BathingWorld, WipingTargetSet,
};
use crate::config::{default_robot_chain, load_chain, parse_scene, read_file};
use crate::coupling::{transforms_from_grasp, CoupledState, CoupledSystem};
use crate::csdf::{min_clearance, world_points, ControlLayout, ControlPointSet, CsdfParams};
use crate::error::{ConfigError, GraspError, TrialError};
use crate::follower::{execute, ExecutionResult, FollowerParams};
use crate::geometry::Pose;
use crate::grasp::{
    filter_feasible, ranking, sample_antipodal, score_all, segment_reference, FeasibleGrasp,
    GraspParams, RobotModel,
};
use crate::kinematics::{apply_age_group, limb_chain_with, AgeGroup, ChainSpec, IkParams};
use crate::par::{self, Mode};
use crate::planner::{
    check_invariants, nominal_trajectory, plan, plan_free, records, CollisionModel, Coupling,
    PlanContext, PlannerParams, Trajectory, WaypointRecord,
};
use crate::scene::{chain_capsules, sample_limb_surface, Posture, Scene, Segment};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollisionLayout {
    pub robot: ControlLayout,
    /// Control points per limb capsule.
    pub limb_points: usize,
    /// Length of the upper arm near the shoulder left without points.
    pub limb_start: f64,
    /// Clearance required of sampled trial setups (m). At the repulsion
    /// radius the field has no equilibrium around the start or goal.
    pub setup_clearance: f64,
}

impl Default for CollisionLayout {
    fn default() -> Self {
        Self {
            robot: ControlLayout::default(),
            limb_points: 6,
            limb_start: 0.1,
            setup_clearance: 0.05,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WiperFile {
    #[serde(default)]
    chain: Option<PathBuf>,
    base: [f64; 7],
    seeds: Vec<Vec<f64>>,
    rest: Vec<f64>,
    #[serde(default)]
    ik_iters: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    posture: Option<Posture>,
    #[serde(default)]
    age_group: AgeGroup,
    scene: PathBuf,
    #[serde(default)]
    robot_chain: Option<PathBuf>,
    robot_base: [f64; 7],
    robot_seeds: Vec<Vec<f64>>,
    rest_q_h: Vec<f64>,
    #[serde(default)]
    limb_limits: Option<[[f64; 2]; 4]>,
    #[serde(default = "one")]
    n_trials: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "sixty")]
    deadline_s: f64,
    #[serde(default = "attempts")]
    sample_attempts: usize,
    #[serde(default = "two")]
    n_grasps: usize,
    #[serde(default)]
    wiper: Option<WiperFile>,
    #[serde(default)]
    grasp: GraspParams,
    #[serde(default)]
    planner: PlannerParams,
    #[serde(default)]
    follower: FollowerParams,
    #[serde(default)]
    csdf: CsdfParams,
    #[serde(default)]
    bathing: BathingParams,
    #[serde(default)]
    collision: CollisionLayout,
}

fn one() -> usize {
    1
}
fn two() -> usize {
    2
}
fn sixty() -> f64 {
    60.0
}
fn attempts() -> usize {
    400
}

#[derive(Clone, Debug)]
pub struct WiperSpec {
    pub chain: ChainSpec,
    pub seeds: Vec<DVector<f64>>,
    pub rest: DVector<f64>,
    pub ik: IkParams,
}

/// A validated scenario with every referenced file loaded.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub posture: Posture,
    pub age_group: AgeGroup,
    pub scene: Scene,
    /// Limb chain before any age reduction.
    pub base_limb: ChainSpec,
    pub limb: ChainSpec,
    pub robot: ChainSpec,
    pub robot_seeds: Vec<DVector<f64>>,
    pub rest_q_h: DVector<f64>,
    pub wiper: Option<WiperSpec>,
    pub n_trials: usize,
    pub seed: u64,
    pub deadline_s: f64,
    pub sample_attempts: usize,
    pub n_grasps: usize,
    pub grasp: GraspParams,
    pub planner: PlannerParams,
    pub follower: FollowerParams,
    pub csdf: CsdfParams,
    pub bathing: BathingParams,
    pub collision: CollisionLayout,
}

fn semantic(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Semantic {
        path: path.to_string(),
        message: message.into(),
    }
}

fn dvec(path: &str, field: &str, v: &[f64], dof: usize) -> Result<DVector<f64>, ConfigError> {
    if v.len() != dof {
        return Err(semantic(
            path,
            format!(
                "`{field}` has {} values, the chain has {dof} joints",
                v.len()
            ),
        ));
    }
    Ok(DVector::from_column_slice(v))
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = read_file(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&path.display().to_string(), &text, dir)
    }

    /// Parses a scenario; relative file references resolve against `dir`.
    pub fn parse(path: &str, text: &str, dir: &Path) -> Result<Self, ConfigError> {
        let f: ScenarioFile = toml::from_str(text).map_err(|e| ConfigError::Invalid {
            path: path.to_string(),
            line: e
                .span()
                .map(|s| crate::config::line_of(text, s.start))
                .unwrap_or(1),
            message: e.message().to_string(),
        })?;
        if f.n_trials == 0 {
            return Err(semantic(path, "`n_trials` must be at least 1"));
        }
        if !(f.csdf.rho > 0.0 && f.csdf.rho < f.csdf.r_outer) {
            return Err(semantic(path, "csdf: need 0 < rho < r_outer"));
        }
        if f.planner.n_rollouts < 2
            || f.planner.horizon[0] < 1
            || f.planner.horizon[0] > f.planner.horizon[1]
        {
            return Err(semantic(
                path,
                "planner: need n_rollouts >= 2 and 1 <= horizon[0] <= horizon[1]",
            ));
        }
        if !(f.follower.step_size > 0.0)
            || f.follower.attraction_gain < 0.0
            || f.follower.repulsion_gain < 0.0
        {
            return Err(semantic(
                path,
                "follower: need step_size > 0 and non-negative gains",
            ));
        }
        let spec = {
            let scene_path = dir.join(&f.scene);
            parse_scene(&scene_path.display().to_string(), &read_file(&scene_path)?)?
        };
        let posture = f.posture.unwrap_or(spec.scene.posture);
        if posture != spec.scene.posture {
            return Err(semantic(
                path,
                format!(
                    "posture `{posture}` does not match the scene's `{}`",
                    spec.scene.posture
                ),
            ));
        }
        let segment_length = |seg: Segment| spec.scene.limb_capsule(seg).map(|c| c.0);
        let (Some(upper), Some(forearm)) = (
            segment_length(Segment::UpperArm),
            segment_length(Segment::Forearm),
        ) else {
            return Err(semantic(
                path,
                "scene must define upper_arm and forearm limb segments",
            ));
        };
        let limits = match f.limb_limits {
            Some(l) => l.map(|p| (p[0], p[1])),
            None => crate::kinematics::default_limb_limits(),
        };
        if limits.iter().any(|l| !(l.0 < l.1)) {
            return Err(semantic(
                path,
                "limb_limits: every pair must satisfy lo < hi",
            ));
        }
        let base_limb = limb_chain_with(spec.limb_base, upper, forearm, limits);
        let mut robot = match &f.robot_chain {
            Some(p) => load_chain(&dir.join(p))?,
            None => default_robot_chain(Pose::identity()),
        };
        robot.base = Pose::from_array(f.robot_base)
            .map_err(|e| semantic(path, format!("robot_base: {e}")))?;
        let robot_seeds = f
            .robot_seeds
            .iter()
            .map(|s| dvec(path, "robot_seeds", s, robot.dof()))
            .collect::<Result<Vec<_>, _>>()?;
        if robot_seeds.is_empty() {
            return Err(semantic(path, "`robot_seeds` needs at least one entry"));
        }
        let rest_q_h = dvec(path, "rest_q_h", &f.rest_q_h, 4)?;
        let wiper = match f.wiper {
            None => None,
            Some(w) => {
                let mut chain = match &w.chain {
                    Some(p) => load_chain(&dir.join(p))?,
                    None => default_robot_chain(Pose::identity()),
                };
                chain.base = Pose::from_array(w.base)
                    .map_err(|e| semantic(path, format!("wiper.base: {e}")))?;
                let seeds = w
                    .seeds
                    .iter()
                    .map(|s| dvec(path, "wiper.seeds", s, chain.dof()))
                    .collect::<Result<Vec<_>, _>>()?;
                let rest = dvec(path, "wiper.rest", &w.rest, chain.dof())?;
                let ik = IkParams {
                    max_iters: w.ik_iters.unwrap_or(IkParams::default().max_iters),
                    ..IkParams::default()
                };
                Some(WiperSpec {
                    chain,
                    seeds,
                    rest,
                    ik,
                })
            }
        };
        let mut sc = Scenario {
            name: f.name,
            posture,
            age_group: AgeGroup::None,
            scene: spec.scene,
            limb: base_limb.clone(),
            base_limb,
            robot,
            robot_seeds,
            rest_q_h,
            wiper,
            n_trials: f.n_trials,
            seed: f.seed,
            deadline_s: f.deadline_s,
            sample_attempts: f.sample_attempts,
            n_grasps: f.n_grasps.max(1),
            grasp: f.grasp,
            planner: f.planner,
            follower: f.follower,
            csdf: f.csdf,
            bathing: f.bathing,
            collision: f.collision,
        };
        sc.set_age_group(f.age_group)
            .map_err(|e| semantic(path, e.to_string()))?;
        Ok(sc)
    }

    /// Applies an age-group reduction to the unreduced limb limits. The rest
    /// configuration is clamped into the new limits.
    pub fn set_age_group(&mut self, group: AgeGroup) -> Result<(), crate::error::KinematicsError> {
        self.limb = apply_age_group(&self.base_limb, group)?;
        self.age_group = group;
        self.rest_q_h = self.limb.clamp_to_limits(self.rest_q_h.as_slice());
        Ok(())
    }

    pub fn with_age_group(&self, group: AgeGroup) -> Result<Self, crate::error::KinematicsError> {
        let mut out = self.clone();
        out.set_age_group(group)?;
        Ok(out)
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.planner.mode = mode;
    }

    pub fn robot_model(&self) -> RobotModel {
        RobotModel {
            chain: self.robot.clone(),
            controls: ControlPointSet::along_links(&self.robot, &self.collision.robot),
            ik: IkParams::default(),
            csdf: self.csdf,
            seeds: self.robot_seeds.clone(),
        }
    }

    pub fn limb_controls(&self) -> ControlPointSet {
        ControlPointSet::for_limb(
            &self.scene,
            self.collision.limb_points,
            self.collision.limb_start,
        )
    }

    /// Clearance of the limb alone against the scene at `q_h`.
    pub fn limb_clearance(&self, controls: &ControlPointSet, q_h: &[f64]) -> f64 {
        let posed = self.scene.posed(&self.limb, q_h);
        min_clearance(
            &world_points(controls, &self.limb, q_h),
            &posed.obstacles(&["limb"]),
        )
    }
}

/// Tag of the limb capsule the robot holds.
pub fn grasped_tag(scene: &Scene, segment: Segment) -> String {
    scene
        .attachment(segment)
        .map(|a| scene.primitives[a.primitive].tag.clone())
        .unwrap_or_else(|| format!("limb.{}", segment.label()))
}

/// The `count` best-scored grasps at the rest configuration that the robot
/// can reach, in score order.
pub fn compute_grasps(sc: &Scenario, count: usize) -> Result<Vec<FeasibleGrasp>, GraspError> {
    let rest = sc.rest_q_h.as_slice();
    let posed = sc.scene.posed(&sc.limb, rest);
    let cloud = sample_limb_surface(
        &sc.limb,
        &sc.scene,
        rest,
        sc.grasp.cloud_per_segment,
        sc.seed,
    );
    let mut grasps = sample_antipodal(&cloud, &sc.grasp, sc.seed);
    if grasps.is_empty() {
        return Err(GraspError::NoGraspFound);
    }
    let segment = sc
        .grasp
        .segments
        .first()
        .copied()
        .unwrap_or(Segment::Forearm);
    let reference = segment_reference(&posed, segment).ok_or(GraspError::NoGraspFound)?;
    score_all(&mut grasps, &reference, sc.grasp.alpha);
    let order = ranking(&grasps);
    let robot = sc.robot_model();
    let mut out = Vec::new();
    for chunk in order.chunks(8) {
        let batch: Vec<_> = chunk.iter().map(|&i| grasps[i].clone()).collect();
        out.extend(filter_feasible(&batch, &robot, &posed, &sc.grasp));
        if out.len() >= count {
            break;
        }
    }
    out.truncate(count);
    if out.is_empty() {
        return Err(GraspError::NoGraspFound);
    }
    Ok(out)
}

/// Coupled system for a grasp taken at the rest configuration.
pub fn coupled_system(sc: &Scenario, g: &FeasibleGrasp) -> CoupledSystem {
    let link = sc.scene.attachment(g.grasp.segment).map_or(3, |a| a.link);
    let frames = sc.limb.forward_kinematics(sc.rest_q_h.as_slice());
    let tf = transforms_from_grasp(
        &g.grasp.contact_frame(),
        &frames[link],
        &g.grasp.eef_pose,
        link,
    );
    CoupledSystem::new(sc.robot.clone(), sc.limb.clone(), tf)
}

/// Per-grasp coupled planning setup shared by all trials of a campaign.
/// Robot solutions closer than this (rad) count as the same branch.
const BRANCH_GAP: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct TrialContext {
    pub grasps: Vec<FeasibleGrasp>,
    pub couplings: Vec<Coupling>,
    pub collisions: Vec<CollisionModel>,
    /// Scene used for coupled planning (may include frozen extra bodies).
    pub scene: Scene,
}

impl TrialContext {
    pub fn new(sc: &Scenario) -> Result<Self, TrialError> {
        Self::with_scene(sc, sc.scene.clone())
    }

    pub fn with_scene(sc: &Scenario, scene: Scene) -> Result<Self, TrialError> {
        let grasps = compute_grasps(sc, sc.n_grasps)?;
        let robot_controls = ControlPointSet::along_links(&sc.robot, &sc.collision.robot);
        let limb_controls = sc.limb_controls();
        let couplings = grasps
            .iter()
            .map(|g| Coupling::Coupled(coupled_system(sc, g)))
            .collect();
        let collisions = grasps
            .iter()
            .map(|g| CollisionModel {
                csdf: sc.csdf,
                robot_controls: robot_controls.clone(),
                robot_exclude: vec![grasped_tag(&sc.scene, g.grasp.segment)],
                limb_controls: limb_controls.clone(),
                limb_exclude: vec!["limb".to_string()],
            })
            .collect();
        Ok(Self {
            grasps,
            couplings,
            collisions,
            scene,
        })
    }

    pub fn plan_context<'a>(&'a self, sc: &'a Scenario, grasp: usize) -> PlanContext<'a> {
        PlanContext {
            coupling: &self.couplings[grasp],
            scene: &self.scene,
            collision: &self.collisions[grasp],
            params: &sc.planner,
        }
    }

    pub fn system(&self, grasp: usize) -> &CoupledSystem {
        match &self.couplings[grasp] {
            Coupling::Coupled(s) => s,
            Coupling::Free { .. } => unreachable!("trial couplings are coupled"),
        }
    }

    /// Coupled state holding `q_h` with collision-free robot and limb, if one
    /// is found from the grasp configuration or the scenario seeds.
    pub fn hold(
        &self,
        sc: &Scenario,
        grasp: usize,
        q_h: &DVector<f64>,
        margin: f64,
    ) -> Option<CoupledState> {
        self.holds(sc, grasp, q_h, margin).into_iter().next()
    }

    /// Every distinct collision-free robot solution holding `q_h`, in seed
    /// order.
    pub fn holds(
        &self,
        sc: &Scenario,
        grasp: usize,
        q_h: &DVector<f64>,
        margin: f64,
    ) -> Vec<CoupledState> {
        let ctx = self.plan_context(sc, grasp);
        let sys = self.system(grasp);
        let mut out: Vec<CoupledState> = Vec::new();
        for seed in std::iter::once(&self.grasps[grasp].q_grasp).chain(&sc.robot_seeds) {
            let Ok(q_r) = sys.robot_from_limb(q_h.as_slice(), seed.as_slice()) else {
                continue;
            };
            let q_r = sys.robot.wrap_to_center(q_r.as_slice());
            if out.iter().any(|s| (&s.q_r - &q_r).norm() < BRANCH_GAP) {
                continue;
            }
            let state = CoupledState {
                q_r,
                q_h: q_h.clone(),
            };
            if ctx.check(&state).clearance > margin {
                out.push(state);
            }
        }
        out
    }

    /// Rejection-samples a holdable limb configuration.
    pub fn sample_setup(
        &self,
        sc: &Scenario,
        grasp: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<CoupledState> {
        let limb_controls = &self.collisions[grasp].limb_controls;
        let margin = sc.collision.setup_clearance;
        for _ in 0..sc.sample_attempts {
            let q_h = sc.limb.sample_uniform(rng);
            if sc.limb_clearance(limb_controls, q_h.as_slice()) <= margin {
                continue;
            }
            if let Some(s) = self.hold(sc, grasp, &q_h, margin) {
                return Some(s);
            }
        }
        None
    }
}

/// Deterministic per-trial metrics (one row of the metrics file).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub grasp: usize,
    pub success: bool,
    pub failure: String,
    /// Simulated execution time (s).
    pub exec_time: f64,
    pub ticks: usize,
    pub move_distance: f64,
    pub out_of_range: Vec<f64>,
    /// Every executed limb configuration is a clamp fixed point.
    pub in_range: bool,
    pub stalls: usize,
    pub replans: usize,
    pub plan_waypoints: usize,
    pub q_h_start: Vec<f64>,
    pub q_h_goal: Vec<f64>,
}

/// Wall-clock timings for a trial (kept apart from the deterministic record).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct TrialTiming {
    pub plan_time: f64,
    pub total_time: f64,
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub timing: TrialTiming,
    pub planned: Option<Trajectory>,
    pub execution: Option<ExecutionResult>,
}

fn replan_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Plans from `start` to `goal` and tracks the plan with replanning.
pub fn run_trial_between(
    sc: &Scenario,
    tc: &TrialContext,
    grasp: usize,
    trial: usize,
    seed: u64,
    start: &CoupledState,
    goal: &DVector<f64>,
) -> TrialOutcome {
    let ctx = tc.plan_context(sc, grasp);
    let mut record = TrialRecord {
        trial,
        seed,
        grasp,
        success: false,
        failure: String::new(),
        exec_time: 0.0,
        ticks: 0,
        move_distance: 0.0,
        out_of_range: vec![0.0; sc.limb.dof()],
        in_range: true,
        stalls: 0,
        replans: 0,
        plan_waypoints: 0,
        q_h_start: start.q_h.iter().copied().collect(),
        q_h_goal: goal.iter().copied().collect(),
    };
    let clock = Instant::now();
    let planned = match plan(&ctx, start, goal, seed) {
        Ok((t, _)) => t,
        Err(e) => {
            record.failure = format!("plan: {e}");
            let plan_time = clock.elapsed().as_secs_f64();
            return TrialOutcome {
                record,
                timing: TrialTiming {
                    plan_time,
                    total_time: plan_time,
                },
                planned: None,
                execution: None,
            };
        }
    };
    let mut plan_time = clock.elapsed().as_secs_f64();
    record.plan_waypoints = planned.len();
    let mut k = 0;
    let mut replan = |state: &CoupledState, _| {
        let c = Instant::now();
        k += 1;
        let out = plan(&ctx, state, goal, replan_seed(seed, k))
            .ok()
            .map(|r| r.0);
        plan_time += c.elapsed().as_secs_f64();
        out
    };
    let exec = execute(&ctx, &planned, &sc.follower, sc.deadline_s, &mut replan);
    record.success = exec.success;
    if !exec.success {
        record.failure = "deadline".to_string();
    }
    record.exec_time = exec.total_time;
    record.ticks = exec.ticks;
    record.move_distance = exec.moved_distance;
    record.out_of_range = exec.out_of_range.clone();
    record.in_range = exec
        .trace
        .iter()
        .all(|s| sc.limb.clamp_to_limits(s.q_h.as_slice()) == s.q_h);
    record.stalls = exec.stalls;
    record.replans = exec.replans;
    TrialOutcome {
        record,
        timing: TrialTiming {
            plan_time,
            total_time: plan_time + exec.total_time,
        },
        planned: Some(planned),
        execution: Some(exec),
    }
}

/// One manipulation trial: grasp `trial mod n_grasps`, sampled start and goal.
pub fn run_manipulation_trial(
    sc: &Scenario,
    tc: &TrialContext,
    trial: usize,
) -> Result<TrialOutcome, TrialError> {
    let seed = sc.seed.wrapping_add(trial as u64);
    let grasp = trial % tc.grasps.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = tc
        .sample_setup(sc, grasp, &mut rng)
        .ok_or(TrialError::NoSetup {
            attempts: sc.sample_attempts,
        })?;
    let goal = tc
        .sample_setup(sc, grasp, &mut rng)
        .ok_or(TrialError::NoSetup {
            attempts: sc.sample_attempts,
        })?;
    // the setup may place the robot on any holding branch; prefer one whose
    // nominal path to the goal stays reachable
    let sys = tc.system(grasp);
    let start = tc
        .holds(sc, grasp, &start.q_h, sc.collision.setup_clearance)
        .into_iter()
        .find(|s| nominal_trajectory(sys, s, &goal.q_h, sc.planner.waypoints).is_ok())
        .unwrap_or(start);
    Ok(run_trial_between(
        sc, tc, grasp, trial, seed, &start, &goal.q_h,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

impl std::fmt::Display for Stat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub name: String,
    pub posture: Posture,
    pub age_group: AgeGroup,
    pub trials: usize,
    pub successes: usize,
    pub exec_time: Stat,
    pub move_distance: Stat,
    pub out_of_range_mean: Vec<f64>,
    pub out_of_range_max: Vec<f64>,
}

impl CampaignSummary {
    pub fn from_records(sc: &Scenario, rows: &[TrialRecord]) -> Self {
        let dof = sc.limb.dof();
        let col = |f: fn(&TrialRecord) -> f64| rows.iter().map(f).collect::<Vec<_>>();
        let mut oor_mean = vec![0.0; dof];
        let mut oor_max = vec![0.0f64; dof];
        for r in rows {
            for j in 0..dof {
                oor_mean[j] += r.out_of_range[j] / rows.len().max(1) as f64;
                oor_max[j] = oor_max[j].max(r.out_of_range[j]);
            }
        }
        Self {
            name: sc.name.clone(),
            posture: sc.posture,
            age_group: sc.age_group,
            trials: rows.len(),
            successes: rows.iter().filter(|r| r.success).count(),
            exec_time: Stat::of(&col(|r| r.exec_time)),
            move_distance: Stat::of(&col(|r| r.move_distance)),
            out_of_range_mean: oor_mean,
            out_of_range_max: oor_max,
        }
    }
}

/// Aligned plain-text table, one row per summary.
pub fn summary_table(rows: &[CampaignSummary]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16} {:<8} {:<6} {:>9} {:>17} {:>17} {:>31} {:>31}",
        "scenario",
        "posture",
        "age",
        "success",
        "exec_time_s",
        "move_distance_m",
        "out_of_range_mean_rad",
        "out_of_range_max_rad"
    );
    let vec = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for r in rows {
        let _ = writeln!(
            s,
            "{:<16} {:<8} {:<6} {:>9} {:>17} {:>17} {:>31} {:>31}",
            r.name,
            r.posture.to_string(),
            r.age_group.label(),
            format!("{}/{}", r.successes, r.trials),
            r.exec_time.to_string(),
            r.move_distance.to_string(),
            vec(&r.out_of_range_mean),
            vec(&r.out_of_range_max),
        );
    }
    s
}

#[derive(Clone, Debug)]
pub struct Campaign {
    pub records: Vec<TrialRecord>,
    pub timings: Vec<TrialTiming>,
    pub summary: CampaignSummary,
    pub outcomes: Vec<TrialOutcome>,
}

/// One exported trace line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub trial: usize,
    pub grasp: usize,
    pub planned: Vec<WaypointRecord>,
    pub executed_q_r: Vec<Vec<f64>>,
    pub executed_q_h: Vec<Vec<f64>>,
}

pub const TRIALS_FILE: &str = "trials.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const TRACES_FILE: &str = "traces.jsonl";

/// Runs `n_trials` trials with seeds `seed + i`. When `out` is given the
/// metrics, timing, summary and trace files are written there.
pub fn run_campaign(sc: &Scenario, out: Option<&Path>) -> Result<Campaign, TrialError> {
    let tc = TrialContext::new(sc)?;
    let outcomes = (0..sc.n_trials)
        .map(|i| run_manipulation_trial(sc, &tc, i))
        .collect::<Result<Vec<_>, _>>()?;
    let records: Vec<TrialRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    let timings: Vec<TrialTiming> = outcomes.iter().map(|o| o.timing).collect();
    let summary = CampaignSummary::from_records(sc, &records);
    let campaign = Campaign {
        records,
        timings,
        summary,
        outcomes,
    };
    if let Some(dir) = out {
        write_campaign(sc, &tc, &campaign, dir)?;
    }
    Ok(campaign)
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

pub fn write_trials_csv(path: &Path, records: &[TrialRecord]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let dof = records.first().map_or(0, |r| r.out_of_range.len());
    let mut header: Vec<String> = [
        "trial",
        "seed",
        "grasp",
        "success",
        "failure",
        "exec_time",
        "ticks",
        "move_distance",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..dof).map(|j| format!("out_of_range_{j}")));
    header.extend(
        ["in_range", "stalls", "replans", "plan_waypoints"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![
            r.trial.to_string(),
            r.seed.to_string(),
            r.grasp.to_string(),
            r.success.to_string(),
            r.failure.clone(),
            r.exec_time.to_string(),
            r.ticks.to_string(),
            r.move_distance.to_string(),
        ];
        row.extend(r.out_of_range.iter().map(|v| v.to_string()));
        row.extend([
            r.in_range.to_string(),
            r.stalls.to_string(),
            r.replans.to_string(),
            r.plan_waypoints.to_string(),
        ]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
}

/// Reads back the columns needed for aggregation.
pub fn read_trials_csv(path: &Path) -> std::io::Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    let idx = |name: &str| header.iter().position(|h| h == name);
    let oor: Vec<usize> = (0..)
        .map_while(|j| idx(&format!("out_of_range_{j}")))
        .collect();
    let bad = |m: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, m.to_string());
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err)?;
        let get = |name: &str| -> std::io::Result<&str> {
            idx(name).and_then(|i| row.get(i)).ok_or_else(|| bad(name))
        };
        let num =
            |name: &str| -> std::io::Result<f64> { get(name)?.parse().map_err(|_| bad(name)) };
        let int =
            |name: &str| -> std::io::Result<usize> { get(name)?.parse().map_err(|_| bad(name)) };
        out.push(TrialRecord {
            trial: int("trial")?,
            seed: get("seed")?.parse().map_err(|_| bad("seed"))?,
            grasp: int("grasp")?,
            success: get("success")? == "true",
            failure: get("failure")?.to_string(),
            exec_time: num("exec_time")?,
            ticks: int("ticks")?,
            move_distance: num("move_distance")?,
            out_of_range: oor
                .iter()
                .map(|&i| {
                    row.get(i)
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| bad("out_of_range"))
                })
                .collect::<Result<_, _>>()?,
            in_range: get("in_range")? == "true",
            stalls: int("stalls")?,
            replans: int("replans")?,
            plan_waypoints: int("plan_waypoints")?,
            q_h_start: vec![],
            q_h_goal: vec![],
        });
    }
    Ok(out)
}

fn write_campaign(
    sc: &Scenario,
    tc: &TrialContext,
    c: &Campaign,
    dir: &Path,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_trials_csv(&dir.join(TRIALS_FILE), &c.records)?;
    let mut w = csv::Writer::from_path(dir.join(TIMING_FILE)).map_err(csv_err)?;
    w.write_record(["trial", "plan_time", "total_time"])
        .map_err(csv_err)?;
    for (r, t) in c.records.iter().zip(&c.timings) {
        w.write_record([
            r.trial.to_string(),
            t.plan_time.to_string(),
            t.total_time.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    std::fs::write(
        dir.join(SUMMARY_FILE),
        summary_table(std::slice::from_ref(&c.summary)),
    )?;
    let mut traces = BufWriter::new(File::create(dir.join(TRACES_FILE))?);
    for o in &c.outcomes {
        let Some(planned) = &o.planned else { continue };
        let ctx = tc.plan_context(sc, o.record.grasp);
        let trace = o
            .execution
            .as_ref()
            .map(|e| e.trace.as_slice())
            .unwrap_or(&[]);
        let line = TraceRecord {
            trial: o.record.trial,
            grasp: o.record.grasp,
            planned: records(&ctx, planned),
            executed_q_r: trace
                .iter()
                .map(|s| s.q_r.iter().copied().collect())
                .collect(),
            executed_q_h: trace
                .iter()
                .map(|s| s.q_h.iter().copied().collect())
                .collect(),
        };
        serde_json::to_writer(&mut traces, &line)?;
        traces.write_all(b"\n")?;
    }
    traces.flush()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayReport {
    pub trial: usize,
    /// First waypoint violating a trajectory invariant.
    pub violation: Option<usize>,
    /// First executed limb configuration outside its limits.
    pub executed_out_of_range: Option<usize>,
}

/// Re-validates every exported trajectory against the scenario.
pub fn replay_traces(sc: &Scenario, path: &Path) -> Result<Vec<ReplayReport>, TrialError> {
    let tc = TrialContext::new(sc)?;
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line).map_err(std::io::Error::other)?;
        let traj = Trajectory {
            waypoints: rec
                .planned
                .iter()
                .map(|w| CoupledState {
                    q_r: DVector::from_vec(w.q_r.clone()),
                    q_h: DVector::from_vec(w.q_h.clone()),
                })
                .collect(),
            timestamps: rec.planned.iter().map(|w| w.t).collect(),
        };
        let ctx = tc.plan_context(sc, rec.grasp);
        out.push(ReplayReport {
            trial: rec.trial,
            violation: check_invariants(&ctx, &traj).err(),
            executed_out_of_range: rec
                .executed_q_h
                .iter()
                .position(|q| sc.limb.clamp_to_limits(q).as_slice() != q.as_slice()),
        });
    }
    Ok(out)
}

/// Per-iteration bathing log entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub q_goal: Vec<f64>,
    pub q_reached: Vec<f64>,
    pub manipulation_success: bool,
    pub front_kept: bool,
    pub back_kept: bool,
    pub coverage_before: f64,
    pub coverage_after: f64,
    pub wipe_exec_time: f64,
    pub wipe_plan_time: f64,
    pub travel_distance: f64,
    pub next_goal_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathingOutcome {
    pub episode: usize,
    pub seed: u64,
    pub static_coverage: f64,
    pub coverage: f64,
    pub wipe_exec_time: f64,
    pub wipe_plan_time: f64,
    pub travel_distance: f64,
    pub next_goal_time: f64,
    pub iterations: Vec<IterationLog>,
}

/// Shared setup for bathing episodes.
#[derive(Clone, Debug)]
pub struct BathingContext {
    pub manip: TrialContext,
    pub worlds: Vec<BathingWorld>,
    pub wiper: WiperSpec,
    pub wiper_controls: ControlPointSet,
}

impl BathingContext {
    pub fn new(sc: &Scenario) -> Result<Self, TrialError> {
        let wiper = sc.wiper.clone().ok_or_else(|| {
            TrialError::Config(semantic(&sc.name, "bathing needs a `[wiper]` table"))
        })?;
        let wiper_controls = ControlPointSet::along_links(&wiper.chain, &sc.collision.robot);
        let parked = chain_capsules(
            &wiper.chain,
            wiper.rest.as_slice(),
            sc.bathing.holder_radius,
            "wiper",
        );
        let manip = TrialContext::with_scene(sc, sc.scene.with_extra(parked))?;
        let model = RobotModel {
            chain: wiper.chain.clone(),
            controls: wiper_controls.clone(),
            ik: wiper.ik,
            csdf: sc.csdf,
            seeds: wiper.seeds.clone(),
        };
        let worlds = (0..manip.grasps.len())
            .map(|g| BathingWorld {
                scene: sc.scene.clone(),
                limb_controls: manip.collisions[g].limb_controls.clone(),
                holder: manip.system(g).clone(),
                holder_controls: manip.collisions[g].robot_controls.clone(),
                holder_exclude: manip.collisions[g].robot_exclude[0].clone(),
                wiper: model.clone(),
                wiper_rest: wiper.rest.clone(),
                csdf: sc.csdf,
                holder_radius: sc.bathing.holder_radius,
            })
            .collect();
        Ok(Self {
            manip,
            worlds,
            wiper,
            wiper_controls,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WipeReport {
    pub front_kept: bool,
    pub back_kept: bool,
    pub exec_time: f64,
    pub plan_time: f64,
    pub travel_distance: f64,
    pub reached: usize,
}

fn stroke_params(base: &FollowerParams) -> FollowerParams {
    FollowerParams {
        repulsion_gain: 0.0,
        lookahead: 1,
        goal_tol: 0.005,
        waypoint_tol: 0.005,
        max_replans: 0,
        ..base.clone()
    }
}

/// Static wipe at the held configuration: prune, synthesize strokes, execute
/// transits with the planner and strokes with the follower, then mark
/// coverage along the stroke paths.
pub fn wipe(
    sc: &Scenario,
    bc: &BathingContext,
    world: &BathingWorld,
    set: &mut WipingTargetSet,
    q_h: &DVector<f64>,
    q_r_hold: &DVector<f64>,
    seed: u64,
) -> WipeReport {
    let scene = world.wiping_scene(q_h.as_slice(), q_r_hold.as_slice());
    let limb = &world.holder.limb;
    let sel = select_feasible(
        set,
        limb,
        q_h.as_slice(),
        &world.wiper,
        &scene,
        sc.bathing.sample_size,
    );
    let wp = wiping_trajectory(
        set,
        &sel.feasible,
        limb,
        q_h.as_slice(),
        &world.wiper,
        &scene,
        sc.bathing.standoff,
        &bc.wiper.rest,
    );
    let mut report = WipeReport {
        front_kept: sel.front_kept,
        back_kept: sel.back_kept,
        reached: wp.reached.len(),
        ..Default::default()
    };
    let coupling = Coupling::Free {
        robot: bc.wiper.chain.clone(),
        q_h: q_h.clone(),
    };
    let collision = CollisionModel {
        csdf: sc.csdf,
        robot_controls: bc.wiper_controls.clone(),
        robot_exclude: vec![],
        limb_controls: ControlPointSet::default(),
        limb_exclude: vec![],
    };
    let ctx = PlanContext {
        coupling: &coupling,
        scene: &scene,
        collision: &collision,
        params: &sc.planner,
    };
    let chain = &bc.wiper.chain;
    let tcp = |s: &CoupledState| chain.end_pose(s.q_r.as_slice()).translation;
    let path_length = |trace: &[CoupledState]| {
        trace
            .windows(2)
            .map(|w| (tcp(&w[1]) - tcp(&w[0])).norm())
            .sum::<f64>()
    };
    let mut state = CoupledState {
        q_r: bc.wiper.rest.clone(),
        q_h: q_h.clone(),
    };
    let mut leg = 0u64;
    let mut transit =
        |state: &mut CoupledState, goal: &DVector<f64>, report: &mut WipeReport| -> bool {
            leg += 1;
            let s = replan_seed(seed, leg as usize);
            let clock = Instant::now();
            let planned = plan_free(&ctx, state, goal, s);
            report.plan_time += clock.elapsed().as_secs_f64();
            let Ok((traj, _)) = planned else { return false };
            let mut k = 0;
            let mut replan = |st: &CoupledState, _| {
                k += 1;
                plan_free(&ctx, st, goal, replan_seed(s, k))
                    .ok()
                    .map(|r| r.0)
            };
            let exec = execute(&ctx, &traj, &sc.follower, sc.deadline_s, &mut replan);
            report.exec_time += exec.total_time;
            report.travel_distance += path_length(&exec.trace);
            *state = exec.trace.last().cloned().unwrap_or_else(|| state.clone());
            exec.success
        };
    let stroke_follow = stroke_params(&sc.follower);
    for stroke in wp.strokes() {
        if !transit(&mut state, &stroke[0].q_r, &mut report) {
            continue;
        }
        let mut waypoints = vec![state.clone()];
        waypoints.extend(stroke.iter().map(|s| CoupledState {
            q_r: s.q_r.clone(),
            q_h: q_h.clone(),
        }));
        let traj = Trajectory {
            timestamps: (0..waypoints.len())
                .map(|i| i as f64 * sc.planner.waypoint_dt)
                .collect(),
            waypoints,
        };
        let exec = execute(&ctx, &traj, &stroke_follow, sc.deadline_s, &mut |_, _| None);
        report.exec_time += exec.total_time;
        report.travel_distance += path_length(&exec.trace);
        let path: Vec<_> = exec.trace.iter().map(tcp).collect();
        crate::bathing::mark_covered(set, &path, sc.bathing.contact_radius);
        state = exec.trace.last().cloned().unwrap_or(state);
    }
    let rest = bc.wiper.rest.clone();
    transit(&mut state, &rest, &mut report);
    report
}

/// One bathing episode: a static wipe at rest, then up to `max_iterations`
/// rounds of reposition and wipe.
pub fn run_bathing_trial(
    sc: &Scenario,
    bc: &BathingContext,
    episode: usize,
    max_iterations: usize,
) -> Result<BathingOutcome, TrialError> {
    let seed = sc.seed.wrapping_add(episode as u64);
    let g = episode % bc.worlds.len();
    let world = &bc.worlds[g];
    let limb = &world.holder.limb;
    let mut state = bc
        .manip
        .hold(sc, g, &sc.rest_q_h, sc.csdf.rho)
        .ok_or(TrialError::NoSetup { attempts: 1 })?;
    let front = nalgebra::Vector3::from(sc.bathing.front_axis);
    let mut set = generate_targets(
        limb,
        &sc.scene,
        state.q_h.as_slice(),
        sc.bathing.rows,
        sc.bathing.per_row,
        front,
    );
    let first = wipe(sc, bc, world, &mut set, &state.q_h, &state.q_r, seed);
    let static_coverage = set.coverage();
    let mut out = BathingOutcome {
        episode,
        seed,
        static_coverage,
        coverage: static_coverage,
        wipe_exec_time: first.exec_time,
        wipe_plan_time: first.plan_time,
        travel_distance: first.travel_distance,
        next_goal_time: 0.0,
        iterations: vec![],
    };
    let ctx = bc.manip.plan_context(sc, g);
    for it in 0..max_iterations {
        if set.uncovered().is_empty() {
            break;
        }
        let it_seed = replan_seed(seed, 1000 + it);
        let clock = Instant::now();
        let mut accepted: Option<Trajectory> = None;
        let next = next_config_random(
            world,
            &state.q_h,
            &set,
            state.q_r.as_slice(),
            &sc.bathing,
            it_seed,
            sc.planner.mode,
            &mut |q, _| match plan(&ctx, &state, q, it_seed) {
                Ok((t, _)) => {
                    accepted = Some(t);
                    true
                }
                Err(_) => false,
            },
        );
        let next_goal_time = clock.elapsed().as_secs_f64();
        out.next_goal_time += next_goal_time;
        let coverage_before = set.coverage();
        let mut log = IterationLog {
            iteration: it + 1,
            q_goal: vec![],
            q_reached: state.q_h.iter().copied().collect(),
            manipulation_success: false,
            front_kept: false,
            back_kept: false,
            coverage_before,
            coverage_after: coverage_before,
            wipe_exec_time: 0.0,
            wipe_plan_time: 0.0,
            travel_distance: 0.0,
            next_goal_time,
        };
        let (Ok(next), Some(traj)) = (next, accepted) else {
            out.iterations.push(log);
            continue;
        };
        log.q_goal = next.q_h.iter().copied().collect();
        let goal = next.q_h.clone();
        let mut k = 0;
        let mut replan = |st: &CoupledState, _| {
            k += 1;
            plan(&ctx, st, &goal, replan_seed(it_seed, k))
                .ok()
                .map(|r| r.0)
        };
        let exec = execute(&ctx, &traj, &sc.follower, sc.deadline_s, &mut replan);
        log.manipulation_success = exec.success;
        if let Some(last) = exec.trace.last() {
            state = last.clone();
        }
        log.q_reached = state.q_h.iter().copied().collect();
        set.reposition(limb, state.q_h.as_slice());
        let w = wipe(sc, bc, world, &mut set, &state.q_h, &state.q_r, it_seed);
        log.front_kept = w.front_kept;
        log.back_kept = w.back_kept;
        log.coverage_after = set.coverage();
        log.wipe_exec_time = w.exec_time;
        log.wipe_plan_time = w.plan_time;
        log.travel_distance = w.travel_distance;
        out.wipe_exec_time += w.exec_time;
        out.wipe_plan_time += w.plan_time;
        out.travel_distance += w.travel_distance;
        out.coverage = log.coverage_after;
        out.iterations.push(log);
    }
    Ok(out)
}

pub const BATHING_FILE: &str = "bathing.csv";
pub const EPISODES_FILE: &str = "episodes.jsonl";

/// Runs `n_trials` bathing episodes and writes per-episode rows and logs.
pub fn run_bathing_campaign(
    sc: &Scenario,
    out: Option<&Path>,
) -> Result<Vec<BathingOutcome>, TrialError> {
    let bc = BathingContext::new(sc)?;
    let episodes = (0..sc.n_trials)
        .map(|e| run_bathing_trial(sc, &bc, e, sc.bathing.max_iterations))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = out {
        write_bathing(dir, &episodes)?;
    }
    Ok(episodes)
}

pub fn write_bathing(dir: &Path, episodes: &[BathingOutcome]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(BATHING_FILE)).map_err(csv_err)?;
    w.write_record([
        "episode",
        "seed",
        "static_coverage",
        "coverage",
        "iterations",
        "wipe_exec_time",
        "wipe_plan_time",
        "travel_distance",
        "next_goal_time",
    ])
    .map_err(csv_err)?;
    for e in episodes {
        w.write_record([
            e.episode.to_string(),
            e.seed.to_string(),
            e.static_coverage.to_string(),
            e.coverage.to_string(),
            e.iterations.len().to_string(),
            e.wipe_exec_time.to_string(),
            e.wipe_plan_time.to_string(),
            e.travel_distance.to_string(),
            e.next_goal_time.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    let mut logs = BufWriter::new(File::create(dir.join(EPISODES_FILE))?);
    for e in episodes {
        serde_json::to_writer(&mut logs, e)?;
        logs.write_all(b"\n")?;
    }
    logs.flush()
}

/// Runs trials in parallel chunks when the pool has more than one worker.
pub fn run_trials_parallel(
    sc: &Scenario,
    tc: &TrialContext,
    mode: Mode,
) -> Vec<Result<TrialOutcome, TrialError>> {
    par::map_range(mode, sc.n_trials, |i| run_manipulation_trial(sc, tc, i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_of_single_value_has_zero_std() {
        let s = Stat::of(&[2.5]);
        assert_eq!(
            s,
            Stat {
                mean: 2.5,
                std: 0.0
            }
        );
        let s = Stat::of(&[1.0, 3.0]);
        assert_eq!(
            s,
            Stat {
                mean: 2.0,
                std: 1.0
            }
        );
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = TrialRecord {
            trial: 3,
            seed: 10,
            grasp: 1,
            success: true,
            failure: String::new(),
            exec_time: 1.25,
            ticks: 62,
            move_distance: 0.1 + 0.2,
            out_of_range: vec![0.0, 0.01, 0.0, 1e-17],
            in_range: true,
            stalls: 2,
            replans: 0,
            plan_waypoints: 21,
            q_h_start: vec![],
            q_h_goal: vec![],
        };
        let path = dir.path().join("t.csv");
        write_trials_csv(&path, std::slice::from_ref(&r)).unwrap();
        assert_eq!(read_trials_csv(&path).unwrap(), vec![r]);
    }
}
