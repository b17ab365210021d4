//! Sampling-based receding-horizon planner over coupled robot/limb states.
//!
//! A nominal trajectory is interpolated in limb joint space and mapped to the
//! robot. Each iteration perturbs the next `H` robot waypoints, projects every
//! rollout through the IK handshake, scores it and commits the cheapest one.

use std::borrow::Cow;
use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coupling::{CoupledState, CoupledSystem};
use crate::csdf::{collision_cost, min_clearance, world_points, ControlPointSet, CsdfParams};
use crate::error::PlanError;
use crate::kinematics::ChainSpec;
use crate::par::{self, Mode};
use crate::scene::Scene;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    /// Temperature for the optional weighted average.
    pub lambda: f64,
    pub sigma: f64,
    pub n_rollouts: usize,
    pub horizon: [usize; 2],
    pub waypoints: usize,
    pub w_goal: f64,
    pub w_collision: f64,
    pub w_length: f64,
    pub max_seconds: f64,
    /// Blend rollouts with exponential weights instead of taking the argmin.
    pub weighted_average: bool,
    /// Fresh sample batches tried when the cheapest rollout still collides.
    pub max_resample: usize,
    /// Nominal time between waypoints (s).
    pub waypoint_dt: f64,
    #[serde(skip)]
    pub mode: Mode,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            sigma: 0.005f64.sqrt(),
            n_rollouts: 64,
            horizon: [4, 16],
            waypoints: 20,
            w_goal: 10.0,
            w_collision: 1.0,
            w_length: 1.0,
            max_seconds: 60.0,
            weighted_average: false,
            max_resample: 4,
            waypoint_dt: 0.5,
            mode: Mode::Parallel,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Trajectory {
    pub waypoints: Vec<CoupledState>,
    pub timestamps: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn last(&self) -> &CoupledState {
        self.waypoints
            .last()
            .expect("trajectory has at least one waypoint")
    }

    /// Summed joint-space length of the robot path.
    pub fn robot_length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (&w[1].q_r - &w[0].q_r).norm())
            .sum()
    }
}

/// Control spheres and tag exclusions for the robot and (optionally) the limb.
#[derive(Clone, Debug)]
pub struct CollisionModel {
    pub csdf: CsdfParams,
    pub robot_controls: ControlPointSet,
    pub robot_exclude: Vec<String>,
    pub limb_controls: ControlPointSet,
    pub limb_exclude: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateCheck {
    pub cost: f64,
    pub clearance: f64,
}

impl CollisionModel {
    fn excludes(tags: &[String]) -> Vec<&str> {
        tags.iter().map(String::as_str).collect()
    }

    pub fn check(
        &self,
        robot: &ChainSpec,
        limb: Option<&ChainSpec>,
        scene: &Scene,
        state: &CoupledState,
    ) -> StateCheck {
        let scene: Cow<'_, Scene> = match limb {
            Some(l) if !scene.attachments.is_empty() => {
                Cow::Owned(scene.posed(l, state.q_h.as_slice()))
            }
            _ => Cow::Borrowed(scene),
        };
        let spheres = world_points(&self.robot_controls, robot, state.q_r.as_slice());
        let obstacles = scene.obstacles(&Self::excludes(&self.robot_exclude));
        let mut cost = collision_cost(&spheres, &obstacles, &self.csdf);
        let mut clearance = min_clearance(&spheres, &obstacles);
        if let (Some(l), false) = (limb, self.limb_controls.is_empty()) {
            let spheres = world_points(&self.limb_controls, l, state.q_h.as_slice());
            let obstacles = scene.obstacles(&Self::excludes(&self.limb_exclude));
            cost += collision_cost(&spheres, &obstacles, &self.csdf);
            clearance = clearance.min(min_clearance(&spheres, &obstacles));
        }
        StateCheck { cost, clearance }
    }
}

/// Coupled planning projects through the handshake; free planning moves the
/// robot alone with the limb frozen.
#[derive(Clone, Debug)]
pub enum Coupling {
    Coupled(CoupledSystem),
    Free { robot: ChainSpec, q_h: DVector<f64> },
}

/// Projected state plus the limb solution before clamping.
#[derive(Clone, Debug, PartialEq)]
pub struct Projected {
    pub state: CoupledState,
    pub q_h_raw: DVector<f64>,
}

impl Coupling {
    pub fn robot(&self) -> &ChainSpec {
        match self {
            Coupling::Coupled(sys) => &sys.robot,
            Coupling::Free { robot, .. } => robot,
        }
    }

    pub fn limb(&self) -> Option<&ChainSpec> {
        match self {
            Coupling::Coupled(sys) => Some(&sys.limb),
            Coupling::Free { .. } => None,
        }
    }

    pub fn project(&self, q_r: &[f64], prev: &CoupledState) -> Option<Projected> {
        match self {
            Coupling::Coupled(sys) => {
                sys.handshake(q_r, prev.q_h.as_slice())
                    .ok()
                    .map(|hs| Projected {
                        state: hs.state,
                        q_h_raw: hs.q_h_raw,
                    })
            }
            Coupling::Free { q_h, .. } => Some(Projected {
                state: CoupledState {
                    q_r: DVector::from_column_slice(q_r),
                    q_h: q_h.clone(),
                },
                q_h_raw: q_h.clone(),
            }),
        }
    }

    pub fn is_consistent(&self, state: &CoupledState) -> bool {
        match self {
            Coupling::Coupled(sys) => sys.is_consistent(state),
            Coupling::Free { .. } => true,
        }
    }

    pub fn limb_in_range(&self, q_h: &[f64]) -> bool {
        match self {
            Coupling::Coupled(sys) => sys.limb.clamp_to_limits(q_h).as_slice() == q_h,
            Coupling::Free { .. } => true,
        }
    }
}

pub struct PlanContext<'a> {
    pub coupling: &'a Coupling,
    pub scene: &'a Scene,
    pub collision: &'a CollisionModel,
    pub params: &'a PlannerParams,
}

impl PlanContext<'_> {
    pub fn check(&self, state: &CoupledState) -> StateCheck {
        self.collision.check(
            self.coupling.robot(),
            self.coupling.limb(),
            self.scene,
            state,
        )
    }
}

pub fn lerp(a: &DVector<f64>, b: &DVector<f64>, t: f64) -> DVector<f64> {
    a + (b - a) * t
}

/// `steps + 1` states from `start` to the limb goal. Waypoint robot
/// configurations are IK-mapped and warm-started from their predecessor.
pub fn nominal_trajectory(
    sys: &CoupledSystem,
    start: &CoupledState,
    q_h_goal: &DVector<f64>,
    steps: usize,
) -> Result<Vec<CoupledState>, PlanError> {
    let steps = steps.max(1);
    // clamping only removes rounding overshoot at the limits
    let q_hs: Vec<DVector<f64>> = (0..=steps)
        .map(|i| match i {
            0 => start.q_h.clone(),
            i if i == steps => q_h_goal.clone(),
            i => sys
                .limb
                .clamp_to_limits(lerp(&start.q_h, q_h_goal, i as f64 / steps as f64).as_slice()),
        })
        .collect();
    let mut out = vec![start.clone()];
    let mut i = 1;
    while i <= steps {
        let prev = &out[i - 1].q_r;
        match sys.robot_from_limb(q_hs[i].as_slice(), prev.as_slice()) {
            Ok(q_r) => out.push(CoupledState {
                q_r,
                q_h: q_hs[i].clone(),
            }),
            Err(_) => {
                // re-seed from the following neighbour, solved from the previous seed
                let next = q_hs.get(i + 1).ok_or(PlanError::Infeasible { index: i })?;
                let q_next = sys
                    .robot_from_limb(next.as_slice(), prev.as_slice())
                    .map_err(|_| PlanError::Infeasible { index: i })?;
                let q_r = sys
                    .robot_from_limb(q_hs[i].as_slice(), q_next.as_slice())
                    .map_err(|_| PlanError::Infeasible { index: i })?;
                out.push(CoupledState {
                    q_r,
                    q_h: q_hs[i].clone(),
                });
            }
        }
        i += 1;
    }
    Ok(out)
}

/// Robot-space interpolation for free (uncoupled) planning.
pub fn nominal_free(
    start: &CoupledState,
    q_r_goal: &DVector<f64>,
    steps: usize,
) -> Vec<CoupledState> {
    let steps = steps.max(1);
    (0..=steps)
        .map(|i| CoupledState {
            q_r: if i == steps {
                q_r_goal.clone()
            } else {
                lerp(&start.q_r, q_r_goal, i as f64 / steps as f64)
            },
            q_h: start.q_h.clone(),
        })
        .collect()
}

pub fn dynamic_horizon(remaining: usize, bounds: [usize; 2]) -> usize {
    remaining.div_ceil(2).clamp(bounds[0], bounds[1])
}

fn rollout_rng(seed: u64, iteration: u64, rollout: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ iteration.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(rollout as u64);
    rng
}

/// One perturbed copy of the segment `anchor, nominal[0..H]`. The nominal
/// deltas are re-anchored at `anchor`; rollout 0 carries no noise.
pub fn sample_rollout(
    anchor: &DVector<f64>,
    nominal: &[DVector<f64>],
    sigma: f64,
    seed: u64,
    iteration: u64,
    index: usize,
) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(nominal.len());
    let mut prev_nominal = anchor.clone();
    let mut current = anchor.clone();
    let mut rng = rollout_rng(seed, iteration, index);
    let normal = (index > 0 && sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
    for target in nominal {
        let mut delta = target - &prev_nominal;
        if let Some(n) = &normal {
            for v in delta.iter_mut() {
                *v += n.sample(&mut rng);
            }
        }
        current += delta;
        out.push(current.clone());
        prev_nominal = target.clone();
    }
    out
}

pub fn sample_rollouts(
    anchor: &DVector<f64>,
    nominal: &[DVector<f64>],
    params: &PlannerParams,
    seed: u64,
    iteration: u64,
) -> Vec<Vec<DVector<f64>>> {
    par::map_range(params.mode, params.n_rollouts, |k| {
        sample_rollout(anchor, nominal, params.sigma, seed, iteration, k)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredRollout {
    pub states: Vec<CoupledState>,
    pub cost: f64,
    pub min_clearance: f64,
}

/// Projects a rollout waypoint by waypoint; `None` when any handshake fails.
pub fn project_rollout(
    coupling: &Coupling,
    start: &CoupledState,
    rollout: &[DVector<f64>],
) -> Option<Vec<CoupledState>> {
    let mut prev = start.clone();
    let mut out = Vec::with_capacity(rollout.len());
    for q_r in rollout {
        let p = coupling.project(q_r.as_slice(), &prev)?;
        prev = p.state.clone();
        out.push(p.state);
    }
    Some(out)
}

/// Goal, collision and length terms for a projected rollout starting at `start`.
pub fn rollout_cost(
    ctx: &PlanContext<'_>,
    start: &CoupledState,
    states: &[CoupledState],
    goal: &DVector<f64>,
) -> (f64, f64) {
    let p = ctx.params;
    let Some(last) = states.last() else {
        return (p.w_goal * (&start.q_r - goal).norm(), f64::INFINITY);
    };
    let goal_term = (&last.q_r - goal).norm();
    let mut collision = 0.0;
    let mut clearance = f64::INFINITY;
    let mut length = 0.0;
    let mut prev = &start.q_r;
    for s in states {
        let c = ctx.check(s);
        collision += c.cost;
        clearance = clearance.min(c.clearance);
        length += (&s.q_r - prev).norm();
        prev = &s.q_r;
    }
    (
        p.w_goal * goal_term + p.w_collision * collision + p.w_length * length,
        clearance,
    )
}

fn score(
    ctx: &PlanContext<'_>,
    start: &CoupledState,
    rollout: &[DVector<f64>],
    goal: &DVector<f64>,
) -> Option<ScoredRollout> {
    let states = project_rollout(ctx.coupling, start, rollout)?;
    let (cost, min_clearance) = rollout_cost(ctx, start, &states, goal);
    Some(ScoredRollout {
        states,
        cost,
        min_clearance,
    })
}

/// Index of the cheapest surviving rollout, ties to the lowest index.
pub fn select_argmin(scored: &[Option<ScoredRollout>]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scored.iter().enumerate() {
        if let Some(s) = s {
            if best.is_none_or(|b| s.cost < scored[b].as_ref().unwrap().cost) {
                best = Some(i);
            }
        }
    }
    best
}

fn weighted_blend(
    rollouts: &[Vec<DVector<f64>>],
    scored: &[Option<ScoredRollout>],
    lambda: f64,
) -> Option<Vec<DVector<f64>>> {
    let c_min = scored
        .iter()
        .flatten()
        .map(|s| s.cost)
        .fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    let mut acc: Option<Vec<DVector<f64>>> = None;
    for (r, s) in rollouts.iter().zip(scored) {
        let Some(s) = s else { continue };
        let w = (-(s.cost - c_min) / lambda).exp();
        total += w;
        match &mut acc {
            None => acc = Some(r.iter().map(|q| q * w).collect()),
            Some(a) => {
                for (ai, q) in a.iter_mut().zip(r) {
                    *ai += q * w;
                }
            }
        }
    }
    acc.map(|a| a.into_iter().map(|q| q / total).collect())
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PlanStats {
    pub iterations: usize,
    pub resamples: usize,
    pub rejected: usize,
    /// Per committed segment: (selected cost, projected nominal cost).
    pub segment_costs: Vec<(f64, f64)>,
    pub wall_seconds: f64,
}

/// Runs the planner from `start` along the given nominal (which must begin at
/// `start`). The final nominal state is the goal.
pub fn plan_along(
    ctx: &PlanContext<'_>,
    nominal: &[CoupledState],
    seed: u64,
) -> Result<(Trajectory, PlanStats), PlanError> {
    let clock = Instant::now();
    let p = ctx.params;
    let start = nominal
        .first()
        .ok_or(PlanError::Infeasible { index: 0 })?
        .clone();
    let goal_state = nominal.last().unwrap().clone();
    let goal = goal_state.q_r.clone();
    let total = nominal.len() - 1;
    let mut stats = PlanStats::default();
    let mut committed = vec![start.clone()];
    let mut k = 0;
    let mut iteration: u64 = 0;
    while k < total {
        let remaining = total - k;
        let h = dynamic_horizon(remaining, p.horizon).min(remaining);
        let segment: Vec<DVector<f64>> = nominal[k + 1..=k + h]
            .iter()
            .map(|s| s.q_r.clone())
            .collect();
        let anchor = committed.last().unwrap().clone();
        let mut chosen = None;
        for _ in 0..=p.max_resample {
            if clock.elapsed().as_secs_f64() > p.max_seconds {
                return Err(PlanError::Timeout {
                    limit_s: p.max_seconds,
                });
            }
            let rollouts = sample_rollouts(&anchor.q_r, &segment, p, seed, iteration);
            iteration += 1;
            stats.iterations += 1;
            let scored = par::map_with(p.mode, &rollouts, |r| score(ctx, &anchor, r, &goal));
            stats.rejected += scored.iter().filter(|s| s.is_none()).count();
            let Some(best) = select_argmin(&scored) else {
                stats.resamples += 1;
                continue;
            };
            let mut pick = scored[best].clone().unwrap();
            if p.weighted_average {
                if let Some(blend) = weighted_blend(&rollouts, &scored, p.lambda) {
                    if let Some(b) = score(ctx, &anchor, &blend, &goal) {
                        if b.cost <= pick.cost {
                            pick = b;
                        }
                    }
                }
            }
            if pick.min_clearance > ctx.collision.csdf.rho {
                let nominal_cost = scored[0].as_ref().map_or(f64::INFINITY, |s| s.cost);
                stats.segment_costs.push((pick.cost, nominal_cost));
                chosen = Some(pick);
                break;
            }
            stats.resamples += 1;
        }
        let Some(pick) = chosen else {
            return Err(PlanError::Blocked { index: k });
        };
        committed.extend(pick.states);
        k += h;
    }
    if committed.last() != Some(&goal_state) {
        committed.push(goal_state);
    }
    let trajectory = Trajectory {
        timestamps: (0..committed.len())
            .map(|i| i as f64 * p.waypoint_dt)
            .collect(),
        waypoints: committed,
    };
    if let Err(index) = check_invariants(ctx, &trajectory) {
        return Err(PlanError::Blocked { index });
    }
    stats.wall_seconds = clock.elapsed().as_secs_f64();
    Ok((trajectory, stats))
}

/// Coupled plan from `start` to the limb configuration `q_h_goal`. With a
/// free coupling the goal is read as a robot configuration.
pub fn plan(
    ctx: &PlanContext<'_>,
    start: &CoupledState,
    q_h_goal: &DVector<f64>,
    seed: u64,
) -> Result<(Trajectory, PlanStats), PlanError> {
    let Coupling::Coupled(sys) = ctx.coupling else {
        return plan_free(ctx, start, q_h_goal, seed);
    };
    if !sys.limb.within_limits(start.q_h.as_slice()) || !sys.limb.within_limits(q_h_goal.as_slice())
    {
        return Err(PlanError::OutOfRange);
    }
    if start.q_h == *q_h_goal {
        return plan_along(ctx, std::slice::from_ref(start), seed);
    }
    let nominal = nominal_trajectory(sys, start, q_h_goal, ctx.params.waypoints)?;
    plan_along(ctx, &nominal, seed)
}

/// Robot-only plan to the robot configuration `q_r_goal`.
pub fn plan_free(
    ctx: &PlanContext<'_>,
    start: &CoupledState,
    q_r_goal: &DVector<f64>,
    seed: u64,
) -> Result<(Trajectory, PlanStats), PlanError> {
    if start.q_r == *q_r_goal {
        return plan_along(ctx, std::slice::from_ref(start), seed);
    }
    let nominal = nominal_free(start, q_r_goal, ctx.params.waypoints);
    plan_along(ctx, &nominal, seed)
}

/// Index of the first waypoint violating range, consistency or clearance.
pub fn check_invariants(ctx: &PlanContext<'_>, traj: &Trajectory) -> Result<(), usize> {
    for (i, s) in traj.waypoints.iter().enumerate() {
        if !ctx.coupling.limb_in_range(s.q_h.as_slice())
            || !ctx.coupling.is_consistent(s)
            || ctx.check(s).clearance <= ctx.collision.csdf.rho
        {
            return Err(i);
        }
    }
    Ok(())
}

/// One exported waypoint record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaypointRecord {
    pub t: f64,
    pub q_r: Vec<f64>,
    pub q_h: Vec<f64>,
    pub clearance: f64,
    pub residual: [f64; 2],
}

pub fn records(ctx: &PlanContext<'_>, traj: &Trajectory) -> Vec<WaypointRecord> {
    traj.waypoints
        .iter()
        .zip(&traj.timestamps)
        .map(|(s, &t)| {
            let residual = match ctx.coupling {
                Coupling::Coupled(sys) => {
                    let (p, r) = sys.residual(s);
                    [p, r]
                }
                Coupling::Free { .. } => [0.0, 0.0],
            };
            WaypointRecord {
                t,
                q_r: s.q_r.iter().copied().collect(),
                q_h: s.q_h.iter().copied().collect(),
                clearance: ctx.check(s).clearance,
                residual,
            }
        })
        .collect()
}
