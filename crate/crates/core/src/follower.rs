//! Vector-field tracking of a planned trajectory with obstacle repulsion,
//! handshake projection at every tick and a revert-on-failure safeguard.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::coupling::CoupledState;
use crate::csdf::repulsion_gradient;
use crate::planner::{Coupling, PlanContext, Trajectory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FollowerParams {
    pub step_size: f64,
    pub attraction_gain: f64,
    pub repulsion_gain: f64,
    pub goal_tol: f64,
    pub lookahead: usize,
    /// Virtual tick length (s).
    pub tick_s: f64,
    /// Distance at which a waypoint counts as passed.
    pub waypoint_tol: f64,
    pub stall_replan: usize,
    pub deviation_replan: f64,
    /// Replan when clearance falls below this multiple of rho.
    pub clearance_replan: f64,
    pub max_replans: usize,
    /// Replan when the distance to the goal has not shrunk by a step for
    /// this many ticks (0 disables). The fresh plan is then tracked without
    /// repulsion for the same number of ticks.
    pub progress_window: usize,
    /// Ticks to wait after a replan before another may be requested.
    pub replan_cooldown: usize,
}

impl Default for FollowerParams {
    fn default() -> Self {
        Self {
            step_size: 0.02,
            attraction_gain: 1.0,
            repulsion_gain: 2.0,
            goal_tol: 0.05,
            lookahead: 2,
            tick_s: 0.02,
            waypoint_tol: 0.05,
            stall_replan: 10,
            deviation_replan: 0.2,
            clearance_replan: 1.5,
            max_replans: 5,
            progress_window: 50,
            replan_cooldown: 25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct ExecutionResult {
    pub success: bool,
    pub ticks: usize,
    /// Simulated execution time (s).
    pub total_time: f64,
    /// Path length of the contact point (m).
    pub moved_distance: f64,
    /// Per limb joint, largest exceedance of the pre-clamp limb solution.
    pub out_of_range: Vec<f64>,
    pub trace: Vec<CoupledState>,
    pub stalls: usize,
    pub replans: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplanReason {
    Stall,
    Deviation,
    Clearance,
}

/// Field direction step. Without repulsion the step is the straight line to
/// the target, shortened so it never overshoots.
pub fn field_step(
    q_r: &DVector<f64>,
    target: &DVector<f64>,
    repulsion: &DVector<f64>,
    params: &FollowerParams,
) -> DVector<f64> {
    let to_target = target - q_r;
    let dir = &to_target * params.attraction_gain + repulsion * params.repulsion_gain;
    let n = dir.norm();
    if n < 1e-12 {
        return q_r.clone();
    }
    let step = if params.repulsion_gain * repulsion.norm() == 0.0 {
        params.step_size.min(to_target.norm())
    } else {
        params.step_size
    };
    q_r + dir * (step / n)
}

pub fn repulsion_at(ctx: &PlanContext<'_>, state: &CoupledState) -> DVector<f64> {
    let robot = ctx.coupling.robot();
    let posed;
    let scene = match ctx.coupling.limb() {
        Some(limb) => {
            posed = ctx.scene.posed(limb, state.q_h.as_slice());
            &posed
        }
        None => ctx.scene,
    };
    let exclude: Vec<&str> = ctx
        .collision
        .robot_exclude
        .iter()
        .map(String::as_str)
        .collect();
    repulsion_gradient(
        &ctx.collision.robot_controls,
        robot,
        state.q_r.as_slice(),
        &scene.obstacles(&exclude),
        &ctx.collision.csdf,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Advanced {
        state: CoupledState,
        q_h_raw: DVector<f64>,
    },
    /// Handshake failed or the result collided; the robot holds still.
    Reverted { q_h_raw: Option<DVector<f64>> },
}

/// Field step projected through the coupling; reverts on failure.
pub fn safeguarded_step(
    ctx: &PlanContext<'_>,
    state: &CoupledState,
    target: &DVector<f64>,
    params: &FollowerParams,
) -> StepOutcome {
    let repulsion = if params.repulsion_gain > 0.0 {
        repulsion_at(ctx, state)
    } else {
        DVector::zeros(state.q_r.len())
    };
    let candidate = field_step(&state.q_r, target, &repulsion, params);
    let Some(p) = ctx.coupling.project(candidate.as_slice(), state) else {
        return StepOutcome::Reverted { q_h_raw: None };
    };
    if ctx.check(&p.state).clearance <= ctx.collision.csdf.rho {
        return StepOutcome::Reverted {
            q_h_raw: Some(p.q_h_raw),
        };
    }
    StepOutcome::Advanced {
        state: p.state,
        q_h_raw: p.q_h_raw,
    }
}

fn contact_point(coupling: &Coupling, state: &CoupledState) -> nalgebra::Vector3<f64> {
    match coupling {
        Coupling::Coupled(sys) => sys.robot_contact(state.q_r.as_slice()).translation,
        Coupling::Free { robot, .. } => robot.end_pose(state.q_r.as_slice()).translation,
    }
}

fn nearest(traj: &Trajectory, q: &DVector<f64>, from: usize, to: usize) -> (usize, f64) {
    (from..to.min(traj.len()))
        .map(|i| (i, (&traj.waypoints[i].q_r - q).norm()))
        .fold(
            (from, f64::INFINITY),
            |best, c| if c.1 < best.1 { c } else { best },
        )
}

/// Tracks `traj` until the goal is within `goal_tol` or the simulated clock
/// passes `deadline_s`. `replan` is asked for a fresh trajectory from the
/// current state when a trigger fires.
pub fn execute(
    ctx: &PlanContext<'_>,
    traj: &Trajectory,
    params: &FollowerParams,
    deadline_s: f64,
    replan: &mut dyn FnMut(&CoupledState, ReplanReason) -> Option<Trajectory>,
) -> ExecutionResult {
    let limb_dof = traj.waypoints[0].q_h.len();
    let mut active = traj.clone();
    let mut state = active.waypoints[0].clone();
    let mut goal = active.last().q_r.clone();
    let mut result = ExecutionResult {
        out_of_range: vec![0.0; limb_dof],
        trace: vec![state.clone()],
        ..Default::default()
    };
    let limb = ctx.coupling.limb();
    let mut cursor = 0;
    let mut stall_run = 0;
    let mut since_replan = usize::MAX;
    let mut best_goal = f64::INFINITY;
    let mut since_progress = 0;
    let mut escape = 0;
    let pursuit = FollowerParams {
        repulsion_gain: 0.0,
        ..params.clone()
    };
    let rho = ctx.collision.csdf.rho;
    loop {
        if (&state.q_r - &goal).norm() <= params.goal_tol {
            result.success = true;
            break;
        }
        if (result.ticks + 1) as f64 * params.tick_s > deadline_s + 1e-9 {
            break;
        }
        let n = active.len();
        while cursor + 1 < n
            && (&active.waypoints[cursor + 1].q_r - &state.q_r).norm() <= params.waypoint_tol
        {
            cursor += 1;
        }
        let window = nearest(&active, &state.q_r, cursor, cursor + params.lookahead + 2);
        cursor = cursor.max(window.0);
        let target = active.waypoints[(cursor + params.lookahead).min(n - 1)]
            .q_r
            .clone();

        let outcome = if escape > 0 {
            escape -= 1;
            safeguarded_step(ctx, &state, &target, &pursuit)
        } else {
            safeguarded_step(ctx, &state, &target, params)
        };
        result.ticks += 1;
        since_replan = since_replan.saturating_add(1);
        let raw = match &outcome {
            StepOutcome::Advanced { q_h_raw, .. } => Some(q_h_raw),
            StepOutcome::Reverted { q_h_raw } => q_h_raw.as_ref(),
        };
        if let (Some(raw), Some(limb)) = (raw, limb) {
            for (m, e) in result
                .out_of_range
                .iter_mut()
                .zip(limb.exceedance(raw.as_slice()))
            {
                *m = m.max(e);
            }
        }
        match outcome {
            StepOutcome::Advanced { state: next, .. } => {
                let moved = (&next.q_r - &state.q_r).norm();
                result.moved_distance += (contact_point(ctx.coupling, &next)
                    - contact_point(ctx.coupling, &state))
                .norm();
                state = next;
                result.trace.push(state.clone());
                if moved < 0.1 * params.step_size && (&state.q_r - &target).norm() > params.goal_tol
                {
                    stall_run += 1;
                } else {
                    stall_run = 0;
                }
            }
            StepOutcome::Reverted { .. } => {
                result.stalls += 1;
                stall_run += 1;
            }
        }

        let to_goal = (&state.q_r - &goal).norm();
        if to_goal < best_goal - params.step_size {
            best_goal = to_goal;
            since_progress = 0;
        } else {
            since_progress += 1;
        }
        let stuck = params.progress_window > 0 && since_progress >= params.progress_window;
        let reason = if stall_run >= params.stall_replan || stuck {
            Some(ReplanReason::Stall)
        } else if nearest(&active, &state.q_r, 0, active.len()).1 > params.deviation_replan {
            Some(ReplanReason::Deviation)
        } else if ctx.check(&state).clearance < params.clearance_replan * rho {
            Some(ReplanReason::Clearance)
        } else {
            None
        };
        if let Some(reason) = reason {
            if result.replans < params.max_replans && since_replan >= params.replan_cooldown {
                result.replans += 1;
                since_replan = 0;
                stall_run = 0;
                since_progress = 0;
                best_goal = f64::INFINITY;
                if stuck {
                    escape = params.progress_window;
                }
                if let Some(fresh) = replan(&state, reason) {
                    goal = fresh.last().q_r.clone();
                    active = fresh;
                    cursor = 0;
                }
            }
        }
    }
    result.total_time = result.ticks as f64 * params.tick_s;
    result
}

/// Contact-point path length recomputed from a trace.
pub fn trace_distance(coupling: &Coupling, trace: &[CoupledState]) -> f64 {
    trace
        .windows(2)
        .map(|w| (contact_point(coupling, &w[1]) - contact_point(coupling, &w[0])).norm())
        .sum()
}
