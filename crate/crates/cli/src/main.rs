use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use armshift::coupling::CoupledState;
use armshift::harness::{
    compute_grasps, replay_traces, run_bathing_campaign, run_bathing_trial, run_campaign,
    run_manipulation_trial, summary_table, write_bathing, BathingContext, Scenario, TrialContext,
};
use armshift::kinematics::AgeGroup;
use armshift::par;
use armshift::planner::{plan, records};
use armshift::scene::Posture;

/// Worker threads for data-parallel sections.
const WORKERS_ENV: &str = "ARMSHIFT_WORKERS";

#[derive(Parser)]
#[command(
    name = "armshift",
    about = "Coupled human-arm repositioning and bed-bathing trials"
)]
struct Cli {
    /// Scenario file; defaults to configs/<posture>.toml.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; trial i uses seed + i.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for metrics files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// supine or sitting.
    #[arg(long, global = true)]
    posture: Option<Posture>,
    /// 20-39, 40-59, 60-79, 80+ or none.
    #[arg(long = "age-group", global = true)]
    age_group: Option<AgeGroup>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the scored, reachable grasps for the scenario.
    Grasp,
    /// Plan between two limb configurations.
    Plan {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        from: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        to: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        grasp: usize,
    },
    /// Run one manipulation trial.
    Trial {
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Run one bathing episode.
    Bathe {
        #[arg(long, default_value_t = 0)]
        episode: usize,
        /// Override the number of reposition rounds.
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Run a seeded campaign and write its metrics files.
    Campaign {
        /// Run bathing episodes instead of manipulation trials.
        #[arg(long)]
        bathing: bool,
    },
    /// Re-validate an exported trace file against the scenario.
    Replay { traces: PathBuf },
}

fn load(cli: &Cli) -> Result<Scenario> {
    let path = match (&cli.config, cli.posture) {
        (Some(p), _) => p.clone(),
        (None, Some(posture)) => Path::new("configs").join(format!("{posture}.toml")),
        (None, None) => bail!("pass --config <file> or --posture supine|sitting"),
    };
    let mut sc = Scenario::load(&path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(p) = cli.posture {
        if p != sc.posture {
            bail!(
                "--posture {p} conflicts with the scenario's posture {}",
                sc.posture
            );
        }
    }
    if let Some(g) = cli.age_group {
        sc.set_age_group(g)?;
    }
    if let Some(s) = cli.seed {
        sc.seed = s;
    }
    if let Some(n) = cli.trials {
        if n == 0 {
            bail!("--trials must be at least 1");
        }
        sc.n_trials = n;
    }
    Ok(sc)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let sc = load(&cli)?;
    match &cli.command {
        Command::Grasp => {
            let grasps = compute_grasps(&sc, sc.n_grasps)?;
            for g in &grasps {
                print_json(&serde_json::json!({
                    "segment": g.grasp.segment,
                    "score": g.grasp.score,
                    "d": g.grasp.d,
                    "r": g.grasp.r,
                    "width": g.grasp.width(),
                    "eef_pose": g.grasp.eef_pose,
                    "q_grasp": g.q_grasp.as_slice(),
                    "q_pre": g.q_pre.as_slice(),
                }))?;
            }
        }
        Command::Plan { from, to, grasp } => {
            let tc = TrialContext::new(&sc)?;
            if *grasp >= tc.grasps.len() {
                bail!(
                    "grasp index {grasp} out of range ({} grasps)",
                    tc.grasps.len()
                );
            }
            let (from, to) = (
                nalgebra::DVector::from_column_slice(from),
                nalgebra::DVector::from_column_slice(to),
            );
            if from.len() != sc.limb.dof() || to.len() != sc.limb.dof() {
                bail!(
                    "--from and --to need {} comma-separated values",
                    sc.limb.dof()
                );
            }
            let start: CoupledState = tc
                .hold(&sc, *grasp, &from, sc.csdf.rho)
                .context("the start configuration cannot be held collision-free")?;
            let ctx = tc.plan_context(&sc, *grasp);
            let (traj, stats) = plan(&ctx, &start, &to, sc.seed)?;
            eprintln!(
                "planned {} waypoints in {:.3} s",
                traj.len(),
                stats.wall_seconds
            );
            for r in records(&ctx, &traj) {
                println!("{}", serde_json::to_string(&r)?);
            }
        }
        Command::Trial { index } => {
            let tc = TrialContext::new(&sc)?;
            let o = run_manipulation_trial(&sc, &tc, *index)?;
            print_json(&o.record)?;
            eprintln!(
                "plan {:.3} s, total {:.3} s",
                o.timing.plan_time, o.timing.total_time
            );
        }
        Command::Bathe {
            episode,
            iterations,
        } => {
            let bc = BathingContext::new(&sc)?;
            let e = run_bathing_trial(
                &sc,
                &bc,
                *episode,
                iterations.unwrap_or(sc.bathing.max_iterations),
            )?;
            if let Some(dir) = &cli.out {
                write_bathing(dir, std::slice::from_ref(&e))?;
            }
            print_json(&e)?;
        }
        Command::Campaign { bathing: true } => {
            let eps = run_bathing_campaign(&sc, cli.out.as_deref())?;
            let n = eps.len() as f64;
            println!(
                "{}: static coverage {:.3}, coverage {:.3} over {} episodes",
                sc.name,
                eps.iter().map(|e| e.static_coverage).sum::<f64>() / n,
                eps.iter().map(|e| e.coverage).sum::<f64>() / n,
                eps.len()
            );
        }
        Command::Campaign { bathing: false } => {
            let c = run_campaign(&sc, cli.out.as_deref())?;
            print!("{}", summary_table(std::slice::from_ref(&c.summary)));
        }
        Command::Replay { traces } => {
            let reports = replay_traces(&sc, traces)?;
            let bad: Vec<_> = reports
                .iter()
                .filter(|r| r.violation.is_some() || r.executed_out_of_range.is_some())
                .collect();
            println!(
                "{} trajectories replayed, {} with violations",
                reports.len(),
                bad.len()
            );
            for r in &bad {
                println!(
                    "trial {}: {:?} {:?}",
                    r.trial, r.violation, r.executed_out_of_range
                );
            }
            if !bad.is_empty() {
                bail!("invariant violations found");
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let workers = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(
            v.parse::<usize>()
                .with_context(|| format!("{WORKERS_ENV}={v} is not a count"))?,
        ),
        Err(_) => None,
    };
    par::with_workers(workers, || run(cli))
}
