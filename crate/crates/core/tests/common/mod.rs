//! Property checks shared by the `properties` and `acceptance` targets.
//! Each check returns a one-line summary on success and the first
//! counterexample on failure.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use nalgebra::{DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use armshift::bathing::{generate_targets, median_split};
use armshift::config::default_robot_chain;
use armshift::coupling::CoupledState;
use armshift::geometry::{rotation_vector, Pose};
use armshift::grasp::{check_force_closure, is_antipodal, sample_antipodal, GraspParams};
use armshift::harness::{
    read_trials_csv, run_campaign, run_manipulation_trial, Scenario, TrialContext, TIMING_FILE,
};
use armshift::kinematics::{default_limb_chain, ChainSpec, IkParams};
use armshift::planner::check_invariants;
use armshift::scene::{sample_limb_surface, Segment, Shape, SurfacePoint, SurfacePointCloud};

pub type Check = Result<String, String>;

pub fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

pub fn scenario(name: &str) -> Scenario {
    Scenario::load(&config(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn chains() -> Vec<ChainSpec> {
    let supine = scenario("supine.toml");
    vec![
        default_robot_chain(Pose::identity()),
        supine.robot.clone(),
        default_limb_chain(Pose::identity()),
        supine.limb.clone(),
    ]
}

/// IK seeded at a sampled configuration reaches the end pose of a small
/// perturbation of it.
pub fn ik_round_trip(n: usize) -> Check {
    let chains = chains();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let params = IkParams::default();
    let mut worst = (0.0f64, 0.0f64);
    for i in 0..n {
        let chain = &chains[i % chains.len()];
        let q = chain.sample_uniform(&mut rng);
        let moved = chain.clamp_to_limits(q.map(|v| v + noise.sample(&mut rng)).as_slice());
        let target = chain.end_pose(moved.as_slice());
        let sol = chain
            .inverse_kinematics(&target, q.as_slice(), &params)
            .map_err(|e| format!("{} q={:?}: {e}", chain.name, q.as_slice()))?;
        let (p, r) = chain.end_pose(sol.q.as_slice()).distance(&target);
        if p > 1e-3 || r > 1e-2 {
            return Err(format!(
                "{} q={:?}: residual {p:.2e} m {r:.2e} rad",
                chain.name,
                q.as_slice()
            ));
        }
        worst = (worst.0.max(p), worst.1.max(r));
    }
    Ok(format!(
        "{n} round trips, worst {:.1e} m / {:.1e} rad",
        worst.0, worst.1
    ))
}

/// Perturbed held states pushed through the handshake stay consistent and
/// in range whenever the handshake succeeds.
pub fn handshake_contract(n: usize) -> Check {
    let sc = scenario("supine.toml");
    let tc = TrialContext::new(&sc).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut held: Vec<(usize, CoupledState)> = Vec::new();
    while held.len() < 50 {
        let g = held.len() % tc.grasps.len();
        let q_h = sc.limb.sample_uniform(&mut rng);
        if let Some(s) = tc.hold(&sc, g, &q_h, 0.0) {
            held.push((g, s));
        }
    }
    let mut ok = 0;
    for i in 0..n {
        let (g, s) = &held[i % held.len()];
        let sys = tc.system(*g);
        let q_r = s.q_r.map(|v| v + noise.sample(&mut rng));
        let Ok(h) = sys.handshake(q_r.as_slice(), s.q_h.as_slice()) else {
            continue;
        };
        ok += 1;
        let (p, r) = sys.residual(&h.state);
        if p > 1e-3 || r > 1e-2 {
            return Err(format!("probe {i}: residual {p:.2e} m {r:.2e} rad"));
        }
        if !sys.limb.within_limits(h.state.q_h.as_slice()) {
            return Err(format!(
                "probe {i}: q_h {:?} out of range",
                h.state.q_h.as_slice()
            ));
        }
    }
    if ok < n / 2 {
        return Err(format!("only {ok}/{n} handshakes succeeded"));
    }
    Ok(format!(
        "{ok}/{n} handshakes succeeded, all consistent and in range"
    ))
}

fn fd_jacobian(chain: &ChainSpec, q: &DVector<f64>, h: f64) -> nalgebra::DMatrix<f64> {
    let mut out = nalgebra::DMatrix::zeros(6, chain.dof());
    for j in 0..chain.dof() {
        let (mut a, mut b) = (q.clone(), q.clone());
        a[j] += h;
        b[j] -= h;
        let (pa, pb) = (chain.end_pose(a.as_slice()), chain.end_pose(b.as_slice()));
        let lin = (pa.translation - pb.translation) / (2.0 * h);
        let ang = rotation_vector(&(pa.rotation * pb.rotation.transpose())) / (2.0 * h);
        out.fixed_view_mut::<3, 1>(0, j).copy_from(&lin);
        out.fixed_view_mut::<3, 1>(3, j).copy_from(&ang);
    }
    out
}

/// True when `p` sits within `eps` of a place where the nearest feature of
/// the primitive changes.
fn near_medial(shape: &Shape, local: &Vector3<f64>, eps: f64) -> bool {
    match *shape {
        Shape::Sphere { .. } => local.norm() < eps,
        Shape::Capsule { length, .. } => {
            let h = 0.5 * length;
            let c = Vector3::new(local.x.clamp(-h, h), 0.0, 0.0);
            (local - c).norm() < eps
        }
        Shape::Box { half_extents } => {
            let inside = (0..3).all(|i| local[i].abs() < half_extents[i]);
            let mut gaps: Vec<f64> = (0..3).map(|i| half_extents[i] - local[i].abs()).collect();
            gaps.sort_by(f64::total_cmp);
            (0..3).any(|i| local[i].abs() < eps) && inside || inside && gaps[1] - gaps[0] < eps
        }
    }
}

/// Analytic Jacobians and scene SDF gradients against central differences.
pub fn finite_differences(n: usize) -> Check {
    let chains = chains();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst_j = 0.0f64;
    for i in 0..n {
        let chain = &chains[i % chains.len()];
        let q = chain.sample_uniform(&mut rng);
        let err = (chain.jacobian(q.as_slice()) - fd_jacobian(chain, &q, 1e-6))
            .abs()
            .max();
        if err > 1e-5 {
            return Err(format!(
                "{} q={:?}: Jacobian error {err:.2e}",
                chain.name,
                q.as_slice()
            ));
        }
        worst_j = worst_j.max(err);
    }

    let sc = scenario("supine.toml");
    let scene = sc.scene.posed(&sc.limb, sc.rest_q_h.as_slice());
    let obstacles = scene.obstacles(&[]);
    let (h, eps) = (1e-6, 1e-3);
    let (mut probes, mut worst_g) = (0, 0.0f64);
    while probes < n {
        let p = Vector3::new(
            rng.random_range(-1.2..1.2),
            rng.random_range(-0.8..0.8),
            rng.random_range(0.0..1.3),
        );
        let mut d: Vec<(f64, usize)> = scene
            .primitives
            .iter()
            .enumerate()
            .map(|(k, prim)| (prim.sdf(&p).0, k))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        if d.len() > 1 && d[1].0 - d[0].0 < eps {
            continue;
        }
        let prim = &scene.primitives[d[0].1];
        if near_medial(&prim.shape, &prim.pose.inverse().transform_point(&p), eps) {
            continue;
        }
        probes += 1;
        let sample = obstacles.query(&p);
        let fd = Vector3::from_fn(|k, _| {
            let mut e = Vector3::zeros();
            e[k] = h;
            (obstacles.distance(&(p + e)) - obstacles.distance(&(p - e))) / (2.0 * h)
        });
        let err = (sample.gradient - fd).amax();
        if err > 1e-4 {
            return Err(format!(
                "p={:?} near {}: gradient error {err:.2e}",
                p.as_slice(),
                prim.tag
            ));
        }
        worst_g = worst_g.max(err);
    }
    Ok(format!(
        "{n} Jacobian probes (worst {worst_j:.1e}), {n} SDF probes (worst {worst_g:.1e})"
    ))
}

/// Coulomb law: the contact force along the line splits into a normal part
/// pushing into the surface and a tangential part at most mu times it.
fn coulomb_admits(at: &SurfacePoint, force: &Vector3<f64>, mu: f64) -> bool {
    let inward = -at.normal;
    let f_n = force.dot(&inward);
    let f_t = (force - inward * f_n).norm();
    f_n > 0.0 && f_t <= mu * f_n
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let n = Normal::new(0.0, 1.0).unwrap();
    Vector3::from_fn(|_, _| n.sample(rng)).normalize()
}

pub fn force_closure(n: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut closed = 0;
    let mut i = 0;
    while i < n {
        let mu: f64 = rng.random_range(0.1..1.0);
        let a_pos = Vector3::from_fn(|_, _| rng.random_range(-0.05..0.05));
        let line = random_unit(&mut rng) * rng.random_range(0.01..0.1);
        // normals near the antipodal configuration so both outcomes occur
        let tilt = |rng: &mut ChaCha8Rng, v: Vector3<f64>| {
            (v + random_unit(rng) * rng.random_range(0.0..1.2)).normalize()
        };
        let a = SurfacePoint {
            position: a_pos,
            normal: tilt(&mut rng, -line.normalize()),
            segment: Segment::Forearm,
        };
        let b = SurfacePoint {
            position: a_pos + line,
            normal: tilt(&mut rng, line.normalize()),
            segment: Segment::Forearm,
        };
        // skip pairs within rounding of a cone boundary
        let margin = |p: &SurfacePoint, f: Vector3<f64>| {
            let c = f.normalize().dot(&-p.normal).clamp(-1.0, 1.0).acos();
            (c - mu.atan()).abs()
        };
        if margin(&a, line) < 1e-9 || margin(&b, -line) < 1e-9 {
            continue;
        }
        let oracle = coulomb_admits(&a, &line, mu) && coulomb_admits(&b, &-line, mu);
        if check_force_closure(&a, &b, mu) != oracle {
            return Err(format!("pair {i}: mu {mu}, oracle {oracle}"));
        }
        closed += oracle as usize;
        i += 1;
    }
    Ok(format!(
        "{n} pairs agree with the cone oracle ({closed} in closure)"
    ))
}

fn pair_key(a: &SurfacePoint, b: &SurfacePoint) -> [u64; 6] {
    let (a, b) = if a.position.as_slice() <= b.position.as_slice() {
        (a, b)
    } else {
        (b, a)
    };
    let k = |v: f64| v.to_bits();
    [
        k(a.position.x),
        k(a.position.y),
        k(a.position.z),
        k(b.position.x),
        k(b.position.y),
        k(b.position.z),
    ]
}

/// Sampler output on a 200-point limb cloud equals the all-pairs filter.
pub fn antipodal_exhaustive(clouds: usize) -> Check {
    let sc = scenario("supine.toml");
    let params = GraspParams {
        segments: vec![Segment::UpperArm, Segment::Forearm],
        ..GraspParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut total = 0;
    for c in 0..clouds {
        let q = sc.limb.sample_uniform(&mut rng);
        let mut cloud: SurfacePointCloud =
            sample_limb_surface(&sc.limb, &sc.scene, q.as_slice(), 110, c as u64);
        if cloud.points.len() < 200 {
            return Err(format!("cloud {c} has only {} points", cloud.points.len()));
        }
        cloud.points.truncate(200);
        let sampled: BTreeSet<_> = sample_antipodal(&cloud, &params, c as u64)
            .iter()
            .map(|g| pair_key(&g.contact_a, &g.contact_b))
            .collect();
        let pts = &cloud.points;
        let mut exhaustive = BTreeSet::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if is_antipodal(&pts[i], &pts[j], &params) {
                    exhaustive.insert(pair_key(&pts[i], &pts[j]));
                }
            }
        }
        if sampled != exhaustive {
            return Err(format!(
                "cloud {c}: sampler {} pairs, exhaustive {}",
                sampled.len(),
                exhaustive.len()
            ));
        }
        total += exhaustive.len();
    }
    Ok(format!("{clouds} clouds, {total} antipodal pairs matched"))
}

/// Median split of the axis projections of random target sets.
pub fn median_split_sizes(n: usize) -> Check {
    let sc = scenario("supine.toml");
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for i in 0..n {
        let q = sc.limb.sample_uniform(&mut rng);
        let rows = rng.random_range(1..6);
        let per_row = rng.random_range(1..10);
        let front = random_unit(&mut rng);
        let set = generate_targets(&sc.limb, &sc.scene, q.as_slice(), rows, per_row, front);
        let keep: Vec<usize> = (0..set.len()).filter(|_| rng.random_bool(0.8)).collect();
        if keep.is_empty() {
            continue;
        }
        let alpha: Vec<f64> = keep
            .iter()
            .map(|&k| set.axis.dot(&set.targets[k].position))
            .collect();
        let (f, b) = median_split(&alpha);
        let distinct = alpha
            .iter()
            .map(|a| a.to_bits())
            .collect::<BTreeSet<_>>()
            .len()
            == alpha.len();
        if f.len() + b.len() != alpha.len() {
            return Err(format!("set {i}: split loses targets"));
        }
        if distinct && f.len() != b.len() + alpha.len() % 2 {
            return Err(format!(
                "set {i}: {} front, {} back of {}",
                f.len(),
                b.len(),
                alpha.len()
            ));
        }
        let min_front = f.iter().map(|&k| alpha[k]).fold(f64::INFINITY, f64::min);
        if b.iter().any(|&k| alpha[k] >= min_front) {
            return Err(format!(
                "set {i}: back target at or above the front minimum"
            ));
        }
    }
    Ok(format!("{n} target sets split correctly"))
}

/// Every trajectory the planner returns in a short campaign satisfies the
/// range, consistency and clearance invariants at every waypoint.
pub fn planner_invariants(trials: usize) -> Check {
    let mut checked = 0;
    for name in ["supine.toml", "sitting.toml"] {
        let sc = scenario(name);
        let tc = TrialContext::new(&sc).map_err(|e| e.to_string())?;
        for i in 0..trials {
            let o = run_manipulation_trial(&sc, &tc, i).map_err(|e| e.to_string())?;
            let Some(traj) = o.planned else { continue };
            let ctx = tc.plan_context(&sc, o.record.grasp);
            check_invariants(&ctx, &traj)
                .map_err(|w| format!("{name} trial {i}: waypoint {w} violates an invariant"))?;
            checked += 1;
        }
    }
    if checked == 0 {
        return Err("no trajectory was planned".into());
    }
    Ok(format!(
        "{checked} trajectories checked waypoint by waypoint"
    ))
}

/// Two campaigns with the same scenario and seed write identical metrics.
pub fn determinism(trials: usize) -> Check {
    let mut sc = scenario("supine.toml");
    sc.n_trials = trials;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        run_campaign(&sc, Some(d.path())).map_err(|e| e.to_string())?;
    }
    let mut files = 0;
    for entry in std::fs::read_dir(dirs[0].path()).unwrap() {
        let name = entry.unwrap().file_name();
        if name == TIMING_FILE {
            continue;
        }
        let a = std::fs::read(dirs[0].path().join(&name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(&name)).map_err(|e| format!("{name:?}: {e}"))?;
        if a != b {
            return Err(format!("{name:?} differs between runs"));
        }
        files += 1;
    }
    read_trials_csv(&dirs[0].path().join(armshift::harness::TRIALS_FILE))
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{files} metrics files byte-identical over {trials} trials"
    ))
}
