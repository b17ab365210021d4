use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use armshift::bathing::{generate_targets, next_config_random, BathingParams};
use armshift::harness::{BathingContext, Scenario, TrialContext};
use armshift::par::Mode;
use armshift::planner::plan;

const MODES: [(&str, Mode); 2] = [
    ("parallel", Mode::Parallel),
    ("sequential", Mode::Sequential),
];

fn load(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    Scenario::load(&path).expect("shipped scenario loads")
}

fn rollouts(c: &mut Criterion) {
    let mut sc = load("supine.toml");
    let tc = TrialContext::new(&sc).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let start = tc.sample_setup(&sc, 0, &mut rng).unwrap();
    let goal = tc.sample_setup(&sc, 0, &mut rng).unwrap();
    let mut group = c.benchmark_group("plan");
    group.sample_size(10);
    for (label, mode) in MODES {
        sc.set_mode(mode);
        let ctx = tc.plan_context(&sc, 0);
        group.bench_with_input(BenchmarkId::from_parameter(label), &mode, |b, _| {
            b.iter(|| black_box(plan(&ctx, &start, &goal.q_h, sc.seed).ok()))
        });
    }
    group.finish();
}

fn candidate_scoring(c: &mut Criterion) {
    let sc = load("bathing_supine.toml");
    let bc = BathingContext::new(&sc).unwrap();
    let world = &bc.worlds[0];
    let held = bc.manip.hold(&sc, 0, &sc.rest_q_h, sc.csdf.rho).unwrap();
    let set = generate_targets(
        &world.holder.limb,
        &sc.scene,
        held.q_h.as_slice(),
        sc.bathing.rows,
        sc.bathing.per_row,
        Vector3::from(sc.bathing.front_axis),
    );
    let params = BathingParams {
        n_candidates: 25,
        redraw_rounds: 1,
        ..sc.bathing.clone()
    };
    let mut group = c.benchmark_group("next_config");
    group.sample_size(10);
    for (label, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(label), &mode, |b, &mode| {
            b.iter(|| {
                black_box(
                    next_config_random(
                        world,
                        &held.q_h,
                        &set,
                        held.q_r.as_slice(),
                        &params,
                        sc.seed,
                        mode,
                        &mut |_, _| true,
                    )
                    .ok(),
                )
            })
        });
    }
    group.finish();
}

criterion_group!(benches, rollouts, candidate_scoring);
criterion_main!(benches);
