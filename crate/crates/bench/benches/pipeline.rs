use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use radhars_core::assignment::solve_assignment;
use radhars_core::echo::{synth_cube, PathModel, ScattererTrack};
use radhars_core::maps::{extract_ridges, make_dtm, mti_profiles, range_profiles};
use radhars_core::{ScenarioKind, SimConfig};

const PULSES: usize = 2048;

/// Fourteen scatterers swinging in front of the radar.
fn tracks(cfg: &SimConfig) -> Vec<ScattererTrack> {
    let dt = 1.0 / cfg.radar.prf_hz;
    (0..14)
        .map(|j| ScattererTrack {
            positions: (0..PULSES)
                .map(|p| {
                    let t = p as f64 * dt;
                    let ph = 2.0 * std::f64::consts::PI * 1.8 * t + j as f64;
                    [0.1 * j as f64 - 0.7, 3.0 + 0.3 * ph.sin(), 0.1 * j as f64]
                })
                .collect(),
            reflectivity: 0.5,
        })
        .collect()
}

/// Default config for `kind`, with the scatterers moved behind the wall for
/// the through-wall scenario.
fn setup(kind: ScenarioKind) -> (SimConfig, Vec<ScattererTrack>) {
    let mut cfg = SimConfig::defaults(kind);
    cfg.radar.seed = 1;
    let mut tr = tracks(&cfg);
    if kind == ScenarioKind::ThroughWall {
        tr.iter_mut().for_each(|s| s.positions.iter_mut().for_each(|p| p[1] += 2.0));
    }
    (cfg, tr)
}

fn echo(c: &mut Criterion) {
    let mut g = c.benchmark_group("synth_cube");
    g.sample_size(10);
    for kind in [ScenarioKind::FreeSpace, ScenarioKind::ThroughWall] {
        let (cfg, tr) = setup(kind);
        let model = PathModel::new(&cfg).unwrap();
        g.bench_function(BenchmarkId::from_parameter(kind.to_string()), |b| {
            b.iter(|| synth_cube(black_box(&tr), &model, 0.0).unwrap())
        });
    }
    g.finish();
}

fn maps(c: &mut Criterion) {
    let (cfg, tr) = setup(ScenarioKind::FreeSpace);
    let cube = synth_cube(&tr, &PathModel::new(&cfg).unwrap(), 0.0).unwrap();
    let prof = range_profiles(&cube, &cfg.radar);
    let mti = mti_profiles(&prof).unwrap();
    let dtm = make_dtm(&mti, &cfg.proc).unwrap();
    let mut g = c.benchmark_group("maps");
    g.sample_size(20);
    g.bench_function("range_profiles", |b| b.iter(|| range_profiles(black_box(&cube), &cfg.radar)));
    g.bench_function("mti", |b| b.iter(|| mti_profiles(black_box(&prof)).unwrap()));
    g.bench_function("make_dtm", |b| b.iter(|| make_dtm(black_box(&mti), &cfg.proc).unwrap()));
    g.bench_function("extract_ridges", |b| b.iter(|| extract_ridges(black_box(&dtm), 3, 5).unwrap()));
    g.finish();
}

fn assignment(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut g = c.benchmark_group("solve_assignment");
    for n in [8usize, 32, 128] {
        let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &cost, |b, m| b.iter(|| solve_assignment(black_box(m))));
    }
    g.finish();
}

criterion_group!(benches, echo, maps, assignment);
criterion_main!(benches);
