use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qlfr_core::channel::{self, ChannelParams};
use qlfr_core::world::{Position, Region, SpatialGrid};
use qlfr_core::{Protocol, ScenarioConfig};

fn channel_model(c: &mut Criterion) {
    let ch = ChannelParams::default();
    c.bench_function("packet_delivery_prob", |b| {
        b.iter(|| channel::packet_delivery_prob(black_box(120.0), &ch).unwrap())
    });
    c.bench_function("calibrate_energy_per_bit", |b| {
        b.iter(|| channel::calibrate_energy_per_bit(&ch, black_box(100.0), 0.9).unwrap())
    });
}

fn neighbour_grid(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts: Vec<Position> = (0..500)
        .map(|_| {
            Position::new(
                rng.random_range(0.0..500.0),
                rng.random_range(0.0..500.0),
                rng.random_range(0.0..500.0),
            )
        })
        .collect();
    c.bench_function("grid_build_500", |b| {
        b.iter(|| SpatialGrid::build(pts.iter().enumerate().map(|(i, p)| (i as u32, p)), 150.0))
    });
    let grid = SpatialGrid::build(pts.iter().enumerate().map(|(i, p)| (i as u32, p)), 150.0);
    c.bench_function("grid_query_500", |b| {
        b.iter(|| grid.within(black_box(&pts[17]), 150.0, Some(17)))
    });
}

fn small_run(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_n50_300s");
    g.sample_size(10);
    for protocol in [Protocol::Qlfr, Protocol::Dbr] {
        let mut cfg = ScenarioConfig {
            protocol,
            max_sim_time_s: 300.0,
            region: Region::cube(300.0),
            ..ScenarioConfig::default()
        };
        cfg.network.sensors = 50;
        g.bench_function(protocol.to_string(), |b| b.iter(|| qlfr_core::run(&cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, channel_model, neighbour_grid, small_run);
criterion_main!(benches);
