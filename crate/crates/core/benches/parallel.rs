//! Parallel-versus-sequential throughput for the two replication-heavy
//! kernels: field synthesis plus chaos projection, and Rosenblatt sampling.
//!
//! The `parallel` feature (on by default) routes batch work through a rayon
//! pool; with `--no-default-features` the same entry points run
//! sequentially, so one binary benchmarks whichever mode it was built with
//! and the worker count can additionally be pinned per benchmark.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use excursor::excursion::chaos_projection_set;
use excursor::model::two_multipole_model;
use excursor::par::map_indexed;
use excursor::rosenblatt::{sample_rosenblatt, RosenblattParams};
use excursor::simulate::{FieldSimulator, TimeGrid};
use excursor::special::SphereQuadrature;

const REPLICATES: usize = 64;
const SAMPLES: usize = 2048;

fn thread_grid() -> Vec<Option<usize>> {
    if cfg!(feature = "parallel") {
        vec![Some(1), Some(2), Some(4), None]
    } else {
        vec![None]
    }
}

fn label(threads: Option<usize>) -> String {
    match threads {
        Some(n) => format!("threads-{n}"),
        None => "threads-default".into(),
    }
}

fn bench_replication_batch(c: &mut Criterion) {
    let model = two_multipole_model(0.3, None, 1, 0.8, 0.5).unwrap();
    let sphere = SphereQuadrature::with_exactness(8);
    let grid = TimeGrid::new(32.0, 128).unwrap();
    let sim = FieldSimulator::new(&model, &sphere, grid.clone()).unwrap();

    let mut group = c.benchmark_group("replication_batch");
    group.throughput(Throughput::Elements(REPLICATES as u64));
    group.sample_size(10);
    for threads in thread_grid() {
        group.bench_with_input(
            BenchmarkId::from_parameter(label(threads)),
            &threads,
            |b, &threads| {
                b.iter(|| {
                    map_indexed(REPLICATES, threads, |r| {
                        let field = sim.replicate(7, r as u64);
                        chaos_projection_set(&field, &sphere, &grid, 1.0, 3)
                            .unwrap()
                            .per_q
                            .iter()
                            .sum::<f64>()
                    })
                })
            },
        );
    }
    group.finish();
}

fn bench_rosenblatt_batch(c: &mut Criterion) {
    let params = RosenblattParams::new(0.3).unwrap().with_n_terms(4096);

    let mut group = c.benchmark_group("rosenblatt_batch");
    group.throughput(Throughput::Elements(SAMPLES as u64));
    group.sample_size(10);
    for threads in thread_grid() {
        group.bench_with_input(
            BenchmarkId::from_parameter(label(threads)),
            &threads,
            |b, &threads| b.iter(|| sample_rosenblatt(&params, SAMPLES, 11, threads).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_replication_batch, bench_rosenblatt_batch);
criterion_main!(benches);
