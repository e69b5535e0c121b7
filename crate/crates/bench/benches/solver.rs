use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use treecoca_bench::bench_dataset;
use treecoca_core::delay_opt::{measured_star_scenario, optimal_h};
use treecoca_core::local_sdca::local_sdca;
use treecoca_core::model::{build_topology, partition_evenly, TopologySpec};
use treecoca_core::theory::rho_min;
use treecoca_core::tree_solver::run_root;

fn bench_local_sdca(c: &mut Criterion) {
    let ds = bench_dataset(100, 600);
    let block: Vec<usize> = (0..200).collect();
    let alpha = vec![0.0; 200];
    let w = vec![0.0; 100];
    let mut group = c.benchmark_group("local_sdca");
    for h in [100u32, 1000] {
        group.bench_with_input(BenchmarkId::from_parameter(h), &h, |b, &h| {
            b.iter(|| {
                let mut rng = ChaCha20Rng::seed_from_u64(7);
                local_sdca(&ds, &block, &alpha, &w, h, &mut rng).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_star_run(c: &mut Criterion) {
    let ds = bench_dataset(100, 600);
    let topo = build_topology(&TopologySpec::star(3, 100, 10, 4e-5, 3e-5, 0.0)).unwrap();
    let partition = partition_evenly(600, topo.leaves()).unwrap();
    c.bench_function("run_root_star3_h100_r10", |b| {
        b.iter(|| run_root(&topo, &ds, &partition, 10, 1).unwrap())
    });
}

fn bench_two_layer_run(c: &mut Criterion) {
    let ds = bench_dataset(100, 600);
    let spec = TopologySpec::two_layer(3, 3, 100, 10, 5, 4e-5, 3e-5, 4.0, 0.0);
    let topo = build_topology(&spec).unwrap();
    let partition = partition_evenly(600, topo.leaves()).unwrap();
    c.bench_function("run_root_tree3x3_t10_r5", |b| {
        b.iter(|| run_root(&topo, &ds, &partition, 5, 1).unwrap())
    });
}

fn bench_rho_min(c: &mut Criterion) {
    let mut group = c.benchmark_group("rho_min");
    for m in [60usize, 200] {
        let ds = bench_dataset(20, m);
        let blocks: Vec<Vec<usize>> = (0..4)
            .map(|k| (0..m).filter(|i| i % 4 == k).collect())
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| rho_min(&ds, &blocks).unwrap())
        });
    }
    group.finish();
}

fn bench_optimal_h(c: &mut Criterion) {
    let scenario = measured_star_scenario().with_delay_ratio(1e5).unwrap();
    c.bench_function("optimal_h_grid2000", |b| {
        b.iter(|| optimal_h(&scenario, 2000))
    });
}

criterion_group!(
    benches,
    bench_local_sdca,
    bench_star_run,
    bench_two_layer_run,
    bench_rho_min,
    bench_optimal_h
);
criterion_main!(benches);
