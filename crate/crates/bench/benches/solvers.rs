use criterion::{black_box, criterion_group, criterion_main, Criterion};
use tpcool::benchmarks::{self, LayerCase};
use tpcool::coupling::{run_staggered, CoupledModel};
use tpcool::mfv;
use tpcool::scenario::{Preset, ScenarioConfig};
use tpcool::{StabilizationKind, StructuredGrid2D};

fn mfv_2d(c: &mut Criterion) {
    let grid = StructuredGrid2D::uniform(64, 64, 1.0, 1.0).unwrap();
    let p = benchmarks::manufactured_problem(&grid, 1e-2);
    c.bench_function("mfv assemble sg 64x64", |b| {
        b.iter(|| mfv::assemble(black_box(&p), &grid, StabilizationKind::ScharfetterGummel).unwrap())
    });
    c.bench_function("mfv solve sg 64x64", |b| {
        b.iter(|| mfv::solve_problem(black_box(&p), &grid, StabilizationKind::ScharfetterGummel, 1e-10).unwrap())
    });
    c.bench_function("interior layer 64x64", |b| {
        b.iter(|| benchmarks::layers_2d(LayerCase::Interior, 64, 1e-6, StabilizationKind::ScharfetterGummel, 1e-12).unwrap())
    });
}

fn network(c: &mut Criterion) {
    let hs = [1.0 / 1024.0];
    c.bench_function("tree network h=2^-10", |b| {
        b.iter(|| benchmarks::network_test(black_box(1.0), &hs, 1e-13).unwrap())
    });
}

fn coupled(c: &mut Criterion) {
    let model = CoupledModel::new(&ScenarioConfig::reference(Preset::DeviceA)).unwrap();
    let mut g = c.benchmark_group("coupled");
    g.sample_size(10);
    g.bench_function("deviceA staggered run", |b| b.iter(|| run_staggered(black_box(&model)).unwrap()));
    g.finish();
}

criterion_group!(benches, mfv_2d, network, coupled);
criterion_main!(benches);
