use criterion::{black_box, criterion_group, criterion_main, Criterion};
use thermoflow::coding::{build_partition, f_a_potential, SuspensionSystem, TrigFlowFunction, UOptions};
use thermoflow::realization::{realize, RealizeOptions};
use thermoflow::thermo::{pressure_partition_sum, transfer_spectral_pressure};
use thermoflow::volume::{analytic_pair, mollify, mollify_vector, poisson_correct, PoissonOptions};
use thermoflow::Potential;

fn pressure(c: &mut Criterion) {
    let sys = SuspensionSystem::cat_constant(1.0).unwrap();
    let a = build_partition(&sys.base, 0, sys.config.radii).unwrap().a;
    let g = Potential::from_fn(&a, 3, |w| 0.1 * (w[0] as f64 - w[2] as f64).sin()).unwrap();
    c.bench_function("spectral pressure, cat SFT, depth 3", |b| {
        b.iter(|| transfer_spectral_pressure(black_box(&a), black_box(&g)).unwrap())
    });
    c.bench_function("partition-sum pressure, cat SFT, m = 8", |b| {
        b.iter(|| pressure_partition_sum(black_box(&a), black_box(&g), 8).unwrap())
    });
}

fn coding(c: &mut Criterion) {
    let sys = SuspensionSystem::cat_constant(1.0).unwrap();
    let part = build_partition(&sys.base, 0, sys.config.radii).unwrap();
    let f = TrigFlowFunction::generic();
    let mut group = c.benchmark_group("coding");
    group.sample_size(10);
    group.bench_function("f_A potential, depth 6", |b| {
        b.iter(|| f_a_potential(&sys, &part, &f, 6, &UOptions::default()).unwrap())
    });
    let fam = realize(&sys, &part, &f, RealizeOptions { cells: 1 << 14, ..Default::default() }).unwrap();
    let p = sys.point_from_unit([0.3, 0.6, 0.2]);
    group.bench_function("leaf measure, 2^14 cells", |b| b.iter(|| fam.measure_at(black_box(p)).unwrap()));
    group.finish();
}

fn volume(c: &mut Criterion) {
    let (x0, h0) = analytic_pair(&[64, 64]).unwrap();
    let y = mollify_vector(&x0, 0.125).unwrap();
    let h = mollify(&h0, 0.125).unwrap();
    let mut group = c.benchmark_group("volume");
    group.sample_size(10);
    group.bench_function("mollify 64², bandwidth 1/8", |b| b.iter(|| mollify(black_box(&h0), 0.125).unwrap()));
    group.bench_function("Poisson correction 64²", |b| {
        b.iter(|| poisson_correct(black_box(&y), black_box(&h), PoissonOptions::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, pressure, coding, volume);
criterion_main!(benches);
