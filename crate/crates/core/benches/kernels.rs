//! Hot kernels on the default rayon pool against a single-thread pool.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pointgas::bounds::{random_instance, SandwichOptions};
use pointgas::freefermi::Boundary;
use pointgas::hardy::{min_rayleigh, HardyDomain, RayleighProblem};
use pointgas::par;
use pointgas::spectral2::{two_body_spectrum, Sector, TwoBodyBoxProblem};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![("pool", all), ("single", one)]
}

fn bench_kernels(c: &mut Criterion) {
    let pools = pools();
    eprintln!("parallel helpers: {} thread(s) on the global pool", par::threads());

    let mut g = c.benchmark_group("hardy_cube_res16");
    g.sample_size(10);
    let hp = RayleighProblem::scaled(HardyDomain::Cube { side: 1.0 }, [0.3, 0.4, 0.5], 16, 16.0, 144.0);
    for (name, pool) in &pools {
        g.bench_with_input(BenchmarkId::from_parameter(name), &hp, |b, hp| {
            b.iter(|| pool.install(|| min_rayleigh(hp).unwrap().lambda))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("twobody_s16");
    g.sample_size(10);
    let tp = TwoBodyBoxProblem::new(1.0, 2, 16, Sector::Symmetric, Boundary::Dirichlet);
    for (name, pool) in &pools {
        g.bench_with_input(BenchmarkId::from_parameter(name), &tp, |b, tp| {
            b.iter(|| pool.install(|| two_body_spectrum(tp).unwrap().values[0]))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("sandwich");
    let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(11), 3, 10);
    let opts = SandwichOptions::default();
    for (name, pool) in &pools {
        g.bench_with_input(BenchmarkId::from_parameter(name), &inst, |b, inst| {
            b.iter(|| pool.install(|| inst.check(&opts).unwrap().upper))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("dot_1m");
    let v: Vec<f64> = (0..1 << 20).map(|i| (i as f64).sin()).collect();
    for (name, pool) in &pools {
        g.bench_with_input(BenchmarkId::from_parameter(name), &v, |b, v| b.iter(|| pool.install(|| par::dot(v, v))));
    }
    g.finish();
}

criterion_group!(benches, bench_kernels);
criterion_main!(benches);
