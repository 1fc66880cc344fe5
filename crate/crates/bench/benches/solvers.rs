use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use refphase::reconstruct::DEFAULT_TEST_ITERATIONS;
use refphase::reflearn::loss_and_grad_u;
use refphase::{dft2, gs_run, register, GsConfig, Image, Oversampling};
use refphase_bench::fixture;

fn fourier(c: &mut Criterion) {
    let mut group = c.benchmark_group("dft2");
    for d in [28, 56, 64] {
        let f = fixture(d, Oversampling::None, 1);
        group.bench_with_input(BenchmarkId::from_parameter(d), &f.x, |b, x| {
            b.iter(|| dft2(x).unwrap())
        });
    }
    group.finish();
}

fn gerchberg_saxton(c: &mut Criterion) {
    let mut group = c.benchmark_group("gs_run_500");
    group.sample_size(10);
    for s in [Oversampling::None, Oversampling::Double] {
        let f = fixture(28, s, 2);
        let cfg = GsConfig {
            iterations: DEFAULT_TEST_ITERATIONS,
            oversampling: s,
            ..GsConfig::default()
        };
        group.bench_function(BenchmarkId::new("s", s.factor()), |b| {
            b.iter(|| gs_run(&f.y, Some(&f.u), &cfg).unwrap())
        });
    }
    group.finish();
}

fn unrolled_gradient(c: &mut Criterion) {
    let f = fixture(28, Oversampling::Double, 3);
    let x0 = Image::zeros(28);
    c.bench_function("loss_and_grad_u_n15", |b| {
        b.iter(|| loss_and_grad_u(&f.x, &x0, &f.u, &f.y, 15).unwrap())
    });
}

fn registration(c: &mut Criterion) {
    let a = fixture(28, Oversampling::None, 4).x;
    let b = fixture(28, Oversampling::None, 5).x;
    c.bench_function("register_28", |bench| {
        bench.iter(|| register(&a, &b).unwrap())
    });
}

criterion_group!(
    benches,
    fourier,
    gerchberg_saxton,
    unrolled_gradient,
    registration
);
criterion_main!(benches);
