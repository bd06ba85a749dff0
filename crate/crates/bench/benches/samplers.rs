use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hplab_bench::rng;
use hplab_core::dpp::ProjectionDpp;
use hplab_core::orthopoly::orthonormal_basis;
use hplab_core::sampling::{rejection_draw, sample_haar_unitary};
use hplab_core::truncation::{eigenvalues, truncate};
use hplab_core::Complex64;

fn haar(c: &mut Criterion) {
    let mut g = c.benchmark_group("haar_unitary");
    for dim in [4, 16, 64] {
        let mut r = rng();
        g.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, &d| {
            b.iter(|| sample_haar_unitary(d, &mut r).unwrap())
        });
    }
    g.finish();
}

fn truncation_spectrum(c: &mut Criterion) {
    let mut g = c.benchmark_group("truncation_eigenvalues");
    for n in [2, 8, 32] {
        let u = sample_haar_unitary(n + 2, &mut rng()).unwrap();
        let corner = truncate(&u, n).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &corner, |b, m| {
            b.iter(|| eigenvalues(black_box(m)).unwrap())
        });
    }
    g.finish();
}

fn rejection(c: &mut Criterion) {
    let mut r = rng();
    c.bench_function("hp_rejection_dim3_delta1", |b| {
        b.iter(|| rejection_draw(3, Complex64::new(1.0, 0.0), &mut r).unwrap())
    });
}

fn projection_dpp(c: &mut Criterion) {
    let mut g = c.benchmark_group("projection_dpp");
    for n in [2, 4, 8] {
        let dpp = ProjectionDpp::new(orthonormal_basis(n, 1, Complex64::new(1.0, 0.0)).unwrap());
        let mut r = rng();
        g.bench_with_input(BenchmarkId::from_parameter(n), &dpp, |b, s| b.iter(|| s.sample(&mut r).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, haar, truncation_spectrum, rejection, projection_dpp);
criterion_main!(benches);
