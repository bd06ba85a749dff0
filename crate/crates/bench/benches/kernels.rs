use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hplab_bench::spiral;
use hplab_core::dpp::gauge_identity_check;
use hplab_core::orthopoly::{orthonormal_basis, KernelSpec};
use hplab_core::weights::gram_matrix;
use hplab_core::Complex64;

fn delta() -> Complex64 {
    Complex64::new(1.0, 2.0)
}

fn gram(c: &mut Criterion) {
    let mut g = c.benchmark_group("gram_matrix");
    g.sample_size(20);
    for n in [8, 24, 48] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| gram_matrix(n, 2, delta()).unwrap()));
    }
    g.finish();
}

fn basis(c: &mut Criterion) {
    c.bench_function("orthonormal_basis_24", |b| b.iter(|| orthonormal_basis(24, 2, delta()).unwrap()));
}

fn kernel_eval(c: &mut Criterion) {
    let pts = spiral(64);
    let mut g = c.benchmark_group("kernel_eval_64x64");
    let specs = [
        ("finite_16", KernelSpec::finite(orthonormal_basis(16, 2, delta()).unwrap())),
        ("limit", KernelSpec::LimitHp { m: 2, delta: delta() }),
    ];
    for (name, spec) in &specs {
        g.bench_function(*name, |b| {
            b.iter(|| {
                let mut acc = Complex64::new(0.0, 0.0);
                for &z in &pts {
                    for &w in &pts {
                        acc += spec.eval(z, w);
                    }
                }
                black_box(acc)
            })
        });
    }
    g.finish();
}

fn gauge(c: &mut Criterion) {
    let pts = spiral(12);
    c.bench_function("gauge_identity_12", |b| b.iter(|| gauge_identity_check(black_box(&pts), 2, delta()).unwrap()));
}

criterion_group!(benches, gram, basis, kernel_eval, gauge);
criterion_main!(benches);
