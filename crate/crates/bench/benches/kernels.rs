use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use hball::experiments::family_pair;
use hball::{
    gamma_coeff, gauss_jacobi, kernel_eval, Atom, BallPoint, BlochProfile, Dimension, HarmonicExpansion,
};

fn coefficients(c: &mut Criterion) {
    let n = Dimension::new(3).unwrap();
    c.bench_function("gamma_coeff k=4000", |b| b.iter(|| gamma_coeff(n, black_box(-2.5), black_box(4000))));
}

fn kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_eval");
    for n in [2, 3] {
        let d = Dimension::new(n).unwrap();
        let y = BallPoint::north(d);
        for rho in [0.5, 0.9, 0.99] {
            let x = BallPoint::polar(d, rho, 0.3).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("n={n}"), rho), &x, |b, x| {
                b.iter(|| kernel_eval(d, 0.5, x, &y, 1e-12).unwrap())
            });
        }
    }
    group.finish();
}

fn quadrature(c: &mut Criterion) {
    let mut group = c.benchmark_group("gauss_jacobi");
    for m in [16, 64, 256] {
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| b.iter(|| gauss_jacobi(m, 1.5, 0.5).unwrap()));
    }
    group.finish();
}

fn profile(c: &mut Criterion) {
    let n = Dimension::new(2).unwrap();
    let alpha = 1.0;
    let f = HarmonicExpansion::single(n, Atom::kernel(alpha - 3.0, BallPoint::north(n), 1.0)).unwrap();
    let mut group = c.benchmark_group("bloch_profile");
    group.sample_size(10);
    for depth in [6, 10] {
        group.bench_with_input(BenchmarkId::from_parameter(depth), &depth, |b, &depth| {
            b.iter(|| BlochProfile::for_function(&f, alpha, family_pair(n, alpha), depth).unwrap().sup())
        });
    }
    group.finish();
}

criterion_group!(benches, coefficients, kernel, quadrature, profile);
criterion_main!(benches);
