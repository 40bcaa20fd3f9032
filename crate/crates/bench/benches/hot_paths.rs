//! Criterion benchmarks for the numerically hot paths: representing
//! matrices, kernel evaluation, matrix-free applies and principal
//! values.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use osclab::group;
use osclab::oscillator::{self, KernelSpec, LinearOp};
use osclab::poly::PolySpec;
use osclab::pv::{self, PVConfig};

fn bench_rep_matrix(c: &mut Criterion) {
    let a = group::SL2Element::rotation(0.7)
        .mul(&group::SL2Element::diagonal(1.3))
        .mul(&group::SL2Element::shear(0.5));
    c.bench_function("rep_z_n4", |b| {
        b.iter(|| group::rep_z(black_box(&a), 4))
    });
    c.bench_function("invariant_forms_n6", |b| {
        b.iter(|| group::invariant_forms(6))
    });
}

fn bench_kernel(c: &mut Criterion) {
    let spec =
        KernelSpec::with_default_bound(2, 1.0, PolySpec::new(&[0.0, 0.0, 1.0]), 50.0).unwrap();
    let jet = spec.jet();
    c.bench_function("or_kernel_eval", |b| {
        b.iter(|| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..100 {
                let t = i as f64 * 0.03;
                acc += oscillator::or_kernel(
                    &spec,
                    &jet,
                    black_box([1.0 + t, 0.5]),
                    black_box([t, -0.25]),
                );
            }
            acc
        })
    });
    let op = oscillator::discretize_unchecked(&spec, 16.0, 4.0, 0.5, 0.25);
    let g: Vec<Complex64> = (0..op.grid.len())
        .map(|i| Complex64::new((i as f64 * 0.01).sin(), 0.0))
        .collect();
    c.bench_function("matrix_free_apply_2k", |b| b.iter(|| op.apply(black_box(&g))));
}

fn bench_pv(c: &mut Criterion) {
    let cfg = PVConfig::default();
    c.bench_function("pv_1d_gaussian", |b| {
        b.iter(|| {
            pv::pv_1d(
                &|s: f64| Complex64::new((-(s - 0.4) * (s - 0.4)).exp(), 0.0),
                black_box(0.0),
                &cfg,
            )
            .unwrap()
        })
    });
    let psi = pv::gaussian_mixture_2d(&[(1.0, 0.0, 0.0, 1.0, 1.0)]);
    c.bench_function("iterated_pv_gaussian", |b| {
        b.iter(|| pv::d_dist(black_box(&psi), &cfg).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_rep_matrix, bench_kernel, bench_pv
}
criterion_main!(benches);
