use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

use dhlab_core::dhrep::SpinFrame;
use dhlab_core::{
    build_entangled_transform, build_unentangled_transform, direction_grid, matrix_exponential, removal_generator,
    PacketLayout, Region, Spin, SystemConfig,
};

fn system(kappa: f64) -> SystemConfig {
    SystemConfig::new(PacketLayout::standard().unwrap(), kappa, &[32.0]).unwrap()
}

fn expm_factor(c: &mut Criterion) {
    let cfg = system(0.0);
    let w = removal_generator(&cfg, Spin::Up, Region::R1, 1, 1.0).unwrap();
    let a = w.scale(Complex64::new(std::f64::consts::FRAC_PI_2, 0.0));
    c.bench_function("expm removal factor, 10 modes", |b| b.iter(|| matrix_exponential(black_box(&a), 1e-12).unwrap()));
}

fn transforms(c: &mut Criterion) {
    let cfg = system(0.05);
    c.bench_function("unentangled transform", |b| {
        b.iter(|| build_unentangled_transform(black_box(&cfg), [1, 1, -1]).unwrap())
    });
    let base = build_unentangled_transform(&cfg, [1, 1, -1]).unwrap();
    c.bench_function("entangled transform", |b| b.iter(|| build_entangled_transform(black_box(&cfg), &base).unwrap()));
}

fn correlation_sweep(c: &mut Criterion) {
    let cfg = system(0.05);
    let base = build_unentangled_transform(&cfg, [1, 1, -1]).unwrap();
    let t = build_entangled_transform(&cfg, &base).unwrap();
    c.bench_function("conjugated spin frame", |b| b.iter(|| SpinFrame::conjugated(black_box(&cfg), &t).unwrap()));
    let frame = SpinFrame::conjugated(&cfg, &t).unwrap();
    let dirs = direction_grid(6, 6);
    c.bench_function("DH correlation sweep 6x6 x 6x6", |b| {
        b.iter(|| {
            let mut s = 0.0;
            for da in &dirs {
                for db in &dirs {
                    s += frame.correlation(Region::R1, da, Region::R2, db).unwrap();
                }
            }
            s
        })
    });
}

criterion_group!(benches, expm_factor, transforms, correlation_sweep);
criterion_main!(benches);
