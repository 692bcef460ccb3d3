use criterion::{black_box, criterion_group, criterion_main, Criterion};

use mseg_core::density::{Density, DensityFamily};
use mseg_core::interval_set::IntervalSet;
use mseg_core::oseg::{common_o_segment, IntervalSpace};
use mseg_core::segment::{common_segment, universal_chord};

fn chord(c: &mut Criterion) {
    let f = Density::poly_unit(&[0.1, 0.4, 1.5, 1.0]);
    let total = f.total().unwrap();
    c.bench_function("universal_chord cubic", |b| {
        b.iter(|| {
            universal_chord(|t| f.integrate_interval(0.0, black_box(t)) / total, 1e-9).unwrap()
        })
    });
}

fn segment(c: &mut Criterion) {
    let family = DensityFamily::new(vec![
        Density::constant(1.0),
        Density::poly_unit(&[0.0, 2.0]),
        Density::poly_unit(&[0.5, 3.0, -3.0]),
    ])
    .unwrap();
    let universe = IntervalSet::interval(0.0, 1.0);
    for depth in [6, 8, 10] {
        c.bench_function(&format!("common_segment depth {depth}"), |b| {
            b.iter(|| common_segment(black_box(&family), &universe, depth, 1e-9).unwrap())
        });
    }
}

fn set_algebra(c: &mut Criterion) {
    let x = IntervalSet::from_parts(
        (0..64)
            .map(|i| mseg_core::Interval::closed(i as f64 / 64.0, i as f64 / 64.0 + 0.006))
            .collect(),
    );
    let y = IntervalSet::from_parts(
        (0..64)
            .map(|i| mseg_core::Interval::closed(i as f64 / 64.0 + 0.004, i as f64 / 64.0 + 0.01))
            .collect(),
    );
    c.bench_function("union 64x64 parts", |b| b.iter(|| black_box(&x).union(&y)));
    c.bench_function("subtract 64x64 parts", |b| b.iter(|| black_box(&x).subtract(&y)));
    c.bench_function("prefix half mass", |b| {
        b.iter(|| black_box(&x).prefix(x.measure() / 2.0).unwrap())
    });
}

fn open_segment(c: &mut Criterion) {
    let f = Density::poly_unit(&[0.0, 2.0]);
    let g = Density::constant(1.0);
    c.bench_function("common_o_segment depth 4 fuzzed", |b| {
        b.iter(|| {
            let sp = IntervalSpace::fuzzed(IntervalSet::open_interval(0.0, 1.0), 7).unwrap();
            common_o_segment(&sp, black_box(&f), &g, &IntervalSet::empty(), 4).unwrap()
        })
    });
}

criterion_group!(benches, chord, segment, set_algebra, open_segment);
criterion_main!(benches);
