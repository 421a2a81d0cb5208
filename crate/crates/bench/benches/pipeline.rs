use criterion::{criterion_group, criterion_main, Criterion};
use gammaflag_core::flatsections::{gamma_limit, ia_integral, JOptions};
use gammaflag_core::mirror::{Mirror, QuadOptions};
use gammaflag_core::qh::{conjecture_o_certify, QConnection};
use gammaflag_core::schubert::FlagVariety;
use std::hint::black_box;

fn a_side(c: &mut Criterion) {
    c.bench_function("flag_variety_fl4", |b| b.iter(|| FlagVariety::from_label(black_box("Fl4")).unwrap()));
    let gr = FlagVariety::from_label("Gr24").unwrap();
    c.bench_function("quantum_connection_gr24", |b| b.iter(|| QConnection::new(black_box(&gr)).unwrap()));
    let qc = QConnection::new(&gr).unwrap();
    c.bench_function("conjecture_o_gr24", |b| b.iter(|| conjecture_o_certify(&gr, &qc, black_box(&[1.0])).unwrap()));
    let p2 = FlagVariety::from_label("P2").unwrap();
    let qc2 = QConnection::new(&p2).unwrap();
    let grid: Vec<f64> = (0..=10).map(|k| 10.0 + 5.0 * k as f64).collect();
    c.bench_function("gamma_limit_p2", |b| b.iter(|| gamma_limit(&p2, &qc2, black_box(&grid), true, &JOptions::default()).unwrap()));
    c.bench_function("ia_integral_p2", |b| {
        b.iter(|| ia_integral(&p2, &qc2, black_box(1.0), &[0.13, 0.07], &[1.3], &[1.0, 0.0, 0.0]).unwrap())
    });
}

fn b_side(c: &mut Criterion) {
    let fl3 = FlagVariety::from_label("Fl3").unwrap();
    let m = Mirror::new(&fl3).unwrap();
    c.bench_function("critical_point_fl3", |b| b.iter(|| m.critical_point(black_box(&[1.3, 0.7])).unwrap()));
    let p2 = FlagVariety::from_label("P2").unwrap();
    let m2 = Mirror::new(&p2).unwrap();
    let opts = QuadOptions::default();
    c.bench_function("ib_moments_p2", |b| b.iter(|| m2.ib_moments(black_box(1.0), &[0.13, 0.07], &[1.3], 2, &opts).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = a_side, b_side
}
criterion_main!(benches);
