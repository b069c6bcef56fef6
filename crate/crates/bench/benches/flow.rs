use criterion::{black_box, criterion_group, criterion_main, Criterion};
use hermflow::flows::{diagnostics, rhs_eta, step, TimeNormalization};
use hermflow_bench::perturbed;

fn flow(c: &mut Criterion) {
    for (m, n) in [(2, 16), (3, 16), (2, 32)] {
        let (spec, g) = perturbed(m, n);
        c.bench_function(&format!("rhs_eta m={m} n={n}"), |b| b.iter(|| rhs_eta(black_box(&g), TimeNormalization::Unit)));
        c.bench_function(&format!("rk4 step m={m} n={n}"), |b| b.iter(|| step(&spec.flow, black_box(&g))));
        c.bench_function(&format!("diagnostics m={m} n={n}"), |b| b.iter(|| diagnostics(&spec.flow, black_box(&g), 0.0)));
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = flow
}
criterion_main!(benches);
