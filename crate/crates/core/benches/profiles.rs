//! Profile and signature enumeration on the default rayon pool versus a
//! single-thread pool. Built without the `parallel` feature, both variants
//! run sequentially and should time the same.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPoolBuilder;
use stm_core::gen::{generate, GenParams};
use stm_core::{quality, typed, ProblemKind, TypedInstance};

fn instance(kind: ProblemKind, k: usize, n: usize) -> TypedInstance {
    let p = GenParams {
        kind,
        k,
        n,
        ..GenParams::default()
    };
    generate(7, &p).expect("valid shape")
}

fn compare(c: &mut Criterion, group: &str, cases: &[(&str, TypedInstance)], run: fn(&TypedInstance)) {
    let single = ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    for (name, inst) in cases {
        g.bench_with_input(BenchmarkId::new("parallel", name), inst, |b, i| b.iter(|| run(i)));
        g.bench_with_input(BenchmarkId::new("sequential", name), inst, |b, i| {
            b.iter(|| single.install(|| run(i)))
        });
    }
    g.finish();
}

fn solve_max(c: &mut Criterion) {
    let cases = [
        ("smti_k6_n1000", instance(ProblemKind::Smti, 6, 1000)),
        ("srti_k4_n200", instance(ProblemKind::Srti, 4, 200)),
    ];
    compare(c, "solve_max", &cases, |i| {
        typed::solve_max(i).expect("solvable");
    });
}

fn solve_min_ba(c: &mut Criterion) {
    let cases = [
        ("smti_k4_n1000", instance(ProblemKind::Smti, 4, 1000)),
        ("smti_k5_n200", instance(ProblemKind::Smti, 5, 200)),
    ];
    compare(c, "solve_min_ba", &cases, |i| {
        quality::solve_min_ba(i, false).expect("solvable");
    });
}

criterion_group!(benches, solve_max, solve_min_ba);
criterion_main!(benches);
