use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cdc_core::workload::{bench_domain, generate, WorkloadSpec};
use cdc_core::{materialize_with, Execution, FactPattern};

fn executions() -> Vec<(&'static str, Execution)> {
    vec![
        ("sequential", Execution::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Execution::Parallel),
    ]
}

fn closure(c: &mut Criterion) {
    let mut group = c.benchmark_group("materialize");
    group.sample_size(10);
    for (facts, domains) in [(2_000, 4), (10_000, 50), (20_000, 8)] {
        let store = generate(&WorkloadSpec::new(facts, domains)).unwrap();
        for (name, execution) in executions() {
            group.bench_with_input(
                BenchmarkId::new(name, format!("{facts}x{domains}")),
                &store,
                |b, store| b.iter(|| materialize_with(store, execution).unwrap()),
            );
        }
    }
    group.finish();
}

fn partition_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("domain_query");
    let store = generate(&WorkloadSpec::new(10_000, 50)).unwrap();
    let pattern = FactPattern::relation("is_a").with_domain(bench_domain(7));
    group.bench_function("indexed", |b| {
        b.iter(|| store.match_pattern(&pattern).unwrap().len())
    });
    group.bench_function("full_scan", |b| {
        b.iter(|| store.scan_pattern(&pattern).unwrap().len())
    });
    group.finish();
}

criterion_group!(benches, closure, partition_scan);
criterion_main!(benches);
