//! Seeded synthetic knowledge bases and the partition-scan benchmark.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::{DomainExpr, DomainSegment};
use crate::fact::{Fact, FactPattern};
use crate::inference::{materialize_with, Execution, InferenceError};
use crate::store::FactStore;

pub const DEFAULT_SEED: u64 = 0xC0C0_2024;

/// How far ahead of its subject an edge's object may sit in concept order.
/// Keeps chains local so closures have some depth without growing dense.
const EDGE_SPAN: usize = 8;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("need at least one domain")]
    NoDomains,
    #[error("need at least as many facts ({facts}) as domains ({domains})")]
    TooFewFacts { facts: usize, domains: usize },
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

#[derive(Debug, Clone)]
pub struct WorkloadSpec {
    pub facts: usize,
    pub domains: usize,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn new(facts: usize, domains: usize) -> Self {
        WorkloadSpec {
            facts,
            domains,
            seed: DEFAULT_SEED,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<(), WorkloadError> {
        if self.domains == 0 {
            return Err(WorkloadError::NoDomains);
        }
        if self.facts < self.domains {
            return Err(WorkloadError::TooFewFacts {
                facts: self.facts,
                domains: self.domains,
            });
        }
        Ok(())
    }
}

pub fn bench_domain(i: usize) -> DomainExpr {
    DomainExpr::from_segments(vec![
        DomainSegment::atom("bench"),
        DomainSegment::atom(format!("d{i:04}")),
    ])
}

/// `is_a` facts over a concept pool, each filed under a uniformly chosen
/// domain. Edges always point forward in concept order, so every domain's
/// graph is acyclic.
pub fn generate(spec: &WorkloadSpec) -> Result<FactStore, WorkloadError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let concepts = (spec.facts / 2).max(EDGE_SPAN * 2);
    let names: Vec<String> = (0..concepts).map(|i| format!("c{i:06}")).collect();
    let domains: Vec<DomainExpr> = (0..spec.domains).map(bench_domain).collect();
    let mut store = FactStore::new();
    while store.len() < spec.facts {
        let from = rng.random_range(0..concepts - 1);
        let to = (from + 1 + rng.random_range(0..EDGE_SPAN)).min(concepts - 1);
        let domain = domains[rng.random_range(0..domains.len())].clone();
        let fact = Fact::intra("is_a", &names[from], &names[to], domain);
        store
            .assert_fact(&fact)
            .expect("is_a is a built-in intra relation");
    }
    Ok(store)
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub facts: usize,
    pub domains: usize,
    pub seed: u64,
    /// Entries touched answering one domain-fixed query per domain by full scan.
    pub full_scanned: usize,
    /// Entries touched answering the same queries through the domain index.
    pub filtered_scanned: usize,
    pub min_partition: usize,
    pub max_partition: usize,
    pub closure_facts: usize,
    pub materialize_time: Duration,
}

impl BenchReport {
    pub fn reduction(&self) -> f64 {
        if self.filtered_scanned == 0 {
            return 1.0;
        }
        self.full_scanned as f64 / self.filtered_scanned as f64
    }
}

/// Generates a workload, compares full and partitioned scans, and times
/// materialization.
pub fn run_bench(spec: &WorkloadSpec, execution: Execution) -> Result<BenchReport, WorkloadError> {
    let store = generate(spec)?;
    let mut full_scanned = 0;
    let mut filtered_scanned = 0;
    let mut min_partition = usize::MAX;
    let mut max_partition = 0;
    for i in 0..spec.domains {
        let pattern = FactPattern::relation("is_a").with_domain(bench_domain(i));
        let by_scan = store
            .scan_pattern(&pattern)
            .expect("is_a is registered")
            .len();
        full_scanned += store.last_query_scanned();
        let by_index = store
            .match_pattern(&pattern)
            .expect("is_a is registered")
            .len();
        filtered_scanned += store.last_query_scanned();
        debug_assert_eq!(by_scan, by_index);
        min_partition = min_partition.min(by_index);
        max_partition = max_partition.max(by_index);
    }
    let started = Instant::now();
    let closure = materialize_with(&store, execution)?;
    let materialize_time = started.elapsed();
    Ok(BenchReport {
        facts: store.len(),
        domains: spec.domains,
        seed: spec.seed,
        full_scanned,
        filtered_scanned,
        min_partition,
        max_partition,
        closure_facts: closure.len(),
        materialize_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_reproducible() {
        let spec = WorkloadSpec::new(500, 5).seed(7);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
        assert_ne!(a, generate(&spec.clone().seed(8)).unwrap());
    }

    #[test]
    fn sizes_are_validated() {
        assert!(matches!(
            generate(&WorkloadSpec::new(10, 0)),
            Err(WorkloadError::NoDomains)
        ));
        assert!(matches!(
            generate(&WorkloadSpec::new(3, 5)),
            Err(WorkloadError::TooFewFacts { .. })
        ));
    }

    #[test]
    fn single_partition_has_no_reduction() {
        let r = run_bench(&WorkloadSpec::new(100, 1), Execution::Sequential).unwrap();
        assert_eq!(r.reduction(), 1.0);
    }

    #[test]
    fn reduction_tracks_domain_count() {
        let r = run_bench(&WorkloadSpec::new(1000, 10), Execution::default()).unwrap();
        // oracle: every query scans the whole relation by full scan and one
        // partition by index; partitions add up to the relation.
        assert_eq!(r.full_scanned, 10 * 1000);
        assert_eq!(r.filtered_scanned, 1000);
        assert!((8.0..=12.0).contains(&r.reduction()));
        assert!(r.min_partition <= 100 && r.max_partition >= 100);
    }
}
