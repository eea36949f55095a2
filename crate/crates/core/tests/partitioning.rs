use cdc_core::{DomainExpr, Fact, FactPattern, FactStore};

fn domain(i: usize) -> DomainExpr {
    format!("corpus@d{i:02}").parse().unwrap()
}

/// 10 000 facts spread round-robin over 50 domains: a domain-fixed query
/// must touch exactly its own partition.
#[test]
fn domain_fixed_query_scans_one_partition() {
    let mut store = FactStore::new();
    for i in 0..10_000 {
        let fact = Fact::intra(
            "is_a",
            &format!("s{i}"),
            &format!("o{}", i + 1),
            domain(i % 50),
        );
        store.assert_fact(&fact).unwrap();
    }
    for d in 0..50 {
        let pattern = FactPattern::relation("is_a").with_domain(domain(d));
        let hits = store.match_pattern(&pattern).unwrap();
        assert_eq!(hits.len(), 200);
        assert!(store.last_query_scanned() <= 200);
        assert!(hits.iter().all(|f| f.primary_domain() == &domain(d)));

        let scanned = store.scan_pattern(&pattern).unwrap();
        assert_eq!(scanned.len(), 200);
        assert_eq!(store.last_query_scanned(), 10_000);
    }
}

#[test]
fn subject_index_beats_domain_index_when_smaller() {
    let mut store = FactStore::new();
    for i in 0..1_000 {
        let fact = Fact::intra(
            "part_of",
            &format!("p{}", i % 10),
            &format!("w{i}"),
            domain(0),
        );
        store.assert_fact(&fact).unwrap();
    }
    let pattern = FactPattern::relation("part_of")
        .with_subject("p3")
        .with_domain(domain(0));
    assert_eq!(store.match_pattern(&pattern).unwrap().len(), 100);
    assert_eq!(store.last_query_scanned(), 100);
}

#[test]
fn retraction_empties_partition() {
    let mut store = FactStore::new();
    let f = Fact::intra("requires", "calculus", "algebra", domain(3));
    store.assert_fact(&f).unwrap();
    assert!(store.retract_fact(&f).unwrap());
    let pattern = FactPattern::relation("requires").with_domain(domain(3));
    assert!(store.match_pattern(&pattern).unwrap().is_empty());
    assert!(store.is_empty());
}
