use proptest::prelude::*;

use cdc_core::kb_io::{load_str, read_interop, save_string, LoadOptions};
use cdc_core::{
    export_interop, materialize, materialize_with, DomainExpr, Execution, Fact, FactStore,
};

fn domain_strategy() -> impl Strategy<Value = DomainExpr> {
    prop::sample::select(vec![
        "math",
        "math@algebra",
        "cs+design@ux",
        "Biology@Plant_Taxonomy",
        "react@16.8",
    ])
    .prop_map(|s| s.parse().unwrap())
}

fn concept_strategy() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "a",
        "b",
        "c",
        "Apple",
        "user_story",
        "x.y",
        "z-1",
        "_q",
    ])
    .prop_map(String::from)
}

/// A mix of intra, cross and fusion facts; transitive relations only point
/// forward in concept order so the store stays acyclic.
fn fact_strategy() -> impl Strategy<Value = Fact> {
    let intra = (
        prop::sample::select(vec![
            "has_attribute",
            "cause_of",
            "strategy",
            "contrasts_with",
            "enables",
        ]),
        concept_strategy(),
        concept_strategy(),
        domain_strategy(),
    )
        .prop_map(|(r, s, o, d)| Fact::intra(r, &s, &o, d));
    let ordered = (0usize..8, 1usize..4, domain_strategy()).prop_map(|(i, step, d)| {
        Fact::intra("is_a", &format!("n{i}"), &format!("n{}", i + step), d)
    });
    let cross = (
        concept_strategy(),
        concept_strategy(),
        domain_strategy(),
        domain_strategy(),
    )
        .prop_map(|(a, b, d1, d2)| Fact::cross("analogous_to", &a, &b, d1, d2));
    let fusion = (
        concept_strategy(),
        concept_strategy(),
        concept_strategy(),
        domain_strategy(),
    )
        .prop_map(|(a, b, f, d)| Fact::fusion("fuses_with", &a, &b, &f, d));
    prop_oneof![intra, ordered, cross, fusion]
}

fn store_of(facts: &[Fact]) -> FactStore {
    let mut store = FactStore::new();
    for f in facts {
        store.assert_fact(f).unwrap();
    }
    store
}

proptest! {
    #[test]
    fn save_load_round_trips(facts in prop::collection::vec(fact_strategy(), 0..40)) {
        let store = store_of(&facts);
        let saved = save_string(&store);
        let mut reloaded = FactStore::new();
        let report = load_str(&mut reloaded, &saved, "saved.cdc", LoadOptions::default());
        prop_assert!(report.diagnostics.is_empty(), "{:?}", report.diagnostics);
        prop_assert_eq!(&reloaded, &store);
        prop_assert_eq!(save_string(&reloaded), saved);
    }

    #[test]
    fn interop_export_recovers_every_fact(facts in prop::collection::vec(fact_strategy(), 0..40)) {
        let store = store_of(&facts);
        let read = read_interop(store.registry(), &export_interop(&store), "out.pl");
        prop_assert!(read.diagnostics.is_empty(), "{:?}", read.diagnostics);
        let mut recovered = read.facts;
        recovered.sort();
        let mut original: Vec<Fact> = store.iter().cloned().collect();
        original.sort();
        prop_assert_eq!(recovered, original);
    }

    #[test]
    fn execution_strategies_agree(facts in prop::collection::vec(fact_strategy(), 0..60)) {
        let store = store_of(&facts);
        let sequential = materialize_with(&store, Execution::Sequential).unwrap();
        prop_assert_eq!(&materialize(&store).unwrap(), &sequential);
        #[cfg(feature = "parallel")]
        prop_assert_eq!(&materialize_with(&store, Execution::Parallel).unwrap(), &sequential);
    }

    #[test]
    fn assertion_order_is_irrelevant(facts in prop::collection::vec(fact_strategy(), 0..30)) {
        let forward = store_of(&facts);
        let mut reversed_facts = facts.clone();
        reversed_facts.reverse();
        let backward = store_of(&reversed_facts);
        prop_assert_eq!(save_string(&forward), save_string(&backward));
        prop_assert_eq!(materialize(&forward).unwrap(), materialize(&backward).unwrap());
    }
}
