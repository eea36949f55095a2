//! Domain-partitioned fact storage.
//!
//! Every stored fact is reachable through three indexes: the primary
//! `(relation, domain)` partition, the `(relation, subject)` index and the
//! `(relation, object)` index. Pattern lookups pick the smallest applicable
//! candidate set and record how many entries they touched, so the cost of a
//! domain-filtered query can be compared against a full relation scan.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::domain::DomainExpr;
use crate::fact::{Fact, FactPattern};
use crate::relation::{RegistryError, RelationRegistry, RelationShape, RelationSpec};
use crate::symbol::{ConceptId, Interner};

pub type FactId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` has {expected} shape, got a {found} fact")]
    ShapeMismatch {
        relation: String,
        expected: RelationShape,
        found: RelationShape,
    },
    #[error("cannot redefine `{0}` while facts use it")]
    RelationInUse(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StoreStats {
    pub total_facts: usize,
    /// Cross-domain facts count once under each of their two domains.
    pub facts_per_domain: BTreeMap<DomainExpr, usize>,
    pub last_query_scanned: usize,
}

type Postings = BTreeSet<FactId>;

#[derive(Debug, Default)]
pub struct FactStore {
    registry: RelationRegistry,
    slots: Vec<Option<Fact>>,
    free: Vec<FactId>,
    lookup: HashMap<Fact, FactId>,
    by_relation: HashMap<Arc<str>, Postings>,
    by_domain: HashMap<Arc<str>, HashMap<DomainExpr, Postings>>,
    by_subject: HashMap<Arc<str>, HashMap<ConceptId, Postings>>,
    by_object: HashMap<Arc<str>, HashMap<ConceptId, Postings>>,
    domain_counts: BTreeMap<DomainExpr, usize>,
    relation_names: HashMap<String, Arc<str>>,
    interner: Interner,
    generation: u64,
    last_scanned: AtomicUsize,
}

impl Clone for FactStore {
    fn clone(&self) -> Self {
        FactStore {
            registry: self.registry.clone(),
            slots: self.slots.clone(),
            free: self.free.clone(),
            lookup: self.lookup.clone(),
            by_relation: self.by_relation.clone(),
            by_domain: self.by_domain.clone(),
            by_subject: self.by_subject.clone(),
            by_object: self.by_object.clone(),
            domain_counts: self.domain_counts.clone(),
            relation_names: self.relation_names.clone(),
            interner: self.interner.clone(),
            generation: self.generation,
            last_scanned: AtomicUsize::new(self.last_scanned.load(Ordering::Relaxed)),
        }
    }
}

/// Two stores are equal when they hold the same facts under the same vocabulary.
impl PartialEq for FactStore {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self.lookup.keys().all(|f| other.lookup.contains_key(f))
            && self.registry.iter().eq(other.registry.iter())
    }
}

impl FactStore {
    pub fn new() -> Self {
        Self::with_registry(RelationRegistry::builtin())
    }

    pub fn with_registry(registry: RelationRegistry) -> Self {
        FactStore {
            registry,
            ..Default::default()
        }
    }

    pub fn registry(&self) -> &RelationRegistry {
        &self.registry
    }

    pub fn register_relation(&mut self, spec: RelationSpec) -> Result<(), StoreError> {
        self.registry.register(spec)?;
        self.generation += 1;
        Ok(())
    }

    /// Replaces a relation definition; only allowed before any fact uses it.
    pub fn redefine_relation(&mut self, spec: RelationSpec) -> Result<(), StoreError> {
        if self
            .by_relation
            .get(spec.name.as_str())
            .is_some_and(|p| !p.is_empty())
        {
            return Err(StoreError::RelationInUse(spec.name));
        }
        self.registry.redefine(spec)?;
        self.generation += 1;
        Ok(())
    }

    /// Incremented on every mutation; closures remember the generation they were built from.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn len(&self) -> usize {
        self.lookup.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lookup.is_empty()
    }

    fn spec_for(&self, fact: &Fact) -> Result<&RelationSpec, StoreError> {
        let spec = self
            .registry
            .get(fact.relation())
            .ok_or_else(|| StoreError::UnknownRelation(fact.relation().to_string()))?;
        if spec.shape != fact.shape() {
            return Err(StoreError::ShapeMismatch {
                relation: spec.name.clone(),
                expected: spec.shape,
                found: fact.shape(),
            });
        }
        Ok(spec)
    }

    /// Brings a fact into stored form: canonical orientation, shared symbols.
    pub fn normalize(&mut self, fact: &Fact) -> Result<Fact, StoreError> {
        let symmetric = self.spec_for(fact)?.symmetric;
        let relation = match self.relation_names.get(fact.relation()) {
            Some(r) => r.clone(),
            None => {
                let r: Arc<str> = Arc::from(fact.relation());
                self.relation_names
                    .insert(fact.relation().to_string(), r.clone());
                r
            }
        };
        let mut intern = |c: &ConceptId| self.interner.intern(c.as_str());
        let fact = match fact {
            Fact::Intra {
                subject,
                object,
                domain,
                ..
            } => Fact::Intra {
                relation,
                subject: intern(subject),
                object: intern(object),
                domain: domain.clone(),
            },
            Fact::Cross {
                left,
                right,
                left_domain,
                right_domain,
                ..
            } => Fact::Cross {
                relation,
                left: intern(left),
                right: intern(right),
                left_domain: left_domain.clone(),
                right_domain: right_domain.clone(),
            },
            Fact::Fusion {
                left,
                right,
                fused,
                domain,
                ..
            } => Fact::Fusion {
                relation,
                left: intern(left),
                right: intern(right),
                fused: intern(fused),
                domain: domain.clone(),
            },
        };
        Ok(fact.canonical(symmetric))
    }

    /// Inserts a fact. Returns `false` if an equal fact was already stored.
    pub fn assert_fact(&mut self, fact: &Fact) -> Result<bool, StoreError> {
        let fact = self.normalize(fact)?;
        if self.lookup.contains_key(&fact) {
            return Ok(false);
        }
        let id = match self.free.pop() {
            Some(id) => id,
            None => {
                self.slots.push(None);
                self.slots.len() - 1
            }
        };
        let relation = fact.relation_arc().clone();
        self.by_relation
            .entry(relation.clone())
            .or_default()
            .insert(id);
        for domain in fact.domains() {
            self.by_domain
                .entry(relation.clone())
                .or_default()
                .entry(domain.clone())
                .or_default()
                .insert(id);
            *self.domain_counts.entry(domain.clone()).or_default() += 1;
        }
        self.by_subject
            .entry(relation.clone())
            .or_default()
            .entry(fact.subject().clone())
            .or_default()
            .insert(id);
        let objects = self.by_object.entry(relation).or_default();
        objects.entry(fact.object().clone()).or_default().insert(id);
        if let Fact::Fusion { fused, .. } = &fact {
            objects.entry(fused.clone()).or_default().insert(id);
        }
        self.lookup.insert(fact.clone(), id);
        self.slots[id] = Some(fact);
        self.generation += 1;
        Ok(true)
    }

    /// Removes a fact. Returns `false` if it was not present.
    pub fn retract_fact(&mut self, fact: &Fact) -> Result<bool, StoreError> {
        let symmetric = self.spec_for(fact)?.symmetric;
        let fact = fact.canonical(symmetric);
        let Some(id) = self.lookup.remove(&fact) else {
            return Ok(false);
        };
        let relation = fact.relation();
        fn purge<K: std::hash::Hash + Eq>(
            map: &mut HashMap<Arc<str>, HashMap<K, Postings>>,
            relation: &str,
            key: &K,
            id: FactId,
        ) {
            if let Some(inner) = map.get_mut(relation) {
                if let Some(postings) = inner.get_mut(key) {
                    postings.remove(&id);
                    if postings.is_empty() {
                        inner.remove(key);
                    }
                }
            }
        }
        if let Some(p) = self.by_relation.get_mut(relation) {
            p.remove(&id);
        }
        for domain in fact.domains() {
            purge(&mut self.by_domain, relation, domain, id);
            if let Some(count) = self.domain_counts.get_mut(domain) {
                *count -= 1;
                if *count == 0 {
                    self.domain_counts.remove(domain);
                }
            }
        }
        purge(&mut self.by_subject, relation, fact.subject(), id);
        purge(&mut self.by_object, relation, fact.object(), id);
        if let Fact::Fusion { fused, .. } = &fact {
            purge(&mut self.by_object, relation, fused, id);
        }
        self.slots[id] = None;
        self.free.push(id);
        self.generation += 1;
        Ok(true)
    }

    /// True when `fact` is held in exactly this orientation. Differs from
    /// [`FactStore::contains`] only for symmetric relations.
    pub fn is_stored(&self, fact: &Fact) -> bool {
        self.lookup.contains_key(fact)
    }

    /// True when `fact` is asserted, in either orientation for symmetric
    /// relations.
    pub fn contains(&self, fact: &Fact) -> bool {
        let symmetric = self
            .registry
            .get(fact.relation())
            .is_some_and(|s| s.symmetric);
        self.lookup.contains_key(&fact.canonical(symmetric))
    }

    /// All stored facts, in insertion-slot order.
    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.slots.iter().flatten()
    }

    /// Stored facts of one relation.
    pub fn facts_of<'a>(&'a self, relation: &str) -> impl Iterator<Item = &'a Fact> + 'a {
        self.by_relation
            .get(relation)
            .into_iter()
            .flatten()
            .filter_map(|&id| self.slots[id].as_ref())
    }

    /// Stored facts of one relation filed under `domain`.
    pub fn facts_in<'a>(
        &'a self,
        relation: &str,
        domain: &DomainExpr,
    ) -> impl Iterator<Item = &'a Fact> + 'a {
        self.by_domain
            .get(relation)
            .and_then(|m| m.get(domain))
            .into_iter()
            .flatten()
            .filter_map(|&id| self.slots[id].as_ref())
    }

    /// Domains that have at least one fact of `relation`.
    pub fn domains_of(&self, relation: &str) -> Vec<DomainExpr> {
        let mut out: Vec<_> = self
            .by_domain
            .get(relation)
            .map(|m| m.keys().cloned().collect())
            .unwrap_or_default();
        out.sort();
        out
    }

    /// Every domain with at least one fact.
    pub fn domains(&self) -> impl Iterator<Item = &DomainExpr> {
        self.domain_counts.keys()
    }

    /// Facts unifying with `pattern`, in slot order.
    ///
    /// Records the number of index entries touched, readable through
    /// [`FactStore::last_query_scanned`].
    pub fn match_pattern(&self, pattern: &FactPattern) -> Result<Vec<&Fact>, StoreError> {
        let spec = self
            .registry
            .get(&pattern.relation)
            .ok_or_else(|| StoreError::UnknownRelation(pattern.relation.clone()))?;
        let relation = pattern.relation.as_str();
        let empty = Postings::new();

        let lookup_domain = |d: &DomainExpr| self.by_domain.get(relation).and_then(|m| m.get(d));
        let mut options: Vec<Option<&Postings>> = vec![self.by_relation.get(relation)];
        if let Some(d) = &pattern.domain {
            options.push(lookup_domain(d));
        }
        if spec.shape == RelationShape::Cross {
            if let Some(d) = &pattern.second_domain {
                options.push(lookup_domain(d));
            }
        }
        if let Some(s) = &pattern.subject {
            options.push(self.by_subject.get(relation).and_then(|m| m.get(s)));
        }
        if let Some(o) = &pattern.object {
            options.push(self.by_object.get(relation).and_then(|m| m.get(o)));
        }
        // fused concepts share the object index
        if let Some(f) = &pattern.fused {
            options.push(self.by_object.get(relation).and_then(|m| m.get(f)));
        }
        let candidates: &Postings = options
            .into_iter()
            .map(|p| p.unwrap_or(&empty))
            .min_by_key(|p| p.len())
            .unwrap_or(&empty);

        self.last_scanned.store(candidates.len(), Ordering::Relaxed);
        Ok(candidates
            .iter()
            .filter_map(|&id| self.slots[id].as_ref())
            .filter(|f| pattern.matches(f))
            .collect())
    }

    /// Same results as [`FactStore::match_pattern`] but without using any
    /// index beyond the relation, so every fact of the relation is scanned.
    pub fn scan_pattern(&self, pattern: &FactPattern) -> Result<Vec<&Fact>, StoreError> {
        if !self.registry.contains(&pattern.relation) {
            return Err(StoreError::UnknownRelation(pattern.relation.clone()));
        }
        let all = self.by_relation.get(pattern.relation.as_str());
        self.last_scanned
            .store(all.map_or(0, |p| p.len()), Ordering::Relaxed);
        Ok(self
            .facts_of(&pattern.relation)
            .filter(|f| pattern.matches(f))
            .collect())
    }

    pub fn last_query_scanned(&self) -> usize {
        self.last_scanned.load(Ordering::Relaxed)
    }

    pub fn stats(&self) -> StoreStats {
        StoreStats {
            total_facts: self.len(),
            facts_per_domain: self.domain_counts.clone(),
            last_query_scanned: self.last_query_scanned(),
        }
    }

    #[cfg(test)]
    pub(crate) fn index_coherent(&self) -> bool {
        fn reachable<K: std::hash::Hash + Eq>(
            map: &HashMap<Arc<str>, HashMap<K, Postings>>,
            relation: &str,
            key: &K,
            id: FactId,
        ) -> bool {
            map.get(relation)
                .and_then(|m| m.get(key))
                .is_some_and(|p| p.contains(&id))
        }
        let live: usize = self.slots.iter().flatten().count();
        live == self.lookup.len()
            && self.lookup.iter().all(|(fact, &id)| {
                self.slots[id].as_ref() == Some(fact)
                    && fact
                        .domains()
                        .iter()
                        .all(|d| reachable(&self.by_domain, fact.relation(), *d, id))
                    && reachable(&self.by_subject, fact.relation(), fact.subject(), id)
                    && reachable(&self.by_object, fact.relation(), fact.object(), id)
                    && self.by_relation[fact.relation()].contains(&id)
            })
            && self.by_relation.values().map(|p| p.len()).sum::<usize>() == live
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> DomainExpr {
        s.parse().unwrap()
    }

    fn apple_store() -> FactStore {
        let mut s = FactStore::new();
        s.assert_fact(&Fact::intra(
            "is_a",
            "Apple",
            "Fruit",
            d("Biology@Plant_Taxonomy"),
        ))
        .unwrap();
        s.assert_fact(&Fact::intra(
            "is_a",
            "Apple",
            "Company",
            d("Business@Technology_Industry"),
        ))
        .unwrap();
        s
    }

    #[test]
    fn assert_is_idempotent() {
        let mut s = FactStore::new();
        let f = Fact::intra("is_a", "Apple", "Fruit", d("Biology@Plant_Taxonomy"));
        assert!(s.assert_fact(&f).unwrap());
        assert!(!s.assert_fact(&f).unwrap());
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn shape_and_relation_errors() {
        let mut s = FactStore::new();
        let bad = Fact::intra("analogous_to", "a", "b", d("x"));
        assert!(matches!(
            s.assert_fact(&bad),
            Err(StoreError::ShapeMismatch { .. })
        ));
        let unknown = Fact::intra("likes", "a", "b", d("x"));
        assert_eq!(
            s.assert_fact(&unknown),
            Err(StoreError::UnknownRelation("likes".into()))
        );
        assert!(s.retract_fact(&unknown).is_err());
        assert!(s.match_pattern(&FactPattern::relation("likes")).is_err());
    }

    #[test]
    fn retract_round_trip() {
        let mut s = apple_store();
        let original = s.clone();
        let f = Fact::intra("is_a", "Apple", "Fruit", d("Biology@Plant_Taxonomy"));
        assert!(s.retract_fact(&f).unwrap());
        assert!(!s.retract_fact(&f).unwrap());
        let hits = s
            .match_pattern(
                &FactPattern::relation("is_a")
                    .with_subject("Apple")
                    .with_object("Fruit"),
            )
            .unwrap();
        assert!(hits.is_empty());
        assert!(s.index_coherent());
        assert!(s.assert_fact(&f).unwrap());
        assert_eq!(s, original);
        assert!(s.index_coherent());
    }

    #[test]
    fn match_by_subject() {
        let s = apple_store();
        let hits = s
            .match_pattern(&FactPattern::relation("is_a").with_subject("Apple"))
            .unwrap();
        assert_eq!(hits.len(), 2);
        let empty = FactStore::new();
        assert!(empty
            .match_pattern(&FactPattern::relation("is_a"))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn stats_track_domains() {
        let mut s = FactStore::new();
        assert_eq!(s.stats().total_facts, 0);
        s.assert_fact(&Fact::intra("is_a", "a", "b", d("x")))
            .unwrap();
        s.assert_fact(&Fact::intra("is_a", "b", "c", d("x")))
            .unwrap();
        s.assert_fact(&Fact::intra("is_a", "a", "c", d("y")))
            .unwrap();
        let stats = s.stats();
        assert_eq!(stats.total_facts, 3);
        assert_eq!(stats.facts_per_domain.len(), 2);
        assert_eq!(stats.facts_per_domain.values().sum::<usize>(), 3);

        s.match_pattern(&FactPattern::relation("is_a").with_domain(d("x")))
            .unwrap();
        assert!(s.last_query_scanned() <= s.stats().facts_per_domain[&d("x")]);
    }

    #[test]
    fn cross_facts_count_under_both_domains() {
        let mut s = FactStore::new();
        s.assert_fact(&Fact::cross(
            "analogous_to",
            "atom",
            "solar_system",
            d("Physics@Atomic"),
            d("Astronomy@Planetary"),
        ))
        .unwrap();
        let stats = s.stats();
        assert_eq!(stats.total_facts, 1);
        assert_eq!(stats.facts_per_domain.values().sum::<usize>(), 2);
        let by_right = s
            .match_pattern(&FactPattern::relation("analogous_to").with_domain(d("Physics@Atomic")))
            .unwrap();
        assert_eq!(by_right.len(), 1);
    }

    #[test]
    fn symmetric_facts_stored_once() {
        let mut s = FactStore::new();
        assert!(s
            .assert_fact(&Fact::intra(
                "contrasts_with",
                "supervised",
                "unsupervised",
                d("ml")
            ))
            .unwrap());
        assert!(!s
            .assert_fact(&Fact::intra(
                "contrasts_with",
                "unsupervised",
                "supervised",
                d("ml")
            ))
            .unwrap());
        assert_eq!(s.len(), 1);
        assert!(s.contains(&Fact::intra(
            "contrasts_with",
            "unsupervised",
            "supervised",
            d("ml")
        )));
        assert!(s
            .retract_fact(&Fact::intra(
                "contrasts_with",
                "unsupervised",
                "supervised",
                d("ml")
            ))
            .unwrap());
        assert!(s.is_empty());
    }

    #[test]
    fn partition_scan_bound() {
        let mut s = FactStore::new();
        let domains: Vec<_> = (0..50).map(|i| d(&format!("area{i}@sub"))).collect();
        for i in 0..10_000 {
            let dom = &domains[i % 50];
            s.assert_fact(&Fact::intra(
                "is_a",
                &format!("c{i}"),
                &format!("c{}", i + 1),
                dom.clone(),
            ))
            .unwrap();
        }
        for dom in &domains {
            let hits = s
                .match_pattern(&FactPattern::relation("is_a").with_domain(dom.clone()))
                .unwrap();
            // oracle: direct partition count
            let expected = s.iter().filter(|f| f.primary_domain() == dom).count();
            assert_eq!(hits.len(), expected);
            assert!(s.last_query_scanned() <= 200);
        }
        s.scan_pattern(&FactPattern::relation("is_a").with_domain(domains[0].clone()))
            .unwrap();
        assert_eq!(s.last_query_scanned(), 10_000);
    }

    #[test]
    fn redefine_only_before_use() {
        let mut s = apple_store();
        assert!(matches!(
            s.redefine_relation(RelationSpec::intra("is_a")),
            Err(StoreError::RelationInUse(_))
        ));
        s.redefine_relation(RelationSpec::intra("cause_of").transitive().acyclic())
            .unwrap();
    }

    #[test]
    fn store_is_send_and_sync() {
        fn check<T: Send + Sync>() {}
        check::<FactStore>();
    }

    proptest! {
        #[test]
        fn indexes_stay_coherent(ops in prop::collection::vec((any::<bool>(), 0u8..5, 0u8..5, 0u8..3, 0u8..3), 1..60)) {
            let mut s = FactStore::new();
            let rels = ["is_a", "contrasts_with", "analogous_to"];
            for (insert, a, b, dom, rel) in ops {
                let da = d(&format!("d{dom}"));
                let db = d(&format!("d{}", (dom + 1) % 3));
                let (a, b) = (format!("c{a}"), format!("c{b}"));
                let fact = match rels[rel as usize] {
                    "analogous_to" => Fact::cross("analogous_to", &a, &b, da, db),
                    r => Fact::intra(r, &a, &b, da),
                };
                if insert { s.assert_fact(&fact).unwrap(); } else { s.retract_fact(&fact).unwrap(); }
                prop_assert!(s.index_coherent());
            }
            let sum: usize = s.stats().facts_per_domain.values().sum();
            prop_assert!(sum >= s.len());
        }
    }
}
