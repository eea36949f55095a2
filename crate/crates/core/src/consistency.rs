//! Knowledge-base validation.
//!
//! Errors are structural: cycles and self-loops in acyclic relations. The
//! same concept categorized differently under two domains is never an error;
//! such pairs are collected as separation witnesses. Domain names that look
//! like accidental variants of each other are reported as lints.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use crate::domain::DomainExpr;
use crate::fact::Fact;
use crate::inference::{render_cycle, LocalGraph};
use crate::kb_io::SourceSpan;
use crate::relation::RelationShape;
use crate::store::FactStore;
use crate::symbol::ConceptId;

/// Largest edit distance at which two distinct domains are flagged.
pub const NEAR_DUPLICATE_DISTANCE: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// Closed walk `vertices[0] -> vertices[1] -> ... -> vertices[0]`.
    Cycle { vertices: Vec<ConceptId> },
    /// `r(x, x, d)` in a relation that must be irreflexive.
    SelfLoop { concept: ConceptId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub relation: String,
    pub domain: DomainExpr,
    pub kind: ViolationKind,
    pub facts: Vec<Fact>,
}

impl Violation {
    pub fn description(&self) -> String {
        match &self.kind {
            ViolationKind::Cycle { vertices } => format!(
                "cycle in acyclic relation `{}`: {}",
                self.relation,
                render_cycle(vertices)
            ),
            ViolationKind::SelfLoop { concept } => format!(
                "`{}` relates `{concept}` to itself but is irreflexive",
                self.relation
            ),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error: {} in \"{}\"", self.description(), self.domain)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lint {
    CaseVariant {
        first: DomainExpr,
        second: DomainExpr,
    },
    NearDuplicate {
        first: DomainExpr,
        second: DomainExpr,
        distance: usize,
    },
    DuplicateFact {
        fact: Fact,
        span: SourceSpan,
    },
}

impl fmt::Display for Lint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lint::CaseVariant { first, second } => {
                write!(
                    f,
                    "warning: domains \"{first}\" and \"{second}\" differ only by case"
                )
            }
            Lint::NearDuplicate {
                first,
                second,
                distance,
            } => write!(
                f,
                "warning: domains \"{first}\" and \"{second}\" are {distance} edit(s) apart"
            ),
            Lint::DuplicateFact { fact, span } => {
                write!(f, "warning: {span}: duplicate fact {fact}")
            }
        }
    }
}

/// One concept categorized differently under two domains by the same relation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SeparationWitness {
    pub relation: String,
    pub concept: ConceptId,
    pub first: (ConceptId, DomainExpr),
    pub second: (ConceptId, DomainExpr),
}

impl fmt::Display for SeparationWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "separation: {}({}, {}) in \"{}\" and {}({}, {}) in \"{}\"",
            self.relation,
            self.concept,
            self.first.0,
            self.first.1,
            self.relation,
            self.concept,
            self.second.0,
            self.second.1
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConsistencyReport {
    pub errors: Vec<Violation>,
    pub warnings: Vec<Lint>,
    pub separation_witnesses: Vec<SeparationWitness>,
}

impl ConsistencyReport {
    /// True when the knowledge base may be materialized.
    pub fn is_consistent(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Validates a store without modifying it.
pub fn check(store: &FactStore) -> ConsistencyReport {
    ConsistencyReport {
        errors: structural_errors(store),
        warnings: domain_lints(store),
        separation_witnesses: separation_witnesses(store),
    }
}

/// The cycle `fact` would close if asserted, as `[subject, object, ..]`.
/// Only intra facts of acyclic relations can close one.
pub fn cycle_if_added(store: &FactStore, fact: &Fact) -> Option<Vec<ConceptId>> {
    let Fact::Intra {
        relation,
        subject,
        object,
        domain,
    } = fact
    else {
        return None;
    };
    if !store.registry().get(relation).is_some_and(|s| s.acyclic) {
        return None;
    }
    if subject == object {
        return Some(vec![subject.clone()]);
    }
    // Breadth-first from the object back to the subject: shortest closing path.
    let mut adj: HashMap<&ConceptId, Vec<&ConceptId>> = HashMap::new();
    for f in store.facts_in(relation, domain) {
        adj.entry(f.subject()).or_default().push(f.object());
    }
    let mut parent: HashMap<&ConceptId, &ConceptId> = HashMap::new();
    let mut queue = VecDeque::from([object]);
    parent.insert(object, object);
    while let Some(v) = queue.pop_front() {
        if v == subject {
            let mut path = vec![v.clone()];
            let mut cur = v;
            while cur != object {
                cur = parent[cur];
                path.push(cur.clone());
            }
            // path runs subject <- .. <- object; the new edge closes it
            path.push(subject.clone());
            path.reverse();
            path.pop();
            return Some(path);
        }
        let mut next = adj.get(v).cloned().unwrap_or_default();
        next.sort();
        for w in next {
            if !parent.contains_key(w) {
                parent.insert(w, v);
                queue.push_back(w);
            }
        }
    }
    None
}

fn structural_errors(store: &FactStore) -> Vec<Violation> {
    let mut errors = Vec::new();
    for spec in store.registry().iter().filter(|s| s.acyclic) {
        for domain in store.domains_of(&spec.name) {
            let local = LocalGraph::build(store.facts_in(&spec.name, &domain));
            let edge = |a: &ConceptId, b: &ConceptId| Fact::Intra {
                relation: spec.name.as_str().into(),
                subject: a.clone(),
                object: b.clone(),
                domain: domain.clone(),
            };
            for concept in local.self_loops() {
                errors.push(Violation {
                    relation: spec.name.clone(),
                    domain: domain.clone(),
                    facts: vec![edge(&concept, &concept)],
                    kind: ViolationKind::SelfLoop { concept },
                });
            }
            for vertices in local.cycles() {
                let facts = (0..vertices.len())
                    .map(|i| edge(&vertices[i], &vertices[(i + 1) % vertices.len()]))
                    .collect();
                errors.push(Violation {
                    relation: spec.name.clone(),
                    domain: domain.clone(),
                    facts,
                    kind: ViolationKind::Cycle { vertices },
                });
            }
        }
    }
    errors
}

fn domain_lints(store: &FactStore) -> Vec<Lint> {
    let domains: Vec<&DomainExpr> = store.domains().collect();
    let mut lints = Vec::new();
    for (i, a) in domains.iter().enumerate() {
        for b in &domains[i + 1..] {
            if a.folded() == b.folded() {
                lints.push(Lint::CaseVariant {
                    first: (*a).clone(),
                    second: (*b).clone(),
                });
                continue;
            }
            let distance = strsim::levenshtein(a.canonical(), b.canonical());
            if distance <= NEAR_DUPLICATE_DISTANCE {
                lints.push(Lint::NearDuplicate {
                    first: (*a).clone(),
                    second: (*b).clone(),
                    distance,
                });
            }
        }
    }
    lints
}

fn separation_witnesses(store: &FactStore) -> Vec<SeparationWitness> {
    let mut out = Vec::new();
    for spec in store
        .registry()
        .iter()
        .filter(|s| s.shape == RelationShape::Intra)
    {
        let mut by_subject: BTreeMap<&ConceptId, BTreeMap<&DomainExpr, Vec<&ConceptId>>> =
            BTreeMap::new();
        for fact in store.facts_of(&spec.name) {
            by_subject
                .entry(fact.subject())
                .or_default()
                .entry(fact.primary_domain())
                .or_default()
                .push(fact.object());
        }
        for (concept, per_domain) in by_subject {
            let domains: Vec<_> = per_domain
                .into_iter()
                .map(|(d, mut objects)| {
                    objects.sort();
                    (d, objects)
                })
                .collect();
            for (i, (d1, objs1)) in domains.iter().enumerate() {
                for (d2, objs2) in &domains[i + 1..] {
                    let pair = objs1
                        .iter()
                        .flat_map(|o1| objs2.iter().map(move |o2| (*o1, *o2)))
                        .find(|(o1, o2)| o1 != o2);
                    if let Some((o1, o2)) = pair {
                        out.push(SeparationWitness {
                            relation: spec.name.clone(),
                            concept: concept.clone(),
                            first: (o1.clone(), (*d1).clone()),
                            second: (o2.clone(), (*d2).clone()),
                        });
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> DomainExpr {
        s.parse().unwrap()
    }

    fn store_with(facts: &[Fact]) -> FactStore {
        let mut s = FactStore::new();
        for f in facts {
            s.assert_fact(f).unwrap();
        }
        s
    }

    #[test]
    fn apple_separation() {
        let s = store_with(&[
            Fact::intra("is_a", "Apple", "Fruit", d("Biology@Plant_Taxonomy")),
            Fact::intra("is_a", "Apple", "Company", d("Business@Tech_Sector")),
        ]);
        let report = check(&s);
        assert!(report.errors.is_empty());
        assert_eq!(report.separation_witnesses.len(), 1);
        let w = &report.separation_witnesses[0];
        assert_eq!(w.concept.as_str(), "Apple");
        assert_eq!(w.relation, "is_a");
    }

    #[test]
    fn two_cycle_reported() {
        let s = store_with(&[
            Fact::intra("requires", "a", "b", d("d")),
            Fact::intra("requires", "b", "a", d("d")),
        ]);
        let report = check(&s);
        assert_eq!(report.errors.len(), 1);
        let err = &report.errors[0];
        assert_eq!(
            err.kind,
            ViolationKind::Cycle {
                vertices: vec!["a".into(), "b".into()]
            }
        );
        assert!(err.description().contains("a -> b -> a"));
        assert!(err.facts.iter().all(|f| s.contains(f)));
    }

    #[test]
    fn self_loop_reported() {
        let s = store_with(&[Fact::intra("is_a", "x", "x", d("d"))]);
        let report = check(&s);
        assert_eq!(report.errors.len(), 1);
        assert!(matches!(
            report.errors[0].kind,
            ViolationKind::SelfLoop { .. }
        ));
        // non-acyclic relations may relate a concept to itself
        let ok = store_with(&[Fact::intra("cause_of", "x", "x", d("d"))]);
        assert!(check(&ok).is_consistent());
    }

    #[test]
    fn multiple_inheritance_is_fine() {
        let s = store_with(&[
            Fact::intra("is_a", "x", "A", d("d")),
            Fact::intra("is_a", "x", "B", d("d")),
        ]);
        let report = check(&s);
        assert!(report.errors.is_empty());
        assert!(report.warnings.is_empty());
        assert!(report.separation_witnesses.is_empty());
    }

    #[test]
    fn case_variant_lint() {
        let s = store_with(&[
            Fact::intra("is_a", "x", "y", d("math@algebra")),
            Fact::intra("is_a", "x", "y", d("Math@Algebra")),
        ]);
        let report = check(&s);
        // oracle: case-insensitive string comparison
        assert_eq!("math@algebra".to_lowercase(), "Math@Algebra".to_lowercase());
        assert_eq!(report.warnings.len(), 1);
        assert!(matches!(report.warnings[0], Lint::CaseVariant { .. }));
    }

    #[test]
    fn near_duplicate_lint() {
        let s = store_with(&[
            Fact::intra("is_a", "x", "y", d("biology@plants")),
            Fact::intra("is_a", "x", "z", d("biology@plant")),
            Fact::intra("is_a", "x", "w", d("chemistry@organic")),
        ]);
        let report = check(&s);
        assert_eq!(
            report.warnings,
            vec![Lint::NearDuplicate {
                first: d("biology@plant"),
                second: d("biology@plants"),
                distance: 1
            }]
        );
    }

    #[test]
    fn check_is_pure() {
        let s = store_with(&[
            Fact::intra("requires", "a", "b", d("d")),
            Fact::intra("requires", "b", "a", d("d")),
            Fact::intra("is_a", "a", "b", d("e")),
        ]);
        let before = s.clone();
        assert_eq!(check(&s), check(&s));
        assert_eq!(s, before);
    }

    #[test]
    fn cycle_if_added_finds_closing_path() {
        let s = store_with(&[
            Fact::intra("requires", "a", "b", d("d")),
            Fact::intra("requires", "b", "c", d("d")),
            Fact::intra("requires", "c", "a", d("other")),
        ]);
        let closing = Fact::intra("requires", "c", "a", d("d"));
        assert_eq!(
            cycle_if_added(&s, &closing),
            Some(vec!["c".into(), "a".into(), "b".into()])
        );
        assert_eq!(
            cycle_if_added(&s, &Fact::intra("requires", "a", "c", d("d"))),
            None
        );
        assert_eq!(
            cycle_if_added(&s, &Fact::intra("cause_of", "c", "a", d("d"))),
            None
        );
        assert_eq!(
            cycle_if_added(&s, &Fact::intra("is_a", "x", "x", d("d"))),
            Some(vec!["x".into()])
        );
    }

    proptest! {
        #[test]
        fn domain_separation(c in "[a-z]{1,6}", o1 in "[a-z]{1,6}", o2 in "[a-z]{1,6}",
                             d1 in "[a-z]{1,4}(@[a-z]{1,4})?", d2 in "[a-z]{1,4}(@[a-z]{1,4})?",
                             rel in prop::sample::select(vec!["is_a", "part_of", "requires", "cause_of", "strategy"])) {
            prop_assume!(o1 != o2 && d1 != d2);
            prop_assume!(c != o1 && c != o2);
            let s = store_with(&[
                Fact::intra(rel, &c, &o1, d(&d1)),
                Fact::intra(rel, &c, &o2, d(&d2)),
            ]);
            let report = check(&s);
            prop_assert!(report.errors.is_empty());
            prop_assert!(!report.separation_witnesses.is_empty());
        }
    }
}
