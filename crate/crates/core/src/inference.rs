//! Closure materialization and recursive queries.
//!
//! Materialization computes, per domain, the least fixpoint of:
//!
//! ```text
//! R_star(x, y, d) <- R(x, y, d)                         transitive R
//! R_star(x, z, d) <- R(x, y, d), R_star(y, z, d)        transitive R
//! R(y, x, d)      <- R(x, y, d)                         symmetric R
//! R(x, x, d)      <- R(x, y, d)   (and for y)           reflexive R
//! A(x, a, d)      <- C(x, y, d), A(y, a, d)             A inherits via C
//! ```
//!
//! plus the swapped orientation of every cross-domain and fusion fact of a
//! symmetric relation. Evaluation is semi-naive: each round joins only the
//! facts that were new in the previous round. Every rule binds a single domain,
//! so domains are evaluated independently (in parallel with the `parallel`
//! feature) and merged in domain order.
//!
//! A fact first produced in round `k` has derivation depth `k`, so the
//! provenance recorded at that point is a minimal-depth derivation; among
//! several candidates in the same round the one with the lexicographically
//! smallest premise list wins.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::domain::DomainExpr;
use crate::fact::{Fact, FactPattern};
use crate::graph::Digraph;
use crate::relation::{
    star_name, RelationShape, RelationSpec, ANALOGY_RELATION, ATTRIBUTE_RELATION,
    PREREQUISITE_RELATION,
};
use crate::store::FactStore;
use crate::symbol::ConceptId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InferenceError {
    #[error("cycle in acyclic relation `{relation}` within \"{domain}\": {}", render_cycle(.vertices))]
    Cycle {
        relation: String,
        domain: DomainExpr,
        vertices: Vec<ConceptId>,
    },
    #[error("relation `{0}` is not transitive")]
    NotTransitive(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("`{0}` is neither asserted nor derivable")]
    NotDerivable(Fact),
    #[error("closure is out of date; materialize again")]
    StaleClosure,
}

pub(crate) fn render_cycle(vertices: &[ConceptId]) -> String {
    let mut parts: Vec<&str> = vertices.iter().map(|v| v.as_str()).collect();
    if let Some(first) = vertices.first() {
        parts.push(first.as_str());
    }
    parts.join(" -> ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    TransitiveBase,
    TransitiveStep,
    Symmetric,
    Reflexive,
    Inheritance,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::TransitiveBase => "transitive-base",
            Rule::TransitiveStep => "transitive-step",
            Rule::Symmetric => "symmetric",
            Rule::Reflexive => "reflexive",
            Rule::Inheritance => "inheritance",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How a derived fact was first obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub rule: Rule,
    pub premises: Vec<Fact>,
    pub depth: u32,
}

/// Proof tree for a fact. Asserted facts are leaves with no rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationTrace {
    pub fact: Fact,
    pub rule: Option<Rule>,
    pub premises: Vec<DerivationTrace>,
}

impl DerivationTrace {
    pub fn is_leaf(&self) -> bool {
        self.rule.is_none()
    }

    /// Height of the tree; an asserted fact has depth 0.
    pub fn depth(&self) -> usize {
        self.premises
            .iter()
            .map(|p| p.depth() + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn leaves(&self) -> Vec<&Fact> {
        if self.is_leaf() {
            return vec![&self.fact];
        }
        self.premises.iter().flat_map(|p| p.leaves()).collect()
    }

    /// Indented tree, one fact per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, indent: usize) {
        use std::fmt::Write;
        let label = self.rule.map_or("asserted", Rule::name);
        let _ = writeln!(
            out,
            "{:indent$}{}  [{label}]",
            "",
            self.fact,
            indent = indent * 2
        );
        for p in &self.premises {
            p.render_into(out, indent + 1);
        }
    }
}

/// How per-domain closure work is scheduled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

/// Facts derived from a store snapshot, with provenance. Never contains an
/// asserted fact.
#[derive(Debug, Clone, Default)]
pub struct ClosureSet {
    generation: u64,
    entries: Vec<(Fact, Provenance)>,
    lookup: HashMap<Fact, usize>,
    by_relation: HashMap<String, Vec<usize>>,
    by_domain: HashMap<String, HashMap<DomainExpr, Vec<usize>>>,
}

impl PartialEq for ClosureSet {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Eq for ClosureSet {}

impl ClosureSet {
    fn build(generation: u64, mut entries: Vec<(Fact, Provenance)>) -> Self {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut closure = ClosureSet {
            generation,
            ..Default::default()
        };
        for (i, (fact, _)) in entries.iter().enumerate() {
            closure.lookup.insert(fact.clone(), i);
            closure
                .by_relation
                .entry(fact.relation().to_string())
                .or_default()
                .push(i);
            let per_domain = closure
                .by_domain
                .entry(fact.relation().to_string())
                .or_default();
            for d in fact.domains() {
                per_domain.entry(d.clone()).or_default().push(i);
            }
        }
        closure.entries = entries;
        closure
    }

    /// Store generation this closure was computed from.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn is_current(&self, store: &FactStore) -> bool {
        self.generation == store.generation()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.lookup.contains_key(fact)
    }

    pub fn provenance(&self, fact: &Fact) -> Option<&Provenance> {
        self.lookup.get(fact).map(|&i| &self.entries[i].1)
    }

    /// Derived facts in sorted order.
    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.entries.iter().map(|(f, _)| f)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Fact, &Provenance)> {
        self.entries.iter().map(|(f, p)| (f, p))
    }

    /// Derived facts whose predicate is `name` (e.g. `is_a_star`).
    pub fn facts_of<'a>(&'a self, name: &str) -> impl Iterator<Item = &'a Fact> + 'a {
        self.by_relation
            .get(name)
            .into_iter()
            .flatten()
            .map(|&i| &self.entries[i].0)
    }

    pub fn facts_in<'a>(
        &'a self,
        name: &str,
        domain: &DomainExpr,
    ) -> impl Iterator<Item = &'a Fact> + 'a {
        self.by_domain
            .get(name)
            .and_then(|m| m.get(domain))
            .into_iter()
            .flatten()
            .map(|&i| &self.entries[i].0)
    }

    /// Derived facts matching `pattern` (whose relation may be a `_star` name).
    pub fn matching<'a>(&'a self, pattern: &'a FactPattern) -> impl Iterator<Item = &'a Fact> + 'a {
        let candidates: Box<dyn Iterator<Item = &Fact>> = match &pattern.domain {
            Some(d) => Box::new(self.facts_in(&pattern.relation, d)),
            None => Box::new(self.facts_of(&pattern.relation)),
        };
        candidates.filter(move |f| pattern.matches(f))
    }
}

/// Materializes with the default execution strategy.
pub fn materialize(store: &FactStore) -> Result<ClosureSet, InferenceError> {
    materialize_with(store, Execution::default())
}

pub fn materialize_with(
    store: &FactStore,
    execution: Execution,
) -> Result<ClosureSet, InferenceError> {
    ensure_acyclic(store)?;
    let program = Program::compile(store);
    let jobs = program.jobs(store);

    let per_domain: Vec<Vec<(Fact, Provenance)>> = match execution {
        Execution::Sequential => jobs.iter().map(|job| program.run(job)).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            jobs.par_iter().map(|job| program.run(job)).collect()
        }
    };

    let mut entries: Vec<(Fact, Provenance)> = per_domain.into_iter().flatten().collect();
    entries.extend(symmetric_cross_completion(store));
    Ok(ClosureSet::build(store.generation(), entries))
}

fn symmetric_cross_completion(store: &FactStore) -> Vec<(Fact, Provenance)> {
    let mut out = Vec::new();
    for spec in store.registry().iter() {
        if !spec.symmetric || spec.shape == RelationShape::Intra {
            continue;
        }
        for fact in store.facts_of(&spec.name) {
            let swapped = fact.swapped();
            if swapped != *fact && !store.is_stored(&swapped) {
                out.push((
                    swapped,
                    Provenance {
                        rule: Rule::Symmetric,
                        premises: vec![fact.clone()],
                        depth: 1,
                    },
                ));
            }
        }
    }
    out
}

/// Fails on the first cycle (including self-loops) in an acyclic relation.
pub fn ensure_acyclic(store: &FactStore) -> Result<(), InferenceError> {
    for spec in store.registry().iter().filter(|s| s.acyclic) {
        for domain in store.domains_of(&spec.name) {
            let local = LocalGraph::build(store.facts_in(&spec.name, &domain));
            if let Some(cycle) = local.first_cycle() {
                return Err(InferenceError::Cycle {
                    relation: spec.name.clone(),
                    domain,
                    vertices: cycle,
                });
            }
        }
    }
    Ok(())
}

/// One relation's edges within one domain, with dense vertex ids assigned in
/// symbol order.
pub(crate) struct LocalGraph {
    pub concepts: Vec<ConceptId>,
    pub graph: Digraph,
    pub edges: Vec<(u32, u32)>,
}

impl LocalGraph {
    pub fn build<'a>(facts: impl IntoIterator<Item = &'a Fact>) -> Self {
        let pairs: Vec<(&ConceptId, &ConceptId)> = facts
            .into_iter()
            .map(|f| (f.subject(), f.object()))
            .collect();
        let mut concepts: Vec<ConceptId> = pairs
            .iter()
            .flat_map(|(a, b)| [(*a).clone(), (*b).clone()])
            .collect();
        concepts.sort();
        concepts.dedup();
        let id = |c: &ConceptId| concepts.binary_search(c).unwrap() as u32;
        let edges: Vec<(u32, u32)> = pairs.iter().map(|(a, b)| (id(a), id(b))).collect();
        let graph = Digraph::new(concepts.len(), edges.iter().copied());
        LocalGraph {
            concepts,
            graph,
            edges,
        }
    }

    pub fn id(&self, c: &ConceptId) -> Option<u32> {
        self.concepts.binary_search(c).ok().map(|i| i as u32)
    }

    pub fn self_loops(&self) -> Vec<ConceptId> {
        let mut out: Vec<_> = self
            .edges
            .iter()
            .filter(|(a, b)| a == b)
            .map(|&(a, _)| self.concepts[a as usize].clone())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn cycles(&self) -> Vec<Vec<ConceptId>> {
        self.graph
            .cycles()
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(|v| self.concepts[v as usize].clone())
                    .collect()
            })
            .collect()
    }

    fn first_cycle(&self) -> Option<Vec<ConceptId>> {
        if let Some(v) = self.self_loops().into_iter().next() {
            return Some(vec![v]);
        }
        self.cycles().into_iter().next()
    }
}

type PredId = usize;
type Atom = (PredId, u32, u32);

#[derive(Debug, Clone, Copy)]
enum CompiledRule {
    Symmetric { pred: PredId },
    Reflexive { pred: PredId },
    TransitiveBase { star: PredId, base: PredId },
    TransitiveStep { star: PredId, base: PredId },
    Inheritance { target: PredId, carrier: PredId },
}

impl CompiledRule {
    fn rule(self) -> Rule {
        match self {
            CompiledRule::Symmetric { .. } => Rule::Symmetric,
            CompiledRule::Reflexive { .. } => Rule::Reflexive,
            CompiledRule::TransitiveBase { .. } => Rule::TransitiveBase,
            CompiledRule::TransitiveStep { .. } => Rule::TransitiveStep,
            CompiledRule::Inheritance { .. } => Rule::Inheritance,
        }
    }
}

/// Intra-domain rules compiled against the registry.
struct Program {
    /// Predicate names; stored relations first, then `_star` predicates.
    preds: Vec<Arc<str>>,
    /// Number of predicates backed by stored relations.
    stored: usize,
    rules: Vec<CompiledRule>,
}

struct DomainJob {
    domain: DomainExpr,
    facts: Vec<(PredId, ConceptId, ConceptId)>,
}

impl Program {
    fn compile(store: &FactStore) -> Self {
        let registry = store.registry();
        let mut involved: BTreeSet<&str> = BTreeSet::new();
        for spec in registry.iter().filter(|s| s.shape == RelationShape::Intra) {
            if spec.transitive || spec.symmetric || spec.reflexive {
                involved.insert(&spec.name);
            }
            if let Some(carrier) = &spec.inherits_via {
                involved.insert(&spec.name);
                involved.insert(carrier);
            }
        }
        let mut preds: Vec<Arc<str>> = involved.iter().map(|n| Arc::from(*n)).collect();
        let stored = preds.len();
        let pred_of = |name: &str| preds.iter().position(|p| &**p == name);

        let mut rules = Vec::new();
        let mut stars = Vec::new();
        for (id, name) in involved.iter().enumerate() {
            let spec: &RelationSpec = registry.get(name).expect("registered");
            if spec.symmetric {
                rules.push(CompiledRule::Symmetric { pred: id });
            }
            if spec.reflexive {
                rules.push(CompiledRule::Reflexive { pred: id });
            }
            if let Some(carrier) = &spec.inherits_via {
                let carrier = pred_of(carrier).expect("carrier compiled");
                rules.push(CompiledRule::Inheritance {
                    target: id,
                    carrier,
                });
            }
            if spec.transitive {
                stars.push((id, star_name(name)));
            }
        }
        for (base, name) in stars {
            let star = preds.len();
            preds.push(Arc::from(name.as_str()));
            rules.push(CompiledRule::TransitiveBase { star, base });
            rules.push(CompiledRule::TransitiveStep { star, base });
        }
        Program {
            preds,
            stored,
            rules,
        }
    }

    fn jobs(&self, store: &FactStore) -> Vec<DomainJob> {
        let mut by_domain: BTreeMap<DomainExpr, Vec<(PredId, ConceptId, ConceptId)>> =
            BTreeMap::new();
        for (pred, name) in self.preds[..self.stored].iter().enumerate() {
            for fact in store.facts_of(name) {
                by_domain
                    .entry(fact.primary_domain().clone())
                    .or_default()
                    .push((pred, fact.subject().clone(), fact.object().clone()));
            }
        }
        by_domain
            .into_iter()
            .map(|(domain, facts)| DomainJob { domain, facts })
            .collect()
    }

    /// Semi-naive fixpoint for one domain.
    fn run(&self, job: &DomainJob) -> Vec<(Fact, Provenance)> {
        let mut concepts: Vec<ConceptId> = job
            .facts
            .iter()
            .flat_map(|(_, a, b)| [a.clone(), b.clone()])
            .collect();
        concepts.sort();
        concepts.dedup();
        let id = |c: &ConceptId| concepts.binary_search(c).unwrap() as u32;

        let mut state = Relations::new(self.preds.len());
        let mut delta: Vec<Atom> = Vec::new();
        for (pred, a, b) in &job.facts {
            let atom = (*pred, id(a), id(b));
            if state.insert(atom) {
                delta.push(atom);
            }
        }

        let mut derived: Vec<(Atom, Rule, Vec<Atom>, u32)> = Vec::new();
        let mut round = 0u32;
        while !delta.is_empty() {
            round += 1;
            let delta_set = Relations::from_atoms(self.preds.len(), &delta);
            let mut candidates: HashMap<Atom, (Vec<Atom>, Rule)> = HashMap::new();
            let mut offer = |head: Atom, premises: Vec<Atom>, rule: Rule| {
                if state.contains(head) {
                    return;
                }
                let better = match candidates.get(&head) {
                    None => true,
                    Some((best, _)) => self.premise_key(&premises) < self.premise_key(best),
                };
                if better {
                    candidates.insert(head, (premises, rule));
                }
            };
            for &rule in &self.rules {
                match rule {
                    CompiledRule::Symmetric { pred } => {
                        for &(x, y) in delta_set.pairs(pred) {
                            offer((pred, y, x), vec![(pred, x, y)], Rule::Symmetric);
                        }
                    }
                    CompiledRule::Reflexive { pred } => {
                        for &(x, y) in delta_set.pairs(pred) {
                            offer((pred, x, x), vec![(pred, x, y)], Rule::Reflexive);
                            offer((pred, y, y), vec![(pred, x, y)], Rule::Reflexive);
                        }
                    }
                    CompiledRule::TransitiveBase { star, base } => {
                        for &(x, y) in delta_set.pairs(base) {
                            offer((star, x, y), vec![(base, x, y)], Rule::TransitiveBase);
                        }
                    }
                    CompiledRule::TransitiveStep { star, base } => {
                        // star(x,z) <- base(x,y), star(y,z)
                        self.join(
                            &delta_set,
                            &state,
                            base,
                            star,
                            rule.rule(),
                            star,
                            &mut offer,
                        );
                    }
                    CompiledRule::Inheritance { target, carrier } => {
                        // target(x,a) <- carrier(x,y), target(y,a)
                        self.join(
                            &delta_set,
                            &state,
                            carrier,
                            target,
                            rule.rule(),
                            target,
                            &mut offer,
                        );
                    }
                }
            }
            delta.clear();
            let mut fresh: Vec<_> = candidates.into_iter().collect();
            fresh.sort_by_key(|c| c.0);
            for (head, (premises, rule)) in fresh {
                state.insert(head);
                delta.push(head);
                derived.push((head, rule, premises, round));
            }
        }

        let to_fact = |(pred, x, y): Atom| Fact::Intra {
            relation: self.preds[pred].clone(),
            subject: concepts[x as usize].clone(),
            object: concepts[y as usize].clone(),
            domain: job.domain.clone(),
        };
        derived
            .into_iter()
            .map(|(head, rule, premises, depth)| {
                (
                    to_fact(head),
                    Provenance {
                        rule,
                        premises: premises.into_iter().map(to_fact).collect(),
                        depth,
                    },
                )
            })
            .collect()
    }

    /// Semi-naive evaluation of `head(x,z) <- left(x,y), right(y,z)`.
    #[allow(clippy::too_many_arguments)]
    fn join(
        &self,
        delta: &Relations,
        full: &Relations,
        left: PredId,
        right: PredId,
        rule: Rule,
        head: PredId,
        offer: &mut impl FnMut(Atom, Vec<Atom>, Rule),
    ) {
        for &(x, y) in delta.pairs(left) {
            for &z in full.successors(right, y) {
                offer((head, x, z), vec![(left, x, y), (right, y, z)], rule);
            }
        }
        for &(y, z) in delta.pairs(right) {
            for &x in full.predecessors(left, y) {
                offer((head, x, z), vec![(left, x, y), (right, y, z)], rule);
            }
        }
    }

    /// Orders premise lists the way the facts they denote would sort.
    /// Concept ids are assigned in symbol order, so comparing ids suffices.
    fn premise_key(&self, premises: &[Atom]) -> Vec<(&str, u32, u32)> {
        premises
            .iter()
            .map(|&(p, x, y)| (&*self.preds[p], x, y))
            .collect()
    }
}

/// Binary relations over dense ids, indexed both ways.
struct Relations {
    sets: Vec<HashSet<(u32, u32)>>,
    pairs: Vec<Vec<(u32, u32)>>,
    forward: Vec<HashMap<u32, Vec<u32>>>,
    backward: Vec<HashMap<u32, Vec<u32>>>,
}

impl Relations {
    fn new(preds: usize) -> Self {
        Relations {
            sets: vec![HashSet::new(); preds],
            pairs: vec![Vec::new(); preds],
            forward: vec![HashMap::new(); preds],
            backward: vec![HashMap::new(); preds],
        }
    }

    fn from_atoms(preds: usize, atoms: &[Atom]) -> Self {
        let mut r = Relations::new(preds);
        for &a in atoms {
            r.insert(a);
        }
        r
    }

    fn insert(&mut self, (p, x, y): Atom) -> bool {
        if !self.sets[p].insert((x, y)) {
            return false;
        }
        self.pairs[p].push((x, y));
        self.forward[p].entry(x).or_default().push(y);
        self.backward[p].entry(y).or_default().push(x);
        true
    }

    fn contains(&self, (p, x, y): Atom) -> bool {
        self.sets[p].contains(&(x, y))
    }

    fn pairs(&self, p: PredId) -> &[(u32, u32)] {
        &self.pairs[p]
    }

    fn successors(&self, p: PredId, x: u32) -> &[u32] {
        self.forward[p].get(&x).map_or(&[], Vec::as_slice)
    }

    fn predecessors(&self, p: PredId, y: u32) -> &[u32] {
        self.backward[p].get(&y).map_or(&[], Vec::as_slice)
    }
}

fn transitive_spec<'a>(
    store: &'a FactStore,
    relation: &str,
) -> Result<&'a RelationSpec, InferenceError> {
    let spec = store
        .registry()
        .get(relation)
        .ok_or_else(|| InferenceError::UnknownRelation(relation.to_string()))?;
    if !spec.transitive {
        return Err(InferenceError::NotTransitive(relation.to_string()));
    }
    Ok(spec)
}

/// Edge lists of one intra relation within one domain, following the
/// swapped orientation too when the relation is symmetric.
fn neighbours<'a>(
    store: &'a FactStore,
    spec: &RelationSpec,
    domain: &DomainExpr,
) -> HashMap<&'a ConceptId, Vec<&'a ConceptId>> {
    let mut adj: HashMap<&ConceptId, Vec<&ConceptId>> = HashMap::new();
    for f in store.facts_in(&spec.name, domain) {
        adj.entry(f.subject()).or_default().push(f.object());
        if spec.symmetric {
            adj.entry(f.object()).or_default().push(f.subject());
        }
    }
    adj
}

/// Every `y` with `R_star(from, y, domain)`, computed by depth-first search
/// over the store without materializing.
pub fn reachable_star(
    store: &FactStore,
    relation: &str,
    from: &ConceptId,
    domain: &DomainExpr,
) -> Result<BTreeSet<ConceptId>, InferenceError> {
    let spec = transitive_spec(store, relation)?;
    let adj = neighbours(store, spec, domain);
    let mut seen: BTreeSet<ConceptId> = BTreeSet::new();
    let mut stack: Vec<&ConceptId> = adj.get(from).cloned().unwrap_or_default();
    if spec.reflexive
        && store
            .facts_in(&spec.name, domain)
            .any(|f| f.subject() == from || f.object() == from)
    {
        seen.insert(from.clone());
    }
    while let Some(v) = stack.pop() {
        if seen.insert(v.clone()) {
            if let Some(next) = adj.get(v) {
                stack.extend(next.iter().copied());
            }
        }
    }
    Ok(seen)
}

/// Everything `target` transitively requires within `domain`, dependencies
/// first; ties are broken by symbol order.
pub fn all_prerequisites(
    store: &FactStore,
    target: &ConceptId,
    domain: &DomainExpr,
) -> Result<Vec<ConceptId>, InferenceError> {
    let local = LocalGraph::build(store.facts_in(PREREQUISITE_RELATION, domain));
    let Some(start) = local.id(target) else {
        return Ok(Vec::new());
    };
    let reachable = local.graph.reachable_from(start);
    let cycle_error = |mut vertices: Vec<ConceptId>| {
        vertices.sort();
        InferenceError::Cycle {
            relation: PREREQUISITE_RELATION.to_string(),
            domain: domain.clone(),
            vertices,
        }
    };
    if reachable.contains(&start) {
        let cycle = local
            .cycles()
            .into_iter()
            .find(|c| c.contains(target))
            .unwrap_or_else(|| vec![target.clone()]);
        return Err(cycle_error(cycle));
    }
    match local.graph.dependency_order(&reachable) {
        Ok(order) => Ok(order
            .into_iter()
            .map(|v| local.concepts[v as usize].clone())
            .collect()),
        Err(stuck) => Err(cycle_error(
            stuck
                .into_iter()
                .map(|v| local.concepts[v as usize].clone())
                .collect(),
        )),
    }
}

/// Direct and inherited attributes of `concept`, each paired with the
/// concept that carries it directly.
pub fn inherited_attributes(
    store: &FactStore,
    concept: &ConceptId,
    domain: &DomainExpr,
) -> BTreeSet<(ConceptId, ConceptId)> {
    let Some(spec) = store.registry().get(ATTRIBUTE_RELATION) else {
        return BTreeSet::new();
    };
    let mut sources: BTreeSet<ConceptId> = BTreeSet::from([concept.clone()]);
    if let Some(carrier) = spec
        .inherits_via
        .as_deref()
        .and_then(|c| store.registry().get(c))
    {
        let adj = neighbours(store, carrier, domain);
        let mut stack: Vec<&ConceptId> = adj.get(concept).cloned().unwrap_or_default();
        while let Some(v) = stack.pop() {
            if sources.insert(v.clone()) {
                if let Some(next) = adj.get(v) {
                    stack.extend(next.iter().copied());
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for source in &sources {
        let pattern = FactPattern::relation(ATTRIBUTE_RELATION)
            .with_subject(source.clone())
            .with_domain(domain.clone());
        for fact in store.match_pattern(&pattern).unwrap_or_default() {
            out.insert((fact.object().clone(), source.clone()));
        }
        if spec.symmetric {
            let reversed = FactPattern::relation(ATTRIBUTE_RELATION)
                .with_object(source.clone())
                .with_domain(domain.clone());
            for fact in store.match_pattern(&reversed).unwrap_or_default() {
                out.insert((fact.subject().clone(), source.clone()));
            }
        }
    }
    out
}

/// A counterpart found by [`analogy_search`]: `concept` in `source_domain`
/// corresponds to `counterpart` in `target_domain`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Analogy {
    pub counterpart: ConceptId,
    pub source_domain: DomainExpr,
    pub target_domain: DomainExpr,
}

/// Every analogy involving `concept`, in either stored orientation.
pub fn analogy_search(
    store: &FactStore,
    concept: &ConceptId,
    source_domain: Option<&DomainExpr>,
) -> BTreeSet<Analogy> {
    let mut out = BTreeSet::new();
    if !store.registry().contains(ANALOGY_RELATION) {
        return out;
    }
    let as_left = FactPattern::relation(ANALOGY_RELATION).with_subject(concept.clone());
    let as_right = FactPattern::relation(ANALOGY_RELATION).with_object(concept.clone());
    for pattern in [as_left, as_right] {
        for fact in store.match_pattern(&pattern).unwrap_or_default() {
            let oriented = if fact.subject() == concept {
                fact.clone()
            } else {
                fact.swapped()
            };
            if let Fact::Cross {
                right,
                left_domain,
                right_domain,
                ..
            } = oriented
            {
                if source_domain.is_none_or(|d| *d == left_domain) {
                    out.insert(Analogy {
                        counterpart: right,
                        source_domain: left_domain,
                        target_domain: right_domain,
                    });
                }
            }
        }
    }
    out
}

/// Proof tree for an asserted or derived fact.
pub fn explain(
    store: &FactStore,
    closure: &ClosureSet,
    fact: &Fact,
) -> Result<DerivationTrace, InferenceError> {
    if store.is_stored(fact) {
        return Ok(DerivationTrace {
            fact: fact.clone(),
            rule: None,
            premises: Vec::new(),
        });
    }
    if !closure.is_current(store) {
        return Err(InferenceError::StaleClosure);
    }
    let provenance = closure
        .provenance(fact)
        .ok_or_else(|| InferenceError::NotDerivable(fact.clone()))?;
    let premises = provenance
        .premises
        .iter()
        .map(|p| explain(store, closure, p))
        .collect::<Result<_, _>>()?;
    Ok(DerivationTrace {
        fact: fact.clone(),
        rule: Some(provenance.rule),
        premises,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::RelationSpec;

    fn d(s: &str) -> DomainExpr {
        s.parse().unwrap()
    }

    fn c(s: &str) -> ConceptId {
        ConceptId::new(s)
    }

    fn store_with(facts: &[Fact]) -> FactStore {
        let mut s = FactStore::new();
        for f in facts {
            s.assert_fact(f).unwrap();
        }
        s
    }

    #[test]
    fn one_transitive_step() {
        let s = store_with(&[
            Fact::intra("is_a", "a", "b", d("d")),
            Fact::intra("is_a", "b", "c", d("d")),
        ]);
        let closure = materialize(&s).unwrap();
        assert!(closure.contains(&Fact::intra("is_a_star", "a", "c", d("d"))));
        assert!(closure.contains(&Fact::intra("is_a_star", "a", "b", d("d"))));
        assert_eq!(closure.facts_of("is_a_star").count(), 3);
        assert!(!closure.contains(&Fact::intra("is_a_star", "a", "a", d("d"))));
    }

    #[test]
    fn quadratic_function_supertypes() {
        let s = store_with(&[
            Fact::intra(
                "is_a",
                "quadratic_function",
                "polynomial_function",
                d("math@algebra"),
            ),
            Fact::intra("is_a", "polynomial_function", "function", d("math@algebra")),
        ]);
        let closure = materialize(&s).unwrap();
        let supers: BTreeSet<_> = closure
            .facts_in("is_a_star", &d("math@algebra"))
            .filter(|f| f.subject().as_str() == "quadratic_function")
            .map(|f| f.object().clone())
            .collect();
        assert_eq!(
            supers,
            BTreeSet::from([c("function"), c("polynomial_function")])
        );
    }

    #[test]
    fn domains_stay_confined() {
        let s = store_with(&[
            Fact::intra("is_a", "a", "b", d("d1")),
            Fact::intra("is_a", "b", "c", d("d2")),
        ]);
        let closure = materialize(&s).unwrap();
        assert!(!closure
            .facts()
            .any(|f| f.subject().as_str() == "a" && f.object().as_str() == "c"));
        assert!(closure
            .facts_in("is_a_star", &d("d1"))
            .all(|f| f.primary_domain() == &d("d1")));
    }

    #[test]
    fn reachable_star_examples() {
        let s = store_with(&[
            Fact::intra("requires", "c", "b", d("d")),
            Fact::intra("requires", "b", "a", d("d")),
        ]);
        assert_eq!(
            reachable_star(&s, "requires", &c("c"), &d("d")).unwrap(),
            BTreeSet::from([c("a"), c("b")])
        );
        assert!(reachable_star(&s, "requires", &c("zzz"), &d("d"))
            .unwrap()
            .is_empty());
        assert_eq!(
            reachable_star(&s, "strategy", &c("c"), &d("d")),
            Err(InferenceError::NotTransitive("strategy".into()))
        );
    }

    #[test]
    fn prerequisites_in_dependency_order() {
        let s = store_with(&[
            Fact::intra("requires", "calculus", "algebra", d("hs")),
            Fact::intra("requires", "algebra", "arithmetic", d("hs")),
        ]);
        assert_eq!(
            all_prerequisites(&s, &c("calculus"), &d("hs")).unwrap(),
            vec![c("arithmetic"), c("algebra")]
        );
        assert!(all_prerequisites(&s, &c("arithmetic"), &d("hs"))
            .unwrap()
            .is_empty());
        assert!(all_prerequisites(&s, &c("unknown"), &d("hs"))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn prerequisites_diamond_tie_break() {
        let s = store_with(&[
            Fact::intra("requires", "a", "b", d("x")),
            Fact::intra("requires", "a", "c", d("x")),
            Fact::intra("requires", "b", "d", d("x")),
            Fact::intra("requires", "c", "d", d("x")),
        ]);
        assert_eq!(
            all_prerequisites(&s, &c("a"), &d("x")).unwrap(),
            vec![c("d"), c("b"), c("c")]
        );
    }

    #[test]
    fn prerequisite_cycle_is_an_error() {
        let s = store_with(&[
            Fact::intra("requires", "a", "b", d("x")),
            Fact::intra("requires", "b", "a", d("x")),
        ]);
        match all_prerequisites(&s, &c("a"), &d("x")) {
            Err(InferenceError::Cycle { vertices, .. }) => {
                assert_eq!(vertices, vec![c("a"), c("b")])
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(materialize(&s), Err(InferenceError::Cycle { .. })));
    }

    #[test]
    fn attribute_inheritance() {
        let s = store_with(&[
            Fact::intra("has_attribute", "Fruit", "edible", d("d")),
            Fact::intra("is_a", "Apple", "Fruit", d("d")),
        ]);
        assert_eq!(
            inherited_attributes(&s, &c("Apple"), &d("d")),
            BTreeSet::from([(c("edible"), c("Fruit"))])
        );
        assert_eq!(
            inherited_attributes(&s, &c("Fruit"), &d("d")),
            BTreeSet::from([(c("edible"), c("Fruit"))])
        );
        let closure = materialize(&s).unwrap();
        let derived = Fact::intra("has_attribute", "Apple", "edible", d("d"));
        assert_eq!(
            closure.provenance(&derived).unwrap().rule,
            Rule::Inheritance
        );
    }

    #[test]
    fn inheritance_keeps_every_source() {
        let s = store_with(&[
            Fact::intra("is_a", "x", "y", d("d")),
            Fact::intra("is_a", "y", "z", d("d")),
            Fact::intra("has_attribute", "x", "a1", d("d")),
            Fact::intra("has_attribute", "y", "a2", d("d")),
            Fact::intra("has_attribute", "z", "a3", d("d")),
            Fact::intra("has_attribute", "z", "a1", d("d")),
        ]);
        assert_eq!(
            inherited_attributes(&s, &c("x"), &d("d")),
            BTreeSet::from([
                (c("a1"), c("x")),
                (c("a1"), c("z")),
                (c("a2"), c("y")),
                (c("a3"), c("z")),
            ])
        );
    }

    #[test]
    fn analogy_found_in_both_orientations() {
        let s = store_with(&[
            Fact::cross(
                "analogous_to",
                "Neural_Network",
                "Brain",
                d("CS@ML"),
                d("Neuroscience@Cognition"),
            ),
            Fact::cross(
                "analogous_to",
                "Atom",
                "Solar_System",
                d("Physics@Atomic"),
                d("Astronomy@Planetary"),
            ),
        ]);
        let found = analogy_search(&s, &c("Brain"), None);
        assert_eq!(
            found,
            BTreeSet::from([Analogy {
                counterpart: c("Neural_Network"),
                source_domain: d("Neuroscience@Cognition"),
                target_domain: d("CS@ML"),
            }])
        );
        let atom = analogy_search(&s, &c("Atom"), Some(&d("Physics@Atomic")));
        assert_eq!(atom.len(), 1);
        assert_eq!(atom.first().unwrap().counterpart, c("Solar_System"));
        assert!(analogy_search(&s, &c("Atom"), Some(&d("Astronomy@Planetary"))).is_empty());
        assert!(analogy_search(&s, &c("nothing"), None).is_empty());
    }

    #[test]
    fn symmetric_completion() {
        let s = store_with(&[
            Fact::cross("analogous_to", "nn", "brain", d("CS@ML"), d("Neuro")),
            Fact::intra("contrasts_with", "supervised", "unsupervised", d("ml")),
            Fact::fusion("fuses_with", "ux", "tf", "spec", d("UX+Engineering")),
        ]);
        let closure = materialize(&s).unwrap();
        assert_eq!(closure.len(), 3);
        for f in s.iter() {
            let swapped = f.swapped();
            assert!(closure.contains(&swapped), "{swapped}");
            assert_eq!(closure.provenance(&swapped).unwrap().rule, Rule::Symmetric);
        }
        assert_eq!(materialize(&s).unwrap(), closure);
    }

    #[test]
    fn explain_traces() {
        let s = store_with(&[
            Fact::intra("is_a", "a", "b", d("d")),
            Fact::intra("is_a", "b", "c", d("d")),
        ]);
        let closure = materialize(&s).unwrap();
        let leaf = explain(&s, &closure, &Fact::intra("is_a", "a", "b", d("d"))).unwrap();
        assert!(leaf.is_leaf());
        assert_eq!(leaf.depth(), 0);

        let trace = explain(&s, &closure, &Fact::intra("is_a_star", "a", "c", d("d"))).unwrap();
        assert_eq!(trace.rule, Some(Rule::TransitiveStep));
        let cited: Vec<_> = trace.premises.iter().map(|p| p.fact.clone()).collect();
        assert_eq!(
            cited,
            vec![
                Fact::intra("is_a", "a", "b", d("d")),
                Fact::intra("is_a_star", "b", "c", d("d")),
            ]
        );
        assert!(trace.leaves().iter().all(|f| s.contains(f)));

        let missing = explain(&s, &closure, &Fact::intra("is_a_star", "c", "a", d("d")));
        assert!(matches!(missing, Err(InferenceError::NotDerivable(_))));
    }

    #[test]
    fn explain_depth_on_chains() {
        for n in 2..12usize {
            let facts: Vec<_> = (0..n - 1)
                .map(|i| {
                    Fact::intra(
                        "is_a",
                        &format!("x{i:02}"),
                        &format!("x{:02}", i + 1),
                        d("d"),
                    )
                })
                .collect();
            let s = store_with(&facts);
            let closure = materialize(&s).unwrap();
            let last = format!("x{:02}", n - 1);
            let trace = explain(
                &s,
                &closure,
                &Fact::intra("is_a_star", "x00", &last, d("d")),
            )
            .unwrap();
            // count of rule applications along the longest branch
            assert_eq!(trace.depth(), n - 1, "chain of {n} concepts");
        }
    }

    #[test]
    fn minimal_depth_prefers_shortcuts() {
        let s = store_with(&[
            Fact::intra("is_a", "a", "b", d("d")),
            Fact::intra("is_a", "b", "c", d("d")),
            Fact::intra("is_a", "c", "e", d("d")),
            Fact::intra("is_a", "a", "e", d("d")),
        ]);
        let closure = materialize(&s).unwrap();
        let p = closure
            .provenance(&Fact::intra("is_a_star", "a", "e", d("d")))
            .unwrap();
        assert_eq!(p.rule, Rule::TransitiveBase);
        assert_eq!(p.depth, 1);
    }

    #[test]
    fn reflexive_custom_relation() {
        let mut s = FactStore::new();
        s.register_relation(
            RelationSpec::intra("near")
                .transitive()
                .symmetric()
                .reflexive(),
        )
        .unwrap();
        s.assert_fact(&Fact::intra("near", "a", "b", d("d")))
            .unwrap();
        let closure = materialize(&s).unwrap();
        assert!(closure.contains(&Fact::intra("near", "a", "a", d("d"))));
        assert!(closure.contains(&Fact::intra("near", "b", "a", d("d"))));
        assert!(closure.contains(&Fact::intra("near_star", "b", "b", d("d"))));
        let lazy = reachable_star(&s, "near", &c("a"), &d("d")).unwrap();
        let eager: BTreeSet<_> = closure
            .facts_of("near_star")
            .filter(|f| f.subject().as_str() == "a")
            .map(|f| f.object().clone())
            .collect();
        assert_eq!(lazy, eager);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let mut facts = Vec::new();
        for dom in 0..8 {
            for i in 0..20 {
                facts.push(Fact::intra(
                    "is_a",
                    &format!("n{i}"),
                    &format!("n{}", (i * 7 + 3) % 20 + 20),
                    d(&format!("d{dom}")),
                ));
                facts.push(Fact::intra(
                    "has_attribute",
                    &format!("n{}", i + 20),
                    &format!("attr{i}"),
                    d(&format!("d{dom}")),
                ));
            }
        }
        let s = store_with(&facts);
        assert_eq!(
            materialize_with(&s, Execution::Sequential).unwrap(),
            materialize_with(&s, Execution::Parallel).unwrap()
        );
    }
}
