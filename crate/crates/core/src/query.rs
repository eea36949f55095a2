//! Single-goal query language.
//!
//! ```text
//! query := name '(' qterm (',' qterm)* ')'
//! qterm := atom | '?'name | '"' domain '"'
//! ```
//!
//! A leading `?-` and a trailing `.` are accepted and ignored, so queries can
//! be pasted from clause listings. Single-quoted atoms are accepted wherever
//! an atom is.
//!
//! Goals are registered relation names, `<rel>_star` for transitive
//! relations, and the three reserved goals:
//!
//! ```text
//! all_prerequisites(Concept, Domain, ?Prereq)
//! inherited_attributes(Concept, ?Attribute, ?Source, Domain)
//! analogy_search(Concept, ?Counterpart, SourceDomain, TargetDomain)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::domain::{is_atom, parse_domain, DomainExpr};
use crate::fact::{render_concept, render_domain, Fact, FactPattern};
use crate::inference::{
    all_prerequisites, inherited_attributes, materialize, reachable_star, ClosureSet,
    InferenceError,
};
use crate::relation::{
    star_name, GoalKind, RelationRegistry, RelationShape, RelationSpec, ANALOGY_RELATION,
    ATTRIBUTE_RELATION, PREREQUISITE_RELATION,
};
use crate::store::FactStore;
use crate::symbol::ConceptId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown goal `{name}` at offset {offset}")]
    UnknownGoal { name: String, offset: usize },
    #[error("`{goal}` takes {expected} arguments, found {found}")]
    Arity {
        goal: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("closure not materialized; run materialize first or disable strict mode")]
    Unmaterialized,
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

impl QueryError {
    /// Byte offset into the query text, when the error has one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            QueryError::Syntax { offset, .. }
            | QueryError::UnknownGoal { offset, .. }
            | QueryError::Arity { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DomainMode {
    /// Domain literals match by canonical equality.
    #[default]
    Exact,
    /// Facts filed under a prefix of the literal also match.
    PrefixInherit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryOptions {
    pub include_derived: bool,
    pub domain_mode: DomainMode,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            include_derived: true,
            domain_mode: DomainMode::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QueryTerm {
    Concept(ConceptId),
    Domain(DomainExpr),
    /// Index into [`Query::variables`].
    Var(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Concept,
    Domain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Goal {
    Relation(String),
    /// `<base>_star`.
    Star(String),
    AllPrerequisites,
    InheritedAttributes,
    AnalogySearch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub name: String,
    pub goal: Goal,
    pub args: Vec<QueryTerm>,
    /// Variable names including the leading `?`, in order of first appearance.
    pub variables: Vec<String>,
    pub options: QueryOptions,
}

impl Query {
    pub fn with_options(mut self, options: QueryOptions) -> Self {
        self.options = options;
        self
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| match a {
                QueryTerm::Concept(c) => render_concept(c.as_str()),
                QueryTerm::Domain(d) => render_domain(d),
                QueryTerm::Var(i) => self.variables[*i].clone(),
            })
            .collect();
        write!(f, "{}({})", self.name, args.join(", "))
    }
}

fn signature(shape: RelationShape) -> &'static [Slot] {
    use Slot::*;
    match shape {
        RelationShape::Intra => &[Concept, Concept, Domain],
        RelationShape::Cross => &[Concept, Concept, Domain, Domain],
        RelationShape::Fusion => &[Concept, Concept, Concept, Domain],
    }
}

fn goal_signature(goal: &GoalKind<'_>) -> &'static [Slot] {
    use Slot::*;
    match goal {
        GoalKind::Relation(spec) => signature(spec.shape),
        GoalKind::Star(_) => signature(RelationShape::Intra),
        GoalKind::AllPrerequisites => &[Concept, Domain, Concept],
        GoalKind::InheritedAttributes => &[Concept, Concept, Concept, Domain],
        GoalKind::AnalogySearch => &[Concept, Concept, Domain, Domain],
    }
}

enum RawTerm {
    Atom(String),
    Quoted(String),
    Str(String),
    Var(String),
}

struct Scanner<'a> {
    text: &'a str,
    pos: usize,
}

impl Scanner<'_> {
    fn rest(&self) -> &str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T, QueryError> {
        Err(QueryError::Syntax {
            offset,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn expect(&mut self, c: char) -> Result<(), QueryError> {
        self.skip_ws();
        match self.peek() {
            Some(found) if found == c => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(found) => self.err(self.pos, format!("expected `{c}`, found `{found}`")),
            None => self.err(self.pos, format!("expected `{c}`, found end of query")),
        }
    }

    fn word(&mut self, allow_dots: bool) -> String {
        let start = self.pos;
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() {
            let b = bytes[self.pos];
            let ok = b.is_ascii_alphanumeric()
                || b == b'_'
                || (allow_dots && self.pos > start && (b == b'-' || b == b'.'));
            if !ok {
                break;
            }
            self.pos += 1;
        }
        // A trailing `.` terminates the query rather than the atom.
        while allow_dots && self.text[start..self.pos].ends_with('.') {
            self.pos -= 1;
        }
        self.text[start..self.pos].to_string()
    }

    fn quoted(&mut self, delim: char) -> Result<String, QueryError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, other)) => out.push(other),
                    None => break,
                },
                c if c == delim => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                c => out.push(c),
            }
        }
        self.err(start, "unterminated quoted text")
    }

    fn term(&mut self) -> Result<(RawTerm, usize), QueryError> {
        self.skip_ws();
        let start = self.pos;
        let term = match self.peek() {
            Some('?') => {
                self.pos += 1;
                let name = self.word(false);
                if name.is_empty() {
                    return self.err(start, "expected a variable name after `?`");
                }
                RawTerm::Var(format!("?{name}"))
            }
            Some('"') => RawTerm::Str(self.quoted('"')?),
            Some('\'') => RawTerm::Quoted(self.quoted('\'')?),
            Some(c) if c.is_ascii_alphanumeric() || c == '_' => RawTerm::Atom(self.word(true)),
            Some(c) => return self.err(start, format!("expected a term, found `{c}`")),
            None => return self.err(start, "expected a term, found end of query"),
        };
        Ok((term, start))
    }
}

/// Parses query text against the goals known to `registry`.
pub fn parse_query(text: &str, registry: &RelationRegistry) -> Result<Query, QueryError> {
    let mut s = Scanner { text, pos: 0 };
    s.skip_ws();
    if s.rest().starts_with("?-") {
        s.pos += 2;
        s.skip_ws();
    }
    let name_start = s.pos;
    if !s.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
        return match s.peek() {
            None => s.err(s.pos, "empty query"),
            Some(c) => s.err(s.pos, format!("expected a goal name, found `{c}`")),
        };
    }
    let name = s.word(false);
    let goal_kind = registry
        .resolve_goal(&name)
        .ok_or_else(|| QueryError::UnknownGoal {
            name: name.clone(),
            offset: name_start,
        })?;
    s.expect('(')?;
    let mut raw = vec![s.term()?];
    loop {
        s.skip_ws();
        match s.peek() {
            Some(',') => {
                s.pos += 1;
                raw.push(s.term()?);
            }
            Some(')') => {
                s.pos += 1;
                break;
            }
            Some(c) => return s.err(s.pos, format!("expected `,` or `)`, found `{c}`")),
            None => return s.err(s.pos, "expected `)`, found end of query"),
        }
    }
    s.skip_ws();
    if s.peek() == Some('.') {
        s.pos += 1;
        s.skip_ws();
    }
    if let Some(c) = s.peek() {
        return s.err(s.pos, format!("unexpected `{c}` after query"));
    }

    let slots = goal_signature(&goal_kind);
    if raw.len() != slots.len() {
        return Err(QueryError::Arity {
            goal: name,
            expected: slots.len(),
            found: raw.len(),
            offset: name_start,
        });
    }

    let mut variables: Vec<String> = Vec::new();
    let mut args = Vec::with_capacity(raw.len());
    for ((term, offset), slot) in raw.into_iter().zip(slots) {
        let arg = match (term, slot) {
            (RawTerm::Var(v), _) => {
                let index = variables.iter().position(|x| *x == v).unwrap_or_else(|| {
                    variables.push(v);
                    variables.len() - 1
                });
                QueryTerm::Var(index)
            }
            (RawTerm::Atom(a) | RawTerm::Quoted(a), Slot::Concept) => {
                QueryTerm::Concept(ConceptId::new(&a))
            }
            (RawTerm::Str(d), Slot::Concept) => {
                return s.err(
                    offset,
                    format!("expected a concept, found domain string \"{d}\""),
                )
            }
            (RawTerm::Atom(d) | RawTerm::Quoted(d) | RawTerm::Str(d), Slot::Domain) => {
                let content = if is_atom(&d) && !text[offset..].starts_with(['"', '\'']) {
                    offset
                } else {
                    offset + 1
                };
                match parse_domain(&d) {
                    Ok(domain) => QueryTerm::Domain(domain),
                    Err(e) => {
                        return s.err(content + e.offset(), format!("invalid domain \"{d}\": {e}"))
                    }
                }
            }
        };
        args.push(arg);
    }

    let goal = match goal_kind {
        GoalKind::Relation(spec) => Goal::Relation(spec.name.clone()),
        GoalKind::Star(spec) => Goal::Star(spec.name.clone()),
        GoalKind::AllPrerequisites => Goal::AllPrerequisites,
        GoalKind::InheritedAttributes => Goal::InheritedAttributes,
        GoalKind::AnalogySearch => Goal::AnalogySearch,
    };
    Ok(Query {
        name,
        goal,
        args,
        variables,
        options: QueryOptions::default(),
    })
}

/// A bound value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Concept(ConceptId),
    Domain(DomainExpr),
}

impl Value {
    /// Unquoted text.
    pub fn text(&self) -> &str {
        match self {
            Value::Concept(c) => c.as_str(),
            Value::Domain(d) => d.canonical(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Concept(c) => f.write_str(&render_concept(c.as_str())),
            Value::Domain(d) => f.write_str(&render_domain(d)),
        }
    }
}

/// Deduplicated solutions, sorted by their rendered values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BindingSet {
    pub variables: Vec<String>,
    pub solutions: Vec<Vec<Value>>,
}

impl BindingSet {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    /// Values bound to `variable` across all solutions, in solution order.
    pub fn column(&self, variable: &str) -> Vec<&Value> {
        match self.variables.iter().position(|v| v == variable) {
            Some(i) => self.solutions.iter().map(|s| &s[i]).collect(),
            None => Vec::new(),
        }
    }

    /// `?X = a, ?Y = b` for one solution; `true` when the query has no variables.
    pub fn render_solution(&self, solution: &[Value]) -> String {
        if self.variables.is_empty() {
            return "true".into();
        }
        self.variables
            .iter()
            .zip(solution)
            .map(|(var, value)| format!("{var} = {value}"))
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn to_map(&self, solution: &[Value]) -> BTreeMap<String, String> {
        self.variables
            .iter()
            .zip(solution)
            .map(|(var, value)| (var.clone(), value.text().to_string()))
            .collect()
    }

    fn from_rows(variables: Vec<String>, rows: impl IntoIterator<Item = Vec<Value>>) -> Self {
        let mut keyed: Vec<(Vec<String>, Vec<Value>)> = rows
            .into_iter()
            .map(|row| (row.iter().map(|v| v.to_string()).collect(), row))
            .collect();
        keyed.sort();
        keyed.dedup();
        BindingSet {
            variables,
            solutions: keyed.into_iter().map(|(_, row)| row).collect(),
        }
    }
}

impl fmt::Display for BindingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for solution in &self.solutions {
            writeln!(f, "{}", self.render_solution(solution))?;
        }
        Ok(())
    }
}

fn fact_row(fact: &Fact) -> Vec<Value> {
    match fact {
        Fact::Intra {
            subject,
            object,
            domain,
            ..
        } => vec![
            Value::Concept(subject.clone()),
            Value::Concept(object.clone()),
            Value::Domain(domain.clone()),
        ],
        Fact::Cross {
            left,
            right,
            left_domain,
            right_domain,
            ..
        } => vec![
            Value::Concept(left.clone()),
            Value::Concept(right.clone()),
            Value::Domain(left_domain.clone()),
            Value::Domain(right_domain.clone()),
        ],
        Fact::Fusion {
            left,
            right,
            fused,
            domain,
            ..
        } => vec![
            Value::Concept(left.clone()),
            Value::Concept(right.clone()),
            Value::Concept(fused.clone()),
            Value::Domain(domain.clone()),
        ],
    }
}

struct Matcher<'q> {
    query: &'q Query,
}

impl Matcher<'_> {
    fn domain_admits(&self, literal: &DomainExpr, have: &DomainExpr) -> bool {
        match self.query.options.domain_mode {
            DomainMode::Exact => literal == have,
            DomainMode::PrefixInherit => have.is_prefix_of(literal),
        }
    }

    /// Unifies one candidate row with the query arguments.
    fn unify(&self, row: &[Value]) -> Option<Vec<Value>> {
        let mut bound: Vec<Option<&Value>> = vec![None; self.query.variables.len()];
        for (arg, value) in self.query.args.iter().zip(row) {
            match (arg, value) {
                (QueryTerm::Var(i), v) => match bound[*i] {
                    Some(prev) if prev != v => return None,
                    _ => bound[*i] = Some(v),
                },
                (QueryTerm::Concept(c), Value::Concept(have)) if c == have => {}
                (QueryTerm::Domain(d), Value::Domain(have)) if self.domain_admits(d, have) => {}
                _ => return None,
            }
        }
        bound.into_iter().map(|v| v.cloned()).collect()
    }

    fn concept_at(&self, i: usize) -> Option<&ConceptId> {
        match &self.query.args[i] {
            QueryTerm::Concept(c) => Some(c),
            _ => None,
        }
    }

    /// Exact-mode domain constant at `i`, usable as an index key.
    fn exact_domain_at(&self, i: usize) -> Option<&DomainExpr> {
        match (&self.query.args[i], self.query.options.domain_mode) {
            (QueryTerm::Domain(d), DomainMode::Exact) => Some(d),
            _ => None,
        }
    }

    /// Candidate domains of `relation` for the domain argument at `i`.
    fn domains_for(&self, store: &FactStore, relation: &str, i: usize) -> Vec<DomainExpr> {
        store
            .domains_of(relation)
            .into_iter()
            .filter(|have| match &self.query.args[i] {
                QueryTerm::Domain(d) => self.domain_admits(d, have),
                _ => true,
            })
            .collect()
    }

    fn pattern(&self, relation: &str, shape: RelationShape) -> FactPattern {
        let mut p = FactPattern::relation(relation);
        p.subject = self.concept_at(0).cloned();
        p.object = self.concept_at(1).cloned();
        match shape {
            RelationShape::Intra => p.domain = self.exact_domain_at(2).cloned(),
            RelationShape::Cross => {
                p.domain = self.exact_domain_at(2).cloned();
                p.second_domain = self.exact_domain_at(3).cloned();
            }
            RelationShape::Fusion => {
                p.fused = self.concept_at(2).cloned();
                p.domain = self.exact_domain_at(3).cloned();
            }
        }
        p
    }
}

fn has_derivations(spec: &RelationSpec) -> bool {
    spec.symmetric || spec.reflexive || spec.inherits_via.is_some()
}

/// Evaluates `query` over the asserted facts of `store` and, when derived
/// facts are included, over `closure`.
///
/// A missing or stale closure is an error in `strict` mode; otherwise derived
/// facts are computed on demand.
pub fn eval_query(
    query: &Query,
    store: &FactStore,
    closure: Option<&ClosureSet>,
    strict: bool,
) -> Result<BindingSet, QueryError> {
    let m = Matcher { query };
    let derived = query.options.include_derived;
    let registry = store.registry();
    let current = closure.filter(|c| c.is_current(store));

    let needs_closure = derived
        && match &query.goal {
            Goal::Relation(name) => registry.get(name).is_some_and(has_derivations),
            Goal::Star(_) | Goal::AllPrerequisites | Goal::InheritedAttributes => true,
            Goal::AnalogySearch => false,
        };
    if needs_closure && strict && current.is_none() {
        return Err(QueryError::Unmaterialized);
    }

    let mut rows: Vec<Vec<Value>> = Vec::new();
    match &query.goal {
        Goal::Relation(name) => {
            let Some(spec) = registry.get(name) else {
                return Ok(BindingSet::from_rows(query.variables.clone(), rows));
            };
            let pattern = m.pattern(name, spec.shape);
            rows.extend(
                store
                    .match_pattern(&pattern)
                    .unwrap_or_default()
                    .into_iter()
                    .map(fact_row),
            );
            if needs_closure {
                let owned;
                let closure = match current {
                    Some(c) => c,
                    None => {
                        owned = materialize(store)?;
                        &owned
                    }
                };
                rows.extend(closure.matching(&pattern).map(fact_row));
            }
        }
        Goal::Star(base) => {
            let star = star_name(base);
            if !derived {
                // Asserted-only: the direct edges.
                let pattern = m.pattern(base, RelationShape::Intra);
                rows.extend(
                    store
                        .match_pattern(&pattern)
                        .unwrap_or_default()
                        .into_iter()
                        .map(fact_row),
                );
            } else if let Some(closure) = current {
                let pattern = m.pattern(&star, RelationShape::Intra);
                rows.extend(closure.matching(&pattern).map(fact_row));
            } else if let (Some(from), Some(domain)) = (m.concept_at(0), m.exact_domain_at(2)) {
                for to in reachable_star(store, base, from, domain)? {
                    rows.push(vec![
                        Value::Concept(from.clone()),
                        Value::Concept(to),
                        Value::Domain(domain.clone()),
                    ]);
                }
            } else {
                let closure = materialize(store)?;
                let pattern = m.pattern(&star, RelationShape::Intra);
                rows.extend(closure.matching(&pattern).map(fact_row));
            }
        }
        Goal::AllPrerequisites => {
            if registry.contains(PREREQUISITE_RELATION) {
                for domain in m.domains_for(store, PREREQUISITE_RELATION, 1) {
                    let targets: BTreeSet<ConceptId> = match m.concept_at(0) {
                        Some(c) => BTreeSet::from([c.clone()]),
                        None => store
                            .facts_in(PREREQUISITE_RELATION, &domain)
                            .map(|f| f.subject().clone())
                            .collect(),
                    };
                    for target in targets {
                        let prereqs: Vec<ConceptId> = if derived {
                            all_prerequisites(store, &target, &domain)?
                        } else {
                            store
                                .facts_in(PREREQUISITE_RELATION, &domain)
                                .filter(|f| *f.subject() == target)
                                .map(|f| f.object().clone())
                                .collect()
                        };
                        for p in prereqs {
                            rows.push(vec![
                                Value::Concept(target.clone()),
                                Value::Domain(domain.clone()),
                                Value::Concept(p),
                            ]);
                        }
                    }
                }
            }
        }
        Goal::InheritedAttributes => {
            if let Some(spec) = registry.get(ATTRIBUTE_RELATION) {
                let mut domains = m.domains_for(store, ATTRIBUTE_RELATION, 3);
                domains.dedup();
                for domain in domains {
                    let concepts: BTreeSet<ConceptId> = match m.concept_at(0) {
                        Some(c) => BTreeSet::from([c.clone()]),
                        None => {
                            let mut all: BTreeSet<ConceptId> = store
                                .facts_in(ATTRIBUTE_RELATION, &domain)
                                .map(|f| f.subject().clone())
                                .collect();
                            if let Some(carrier) = &spec.inherits_via {
                                all.extend(
                                    store
                                        .facts_in(carrier, &domain)
                                        .map(|f| f.subject().clone()),
                                );
                            }
                            all
                        }
                    };
                    for concept in concepts {
                        let found: Vec<(ConceptId, ConceptId)> = if derived {
                            inherited_attributes(store, &concept, &domain)
                                .into_iter()
                                .collect()
                        } else {
                            store
                                .facts_in(ATTRIBUTE_RELATION, &domain)
                                .filter(|f| *f.subject() == concept)
                                .map(|f| (f.object().clone(), concept.clone()))
                                .collect()
                        };
                        for (attribute, source) in found {
                            rows.push(vec![
                                Value::Concept(concept.clone()),
                                Value::Concept(attribute),
                                Value::Concept(source),
                                Value::Domain(domain.clone()),
                            ]);
                        }
                    }
                }
            }
        }
        Goal::AnalogySearch => {
            if registry.contains(ANALOGY_RELATION) {
                for fact in store.facts_of(ANALOGY_RELATION) {
                    rows.push(fact_row(fact));
                    rows.push(fact_row(&fact.swapped()));
                }
            }
        }
    }

    let solutions = rows.iter().filter_map(|row| m.unify(row));
    Ok(BindingSet::from_rows(query.variables.clone(), solutions))
}
