//! A store together with its (possibly absent) materialized closure.

use std::path::Path;

use crate::consistency::{self, ConsistencyReport};
use crate::fact::Fact;
use crate::inference::{self, ClosureSet, DerivationTrace, Execution, InferenceError};
use crate::kb_io::{self, KbError, LoadOptions, LoadReport};
use crate::query::{eval_query, parse_query, BindingSet, QueryError, QueryOptions};
use crate::store::{FactStore, StoreError};

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    store: FactStore,
    closure: Option<ClosureSet>,
    /// Reject cycle-closing facts on load and unmaterialized derived queries.
    pub strict: bool,
    pub execution: Execution,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_store(store: FactStore) -> Self {
        KnowledgeBase {
            store,
            ..Self::default()
        }
    }

    pub fn store(&self) -> &FactStore {
        &self.store
    }

    /// The closure, if one was materialized since the last mutation.
    pub fn closure(&self) -> Option<&ClosureSet> {
        self.closure.as_ref().filter(|c| c.is_current(&self.store))
    }

    fn load_options(&self) -> LoadOptions {
        LoadOptions {
            strict: self.strict,
        }
    }

    pub fn load_str(&mut self, source: &str, file: &str) -> LoadReport {
        self.closure = None;
        let options = self.load_options();
        kb_io::load_str(&mut self.store, source, file, options)
    }

    pub fn load_file(&mut self, path: impl AsRef<Path>) -> Result<LoadReport, KbError> {
        self.closure = None;
        let options = self.load_options();
        kb_io::load_file(&mut self.store, path, options)
    }

    pub fn load_case_study(&mut self, name: &str) -> Result<LoadReport, KbError> {
        self.closure = None;
        kb_io::load_builtin_casestudy(&mut self.store, name)
    }

    pub fn assert_fact(&mut self, fact: &Fact) -> Result<bool, StoreError> {
        let added = self.store.assert_fact(fact)?;
        if added {
            self.closure = None;
        }
        Ok(added)
    }

    pub fn retract_fact(&mut self, fact: &Fact) -> Result<bool, StoreError> {
        let removed = self.store.retract_fact(fact)?;
        if removed {
            self.closure = None;
        }
        Ok(removed)
    }

    /// Materializes (or reuses) the closure.
    pub fn materialize(&mut self) -> Result<&ClosureSet, InferenceError> {
        if self.closure().is_none() {
            self.closure = Some(inference::materialize_with(&self.store, self.execution)?);
        }
        Ok(self.closure.as_ref().expect("just materialized"))
    }

    pub fn check(&self) -> ConsistencyReport {
        consistency::check(&self.store)
    }

    pub fn query(&self, text: &str, options: QueryOptions) -> Result<BindingSet, QueryError> {
        let query = parse_query(text, self.store.registry())?.with_options(options);
        eval_query(&query, &self.store, self.closure(), self.strict)
    }

    /// Proof tree for `fact`, materializing first when needed.
    pub fn explain(&mut self, fact: &Fact) -> Result<DerivationTrace, InferenceError> {
        if self.store.is_stored(fact) {
            return inference::explain(&self.store, &ClosureSet::default(), fact);
        }
        self.materialize()?;
        let closure = self.closure.as_ref().expect("materialized");
        inference::explain(&self.store, closure, fact)
    }

    pub fn save_string(&self) -> String {
        kb_io::save_string(&self.store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> crate::domain::DomainExpr {
        s.parse().unwrap()
    }

    #[test]
    fn mutation_invalidates_closure() {
        let mut kb = KnowledgeBase::new();
        kb.assert_fact(&Fact::intra("is_a", "a", "b", d("x")))
            .unwrap();
        kb.materialize().unwrap();
        assert!(kb.closure().is_some());
        kb.assert_fact(&Fact::intra("is_a", "b", "c", d("x")))
            .unwrap();
        assert!(kb.closure().is_none());
        let closure = kb.materialize().unwrap();
        assert!(closure.contains(&Fact::intra("is_a_star", "a", "c", d("x"))));
        // duplicates leave it intact
        kb.assert_fact(&Fact::intra("is_a", "b", "c", d("x")))
            .unwrap();
        assert!(kb.closure().is_some());
    }

    #[test]
    fn explain_materializes_on_demand() {
        let mut kb = KnowledgeBase::new();
        kb.load_str("is_a(a, b, \"x\").\nis_a(b, c, \"x\").\n", "t");
        let trace = kb
            .explain(&Fact::intra("is_a_star", "a", "c", d("x")))
            .unwrap();
        assert_eq!(trace.depth(), 2);
        assert!(kb
            .explain(&Fact::intra("is_a", "a", "b", d("x")))
            .unwrap()
            .is_leaf());
    }

    #[test]
    fn strict_query_needs_materialize() {
        let mut kb = KnowledgeBase {
            strict: true,
            ..Default::default()
        };
        kb.load_str("is_a(a, b, \"x\").\n", "t");
        assert!(matches!(
            kb.query("is_a_star(a, ?Y, \"x\")", QueryOptions::default()),
            Err(QueryError::Unmaterialized)
        ));
        kb.materialize().unwrap();
        assert_eq!(
            kb.query("is_a_star(a, ?Y, \"x\")", QueryOptions::default())
                .unwrap()
                .len(),
            1
        );
    }
}
