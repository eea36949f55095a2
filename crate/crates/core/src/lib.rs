//! Domain-contextualized concept graphs: concepts related to concepts
//! within explicit, hierarchical domain contexts.
//!
//! A [`Fact`] is scoped by a [`DomainExpr`]. Facts live in a
//! [`FactStore`] whose relations are described by a [`RelationRegistry`].
//! [`materialize`] computes the per-domain closure, [`check`] validates
//! a store, and [`parse_query`]/[`eval_query`] answer single-goal queries.
//! [`KnowledgeBase`] bundles these behind one handle.

pub mod consistency;
pub mod domain;
pub mod fact;
mod graph;
pub mod inference;
pub mod kb;
pub mod kb_io;
pub mod query;
pub mod relation;
pub mod store;
pub mod symbol;
pub mod workload;

pub use consistency::{
    check, ConsistencyReport, Lint, SeparationWitness, Violation, ViolationKind,
};
pub use domain::{parse_domain, DomainError, DomainExpr, DomainSegment, SegmentKind};
pub use fact::{Fact, FactPattern};
pub use inference::{
    explain, materialize, materialize_with, ClosureSet, DerivationTrace, Execution, InferenceError,
    Provenance, Rule,
};
pub use kb::KnowledgeBase;
pub use kb_io::{
    export_interop, load_builtin_casestudy, load_file, load_str, save_file, save_string,
    Diagnostic, KbError, LoadOptions, LoadReport, Severity, SourceSpan, CASE_STUDIES,
};
pub use query::{eval_query, parse_query, BindingSet, DomainMode, Query, QueryError, QueryOptions};
pub use relation::{RegistryError, RelationRegistry, RelationShape, RelationSpec};
pub use store::{FactStore, StoreError, StoreStats};
pub use symbol::ConceptId;
