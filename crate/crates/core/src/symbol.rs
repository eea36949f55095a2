use std::borrow::Borrow;
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

/// An interned, immutable symbol naming a concept or attribute value.
///
/// Equality, hashing and ordering are by string content, so two ids built
/// from equal strings are equal regardless of which interner produced them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptId(Arc<str>);

impl ConceptId {
    pub fn new(name: &str) -> Self {
        ConceptId(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ConceptId {
    fn from(s: &str) -> Self {
        ConceptId::new(s)
    }
}

impl Borrow<str> for ConceptId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Shares one allocation between repeated occurrences of a symbol.
#[derive(Debug, Default, Clone)]
pub struct Interner {
    symbols: HashSet<ConceptId>,
}

impl Interner {
    pub fn intern(&mut self, name: &str) -> ConceptId {
        if let Some(id) = self.symbols.get(name) {
            return id.clone();
        }
        let id = ConceptId::new(name);
        self.symbols.insert(id.clone());
        id
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}
