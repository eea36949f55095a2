//! Relation vocabulary and the algebraic properties that drive inference.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Argument layout of a relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationShape {
    /// `r(c, c', d)`
    Intra,
    /// `r(c1, c2, d1, d2)`
    Cross,
    /// `r(c1, c2, fused, d)`
    Fusion,
}

impl RelationShape {
    pub fn arity(self) -> usize {
        match self {
            RelationShape::Intra => 3,
            RelationShape::Cross | RelationShape::Fusion => 4,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            RelationShape::Intra => "intra",
            RelationShape::Cross => "cross",
            RelationShape::Fusion => "fusion",
        }
    }
}

impl fmt::Display for RelationShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for RelationShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "intra" => Ok(RelationShape::Intra),
            "cross" => Ok(RelationShape::Cross),
            "fusion" => Ok(RelationShape::Fusion),
            other => Err(format!("unknown relation shape `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSpec {
    pub name: String,
    pub shape: RelationShape,
    pub transitive: bool,
    pub symmetric: bool,
    pub reflexive: bool,
    pub acyclic: bool,
    /// Carrier relation along which facts of this relation are inherited:
    /// `self(x, a, d) <- carrier(x, y, d), self(y, a, d)`.
    pub inherits_via: Option<String>,
}

impl RelationSpec {
    pub fn new(name: impl Into<String>, shape: RelationShape) -> Self {
        RelationSpec {
            name: name.into(),
            shape,
            transitive: false,
            symmetric: false,
            reflexive: false,
            acyclic: false,
            inherits_via: None,
        }
    }

    pub fn intra(name: impl Into<String>) -> Self {
        Self::new(name, RelationShape::Intra)
    }

    pub fn transitive(mut self) -> Self {
        self.transitive = true;
        self
    }

    pub fn symmetric(mut self) -> Self {
        self.symmetric = true;
        self
    }

    pub fn reflexive(mut self) -> Self {
        self.reflexive = true;
        self
    }

    pub fn acyclic(mut self) -> Self {
        self.acyclic = true;
        self
    }

    pub fn inherits_via(mut self, carrier: impl Into<String>) -> Self {
        self.inherits_via = Some(carrier.into());
        self
    }

    pub fn arity(&self) -> usize {
        self.shape.arity()
    }

    /// Name of the derived closure predicate, for transitive relations.
    pub fn star_name(&self) -> Option<String> {
        self.transitive.then(|| star_name(&self.name))
    }

    /// Checks the flag combinations that are contradictory on their own.
    pub fn validate(&self) -> Result<(), RegistryError> {
        if !is_relation_name(&self.name) {
            return Err(RegistryError::InvalidName(self.name.clone()));
        }
        if RESERVED_GOALS.contains(&self.name.as_str()) {
            return Err(RegistryError::Reserved(self.name.clone()));
        }
        if self.symmetric && self.acyclic {
            return Err(RegistryError::SymmetricAcyclic(self.name.clone()));
        }
        if self.reflexive && self.acyclic {
            return Err(RegistryError::ReflexiveAcyclic(self.name.clone()));
        }
        if self.transitive && self.shape != RelationShape::Intra {
            return Err(RegistryError::TransitiveShape(self.name.clone()));
        }
        if self.reflexive && self.shape != RelationShape::Intra {
            return Err(RegistryError::ReflexiveShape(self.name.clone()));
        }
        if let Some(carrier) = &self.inherits_via {
            if self.shape != RelationShape::Intra {
                return Err(RegistryError::InheritanceShape(self.name.clone()));
            }
            if self.transitive {
                return Err(RegistryError::TransitiveInheritance(self.name.clone()));
            }
            if carrier == &self.name {
                return Err(RegistryError::SelfCarrier(self.name.clone()));
            }
        }
        Ok(())
    }
}

pub fn star_name(relation: &str) -> String {
    format!("{relation}_star")
}

/// Goal names with built-in meaning in queries; never usable as relations.
pub const RESERVED_GOALS: [&str; 3] = [
    "all_prerequisites",
    "inherited_attributes",
    "analogy_search",
];

pub const PREREQUISITE_RELATION: &str = "requires";
pub const ATTRIBUTE_RELATION: &str = "has_attribute";
pub const ANALOGY_RELATION: &str = "analogous_to";

pub fn is_relation_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("relation `{0}` is already registered")]
    Duplicate(String),
    #[error("relation `{0}` is not registered")]
    Unknown(String),
    #[error("`{0}` is not a valid relation name")]
    InvalidName(String),
    #[error("`{0}` is a reserved goal name")]
    Reserved(String),
    #[error("relation `{0}` cannot be both symmetric and acyclic")]
    SymmetricAcyclic(String),
    #[error("relation `{0}` cannot be both reflexive and acyclic")]
    ReflexiveAcyclic(String),
    #[error("transitive relation `{0}` must have intra-domain shape")]
    TransitiveShape(String),
    #[error("reflexive relation `{0}` must have intra-domain shape")]
    ReflexiveShape(String),
    #[error("relation `{0}` inherits along a carrier but is not intra-domain")]
    InheritanceShape(String),
    #[error("relation `{0}` cannot be both transitive and inherited")]
    TransitiveInheritance(String),
    #[error("relation `{0}` cannot inherit along itself")]
    SelfCarrier(String),
    #[error("relation `{relation}` inherits via unknown or non-intra relation `{carrier}`")]
    BadCarrier { relation: String, carrier: String },
    #[error("name `{name}` collides with the closure predicate of `{base}`")]
    StarCollision { name: String, base: String },
}

/// A goal name resolved against the registry.
#[derive(Debug, Clone, Copy)]
pub enum GoalKind<'a> {
    Relation(&'a RelationSpec),
    Star(&'a RelationSpec),
    AllPrerequisites,
    InheritedAttributes,
    AnalogySearch,
}

/// The set of relations known to a knowledge base.
#[derive(Debug, Clone)]
pub struct RelationRegistry {
    specs: Vec<RelationSpec>,
    index: HashMap<String, usize>,
}

impl Default for RelationRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl RelationRegistry {
    pub fn empty() -> Self {
        RelationRegistry {
            specs: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// The built-in vocabulary.
    pub fn builtin() -> Self {
        let mut registry = Self::empty();
        for spec in builtin_specs() {
            registry
                .register(spec)
                .expect("built-in relations are consistent");
        }
        registry
    }

    pub fn register(&mut self, spec: RelationSpec) -> Result<(), RegistryError> {
        if self.index.contains_key(&spec.name) {
            return Err(RegistryError::Duplicate(spec.name));
        }
        self.check_against_others(&spec)?;
        self.index.insert(spec.name.clone(), self.specs.len());
        self.specs.push(spec);
        Ok(())
    }

    /// Replaces the definition of an already-registered relation.
    pub fn redefine(&mut self, spec: RelationSpec) -> Result<(), RegistryError> {
        let Some(&slot) = self.index.get(&spec.name) else {
            return Err(RegistryError::Unknown(spec.name));
        };
        self.check_against_others(&spec)?;
        for other in &self.specs {
            if other.inherits_via.as_deref() == Some(spec.name.as_str())
                && spec.shape != RelationShape::Intra
            {
                return Err(RegistryError::BadCarrier {
                    relation: other.name.clone(),
                    carrier: spec.name.clone(),
                });
            }
        }
        self.specs[slot] = spec;
        Ok(())
    }

    fn check_against_others(&self, spec: &RelationSpec) -> Result<(), RegistryError> {
        spec.validate()?;
        if let Some(carrier) = &spec.inherits_via {
            match self.get(carrier) {
                Some(c) if c.shape == RelationShape::Intra => {}
                _ => {
                    return Err(RegistryError::BadCarrier {
                        relation: spec.name.clone(),
                        carrier: carrier.clone(),
                    })
                }
            }
        }
        if let Some(base) = spec.name.strip_suffix("_star") {
            if self.get(base).is_some_and(|b| b.transitive) {
                return Err(RegistryError::StarCollision {
                    name: spec.name.clone(),
                    base: base.to_string(),
                });
            }
        }
        if let Some(star) = spec.star_name() {
            if self.index.contains_key(&star) {
                return Err(RegistryError::StarCollision {
                    name: star,
                    base: spec.name.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&RelationSpec> {
        self.index.get(name).map(|&i| &self.specs[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Relations in registration order.
    pub fn iter(&self) -> impl Iterator<Item = &RelationSpec> {
        self.specs.iter()
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Relations whose definition differs from (or is absent in) the built-in set.
    pub fn customized(&self) -> impl Iterator<Item = &RelationSpec> {
        let builtin = builtin_specs();
        self.specs
            .iter()
            .filter(move |s| !builtin.iter().any(|b| b == *s))
    }

    pub fn resolve_goal(&self, name: &str) -> Option<GoalKind<'_>> {
        if let Some(spec) = self.get(name) {
            return Some(GoalKind::Relation(spec));
        }
        match name {
            "all_prerequisites" => return Some(GoalKind::AllPrerequisites),
            "inherited_attributes" => return Some(GoalKind::InheritedAttributes),
            "analogy_search" => return Some(GoalKind::AnalogySearch),
            _ => {}
        }
        let base = name.strip_suffix("_star")?;
        self.get(base).filter(|s| s.transitive).map(GoalKind::Star)
    }
}

fn builtin_specs() -> Vec<RelationSpec> {
    use RelationShape::*;
    vec![
        RelationSpec::intra("is_a").transitive().acyclic(),
        RelationSpec::intra("part_of").transitive().acyclic(),
        RelationSpec::intra("has_attribute").inherits_via("is_a"),
        RelationSpec::intra("requires").transitive().acyclic(),
        RelationSpec::intra("cause_of"),
        RelationSpec::intra("enables"),
        RelationSpec::intra("contrasts_with").symmetric(),
        RelationSpec::intra("conflicts_with").symmetric(),
        RelationSpec::intra("evolves_to").transitive().acyclic(),
        RelationSpec::intra("if_then"),
        RelationSpec::intra("context_value"),
        RelationSpec::intra("strategy"),
        RelationSpec::new("analogous_to", Cross).symmetric(),
        RelationSpec::new("fuses_with", Fusion).symmetric(),
    ]
}
