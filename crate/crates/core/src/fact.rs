use std::fmt;
use std::sync::Arc;

use crate::domain::{is_atom, DomainExpr};
use crate::relation::RelationShape;
use crate::symbol::ConceptId;

/// One domain-scoped statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fact {
    Intra {
        relation: Arc<str>,
        subject: ConceptId,
        object: ConceptId,
        domain: DomainExpr,
    },
    Cross {
        relation: Arc<str>,
        left: ConceptId,
        right: ConceptId,
        left_domain: DomainExpr,
        right_domain: DomainExpr,
    },
    Fusion {
        relation: Arc<str>,
        left: ConceptId,
        right: ConceptId,
        fused: ConceptId,
        domain: DomainExpr,
    },
}

impl Fact {
    pub fn intra(relation: &str, subject: &str, object: &str, domain: DomainExpr) -> Self {
        Fact::Intra {
            relation: Arc::from(relation),
            subject: subject.into(),
            object: object.into(),
            domain,
        }
    }

    pub fn cross(
        relation: &str,
        left: &str,
        right: &str,
        left_domain: DomainExpr,
        right_domain: DomainExpr,
    ) -> Self {
        Fact::Cross {
            relation: Arc::from(relation),
            left: left.into(),
            right: right.into(),
            left_domain,
            right_domain,
        }
    }

    pub fn fusion(
        relation: &str,
        left: &str,
        right: &str,
        fused: &str,
        domain: DomainExpr,
    ) -> Self {
        Fact::Fusion {
            relation: Arc::from(relation),
            left: left.into(),
            right: right.into(),
            fused: fused.into(),
            domain,
        }
    }

    pub fn relation(&self) -> &str {
        match self {
            Fact::Intra { relation, .. }
            | Fact::Cross { relation, .. }
            | Fact::Fusion { relation, .. } => relation,
        }
    }

    pub(crate) fn relation_arc(&self) -> &Arc<str> {
        match self {
            Fact::Intra { relation, .. }
            | Fact::Cross { relation, .. }
            | Fact::Fusion { relation, .. } => relation,
        }
    }

    pub fn shape(&self) -> RelationShape {
        match self {
            Fact::Intra { .. } => RelationShape::Intra,
            Fact::Cross { .. } => RelationShape::Cross,
            Fact::Fusion { .. } => RelationShape::Fusion,
        }
    }

    /// First concept argument.
    pub fn subject(&self) -> &ConceptId {
        match self {
            Fact::Intra { subject, .. } => subject,
            Fact::Cross { left, .. } | Fact::Fusion { left, .. } => left,
        }
    }

    /// Second concept argument.
    pub fn object(&self) -> &ConceptId {
        match self {
            Fact::Intra { object, .. } => object,
            Fact::Cross { right, .. } | Fact::Fusion { right, .. } => right,
        }
    }

    /// The domain a fact is filed under first (the left domain for cross facts).
    pub fn primary_domain(&self) -> &DomainExpr {
        match self {
            Fact::Intra { domain, .. } | Fact::Fusion { domain, .. } => domain,
            Fact::Cross { left_domain, .. } => left_domain,
        }
    }

    /// Every distinct domain the fact is filed under.
    pub fn domains(&self) -> Vec<&DomainExpr> {
        match self {
            Fact::Cross {
                left_domain,
                right_domain,
                ..
            } if left_domain != right_domain => vec![left_domain, right_domain],
            _ => vec![self.primary_domain()],
        }
    }

    /// Same statement with the symmetric argument positions swapped.
    pub fn swapped(&self) -> Fact {
        match self.clone() {
            Fact::Intra {
                relation,
                subject,
                object,
                domain,
            } => Fact::Intra {
                relation,
                subject: object,
                object: subject,
                domain,
            },
            Fact::Cross {
                relation,
                left,
                right,
                left_domain,
                right_domain,
            } => Fact::Cross {
                relation,
                left: right,
                right: left,
                left_domain: right_domain,
                right_domain: left_domain,
            },
            Fact::Fusion {
                relation,
                left,
                right,
                fused,
                domain,
            } => Fact::Fusion {
                relation,
                left: right,
                right: left,
                fused,
                domain,
            },
        }
    }

    /// Orientation used for storage and equality of symmetric relations.
    pub fn canonical(&self, symmetric: bool) -> Fact {
        if !symmetric {
            return self.clone();
        }
        let swapped = self.swapped();
        if swapped < *self {
            swapped
        } else {
            self.clone()
        }
    }

    /// Sort key used by the canonical file writer.
    pub(crate) fn file_order_key(
        &self,
    ) -> (
        &str,
        &str,
        &ConceptId,
        &ConceptId,
        Option<&str>,
        Option<&ConceptId>,
    ) {
        match self {
            Fact::Intra {
                relation,
                subject,
                object,
                domain,
            } => (relation, domain.canonical(), subject, object, None, None),
            Fact::Cross {
                relation,
                left,
                right,
                left_domain,
                right_domain,
            } => (
                relation,
                left_domain.canonical(),
                left,
                right,
                Some(right_domain.canonical()),
                None,
            ),
            Fact::Fusion {
                relation,
                left,
                right,
                fused,
                domain,
            } => (relation, domain.canonical(), left, right, None, Some(fused)),
        }
    }
}

/// Renders a concept as a bare atom when possible, otherwise single-quoted.
pub fn render_concept(concept: &str) -> String {
    if is_atom(concept) {
        concept.to_string()
    } else {
        quote(concept, '\'')
    }
}

pub fn render_domain(domain: &DomainExpr) -> String {
    format!("\"{}\"", domain.canonical())
}

pub(crate) fn quote(text: &str, delim: char) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push(delim);
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if c == delim => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(delim);
    out
}

/// Clause syntax of the native fact file, without the trailing period.
impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fact::Intra {
                relation,
                subject,
                object,
                domain,
            } => write!(
                f,
                "{relation}({}, {}, {})",
                render_concept(subject.as_str()),
                render_concept(object.as_str()),
                render_domain(domain)
            ),
            Fact::Cross {
                relation,
                left,
                right,
                left_domain,
                right_domain,
            } => write!(
                f,
                "{relation}({}, {}, {}, {})",
                render_concept(left.as_str()),
                render_concept(right.as_str()),
                render_domain(left_domain),
                render_domain(right_domain)
            ),
            Fact::Fusion {
                relation,
                left,
                right,
                fused,
                domain,
            } => write!(
                f,
                "{relation}({}, {}, {}, {})",
                render_concept(left.as_str()),
                render_concept(right.as_str()),
                render_concept(fused.as_str()),
                render_domain(domain)
            ),
        }
    }
}

/// A fact template; `None` fields are wildcards.
///
/// Field meaning follows the relation shape: `subject`/`object` are the two
/// leading concept arguments, `fused` the third concept of a fusion fact,
/// `domain` the (left) domain and `second_domain` the right domain of a
/// cross fact.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactPattern {
    pub relation: String,
    pub subject: Option<ConceptId>,
    pub object: Option<ConceptId>,
    pub fused: Option<ConceptId>,
    pub domain: Option<DomainExpr>,
    pub second_domain: Option<DomainExpr>,
}

impl FactPattern {
    pub fn relation(relation: impl Into<String>) -> Self {
        FactPattern {
            relation: relation.into(),
            ..Default::default()
        }
    }

    pub fn with_subject(mut self, subject: impl Into<ConceptId>) -> Self {
        self.subject = Some(subject.into());
        self
    }

    pub fn with_object(mut self, object: impl Into<ConceptId>) -> Self {
        self.object = Some(object.into());
        self
    }

    pub fn with_domain(mut self, domain: DomainExpr) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_second_domain(mut self, domain: DomainExpr) -> Self {
        self.second_domain = Some(domain);
        self
    }

    pub fn matches(&self, fact: &Fact) -> bool {
        fn ok<T: PartialEq>(want: &Option<T>, have: &T) -> bool {
            want.as_ref().is_none_or(|w| w == have)
        }
        if fact.relation() != self.relation {
            return false;
        }
        match fact {
            Fact::Intra {
                subject,
                object,
                domain,
                ..
            } => {
                ok(&self.subject, subject)
                    && ok(&self.object, object)
                    && ok(&self.domain, domain)
                    && self.fused.is_none()
                    && self.second_domain.is_none()
            }
            Fact::Cross {
                left,
                right,
                left_domain,
                right_domain,
                ..
            } => {
                ok(&self.subject, left)
                    && ok(&self.object, right)
                    && ok(&self.domain, left_domain)
                    && ok(&self.second_domain, right_domain)
                    && self.fused.is_none()
            }
            Fact::Fusion {
                left,
                right,
                fused,
                domain,
                ..
            } => {
                ok(&self.subject, left)
                    && ok(&self.object, right)
                    && ok(&self.fused, fused)
                    && ok(&self.domain, domain)
                    && self.second_domain.is_none()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> DomainExpr {
        s.parse().unwrap()
    }

    #[test]
    fn renders_clause_syntax() {
        let f = Fact::intra("is_a", "Apple", "Fruit", d("Biology@Plant_Taxonomy"));
        assert_eq!(
            f.to_string(),
            r#"is_a(Apple, Fruit, "Biology@Plant_Taxonomy")"#
        );
        let q = Fact::intra("strategy", "t", "Start with it's", d("x"));
        assert_eq!(q.to_string(), r#"strategy(t, 'Start with it\'s', "x")"#);
    }

    #[test]
    fn symmetric_canonical_orientation() {
        let a = Fact::intra("contrasts_with", "b", "a", d("d"));
        let b = Fact::intra("contrasts_with", "a", "b", d("d"));
        assert_eq!(a.canonical(true), b.canonical(true));
        assert_ne!(a.canonical(false), b.canonical(false));

        let x = Fact::cross("analogous_to", "nn", "brain", d("CS@ML"), d("Neuro"));
        let y = Fact::cross("analogous_to", "brain", "nn", d("Neuro"), d("CS@ML"));
        assert_eq!(x.canonical(true), y.canonical(true));
        assert_eq!(x.swapped(), y);
    }

    #[test]
    fn pattern_matching() {
        let f = Fact::cross(
            "analogous_to",
            "atom",
            "solar_system",
            d("Physics@Atomic"),
            d("Astronomy@Planetary"),
        );
        assert!(FactPattern::relation("analogous_to").matches(&f));
        assert!(FactPattern::relation("analogous_to")
            .with_second_domain(d("Astronomy@Planetary"))
            .matches(&f));
        assert!(!FactPattern::relation("analogous_to")
            .with_domain(d("Astronomy@Planetary"))
            .matches(&f));
        assert!(!FactPattern::relation("is_a").matches(&f));
    }

    #[test]
    fn cross_fact_domains() {
        let same = Fact::cross("analogous_to", "a", "b", d("x"), d("x"));
        assert_eq!(same.domains().len(), 1);
        let two = Fact::cross("analogous_to", "a", "b", d("x"), d("y"));
        assert_eq!(two.domains().len(), 2);
    }
}
