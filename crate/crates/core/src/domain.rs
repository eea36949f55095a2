//! Domain specification expressions.
//!
//! A domain is an `@`-separated path of segments, outermost first. Each
//! segment is either a single atom or a `+`-joined fusion of atoms:
//!
//! ```text
//! domain  := segment ('@' segment)*
//! segment := atom ('+' atom)*
//! atom    := [A-Za-z0-9_][A-Za-z0-9_.\-]*
//! ```
//!
//! Fusion is symmetric, so `product+engineering` and `engineering+product`
//! denote the same segment. Equality, hashing and ordering all go through the
//! canonical text, where fusion atoms are sorted and deduplicated.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("empty domain specification")]
    Empty,
    #[error("empty segment at byte {offset}")]
    EmptySegment { offset: usize },
    #[error("empty atom at byte {offset}")]
    EmptyAtom { offset: usize },
    #[error("illegal character {ch:?} at byte {offset}")]
    IllegalChar { offset: usize, ch: char },
}

impl DomainError {
    pub fn offset(&self) -> usize {
        match self {
            DomainError::Empty => 0,
            DomainError::EmptySegment { offset }
            | DomainError::EmptyAtom { offset }
            | DomainError::IllegalChar { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Atom,
    Fusion,
}

/// One `@`-delimited component of a domain path.
///
/// `atoms` keeps the order the atoms were written in; `canonical` holds them
/// sorted and deduplicated and is what comparisons use.
#[derive(Debug, Clone)]
pub struct DomainSegment {
    atoms: Vec<String>,
    canonical: Vec<String>,
}

impl DomainSegment {
    fn from_atoms(atoms: Vec<String>) -> Self {
        let mut canonical = atoms.clone();
        canonical.sort();
        canonical.dedup();
        DomainSegment { atoms, canonical }
    }

    pub fn atom(name: impl Into<String>) -> Self {
        Self::from_atoms(vec![name.into()])
    }

    pub fn kind(&self) -> SegmentKind {
        if self.canonical.len() > 1 {
            SegmentKind::Fusion
        } else {
            SegmentKind::Atom
        }
    }

    /// Atoms in the order they were written.
    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    /// Atoms sorted lexicographically, duplicates removed.
    pub fn canonical_atoms(&self) -> &[String] {
        &self.canonical
    }
}

impl PartialEq for DomainSegment {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl Eq for DomainSegment {}

impl Hash for DomainSegment {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical.hash(state);
    }
}

impl fmt::Display for DomainSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical.join("+"))
    }
}

#[derive(Debug)]
struct DomainInner {
    segments: Vec<DomainSegment>,
    canonical: String,
}

/// A parsed domain specification. Cheap to clone.
#[derive(Debug, Clone)]
pub struct DomainExpr {
    inner: Arc<DomainInner>,
}

impl DomainExpr {
    /// Builds a domain from already-validated segments. Panics on an empty list.
    pub fn from_segments(segments: Vec<DomainSegment>) -> Self {
        assert!(!segments.is_empty(), "a domain has at least one segment");
        let canonical = segments
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join("@");
        DomainExpr {
            inner: Arc::new(DomainInner {
                segments,
                canonical,
            }),
        }
    }

    pub fn parse(text: &str) -> Result<Self, DomainError> {
        parse_domain(text)
    }

    pub fn segments(&self) -> &[DomainSegment] {
        &self.inner.segments
    }

    pub fn depth(&self) -> usize {
        self.inner.segments.len()
    }

    /// Canonical text: fusion atoms sorted, segments joined by `@`.
    pub fn canonical(&self) -> &str {
        &self.inner.canonical
    }

    /// Text using the atom order the domain was written with.
    pub fn original(&self) -> String {
        self.segments()
            .iter()
            .map(|s| s.atoms().join("+"))
            .collect::<Vec<_>>()
            .join("@")
    }

    /// True iff `self` is a leading sublist of `specific`.
    pub fn is_prefix_of(&self, specific: &DomainExpr) -> bool {
        let general = self.segments();
        let specific = specific.segments();
        general.len() <= specific.len() && general.iter().zip(specific).all(|(a, b)| a == b)
    }

    /// Appends the segments of `child` below this domain.
    pub fn refine(&self, child: &DomainExpr) -> DomainExpr {
        let mut segments = self.segments().to_vec();
        segments.extend(child.segments().iter().cloned());
        DomainExpr::from_segments(segments)
    }

    /// Fuses two domains into a single fusion segment.
    ///
    /// Single-segment inputs contribute their atoms; a multi-segment input
    /// contributes its whole canonical path as one opaque atom.
    pub fn fuse(&self, other: &DomainExpr) -> DomainExpr {
        let mut atoms = Vec::new();
        for d in [self, other] {
            match d.segments() {
                [only] => atoms.extend(only.atoms().iter().cloned()),
                _ => atoms.push(d.canonical().to_string()),
            }
        }
        let mut segment = DomainSegment::from_atoms(atoms);
        // Writing order is irrelevant for a fused value.
        segment.atoms = segment.canonical.clone();
        DomainExpr::from_segments(vec![segment])
    }

    /// Case-folded canonical text, used by the case-variant lint.
    pub fn folded(&self) -> String {
        self.canonical().to_lowercase()
    }
}

pub fn parse_domain(text: &str) -> Result<DomainExpr, DomainError> {
    if text.is_empty() {
        return Err(DomainError::Empty);
    }
    let mut segments = Vec::new();
    let mut atoms = Vec::new();
    let mut atom_start = 0usize;
    let mut segment_start = 0usize;

    let bytes = text.as_bytes();
    for (offset, ch) in text.char_indices() {
        match ch {
            '@' | '+' => {
                if offset == atom_start {
                    return Err(if ch == '@' && offset == segment_start {
                        DomainError::EmptySegment { offset }
                    } else {
                        DomainError::EmptyAtom { offset }
                    });
                }
                atoms.push(text[atom_start..offset].to_string());
                atom_start = offset + 1;
                if ch == '@' {
                    segments.push(DomainSegment::from_atoms(std::mem::take(&mut atoms)));
                    segment_start = offset + 1;
                }
            }
            c if is_atom_char(c, offset == atom_start) => {}
            c => return Err(DomainError::IllegalChar { offset, ch: c }),
        }
    }
    if atom_start == bytes.len() {
        let offset = bytes.len();
        return Err(if atom_start == segment_start {
            DomainError::EmptySegment { offset }
        } else {
            DomainError::EmptyAtom { offset }
        });
    }
    atoms.push(text[atom_start..].to_string());
    segments.push(DomainSegment::from_atoms(atoms));
    Ok(DomainExpr::from_segments(segments))
}

fn is_atom_char(c: char, leading: bool) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || (!leading && (c == '.' || c == '-'))
}

/// True if `text` is a well-formed single atom.
pub fn is_atom(text: &str) -> bool {
    let mut chars = text.chars();
    matches!(chars.next(), Some(c) if is_atom_char(c, true))
        && chars.all(|c| is_atom_char(c, false))
}

impl PartialEq for DomainExpr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.canonical() == other.canonical()
    }
}

impl Eq for DomainExpr {}

impl Hash for DomainExpr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical().hash(state);
    }
}

impl PartialOrd for DomainExpr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DomainExpr {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical().cmp(other.canonical())
    }
}

impl fmt::Display for DomainExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical())
    }
}

impl FromStr for DomainExpr {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_domain(s)
    }
}
