//! Fact files: parsing, loading, canonical saving, interop export and the
//! bundled case-study knowledge bases.
//!
//! ```text
//! file      := (directive | clause | comment)*
//! directive := '@relation' name shape flags* '.'
//! clause    := name '(' term (',' term)* ')' '.'
//! term      := atom | quoted | domainstr
//! domainstr := '"' domain '"'
//! comment   := '%' .* EOL
//! ```
//!
//! `shape` is one of `intra`, `cross`, `fusion`; flags are `transitive`,
//! `symmetric`, `reflexive`, `acyclic` and `inherits_via(relation)`.

mod interop;
mod lexer;

use std::fmt;
use std::io;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

pub use interop::{export_interop, prolog_atom, read_interop, InteropClause, InteropRead, PTerm};
use lexer::{tokenize, Spanned, Token};

use crate::consistency::{cycle_if_added, Lint};
use crate::domain::{parse_domain, DomainExpr};
use crate::fact::Fact;
use crate::inference::render_cycle;
use crate::relation::{RelationRegistry, RelationShape, RelationSpec};
use crate::store::FactStore;

/// Position of a token in a source file; lines and columns start at 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: SourceSpan,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {level}: {}", self.span, self.message)
    }
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("unknown case study `{0}` (expected one of: education, enterprise, techdocs, cbt)")]
    UnknownCaseStudy(String),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Reject facts that would close a cycle in an acyclic relation.
    pub strict: bool,
}

/// Outcome of loading one source.
#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    /// Newly asserted facts, in source order.
    pub facts: Vec<(Fact, SourceSpan)>,
    /// Clauses whose fact was already present.
    pub duplicates: Vec<(Fact, SourceSpan)>,
    pub diagnostics: Vec<Diagnostic>,
}

impl LoadReport {
    pub fn has_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Error)
    }

    pub fn duplicate_lints(&self) -> Vec<Lint> {
        self.duplicates
            .iter()
            .map(|(fact, span)| Lint::DuplicateFact {
                fact: fact.clone(),
                span: span.clone(),
            })
            .collect()
    }

    pub fn merge(&mut self, other: LoadReport) {
        self.facts.extend(other.facts);
        self.duplicates.extend(other.duplicates);
        self.diagnostics.extend(other.diagnostics);
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Term {
    token: Token,
    span: SourceSpan,
}

#[derive(Debug, Clone)]
enum Item {
    Directive {
        spec: RelationSpec,
        span: SourceSpan,
    },
    Clause {
        name: String,
        args: Vec<Term>,
        span: SourceSpan,
    },
}

fn error(span: &SourceSpan, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        severity: Severity::Error,
        span: span.clone(),
        message: message.into(),
    }
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    end: SourceSpan,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<SourceSpan, Diagnostic> {
        match self.next() {
            Some(t) if t.token == want => Ok(t.span),
            Some(t) => Err(error(
                &t.span,
                format!("expected {}, found {}", want.describe(), t.token.describe()),
            )),
            None => Err(error(
                &self.end,
                format!("expected {}, found end of input", want.describe()),
            )),
        }
    }

    fn name(&mut self, what: &str) -> Result<(String, SourceSpan), Diagnostic> {
        match self.next() {
            Some(Spanned {
                token: Token::Atom(a),
                span,
            }) => Ok((a, span)),
            Some(t) => Err(error(
                &t.span,
                format!("expected {what}, found {}", t.token.describe()),
            )),
            None => Err(error(
                &self.end,
                format!("expected {what}, found end of input"),
            )),
        }
    }

    /// Skips past the next `.` after an error.
    fn recover(&mut self) {
        while let Some(t) = self.next() {
            if t.token == Token::Dot {
                break;
            }
        }
    }

    fn item(&mut self) -> Result<Item, Diagnostic> {
        let first = self.peek().cloned().expect("item called with input left");
        match first.token {
            Token::Directive(ref d) if d == "relation" => {
                self.pos += 1;
                self.relation_directive(first.span)
            }
            Token::Directive(d) => Err(error(&first.span, format!("unknown directive `@{d}`"))),
            _ => self.clause(),
        }
    }

    fn relation_directive(&mut self, span: SourceSpan) -> Result<Item, Diagnostic> {
        let (name, _) = self.name("a relation name")?;
        let (shape_text, shape_span) = self.name("a relation shape")?;
        let shape: RelationShape = shape_text
            .parse()
            .map_err(|e: String| error(&shape_span, e))?;
        let mut spec = RelationSpec::new(name, shape);
        loop {
            match self.next() {
                Some(Spanned {
                    token: Token::Dot, ..
                }) => break,
                Some(Spanned {
                    token: Token::Atom(flag),
                    span,
                }) => match flag.as_str() {
                    "transitive" => spec.transitive = true,
                    "symmetric" => spec.symmetric = true,
                    "reflexive" => spec.reflexive = true,
                    "acyclic" => spec.acyclic = true,
                    "inherits_via" => {
                        self.expect(Token::LParen)?;
                        let (carrier, _) = self.name("a carrier relation")?;
                        self.expect(Token::RParen)?;
                        spec.inherits_via = Some(carrier);
                    }
                    other => return Err(error(&span, format!("unknown relation flag `{other}`"))),
                },
                Some(t) => {
                    return Err(error(
                        &t.span,
                        format!(
                            "expected a relation flag or `.`, found {}",
                            t.token.describe()
                        ),
                    ))
                }
                None => return Err(error(&self.end, "unterminated directive")),
            }
        }
        Ok(Item::Directive { spec, span })
    }

    fn clause(&mut self) -> Result<Item, Diagnostic> {
        let (name, span) = self.name("a relation name")?;
        let (args, _) = self.arguments()?;
        self.expect(Token::Dot)?;
        Ok(Item::Clause { name, args, span })
    }

    fn arguments(&mut self) -> Result<(Vec<Term>, SourceSpan), Diagnostic> {
        self.expect(Token::LParen)?;
        let mut args = Vec::new();
        loop {
            let t = self
                .next()
                .ok_or_else(|| error(&self.end, "expected a term, found end of input"))?;
            match t.token {
                Token::Atom(_) | Token::Quoted(_) | Token::Str(_) => args.push(Term {
                    token: t.token,
                    span: t.span,
                }),
                other => {
                    return Err(error(
                        &t.span,
                        format!("expected a term, found {}", other.describe()),
                    ))
                }
            }
            let sep = self
                .next()
                .ok_or_else(|| error(&self.end, "expected `,` or `)`, found end of input"))?;
            match sep.token {
                Token::Comma => continue,
                Token::RParen => return Ok((args, sep.span)),
                other => {
                    return Err(error(
                        &sep.span,
                        format!("expected `,` or `)`, found {}", other.describe()),
                    ))
                }
            }
        }
    }
}

fn parse_items(source: &str, file: &Arc<str>) -> (Vec<Item>, Vec<Diagnostic>) {
    let (tokens, lex_errors) = tokenize(source, file);
    let mut diagnostics: Vec<Diagnostic> = lex_errors
        .into_iter()
        .map(|e| error(&e.span, e.message))
        .collect();
    let end = tokens.last().map_or_else(
        || SourceSpan {
            file: file.clone(),
            line: 1,
            column: 1,
        },
        |t| t.span.clone(),
    );
    let mut parser = Parser {
        tokens,
        pos: 0,
        end,
    };
    let mut items = Vec::new();
    while parser.peek().is_some() {
        match parser.item() {
            Ok(item) => items.push(item),
            Err(diag) => {
                diagnostics.push(diag);
                // The failing token may itself be the terminating dot.
                if parser.pos > 0
                    && parser.tokens.get(parser.pos - 1).map(|t| &t.token) == Some(&Token::Dot)
                {
                    continue;
                }
                parser.recover();
            }
        }
    }
    (items, diagnostics)
}

/// Text of a term and the column where its content starts.
fn term_text(term: &Term) -> (&str, usize) {
    match &term.token {
        Token::Atom(a) => (a, term.span.column),
        Token::Quoted(q) | Token::Str(q) => (q, term.span.column + 1),
        _ => unreachable!("terms are atoms or quoted text"),
    }
}

fn concept_arg(term: &Term) -> Result<&str, Diagnostic> {
    match &term.token {
        Token::Atom(a) | Token::Quoted(a) => Ok(a),
        Token::Str(s) => Err(error(
            &term.span,
            format!("expected a concept, found domain string \"{s}\""),
        )),
        _ => unreachable!(),
    }
}

fn domain_arg(term: &Term) -> Result<DomainExpr, Diagnostic> {
    let (text, column) = term_text(term);
    parse_domain(text).map_err(|e| {
        let span = SourceSpan {
            column: column + e.offset(),
            ..term.span.clone()
        };
        error(&span, format!("invalid domain \"{text}\": {e}"))
    })
}

/// Builds a fact from clause arguments, resolving `name` against the registry.
/// With `allow_derived`, closure predicates such as `is_a_star` are accepted.
pub(crate) fn build_fact(
    registry: &RelationRegistry,
    name: &str,
    args: &[Term],
    span: &SourceSpan,
    allow_derived: bool,
) -> Result<Fact, Diagnostic> {
    let shape = match registry.get(name) {
        Some(spec) => spec.shape,
        None if allow_derived
            && name
                .strip_suffix("_star")
                .and_then(|b| registry.get(b))
                .is_some_and(|s| s.transitive) =>
        {
            RelationShape::Intra
        }
        None => return Err(error(span, format!("unknown relation `{name}`"))),
    };
    if args.len() != shape.arity() {
        return Err(error(
            span,
            format!(
                "`{name}` takes {} arguments ({shape} shape), found {}",
                shape.arity(),
                args.len()
            ),
        ));
    }
    let relation: Arc<str> = Arc::from(name);
    Ok(match shape {
        RelationShape::Intra => Fact::Intra {
            relation,
            subject: concept_arg(&args[0])?.into(),
            object: concept_arg(&args[1])?.into(),
            domain: domain_arg(&args[2])?,
        },
        RelationShape::Cross => Fact::Cross {
            relation,
            left: concept_arg(&args[0])?.into(),
            right: concept_arg(&args[1])?.into(),
            left_domain: domain_arg(&args[2])?,
            right_domain: domain_arg(&args[3])?,
        },
        RelationShape::Fusion => Fact::Fusion {
            relation,
            left: concept_arg(&args[0])?.into(),
            right: concept_arg(&args[1])?.into(),
            fused: concept_arg(&args[2])?.into(),
            domain: domain_arg(&args[3])?,
        },
    })
}

/// Parses a single clause such as `is_a(a, b, "d")` (trailing `.` optional).
pub fn parse_fact(
    registry: &RelationRegistry,
    text: &str,
    allow_derived: bool,
) -> Result<Fact, Diagnostic> {
    let file: Arc<str> = Arc::from("<input>");
    let trimmed = text.trim_end();
    let owned;
    let source = if trimmed.ends_with('.') {
        trimmed
    } else {
        owned = format!("{trimmed}.");
        &owned
    };
    let (items, diagnostics) = parse_items(source, &file);
    if let Some(d) = diagnostics.into_iter().next() {
        return Err(d);
    }
    match items.as_slice() {
        [Item::Clause { name, args, span }] => {
            build_fact(registry, name, args, span, allow_derived)
        }
        _ => Err(error(
            &SourceSpan {
                file,
                line: 1,
                column: 1,
            },
            "expected exactly one clause",
        )),
    }
}

fn apply_directive(
    store: &mut FactStore,
    spec: RelationSpec,
    span: &SourceSpan,
) -> Option<Diagnostic> {
    let result = match store.registry().get(&spec.name) {
        Some(existing) if *existing == spec => Ok(()),
        Some(_) => store.redefine_relation(spec),
        None => store.register_relation(spec),
    };
    result.err().map(|e| error(span, e.to_string()))
}

/// Loads fact-file text into `store`. Clauses are applied in order; bad
/// clauses are reported and skipped.
pub fn load_str(
    store: &mut FactStore,
    source: &str,
    file: &str,
    options: LoadOptions,
) -> LoadReport {
    let file: Arc<str> = Arc::from(file);
    let (items, mut diagnostics) = parse_items(source, &file);
    let mut report = LoadReport::default();
    for item in items {
        match item {
            Item::Directive { spec, span } => {
                diagnostics.extend(apply_directive(store, spec, &span));
            }
            Item::Clause { name, args, span } => {
                let fact = match build_fact(store.registry(), &name, &args, &span, false) {
                    Ok(f) => f,
                    Err(d) => {
                        diagnostics.push(d);
                        continue;
                    }
                };
                if options.strict {
                    if let Some(cycle) = cycle_if_added(store, &fact) {
                        diagnostics.push(error(
                            &span,
                            format!("{fact} would close the cycle {}", render_cycle(&cycle)),
                        ));
                        continue;
                    }
                }
                match store.assert_fact(&fact) {
                    Ok(true) => report.facts.push((fact, span)),
                    Ok(false) => {
                        diagnostics.push(Diagnostic {
                            severity: Severity::Warning,
                            span: span.clone(),
                            message: format!("duplicate fact {fact}"),
                        });
                        report.duplicates.push((fact, span));
                    }
                    Err(e) => diagnostics.push(error(&span, e.to_string())),
                }
            }
        }
    }
    diagnostics.sort_by(|a, b| a.span.cmp(&b.span));
    report.diagnostics = diagnostics;
    report
}

pub fn load_file(
    store: &mut FactStore,
    path: impl AsRef<Path>,
    options: LoadOptions,
) -> Result<LoadReport, KbError> {
    let path = path.as_ref();
    let source = std::fs::read_to_string(path).map_err(|source| KbError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(load_str(
        store,
        &source,
        &path.display().to_string(),
        options,
    ))
}

fn render_directive(spec: &RelationSpec) -> String {
    let mut out = format!("@relation {} {}", spec.name, spec.shape);
    for (on, flag) in [
        (spec.transitive, "transitive"),
        (spec.symmetric, "symmetric"),
        (spec.reflexive, "reflexive"),
        (spec.acyclic, "acyclic"),
    ] {
        if on {
            out.push(' ');
            out.push_str(flag);
        }
    }
    if let Some(carrier) = &spec.inherits_via {
        out.push_str(&format!(" inherits_via({carrier})"));
    }
    out.push('.');
    out
}

/// Canonical text of a store: custom relation directives in registration
/// order, then one clause per line sorted by relation, domain, subject and
/// object. Equal stores produce identical text.
pub fn save_string(store: &FactStore) -> String {
    let mut out = String::new();
    for spec in store.registry().customized() {
        out.push_str(&render_directive(spec));
        out.push('\n');
    }
    let mut facts: Vec<&Fact> = store.iter().collect();
    facts.sort_by(|a, b| a.file_order_key().cmp(&b.file_order_key()));
    if !facts.is_empty() && !out.is_empty() {
        out.push('\n');
    }
    for fact in facts {
        out.push_str(&fact.to_string());
        out.push_str(".\n");
    }
    out
}

pub fn save_file(store: &FactStore, path: impl AsRef<Path>) -> Result<(), KbError> {
    let path = path.as_ref();
    std::fs::write(path, save_string(store)).map_err(|source| KbError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn export_interop_file(store: &FactStore, path: impl AsRef<Path>) -> Result<(), KbError> {
    let path = path.as_ref();
    std::fs::write(path, export_interop(store)).map_err(|source| KbError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub const CASE_STUDIES: [&str; 4] = ["education", "enterprise", "techdocs", "cbt"];

pub fn casestudy_source(name: &str) -> Option<&'static str> {
    match name {
        "education" => Some(include_str!("../../kb/education.cdc")),
        "enterprise" => Some(include_str!("../../kb/enterprise.cdc")),
        "techdocs" => Some(include_str!("../../kb/techdocs.cdc")),
        "cbt" => Some(include_str!("../../kb/cbt.cdc")),
        _ => None,
    }
}

/// Loads one of the bundled knowledge bases into `store`.
pub fn load_builtin_casestudy(store: &mut FactStore, name: &str) -> Result<LoadReport, KbError> {
    let source =
        casestudy_source(name).ok_or_else(|| KbError::UnknownCaseStudy(name.to_string()))?;
    Ok(load_str(
        store,
        source,
        &format!("<case:{name}>"),
        LoadOptions::default(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fact::FactPattern;

    fn d(s: &str) -> DomainExpr {
        s.parse().unwrap()
    }

    fn load(text: &str) -> (FactStore, LoadReport) {
        let mut s = FactStore::new();
        let r = load_str(&mut s, text, "test.cdc", LoadOptions::default());
        (s, r)
    }

    #[test]
    fn single_intra_fact() {
        let (s, r) = load(r#"is_a(apple, fruit, "Biology@Plant_Taxonomy")."#);
        assert!(r.diagnostics.is_empty());
        assert_eq!(r.facts.len(), 1);
        assert!(s.contains(&Fact::intra(
            "is_a",
            "apple",
            "fruit",
            d("Biology@Plant_Taxonomy")
        )));
        assert_eq!(r.facts[0].1.line, 1);
    }

    #[test]
    fn quoted_atom_domains() {
        let (s, r) = load("is_a('Apple', 'Fruit', 'Biology@Plant_Taxonomy').");
        assert!(r.diagnostics.is_empty());
        assert!(s.contains(&Fact::intra(
            "is_a",
            "Apple",
            "Fruit",
            d("Biology@Plant_Taxonomy")
        )));
    }

    #[test]
    fn empty_file() {
        let (s, r) = load("");
        assert!(s.is_empty());
        assert!(r.diagnostics.is_empty());
        let (s, r) = load("% only a comment\n\n");
        assert!(s.is_empty() && r.diagnostics.is_empty());
    }

    #[test]
    fn duplicates_warn() {
        let (s, r) = load("is_a(a, b, \"d\").\nis_a(a, b, \"d\").\n");
        assert_eq!(s.len(), 1);
        assert_eq!(r.duplicates.len(), 1);
        assert!(!r.has_errors());
        assert_eq!(r.diagnostics[0].severity, Severity::Warning);
        assert_eq!(r.diagnostics[0].span.line, 2);
    }

    #[test]
    fn errors_carry_positions_and_recover() {
        let text = "is_a(a, b \"d\").\nfoo(a, b, \"d\").\nanalogous_to(a, b, \"x\").\nis_a(a, b, \"x@@y\").\nis_a(c, d, \"ok\").\n";
        let (s, r) = load(text);
        assert_eq!(s.len(), 1);
        let errs: Vec<_> = r.errors().collect();
        assert_eq!(errs.len(), 4, "{errs:?}");
        assert_eq!((errs[0].span.line, errs[0].span.column), (1, 11));
        assert!(errs[1].message.contains("unknown relation `foo`"));
        assert_eq!(errs[1].span.line, 2);
        assert!(errs[2].message.contains("takes 4 arguments"));
        // column of the second `@` inside the quoted domain
        assert_eq!((errs[3].span.line, errs[3].span.column), (4, 15));
    }

    #[test]
    fn relation_directive_registers_before_use() {
        let (s, r) = load("@relation applies_to intra.\napplies_to(rule, case, \"law\").\n");
        assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
        assert_eq!(s.len(), 1);
        let (_, r) = load("applies_to(rule, case, \"law\").\n@relation applies_to intra.\n");
        assert!(r.has_errors());
    }

    #[test]
    fn directive_flags_and_redefinition() {
        let (s, r) = load("@relation cause_of intra transitive acyclic.\n@relation trait_of intra inherits_via(part_of).\n");
        assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
        assert!(s.registry().get("cause_of").unwrap().transitive);
        assert_eq!(
            s.registry()
                .get("trait_of")
                .unwrap()
                .inherits_via
                .as_deref(),
            Some("part_of")
        );
        let (_, r) = load("@relation bad intra symmetric acyclic.\n");
        assert!(r.has_errors());
        let (_, r) = load("@relation x sideways.\n");
        assert!(r.has_errors());
    }

    #[test]
    fn strict_mode_rejects_cycles() {
        let mut s = FactStore::new();
        let text = "requires(a, b, \"d\").\nrequires(b, a, \"d\").\n";
        let r = load_str(&mut s, text, "t", LoadOptions { strict: true });
        assert_eq!(s.len(), 1);
        assert!(r.errors().next().unwrap().message.contains("cycle"));
        let mut lax = FactStore::new();
        let r = load_str(&mut lax, text, "t", LoadOptions::default());
        assert_eq!(lax.len(), 2);
        assert!(!r.has_errors());
    }

    #[test]
    fn save_is_sorted_and_deterministic() {
        let (s, _) = load("is_a(z, y, \"b\").\nis_a(a, y, \"b\").\npart_of(x, y, \"a\").\n");
        let text = save_string(&s);
        assert_eq!(
            text,
            "is_a(a, y, \"b\").\nis_a(z, y, \"b\").\npart_of(x, y, \"a\").\n"
        );
        let (s2, _) = load("part_of(x, y, \"a\").\nis_a(a, y, \"b\").\nis_a(z, y, \"b\").\n");
        assert_eq!(save_string(&s2), text);
        assert_eq!(save_string(&FactStore::new()), "");
    }

    #[test]
    fn save_round_trip_with_directives() {
        let src = "@relation applies_to intra transitive acyclic.\napplies_to(a, 'B c', \"x+y@z\").\nfuses_with(p, q, 'r s', \"u\").\n";
        let (s, r) = load(src);
        assert!(r.diagnostics.is_empty());
        let saved = save_string(&s);
        let (s2, r2) = load(&saved);
        assert!(r2.diagnostics.is_empty(), "{saved}");
        assert_eq!(s, s2);
        assert_eq!(save_string(&s2), saved);
    }

    #[test]
    fn parse_fact_accepts_derived_names() {
        let reg = RelationRegistry::builtin();
        assert!(parse_fact(&reg, "is_a_star(a, b, \"d\")", false).is_err());
        let f = parse_fact(&reg, "is_a_star(a, b, \"d\")", true).unwrap();
        assert_eq!(f.relation(), "is_a_star");
        assert!(parse_fact(&reg, "is_a(a, b, \"d\"). is_a(c, d, \"e\").", false).is_err());
    }

    #[test]
    fn case_studies_load_cleanly() {
        for name in CASE_STUDIES {
            let mut s = FactStore::new();
            let r = load_builtin_casestudy(&mut s, name).unwrap();
            assert!(r.diagnostics.is_empty(), "{name}: {:?}", r.diagnostics);
            assert!(!s.is_empty());
        }
        assert!(matches!(
            load_builtin_casestudy(&mut FactStore::new(), "medicine"),
            Err(KbError::UnknownCaseStudy(_))
        ));
    }

    #[test]
    fn case_study_contents() {
        let mut edu = FactStore::new();
        load_builtin_casestudy(&mut edu, "education").unwrap();
        assert!(edu.contains(&Fact::intra(
            "strategy",
            "explain_function",
            "use_workflow_metaphor",
            d("design_background@cs")
        )));

        let mut ent = FactStore::new();
        load_builtin_casestudy(&mut ent, "enterprise").unwrap();
        let fusion = ent
            .match_pattern(
                &FactPattern::relation("fuses_with").with_domain(d("engineering+product")),
            )
            .unwrap();
        assert_eq!(fusion.len(), 1);
        assert_eq!(
            fusion[0].primary_domain().canonical(),
            "engineering+product"
        );
        assert!(ent.contains(&Fact::fusion(
            "fuses_with",
            "user_experience",
            "technical_feasibility",
            "integrated_product_spec",
            d("product+engineering")
        )));

        let mut tech = FactStore::new();
        load_builtin_casestudy(&mut tech, "techdocs").unwrap();
        assert!(tech.contains(&Fact::intra(
            "evolves_to",
            "class_component",
            "functional_component",
            d("react@paradigm_shift")
        )));

        let mut cbt = FactStore::new();
        load_builtin_casestudy(&mut cbt, "cbt").unwrap();
        assert!(cbt.contains(&Fact::intra(
            "patient",
            "Zhang_San",
            "28",
            d("software_engineer")
        )));
        assert!(cbt.contains(&Fact::intra(
            "cognitive_pattern",
            "Zhang_San",
            "all_or_nothing_thinking",
            d("0.85")
        )));
    }
}
