//! One-way export to ISO-Prolog clause syntax, and a reader for the subset
//! of Prolog that the export produces.

use std::fmt::Write as _;
use std::sync::Arc;

use super::{build_fact, Diagnostic, Severity, SourceSpan, Term};
use crate::fact::Fact;
use crate::relation::{star_name, RelationRegistry, RelationShape, PREREQUISITE_RELATION};
use crate::store::FactStore;

use super::lexer::Token;

fn is_plain_atom(text: &str) -> bool {
    let mut chars = text.chars();
    chars.next().is_some_and(|c| c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Renders `text` as a Prolog atom, quoting whenever it would otherwise read
/// as a variable, a number or several tokens.
pub fn prolog_atom(text: &str) -> String {
    if is_plain_atom(text) {
        text.to_string()
    } else {
        quoted(text)
    }
}

fn quoted(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('\'');
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn prolog_fact(fact: &Fact) -> String {
    let args: Vec<String> = match fact {
        Fact::Intra {
            subject,
            object,
            domain,
            ..
        } => vec![
            prolog_atom(subject.as_str()),
            prolog_atom(object.as_str()),
            quoted(domain.canonical()),
        ],
        Fact::Cross {
            left,
            right,
            left_domain,
            right_domain,
            ..
        } => vec![
            prolog_atom(left.as_str()),
            prolog_atom(right.as_str()),
            quoted(left_domain.canonical()),
            quoted(right_domain.canonical()),
        ],
        Fact::Fusion {
            left,
            right,
            fused,
            domain,
            ..
        } => vec![
            prolog_atom(left.as_str()),
            prolog_atom(right.as_str()),
            prolog_atom(fused.as_str()),
            quoted(domain.canonical()),
        ],
    };
    format!("{}({}).", fact.relation(), args.join(", "))
}

fn variables(shape: RelationShape) -> &'static str {
    match shape {
        RelationShape::Intra => "X, Y, D",
        RelationShape::Cross => "X, Y, D1, D2",
        RelationShape::Fusion => "X, Y, F, D",
    }
}

fn swapped_variables(shape: RelationShape) -> &'static str {
    match shape {
        RelationShape::Intra => "Y, X, D",
        RelationShape::Cross => "Y, X, D2, D1",
        RelationShape::Fusion => "Y, X, F, D",
    }
}

/// ISO-Prolog rendering of a store: dynamic declarations for every
/// registered relation, every asserted fact, and the closure rules.
pub fn export_interop(store: &FactStore) -> String {
    let registry = store.registry();
    let mut out = String::from("% CDC knowledge base, interop export\n\n");
    for spec in registry.iter() {
        let _ = writeln!(out, ":- dynamic {}/{}.", spec.name, spec.arity());
    }

    for spec in registry.iter() {
        let mut facts: Vec<&Fact> = store.facts_of(&spec.name).collect();
        facts.sort_by(|a, b| a.file_order_key().cmp(&b.file_order_key()));
        if facts.is_empty() && spec.inherits_via.is_none() {
            continue;
        }
        out.push('\n');
        for fact in facts {
            out.push_str(&prolog_fact(fact));
            out.push('\n');
        }
        if let Some(carrier) = &spec.inherits_via {
            let _ = writeln!(
                out,
                "{name}(X, A, D) :-\n    {carrier}(X, Y, D),\n    {name}(Y, A, D).",
                name = spec.name
            );
        }
    }

    let mut rules = String::new();
    for spec in registry.iter() {
        let base = if spec.symmetric {
            let helper = format!("{}_sym", spec.name);
            let _ = writeln!(
                rules,
                "{helper}({vars}) :- {name}({vars}).\n{helper}({vars}) :- {name}({swapped}).",
                vars = variables(spec.shape),
                swapped = swapped_variables(spec.shape),
                name = spec.name
            );
            helper
        } else {
            spec.name.clone()
        };
        if spec.reflexive {
            let _ = writeln!(
                rules,
                "{name}_refl(X, X, D) :- {base}(X, _, D).\n{name}_refl(Y, Y, D) :- {base}(_, Y, D).\n{name}_refl(X, Y, D) :- {base}(X, Y, D).",
                name = spec.name
            );
        }
        if spec.transitive {
            let star = star_name(&spec.name);
            let _ = writeln!(
                rules,
                "{star}(X, Y, D) :-\n    {base}(X, Y, D).\n{star}(X, Z, D) :-\n    {base}(X, Y, D),\n    {star}(Y, Z, D)."
            );
        }
    }
    if registry
        .get(PREREQUISITE_RELATION)
        .is_some_and(|s| s.transitive)
    {
        let _ = writeln!(
            rules,
            "all_prerequisites(Target, Domain, Prereqs) :-\n    findall(P, {}(Target, P, Domain), Found),\n    sort(Found, Prereqs).",
            star_name(PREREQUISITE_RELATION)
        );
    }
    if !rules.is_empty() {
        out.push_str("\n% closure rules\n");
        out.push_str(&rules);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum PTok {
    Name(String),
    Quoted(String),
    Var(String),
    Number(String),
    Punct(char),
    Neck,
    End,
}

struct PLexed {
    tok: PTok,
    line: usize,
    column: usize,
}

fn lex_prolog(source: &str) -> Result<Vec<PLexed>, (usize, usize, String)> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut push = |tok| {
            out.push(PLexed {
                tok,
                line: l0,
                column: c0,
            })
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            i += 1;
            col += 1;
        } else if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c == ':' && chars.get(i + 1) == Some(&'-') {
            push(PTok::Neck);
            i += 2;
            col += 2;
        } else if c == '.'
            && chars
                .get(i + 1)
                .is_none_or(|n| n.is_whitespace() || *n == '%')
        {
            push(PTok::End);
            i += 1;
            col += 1;
        } else if "(),[]|/".contains(c) {
            push(PTok::Punct(c));
            i += 1;
            col += 1;
        } else if c == '\'' {
            let mut text = String::new();
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err((l0, c0, "unterminated quoted atom".into())),
                    Some('\\') => {
                        let escaped = match chars.get(i + 1) {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some(&other) => other,
                            None => return Err((l0, c0, "unterminated quoted atom".into())),
                        };
                        text.push(escaped);
                        i += 2;
                        col += 2;
                    }
                    Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                        text.push('\'');
                        i += 2;
                        col += 2;
                    }
                    Some('\'') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some(&ch) => {
                        text.push(ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            push(PTok::Quoted(text));
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let begin = i;
            if c.is_ascii_digit() {
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || (chars[i] == '.'
                            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit())))
                {
                    i += 1;
                }
            } else {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
            }
            let text: String = chars[begin..i].iter().collect();
            col += i - begin;
            let tok = if c.is_ascii_digit() {
                PTok::Number(text)
            } else if c.is_ascii_uppercase() || c == '_' {
                PTok::Var(text)
            } else {
                PTok::Name(text)
            };
            push(tok);
        } else {
            return Err((l0, c0, format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

/// A Prolog term from the supported subset.
#[derive(Debug, Clone, PartialEq)]
pub enum PTerm {
    Atom {
        text: String,
        quoted: bool,
    },
    Var(String),
    Number(String),
    Compound {
        name: String,
        args: Vec<PTerm>,
    },
    List(Vec<PTerm>),
    /// `name/arity` in a dynamic declaration.
    Indicator {
        name: String,
        arity: usize,
    },
}

impl PTerm {
    fn is_ground(&self) -> bool {
        match self {
            PTerm::Var(_) => false,
            PTerm::Compound { args, .. } => args.iter().all(PTerm::is_ground),
            PTerm::List(items) => items.iter().all(PTerm::is_ground),
            _ => true,
        }
    }
}

/// A clause other than a ground fact.
#[derive(Debug, Clone, PartialEq)]
pub enum InteropClause {
    Dynamic { name: String, arity: usize },
    Rule { head: PTerm, body: Vec<PTerm> },
}

#[derive(Debug, Clone, Default)]
pub struct InteropRead {
    pub facts: Vec<Fact>,
    pub clauses: Vec<InteropClause>,
    pub diagnostics: Vec<Diagnostic>,
}

struct PParser<'a> {
    toks: &'a [PLexed],
    pos: usize,
}

impl PParser<'_> {
    fn peek(&self) -> Option<&PTok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn position(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or((1, 1), |t| (t.line, t.column))
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, (usize, usize, String)> {
        let (l, c) = self.position();
        Err((l, c, message.into()))
    }

    fn eat(&mut self, want: &PTok) -> Result<(), (usize, usize, String)> {
        if self.peek() == Some(want) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected {want:?}, found {:?}", self.peek()))
        }
    }

    fn term(&mut self) -> Result<PTerm, (usize, usize, String)> {
        let Some(tok) = self.peek().cloned() else {
            return self.fail("unexpected end of input");
        };
        self.pos += 1;
        let term = match tok {
            PTok::Var(v) => PTerm::Var(v),
            PTok::Number(n) => PTerm::Number(n),
            PTok::Name(name) | PTok::Quoted(name) if self.peek() == Some(&PTok::Punct('(')) => {
                self.pos += 1;
                let args = self.sequence(')')?;
                PTerm::Compound { name, args }
            }
            PTok::Name(text) => PTerm::Atom {
                text,
                quoted: false,
            },
            PTok::Quoted(text) => PTerm::Atom { text, quoted: true },
            PTok::Punct('[') => {
                if self.peek() == Some(&PTok::Punct(']')) {
                    self.pos += 1;
                    PTerm::List(Vec::new())
                } else {
                    let items = self.sequence(']')?;
                    PTerm::List(items)
                }
            }
            other => {
                self.pos -= 1;
                return self.fail(format!("expected a term, found {other:?}"));
            }
        };
        if let (PTerm::Atom { text, .. }, Some(PTok::Punct('/'))) = (&term, self.peek()) {
            let name = text.clone();
            self.pos += 1;
            return match self.peek().cloned() {
                Some(PTok::Number(n)) => {
                    self.pos += 1;
                    let arity = n.parse().map_or_else(|_| self.fail("bad arity"), Ok)?;
                    Ok(PTerm::Indicator { name, arity })
                }
                _ => self.fail("expected an arity after `/`"),
            };
        }
        Ok(term)
    }

    fn sequence(&mut self, close: char) -> Result<Vec<PTerm>, (usize, usize, String)> {
        let mut items = vec![self.term()?];
        loop {
            match self.peek() {
                Some(PTok::Punct(',')) => {
                    self.pos += 1;
                    items.push(self.term()?);
                }
                Some(PTok::Punct(c)) if *c == close => {
                    self.pos += 1;
                    return Ok(items);
                }
                other => return self.fail(format!("expected `,` or `{close}`, found {other:?}")),
            }
        }
    }

    fn body(&mut self) -> Result<Vec<PTerm>, (usize, usize, String)> {
        let mut goals = vec![self.term()?];
        while self.peek() == Some(&PTok::Punct(',')) {
            self.pos += 1;
            goals.push(self.term()?);
        }
        Ok(goals)
    }

    fn skip_clause(&mut self) {
        while let Some(t) = self.peek() {
            let end = *t == PTok::End;
            self.pos += 1;
            if end {
                break;
            }
        }
    }
}

fn to_term(arg: &PTerm, span: &SourceSpan) -> Option<Term> {
    let token = match arg {
        PTerm::Atom {
            text,
            quoted: false,
        } => Token::Atom(text.clone()),
        PTerm::Atom { text, quoted: true } => Token::Quoted(text.clone()),
        PTerm::Number(n) => Token::Atom(n.clone()),
        _ => return None,
    };
    Some(Term {
        token,
        span: span.clone(),
    })
}

/// Reads Prolog text, recovering ground facts of relations known to
/// `registry`. Rules and directives are returned as clauses.
pub fn read_interop(registry: &RelationRegistry, source: &str, file: &str) -> InteropRead {
    let file: Arc<str> = Arc::from(file);
    let mut read = InteropRead::default();
    let span_at = |line, column| SourceSpan {
        file: file.clone(),
        line,
        column,
    };
    let toks = match lex_prolog(source) {
        Ok(t) => t,
        Err((line, column, message)) => {
            read.diagnostics.push(Diagnostic {
                severity: Severity::Error,
                span: span_at(line, column),
                message,
            });
            return read;
        }
    };
    let mut p = PParser {
        toks: &toks,
        pos: 0,
    };
    while p.peek().is_some() {
        let (line, column) = p.position();
        let span = span_at(line, column);
        let result = (|| {
            if p.peek() == Some(&PTok::Neck) {
                p.pos += 1;
                // `:- dynamic a/1, b/2.` uses `dynamic` as a prefix operator.
                let directive = match p.peek() {
                    Some(PTok::Name(n))
                        if n == "dynamic"
                            && p.toks.get(p.pos + 1).map(|t| &t.tok) != Some(&PTok::Punct('(')) =>
                    {
                        p.pos += 1;
                        let indicators = p.body()?;
                        PTerm::Compound {
                            name: "dynamic".into(),
                            args: indicators,
                        }
                    }
                    _ => p.term()?,
                };
                p.eat(&PTok::End)?;
                return match directive {
                    PTerm::Compound { name, args } if name == "dynamic" => {
                        let mut declared = Vec::new();
                        for arg in args {
                            match arg {
                                PTerm::Indicator { name, arity } => {
                                    declared.push(InteropClause::Dynamic { name, arity })
                                }
                                _ => return p.fail("expected name/arity in dynamic declaration"),
                            }
                        }
                        Ok(declared)
                    }
                    _ => p.fail("unsupported directive"),
                };
            }
            let head = p.term()?;
            if p.peek() == Some(&PTok::Neck) {
                p.pos += 1;
                let body = p.body()?;
                p.eat(&PTok::End)?;
                return Ok(vec![InteropClause::Rule { head, body }]);
            }
            p.eat(&PTok::End)?;
            Ok::<_, (usize, usize, String)>(match head {
                PTerm::Compound { name, args } if PTerm::is_ground(&PTerm::List(args.clone())) => {
                    let terms: Option<Vec<Term>> = args.iter().map(|a| to_term(a, &span)).collect();
                    match terms {
                        Some(terms) if registry.contains(&name) => {
                            match build_fact(registry, &name, &terms, &span, false) {
                                Ok(fact) => read.facts.push(fact),
                                Err(d) => read.diagnostics.push(d),
                            }
                            Vec::new()
                        }
                        _ => vec![InteropClause::Rule {
                            head: PTerm::Compound { name, args },
                            body: Vec::new(),
                        }],
                    }
                }
                other => vec![InteropClause::Rule {
                    head: other,
                    body: Vec::new(),
                }],
            })
        })();
        match result {
            Ok(clauses) => read.clauses.extend(clauses),
            Err((line, column, message)) => {
                read.diagnostics.push(Diagnostic {
                    severity: Severity::Error,
                    span: span_at(line, column),
                    message,
                });
                p.skip_clause();
            }
        }
    }
    read
}
