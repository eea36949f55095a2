use std::sync::Arc;

use super::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    /// Bare atom: `[A-Za-z0-9_][A-Za-z0-9_.\-]*`, never ending in `.`.
    Atom(String),
    /// Single-quoted atom, unescaped.
    Quoted(String),
    /// Double-quoted string, unescaped.
    Str(String),
    /// `@name`
    Directive(String),
    LParen,
    RParen,
    Comma,
    Dot,
}

impl Token {
    pub fn describe(&self) -> String {
        match self {
            Token::Atom(a) => format!("atom `{a}`"),
            Token::Quoted(q) => format!("quoted atom '{q}'"),
            Token::Str(s) => format!("string \"{s}\""),
            Token::Directive(d) => format!("directive `@{d}`"),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Comma => "`,`".into(),
            Token::Dot => "`.`".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub token: Token,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub struct LexError {
    pub span: SourceSpan,
    pub message: String,
}

fn atom_start(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn atom_continue(c: char) -> bool {
    atom_start(c) || c == '-' || c == '.'
}

/// Tokenizes native fact-file text. Lexing continues past errors.
pub fn tokenize(source: &str, file: &Arc<str>) -> (Vec<Spanned>, Vec<LexError>) {
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    let span = |line, column| SourceSpan {
        file: file.clone(),
        line,
        column,
    };

    while i < chars.len() {
        let c = chars[i];
        let start = span(line, col);
        let advance = |i: &mut usize, col: &mut usize, n: usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(&mut i, &mut col, 1),
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    advance(&mut i, &mut col, 1);
                }
            }
            '(' | ')' | ',' | '.' => {
                let token = match c {
                    '(' => Token::LParen,
                    ')' => Token::RParen,
                    ',' => Token::Comma,
                    _ => Token::Dot,
                };
                tokens.push(Spanned { token, span: start });
                advance(&mut i, &mut col, 1);
            }
            '@' => {
                advance(&mut i, &mut col, 1);
                let begin = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    advance(&mut i, &mut col, 1);
                }
                if begin == i {
                    errors.push(LexError {
                        span: start,
                        message: "expected a directive name after `@`".into(),
                    });
                } else {
                    tokens.push(Spanned {
                        token: Token::Directive(chars[begin..i].iter().collect()),
                        span: start,
                    });
                }
            }
            '\'' | '"' => {
                let delim = c;
                advance(&mut i, &mut col, 1);
                let mut text = String::new();
                let mut closed = false;
                while i < chars.len() {
                    let ch = chars[i];
                    if ch == '\n' {
                        break;
                    }
                    if ch == '\\' && i + 1 < chars.len() {
                        let escaped = match chars[i + 1] {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        };
                        text.push(escaped);
                        advance(&mut i, &mut col, 2);
                        continue;
                    }
                    if ch == delim {
                        if delim == '\'' && chars.get(i + 1) == Some(&'\'') {
                            text.push('\'');
                            advance(&mut i, &mut col, 2);
                            continue;
                        }
                        advance(&mut i, &mut col, 1);
                        closed = true;
                        break;
                    }
                    text.push(ch);
                    advance(&mut i, &mut col, 1);
                }
                if closed {
                    let token = if delim == '"' {
                        Token::Str(text)
                    } else {
                        Token::Quoted(text)
                    };
                    tokens.push(Spanned { token, span: start });
                } else {
                    errors.push(LexError {
                        span: start,
                        message: "unterminated quoted text".into(),
                    });
                }
            }
            c if atom_start(c) => {
                let begin = i;
                while i < chars.len() && atom_continue(chars[i]) {
                    // A dot only belongs to the atom when more atom text follows.
                    if chars[i] == '.'
                        && !chars
                            .get(i + 1)
                            .is_some_and(|&n| atom_continue(n) && n != '.')
                    {
                        break;
                    }
                    advance(&mut i, &mut col, 1);
                }
                tokens.push(Spanned {
                    token: Token::Atom(chars[begin..i].iter().collect()),
                    span: start,
                });
            }
            other => {
                errors.push(LexError {
                    span: start,
                    message: format!("unexpected character {other:?}"),
                });
                advance(&mut i, &mut col, 1);
            }
        }
    }
    (tokens, errors)
}
