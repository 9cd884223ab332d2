//! Tokenizer for `.qid` identity documents.
//!
//! Longest-match lexing with line/column positions; `#` starts a comment
//! running to end of line. Weights may be written `|k|`, which lexes as a
//! single weight token.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Weight(String), // |name|
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Int(v) => write!(f, "{v}"),
            Tok::Weight(s) => write!(f, "|{s}|"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBrace => write!(f, "{{"),
            Tok::RBrace => write!(f, "}}"),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::Semi => write!(f, ";"),
            Tok::Comma => write!(f, ","),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::Slash => write!(f, "/"),
            Tok::Caret => write!(f, "^"),
        }
    }
}

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lex error at {pos}: unexpected '{snippet}'")]
pub struct LexError {
    pub pos: Pos,
    pub snippet: String,
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = source.chars().peekable();

    macro_rules! push {
        ($tok:expr, $len:expr) => {{
            out.push(Token {
                tok: $tok,
                pos: Pos { line, col },
            });
            col += $len;
        }};
    }

    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&c2) = chars.peek() {
                    if c2 == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                chars.next();
                push!(Tok::LParen, 1);
            }
            ')' => {
                chars.next();
                push!(Tok::RParen, 1);
            }
            '{' => {
                chars.next();
                push!(Tok::LBrace, 1);
            }
            '}' => {
                chars.next();
                push!(Tok::RBrace, 1);
            }
            '[' => {
                chars.next();
                push!(Tok::LBracket, 1);
            }
            ']' => {
                chars.next();
                push!(Tok::RBracket, 1);
            }
            ';' => {
                chars.next();
                push!(Tok::Semi, 1);
            }
            ',' => {
                chars.next();
                push!(Tok::Comma, 1);
            }
            '+' => {
                chars.next();
                push!(Tok::Plus, 1);
            }
            '-' => {
                chars.next();
                push!(Tok::Minus, 1);
            }
            '*' => {
                chars.next();
                push!(Tok::Star, 1);
            }
            '/' => {
                chars.next();
                push!(Tok::Slash, 1);
            }
            '^' => {
                chars.next();
                push!(Tok::Caret, 1);
            }
            '|' => {
                let start = Pos { line, col };
                chars.next();
                col += 1;
                let mut name = String::new();
                while let Some(&c2) = chars.peek() {
                    if c2.is_ascii_alphanumeric() || c2 == '_' {
                        name.push(c2);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                if name.is_empty() || chars.peek() != Some(&'|') {
                    return Err(LexError {
                        pos: start,
                        snippet: "|".to_string(),
                    });
                }
                chars.next();
                col += 1;
                out.push(Token {
                    tok: Tok::Weight(name),
                    pos: start,
                });
            }
            c if c.is_ascii_digit() => {
                let start = Pos { line, col };
                let mut lit = String::new();
                while let Some(&c2) = chars.peek() {
                    if c2.is_ascii_digit() {
                        lit.push(c2);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let v: i64 = lit.parse().map_err(|_| LexError {
                    pos: start,
                    snippet: lit.clone(),
                })?;
                out.push(Token {
                    tok: Tok::Int(v),
                    pos: start,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = Pos { line, col };
                let mut name = String::new();
                while let Some(&c2) = chars.peek() {
                    if c2.is_ascii_alphanumeric() || c2 == '_' {
                        name.push(c2);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: Tok::Ident(name),
                    pos: start,
                });
            }
            other => {
                return Err(LexError {
                    pos: Pos { line, col },
                    snippet: other.to_string(),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn basic_stream() {
        assert_eq!(
            kinds("qp(a*x[r]; |k|)"),
            vec![
                Tok::Ident("qp".into()),
                Tok::LParen,
                Tok::Ident("a".into()),
                Tok::Star,
                Tok::Ident("x".into()),
                Tok::LBracket,
                Tok::Ident("r".into()),
                Tok::RBracket,
                Tok::Semi,
                Tok::Weight("k".into()),
                Tok::RParen,
            ]
        );
    }

    #[test]
    fn rational_literal_is_division() {
        assert_eq!(
            kinds("1/2"),
            vec![Tok::Int(1), Tok::Slash, Tok::Int(2)]
        );
    }

    #[test]
    fn lex_error_carries_position() {
        let err = tokenize("qp(a; @)").unwrap_err();
        assert_eq!(err.snippet, "@");
        assert_eq!(err.pos.line, 1);
        assert_eq!(err.pos.col, 7);
    }

    #[test]
    fn comments_skipped() {
        assert_eq!(
            kinds("a # trailing comment\n+ b"),
            vec![Tok::Ident("a".into()), Tok::Plus, Tok::Ident("b".into())]
        );
    }
}
