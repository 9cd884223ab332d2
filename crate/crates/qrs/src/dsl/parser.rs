//! Recursive-descent parser for `.qid` documents and bare expressions.
//!
//! Precedence, tightest first: `^`, unary `-`, `*` `/`, `+` `-`.
//! Power exponents and qpow arguments are parsed in the integer
//! sub-language, which has the same operator shape plus the quantified sums
//! rsum{...} and ltsum{...}.

use thiserror::Error;

use super::ast::*;
use super::token::{tokenize, LexError, Pos, Tok, Token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("parse error at {pos}: expected {expected}, found '{found}'")]
    Unexpected {
        pos: Pos,
        expected: String,
        found: String,
    },
    #[error("parse error: unexpected end of input, expected {expected}")]
    Eof { expected: String },
}

pub struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    pub fn new(source: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: tokenize(source)?,
            at: 0,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.tok)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.toks.get(self.at).cloned();
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn err_here(&self, expected: &str) -> ParseError {
        match self.toks.get(self.at) {
            Some(t) => ParseError::Unexpected {
                pos: t.pos,
                expected: expected.to_string(),
                found: t.tok.to_string(),
            },
            None => ParseError::Eof {
                expected: expected.to_string(),
            },
        }
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t == want => {
                self.advance();
                Ok(())
            }
            _ => Err(self.err_here(what)),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                if let Some(Token {
                    tok: Tok::Ident(s), ..
                }) = self.advance()
                {
                    Ok(s)
                } else {
                    unreachable!()
                }
            }
            _ => Err(self.err_here(what)),
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if let Some(Tok::Ident(s)) = self.peek() {
            if s == kw {
                self.advance();
                return true;
            }
        }
        false
    }

    // ----------------------------------------------------------- documents

    pub fn parse_document(&mut self) -> Result<IdentityDoc, ParseError> {
        if !self.eat_keyword("identity") {
            return Err(self.err_here("identity document"));
        }
        let id = self.expect_ident("identity name")?;
        self.expect(&Tok::LBrace, "'{'")?;

        let mut dim = DimSpec::Generic;
        let mut regime = None;
        let mut scalars = Vec::new();
        let mut vectors = Vec::new();
        let mut ints = Vec::new();
        let mut uses = Vec::new();
        let mut lhs = None;
        let mut rhs = None;

        loop {
            match self.peek() {
                Some(Tok::RBrace) => {
                    self.advance();
                    break;
                }
                Some(Tok::Ident(kw)) => {
                    let kw = kw.clone();
                    match kw.as_str() {
                        "dim" => {
                            self.advance();
                            dim = match self.peek() {
                                Some(Tok::Int(v)) => {
                                    let v = *v;
                                    self.advance();
                                    DimSpec::Fixed(v as usize)
                                }
                                Some(Tok::Ident(s)) if s == "generic" => {
                                    self.advance();
                                    DimSpec::Generic
                                }
                                _ => return Err(self.err_here("dimension ('generic' or integer)")),
                            };
                            self.expect(&Tok::Semi, "';'")?;
                        }
                        "regime" => {
                            self.advance();
                            let r = self.expect_ident("regime name")?;
                            regime = Some(match r.as_str() {
                                "terminating" => Regime::Terminating,
                                "nonterminating" => Regime::Nonterminating,
                                _ => return Err(self.err_here("'terminating' or 'nonterminating'")),
                            });
                            self.expect(&Tok::Semi, "';'")?;
                        }
                        "params" => {
                            self.advance();
                            loop {
                                let name = self.expect_ident("parameter name")?;
                                if self.peek() == Some(&Tok::LBracket) {
                                    self.advance();
                                    self.expect(&Tok::RBracket, "']'")?;
                                    vectors.push(name);
                                } else {
                                    scalars.push(name);
                                }
                                if self.peek() == Some(&Tok::Comma) {
                                    self.advance();
                                } else {
                                    break;
                                }
                            }
                            self.expect(&Tok::Semi, "';'")?;
                        }
                        "iparams" => {
                            self.advance();
                            loop {
                                ints.push(self.expect_ident("integer parameter name")?);
                                if self.peek() == Some(&Tok::Comma) {
                                    self.advance();
                                } else {
                                    break;
                                }
                            }
                            self.expect(&Tok::Semi, "';'")?;
                        }
                        "uses" => {
                            self.advance();
                            loop {
                                uses.push(self.expect_ident("abstract family name")?);
                                if self.peek() == Some(&Tok::Comma) {
                                    self.advance();
                                } else {
                                    break;
                                }
                            }
                            self.expect(&Tok::Semi, "';'")?;
                        }
                        "lhs" => {
                            self.advance();
                            self.expect(&Tok::LBrace, "'{'")?;
                            lhs = Some(self.parse_expr()?);
                            self.expect(&Tok::RBrace, "'}'")?;
                        }
                        "rhs" => {
                            self.advance();
                            self.expect(&Tok::LBrace, "'{'")?;
                            rhs = Some(self.parse_expr()?);
                            self.expect(&Tok::RBrace, "'}'")?;
                        }
                        _ => return Err(self.err_here("document clause")),
                    }
                }
                _ => return Err(self.err_here("document clause or '}'")),
            }
        }
        if self.peek().is_some() {
            return Err(self.err_here("end of document"));
        }
        let regime = regime.ok_or_else(|| ParseError::Eof {
            expected: "regime clause".to_string(),
        })?;
        let lhs = lhs.ok_or_else(|| ParseError::Eof {
            expected: "lhs block".to_string(),
        })?;
        let rhs = rhs.ok_or_else(|| ParseError::Eof {
            expected: "rhs block".to_string(),
        })?;
        Ok(IdentityDoc {
            id,
            dim,
            regime,
            scalars,
            vectors,
            ints,
            uses,
            lhs,
            rhs,
        })
    }

    // --------------------------------------------------------- expressions

    pub fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.advance();
                    let rhs = self.parse_term()?;
                    lhs = Expr::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.advance();
                    let rhs = self.parse_term()?;
                    lhs = Expr::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.advance();
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.advance();
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.advance();
            let inner = self.parse_unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.advance();
            let exp = self.parse_int_atom()?;
            return Ok(Expr::Pow(Box::new(base), exp));
        }
        Ok(base)
    }

    fn parse_idx_var(&mut self) -> Result<IdxVar, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == "r" => {
                self.advance();
                Ok(IdxVar::R)
            }
            Some(Tok::Ident(s)) if s == "s" => {
                self.advance();
                Ok(IdxVar::S)
            }
            Some(Tok::Int(v)) => {
                let v = *v;
                self.advance();
                Ok(IdxVar::Num(v))
            }
            _ => Err(self.err_here("index variable 'r', 's' or component number")),
        }
    }

    fn parse_idx_vec(&mut self) -> Result<IdxVec, ParseError> {
        let name = self.expect_ident("index name")?;
        let mut v = IdxVec::Var(name);
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.advance();
                    let rhs = self.expect_ident("index name")?;
                    v = IdxVec::Add(Box::new(v), Box::new(IdxVec::Var(rhs)));
                }
                Some(Tok::Minus) => {
                    self.advance();
                    let rhs = self.expect_ident("index name")?;
                    v = IdxVec::Sub(Box::new(v), Box::new(IdxVec::Var(rhs)));
                }
                _ => return Ok(v),
            }
        }
    }

    fn quant_kind(name: &str) -> Option<QuantKind> {
        match name {
            "prodr" => Some(QuantKind::ProdR),
            "prodrs" => Some(QuantKind::ProdRS),
            "prodrs_ne" => Some(QuantKind::ProdRsNe),
            "prodrs_lt" => Some(QuantKind::ProdRsLt),
            "prodrs_le" => Some(QuantKind::ProdRsLe),
            _ => None,
        }
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.advance();
                Ok(Expr::Int(v))
            }
            Some(Tok::LParen) => {
                self.advance();
                let e = self.parse_expr()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if let Some(kind) = Self::quant_kind(&name) {
                    self.advance();
                    self.expect(&Tok::LBrace, "'{'")?;
                    let body = self.parse_expr()?;
                    self.expect(&Tok::RBrace, "'}'")?;
                    return Ok(Expr::Quant(kind, Box::new(body)));
                }
                match name.as_str() {
                    "qp" => {
                        self.advance();
                        self.expect(&Tok::LParen, "'('")?;
                        let base = self.parse_expr()?;
                        self.expect(&Tok::Semi, "';'")?;
                        let len = if self.eat_keyword("inf") {
                            LenExpr::Inf
                        } else {
                            LenExpr::Int(self.parse_int_expr()?)
                        };
                        self.expect(&Tok::RParen, "')'")?;
                        Ok(Expr::Qp(Box::new(base), len))
                    }
                    "qpow" => {
                        self.advance();
                        self.expect(&Tok::LParen, "'('")?;
                        let e = self.parse_int_expr()?;
                        self.expect(&Tok::RParen, "')'")?;
                        Ok(Expr::QPow(e))
                    }
                    "sum" => {
                        self.advance();
                        self.expect(&Tok::LParen, "'('")?;
                        let idx = self.expect_ident("summation index")?;
                        if !self.eat_keyword("in") {
                            return Err(self.err_here("'in'"));
                        }
                        if !self.eat_keyword("box") {
                            return Err(self.err_here("'box'"));
                        }
                        self.expect(&Tok::LParen, "'('")?;
                        let bounds = if self.eat_keyword("inf") {
                            Bounds::Inf
                        } else {
                            Bounds::Vec(self.parse_idx_vec()?)
                        };
                        self.expect(&Tok::RParen, "')'")?;
                        self.expect(&Tok::RParen, "')'")?;
                        self.expect(&Tok::LBrace, "'{'")?;
                        let body = self.parse_expr()?;
                        self.expect(&Tok::RBrace, "'}'")?;
                        Ok(Expr::Sum {
                            idx,
                            bounds,
                            body: Box::new(body),
                        })
                    }
                    "delta" => {
                        self.advance();
                        self.expect(&Tok::LParen, "'('")?;
                        let idx = self.expect_ident("index name")?;
                        self.expect(&Tok::RParen, "')'")?;
                        Ok(Expr::Delta(idx))
                    }
                    "beta" | "Acoef" => {
                        self.advance();
                        self.expect(&Tok::LParen, "'('")?;
                        let arg = self.parse_idx_vec()?;
                        self.expect(&Tok::RParen, "')'")?;
                        Ok(Expr::SeqRef(name, arg))
                    }
                    "K" | "H" => {
                        self.advance();
                        self.expect(&Tok::LParen, "'('")?;
                        let arg = if let Some(Tok::Ident(s)) = self.peek() {
                            if s == "y" {
                                self.advance();
                                FunArg::AtY
                            } else {
                                FunArg::AtQpow(self.parse_idx_vec()?)
                            }
                        } else {
                            FunArg::AtQpow(self.parse_idx_vec()?)
                        };
                        self.expect(&Tok::RParen, "')'")?;
                        Ok(Expr::FunRef(name, arg))
                    }
                    _ => {
                        self.advance();
                        if self.peek() == Some(&Tok::LBracket) {
                            self.advance();
                            let idx = self.parse_idx_var()?;
                            self.expect(&Tok::RBracket, "']'")?;
                            Ok(Expr::Indexed(name, idx))
                        } else {
                            Ok(Expr::Scalar(name))
                        }
                    }
                }
            }
            _ => Err(self.err_here("expression")),
        }
    }

    // ------------------------------------------------ integer sub-language

    pub fn parse_int_expr(&mut self) -> Result<IntExpr, ParseError> {
        let mut lhs = self.parse_int_term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.advance();
                    let rhs = self.parse_int_term()?;
                    lhs = IntExpr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.advance();
                    let rhs = self.parse_int_term()?;
                    lhs = IntExpr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_int_term(&mut self) -> Result<IntExpr, ParseError> {
        let mut lhs = self.parse_int_unary()?;
        while self.peek() == Some(&Tok::Star) {
            self.advance();
            let rhs = self.parse_int_unary()?;
            lhs = IntExpr::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_int_unary(&mut self) -> Result<IntExpr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.advance();
            let inner = self.parse_int_unary()?;
            return Ok(IntExpr::Neg(Box::new(inner)));
        }
        self.parse_int_atom()
    }

    fn parse_int_atom(&mut self) -> Result<IntExpr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.advance();
                Ok(IntExpr::Lit(v))
            }
            Some(Tok::Weight(name)) => {
                self.advance();
                Ok(IntExpr::Weight(name))
            }
            Some(Tok::LParen) => {
                self.advance();
                let e = self.parse_int_expr()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "r" => {
                    self.advance();
                    Ok(IntExpr::R)
                }
                "s" => {
                    self.advance();
                    Ok(IntExpr::S)
                }
                "wt" => {
                    self.advance();
                    self.expect(&Tok::LParen, "'('")?;
                    let idx = self.expect_ident("index name")?;
                    self.expect(&Tok::RParen, "')'")?;
                    Ok(IntExpr::Weight(idx))
                }
                "binom2" => {
                    self.advance();
                    self.expect(&Tok::LParen, "'('")?;
                    let e = self.parse_int_expr()?;
                    self.expect(&Tok::RParen, "')'")?;
                    Ok(IntExpr::Binom2(Box::new(e)))
                }
                "rsum" | "ltsum" => {
                    self.advance();
                    self.expect(&Tok::LBrace, "'{'")?;
                    let e = self.parse_int_expr()?;
                    self.expect(&Tok::RBrace, "'}'")?;
                    Ok(if name == "rsum" {
                        IntExpr::RSum(Box::new(e))
                    } else {
                        IntExpr::LtSum(Box::new(e))
                    })
                }
                _ => {
                    self.advance();
                    if self.peek() == Some(&Tok::LBracket) {
                        self.advance();
                        let idx = self.parse_idx_var()?;
                        self.expect(&Tok::RBracket, "']'")?;
                        Ok(IntExpr::Comp(name, idx))
                    } else {
                        Ok(IntExpr::Param(name))
                    }
                }
            },
            _ => Err(self.err_here("integer expression")),
        }
    }
}

/// Parse a full identity document (one identity per file).
pub fn parse_document(source: &str) -> Result<IdentityDoc, ParseError> {
    Parser::new(source)?.parse_document()
}

/// Parse a bare term expression (used by the H-factor menu).
pub fn parse_expr(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(source)?;
    let e = p.parse_expr()?;
    if p.peek().is_some() {
        return Err(p.err_here("end of expression"));
    }
    Ok(e)
}
