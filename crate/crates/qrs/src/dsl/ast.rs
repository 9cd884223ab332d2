//! Abstract syntax for term expressions and identity documents.

/// Quantifier index variable inside a product body, or a literal component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxVar {
    R,
    S,
    Num(i64), // 1-based literal component, used by one-variable documents
}

/// Integer-valued expressions: the exponent sub-language of qpow, qp lengths
/// and `^` powers. Closed under +, -, * with quantified sums, so every
/// exponent printed in the displays (including the quadratic ones, e.g.
/// sum_{r<s} k_r k_s and |j| |m|) is expressible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntExpr {
    Lit(i64),
    R,
    S,
    /// Component of a bound index vector or of the box: k[r], N[s], j[2].
    Comp(String, IdxVar),
    /// wt(k) or |k|.
    Weight(String),
    /// Declared integer parameter.
    Param(String),
    Binom2(Box<IntExpr>),
    /// sum over r = 1..n of the body.
    RSum(Box<IntExpr>),
    /// sum over ordered pairs r < s of the body.
    LtSum(Box<IntExpr>),
    Neg(Box<IntExpr>),
    Add(Box<IntExpr>, Box<IntExpr>),
    Sub(Box<IntExpr>, Box<IntExpr>),
    Mul(Box<IntExpr>, Box<IntExpr>),
}

/// qp length: integer expression or the infinite product marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LenExpr {
    Int(IntExpr),
    Inf,
}

/// Index-vector expressions: sum bounds and abstract-function arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxVec {
    /// A bound index name or N.
    Var(String),
    Add(Box<IdxVec>, Box<IdxVec>),
    Sub(Box<IdxVec>, Box<IdxVec>),
}

/// Sum bounds: an index-vector expression or the numeric truncation box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bounds {
    Vec(IdxVec),
    /// `box(inf)`: the series cutoff supplied by the numeric driver.
    Inf,
}

/// Argument of an abstract function reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunArg {
    /// K(t): the function at y = q^t.
    AtQpow(IdxVec),
    /// K(y): the function at the point's own y vector (nonterminating only).
    AtY,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantKind {
    /// prod over r = 1..n
    ProdR,
    /// prod over all ordered pairs (r, s), diagonal included
    ProdRS,
    /// prod over ordered pairs r != s
    ProdRsNe,
    /// prod over r < s
    ProdRsLt,
    /// prod over r <= s
    ProdRsLe,
}

impl QuantKind {
    pub fn name(&self) -> &'static str {
        match self {
            QuantKind::ProdR => "prodr",
            QuantKind::ProdRS => "prodrs",
            QuantKind::ProdRsNe => "prodrs_ne",
            QuantKind::ProdRsLt => "prodrs_lt",
            QuantKind::ProdRsLe => "prodrs_le",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    /// Scalar parameter reference (q included).
    Scalar(String),
    /// Vector parameter or index component used as a value: x[r], y[s], c[1].
    Indexed(String, IdxVar),
    /// qp(base; len): finite or truncated-infinite q-Pochhammer.
    Qp(Box<Expr>, LenExpr),
    /// qpow(E) = q^E.
    QPow(IntExpr),
    /// Integer power with an integer-expression exponent.
    Pow(Box<Expr>, IntExpr),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Quant(QuantKind, Box<Expr>),
    Sum {
        idx: String,
        bounds: Bounds,
        body: Box<Expr>,
    },
    Delta(String),
    /// Coefficient family reference: beta(j) or Acoef(j).
    SeqRef(String, IdxVec),
    /// Abstract prefactor reference: K(...) or H(...).
    FunRef(String, FunArg),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Terminating,
    Nonterminating,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Terminating => "terminating",
            Regime::Nonterminating => "nonterminating",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimSpec {
    Generic,
    Fixed(usize),
}

/// A parsed identity document: one identity per `.qid` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityDoc {
    pub id: String,
    pub dim: DimSpec,
    pub regime: Regime,
    pub scalars: Vec<String>,
    pub vectors: Vec<String>,
    pub ints: Vec<String>,
    pub uses: Vec<String>,
    pub lhs: Expr,
    pub rhs: Expr,
}
