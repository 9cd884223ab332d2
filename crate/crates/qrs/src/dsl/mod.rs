//! The `.qid` identity language: tokenizer, recursive-descent parser,
//! binder/compiler to evaluators, and a canonical pretty-printer.

pub mod ast;
pub mod compile;
pub mod parser;
pub mod pretty;
pub mod token;

pub use ast::{DimSpec, Expr, IdentityDoc, Regime};
pub use compile::{compile, eval_bare_expr, AbstractFun, CompileError, CompiledSide, FunTable, SideEnv, TruncSettings};
pub use parser::{parse_document, parse_expr, ParseError};
