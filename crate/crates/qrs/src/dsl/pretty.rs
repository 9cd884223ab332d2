//! Canonical printer: output re-parses to the identical AST.

use super::ast::*;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add, ..) | Expr::Bin(BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul, ..) | Expr::Bin(BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn int_prec(e: &IntExpr) -> u8 {
    match e {
        IntExpr::Add(..) | IntExpr::Sub(..) => 1,
        IntExpr::Mul(..) => 2,
        IntExpr::Neg(_) => 3,
        _ => 5,
    }
}

fn idx_var(v: &IdxVar) -> String {
    match v {
        IdxVar::R => "r".to_string(),
        IdxVar::S => "s".to_string(),
        IdxVar::Num(n) => n.to_string(),
    }
}

pub fn print_int(e: &IntExpr) -> String {
    match e {
        IntExpr::Lit(v) => v.to_string(),
        IntExpr::R => "r".to_string(),
        IntExpr::S => "s".to_string(),
        IntExpr::Comp(name, v) => format!("{name}[{}]", idx_var(v)),
        IntExpr::Weight(name) => format!("wt({name})"),
        IntExpr::Param(name) => name.clone(),
        IntExpr::Binom2(a) => format!("binom2({})", print_int(a)),
        IntExpr::RSum(a) => format!("rsum{{{}}}", print_int(a)),
        IntExpr::LtSum(a) => format!("ltsum{{{}}}", print_int(a)),
        IntExpr::Neg(a) => {
            let inner = if int_prec(a) < 3 {
                format!("({})", print_int(a))
            } else {
                print_int(a)
            };
            format!("-{inner}")
        }
        IntExpr::Add(a, b) | IntExpr::Sub(a, b) | IntExpr::Mul(a, b) => {
            let (op, p) = match e {
                IntExpr::Add(..) => ("+", 1),
                IntExpr::Sub(..) => ("-", 1),
                _ => ("*", 2),
            };
            let ls = if int_prec(a) < p {
                format!("({})", print_int(a))
            } else {
                print_int(a)
            };
            // right side needs parens at equal precedence for - (left assoc)
            let rs = if int_prec(b) <= p && !matches!(op, "+") || int_prec(b) < p {
                format!("({})", print_int(b))
            } else {
                print_int(b)
            };
            format!("{ls} {op} {rs}")
        }
    }
}

fn idx_vec(v: &IdxVec) -> String {
    match v {
        IdxVec::Var(name) => name.clone(),
        IdxVec::Add(a, b) => format!("{}+{}", idx_vec(a), idx_vec(b)),
        IdxVec::Sub(a, b) => format!("{}-{}", idx_vec(a), idx_vec(b)),
    }
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Scalar(name) => name.clone(),
        Expr::Indexed(name, v) => format!("{name}[{}]", idx_var(v)),
        Expr::Qp(base, len) => {
            let l = match len {
                LenExpr::Int(ie) => print_int(ie),
                LenExpr::Inf => "inf".to_string(),
            };
            format!("qp({}; {l})", print_expr(base))
        }
        Expr::QPow(ie) => format!("qpow({})", print_int(ie)),
        Expr::Pow(base, ie) => {
            let b = if prec(base) < 5 {
                format!("({})", print_expr(base))
            } else {
                print_expr(base)
            };
            let needs_paren = !matches!(
                ie,
                IntExpr::Lit(_) | IntExpr::Weight(_) | IntExpr::Comp(..) | IntExpr::Param(_)
            );
            let x = if needs_paren {
                format!("({})", print_int(ie))
            } else {
                print_int(ie)
            };
            format!("{b}^{x}")
        }
        Expr::Neg(a) => {
            let inner = if prec(a) < 3 {
                format!("({})", print_expr(a))
            } else {
                print_expr(a)
            };
            format!("-{inner}")
        }
        Expr::Bin(op, a, b) => {
            let (sym, p) = match op {
                BinOp::Add => ("+", 1),
                BinOp::Sub => ("-", 1),
                BinOp::Mul => ("*", 2),
                BinOp::Div => ("/", 2),
            };
            let ls = if prec(a) < p {
                format!("({})", print_expr(a))
            } else {
                print_expr(a)
            };
            let rs = if prec(b) < p || (prec(b) == p && !matches!(op, BinOp::Add | BinOp::Mul)) {
                format!("({})", print_expr(b))
            } else {
                print_expr(b)
            };
            format!("{ls} {sym} {rs}")
        }
        Expr::Quant(kind, body) => format!("{}{{ {} }}", kind.name(), print_expr(body)),
        Expr::Sum { idx, bounds, body } => {
            let b = match bounds {
                Bounds::Vec(v) => idx_vec(v),
                Bounds::Inf => "inf".to_string(),
            };
            format!("sum({idx} in box({b})) {{ {} }}", print_expr(body))
        }
        Expr::Delta(idx) => format!("delta({idx})"),
        Expr::SeqRef(name, arg) => format!("{name}({})", idx_vec(arg)),
        Expr::FunRef(name, arg) => match arg {
            FunArg::AtQpow(v) => format!("{name}({})", idx_vec(v)),
            FunArg::AtY => format!("{name}(y)"),
        },
    }
}

/// Print a full document in canonical layout.
pub fn print_document(doc: &IdentityDoc) -> String {
    let mut s = format!("identity {} {{\n", doc.id);
    match doc.dim {
        DimSpec::Generic => s.push_str("  dim generic;\n"),
        DimSpec::Fixed(n) => s.push_str(&format!("  dim {n};\n")),
    }
    s.push_str(&format!("  regime {};\n", doc.regime.name()));
    if !doc.scalars.is_empty() || !doc.vectors.is_empty() {
        let mut parts: Vec<String> = doc.scalars.clone();
        parts.extend(doc.vectors.iter().map(|v| format!("{v}[]")));
        s.push_str(&format!("  params {};\n", parts.join(", ")));
    }
    if !doc.ints.is_empty() {
        s.push_str(&format!("  iparams {};\n", doc.ints.join(", ")));
    }
    if !doc.uses.is_empty() {
        s.push_str(&format!("  uses {};\n", doc.uses.join(", ")));
    }
    s.push_str(&format!("  lhs {{ {} }}\n", print_expr(&doc.lhs)));
    s.push_str(&format!("  rhs {{ {} }}\n", print_expr(&doc.rhs)));
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parser::{parse_document, parse_expr};

    #[test]
    fn print_reparse_fixed_point() {
        let sources = [
            "1 - a*x[r]/x[s]",
            "prodrs_lt{ (1 - qpow(k[r]-k[s])*x[r]/x[s]) / (1 - x[r]/x[s]) }",
            "(A*qpow(wt(N)))^wt(k) * qpow(rsum{(r-1)*k[r]} - ltsum{k[r]*k[s]})",
            "sum(j in box(k)) { qp(q*x[r]; j[r]+wt(j)) * beta(j) }",
            "(-1)^wt(j) * qpow(binom2(wt(j)+1))",
            "K(j+m) / qp(b; 2*j[1])",
            "a - b - c",
            "a / (b * c) - -d",
        ];
        for src in sources {
            let ast = parse_expr(src).unwrap();
            let printed = print_expr(&ast);
            let reparsed = parse_expr(&printed)
                .unwrap_or_else(|e| panic!("re-parse of '{printed}' failed: {e}"));
            assert_eq!(reparsed, ast, "round trip failed for '{src}' -> '{printed}'");
        }
    }

    #[test]
    fn document_round_trip() {
        let src = "identity toy { dim generic; regime terminating; params a, x[]; uses beta; \
                   lhs { sum(j in box(N)) { beta(j) } } rhs { qp(a; wt(N)) } }";
        let doc = parse_document(src).unwrap();
        let printed = print_document(&doc);
        let reparsed = parse_document(&printed).unwrap();
        assert_eq!(reparsed, doc);
    }
}
