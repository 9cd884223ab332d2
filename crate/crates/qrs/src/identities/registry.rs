//! The identity registry: every numbered identity of the engine, compiled
//! from its embedded `.qid` source(s), with anchors and reduction metadata.

use std::collections::BTreeMap;

use once_cell::sync::Lazy;

use crate::bailey::System;
use crate::dsl::ast::{DimSpec, IdentityDoc, Regime};
use crate::dsl::{compile, parse_document, CompiledSide};
use crate::error::{EvalError, EvalResult};

/// How the abstract K/H prefactor is realized during verification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunKind {
    /// Random exact samples on the box (valid because the identity is linear
    /// in the sampled values).
    RandomTable,
    /// Samples of a random polynomial f at alpha q^{j+1} (Liu's expansion).
    LiuPolynomial,
    /// A product expression from the H-factor menu, compiled from DSL text.
    MenuExpr,
}

pub struct CompiledPair {
    pub doc: IdentityDoc,
    pub lhs: CompiledSide,
    pub rhs: CompiledSide,
}

impl CompiledPair {
    fn build(source: &str) -> Self {
        let doc = parse_document(source).unwrap_or_else(|e| panic!("builtin qid: {e}"));
        let lhs = compile(&doc, &doc.lhs).unwrap_or_else(|e| panic!("builtin {}: {e}", doc.id));
        let rhs = compile(&doc, &doc.rhs).unwrap_or_else(|e| panic!("builtin {}: {e}", doc.id));
        CompiledPair { doc, lhs, rhs }
    }
}

pub enum EntryKind {
    /// A pair of independently evaluated sides per available regime.
    Sides {
        terminating: Option<CompiledPair>,
        nonterminating: Option<CompiledPair>,
    },
    /// Delegates to the Bailey-pair inversion machinery.
    Inversion(System),
}

pub struct IdentityEntry {
    pub id: &'static str,
    pub anchor: &'static str,
    pub kind: EntryKind,
    /// Named reductions printed in the source text.
    pub reductions: &'static [&'static str],
    /// Registered one-variable counterpart for n = 1 term-by-term reduction.
    pub n1_counterpart: Option<&'static str>,
    /// Realization of the abstract prefactor, when the identity uses one.
    pub fun_kind: Option<FunKind>,
}

impl IdentityEntry {
    pub fn dim(&self) -> DimSpec {
        match &self.kind {
            EntryKind::Sides {
                terminating,
                nonterminating,
            } => terminating
                .as_ref()
                .or(nonterminating.as_ref())
                .map(|p| p.doc.dim)
                .unwrap_or(DimSpec::Generic),
            EntryKind::Inversion(_) => DimSpec::Generic,
        }
    }

    pub fn pair(&self, regime: Regime) -> EvalResult<&CompiledPair> {
        match &self.kind {
            EntryKind::Sides {
                terminating,
                nonterminating,
            } => match regime {
                Regime::Terminating => terminating.as_ref(),
                Regime::Nonterminating => nonterminating.as_ref(),
            }
            .ok_or_else(|| {
                EvalError::Config(format!("{} has no {} regime", self.id, regime.name()))
            }),
            EntryKind::Inversion(_) => Err(EvalError::Config(format!(
                "{} delegates to the inversion checker",
                self.id
            ))),
        }
    }

    pub fn regimes(&self) -> Vec<Regime> {
        match &self.kind {
            EntryKind::Sides {
                terminating,
                nonterminating,
            } => {
                let mut v = Vec::new();
                if terminating.is_some() {
                    v.push(Regime::Terminating);
                }
                if nonterminating.is_some() {
                    v.push(Regime::Nonterminating);
                }
                v
            }
            EntryKind::Inversion(_) => vec![],
        }
    }
}

macro_rules! qid {
    ($name:literal) => {
        include_str!(concat!("../../qid/", $name, ".qid"))
    };
}

fn sides(term: Option<&str>, nonterm: Option<&str>) -> EntryKind {
    EntryKind::Sides {
        terminating: term.map(CompiledPair::build),
        nonterminating: nonterm.map(CompiledPair::build),
    }
}

/// Every shipped `.qid` source, for the CLI `parse` self-test and the docs.
pub const QID_SOURCES: &[(&str, &str)] = &[
    ("liu_main1", qid!("liu_main1")),
    ("liu_gen1", qid!("liu_gen1")),
    ("wang_ma1", qid!("wang_ma1")),
    ("wang_ma2", qid!("wang_ma2")),
    ("wang_ma2_nt", qid!("wang_ma2_nt")),
    ("pfaff_saalschutz", qid!("pfaff_saalschutz")),
    ("an_trans1", qid!("an_trans1")),
    ("an_result5a", qid!("an_result5a")),
    ("an_result5a_nt", qid!("an_result5a_nt")),
    ("an3p2_1", qid!("an3p2_1")),
    ("an_result5b", qid!("an_result5b")),
    ("an3p2_2", qid!("an3p2_2")),
    ("an_cntrans1", qid!("an_cntrans1")),
    ("an_cntrans2", qid!("an_cntrans2")),
    ("an_cntrans2_nt", qid!("an_cntrans2_nt")),
    ("dn3p2_1", qid!("dn3p2_1")),
    ("cn_nt6p5", qid!("cn_nt6p5")),
    ("cn_antrans3", qid!("cn_antrans3")),
    ("dn_result5", qid!("dn_result5")),
    ("dn3p2", qid!("dn3p2")),
    ("liu_app1", qid!("liu_app1")),
    ("cn_app1", qid!("cn_app1")),
    ("liu3", qid!("liu3")),
    ("an_liu3", qid!("an_liu3")),
];

pub static REGISTRY: Lazy<BTreeMap<&'static str, IdentityEntry>> = Lazy::new(|| {
    let mut m = BTreeMap::new();
    let mut add = |e: IdentityEntry| {
        m.insert(e.id, e);
    };

    add(IdentityEntry {
        id: "liu_main1",
        anchor: "§1, Liu's main expansion formula",
        kind: sides(Some(qid!("liu_main1")), None),
        reductions: &[],
        n1_counterpart: None,
        fun_kind: Some(FunKind::LiuPolynomial),
    });
    add(IdentityEntry {
        id: "liu_gen1",
        anchor: "§1, Liu's general transformation formula",
        kind: sides(Some(qid!("liu_gen1")), None),
        reductions: &[],
        n1_counterpart: None,
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "wang_ma2",
        anchor: "§1, Wang-Ma transformation formula",
        kind: sides(Some(qid!("wang_ma2")), Some(qid!("wang_ma2_nt"))),
        reductions: &["rogers_delta"],
        n1_counterpart: None,
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "wang_ma1",
        anchor: "§1, Wang-Ma expansion formula",
        kind: sides(Some(qid!("wang_ma1")), None),
        reductions: &[],
        n1_counterpart: None,
        fun_kind: Some(FunKind::RandomTable),
    });
    add(IdentityEntry {
        id: "pfaff_saalschutz",
        anchor: "§1, q-Pfaff-Saalschütz summation",
        kind: sides(Some(qid!("pfaff_saalschutz")), None),
        reductions: &[],
        n1_counterpart: None,
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "an_bailey_inverse",
        anchor: "Prop. 2.1, A_n Bailey transform",
        kind: EntryKind::Inversion(System::An),
        reductions: &[],
        n1_counterpart: None,
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "an_trans1",
        anchor: "Th. 2.2, A_n extension of the expansion formula",
        kind: sides(Some(qid!("an_trans1")), None),
        reductions: &[],
        n1_counterpart: Some("wang_ma1"),
        fun_kind: Some(FunKind::RandomTable),
    });
    add(IdentityEntry {
        id: "an_result5a",
        anchor: "Th. 2.3, A_n extension of the transformation formula",
        kind: sides(Some(qid!("an_result5a")), Some(qid!("an_result5a_nt"))),
        reductions: &["milne_6phi5_delta"],
        n1_counterpart: Some("wang_ma2"),
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "an3p2_1",
        anchor: "Eq. (an3p2-1), Milne's A_n balanced 3phi2",
        kind: sides(Some(qid!("an3p2_1")), None),
        reductions: &[],
        n1_counterpart: Some("pfaff_saalschutz"),
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "an_result5b",
        anchor: "Th. 2.5, terminating A_n extension",
        kind: sides(Some(qid!("an_result5b")), None),
        reductions: &["milne_term_6phi5_delta"],
        n1_counterpart: Some("wang_ma2"),
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "an3p2_2",
        anchor: "Eq. (an3p2-2), Milne's terminating balanced 3phi2",
        kind: sides(Some(qid!("an3p2_2")), None),
        reductions: &[],
        n1_counterpart: Some("pfaff_saalschutz"),
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "cn_bailey_inverse",
        anchor: "Prop. 3.1, C_n Bailey transform",
        kind: EntryKind::Inversion(System::Cn),
        reductions: &[],
        n1_counterpart: None,
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "an_cntrans1",
        anchor: "Th. 3.2, C_n-flavored extension of the expansion formula",
        kind: sides(Some(qid!("an_cntrans1")), None),
        reductions: &[],
        n1_counterpart: Some("wang_ma1"),
        fun_kind: Some(FunKind::RandomTable),
    });
    add(IdentityEntry {
        id: "an_cntrans2",
        anchor: "Th. 3.3, C_n/D_n extension of the transformation formula",
        kind: sides(Some(qid!("an_cntrans2")), Some(qid!("an_cntrans2_nt"))),
        reductions: &["gustafson_delta"],
        n1_counterpart: Some("wang_ma2"),
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "dn3p2_1",
        anchor: "Eq. (dn3p2-1), Milne-Lilly D_n balanced 3phi2",
        kind: sides(Some(qid!("dn3p2_1")), None),
        reductions: &[],
        n1_counterpart: Some("pfaff_saalschutz"),
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "cn_nt6p5",
        anchor: "Eq. (cn-nt6p5), Gustafson's C_n non-terminating 6phi5",
        kind: sides(None, Some(qid!("cn_nt6p5"))),
        reductions: &[],
        n1_counterpart: None,
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "cn_antrans3",
        anchor: "Th. 3.5, C_n-to-A_n/D_n extension of the expansion formula",
        kind: sides(Some(qid!("cn_antrans3")), None),
        reductions: &[],
        n1_counterpart: Some("wang_ma1"),
        fun_kind: Some(FunKind::RandomTable),
    });
    add(IdentityEntry {
        id: "dn_result5",
        anchor: "Th. 3.6, terminating extension over root systems",
        kind: sides(Some(qid!("dn_result5")), None),
        reductions: &["bhatnagar_6phi5_delta"],
        n1_counterpart: Some("wang_ma2"),
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "dn3p2",
        anchor: "Eq. (dn3p2), terminating balanced 3phi2 with C_n prefactors",
        kind: sides(Some(qid!("dn3p2")), None),
        reductions: &[],
        n1_counterpart: Some("pfaff_saalschutz"),
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "liu_app1",
        anchor: "Eq. (liu-app1), Liu's infinite-product expansion",
        kind: sides(Some(qid!("liu_app1")), None),
        reductions: &[],
        n1_counterpart: None,
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "cn_app1",
        anchor: "Th. 4.1, extension of the C_n non-terminating 6phi5",
        kind: sides(None, Some(qid!("cn_app1"))),
        reductions: &[],
        n1_counterpart: None,
        fun_kind: Some(FunKind::MenuExpr),
    });
    add(IdentityEntry {
        id: "liu3",
        anchor: "Eq. (liu3), Liu's third expansion formula",
        kind: sides(Some(qid!("liu3")), None),
        reductions: &[],
        n1_counterpart: None,
        fun_kind: None,
    });
    add(IdentityEntry {
        id: "an_liu3",
        anchor: "Th. 5.2, A_n extension of Liu's third formula",
        kind: sides(Some(qid!("an_liu3")), None),
        reductions: &[],
        n1_counterpart: Some("liu3"),
        fun_kind: None,
    });

    m
});

/// Look up a registered identity.
pub fn builtin_identity(id: &str) -> EvalResult<&'static IdentityEntry> {
    REGISTRY
        .get(id)
        .ok_or_else(|| EvalError::UnknownIdentity(id.to_string()))
}

/// The H-factor menu of Th. 4.1: admissible infinite-product shapes for the
/// left side, as bare DSL expressions over the base parameters plus the
/// listed extras.
pub const H_MENU: &[(&str, &str, &[&str])] = &[
    (
        "h_single",
        "prodr{ qp(a*hG*x[r]; inf) * qp(a*hH*x[r]*y[r]; inf) \
          / (qp(a*hG*x[r]*y[r]; inf) * qp(a*hH*x[r]; inf)) }",
        &["hG", "hH"],
    ),
    (
        "h_global",
        "qp(a*hJ; inf) * qp(a*hK*prodr{y[r]}; inf) \
          / (qp(a*hJ*prodr{y[r]}; inf) * qp(a*hK; inf))",
        &["hJ", "hK"],
    ),
    (
        "h_ratio",
        "prodrs{ qp(a*hC*x[r]/x[s]; inf) * qp(a*hD*y[s]*x[r]/x[s]; inf) \
          / (qp(a*hC*y[s]*x[r]/x[s]; inf) * qp(a*hD*x[r]/x[s]; inf)) }",
        &["hC", "hD"],
    ),
    (
        "h_pair",
        "prodrs{ qp(a*hE*x[r]*x[s]; inf) * qp(a*hF*x[r]*x[s]*y[s]; inf) \
          / (qp(a*hE*x[r]*x[s]*y[s]; inf) * qp(a*hF*x[r]*x[s]; inf)) }",
        &["hE", "hF"],
    ),
    ("h_power", "prodr{ y[r]^l }", &[]),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_has_exactly_the_specified_entries() {
        assert_eq!(REGISTRY.len(), 23);
        for id in [
            "liu_main1",
            "liu_gen1",
            "wang_ma2",
            "wang_ma1",
            "pfaff_saalschutz",
            "an_bailey_inverse",
            "an_trans1",
            "an_result5a",
            "an3p2_1",
            "an_result5b",
            "an3p2_2",
            "cn_bailey_inverse",
            "an_cntrans1",
            "an_cntrans2",
            "dn3p2_1",
            "cn_nt6p5",
            "cn_antrans3",
            "dn_result5",
            "dn3p2",
            "liu_app1",
            "cn_app1",
            "liu3",
            "an_liu3",
        ] {
            assert!(REGISTRY.contains_key(id), "missing {id}");
        }
    }

    #[test]
    fn unknown_identity_is_an_error() {
        assert!(matches!(
            builtin_identity("nope"),
            Err(EvalError::UnknownIdentity(_))
        ));
    }

    #[test]
    fn liu3_is_one_variable() {
        let e = builtin_identity("liu3").unwrap();
        assert_eq!(e.dim(), DimSpec::Fixed(1));
    }

    #[test]
    fn an_result5a_has_milne_reduction() {
        let e = builtin_identity("an_result5a").unwrap();
        assert!(e.reductions.contains(&"milne_6phi5_delta"));
    }

    #[test]
    fn cn_nt6p5_is_nonterminating_only() {
        let e = builtin_identity("cn_nt6p5").unwrap();
        assert_eq!(e.regimes(), vec![Regime::Nonterminating]);
    }

    #[test]
    fn all_qid_sources_parse_and_compile() {
        for (name, src) in QID_SOURCES {
            let doc = parse_document(src).unwrap_or_else(|e| panic!("{name}: {e}"));
            compile(&doc, &doc.lhs).unwrap_or_else(|e| panic!("{name} lhs: {e}"));
            compile(&doc, &doc.rhs).unwrap_or_else(|e| panic!("{name} rhs: {e}"));
        }
    }
}
