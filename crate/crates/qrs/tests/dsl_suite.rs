//! DSL conformance: shipped documents, pretty-print round-trips, dual-path
//! evaluation against hand-built evaluators, and a malformed corpus with
//! positioned diagnostics.

use qrs::bailey::SeqSpec;
use qrs::dsl::ast::Regime;
use qrs::dsl::{compile, parse_document, ParseError, SideEnv};
use qrs::dsl::pretty::print_document;
use qrs::error::EvalResult;
use qrs::exact::{rat_pow, Rational};
use qrs::identities::registry::{builtin_identity, QID_SOURCES};
use qrs::identities::sampling::Sampler;
use qrs::kernels::ParamPoint;
use qrs::multiindex::{iter_box, MultiIndex};
use qrs::qpoch::EvalCtx;

#[test]
fn shipped_documents_parse_compile_and_round_trip() {
    assert_eq!(QID_SOURCES.len(), 24);
    for (name, src) in QID_SOURCES {
        let doc = parse_document(src).unwrap_or_else(|e| panic!("{name}: {e}"));
        compile(&doc, &doc.lhs).unwrap_or_else(|e| panic!("{name} lhs: {e}"));
        compile(&doc, &doc.rhs).unwrap_or_else(|e| panic!("{name} rhs: {e}"));
        // pretty-print -> re-parse is AST-identical
        let printed = print_document(&doc);
        let reparsed =
            parse_document(&printed).unwrap_or_else(|e| panic!("{name} re-parse: {e}\n{printed}"));
        assert_eq!(reparsed, doc, "{name}: printed document changed the AST");
    }
}

/// Twenty malformed inputs; every rejection must carry a position or a
/// named binding error.
#[test]
fn malformed_corpus_yields_positioned_diagnostics() {
    let corpus: [&str; 20] = [
        "",                                                      // empty file
        "identity",                                              // truncated header
        "identity x",                                            // missing body
        "identity x {",                                          // unclosed brace
        "identity x { dim 1; }",                                 // missing regime/lhs/rhs
        "identity x { regime terminating; lhs { a } rhs { a } }", // unbound scalar
        "identity x { regime nope; lhs { 1 } rhs { 1 } }",       // bad regime
        "identity x { regime terminating; params a; lhs { qp(a; @) } rhs { 1 } }", // lex error
        "identity x { regime terminating; params a; lhs { qp(a; 3 } rhs { 1 } }", // unbalanced
        "identity x { regime terminating; params a; lhs { a + } rhs { 1 } }", // dangling op
        "identity x { regime terminating; params a; lhs { x[r] } rhs { 1 } }", // r outside quantifier
        "identity x { regime terminating; params x[]; lhs { prodr{ x[s] } } rhs { 1 } }", // s in prodr
        "identity x { regime terminating; params a; lhs { qp(a; inf) } rhs { 1 } }", // inf in terminating
        "identity x { regime terminating; params a; lhs { beta(j) } rhs { 1 } }", // undeclared family
        "identity x { regime terminating; params a; uses beta; lhs { beta(j) } rhs { 1 } }", // unbound index
        "identity x { regime terminating; params a; lhs { sum(k in box(N)) { sum(k in box(k)) { 1 } } } rhs { 1 } }", // duplicate index
        "identity x { regime terminating; params a; lhs { qpow(z) } rhs { 1 } }", // unbound int name
        "identity x { regime terminating; params a; lhs { |k| } rhs { 1 } }", // weight as a value
        "identity x { regime terminating; params a; lhs { 1 } rhs { 1 } } trailing", // trailing tokens
        "identity x { regime terminating; params a, ; lhs { 1 } rhs { 1 } }", // dangling comma
    ];
    let mut rejected = 0;
    for (i, src) in corpus.iter().enumerate() {
        let outcome = parse_document(src).and_then(|doc| {
            compile(&doc, &doc.lhs)
                .and_then(|_| compile(&doc, &doc.rhs))
                .map(|_| doc)
                .map_err(|e| ParseError::Eof {
                    expected: e.to_string(),
                })
        });
        match outcome {
            Err(e) => {
                let msg = e.to_string();
                assert!(!msg.is_empty(), "case {i}: empty diagnostic");
                rejected += 1;
            }
            Ok(_) => panic!("case {i} unexpectedly accepted: {src}"),
        }
    }
    assert_eq!(rejected, 20);
}

fn mi(v: &[i64]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

/// Hand-built liu3 evaluator, fully independent of the DSL path.
fn liu3_by_hand(
    ctx: &EvalCtx,
    a: &Rational,
    ca: &Rational,
    cb: &Rational,
    nn: i64,
    acoef: &SeqSpec,
) -> EvalResult<(Rational, Rational)> {
    let q = ctx.q();
    let aab = &(a * ca) * cb;
    let mut lhs = (&ctx.poch(&(a * q), nn)? * &ctx.poch(&aab.div_exact(q)?, nn)?)
        .div_exact(&(&ctx.poch(&(a * ca), nn)? * &ctx.poch(&(a * cb), nn)?))?;
    let mut jsum = Rational::zero();
    for j in 0..=nn {
        let cj = acoef.get(&mi(&[j]));
        if cj.is_zero() {
            continue;
        }
        let num = ctx.poch_multi(
            &[ctx.qpow(-nn)?, q.div_exact(ca)?, q.div_exact(cb)?],
            j,
        )?;
        let den = ctx.poch(&ctx.qpow(2 - nn)?.div_exact(&aab)?, j)?;
        jsum = &jsum + &(&(&num.div_exact(&den)? * &ctx.qpow(j)?) * &cj);
    }
    lhs = &lhs * &jsum;
    let mut rhs = Rational::zero();
    for k in 0..=nn {
        let num = &(Rational::one() - a * &ctx.qpow(2 * k)?)
            * &ctx.poch_multi(
                &[
                    ctx.qpow(-nn)?,
                    a.clone(),
                    q.div_exact(ca)?,
                    q.div_exact(cb)?,
                ],
                k,
            )?;
        let den = &(Rational::one() - a.clone())
            * &ctx.poch_multi(
                &[
                    q.clone(),
                    a * &ctx.qpow(nn + 1)?,
                    a * ca,
                    a * cb,
                ],
                k,
            )?;
        let outer = &num.div_exact(&den)? * &rat_pow(&(&aab * &ctx.qpow(nn - 1)?), k)?;
        let mut inner = Rational::zero();
        for j in 0..=k {
            let cj = acoef.get(&mi(&[j]));
            if cj.is_zero() {
                continue;
            }
            let t = &ctx.poch_multi(&[ctx.qpow(-k)?, a * &ctx.qpow(k)?], j)? * &ctx.qpow(j)?;
            inner = &inner + &(&t * &cj);
        }
        rhs = &rhs + &(&outer * &inner);
    }
    Ok((lhs, rhs))
}

/// Dual-path evaluation: the compiled liu3 document matches the hand-built
/// evaluator at random points.
#[test]
fn liu3_dsl_matches_hand_built() {
    let entry = builtin_identity("liu3").unwrap();
    let pair = entry.pair(Regime::Terminating).unwrap();
    let mut sampler = Sampler::new(0x11d3);
    let nn = 4i64;
    let bounds = mi(&[nn]);
    for _ in 0..5 {
        loop {
            let q = sampler.q();
            let ctx = EvalCtx::new(q.clone());
            let a = sampler.nonzero_scalar();
            let ca = sampler.nonzero_scalar();
            let cb = sampler.nonzero_scalar();
            let acoef = SeqSpec::from_pairs([
                (mi(&[0]), sampler.nonzero_scalar()),
                (mi(&[2]), sampler.nonzero_scalar()),
                (mi(&[3]), sampler.nonzero_scalar()),
            ]);
            let mut point = ParamPoint::new(1);
            point.set_scalar("q", q);
            point.set_scalar("a", a.clone());
            point.set_scalar("A", ca.clone());
            point.set_scalar("B", cb.clone());
            let mut env = SideEnv::new(1, &ctx, &point);
            env.box_n = Some(&bounds);
            env.seqs.insert("Acoef", &acoef);
            let dsl = (pair.lhs.eval(&env), pair.rhs.eval(&env));
            let hand = liu3_by_hand(&ctx, &a, &ca, &cb, nn, &acoef);
            match (dsl, hand) {
                ((Ok(dl), Ok(dr)), Ok((hl, hr))) => {
                    assert_eq!(dl, hl, "lhs mismatch");
                    assert_eq!(dr, hr, "rhs mismatch");
                    assert_eq!(dl, dr, "identity violated");
                    break;
                }
                _ => continue, // pole: resample
            }
        }
    }
}

/// Dual-path evaluation of the an_result5a right side at n = 2: compiled
/// document versus a hand-transcribed evaluator, ten seeded points.
#[test]
fn an_result5a_rhs_dsl_matches_hand_built() {
    use qrs::kernels::vandermonde_a;
    let entry = builtin_identity("an_result5a").unwrap();
    let pair = entry.pair(Regime::Terminating).unwrap();
    let n = 2usize;
    let bounds = mi(&[1, 1]);
    let mut sampler = Sampler::new(0x5a5a);

    let hand = |ctx: &EvalCtx,
                a: &Rational,
                ca: &Rational,
                b: &Rational,
                x: &[Rational],
                beta: &SeqSpec|
     -> EvalResult<Rational> {
        let q = ctx.q();
        let mut tot = Rational::zero();
        for k in iter_box(&bounds) {
            let wk = k.weight();
            let mut t = vandermonde_a(ctx, x, &k)?;
            for r in 0..n {
                for s in 0..n {
                    let ratio = x[r].div_exact(&x[s])?;
                    t = &t
                        * &ctx
                            .poch(&(&ctx.qpow(-bounds.comp(s))? * &ratio), k.comp(r))?
                            .div_exact(&ctx.poch(&(q * &ratio), k.comp(r))?)?;
                }
            }
            for (r, xr) in x.iter().enumerate() {
                let num = Rational::one() - &(a * xr) * &ctx.qpow(k.comp(r) + wk)?;
                t = &t * &num.div_exact(&(Rational::one() - a * xr))?;
                let num2 = &ctx.poch(&(a * xr), wk)?
                    * &ctx.poch(&(&(b * q) * xr).div_exact(ca)?, k.comp(r))?;
                let den2 = &ctx.poch(&(&(a * xr) * &ctx.qpow(1 + bounds.comp(r))?), wk)?
                    * &ctx.poch(&(&(b * q) * xr), k.comp(r))?;
                t = &t * &num2.div_exact(&den2)?;
            }
            t = &t
                * &ctx
                    .poch(&a.div_exact(b)?, wk)?
                    .div_exact(&ctx.poch(&(a * ca).div_exact(b)?, wk)?)?;
            t = &t * &rat_pow(&(ca * &ctx.qpow(bounds.weight())?), wk)?;
            let e: i64 = k.comps().iter().enumerate().map(|(r, &c)| r as i64 * c).sum();
            t = &t * &ctx.qpow(e)?;
            let mut mid = Rational::zero();
            for j in iter_box(&k) {
                let bj = beta.get(&j);
                if bj.is_zero() {
                    continue;
                }
                let wj = j.weight();
                let mut u = vandermonde_a(ctx, x, &j)?;
                for r in 0..n {
                    for s in 0..n {
                        u = &u
                            * &ctx.poch(
                                &(&ctx.qpow(-k.comp(s))? * &x[r].div_exact(&x[s])?),
                                j.comp(r),
                            )?;
                    }
                }
                for (r, xr) in x.iter().enumerate() {
                    let num = &(Rational::one() - &(b * xr) * &ctx.qpow(j.comp(r) + wj)?)
                        * &ctx.poch(&(&(a * xr) * &ctx.qpow(wk)?), j.comp(r))?;
                    let den = &(&(Rational::one() - b * xr)
                        * &ctx.poch(&(&(b * q) * xr).div_exact(ca)?, j.comp(r))?)
                        * &ctx.poch(&(&(b * xr) * &ctx.qpow(k.comp(r) + 1)?), wj)?;
                    u = &u * &num.div_exact(&den)?;
                }
                u = &u
                    * &ctx
                        .poch(ca, wj)?
                        .div_exact(&ctx.poch(&(b * &ctx.qpow(1 - wk)?).div_exact(a)?, wj)?)?;
                let e2: i64 = j.comps().iter().enumerate().map(|(r, &c)| r as i64 * c).sum();
                u = &u * &ctx.qpow(e2)?;
                u = &u * &rat_pow(&(&(b * q)).div_exact(&(a * ca))?, wj)?;
                mid = &mid + &(&u * &bj);
            }
            tot = &tot + &(&t * &mid);
        }
        Ok(tot)
    };

    let mut done = 0;
    while done < 10 {
        let q = sampler.q();
        let ctx = EvalCtx::new(q.clone());
        let a = sampler.nonzero_scalar();
        let ca = sampler.nonzero_scalar();
        let b = sampler.nonzero_scalar();
        let x = sampler.x_vector(n);
        let beta = SeqSpec::from_pairs([
            (mi(&[0, 0]), sampler.nonzero_scalar()),
            (mi(&[1, 0]), sampler.nonzero_scalar()),
            (mi(&[1, 1]), sampler.nonzero_scalar()),
        ]);
        let mut point = ParamPoint::new(n);
        point.set_scalar("q", q);
        point.set_scalar("a", a.clone());
        point.set_scalar("A", ca.clone());
        point.set_scalar("b", b.clone());
        point.set_vector("x", x.clone());
        let mut env = SideEnv::new(n, &ctx, &point);
        env.box_n = Some(&bounds);
        env.seqs.insert("beta", &beta);
        match (pair.rhs.eval(&env), hand(&ctx, &a, &ca, &b, &x, &beta)) {
            (Ok(dsl_rhs), Ok(hand_rhs)) => {
                assert_eq!(dsl_rhs, hand_rhs, "rhs mismatch at seeded point {done}");
                done += 1;
            }
            _ => continue,
        }
    }
}

/// Compiled delta evaluates to an indicator; literal division is exact.
#[test]
fn compile_basics_behave() {
    let doc = parse_document(
        "identity toy { dim 1; regime terminating; params a; uses beta; \
         lhs { sum(j in box(N)) { delta(j) * 3/4 } } rhs { 3/4 } }",
    )
    .unwrap();
    let lhs = compile(&doc, &doc.lhs).unwrap();
    let rhs = compile(&doc, &doc.rhs).unwrap();
    let ctx = EvalCtx::new(Rational::new(1, 2));
    let point = ParamPoint::new(1).with_scalar("a", Rational::one());
    let bounds = mi(&[3]);
    let mut env = SideEnv::new(1, &ctx, &point);
    env.box_n = Some(&bounds);
    assert_eq!(lhs.eval(&env).unwrap(), Rational::new(3, 4));
    assert_eq!(rhs.eval(&env).unwrap(), Rational::new(3, 4));
}
