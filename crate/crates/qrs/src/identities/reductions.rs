//! Printed reductions of the registered identities.
//!
//! Two families:
//! - delta specializations: beta = delta collapses an expansion formula to a
//!   classical very-well-poised 6phi5 summation; the specialized sides are
//!   compared against an independent transcription of the target theorem.
//! - n = 1 reductions: every generic-n identity instantiated at n = 1,
//!   x_1 = 1 must agree with its registered one-variable counterpart
//!   term-by-term (partial sums of the outermost sum agree exactly).

use crate::bailey::SeqSpec;
use crate::dsl::ast::Regime;
use crate::dsl::compile::{AbstractFun, SideEnv};
use crate::error::{EvalError, EvalResult};
use crate::exact::{rat_pow, Rational};
use crate::identities::registry::builtin_identity;
use crate::identities::sampling::Sampler;
use crate::identities::verify::{build_fun_tables, sample_point, BetaSource};
use crate::kernels::{vandermonde_a, ParamPoint};
use crate::multiindex::{iter_box, MultiIndex};
use crate::qpoch::EvalCtx;

fn ltsum(k: &MultiIndex) -> i64 {
    let c = k.comps();
    let mut tot = 0;
    for r in 0..c.len() {
        for s in (r + 1)..c.len() {
            tot += c[r] * c[s];
        }
    }
    tot
}

fn rsum0(k: &MultiIndex) -> i64 {
    k.comps().iter().enumerate().map(|(r, &c)| r as i64 * c).sum()
}

/// Independent transcriptions of the four classical 6phi5 targets, each as a
/// (product side, series side) pair.
pub struct SixPhiFive;

impl SixPhiFive {
    /// Rogers' terminating very-well-poised 6phi5 (one variable).
    pub fn rogers(ctx: &EvalCtx, a: &Rational, b: &Rational, c: &Rational, n: i64) -> EvalResult<(Rational, Rational)> {
        let q = ctx.q();
        let aq = a * q;
        let product = (&ctx.poch(&aq, n)? * &ctx.poch(&aq.div_exact(&(b * c))?, n)?)
            .div_exact(&(&ctx.poch(&aq.div_exact(b)?, n)? * &ctx.poch(&aq.div_exact(c)?, n)?))?;
        let mut series = Rational::zero();
        let z = &aq.div_exact(&(b * c))? * &ctx.qpow(n)?;
        for k in 0..=n {
            let num = &(Rational::one() - a * &ctx.qpow(2 * k)?)
                * &ctx.poch_multi(&[a.clone(), b.clone(), c.clone(), ctx.qpow(-n)?], k)?;
            let den = &(Rational::one() - a.clone())
                * &ctx.poch_multi(
                    &[
                        q.clone(),
                        aq.div_exact(b)?,
                        aq.div_exact(c)?,
                        a * &ctx.qpow(n + 1)?,
                    ],
                    k,
                )?;
            series = &series + &(&num.div_exact(&den)? * &rat_pow(&z, k)?);
        }
        Ok((product, series))
    }

    /// Milne's A_n very-well-poised 6phi5 in the equivalent form produced by
    /// the delta specialization of the transformation formula (terminating).
    pub fn milne_an(
        ctx: &EvalCtx,
        a: &Rational,
        b: &Rational,
        d: &Rational,
        x: &[Rational],
        bounds: &MultiIndex,
    ) -> EvalResult<(Rational, Rational)> {
        let nw = bounds.weight();
        let q = ctx.q();
        let aq = a * q;
        let mut product = ctx
            .poch(&aq.div_exact(&(b * d))?, nw)?
            .div_exact(&ctx.poch(&aq.div_exact(d)?, nw)?)?;
        for (r, xr) in x.iter().enumerate() {
            product = &product
                * &ctx
                    .poch(&(&aq * xr), bounds.comp(r))?
                    .div_exact(&ctx.poch(&(&aq * xr).div_exact(b)?, bounds.comp(r))?)?;
        }
        let mut series = Rational::zero();
        let arg = (&aq * &ctx.qpow(nw)?).div_exact(&(b * d))?;
        for k in iter_box(bounds) {
            let wk = k.weight();
            let mut t = vandermonde_a(ctx, x, &k)?;
            for (r, xr) in x.iter().enumerate() {
                for (s, xs) in x.iter().enumerate() {
                    let ratio = xr.div_exact(xs)?;
                    t = &t
                        * &ctx
                            .poch(&(&ctx.qpow(-bounds.comp(s))? * &ratio), k.comp(r))?
                            .div_exact(&ctx.poch(&(q * &ratio), k.comp(r))?)?;
                }
            }
            for (r, xr) in x.iter().enumerate() {
                let num = &(&(Rational::one() - &(a * xr) * &ctx.qpow(k.comp(r) + wk)?)
                    * &ctx.poch(&(a * xr), wk)?)
                    * &ctx.poch(&(d * xr), k.comp(r))?;
                let den = &(&(Rational::one() - a * xr)
                    * &ctx.poch(&(&(a * xr) * &ctx.qpow(1 + bounds.comp(r))?), wk)?)
                    * &ctx.poch(&(&aq * xr).div_exact(b)?, k.comp(r))?;
                t = &t * &num.div_exact(&den)?;
            }
            t = &t
                * &ctx
                    .poch(b, wk)?
                    .div_exact(&ctx.poch(&aq.div_exact(d)?, wk)?)?;
            t = &(&t * &rat_pow(&arg, wk)?) * &ctx.qpow(rsum0(&k))?;
            series = &series + &t;
        }
        Ok((product, series))
    }

    /// Milne's terminating A_n very-well-poised 6phi5, delta case of the
    /// terminating extension.
    pub fn milne_an_terminating(
        ctx: &EvalCtx,
        a: &Rational,
        b: &Rational,
        c: &Rational,
        x: &[Rational],
        bounds: &MultiIndex,
    ) -> EvalResult<(Rational, Rational)> {
        let q = ctx.q();
        let aq = a * q;
        let mut product = Rational::one();
        for (r, xr) in x.iter().enumerate() {
            let num = &ctx.poch(&(&aq * xr).div_exact(&(b * c))?, bounds.comp(r))?
                * &ctx.poch(&(&aq * xr), bounds.comp(r))?;
            let den = &ctx.poch(&(&aq * xr).div_exact(c)?, bounds.comp(r))?
                * &ctx.poch(&(&aq * xr).div_exact(b)?, bounds.comp(r))?;
            product = &product * &num.div_exact(&den)?;
        }
        let nw = bounds.weight();
        let arg = (&aq * &ctx.qpow(nw)?).div_exact(&(b * c))?;
        let mut series = Rational::zero();
        for k in iter_box(bounds) {
            let wk = k.weight();
            let mut t = vandermonde_a(ctx, x, &k)?;
            for (r, xr) in x.iter().enumerate() {
                for (s, xs) in x.iter().enumerate() {
                    let ratio = xr.div_exact(xs)?;
                    t = &t
                        * &ctx
                            .poch(&(&ctx.qpow(-bounds.comp(s))? * &ratio), k.comp(r))?
                            .div_exact(&ctx.poch(&(q * &ratio), k.comp(r))?)?;
                }
            }
            for (r, xr) in x.iter().enumerate() {
                let num = &(Rational::one() - &(a * xr) * &ctx.qpow(k.comp(r) + wk)?)
                    * &ctx.poch(&(a * xr), wk)?;
                let den = &(&(&(Rational::one() - a * xr)
                    * &ctx.poch(&(&(a * xr) * &ctx.qpow(1 + bounds.comp(r))?), wk)?)
                    * &ctx.poch(&(&aq * xr).div_exact(b)?, k.comp(r))?)
                    * &ctx.poch(&(&aq * xr).div_exact(c)?, k.comp(r))?;
                t = &t * &num.div_exact(&den)?;
            }
            t = &t * &ctx.poch_multi(&[b.clone(), c.clone()], wk)?;
            t = &(&t * &rat_pow(&arg, wk)?) * &ctx.qpow(rsum0(&k) - ltsum(&k))?;
            for (r, xr) in x.iter().enumerate() {
                t = &t * &rat_pow(xr, k.comp(r))?;
            }
            series = &series + &t;
        }
        Ok((product, series))
    }

    /// The D_n terminating very-well-poised 6phi5, delta case of the
    /// root-system extension.
    pub fn bhatnagar_dn(
        ctx: &EvalCtx,
        a: &Rational,
        b: &Rational,
        c: &Rational,
        x: &[Rational],
        bounds: &MultiIndex,
    ) -> EvalResult<(Rational, Rational)> {
        let n = x.len();
        let q = ctx.q();
        let aq = a * q;
        let nw = bounds.weight();
        let mut product = Rational::one().div_exact(&ctx.poch(&aq.div_exact(b)?, nw)?)?;
        for (r, xr) in x.iter().enumerate() {
            product = &product
                * &(&ctx.poch(&(&aq * xr).div_exact(&(b * c))?, bounds.comp(r))?
                    * &ctx.poch(&(&aq * xr), bounds.comp(r))?);
        }
        for r in 0..n {
            for s in (r + 1)..n {
                let base = (&(&aq * &x[r]) * &x[s]).div_exact(c)?;
                product = &product * &ctx.poch(&base, bounds.comp(r) + bounds.comp(s))?;
            }
        }
        for r in 0..n {
            for s in 0..n {
                let base = (&(&aq * &x[r]) * &x[s]).div_exact(c)?;
                product = product.div_exact(&ctx.poch(&base, bounds.comp(r))?)?;
            }
        }
        let arg = (&aq * &ctx.qpow(nw)?).div_exact(&(b * c))?;
        let mut series = Rational::zero();
        for k in iter_box(bounds) {
            let wk = k.weight();
            let mut t = Rational::one();
            for r in 0..n {
                for s in (r + 1)..n {
                    let ratio = x[r].div_exact(&x[s])?;
                    let num = &(Rational::one() - &ctx.qpow(k.comp(r) - k.comp(s))? * &ratio)
                        * &ctx.poch(
                            &(&(&aq * &x[r]) * &x[s]).div_exact(c)?,
                            k.comp(r) + k.comp(s),
                        )?;
                    t = &t * &num.div_exact(&(Rational::one() - ratio))?;
                }
            }
            for r in 0..n {
                for s in 0..n {
                    let ratio = x[r].div_exact(&x[s])?;
                    let num = ctx.poch(&(&ctx.qpow(-bounds.comp(s))? * &ratio), k.comp(r))?;
                    let den = &ctx.poch(&(q * &ratio), k.comp(r))?
                        * &ctx.poch(&(&(&aq * &x[r]) * &x[s]).div_exact(c)?, k.comp(r))?;
                    t = &t * &num.div_exact(&den)?;
                }
            }
            for (r, xr) in x.iter().enumerate() {
                let num = &(&(&(Rational::one() - &(a * xr) * &ctx.qpow(k.comp(r) + wk)?)
                    * &ctx.poch(&(a * xr), wk)?)
                    * &ctx.poch(&(c * &ctx.qpow(wk - k.comp(r))?).div_exact(xr)?, k.comp(r))?)
                    * &ctx.poch(&(b * xr), k.comp(r))?;
                let den = &(Rational::one() - a * xr)
                    * &ctx.poch(&(&(a * xr) * &ctx.qpow(1 + bounds.comp(r))?), wk)?;
                t = &t * &num.div_exact(&den)?;
            }
            t = t.div_exact(&ctx.poch(&aq.div_exact(b)?, wk)?)?;
            t = &(&t * &rat_pow(&arg, wk)?) * &ctx.qpow(rsum0(&k) - ltsum(&k))?;
            for (r, xr) in x.iter().enumerate() {
                t = &t * &rat_pow(xr, k.comp(r))?;
            }
            series = &series + &t;
        }
        Ok((product, series))
    }
}

/// One delta-reduction check at one sampled point: evaluates the host
/// identity at beta = delta and compares both specialized sides against the
/// independent target transcription. Returns (host lhs, host rhs, target
/// product, target series).
pub fn delta_reduction_sides(
    host: &str,
    reduction: &str,
    n: usize,
    bounds: &MultiIndex,
    sampler: &mut Sampler,
) -> EvalResult<(Rational, Rational, Rational, Rational)> {
    let entry = builtin_identity(host)?;
    if !entry.reductions.contains(&reduction) {
        return Err(EvalError::Config(format!(
            "{host} has no reduction '{reduction}'"
        )));
    }
    let pair = entry.pair(Regime::Terminating)?;
    let q = sampler.q();
    let ctx = EvalCtx::new(q.clone());
    let a = sampler.nonzero_scalar();
    let b = sampler.nonzero_scalar();
    let c = sampler.nonzero_scalar();
    let x = if n == 1 {
        vec![Rational::one()]
    } else {
        sampler.x_vector(n)
    };
    // host parameters per the printed substitution
    let (host_a, host_cap_a, host_b) = match reduction {
        // b -> a/b, with the second Rogers parameter c = bq/A, so A = aq/(bc)
        "rogers_delta" => (
            a.clone(),
            (&a * &q).div_exact(&(&b * &c))?,
            a.div_exact(&b)?,
        ),
        // b -> a/b, A -> aq/(bd); here c plays d
        "milne_6phi5_delta" => (
            a.clone(),
            (&a * &q).div_exact(&(&b * &c))?,
            a.div_exact(&b)?,
        ),
        // b -> a/b, A -> aq/(bc)
        "milne_term_6phi5_delta" => (
            a.clone(),
            (&a * &q).div_exact(&(&b * &c))?,
            a.div_exact(&b)?,
        ),
        // b -> a/c, A -> aq/(bc)
        "bhatnagar_6phi5_delta" => (
            a.clone(),
            (&a * &q).div_exact(&(&b * &c))?,
            a.div_exact(&c)?,
        ),
        _ => {
            return Err(EvalError::Config(format!(
                "unknown terminating reduction '{reduction}'"
            )))
        }
    };
    let mut point = ParamPoint::new(n);
    point.set_scalar("q", q);
    point.set_scalar("a", host_a);
    point.set_scalar("A", host_cap_a);
    point.set_scalar("b", host_b);
    point.set_vector("x", x.clone());
    let beta = SeqSpec::delta(n);
    let mut env = SideEnv::new(n, &ctx, &point);
    env.box_n = Some(bounds);
    env.seqs.insert("beta", &beta);
    let host_lhs = pair.lhs.eval(&env)?;
    let host_rhs = pair.rhs.eval(&env)?;
    let (target_product, target_series) = match reduction {
        "rogers_delta" => SixPhiFive::rogers(&ctx, &a, &b, &c, bounds.comp(0))?,
        "milne_6phi5_delta" => SixPhiFive::milne_an(&ctx, &a, &b, &c, &x, bounds)?,
        "milne_term_6phi5_delta" => {
            SixPhiFive::milne_an_terminating(&ctx, &a, &b, &c, &x, bounds)?
        }
        "bhatnagar_6phi5_delta" => SixPhiFive::bhatnagar_dn(&ctx, &a, &b, &c, &x, bounds)?,
        _ => unreachable!(),
    };
    Ok((host_lhs, host_rhs, target_product, target_series))
}

/// Verify a named delta reduction over seeded trials; exact equality of all
/// four values per trial.
pub fn verify_delta_reduction(
    host: &str,
    reduction: &str,
    n: usize,
    bounds: &MultiIndex,
    seed: u64,
    trials: u32,
) -> EvalResult<bool> {
    for trial in 0..trials {
        let mut sampler = Sampler::for_trial(seed, &format!("{host}:{reduction}"), trial as u64);
        let mut attempts = 0;
        loop {
            match delta_reduction_sides(host, reduction, n, bounds, &mut sampler) {
                Ok((hl, hr, tp, ts)) => {
                    if hl != tp || hr != ts || hl != hr {
                        return Ok(false);
                    }
                    break;
                }
                Err(EvalError::DivisionByZero) => {
                    attempts += 1;
                    if attempts > 1000 {
                        return Err(EvalError::AdmissiblePointNotFound(1000));
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(true)
}

/// Parameter mapping from a generic-n host at n = 1, x_1 = 1 to its
/// registered one-variable counterpart.
fn map_point_for_counterpart(
    host: &str,
    point: &ParamPoint,
    bounds: &MultiIndex,
    ctx: &EvalCtx,
) -> EvalResult<ParamPoint> {
    let mut cp = ParamPoint::new(1);
    cp.set_scalar("q", ctx.q().clone());
    match host {
        // the balanced 3phi2 matches the Pfaff-Saalschütz form after a -> a q^{|N|}
        "dn3p2_1" => {
            cp.set_scalar("a", &point.scalar("a")?.clone() * &ctx.qpow(bounds.weight())?);
            cp.set_scalar("b", point.scalar("b")?.clone());
            cp.set_scalar("c", point.scalar("c")?.clone());
        }
        _ => {
            for (name, val) in point.scalar_names() {
                if name != "q" {
                    cp.set_scalar(name, val.clone());
                }
            }
        }
    }
    Ok(cp)
}

/// n = 1 reduction: instantiate the host at n = 1, x_1 = 1 and compare every
/// partial sum of the outermost sum on both sides against the registered
/// one-variable counterpart.
pub fn reduce_to_n1(host: &str, bound: i64, seed: u64, trials: u32) -> EvalResult<bool> {
    let entry = builtin_identity(host)?;
    let counterpart_id = entry
        .n1_counterpart
        .ok_or_else(|| EvalError::NoRegisteredCounterpart(host.to_string()))?;
    let cp_entry = builtin_identity(counterpart_id)?;
    let host_pair = entry.pair(Regime::Terminating)?;
    let cp_pair = cp_entry.pair(Regime::Terminating)?;
    let bounds = MultiIndex::new(vec![bound]);

    for trial in 0..trials {
        let mut sampler = Sampler::for_trial(seed, &format!("{host}:n1"), trial as u64);
        let mut attempts = 0;
        'point: loop {
            if attempts > 1000 {
                return Err(EvalError::AdmissiblePointNotFound(1000));
            }
            attempts += 1;
            let q = sampler.q();
            let ctx = EvalCtx::new(q.clone());
            let mut point = sample_point(&host_pair.doc, 1, &mut sampler);
            point.set_scalar("q", q.clone());
            point.set_vector("x", vec![Rational::one()]);
            let cp_point = map_point_for_counterpart(host, &point, &bounds, &ctx)?;

            let beta = BetaSource::Random(3).realize(&mut sampler, &bounds);
            let funs =
                match build_fun_tables(entry, &host_pair.doc, &point, &ctx, &bounds, &mut sampler) {
                    Ok(f) => f,
                    Err(EvalError::DivisionByZero) => continue 'point,
                    Err(e) => return Err(e),
                };

            for clip_t in 0..=bound {
                let clip = MultiIndex::new(vec![clip_t]);
                let mut partials = Vec::with_capacity(4);
                for (pair, pt) in [(&host_pair, &point), (&cp_pair, &cp_point)] {
                    let mut env = SideEnv::new(1, &ctx, pt);
                    env.box_n = Some(&bounds);
                    env.outer_clip = Some(&clip);
                    env.seqs.insert("beta", &beta);
                    env.seqs.insert("Acoef", &beta);
                    for (name, table) in &funs {
                        env.funs.insert(name.as_str(), table as &dyn AbstractFun);
                    }
                    let lhs = match pair.lhs.eval(&env) {
                        Ok(v) => v,
                        Err(EvalError::DivisionByZero) => continue 'point,
                        Err(e) => return Err(e),
                    };
                    let rhs = match pair.rhs.eval(&env) {
                        Ok(v) => v,
                        Err(EvalError::DivisionByZero) => continue 'point,
                        Err(e) => return Err(e),
                    };
                    partials.push(lhs);
                    partials.push(rhs);
                }
                if partials[0] != partials[2] || partials[1] != partials[3] {
                    return Ok(false);
                }
            }
            break;
        }
    }
    Ok(true)
}

/// The numeric Gustafson reduction: the delta specialization of the C_n/D_n
/// transformation formula evaluates, base for base, to the registered
/// non-terminating 6phi5; truncated sides must agree exactly at matched
/// cutoffs.
pub fn gustafson_delta_sides(
    n: usize,
    sampler: &mut Sampler,
    trunc: &crate::dsl::TruncSettings,
) -> EvalResult<(Rational, Rational, Rational, Rational)> {
    let host = builtin_identity("an_cntrans2")?.pair(Regime::Nonterminating)?;
    let target = builtin_identity("cn_nt6p5")?.pair(Regime::Nonterminating)?;
    let q = sampler.q_small();
    let ctx = EvalCtx::new(q.clone());
    let b = sampler.nonzero_scalar();
    let d = sampler.nonzero_scalar();
    let x = sampler.x_vector(n);
    let c: Vec<Rational> = (0..n)
        .map(|_| Rational::from_int(sampler.small_int(3) + 2))
        .collect();
    // keep |aq/(b c_1..c_n d)| < 1 and small: solve for a
    let mut cprod = Rational::one();
    for cr in &c {
        cprod = &cprod * cr;
    }
    let z = sampler.small_scalar();
    let a = (&(&(&z * &b) * &cprod) * &d).div_exact(&q)?;

    let mut host_point = ParamPoint::new(n);
    host_point.set_scalar("q", q.clone());
    host_point.set_scalar("a", a.clone());
    host_point.set_scalar("b", a.div_exact(&b)?);
    host_point.set_scalar("A", (&a * &q).div_exact(&(&b * &d))?);
    host_point.set_vector("x", x.clone());
    let y: Vec<Rational> = c.iter().map(|cr| cr.recip()).collect::<EvalResult<_>>()?;
    host_point.set_vector("y", y);

    let mut target_point = ParamPoint::new(n);
    target_point.set_scalar("q", q);
    target_point.set_scalar("a", a);
    target_point.set_scalar("b", b);
    target_point.set_scalar("d", d);
    target_point.set_vector("x", x);
    target_point.set_vector("c", c);

    let beta = SeqSpec::delta(n);
    let mut henv = SideEnv::new(n, &ctx, &host_point);
    henv.trunc = Some(trunc);
    henv.seqs.insert("beta", &beta);
    let host_lhs = host.lhs.eval(&henv)?;
    let host_rhs = host.rhs.eval(&henv)?;
    let mut tenv = SideEnv::new(n, &ctx, &target_point);
    tenv.trunc = Some(trunc);
    let t_lhs = target.lhs.eval(&tenv)?;
    let t_rhs = target.rhs.eval(&tenv)?;
    Ok((host_lhs, host_rhs, t_lhs, t_rhs))
}

/// All registered delta reductions with their hosts.
pub fn all_delta_reductions() -> Vec<(&'static str, &'static str)> {
    vec![
        ("wang_ma2", "rogers_delta"),
        ("an_result5a", "milne_6phi5_delta"),
        ("an_result5b", "milne_term_6phi5_delta"),
        ("dn_result5", "bhatnagar_6phi5_delta"),
    ]
}

/// Hosts with registered one-variable counterparts.
pub fn all_n1_reductions() -> Vec<&'static str> {
    vec![
        "an_trans1",
        "an_result5a",
        "an_result5b",
        "an_cntrans1",
        "an_cntrans2",
        "cn_antrans3",
        "dn_result5",
        "an_liu3",
        "an3p2_1",
        "an3p2_2",
        "dn3p2_1",
        "dn3p2",
    ]
}
