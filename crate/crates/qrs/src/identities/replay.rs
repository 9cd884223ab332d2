//! Proof replay: mechanizes the derivation of each transformation theorem.
//!
//! Every theorem in the registry that was proved by "choose K(y) so the inner
//! sum is summable by a balanced 3phi2" is replayed as follows. The base
//! expansion formula is evaluated with the printed K substituted; for each
//! outer/middle index pair (k, j) the innermost m-sum is checked to be
//! termwise proportional to the registered 3phi2 oracle's summand at the
//! printed substitution, and is then replaced by (first term) x (oracle
//! closed form). The fully collapsed right side must reproduce the
//! theorem's right side exactly.

use std::collections::HashMap;

use crate::bailey::SeqSpec;
use crate::dsl::ast::Regime;
use crate::dsl::compile::{AbstractFun, FunTable, SideEnv};
use crate::error::{EvalError, EvalResult};
use crate::exact::{binom2, neg_one_pow, Rational};
use crate::identities::registry::builtin_identity;
use crate::identities::sampling::Sampler;
use crate::kernels::{vandermonde_a, ParamPoint};
use crate::multiindex::{iter_box, MultiIndex};
use crate::qpoch::EvalCtx;

/// The five theorems whose proofs the engine replays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Replay {
    /// Base an_trans1, oracle an3p2_1.
    AnResult5a,
    /// Base an_trans1 (terminating), oracle an3p2_2.
    AnResult5b,
    /// Base an_cntrans1, oracle dn3p2_1.
    AnCntrans2,
    /// Base cn_antrans3, oracle dn3p2.
    DnResult5,
    /// Base: the expansion lemma with the printed K, h, beta; oracle an3p2_1.
    AnLiu3,
}

impl Replay {
    pub fn theorem_id(&self) -> &'static str {
        match self {
            Replay::AnResult5a => "an_result5a",
            Replay::AnResult5b => "an_result5b",
            Replay::AnCntrans2 => "an_cntrans2",
            Replay::DnResult5 => "dn_result5",
            Replay::AnLiu3 => "an_liu3",
        }
    }

    pub fn base_id(&self) -> &'static str {
        match self {
            Replay::AnResult5a | Replay::AnResult5b => "an_trans1",
            Replay::AnCntrans2 => "an_cntrans1",
            Replay::DnResult5 => "cn_antrans3",
            Replay::AnLiu3 => "an_liu3",
        }
    }

    pub fn oracle_id(&self) -> &'static str {
        match self {
            Replay::AnResult5a | Replay::AnLiu3 => "an3p2_1",
            Replay::AnResult5b => "an3p2_2",
            Replay::AnCntrans2 => "dn3p2_1",
            Replay::DnResult5 => "dn3p2",
        }
    }

    pub fn all() -> [Replay; 5] {
        [
            Replay::AnResult5a,
            Replay::AnResult5b,
            Replay::AnCntrans2,
            Replay::DnResult5,
            Replay::AnLiu3,
        ]
    }
}

fn rsum0(k: &MultiIndex) -> i64 {
    k.comps().iter().enumerate().map(|(r, &c)| r as i64 * c).sum()
}

fn rsum1(k: &MultiIndex) -> i64 {
    k.comps().iter().enumerate().map(|(r, &c)| (r as i64 + 1) * c).sum()
}

struct Ws<'a> {
    ctx: &'a EvalCtx,
    x: Vec<Rational>,
    n: usize,
}

impl Ws<'_> {
    fn q(&self) -> &Rational {
        self.ctx.q()
    }

    fn qp(&self, e: i64) -> EvalResult<Rational> {
        self.ctx.qpow(e)
    }

    fn pch(&self, base: &Rational, k: i64) -> EvalResult<Rational> {
        self.ctx.poch(base, k)
    }

    fn ratio(&self, r: usize, s: usize) -> EvalResult<Rational> {
        self.x[r].div_exact(&self.x[s])
    }
}

/// The printed K(y) of each proof, reduced at y = q^t to an exact finite
/// product quotient.
fn k_paper(replay: Replay, ws: &Ws, p: &ParamPoint, t: &MultiIndex) -> EvalResult<Rational> {
    let n = ws.n;
    let wt = t.weight();
    let a = p.scalar("a")?;
    match replay {
        Replay::AnResult5a => {
            let (ca, b) = (p.scalar("A")?, p.scalar("b")?);
            let mut v = ws
                .pch(ca, wt)?
                .div_exact(&ws.pch(&(a * ca).div_exact(b)?, wt)?)?;
            for r in 0..n {
                let axq = &(a * ws.q()) * &ws.x[r];
                let bxq = &(b * ws.q()) * &ws.x[r];
                v = &v * &ws.pch(&axq, t.comp(r))?.div_exact(&ws.pch(&bxq, t.comp(r))?)?;
            }
            Ok(v)
        }
        Replay::AnResult5b => {
            let (ca, b) = (p.scalar("A")?, p.scalar("b")?);
            let mut v = Rational::one();
            for r in 0..n {
                let num = &ws.pch(&(ca * &ws.x[r]), t.comp(r))?
                    * &ws.pch(&(&(a * ws.q()) * &ws.x[r]), t.comp(r))?;
                let den = &ws.pch(&(&(a * ca) * &ws.x[r]).div_exact(b)?, t.comp(r))?
                    * &ws.pch(&(&(b * ws.q()) * &ws.x[r]), t.comp(r))?;
                v = &v * &num.div_exact(&den)?;
            }
            Ok(v)
        }
        Replay::AnCntrans2 => {
            let (ca, b) = (p.scalar("A")?, p.scalar("b")?);
            let mut v = ws.pch(ca, wt)?;
            for r in 0..n {
                let xr = &ws.x[r];
                let num = ws.pch(&(&(&(a * ws.q()) * xr) * xr), t.comp(r))?;
                let den = &ws.pch(&(&(b * ws.q()) * xr), t.comp(r))?
                    * &ws.pch(&(&(a * ca) * xr).div_exact(b)?, t.comp(r))?;
                v = &v * &num.div_exact(&den)?;
            }
            for r in 0..n {
                for s in (r + 1)..n {
                    let u = &(&(a * ws.q()) * &ws.x[r]) * &ws.x[s];
                    v = &v
                        * &ws
                            .pch(&u, t.comp(r))?
                            .div_exact(&ws.pch(&(&u * &ws.qp(t.comp(s))?), t.comp(r))?)?;
                }
            }
            Ok(v)
        }
        Replay::DnResult5 => {
            let (ca, b) = (p.scalar("A")?, p.scalar("b")?);
            let mut v = Rational::one().div_exact(&ws.pch(&(a * ca).div_exact(b)?, wt)?)?;
            for r in 0..n {
                v = &v
                    * &(&ws.pch(&(ca * &ws.x[r]), t.comp(r))?
                        * &ws.pch(&(&(a * ws.q()) * &ws.x[r]), t.comp(r))?);
            }
            for r in 0..n {
                for s in (r + 1)..n {
                    let u = &(&(b * ws.q()) * &ws.x[r]) * &ws.x[s];
                    v = &v * &ws.pch(&u, t.comp(r) + t.comp(s))?;
                }
            }
            for r in 0..n {
                for s in 0..n {
                    let u = &(&(b * ws.q()) * &ws.x[r]) * &ws.x[s];
                    v = v.div_exact(&ws.pch(&u, t.comp(r))?)?;
                }
            }
            Ok(v)
        }
        Replay::AnLiu3 => {
            let (ca, cb) = (p.scalar("A")?, p.scalar("B")?);
            let aab = &(a * ca) * cb;
            let mut v = ws
                .pch(&aab.div_exact(ws.q())?, wt)?
                .div_exact(&ws.pch(&(a * ca), wt)?)?;
            for r in 0..n {
                let num = ws.pch(&(&(a * ws.q()) * &ws.x[r]), t.comp(r))?;
                let den = ws.pch(&(&(a * cb) * &ws.x[r]), t.comp(r))?;
                v = &v * &num.div_exact(&den)?;
            }
            Ok(v)
        }
    }
}

/// Oracle parameters (a, b, c), shifted x-vector and box for the printed
/// substitution at a given (k, j) pair.
fn oracle_point(
    replay: Replay,
    ws: &Ws,
    p: &ParamPoint,
    k: &MultiIndex,
    j: &MultiIndex,
) -> EvalResult<(ParamPoint, Vec<Rational>, MultiIndex)> {
    let a = p.scalar("a")?;
    let (a3, b3, c3) = match replay {
        Replay::AnResult5a => (
            a * &ws.qp(k.weight())?,
            p.scalar("A")? * &ws.qp(j.weight())?,
            p.scalar("b")? * &ws.qp(j.weight() + 1)?,
        ),
        Replay::AnResult5b => (
            a * &ws.qp(k.weight())?,
            p.scalar("A")?.clone(),
            p.scalar("b")? * &ws.qp(j.weight() + 1)?,
        ),
        Replay::AnCntrans2 => (
            a.clone(),
            p.scalar("A")? * &ws.qp(j.weight())?,
            (a * p.scalar("A")?).div_exact(p.scalar("b")?)?,
        ),
        Replay::DnResult5 => (
            a * &ws.qp(k.weight())?,
            p.scalar("A")?.clone(),
            p.scalar("b")? * ws.q(),
        ),
        Replay::AnLiu3 => (
            a * &ws.qp(k.weight())?,
            (&(a * p.scalar("A")?) * p.scalar("B")?).div_exact(ws.q())?,
            a * p.scalar("B")?,
        ),
    };
    let xs: Vec<Rational> = (0..ws.n)
        .map(|r| Ok(&ws.x[r] * &ws.qp(j.comp(r))?))
        .collect::<EvalResult<_>>()?;
    let bounds = k.sub(j)?;
    let mut op = ParamPoint::new(ws.n);
    op.set_scalar("q", ws.q().clone());
    op.set_scalar("a", a3);
    op.set_scalar("b", b3);
    op.set_scalar("c", c3);
    op.set_vector("x", xs.clone());
    Ok((op, xs, bounds))
}

/// Oracle summand U(m), transcribed from the summation display; U(0) = 1.
fn oracle_term(
    replay: Replay,
    ws: &Ws,
    op: &ParamPoint,
    xs: &[Rational],
    bounds: &MultiIndex,
    m: &MultiIndex,
) -> EvalResult<Rational> {
    let n = ws.n;
    let (a, b, c) = (op.scalar("a")?, op.scalar("b")?, op.scalar("c")?);
    let wm = m.weight();
    let nw = bounds.weight();
    let mut t = vandermonde_a(ws.ctx, xs, m)?;
    for r in 0..n {
        for s in 0..n {
            let ratio = xs[r].div_exact(&xs[s])?;
            t = &t
                * &ws
                    .pch(&(&ws.qp(-bounds.comp(s))? * &ratio), m.comp(r))?
                    .div_exact(&ws.pch(&(ws.q() * &ratio), m.comp(r))?)?;
        }
    }
    match replay {
        Replay::AnResult5a | Replay::AnLiu3 => {
            for (r, xr) in xs.iter().enumerate() {
                t = &t
                    * &ws
                        .pch(&(a * xr), m.comp(r))?
                        .div_exact(&ws.pch(&(c * xr), m.comp(r))?)?;
            }
            let num = ws.pch(b, wm)?;
            let den = ws.pch(&(&(a * b) * &ws.qp(1 - nw)?).div_exact(c)?, wm)?;
            t = &t * &num.div_exact(&den)?;
        }
        Replay::AnResult5b => {
            for (r, xr) in xs.iter().enumerate() {
                let num = &ws.pch(&(a * xr), m.comp(r))? * &ws.pch(&(b * xr), m.comp(r))?;
                let den = &ws.pch(&(c * xr), m.comp(r))?
                    * &ws.pch(&(&(&(a * b) * xr) * &ws.qp(1 - nw)?).div_exact(c)?, m.comp(r))?;
                t = &t * &num.div_exact(&den)?;
            }
        }
        Replay::AnCntrans2 => {
            for r in 0..n {
                for s in (r + 1)..n {
                    let u = &(a * &xs[r]) * &xs[s];
                    t = t.div_exact(&ws.pch(&u, m.comp(r) + m.comp(s))?)?;
                }
            }
            for r in 0..n {
                for s in 0..n {
                    let u = &(&(a * &xs[r]) * &xs[s]) * &ws.qp(bounds.comp(s))?;
                    t = &t * &ws.pch(&u, m.comp(r))?;
                }
            }
            for (r, xr) in xs.iter().enumerate() {
                let den = &ws.pch(&(c * xr), m.comp(r))?
                    * &ws.pch(&(&(&(a * b) * ws.q()) * xr).div_exact(c)?, m.comp(r))?;
                t = t.div_exact(&den)?;
            }
            t = &t * &ws.pch(b, wm)?;
        }
        Replay::DnResult5 => {
            for r in 0..n {
                for s in (r + 1)..n {
                    let u = &(c * &xs[r]) * &xs[s];
                    t = &t * &ws.pch(&u, m.comp(r) + m.comp(s))?;
                }
            }
            for r in 0..n {
                for s in 0..n {
                    let u = &(c * &xs[r]) * &xs[s];
                    t = t.div_exact(&ws.pch(&u, m.comp(r))?)?;
                }
            }
            for (r, xr) in xs.iter().enumerate() {
                t = &t * &(&ws.pch(&(a * xr), m.comp(r))? * &ws.pch(&(b * xr), m.comp(r))?);
            }
            t = t.div_exact(&ws.pch(&(&(a * b) * &ws.qp(1 - nw)?).div_exact(c)?, wm)?)?;
        }
    }
    Ok(&t * &ws.qp(rsum1(m))?)
}

/// The innermost summand T(m) of the base expansion with K = K_paper.
fn base_inner_term(
    replay: Replay,
    ws: &Ws,
    p: &ParamPoint,
    k: &MultiIndex,
    j: &MultiIndex,
    m: &MultiIndex,
    kpaper: &HashMap<MultiIndex, Rational>,
) -> EvalResult<Rational> {
    let n = ws.n;
    let a = p.scalar("a")?;
    let jm = j.add(m)?;
    let kval = kpaper
        .get(&jm)
        .cloned()
        .ok_or_else(|| EvalError::Config("K sample missing".into()))?;
    match replay {
        Replay::AnResult5a | Replay::AnResult5b => {
            let b = p.scalar("b")?;
            let mut v = Rational::one();
            for r in 0..n {
                for s in (r + 1)..n {
                    let ratio = ws.ratio(r, s)?;
                    let num = Rational::one()
                        - &ws.qp(j.comp(r) - j.comp(s) + m.comp(r) - m.comp(s))? * &ratio;
                    let den = Rational::one() - &ws.qp(j.comp(r) - j.comp(s))? * &ratio;
                    v = &v * &num.div_exact(&den)?;
                }
            }
            v = &(&v * &ws.qp(rsum1(m))?) * &kval;
            for r in 0..n {
                for s in 0..n {
                    let ratio = ws.ratio(r, s)?;
                    let num = ws.pch(&(&ws.qp(j.comp(r) - k.comp(s))? * &ratio), m.comp(r))?;
                    let den = ws.pch(&(&ws.qp(1 + j.comp(r) - j.comp(s))? * &ratio), m.comp(r))?;
                    v = &v * &num.div_exact(&den)?;
                }
            }
            for (r, xr) in ws.x.iter().enumerate() {
                let num = &ws.pch(&(&(a * xr) * &ws.qp(j.comp(r) + k.weight())?), m.comp(r))?
                    * &ws.pch(&(&(b * xr) * &ws.qp(1 + j.comp(r))?), m.comp(r))?;
                let den = &ws.pch(&(&(a * ws.q()) * xr), j.comp(r) + m.comp(r))?
                    * &ws.pch(&(&(b * xr) * &ws.qp(1 + j.comp(r) + j.weight())?), m.comp(r))?;
                v = &v * &num.div_exact(&den)?;
            }
            Ok(v)
        }
        Replay::AnCntrans2 => {
            let b = p.scalar("b")?;
            let mut v = Rational::one();
            for r in 0..n {
                for s in (r + 1)..n {
                    let ratio = ws.ratio(r, s)?;
                    let axx = &(a * &ws.x[r]) * &ws.x[s];
                    let num = &(Rational::one()
                        - &ws.qp(j.comp(r) - j.comp(s) + m.comp(r) - m.comp(s))? * &ratio)
                        * &(Rational::one()
                            - &axx * &ws.qp(j.comp(r) + j.comp(s) + m.comp(r) + m.comp(s))?);
                    let den = &(Rational::one() - &ws.qp(j.comp(r) - j.comp(s))? * &ratio)
                        * &(Rational::one() - axx);
                    v = &v * &num.div_exact(&den)?;
                }
            }
            v = &(&v * &ws.qp(rsum1(m))?) * &kval;
            for (r, xr) in ws.x.iter().enumerate() {
                let num = ws.pch(&(&(b * xr) * &ws.qp(1 + j.comp(r))?), m.comp(r))?;
                let den = ws.pch(&(&(b * xr) * &ws.qp(1 + j.comp(r) + j.weight())?), m.comp(r))?;
                v = &v * &num.div_exact(&den)?;
            }
            for r in 0..n {
                for s in 0..n {
                    let ratio = ws.ratio(r, s)?;
                    let axx = &(a * &ws.x[r]) * &ws.x[s];
                    let num = &ws.pch(&(&ws.qp(j.comp(r) - k.comp(s))? * &ratio), m.comp(r))?
                        * &ws.pch(&(&axx * &ws.qp(k.comp(s) + j.comp(r))?), m.comp(r))?;
                    let den = &ws.pch(&(&ws.qp(1 + j.comp(r) - j.comp(s))? * &ratio), m.comp(r))?
                        * &ws.pch(&(&axx * ws.q()), j.comp(r) + m.comp(r))?;
                    v = &v * &num.div_exact(&den)?;
                }
            }
            Ok(v)
        }
        Replay::DnResult5 => {
            let b = p.scalar("b")?;
            let mut v = Rational::one();
            for r in 0..n {
                for s in (r + 1)..n {
                    let ratio = ws.ratio(r, s)?;
                    let num = Rational::one()
                        - &ws.qp(j.comp(r) - j.comp(s) + m.comp(r) - m.comp(s))? * &ratio;
                    let den = Rational::one() - &ws.qp(j.comp(r) - j.comp(s))? * &ratio;
                    v = &v * &num.div_exact(&den)?;
                }
            }
            for r in 0..n {
                for s in 0..n {
                    let ratio = ws.ratio(r, s)?;
                    let bxx = &(b * &ws.x[r]) * &ws.x[s];
                    let num = &ws.pch(&(&ws.qp(j.comp(r) - k.comp(s))? * &ratio), m.comp(r))?
                        * &ws.pch(&(&bxx * &ws.qp(1 + j.comp(r))?), m.comp(r))?;
                    let den = &ws.pch(&(&ws.qp(1 + j.comp(r) - j.comp(s))? * &ratio), m.comp(r))?
                        * &ws.pch(&(&bxx * &ws.qp(1 + j.comp(r) + j.comp(s))?), m.comp(r))?;
                    v = &v * &num.div_exact(&den)?;
                }
            }
            for (r, xr) in ws.x.iter().enumerate() {
                let num = ws.pch(&(&(a * xr) * &ws.qp(j.comp(r) + k.weight())?), m.comp(r))?;
                let den = ws.pch(&(&(a * ws.q()) * xr), j.comp(r) + m.comp(r))?;
                v = &v * &num.div_exact(&den)?;
            }
            Ok(&(&v * &ws.qp(rsum1(m))?) * &kval)
        }
        Replay::AnLiu3 => {
            // expansion-lemma inner term: h_j(q^{j+m}) G_{k,j+m}(a) K(q^{j+m})
            let h = an_liu3_h(ws, p, j, &jm)?;
            let g = crate::bailey::g_an_entry(ws.ctx, a, &ws.x, k, &jm)?;
            Ok(&(&h * &g) * &kval)
        }
    }
}

/// The printed h_j(y) of the Th. 5.2 proof at y = q^t.
fn an_liu3_h(ws: &Ws, p: &ParamPoint, j: &MultiIndex, t: &MultiIndex) -> EvalResult<Rational> {
    let n = ws.n;
    let mut v = vandermonde_a(ws.ctx, &ws.x, j)?;
    for r in 0..n {
        for s in 0..n {
            let base = &ws.qp(-t.comp(s))? * &ws.ratio(r, s)?;
            v = &v * &ws.pch(&base, j.comp(r))?;
        }
    }
    let aab = &(p.scalar("a")? * p.scalar("A")?) * p.scalar("B")?;
    let den_base = ws.qp(2 - t.weight())?.div_exact(&aab)?;
    v = v.div_exact(&ws.pch(&den_base, j.weight())?)?;
    Ok(&v * &ws.qp(rsum0(j))?)
}

/// The printed beta(j) of the Th. 5.2 proof.
fn an_liu3_beta(ws: &Ws, p: &ParamPoint, j: &MultiIndex, acoef: &SeqSpec) -> EvalResult<Rational> {
    let mut v = Rational::one();
    for (r, xr) in ws.x.iter().enumerate() {
        v = &v * &ws.pch(&(ws.q() * xr).div_exact(p.scalar("A")?)?, j.comp(r))?;
    }
    v = &v * &ws.pch(&ws.q().div_exact(p.scalar("B")?)?, j.weight())?;
    Ok(&(&v * &ws.qp(j.weight())?) * &acoef.get(j))
}

/// Everything around the innermost m-sum on the base expansion's right side
/// (outer k-factor times middle j-factor, beta excluded).
fn base_outer_middle(
    replay: Replay,
    ws: &Ws,
    p: &ParamPoint,
    bounds: &MultiIndex,
    k: &MultiIndex,
    j: &MultiIndex,
) -> EvalResult<Rational> {
    let n = ws.n;
    let a = p.scalar("a")?;
    let wk = k.weight();
    let wj = j.weight();
    match replay {
        Replay::AnResult5a | Replay::AnResult5b => {
            let b = p.scalar("b")?;
            let mut t = vandermonde_a(ws.ctx, &ws.x, k)?;
            for r in 0..n {
                for s in 0..n {
                    let ratio = ws.ratio(r, s)?;
                    t = &t
                        * &ws
                            .pch(&(&ws.qp(-bounds.comp(s))? * &ratio), k.comp(r))?
                            .div_exact(&ws.pch(&(ws.q() * &ratio), k.comp(r))?)?;
                }
            }
            for (r, xr) in ws.x.iter().enumerate() {
                let num = &(Rational::one() - &(a * xr) * &ws.qp(k.comp(r) + wk)?)
                    * &ws.pch(&(a * xr), wk)?;
                let den = &(Rational::one() - a * xr)
                    * &ws.pch(&(&(a * xr) * &ws.qp(1 + bounds.comp(r))?), wk)?;
                t = &t * &num.div_exact(&den)?;
            }
            t = &t * &ws.qp(wk * bounds.weight() + rsum0(k))?;
            let mut u = vandermonde_a(ws.ctx, &ws.x, j)?;
            for r in 0..n {
                for s in 0..n {
                    u = &u * &ws.pch(&(&ws.qp(-k.comp(s))? * &ws.ratio(r, s)?), j.comp(r))?;
                }
            }
            for (r, xr) in ws.x.iter().enumerate() {
                let num = &ws.pch(&(&(a * xr) * &ws.qp(wk)?), j.comp(r))?
                    * &ws.pch(&(&(b * ws.q()) * xr), j.comp(r))?;
                let den = ws.pch(&(b * xr), j.comp(r) + wj)?;
                u = &u * &num.div_exact(&den)?;
            }
            u = &(&u * &neg_one_pow(wj)) * &ws.qp(rsum1(j) + binom2(wj))?;
            Ok(&t * &u)
        }
        Replay::AnCntrans2 => {
            let b = p.scalar("b")?;
            let mut t = Rational::one();
            for r in 0..n {
                for s in (r + 1)..n {
                    let ratio = ws.ratio(r, s)?;
                    let axx = &(a * &ws.x[r]) * &ws.x[s];
                    let num = &(Rational::one() - &ws.qp(k.comp(r) - k.comp(s))? * &ratio)
                        * &(Rational::one() - &axx * &ws.qp(k.comp(r) + k.comp(s))?);
                    let den = &(Rational::one() - ratio) * &(Rational::one() - axx);
                    t = &t * &num.div_exact(&den)?;
                }
            }
            for (r, xr) in ws.x.iter().enumerate() {
                let xx = &(a * xr) * xr;
                t = &t
                    * &(Rational::one() - &xx * &ws.qp(2 * k.comp(r))?)
                        .div_exact(&(Rational::one() - xx))?;
            }
            for r in 0..n {
                for s in 0..n {
                    let ratio = ws.ratio(r, s)?;
                    let axx = &(a * &ws.x[r]) * &ws.x[s];
                    let num = &ws.pch(&(&ws.qp(-bounds.comp(s))? * &ratio), k.comp(r))?
                        * &ws.pch(&axx, k.comp(r))?;
                    let den = &ws.pch(&(ws.q() * &ratio), k.comp(r))?
                        * &ws.pch(&(&axx * &ws.qp(1 + bounds.comp(s))?), k.comp(r))?;
                    t = &t * &num.div_exact(&den)?;
                }
            }
            t = &t * &ws.qp(wk * bounds.weight() + rsum0(k))?;
            let mut u = vandermonde_a(ws.ctx, &ws.x, j)?;
            for (r, xr) in ws.x.iter().enumerate() {
                u = &u
                    * &ws
                        .pch(&(&(b * ws.q()) * xr), j.comp(r))?
                        .div_exact(&ws.pch(&(b * xr), j.comp(r) + wj)?)?;
            }
            for r in 0..n {
                for s in 0..n {
                    let axx = &(a * &ws.x[r]) * &ws.x[s];
                    u = &u
                        * &(&ws.pch(&(&axx * &ws.qp(k.comp(s))?), j.comp(r))?
                            * &ws.pch(&(&ws.qp(-k.comp(s))? * &ws.ratio(r, s)?), j.comp(r))?);
                }
            }
            u = &(&u * &neg_one_pow(wj)) * &ws.qp(rsum1(j) + binom2(wj))?;
            Ok(&t * &u)
        }
        Replay::DnResult5 => {
            let b = p.scalar("b")?;
            let mut t = vandermonde_a(ws.ctx, &ws.x, k)?;
            for r in 0..n {
                for s in 0..n {
                    let ratio = ws.ratio(r, s)?;
                    t = &t
                        * &ws
                            .pch(&(&ws.qp(-bounds.comp(s))? * &ratio), k.comp(r))?
                            .div_exact(&ws.pch(&(ws.q() * &ratio), k.comp(r))?)?;
                }
            }
            for (r, xr) in ws.x.iter().enumerate() {
                let num = &(Rational::one() - &(a * xr) * &ws.qp(k.comp(r) + wk)?)
                    * &ws.pch(&(a * xr), wk)?;
                let den = &(Rational::one() - a * xr)
                    * &ws.pch(&(&(a * xr) * &ws.qp(1 + bounds.comp(r))?), wk)?;
                t = &t * &num.div_exact(&den)?;
            }
            t = &t * &ws.qp(wk * bounds.weight() + rsum0(k))?;
            let mut u = Rational::one();
            for r in 0..n {
                for s in (r + 1)..n {
                    let ratio = ws.ratio(r, s)?;
                    let bxx = &(b * &ws.x[r]) * &ws.x[s];
                    let num = &(Rational::one() - &ws.qp(j.comp(r) - j.comp(s))? * &ratio)
                        * &(Rational::one() - &bxx * &ws.qp(j.comp(r) + j.comp(s))?);
                    let den = &(Rational::one() - ratio) * &(Rational::one() - bxx);
                    u = &u * &num.div_exact(&den)?;
                }
            }
            for (r, xr) in ws.x.iter().enumerate() {
                let bxx = &(b * xr) * xr;
                let num = &(Rational::one() - &bxx * &ws.qp(2 * j.comp(r))?)
                    * &ws.pch(&(&(a * xr) * &ws.qp(wk)?), j.comp(r))?;
                u = &u * &num.div_exact(&(Rational::one() - bxx))?;
            }
            for r in 0..n {
                for s in 0..n {
                    let bqxx = &(&(b * ws.q()) * &ws.x[r]) * &ws.x[s];
                    let num = &ws.pch(&(&ws.qp(-k.comp(s))? * &ws.ratio(r, s)?), j.comp(r))?
                        * &ws.pch(&bqxx, j.comp(r))?;
                    let den = ws.pch(&bqxx, j.comp(r) + j.comp(s))?;
                    u = &u * &num.div_exact(&den)?;
                }
            }
            u = &(&u * &neg_one_pow(wj)) * &ws.qp(rsum1(j) + binom2(wj))?;
            Ok(&t * &u)
        }
        Replay::AnLiu3 => {
            // expansion lemma: the outer factor is the A_n kernel f_k(q^N; a)
            let y: Vec<Rational> = bounds
                .comps()
                .iter()
                .map(|&c| ws.qp(c))
                .collect::<EvalResult<_>>()?;
            crate::kernels::f_an(ws.ctx, &y, a, &ws.x, k)
        }
    }
}

fn replay_point(replay: Replay, n: usize, sampler: &mut Sampler) -> ParamPoint {
    let mut p = ParamPoint::new(n);
    p.set_scalar("q", sampler.q());
    p.set_scalar("a", sampler.nonzero_scalar());
    p.set_scalar("A", sampler.nonzero_scalar());
    match replay {
        Replay::AnLiu3 => p.set_scalar("B", sampler.nonzero_scalar()),
        _ => p.set_scalar("b", sampler.nonzero_scalar()),
    }
    p.set_vector(
        "x",
        if n == 1 {
            vec![Rational::one()]
        } else {
            sampler.x_vector(n)
        },
    );
    p
}

/// Run one full proof replay at one sampled point. Checks, in order:
/// 1. the theorem's LHS equals the base expansion's LHS with K = K_paper;
/// 2. each innermost sum is termwise proportional to the oracle summand at
///    the printed substitution (U(0) = 1);
/// 3. collapsing every innermost sum through the oracle's closed-form
///    product side reproduces the theorem's RHS exactly.
pub fn run_replay_once(
    replay: Replay,
    n: usize,
    bounds: &MultiIndex,
    sampler: &mut Sampler,
) -> EvalResult<bool> {
    let theorem = builtin_identity(replay.theorem_id())?.pair(Regime::Terminating)?;
    let oracle = builtin_identity(replay.oracle_id())?.pair(Regime::Terminating)?;
    let point = replay_point(replay, n, sampler);
    let ctx = EvalCtx::new(point.scalar("q")?.clone());
    let ws = Ws {
        ctx: &ctx,
        x: point.vector("x")?.to_vec(),
        n,
    };
    let pts: Vec<MultiIndex> = iter_box(bounds).collect();
    let beta = SeqSpec::from_pairs(
        std::iter::once((MultiIndex::zeros(n), sampler.nonzero_scalar()))
            .chain((0..2).map(|_| (sampler.pick(&pts), sampler.nonzero_scalar()))),
    );
    let kpaper: HashMap<MultiIndex, Rational> = iter_box(bounds)
        .map(|t| Ok((t.clone(), k_paper(replay, &ws, &point, &t)?)))
        .collect::<EvalResult<_>>()?;

    // 1. theorem LHS == base LHS with K_paper
    let theorem_lhs = {
        let mut env = SideEnv::new(n, &ctx, &point);
        env.box_n = Some(bounds);
        env.seqs.insert("beta", &beta);
        env.seqs.insert("Acoef", &beta);
        theorem.lhs.eval(&env)?
    };
    let base_lhs = match replay {
        Replay::AnLiu3 => {
            // expansion lemma LHS: K(q^N) sum_j h_j(q^N) beta(j)
            let mut tot = Rational::zero();
            for j in beta.support_sorted() {
                if j.leq(bounds)? {
                    tot = &tot
                        + &(&an_liu3_h(&ws, &point, j, bounds)?
                            * &an_liu3_beta(&ws, &point, j, &beta)?);
                }
            }
            &tot * &kpaper[bounds]
        }
        _ => {
            let base = builtin_identity(replay.base_id())?.pair(Regime::Terminating)?;
            let ktab = FunTable {
                values: kpaper.clone(),
            };
            let mut env = SideEnv::new(n, &ctx, &point);
            env.box_n = Some(bounds);
            env.seqs.insert("beta", &beta);
            env.funs.insert("K", &ktab as &dyn AbstractFun);
            base.lhs.eval(&env)?
        }
    };
    if theorem_lhs != base_lhs {
        return Ok(false);
    }

    // 2 + 3. collapse the inner sums via the oracle and re-sum
    let zero = MultiIndex::zeros(n);
    let mut collapsed = Rational::zero();
    for k in iter_box(bounds) {
        for j in beta.support_sorted() {
            if !j.leq(&k)? {
                continue;
            }
            let (opoint, oxs, obounds) = oracle_point(replay, &ws, &point, &k, j)?;
            let t0 = base_inner_term(replay, &ws, &point, &k, j, &zero, &kpaper)?;
            for m in iter_box(&obounds) {
                let tm = base_inner_term(replay, &ws, &point, &k, j, &m, &kpaper)?;
                let um = oracle_term(replay, &ws, &opoint, &oxs, &obounds, &m)?;
                if tm != &t0 * &um {
                    return Ok(false);
                }
            }
            let closed = {
                let mut env = SideEnv::new(n, &ctx, &opoint);
                env.box_n = Some(&obounds);
                oracle.lhs.eval(&env)?
            };
            let beta_val = match replay {
                Replay::AnLiu3 => an_liu3_beta(&ws, &point, j, &beta)?,
                _ => beta.get(j),
            };
            let om = base_outer_middle(replay, &ws, &point, bounds, &k, j)?;
            collapsed = &collapsed + &(&(&(&om * &beta_val) * &t0) * &closed);
        }
    }

    let theorem_rhs = {
        let mut env = SideEnv::new(n, &ctx, &point);
        env.box_n = Some(bounds);
        env.seqs.insert("beta", &beta);
        env.seqs.insert("Acoef", &beta);
        theorem.rhs.eval(&env)?
    };
    Ok(collapsed == theorem_rhs)
}

/// Verify a proof replay over seeded trials with resampling on poles.
pub fn verify_replay(
    replay: Replay,
    n: usize,
    bounds: &MultiIndex,
    seed: u64,
    trials: u32,
) -> EvalResult<bool> {
    for trial in 0..trials {
        let mut sampler =
            Sampler::for_trial(seed, &format!("replay:{}", replay.theorem_id()), trial as u64);
        let mut attempts = 0;
        loop {
            match run_replay_once(replay, n, bounds, &mut sampler) {
                Ok(true) => break,
                Ok(false) => return Ok(false),
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

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn replay_an_result5a() {
        assert!(verify_replay(Replay::AnResult5a, 2, &mi(&[2, 1]), 21, 2).unwrap());
    }

    #[test]
    fn replay_an_result5b() {
        assert!(verify_replay(Replay::AnResult5b, 2, &mi(&[2, 1]), 22, 2).unwrap());
    }

    #[test]
    fn replay_an_cntrans2() {
        assert!(verify_replay(Replay::AnCntrans2, 2, &mi(&[2, 1]), 23, 2).unwrap());
    }

    #[test]
    fn replay_dn_result5() {
        assert!(verify_replay(Replay::DnResult5, 2, &mi(&[2, 1]), 24, 2).unwrap());
    }

    #[test]
    fn replay_an_liu3() {
        assert!(verify_replay(Replay::AnLiu3, 2, &mi(&[2, 1]), 25, 2).unwrap());
    }
}
