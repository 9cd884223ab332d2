//! Kernel functions and product lemmas.
//!
//! These are the structured building blocks of every series in the engine:
//! the type-A Vandermonde product, the one-variable kernel f_k(y;a), its A_n
//! extension f_k(y;a) over a vector y, the C_n kernel g_j(y;a), and three
//! exact product-rewrite lemmas kept as checkable identities.
//!
//! Conventions used throughout:
//! - any product over r<s, r<=s, r!=s or (r,s) with an empty range is 1,
//!   which makes the n=1 reductions automatic;
//! - q-power exponents are explicit integer linear/quadratic forms in the
//!   index components (for example sum_r (r-1) k_r), never recomputed ad hoc.

use std::collections::BTreeMap;

use crate::error::{EvalError, EvalResult};
use crate::exact::{binom2, neg_one_pow, rat_pow, Rational};
use crate::multiindex::MultiIndex;
use crate::qpoch::EvalCtx;

/// A named assignment of every scalar/vector symbol to exact rationals.
#[derive(Clone, Debug, Default)]
pub struct ParamPoint {
    pub n: usize,
    scalars: BTreeMap<String, Rational>,
    vectors: BTreeMap<String, Vec<Rational>>,
    ints: BTreeMap<String, i64>,
}

impl ParamPoint {
    pub fn new(n: usize) -> Self {
        ParamPoint {
            n,
            ..Default::default()
        }
    }

    pub fn with_scalar(mut self, name: &str, v: Rational) -> Self {
        self.scalars.insert(name.to_string(), v);
        self
    }

    pub fn with_vector(mut self, name: &str, v: Vec<Rational>) -> Self {
        assert_eq!(v.len(), self.n, "vector length must equal dimension");
        self.vectors.insert(name.to_string(), v);
        self
    }

    pub fn with_int(mut self, name: &str, v: i64) -> Self {
        self.ints.insert(name.to_string(), v);
        self
    }

    pub fn set_scalar(&mut self, name: &str, v: Rational) {
        self.scalars.insert(name.to_string(), v);
    }

    pub fn set_vector(&mut self, name: &str, v: Vec<Rational>) {
        self.vectors.insert(name.to_string(), v);
    }

    pub fn scalar(&self, name: &str) -> EvalResult<&Rational> {
        self.scalars
            .get(name)
            .ok_or_else(|| EvalError::MissingParameter(name.to_string()))
    }

    pub fn vector(&self, name: &str) -> EvalResult<&[Rational]> {
        self.vectors
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| EvalError::MissingParameter(name.to_string()))
    }

    pub fn int(&self, name: &str) -> EvalResult<i64> {
        self.ints
            .get(name)
            .copied()
            .ok_or_else(|| EvalError::MissingParameter(name.to_string()))
    }

    pub fn q(&self) -> EvalResult<&Rational> {
        self.scalar("q")
    }

    pub fn scalar_names(&self) -> impl Iterator<Item = (&String, &Rational)> {
        self.scalars.iter()
    }

    pub fn vector_names(&self) -> impl Iterator<Item = (&String, &Vec<Rational>)> {
        self.vectors.iter()
    }

    pub fn int_names(&self) -> impl Iterator<Item = (&String, &i64)> {
        self.ints.iter()
    }
}

/// Type-A Vandermonde factor prod_{r<s} (1 - q^{k_r-k_s} x_r/x_s)/(1 - x_r/x_s).
/// Equals 1 for n = 1 and for k = 0.
pub fn vandermonde_a(ctx: &EvalCtx, x: &[Rational], k: &MultiIndex) -> EvalResult<Rational> {
    let n = x.len();
    let mut v = Rational::one();
    for r in 0..n {
        for s in (r + 1)..n {
            let ratio = x[r].div_exact(&x[s])?;
            let num = Rational::one() - &ctx.qpow(k.comp(r) - k.comp(s))? * &ratio;
            let den = Rational::one() - ratio;
            v = &v * &num.div_exact(&den).map_err(|_| EvalError::DivisionByZero)?;
        }
    }
    Ok(v)
}

/// One-variable kernel f_k(y;a) = (1-aq^{2k}) (1/y;q)_k / (aqy;q)_k * y^k,
/// whose specialization f_k(q^m;a) gives the Bailey entries F_{mk}(a).
pub fn f1(ctx: &EvalCtx, y: &Rational, a: &Rational, k: i64) -> EvalResult<Rational> {
    let num = &(Rational::one() - a * &ctx.qpow(2 * k)?) * &ctx.poch(&y.recip()?, k)?;
    let den = ctx.poch(&(&(a * ctx.q()) * y), k)?;
    Ok(&num.div_exact(&den)? * &rat_pow(y, k)?)
}

/// q^{sum_r (r-1) k_r} with r running 1..=n.
pub fn powq(ctx: &EvalCtx, k: &MultiIndex) -> EvalResult<Rational> {
    let e: i64 = k.comps().iter().enumerate().map(|(r, &kr)| r as i64 * kr).sum();
    ctx.qpow(e)
}

/// The A_n kernel f_k(y;a). Specializes at y = q^m to F_{mk}(a) of the A_n
/// Bailey transform, and collapses to [`f1`] at n = 1, x_1 = 1.
pub fn f_an(
    ctx: &EvalCtx,
    y: &[Rational],
    a: &Rational,
    x: &[Rational],
    k: &MultiIndex,
) -> EvalResult<Rational> {
    let n = x.len();
    let w = k.weight();
    let mut v = vandermonde_a(ctx, x, k)?;
    for r in 0..n {
        for s in 0..n {
            let base = x[r].div_exact(&(&x[s] * &y[s]))?;
            v = &v * &ctx.poch(&base, k.comp(r))?;
        }
    }
    for r in 0..n {
        let num = Rational::one() - &(a * &x[r]) * &ctx.qpow(k.comp(r) + w)?;
        let den = ctx.poch(&(&(&(a * ctx.q()) * &x[r]) * &y[r]), w)?;
        v = &v * &num.div_exact(&den)?;
    }
    let mut prod_y = Rational::one();
    for yr in y {
        prod_y = &prod_y * yr;
    }
    Ok(&(&v * &rat_pow(&prod_y, w)?) * &powq(ctx, k)?)
}

/// The C_n kernel g_j(y;a). Specializes at y = q^m to the C_n Bailey entries
/// F_{mj}(a); at n = 1, x_1 = x, it is the one-variable kernel with a -> a x^2.
pub fn g_cn(
    ctx: &EvalCtx,
    y: &[Rational],
    a: &Rational,
    x: &[Rational],
    j: &MultiIndex,
) -> EvalResult<Rational> {
    let n = x.len();
    let w = j.weight();
    let mut v = Rational::one();
    for r in 0..n {
        for s in (r + 1)..n {
            let ratio = x[r].div_exact(&x[s])?;
            let num = Rational::one() - &ctx.qpow(j.comp(r) - j.comp(s))? * &ratio;
            let den = Rational::one() - ratio;
            v = &v * &num.div_exact(&den)?;
            v = &v * &(Rational::one() - &(&(a * &x[r]) * &x[s]) * &ctx.qpow(j.comp(r) + j.comp(s))?);
        }
    }
    for r in 0..n {
        v = &v * &(Rational::one() - &(a * &(&x[r] * &x[r])) * &ctx.qpow(2 * j.comp(r))?);
    }
    for r in 0..n {
        for s in 0..n {
            let base = x[r].div_exact(&(&x[s] * &y[s]))?;
            let den_base = &(&(&(a * ctx.q()) * &x[r]) * &x[s]) * &y[s];
            v = &v * &ctx.poch(&base, j.comp(r))?.div_exact(&ctx.poch(&den_base, j.comp(r))?)?;
        }
    }
    let mut prod_y = Rational::one();
    for yr in y {
        prod_y = &prod_y * yr;
    }
    Ok(&(&v * &rat_pow(&prod_y, w)?) * &powq(ctx, j)?)
}

/// Which product-rewrite lemma to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductLemma {
    /// Milne's Lemma 4.3 rewrite turning shifted-denominator double products
    /// into Vandermonde times Pochhammer quotients; indices (k, m), m <= k.
    MagicLemma2,
    /// Milne's Lemma 3.12 rewrite of prod_{r,s} (q x_r/x_s;q)_{j_r-j_s};
    /// index j.
    Milne312,
    /// The shift-splitting rewrite with indices (k, j, m), j + m <= k.
    Elem1,
}

fn magiclemma2_sides(
    ctx: &EvalCtx,
    x: &[Rational],
    k: &MultiIndex,
    m: &MultiIndex,
) -> EvalResult<(Rational, Rational)> {
    let n = x.len();
    let mut lhs = Rational::one();
    for r in 0..n {
        for s in 0..n {
            let base = &ctx.qpow(1 + m.comp(r) - m.comp(s))? * &x[r].div_exact(&x[s])?;
            lhs = lhs.div_exact(&ctx.poch(&base, k.comp(r) - m.comp(r))?)?;
        }
    }
    let mut rhs = vandermonde_a(ctx, x, m)?;
    for r in 0..n {
        for s in 0..n {
            let ratio = x[r].div_exact(&x[s])?;
            let num = ctx.poch(&(&ctx.qpow(-k.comp(s))? * &ratio), m.comp(r))?;
            let den = ctx.poch(&(ctx.q() * &ratio), k.comp(r))?;
            rhs = &rhs * &num.div_exact(&den)?;
        }
    }
    let wm = m.weight();
    let e = k.weight() * wm - binom2(wm) + m.comps().iter().enumerate().map(|(r, &c)| r as i64 * c).sum::<i64>();
    rhs = &(&rhs * &neg_one_pow(wm)) * &ctx.qpow(e)?;
    Ok((lhs, rhs))
}

fn milne312_sides(ctx: &EvalCtx, x: &[Rational], j: &MultiIndex) -> EvalResult<(Rational, Rational)> {
    let n = x.len();
    let mut lhs = Rational::one();
    for r in 0..n {
        for s in 0..n {
            let base = ctx.q() * &x[r].div_exact(&x[s])?;
            lhs = &lhs * &ctx.poch(&base, j.comp(r) - j.comp(s))?;
        }
    }
    let wj = j.weight();
    let mut rhs = &vandermonde_a(ctx, x, j)? * &neg_one_pow((n as i64 - 1) * wj);
    let e = j.comps().iter().enumerate().map(|(r, &c)| r as i64 * c).sum::<i64>()
        + n as i64 * j.comps().iter().map(|&c| binom2(c)).sum::<i64>()
        - binom2(wj);
    rhs = &rhs * &ctx.qpow(e)?;
    for r in 0..n {
        rhs = &rhs * &rat_pow(&x[r], n as i64 * j.comp(r) - wj)?;
    }
    Ok((lhs, rhs))
}

fn elem1_sides(
    ctx: &EvalCtx,
    x: &[Rational],
    k: &MultiIndex,
    j: &MultiIndex,
    m: &MultiIndex,
) -> EvalResult<(Rational, Rational)> {
    let n = x.len();
    let mut lhs = Rational::one();
    for r in 0..n {
        for s in 0..n {
            let ratio = x[r].div_exact(&x[s])?;
            let t1 = ctx.poch(&(&ctx.qpow(-k.comp(s))? * &ratio), j.comp(r) + m.comp(r))?;
            let t2 = ctx.poch(&(&ctx.qpow(-m.comp(s) - j.comp(s))? * &ratio), j.comp(r))?;
            let d = ctx.poch(&(ctx.q() * &ratio), j.comp(r) + m.comp(r))?;
            lhs = &lhs * &(&t1 * &t2).div_exact(&d)?;
        }
    }
    let mut rhs = Rational::one();
    for r in 0..n {
        for s in 0..n {
            let ratio = x[r].div_exact(&x[s])?;
            let t1 = ctx.poch(&(&ctx.qpow(-k.comp(s))? * &ratio), j.comp(r))?;
            let t2 = ctx.poch(&(&ctx.qpow(j.comp(r) - k.comp(s))? * &ratio), m.comp(r))?;
            let d = ctx.poch(&(&ctx.qpow(1 + j.comp(r) - j.comp(s))? * &ratio), m.comp(r))?;
            rhs = &rhs * &(&t1 * &t2).div_exact(&d)?;
        }
    }
    for r in 0..n {
        for s in (r + 1)..n {
            let ratio = x[r].div_exact(&x[s])?;
            let num = Rational::one() - ratio.clone();
            let den = Rational::one() - &ctx.qpow(j.comp(r) - j.comp(s))? * &ratio;
            rhs = &rhs * &num.div_exact(&den)?;
        }
    }
    let wj = j.weight();
    let e = -j.comps().iter().enumerate().map(|(r, &c)| r as i64 * c).sum::<i64>()
        - wj * m.weight()
        - wj * wj
        + binom2(wj);
    rhs = &(&rhs * &neg_one_pow(wj)) * &ctx.qpow(e)?;
    Ok((lhs, rhs))
}

/// Check one of the product lemmas at an explicit point and index tuple.
/// Returns true iff the cited identity holds exactly there.
pub fn check_product_lemma(
    which: ProductLemma,
    ctx: &EvalCtx,
    x: &[Rational],
    indices: &[&MultiIndex],
) -> EvalResult<bool> {
    let (lhs, rhs) = match which {
        ProductLemma::MagicLemma2 => magiclemma2_sides(ctx, x, indices[0], indices[1])?,
        ProductLemma::Milne312 => milne312_sides(ctx, x, indices[0])?,
        ProductLemma::Elem1 => elem1_sides(ctx, x, indices[0], indices[1], indices[2])?,
    };
    Ok(lhs == rhs)
}
