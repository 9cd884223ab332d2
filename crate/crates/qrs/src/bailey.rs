//! Bailey matrix pairs and the generic expansion engine.
//!
//! Closed-form entries for three mutually inverse lower-triangular pairs
//! (F, G) — one-variable, A_n and C_n — plus a generic forward-substitution
//! inverter that serves as an independent oracle for the closed forms, and
//! the expansion engine that mechanizes the q-Lagrange-inversion proof
//! strategy: writing K(y) sum_j h_j(y) beta_j in the form sum_k f_k(y) alpha_k
//! and solving for alpha through G.

use std::collections::HashMap;

use crate::error::{EvalError, EvalResult};
use crate::exact::{binom2, neg_one_pow, rat_pow, Rational};
use crate::kernels::{f_an, g_cn, powq, vandermonde_a};
use crate::multiindex::{iter_box, MultiIndex};
use crate::qpoch::EvalCtx;

/// Which inverse pair a computation runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum System {
    OneVar,
    An,
    Cn,
}

impl System {
    pub fn name(&self) -> &'static str {
        match self {
            System::OneVar => "one",
            System::An => "an",
            System::Cn => "cn",
        }
    }
}

/// One-variable F entry: (1-aq^{2m}) (q^{-k};q)_m / (aq^{k+1};q)_m q^{km}.
pub fn f1_entry(ctx: &EvalCtx, a: &Rational, k: i64, m: i64) -> EvalResult<Rational> {
    let num = &(Rational::one() - a * &ctx.qpow(2 * m)?) * &ctx.poch(&ctx.qpow(-k)?, m)?;
    let den = ctx.poch(&(a * &ctx.qpow(k + 1)?), m)?;
    Ok(&num.div_exact(&den)? * &ctx.qpow(k * m)?)
}

/// One-variable G entry: (q^{-k};q)_m (aq^m;q)_k / ((1-aq^m)(q;q)_m (q;q)_k) q^m.
pub fn g1_entry(ctx: &EvalCtx, a: &Rational, k: i64, m: i64) -> EvalResult<Rational> {
    let aqm = a * &ctx.qpow(m)?;
    let num = &ctx.poch(&ctx.qpow(-k)?, m)? * &ctx.poch(&aqm, k)?;
    let den = &(&(Rational::one() - aqm) * &ctx.poch(ctx.q(), m)?) * &ctx.poch(ctx.q(), k)?;
    Ok(&num.div_exact(&den)? * &ctx.qpow(m)?)
}

/// A_n Bailey F entry.
pub fn f_an_entry(
    ctx: &EvalCtx,
    a: &Rational,
    x: &[Rational],
    k: &MultiIndex,
    m: &MultiIndex,
) -> EvalResult<Rational> {
    let n = x.len();
    let wm = m.weight();
    let mut v = &(&vandermonde_a(ctx, x, m)? * &powq(ctx, m)?) * &ctx.qpow(k.weight() * wm)?;
    for r in 0..n {
        for s in 0..n {
            let base = &ctx.qpow(-k.comp(s))? * &x[r].div_exact(&x[s])?;
            v = &v * &ctx.poch(&base, m.comp(r))?;
        }
    }
    for r in 0..n {
        let num = Rational::one() - &(a * &x[r]) * &ctx.qpow(m.comp(r) + wm)?;
        let den = ctx.poch(&(&(a * &x[r]) * &ctx.qpow(k.comp(r) + 1)?), wm)?;
        v = &v * &num.div_exact(&den)?;
    }
    Ok(v)
}

/// A_n Bailey G entry.
pub fn g_an_entry(
    ctx: &EvalCtx,
    a: &Rational,
    x: &[Rational],
    k: &MultiIndex,
    m: &MultiIndex,
) -> EvalResult<Rational> {
    let n = x.len();
    let e: i64 = m.comps().iter().enumerate().map(|(r, &c)| (r as i64 + 1) * c).sum();
    let mut v = &vandermonde_a(ctx, x, m)? * &ctx.qpow(e)?;
    for r in 0..n {
        for s in 0..n {
            let ratio = x[r].div_exact(&x[s])?;
            let num = ctx.poch(&(&ctx.qpow(-k.comp(s))? * &ratio), m.comp(r))?;
            let den = &ctx.poch(&(ctx.q() * &ratio), k.comp(r))?
                * &ctx.poch(&(ctx.q() * &ratio), m.comp(r))?;
            v = &v * &num.div_exact(&den)?;
        }
    }
    let wk = k.weight();
    for r in 0..n {
        let axqm = &(a * &x[r]) * &ctx.qpow(m.comp(r))?;
        let num = ctx.poch(&axqm, wk)?;
        let den = Rational::one() - axqm;
        v = &v * &num.div_exact(&den)?;
    }
    Ok(v)
}

/// C_n Bailey F entry (the r<=s product includes the diagonal).
pub fn f_cn_entry(
    ctx: &EvalCtx,
    a: &Rational,
    x: &[Rational],
    k: &MultiIndex,
    m: &MultiIndex,
) -> EvalResult<Rational> {
    let n = x.len();
    let wm = m.weight();
    let mut v = &(&vandermonde_a(ctx, x, m)? * &powq(ctx, m)?) * &ctx.qpow(k.weight() * wm)?;
    for r in 0..n {
        for s in r..n {
            v = &v * &(Rational::one() - &(&(a * &x[r]) * &x[s]) * &ctx.qpow(m.comp(r) + m.comp(s))?);
        }
    }
    for r in 0..n {
        for s in 0..n {
            let num = ctx.poch(&(&ctx.qpow(-k.comp(s))? * &x[r].div_exact(&x[s])?), m.comp(r))?;
            let den = ctx.poch(&(&(&(a * &x[r]) * &x[s]) * &ctx.qpow(k.comp(s) + 1)?), m.comp(r))?;
            v = &v * &num.div_exact(&den)?;
        }
    }
    Ok(v)
}

/// C_n Bailey G entry.
pub fn g_cn_entry(
    ctx: &EvalCtx,
    a: &Rational,
    x: &[Rational],
    k: &MultiIndex,
    m: &MultiIndex,
) -> EvalResult<Rational> {
    let n = x.len();
    let e: i64 = m.comps().iter().enumerate().map(|(r, &c)| (r as i64 + 1) * c).sum();
    let mut v = ctx.qpow(e)?;
    for r in 0..n {
        for s in (r + 1)..n {
            let ratio = x[r].div_exact(&x[s])?;
            let num = &(Rational::one() - &ctx.qpow(m.comp(r) - m.comp(s))? * &ratio)
                * &(Rational::one() - &(&(a * &x[r]) * &x[s]) * &ctx.qpow(m.comp(r) + m.comp(s))?);
            let den = Rational::one() - ratio;
            v = &v * &num.div_exact(&den)?;
        }
    }
    for r in 0..n {
        for s in 0..n {
            let ratio = x[r].div_exact(&x[s])?;
            let axx_qms = &(&(a * &x[r]) * &x[s]) * &ctx.qpow(m.comp(s))?;
            let num = &ctx.poch(&(&ctx.qpow(-k.comp(s))? * &ratio), m.comp(r))?
                * &ctx.poch(&axx_qms, k.comp(r))?;
            let den = &(&(Rational::one() - axx_qms) * &ctx.poch(&(ctx.q() * &ratio), k.comp(r))?)
                * &ctx.poch(&(ctx.q() * &ratio), m.comp(r))?;
            v = &v * &num.div_exact(&den)?;
        }
    }
    Ok(v)
}

/// Closed-form matrix family bound to a (system, point).
pub struct MatrixPair<'a> {
    pub system: System,
    pub ctx: &'a EvalCtx,
    pub a: Rational,
    pub x: Vec<Rational>,
}

impl<'a> MatrixPair<'a> {
    pub fn new(system: System, ctx: &'a EvalCtx, a: Rational, x: Vec<Rational>) -> Self {
        if system == System::OneVar {
            assert_eq!(x.len(), 1, "one-variable system has n = 1");
        }
        MatrixPair { system, ctx, a, x }
    }

    /// F_{k,m}; zero when m is not component-wise below k.
    pub fn f(&self, k: &MultiIndex, m: &MultiIndex) -> EvalResult<Rational> {
        if !m.leq(k)? {
            return Ok(Rational::zero());
        }
        match self.system {
            System::OneVar => f1_entry(self.ctx, &self.a, k.comp(0), m.comp(0)),
            System::An => f_an_entry(self.ctx, &self.a, &self.x, k, m),
            System::Cn => f_cn_entry(self.ctx, &self.a, &self.x, k, m),
        }
    }

    /// G_{k,m}; zero when m is not component-wise below k.
    pub fn g(&self, k: &MultiIndex, m: &MultiIndex) -> EvalResult<Rational> {
        if !m.leq(k)? {
            return Ok(Rational::zero());
        }
        match self.system {
            System::OneVar => g1_entry(self.ctx, &self.a, k.comp(0), m.comp(0)),
            System::An => g_an_entry(self.ctx, &self.a, &self.x, k, m),
            System::Cn => g_cn_entry(self.ctx, &self.a, &self.x, k, m),
        }
    }

    /// Kernel value f_k(y) whose specialization at y = q^t is F_{t,k}.
    pub fn kernel(&self, y: &[Rational], k: &MultiIndex) -> EvalResult<Rational> {
        match self.system {
            System::OneVar => {
                let v = crate::kernels::f1(self.ctx, &y[0], &self.a, k.comp(0))?;
                Ok(v)
            }
            System::An => f_an(self.ctx, y, &self.a, &self.x, k),
            System::Cn => g_cn(self.ctx, y, &self.a, &self.x, k),
        }
    }
}

/// Explicit lower-triangular matrix on a box, stored sparsely.
/// Entries absent from the map are zero; only pairs with m <= k are kept.
#[derive(Clone, Debug)]
pub struct TriMatrix {
    bounds: MultiIndex,
    entries: HashMap<(MultiIndex, MultiIndex), Rational>,
}

impl TriMatrix {
    pub fn from_fn(
        bounds: &MultiIndex,
        mut f: impl FnMut(&MultiIndex, &MultiIndex) -> EvalResult<Rational>,
    ) -> EvalResult<Self> {
        let mut entries = HashMap::new();
        for k in iter_box(bounds) {
            for m in iter_box(&k) {
                let v = f(&k, &m)?;
                if !v.is_zero() {
                    entries.insert((k.clone(), m.clone()), v);
                }
            }
        }
        Ok(TriMatrix {
            bounds: bounds.clone(),
            entries,
        })
    }

    pub fn identity(bounds: &MultiIndex) -> Self {
        let mut entries = HashMap::new();
        for k in iter_box(bounds) {
            entries.insert((k.clone(), k.clone()), Rational::one());
        }
        TriMatrix {
            bounds: bounds.clone(),
            entries,
        }
    }

    pub fn bounds(&self) -> &MultiIndex {
        &self.bounds
    }

    pub fn entry(&self, k: &MultiIndex, m: &MultiIndex) -> Rational {
        self.entries
            .get(&(k.clone(), m.clone()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Matrix product over the shared box.
    pub fn mul(&self, rhs: &TriMatrix) -> EvalResult<TriMatrix> {
        let mut entries = HashMap::new();
        for k in iter_box(&self.bounds) {
            for m in iter_box(&k) {
                let mut tot = Rational::zero();
                for j in iter_box(&k) {
                    if m.leq(&j)? {
                        tot = &tot + &(&self.entry(&k, &j) * &rhs.entry(&j, &m));
                    }
                }
                if !tot.is_zero() {
                    entries.insert((k.clone(), m.clone()), tot);
                }
            }
        }
        Ok(TriMatrix {
            bounds: self.bounds.clone(),
            entries,
        })
    }

    pub fn is_identity(&self) -> bool {
        for ((k, m), v) in &self.entries {
            let want = if k == m { Rational::one() } else { Rational::zero() };
            if *v != want {
                return false;
            }
        }
        // all diagonal entries must be present
        iter_box(&self.bounds).all(|k| self.entries.contains_key(&(k.clone(), k)))
    }
}

/// Invert a lower-triangular matrix by forward substitution in lexicographic
/// order. Exact: M * M^{-1} = I holds as rational identity.
pub fn invert_lower_triangular(m: &TriMatrix) -> EvalResult<TriMatrix> {
    let bounds = m.bounds().clone();
    let mut inv: HashMap<(MultiIndex, MultiIndex), Rational> = HashMap::new();
    let pts: Vec<MultiIndex> = iter_box(&bounds).collect();
    for col in &pts {
        for k in &pts {
            if !col.leq(k)? {
                continue;
            }
            let diag = m.entry(k, k);
            if diag.is_zero() {
                return Err(EvalError::SingularDiagonal(k.to_string()));
            }
            if k == col {
                inv.insert((k.clone(), col.clone()), diag.recip()?);
                continue;
            }
            // X[k,col] = -(sum_{col <= j < k} M[k,j] X[j,col]) / M[k,k]
            let mut acc = Rational::zero();
            for j in iter_box(k) {
                if &j == k || !col.leq(&j)? {
                    continue;
                }
                if let Some(x) = inv.get(&(j.clone(), col.clone())) {
                    acc = &acc + &(&m.entry(k, &j) * x);
                }
            }
            let v = (-acc).div_exact(&diag)?;
            if !v.is_zero() {
                inv.insert((k.clone(), col.clone()), v);
            }
        }
    }
    Ok(TriMatrix {
        bounds,
        entries: inv,
    })
}

/// Abstract h family: h_j evaluated at y = q^t. Zero unless j <= t is the
/// termination hypothesis of the expansion lemma.
pub trait HFamily {
    fn at_qpow(&self, j: &MultiIndex, t: &MultiIndex) -> EvalResult<Rational>;
}

/// h_j(y) = kernel_j(y; b) for one of the three systems.
pub struct KernelH<'a> {
    pub pair: MatrixPair<'a>,
}

impl HFamily for KernelH<'_> {
    fn at_qpow(&self, j: &MultiIndex, t: &MultiIndex) -> EvalResult<Rational> {
        if !j.leq(t)? {
            return Ok(Rational::zero());
        }
        let y: Vec<Rational> = t
            .comps()
            .iter()
            .map(|&c| self.pair.ctx.qpow(c))
            .collect::<EvalResult<_>>()?;
        self.pair.kernel(&y, j)
    }
}

/// Arbitrary tabulated h values on pairs (j, t) with j <= t.
pub struct TabulatedH {
    pub values: HashMap<(MultiIndex, MultiIndex), Rational>,
}

impl HFamily for TabulatedH {
    fn at_qpow(&self, j: &MultiIndex, t: &MultiIndex) -> EvalResult<Rational> {
        if !j.leq(t)? {
            return Ok(Rational::zero());
        }
        Ok(self
            .values
            .get(&(j.clone(), t.clone()))
            .cloned()
            .unwrap_or_else(Rational::zero))
    }
}

/// Finitely supported coefficient family beta(j).
#[derive(Clone, Debug, Default)]
pub struct SeqSpec {
    values: HashMap<MultiIndex, Rational>,
}

impl SeqSpec {
    pub fn delta(n: usize) -> Self {
        let mut values = HashMap::new();
        values.insert(MultiIndex::zeros(n), Rational::one());
        SeqSpec { values }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (MultiIndex, Rational)>) -> Self {
        SeqSpec {
            values: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, j: &MultiIndex) -> Rational {
        self.values.get(j).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &MultiIndex> {
        self.values.keys()
    }

    pub fn support_sorted(&self) -> Vec<&MultiIndex> {
        let mut v: Vec<&MultiIndex> = self.values.keys().collect();
        v.sort();
        v
    }
}

/// Both sides of the expansion lemma at y = q^N, computed independently.
///
/// lhs = K(q^N) sum_j h_j(q^N) beta_j
/// rhs = sum_{k<=N} f_k(q^N) sum_{j<=k} beta_j
///         sum_{m<=k-j} h_j(q^{j+m}) G_{k,j+m} K(q^{j+m})
pub fn expand(
    fker: &MatrixPair,
    ginv: &MatrixPair,
    kpref: &dyn Fn(&MultiIndex) -> EvalResult<Rational>,
    h: &dyn HFamily,
    beta: &SeqSpec,
    bounds: &MultiIndex,
) -> EvalResult<(Rational, Rational)> {
    let ctx = fker.ctx;
    let y_n: Vec<Rational> = bounds
        .comps()
        .iter()
        .map(|&c| ctx.qpow(c))
        .collect::<EvalResult<_>>()?;

    let mut lhs = Rational::zero();
    for j in beta.support_sorted() {
        if j.leq(bounds)? {
            lhs = &lhs + &(&h.at_qpow(j, bounds)? * &beta.get(j));
        }
    }
    lhs = &lhs * &kpref(bounds)?;

    let mut rhs = Rational::zero();
    for k in iter_box(bounds) {
        let fk = fker.kernel(&y_n, &k)?;
        if fk.is_zero() {
            continue;
        }
        let mut mid = Rational::zero();
        for j in beta.support_sorted() {
            if !j.leq(&k)? {
                continue;
            }
            let mut inner = Rational::zero();
            for m in iter_box(&k.sub(j)?) {
                let jm = j.add(&m)?;
                let term = &(&h.at_qpow(j, &jm)? * &ginv.g(&k, &jm)?) * &kpref(&jm)?;
                inner = &inner + &term;
            }
            mid = &mid + &(&beta.get(j) * &inner);
        }
        rhs = &rhs + &(&fk * &mid);
    }
    Ok((lhs, rhs))
}

/// alpha(k) = sum_{m<=k} G_{k,m} A(q^m): solve the expansion coefficients
/// from samples of A on the box.
pub fn alpha_from_samples(
    ginv: &MatrixPair,
    samples: &dyn Fn(&MultiIndex) -> EvalResult<Rational>,
    k: &MultiIndex,
) -> EvalResult<Rational> {
    let mut tot = Rational::zero();
    for m in iter_box(k) {
        tot = &tot + &(&ginv.g(k, &m)? * &samples(&m)?);
    }
    Ok(tot)
}

/// One-variable wang-ma1 style q-power: q^{binom(j+1,2)} (-1)^j helper kept
/// next to the engine because the inverse-pair tests reproduce that display.
pub fn signed_qbinom(ctx: &EvalCtx, j: i64) -> EvalResult<Rational> {
    Ok(&neg_one_pow(j) * &ctx.qpow(binom2(j + 1))?)
}

/// y = q^t vector helper.
pub fn qpow_vector(ctx: &EvalCtx, t: &MultiIndex) -> EvalResult<Vec<Rational>> {
    t.comps().iter().map(|&c| ctx.qpow(c)).collect()
}

/// x^k component product prod_r x_r^{e_r}.
pub fn vector_power(x: &[Rational], exps: &[i64]) -> EvalResult<Rational> {
    let mut v = Rational::one();
    for (xr, &e) in x.iter().zip(exps) {
        v = &v * &rat_pow(xr, e)?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identities::sampling::Sampler;

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn one_var_entries_at_zero() {
        let ctx = EvalCtx::new(r(1, 3));
        let a = r(2, 5);
        assert_eq!(
            f1_entry(&ctx, &a, 0, 0).unwrap(),
            Rational::one() - a.clone()
        );
        assert_eq!(
            g1_entry(&ctx, &a, 0, 0).unwrap(),
            (Rational::one() - a.clone()).recip().unwrap()
        );
        // m > k vanishes through (q^{-k};q)_m
        assert_eq!(f1_entry(&ctx, &a, 1, 2).unwrap(), Rational::zero());
    }

    #[test]
    fn one_var_product_is_identity() {
        let ctx = EvalCtx::new(r(1, 3));
        let a = r(2, 5);
        let bounds = mi(&[5]);
        let pair = MatrixPair::new(System::OneVar, &ctx, a, vec![Rational::one()]);
        let f = TriMatrix::from_fn(&bounds, |k, m| pair.f(k, m)).unwrap();
        let g = TriMatrix::from_fn(&bounds, |k, m| pair.g(k, m)).unwrap();
        assert!(f.mul(&g).unwrap().is_identity());
        assert!(g.mul(&f).unwrap().is_identity());
    }

    #[test]
    fn an_entries_at_zero_and_n1_collapse() {
        let ctx = EvalCtx::new(r(1, 2));
        let a = r(1, 3);
        let x = [r(1, 1), r(1, 5)];
        let z = mi(&[0, 0]);
        let fe = f_an_entry(&ctx, &a, &x, &z, &z).unwrap();
        let ge = g_an_entry(&ctx, &a, &x, &z, &z).unwrap();
        let prod = (Rational::one() - &a * &x[0]) * (Rational::one() - &a * &x[1]);
        assert_eq!(fe, prod);
        assert_eq!(ge, prod.recip().unwrap());
        // n = 1, x_1 = 1 reduces to the one-variable pair
        let one = [Rational::one()];
        for k in 0..4i64 {
            for m in 0..=k {
                assert_eq!(
                    f_an_entry(&ctx, &a, &one, &mi(&[k]), &mi(&[m])).unwrap(),
                    f1_entry(&ctx, &a, k, m).unwrap()
                );
                assert_eq!(
                    g_an_entry(&ctx, &a, &one, &mi(&[k]), &mi(&[m])).unwrap(),
                    g1_entry(&ctx, &a, k, m).unwrap()
                );
            }
        }
    }

    #[test]
    fn cn_entries_reduce_to_one_variable_with_a_x_squared() {
        let ctx = EvalCtx::new(r(1, 2));
        let a = r(1, 7);
        let x = r(2, 3);
        let a_eff = &a * &(&x * &x);
        for k in 0..4i64 {
            for m in 0..=k {
                assert_eq!(
                    f_cn_entry(&ctx, &a, &[x.clone()], &mi(&[k]), &mi(&[m])).unwrap(),
                    f1_entry(&ctx, &a_eff, k, m).unwrap()
                );
                assert_eq!(
                    g_cn_entry(&ctx, &a, &[x.clone()], &mi(&[k]), &mi(&[m])).unwrap(),
                    g1_entry(&ctx, &a_eff, k, m).unwrap()
                );
            }
        }
    }

    #[test]
    fn cn_f_at_zero_is_diagonal_inclusive_product() {
        let ctx = EvalCtx::new(r(1, 2));
        let a = r(1, 7);
        let x = [r(1, 1), r(1, 3)];
        let z = mi(&[0, 0]);
        let mut want = Rational::one();
        for rr in 0..2 {
            for ss in rr..2 {
                want = &want * &(Rational::one() - &(&a * &x[rr]) * &x[ss]);
            }
        }
        assert_eq!(f_cn_entry(&ctx, &a, &x, &z, &z).unwrap(), want);
        assert_eq!(
            g_cn_entry(&ctx, &a, &x, &z, &z).unwrap(),
            want.recip().unwrap()
        );
    }

    #[test]
    fn an_product_identity_on_box() {
        let mut s = Sampler::new(11);
        for _ in 0..3 {
            let q = s.q();
            let ctx = EvalCtx::new(q);
            let a = s.nonzero_scalar();
            let x = s.x_vector(2);
            let pair = MatrixPair::new(System::An, &ctx, a, x);
            let bounds = mi(&[2, 1]);
            let f = TriMatrix::from_fn(&bounds, |k, m| pair.f(k, m)).unwrap();
            let g = TriMatrix::from_fn(&bounds, |k, m| pair.g(k, m)).unwrap();
            assert!(f.mul(&g).unwrap().is_identity());
        }
    }

    #[test]
    fn cn_product_identity_on_box() {
        let mut s = Sampler::new(13);
        for _ in 0..3 {
            let q = s.q();
            let ctx = EvalCtx::new(q);
            let a = s.nonzero_scalar();
            let x = s.x_vector(2);
            let pair = MatrixPair::new(System::Cn, &ctx, a, x);
            let bounds = mi(&[2, 2]);
            let f = TriMatrix::from_fn(&bounds, |k, m| pair.f(k, m)).unwrap();
            let g = TriMatrix::from_fn(&bounds, |k, m| pair.g(k, m)).unwrap();
            assert!(f.mul(&g).unwrap().is_identity());
        }
    }

    #[test]
    fn forward_substitution_matches_closed_form() {
        let ctx = EvalCtx::new(r(1, 3));
        let a = r(3, 8);
        let mut s = Sampler::new(17);
        let x = s.x_vector(2);
        let pair = MatrixPair::new(System::An, &ctx, a, x);
        let bounds = mi(&[2, 1]);
        let f = TriMatrix::from_fn(&bounds, |k, m| pair.f(k, m)).unwrap();
        let g = TriMatrix::from_fn(&bounds, |k, m| pair.g(k, m)).unwrap();
        let inv = invert_lower_triangular(&f).unwrap();
        for k in iter_box(&bounds) {
            for m in iter_box(&k) {
                assert_eq!(inv.entry(&k, &m), g.entry(&k, &m), "at ({k},{m})");
            }
        }
    }

    #[test]
    fn invert_identity_and_singleton() {
        let bounds = mi(&[1, 1]);
        let id = TriMatrix::identity(&bounds);
        assert!(invert_lower_triangular(&id).unwrap().is_identity());
        let single = mi(&[0]);
        let m = TriMatrix::from_fn(&single, |_, _| Ok(r(5, 3))).unwrap();
        let inv = invert_lower_triangular(&m).unwrap();
        assert_eq!(inv.entry(&mi(&[0]), &mi(&[0])), r(3, 5));
        // zero diagonal is singular
        let bad = TriMatrix::from_fn(&single, |_, _| Ok(Rational::zero())).unwrap();
        assert!(matches!(
            invert_lower_triangular(&bad),
            Err(EvalError::SingularDiagonal(_))
        ));
    }

    #[test]
    fn kernel_specializes_to_f_entries() {
        let mut s = Sampler::new(23);
        for system in [System::An, System::Cn] {
            let q = s.q();
            let ctx = EvalCtx::new(q);
            let a = s.nonzero_scalar();
            let x = s.x_vector(2);
            let pair = MatrixPair::new(system, &ctx, a, x);
            let bounds = mi(&[2, 2]);
            for t in iter_box(&bounds) {
                let y = qpow_vector(&ctx, &t).unwrap();
                for k in iter_box(&bounds) {
                    let lhs = pair.kernel(&y, &k).unwrap();
                    let rhs = if k.leq(&t).unwrap() {
                        pair.f(&t, &k).unwrap()
                    } else {
                        Rational::zero()
                    };
                    assert_eq!(lhs, rhs, "{system:?} kernel at t={t} k={k}");
                }
            }
        }
    }

    #[test]
    fn expand_engine_with_random_data() {
        let mut s = Sampler::new(29);
        for system in [System::An, System::Cn] {
            let q = s.q();
            let ctx = EvalCtx::new(q);
            let a = s.nonzero_scalar();
            let x = s.x_vector(2);
            let bounds = mi(&[2, 1]);
            let pair_f = MatrixPair::new(system, &ctx, a.clone(), x.clone());
            let pair_g = MatrixPair::new(system, &ctx, a, x);
            let ksamples: HashMap<MultiIndex, Rational> = iter_box(&bounds)
                .map(|t| (t, s.nonzero_scalar()))
                .collect();
            let mut hvals = HashMap::new();
            for t in iter_box(&bounds) {
                for j in iter_box(&t) {
                    hvals.insert((j, t.clone()), s.nonzero_scalar());
                }
            }
            let h = TabulatedH { values: hvals };
            let beta = SeqSpec::from_pairs(
                iter_box(&bounds)
                    .take(3)
                    .map(|j| (j, s.nonzero_scalar())),
            );
            let ks = ksamples.clone();
            let kf = move |t: &MultiIndex| Ok(ks[t].clone());
            let (lhs, rhs) = expand(&pair_f, &pair_g, &kf, &h, &beta, &bounds).unwrap();
            assert_eq!(lhs, rhs, "{system:?} expansion");
        }
    }

    #[test]
    fn expand_with_delta_beta() {
        let mut s = Sampler::new(31);
        let ctx = EvalCtx::new(s.q());
        let a = s.nonzero_scalar();
        let b = s.nonzero_scalar();
        let x = s.x_vector(2);
        let bounds = mi(&[1, 1]);
        let pair_f = MatrixPair::new(System::An, &ctx, a.clone(), x.clone());
        let pair_g = MatrixPair::new(System::An, &ctx, a, x.clone());
        let h = KernelH {
            pair: MatrixPair::new(System::An, &ctx, b, x),
        };
        let beta = SeqSpec::delta(2);
        let ksamples: HashMap<MultiIndex, Rational> = iter_box(&bounds)
            .map(|t| (t, s.nonzero_scalar()))
            .collect();
        let kf = move |t: &MultiIndex| Ok(ksamples[t].clone());
        let (lhs, rhs) = expand(&pair_f, &pair_g, &kf, &h, &beta, &bounds).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn zero_box_expansion_is_single_term() {
        let mut s = Sampler::new(37);
        let ctx = EvalCtx::new(s.q());
        let a = s.nonzero_scalar();
        let x = vec![s.nonzero_scalar()];
        let bounds = mi(&[0]);
        let pair_f = MatrixPair::new(System::OneVar, &ctx, a.clone(), vec![Rational::one()]);
        let pair_g = MatrixPair::new(System::OneVar, &ctx, a, vec![Rational::one()]);
        let h = TabulatedH {
            values: HashMap::from([((mi(&[0]), mi(&[0])), x[0].clone())]),
        };
        let beta = SeqSpec::delta(1);
        let kf = |_: &MultiIndex| Ok(r(4, 7));
        let (lhs, rhs) = expand(&pair_f, &pair_g, &kf, &h, &beta, &bounds).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn alpha_round_trip() {
        // sum_k F_{N,k} alpha(k) = A(q^N) for random sample data
        let mut s = Sampler::new(41);
        let ctx = EvalCtx::new(s.q());
        let a = s.nonzero_scalar();
        let x = s.x_vector(2);
        let pair = MatrixPair::new(System::An, &ctx, a, x);
        let bounds = mi(&[2, 2]);
        let samples: HashMap<MultiIndex, Rational> = iter_box(&bounds)
            .map(|t| (t, s.nonzero_scalar()))
            .collect();
        let sf = |t: &MultiIndex| Ok(samples[t].clone());
        for nn in iter_box(&bounds) {
            let mut tot = Rational::zero();
            for k in iter_box(&nn) {
                tot = &tot + &(&pair.f(&nn, &k).unwrap() * &alpha_from_samples(&pair, &sf, &k).unwrap());
            }
            assert_eq!(tot, samples[&nn], "round trip at N={nn}");
        }
        // alpha of identically zero samples is zero
        let zf = |_: &MultiIndex| Ok(Rational::zero());
        assert_eq!(
            alpha_from_samples(&pair, &zf, &mi(&[2, 1])).unwrap(),
            Rational::zero()
        );
        // A = F-column gives an indicator
        let k0 = mi(&[1, 1]);
        let col = |t: &MultiIndex| pair.f(t, &k0);
        for k in iter_box(&bounds) {
            let want = if k == k0 { Rational::one() } else { Rational::zero() };
            assert_eq!(alpha_from_samples(&pair, &col, &k).unwrap(), want);
        }
    }
}
