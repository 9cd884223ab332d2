//! Exact q-Pochhammer symbols.
//!
//! The q-rising factorial is (A;q)_0 = 1 and
//! (A;q)_k = (1-A)(1-Aq)...(1-Aq^{k-1}) for k > 0. Negative lengths follow
//! from the infinite-product quotient and come down to
//! (A;q)_{-m} = 1 / ((Aq^{-m};q)_m), which is a pole whenever one of the
//! denominator factors vanishes.
//!
//! [`EvalCtx`] memoizes Pochhammer values and integer powers of q within one
//! evaluation context. The n-fold sums of the engine re-evaluate identical
//! prefixes across a box, and the recurrence
//! (A;q)_{k+1} = (A;q)_k (1 - Aq^k) makes each extension O(1).

use std::cell::RefCell;
use std::collections::HashMap;

use crate::error::{EvalError, EvalResult};
use crate::exact::{rat_pow, Rational};

/// Evaluation context: fixed nome q plus the Pochhammer/power caches.
/// Contexts are confined to one evaluation; independent contexts may run
/// concurrently.
pub struct EvalCtx {
    q: Rational,
    pos_pow: RefCell<Vec<Rational>>,
    poch: RefCell<HashMap<(Rational, i64), Rational>>,
}

impl EvalCtx {
    pub fn new(q: Rational) -> Self {
        EvalCtx {
            q,
            pos_pow: RefCell::new(vec![Rational::one()]),
            poch: RefCell::new(HashMap::new()),
        }
    }

    pub fn q(&self) -> &Rational {
        &self.q
    }

    /// q^e for signed e.
    pub fn qpow(&self, e: i64) -> EvalResult<Rational> {
        if e >= 0 {
            let mut cache = self.pos_pow.borrow_mut();
            while (cache.len() as i64) <= e {
                let next = cache.last().unwrap() * &self.q;
                cache.push(next);
            }
            Ok(cache[e as usize].clone())
        } else {
            if self.q.is_zero() {
                return Err(EvalError::ZeroToNegativePower);
            }
            rat_pow(&self.q, e)
        }
    }

    /// (A;q)_k for signed k, memoized.
    pub fn poch(&self, base: &Rational, k: i64) -> EvalResult<Rational> {
        if k == 0 {
            return Ok(Rational::one());
        }
        if k > 0 {
            if let Some(v) = self.poch.borrow().get(&(base.clone(), k)) {
                return Ok(v.clone());
            }
            let prev = self.poch(base, k - 1)?;
            let factor = Rational::one() - base * &self.qpow(k - 1)?;
            let v = &prev * &factor;
            self.poch
                .borrow_mut()
                .insert((base.clone(), k), v.clone());
            Ok(v)
        } else {
            // (A;q)_{-m} = 1 / ((A q^{-m};q)_m); vanishing factor is a pole
            let m = -k;
            let shifted = base * &self.qpow(-m)?;
            let den_val = self.poch(&shifted, m)?;
            den_val.recip()
        }
    }

    /// Product of (a_i;q)_k over the given bases.
    pub fn poch_multi(&self, bases: &[Rational], k: i64) -> EvalResult<Rational> {
        let mut v = Rational::one();
        for b in bases {
            v = &v * &self.poch(b, k)?;
        }
        Ok(v)
    }

    /// Truncated infinite product prod_{i=0}^{M-1} (1 - A q^i); requires
    /// |q| < 1 and M >= 1. Numeric-mode stand-in for (A;q)_inf.
    pub fn poch_trunc_inf(&self, base: &Rational, m: u32) -> EvalResult<Rational> {
        if !self.q.abs_lt(&Rational::one()) {
            return Err(EvalError::NomeOutOfRange);
        }
        assert!(m >= 1, "truncation level must be positive");
        self.poch(base, m as i64)
    }
}

/// One-shot (A;q)_k without an explicit context.
pub fn qpoch(base: &Rational, q: &Rational, k: i64) -> EvalResult<Rational> {
    EvalCtx::new(q.clone()).poch(base, k)
}

/// One-shot compressed product (a_1,...,a_m;q)_k.
pub fn qpoch_multi(bases: &[Rational], q: &Rational, k: i64) -> EvalResult<Rational> {
    EvalCtx::new(q.clone()).poch_multi(bases, k)
}

/// One-shot truncated infinite product.
pub fn qpoch_trunc_inf(base: &Rational, q: &Rational, m: u32) -> EvalResult<Rational> {
    EvalCtx::new(q.clone()).poch_trunc_inf(base, m)
}

/// Smallest M with |A| |q|^M < bound; used to pick truncation levels that
/// keep product-tail error under the plan tolerance. Returns at least `floor_m`.
pub fn product_cutoff_for(base: &Rational, q: &Rational, bound: &Rational, floor_m: u32) -> u32 {
    let mut m = floor_m.max(1);
    let mut tail = &base.abs() * &rat_pow(&q.abs(), m as i64).expect("|q| power");
    let qa = q.abs();
    while !tail.abs_lt(bound) {
        // |q| < 1 is checked by callers, so this terminates
        tail = &tail * &qa;
        m += 1;
        if m > 1_000_000 {
            break;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn empty_product() {
        assert_eq!(qpoch(&r(7, 3), &r(1, 2), 0).unwrap(), Rational::one());
    }

    #[test]
    fn three_factor_product() {
        // (1/2; 1/2)_3 = (1/2)(3/4)(7/8) = 21/64
        assert_eq!(qpoch(&r(1, 2), &r(1, 2), 3).unwrap(), r(21, 64));
    }

    #[test]
    fn vanishing_factor() {
        // second factor 1 - 2*(1/2) = 0
        assert_eq!(qpoch(&r(2, 1), &r(1, 2), 2).unwrap(), Rational::zero());
    }

    #[test]
    fn negative_length_pole() {
        // (1/2; 1/2)_{-1} = 1/(1 - (1/2)/(1/2)) — pole
        assert_eq!(
            qpoch(&r(1, 2), &r(1, 2), -1),
            Err(EvalError::DivisionByZero)
        );
    }

    #[test]
    fn multi_examples() {
        let q = r(1, 2);
        assert_eq!(qpoch_multi(&[], &q, 5).unwrap(), Rational::one());
        assert_eq!(qpoch_multi(&[r(1, 2), r(1, 3)], &q, 1).unwrap(), r(1, 3));
        let a = r(2, 5);
        assert_eq!(
            qpoch_multi(&[a.clone()], &q, 3).unwrap(),
            qpoch(&a, &q, 3).unwrap()
        );
    }

    #[test]
    fn trunc_inf_examples() {
        let q = r(1, 2);
        assert_eq!(qpoch_trunc_inf(&r(3, 4), &q, 1).unwrap(), r(1, 4));
        assert_eq!(qpoch_trunc_inf(&Rational::zero(), &q, 9).unwrap(), Rational::one());
        assert_eq!(qpoch_trunc_inf(&r(1, 2), &q, 2).unwrap(), r(3, 8));
        assert_eq!(
            qpoch_trunc_inf(&r(1, 2), &r(3, 2), 2),
            Err(EvalError::NomeOutOfRange)
        );
    }

    fn arb_rat() -> impl Strategy<Value = Rational> {
        (-9i64..=9, 1i64..=9).prop_map(|(p, q)| Rational::new(p, q))
    }

    fn arb_q() -> impl Strategy<Value = Rational> {
        (1i64..=8, 2i64..=9)
            .prop_filter("q in (0,1)", |(u, v)| u < v)
            .prop_map(|(u, v)| Rational::new(u, v))
    }

    proptest! {
        /// (A;q)_{k+1} = (A;q)_k (1 - Aq^k)
        #[test]
        fn recurrence(a in arb_rat(), q in arb_q(), k in 0i64..8) {
            let ctx = EvalCtx::new(q.clone());
            let lhs = ctx.poch(&a, k + 1).unwrap();
            let rhs = &ctx.poch(&a, k).unwrap()
                * &(Rational::one() - &a * &ctx.qpow(k).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        /// (A;q)_{j+m} = (A;q)_j (Aq^j;q)_m — the workhorse shift splitting
        #[test]
        fn shift_splitting(a in arb_rat(), q in arb_q(), j in 0i64..6, m in 0i64..6) {
            let ctx = EvalCtx::new(q.clone());
            let lhs = ctx.poch(&a, j + m).unwrap();
            let shifted = &a * &ctx.qpow(j).unwrap();
            let rhs = &ctx.poch(&a, j).unwrap() * &ctx.poch(&shifted, m).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        /// (A;q)_{-m} (Aq^{-m};q)_m = 1 whenever defined
        #[test]
        fn negative_positive_consistency(a in arb_rat(), q in arb_q(), m in 1i64..6) {
            let ctx = EvalCtx::new(q.clone());
            if let Ok(neg) = ctx.poch(&a, -m) {
                let shifted = &a * &ctx.qpow(-m).unwrap();
                let pos = ctx.poch(&shifted, m).unwrap();
                prop_assert_eq!(&neg * &pos, Rational::one());
            }
        }
    }
}
