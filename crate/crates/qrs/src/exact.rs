//! Arbitrary-precision exact rational arithmetic.
//!
//! [`Rational`] is the only scalar type used in exact mode. It wraps
//! `num_rational::BigRational`, which keeps every value in canonical form
//! (reduced, positive denominator) after each operation, so equality of
//! values is equality of representations.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{EvalError, EvalResult};

/// Exact rational scalar in canonical form: reduced, denominator > 0.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// Build p/q. Panics if q = 0 (construction-time contract, not a runtime path).
    pub fn new(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> EvalResult<Self> {
        if self.is_zero() {
            return Err(EvalError::DivisionByZero);
        }
        Ok(Rational(self.0.recip()))
    }

    /// Exact division; `DivisionByZero` signals a polar parameter point.
    pub fn div_exact(&self, rhs: &Rational) -> EvalResult<Rational> {
        if rhs.is_zero() {
            return Err(EvalError::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    /// |self| < |rhs| as exact comparison.
    pub fn abs_lt(&self, rhs: &Rational) -> bool {
        self.0.abs() < rhs.0.abs()
    }

    /// Ten to the given power, exact (`pow10(-20)` is the default tolerance).
    pub fn pow10(e: i32) -> Self {
        let base = Rational::from_int(10);
        rat_pow(&base, e as i64).expect("10^e is always defined")
    }

    /// Approximate f64 value, for display-side trend reporting only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Render in scientific notation with the given number of significant
    /// digits, from the exact value (no float round-off).
    pub fn to_scientific(&self, sig: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let neg = self.0.is_negative();
        let num = self.0.numer().abs();
        let den = self.0.denom().clone();
        // decimal exponent: digits(num) - digits(den) gives a first guess
        let mut exp = num.to_string().len() as i64 - den.to_string().len() as i64;
        let ten = BigInt::from(10);
        // mantissa = |self| * 10^(sig-1-exp), then adjust so it has `sig` digits
        let scale_pow = |e: i64| -> (BigInt, BigInt) {
            // returns (num_mult, den_mult) for 10^e
            if e >= 0 {
                (ten.pow(e as u32), BigInt::one())
            } else {
                (BigInt::one(), ten.pow((-e) as u32))
            }
        };
        loop {
            let e = sig as i64 - 1 - exp;
            let (nm, dm) = scale_pow(e);
            let mantissa = (&num * nm) / (&den * dm);
            let digits = mantissa.to_string();
            if digits.len() > sig {
                exp += 1;
                continue;
            }
            if digits.len() < sig {
                exp -= 1;
                continue;
            }
            let mut s = String::new();
            if neg {
                s.push('-');
            }
            s.push_str(&digits[..1]);
            s.push('.');
            s.push_str(&digits[1..]);
            s.push('e');
            s.push_str(&exp.to_string());
            return s;
        }
    }
}

impl fmt::Display for Rational {
    /// Serializes as "p/q", or "p" when q = 1.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Rational {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let r: BigRational = s.parse().map_err(|e| format!("invalid rational '{s}': {e}"))?;
        Ok(Rational(r))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(&self.0 $op &rhs.0)
            }
        }
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Div for &Rational {
    type Output = Rational;
    /// Plain `/` is reserved for contexts statically known nonzero; runtime
    /// pole detection goes through [`Rational::div_exact`].
    fn div(self, rhs: &Rational) -> Rational {
        Rational(&self.0 / &rhs.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

/// Exact integer power x^e. Negative e requires x != 0.
pub fn rat_pow(x: &Rational, e: i64) -> EvalResult<Rational> {
    if e == 0 {
        return Ok(Rational::one());
    }
    if x.is_zero() {
        if e < 0 {
            return Err(EvalError::ZeroToNegativePower);
        }
        return Ok(Rational::zero());
    }
    let p = x.0.pow(e.unsigned_abs() as i32);
    Ok(if e > 0 { Rational(p) } else { Rational(p.recip()) })
}

/// m(m-1)/2, the exponent of the recurring q^binom(m,2) factors.
pub fn binom2(m: i64) -> i64 {
    m * (m - 1) / 2
}

/// (-1)^e as a Rational.
pub fn neg_one_pow(e: i64) -> Rational {
    if e % 2 == 0 {
        Rational::one()
    } else {
        -Rational::one()
    }
}
