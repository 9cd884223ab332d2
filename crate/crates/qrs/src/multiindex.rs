//! Multi-index vectors and rectangular iteration boxes.
//!
//! Every n-fold sum in the engine runs over multi-indices
//! k = (k_1, ..., k_n) of non-negative integers with weight |k| = sum k_r.
//! Iteration order over a box is lexicographic with the leftmost component
//! most significant; that order is the canonical row/column order for the
//! Bailey matrices and is what makes triangular inversion and report output
//! deterministic.

use std::fmt;

use crate::error::{EvalError, EvalResult};

/// An n-tuple of non-negative integers.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    comps: Vec<i64>,
}

impl MultiIndex {
    pub fn new(comps: Vec<i64>) -> Self {
        assert!(comps.iter().all(|&c| c >= 0), "negative component");
        MultiIndex { comps }
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex { comps: vec![0; n] }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, r: usize) -> i64 {
        self.comps[r]
    }

    pub fn comps(&self) -> &[i64] {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|&c| c == 0)
    }

    /// |k| = k_1 + ... + k_n.
    pub fn weight(&self) -> i64 {
        self.comps.iter().sum()
    }

    fn check_dim(&self, other: &MultiIndex) -> EvalResult<()> {
        if self.dim() != other.dim() {
            return Err(EvalError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    /// Component-wise sum.
    pub fn add(&self, other: &MultiIndex) -> EvalResult<MultiIndex> {
        self.check_dim(other)?;
        Ok(MultiIndex {
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Component-wise difference; requires other <= self.
    pub fn sub(&self, other: &MultiIndex) -> EvalResult<MultiIndex> {
        self.check_dim(other)?;
        if !other.leq(self)? {
            return Err(EvalError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(MultiIndex {
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// true iff self_r <= other_r for all r (the matrices' triangularity order).
    pub fn leq(&self, other: &MultiIndex) -> EvalResult<bool> {
        self.check_dim(other)?;
        Ok(self.comps.iter().zip(&other.comps).all(|(a, b)| a <= b))
    }
}

impl fmt::Display for MultiIndex {
    /// Serializes as "[k1,k2,...,kn]".
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.comps.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Rectangular iteration domain 0 <= m_r <= N_r (inclusive).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexBox {
    bounds: MultiIndex,
}

impl IndexBox {
    pub fn new(bounds: MultiIndex) -> Self {
        IndexBox { bounds }
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &MultiIndex {
        &self.bounds
    }

    /// Number of lattice points, prod (N_r + 1).
    pub fn len(&self) -> usize {
        self.bounds
            .comps()
            .iter()
            .map(|&b| (b + 1) as usize)
            .product()
    }

    pub fn is_empty(&self) -> bool {
        false // a box always contains at least the zero index
    }

    /// Lexicographic iteration, leftmost component most significant.
    pub fn iter(&self) -> BoxIter {
        BoxIter {
            bounds: self.bounds.clone(),
            next: Some(MultiIndex::zeros(self.bounds.dim())),
        }
    }
}

pub struct BoxIter {
    bounds: MultiIndex,
    next: Option<MultiIndex>,
}

impl Iterator for BoxIter {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let cur = self.next.take()?;
        // advance like an odometer with the rightmost digit fastest
        let mut n = cur.clone();
        let dim = n.dim();
        let mut r = dim;
        loop {
            if r == 0 {
                self.next = None;
                break;
            }
            r -= 1;
            if n.comps[r] < self.bounds.comps[r] {
                n.comps[r] += 1;
                for c in n.comps[r + 1..].iter_mut() {
                    *c = 0;
                }
                self.next = Some(n);
                break;
            }
        }
        Some(cur)
    }
}

/// Free-function views matching the operation names used across the engine.
pub fn weight(k: &MultiIndex) -> i64 {
    k.weight()
}

pub fn iter_box(bounds: &MultiIndex) -> impl Iterator<Item = MultiIndex> {
    IndexBox::new(bounds.clone()).iter()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn weight_examples() {
        assert_eq!(mi(&[0, 0, 0]).weight(), 0);
        assert_eq!(mi(&[1, 2, 0]).weight(), 3);
        assert_eq!(mi(&[5]).weight(), 5);
    }

    #[test]
    fn add_examples() {
        assert_eq!(mi(&[1, 0]).add(&mi(&[0, 2])).unwrap(), mi(&[1, 2]));
        assert_eq!(mi(&[3, 1]).add(&mi(&[0, 0])).unwrap(), mi(&[3, 1]));
        assert_eq!(mi(&[2]).add(&mi(&[3])).unwrap(), mi(&[5]));
        assert!(mi(&[1]).add(&mi(&[1, 2])).is_err());
    }

    #[test]
    fn leq_examples() {
        assert!(mi(&[0, 1]).leq(&mi(&[1, 1])).unwrap());
        assert!(!mi(&[2, 0]).leq(&mi(&[1, 3])).unwrap());
        assert!(mi(&[2, 3]).leq(&mi(&[2, 3])).unwrap());
    }

    #[test]
    fn box_iteration_lex() {
        let order: Vec<MultiIndex> = iter_box(&mi(&[1, 1])).collect();
        assert_eq!(order, vec![mi(&[0, 0]), mi(&[0, 1]), mi(&[1, 0]), mi(&[1, 1])]);
        let one: Vec<MultiIndex> = iter_box(&mi(&[0])).collect();
        assert_eq!(one, vec![mi(&[0])]);
        let line: Vec<MultiIndex> = iter_box(&mi(&[2])).collect();
        assert_eq!(line, vec![mi(&[0]), mi(&[1]), mi(&[2])]);
    }

    /// Lexicographic iteration is a linear extension of the component-wise
    /// partial order, checked exhaustively on boxes with at most 256 points.
    #[test]
    fn lex_extends_partial_order() {
        for bounds in [mi(&[255]), mi(&[15, 15]), mi(&[3, 3, 3]), mi(&[1, 3, 1, 3])] {
            let pts: Vec<MultiIndex> = iter_box(&bounds).collect();
            assert_eq!(pts.len(), IndexBox::new(bounds.clone()).len());
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    // b comes after a, so b <= a component-wise implies b == a
                    assert!(!b.leq(a).unwrap() || a == b);
                }
            }
        }
    }

    #[test]
    fn weight_additivity() {
        let a = mi(&[2, 0, 5]);
        let b = mi(&[1, 4, 3]);
        assert_eq!(a.add(&b).unwrap().weight(), a.weight() + b.weight());
    }

    #[test]
    fn display_format() {
        assert_eq!(mi(&[1, 2, 3]).to_string(), "[1,2,3]");
    }
}
