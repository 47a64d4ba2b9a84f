//! Closed intervals of the extended real line and their canonical unions.

use std::fmt;

use crate::num::{ExtendedReal, Rational};

/// `[lo, hi]` with `lo <= hi`; a point when `lo == hi`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClosedInterval {
    pub lo: ExtendedReal,
    pub hi: ExtendedReal,
}

impl ClosedInterval {
    pub fn new(lo: ExtendedReal, hi: ExtendedReal) -> Option<Self> {
        (lo <= hi).then_some(ClosedInterval { lo, hi })
    }

    pub fn point(x: ExtendedReal) -> Self {
        ClosedInterval { lo: x.clone(), hi: x }
    }

    pub fn finite(lo: Rational, hi: Rational) -> Option<Self> {
        Self::new(lo.into(), hi.into())
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &ExtendedReal) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// Image under `x -> scale * x + shift`; infinities map to infinities.
    pub fn affine(&self, scale: &Rational, shift: &Rational) -> Self {
        use num_traits::{Signed, Zero};
        let map = |x: &ExtendedReal| match x {
            ExtendedReal::Finite(r) => ExtendedReal::Finite(scale * r + shift),
            _ if scale.is_zero() => ExtendedReal::Finite(shift.clone()),
            inf if scale.is_negative() => inf.neg(),
            inf => inf.clone(),
        };
        let (a, b) = (map(&self.lo), map(&self.hi));
        if a <= b {
            ClosedInterval { lo: a, hi: b }
        } else {
            ClosedInterval { lo: b, hi: a }
        }
    }

    /// Image under `x -> x^2`, extended continuously with `(±inf)^2 = +inf`.
    pub fn square(&self) -> Self {
        let sq = |x: &ExtendedReal| match x {
            ExtendedReal::Finite(r) => ExtendedReal::Finite(r * r),
            _ => ExtendedReal::PosInf,
        };
        let zero = ExtendedReal::Finite(crate::num::rat(0));
        let (a, b) = (sq(&self.lo), sq(&self.hi));
        let hi = a.clone().max(b.clone());
        let lo = if self.contains(&zero) { zero } else { a.min(b) };
        ClosedInterval { lo, hi }
    }
}

impl fmt::Display for ClosedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            write!(f, "{{{}}}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

/// Sorts, then merges every pair of intervals that overlap or share an endpoint.
pub fn canonical_union(mut parts: Vec<ClosedInterval>) -> Vec<ClosedInterval> {
    parts.sort();
    let mut out: Vec<ClosedInterval> = Vec::with_capacity(parts.len());
    for iv in parts {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => {
                if iv.hi > last.hi {
                    last.hi = iv.hi;
                }
            }
            _ => out.push(iv),
        }
    }
    out
}

/// True when the list is sorted, pairwise disjoint and has no two intervals sharing an endpoint.
pub fn is_canonical(parts: &[ClosedInterval]) -> bool {
    parts.iter().all(|iv| iv.lo <= iv.hi) && parts.windows(2).all(|w| w[0].hi < w[1].lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, ratio};

    fn iv(a: i64, b: i64) -> ClosedInterval {
        ClosedInterval::finite(rat(a), rat(b)).unwrap()
    }

    #[test]
    fn merges_touching_and_nested() {
        let u = canonical_union(vec![iv(3, 4), iv(0, 1), iv(1, 2), iv(0, 0), iv(5, 5), iv(3, 3)]);
        assert_eq!(u, vec![iv(0, 2), iv(3, 4), iv(5, 5)]);
        assert!(is_canonical(&u));
        assert!(!is_canonical(&[iv(0, 1), iv(1, 2)]));
    }

    #[test]
    fn images() {
        let x = iv(-1, 2);
        assert_eq!(x.square(), iv(0, 4));
        assert_eq!(x.affine(&rat(-2), &rat(1)), iv(-3, 3));
        let ray = ClosedInterval::new(rat(1).into(), ExtendedReal::PosInf).unwrap();
        assert_eq!(ray.affine(&ratio(-1, 2), &rat(0)).lo, ExtendedReal::NegInf);
        assert_eq!(ClosedInterval::point(ExtendedReal::NegInf).square(), ClosedInterval::point(ExtendedReal::PosInf));
    }
}
