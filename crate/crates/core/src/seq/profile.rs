use std::fmt;

use num_traits::Zero;

use super::spec::{Generator, SequenceSpec};
use super::SeqError;
use crate::interval::{canonical_union, ClosedInterval};
use crate::num::{ExtendedReal, Rational};

/// Accumulation points of a sequence in the extended reals.
///
/// `finite_acc` holds the part of the closed accumulation set that is not one of
/// the two infinities. Entries are canonical; an entry may be unbounded (e.g.
/// `[0, +inf]`), in which case the matching infinity flag is set as well.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AccumulationProfile {
    finite_acc: Vec<ClosedInterval>,
    has_neg_inf: bool,
    has_pos_inf: bool,
    liminf: ExtendedReal,
    limsup: ExtendedReal,
}

impl AccumulationProfile {
    pub fn new(finite_acc: Vec<ClosedInterval>, has_neg_inf: bool, has_pos_inf: bool) -> Result<Self, SeqError> {
        let mut neg = has_neg_inf;
        let mut pos = has_pos_inf;
        let mut kept = Vec::with_capacity(finite_acc.len());
        for iv in finite_acc {
            if iv.is_point() && !iv.lo.is_finite() {
                match iv.lo {
                    ExtendedReal::NegInf => neg = true,
                    _ => pos = true,
                }
                continue;
            }
            neg |= iv.lo == ExtendedReal::NegInf;
            pos |= iv.hi == ExtendedReal::PosInf;
            kept.push(iv);
        }
        let finite_acc = canonical_union(kept);
        let liminf = if neg {
            ExtendedReal::NegInf
        } else if let Some(first) = finite_acc.first() {
            first.lo.clone()
        } else if pos {
            ExtendedReal::PosInf
        } else {
            return Err(SeqError::InconsistentProfile("accumulation set is empty".into()));
        };
        let limsup = if pos {
            ExtendedReal::PosInf
        } else {
            finite_acc.last().map(|iv| iv.hi.clone()).unwrap_or(ExtendedReal::NegInf)
        };
        Ok(AccumulationProfile { finite_acc, has_neg_inf: neg, has_pos_inf: pos, liminf, limsup })
    }

    pub fn point(x: Rational) -> Self {
        Self::new(vec![ClosedInterval::point(x.into())], false, false).expect("nonempty")
    }

    pub fn points(xs: impl IntoIterator<Item = ExtendedReal>) -> Result<Self, SeqError> {
        Self::new(xs.into_iter().map(ClosedInterval::point).collect(), false, false)
    }

    pub fn pos_inf() -> Self {
        Self::new(Vec::new(), false, true).expect("nonempty")
    }

    pub fn neg_inf() -> Self {
        Self::new(Vec::new(), true, false).expect("nonempty")
    }

    pub fn finite_acc(&self) -> &[ClosedInterval] {
        &self.finite_acc
    }

    pub fn has_neg_inf(&self) -> bool {
        self.has_neg_inf
    }

    pub fn has_pos_inf(&self) -> bool {
        self.has_pos_inf
    }

    pub fn liminf(&self) -> &ExtendedReal {
        &self.liminf
    }

    pub fn limsup(&self) -> &ExtendedReal {
        &self.limsup
    }

    /// Whether the sequence converges in the extended sense.
    pub fn is_convergent(&self) -> bool {
        self.liminf == self.limsup
    }

    pub fn contains(&self, x: &ExtendedReal) -> bool {
        match x {
            ExtendedReal::NegInf => self.has_neg_inf,
            ExtendedReal::PosInf => self.has_pos_inf,
            _ => self.finite_acc.iter().any(|iv| iv.contains(x)),
        }
    }

    /// Every accumulation point as a list of closed intervals, infinities as points.
    pub fn all_intervals(&self) -> Vec<ClosedInterval> {
        let mut out = Vec::new();
        if self.has_neg_inf {
            out.push(ClosedInterval::point(ExtendedReal::NegInf));
        }
        out.extend(self.finite_acc.iter().cloned());
        if self.has_pos_inf {
            out.push(ClosedInterval::point(ExtendedReal::PosInf));
        }
        canonical_union(out)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.finite_acc.clone();
        all.extend(other.finite_acc.iter().cloned());
        Self::new(all, self.has_neg_inf || other.has_neg_inf, self.has_pos_inf || other.has_pos_inf)
            .expect("union of nonempty sets")
    }

    fn map(&self, f: impl Fn(&ClosedInterval) -> ClosedInterval) -> Self {
        Self::new(self.all_intervals().iter().map(f).collect(), false, false).expect("image of nonempty set")
    }

    pub fn affine(&self, scale: &Rational, shift: &Rational) -> Self {
        if scale.is_zero() {
            return Self::point(shift.clone());
        }
        self.map(|iv| iv.affine(scale, shift))
    }

    pub fn negate(&self) -> Self {
        self.affine(&crate::num::rat(-1), &Rational::zero())
    }

    pub fn square(&self) -> Self {
        self.map(ClosedInterval::square)
    }
}

impl fmt::Display for AccumulationProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.all_intervals().iter().map(|iv| iv.to_string()).collect();
        f.write_str(&parts.join(" ∪ "))
    }
}

/// The declared profile of `spec`, or the one derived from its generator.
pub fn profile(spec: &SequenceSpec) -> Result<AccumulationProfile, SeqError> {
    match spec.declared_profile() {
        Some(p) => Ok(p.clone()),
        None => derive(spec),
    }
}

/// Profile implied by the generator alone, using declared profiles of children.
pub fn derive(spec: &SequenceSpec) -> Result<AccumulationProfile, SeqError> {
    Ok(match spec.generator() {
        Generator::Constant(v) => AccumulationProfile::point(v.clone()),
        Generator::PowerOfIndex(_) | Generator::Geometric(_) | Generator::Linear | Generator::RunLength(_) => {
            AccumulationProfile::pos_inf()
        }
        Generator::NegLinear => AccumulationProfile::neg_inf(),
        Generator::ExplicitPrefix(_, tail) => profile(tail)?,
        Generator::Affine { base, scale, shift } => profile(base)?.affine(scale, shift),
        Generator::PointwiseSquare(base) => profile(base)?.square(),
        Generator::Negate(base) => profile(base)?.negate(),
        Generator::Interleave(a, b) => profile(a)?.union(&profile(b)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, ratio};

    fn acc(p: &AccumulationProfile) -> String {
        p.to_string()
    }

    #[test]
    fn catalog_profiles() {
        let c5 = SequenceSpec::constant(rat(5));
        let p = profile(&c5).unwrap();
        assert_eq!(acc(&p), "{5}");
        assert_eq!(p.liminf(), &ExtendedReal::Finite(rat(5)));
        assert_eq!(p.limsup(), p.liminf());

        let s = SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::power(1).unwrap());
        assert_eq!(acc(&profile(&s).unwrap()), "{0} ∪ {+inf}");

        let g = SequenceSpec::geometric(rat(2)).unwrap();
        let r96 = SequenceSpec::interleave(
            SequenceSpec::negate(g.clone()),
            SequenceSpec::interleave(SequenceSpec::constant(rat(0)), g),
        );
        assert_eq!(acc(&profile(&r96).unwrap()), "{-inf} ∪ {0} ∪ {+inf}");

        let ab = SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::constant(rat(1)));
        let p = profile(&ab).unwrap();
        assert_eq!(p.liminf(), &ExtendedReal::Finite(rat(0)));
        assert_eq!(p.limsup(), &ExtendedReal::Finite(rat(1)));

        let two = SequenceSpec::interleave(SequenceSpec::neg_linear(), SequenceSpec::linear());
        let p = profile(&two).unwrap();
        assert_eq!(p.liminf(), &ExtendedReal::NegInf);
        assert_eq!(p.limsup(), &ExtendedReal::PosInf);
        assert!(p.finite_acc().is_empty());
    }

    #[test]
    fn transforms() {
        let ab = SequenceSpec::interleave(SequenceSpec::constant(rat(-1)), SequenceSpec::constant(rat(2)));
        assert_eq!(acc(&profile(&SequenceSpec::square(ab.clone())).unwrap()), "{1} ∪ {4}");
        let shifted = SequenceSpec::affine(ab, ratio(-1, 2), rat(1));
        assert_eq!(acc(&profile(&shifted).unwrap()), "{0} ∪ {3/2}");
        let sq = SequenceSpec::square(SequenceSpec::neg_linear());
        assert_eq!(acc(&profile(&sq).unwrap()), "{+inf}");
    }

    #[test]
    fn unbounded_entries_set_flags() {
        let ray = ClosedInterval::new(rat(0).into(), ExtendedReal::PosInf).unwrap();
        let p = AccumulationProfile::new(vec![ray], false, false).unwrap();
        assert!(p.has_pos_inf());
        assert_eq!(p.limsup(), &ExtendedReal::PosInf);
        assert!(AccumulationProfile::new(vec![], false, false).is_err());
    }
}
