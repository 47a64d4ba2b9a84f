use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{show, ConstructError, Rearrangement, Term};
use crate::num::{ceil_to_bigint, rat, ExtendedReal, Rational};

pub type TermStream = Box<dyn Iterator<Item = Term> + Send>;

/// Merges `extras` into a core with limit in average `limit`, one extra at a time,
/// each only once the running average is close enough to the limit that it
/// cannot move it by more than a shrinking margin.
pub struct MergePreserving {
    core: Box<dyn Rearrangement>,
    limit: ExtendedReal,
    extras: TermStream,
    pending: Option<Term>,
    inserted: u32,
    n: u64,
    sum: Rational,
    prev_sum: Rational,
}

pub fn merge_preserving(
    core: Box<dyn Rearrangement>,
    limit: Option<ExtendedReal>,
    extras: TermStream,
) -> Result<MergePreserving, ConstructError> {
    let limit = limit.ok_or(ConstructError::UndeclaredLimit)?;
    let mut extras = extras;
    let pending = extras.next();
    Ok(MergePreserving {
        core,
        limit,
        extras,
        pending,
        inserted: 0,
        n: 0,
        sum: Rational::zero(),
        prev_sum: Rational::zero(),
    })
}

impl MergePreserving {
    /// Number of extras emitted so far.
    pub fn inserted(&self) -> u32 {
        self.inserted
    }

    fn ready(&self, x: &Rational) -> bool {
        let l = self.inserted + 1;
        let n = rat(self.n as i64);
        let next = rat(self.n as i64 + 1);
        match &self.limit {
            ExtendedReal::Finite(lim) => {
                if self.n < 2 {
                    return false;
                }
                // eps = 2^-l / 3, compared without dividing by n
                let eps = Rational::new(BigInt::one(), BigInt::from(3) << l);
                let near = |sum: &Rational, m: &Rational| (sum - m * lim).abs() < m * &eps;
                x.abs() < &next * &eps && near(&self.sum, &n) && near(&self.prev_sum, &(&n - rat(1)))
            }
            inf => {
                if self.n == 0 {
                    return false;
                }
                let m = Rational::from_integer(BigInt::one() << (l + 1)) + rat(2);
                let sum = if *inf == ExtendedReal::PosInf { self.sum.clone() } else { -self.sum.clone() };
                sum > &m * &n && x.abs() < next
            }
        }
    }

    fn emit(&mut self, t: Term) -> Term {
        self.n += 1;
        let next = &self.sum + &t.value;
        self.prev_sum = std::mem::replace(&mut self.sum, next);
        t
    }
}

impl Iterator for MergePreserving {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        let take_extra = match &self.pending {
            Some(x) => self.ready(&x.value),
            None => false,
        };
        let t = if take_extra {
            self.inserted += 1;
            let t = self.pending.take();
            self.pending = self.extras.next();
            t
        } else {
            match self.core.next() {
                Some(t) => Some(t),
                None => {
                    let t = self.pending.take();
                    self.pending = self.extras.next();
                    t
                }
            }
        };
        t.map(|t| self.emit(t))
    }
}

impl Rearrangement for MergePreserving {}

/// Interleaves two convergent streams so that a fraction `alpha` of every long
/// prefix comes from `a`.
pub struct WeightedMerge {
    minority: TermStream,
    majority: TermStream,
    gamma: Rational,
    gamma_ceil: u64,
    pos: u64,
    block: u64,
    special: u64,
}

impl WeightedMerge {
    /// 1-based output position of the first element of block `J_n = [(n-1)γ, nγ)`,
    /// positions being counted from 0 inside the blocks.
    fn block_start(gamma: &Rational, n: u64) -> u64 {
        let s = ceil_to_bigint(&(gamma * rat(n as i64 - 1)));
        u64::try_from(s).unwrap_or(u64::MAX - 1) + 1
    }
}

pub fn weighted_merge(
    a: (TermStream, ExtendedReal),
    b: (TermStream, ExtendedReal),
    alpha: &Rational,
) -> Result<Box<dyn Rearrangement>, ConstructError> {
    if alpha.is_negative() || alpha > &rat(1) {
        return Err(ConstructError::WeightOutOfRange(show(alpha)));
    }
    if alpha.is_zero() {
        return Ok(Box::new(merge_preserving(Box::new(super::Stream(b.0)), Some(b.1), a.0)?));
    }
    if alpha.is_one() {
        return Ok(Box::new(merge_preserving(Box::new(super::Stream(a.0)), Some(a.1), b.0)?));
    }
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let (minority, majority, weight) = if alpha <= &half { (a.0, b.0, alpha.clone()) } else { (b.0, a.0, rat(1) - alpha) };
    let gamma = weight.recip();
    let gamma_ceil = u64::try_from(ceil_to_bigint(&gamma)).expect("weight is a small rational");
    let special = WeightedMerge::block_start(&gamma, 1);
    Ok(Box::new(WeightedMerge { minority, majority, gamma, gamma_ceil, pos: 0, block: 1, special }))
}

impl Iterator for WeightedMerge {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        self.pos += 1;
        if self.pos == self.special {
            self.block += 1;
            self.special = WeightedMerge::block_start(&self.gamma, self.block);
            self.minority.next()
        } else {
            self.majority.next()
        }
    }
}

impl Rearrangement for WeightedMerge {
    /// Valid when the two streams partition the source indices.
    fn coverage_bound(&self, n: u64) -> Option<u64> {
        Some(self.gamma_ceil * (n + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::identity;
    use crate::num::ratio;
    use crate::seq::SequenceSpec;

    fn constant_stream(v: i64, stride: u64, offset: u64) -> TermStream {
        Box::new((1u64..).map(move |k| Term { index: stride * k - offset, value: rat(v) }))
    }

    fn averages(r: impl Iterator<Item = Term>, n: usize) -> Vec<Rational> {
        let mut sum = Rational::zero();
        r.take(n)
            .enumerate()
            .map(|(i, t)| {
                sum += t.value;
                &sum / rat(i as i64 + 1)
            })
            .collect()
    }

    #[test]
    fn single_extra_into_constant() {
        let core = Box::new(identity(&SequenceSpec::constant(rat(1))));
        let extra: TermStream = Box::new(std::iter::once(Term { index: 0, value: rat(100) }));
        let m = merge_preserving(core, Some(rat(1).into()), extra).unwrap();
        let avg = averages(m, 5000);
        assert!((avg.last().unwrap() - rat(1)).abs() < ratio(1, 50));
        assert!(merge_preserving(Box::new(identity(&SequenceSpec::linear())), None, Box::new(std::iter::empty()))
            .is_err());
    }

    #[test]
    fn bounded_extras_into_divergent() {
        let core = Box::new(identity(&SequenceSpec::linear()));
        let extras: TermStream = Box::new((1u64..).map(|k| Term { index: 1_000_000 + k, value: rat(-3 - 2 * k as i64) }));
        let m = merge_preserving(core, Some(ExtendedReal::PosInf), extras).unwrap();
        let avg = averages(m, 10_000);
        assert!(avg.last().unwrap() > &rat(100));
    }

    #[test]
    fn weighted_thirds() {
        let a = (constant_stream(0, 2, 1), rat(0).into());
        let b = (constant_stream(1, 2, 0), rat(1).into());
        let w = weighted_merge(a, b, &ratio(1, 3)).unwrap();
        let mut zeros = 0i64;
        for (m, t) in w.take(3000).enumerate() {
            if t.value.is_zero() {
                zeros += 1;
            }
            let m = m as i64 + 1;
            assert!((rat(zeros) - ratio(m, 3)).abs() <= rat(2));
        }
        let first: Vec<u64> = {
            let a = (constant_stream(0, 2, 1), rat(0).into());
            let b = (constant_stream(1, 2, 0), rat(1).into());
            weighted_merge(a, b, &ratio(1, 3)).unwrap().take(7).map(|t| t.index).collect()
        };
        assert_eq!(first, vec![1, 2, 4, 3, 6, 8, 5]);
        assert!(weighted_merge((constant_stream(0, 2, 1), rat(0).into()), (constant_stream(1, 2, 0), rat(1).into()), &rat(2))
            .is_err());
    }
}
