use num_traits::Zero;

use super::merge::{merge_preserving, weighted_merge, TermStream};
use super::{show, ConstructError, Rearrangement, Stream, Term};
use crate::num::{rat, ExtendedReal, Rational};
use crate::seq::{decompose, profile, Decomposition, PartTerms, SequenceSpec};

/// Smallest and largest finite accumulation points, both required to be finite.
fn finite_range(spec: &SequenceSpec) -> Result<(Rational, Rational, Decomposition), ConstructError> {
    let p = profile(spec)?;
    let acc = p.finite_acc();
    let (Some(first), Some(last)) = (acc.first(), acc.last()) else {
        return Err(ConstructError::Unsupported(format!("no finite accumulation point in {p}")));
    };
    let (Some(lo), Some(hi)) = (first.lo.finite(), last.hi.finite()) else {
        return Err(ConstructError::Unsupported(format!("unbounded finite part in {p}")));
    };
    let d = decompose(spec, &p)?;
    for x in [lo, hi] {
        if d.group(&x.clone().into()).is_none() {
            return Err(ConstructError::Unsupported(format!("no convergent part with limit {}", show(x))));
        }
    }
    Ok((lo.clone(), hi.clone(), d))
}

fn part_stream(d: &Decomposition, limit: &Rational) -> TermStream {
    Box::new(d.group(&limit.clone().into()).expect("checked by finite_range").terms())
}

/// Rearrangement with limit in average `l`, for `l` between the smallest and largest
/// finite accumulation points.
pub fn bounded_target(spec: &SequenceSpec, l: &Rational) -> Result<Box<dyn Rearrangement>, ConstructError> {
    let (m, big_m, d) = finite_range(spec)?;
    if l < &m || l > &big_m {
        return Err(ConstructError::TargetUnreachable { target: show(l), lo: show(&m), hi: show(&big_m) });
    }
    let core: Box<dyn Rearrangement> = if m == big_m {
        Box::new(Stream(part_stream(&d, &m)))
    } else {
        let alpha = (&big_m - l) / (&big_m - &m);
        weighted_merge((part_stream(&d, &m), m.clone().into()), (part_stream(&d, &big_m), big_m.clone().into()), &alpha)?
    };
    let rest = d.rest(&[m.into(), big_m.into()]);
    if rest.is_empty() {
        return Ok(core);
    }
    Ok(Box::new(merge_preserving(core, Some(l.clone().into()), Box::new(rest.terms()))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Down,
    Up,
}

/// Greedy stream whose running average keeps crossing below `p` and above `q`.
pub struct Oscillator {
    low: PartTerms,
    high: PartTerms,
    rest: PartTerms,
    pub p: Rational,
    pub q: Rational,
    phase: Phase,
    rest_taken: bool,
    n: u64,
    sum: Rational,
    crossings: u64,
}

pub fn oscillator(spec: &SequenceSpec) -> Result<Oscillator, ConstructError> {
    let p = profile(spec)?;
    if p.has_neg_inf() || p.has_pos_inf() {
        return Err(ConstructError::Unsupported(format!("oscillation needs a bounded sequence, got {p}")));
    }
    let (m, big_m, d) = finite_range(spec)?;
    if m == big_m {
        return Err(ConstructError::DegenerateRange(show(&m)));
    }
    let third = (&big_m - &m) / rat(3);
    let low = d.group(&ExtendedReal::from(m.clone())).expect("checked").terms();
    let high = d.group(&ExtendedReal::from(big_m.clone())).expect("checked").terms();
    let rest = d.rest(&[m.clone().into(), big_m.clone().into()]).terms();
    Ok(Oscillator {
        low,
        high,
        rest,
        p: &m + &third,
        q: &big_m - &third,
        phase: Phase::Down,
        rest_taken: false,
        n: 0,
        sum: Rational::zero(),
        crossings: 0,
    })
}

impl Oscillator {
    /// Completed threshold crossings so far.
    pub fn crossings(&self) -> u64 {
        self.crossings
    }

    fn emit(&mut self, t: Term) -> Term {
        self.n += 1;
        self.sum += &t.value;
        t
    }
}

impl Iterator for Oscillator {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        loop {
            if !self.rest_taken {
                self.rest_taken = true;
                if let Some(t) = self.rest.next() {
                    return Some(self.emit(t));
                }
            }
            let n = rat(self.n as i64);
            let crossed = self.n > 0
                && match self.phase {
                    Phase::Down => self.sum < &self.p * &n,
                    Phase::Up => self.sum > &self.q * &n,
                };
            if crossed {
                self.crossings += 1;
                self.phase = if self.phase == Phase::Down { Phase::Up } else { Phase::Down };
                self.rest_taken = false;
                continue;
            }
            let t = match self.phase {
                Phase::Down => self.low.next(),
                Phase::Up => self.high.next(),
            }?;
            return Some(self.emit(t));
        }
    }
}

impl Rearrangement for Oscillator {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::ratio;

    fn zero_one() -> SequenceSpec {
        SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::constant(rat(1)))
    }

    #[test]
    fn half_is_alternation() {
        let r = bounded_target(&zero_one(), &ratio(1, 2)).unwrap();
        let idx: Vec<u64> = r.take(6).map(|t| t.index).collect();
        assert_eq!(idx, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn rejects_outside_range() {
        assert!(matches!(bounded_target(&zero_one(), &rat(2)), Err(ConstructError::TargetUnreachable { .. })));
        assert!(matches!(bounded_target(&zero_one(), &ratio(-1, 9)), Err(ConstructError::TargetUnreachable { .. })));
    }

    #[test]
    fn oscillator_thresholds() {
        let o = oscillator(&zero_one()).unwrap();
        assert_eq!((o.p.clone(), o.q.clone()), (ratio(1, 3), ratio(2, 3)));
        assert!(matches!(oscillator(&SequenceSpec::constant(rat(1))), Err(ConstructError::DegenerateRange(_))));
    }
}
