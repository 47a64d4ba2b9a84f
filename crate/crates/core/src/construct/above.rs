use std::collections::VecDeque;
use std::iter::Peekable;

use num_traits::{Signed, Zero};

use super::merge::{merge_preserving, TermStream};
use super::sort::sort_part;
use super::{show, ConstructError, Rearrangement, Term};
use crate::balance::{balanced_verdict, BalanceVerdict, Mode};
use crate::num::{ceil_to_bigint, floor_to_bigint, rat, ExtendedReal, Rational};
use crate::seq::{decompose, profile, Part, SequenceSpec};

/// Where the `n`-th large element goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    /// `floor(v * s_n)`
    #[default]
    Floor,
    /// `floor(v * (s_(n-1) + c_n / 2))`
    Centered,
}

/// Large elements at positions `m_n`, bounded elements everywhere else.
pub struct AboveLimsupCore {
    b: TermStream,
    c: Peekable<TermStream>,
    pub v: Rational,
    pub threshold: Rational,
    placement: Placement,
    pos: u64,
    sum_c: Rational,
    next_m: u64,
    /// Output positions of the large elements placed so far.
    pub placed: Vec<u64>,
}

/// Builds the core stream from a subsequence `b_prime` tending to `b` and the
/// large elements sorted increasingly. Large elements at or below the filter
/// threshold are returned separately.
pub fn above_limsup_core(
    b_prime: TermStream,
    c_sorted: TermStream,
    b: &Rational,
    target: &Rational,
    placement: Placement,
) -> Result<(AboveLimsupCore, Vec<Term>), ConstructError> {
    if target <= b {
        return Err(ConstructError::TargetNotAbove { target: show(target), bound: show(b) });
    }
    let gap = target - b;
    let threshold = std::cmp::max(rat(1), &gap * rat(2));
    let mut c = c_sorted.peekable();
    let mut deferred = Vec::new();
    while c.peek().is_some_and(|t| t.value <= threshold) {
        deferred.push(c.next().expect("peeked"));
    }
    let mut core = AboveLimsupCore {
        b: b_prime,
        c,
        v: gap.recip(),
        threshold,
        placement,
        pos: 0,
        sum_c: Rational::zero(),
        next_m: 0,
        placed: Vec::new(),
    };
    core.next_m = core.position_of_next();
    Ok((core, deferred))
}

impl AboveLimsupCore {
    fn position_of_next(&mut self) -> u64 {
        let Some(next) = self.c.peek() else { return u64::MAX };
        let x = match self.placement {
            Placement::Floor => &self.v * (&self.sum_c + &next.value),
            Placement::Centered => &self.v * (&self.sum_c + &next.value / rat(2)),
        };
        let m = u64::try_from(floor_to_bigint(&x)).unwrap_or(u64::MAX);
        // safety net against collisions
        m.max(self.pos + 1)
    }
}

impl Iterator for AboveLimsupCore {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        self.pos += 1;
        if self.pos == self.next_m {
            let t = self.c.next()?;
            self.sum_c += &t.value;
            self.placed.push(self.pos);
            self.next_m = self.position_of_next();
            Some(t)
        } else {
            self.b.next()
        }
    }
}

impl Rearrangement for AboveLimsupCore {}

fn tail_part(spec: &SequenceSpec) -> Result<(crate::seq::Decomposition, Rational), ConstructError> {
    let p = profile(spec)?;
    if !p.has_pos_inf() {
        return Err(ConstructError::NotDivergent(format!("no part of {p}")));
    }
    let b = p
        .finite_acc()
        .last()
        .and_then(|iv| iv.hi.finite().cloned())
        .ok_or_else(|| ConstructError::Unsupported(format!("no finite upper accumulation point in {p}")))?;
    let d = decompose(spec, &p)?;
    if d.group(&b.clone().into()).is_none() {
        return Err(ConstructError::Unsupported(format!("no convergent part with limit {}", show(&b))));
    }
    Ok((d, b))
}

fn require_balanced(part: &Part) -> Result<(), ConstructError> {
    let spec = part
        .as_spec()
        .ok_or_else(|| ConstructError::InsufficientEvidence("balance of a part made of several pieces".into()))?;
    match balanced_verdict(spec, Mode::AnalyticOnly, 0)? {
        BalanceVerdict::Balanced(_) => Ok(()),
        v @ BalanceVerdict::NotBalanced { .. } => Err(ConstructError::NotBalanced(v.to_string())),
        BalanceVerdict::Unknown(_) => Err(ConstructError::InsufficientEvidence("balance of the part tending to +inf".into())),
    }
}

/// Rearrangement with limit in average `target`, above every finite accumulation point.
pub fn target_above_limsup(
    spec: &SequenceSpec,
    target: &Rational,
    placement: Placement,
) -> Result<Box<dyn Rearrangement>, ConstructError> {
    let (d, b) = tail_part(spec)?;
    if target <= &b {
        return Err(ConstructError::TargetNotAbove { target: show(target), bound: show(&b) });
    }
    let c_part = d.group(&ExtendedReal::PosInf).expect("profile has +inf").clone();
    require_balanced(&c_part)?;
    let b_prime: TermStream = Box::new(d.group(&b.clone().into()).expect("checked").terms());
    let (core, deferred) = above_limsup_core(b_prime, Box::new(sort_part(&c_part)?), &b, target, placement)?;
    let rest = d.rest(&[b.into(), ExtendedReal::PosInf]);
    if deferred.is_empty() && rest.is_empty() {
        return Ok(Box::new(core));
    }
    let extras: TermStream = Box::new(deferred.into_iter().chain(rest.terms()));
    Ok(Box::new(merge_preserving(Box::new(core), Some(target.clone().into()), extras)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Zero,
    Keep,
}

/// Thins and pads the bounded elements of a base rearrangement to move its limit.
pub struct Rescale {
    base: Box<dyn Rearrangement>,
    is_zero: Box<dyn Fn(u64) -> bool + Send>,
    pattern: VecDeque<(Term, bool)>,
    fillers: VecDeque<Term>,
    /// Integer thinning parameter: only a `1/thin` share of bounded slots survives.
    pub thin: u64,
    /// Padding rate: `floor(k * pad)` extra bounded slots before the `k`-th thinned item.
    pub pad: Rational,
    consumed: u64,
    dropped: u64,
    thinned: u64,
    added: u64,
    queued: VecDeque<Slot>,
    queued_terms: VecDeque<Term>,
}

pub fn rescale_target(
    base: Box<dyn Rearrangement>,
    is_zero: Box<dyn Fn(u64) -> bool + Send>,
    a: &Rational,
    base_target: &Rational,
    l: &Rational,
) -> Result<Rescale, ConstructError> {
    for x in [l, base_target] {
        if x <= a {
            return Err(ConstructError::TargetNotAbove { target: show(x), bound: show(a) });
        }
    }
    let scaled = (l - a) / (base_target - a);
    let thin_big = ceil_to_bigint(&scaled);
    let thin = u64::try_from(thin_big).map_err(|_| ConstructError::Unsupported("target too large".into()))?;
    let pad = rat(thin as i64) / &scaled - rat(1);
    debug_assert!(!pad.is_negative());
    Ok(Rescale {
        base,
        is_zero,
        pattern: VecDeque::new(),
        fillers: VecDeque::new(),
        thin,
        pad,
        consumed: 0,
        dropped: 0,
        thinned: 0,
        added: 0,
        queued: VecDeque::new(),
        queued_terms: VecDeque::new(),
    })
}

impl Rescale {
    fn fetch(&mut self) -> Option<()> {
        let t = self.base.next()?;
        let zero = (self.is_zero)(t.index);
        if zero {
            self.fillers.push_back(t.clone());
        }
        self.pattern.push_back((t, zero));
        Some(())
    }

    /// Next slot of the thinned base pattern.
    fn thinned_slot(&mut self) -> Option<(Slot, Option<Term>)> {
        loop {
            if self.pattern.is_empty() {
                self.fetch()?;
            }
            let (t, zero) = self.pattern.pop_front().expect("fetched");
            self.consumed += 1;
            let quota = (self.thin - 1) * self.consumed / self.thin;
            if zero {
                if self.dropped < quota {
                    self.dropped += 1;
                    continue;
                }
                return Some((Slot::Zero, None));
            }
            return Some((Slot::Keep, Some(t)));
        }
    }

    fn next_slot(&mut self) -> Option<(Slot, Option<Term>)> {
        if let Some(s) = self.queued.pop_front() {
            let t = if s == Slot::Keep { self.queued_terms.pop_front() } else { None };
            return Some((s, t));
        }
        let (slot, term) = self.thinned_slot()?;
        self.thinned += 1;
        if self.thinned >= 2 {
            let want = u64::try_from(floor_to_bigint(&(&self.pad * rat(self.thinned as i64)))).unwrap_or(u64::MAX);
            if want > self.added {
                let extra = want - self.added;
                self.added = want;
                for _ in 1..extra {
                    self.queued.push_back(Slot::Zero);
                }
                self.queued.push_back(slot);
                if let Some(t) = term {
                    self.queued_terms.push_back(t);
                }
                return Some((Slot::Zero, None));
            }
        }
        Some((slot, term))
    }
}

impl Iterator for Rescale {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        match self.next_slot()? {
            (Slot::Keep, t) => t,
            (Slot::Zero, _) => {
                while self.fillers.is_empty() {
                    self.fetch()?;
                }
                self.fillers.pop_front()
            }
        }
    }
}

impl Rearrangement for Rescale {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::ratio;

    fn zeros_and_linear() -> SequenceSpec {
        SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::linear())
    }

    #[test]
    fn placement_is_floor_of_scaled_sum() {
        let s = SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::power(2).unwrap());
        let p = profile(&s).unwrap();
        let d = decompose(&s, &p).unwrap();
        let c = d.group(&ExtendedReal::PosInf).unwrap();
        let (mut core, deferred) = above_limsup_core(
            Box::new(d.group(&rat(0).into()).unwrap().terms()),
            Box::new(sort_part(c).unwrap()),
            &rat(0),
            &rat(3),
            Placement::Floor,
        )
        .unwrap();
        // threshold max{1, 6}: 1 and 4 are deferred
        assert_eq!(deferred.iter().map(|t| t.value.clone()).collect::<Vec<_>>(), vec![rat(1), rat(4)]);
        let mut s_n = Rational::zero();
        for (pos, t) in (1u64..).zip(core.by_ref().take(5000)) {
            if !t.value.is_zero() {
                s_n += &t.value;
                assert_eq!(rat(pos as i64), floor_to_bigint(&(&s_n / rat(3))).into());
            }
        }
        assert!(core.placed.len() > 10);
    }

    #[test]
    fn errors() {
        let s = zeros_and_linear();
        assert!(matches!(target_above_limsup(&s, &rat(0), Placement::Floor), Err(ConstructError::TargetNotAbove { .. })));
        let g = SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::geometric(rat(2)).unwrap());
        assert!(matches!(target_above_limsup(&g, &rat(1), Placement::Floor), Err(ConstructError::NotBalanced(_))));
    }

    #[test]
    fn rescale_parameters() {
        let base = || target_above_limsup(&zeros_and_linear(), &rat(1), Placement::Floor).unwrap();
        let z = || Box::new(|i: u64| i % 2 == 1) as Box<dyn Fn(u64) -> bool + Send>;
        let r = rescale_target(base(), z(), &rat(0), &rat(1), &rat(2)).unwrap();
        assert_eq!((r.thin, r.pad.clone()), (2, rat(0)));
        let r = rescale_target(base(), z(), &rat(0), &rat(1), &ratio(1, 2)).unwrap();
        assert_eq!((r.thin, r.pad.clone()), (1, rat(1)));
        assert!(rescale_target(base(), z(), &rat(0), &rat(1), &rat(0)).is_err());
    }

    #[test]
    fn rescale_is_injective() {
        let base = target_above_limsup(&zeros_and_linear(), &rat(1), Placement::Floor).unwrap();
        let r = rescale_target(base, Box::new(|i| i % 2 == 1), &rat(0), &rat(1), &ratio(5, 2)).unwrap();
        let mut seen = std::collections::HashSet::new();
        for t in r.take(20_000) {
            assert!(seen.insert(t.index));
        }
    }
}
