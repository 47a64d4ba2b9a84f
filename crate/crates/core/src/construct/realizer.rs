use std::collections::BTreeSet;
use std::fmt;
use std::iter::Peekable;
use std::ops::Bound;
use std::str::FromStr;

use num_traits::Signed;

use super::sort::{sort_part, SortedPart};
use super::{show, ConstructError, Rearrangement, Term, TubeSchedule};
use crate::interval::{canonical_union, ClosedInterval};
use crate::num::{ceil_to_bigint, floor_to_bigint, parse_rational, rat, ExtendedReal, Rational};
use crate::seq::{decompose, profile, Part, PartTerms, Piece, SequenceSpec};

/// Nonempty finite union of closed rational intervals and points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZSet {
    parts: Vec<ClosedInterval>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad Z set: {0}")]
pub struct ZSetParseError(pub String);

impl ZSet {
    pub fn new(parts: Vec<(Rational, Rational)>) -> Result<Self, ZSetParseError> {
        let mut out = Vec::with_capacity(parts.len());
        for (lo, hi) in parts {
            let iv = ClosedInterval::finite(lo.clone(), hi.clone())
                .ok_or_else(|| ZSetParseError(format!("[{}, {}] is empty", show(&lo), show(&hi))))?;
            out.push(iv);
        }
        if out.is_empty() {
            return Err(ZSetParseError("empty set".into()));
        }
        Ok(ZSet { parts: canonical_union(out) })
    }

    pub fn points(xs: impl IntoIterator<Item = Rational>) -> Result<Self, ZSetParseError> {
        ZSet::new(xs.into_iter().map(|x| (x.clone(), x)).collect())
    }

    pub fn parts(&self) -> &[ClosedInterval] {
        &self.parts
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let x = ExtendedReal::from(x.clone());
        self.parts.iter().any(|p| p.contains(&x))
    }

    pub fn is_finite(&self) -> bool {
        self.parts.iter().all(ClosedInterval::is_point)
    }

    fn bounds(&self) -> (Rational, Rational) {
        let lo = self.parts[0].lo.finite().expect("finite endpoints").clone();
        let hi = self.parts[self.parts.len() - 1].hi.finite().expect("finite endpoints").clone();
        (lo, hi)
    }
}

impl fmt::Display for ZSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" ∪ "))
    }
}

/// Accepts `1/4, 3/4`, `[0, 1]`, `{1/4} ∪ [1/2, 1]` and mixtures.
impl FromStr for ZSet {
    type Err = ZSetParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| parse_rational(t.trim()).map_err(|e| ZSetParseError(format!("`{}`: {e}", t.trim())));
        let mut parts = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let c = rest.chars().next().expect("nonempty");
            if c.is_whitespace() || c == ',' || c == '∪' || c == 'u' || c == 'U' {
                rest = &rest[c.len_utf8()..];
                continue;
            }
            let (close, open) = match c {
                '[' => (']', true),
                '{' => ('}', false),
                _ => {
                    let end = rest.find(|ch: char| ch.is_whitespace() || ch == ',' || ch == '∪').unwrap_or(rest.len());
                    let x = num(&rest[..end])?;
                    parts.push((x.clone(), x));
                    rest = &rest[end..];
                    continue;
                }
            };
            let end = rest.find(close).ok_or_else(|| ZSetParseError(format!("missing `{close}`")))?;
            let body = &rest[1..end];
            if open {
                let (lo, hi) = body.split_once(',').ok_or_else(|| ZSetParseError("expected `[lo, hi]`".into()))?;
                parts.push((num(lo)?, num(hi)?));
            } else {
                for x in body.split(',') {
                    let x = num(x)?;
                    parts.push((x.clone(), x));
                }
            }
            rest = &rest[end + close.len_utf8()..];
        }
        ZSet::new(parts)
    }
}

/// Countable dense subset of Z: endpoints, then dyadic grid points by level and
/// magnitude, visited in the pattern `w1 w2 | w1 w2 w3 | w1 .. w4 | ...`.
struct DenseTargets {
    z: ZSet,
    list: Vec<Rational>,
    seen: BTreeSet<Rational>,
    level: u32,
    block: usize,
    pos: usize,
}

impl DenseTargets {
    fn new(z: ZSet) -> Self {
        let mut d = DenseTargets { z, list: Vec::new(), seen: BTreeSet::new(), level: 0, block: 2, pos: 0 };
        let ends: Vec<Rational> =
            d.z.parts.iter().flat_map(|p| [p.lo.finite().cloned(), p.hi.finite().cloned()]).flatten().collect();
        for x in ends {
            if d.seen.insert(x.clone()) {
                d.list.push(x);
            }
        }
        d
    }

    fn ensure(&mut self, len: usize) {
        if self.z.is_finite() {
            return;
        }
        while self.list.len() < len {
            let scale = Rational::from_integer(num_bigint::BigInt::from(1) << self.level);
            let mut fresh = Vec::new();
            for p in &self.z.parts {
                let (Some(lo), Some(hi)) = (p.lo.finite(), p.hi.finite()) else { continue };
                let mut k = ceil_to_bigint(&(lo * &scale));
                let last = floor_to_bigint(&(hi * &scale));
                while k <= last {
                    let x = Rational::from_integer(k.clone()) / &scale;
                    if self.seen.insert(x.clone()) {
                        fresh.push(x);
                    }
                    k += 1;
                }
            }
            fresh.sort_by(|a, b| a.abs().cmp(&b.abs()).then(a.cmp(b)));
            self.list.extend(fresh);
            self.level += 1;
        }
    }

    fn next(&mut self) -> Rational {
        let width = if self.z.is_finite() { self.block.min(self.list.len()) } else { self.block };
        self.ensure(width);
        let t = self.list[self.pos].clone();
        self.pos += 1;
        if self.pos >= width {
            self.pos = 0;
            self.block += 1;
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Band {
    lo: Rational,
    hi: Rational,
}

impl Band {
    fn around(t: &Rational, k: u64, a: &Rational, b: &Rational) -> Band {
        let r = Rational::new(1.into(), k.into());
        Band { lo: std::cmp::max(t - &r, a.clone()), hi: std::cmp::min(t + &r, b.clone()) }
    }

    fn inner(&self) -> Band {
        let q = (&self.hi - &self.lo) / rat(4);
        Band { lo: &self.lo + &q, hi: &self.hi - &q }
    }

    fn mid(&self) -> Rational {
        (&self.lo + &self.hi) / rat(2)
    }

    fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    /// Whether `sum / n` lies strictly inside.
    fn holds(&self, sum: &Rational, n: u64) -> bool {
        let n = rat(n as i64);
        n > rat(0) && &self.lo * &n < *sum && *sum < &self.hi * &n
    }

    fn admits(&self, sum: &Rational, n: u64, x: &Rational) -> bool {
        self.holds(&(sum + x), n + 1)
    }

    fn meet(&self, other: &Band) -> Option<Band> {
        let lo = std::cmp::max(&self.lo, &other.lo).clone();
        let hi = std::cmp::min(&self.hi, &other.hi).clone();
        (lo < hi).then_some(Band { lo, hi })
    }
}

/// Sorted pool of large elements of one sign, searched by value window.
struct Pool {
    sorted: Peekable<SortedPart>,
    set: BTreeSet<(Rational, u64)>,
    negate: bool,
}

impl Pool {
    fn new(part: &Part, negate: bool) -> Result<Pool, ConstructError> {
        let part = if negate { negated(part) } else { part.clone() };
        Ok(Pool { sorted: sort_part(&part)?.peekable(), set: BTreeSet::new(), negate })
    }

    /// Unused element with value strictly inside `(lo, hi)`, smallest magnitude first.
    fn take(&mut self, lo: &Rational, hi: &Rational, used: &[bool]) -> Option<Term> {
        let (lo, hi) = if self.negate { (-hi, -lo) } else { (lo.clone(), hi.clone()) };
        while self.sorted.peek().is_some_and(|t| t.value < hi) {
            let t = self.sorted.next().expect("peeked");
            self.set.insert((t.value, t.index));
        }
        let mut stale = Vec::new();
        let mut found = None;
        for (v, i) in self.set.range((Bound::Excluded((lo, u64::MAX)), Bound::Unbounded)) {
            if *v >= hi {
                break;
            }
            if is_used(used, *i) {
                stale.push((v.clone(), *i));
                continue;
            }
            found = Some((v.clone(), *i));
            break;
        }
        for s in stale {
            self.set.remove(&s);
        }
        let (v, i) = found?;
        self.set.remove(&(v.clone(), i));
        Some(Term { index: i, value: if self.negate { -v } else { v } })
    }
}

fn negated(part: &Part) -> Part {
    let pieces = part
        .pieces
        .iter()
        .map(|p| match p {
            Piece::Finite(ts) => {
                Piece::Finite(ts.iter().map(|t| Term { index: t.index, value: -t.value.clone() }).collect())
            }
            Piece::Leaf { spec, map, limit } => {
                Piece::Leaf { spec: SequenceSpec::negate(spec.clone()), map: *map, limit: limit.neg() }
            }
        })
        .collect();
    Part { limit: part.limit.as_ref().map(ExtendedReal::neg), pieces }
}

fn is_used(used: &[bool], i: u64) -> bool {
    used.get(i as usize).copied().unwrap_or(false)
}

const N0: u64 = 16;

/// Rearrangement whose running averages accumulate exactly at Z, with the tube
/// schedule it keeps.
pub struct Realizer {
    spec: SequenceSpec,
    a: Rational,
    b: Rational,
    b_part: Part,
    c_part: Part,
    low: PartTerms,
    high: PartTerms,
    low_head: Option<Term>,
    high_head: Option<Term>,
    up: Pool,
    down: Pool,
    used: Vec<bool>,
    cursor: u64,
    candidate: Option<Term>,
    targets: DenseTargets,
    stage: u64,
    current: Option<Band>,
    next_target: Rational,
    next: Band,
    pace: u64,
    transition: bool,
    n: u64,
    sum: Rational,
    schedule: TubeSchedule,
    stage_targets: Vec<Rational>,
}

pub fn accumulation_realizer(spec: &SequenceSpec, z: &ZSet) -> Result<Realizer, ConstructError> {
    let p = profile(spec)?;
    if !p.has_neg_inf() {
        return Err(ConstructError::MissingInfinity("-inf"));
    }
    if !p.has_pos_inf() {
        return Err(ConstructError::MissingInfinity("+inf"));
    }
    let acc = p.finite_acc();
    let (Some(a), Some(b)) = (acc.first().and_then(|i| i.lo.finite()), acc.last().and_then(|i| i.hi.finite()))
    else {
        return Err(ConstructError::Unsupported(format!("no finite accumulation points in {p}")));
    };
    let (a, b) = (a.clone(), b.clone());
    if a == b {
        return Err(ConstructError::DegenerateRange(show(&a)));
    }
    let (zlo, zhi) = z.bounds();
    if zlo < a || zhi > b {
        return Err(ConstructError::ZOutsideRange { lo: show(&a), hi: show(&b) });
    }
    let d = decompose(spec, &p)?;
    let group = |x: ExtendedReal| {
        d.group(&x).cloned().ok_or_else(|| ConstructError::Unsupported(format!("no convergent part with limit {x}")))
    };
    let (b_part, c_part) = (group(a.clone().into())?, group(b.clone().into())?);
    let up = Pool::new(&group(ExtendedReal::PosInf)?, false)?;
    let down = Pool::new(&group(ExtendedReal::NegInf)?, true)?;
    let mut targets = DenseTargets::new(z.clone());
    let next_target = targets.next();
    let next = Band::around(&next_target, 1, &a, &b);
    Ok(Realizer {
        spec: spec.clone(),
        low: b_part.terms(),
        high: c_part.terms(),
        b_part,
        c_part,
        low_head: None,
        high_head: None,
        up,
        down,
        used: Vec::new(),
        cursor: 1,
        candidate: None,
        targets,
        stage: 0,
        current: None,
        next_target,
        next,
        pace: 0,
        transition: false,
        n: 0,
        sum: rat(0),
        schedule: TubeSchedule::default(),
        stage_targets: Vec::new(),
        a,
        b,
    })
}

impl Realizer {
    /// Target `t_k` of each recorded stage.
    pub fn stage_targets(&self) -> &[Rational] {
        &self.stage_targets
    }

    fn in_band(&self, x: &Rational) -> bool {
        &self.a - rat(1) < *x && *x < &self.b + rat(1)
    }

    fn mark(&mut self, i: u64) {
        let i = i as usize;
        if self.used.len() <= i {
            self.used.resize((i + 1).max(self.used.len() * 2), false);
        }
        self.used[i] = true;
    }

    fn refill(&mut self) {
        while self.low_head.is_none() {
            let t = self.low.next().expect("leaf streams are infinite");
            if self.in_band(&t.value) {
                self.low_head = Some(t);
            }
        }
        while self.high_head.is_none() {
            let t = self.high.next().expect("leaf streams are infinite");
            if self.in_band(&t.value) {
                self.high_head = Some(t);
            }
        }
    }

    /// Next in-band element of the two convergent parts, heading for `mu`
    /// while keeping the average inside `keep`.
    fn steer(&mut self, mu: &Rational, keep: Option<&Band>) -> Term {
        self.refill();
        let up_first = self.sum < mu * rat(self.n as i64);
        let order = if up_first { [true, false] } else { [false, true] };
        let pick = order
            .into_iter()
            .find(|&up| {
                let head = if up { &self.high_head } else { &self.low_head };
                let x = &head.as_ref().expect("refilled").value;
                keep.is_none_or(|band| band.admits(&self.sum, self.n, x))
            })
            .unwrap_or(up_first);
        if pick { self.high_head.take() } else { self.low_head.take() }.expect("refilled")
    }

    fn steerable(&self, i: u64, x: &Rational) -> bool {
        self.in_band(x) && (self.b_part.contains(i) || self.c_part.contains(i))
    }

    /// Smallest unused source index outside the steering streams, if inserting it
    /// keeps the average inside `band`.
    fn splice(&mut self, band: &Band) -> Option<Term> {
        if self.candidate.is_none() {
            loop {
                let i = self.cursor;
                self.cursor += 1;
                if is_used(&self.used, i) {
                    continue;
                }
                let x = self.spec.term(i);
                if !self.steerable(i, &x) {
                    self.candidate = Some(Term { index: i, value: x });
                    break;
                }
            }
        }
        let c = self.candidate.as_ref().expect("found");
        if !band.admits(&self.sum, self.n, &c.value) {
            return None;
        }
        let t = self.candidate.take().expect("found");
        self.mark(t.index);
        Some(t)
    }

    /// One large element moving the average straight into `band`.
    fn land(&mut self, band: &Band) -> Option<Term> {
        let m = rat(self.n as i64 + 1);
        let lo = &band.lo * &m - &self.sum;
        let hi = &band.hi * &m - &self.sum;
        let t = self.up.take(&lo, &hi, &self.used).or_else(|| self.down.take(&lo, &hi, &self.used))?;
        if self.candidate.as_ref().is_some_and(|c| c.index == t.index) {
            self.candidate = None;
        }
        self.mark(t.index);
        Some(t)
    }

    fn choose(&mut self) -> Term {
        let Some(cur) = self.current.clone() else {
            let mu = self.next.mid();
            return self.steer(&mu, None);
        };
        if !self.transition && self.n >= self.pace {
            self.transition = true;
        }
        if self.transition {
            let goal = self.next.inner();
            if let Some(overlap) = cur.meet(&goal) {
                return self.steer(&overlap.mid(), Some(&cur));
            }
            if let Some(t) = self.land(&goal) {
                return t;
            }
        }
        if let Some(t) = self.splice(&cur.inner()) {
            return t;
        }
        self.steer(&cur.mid(), Some(&cur))
    }

    fn enter(&mut self) {
        self.stage += 1;
        self.schedule.push(self.next.lo.clone(), self.next.hi.clone(), self.n);
        self.stage_targets.push(self.next_target.clone());
        self.current = Some(self.next.clone());
        self.next_target = self.targets.next();
        self.next = Band::around(&self.next_target, self.stage + 1, &self.a, &self.b);
        let spread = rat(8) * (&self.b - &self.a + rat(1)) / self.next.width();
        let by_width = u64::try_from(ceil_to_bigint(&spread)).unwrap_or(u64::MAX);
        self.pace = (N0 << self.stage.min(40)).max(by_width);
        self.transition = false;
    }
}

impl Iterator for Realizer {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        let t = self.choose();
        self.n += 1;
        self.sum += &t.value;
        let waiting = self.current.is_none() || self.transition;
        if waiting && self.next.inner().holds(&self.sum, self.n) {
            self.enter();
        }
        Some(t)
    }
}

impl Rearrangement for Realizer {
    fn schedule(&self) -> Option<&TubeSchedule> {
        Some(&self.schedule)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::ratio;

    fn four_parts() -> SequenceSpec {
        let sq = SequenceSpec::power(2).unwrap();
        SequenceSpec::interleave(
            SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::constant(rat(1))),
            SequenceSpec::interleave(SequenceSpec::negate(sq.clone()), sq),
        )
    }

    #[test]
    fn parse_z() {
        let z: ZSet = "{1/4} ∪ [1/2, 1], 3/4".parse().unwrap();
        assert_eq!(z.to_string(), "{1/4} ∪ [1/2, 1]");
        assert!("[1, 0]".parse::<ZSet>().is_err());
        assert!("".parse::<ZSet>().is_err());
    }

    #[test]
    fn dense_pattern() {
        let mut d = DenseTargets::new(ZSet::points([ratio(1, 4), ratio(3, 4)]).unwrap());
        let seq: Vec<Rational> = (0..6).map(|_| d.next()).collect();
        assert_eq!(seq, [1, 3, 1, 3, 1, 3].map(|k| ratio(k, 4)));
        let mut d = DenseTargets::new(ZSet::new(vec![(rat(0), rat(1))]).unwrap());
        let seq: Vec<Rational> = (0..9).map(|_| d.next()).collect();
        let want = [(0, 1), (1, 1), (0, 1), (1, 1), (1, 2), (0, 1), (1, 1), (1, 2), (1, 4)];
        assert_eq!(seq, want.map(|(p, q)| ratio(p, q)));
    }

    #[test]
    fn errors() {
        let z = ZSet::points([rat(2)]).unwrap();
        assert!(matches!(accumulation_realizer(&four_parts(), &z), Err(ConstructError::ZOutsideRange { .. })));
        let no_neg = SequenceSpec::interleave(
            SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::constant(rat(1))),
            SequenceSpec::linear(),
        );
        let z = ZSet::points([ratio(1, 2)]).unwrap();
        assert!(matches!(accumulation_realizer(&no_neg, &z), Err(ConstructError::MissingInfinity("-inf"))));
    }

    #[test]
    fn singleton_converges() {
        let z = ZSet::points([ratio(1, 2)]).unwrap();
        let mut r = accumulation_realizer(&four_parts(), &z).unwrap();
        let mut sum = rat(0);
        let mut n = 0;
        for t in r.by_ref().take(20_000) {
            sum += t.value;
            n += 1;
        }
        let avg = sum / rat(n);
        assert!((avg - ratio(1, 2)).abs() < ratio(1, 20));
        assert!(r.schedule().unwrap().entries.len() >= 8);
    }
}
