//! Exact traces of rearrangements and the checks run against them.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_traits::Zero;

use crate::construct::{Rearrangement, Term, TubeSchedule};
use crate::num::{parse_number, rat, render_decimal, render_rational, ExtendedReal, Rational};

pub const CSV_HEADER: &str = "n,source_index,value,partial_sum,average_decimal,average_exact";
const DIGITS: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub n: u64,
    pub source_index: u64,
    pub value: Rational,
    pub partial_sum: Rational,
    pub average: Rational,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

/// First `n` outputs of `r` with exact running sums and averages.
pub fn trace<I: Iterator<Item = Term> + ?Sized>(r: &mut I, n: u64) -> Trace {
    let mut t = Trace::default();
    t.extend(r, n);
    t
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("trace line {line}: {detail}")]
pub struct TraceParseError {
    pub line: usize,
    pub detail: String,
}

impl Trace {
    /// Appends up to `more` further outputs of `r`.
    pub fn extend<I: Iterator<Item = Term> + ?Sized>(&mut self, r: &mut I, more: u64) {
        let (mut n, mut sum) = match self.entries.last() {
            Some(e) => (e.n, e.partial_sum.clone()),
            None => (0, Rational::zero()),
        };
        for t in r.take(more as usize) {
            n += 1;
            sum += &t.value;
            let average = &sum / rat(n as i64);
            self.entries.push(TraceEntry { n, source_index: t.index, value: t.value, partial_sum: sum.clone(), average });
        }
    }

    pub fn len(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn average(&self, n: u64) -> Option<&Rational> {
        self.entries.get(usize::try_from(n).ok()?.checked_sub(1)?).map(|e| &e.average)
    }

    /// CSV with exact `p/q` value, partial sum and average columns when `exact`,
    /// decimals and an empty exact column otherwise.
    pub fn to_csv(&self, exact: bool) -> String {
        let mut out = String::with_capacity(64 * self.entries.len() + CSV_HEADER.len() + 1);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            let (value, sum, avg) = if exact {
                (render_rational(&e.value), render_rational(&e.partial_sum), render_rational(&e.average))
            } else {
                (render_decimal(&e.value, DIGITS), render_decimal(&e.partial_sum, DIGITS), String::new())
            };
            let _ = writeln!(out, "{},{},{},{},{},{}", e.n, e.source_index, value, sum, render_decimal(&e.average, DIGITS), avg);
        }
        out
    }

    /// Reads a CSV written by `to_csv`; the exact average is used when present.
    pub fn from_csv(text: &str) -> Result<Trace, TraceParseError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => return Err(TraceParseError { line: 1, detail: format!("expected header `{CSV_HEADER}`") }),
        }
        let mut t = Trace::default();
        for (i, line) in lines {
            let err = |detail: String| TraceParseError { line: i + 1, detail };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let [n, idx, value, sum, avg_dec, avg_exact] = f.as_slice() else {
                return Err(err(format!("expected 6 fields, got {}", f.len())));
            };
            let num = |s: &str| parse_number(s).map_err(|e| err(e.to_string()));
            let n: u64 = n.parse().map_err(|_| err(format!("bad n `{n}`")))?;
            if n != t.len() + 1 {
                return Err(err(format!("expected n = {}", t.len() + 1)));
            }
            t.entries.push(TraceEntry {
                n,
                source_index: idx.parse().map_err(|_| err(format!("bad index `{idx}`")))?,
                value: num(value)?,
                partial_sum: num(sum)?,
                average: if avg_exact.is_empty() { num(avg_dec)? } else { num(avg_exact)? },
            });
        }
        Ok(t)
    }

    /// First `n` where `average * n = partial_sum` or the averaging recurrence fails.
    pub fn recurrence_violation(&self) -> Option<u64> {
        let mut prev_avg = Rational::zero();
        let mut prev_sum = Rational::zero();
        for e in &self.entries {
            let n = rat(e.n as i64);
            let m = rat(e.n as i64 - 1);
            let ok = &e.average * &n == e.partial_sum
                && &prev_sum + &e.value == e.partial_sum
                && e.average == &prev_avg * &m / &n + &e.value / &n;
            if !ok {
                return Some(e.n);
            }
            prev_avg = e.average.clone();
            prev_sum = e.partial_sum.clone();
        }
        None
    }

    /// First `n >= 2` where `c_(n-1) - c_n = (c_(n-1) - a_n) / n` fails.
    pub fn jump_identity_violation(&self) -> Option<u64> {
        self.entries.windows(2).find_map(|w| {
            let n = rat(w[1].n as i64);
            let lhs = &w[0].average - &w[1].average;
            let rhs = (&w[0].average - &w[1].value) / n;
            (lhs != rhs).then_some(w[1].n)
        })
    }

    /// With every value above `k`, each downward crossing of a level `p` drops the
    /// average by at most `(p - k) / (n - 1)`. Returns the first offending `(n, p)`.
    pub fn jump_bound_violation(&self, k: &Rational, levels: &[Rational]) -> Option<(u64, Rational)> {
        for w in self.entries.windows(2) {
            let (before, after) = (&w[0].average, &w[1].average);
            for p in levels {
                if before > p && after <= p {
                    let bound = (p - k) / rat(w[0].n as i64);
                    if before - after > bound {
                        return Some((w[1].n, p.clone()));
                    }
                }
            }
        }
        None
    }

    /// First `n >= from` whose average leaves the tube around `target`; for infinite
    /// targets, whose average fails to exceed `1/eps` in the right direction.
    pub fn tube_violation(&self, target: &ExtendedReal, eps: &Rational, from: u64) -> Option<u64> {
        let big = eps.recip();
        self.entries.iter().filter(|e| e.n >= from).find_map(|e| {
            let inside = match target {
                ExtendedReal::Finite(t) => {
                    let d = &e.average - t;
                    -eps.clone() < d && &d < eps
                }
                ExtendedReal::PosInf => e.average > big,
                ExtendedReal::NegInf => e.average < -big.clone(),
            };
            (!inside).then_some(e.n)
        })
    }

    /// First `(stage, n)`, both 1-based, where the average is outside the stage's open tube.
    pub fn schedule_violation(&self, s: &TubeSchedule) -> Option<(usize, u64)> {
        for (k, tube) in s.entries.iter().enumerate() {
            let end = s.entries.get(k + 1).map_or(u64::MAX, |t| t.from_index);
            let len = self.entries.len();
            let lo = usize::try_from(tube.from_index.saturating_sub(1)).unwrap_or(len).min(len);
            let hi = usize::try_from(end.saturating_sub(1)).unwrap_or(len).clamp(lo, len);
            for e in &self.entries[lo..hi] {
                if !(tube.lo < e.average && e.average < tube.hi) {
                    return Some((k + 1, e.n));
                }
            }
        }
        None
    }
}

pub fn check_tube(t: &Trace, target: &ExtendedReal, eps: &Rational, from: u64) -> bool {
    t.tube_violation(target, eps, from).is_none()
}

pub fn check_schedule(t: &Trace, s: &TubeSchedule) -> bool {
    t.schedule_violation(s).is_none()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PermutationError {
    #[error("source index {index} emitted at outputs {first} and {second}")]
    InjectivityViolation { index: u64, first: u64, second: u64 },
    #[error("source index {missing} (probe {probe}) not among the first {within} outputs")]
    CoverageViolation { probe: u64, missing: u64, within: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeReport {
    pub probe: u64,
    /// Outputs allowed: the constructor's coverage bound, capped at the audit length.
    pub within: u64,
    pub bound: Option<u64>,
    /// Output rank at which the last of `1..=probe` appeared.
    pub covered_at: u64,
}

/// Audits the first `n` outputs for repeats, and each probe for coverage of `1..=probe`
/// within the coverage bound (or within `n` when the constructor has none).
pub fn check_permutation<R: Rearrangement + ?Sized>(
    r: &mut R,
    n: u64,
    probes: &[u64],
) -> Result<Vec<ProbeReport>, PermutationError> {
    let mut rank: HashMap<u64, u64> = HashMap::with_capacity(n as usize);
    for i in 1..=n {
        let Some(t) = r.next() else { break };
        if let Some(first) = rank.insert(t.index, i) {
            return Err(PermutationError::InjectivityViolation { index: t.index, first, second: i });
        }
    }
    probes
        .iter()
        .map(|&p| {
            let bound = r.coverage_bound(p);
            let within = bound.map_or(n, |b| b.min(n));
            let mut covered_at = 0;
            for idx in 1..=p {
                match rank.get(&idx) {
                    Some(&k) if k <= within => covered_at = covered_at.max(k),
                    _ => return Err(PermutationError::CoverageViolation { probe: p, missing: idx, within }),
                }
            }
            Ok(ProbeReport { probe: p, within, bound, covered_at })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub min: Rational,
    pub max: Rational,
    /// Every `k`-subset average, for at most `ORACLE_LIMIT` values.
    pub achievable: Option<BTreeSet<Rational>>,
}

pub const ORACLE_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("k = {k} is outside 1..={len}")]
pub struct OracleError {
    pub k: usize,
    pub len: usize,
}

/// Extremes of `k`-element averages of a multiset, and all of them for small inputs.
pub fn envelope_oracle(values: &[Rational], k: usize) -> Result<Envelope, OracleError> {
    if k == 0 || k > values.len() {
        return Err(OracleError { k, len: values.len() });
    }
    let mut sorted = values.to_vec();
    sorted.sort();
    let kk = rat(k as i64);
    let min = sorted[..k].iter().sum::<Rational>() / &kk;
    let max = sorted[sorted.len() - k..].iter().sum::<Rational>() / &kk;
    let achievable = (values.len() <= ORACLE_LIMIT).then(|| {
        (0u32..1 << values.len())
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| {
                let s: Rational = (0..values.len()).filter(|i| m >> i & 1 == 1).map(|i| &values[i]).sum();
                s / &kk
            })
            .collect()
    });
    Ok(Envelope { min, max, achievable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{bounded_target, identity};
    use crate::num::ratio;
    use crate::seq::SequenceSpec;

    fn zero_one() -> SequenceSpec {
        SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::constant(rat(1)))
    }

    #[test]
    fn alternating_averages() {
        let t = trace(&mut identity(&zero_one()), 4);
        let avgs: Vec<Rational> = t.entries.iter().map(|e| e.average.clone()).collect();
        assert_eq!(avgs, vec![rat(0), ratio(1, 2), ratio(1, 3), ratio(1, 2)]);
        assert_eq!(t.recurrence_violation(), None);
        assert_eq!(t.jump_identity_violation(), None);
    }

    #[test]
    fn csv_round_trip() {
        let t = trace(&mut identity(&zero_one()), 7);
        assert_eq!(Trace::from_csv(&t.to_csv(true)).unwrap(), t);
        let approx = Trace::from_csv(&t.to_csv(false)).unwrap();
        assert_eq!(approx.entries[2].average, ratio(333_333_333_333, 1_000_000_000_000));
        assert!(Trace::from_csv("n,x\n").is_err());
        let csv = t.to_csv(true);
        assert_eq!(csv.lines().nth(2).unwrap(), "2,2,1,1,0.500000000000,1/2");
    }

    #[test]
    fn permutation_audit() {
        let mut id = identity(&SequenceSpec::linear());
        assert_eq!(check_permutation(&mut id, 100, &[10]).unwrap()[0].covered_at, 10);
        struct Repeat(u64);
        impl Iterator for Repeat {
            type Item = Term;
            fn next(&mut self) -> Option<Term> {
                self.0 += 1;
                Some(Term { index: if self.0 == 3 { 1 } else { self.0 }, value: rat(0) })
            }
        }
        impl Rearrangement for Repeat {}
        assert_eq!(
            check_permutation(&mut Repeat(0), 10, &[]),
            Err(PermutationError::InjectivityViolation { index: 1, first: 1, second: 3 })
        );
        let mut w = bounded_target(&zero_one(), &ratio(2, 3)).unwrap();
        let r = check_permutation(&mut w, 10_000, &[10, 100, 1000]).unwrap();
        assert_eq!(r[0].within, 33);
    }

    #[test]
    fn tubes() {
        let t = trace(&mut identity(&SequenceSpec::constant(rat(1))), 50);
        assert!(check_tube(&t, &rat(1).into(), &ratio(1, 1000), 1));
        let t = trace(&mut identity(&SequenceSpec::linear()), 50);
        assert!(check_tube(&t, &ExtendedReal::PosInf, &ratio(1, 10), 20));
        assert!(!check_tube(&t, &ExtendedReal::PosInf, &ratio(1, 10), 10));
        let mut s = TubeSchedule::default();
        s.push(rat(-1), rat(1), 1);
        s.push(ratio(1, 4), ratio(3, 4), 3);
        let t = trace(&mut identity(&zero_one()), 20);
        assert!(check_schedule(&t, &s));
        let mut shifted = TubeSchedule::default();
        shifted.push(ratio(1, 3), ratio(2, 3), 1);
        assert_eq!(t.schedule_violation(&shifted), Some((1, 1)));
    }

    #[test]
    fn oracle() {
        let v = [0, 0, 1, 1].map(rat);
        let e = envelope_oracle(&v, 2).unwrap();
        assert_eq!(e.achievable.unwrap().into_iter().collect::<Vec<_>>(), vec![rat(0), ratio(1, 2), rat(1)]);
        let e = envelope_oracle(&[rat(0), rat(1)], 1).unwrap();
        assert_eq!((e.min, e.max), (rat(0), rat(1)));
        assert!(envelope_oracle(&v, 5).is_err());
        let many: Vec<Rational> = (0..20).map(rat).collect();
        let e = envelope_oracle(&many, 3).unwrap();
        assert_eq!((e.min, e.max, e.achievable), (rat(1), rat(18), None));
    }
}
