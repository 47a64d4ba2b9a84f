//! Lazy rearrangement streams realizing prescribed average behavior.

mod above;
mod bounded;
mod merge;
mod realizer;
mod registry;
mod sort;
mod two_sided;

use std::fmt;

pub use above::{above_limsup_core, rescale_target, target_above_limsup, AboveLimsupCore, Placement, Rescale};
pub use bounded::{bounded_target, oscillator, Oscillator};
pub use merge::{merge_preserving, weighted_merge, MergePreserving, WeightedMerge};
pub use realizer::{accumulation_realizer, Realizer, ZSet, ZSetParseError};
pub use registry::{ConstructionStrategy, Goal, Options, Registry};
pub use sort::{sort_increasing, sort_part, SortedPart};
pub use two_sided::two_sided_balance;

use crate::balance::BalanceError;
use crate::num::{render_rational, Rational};
use crate::seq::{SeqError, SequenceSpec};
pub use crate::seq::Term;

/// An injective stream of source terms that eventually covers every source index.
pub trait Rearrangement: Iterator<Item = Term> + Send {
    /// Number of outputs after which source indices `1..=n` have all appeared,
    /// when the constructor knows one in closed form.
    fn coverage_bound(&self, _n: u64) -> Option<u64> {
        None
    }

    /// Tube constraints recorded so far, for constructors that keep them.
    fn schedule(&self) -> Option<&TubeSchedule> {
        None
    }
}

impl<R: Rearrangement + ?Sized> Rearrangement for Box<R> {
    fn coverage_bound(&self, n: u64) -> Option<u64> {
        (**self).coverage_bound(n)
    }

    fn schedule(&self) -> Option<&TubeSchedule> {
        (**self).schedule()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstructError {
    #[error("the core stream has no declared limit in average")]
    UndeclaredLimit,
    #[error("weight {0} is outside [0, 1]")]
    WeightOutOfRange(String),
    #[error("target {target} is outside [{lo}, {hi}]")]
    TargetUnreachable { target: String, lo: String, hi: String },
    #[error("liminf and limsup coincide at {0}")]
    DegenerateRange(String),
    #[error("{0} does not tend to +inf")]
    NotDivergent(String),
    #[error("the part tending to infinity is not balanced: {0}")]
    NotBalanced(String),
    #[error("target {target} is not above {bound}")]
    TargetNotAbove { target: String, bound: String },
    #[error("density condition fails: {0}")]
    DensityFails(String),
    #[error("Z is not inside [{lo}, {hi}]")]
    ZOutsideRange { lo: String, hi: String },
    #[error("the sequence has no accumulation point at {0}")]
    MissingInfinity(&'static str),
    #[error("insufficient evidence: {0}")]
    InsufficientEvidence(String),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Profile(#[from] SeqError),
    #[error(transparent)]
    Balance(#[from] BalanceError),
}

/// Open interval constraint on the running average from `from_index` on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tube {
    pub lo: Rational,
    pub hi: Rational,
    pub from_index: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TubeSchedule {
    pub entries: Vec<Tube>,
}

impl TubeSchedule {
    pub fn push(&mut self, lo: Rational, hi: Rational, from_index: u64) {
        if let Some(last) = self.entries.last() {
            assert!(from_index > last.from_index, "schedule indices must increase");
        }
        self.entries.push(Tube { lo, hi, from_index });
    }

    /// Tube governing index `n`, if any.
    pub fn tube_at(&self, n: u64) -> Option<&Tube> {
        let i = self.entries.partition_point(|t| t.from_index <= n);
        i.checked_sub(1).map(|i| &self.entries[i])
    }

    pub fn truncated(&self, stages: usize) -> TubeSchedule {
        TubeSchedule { entries: self.entries.iter().take(stages).cloned().collect() }
    }
}

impl fmt::Display for TubeSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.entries {
            writeln!(f, "{} {} {}", t.from_index, render_rational(&t.lo), render_rational(&t.hi))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {detail}")]
pub struct ScheduleParseError {
    pub line: usize,
    pub detail: String,
}

impl std::str::FromStr for TubeSchedule {
    type Err = ScheduleParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = TubeSchedule::default();
        for (i, line) in s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let err = |detail: &str| ScheduleParseError { line: i + 1, detail: detail.to_string() };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [from, lo, hi] = fields.as_slice() else {
                return Err(err("expected `from_index lo hi`"));
            };
            let from: u64 = from.parse().map_err(|_| err("bad index"))?;
            let lo = crate::num::parse_rational(lo).map_err(|e| err(&e.to_string()))?;
            let hi = crate::num::parse_rational(hi).map_err(|e| err(&e.to_string()))?;
            if out.entries.last().is_some_and(|t| t.from_index >= from) {
                return Err(err("indices must increase"));
            }
            out.entries.push(Tube { lo, hi, from_index: from });
        }
        Ok(out)
    }
}

/// The source sequence in its own order.
pub struct Identity {
    terms: crate::seq::Terms,
    next: u64,
}

pub fn identity(spec: &SequenceSpec) -> Identity {
    Identity { terms: spec.terms(), next: 1 }
}

impl Iterator for Identity {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        let value = self.terms.next()?;
        let t = Term { index: self.next, value };
        self.next += 1;
        Some(t)
    }
}

impl Rearrangement for Identity {
    fn coverage_bound(&self, n: u64) -> Option<u64> {
        Some(n)
    }
}

/// Any index-sorted term stream, e.g. a part, seen as a rearrangement of itself.
pub struct Stream<I>(pub I);

impl<I: Iterator<Item = Term> + Send> Iterator for Stream<I> {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        self.0.next()
    }
}

impl<I: Iterator<Item = Term> + Send> Rearrangement for Stream<I> {}

/// Negates every value of an inner rearrangement, keeping its source indices.
pub struct Negated<R>(pub R);

impl<R: Rearrangement> Iterator for Negated<R> {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        self.0.next().map(|t| Term { index: t.index, value: -t.value })
    }
}

impl<R: Rearrangement> Rearrangement for Negated<R> {
    fn coverage_bound(&self, n: u64) -> Option<u64> {
        self.0.coverage_bound(n)
    }
}

fn show(r: &Rational) -> String {
    render_rational(r)
}
