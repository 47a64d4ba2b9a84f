//! Partial-sum ratios and the balanced predicate for sequences tending to `+inf`.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::num::{rat, to_f64, ExtendedReal, Rational};
use crate::seq::{profile, Generator, RunRule, SeqError, SequenceSpec};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BalanceError {
    #[error("term {0} is not positive")]
    NonPositiveTerm(u64),
    #[error("ratio series needs n >= 2, got {0}")]
    IndexTooSmall(u64),
    #[error("sequence does not diverge: accumulation set is {0}")]
    NotDivergent(String),
    #[error(transparent)]
    Profile(#[from] SeqError),
}

/// Exact partial-sum diagnostics at index `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioSeries {
    pub n: u64,
    pub c_n: Rational,
    /// `c_1 + ... + c_{n-1}`
    pub s_prev: Rational,
    /// `c_n / s_prev`
    pub r_n: Rational,
    /// `s_prev / c_n`
    pub a_n: Rational,
    /// `c_n / (s_prev + c_n)`
    pub r_incl: Rational,
}

impl RatioSeries {
    fn at(n: u64, s_prev: Rational, c_n: Rational) -> Self {
        let r_n = &c_n / &s_prev;
        let a_n = &s_prev / &c_n;
        let r_incl = &c_n / (&s_prev + &c_n);
        RatioSeries { n, c_n, s_prev, r_n, a_n, r_incl }
    }
}

/// Ratio series at a single index.
pub fn ratio_series(spec: &SequenceSpec, n: u64) -> Result<RatioSeries, BalanceError> {
    if n < 2 {
        return Err(BalanceError::IndexTooSmall(n));
    }
    for row in ratios(spec) {
        let row = row?;
        if row.n == n {
            return Ok(row);
        }
    }
    unreachable!("term streams are infinite")
}

/// Ratio series for `n = 2, 3, ...`, sharing one running sum.
pub fn ratios(spec: &SequenceSpec) -> Ratios {
    Ratios { terms: Box::new(spec.terms()), n: 0, sum: Rational::zero(), failed: false }
}

pub struct Ratios {
    terms: Box<dyn Iterator<Item = Rational> + Send>,
    n: u64,
    sum: Rational,
    failed: bool,
}

impl Iterator for Ratios {
    type Item = Result<RatioSeries, BalanceError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let c = self.terms.next()?;
            self.n += 1;
            if !c.is_positive() {
                self.failed = true;
                return Some(Err(BalanceError::NonPositiveTerm(self.n)));
            }
            if self.n == 1 {
                self.sum = c;
                continue;
            }
            let row = RatioSeries::at(self.n, self.sum.clone(), c);
            self.sum += &row.c_n;
            return Some(Ok(row));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    AnalyticOnly,
    WithNumericEvidence,
}

/// Tail-window statistics of `r_n`; never a proof.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub horizon: u64,
    pub window_start: u64,
    pub max_r: f64,
    pub last_r: f64,
    /// max of `c_{n-1}/c_n` over the window
    pub max_prev_ratio: f64,
    /// whether every `r_n` in the window is below the evidence threshold
    pub small: bool,
}

pub const EVIDENCE_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum BalanceVerdict {
    Balanced(String),
    NotBalanced { reason: String, limsup_estimate: Option<Rational> },
    Unknown(Option<Evidence>),
}

impl BalanceVerdict {
    pub fn is_balanced(&self) -> bool {
        matches!(self, BalanceVerdict::Balanced(_))
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, BalanceVerdict::Unknown(_))
    }
}

impl fmt::Display for BalanceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BalanceVerdict::Balanced(r) => write!(f, "Balanced ({r})"),
            BalanceVerdict::NotBalanced { reason, limsup_estimate } => {
                write!(f, "NotBalanced ({reason})")?;
                if let Some(e) = limsup_estimate {
                    write!(f, " limsup r_n = {}", crate::num::render_rational(e))?;
                }
                Ok(())
            }
            BalanceVerdict::Unknown(None) => f.write_str("Unknown (no analytic rule applies)"),
            BalanceVerdict::Unknown(Some(e)) => write!(
                f,
                "Unknown (no analytic rule applies) evidence: n in [{}, {}], max r_n = {:.6e}, last r_n = {:.6e}, max c_(n-1)/c_n = {:.6}, below {:e}: {}",
                e.window_start, e.horizon, e.max_r, e.last_r, e.max_prev_ratio, EVIDENCE_THRESHOLD, e.small
            ),
        }
    }
}

fn require_divergent(spec: &SequenceSpec, to: ExtendedReal) -> Result<(), BalanceError> {
    let p = profile(spec)?;
    if p.liminf() == &to && p.limsup() == &to {
        Ok(())
    } else {
        Err(BalanceError::NotDivergent(p.to_string()))
    }
}

/// Decides whether `c_n / (c_1 + ... + c_{n-1}) -> 0`.
pub fn balanced_verdict(spec: &SequenceSpec, mode: Mode, horizon: u64) -> Result<BalanceVerdict, BalanceError> {
    require_divergent(spec, ExtendedReal::PosInf)?;
    if let Some(v) = analytic(spec, false) {
        return Ok(v);
    }
    Ok(BalanceVerdict::Unknown(match mode {
        Mode::AnalyticOnly => None,
        Mode::WithNumericEvidence => Some(evidence(spec, horizon)),
    }))
}

/// Verdict for `a_n + b_n`, which is balanced whenever both summands are.
pub fn sum_verdict(a: &SequenceSpec, b: &SequenceSpec) -> Result<BalanceVerdict, BalanceError> {
    let va = balanced_verdict(a, Mode::AnalyticOnly, 0)?;
    let vb = balanced_verdict(b, Mode::AnalyticOnly, 0)?;
    Ok(match (&va, &vb) {
        (BalanceVerdict::Balanced(x), BalanceVerdict::Balanced(y)) => {
            BalanceVerdict::Balanced(format!("sum of balanced sequences: {x}; {y}"))
        }
        _ => BalanceVerdict::Unknown(None),
    })
}

fn balanced(reason: &str) -> Option<BalanceVerdict> {
    Some(BalanceVerdict::Balanced(reason.to_string()))
}

fn not_balanced(reason: &str, estimate: Rational) -> Option<BalanceVerdict> {
    Some(BalanceVerdict::NotBalanced { reason: reason.to_string(), limsup_estimate: Some(estimate) })
}

/// Catalog rules, applied to `spec` (or `-spec` when `negated`).
fn analytic(spec: &SequenceSpec, negated: bool) -> Option<BalanceVerdict> {
    match (spec.generator(), negated) {
        (Generator::PowerOfIndex(k), false) => balanced(&format!("n^{k}: r_n ~ {}/n", k + 1)),
        (Generator::Linear, false) | (Generator::NegLinear, true) => balanced("n: r_n = 2/(n-1)"),
        (Generator::Geometric(d), false) => not_balanced("geometric: r_n -> d-1", d - rat(1)),
        (Generator::RunLength(rule), false) => run_length(*rule),
        (Generator::ExplicitPrefix(_, tail), _) => analytic(tail, negated),
        (Generator::Negate(base), _) => analytic(base, !negated),
        (Generator::Affine { base, scale, .. }, _) if !scale.is_zero() => {
            let inner = analytic(base, negated != scale.is_negative())?;
            Some(match inner {
                BalanceVerdict::Balanced(r) => BalanceVerdict::Balanced(format!("positive scaling and shift of: {r}")),
                BalanceVerdict::NotBalanced { reason, limsup_estimate } => BalanceVerdict::NotBalanced {
                    reason: format!("positive scaling of: {reason}"),
                    // a shift does not change the limit of c_n / s_(n-1)
                    limsup_estimate,
                },
                u => u,
            })
        }
        (Generator::PointwiseSquare(base), false) => square(base),
        _ => None,
    }
}

fn run_length(rule: RunRule) -> Option<BalanceVerdict> {
    match rule {
        RunRule::DOUBLING_BLOCKS => balanced("k+1 copies of 2^k: r_n <= 2/k at block starts"),
        RunRule::STAIRCASE => balanced("n+1 copies of n: c_(n-1)/c_n -> 1 with c_n -> +inf"),
        RunRule::FACTORIAL_BLOCKS => balanced("(n+1)^2 copies of n!: r_n <= 1/n at the start of block n"),
        RunRule::CEIL_SQRT => balanced("ceil(sqrt(n)): c_(n-1)/c_n -> 1 with c_n -> +inf"),
        _ => None,
    }
}

fn square(base: &SequenceSpec) -> Option<BalanceVerdict> {
    match base.generator() {
        Generator::PowerOfIndex(k) => balanced(&format!("n^{}: r_n ~ {}/n", 2 * k, 2 * k + 1)),
        Generator::Linear | Generator::NegLinear => balanced("n^2: r_n ~ 3/n"),
        Generator::Geometric(d) => not_balanced("geometric with ratio d^2: r_n -> d^2-1", d * d - rat(1)),
        Generator::RunLength(RunRule::FACTORIAL_BLOCKS) => {
            not_balanced("squared factorial blocks: A_(n+1) < 1 + 1/k <= 2 at block boundaries", rat(1))
        }
        _ => None,
    }
}

fn evidence(spec: &SequenceSpec, horizon: u64) -> Evidence {
    let horizon = horizon.max(20);
    let window_start = horizon - horizon / 10;
    let mut ev = Evidence { horizon, window_start, max_r: 0.0, last_r: f64::NAN, max_prev_ratio: 0.0, small: true };
    let mut sum = Rational::zero();
    let mut prev: Option<Rational> = None;
    for (i, c) in spec.terms().take(horizon as usize).enumerate() {
        let n = i as u64 + 1;
        if n >= window_start && sum.is_positive() && c.is_positive() {
            let r = to_f64(&(&c / &sum));
            ev.max_r = ev.max_r.max(r);
            ev.last_r = r;
            ev.small &= r < EVIDENCE_THRESHOLD;
            if let Some(p) = &prev {
                ev.max_prev_ratio = ev.max_prev_ratio.max(to_f64(&(p / &c)));
            }
        } else if n >= window_start {
            ev.small = false;
        }
        sum += &c;
        prev = Some(c);
    }
    ev
}

#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Holds,
    Fails,
    /// no rule applies; carries the smallest `|c_n|/n` seen up to the horizon
    Unknown(f64),
}

/// Decides whether `liminf |c_n|/n = 0` for a sequence tending to `+inf` or `-inf`.
pub fn density_condition(spec: &SequenceSpec, horizon: u64) -> Result<Density, BalanceError> {
    require_divergent(spec, ExtendedReal::PosInf).or_else(|_| require_divergent(spec, ExtendedReal::NegInf))?;
    Ok(match density(spec) {
        Some(true) => Density::Holds,
        Some(false) => Density::Fails,
        None => {
            let min = spec
                .terms()
                .take(horizon.max(1) as usize)
                .zip(1i64..)
                .map(|(c, n)| to_f64(&(c.abs() / rat(n))))
                .fold(f64::INFINITY, f64::min);
            Density::Unknown(min)
        }
    })
}

fn density(spec: &SequenceSpec) -> Option<bool> {
    match spec.generator() {
        Generator::Linear | Generator::NegLinear | Generator::PowerOfIndex(_) | Generator::Geometric(_) => Some(false),
        Generator::RunLength(rule) => Some(matches!(rule.value, crate::seq::RunValue::Successor)),
        Generator::ExplicitPrefix(_, base) | Generator::Negate(base) => density(base),
        Generator::Affine { base, scale, .. } if !scale.is_zero() => density(base),
        // (c_n/n) * c_n stays away from 0 once c_n/n does
        Generator::PointwiseSquare(base) => match density(base) {
            Some(false) => Some(false),
            _ => None,
        },
        Generator::Interleave(a, b) => match (density(a), density(b)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
        _ => None,
    }
}

/// First source index of each of the first `blocks` blocks of a run-length rule.
pub fn block_start_indices(rule: RunRule, blocks: u64) -> Vec<u64> {
    let mut starts = Vec::with_capacity(blocks as usize);
    let mut next = 1u64;
    for k in 0..blocks {
        starts.push(next);
        next += rule.multiplicity.count(k);
    }
    starts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::ratio;

    #[test]
    fn ratio_examples() {
        let g = SequenceSpec::geometric(rat(2)).unwrap();
        assert_eq!(ratio_series(&g, 10).unwrap().r_n, ratio(1024, 1022));
        let c = ratio_series(&SequenceSpec::constant(rat(1)), 5).unwrap();
        assert_eq!((c.r_n, c.a_n), (ratio(1, 4), rat(4)));
        // 1 + 4 + 9 = 14
        assert_eq!(ratio_series(&SequenceSpec::power(2).unwrap(), 4).unwrap().r_n, ratio(16, 14));
        assert_eq!(ratio_series(&g, 1), Err(BalanceError::IndexTooSmall(1)));
        let neg = SequenceSpec::prefix(vec![rat(1), rat(0)], SequenceSpec::linear()).unwrap();
        assert_eq!(ratio_series(&neg, 3), Err(BalanceError::NonPositiveTerm(2)));
    }

    #[test]
    fn catalog_verdicts() {
        let v = |s: &SequenceSpec| balanced_verdict(s, Mode::AnalyticOnly, 0).unwrap();
        assert!(v(&SequenceSpec::power(3).unwrap()).is_balanced());
        match v(&SequenceSpec::geometric(rat(2)).unwrap()) {
            BalanceVerdict::NotBalanced { limsup_estimate, .. } => assert_eq!(limsup_estimate, Some(rat(1))),
            other => panic!("{other}"),
        }
        let f = SequenceSpec::run_length(RunRule::FACTORIAL_BLOCKS);
        assert!(v(&f).is_balanced());
        assert!(matches!(v(&SequenceSpec::square(f)), BalanceVerdict::NotBalanced { .. }));
        assert!(v(&SequenceSpec::negate(SequenceSpec::neg_linear())).is_balanced());
        assert!(v(&SequenceSpec::affine(SequenceSpec::power(2).unwrap(), ratio(1, 3), rat(-7))).is_balanced());
        assert!(!v(&SequenceSpec::interleave(SequenceSpec::linear(), SequenceSpec::linear())).is_known());
        assert!(matches!(
            balanced_verdict(&SequenceSpec::constant(rat(1)), Mode::AnalyticOnly, 0),
            Err(BalanceError::NotDivergent(_))
        ));
    }

    #[test]
    fn numeric_evidence_stays_unknown() {
        let s = SequenceSpec::interleave(SequenceSpec::linear(), SequenceSpec::power(2).unwrap());
        match balanced_verdict(&s, Mode::WithNumericEvidence, 2000).unwrap() {
            BalanceVerdict::Unknown(Some(e)) => {
                assert_eq!(e.window_start, 1800);
                assert!(e.max_r < 1e-2);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn density_examples() {
        assert_eq!(density_condition(&SequenceSpec::linear(), 100).unwrap(), Density::Fails);
        let sq = SequenceSpec::run_length(RunRule::CEIL_SQRT);
        assert_eq!(density_condition(&sq, 100).unwrap(), Density::Holds);
        assert_eq!(density_condition(&SequenceSpec::negate(sq), 100).unwrap(), Density::Holds);
        assert_eq!(density_condition(&SequenceSpec::geometric(rat(2)).unwrap(), 100).unwrap(), Density::Fails);
        assert!(density_condition(&SequenceSpec::constant(rat(0)), 10).is_err());
    }

    #[test]
    fn block_starts() {
        assert_eq!(block_start_indices(RunRule::DOUBLING_BLOCKS, 4), vec![1, 2, 4, 7]);
    }
}
