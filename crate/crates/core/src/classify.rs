//! The set of limits reachable in average by rearrangement.

use std::fmt;

use crate::balance::{self, BalanceError, BalanceVerdict, Density, Mode};
use crate::interval::{canonical_union, is_canonical, ClosedInterval};
use crate::num::ExtendedReal;
use crate::seq::{decompose, profile, AccumulationProfile, Part, SeqError, SequenceSpec};

/// Canonical finite union of closed extended-real intervals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AARSet {
    intervals: Vec<ClosedInterval>,
}

impl AARSet {
    pub fn new(parts: Vec<ClosedInterval>) -> Self {
        AARSet { intervals: canonical_union(parts) }
    }

    pub fn whole_line() -> Self {
        Self::new(vec![ClosedInterval { lo: ExtendedReal::NegInf, hi: ExtendedReal::PosInf }])
    }

    pub fn intervals(&self) -> &[ClosedInterval] {
        &self.intervals
    }

    pub fn contains(&self, x: &ExtendedReal) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }

    pub fn is_canonical(&self) -> bool {
        is_canonical(&self.intervals)
    }
}

impl fmt::Display for AARSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.intervals.iter().map(|iv| iv.to_string()).collect();
        f.write_str(&parts.join(" ∪ "))
    }
}

pub fn aar_contains(set: &AARSet, x: &ExtendedReal) -> bool {
    set.contains(x)
}

/// Balance and density facts about the parts tending to `-inf` (b) and `+inf` (c).
///
/// Balance of the b-part means balance of its negation.
#[derive(Debug, Clone, Default)]
pub struct Verdicts {
    pub b_balance: Option<BalanceVerdict>,
    pub c_balance: Option<BalanceVerdict>,
    pub b_density: Option<Density>,
    pub c_density: Option<Density>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("insufficient evidence: {0} is unknown")]
    InsufficientEvidence(&'static str),
    #[error(transparent)]
    Profile(#[from] SeqError),
    #[error(transparent)]
    Balance(#[from] BalanceError),
}

/// Which verdicts `classify` will consult for this profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Needs {
    pub b_balance: bool,
    pub c_balance: bool,
    pub densities: bool,
}

pub fn needs(profile: &AccumulationProfile) -> Needs {
    let (neg, pos) = (profile.has_neg_inf(), profile.has_pos_inf());
    let acc = profile.finite_acc();
    if acc.is_empty() {
        return Needs { densities: neg && pos, ..Needs::default() };
    }
    let a = &acc[0].lo;
    let b = &acc[acc.len() - 1].hi;
    if !neg && !pos || !a.is_finite() || !b.is_finite() {
        return Needs::default();
    }
    Needs { b_balance: neg, c_balance: pos, densities: false }
}

fn balanced(v: &Option<BalanceVerdict>, which: &'static str) -> Result<bool, ClassifyError> {
    match v {
        Some(BalanceVerdict::Balanced(_)) => Ok(true),
        Some(BalanceVerdict::NotBalanced { .. }) => Ok(false),
        _ => Err(ClassifyError::InsufficientEvidence(which)),
    }
}

fn holds(v: &Option<Density>, which: &'static str) -> Result<bool, ClassifyError> {
    match v {
        Some(Density::Holds) => Ok(true),
        Some(Density::Fails) => Ok(false),
        _ => Err(ClassifyError::InsufficientEvidence(which)),
    }
}

fn iv(lo: ExtendedReal, hi: ExtendedReal) -> ClosedInterval {
    ClosedInterval { lo, hi }
}

fn pt(x: ExtendedReal) -> ClosedInterval {
    ClosedInterval::point(x)
}

/// Maps an accumulation profile and the required verdicts to the reachable set.
pub fn classify(profile: &AccumulationProfile, verdicts: &Verdicts) -> Result<AARSet, ClassifyError> {
    use ExtendedReal::{NegInf, PosInf};
    let (neg, pos) = (profile.has_neg_inf(), profile.has_pos_inf());
    let acc = profile.finite_acc();

    if acc.is_empty() {
        return Ok(match (neg, pos) {
            (true, false) => AARSet::new(vec![pt(NegInf)]),
            (false, true) => AARSet::new(vec![pt(PosInf)]),
            _ => {
                let b = holds(&verdicts.b_density, "b_density")?;
                let c = holds(&verdicts.c_density, "c_density")?;
                if b && c {
                    AARSet::whole_line()
                } else {
                    AARSet::new(vec![pt(NegInf), pt(PosInf)])
                }
            }
        });
    }

    let (alpha, beta) = (profile.liminf().clone(), profile.limsup().clone());
    let a = acc[0].lo.clone();
    let b = acc[acc.len() - 1].hi.clone();

    if !neg && !pos {
        return Ok(AARSet::new(vec![iv(alpha, beta)]));
    }
    if !a.is_finite() || !b.is_finite() {
        return Ok(AARSet::new(vec![iv(a, b), pt(alpha), pt(beta)]));
    }
    Ok(match (neg, pos) {
        (true, false) => {
            if balanced(&verdicts.b_balance, "b_balance")? {
                AARSet::new(vec![iv(NegInf, b)])
            } else {
                AARSet::new(vec![iv(a, b), pt(NegInf)])
            }
        }
        (false, true) => {
            if balanced(&verdicts.c_balance, "c_balance")? {
                AARSet::new(vec![iv(a, PosInf)])
            } else {
                AARSet::new(vec![iv(a, b), pt(PosInf)])
            }
        }
        _ => {
            let bb = balanced(&verdicts.b_balance, "b_balance")?;
            let cb = balanced(&verdicts.c_balance, "c_balance")?;
            match (bb, cb) {
                (true, true) => AARSet::whole_line(),
                (true, false) => AARSet::new(vec![iv(NegInf, b), pt(PosInf)]),
                (false, true) => AARSet::new(vec![iv(a, PosInf), pt(NegInf)]),
                (false, false) => AARSet::new(vec![iv(a, b), pt(NegInf), pt(PosInf)]),
            }
        }
    })
}

/// Collects the verdicts a profile needs from the spec's decomposition.
pub fn verdicts_for(spec: &SequenceSpec, mode: Mode, horizon: u64) -> Result<Verdicts, ClassifyError> {
    let p = profile(spec)?;
    let need = needs(&p);
    let mut out = Verdicts::default();
    if need == Needs::default() {
        return Ok(out);
    }
    let d = decompose(spec, &p)?;
    let neg_part = d.group(&ExtendedReal::NegInf).cloned().unwrap_or_default();
    let pos_part = d.group(&ExtendedReal::PosInf).cloned().unwrap_or_default();
    if need.b_balance {
        out.b_balance = Some(part_balance(&neg_part, true, mode, horizon)?);
    }
    if need.c_balance {
        out.c_balance = Some(part_balance(&pos_part, false, mode, horizon)?);
    }
    if need.densities {
        out.b_density = Some(part_density(&neg_part, horizon)?);
        out.c_density = Some(part_density(&pos_part, horizon)?);
    }
    Ok(out)
}

fn part_balance(part: &Part, negate: bool, mode: Mode, horizon: u64) -> Result<BalanceVerdict, ClassifyError> {
    Ok(match part.as_spec() {
        Some(s) if negate => balance::balanced_verdict(&SequenceSpec::negate(s.clone()), mode, horizon)?,
        Some(s) => balance::balanced_verdict(s, mode, horizon)?,
        None => BalanceVerdict::Unknown(None),
    })
}

fn part_density(part: &Part, horizon: u64) -> Result<Density, ClassifyError> {
    Ok(match part.as_spec() {
        Some(s) => balance::density_condition(s, horizon)?,
        None => Density::Unknown(f64::NAN),
    })
}

/// Profile, decomposition, verdicts and classification in one call.
pub fn classify_spec(spec: &SequenceSpec) -> Result<AARSet, ClassifyError> {
    let v = verdicts_for(spec, Mode::AnalyticOnly, 0)?;
    classify(&profile(spec)?, &v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    #[test]
    fn membership() {
        let half = AARSet::new(vec![iv(rat(0).into(), ExtendedReal::PosInf)]);
        assert!(half.contains(&rat(1_000_000).into()));
        let two = AARSet::new(vec![pt(rat(0).into()), pt(ExtendedReal::PosInf)]);
        assert!(!two.contains(&rat(1).into()));
        assert_eq!(two.to_string(), "{0} ∪ {+inf}");
        let unit = AARSet::new(vec![iv(rat(-1).into(), rat(1).into())]);
        assert!(unit.contains(&rat(-1).into()));
    }

    #[test]
    fn unknown_verdict_is_an_error() {
        let p = AccumulationProfile::new(vec![pt(rat(0).into())], false, true).unwrap();
        assert_eq!(classify(&p, &Verdicts::default()), Err(ClassifyError::InsufficientEvidence("c_balance")));
        let v = Verdicts { c_balance: Some(BalanceVerdict::Unknown(None)), ..Verdicts::default() };
        assert!(classify(&p, &v).is_err());
    }

    #[test]
    fn unbounded_finite_part() {
        let p = AccumulationProfile::new(vec![iv(rat(0).into(), ExtendedReal::PosInf)], true, false).unwrap();
        let s = classify(&p, &Verdicts::default()).unwrap();
        assert_eq!(s.to_string(), "{-inf} ∪ [0, +inf]");
    }
}
