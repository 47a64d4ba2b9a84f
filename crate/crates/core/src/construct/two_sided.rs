use super::merge::merge_preserving;
use super::{show, ConstructError, Rearrangement, Term};
use crate::balance::{density_condition, Density};
use crate::num::{rat, ExtendedReal, Rational};
use crate::seq::{decompose, profile, Part, PartTerms, Piece, SequenceSpec};

/// Greedy sign-alternating merge: large positive elements while the average is at
/// most `t`, large negative ones otherwise.
struct TwoSided {
    low: PartTerms,
    high: PartTerms,
    t: Rational,
    n: u64,
    sum: Rational,
}

impl Iterator for TwoSided {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        let up = self.sum <= &self.t * rat(self.n as i64);
        let t = if up { self.high.next() } else { self.low.next() }?;
        self.n += 1;
        self.sum += &t.value;
        Some(t)
    }
}

impl Rearrangement for TwoSided {}

/// Leaves of the group tending to `limit` whose terms are sparse relative to `n`;
/// the remaining pieces go to `rest`.
fn sparse_leaves(part: &Part, rest: &mut Part) -> Result<Part, ConstructError> {
    let mut out = Part { limit: part.limit.clone(), pieces: Vec::new() };
    for piece in &part.pieces {
        let keep = match piece {
            Piece::Leaf { spec, .. } => density_condition(spec, 0)? == Density::Holds,
            Piece::Finite(_) => false,
        };
        if keep { &mut out } else { &mut *rest }.pieces.push(piece.clone());
    }
    Ok(out)
}

/// Rearrangement with limit in average `t` for a sequence with both `-inf` and `+inf`
/// as accumulation points.
pub fn two_sided_balance(spec: &SequenceSpec, t: &Rational) -> Result<Box<dyn Rearrangement>, ConstructError> {
    let p = profile(spec)?;
    if !p.has_neg_inf() {
        return Err(ConstructError::MissingInfinity("-inf"));
    }
    if !p.has_pos_inf() {
        return Err(ConstructError::MissingInfinity("+inf"));
    }
    let d = decompose(spec, &p)?;
    let mut rest = d.rest(&[ExtendedReal::NegInf, ExtendedReal::PosInf]);
    let low = sparse_leaves(d.group(&ExtendedReal::NegInf).expect("profile has -inf"), &mut rest)?;
    let high = sparse_leaves(d.group(&ExtendedReal::PosInf).expect("profile has +inf"), &mut rest)?;
    for (part, side) in [(&low, "-inf"), (&high, "+inf")] {
        if part.is_empty() {
            return Err(ConstructError::DensityFails(format!(
                "no part tending to {side} has liminf |term|/n = 0 (target {})",
                show(t)
            )));
        }
    }
    let core = TwoSided { low: low.terms(), high: high.terms(), t: t.clone(), n: 0, sum: rat(0) };
    if rest.is_empty() {
        return Ok(Box::new(core));
    }
    Ok(Box::new(merge_preserving(Box::new(core), Some(t.clone().into()), Box::new(rest.terms()))?))
}
