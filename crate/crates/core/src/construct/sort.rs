use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{ConstructError, Rearrangement, Term};
use crate::num::{ExtendedReal, Rational};
use crate::seq::{decompose, profile, IndexMap, Part, Piece, SequenceSpec, Terms};

struct Tail {
    terms: Terms,
    k: u64,
    map: IndexMap,
}

impl Tail {
    fn next(&mut self) -> Term {
        let value = self.terms.next().expect("leaf streams are infinite");
        let t = Term { index: self.map.apply(self.k), value };
        self.k += 1;
        t
    }
}

/// Terms of a part tending to `+inf`, in nondecreasing value order (ties by source index).
pub struct SortedPart {
    heap: BinaryHeap<Reverse<(Rational, u64, usize)>>,
    tails: Vec<Tail>,
}

const STATIC: usize = usize::MAX;

pub fn sort_part(part: &Part) -> Result<SortedPart, ConstructError> {
    let mut heap = BinaryHeap::new();
    let mut tails = Vec::new();
    for piece in &part.pieces {
        match piece {
            Piece::Finite(ts) => {
                heap.extend(ts.iter().map(|t| Reverse((t.value.clone(), t.index, STATIC))));
            }
            Piece::Leaf { spec, map, limit } => {
                if *limit != ExtendedReal::PosInf {
                    return Err(ConstructError::NotDivergent(format!("a part with limit {limit}")));
                }
                let start = spec.nondecreasing_from().ok_or_else(|| {
                    ConstructError::Unsupported("no eventual monotonicity known for a part tending to +inf".into())
                })?;
                let mut tail = Tail { terms: spec.terms(), k: 1, map: *map };
                while tail.k < start {
                    let t = tail.next();
                    heap.push(Reverse((t.value, t.index, STATIC)));
                }
                let head = tail.next();
                heap.push(Reverse((head.value, head.index, tails.len())));
                tails.push(tail);
            }
        }
    }
    Ok(SortedPart { heap, tails })
}

/// The whole sequence in nondecreasing order; it must tend to `+inf`.
pub fn sort_increasing(spec: &SequenceSpec) -> Result<SortedPart, ConstructError> {
    let p = profile(spec)?;
    if p.liminf() != &ExtendedReal::PosInf {
        return Err(ConstructError::NotDivergent(format!("a sequence with accumulation set {p}")));
    }
    let d = decompose(spec, &p)?;
    sort_part(&d.rest(&[]))
}

impl Iterator for SortedPart {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        let Reverse((value, index, src)) = self.heap.pop()?;
        if src != STATIC {
            let t = self.tails[src].next();
            self.heap.push(Reverse((t.value, t.index, src)));
        }
        Some(Term { index, value })
    }
}

impl Rearrangement for SortedPart {}
