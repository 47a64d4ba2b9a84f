use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::profile::{profile, AccumulationProfile};
use super::spec::{Generator, SequenceSpec};
use super::{SeqError, Term};
use crate::num::{ExtendedReal, Rational};

/// Source index of the `k`-th leaf term: `stride * k + offset`, `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IndexMap {
    pub stride: u64,
    pub offset: i64,
}

impl IndexMap {
    pub const IDENTITY: IndexMap = IndexMap { stride: 1, offset: 0 };

    pub fn apply(self, k: u64) -> u64 {
        (self.stride as i64 * k as i64 + self.offset) as u64
    }

    /// `self` after `inner`: `k -> self(inner(k))`.
    pub fn compose(self, inner: IndexMap) -> IndexMap {
        IndexMap { stride: self.stride * inner.stride, offset: self.stride as i64 * inner.offset + self.offset }
    }

    /// The `k` with `apply(k) == index`, if any.
    pub fn preimage(self, index: u64) -> Option<u64> {
        let d = index as i64 - self.offset;
        (d > 0 && d % self.stride as i64 == 0).then(|| (d / self.stride as i64) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Piece {
    /// Finitely many explicit source terms.
    Finite(Vec<Term>),
    /// A convergent subsequence: `spec` term `k` sits at source index `map.apply(k)`.
    Leaf { spec: SequenceSpec, map: IndexMap, limit: ExtendedReal },
}

impl Piece {
    fn contains(&self, index: u64) -> bool {
        match self {
            Piece::Finite(ts) => ts.iter().any(|t| t.index == index),
            Piece::Leaf { map, .. } => map.preimage(index).is_some(),
        }
    }

    fn terms(&self) -> Box<dyn Iterator<Item = Term> + Send> {
        match self {
            Piece::Finite(ts) => Box::new(ts.clone().into_iter()),
            Piece::Leaf { spec, map, .. } => {
                let map = *map;
                Box::new(spec.terms().zip(1u64..).map(move |(value, k)| Term { index: map.apply(k), value }))
            }
        }
    }
}

/// A set of source indices, streamed in increasing index order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Part {
    pub limit: Option<ExtendedReal>,
    pub pieces: Vec<Piece>,
}

impl Part {
    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.pieces.iter().all(|p| matches!(p, Piece::Finite(_)))
    }

    pub fn contains(&self, index: u64) -> bool {
        self.pieces.iter().any(|p| p.contains(index))
    }

    pub fn terms(&self) -> PartTerms {
        PartTerms::new(self.pieces.iter().map(Piece::terms).collect())
    }

    pub fn leaves(&self) -> impl Iterator<Item = (&SequenceSpec, IndexMap, &ExtendedReal)> {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Leaf { spec, map, limit } => Some((spec, *map, limit)),
            Piece::Finite(_) => None,
        })
    }

    /// The part as a sequence in its own right, when it is a single leaf.
    pub fn as_spec(&self) -> Option<&SequenceSpec> {
        match self.pieces.as_slice() {
            [Piece::Leaf { spec, .. }] => Some(spec),
            _ => None,
        }
    }

    /// Source index of the `k`-th element (1-based) of this part.
    pub fn witness(&self, k: u64) -> Option<u64> {
        self.terms().nth(k.checked_sub(1)? as usize).map(|t| t.index)
    }

    pub fn merged(parts: impl IntoIterator<Item = Part>) -> Part {
        let mut out = Part::default();
        for p in parts {
            out.pieces.extend(p.pieces);
        }
        out
    }
}

/// K-way merge of index-sorted piece streams.
pub struct PartTerms {
    streams: Vec<Box<dyn Iterator<Item = Term> + Send>>,
    heads: BinaryHeap<Reverse<(u64, usize)>>,
    pending: Vec<Option<Rational>>,
}

impl PartTerms {
    fn new(mut streams: Vec<Box<dyn Iterator<Item = Term> + Send>>) -> Self {
        let mut heads = BinaryHeap::new();
        let mut pending = Vec::with_capacity(streams.len());
        for (i, s) in streams.iter_mut().enumerate() {
            match s.next() {
                Some(t) => {
                    heads.push(Reverse((t.index, i)));
                    pending.push(Some(t.value));
                }
                None => pending.push(None),
            }
        }
        PartTerms { streams, heads, pending }
    }
}

impl Iterator for PartTerms {
    type Item = Term;

    fn next(&mut self) -> Option<Term> {
        let Reverse((index, i)) = self.heads.pop()?;
        let value = self.pending[i].take().expect("head has a value");
        if let Some(t) = self.streams[i].next() {
            self.heads.push(Reverse((t.index, i)));
            self.pending[i] = Some(t.value);
        }
        Some(Term { index, value })
    }
}

/// Split of the source indices into convergent groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    /// One part per distinct leaf limit, in increasing order of limit.
    pub groups: Vec<Part>,
    /// Explicit prefix terms that belong to no convergent leaf.
    pub finite: Vec<Term>,
    liminf: ExtendedReal,
    limsup: ExtendedReal,
}

impl Decomposition {
    pub fn group(&self, limit: &ExtendedReal) -> Option<&Part> {
        self.groups.iter().find(|g| g.limit.as_ref() == Some(limit))
    }

    /// Subsequence tending to the liminf.
    pub fn b_part(&self) -> Part {
        self.group(&self.liminf).cloned().unwrap_or_default()
    }

    /// Subsequence tending to the limsup; empty for convergent sequences.
    pub fn c_part(&self) -> Part {
        if self.liminf == self.limsup {
            return Part::default();
        }
        self.group(&self.limsup).cloned().unwrap_or_default()
    }

    /// Everything else, including explicit prefix terms.
    pub fn d_part(&self) -> Part {
        self.rest(&[self.liminf.clone(), self.limsup.clone()])
    }

    /// All source terms outside the groups with the given limits.
    pub fn rest(&self, taken: &[ExtendedReal]) -> Part {
        let mut out = Part::merged(
            self.groups.iter().filter(|g| !taken.iter().any(|l| g.limit.as_ref() == Some(l))).cloned(),
        );
        if !self.finite.is_empty() {
            out.pieces.push(Piece::Finite(self.finite.clone()));
        }
        out
    }

    /// `0` for the b-part, `1` for the c-part, `2` for the rest.
    pub fn part_of(&self, index: u64) -> usize {
        if self.b_part().contains(index) {
            0
        } else if self.c_part().contains(index) {
            1
        } else {
            2
        }
    }
}

pub fn decompose(spec: &SequenceSpec, profile: &AccumulationProfile) -> Result<Decomposition, SeqError> {
    let mut leaves = Vec::new();
    let mut finite = Vec::new();
    flatten(spec, IndexMap::IDENTITY, &mut leaves, &mut finite)?;
    finite.sort_by_key(|t| t.index);

    let mut groups: Vec<Part> = Vec::new();
    for (s, map, limit) in leaves {
        match groups.iter_mut().find(|g| g.limit.as_ref() == Some(&limit)) {
            Some(g) => g.pieces.push(Piece::Leaf { spec: s, map, limit }),
            None => groups.push(Part { limit: Some(limit.clone()), pieces: vec![Piece::Leaf { spec: s, map, limit }] }),
        }
    }
    groups.sort_by(|a, b| a.limit.cmp(&b.limit));

    let liminf = profile.liminf().clone();
    let limsup = profile.limsup().clone();
    for l in [&liminf, &limsup] {
        if !groups.iter().any(|g| g.limit.as_ref() == Some(l)) {
            return Err(SeqError::UnknownProfile(format!("no subsequence of the generator tends to {l}")));
        }
    }
    Ok(Decomposition { groups, finite, liminf, limsup })
}

fn flatten(
    spec: &SequenceSpec,
    map: IndexMap,
    leaves: &mut Vec<(SequenceSpec, IndexMap, ExtendedReal)>,
    finite: &mut Vec<Term>,
) -> Result<(), SeqError> {
    match spec.generator() {
        Generator::Interleave(a, b) => {
            flatten(a, map.compose(IndexMap { stride: 2, offset: -1 }), leaves, finite)?;
            flatten(b, map.compose(IndexMap { stride: 2, offset: 0 }), leaves, finite)
        }
        Generator::ExplicitPrefix(values, tail) => {
            for (i, v) in values.iter().enumerate() {
                finite.push(Term { index: map.apply(i as u64 + 1), value: v.clone() });
            }
            let shift = IndexMap { stride: 1, offset: values.len() as i64 };
            flatten(tail, map.compose(shift), leaves, finite)
        }
        Generator::Affine { base, .. } | Generator::PointwiseSquare(base) | Generator::Negate(base)
            if is_composite(base) =>
        {
            flatten(&push_down(spec), map, leaves, finite)
        }
        _ => {
            let p = profile(spec)?;
            if !p.is_convergent() {
                return Err(SeqError::UnknownProfile(format!("cannot split a leaf with accumulation set {p}")));
            }
            leaves.push((spec.clone(), map, p.liminf().clone()));
            Ok(())
        }
    }
}

fn is_composite(spec: &SequenceSpec) -> bool {
    match spec.generator() {
        Generator::Interleave(..) | Generator::ExplicitPrefix(..) => true,
        Generator::Affine { base, .. } | Generator::PointwiseSquare(base) | Generator::Negate(base) => {
            is_composite(base)
        }
        _ => false,
    }
}

/// Moves a pointwise transform below the nearest interleave or prefix.
fn push_down(spec: &SequenceSpec) -> SequenceSpec {
    let apply = |inner: &SequenceSpec| -> SequenceSpec {
        match spec.generator() {
            Generator::Affine { scale, shift, .. } => SequenceSpec::affine(inner.clone(), scale.clone(), shift.clone()),
            Generator::PointwiseSquare(_) => SequenceSpec::square(inner.clone()),
            Generator::Negate(_) => SequenceSpec::negate(inner.clone()),
            _ => unreachable!("only pointwise transforms are pushed down"),
        }
    };
    let base = match spec.generator() {
        Generator::Affine { base, .. } | Generator::PointwiseSquare(base) | Generator::Negate(base) => base,
        _ => unreachable!(),
    };
    let base = if matches!(base.generator(), Generator::Interleave(..) | Generator::ExplicitPrefix(..)) {
        (**base).clone()
    } else {
        push_down(base)
    };
    match base.generator() {
        Generator::Interleave(a, b) => SequenceSpec::interleave(apply(a), apply(b)),
        Generator::ExplicitPrefix(values, tail) => {
            let values = values.iter().map(|v| apply(&SequenceSpec::constant(v.clone())).term(1)).collect();
            SequenceSpec::prefix(values, apply(tail)).expect("nonempty prefix")
        }
        _ => unreachable!("push_down stops at an interleave or prefix"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    fn indices(p: &Part, n: usize) -> Vec<u64> {
        p.terms().take(n).map(|t| t.index).collect()
    }

    #[test]
    fn alternating_constants() {
        let s = SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::constant(rat(1)));
        let d = decompose(&s, &profile(&s).unwrap()).unwrap();
        assert_eq!(indices(&d.b_part(), 4), vec![1, 3, 5, 7]);
        assert_eq!(indices(&d.c_part(), 4), vec![2, 4, 6, 8]);
        assert!(d.d_part().is_empty());
        assert_eq!(d.part_of(7), 0);
        assert_eq!(d.c_part().witness(3), Some(6));
    }

    #[test]
    fn zeros_and_squares() {
        let s = SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::power(2).unwrap());
        let d = decompose(&s, &profile(&s).unwrap()).unwrap();
        let c: Vec<_> = d.c_part().terms().take(3).map(|t| t.value).collect();
        assert_eq!(c, vec![rat(1), rat(4), rat(9)]);
        assert_eq!(d.c_part().as_spec(), Some(&SequenceSpec::power(2).unwrap()));
    }

    #[test]
    fn constant_is_all_b() {
        let s = SequenceSpec::constant(rat(3));
        let d = decompose(&s, &profile(&s).unwrap()).unwrap();
        assert!(d.c_part().is_empty());
        assert!(d.d_part().is_empty());
        assert_eq!(indices(&d.b_part(), 1000), (1..=1000).collect::<Vec<_>>());
    }

    #[test]
    fn transforms_push_through_interleave_and_prefix() {
        let inner = SequenceSpec::prefix(
            vec![rat(7)],
            SequenceSpec::interleave(SequenceSpec::constant(rat(1)), SequenceSpec::linear()),
        )
        .unwrap();
        let s = SequenceSpec::affine(inner, rat(-2), rat(1));
        let d = decompose(&s, &profile(&s).unwrap()).unwrap();
        assert_eq!(d.finite, vec![Term { index: 1, value: rat(-13) }]);
        assert_eq!(d.b_part().limit, Some(ExtendedReal::NegInf));
        assert_eq!(indices(&d.b_part(), 3), vec![3, 5, 7]);
        assert_eq!(indices(&d.c_part(), 3), vec![2, 4, 6]);
        for t in d.b_part().terms().take(50).chain(d.c_part().terms().take(50)) {
            assert_eq!(t.value, s.term(t.index));
        }
    }

    #[test]
    fn nested_three_way() {
        let g = SequenceSpec::geometric(rat(2)).unwrap();
        let s = SequenceSpec::interleave(
            SequenceSpec::negate(g.clone()),
            SequenceSpec::interleave(SequenceSpec::constant(rat(0)), g),
        );
        let d = decompose(&s, &profile(&s).unwrap()).unwrap();
        assert_eq!(d.groups.len(), 3);
        assert_eq!(indices(&d.d_part(), 3), vec![2, 6, 10]);
        assert_eq!(indices(&d.c_part(), 3), vec![4, 8, 12]);
    }
}
