use std::iter;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::profile::{self, AccumulationProfile};
use super::SeqError;
use crate::num::{rat, Rational};

/// Value rule of a run-length block, as a function of the 0-based block number `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunValue {
    /// `2^k`
    PowerOfTwo,
    /// `k + 1`
    Successor,
    /// `(k + 1)!`
    Factorial,
}

/// Number of copies in block `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunMultiplicity {
    /// `k + 1`
    Successor,
    /// `k + 2`
    SecondSuccessor,
    /// `(k + 2)^2`
    SquaredSecondSuccessor,
    /// `2k + 1`
    Odd,
}

impl RunValue {
    pub const ALL: [RunValue; 3] = [RunValue::PowerOfTwo, RunValue::Successor, RunValue::Factorial];

    pub fn code(self) -> u32 {
        match self {
            RunValue::PowerOfTwo => 1,
            RunValue::Successor => 2,
            RunValue::Factorial => 3,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.code() == code)
    }

    pub fn value(self, k: u64) -> BigInt {
        match self {
            RunValue::PowerOfTwo => BigInt::one() << k,
            RunValue::Successor => BigInt::from(k + 1),
            RunValue::Factorial => (1..=k + 1).map(BigInt::from).product(),
        }
    }
}

impl RunMultiplicity {
    pub const ALL: [RunMultiplicity; 4] = [
        RunMultiplicity::Successor,
        RunMultiplicity::SecondSuccessor,
        RunMultiplicity::SquaredSecondSuccessor,
        RunMultiplicity::Odd,
    ];

    pub fn code(self) -> u32 {
        match self {
            RunMultiplicity::Successor => 1,
            RunMultiplicity::SecondSuccessor => 2,
            RunMultiplicity::SquaredSecondSuccessor => 3,
            RunMultiplicity::Odd => 4,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == code)
    }

    pub fn count(self, k: u64) -> u64 {
        match self {
            RunMultiplicity::Successor => k + 1,
            RunMultiplicity::SecondSuccessor => k + 2,
            RunMultiplicity::SquaredSecondSuccessor => (k + 2) * (k + 2),
            RunMultiplicity::Odd => 2 * k + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RunRule {
    pub value: RunValue,
    pub multiplicity: RunMultiplicity,
}

impl RunRule {
    /// `1,2,2,4,4,4,8,...`: `k+1` copies of `2^k`.
    pub const DOUBLING_BLOCKS: RunRule =
        RunRule { value: RunValue::PowerOfTwo, multiplicity: RunMultiplicity::Successor };
    /// `1,1,2,2,2,3,...`: `n+1` copies of `n`.
    pub const STAIRCASE: RunRule =
        RunRule { value: RunValue::Successor, multiplicity: RunMultiplicity::SecondSuccessor };
    /// `(n+1)^2` copies of `n!`.
    pub const FACTORIAL_BLOCKS: RunRule = RunRule {
        value: RunValue::Factorial,
        multiplicity: RunMultiplicity::SquaredSecondSuccessor,
    };
    /// `ceil(sqrt(n))`: `2k+1` copies of `k+1`.
    pub const CEIL_SQRT: RunRule =
        RunRule { value: RunValue::Successor, multiplicity: RunMultiplicity::Odd };

    /// Block number holding the `n`-th term (1-based).
    pub fn block_of(self, n: u64) -> u64 {
        let mut k = 0;
        let mut seen = 0;
        loop {
            seen += self.multiplicity.count(k);
            if seen >= n {
                return k;
            }
            k += 1;
        }
    }
}

/// How the terms of a sequence are produced.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Generator {
    Constant(Rational),
    /// `n^k`
    PowerOfIndex(u32),
    /// `d^n`, `d > 1`
    Geometric(Rational),
    /// `n`
    Linear,
    /// `-n`
    NegLinear,
    RunLength(RunRule),
    /// Finitely many explicit values followed by another sequence.
    ExplicitPrefix(Vec<Rational>, Box<SequenceSpec>),
    /// `scale * base_n + shift`
    Affine { base: Box<SequenceSpec>, scale: Rational, shift: Rational },
    PointwiseSquare(Box<SequenceSpec>),
    Negate(Box<SequenceSpec>),
    /// `c_{2n-1} = a_n`, `c_{2n} = b_n`
    Interleave(Box<SequenceSpec>, Box<SequenceSpec>),
}

/// Declarative description of an infinite sequence of rationals, indexed from 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SequenceSpec {
    generator: Generator,
    declared: Option<AccumulationProfile>,
}

impl SequenceSpec {
    /// Validates a generator and fills in the derived accumulation profile.
    pub fn build(generator: Generator) -> Result<Self, SeqError> {
        validate(&generator)?;
        let generator = canonicalize(generator);
        let mut spec = SequenceSpec { generator, declared: None };
        spec.declared = Some(profile::derive(&spec)?);
        Ok(spec)
    }

    /// Replaces the declared accumulation profile.
    pub fn with_profile(mut self, profile: AccumulationProfile) -> Self {
        self.declared = Some(profile);
        self
    }

    pub fn without_profile(mut self) -> Self {
        self.declared = None;
        self
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn declared_profile(&self) -> Option<&AccumulationProfile> {
        self.declared.as_ref()
    }

    pub fn constant(v: Rational) -> Self {
        Self::build(Generator::Constant(v)).expect("constant is always valid")
    }

    pub fn power(k: u32) -> Result<Self, SeqError> {
        Self::build(Generator::PowerOfIndex(k))
    }

    pub fn geometric(d: Rational) -> Result<Self, SeqError> {
        Self::build(Generator::Geometric(d))
    }

    pub fn linear() -> Self {
        Self::build(Generator::Linear).expect("linear is always valid")
    }

    pub fn neg_linear() -> Self {
        Self::build(Generator::NegLinear).expect("neg-linear is always valid")
    }

    pub fn run_length(rule: RunRule) -> Self {
        Self::build(Generator::RunLength(rule)).expect("catalog rule")
    }

    pub fn prefix(values: Vec<Rational>, tail: SequenceSpec) -> Result<Self, SeqError> {
        Self::build(Generator::ExplicitPrefix(values, Box::new(tail)))
    }

    pub fn affine(base: SequenceSpec, scale: Rational, shift: Rational) -> Self {
        Self::build(Generator::Affine { base: Box::new(base), scale, shift }).expect("affine is always valid")
    }

    pub fn square(base: SequenceSpec) -> Self {
        Self::build(Generator::PointwiseSquare(Box::new(base))).expect("square is always valid")
    }

    pub fn negate(base: SequenceSpec) -> Self {
        Self::build(Generator::Negate(Box::new(base))).expect("negation is always valid")
    }

    pub fn interleave(a: SequenceSpec, b: SequenceSpec) -> Self {
        Self::build(Generator::Interleave(Box::new(a), Box::new(b))).expect("interleave is always valid")
    }

    /// The `n`-th term, `n >= 1`.
    pub fn term(&self, n: u64) -> Rational {
        assert!(n >= 1, "sequences are indexed from 1");
        match &self.generator {
            Generator::Constant(v) => v.clone(),
            Generator::PowerOfIndex(k) => Rational::from_integer(num_traits::pow(BigInt::from(n), *k as usize)),
            Generator::Geometric(d) => num_traits::pow(d.clone(), n as usize),
            Generator::Linear => rat(n as i64),
            Generator::NegLinear => rat(-(n as i64)),
            Generator::RunLength(rule) => Rational::from_integer(rule.value.value(rule.block_of(n))),
            Generator::ExplicitPrefix(values, tail) => {
                let len = values.len() as u64;
                if n <= len {
                    values[(n - 1) as usize].clone()
                } else {
                    tail.term(n - len)
                }
            }
            Generator::Affine { base, scale, shift } => scale * base.term(n) + shift,
            Generator::PointwiseSquare(base) => {
                let x = base.term(n);
                &x * &x
            }
            Generator::Negate(base) => -base.term(n),
            Generator::Interleave(a, b) => {
                if n.is_multiple_of(2) {
                    b.term(n / 2)
                } else {
                    a.term(n.div_ceil(2))
                }
            }
        }
    }

    /// All terms in index order, computed incrementally.
    pub fn terms(&self) -> Terms {
        Terms(match &self.generator {
            Generator::Constant(v) => Box::new(iter::repeat(v.clone())),
            Generator::PowerOfIndex(k) => {
                let k = *k as usize;
                Box::new((1u64..).map(move |n| Rational::from_integer(num_traits::pow(BigInt::from(n), k))))
            }
            Generator::Geometric(d) => {
                let d = d.clone();
                Box::new(iter::successors(Some(d.clone()), move |x| Some(x * &d)))
            }
            Generator::Linear => Box::new((1i64..).map(rat)),
            Generator::NegLinear => Box::new((1i64..).map(|n| rat(-n))),
            Generator::RunLength(rule) => Box::new(RunTerms::new(*rule)),
            Generator::ExplicitPrefix(values, tail) => Box::new(values.clone().into_iter().chain(tail.terms())),
            Generator::Affine { base, scale, shift } => {
                let (scale, shift) = (scale.clone(), shift.clone());
                Box::new(base.terms().map(move |x| &scale * x + &shift))
            }
            Generator::PointwiseSquare(base) => Box::new(base.terms().map(|x| &x * &x)),
            Generator::Negate(base) => Box::new(base.terms().map(|x| -x)),
            Generator::Interleave(a, b) => {
                Box::new(a.terms().zip(b.terms()).flat_map(|(x, y)| [x, y]))
            }
        })
    }

    /// Index from which the sequence is nondecreasing, when that follows from its structure.
    pub fn nondecreasing_from(&self) -> Option<u64> {
        monotone_from(self, true)
    }

    /// Index from which the sequence is nonincreasing, when that follows from its structure.
    pub fn nonincreasing_from(&self) -> Option<u64> {
        monotone_from(self, false)
    }
}

pub struct Terms(Box<dyn Iterator<Item = Rational> + Send>);

impl Iterator for Terms {
    type Item = Rational;

    fn next(&mut self) -> Option<Rational> {
        self.0.next()
    }
}

struct RunTerms {
    rule: RunRule,
    block: u64,
    left: u64,
    value: BigInt,
}

impl RunTerms {
    fn new(rule: RunRule) -> Self {
        RunTerms { rule, block: 0, left: rule.multiplicity.count(0), value: rule.value.value(0) }
    }
}

impl Iterator for RunTerms {
    type Item = Rational;

    fn next(&mut self) -> Option<Rational> {
        if self.left == 0 {
            self.block += 1;
            self.left = self.rule.multiplicity.count(self.block);
            self.value = match self.rule.value {
                RunValue::PowerOfTwo => &self.value << 1u32,
                RunValue::Successor => &self.value + 1,
                RunValue::Factorial => &self.value * BigInt::from(self.block + 1),
            };
        }
        self.left -= 1;
        Some(Rational::from_integer(self.value.clone()))
    }
}

fn validate(generator: &Generator) -> Result<(), SeqError> {
    match generator {
        Generator::PowerOfIndex(0) => Err(SeqError::Malformed("power exponent must be a positive integer".into())),
        Generator::Geometric(d) if *d <= rat(1) => {
            Err(SeqError::Malformed(format!("geometric ratio must exceed 1, got {}", crate::num::render_rational(d))))
        }
        Generator::ExplicitPrefix(values, _) if values.is_empty() => {
            Err(SeqError::Malformed("explicit prefix needs at least one value".into()))
        }
        _ => Ok(()),
    }
}

fn canonicalize(generator: Generator) -> Generator {
    match generator {
        Generator::Negate(base) if base.generator == Generator::Linear && base.declared_is_derived() => {
            Generator::NegLinear
        }
        other => other,
    }
}

impl SequenceSpec {
    fn declared_is_derived(&self) -> bool {
        match &self.declared {
            None => true,
            Some(p) => profile::derive(self).map(|d| &d == p).unwrap_or(false),
        }
    }
}

fn monotone_from(spec: &SequenceSpec, increasing: bool) -> Option<u64> {
    match &spec.generator {
        Generator::Constant(_) => Some(1),
        Generator::PowerOfIndex(_) | Generator::Geometric(_) | Generator::Linear | Generator::RunLength(_) => {
            increasing.then_some(1)
        }
        Generator::NegLinear => (!increasing).then_some(1),
        Generator::ExplicitPrefix(values, tail) => monotone_from(tail, increasing).map(|m| m + values.len() as u64),
        Generator::Affine { base, scale, .. } => {
            if scale.is_zero() {
                Some(1)
            } else {
                monotone_from(base, increasing == scale.is_positive())
            }
        }
        Generator::Negate(base) => monotone_from(base, !increasing),
        Generator::PointwiseSquare(base) => {
            // x -> x^2 is monotone on each half-line
            if let Some(m) = monotone_from(base, true) {
                let x = base.term(m);
                if !x.is_negative() {
                    return if increasing { Some(m) } else { None };
                }
            }
            if let Some(m) = monotone_from(base, false) {
                let x = base.term(m);
                if !x.is_positive() {
                    return if increasing { Some(m) } else { None };
                }
            }
            None
        }
        Generator::Interleave(a, b) => {
            // only constant-valued interleaves of equal constants are monotone
            match (&a.generator, &b.generator) {
                (Generator::Constant(x), Generator::Constant(y)) if x == y => Some(1),
                _ => None,
            }
        }
    }
}
