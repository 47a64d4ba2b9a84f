use std::collections::BTreeMap;

use super::above::{rescale_target, target_above_limsup, Placement};
use super::bounded::{bounded_target, oscillator};
use super::merge::merge_preserving;
use super::realizer::{accumulation_realizer, ZSet};
use super::sort::sort_increasing;
use super::two_sided::two_sided_balance;
use super::{identity, ConstructError, Negated, Rearrangement, Stream};
use crate::num::{rat, ExtendedReal, Rational};
use crate::seq::{decompose, profile, AccumulationProfile, SequenceSpec};

/// What a rearrangement should do with its running averages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Goal {
    Target(ExtendedReal),
    Oscillate,
    Realize(ZSet),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Options {
    pub placement: Placement,
}

pub trait ConstructionStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn summary(&self) -> &'static str;

    /// Cheap applicability test on the accumulation profile alone; `build` may
    /// still refuse.
    fn supports(&self, profile: &AccumulationProfile, goal: &Goal) -> bool;

    fn build(&self, spec: &SequenceSpec, goal: &Goal, opts: &Options) -> Result<Box<dyn Rearrangement>, ConstructError>;
}

fn finite_target(goal: &Goal) -> Option<&Rational> {
    match goal {
        Goal::Target(ExtendedReal::Finite(t)) => Some(t),
        _ => None,
    }
}

fn finite_bounds(p: &AccumulationProfile) -> Option<(&Rational, &Rational)> {
    Some((p.finite_acc().first()?.lo.finite()?, p.finite_acc().last()?.hi.finite()?))
}

fn wrong_goal(name: &str, goal: &Goal) -> ConstructError {
    ConstructError::Unsupported(format!("strategy `{name}` does not handle {goal:?}"))
}

struct IdentityStrategy;

impl ConstructionStrategy for IdentityStrategy {
    fn name(&self) -> &'static str {
        "identity"
    }
    fn summary(&self) -> &'static str {
        "source order, for a sequence already converging to the target"
    }
    fn supports(&self, p: &AccumulationProfile, goal: &Goal) -> bool {
        matches!(goal, Goal::Target(t) if p.is_convergent() && p.liminf() == t)
    }
    fn build(&self, spec: &SequenceSpec, _: &Goal, _: &Options) -> Result<Box<dyn Rearrangement>, ConstructError> {
        Ok(Box::new(identity(spec)))
    }
}

struct BoundedTarget;

impl ConstructionStrategy for BoundedTarget {
    fn name(&self) -> &'static str {
        "bounded-target"
    }
    fn summary(&self) -> &'static str {
        "weighted merge of the parts at the smallest and largest finite accumulation points"
    }
    fn supports(&self, p: &AccumulationProfile, goal: &Goal) -> bool {
        match (finite_target(goal), finite_bounds(p)) {
            (Some(t), Some((lo, hi))) => lo <= t && t <= hi,
            _ => false,
        }
    }
    fn build(&self, spec: &SequenceSpec, goal: &Goal, _: &Options) -> Result<Box<dyn Rearrangement>, ConstructError> {
        bounded_target(spec, finite_target(goal).ok_or_else(|| wrong_goal(self.name(), goal))?)
    }
}

struct AccumulationPoint;

impl ConstructionStrategy for AccumulationPoint {
    fn name(&self) -> &'static str {
        "accumulation-point"
    }
    fn summary(&self) -> &'static str {
        "the part converging to the target, with everything else merged in"
    }
    fn supports(&self, p: &AccumulationProfile, goal: &Goal) -> bool {
        match goal {
            Goal::Target(t) => p.all_intervals().iter().any(|iv| iv.is_point() && iv.contains(t)),
            _ => false,
        }
    }
    fn build(&self, spec: &SequenceSpec, goal: &Goal, _: &Options) -> Result<Box<dyn Rearrangement>, ConstructError> {
        let Goal::Target(t) = goal else { return Err(wrong_goal(self.name(), goal)) };
        let p = profile(spec)?;
        let d = decompose(spec, &p)?;
        let part = d.group(t).ok_or_else(|| ConstructError::Unsupported(format!("no part converging to {t}")))?;
        let core = Box::new(Stream(part.terms()));
        let rest = d.rest(std::slice::from_ref(t));
        if rest.is_empty() {
            return Ok(core);
        }
        Ok(Box::new(merge_preserving(core, Some(t.clone()), Box::new(rest.terms()))?))
    }
}

struct Sorted;

impl ConstructionStrategy for Sorted {
    fn name(&self) -> &'static str {
        "sorted"
    }
    fn summary(&self) -> &'static str {
        "nondecreasing order, for a sequence tending to +inf"
    }
    fn supports(&self, p: &AccumulationProfile, goal: &Goal) -> bool {
        *goal == Goal::Target(ExtendedReal::PosInf) && p.liminf() == &ExtendedReal::PosInf
    }
    fn build(&self, spec: &SequenceSpec, _: &Goal, _: &Options) -> Result<Box<dyn Rearrangement>, ConstructError> {
        Ok(Box::new(sort_increasing(spec)?))
    }
}

struct AboveLimsup;

impl ConstructionStrategy for AboveLimsup {
    fn name(&self) -> &'static str {
        "above-limsup"
    }
    fn summary(&self) -> &'static str {
        "balanced large elements placed among the top convergent part"
    }
    fn supports(&self, p: &AccumulationProfile, goal: &Goal) -> bool {
        match (finite_target(goal), finite_bounds(p)) {
            (Some(t), Some((_, hi))) => p.has_pos_inf() && t > hi,
            _ => false,
        }
    }
    fn build(&self, spec: &SequenceSpec, goal: &Goal, opts: &Options) -> Result<Box<dyn Rearrangement>, ConstructError> {
        target_above_limsup(spec, finite_target(goal).ok_or_else(|| wrong_goal(self.name(), goal))?, opts.placement)
    }
}

struct BelowLiminf;

impl ConstructionStrategy for BelowLiminf {
    fn name(&self) -> &'static str {
        "below-liminf"
    }
    fn summary(&self) -> &'static str {
        "mirror image of above-limsup"
    }
    fn supports(&self, p: &AccumulationProfile, goal: &Goal) -> bool {
        match (finite_target(goal), finite_bounds(p)) {
            (Some(t), Some((lo, _))) => p.has_neg_inf() && t < lo,
            _ => false,
        }
    }
    fn build(&self, spec: &SequenceSpec, goal: &Goal, opts: &Options) -> Result<Box<dyn Rearrangement>, ConstructError> {
        let t = finite_target(goal).ok_or_else(|| wrong_goal(self.name(), goal))?;
        let mirrored = target_above_limsup(&SequenceSpec::negate(spec.clone()), &-t, opts.placement)?;
        Ok(Box::new(Negated(mirrored)))
    }
}

struct RescaleStrategy;

impl ConstructionStrategy for RescaleStrategy {
    fn name(&self) -> &'static str {
        "rescale"
    }
    fn summary(&self) -> &'static str {
        "above-limsup at a+1, then thinning or padding of the part converging to a"
    }
    fn supports(&self, p: &AccumulationProfile, goal: &Goal) -> bool {
        match (finite_target(goal), p.finite_acc()) {
            (Some(t), [only]) => only.is_point() && p.has_pos_inf() && only.lo.finite().is_some_and(|a| t > a),
            _ => false,
        }
    }
    fn build(&self, spec: &SequenceSpec, goal: &Goal, opts: &Options) -> Result<Box<dyn Rearrangement>, ConstructError> {
        let l = finite_target(goal).ok_or_else(|| wrong_goal(self.name(), goal))?;
        let p = profile(spec)?;
        let a = match p.finite_acc() {
            [only] if only.is_point() => only.lo.finite().cloned(),
            _ => None,
        }
        .ok_or_else(|| ConstructError::Unsupported(format!("needs exactly one finite accumulation point, got {p}")))?;
        let base_target = &a + rat(1);
        let base = target_above_limsup(spec, &base_target, opts.placement)?;
        let zeros = decompose(spec, &p)?.group(&a.clone().into()).cloned().expect("point of the profile");
        rescale_target(base, Box::new(move |i| zeros.contains(i)), &a, &base_target, l)
            .map(|r| Box::new(r) as Box<dyn Rearrangement>)
    }
}

struct TwoSided;

impl ConstructionStrategy for TwoSided {
    fn name(&self) -> &'static str {
        "two-sided"
    }
    fn summary(&self) -> &'static str {
        "greedy alternation between sparse parts tending to -inf and +inf"
    }
    fn supports(&self, p: &AccumulationProfile, goal: &Goal) -> bool {
        finite_target(goal).is_some() && p.has_neg_inf() && p.has_pos_inf()
    }
    fn build(&self, spec: &SequenceSpec, goal: &Goal, _: &Options) -> Result<Box<dyn Rearrangement>, ConstructError> {
        two_sided_balance(spec, finite_target(goal).ok_or_else(|| wrong_goal(self.name(), goal))?)
    }
}

struct OscillatorStrategy;

impl ConstructionStrategy for OscillatorStrategy {
    fn name(&self) -> &'static str {
        "oscillator"
    }
    fn summary(&self) -> &'static str {
        "averages crossing the inner thirds of [liminf, limsup] forever"
    }
    fn supports(&self, p: &AccumulationProfile, goal: &Goal) -> bool {
        *goal == Goal::Oscillate && !p.has_neg_inf() && !p.has_pos_inf() && !p.is_convergent()
    }
    fn build(&self, spec: &SequenceSpec, _: &Goal, _: &Options) -> Result<Box<dyn Rearrangement>, ConstructError> {
        Ok(Box::new(oscillator(spec)?))
    }
}

struct RealizerStrategy;

impl ConstructionStrategy for RealizerStrategy {
    fn name(&self) -> &'static str {
        "realizer"
    }
    fn summary(&self) -> &'static str {
        "averages accumulating exactly at a closed set Z, with a tube schedule"
    }
    fn supports(&self, p: &AccumulationProfile, goal: &Goal) -> bool {
        matches!(goal, Goal::Realize(_)) && p.has_neg_inf() && p.has_pos_inf()
    }
    fn build(&self, spec: &SequenceSpec, goal: &Goal, _: &Options) -> Result<Box<dyn Rearrangement>, ConstructError> {
        let Goal::Realize(z) = goal else { return Err(wrong_goal(self.name(), goal)) };
        Ok(Box::new(accumulation_realizer(spec, z)?))
    }
}

/// Named construction strategies, tried in registration order when none is named.
pub struct Registry {
    by_name: BTreeMap<&'static str, Box<dyn ConstructionStrategy>>,
    order: Vec<&'static str>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry::empty();
        r.register(Box::new(IdentityStrategy));
        r.register(Box::new(BoundedTarget));
        r.register(Box::new(AccumulationPoint));
        r.register(Box::new(Sorted));
        r.register(Box::new(AboveLimsup));
        r.register(Box::new(BelowLiminf));
        r.register(Box::new(TwoSided));
        r.register(Box::new(OscillatorStrategy));
        r.register(Box::new(RealizerStrategy));
        r.register(Box::new(RescaleStrategy));
        r
    }
}

impl Registry {
    pub fn empty() -> Self {
        Registry { by_name: BTreeMap::new(), order: Vec::new() }
    }

    /// Replaces any strategy registered under the same name.
    pub fn register(&mut self, s: Box<dyn ConstructionStrategy>) {
        let name = s.name();
        if self.by_name.insert(name, s).is_none() {
            self.order.push(name);
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.order.iter().copied()
    }

    pub fn get(&self, name: &str) -> Result<&dyn ConstructionStrategy, ConstructError> {
        self.by_name.get(name).map(|s| s.as_ref()).ok_or_else(|| ConstructError::UnknownStrategy(name.to_string()))
    }

    /// Strategies whose `supports` accepts the profile and goal, in preference order.
    pub fn candidates(&self, p: &AccumulationProfile, goal: &Goal) -> Vec<&dyn ConstructionStrategy> {
        self.order.iter().map(|n| self.by_name[n].as_ref()).filter(|s| s.supports(p, goal)).collect()
    }

    /// Builds with the named strategy, or with the first candidate that succeeds.
    pub fn build(
        &self,
        spec: &SequenceSpec,
        goal: &Goal,
        name: Option<&str>,
        opts: &Options,
    ) -> Result<(&'static str, Box<dyn Rearrangement>), ConstructError> {
        if let Some(name) = name {
            let s = self.get(name)?;
            return s.build(spec, goal, opts).map(|r| (s.name(), r));
        }
        let p = profile(spec)?;
        let mut last = None;
        for s in self.candidates(&p, goal) {
            match s.build(spec, goal, opts) {
                Ok(r) => return Ok((s.name(), r)),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| {
            let what = match goal {
                Goal::Target(t) => format!("target {t}"),
                Goal::Oscillate => "oscillation".into(),
                Goal::Realize(z) => format!("accumulation set {z}"),
            };
            ConstructError::Unsupported(format!("no strategy reaches {what} for {p}"))
        }))
    }
}
