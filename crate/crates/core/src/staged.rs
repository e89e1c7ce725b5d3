//! Enumerable semimeasures as monotone sequences of computable stages.

use alloc::sync::Arc;
use alloc::vec::Vec;

use dashu_ratio::RBig;

use crate::alphabet::{for_each_string, Alphabet, Budget, Str, Symbol};
use crate::error::{Error, Result};
use crate::families::Iid;
use crate::measure::{verify_semimeasure, Mix, PathProfile, Semimeasure, SharedSemimeasure};
use crate::prob::{dyadic_floor, powi, sum, Rational};

pub type Stage = u32;

/// Stage `t` approximations `ν^t` with `ν^t <= ν^{t+1}`, each a semimeasure.
pub trait StagedSemimeasure: Send + Sync {
    fn alphabet(&self) -> Alphabet;

    fn eval_at_stage(&self, t: Stage, x: &[Symbol]) -> Rational;

    fn eval_children_at_stage(&self, t: Stage, x: &[Symbol], vx: &Rational) -> Vec<Rational> {
        let _ = vx;
        let mut y = x.to_vec();
        self.alphabet()
            .symbols()
            .map(|a| {
                y.push(a);
                let v = self.eval_at_stage(t, &y);
                y.pop();
                v
            })
            .collect()
    }

    fn path_profile_at_stage(&self, t: Stage, x: &[Symbol]) -> PathProfile {
        let mut prefix = Vec::with_capacity(x.len() + 1);
        let mut children = Vec::with_capacity(x.len());
        prefix.push(self.eval_at_stage(t, &[]));
        for k in 0..x.len() {
            let ch = self.eval_children_at_stage(t, &x[..k], &prefix[k]);
            prefix.push(ch[x[k] as usize].clone());
            children.push(ch);
        }
        PathProfile { prefix, children }
    }

    /// Exact evaluator of the limit, when it is computable.
    fn limit(&self) -> Option<&dyn Semimeasure> {
        None
    }

    /// True when every stage equals the limit.
    fn is_stage_invariant(&self) -> bool {
        false
    }

    /// True when every stage depends only on symbol counts.
    fn is_exchangeable(&self) -> bool {
        false
    }

    /// Closed form for `Σ_{x ∈ X^n} ν^t(x)`.
    fn level_mass_at_stage(&self, t: Stage, n: usize) -> Option<Rational> {
        let _ = (t, n);
        None
    }

    /// Closed form for `Σ_{y} ν^t(xy)` over `ℓ(xy) = depth`.
    fn mass_below_at_stage(&self, t: Stage, x: &[Symbol], depth: usize) -> Option<Rational> {
        let _ = (t, x, depth);
        None
    }
}

macro_rules! forward_staged {
    ($($ty:ty),*) => {$(
        impl<T: StagedSemimeasure + ?Sized> StagedSemimeasure for $ty {
            fn alphabet(&self) -> Alphabet { (**self).alphabet() }
            fn eval_at_stage(&self, t: Stage, x: &[Symbol]) -> Rational { (**self).eval_at_stage(t, x) }
            fn eval_children_at_stage(&self, t: Stage, x: &[Symbol], vx: &Rational) -> Vec<Rational> {
                (**self).eval_children_at_stage(t, x, vx)
            }
            fn path_profile_at_stage(&self, t: Stage, x: &[Symbol]) -> PathProfile {
                (**self).path_profile_at_stage(t, x)
            }
            fn limit(&self) -> Option<&dyn Semimeasure> { (**self).limit() }
            fn is_stage_invariant(&self) -> bool { (**self).is_stage_invariant() }
            fn is_exchangeable(&self) -> bool { (**self).is_exchangeable() }
            fn level_mass_at_stage(&self, t: Stage, n: usize) -> Option<Rational> {
                (**self).level_mass_at_stage(t, n)
            }
            fn mass_below_at_stage(&self, t: Stage, x: &[Symbol], depth: usize) -> Option<Rational> {
                (**self).mass_below_at_stage(t, x, depth)
            }
        }
    )*};
}

forward_staged!(&T, Arc<T>, alloc::boxed::Box<T>);

pub type SharedStaged = Arc<dyn StagedSemimeasure>;

/// A computable semimeasure seen as a constant sequence of stages.
#[derive(Clone)]
pub struct Constant<S>(pub S);

impl<S: Semimeasure + 'static> Constant<S> {
    pub fn shared(s: S) -> SharedStaged {
        Arc::new(Constant(s))
    }
}

impl<S: Semimeasure> StagedSemimeasure for Constant<S> {
    fn alphabet(&self) -> Alphabet {
        self.0.alphabet()
    }

    fn eval_at_stage(&self, _t: Stage, x: &[Symbol]) -> Rational {
        self.0.eval(x)
    }

    fn eval_children_at_stage(&self, _t: Stage, x: &[Symbol], vx: &Rational) -> Vec<Rational> {
        self.0.eval_children_from(x, vx)
    }

    fn path_profile_at_stage(&self, _t: Stage, x: &[Symbol]) -> PathProfile {
        self.0.path_profile(x)
    }

    fn limit(&self) -> Option<&dyn Semimeasure> {
        Some(&self.0)
    }

    fn is_stage_invariant(&self) -> bool {
        true
    }

    fn is_exchangeable(&self) -> bool {
        self.0.is_exchangeable()
    }

    fn level_mass_at_stage(&self, _t: Stage, n: usize) -> Option<Rational> {
        self.0.level_mass(n)
    }

    fn mass_below_at_stage(&self, _t: Stage, x: &[Symbol], depth: usize) -> Option<Rational> {
        self.0.mass_below(x, depth)
    }
}

/// One fixed stage as a semimeasure.
#[derive(Clone)]
pub struct StageView {
    inner: SharedStaged,
    t: Stage,
}

impl StageView {
    pub fn new(inner: SharedStaged, t: Stage) -> Self {
        StageView { inner, t }
    }

    pub fn shared(inner: SharedStaged, t: Stage) -> SharedSemimeasure {
        Arc::new(Self::new(inner, t))
    }

    pub fn stage(&self) -> Stage {
        self.t
    }
}

impl Semimeasure for StageView {
    fn alphabet(&self) -> Alphabet {
        self.inner.alphabet()
    }

    fn eval(&self, x: &[Symbol]) -> Rational {
        self.inner.eval_at_stage(self.t, x)
    }

    fn eval_children_from(&self, x: &[Symbol], vx: &Rational) -> Vec<Rational> {
        self.inner.eval_children_at_stage(self.t, x, vx)
    }

    fn path_profile(&self, x: &[Symbol]) -> PathProfile {
        self.inner.path_profile_at_stage(self.t, x)
    }

    fn is_exact_measure(&self) -> bool {
        self.inner.is_stage_invariant() && self.inner.limit().is_some_and(|l| l.is_exact_measure())
    }

    fn is_exchangeable(&self) -> bool {
        self.inner.is_exchangeable()
    }

    fn level_mass(&self, n: usize) -> Option<Rational> {
        self.inner.level_mass_at_stage(self.t, n)
    }

    fn mass_below(&self, x: &[Symbol], depth: usize) -> Option<Rational> {
        self.inner.mass_below_at_stage(self.t, x, depth)
    }
}

/// The exact limit of a staged semimeasure that provides one.
#[derive(Clone)]
pub struct LimitView {
    inner: SharedStaged,
}

impl LimitView {
    pub fn new(inner: SharedStaged) -> Result<Self> {
        if inner.limit().is_none() {
            return Err(Error::NoLimitHint);
        }
        Ok(LimitView { inner })
    }

    fn lim(&self) -> &dyn Semimeasure {
        self.inner.limit().expect("checked at construction")
    }
}

impl Semimeasure for LimitView {
    fn alphabet(&self) -> Alphabet {
        self.inner.alphabet()
    }

    fn eval(&self, x: &[Symbol]) -> Rational {
        self.lim().eval(x)
    }

    fn eval_children(&self, x: &[Symbol]) -> Vec<Rational> {
        self.lim().eval_children(x)
    }

    fn eval_children_from(&self, x: &[Symbol], vx: &Rational) -> Vec<Rational> {
        self.lim().eval_children_from(x, vx)
    }

    fn path_profile(&self, x: &[Symbol]) -> PathProfile {
        self.lim().path_profile(x)
    }

    fn is_exact_measure(&self) -> bool {
        self.lim().is_exact_measure()
    }

    fn is_additive(&self) -> bool {
        self.lim().is_additive()
    }

    fn is_exchangeable(&self) -> bool {
        self.lim().is_exchangeable()
    }

    fn level_mass(&self, n: usize) -> Option<Rational> {
        self.lim().level_mass(n)
    }

    fn mass_below(&self, x: &[Symbol], depth: usize) -> Option<Rational> {
        self.lim().mass_below(x, depth)
    }
}

/// Lower approximation of an i.i.d. measure: at stage `t` every conditional
/// is rounded down to a multiple of `2^-t`.
#[derive(Clone, Debug)]
pub struct DyadicStaircase {
    target: Iid,
}

impl DyadicStaircase {
    pub fn new(target: Iid) -> Self {
        DyadicStaircase { target }
    }

    pub fn stage_probs(&self, t: Stage) -> Vec<Rational> {
        self.target.probs().iter().map(|p| dyadic_floor(p, t as usize)).collect()
    }

    fn stage_sum(&self, t: Stage) -> Rational {
        sum(self.stage_probs(t))
    }
}

impl StagedSemimeasure for DyadicStaircase {
    fn alphabet(&self) -> Alphabet {
        self.target.alphabet()
    }

    fn eval_at_stage(&self, t: Stage, x: &[Symbol]) -> Rational {
        if self.alphabet().validate(x).is_err() {
            return RBig::ZERO;
        }
        let probs = self.stage_probs(t);
        let mut counts = alloc::vec![0usize; probs.len()];
        for &a in x {
            counts[a as usize] += 1;
        }
        probs.iter().zip(counts).fold(RBig::ONE, |acc, (p, c)| acc * powi(p, c))
    }

    fn eval_children_at_stage(&self, t: Stage, _x: &[Symbol], vx: &Rational) -> Vec<Rational> {
        self.stage_probs(t).iter().map(|p| vx * p).collect()
    }

    fn limit(&self) -> Option<&dyn Semimeasure> {
        Some(&self.target)
    }

    fn is_exchangeable(&self) -> bool {
        true
    }

    fn level_mass_at_stage(&self, t: Stage, n: usize) -> Option<Rational> {
        Some(powi(&self.stage_sum(t), n))
    }

    fn mass_below_at_stage(&self, t: Stage, x: &[Symbol], depth: usize) -> Option<Rational> {
        let extra = depth.checked_sub(x.len())?;
        Some(self.eval_at_stage(t, x) * powi(&self.stage_sum(t), extra))
    }
}

/// `Σ_i w_i ν_i^t`.
#[derive(Clone)]
pub struct StagedMixture {
    alphabet: Alphabet,
    parts: Vec<(Rational, SharedStaged)>,
    limit: Option<Mix>,
}

impl StagedMixture {
    pub fn new(alphabet: Alphabet, parts: Vec<(Rational, SharedStaged)>) -> Result<Self> {
        for (w, p) in &parts {
            alphabet.ensure_same(p.alphabet())?;
            if *w < RBig::ZERO {
                return Err(Error::InvalidParameter(alloc::format!("negative weight {w}")));
            }
        }
        let limit = if parts.iter().all(|(_, p)| p.limit().is_some()) {
            let lp = parts
                .iter()
                .map(|(w, p)| Ok((w.clone(), Arc::new(LimitView::new(p.clone())?) as SharedSemimeasure)))
                .collect::<Result<Vec<_>>>()?;
            Some(Mix::new(alphabet, lp)?)
        } else {
            None
        };
        Ok(StagedMixture { alphabet, parts, limit })
    }

    pub fn parts(&self) -> &[(Rational, SharedStaged)] {
        &self.parts
    }

    pub fn total_weight(&self) -> Rational {
        sum(self.parts.iter().map(|(w, _)| w.clone()))
    }

    fn combine(&self, f: impl Fn(&dyn StagedSemimeasure) -> Option<Rational>) -> Option<Rational> {
        let mut acc = RBig::ZERO;
        for (w, p) in &self.parts {
            acc += w * f(&**p)?;
        }
        Some(acc)
    }
}

impl StagedSemimeasure for StagedMixture {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn eval_at_stage(&self, t: Stage, x: &[Symbol]) -> Rational {
        sum(self.parts.iter().map(|(w, p)| w * p.eval_at_stage(t, x)))
    }

    fn eval_children_at_stage(&self, t: Stage, x: &[Symbol], _vx: &Rational) -> Vec<Rational> {
        let mut acc = alloc::vec![RBig::ZERO; self.alphabet.size()];
        for (w, p) in &self.parts {
            let v = p.eval_at_stage(t, x);
            for (s, c) in acc.iter_mut().zip(p.eval_children_at_stage(t, x, &v)) {
                *s += w * c;
            }
        }
        acc
    }

    fn path_profile_at_stage(&self, t: Stage, x: &[Symbol]) -> PathProfile {
        let mut prefix = alloc::vec![RBig::ZERO; x.len() + 1];
        let mut children = alloc::vec![alloc::vec![RBig::ZERO; self.alphabet.size()]; x.len()];
        for (w, p) in &self.parts {
            let pp = p.path_profile_at_stage(t, x);
            for (s, v) in prefix.iter_mut().zip(&pp.prefix) {
                *s += w * v;
            }
            for (row, prow) in children.iter_mut().zip(&pp.children) {
                for (s, v) in row.iter_mut().zip(prow) {
                    *s += w * v;
                }
            }
        }
        PathProfile { prefix, children }
    }

    fn limit(&self) -> Option<&dyn Semimeasure> {
        self.limit.as_ref().map(|m| m as &dyn Semimeasure)
    }

    fn is_stage_invariant(&self) -> bool {
        self.parts.iter().all(|(_, p)| p.is_stage_invariant())
    }

    fn is_exchangeable(&self) -> bool {
        self.parts.iter().all(|(_, p)| p.is_exchangeable())
    }

    fn level_mass_at_stage(&self, t: Stage, n: usize) -> Option<Rational> {
        self.combine(|p| p.level_mass_at_stage(t, n))
    }

    fn mass_below_at_stage(&self, t: Stage, x: &[Symbol], depth: usize) -> Option<Rational> {
        self.combine(|p| p.mass_below_at_stage(t, x, depth))
    }
}

/// `max_{ℓ(x) <= depth} (limit(x) - ν^t(x))`.
pub fn stage_gap<S: StagedSemimeasure + ?Sized>(
    nu: &S,
    t: Stage,
    depth: usize,
    budget: Budget,
) -> Result<Rational> {
    let lim = nu.limit().ok_or(Error::NoLimitHint)?;
    budget.check_level(nu.alphabet(), depth)?;
    let mut gap = RBig::ZERO;
    for n in 0..=depth {
        for_each_string(nu.alphabet(), n, |x| {
            let d = lim.eval(x) - nu.eval_at_stage(t, x);
            if d > gap {
                gap = d;
            }
        });
    }
    Ok(gap)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StagedReport {
    pub passed: bool,
    /// `(stage, string)` of the first failure.
    pub witness: Option<(Stage, Str)>,
    pub reason: Option<&'static str>,
}

/// Checks the staged invariants for stages `1..=max_stage` and strings of
/// length `<= depth`: each stage a semimeasure, monotone in `t`, below the limit.
pub fn verify_staged<S: StagedSemimeasure + ?Sized>(
    nu: &S,
    max_stage: Stage,
    depth: usize,
    budget: Budget,
) -> Result<StagedReport> {
    budget.check_level(nu.alphabet(), depth)?;
    let fail = |t, x: &[Symbol], why| StagedReport { passed: false, witness: Some((t, Str::from(x))), reason: Some(why) };
    for t in 1..=max_stage {
        let view = StageRef { inner: nu, t };
        let r = verify_semimeasure(&view, depth, budget)?;
        if !r.passed {
            return Ok(fail(t, &r.witness.unwrap_or_default(), "stage is not a semimeasure"));
        }
        let mut bad: Option<(Str, &'static str)> = None;
        for n in 0..=depth {
            for_each_string(nu.alphabet(), n, |x| {
                if bad.is_some() {
                    return;
                }
                let v = nu.eval_at_stage(t, x);
                if t > 1 && nu.eval_at_stage(t - 1, x) > v {
                    bad = Some((Str::from(x), "not monotone in the stage"));
                } else if nu.limit().is_some_and(|l| l.eval(x) < v) {
                    bad = Some((Str::from(x), "stage exceeds the limit"));
                }
            });
        }
        if let Some((x, why)) = bad {
            return Ok(fail(t, &x, why));
        }
    }
    Ok(StagedReport { passed: true, witness: None, reason: None })
}

struct StageRef<'a, S: ?Sized> {
    inner: &'a S,
    t: Stage,
}

impl<S: StagedSemimeasure + ?Sized> Semimeasure for StageRef<'_, S> {
    fn alphabet(&self) -> Alphabet {
        self.inner.alphabet()
    }

    fn eval(&self, x: &[Symbol]) -> Rational {
        self.inner.eval_at_stage(self.t, x)
    }

    fn eval_children_from(&self, x: &[Symbol], vx: &Rational) -> Vec<Rational> {
        self.inner.eval_children_at_stage(self.t, x, vx)
    }
}
