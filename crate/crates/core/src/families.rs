//! Computable measure families and small building blocks.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use dashu_ratio::RBig;

use crate::alphabet::{Alphabet, Str, Symbol};
use crate::error::{Error, Result};
use crate::measure::{Semimeasure, SharedSemimeasure};
use crate::prob::{int, powi, ratio, sum, ExactProb, Rational};
use crate::real::{Precision, Real};

fn product_eval(x: &[Symbol], cond: impl Fn(usize, Symbol) -> Rational) -> Rational {
    let mut v = RBig::ONE;
    for (k, &a) in x.iter().enumerate() {
        if v == RBig::ZERO {
            break;
        }
        v *= cond(k, a);
    }
    v
}

/// i.i.d. measure with per-symbol probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Iid {
    alphabet: Alphabet,
    probs: Vec<Rational>,
}

impl Iid {
    pub fn new(alphabet: Alphabet, probs: Vec<Rational>) -> Result<Self> {
        if probs.len() != alphabet.size() {
            return Err(Error::AlphabetMismatch { expected: alphabet.size(), found: probs.len() });
        }
        for p in &probs {
            ExactProb::new(p.clone())?;
        }
        let total = sum(probs.iter().cloned());
        if total != RBig::ONE {
            return Err(Error::InvalidParameter(alloc::format!("probabilities sum to {total}")));
        }
        Ok(Iid { alphabet, probs })
    }

    /// Binary i.i.d. measure with `P(1) = p`.
    pub fn bernoulli(p: &ExactProb) -> Self {
        Iid { alphabet: Alphabet::BINARY, probs: alloc::vec![p.complement().into_inner(), p.value().clone()] }
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }
}

impl Semimeasure for Iid {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn eval(&self, x: &[Symbol]) -> Rational {
        if self.alphabet.validate(x).is_err() {
            return RBig::ZERO;
        }
        product_eval(x, |_, a| self.probs[a as usize].clone())
    }

    fn eval_children_from(&self, _x: &[Symbol], vx: &Rational) -> Vec<Rational> {
        self.probs.iter().map(|p| vx * p).collect()
    }

    fn is_exact_measure(&self) -> bool {
        true
    }

    fn is_exchangeable(&self) -> bool {
        true
    }

    fn level_mass(&self, _n: usize) -> Option<Rational> {
        Some(RBig::ONE)
    }

    fn mass_below(&self, x: &[Symbol], _depth: usize) -> Option<Rational> {
        Some(self.eval(x))
    }
}

/// The uniform measure `λ(x) = N^{-ℓ(x)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Uniform {
    alphabet: Alphabet,
    inv: Rational,
}

impl Uniform {
    pub fn new(alphabet: Alphabet) -> Self {
        Uniform { alphabet, inv: ratio(1, alphabet.size() as u64) }
    }

    pub fn shared(alphabet: Alphabet) -> SharedSemimeasure {
        Arc::new(Self::new(alphabet))
    }
}

impl Semimeasure for Uniform {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn eval(&self, x: &[Symbol]) -> Rational {
        if self.alphabet.validate(x).is_err() {
            return RBig::ZERO;
        }
        powi(&self.inv, x.len())
    }

    fn eval_children_from(&self, _x: &[Symbol], vx: &Rational) -> Vec<Rational> {
        alloc::vec![vx * &self.inv; self.alphabet.size()]
    }

    fn is_exact_measure(&self) -> bool {
        true
    }

    fn is_exchangeable(&self) -> bool {
        true
    }

    fn level_mass(&self, _n: usize) -> Option<Rational> {
        Some(RBig::ONE)
    }

    fn mass_below(&self, x: &[Symbol], _depth: usize) -> Option<Rational> {
        Some(self.eval(x))
    }
}

/// Binary measure with `μ(1|x_{<n}) = ½ n^{-3}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Poly3;

impl Poly3 {
    /// `μ(1|x)` for `ℓ(x) = n - 1`.
    pub fn one_prob(n: usize) -> Rational {
        let n = n as u64;
        ratio(1, 2 * n * n * n)
    }

    fn cond(k: usize, a: Symbol) -> Rational {
        let p1 = Self::one_prob(k + 1);
        if a == 1 {
            p1
        } else {
            RBig::ONE - p1
        }
    }

    /// `Π_{t=1}^n (1 - ½ t^{-3})`, the probability of `0^n`.
    pub fn partial_product(n: usize, prec: Precision) -> Real {
        let mut acc = prec.one();
        let half = prec.rational(&ratio(1, 2));
        for t in 1..=n {
            let t = prec.int(t as i64);
            acc = &acc * &(prec.one() - &half / &(&t * &(&t * &t)));
        }
        acc
    }
}

impl Semimeasure for Poly3 {
    fn alphabet(&self) -> Alphabet {
        Alphabet::BINARY
    }

    fn eval(&self, x: &[Symbol]) -> Rational {
        if Alphabet::BINARY.validate(x).is_err() {
            return RBig::ZERO;
        }
        product_eval(x, Self::cond)
    }

    fn eval_children_from(&self, x: &[Symbol], vx: &Rational) -> Vec<Rational> {
        alloc::vec![vx * Self::cond(x.len(), 0), vx * Self::cond(x.len(), 1)]
    }

    fn is_exact_measure(&self) -> bool {
        true
    }

    fn level_mass(&self, _n: usize) -> Option<Rational> {
        Some(RBig::ONE)
    }

    fn mass_below(&self, x: &[Symbol], _depth: usize) -> Option<Rational> {
        Some(self.eval(x))
    }
}

/// A total infinite sequence, indexed from 0.
pub trait SequenceGenerator: Send + Sync {
    fn symbol(&self, n: usize) -> Symbol;
}

/// `pattern` repeated forever.
#[derive(Clone, Debug, PartialEq)]
pub struct Periodic(Vec<Symbol>);

impl Periodic {
    pub fn new(pattern: Vec<Symbol>) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::InvalidParameter("empty period".into()));
        }
        Ok(Periodic(pattern))
    }
}

impl SequenceGenerator for Periodic {
    fn symbol(&self, n: usize) -> Symbol {
        self.0[n % self.0.len()]
    }
}

/// A finite head followed by a constant tail.
#[derive(Clone, Debug, PartialEq)]
pub struct EventuallyConstant {
    pub head: Vec<Symbol>,
    pub tail: Symbol,
}

impl SequenceGenerator for EventuallyConstant {
    fn symbol(&self, n: usize) -> Symbol {
        self.head.get(n).copied().unwrap_or(self.tail)
    }
}

/// The measure concentrated on one infinite sequence.
#[derive(Clone)]
pub struct Deterministic {
    alphabet: Alphabet,
    generator: Arc<dyn SequenceGenerator>,
}

impl Deterministic {
    pub fn new(alphabet: Alphabet, generator: Arc<dyn SequenceGenerator>) -> Self {
        Deterministic { alphabet, generator }
    }

    pub fn symbol(&self, n: usize) -> Symbol {
        self.generator.symbol(n)
    }

    pub fn prefix(&self, n: usize) -> Str {
        (0..n).map(|k| self.generator.symbol(k)).collect()
    }
}

impl Semimeasure for Deterministic {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn eval(&self, x: &[Symbol]) -> Rational {
        if x.iter().enumerate().all(|(k, &a)| self.generator.symbol(k) == a) {
            RBig::ONE
        } else {
            RBig::ZERO
        }
    }

    fn eval_children_from(&self, x: &[Symbol], vx: &Rational) -> Vec<Rational> {
        let next = self.generator.symbol(x.len());
        self.alphabet
            .symbols()
            .map(|a| if a == next { vx.clone() } else { RBig::ZERO })
            .collect()
    }

    fn is_exact_measure(&self) -> bool {
        true
    }

    fn level_mass(&self, _n: usize) -> Option<Rational> {
        Some(RBig::ONE)
    }

    fn mass_below(&self, x: &[Symbol], _depth: usize) -> Option<Rational> {
        Some(self.eval(x))
    }
}

/// `c·ν` for a constant `c ∈ [0, 1]`.
#[derive(Clone)]
pub struct Scaled {
    factor: ExactProb,
    inner: SharedSemimeasure,
}

impl Scaled {
    pub fn new(factor: ExactProb, inner: SharedSemimeasure) -> Self {
        Scaled { factor, inner }
    }
}

impl Semimeasure for Scaled {
    fn alphabet(&self) -> Alphabet {
        self.inner.alphabet()
    }

    fn eval(&self, x: &[Symbol]) -> Rational {
        self.factor.value() * self.inner.eval(x)
    }

    fn eval_children(&self, x: &[Symbol]) -> Vec<Rational> {
        self.inner.eval_children(x).into_iter().map(|c| self.factor.value() * c).collect()
    }

    fn is_exact_measure(&self) -> bool {
        self.inner.is_exact_measure() && *self.factor.value() == RBig::ONE
    }

    fn is_additive(&self) -> bool {
        self.inner.is_additive()
    }

    fn is_exchangeable(&self) -> bool {
        self.inner.is_exchangeable()
    }

    fn level_mass(&self, n: usize) -> Option<Rational> {
        Some(self.factor.value() * self.inner.level_mass(n)?)
    }

    fn mass_below(&self, x: &[Symbol], depth: usize) -> Option<Rational> {
        Some(self.factor.value() * self.inner.mass_below(x, depth)?)
    }
}

/// `c·ν(x)` for `ℓ(x) <= cutoff` and 0 below. With a measure `ν` and
/// `1 - 1/cutoff < c <= 1` this is a quasimeasure with that cutoff.
#[derive(Clone)]
pub struct Truncated {
    scale: ExactProb,
    cutoff: usize,
    inner: SharedSemimeasure,
}

impl Truncated {
    pub fn new(scale: ExactProb, cutoff: usize, inner: SharedSemimeasure) -> Self {
        Truncated { scale, cutoff, inner }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }
}

impl Semimeasure for Truncated {
    fn alphabet(&self) -> Alphabet {
        self.inner.alphabet()
    }

    fn eval(&self, x: &[Symbol]) -> Rational {
        if x.len() > self.cutoff {
            RBig::ZERO
        } else {
            self.scale.value() * self.inner.eval(x)
        }
    }

    fn eval_children(&self, x: &[Symbol]) -> Vec<Rational> {
        if x.len() >= self.cutoff {
            return alloc::vec![RBig::ZERO; self.alphabet().size()];
        }
        self.inner.eval_children(x).into_iter().map(|c| self.scale.value() * c).collect()
    }

    fn is_exchangeable(&self) -> bool {
        self.inner.is_exchangeable()
    }

    fn level_mass(&self, n: usize) -> Option<Rational> {
        if n > self.cutoff {
            Some(RBig::ZERO)
        } else {
            Some(self.scale.value() * self.inner.level_mass(n)?)
        }
    }

    fn mass_below(&self, x: &[Symbol], depth: usize) -> Option<Rational> {
        if depth > self.cutoff {
            Some(RBig::ZERO)
        } else {
            Some(self.scale.value() * self.inner.mass_below(x, depth)?)
        }
    }
}

/// Explicit finite table; strings not listed map to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    alphabet: Alphabet,
    values: BTreeMap<Str, Rational>,
}

impl Table {
    pub fn new(alphabet: Alphabet) -> Self {
        Table { alphabet, values: BTreeMap::new() }
    }

    pub fn set(&mut self, x: &[Symbol], v: Rational) {
        self.values.insert(Str::from(x), v);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Semimeasure for Table {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn eval(&self, x: &[Symbol]) -> Rational {
        self.values.get(&Str::from(x)).cloned().unwrap_or(RBig::ZERO)
    }
}

pub fn family_uniform(alphabet: Alphabet) -> Uniform {
    Uniform::new(alphabet)
}

pub fn family_bernoulli(p: &ExactProb) -> Iid {
    Iid::bernoulli(p)
}

pub fn family_poly3() -> Poly3 {
    Poly3
}

pub fn family_deterministic(alphabet: Alphabet, generator: Arc<dyn SequenceGenerator>) -> Deterministic {
    Deterministic::new(alphabet, generator)
}

/// `½ λ` on the binary alphabet, the standard strict semimeasure.
pub fn half_uniform() -> Scaled {
    Scaled::new(ExactProb::ratio(1, 2).unwrap(), Uniform::shared(Alphabet::BINARY))
}

/// Exact partial products `Π_{t=1}^n (1 - ½ t^{-3})` for `n = 0..=max`.
pub fn poly3_exact_partials(max: usize) -> Vec<Rational> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = int(1);
    out.push(acc.clone());
    for t in 1..=max {
        acc *= RBig::ONE - Poly3::one_prob(t);
        out.push(acc.clone());
    }
    out
}
