//! The semimeasure abstraction, predictive conditionals and the exhaustive
//! superadditivity checker.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;

use dashu_ratio::RBig;

use crate::alphabet::{Alphabet, Budget, Str, Symbol};
use crate::error::{Error, Result};
use crate::prob::{sum, Rational};
use crate::real::{Precision, Real};

/// Values along a path `x`: `prefix[k] = ν(x_{1:k})` for `k = 0..=n` and
/// `children[k][a] = ν(x_{1:k} a)` for `k = 0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathProfile {
    pub prefix: Vec<Rational>,
    pub children: Vec<Vec<Rational>>,
}

impl PathProfile {
    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    /// Predictive vector `ν(·|x_{1:k})`, or `None` where `ν(x_{1:k}) = 0`.
    pub fn predictive(&self, k: usize) -> Option<Vec<Rational>> {
        let d = &self.prefix[k];
        if *d == RBig::ZERO {
            return None;
        }
        Some(self.children[k].iter().map(|c| c / d).collect())
    }
}

/// A map from strings to `[0, 1]` with `ν(x) >= Σ_a ν(xa)` and `ν(ε) <= 1`.
///
/// Only `alphabet` and `eval` are required. The remaining methods are
/// accelerations and structural hints; the defaults are always correct.
pub trait Semimeasure: Send + Sync {
    fn alphabet(&self) -> Alphabet;

    fn eval(&self, x: &[Symbol]) -> Rational;

    fn eval_children(&self, x: &[Symbol]) -> Vec<Rational> {
        let mut y = x.to_vec();
        self.alphabet()
            .symbols()
            .map(|a| {
                y.push(a);
                let v = self.eval(&y);
                y.pop();
                v
            })
            .collect()
    }

    /// Children of `x` given the already known value `vx = ν(x)`.
    fn eval_children_from(&self, x: &[Symbol], vx: &Rational) -> Vec<Rational> {
        let _ = vx;
        self.eval_children(x)
    }

    fn path_profile(&self, x: &[Symbol]) -> PathProfile {
        let mut prefix = Vec::with_capacity(x.len() + 1);
        let mut children = Vec::with_capacity(x.len());
        prefix.push(self.eval(&[]));
        for k in 0..x.len() {
            let ch = self.eval_children_from(&x[..k], &prefix[k]);
            prefix.push(ch[x[k] as usize].clone());
            children.push(ch);
        }
        PathProfile { prefix, children }
    }

    /// True when the object is a probability measure by construction.
    fn is_exact_measure(&self) -> bool {
        false
    }

    /// True when `ν(x) = Σ_a ν(xa)` holds everywhere by construction.
    fn is_additive(&self) -> bool {
        self.is_exact_measure()
    }

    /// True when `ν(x)` depends only on the symbol counts of `x`.
    fn is_exchangeable(&self) -> bool {
        false
    }

    /// Closed form for `Σ_{x ∈ X^n} ν(x)`.
    fn level_mass(&self, n: usize) -> Option<Rational> {
        let _ = n;
        None
    }

    /// Closed form for `Σ_{y ∈ X^{depth-ℓ(x)}} ν(xy)` with `depth >= ℓ(x)`.
    fn mass_below(&self, x: &[Symbol], depth: usize) -> Option<Rational> {
        let _ = (x, depth);
        None
    }
}

macro_rules! forward_semimeasure {
    ($($ty:ty),*) => {$(
        impl<T: Semimeasure + ?Sized> Semimeasure for $ty {
            fn alphabet(&self) -> Alphabet { (**self).alphabet() }
            fn eval(&self, x: &[Symbol]) -> Rational { (**self).eval(x) }
            fn eval_children(&self, x: &[Symbol]) -> Vec<Rational> { (**self).eval_children(x) }
            fn eval_children_from(&self, x: &[Symbol], vx: &Rational) -> Vec<Rational> {
                (**self).eval_children_from(x, vx)
            }
            fn path_profile(&self, x: &[Symbol]) -> PathProfile { (**self).path_profile(x) }
            fn is_exact_measure(&self) -> bool { (**self).is_exact_measure() }
            fn is_additive(&self) -> bool { (**self).is_additive() }
            fn is_exchangeable(&self) -> bool { (**self).is_exchangeable() }
            fn level_mass(&self, n: usize) -> Option<Rational> { (**self).level_mass(n) }
            fn mass_below(&self, x: &[Symbol], depth: usize) -> Option<Rational> {
                (**self).mass_below(x, depth)
            }
        }
    )*};
}

forward_semimeasure!(&T, Arc<T>, Box<T>);

pub type SharedSemimeasure = Arc<dyn Semimeasure>;

/// `ν(a|x) = ν(xa)/ν(x)`.
pub fn conditional<S: Semimeasure + ?Sized>(nu: &S, x: &[Symbol], a: Symbol) -> Result<Rational> {
    nu.alphabet().validate(x)?;
    nu.alphabet().validate(&[a])?;
    let vx = nu.eval(x);
    if vx == RBig::ZERO {
        return Err(Error::ZeroConditioning { prefix: Str::from(x) });
    }
    let mut y = x.to_vec();
    y.push(a);
    Ok(nu.eval(&y) / vx)
}

/// `ν(x)`.
pub fn joint<S: Semimeasure + ?Sized>(nu: &S, x: &[Symbol]) -> Result<Rational> {
    nu.alphabet().validate(x)?;
    Ok(nu.eval(x))
}

/// The exact predictive vector `ν(·|x)`.
pub fn predictive<S: Semimeasure + ?Sized>(nu: &S, x: &[Symbol]) -> Result<Vec<Rational>> {
    nu.alphabet().validate(x)?;
    let vx = nu.eval(x);
    if vx == RBig::ZERO {
        return Err(Error::ZeroConditioning { prefix: Str::from(x) });
    }
    Ok(nu.eval_children_from(x, &vx).iter().map(|c| c / &vx).collect())
}

/// The predictive vector at working precision.
pub fn predictive_real<S: Semimeasure + ?Sized>(
    nu: &S,
    x: &[Symbol],
    prec: Precision,
) -> Result<Vec<Real>> {
    Ok(predictive(nu, x)?.iter().map(|p| prec.rational(p)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemimeasureReport {
    pub depth: usize,
    pub passed: bool,
    /// First string (in depth-first lexicographic order) where a check fails.
    pub witness: Option<Str>,
    pub root: Rational,
    /// `ν(x) = Σ_a ν(xa)` at every interior node visited.
    pub additive: bool,
    /// First node with strict inequality, if any.
    pub first_strict: Option<Str>,
    pub nodes: u128,
}

impl SemimeasureReport {
    /// Additive everywhere with `ν(ε) = 1`.
    pub fn is_measure(&self) -> bool {
        self.passed && self.additive && self.root == RBig::ONE
    }
}

/// Exhaustively checks the semimeasure inequalities on all strings of length
/// `< depth` (and the values of all strings of length `<= depth`).
pub fn verify_semimeasure<S: Semimeasure + ?Sized>(
    nu: &S,
    depth: usize,
    budget: Budget,
) -> Result<SemimeasureReport> {
    budget.check_level(nu.alphabet(), depth)?;
    let root = nu.eval(&[]);
    let mut report = SemimeasureReport {
        depth,
        passed: true,
        witness: None,
        root: root.clone(),
        additive: true,
        first_strict: None,
        nodes: 1,
    };
    if root > RBig::ONE || root < RBig::ZERO {
        report.passed = false;
        report.witness = Some(Str::empty());
        return Ok(report);
    }
    let mut x = Vec::with_capacity(depth);
    walk(nu, &mut x, &root, depth, &mut report);
    Ok(report)
}

fn walk<S: Semimeasure + ?Sized>(
    nu: &S,
    x: &mut Vec<Symbol>,
    vx: &Rational,
    depth: usize,
    report: &mut SemimeasureReport,
) {
    if x.len() >= depth || !report.passed {
        return;
    }
    let children = nu.eval_children_from(x, vx);
    report.nodes += children.len() as u128;
    let mut sum = RBig::ZERO;
    for c in &children {
        if *c < RBig::ZERO {
            report.passed = false;
            report.witness = Some(Str::from(&x[..]));
            return;
        }
        sum += c;
    }
    if sum > *vx {
        report.passed = false;
        report.witness = Some(Str::from(&x[..]));
        return;
    }
    if sum < *vx {
        report.additive = false;
        if report.first_strict.is_none() {
            report.first_strict = Some(Str::from(&x[..]));
        }
    }
    for (a, c) in children.iter().enumerate() {
        x.push(a as Symbol);
        walk(nu, x, c, depth, report);
        x.pop();
        if !report.passed {
            return;
        }
    }
}

/// `Σ_i w_i ν_i`.
#[derive(Clone)]
pub struct Mix {
    alphabet: Alphabet,
    parts: Vec<(Rational, SharedSemimeasure)>,
}

impl Mix {
    pub fn new(alphabet: Alphabet, parts: Vec<(Rational, SharedSemimeasure)>) -> Result<Self> {
        for (w, p) in &parts {
            alphabet.ensure_same(p.alphabet())?;
            if *w < RBig::ZERO {
                return Err(Error::InvalidParameter(alloc::format!("negative weight {w}")));
            }
        }
        Ok(Mix { alphabet, parts })
    }

    pub fn parts(&self) -> &[(Rational, SharedSemimeasure)] {
        &self.parts
    }

    pub fn total_weight(&self) -> Rational {
        sum(self.parts.iter().map(|(w, _)| w.clone()))
    }

    fn combine(&self, f: impl Fn(&dyn Semimeasure) -> Option<Rational>) -> Option<Rational> {
        let mut acc = RBig::ZERO;
        for (w, p) in &self.parts {
            acc += w * f(&**p)?;
        }
        Some(acc)
    }
}

impl Semimeasure for Mix {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn eval(&self, x: &[Symbol]) -> Rational {
        sum(self.parts.iter().map(|(w, p)| w * p.eval(x)))
    }

    fn eval_children(&self, x: &[Symbol]) -> Vec<Rational> {
        let mut acc = alloc::vec![RBig::ZERO; self.alphabet.size()];
        for (w, p) in &self.parts {
            for (s, c) in acc.iter_mut().zip(p.eval_children(x)) {
                *s += w * c;
            }
        }
        acc
    }

    fn path_profile(&self, x: &[Symbol]) -> PathProfile {
        let mut prefix = alloc::vec![RBig::ZERO; x.len() + 1];
        let mut children = alloc::vec![alloc::vec![RBig::ZERO; self.alphabet.size()]; x.len()];
        for (w, p) in &self.parts {
            let pp = p.path_profile(x);
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

    fn is_exact_measure(&self) -> bool {
        self.is_additive() && self.total_weight() == RBig::ONE
    }

    fn is_additive(&self) -> bool {
        self.parts.iter().all(|(_, p)| p.is_additive())
    }

    fn is_exchangeable(&self) -> bool {
        self.parts.iter().all(|(_, p)| p.is_exchangeable())
    }

    fn level_mass(&self, n: usize) -> Option<Rational> {
        self.combine(|p| p.level_mass(n))
    }

    fn mass_below(&self, x: &[Symbol], depth: usize) -> Option<Rational> {
        self.combine(|p| p.mass_below(x, depth))
    }
}

/// `ν(x)/ν(ε)`.
#[derive(Clone)]
pub struct Normalized {
    inner: SharedSemimeasure,
    root: Rational,
}

impl Normalized {
    pub fn new(inner: SharedSemimeasure) -> Result<Self> {
        let root = inner.eval(&[]);
        if root == RBig::ZERO {
            return Err(Error::EmptySupport { prefix: Str::empty() });
        }
        Ok(Normalized { inner, root })
    }

    pub fn normalizer(&self) -> &Rational {
        &self.root
    }
}

impl Semimeasure for Normalized {
    fn alphabet(&self) -> Alphabet {
        self.inner.alphabet()
    }

    fn eval(&self, x: &[Symbol]) -> Rational {
        self.inner.eval(x) / &self.root
    }

    fn eval_children(&self, x: &[Symbol]) -> Vec<Rational> {
        self.inner.eval_children(x).into_iter().map(|c| c / &self.root).collect()
    }

    fn path_profile(&self, x: &[Symbol]) -> PathProfile {
        let pp = self.inner.path_profile(x);
        PathProfile {
            prefix: pp.prefix.into_iter().map(|v| v / &self.root).collect(),
            children: pp
                .children
                .into_iter()
                .map(|row| row.into_iter().map(|v| v / &self.root).collect())
                .collect(),
        }
    }

    fn is_exact_measure(&self) -> bool {
        self.inner.is_additive()
    }

    fn is_exchangeable(&self) -> bool {
        self.inner.is_exchangeable()
    }

    fn level_mass(&self, n: usize) -> Option<Rational> {
        Some(self.inner.level_mass(n)? / &self.root)
    }

    fn mass_below(&self, x: &[Symbol], depth: usize) -> Option<Rational> {
        Some(self.inner.mass_below(x, depth)? / &self.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{Table, Uniform};
    use crate::prob::ratio;

    #[test]
    fn scaled_uniform_passes_as_strict_semimeasure() {
        let half = Mix::new(Alphabet::BINARY, alloc::vec![(ratio(1, 2), Uniform::shared(Alphabet::BINARY))])
            .unwrap();
        let r = verify_semimeasure(&half, 4, Budget::DEFAULT).unwrap();
        assert!(r.passed);
        assert!(r.additive);
        assert_eq!(r.root, ratio(1, 2));
        assert!(!r.is_measure());
    }

    #[test]
    fn table_violation_reports_witness() {
        let mut t = Table::new(Alphabet::BINARY);
        t.set(&[], ratio(1, 1));
        t.set(&[0], ratio(1, 2));
        t.set(&[1], ratio(1, 2));
        t.set(&[0, 0], ratio(1, 2));
        t.set(&[0, 1], ratio(1, 4));
        let r = verify_semimeasure(&t, 3, Budget::DEFAULT).unwrap();
        assert!(!r.passed);
        assert_eq!(r.witness, Some(Str::from(alloc::vec![0])));
    }

    #[test]
    fn zero_conditioning_is_an_error() {
        let t = Table::new(Alphabet::BINARY);
        assert!(matches!(conditional(&t, &[0], 1), Err(Error::ZeroConditioning { .. })));
    }

    #[test]
    fn budget_guards_the_checker() {
        let u = Uniform::new(Alphabet::BINARY);
        assert!(verify_semimeasure(&u, 21, Budget::DEFAULT).is_err());
    }

    #[test]
    fn normalization_of_mixture_is_a_measure() {
        let m = Mix::new(
            Alphabet::BINARY,
            alloc::vec![(ratio(1, 3), Uniform::shared(Alphabet::BINARY))],
        )
        .unwrap();
        let n = Normalized::new(Arc::new(m)).unwrap();
        assert!(n.is_exact_measure());
        assert!(verify_semimeasure(&n, 6, Budget::DEFAULT).unwrap().is_measure());
    }
}
