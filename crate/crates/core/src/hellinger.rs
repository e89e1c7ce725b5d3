//! Hellinger distances, the expected-sum chain, its tail and κ variants, the
//! chain lemma and the continuity bound.

use alloc::vec::Vec;

use dashu_ratio::RBig;

use crate::alphabet::{Budget, Str, Symbol};
use crate::error::{Error, Result};
use crate::measure::{PathProfile, Semimeasure};
use crate::prob::{ratio, ExactProb, Rational};
use crate::real::{Precision, Real};

/// `Σ_i (√p_i - √q_i)²`.
pub fn hellinger_distance(p: &[Real], q: &[Real]) -> Real {
    assert_eq!(p.len(), q.len(), "vectors of different length");
    p.iter().zip(q).map(|(a, b)| (a.sqrt() - b.sqrt()).square()).sum()
}

/// [`hellinger_distance`] of exact vectors at working precision.
pub fn hellinger_rational(p: &[Rational], q: &[Rational], prec: Precision) -> Real {
    let sp: Vec<Real> = p.iter().map(|v| prec.rational(v).sqrt()).collect();
    let sq: Vec<Real> = q.iter().map(|v| prec.rational(v).sqrt()).collect();
    sp.iter().zip(&sq).map(|(a, b)| (a - b).square()).fold(prec.zero(), |acc, v| acc + v)
}

/// `Σ_i √(p_i q_i)`.
pub fn bhattacharyya(p: &[Real], q: &[Real]) -> Real {
    p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum()
}

/// Predictive vectors at step `k` of a path, `None` when either prefix vanishes.
fn step_vectors(mu: &PathProfile, nu: &PathProfile, k: usize) -> Option<(Vec<Rational>, Vec<Rational>)> {
    Some((mu.predictive(k)?, nu.predictive(k)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HellingerSeries {
    /// `h_t` for `t = 1..=n`.
    pub per_step: Vec<Real>,
    /// `Σ_{s<=t} h_s`.
    pub cumulative: Vec<Real>,
}

impl HellingerSeries {
    pub fn horizon(&self) -> usize {
        self.per_step.len()
    }

    pub fn total(&self) -> Option<&Real> {
        self.cumulative.last()
    }

    /// `exp(½ Σ_{s<=t} h_s)`.
    pub fn exp_half_cumsum(&self) -> Vec<Real> {
        self.cumulative.iter().map(|c| (c * &half_of(c)).exp()).collect()
    }
}

fn half_of(like: &Real) -> Real {
    let p = Precision::new(like.precision_bits().max(Precision::MIN_BITS)).unwrap_or_default();
    p.rational(&ratio(1, 2))
}

/// `h_t(ν, μ | ω_{<t})` for `t = 1..=n`.
pub fn hellinger_series(
    mu: &dyn Semimeasure,
    nu: &dyn Semimeasure,
    omega: &[Symbol],
    n: usize,
    prec: Precision,
) -> Result<HellingerSeries> {
    mu.alphabet().ensure_same(nu.alphabet())?;
    if omega.len() < n {
        return Err(Error::InvalidParameter(alloc::format!("path of length {} is shorter than {n}", omega.len())));
    }
    let path = &omega[..n];
    mu.alphabet().validate(path)?;
    let pm = mu.path_profile(path);
    let pn = nu.path_profile(path);
    let mut per_step = Vec::with_capacity(n);
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = prec.zero();
    for k in 0..n {
        let (p, q) = step_vectors(&pm, &pn, k).ok_or_else(|| Error::ZeroConditioning { prefix: Str::from(&path[..k]) })?;
        let h = hellinger_rational(&q, &p, prec);
        acc = &acc + &h;
        per_step.push(h);
        cumulative.push(acc.clone());
    }
    Ok(HellingerSeries { per_step, cumulative })
}

/// Exhaustive expectations over `X^n` under `μ` for the expected-sum chain.
#[derive(Clone, Debug)]
struct Exhaustive {
    /// Per horizon `k = 1..=n`.
    member_i: Vec<Real>,
    member_ii: Vec<Real>,
    exp_half: Vec<Real>,
    exp_kappa: Vec<Real>,
    /// `(μ(x), Σ_{t<=n} h_t(x))` for every `x ∈ X^n` with `μ(x) > 0`.
    leaves: Vec<(Rational, Real)>,
}

struct Walk<'a> {
    mu: &'a dyn Semimeasure,
    nu: &'a dyn Semimeasure,
    w: &'a Rational,
    n: usize,
    prec: Precision,
    kappa: Option<(Real, Real)>,
    half: Real,
    out: Exhaustive,
}

impl Walk<'_> {
    #[allow(clippy::too_many_arguments)]
    fn visit(
        &mut self,
        x: &mut Vec<Symbol>,
        vmu: &Rational,
        vnu: &Rational,
        s_i: &Real,
        s_h: &Real,
        s_k: &Real,
    ) -> Result<()> {
        if *vnu < self.w * vmu {
            return Err(Error::DominanceViolated { witness: Str::from(&x[..]) });
        }
        let depth = x.len();
        if depth > 0 {
            let m = self.prec.rational(vmu);
            let k = depth - 1;
            self.out.member_i[k] = &self.out.member_i[k] + &(&m * s_i);
            self.out.member_ii[k] = &self.out.member_ii[k] + &(&m * s_h);
            self.out.exp_half[k] = &self.out.exp_half[k] + &(&m * &(&self.half * s_h).exp());
            if self.kappa.is_some() {
                self.out.exp_kappa[k] = &self.out.exp_kappa[k] + &(&m * &(&self.half * s_k).exp());
            }
        }
        if depth == self.n {
            self.out.leaves.push((vmu.clone(), s_h.clone()));
            return Ok(());
        }
        let cm = self.mu.eval_children_from(x, vmu);
        let cn = self.nu.eval_children_from(x, vnu);
        let pm: Vec<Real> = cm.iter().map(|c| self.prec.rational(&(c / vmu))).collect();
        let pn: Vec<Real> = cn.iter().map(|c| self.prec.rational(&(c / vnu))).collect();
        let h = hellinger_distance(&pn, &pm);
        let s_h2 = s_h + &h;
        let s_k2 = match &self.kappa {
            Some((kap, inv)) => {
                let d: Real = pn
                    .iter()
                    .zip(&pm)
                    .map(|(q, p)| (q.powf(kap) - p.powf(kap)).abs().powf(inv))
                    .sum();
                s_k + &d
            }
            None => s_k.clone(),
        };
        for (a, c) in cm.iter().enumerate() {
            if *c == RBig::ZERO {
                continue;
            }
            let r = (&pn[a] / &pm[a]).sqrt() - self.prec.one();
            let s_i2 = s_i + &r.square();
            x.push(a as Symbol);
            self.visit(x, c, &cn[a], &s_i2, &s_h2, &s_k2)?;
            x.pop();
        }
        Ok(())
    }
}

fn exhaustive(
    mu: &dyn Semimeasure,
    nu: &dyn Semimeasure,
    w: &ExactProb,
    n: usize,
    prec: Precision,
    budget: Budget,
    kappa: Option<&Rational>,
) -> Result<Exhaustive> {
    mu.alphabet().ensure_same(nu.alphabet())?;
    budget.check_level(mu.alphabet(), n)?;
    if *w.value() == RBig::ZERO {
        return Err(Error::InvalidParameter("the dominance weight must be positive".into()));
    }
    let kappa = match kappa {
        Some(k) => {
            if *k <= RBig::ZERO || *k > ratio(1, 2) {
                return Err(Error::InvalidParameter(alloc::format!("kappa {k} is outside (0, 1/2]")));
            }
            Some((prec.rational(k), prec.rational(&(RBig::ONE / k))))
        }
        None => None,
    };
    let zeros = || alloc::vec![prec.zero(); n];
    let mut walk = Walk {
        mu,
        nu,
        w: w.value(),
        n,
        prec,
        kappa,
        half: prec.rational(&ratio(1, 2)),
        out: Exhaustive {
            member_i: zeros(),
            member_ii: zeros(),
            exp_half: zeros(),
            exp_kappa: zeros(),
            leaves: Vec::new(),
        },
    };
    let z = prec.zero();
    let (rm, rn) = (mu.eval(&[]), nu.eval(&[]));
    if rm == RBig::ZERO {
        return Err(Error::ZeroConditioning { prefix: Str::empty() });
    }
    walk.visit(&mut Vec::with_capacity(n), &rm, &rn, &z, &z, &z)?;
    Ok(walk.out)
}

/// The three members of the expected Hellinger chain at horizons `1..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub horizon: usize,
    pub precision_bits: usize,
    pub tolerance: Real,
    /// `Σ_{t<=k} E[(√(ν_t/μ_t) - 1)²]`.
    pub member_i: Vec<Real>,
    /// `Σ_{t<=k} E[h_t]`.
    pub member_ii: Vec<Real>,
    /// `2 ln E[exp(½ Σ_{t<=k} h_t)]`.
    pub member_iii: Vec<Real>,
    /// `√w E[exp(½ Σ_{t<=k} h_t)]`, at most 1.
    pub exp_form: Vec<Real>,
    /// `ln w^{-1}`.
    pub bound: Real,
    pub chain_ok: bool,
    pub exp_ok: bool,
    pub monotone_ok: bool,
    /// `1 - √w E[exp(½ Σ_{t<=n} h_t)]`.
    pub margin: Real,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.chain_ok && self.exp_ok && self.monotone_ok
    }
}

fn non_decreasing(v: &[Real], tol: &Real) -> bool {
    v.windows(2).all(|w| w[0].le_tol(&w[1], tol))
}

/// Exhaustive check of `(i) <= (ii) <= (iii) <= ln w^{-1}` and of
/// `√w E[exp(½ Σ h_t)] <= 1` at every horizon up to `n`.
pub fn verify_lemma1(
    mu: &dyn Semimeasure,
    nu: &dyn Semimeasure,
    w: &ExactProb,
    n: usize,
    prec: Precision,
    budget: Budget,
) -> Result<BoundReport> {
    let ex = exhaustive(mu, nu, w, n, prec, budget, None)?;
    Ok(bound_report(&ex, w, n, prec))
}

fn bound_report(ex: &Exhaustive, w: &ExactProb, n: usize, prec: Precision) -> BoundReport {
    let tol = prec.tolerance();
    let two = prec.int(2);
    let sqrt_w = prec.rational(w.value()).sqrt();
    let bound = prec.rational(&(RBig::ONE / w.value())).ln();
    let member_iii: Vec<Real> = ex.exp_half.iter().map(|e| &two * &e.ln()).collect();
    let exp_form: Vec<Real> = ex.exp_half.iter().map(|e| &sqrt_w * e).collect();
    let chain_ok = (0..n).all(|k| {
        ex.member_i[k].le_tol(&ex.member_ii[k], &tol)
            && ex.member_ii[k].le_tol(&member_iii[k], &tol)
            && member_iii[k].le_tol(&bound, &tol)
    });
    let one = prec.one();
    let exp_ok = exp_form.iter().all(|e| e.le_tol(&one, &tol));
    let monotone_ok =
        non_decreasing(&ex.member_i, &tol) && non_decreasing(&ex.member_ii, &tol) && non_decreasing(&member_iii, &tol);
    let margin = match exp_form.last() {
        Some(e) => &one - e,
        None => &one - &sqrt_w,
    };
    BoundReport {
        horizon: n,
        precision_bits: prec.bits(),
        tolerance: tol,
        member_i: ex.member_i.clone(),
        member_ii: ex.member_ii.clone(),
        member_iii,
        exp_form,
        bound,
        chain_ok,
        exp_ok,
        monotone_ok,
        margin,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailCheck {
    pub c: Rational,
    /// `ln w^{-1} + c`.
    pub threshold: Real,
    /// Exact `μ`-probability of `{x ∈ X^n : Σ h_t(x) >= threshold}`.
    pub probability: Rational,
    /// `e^{-c/2}`.
    pub bound: Real,
    /// Leaves within the tolerance of the threshold, counted inside the event.
    pub ambiguous: usize,
    pub passed: bool,
}

/// Exhaustive `P[Σ_{t<=n} h_t >= ln w^{-1} + c] <= e^{-c/2}` for each `c`.
#[allow(clippy::too_many_arguments)]
pub fn tail_probabilities(
    mu: &dyn Semimeasure,
    nu: &dyn Semimeasure,
    w: &ExactProb,
    n: usize,
    cs: &[Rational],
    prec: Precision,
    budget: Budget,
) -> Result<Vec<TailCheck>> {
    let ex = exhaustive(mu, nu, w, n, prec, budget, None)?;
    let tol = prec.tolerance();
    let lnw = prec.rational(&(RBig::ONE / w.value())).ln();
    let half = prec.rational(&ratio(1, 2));
    Ok(cs
        .iter()
        .map(|c| {
            let cr = prec.rational(c);
            let threshold = &lnw + &cr;
            let lower = &threshold - &tol;
            let upper = &threshold + &tol;
            let mut probability = RBig::ZERO;
            let mut ambiguous = 0;
            for (m, s) in &ex.leaves {
                if *s >= lower {
                    probability += m;
                    if *s < upper {
                        ambiguous += 1;
                    }
                }
            }
            let bound = (-(&half * &cr)).exp();
            let passed = prec.rational(&probability) <= bound;
            TailCheck { c: c.clone(), threshold, probability, bound, ambiguous, passed }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct KappaReport {
    pub kappa: Rational,
    pub horizon: usize,
    /// `w^κ E[exp(½ Σ_{t<=k} Σ_a |ν_t^κ - μ_t^κ|^{1/κ})]` for `k = 1..=n`.
    pub values: Vec<Real>,
    pub passed: bool,
}

/// Exhaustive check of `w^κ E[exp(½ Σ_t Σ_a |ν_t^κ - μ_t^κ|^{1/κ})] <= 1`.
#[allow(clippy::too_many_arguments)]
pub fn verify_kappa_bound(
    mu: &dyn Semimeasure,
    nu: &dyn Semimeasure,
    w: &ExactProb,
    kappa: &Rational,
    n: usize,
    prec: Precision,
    budget: Budget,
) -> Result<KappaReport> {
    let ex = exhaustive(mu, nu, w, n, prec, budget, Some(kappa))?;
    let wk = prec.rational(w.value()).powf(&prec.rational(kappa));
    let values: Vec<Real> = ex.exp_kappa.iter().map(|e| &wk * e).collect();
    let tol = prec.tolerance();
    let one = prec.one();
    let passed = values.iter().all(|v| v.le_tol(&one, &tol));
    Ok(KappaReport { kappa: kappa.clone(), horizon: n, values, passed })
}

/// `(1+β) h(p,r) + (1+β^{-1}) h(r,q)`.
pub fn chain_bound_pair(hpr: &Real, hrq: &Real, beta: &Real) -> Real {
    let p = Precision::new(beta.precision_bits().max(Precision::MIN_BITS)).unwrap_or_default();
    let one = p.one();
    &(&(&one + beta) * hpr) + &(&(&one + &(&one / beta)) * hrq)
}

/// `β = √(h(r,q)/h(p,r))`, minimizing [`chain_bound_pair`] to `(√h(p,r) + √h(r,q))²`.
pub fn optimal_beta(hpr: &Real, hrq: &Real) -> Option<Real> {
    if hpr.is_zero() || hrq.is_zero() {
        None
    } else {
        Some((hrq / hpr).sqrt())
    }
}

/// `3 Σ_{k=2}^m k² h(p^{k-1}, p^k)` from `distances[k-2] = h(p^{k-1}, p^k)`.
pub fn chain_bound_sequence(distances: &[Real], prec: Precision) -> Real {
    distances
        .iter()
        .enumerate()
        .map(|(j, h)| {
            let k = (j + 2) as i64;
            &prec.int(3 * k * k) * h
        })
        .fold(prec.zero(), |a, b| a + b)
}

/// Coefficients `c_k`, `k = 2..=m`, obtained by applying the pair bound to
/// the triples `(p^k, p^{k+1}, p^m)` in order with `β_k = k(k+1)`.
pub fn chain_product_coefficients(m: usize) -> Vec<Rational> {
    assert!(m >= 2);
    let beta = |j: usize| ratio((j * (j + 1)) as i64, 1);
    let mut out = Vec::with_capacity(m - 1);
    let mut prod = RBig::ONE;
    for k in 2..=m {
        if k >= 3 {
            prod *= RBig::ONE + RBig::ONE / beta(k - 2);
        }
        let c = if k < m { &prod * (RBig::ONE + beta(k - 1)) } else { prod.clone() };
        out.push(c);
    }
    out
}

/// `Σ_k c_k h(p^{k-1}, p^k)` with [`chain_product_coefficients`].
pub fn chain_product_bound(distances: &[Real], prec: Precision) -> Real {
    chain_product_coefficients(distances.len() + 1)
        .iter()
        .zip(distances)
        .map(|(c, h)| &prec.rational(c) * h)
        .fold(prec.zero(), |a, b| a + b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityBound {
    /// `h_x(μ, μ+ν)`.
    pub h: Real,
    /// `ν(x)/μ(x)`.
    pub linear: Rational,
    /// `¼ε²` with `ε = ν(x)/μ(x)`, present when `ν(xb) <= ε μ(xb)` for all `b`.
    pub quadratic: Option<Rational>,
    pub holds: bool,
}

/// `h_x(μ, μ+ν)` with its linear and, where applicable, quadratic bound.
pub fn continuity_bound(mu: &dyn Semimeasure, nu: &dyn Semimeasure, x: &[Symbol], prec: Precision) -> Result<ContinuityBound> {
    mu.alphabet().ensure_same(nu.alphabet())?;
    let vm = mu.eval(x);
    if vm == RBig::ZERO {
        return Err(Error::ZeroConditioning { prefix: Str::from(x) });
    }
    let vn = nu.eval(x);
    let cm = mu.eval_children_from(x, &vm);
    let cn = nu.eval_children_from(x, &vn);
    let rho = &vm + &vn;
    let p: Vec<Rational> = cm.iter().map(|c| c / &vm).collect();
    let q: Vec<Rational> = cm.iter().zip(&cn).map(|(a, b)| (a + b) / &rho).collect();
    let h = hellinger_rational(&p, &q, prec);
    let eps = &vn / &vm;
    let balanced = cm.iter().zip(&cn).all(|(a, b)| *b <= &eps * a);
    let quadratic = balanced.then(|| &eps * &eps * ratio(1, 4));
    let tol = prec.tolerance();
    let holds = h.le_tol(&prec.rational(&eps), &tol)
        && quadratic.as_ref().is_none_or(|qb| h.le_tol(&prec.rational(qb), &tol));
    Ok(ContinuityBound { h, linear: eps, quadratic, holds })
}
