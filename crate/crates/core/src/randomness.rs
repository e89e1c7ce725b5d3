//! Randomness deficiency, supermartingales and the construction turning an
//! expectation bound into a bound along individual sequences.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use dashu_ratio::RBig;

use crate::alphabet::{for_each_string, rank, Alphabet, Budget, Str, Symbol};
use crate::error::{Error, Result};
use crate::hellinger::hellinger_series;
use crate::measure::{verify_semimeasure, Semimeasure, SharedSemimeasure};
use crate::prob::{pow2, ratio, sum, Rational};
use crate::real::{Precision, Real};
use crate::staged::{Stage, StageView, StagedSemimeasure};

/// A function on binary strings with `m(x) >= ½[m(x0) + m(x1)]`.
pub trait Supermartingale {
    fn eval(&self, x: &[Symbol]) -> Rational;

    /// True when `m` is known to vanish on every extension of `x`.
    fn vanishes_below(&self, x: &[Symbol]) -> bool {
        let _ = x;
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupermartingaleReport {
    pub passed: bool,
    pub witness: Option<Str>,
    pub nodes: u128,
}

/// Exhaustive check of the supermartingale inequality on strings of length
/// `< depth`. Subtrees certified to vanish are skipped.
pub fn is_supermartingale<M: Supermartingale + ?Sized>(m: &M, depth: usize, budget: Budget) -> Result<SupermartingaleReport> {
    let mut rep = SupermartingaleReport { passed: true, witness: None, nodes: 0 };
    let mut x = Vec::with_capacity(depth);
    let root = m.eval(&[]);
    sm_walk(m, &mut x, root, depth, budget, &mut rep)?;
    Ok(rep)
}

fn sm_walk<M: Supermartingale + ?Sized>(
    m: &M,
    x: &mut Vec<Symbol>,
    vx: Rational,
    depth: usize,
    budget: Budget,
    rep: &mut SupermartingaleReport,
) -> Result<()> {
    rep.nodes += 1;
    if rep.nodes > budget.max_strings {
        return Err(Error::BudgetExceeded { requested: rep.nodes, cap: budget.max_strings });
    }
    if vx < RBig::ZERO {
        rep.passed = false;
        rep.witness = Some(Str::from(&x[..]));
        return Ok(());
    }
    if x.len() >= depth || (vx == RBig::ZERO && m.vanishes_below(x)) {
        return Ok(());
    }
    x.push(0);
    let a = m.eval(x);
    x.pop();
    x.push(1);
    let b = m.eval(x);
    x.pop();
    if (&a + &b) * ratio(1, 2) > vx {
        rep.passed = false;
        rep.witness = Some(Str::from(&x[..]));
        return Ok(());
    }
    for (s, v) in [(0, a), (1, b)] {
        x.push(s);
        sm_walk(m, x, v, depth, budget, rep)?;
        x.pop();
        if !rep.passed {
            break;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeficiencyTrace {
    /// Name of the reference mixture.
    pub mixture: String,
    pub stage: Stage,
    /// `M^t(ω_{1:n})/μ(ω_{1:n})` for `n = 1..=horizon`.
    pub ratios: Vec<Rational>,
    /// `log₂` of [`Self::ratios`].
    pub per_n: Vec<Real>,
    /// Running supremum of [`Self::per_n`].
    pub sup_so_far: Vec<Real>,
}

impl DeficiencyTrace {
    pub fn horizon(&self) -> usize {
        self.per_n.len()
    }

    /// Supremum of the log-ratio up to the horizon, a lower bound on `d_μ(ω)`.
    pub fn deficiency(&self) -> Option<&Real> {
        self.sup_so_far.last()
    }

    /// Largest exact ratio seen.
    pub fn max_ratio(&self) -> Option<&Rational> {
        self.ratios.iter().max()
    }

    /// `sup_n M(ω_{1:n})/μ(ω_{1:n}) <= c` up to the horizon, decided exactly.
    pub fn random_at(&self, c: &Rational) -> bool {
        self.max_ratio().is_none_or(|r| r <= c)
    }
}

/// `log₂(M^t(ω_{1:n})/μ(ω_{1:n}))` for `n = 1..=horizon` and its running supremum.
pub fn deficiency_trace(
    m: &dyn StagedSemimeasure,
    stage: Stage,
    mu: &dyn Semimeasure,
    omega: &[Symbol],
    horizon: usize,
    prec: Precision,
    mixture: &str,
) -> Result<DeficiencyTrace> {
    m.alphabet().ensure_same(mu.alphabet())?;
    if omega.len() < horizon {
        return Err(Error::InvalidParameter(alloc::format!("path of length {} is shorter than {horizon}", omega.len())));
    }
    let path = &omega[..horizon];
    mu.alphabet().validate(path)?;
    let pm = m.path_profile_at_stage(stage, path);
    let pmu = mu.path_profile(path);
    let mut ratios = Vec::with_capacity(horizon);
    let mut per_n = Vec::with_capacity(horizon);
    let mut sup_so_far: Vec<Real> = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let d = &pmu.prefix[n];
        if *d == RBig::ZERO {
            return Err(Error::ZeroConditioning { prefix: Str::from(&path[..n - 1]) });
        }
        let r = &pm.prefix[n] / d;
        if r == RBig::ZERO {
            return Err(Error::EmptySupport { prefix: Str::from(&path[..n]) });
        }
        let l = prec.rational(&r).log2();
        let s = match sup_so_far.last() {
            Some(p) if *p >= l => p.clone(),
            _ => l.clone(),
        };
        ratios.push(r);
        per_n.push(l);
        sup_so_far.push(s);
    }
    Ok(DeficiencyTrace { mixture: mixture.into(), stage, ratios, per_n, sup_so_far })
}

impl<T: Supermartingale + ?Sized> Supermartingale for &T {
    fn eval(&self, x: &[Symbol]) -> Rational {
        (**self).eval(x)
    }
    fn vanishes_below(&self, x: &[Symbol]) -> bool {
        (**self).vanishes_below(x)
    }
}

/// `m(x) = ν(x)·2^{ℓ(x)}` for a semimeasure `ν` on binary strings.
#[derive(Clone)]
pub struct RatioSupermartingale {
    nu: SharedSemimeasure,
}

impl RatioSupermartingale {
    pub fn inner(&self) -> &SharedSemimeasure {
        &self.nu
    }
}

impl Supermartingale for RatioSupermartingale {
    fn eval(&self, x: &[Symbol]) -> Rational {
        self.nu.eval(x) * pow2(x.len())
    }

    fn vanishes_below(&self, x: &[Symbol]) -> bool {
        self.nu.eval(x) == RBig::ZERO
    }
}

pub fn semimeasure_to_supermartingale(nu: SharedSemimeasure) -> Result<RatioSupermartingale> {
    Alphabet::BINARY.ensure_same(nu.alphabet())?;
    Ok(RatioSupermartingale { nu })
}

/// Non-negative functionals `F_n` of strings of length `n`.
pub trait Functional: Send + Sync {
    fn eval(&self, x: &[Symbol]) -> Rational;
}

impl<F: Fn(&[Symbol]) -> Rational + Send + Sync> Functional for F {
    fn eval(&self, x: &[Symbol]) -> Rational {
        self(x)
    }
}

/// `Σ_{t<=n} h_t(ν, μ | x_{<t})` rounded down to a multiple of `2^{-bits}`.
pub struct HellingerSum {
    mu: SharedSemimeasure,
    nu: SharedSemimeasure,
    bits: usize,
    prec: Precision,
}

impl HellingerSum {
    pub fn new(mu: SharedSemimeasure, nu: SharedSemimeasure, bits: usize, prec: Precision) -> Self {
        Self { mu, nu, bits, prec }
    }
}

impl Functional for HellingerSum {
    fn eval(&self, x: &[Symbol]) -> Rational {
        match hellinger_series(&*self.mu, &*self.nu, x, x.len(), self.prec) {
            Ok(s) => s.total().map_or(RBig::ZERO, |t| t.dyadic_floor(self.bits)),
            Err(_) => RBig::ZERO,
        }
    }
}

/// The tables `μ̄_n(x) = ε_n^{-1} Σ_{y ∈ X^{n-ℓ(x)}} μ(xy) F_n(xy)` for
/// `ℓ(x) <= n`, zero below depth `n`, for `n = 0..=horizon`.
///
/// As a staged semimeasure, stage `t` is `μ̄_{min(t, horizon)}`.
#[derive(Clone, Debug)]
pub struct MuBar {
    alphabet: Alphabet,
    eps: Vec<Rational>,
    /// `tables[n][k][rank(x)]` for `ℓ(x) = k <= n`.
    tables: Vec<Vec<Vec<Rational>>>,
}

impl MuBar {
    pub fn horizon(&self) -> usize {
        self.tables.len() - 1
    }

    pub fn eps(&self) -> &[Rational] {
        &self.eps
    }

    /// `μ̄_n(x)`.
    pub fn value(&self, n: usize, x: &[Symbol]) -> Rational {
        let n = n.min(self.horizon());
        if x.len() > n {
            return RBig::ZERO;
        }
        self.tables[n][x.len()][rank(self.alphabet, x)].clone()
    }
}

impl StagedSemimeasure for MuBar {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn eval_at_stage(&self, t: Stage, x: &[Symbol]) -> Rational {
        self.value(t as usize, x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MuBarReport {
    pub horizon: usize,
    /// `E_μ[F_n]` for `n = 0..=horizon`.
    pub expectations: Vec<Rational>,
    /// Every `μ̄_n` passes the exhaustive semimeasure check to depth `n + 1`.
    pub semimeasure_ok: bool,
    /// `μ̄_n >= μ̄_{n-1}` on every string of length at most the horizon.
    pub monotone_ok: bool,
    /// First failing `(n, x)`.
    pub witness: Option<(usize, Str)>,
}

impl MuBarReport {
    pub fn passed(&self) -> bool {
        self.semimeasure_ok && self.monotone_ok
    }
}

/// Materializes `μ̄_n` for `n <= horizon` from a measure `μ`, a functional `F`
/// and a non-increasing schedule `eps[n] = ε_n`.
pub fn expected_to_individual(
    mu: &dyn Semimeasure,
    f: &dyn Functional,
    eps: &[Rational],
    horizon: usize,
    budget: Budget,
) -> Result<(MuBar, MuBarReport)> {
    let alphabet = mu.alphabet();
    budget.check_level(alphabet, horizon + 1)?;
    if eps.len() <= horizon {
        return Err(Error::InvalidParameter(alloc::format!("need {} schedule values, got {}", horizon + 1, eps.len())));
    }
    if eps.iter().any(|e| *e <= RBig::ZERO) || eps.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter("the schedule must be positive and non-increasing".into()));
    }
    let mut tables = Vec::with_capacity(horizon + 1);
    let mut expectations = Vec::with_capacity(horizon + 1);
    let mut prev_f: Vec<Rational> = Vec::new();
    for n in 0..=horizon {
        let mut weighted = Vec::new();
        let mut fvals = Vec::new();
        let mut witness = None;
        for_each_string(alphabet, n, |x| {
            let fx = f.eval(x);
            if witness.is_none() && (fx < RBig::ZERO || (n > 0 && fx < prev_f[rank(alphabet, &x[..n - 1])])) {
                witness = Some(Str::from(x));
            }
            weighted.push(mu.eval(x) * &fx);
            fvals.push(fx);
        });
        if let Some(w) = witness {
            return Err(Error::FunctionalNotMonotone { witness: w });
        }
        let e = sum(weighted.iter().cloned());
        if e > eps[n] {
            return Err(Error::ExpectationExceeded { n, expectation: e, bound: eps[n].clone() });
        }
        expectations.push(e);
        let inv = RBig::ONE / &eps[n];
        let mut levels: Vec<Vec<Rational>> = alloc::vec![Vec::new(); n + 1];
        levels[n] = weighted.into_iter().map(|v| v * &inv).collect();
        let size = alphabet.size();
        for k in (0..n).rev() {
            levels[k] = levels[k + 1].chunks(size).map(|c| sum(c.iter().cloned())).collect();
        }
        tables.push(levels);
        prev_f = fvals;
    }
    let bar = MuBar { alphabet, eps: eps[..=horizon].to_vec(), tables };
    let mut report = MuBarReport { horizon, expectations, semimeasure_ok: true, monotone_ok: true, witness: None };
    let shared: Arc<dyn StagedSemimeasure> = Arc::new(bar.clone());
    for n in 0..=horizon {
        let view = StageView::new(shared.clone(), n as Stage);
        let r = verify_semimeasure(&view, n + 1, budget)?;
        if !r.passed {
            report.semimeasure_ok = false;
            report.witness = r.witness.map(|w| (n, w));
            return Ok((bar, report));
        }
    }
    'outer: for n in 1..=horizon {
        for k in 0..=horizon {
            let mut bad = None;
            for_each_string(alphabet, k, |x| {
                if bad.is_none() && bar.value(n, x) < bar.value(n - 1, x) {
                    bad = Some(Str::from(x));
                }
            });
            if let Some(w) = bad {
                report.monotone_ok = false;
                report.witness = Some((n, w));
                break 'outer;
            }
        }
    }
    Ok((bar, report))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndividualBound {
    pub n: usize,
    /// `F_n(ω_{1:n})`.
    pub value: Rational,
    /// `ε_n 2^{codelen} M(ω_{1:n})/μ(ω_{1:n})`.
    pub ratio_bound: Rational,
    /// `ε_n 2^{codelen + d}` with `d` the deficiency up to `n`.
    pub deficiency_bound: Real,
    /// `M(x) >= 2^{-codelen} μ̄_n(x)` for every `x` with `ℓ(x) <= n`.
    pub dominance_ok: bool,
    pub holds: bool,
}

/// The bound `F_n(ω) <= ε_n 2^{codelen} M(ω_{1:n})/μ(ω_{1:n}) <= ε_n 2^{codelen + d}`,
/// where `M` is a mixture containing `μ̄` with weight `2^{-codelen}`.
#[allow(clippy::too_many_arguments)]
pub fn individual_bound(
    bar: &MuBar,
    f: &dyn Functional,
    m: &dyn StagedSemimeasure,
    code_length: u32,
    mu: &dyn Semimeasure,
    omega: &[Symbol],
    prec: Precision,
    budget: Budget,
) -> Result<IndividualBound> {
    let n = bar.horizon();
    let stage = n as Stage;
    budget.check_level(bar.alphabet, n)?;
    let w = RBig::ONE / pow2(code_length as usize);
    let mut dominance_ok = true;
    for k in 0..=n {
        for_each_string(bar.alphabet, k, |x| {
            if dominance_ok && m.eval_at_stage(stage, x) < &w * bar.value(n, x) {
                dominance_ok = false;
            }
        });
    }
    let trace = deficiency_trace(m, stage, mu, omega, n.max(1), prec, "")?;
    let x = &omega[..n];
    let value = f.eval(x);
    let scale = &bar.eps[n] * pow2(code_length as usize);
    let ratio_bound = &scale * &trace.ratios[n.max(1) - 1];
    let d = trace.deficiency().cloned().unwrap_or_else(|| prec.zero());
    let deficiency_bound = &prec.rational(&scale) * &(&d * &prec.ln2()).exp();
    let holds = dominance_ok
        && value <= ratio_bound
        && prec.rational(&value).le_tol(&deficiency_bound, &prec.tolerance());
    Ok(IndividualBound { n, value, ratio_bound, deficiency_bound, dominance_ok, holds })
}
