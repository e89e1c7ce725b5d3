//! Quasimeasures, the conversion of staged semimeasures into staged
//! quasimeasures, the mixtures `δ_k`, `D`, `D̂`, `W`, and the two convergence
//! experiments along a fixed sequence.

use alloc::sync::Arc;
use alloc::vec::Vec;

use dashu_ratio::RBig;

use crate::alphabet::{for_each_string, rank, Alphabet, Budget, Str, Symbol};
use crate::error::{Error, Result};
use crate::hellinger::{continuity_bound, hellinger_rational, hellinger_series, HellingerSeries};
use crate::measure::{Mix, Normalized, PathProfile, Semimeasure, SharedSemimeasure};
use crate::prob::{powi, ratio, sum, Rational};
use crate::real::{Precision, Real};
use crate::registry::{measure_indices, ModelRegistry, WeightRule};
use crate::randomness::deficiency_trace;
use crate::staged::{SharedStaged, Stage, StageView, StagedMixture, StagedSemimeasure};

/// Deepest level carrying mass of a quasimeasure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cutoff {
    Infinite,
    Finite(usize),
}

/// The accepted `ρ^s`: the source at stage `s` summed down to `level`.
#[derive(Clone, Debug)]
struct Accepted {
    stage: Stage,
    level: usize,
    /// Source values on `X^level` when no closed form exists.
    table: Option<Arc<Vec<Rational>>>,
}

/// `ν̃^t` for `t = 0..=max_stage`, built from a staged semimeasure `ν^t` by
/// keeping the last `ρ^t` that dominates its predecessor.
#[derive(Clone)]
pub struct QuasiConversion {
    source: SharedStaged,
    alphabet: Alphabet,
    measure: bool,
    levels: Vec<usize>,
    accepted: Vec<Option<Accepted>>,
}

impl core::fmt::Debug for QuasiConversion {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("QuasiConversion")
            .field("measure", &self.measure)
            .field("levels", &self.levels)
            .field("cutoffs", &(0..self.levels.len()).map(|t| self.cutoff(t as Stage)).collect::<Vec<_>>())
            .finish()
    }
}

fn level_mass(src: &dyn StagedSemimeasure, t: Stage, n: usize, budget: Budget) -> Result<Rational> {
    if let Some(v) = src.level_mass_at_stage(t, n) {
        return Ok(v);
    }
    budget.check_level(src.alphabet(), n)?;
    let mut acc = RBig::ZERO;
    for_each_string(src.alphabet(), n, |x| acc += src.eval_at_stage(t, x));
    Ok(acc)
}

/// Count-class representatives of `X^n`.
fn compositions(alphabet: Alphabet, n: usize) -> Vec<Vec<Symbol>> {
    fn go(a: usize, size: usize, left: usize, cur: &mut Vec<Symbol>, out: &mut Vec<Vec<Symbol>>) {
        if a + 1 == size {
            let mut x = cur.clone();
            x.extend(core::iter::repeat_n(a as Symbol, left));
            out.push(x);
            return;
        }
        for k in 0..=left {
            let len = cur.len();
            cur.extend(core::iter::repeat_n(a as Symbol, k));
            go(a + 1, size, left - k, cur, out);
            cur.truncate(len);
        }
    }
    let mut out = Vec::new();
    go(0, alphabet.size(), n, &mut Vec::new(), &mut out);
    out
}

impl QuasiConversion {
    /// Runs the accept/keep recursion for `t = 1..=max_stage`, starting from
    /// `ν̃^0 = 0`.
    pub fn build(source: SharedStaged, max_stage: Stage, budget: Budget) -> Result<Self> {
        let alphabet = source.alphabet();
        let measure = source.is_stage_invariant() && source.limit().is_some_and(|l| l.is_exact_measure());
        let mut conv = QuasiConversion {
            source,
            alphabet,
            measure,
            levels: alloc::vec![0],
            accepted: alloc::vec![None],
        };
        for t in 1..=max_stage {
            let m = conv.threshold_level(t, budget)?;
            conv.levels.push(m);
            let prev = conv.accepted.last().cloned().flatten();
            let next = if m == 0 {
                prev
            } else {
                let cand = conv.candidate(t, m, budget)?;
                match prev {
                    None => Some(cand),
                    Some(p) if conv.dominates(&cand, &p, budget)? => Some(cand),
                    Some(p) => Some(p),
                }
            };
            conv.accepted.push(next);
        }
        Ok(conv)
    }

    /// `m^t = max{n <= t : Σ_{x ∈ X^n} ν^t(x) > 1 - 1/n}`, or 0.
    ///
    /// Level masses of a semimeasure do not increase with `n` while the
    /// threshold does, so the qualifying `n` form an initial segment.
    fn threshold_level(&self, t: Stage, budget: Budget) -> Result<usize> {
        if self.measure {
            return Ok(t as usize);
        }
        let mut m = 0;
        for n in 1..=t as usize {
            let mass = level_mass(&*self.source, t, n, budget)?;
            if mass > RBig::ONE - ratio(1, n as u64) {
                m = n;
            } else {
                break;
            }
        }
        Ok(m)
    }

    fn candidate(&self, t: Stage, level: usize, budget: Budget) -> Result<Accepted> {
        let closed = self.measure || self.source.mass_below_at_stage(t, &[], level).is_some();
        let table = if closed {
            None
        } else {
            budget.check_level(self.alphabet, level)?;
            let mut v = Vec::new();
            for_each_string(self.alphabet, level, |x| v.push(self.source.eval_at_stage(t, x)));
            Some(Arc::new(v))
        };
        Ok(Accepted { stage: t, level, table })
    }

    fn value_of(&self, acc: &Accepted, x: &[Symbol]) -> Rational {
        if x.len() > acc.level {
            return RBig::ZERO;
        }
        if self.measure {
            return self.source.eval_at_stage(acc.stage, x);
        }
        match &acc.table {
            Some(tab) => {
                let span = self.alphabet.count(acc.level - x.len()).unwrap_or(0) as usize;
                let start = rank(self.alphabet, x) * span;
                sum(tab[start..start + span].iter().cloned())
            }
            None => self
                .source
                .mass_below_at_stage(acc.stage, x, acc.level)
                .unwrap_or(RBig::ZERO),
        }
    }

    /// `cand >= prev` everywhere, decided on `X^{prev.level}`.
    fn dominates(&self, cand: &Accepted, prev: &Accepted, budget: Budget) -> Result<bool> {
        if cand.level < prev.level {
            return Ok(false);
        }
        if self.measure {
            return Ok(true);
        }
        let ok = |x: &[Symbol]| self.value_of(cand, x) >= self.value_of(prev, x);
        if self.source.is_exchangeable() && cand.table.is_none() && prev.table.is_none() {
            return Ok(compositions(self.alphabet, prev.level).iter().all(|x| ok(x)));
        }
        budget.check_level(self.alphabet, prev.level)?;
        let mut all = true;
        for_each_string(self.alphabet, prev.level, |x| all = all && ok(x));
        Ok(all)
    }

    pub fn max_stage(&self) -> Stage {
        (self.levels.len() - 1) as Stage
    }

    pub fn source(&self) -> &SharedStaged {
        &self.source
    }

    /// True when the source is a stage-invariant measure, so `ν̃ = ν`.
    pub fn is_measure(&self) -> bool {
        self.measure
    }

    /// `m^t`.
    pub fn threshold(&self, t: Stage) -> usize {
        self.levels[(t as usize).min(self.levels.len() - 1)]
    }

    fn record(&self, t: Stage) -> Option<&Accepted> {
        self.accepted[(t as usize).min(self.accepted.len() - 1)].as_ref()
    }

    /// Stage whose `ρ` is `ν̃^t`, `None` while `ν̃^t ≡ 0`.
    pub fn accepted_stage(&self, t: Stage) -> Option<Stage> {
        self.record(t).map(|a| a.stage)
    }

    /// Deepest level where `ν̃^t` may be positive, 0 for the zero stage.
    pub fn level(&self, t: Stage) -> usize {
        self.record(t).map_or(0, |a| a.level)
    }

    /// Cutoff of the limit: infinite for measures, else the last accepted level.
    pub fn cutoff(&self, t: Stage) -> Cutoff {
        if self.measure {
            Cutoff::Infinite
        } else {
            Cutoff::Finite(self.level(t))
        }
    }

    /// `ν̃^t(x)`.
    pub fn eval_at(&self, t: Stage, x: &[Symbol]) -> Rational {
        match self.record(t) {
            Some(a) => self.value_of(a, x),
            None => RBig::ZERO,
        }
    }
}

impl StagedSemimeasure for QuasiConversion {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn eval_at_stage(&self, t: Stage, x: &[Symbol]) -> Rational {
        self.eval_at(t, x)
    }

    fn level_mass_at_stage(&self, t: Stage, n: usize) -> Option<Rational> {
        Some(if n <= self.level(t) { self.eval_at(t, &[]) } else { RBig::ZERO })
    }

    fn mass_below_at_stage(&self, t: Stage, x: &[Symbol], depth: usize) -> Option<Rational> {
        Some(if depth <= self.level(t) { self.eval_at(t, x) } else { RBig::ZERO })
    }
}

/// `ν̃^t` for a staged source, built through stage `t`.
pub fn to_quasimeasure(source: SharedStaged, t: Stage, budget: Budget) -> Result<StageView> {
    let conv: SharedStaged = Arc::new(QuasiConversion::build(source, t, budget)?);
    Ok(StageView::new(conv, t))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuasiReport {
    pub passed: bool,
    pub cutoff: Cutoff,
    pub witness: Option<Str>,
}

/// Exhaustive check of the quasimeasure conditions: additivity above the
/// cutoff, zero below it and `1 - 1/n < ν̃(ε) <= 1`. With an infinite cutoff
/// the measure conditions are checked to `depth`.
pub fn verify_quasimeasure(q: &dyn Semimeasure, cutoff: Cutoff, depth: usize, budget: Budget) -> Result<QuasiReport> {
    let alphabet = q.alphabet();
    let root = q.eval(&[]);
    let (n, check_to) = match cutoff {
        Cutoff::Infinite => (None, depth),
        Cutoff::Finite(n) => (Some(n), n + 1),
    };
    budget.check_level(alphabet, check_to)?;
    let root_ok = match n {
        None => root == RBig::ONE,
        Some(0) => root == RBig::ZERO,
        Some(n) => root > RBig::ONE - ratio(1, n as u64) && root <= RBig::ONE,
    };
    if !root_ok {
        return Ok(QuasiReport { passed: false, cutoff, witness: Some(Str::empty()) });
    }
    for k in 0..=check_to {
        let mut witness = None;
        for_each_string(alphabet, k, |x| {
            if witness.is_some() {
                return;
            }
            let v = q.eval(x);
            let beyond = n.is_some_and(|n| k > n);
            if beyond {
                if v != RBig::ZERO {
                    witness = Some(Str::from(x));
                }
            } else if k < check_to && n.is_none_or(|n| k < n) && sum(q.eval_children_from(x, &v)) != v {
                witness = Some(Str::from(x));
            }
        });
        if witness.is_some() {
            return Ok(QuasiReport { passed: false, cutoff, witness });
        }
    }
    Ok(QuasiReport { passed: true, cutoff, witness: None })
}

/// `δ_k = Σ_{i ∈ J_k} ε_i ν_i` over measure entries with index at most `k`.
pub fn delta_k(reg: &ModelRegistry, k: usize) -> Result<Mix> {
    if k > reg.len() {
        return Err(Error::InvalidParameter(alloc::format!("index {k} exceeds registry size {}", reg.len())));
    }
    let idx = measure_indices(reg, k);
    if idx.is_empty() {
        return Err(Error::EmptyMeasureSet);
    }
    let parts = idx
        .into_iter()
        .map(|i| Ok((reg.weight(i, WeightRule::Polynomial).unwrap_or_default(), reg.limit_of(i)?)))
        .collect::<Result<Vec<_>>>()?;
    Mix::new(reg.alphabet(), parts)
}

/// `δ̂_k = δ_k/δ_k(ε)`.
pub fn delta_hat_k(reg: &ModelRegistry, k: usize) -> Result<Normalized> {
    Normalized::new(Arc::new(delta_k(reg, k)?))
}

/// `D = δ_∞`, the mixture over all measure entries.
pub fn build_d(reg: &ModelRegistry) -> Result<Mix> {
    delta_k(reg, reg.len())
}

/// `D̂ = D/D(ε)`.
pub fn normalize_d(reg: &ModelRegistry) -> Result<Normalized> {
    delta_hat_k(reg, reg.len())
}

/// `W^t = Σ_i ε_i ν̃_i^t` over all registry entries.
#[derive(Clone)]
pub struct WMixture {
    alphabet: Alphabet,
    parts: Vec<WPart>,
    inner: Arc<StagedMixture>,
}

impl core::fmt::Debug for WMixture {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("WMixture").field("parts", &self.parts).finish()
    }
}

#[derive(Clone, Debug)]
pub struct WPart {
    pub index: usize,
    pub weight: Rational,
    pub is_measure: bool,
    pub conversion: Arc<QuasiConversion>,
}

/// [`WMixture`] with every conversion built through `max_stage`.
pub fn build_w(reg: &ModelRegistry, max_stage: Stage, budget: Budget) -> Result<WMixture> {
    if reg.is_empty() {
        return Err(Error::EmptyRegistry);
    }
    let mut parts = Vec::with_capacity(reg.len());
    for e in reg.entries() {
        let conversion = Arc::new(QuasiConversion::build(e.model.clone(), max_stage, budget)?);
        parts.push(WPart { index: e.index, weight: e.weight(WeightRule::Polynomial), is_measure: e.is_measure, conversion });
    }
    let total = sum(parts.iter().map(|p| p.weight.clone()));
    if total > RBig::ONE {
        return Err(Error::WeightOverflow { total });
    }
    let staged = parts.iter().map(|p| (p.weight.clone(), p.conversion.clone() as SharedStaged)).collect();
    let inner = Arc::new(StagedMixture::new(reg.alphabet(), staged)?);
    Ok(WMixture { alphabet: reg.alphabet(), parts, inner })
}

impl WMixture {
    pub fn parts(&self) -> &[WPart] {
        &self.parts
    }

    pub fn max_stage(&self) -> Stage {
        self.parts.iter().map(|p| p.conversion.max_stage()).min().unwrap_or(0)
    }

    /// `W^t` as a semimeasure.
    pub fn at_stage(&self, t: Stage) -> StageView {
        StageView::new(self.inner.clone(), t)
    }

    /// `Σ_{i ∉ J} ε_i ν̃_i^t`, which equals `W^t - D` when measure entries
    /// have converged.
    pub fn excess(&self, t: Stage) -> Result<Mix> {
        let parts = self
            .parts
            .iter()
            .filter(|p| !p.is_measure)
            .map(|p| (p.weight.clone(), StageView::shared(p.conversion.clone(), t)))
            .collect();
        Mix::new(self.alphabet, parts)
    }

    /// `Σ_{i ∈ J} ε_i ν̃_i^t`, which equals `D` once measure entries have converged.
    pub fn measure_part(&self, t: Stage) -> Result<Mix> {
        let parts = self
            .parts
            .iter()
            .filter(|p| p.is_measure)
            .map(|p| (p.weight.clone(), StageView::shared(p.conversion.clone(), t)))
            .collect();
        Mix::new(self.alphabet, parts)
    }

    /// Largest finite cutoff among non-measure entries at stage `t`.
    pub fn largest_cutoff(&self, t: Stage) -> usize {
        self.parts
            .iter()
            .filter(|p| !p.is_measure)
            .filter_map(|p| match p.conversion.cutoff(t) {
                Cutoff::Finite(n) => Some(n),
                Cutoff::Infinite => None,
            })
            .max()
            .unwrap_or(0)
    }
}

impl StagedSemimeasure for WMixture {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn eval_at_stage(&self, t: Stage, x: &[Symbol]) -> Rational {
        self.inner.eval_at_stage(t, x)
    }

    fn eval_children_at_stage(&self, t: Stage, x: &[Symbol], vx: &Rational) -> Vec<Rational> {
        self.inner.eval_children_at_stage(t, x, vx)
    }

    fn path_profile_at_stage(&self, t: Stage, x: &[Symbol]) -> PathProfile {
        self.inner.path_profile_at_stage(t, x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop1Report {
    pub k0: usize,
    pub horizon: usize,
    /// `h_t(δ̂_{k0}, μ)`.
    pub target: HellingerSeries,
    /// Registry indices `k0..=K` of the distinct chain members `δ̂_k`.
    pub chain_indices: Vec<usize>,
    /// `Σ_{t<=n} h_t(δ̂_{k-1}, δ̂_k)` for consecutive chain members.
    pub link_sums: Vec<Real>,
    /// `Σ_{t<=n} h_t(δ̂_{k0}, D̂)`.
    pub chain_lhs: Real,
    /// `3 Σ_j j² Σ_t h_t(p^{j-1}, p^j)` with `j` the position in the chain.
    pub chain_rhs_position: Real,
    /// The same with `j` replaced by the registry index.
    pub chain_rhs_index: Real,
    /// The per-step chain inequality held at every `t`.
    pub chain_stepwise_ok: bool,
    /// Deficiency of `ω` up to the horizon relative to the ε-weight mixture.
    pub deficiency: Real,
    /// `2 ln 2 · d + 3 k0`.
    pub bound_target: Real,
    /// `k0^7 2^{k0 + d}`.
    pub bound_chain: Real,
    pub slack: Rational,
    pub within_slack: bool,
    pub non_decreasing: bool,
}

/// Hellinger sums of the normalized partial mixtures `δ̂_k` along `ω`.
#[allow(clippy::too_many_arguments)]
pub fn prop1_experiment(
    reg: &ModelRegistry,
    k0: usize,
    mu: &dyn Semimeasure,
    omega: &[Symbol],
    n: usize,
    stage: Stage,
    slack: &Rational,
    prec: Precision,
) -> Result<Prop1Report> {
    let base = delta_hat_k(reg, k0)?;
    let target = hellinger_series(mu, &base, omega, n, prec)?;
    let mut chain_indices = alloc::vec![k0];
    let mut members: Vec<SharedSemimeasure> = alloc::vec![Arc::new(base)];
    for k in k0 + 1..=reg.len() {
        if reg.get(k).is_some_and(|e| e.is_measure) {
            chain_indices.push(k);
            members.push(Arc::new(delta_hat_k(reg, k)?));
        }
    }
    let path = &omega[..n];
    let profiles: Vec<PathProfile> = members.iter().map(|m| m.path_profile(path)).collect();
    let tol = prec.tolerance();
    let mut link_sums = alloc::vec![prec.zero(); members.len().saturating_sub(1)];
    let mut lhs = prec.zero();
    let mut rhs_pos = prec.zero();
    let mut rhs_idx = prec.zero();
    let mut stepwise = true;
    let last = profiles.len() - 1;
    for t in 0..n {
        let preds: Vec<Vec<Rational>> = profiles
            .iter()
            .map(|p| p.predictive(t).ok_or_else(|| Error::ZeroConditioning { prefix: Str::from(&path[..t]) }))
            .collect::<Result<_>>()?;
        let h_end = hellinger_rational(&preds[0], &preds[last], prec);
        let mut step_rhs = prec.zero();
        for j in 1..preds.len() {
            let h = hellinger_rational(&preds[j - 1], &preds[j], prec);
            let pos = (j + 1) as i64;
            let idx = chain_indices[j] as i64;
            step_rhs = &step_rhs + &(&prec.int(3 * pos * pos) * &h);
            rhs_idx = &rhs_idx + &(&prec.int(3 * idx * idx) * &h);
            link_sums[j - 1] = &link_sums[j - 1] + &h;
        }
        stepwise &= h_end.le_tol(&step_rhs, &tol);
        lhs = &lhs + &h_end;
        rhs_pos = &rhs_pos + &step_rhs;
    }
    let mix = reg.mixture(WeightRule::Polynomial)?;
    let trace = deficiency_trace(&mix, stage, mu, omega, n.max(1), prec, "polynomial")?;
    let d = trace.deficiency().cloned().unwrap_or_else(|| prec.zero()).max(prec.zero());
    let ln2 = prec.ln2();
    let bound_target = &(&(&prec.int(2) * &ln2) * &d) + &prec.int(3 * k0 as i64);
    let bound_chain = &prec.rational(&powi(&ratio(k0 as i64, 1), 7)) * &(&(&prec.int(k0 as i64) + &d) * &ln2).exp();
    let total = target.total().cloned().unwrap_or_else(|| prec.zero());
    let s = prec.rational(slack);
    let within_slack = total.le_tol(&(&s * &bound_target), &tol) && lhs.le_tol(&(&s * &bound_chain), &tol);
    let non_decreasing = target.cumulative.windows(2).all(|w| w[0].le_tol(&w[1], &tol));
    Ok(Prop1Report {
        k0,
        horizon: n,
        target,
        chain_indices,
        link_sums,
        chain_lhs: lhs,
        chain_rhs_position: rhs_pos.clone(),
        chain_rhs_index: rhs_idx.clone(),
        chain_stepwise_ok: stepwise && rhs_pos.le_tol(&rhs_idx, &tol),
        deficiency: d,
        bound_target,
        bound_chain,
        slack: slack.clone(),
        within_slack,
        non_decreasing,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop2Row {
    pub t: usize,
    /// `W(ω_{1:t})/D(ω_{1:t})`.
    pub ratio: Rational,
    /// `W(ω_t|ω_{<t})/D(ω_t|ω_{<t})`.
    pub conditional_ratio: Rational,
    /// `max_a |W(a|ω_{<t}) - D(a|ω_{<t})|`.
    pub predictive_gap: Rational,
    /// `Σ_{i ∉ J} ε_i ν̃_i(ω_{1:t})/D(ω_{1:t})`.
    pub envelope: Rational,
    /// `(D - Σ_{i ∈ J} ε_i ν̃_i^T)(ω_{1:t})/D(ω_{1:t})`: how far the staged
    /// measure entries still sit below their limits. Zero for stage-exact entries.
    pub shortfall: Rational,
    /// `h_{ω_{<t}}(D, W)`.
    pub h: Real,
    /// `(W - D)(ω_{<t})/D(ω_{<t})`.
    pub linear_bound: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop2Report {
    pub stage: Stage,
    pub largest_cutoff: usize,
    pub rows: Vec<Prop2Row>,
    /// `1 - shortfall <= W/D <= 1 + envelope` at every `t`.
    pub envelope_ok: bool,
    /// `W/D = 1 - shortfall` for every `t` beyond the largest cutoff.
    pub exact_after_cutoff: bool,
    /// Largest shortfall along the path.
    pub max_shortfall: Rational,
    /// `max_shortfall` is within the precision tolerance.
    pub converged_ok: bool,
    /// The envelope does not increase beyond the largest cutoff.
    pub shrinking_ok: bool,
    /// `h(D, W) <= (W - D)/D` at every evaluated prefix.
    pub continuity_ok: bool,
}

/// `W` against `D` along `ω` at stage `stage` of the quasimeasure conversions.
pub fn prop2_experiment(
    reg: &ModelRegistry,
    omega: &[Symbol],
    n: usize,
    stage: Stage,
    prec: Precision,
    budget: Budget,
) -> Result<Prop2Report> {
    if (stage as usize) < n {
        return Err(Error::InvalidParameter(alloc::format!("stage {stage} is below the horizon {n}")));
    }
    if omega.len() < n {
        return Err(Error::InvalidParameter(alloc::format!("path of length {} is shorter than {n}", omega.len())));
    }
    let w = build_w(reg, stage, budget)?;
    let d = build_d(reg)?;
    let excess = w.excess(stage)?;
    let staged_measures = w.measure_part(stage)?;
    let wv = w.at_stage(stage);
    let path = &omega[..n];
    let pw = wv.path_profile(path);
    let pd = d.path_profile(path);
    let pe = excess.path_profile(path);
    let pm = staged_measures.path_profile(path);
    let tol = prec.tolerance();
    let mut rows = Vec::with_capacity(n);
    let mut envelope_ok = true;
    let mut continuity_ok = true;
    for t in 1..=n {
        let x = &path[..t - 1];
        let dx = &pd.prefix[t];
        if *dx == RBig::ZERO {
            return Err(Error::ZeroConditioning { prefix: Str::from(&path[..t]) });
        }
        let ratio_t = &pw.prefix[t] / dx;
        let envelope = &pe.prefix[t] / dx;
        let shortfall = (dx - &pm.prefix[t]) / dx;
        envelope_ok &= ratio_t >= RBig::ONE - &shortfall && ratio_t <= RBig::ONE + &envelope;
        let wc: Vec<Rational> = pw.children[t - 1].iter().map(|c| c / &pw.prefix[t - 1]).collect();
        let dc: Vec<Rational> = pd.children[t - 1].iter().map(|c| c / &pd.prefix[t - 1]).collect();
        let a = path[t - 1] as usize;
        let conditional_ratio = &wc[a] / &dc[a];
        let predictive_gap = wc
            .iter()
            .zip(&dc)
            .map(|(p, q)| if p > q { p - q } else { q - p })
            .max()
            .unwrap_or(RBig::ZERO);
        let cb = continuity_bound(&d, &excess, x, prec)?;
        continuity_ok &= cb.holds;
        let h = hellinger_rational(&dc, &wc, prec);
        continuity_ok &= h.le_tol(&prec.rational(&cb.linear), &tol);
        rows.push(Prop2Row { t, ratio: ratio_t, conditional_ratio, predictive_gap, envelope, shortfall, h, linear_bound: cb.linear });
    }
    let largest_cutoff = w.largest_cutoff(stage);
    let after: Vec<&Prop2Row> = rows.iter().filter(|r| r.t > largest_cutoff).collect();
    let exact_after_cutoff = after.iter().all(|r| r.ratio == RBig::ONE - &r.shortfall);
    let shrinking_ok = after.windows(2).all(|p| p[1].envelope <= p[0].envelope);
    let max_shortfall = rows.iter().map(|r| r.shortfall.clone()).max().unwrap_or(RBig::ZERO);
    let converged_ok = max_shortfall >= RBig::ZERO && prec.rational(&max_shortfall).le_tol(&prec.zero(), &tol);
    Ok(Prop2Report {
        stage,
        largest_cutoff,
        rows,
        envelope_ok,
        exact_after_cutoff,
        max_shortfall,
        converged_ok,
        shrinking_ok,
        continuity_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{half_uniform, Iid, Truncated, Uniform};
    use crate::prob::ExactProb;
    use crate::registry::exact_registry;
    use crate::staged::{Constant, DyadicStaircase};
    use alloc::string::ToString;
    use alloc::vec;

    fn bern(a: u64, b: u64) -> SharedSemimeasure {
        Arc::new(Iid::bernoulli(&ExactProb::ratio(a, b).unwrap()))
    }

    fn trunc(scale: (u64, u64), cut: usize) -> SharedSemimeasure {
        Arc::new(Truncated::new(ExactProb::ratio(scale.0, scale.1).unwrap(), cut, Uniform::shared(Alphabet::BINARY)))
    }

    #[test]
    fn uniform_converts_to_itself() {
        let conv = QuasiConversion::build(Constant::shared(Uniform::new(Alphabet::BINARY)), 12, Budget::DEFAULT).unwrap();
        assert_eq!(conv.cutoff(12), Cutoff::Infinite);
        for t in 1..=12 {
            assert_eq!(conv.threshold(t), t as usize);
        }
        assert_eq!(conv.eval_at(12, &[0, 1, 1]), ratio(1, 8));
        assert_eq!(conv.eval_at(3, &[0, 1, 1, 0]), RBig::ZERO);
    }

    #[test]
    fn half_uniform_gets_cutoff_one() {
        let conv = QuasiConversion::build(Constant::shared(half_uniform()), 8, Budget::DEFAULT).unwrap();
        assert_eq!(conv.cutoff(8), Cutoff::Finite(1));
        assert_eq!(conv.eval_at(8, &[]), ratio(1, 2));
        assert_eq!(conv.eval_at(8, &[0]), ratio(1, 4));
        assert_eq!(conv.eval_at(8, &[1, 0]), RBig::ZERO);
        let v = StageView::new(Arc::new(conv), 8);
        assert!(verify_quasimeasure(&v, Cutoff::Finite(1), 0, Budget::DEFAULT).unwrap().passed);
    }

    #[test]
    fn quasimeasure_is_a_fixed_point() {
        let q = trunc((19, 20), 10);
        let conv = QuasiConversion::build(Constant::shared(q.clone()), 16, Budget::DEFAULT).unwrap();
        assert_eq!(conv.cutoff(16), Cutoff::Finite(10));
        for k in 0..=11 {
            for_each_string(Alphabet::BINARY, k, |x| assert_eq!(conv.eval_at(16, x), q.eval(x)));
        }
    }

    #[test]
    fn staircase_stages_are_monotone_quasimeasures() {
        let src: SharedStaged = Arc::new(DyadicStaircase::new(Iid::bernoulli(&ExactProb::ratio(1, 3).unwrap())));
        let conv = Arc::new(QuasiConversion::build(src.clone(), 12, Budget::DEFAULT).unwrap());
        for t in 1..12 {
            for k in 0..=conv.level(t + 1) {
                for_each_string(Alphabet::BINARY, k, |x| {
                    assert!(conv.eval_at(t, x) <= conv.eval_at(t + 1, x));
                    assert!(conv.eval_at(t, x) <= src.eval_at_stage(t, x));
                });
            }
            let v = StageView::new(conv.clone(), t);
            let r = verify_quasimeasure(&v, conv.cutoff(t), 0, Budget::DEFAULT).unwrap();
            assert!(r.passed, "stage {t}: {r:?}");
        }
    }

    #[test]
    fn compositions_cover_count_classes() {
        assert_eq!(compositions(Alphabet::BINARY, 3).len(), 4);
        assert_eq!(compositions(Alphabet::new(3).unwrap(), 2).len(), 6);
    }

    #[test]
    fn d_and_delta_examples() {
        let reg = exact_registry(
            Alphabet::BINARY,
            vec![("b13".to_string(), bern(1, 3), 1, true), ("b23".to_string(), bern(2, 3), 2, true)],
        )
        .unwrap();
        let d = build_d(&reg).unwrap();
        assert_eq!(d.eval(&[]), ratio(129, 256));
        let dh = normalize_d(&reg).unwrap();
        let e1 = ratio(128, 129);
        let e2 = ratio(1, 129);
        assert_eq!(dh.eval(&[1]), &e1 * ratio(1, 3) + &e2 * ratio(2, 3));
        let single = exact_registry(Alphabet::BINARY, vec![("b23".to_string(), bern(2, 3), 1, true)]).unwrap();
        assert_eq!(normalize_d(&single).unwrap().eval(&[1, 0, 1]), bern(2, 3).eval(&[1, 0, 1]));
        let strict = exact_registry(Alphabet::BINARY, vec![("h".to_string(), Arc::new(half_uniform()), 1, false)]).unwrap();
        assert!(matches!(delta_k(&strict, 1), Err(Error::EmptyMeasureSet)));
    }

    #[test]
    fn w_of_uniform_and_half_uniform() {
        let reg = exact_registry(
            Alphabet::BINARY,
            vec![
                ("u".to_string(), Uniform::shared(Alphabet::BINARY), 1, true),
                ("h".to_string(), Arc::new(half_uniform()), 2, false),
            ],
        )
        .unwrap();
        let w = build_w(&reg, 8, Budget::DEFAULT).unwrap();
        assert_eq!(w.eval_at_stage(8, &[]), ratio(1, 2) + ratio(1, 512));
        assert!(w.eval_at_stage(8, &[1, 1, 0, 1]) > RBig::ZERO);
        assert_eq!(w.largest_cutoff(8), 1);
    }

    #[test]
    fn prop2_with_half_uniform_is_exact_after_one() {
        let reg = exact_registry(
            Alphabet::BINARY,
            vec![
                ("b23".to_string(), bern(2, 3), 1, true),
                ("h".to_string(), Arc::new(half_uniform()), 2, false),
            ],
        )
        .unwrap();
        let omega = [1, 0, 1, 1, 0, 1, 1, 1];
        let r = prop2_experiment(&reg, &omega, 8, 8, Precision::DEFAULT, Budget::DEFAULT).unwrap();
        assert!(r.rows[0].ratio > RBig::ONE);
        assert!(r.rows[1..].iter().all(|row| row.ratio == RBig::ONE));
        assert!(r.envelope_ok && r.exact_after_cutoff && r.continuity_ok && r.shrinking_ok);
        assert!(r.max_shortfall == RBig::ZERO && r.converged_ok);
    }

    #[test]
    fn prop1_single_measure_has_zero_sum() {
        let mu = bern(2, 3);
        let reg = exact_registry(Alphabet::BINARY, vec![("b23".to_string(), mu.clone(), 1, true)]).unwrap();
        let omega = [1, 1, 0, 1, 1, 0];
        let r = prop1_experiment(&reg, 1, &*mu, &omega, 6, 0, &RBig::ONE, Precision::DEFAULT).unwrap();
        assert!(r.target.cumulative.iter().all(|c| c.abs() < Precision::DEFAULT.tolerance()));
        assert!(r.within_slack && r.non_decreasing && r.chain_stepwise_ok);
    }
}
