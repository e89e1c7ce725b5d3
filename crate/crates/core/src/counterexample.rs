//! The leftmost-random sequence `α` of a staged mixture, the oscillating
//! supermartingale `r`, the lexicographic semimeasure `ν`, the contaminated
//! mixture `M′` and the anti-dominance sequence.

use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec::Vec;

use dashu_ratio::RBig;

use crate::alphabet::{Alphabet, Str, Symbol};
use crate::error::{Error, Result};
use crate::families::{Deterministic, EventuallyConstant};
use crate::measure::{Mix, Semimeasure, SharedSemimeasure};
use crate::prob::{int, pow2, pow2_neg, powi, ratio, ExactProb, Rational};
use crate::randomness::Supermartingale;
use crate::registry::{ModelRegistry, WeightRule};
use crate::staged::{SharedStaged, Stage, StagedMixture, StagedSemimeasure};

/// `α^t_{1:N}` for `t = 1..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaTrace {
    depth: usize,
    stages: Vec<Str>,
    /// `values[t-1][n] = M^t(α^t_{1:n})` for `n = 0..=N`.
    values: Vec<Vec<Rational>>,
}

/// `α^t_n = 0` iff `M^t(α^t_{<n} 0) <= 2^{-n}`, for every stage `t <= stages`.
pub fn build_alpha(m: &dyn StagedSemimeasure, stages: Stage, depth: usize) -> Result<AlphaTrace> {
    Alphabet::BINARY.ensure_same(m.alphabet())?;
    if stages == 0 {
        return Err(Error::InvalidParameter("at least one stage is needed".into()));
    }
    let mut all = Vec::with_capacity(stages as usize);
    let mut values = Vec::with_capacity(stages as usize);
    for t in 1..=stages {
        let mut x: Vec<Symbol> = Vec::with_capacity(depth);
        let mut vx = m.eval_at_stage(t, &[]);
        let mut vals = alloc::vec![vx.clone()];
        for n in 1..=depth {
            let ch = m.eval_children_at_stage(t, &x, &vx);
            let a = if ch[0] <= pow2_neg(n) { 0 } else { 1 };
            x.push(a);
            vx = ch[a as usize].clone();
            vals.push(vx.clone());
        }
        all.push(Str::from(x));
        values.push(vals);
    }
    Ok(AlphaTrace { depth, stages: all, values })
}

impl AlphaTrace {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn stages(&self) -> Stage {
        self.stages.len() as Stage
    }

    /// `α^t`, with `t` clamped to the simulated range.
    pub fn alpha(&self, t: Stage) -> &Str {
        let i = (t.max(1) as usize).min(self.stages.len()) - 1;
        &self.stages[i]
    }

    /// `α^T`, the best available approximation of `α`.
    pub fn final_alpha(&self) -> &Str {
        self.stages.last().expect("at least one stage")
    }

    /// `M^t(α^t_{1:n})` for `n = 0..=N`.
    pub fn stage_values(&self, t: Stage) -> &[Rational] {
        &self.values[(t as usize).clamp(1, self.values.len()) - 1]
    }

    /// Stages `t` and lengths `n` with `M^t(α^t_{1:n}) > 2^{-n}`.
    pub fn randomness_violations(&self) -> Vec<(Stage, usize)> {
        let mut out = Vec::new();
        for (i, vals) in self.values.iter().enumerate() {
            for (n, v) in vals.iter().enumerate() {
                if *v > pow2_neg(n) {
                    out.push((i as Stage + 1, n));
                }
            }
        }
        out
    }

    pub fn is_lex_monotone(&self) -> bool {
        self.stages.windows(2).all(|w| w[0] <= w[1])
    }

    /// For each `n = 1..=N` the first stage from which `α^t_{1:n} = α^T_{1:n}`.
    pub fn stabilization(&self) -> Vec<Stage> {
        let fin = self.final_alpha();
        (1..=self.depth)
            .map(|n| {
                let mut s = self.stages.len();
                while s > 1 && self.stages[s - 2][..n] == fin[..n] {
                    s -= 1;
                }
                s as Stage
            })
            .collect()
    }

    /// Positions `n` (1-based) with `α_n α_{n+1} = 01` in `α^T`.
    pub fn zero_one_positions(&self) -> Vec<usize> {
        let a = self.final_alpha();
        (1..a.len()).filter(|&n| a[n - 1] == 0 && a[n] == 1).collect()
    }
}

/// The supermartingale `r`: on even lengths 1 exactly on prefixes of some
/// `α^t`, on odd lengths the average of the children.
#[derive(Clone, Debug)]
pub struct OscillatorR {
    depth: usize,
    prefixes: BTreeSet<Str>,
}

pub fn build_r(trace: &AlphaTrace) -> OscillatorR {
    let mut prefixes = BTreeSet::new();
    for a in &trace.stages {
        for n in 0..=a.len() {
            prefixes.insert(a.prefix(n));
        }
    }
    OscillatorR { depth: trace.depth, prefixes }
}

/// `(odd depth, r(x), r(x0), r(x1))` with values as `(numerator, denominator)`.
pub type LocalPattern = (bool, (i64, u64), (i64, u64), (i64, u64));

/// The local configurations `(r(x); r(x0), r(x1))` the construction allows.
pub const DISPLAYED_PATTERNS: [LocalPattern; 7] = [
    (true, (0, 1), (0, 1), (0, 1)),
    (true, (1, 2), (1, 1), (0, 1)),
    (true, (1, 2), (0, 1), (1, 1)),
    (true, (1, 1), (1, 1), (1, 1)),
    (false, (1, 1), (1, 2), (0, 1)),
    (false, (1, 1), (0, 1), (1, 2)),
    (false, (1, 1), (1, 2), (1, 2)),
];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PatternCensus {
    /// Occurrences of each displayed configuration, indexed like [`DISPLAYED_PATTERNS`].
    pub displayed: [u64; 7],
    /// `(depth, string)` of configurations outside the displayed list.
    pub others: Vec<(usize, Str)>,
    pub zero_nodes: u64,
}

impl OscillatorR {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_prefix_of_some_stage(&self, x: &[Symbol]) -> bool {
        self.prefixes.contains(&Str::from(x))
    }

    pub fn local_pattern(&self, x: &[Symbol]) -> (Rational, Rational, Rational) {
        let mut y = x.to_vec();
        y.push(0);
        let r0 = self.eval(&y);
        y.pop();
        y.push(1);
        let r1 = self.eval(&y);
        (self.eval(x), r0, r1)
    }

    /// Classifies every node with a nonzero value and `ℓ(x) <= depth - 2`.
    /// Zero nodes have the zero configuration and are only counted.
    pub fn census(&self) -> PatternCensus {
        let mut c = PatternCensus::default();
        let max = self.depth.saturating_sub(2);
        let mut visited = BTreeSet::new();
        for p in &self.prefixes {
            for n in 0..=p.len().min(max) {
                let x = p.prefix(n);
                if !visited.insert(x.clone()) {
                    continue;
                }
                let odd = n % 2 == 1;
                let (v, a, b) = self.local_pattern(&x);
                let hit = DISPLAYED_PATTERNS.iter().position(|&(po, pv, pa, pb)| {
                    (pv == (0, 1) || po == odd)
                        && v == ratio(pv.0, pv.1)
                        && a == ratio(pa.0, pa.1)
                        && b == ratio(pb.0, pb.1)
                });
                match hit {
                    Some(i) => c.displayed[i] += 1,
                    None => c.others.push((n, x)),
                }
            }
        }
        c.zero_nodes = c.displayed[0];
        c
    }
}

impl Supermartingale for OscillatorR {
    fn eval(&self, x: &[Symbol]) -> Rational {
        if x.len() % 2 == 0 {
            if self.prefixes.contains(&Str::from(x)) {
                RBig::ONE
            } else {
                RBig::ZERO
            }
        } else {
            let mut y = x.to_vec();
            y.push(0);
            let a = self.eval(&y);
            y.pop();
            y.push(1);
            let b = self.eval(&y);
            (a + b) * ratio(1, 2)
        }
    }

    fn vanishes_below(&self, x: &[Symbol]) -> bool {
        !self.prefixes.contains(&Str::from(x))
    }
}

/// The lexicographic semimeasure `ν^t`: at stage `t` the leaves of length
/// `L = min(t, N)` strictly left of `α^{min(t,T)}` carry `2^{-L}`.
#[derive(Clone, Debug)]
pub struct CounterexampleNu {
    trace: Arc<AlphaTrace>,
}

impl CounterexampleNu {
    pub fn new(trace: Arc<AlphaTrace>) -> Self {
        CounterexampleNu { trace }
    }

    pub fn from_mixture(m: &dyn StagedSemimeasure, stages: Stage, depth: usize) -> Result<Self> {
        Ok(Self::new(Arc::new(build_alpha(m, stages, depth)?)))
    }

    pub fn trace(&self) -> &Arc<AlphaTrace> {
        &self.trace
    }

    fn leaf_depth(&self, t: Stage) -> usize {
        (t as usize).min(self.trace.depth)
    }
}

/// `ν^t` for one stage of the trace.
pub fn build_nu(trace: &Arc<AlphaTrace>, t: Stage) -> crate::staged::StageView {
    crate::staged::StageView::new(Arc::new(CounterexampleNu::new(trace.clone())), t)
}

impl StagedSemimeasure for CounterexampleNu {
    fn alphabet(&self) -> Alphabet {
        Alphabet::BINARY
    }

    fn eval_at_stage(&self, t: Stage, x: &[Symbol]) -> Rational {
        let l = self.leaf_depth(t);
        if t == 0 || x.len() > l || Alphabet::BINARY.validate(x).is_err() {
            return RBig::ZERO;
        }
        let a = self.trace.alpha(t);
        match x.cmp(&a[..x.len()]) {
            core::cmp::Ordering::Less => pow2_neg(x.len()),
            core::cmp::Ordering::Greater => RBig::ZERO,
            core::cmp::Ordering::Equal => {
                let below = a[x.len()..l].iter().fold(RBig::ZERO, |acc, &b| acc * int(2) + int(b as i64));
                below * pow2_neg(l)
            }
        }
    }

    fn level_mass_at_stage(&self, t: Stage, n: usize) -> Option<Rational> {
        if n > self.leaf_depth(t) {
            Some(RBig::ZERO)
        } else {
            Some(self.eval_at_stage(t, &[]))
        }
    }

    fn mass_below_at_stage(&self, t: Stage, x: &[Symbol], depth: usize) -> Option<Rational> {
        if depth > self.leaf_depth(t) {
            Some(RBig::ZERO)
        } else {
            Some(self.eval_at_stage(t, x))
        }
    }
}

/// `(1-γ)/(1+3γ)`.
pub fn contamination_bound(gamma: &Rational) -> Rational {
    (RBig::ONE - gamma) / (RBig::ONE + int(3) * gamma)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContaminatedReport {
    pub gamma: Rational,
    pub lower_bound: Rational,
    pub alpha: Str,
    /// `M′(α_n|α_{<n})` for `n = 1..=N`.
    pub conditionals: Vec<Rational>,
    /// Positions with `α_n α_{n+1} = 01`.
    pub positions: Vec<usize>,
    /// Positions where the conditional is below the bound.
    pub failures: Vec<usize>,
    /// `ν(α_{<n}) = ν(α_{1:n})` and `ν(α_{1:n}) >= 2^{-n-1}` at every position.
    pub nu_identities_hold: bool,
    /// Count of `n` with `|M′(α_n|α_{<n}) - ½| >= 1/6`.
    pub far_from_half: usize,
}

impl ContaminatedReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty() && !self.positions.is_empty()
    }
}

/// Forms `M′ = (1-γ)ν + γM` and checks the conditional bound along `α`.
pub fn contaminated_mixture(
    nu: SharedSemimeasure,
    m: SharedSemimeasure,
    gamma: &ExactProb,
    alpha: &Str,
) -> Result<(Mix, ContaminatedReport)> {
    let g = gamma.value().clone();
    if g <= RBig::ZERO || g >= ratio(1, 5) {
        return Err(Error::GammaOutOfRange(g));
    }
    let mix = Mix::new(Alphabet::BINARY, alloc::vec![(RBig::ONE - &g, nu.clone()), (g.clone(), m)])?;
    let prof = mix.path_profile(alpha);
    let mut conditionals = Vec::with_capacity(alpha.len());
    for n in 1..=alpha.len() {
        if prof.prefix[n - 1] == RBig::ZERO {
            return Err(Error::ZeroConditioning { prefix: alpha.prefix(n - 1) });
        }
        conditionals.push(&prof.prefix[n] / &prof.prefix[n - 1]);
    }
    let positions: Vec<usize> = (1..alpha.len()).filter(|&n| alpha[n - 1] == 0 && alpha[n] == 1).collect();
    let lower_bound = contamination_bound(&g);
    let failures = positions.iter().copied().filter(|&n| conditionals[n - 1] < lower_bound).collect();
    let nu_prof = nu.path_profile(alpha);
    let nu_identities_hold = positions
        .iter()
        .all(|&n| nu_prof.prefix[n - 1] == nu_prof.prefix[n] && nu_prof.prefix[n] >= pow2_neg(n + 1));
    let half = ratio(1, 2);
    let sixth = ratio(1, 6);
    let far_from_half = conditionals
        .iter()
        .filter(|c| {
            let d = if **c >= half { *c - &half } else { &half - *c };
            d >= sixth
        })
        .count();
    let report = ContaminatedReport {
        gamma: g,
        lower_bound,
        alpha: alpha.clone(),
        conditionals,
        positions,
        failures,
        nu_identities_hold,
        far_from_half,
    };
    Ok((mix, report))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AntiDominance {
    pub alphabet: Alphabet,
    pub alpha: Str,
    /// `ν(α_n|α_{<n})` for `n = 1..=N`.
    pub conditionals: Vec<Rational>,
    /// `ν(α_{1:n})` for `n = 0..=N`.
    pub values: Vec<Rational>,
    /// `Π_{k<=n}(1 + 1/k²)` for `n = 0..=N`.
    pub partial_products: Vec<Rational>,
    /// Every chosen conditional is strictly below `|X|^{-1}(1 + 1/n²)`.
    pub strict_choice: bool,
    /// `ν(α_{1:n}) <= Π_{k<=n}(1 + 1/k²) |X|^{-n}` for all `n`.
    pub product_bound: bool,
    /// `ν(α_{1:n}) <= 4 |X|^{-n}` for all `n`.
    pub four_bound: bool,
}

/// Greedy `α_n = argmin_a ν(a|α_{<n})` (smallest symbol on ties).
pub fn anti_dominance_sequence<S: Semimeasure + ?Sized>(nu: &S, depth: usize) -> Result<AntiDominance> {
    let alphabet = nu.alphabet();
    let inv_n = ratio(1, alphabet.size() as u64);
    let mut x: Vec<Symbol> = Vec::with_capacity(depth);
    let mut vx = nu.eval(&[]);
    let mut values = alloc::vec![vx.clone()];
    let mut conditionals = Vec::with_capacity(depth);
    let mut partial_products = alloc::vec![RBig::ONE];
    let mut strict_choice = true;
    let mut product_bound = vx <= RBig::ONE;
    let mut four_bound = vx <= int(4);
    for n in 1..=depth {
        if vx == RBig::ZERO {
            return Err(Error::ZeroConditioning { prefix: Str::from(x) });
        }
        let ch = nu.eval_children_from(&x, &vx);
        let (a, best) = ch
            .iter()
            .enumerate()
            .fold((0usize, &ch[0]), |(ba, bv), (i, v)| if v < bv { (i, v) } else { (ba, bv) });
        let best = best.clone();
        let cond = &best / &vx;
        let k = n as u64;
        let factor = RBig::ONE + ratio(1, k * k);
        strict_choice &= cond < &inv_n * &factor;
        let p = partial_products.last().unwrap() * &factor;
        let scale = powi(&inv_n, n);
        product_bound &= best <= &p * &scale;
        four_bound &= best <= int(4) * &scale;
        partial_products.push(p);
        x.push(a as Symbol);
        conditionals.push(cond);
        vx = best;
        values.push(vx.clone());
    }
    Ok(AntiDominance {
        alphabet,
        alpha: Str::from(x),
        conditionals,
        values,
        partial_products,
        strict_choice,
        product_bound,
        four_bound,
    })
}

/// `sinh(π)/π = Π_{k>=1}(1 + 1/k²)`.
pub const SINH_PI_OVER_PI: f64 = 3.676_077_910_374_978;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainLink {
    pub n: usize,
    /// `δ_k(α_{1:n}) <= 4 |X|^{-n} ν̄(α_{1:n})`.
    pub deterministic_bound: bool,
    /// `ν̄(α_{1:n}) <= 2^{κ̄} M̄(α_{1:n})`.
    pub dominance: bool,
    /// `δ_k(α_{1:n}) <= 4 |X|^{-n} k² 2^k M̄(α_{1:n})`.
    pub combined: bool,
    /// `|X|^{-n} k² 2^k <= k² 2^{-k}`, required only once `|X|^n >= 4^k`.
    pub tail_applies: bool,
    pub tail: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AntiDominanceChain {
    pub k: usize,
    /// Code length given to the deterministic measure on `α`.
    pub code_length: u32,
    /// `2^{κ̄} <= k² 2^k`.
    pub code_length_ok: bool,
    pub links: Vec<ChainLink>,
}

impl AntiDominanceChain {
    pub fn holds(&self) -> bool {
        self.code_length_ok
            && self.links.iter().all(|l| l.deterministic_bound && l.dominance && l.combined && l.tail)
    }
}

/// `k + floor(2 log₂ k)`, the largest code length with `2^κ <= k² 2^k`.
pub fn chain_code_length(k: usize) -> u32 {
    let k2 = (k * k) as u128;
    let log = 127 - k2.leading_zeros();
    k as u32 + log
}

/// Evaluates each link of the chain bounding `δ_k` on its anti-dominance
/// sequence by `M̄ = (1 - 2^{-κ̄}) M + 2^{-κ̄} ν̄`, where `M` is the code-length
/// mixture of `reg` and `ν̄` the deterministic measure on `α`.
pub fn anti_dominance_chain(
    delta_k: &dyn Semimeasure,
    k: usize,
    reg: &ModelRegistry,
    stage: Stage,
    depth: usize,
) -> Result<(AntiDominance, AntiDominanceChain)> {
    let ad = anti_dominance_sequence(delta_k, depth)?;
    let alphabet = reg.alphabet();
    let code_length = chain_code_length(k);
    let nu_bar = Deterministic::new(alphabet, Arc::new(EventuallyConstant { head: ad.alpha.to_vec(), tail: 0 }));
    let bar_weight = pow2_neg(code_length as usize);
    let keep = RBig::ONE - &bar_weight;
    let mut parts: Vec<(Rational, SharedStaged)> =
        reg.entries().iter().map(|e| (&keep * e.weight(WeightRule::CodeLength), e.model.clone())).collect();
    parts.push((bar_weight, crate::staged::Constant::shared(nu_bar.clone())));
    let m_bar = StagedMixture::new(alphabet, parts)?;
    let prof = m_bar.path_profile_at_stage(stage, &ad.alpha);
    let kk = int((k * k) as i64);
    let code_length_ok = pow2(code_length as usize) <= &kk * pow2(k);
    let inv_n = ratio(1, alphabet.size() as u64);
    let mut links = Vec::with_capacity(depth);
    for n in 1..=depth {
        let scale = powi(&inv_n, n);
        let d = &ad.values[n];
        let nb = nu_bar.eval(&ad.alpha[..n]);
        let mb = &prof.prefix[n];
        let tail_applies = powi(&int(alphabet.size() as i64), n) >= powi(&int(4), k);
        links.push(ChainLink {
            n,
            deterministic_bound: *d <= int(4) * &scale * &nb,
            dominance: nb <= pow2(code_length as usize) * mb,
            combined: *d <= int(4) * &scale * &kk * pow2(k) * mb,
            tail_applies,
            tail: !tail_applies || &scale * &kk * pow2(k) <= &kk * pow2_neg(k),
        });
    }
    Ok((ad, AntiDominanceChain { k, code_length, code_length_ok, links }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OscillationRow {
    pub n: usize,
    /// `R(α_{1:n})/R(α_{<n})` with `R = M/λ`.
    pub r_ratio: Rational,
    /// Same for `R′ = ½(R + r)`.
    pub r_prime_ratio: Rational,
    /// `r(α_{1:n})`.
    pub r_value: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OscillationReport {
    pub rows: Vec<OscillationRow>,
    pub window: usize,
    pub delta: Rational,
    /// Windows (by first position) where `r` moves both up and down.
    pub flip_windows: usize,
    /// Smallest `max(½ spread R-ratio, ½ spread R′-ratio)` over those windows.
    pub min_amplitude: Option<Rational>,
}

impl OscillationReport {
    /// Neither ratio stays within `δ` of any constant over any flip window.
    pub fn holds(&self) -> bool {
        self.min_amplitude.as_ref().is_some_and(|a| *a > self.delta)
    }
}

fn half_spread(v: &[&Rational]) -> Rational {
    let lo = v.iter().min().unwrap();
    let hi = v.iter().max().unwrap();
    (*hi - *lo) * ratio(1, 2)
}

/// Windowed oscillation of `R = M/λ` and `R′ = ½(R + r)` along `α`.
pub fn oscillation_report(
    m: &dyn Semimeasure,
    r: &OscillatorR,
    alpha: &Str,
    window: usize,
    delta: Rational,
) -> OscillationReport {
    let prof = m.path_profile(alpha);
    let big_r = |n: usize| &prof.prefix[n] * pow2(n);
    let rv: Vec<Rational> = (0..=alpha.len()).map(|n| r.eval(&alpha[..n])).collect();
    let half = ratio(1, 2);
    let rows: Vec<OscillationRow> = (1..=alpha.len())
        .map(|n| {
            let (a, b) = (big_r(n - 1), big_r(n));
            let rp = |v: &Rational, s: &Rational| (v + s) * &half;
            OscillationRow {
                n,
                r_ratio: &b / &a,
                r_prime_ratio: rp(&b, &rv[n]) / rp(&a, &rv[n - 1]),
                r_value: rv[n].clone(),
            }
        })
        .collect();
    let mut flip_windows = 0;
    let mut min_amplitude: Option<Rational> = None;
    if window >= 2 && rows.len() >= window {
        for s in 0..=rows.len() - window {
            let w = &rows[s..s + window];
            let prev = |i: usize| &rv[w[i].n - 1];
            let up = (0..window).any(|i| w[i].r_value > *prev(i));
            let down = (0..window).any(|i| w[i].r_value < *prev(i));
            if !(up && down) {
                continue;
            }
            flip_windows += 1;
            let a = half_spread(&w.iter().map(|x| &x.r_ratio).collect::<Vec<_>>());
            let b = half_spread(&w.iter().map(|x| &x.r_prime_ratio).collect::<Vec<_>>());
            let amp = if a > b { a } else { b };
            if min_amplitude.as_ref().is_none_or(|m| amp < *m) {
                min_amplitude = Some(amp);
            }
        }
    }
    OscillationReport { rows, window, delta, flip_windows, min_amplitude }
}
