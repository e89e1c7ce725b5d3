//! The invariant suite behind `semilab verify`.

use std::sync::Arc;

use dashu_ratio::RBig;
use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

use semilab_core::alphabet::{for_each_string, Alphabet};
use semilab_core::counterexample::{anti_dominance_sequence, build_alpha, build_nu, build_r, contaminated_mixture};
use semilab_core::hellinger::{
    bhattacharyya, chain_bound_pair, chain_bound_sequence, chain_product_bound, hellinger_distance,
    tail_probabilities, verify_kappa_bound, verify_lemma1,
};
use semilab_core::measure::{verify_semimeasure, Semimeasure, SharedSemimeasure};
use semilab_core::prob::{format_rational, pow2_neg, ratio, sum, ExactProb, Rational};
use semilab_core::quasi::{build_d, build_w, delta_hat_k, delta_k, verify_quasimeasure, Cutoff, QuasiConversion};
use semilab_core::randomness::{expected_to_individual, is_supermartingale, semimeasure_to_supermartingale, HellingerSum};
use semilab_core::real::Real;
use semilab_core::registry::{dominance_constant, measure_indices, ModelRegistry, WeightRule};
use semilab_core::staged::{verify_staged, SharedStaged, StageView, StagedSemimeasure};

use crate::artifacts::Verdict;
use crate::config::ExperimentConfig;
use crate::experiments::{lemma1_pair, real};

type Check = Result<String, String>;
type CheckFn<'a> = fn(&Suite<'a>) -> Check;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ensure(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

pub struct Suite<'a> {
    cfg: &'a ExperimentConfig,
    reg: &'a ModelRegistry,
}

impl<'a> Suite<'a> {
    pub fn new(cfg: &'a ExperimentConfig, reg: &'a ModelRegistry) -> Self {
        Suite { cfg, reg }
    }

    /// Runs every check; a check that errors is recorded as a failure.
    pub fn run(&self, mut progress: impl FnMut(&Verdict)) -> Vec<Verdict> {
        let checks: Vec<(&str, CheckFn)> = vec![
            ("registry weights sum to at most 1", Self::weights),
            ("entries are staged semimeasures", Self::staged),
            ("measure flags and partial mixtures", Self::measure_flags),
            ("mixture dominates each entry", Self::dominance),
            ("normalized partial mixtures dominate their measures", Self::normalized_dominance),
            ("ratio to uniform is a supermartingale", Self::supermartingales),
            ("expected Hellinger chain", Self::expected_chain),
            ("Hellinger tail bound", Self::tail),
            ("kappa-generalized chain", Self::kappa),
            ("Hellinger inequalities on random vectors", Self::random_vectors),
            ("quasimeasure conversion", Self::quasimeasures),
            ("W is D plus a semimeasure, up to the staged gap", Self::w_and_d),
            ("expected to individual bound", Self::mu_bar),
            ("counterexample construction", Self::counterexample),
            ("anti-dominance sequences", Self::anti_dominance),
        ];
        checks
            .into_iter()
            .map(|(name, f)| {
                let v = match f(self) {
                    Ok(detail) => Verdict::new(name, true, detail),
                    Err(detail) => Verdict::new(name, false, detail),
                };
                progress(&v);
                v
            })
            .collect()
    }

    fn weights(&self) -> Check {
        let mut parts = Vec::new();
        for rule in [WeightRule::CodeLength, WeightRule::Polynomial] {
            let total = self.reg.total_weight(rule);
            ensure(total <= RBig::ONE, || format!("{} weights sum to {}", rule.name(), format_rational(&total)))?;
            parts.push(format!("{} {}", rule.name(), format_rational(&total)));
        }
        Ok(parts.join(", "))
    }

    fn staged(&self) -> Check {
        let (t, d) = (self.cfg.stages.min(16), self.cfg.depth);
        for e in self.reg.entries() {
            let r = verify_staged(&*e.model, t, d, self.cfg.budget()).map_err(fail)?;
            ensure(r.passed, || format!("entry {} ({}): {} at {:?}", e.index, e.name, r.reason.unwrap_or(""), r.witness))?;
        }
        Ok(format!("{} entries, stages 1..={t}, depth {d}", self.reg.len()))
    }

    fn measure_flags(&self) -> Check {
        let d = self.cfg.depth;
        self.reg.validate_measures(d, self.cfg.budget()).map_err(|e| format!("delta_k validation: {e}"))?;
        let ks = measure_indices(self.reg, self.reg.len());
        for &k in &ks {
            let dk = delta_k(self.reg, k).map_err(fail)?;
            let r = verify_semimeasure(&dk, d, self.cfg.budget()).map_err(fail)?;
            let total: Rational = sum(
                measure_indices(self.reg, k).into_iter().map(|i| self.reg.weight(i, WeightRule::Polynomial).unwrap_or_default()),
            );
            ensure(r.passed && r.additive && r.root == total, || {
                format!("delta_{k} is not its total weight times a measure at {:?}", r.witness.or(r.first_strict))
            })?;
        }
        Ok(format!("{} measure entries, each delta_k its total weight times a measure to depth {d}", ks.len()))
    }

    fn dominance(&self) -> Check {
        let t = self.cfg.stages;
        let m = self.reg.mixture(WeightRule::CodeLength).map_err(fail)?;
        for e in self.reg.entries() {
            let view = StageView::new(e.model.clone(), t);
            let c = dominance_constant(&m, &view, self.cfg.depth, t, self.cfg.budget()).map_err(fail)?;
            let w = e.weight(WeightRule::CodeLength);
            ensure(c >= w, || format!("entry {}: min M/nu = {} < {}", e.index, format_rational(&c), format_rational(&w)))?;
        }
        Ok(format!("stage {t}, depth {}", self.cfg.depth))
    }

    fn normalized_dominance(&self) -> Check {
        let ks = measure_indices(self.reg, self.reg.len());
        let mut worst: Option<Rational> = None;
        for &k in &ks {
            let dh = delta_hat_k(self.reg, k).map_err(fail)?;
            let mu = self.reg.limit_of(k).map_err(fail)?;
            let eps = semilab_core::registry::polynomial_weight(k);
            let mut bad = None;
            for n in 0..=self.cfg.depth {
                for_each_string(self.reg.alphabet(), n, |x| {
                    let v = mu.eval(x);
                    if v > RBig::ZERO {
                        let r = dh.eval(x) / v;
                        if r < eps && bad.is_none() {
                            bad = Some(x.to_vec());
                        }
                        if worst.as_ref().is_none_or(|w| r < *w) {
                            worst = Some(r);
                        }
                    }
                });
            }
            ensure(bad.is_none(), || format!("k = {k}: ratio below eps_k at {bad:?}"))?;
        }
        Ok(format!("min ratio {}", worst.map(|w| format!("{:.4}", w.to_f64().value())).unwrap_or_default()))
    }

    fn supermartingales(&self) -> Check {
        if self.reg.alphabet() != Alphabet::BINARY {
            return Ok("skipped: non-binary alphabet".into());
        }
        for e in self.reg.entries() {
            let sm = semimeasure_to_supermartingale(StageView::shared(e.model.clone(), self.cfg.stages)).map_err(fail)?;
            let r = is_supermartingale(&sm, self.cfg.depth, self.cfg.budget()).map_err(fail)?;
            ensure(r.passed, || format!("entry {}: fails at {:?}", e.index, r.witness))?;
        }
        Ok(format!("depth {}", self.cfg.depth))
    }

    fn expected_chain(&self) -> Check {
        let (mu, nu) = lemma1_pair();
        let w = ExactProb::ratio(1, 2).map_err(fail)?;
        let r = verify_lemma1(&*mu, &nu, &w, self.cfg.horizon, self.cfg.precision(), self.cfg.budget()).map_err(fail)?;
        ensure(r.chain_ok, || "chain of members fails".into())?;
        ensure(r.exp_ok, || format!("exp form exceeds 1, margin {}", real(&r.margin)))?;
        ensure(r.monotone_ok, || "members not monotone in the horizon".into())?;
        let last = r.horizon.saturating_sub(1);
        Ok(format!(
            "n = {}: {} <= {} <= {} <= {}, margin {}",
            r.horizon,
            real(&r.member_i[last]),
            real(&r.member_ii[last]),
            real(&r.member_iii[last]),
            real(&r.bound),
            real(&r.margin)
        ))
    }

    fn tail(&self) -> Check {
        let (mu, nu) = lemma1_pair();
        let w = ExactProb::ratio(1, 2).map_err(fail)?;
        let cs = [ratio(1, 1), ratio(2, 1), ratio(4, 1)];
        let tails = tail_probabilities(&*mu, &nu, &w, self.cfg.horizon, &cs, self.cfg.precision(), self.cfg.budget())
            .map_err(fail)?;
        let mut parts = Vec::new();
        for t in &tails {
            ensure(t.passed, || format!("c = {}: P = {}", format_rational(&t.c), format_rational(&t.probability)))?;
            parts.push(format!("c = {}: P = {}", format_rational(&t.c), format_rational(&t.probability)));
        }
        Ok(parts.join("; "))
    }

    fn kappa(&self) -> Check {
        let (mu, nu) = lemma1_pair();
        let w = ExactProb::ratio(1, 2).map_err(fail)?;
        for k in [ratio(1, 4), ratio(1, 2)] {
            let r = verify_kappa_bound(&*mu, &nu, &w, &k, self.cfg.horizon, self.cfg.precision(), self.cfg.budget())
                .map_err(fail)?;
            ensure(r.passed, || format!("kappa = {} fails", format_rational(&k)))?;
        }
        Ok("kappa in {1/4, 1/2}".into())
    }

    fn random_vectors(&self) -> Check {
        let prec = self.cfg.precision();
        let tol = prec.tolerance();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let draw = |rng: &mut ChaCha8Rng, dim: usize, total: &Rational| -> Vec<Real> {
            let raw: Vec<u64> = (0..dim).map(|_| 1 + rng.next_u64() % 50).collect();
            let s: u64 = raw.iter().sum();
            raw.iter().map(|&v| prec.rational(&(ratio(v as i64, s) * total))).collect()
        };
        let one = RBig::ONE;
        for case in 0..1000 {
            let dim = 2 + (rng.next_u64() % 4) as usize;
            let m = 2 + (rng.next_u64() % 5) as usize;
            let chain: Vec<Vec<Real>> = (0..m).map(|_| draw(&mut rng, dim, &one)).collect();
            let links: Vec<Real> = chain.windows(2).map(|w| hellinger_distance(&w[0], &w[1])).collect();
            let ends = hellinger_distance(&chain[0], &chain[m - 1]);
            let product = chain_product_bound(&links, prec);
            ensure(ends.le_tol(&product, &tol) && product.le_tol(&chain_bound_sequence(&links, prec), &tol), || {
                format!("case {case}: chain of {m}")
            })?;
            let k = 1 + (rng.next_u64() % 10) as i64;
            for beta in [ratio(1, 2), ratio(1, 1), ratio(2, 1), ratio(k * (k + 1), 1)] {
                let b = chain_bound_pair(&links[0], &hellinger_distance(&chain[1], &chain[m - 1]), &prec.rational(&beta));
                ensure(ends.le_tol(&b, &tol), || format!("case {case}: pair bound with beta {}", format_rational(&beta)))?;
            }
            let mass = ratio((1 + rng.next_u64() % 100) as i64, 100);
            let q = draw(&mut rng, dim, &mass);
            let h = hellinger_distance(&chain[0], &q);
            let half = prec.rational(&ratio(1, 2));
            let mid = prec.one() - &half * &h;
            ensure(bhattacharyya(&chain[0], &q).le_tol(&mid, &tol) && mid.le_tol(&(-(&half * &h)).exp(), &tol), || {
                format!("case {case}: Bhattacharyya inequality")
            })?;
        }
        Ok(format!("1000 seeded instances, seed {}", self.cfg.seed))
    }

    fn quasimeasures(&self) -> Check {
        let (t_max, d) = (self.cfg.stages.min(32), self.cfg.depth);
        let b = self.cfg.budget();
        let mut cutoffs = Vec::new();
        let mut truncated = 0;
        for e in self.reg.entries() {
            let conv = Arc::new(QuasiConversion::build(e.model.clone(), t_max, b).map_err(fail)?);
            for t in 1..=t_max {
                let view = StageView::new(conv.clone() as SharedStaged, t);
                match conv.cutoff(t) {
                    Cutoff::Finite(n) if n + 1 > d => {
                        // Too deep to enumerate: additivity and the root bound to depth d.
                        let r = verify_semimeasure(&view, d, b).map_err(fail)?;
                        let root_ok = r.root > RBig::ONE - ratio(1, n as u64);
                        ensure(r.passed && r.additive && root_ok, || {
                            format!("entry {} stage {t}: invariants fail at {:?}", e.index, r.witness.or(r.first_strict))
                        })?;
                        truncated += 1;
                    }
                    cutoff => {
                        let r = verify_quasimeasure(&view, cutoff, conv.level(t).min(d), b).map_err(fail)?;
                        ensure(r.passed, || format!("entry {} stage {t}: invariants fail at {:?}", e.index, r.witness))?;
                    }
                }
                let mut ok = true;
                for n in 0..=d {
                    for_each_string(self.reg.alphabet(), n, |x| {
                        let v = conv.eval_at(t, x);
                        ok &= conv.eval_at(t - 1, x) <= v && v <= e.model.eval_at_stage(t, x);
                    });
                }
                ensure(ok, || format!("entry {} stage {t}: not monotone or above the source", e.index))?;
            }
            if e.is_measure {
                let lim = e.model.limit().ok_or_else(|| format!("entry {} has no limit", e.index))?;
                if conv.is_measure() {
                    let mut same = true;
                    for n in 0..=d {
                        for_each_string(self.reg.alphabet(), n, |x| same &= conv.eval_at(t_max, x) == lim.eval(x));
                    }
                    ensure(same, || format!("entry {}: conversion differs from the measure", e.index))?;
                }
            }
            cutoffs.push(format!("{}:{:?}", e.index, conv.cutoff(t_max)));
        }
        Ok(format!(
            "stages 1..={t_max}, depth {d}, cutoffs {}; {truncated} stage views with cutoffs past depth {d} checked to depth {d}",
            cutoffs.join(" ")
        ))
    }

    fn w_and_d(&self) -> Check {
        let t = self.cfg.stages;
        let w = build_w(self.reg, t, self.cfg.budget()).map_err(fail)?;
        let d = build_d(self.reg).map_err(fail)?;
        let excess = w.excess(t).map_err(fail)?;
        let staged = w.measure_part(t).map_err(fail)?;
        let r = verify_semimeasure(&excess, self.cfg.depth, self.cfg.budget()).map_err(fail)?;
        ensure(r.passed, || format!("W - D fails at {:?}", r.witness))?;
        let view = w.at_stage(t);
        // Each staged measure term is additive down to its level m with root
        // mass above 1 - 1/m, so D minus the staged part is non-negative,
        // bounded by its root value, and that root value by Σ ε_i/m_i.
        let root_gap = d.eval(&[]) - staged.eval(&[]);
        let allowed = sum(w.parts().iter().filter(|p| p.is_measure && !p.conversion.is_measure()).map(|p| {
            let m = p.conversion.level(t).max(1);
            &p.weight * ratio(1, m as u64)
        }));
        let mut bad = None;
        for n in 0..=self.cfg.depth {
            for_each_string(self.reg.alphabet(), n, |x| {
                let m = staged.eval(x);
                let short = d.eval(x) - &m;
                if bad.is_none() && (view.eval(x) != &m + excess.eval(x) || short < RBig::ZERO || short > root_gap) {
                    bad = Some(x.to_vec());
                }
            });
        }
        ensure(bad.is_none(), || format!("W is not D - (staged gap) + (W - D) at {bad:?}"))?;
        let prec = self.cfg.precision();
        ensure(root_gap <= allowed, || {
            format!("staged gap {} above the quasimeasure bound {}", real(&prec.rational(&root_gap)), real(&prec.rational(&allowed)))
        })?;
        Ok(format!("stage {t}, depth {}, staged gap to D {}", self.cfg.depth, real(&prec.rational(&root_gap))))
    }

    fn mu_bar(&self) -> Check {
        let prec = self.cfg.precision();
        let n = self.cfg.depth.min(8);
        let (mu, nu) = lemma1_pair();
        let f = HellingerSum::new(mu.clone(), Arc::new(nu), 64, prec);
        let eps = prec.ln2().dyadic_floor(64) + pow2_neg(64);
        let (_, rep) = expected_to_individual(&*mu, &f, &vec![eps; n + 1], n, self.cfg.budget()).map_err(fail)?;
        ensure(rep.passed(), || format!("fails at {:?}", rep.witness))?;
        Ok(format!("mu_bar_0..mu_bar_{n} semimeasures, monotone in n"))
    }

    fn counterexample(&self) -> Check {
        if self.reg.alphabet() != Alphabet::BINARY {
            return Ok("skipped: non-binary alphabet".into());
        }
        let k = self.reg.entries().iter().position(|e| e.name.starts_with("counterexample-nu")).unwrap_or(self.reg.len());
        if k == 0 {
            return Ok("skipped: nothing precedes the counterexample entry".into());
        }
        let n = self.cfg.horizon.max(self.cfg.depth);
        let t = self.cfg.stages;
        let base: SharedStaged = Arc::new(self.reg.truncated(k).mixture(WeightRule::CodeLength).map_err(fail)?);
        let trace = Arc::new(build_alpha(&*base, t, n).map_err(fail)?);
        let v = trace.randomness_violations();
        ensure(v.is_empty(), || format!("M^t(alpha^t_1:n) > 2^-n at {:?}", v[0]))?;
        let r = build_r(&trace);
        let sm = is_supermartingale(&r, n, self.cfg.budget()).map_err(fail)?;
        ensure(sm.passed, || format!("r fails at {:?}", sm.witness))?;
        let nu = Arc::new(build_nu(&trace, t)) as SharedSemimeasure;
        let gamma = ExactProb::new(self.cfg.gamma().map_err(fail)?).map_err(fail)?;
        let (_, rep) = contaminated_mixture(nu, StageView::shared(base, t), &gamma, trace.final_alpha()).map_err(fail)?;
        ensure(rep.failures.is_empty(), || format!("M' conditional below the bound at {:?}", rep.failures))?;
        Ok(format!("N = {n}, T = {t}, alpha = {}, 01-positions {:?}", trace.final_alpha(), rep.positions))
    }

    fn anti_dominance(&self) -> Check {
        let n = self.cfg.horizon.max(self.cfg.depth);
        let ks = measure_indices(self.reg, self.reg.len());
        let Some(&first) = ks.first() else { return Ok("skipped: no measure entries".into()) };
        for k in first..=self.reg.len() {
            let dk = delta_k(self.reg, k).map_err(fail)?;
            let ad = anti_dominance_sequence(&dk, n).map_err(fail)?;
            ensure(ad.four_bound && ad.product_bound, || format!("delta_{k} exceeds the bound along its sequence"))?;
        }
        Ok(format!("delta_{first}..delta_{} to n = {n}", self.reg.len()))
    }
}
