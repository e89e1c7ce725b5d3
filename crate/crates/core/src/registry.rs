//! Indexed model registries, weight rules and the mixtures built from them.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use dashu_ratio::RBig;

use crate::alphabet::{for_each_string, Alphabet, Budget, Str, Symbol};
use crate::counterexample::CounterexampleNu;
use crate::error::{Error, Result};
use crate::families::{Deterministic, Iid, Periodic, Poly3, Scaled, Truncated, Uniform};
use crate::measure::{verify_semimeasure, Semimeasure, SharedSemimeasure};
use crate::prob::{parse_rational, pow2_neg, powi, ratio, sum, ExactProb, Rational};
use crate::staged::{Constant, DyadicStaircase, LimitView, SharedStaged, Stage, StagedMixture};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WeightRule {
    /// `w_i = 2^{-κ_i}`.
    CodeLength,
    /// `ε_i = i^{-6} 2^{-i}`.
    Polynomial,
}

impl WeightRule {
    pub fn name(self) -> &'static str {
        match self {
            WeightRule::CodeLength => "code-length",
            WeightRule::Polynomial => "polynomial",
        }
    }
}

impl core::str::FromStr for WeightRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "code-length" => Ok(WeightRule::CodeLength),
            "polynomial" => Ok(WeightRule::Polynomial),
            _ => Err(Error::InvalidParameter(alloc::format!("unknown weight rule \"{s}\""))),
        }
    }
}

/// `ε_i = i^{-6} 2^{-i}` for a 1-based index.
pub fn polynomial_weight(i: usize) -> Rational {
    assert!(i >= 1, "registry indices start at 1");
    powi(&ratio(1, i as u64), 6) * pow2_neg(i)
}

#[derive(Clone)]
pub struct RegistryEntry {
    pub index: usize,
    pub name: String,
    pub model: SharedStaged,
    pub code_length: u32,
    pub is_measure: bool,
}

impl RegistryEntry {
    pub fn weight(&self, rule: WeightRule) -> Rational {
        match rule {
            WeightRule::CodeLength => pow2_neg(self.code_length as usize),
            WeightRule::Polynomial => polynomial_weight(self.index),
        }
    }
}

impl core::fmt::Debug for RegistryEntry {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("RegistryEntry")
            .field("index", &self.index)
            .field("name", &self.name)
            .field("code_length", &self.code_length)
            .field("is_measure", &self.is_measure)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub struct ModelRegistry {
    alphabet: Alphabet,
    entries: Vec<RegistryEntry>,
}

impl ModelRegistry {
    pub fn new(alphabet: Alphabet) -> Self {
        ModelRegistry { alphabet, entries: Vec::new() }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// Appends an entry and returns its 1-based index.
    pub fn push(
        &mut self,
        name: impl Into<String>,
        model: SharedStaged,
        code_length: u32,
        is_measure: bool,
    ) -> Result<usize> {
        self.alphabet.ensure_same(model.alphabet())?;
        let index = self.entries.len() + 1;
        self.entries.push(RegistryEntry { index, name: name.into(), model, code_length, is_measure });
        Ok(index)
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry by 1-based index.
    pub fn get(&self, index: usize) -> Option<&RegistryEntry> {
        index.checked_sub(1).and_then(|i| self.entries.get(i))
    }

    pub fn weight(&self, index: usize, rule: WeightRule) -> Option<Rational> {
        self.get(index).map(|e| e.weight(rule))
    }

    pub fn total_weight(&self, rule: WeightRule) -> Rational {
        sum(self.entries.iter().map(|e| e.weight(rule)))
    }

    /// Exact limit of entry `index`.
    pub fn limit_of(&self, index: usize) -> Result<SharedSemimeasure> {
        let e = self.get(index).ok_or_else(|| Error::InvalidParameter(alloc::format!("no entry {index}")))?;
        Ok(Arc::new(LimitView::new(e.model.clone())?))
    }

    /// Checks every entry flagged as a measure to `depth`.
    pub fn validate_measures(&self, depth: usize, budget: Budget) -> Result<()> {
        for e in self.entries.iter().filter(|e| e.is_measure) {
            let lim = e
                .model
                .limit()
                .ok_or(Error::MeasureFlagInvalid { index: e.index, witness: None })?;
            let r = verify_semimeasure(lim, depth, budget)?;
            if !r.is_measure() {
                let witness = r.witness.or(r.first_strict).unwrap_or_default();
                return Err(Error::MeasureFlagInvalid { index: e.index, witness: Some(witness) });
            }
        }
        Ok(())
    }

    /// Registry restricted to the first `k` entries.
    pub fn truncated(&self, k: usize) -> ModelRegistry {
        ModelRegistry { alphabet: self.alphabet, entries: self.entries.iter().take(k).cloned().collect() }
    }

    /// Staged mixture `Σ_i w_i ν_i^t`.
    pub fn mixture(&self, rule: WeightRule) -> Result<StagedMixture> {
        mixture(self, rule)
    }
}

/// Staged mixture over all entries with the given weight rule.
pub fn mixture(reg: &ModelRegistry, rule: WeightRule) -> Result<StagedMixture> {
    if reg.is_empty() {
        return Err(Error::EmptyRegistry);
    }
    let total = reg.total_weight(rule);
    if total > RBig::ONE {
        return Err(Error::WeightOverflow { total });
    }
    let parts = reg.entries.iter().map(|e| (e.weight(rule), e.model.clone())).collect();
    StagedMixture::new(reg.alphabet, parts)
}

/// `min { M^stage(x)/ν(x) : ℓ(x) <= depth, ν(x) > 0 }`.
pub fn dominance_constant(
    m: &dyn crate::staged::StagedSemimeasure,
    nu: &dyn Semimeasure,
    depth: usize,
    stage: Stage,
    budget: Budget,
) -> Result<Rational> {
    m.alphabet().ensure_same(nu.alphabet())?;
    budget.check_level(nu.alphabet(), depth)?;
    let mut best: Option<Rational> = None;
    for n in 0..=depth {
        for_each_string(nu.alphabet(), n, |x| {
            let v = nu.eval(x);
            if v > RBig::ZERO {
                let r = m.eval_at_stage(stage, x) / v;
                if best.as_ref().is_none_or(|b| r < *b) {
                    best = Some(r);
                }
            }
        });
    }
    best.ok_or(Error::EmptySupport { prefix: Str::empty() })
}

/// One registry entry described by family name and textual parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntrySpec {
    pub family: String,
    pub params: Vec<String>,
    pub code_length: u32,
    pub is_measure: bool,
}

impl EntrySpec {
    pub fn new(family: &str, params: &[&str], code_length: u32, is_measure: bool) -> Self {
        EntrySpec {
            family: family.to_string(),
            params: params.iter().map(|p| p.to_string()).collect(),
            code_length,
            is_measure,
        }
    }
}

pub const FAMILIES: &[&str] = &[
    "uniform",
    "bernoulli",
    "iid",
    "bernoulli-staircase",
    "poly3",
    "deterministic-periodic",
    "scaled-uniform",
    "truncated-uniform",
    "counterexample-nu",
];

fn param<'a>(params: &'a [String], i: usize, family: &str) -> Result<&'a str> {
    params
        .get(i)
        .map(String::as_str)
        .ok_or_else(|| Error::InvalidParameter(alloc::format!("{family}: missing parameter {}", i + 1)))
}

fn param_usize(params: &[String], i: usize, family: &str) -> Result<usize> {
    param(params, i, family)?
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(alloc::format!("{family}: parameter {} is not an integer", i + 1)))
}

fn binary_only(alphabet: Alphabet, family: &str) -> Result<()> {
    if alphabet == Alphabet::BINARY {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!("{family} needs the binary alphabet")))
    }
}

/// Builds one model. `preceding` holds the entries already in the registry;
/// the counterexample family mixes them with code-length weights.
pub fn build_family(alphabet: Alphabet, family: &str, params: &[String], preceding: &ModelRegistry) -> Result<SharedStaged> {
    let prob = |i| -> Result<ExactProb> { ExactProb::new(parse_rational(param(params, i, family)?)?) };
    Ok(match family {
        "uniform" => Constant::shared(Uniform::new(alphabet)),
        "bernoulli" => {
            binary_only(alphabet, family)?;
            Constant::shared(Iid::bernoulli(&prob(0)?))
        }
        "iid" => {
            let probs = params.iter().map(|p| parse_rational(p)).collect::<Result<Vec<_>>>()?;
            Constant::shared(Iid::new(alphabet, probs)?)
        }
        "bernoulli-staircase" => {
            binary_only(alphabet, family)?;
            Arc::new(DyadicStaircase::new(Iid::bernoulli(&prob(0)?)))
        }
        "poly3" => {
            binary_only(alphabet, family)?;
            Constant::shared(Poly3)
        }
        "deterministic-periodic" => {
            let pattern = Str::parse(alphabet, param(params, 0, family)?)?;
            Constant::shared(Deterministic::new(alphabet, Arc::new(Periodic::new(pattern.into_vec())?)))
        }
        "scaled-uniform" => Constant::shared(Scaled::new(prob(0)?, Uniform::shared(alphabet))),
        "truncated-uniform" => {
            Constant::shared(Truncated::new(prob(0)?, param_usize(params, 1, family)?, Uniform::shared(alphabet)))
        }
        "counterexample-nu" => {
            binary_only(alphabet, family)?;
            let n = param_usize(params, 0, family)?;
            let t = param_usize(params, 1, family)? as Stage;
            let base = mixture(preceding, WeightRule::CodeLength)?;
            Arc::new(CounterexampleNu::from_mixture(&base, t, n)?)
        }
        other => return Err(Error::UnknownFamily(other.to_string())),
    })
}

impl ModelRegistry {
    pub fn from_specs(alphabet: Alphabet, specs: &[EntrySpec]) -> Result<Self> {
        let mut reg = ModelRegistry::new(alphabet);
        for s in specs {
            let model = build_family(alphabet, &s.family, &s.params, &reg)?;
            let name = if s.params.is_empty() {
                s.family.clone()
            } else {
                alloc::format!("{}({})", s.family, s.params.join(","))
            };
            reg.push(name, model, s.code_length, s.is_measure)?;
        }
        Ok(reg)
    }
}

/// Period of the deterministic entry in the default registry.
pub const DEFAULT_PERIOD: &str = "0001";
/// Horizon and stage count of the counterexample entry in the default registry.
pub const DEFAULT_CX_DEPTH: usize = 30;
pub const DEFAULT_CX_STAGES: Stage = 64;

/// The shipped registry: λ, staircase B(1/3), staircase B(2/3), poly3, a
/// periodic deterministic measure, ½λ and the counterexample ν.
pub fn default_specs() -> Vec<EntrySpec> {
    let n = alloc::format!("{DEFAULT_CX_DEPTH}");
    let t = alloc::format!("{DEFAULT_CX_STAGES}");
    alloc::vec![
        EntrySpec::new("uniform", &[], 1, true),
        EntrySpec::new("bernoulli-staircase", &["1/3"], 2, true),
        EntrySpec::new("bernoulli-staircase", &["2/3"], 3, true),
        EntrySpec::new("poly3", &[], 4, true),
        EntrySpec::new("deterministic-periodic", &[DEFAULT_PERIOD], 5, true),
        EntrySpec::new("scaled-uniform", &["1/2"], 6, false),
        EntrySpec::new("counterexample-nu", &[&n, &t], 7, false),
    ]
}

pub fn default_registry() -> Result<ModelRegistry> {
    ModelRegistry::from_specs(Alphabet::BINARY, &default_specs())
}

/// A registry of exact models with the given code lengths.
pub fn exact_registry(alphabet: Alphabet, models: Vec<(String, SharedSemimeasure, u32, bool)>) -> Result<ModelRegistry> {
    struct Held(SharedSemimeasure);
    impl Semimeasure for Held {
        fn alphabet(&self) -> Alphabet {
            self.0.alphabet()
        }
        fn eval(&self, x: &[Symbol]) -> Rational {
            self.0.eval(x)
        }
        fn eval_children(&self, x: &[Symbol]) -> Vec<Rational> {
            self.0.eval_children(x)
        }
        fn eval_children_from(&self, x: &[Symbol], vx: &Rational) -> Vec<Rational> {
            self.0.eval_children_from(x, vx)
        }
        fn path_profile(&self, x: &[Symbol]) -> crate::measure::PathProfile {
            self.0.path_profile(x)
        }
        fn is_exact_measure(&self) -> bool {
            self.0.is_exact_measure()
        }
        fn is_additive(&self) -> bool {
            self.0.is_additive()
        }
        fn is_exchangeable(&self) -> bool {
            self.0.is_exchangeable()
        }
        fn level_mass(&self, n: usize) -> Option<Rational> {
            self.0.level_mass(n)
        }
        fn mass_below(&self, x: &[Symbol], depth: usize) -> Option<Rational> {
            self.0.mass_below(x, depth)
        }
    }
    let mut reg = ModelRegistry::new(alphabet);
    for (name, m, k, flag) in models {
        reg.push(name, Constant::shared(Held(m)), k, flag)?;
    }
    Ok(reg)
}

/// Entries whose 1-based index is at most `k` and that are flagged as measures.
pub fn measure_indices(reg: &ModelRegistry, k: usize) -> Vec<usize> {
    reg.entries.iter().filter(|e| e.index <= k && e.is_measure).map(|e| e.index).collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::staged::StagedSemimeasure;
    use crate::families::Iid;

    fn bern(p: (u64, u64)) -> SharedSemimeasure {
        Arc::new(Iid::bernoulli(&ExactProb::ratio(p.0, p.1).unwrap()))
    }

    fn two_bernoullis() -> ModelRegistry {
        exact_registry(
            Alphabet::BINARY,
            alloc::vec![("b13".into(), bern((1, 3)), 1, true), ("b23".into(), bern((2, 3)), 1, true)],
        )
        .unwrap()
    }

    #[test]
    fn two_term_mixture() {
        let m = two_bernoullis().mixture(WeightRule::CodeLength).unwrap();
        assert_eq!(m.eval_at_stage(1, &[]), RBig::ONE);
        assert_eq!(m.eval_at_stage(1, &[1]), ratio(1, 2));
        assert!(m.limit().unwrap().is_exact_measure());
    }

    #[test]
    fn polynomial_weights() {
        assert_eq!(polynomial_weight(1), ratio(1, 2));
        assert_eq!(polynomial_weight(2), ratio(1, 256));
        assert_eq!(polynomial_weight(3), ratio(1, 5832));
        let total = sum((1..=40).map(polynomial_weight));
        assert!(total < RBig::ONE);
    }

    #[test]
    fn overflow_is_rejected() {
        let reg = exact_registry(
            Alphabet::BINARY,
            alloc::vec![("a".into(), bern((1, 3)), 0, true), ("b".into(), bern((2, 3)), 1, true)],
        )
        .unwrap();
        assert!(matches!(reg.mixture(WeightRule::CodeLength), Err(Error::WeightOverflow { .. })));
        assert!(matches!(ModelRegistry::new(Alphabet::BINARY).mixture(WeightRule::Polynomial), Err(Error::EmptyRegistry)));
    }

    #[test]
    fn dominance_examples() {
        let reg = two_bernoullis();
        let m = reg.mixture(WeightRule::CodeLength).unwrap();
        let b13 = bern((1, 3));
        assert!(dominance_constant(&m, &*b13, 6, 1, Budget::DEFAULT).unwrap() >= ratio(1, 2));
        let lim = LimitView::new(Arc::new(m.clone())).unwrap();
        assert_eq!(dominance_constant(&m, &lim, 6, 1, Budget::DEFAULT).unwrap(), RBig::ONE);
        let p = reg.mixture(WeightRule::Polynomial).unwrap();
        assert!(dominance_constant(&p, &*bern((2, 3)), 6, 1, Budget::DEFAULT).unwrap() >= ratio(1, 256));
    }

    #[test]
    fn single_entry_mixture_is_the_entry() {
        let reg = exact_registry(Alphabet::BINARY, alloc::vec![("b".into(), bern((1, 3)), 0, true)]).unwrap();
        let m = reg.mixture(WeightRule::CodeLength).unwrap();
        for_each_string(Alphabet::BINARY, 5, |x| assert_eq!(m.eval_at_stage(3, x), bern((1, 3)).eval(x)));
    }

    #[test]
    fn corrupted_measure_flag_is_caught() {
        let reg = exact_registry(
            Alphabet::BINARY,
            alloc::vec![("half".into(), Arc::new(crate::families::half_uniform()) as SharedSemimeasure, 1, true)],
        )
        .unwrap();
        assert!(matches!(reg.validate_measures(4, Budget::DEFAULT), Err(Error::MeasureFlagInvalid { index: 1, .. })));
    }

    #[test]
    fn unknown_family_is_rejected() {
        let e = build_family(Alphabet::BINARY, "zeta", &[], &ModelRegistry::new(Alphabet::BINARY));
        assert!(matches!(e, Err(Error::UnknownFamily(_))));
    }
}
