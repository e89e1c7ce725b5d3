use std::sync::Arc;

use dashu_ratio::RBig;
use proptest::prelude::*;

use semilab_core::alphabet::{for_each_string, Alphabet, Budget};
use semilab_core::families::{Iid, Scaled, Table, Truncated, Uniform};
use semilab_core::hellinger::{
    bhattacharyya, chain_bound_pair, chain_bound_sequence, chain_product_bound, chain_product_coefficients,
    continuity_bound, hellinger_distance, optimal_beta, verify_lemma1,
};
use semilab_core::measure::{conditional, verify_semimeasure, Mix, Semimeasure, SharedSemimeasure};
use semilab_core::prob::{ratio, ExactProb, Rational};
use semilab_core::quasi::{Cutoff, QuasiConversion};
use semilab_core::randomness::{is_supermartingale, semimeasure_to_supermartingale};
use semilab_core::real::{Precision, Real};
use semilab_core::registry::{exact_registry, WeightRule};
use semilab_core::staged::{Constant, StagedSemimeasure};

const P: Precision = Precision::DEFAULT;

fn weights(len: usize) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..40, len).prop_filter("not all zero", |v| v.iter().any(|&x| x > 0))
}

fn normalize(v: &[u64], total: &Rational) -> Vec<Rational> {
    let s: u64 = v.iter().sum();
    v.iter().map(|&x| ratio(x as i64, s) * total).collect()
}

fn reals(v: &[Rational]) -> Vec<Real> {
    v.iter().map(|r| P.rational(r)).collect()
}

fn prob_vec(dim: usize) -> impl Strategy<Value = Vec<Real>> {
    weights(dim).prop_map(|w| reals(&normalize(&w, &RBig::ONE)))
}

fn bernoulli() -> impl Strategy<Value = ExactProb> {
    (1u64..20).prop_map(|k| ExactProb::ratio(k, 20).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn distance_matches_bhattacharyya_form((p, q) in (2usize..6).prop_flat_map(|d| (prob_vec(d), prob_vec(d)))) {
        let h = hellinger_distance(&p, &q);
        let other = P.int(2) - P.int(2) * bhattacharyya(&p, &q);
        prop_assert!((h.clone() - other).abs() < P.tolerance());
        prop_assert!(h.le_tol(&P.int(2), &P.tolerance()));
        prop_assert!((hellinger_distance(&q, &p) - h).abs() < P.tolerance());
    }

    #[test]
    fn bhattacharyya_bound_for_sub_probability(
        (p, qw) in (2usize..6).prop_flat_map(|d| (prob_vec(d), weights(d))),
        mass in 1u64..=100,
    ) {
        let q = reals(&normalize(&qw, &ratio(mass as i64, 100)));
        let h = hellinger_distance(&p, &q);
        let half = P.rational(&ratio(1, 2));
        let mid = P.one() - &half * &h;
        prop_assert!(bhattacharyya(&p, &q).le_tol(&mid, &P.tolerance()));
        prop_assert!(mid.le_tol(&(-(&half * &h)).exp(), &P.tolerance()));
    }

    #[test]
    fn pair_bound_and_optimal_beta(
        (p, r, q) in (2usize..6).prop_flat_map(|d| (prob_vec(d), prob_vec(d), prob_vec(d))),
        k in 1i64..20,
    ) {
        let tol = P.tolerance();
        let (hpq, hpr, hrq) = (hellinger_distance(&p, &q), hellinger_distance(&p, &r), hellinger_distance(&r, &q));
        let mut best: Option<Real> = None;
        for beta in [ratio(1, 2), ratio(1, 1), ratio(2, 1), ratio(k * (k + 1), 1)] {
            let b = chain_bound_pair(&hpr, &hrq, &P.rational(&beta));
            prop_assert!(hpq.le_tol(&b, &tol));
            best = Some(match best { Some(x) => x.min(b), None => b });
        }
        if let Some(beta) = optimal_beta(&hpr, &hrq) {
            let opt = chain_bound_pair(&hpr, &hrq, &beta);
            let closed = (hpr.sqrt() + hrq.sqrt()).square();
            prop_assert!((opt.clone() - closed).abs() < P.rational(&ratio(1, 1 << 40)));
            prop_assert!(opt.le_tol(&best.unwrap(), &P.rational(&ratio(1, 1 << 40))));
            prop_assert!(hpq.le_tol(&opt, &P.rational(&ratio(1, 1 << 40))));
        }
    }

    #[test]
    fn chain_bounds(chain in (2usize..5, 2usize..=6).prop_flat_map(|(d, m)| prop::collection::vec(prob_vec(d), m))) {
        let tol = P.tolerance();
        let links: Vec<Real> = chain.windows(2).map(|w| hellinger_distance(&w[0], &w[1])).collect();
        let ends = hellinger_distance(&chain[0], chain.last().unwrap());
        let product = chain_product_bound(&links, P);
        prop_assert!(ends.le_tol(&product, &tol));
        prop_assert!(product.le_tol(&chain_bound_sequence(&links, P), &tol));
    }

    #[test]
    fn continuity_bounds(
        (yw, zw) in (2usize..5).prop_flat_map(|d| (weights(d), weights(d))),
        y in 1u64..=100,
        leak in 50u64..=100,
        eps in 0u64..=100,
        balanced in any::<bool>(),
    ) {
        let dim = yw.len();
        let alphabet = Alphabet::new(dim).unwrap();
        let y = ratio(y as i64, 100);
        let ys = normalize(&yw, &(&y * ratio(leak as i64, 100)));
        let eps = ratio(eps as i64, 100);
        let (z, zs) = if balanced {
            let zs: Vec<Rational> = ys.iter().zip(&zw).map(|(v, &w)| v * &eps * ratio(w as i64, 40)).collect();
            (&eps * &y, zs)
        } else {
            let z = &eps * ratio(1, 2);
            (z.clone(), normalize(&zw, &(&z * ratio(leak as i64, 100))))
        };
        let mut mu = Table::new(alphabet);
        let mut nu = Table::new(alphabet);
        mu.set(&[], y);
        nu.set(&[], z);
        for a in 0..dim {
            mu.set(&[a as u8], ys[a].clone());
            nu.set(&[a as u8], zs[a].clone());
        }
        let cb = continuity_bound(&mu, &nu, &[], P).unwrap();
        prop_assert!(cb.holds);
        if balanced {
            prop_assert!(cb.quadratic.is_some());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conditionals_ignore_scaling(p in bernoulli(), c in 1u64..=20, x in prop::collection::vec(0u8..2, 0..8)) {
        let base: SharedSemimeasure = Arc::new(Iid::bernoulli(&p));
        let scaled = Scaled::new(ExactProb::ratio(c, 20).unwrap(), base.clone());
        for a in 0..2 {
            prop_assert_eq!(conditional(&*base, &x, a).unwrap(), conditional(&scaled, &x, a).unwrap());
        }
    }

    #[test]
    fn chain_rule_for_iid(p in bernoulli(), x in prop::collection::vec(0u8..2, 0..12)) {
        let mu = Iid::bernoulli(&p);
        let mut prod = RBig::ONE;
        for t in 0..x.len() {
            prod *= conditional(&mu, &x[..t], x[t]).unwrap();
        }
        prop_assert_eq!(prod, mu.eval(&x));
    }

    #[test]
    fn mixture_dominates_entries(a in bernoulli(), b in bernoulli(), k1 in 0u32..5, k2 in 1u32..5) {
        let na: SharedSemimeasure = Arc::new(Iid::bernoulli(&a));
        let nb: SharedSemimeasure = Arc::new(Iid::bernoulli(&b));
        let reg = exact_registry(Alphabet::BINARY, vec![("a".into(), na.clone(), k1.max(1), true), ("b".into(), nb.clone(), k2, true)]).unwrap();
        for rule in [WeightRule::CodeLength, WeightRule::Polynomial] {
            let m = reg.mixture(rule).unwrap();
            for n in 0..=6 {
                for_each_string(Alphabet::BINARY, n, |x| {
                    let mx = m.eval_at_stage(0, x);
                    assert!(mx >= reg.weight(1, rule).unwrap() * na.eval(x));
                    assert!(mx >= reg.weight(2, rule).unwrap() * nb.eval(x));
                });
            }
        }
    }

    #[test]
    fn ratio_to_uniform_is_a_supermartingale(p in bernoulli(), c in 1u64..=20) {
        let nu: SharedSemimeasure = Arc::new(Scaled::new(ExactProb::ratio(c, 20).unwrap(), Arc::new(Iid::bernoulli(&p))));
        let m = semimeasure_to_supermartingale(nu).unwrap();
        prop_assert!(is_supermartingale(&m, 9, Budget::DEFAULT).unwrap().passed);
    }

    #[test]
    fn truncated_uniform_conversion(scale in 1u64..=20, cut in 1usize..8) {
        let q = Truncated::new(ExactProb::ratio(scale, 20).unwrap(), cut, Uniform::shared(Alphabet::BINARY));
        prop_assert!(verify_semimeasure(&q, cut + 1, Budget::DEFAULT).unwrap().passed);
        let conv = QuasiConversion::build(Constant::shared(q.clone()), 12, Budget::DEFAULT).unwrap();
        let root = ratio(scale as i64, 20);
        let expected = (1..=cut).rev().find(|&n| root > RBig::ONE - ratio(1, n as u64)).unwrap_or(0);
        prop_assert_eq!(conv.cutoff(12), Cutoff::Finite(expected));
        if expected == cut {
            for n in 0..=cut + 1 {
                for_each_string(Alphabet::BINARY, n, |x| assert_eq!(conv.eval_at(12, x), q.eval(x)));
            }
        }
        for n in 0..=cut + 1 {
            for_each_string(Alphabet::BINARY, n, |x| assert!(conv.eval_at(12, x) <= q.eval(x)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn expected_chain_for_bernoulli_mixtures(a in bernoulli(), b in bernoulli(), half in 1u64..4) {
        let mu: SharedSemimeasure = Arc::new(Iid::bernoulli(&a));
        let w = ratio(1, half + 1);
        let nu = Mix::new(
            Alphabet::BINARY,
            vec![(w.clone(), mu.clone()), (RBig::ONE - &w, Arc::new(Iid::bernoulli(&b)))],
        )
        .unwrap();
        let r = verify_lemma1(&*mu, &nu, &ExactProb::new(w).unwrap(), 6, P, Budget::DEFAULT).unwrap();
        prop_assert!(r.passed());
    }
}

#[test]
fn product_coefficients_never_exceed_three_k_squared() {
    for m in 2..60 {
        let c = chain_product_coefficients(m);
        for (j, v) in c.iter().enumerate() {
            let k = (j + 2) as i64;
            assert!(*v <= ratio(3 * k * k, 1), "m={m} k={k}");
        }
    }
}
