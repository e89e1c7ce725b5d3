//! Seeded sampling of sequences from exact conditionals.

use alloc::vec::Vec;

use dashu_int::IBig;
use dashu_ratio::RBig;
use rand_core::Rng;

use crate::alphabet::{Str, Symbol};
use crate::error::{Error, Result};
use crate::measure::Semimeasure;
use crate::prob::{pow2_neg, sum, Rational};

/// Draws the index of the cell of `weights` (normalized by their sum) that
/// contains a uniform point, revealing the point 64 bits at a time until its
/// dyadic interval lies inside one cell.
pub fn draw_index<R: Rng + ?Sized>(weights: &[Rational], rng: &mut R) -> Option<usize> {
    let total = sum(weights.iter().cloned());
    if total <= RBig::ZERO {
        return None;
    }
    let mut bounds = Vec::with_capacity(weights.len() + 1);
    let mut acc = RBig::ZERO;
    bounds.push(acc.clone());
    for w in weights {
        acc += w;
        bounds.push(&acc / &total);
    }
    let mut lo = RBig::ZERO;
    let mut bits = 0usize;
    loop {
        bits += 64;
        lo += RBig::from(IBig::from(rng.next_u64())) * pow2_neg(bits);
        let hi = &lo + pow2_neg(bits);
        for a in 0..weights.len() {
            if weights[a] > RBig::ZERO && bounds[a] <= lo && hi <= bounds[a + 1] {
                return Some(a);
            }
        }
    }
}

/// `ω_{1:n}` drawn from the predictive conditionals of `mu`.
pub fn sample_path<R: Rng + ?Sized>(mu: &dyn Semimeasure, n: usize, rng: &mut R) -> Result<Str> {
    let mut x: Vec<Symbol> = Vec::with_capacity(n);
    let mut vx = mu.eval(&[]);
    for _ in 0..n {
        let children = mu.eval_children_from(&x, &vx);
        let a = draw_index(&children, rng).ok_or_else(|| Error::EmptySupport { prefix: Str::from(&x[..]) })?;
        vx = children[a].clone();
        x.push(a as Symbol);
    }
    Ok(Str::from(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{Iid, Scaled, Uniform};
    use crate::alphabet::Alphabet;
    use crate::prob::{ratio, ExactProb};
    use alloc::sync::Arc;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    #[test]
    fn same_seed_same_path() {
        let mu = Iid::bernoulli(&ExactProb::ratio(2, 3).unwrap());
        let a = sample_path(&mu, 50, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = sample_path(&mu, 50, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_conditionals_are_respected() {
        let ones = Iid::bernoulli(&ExactProb::one());
        let x = sample_path(&ones, 30, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(x.iter().all(|&a| a == 1));
        let none = Scaled::new(ExactProb::zero(), Arc::new(Uniform::new(Alphabet::BINARY)));
        assert!(sample_path(&none, 3, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn frequency_is_near_the_bias() {
        let mu = Iid::bernoulli(&ExactProb::ratio(2, 3).unwrap());
        let x = sample_path(&mu, 3000, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let ones = x.iter().filter(|&&a| a == 1).count() as f64 / 3000.0;
        assert!((ones - 2.0 / 3.0).abs() < 0.04, "{ones}");
        assert_eq!(draw_index(&[ratio(0, 1), ratio(1, 1)], &mut ChaCha8Rng::seed_from_u64(3)), Some(1));
    }
}
