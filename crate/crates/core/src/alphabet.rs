//! Finite alphabets, strings over them and bounded exhaustive enumeration.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;

use crate::error::{Error, Result};

pub type Symbol = u8;

/// An alphabet `{0, .., N-1}` with `2 <= N <= 256`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alphabet(u16);

impl Alphabet {
    pub const BINARY: Alphabet = Alphabet(2);

    pub fn new(size: usize) -> Result<Self> {
        if (2..=256).contains(&size) {
            Ok(Alphabet(size as u16))
        } else {
            Err(Error::InvalidAlphabet(size))
        }
    }

    pub fn size(self) -> usize {
        self.0 as usize
    }

    pub fn symbols(self) -> impl Iterator<Item = Symbol> + Clone {
        (0..self.0).map(|a| a as Symbol)
    }

    pub fn validate(self, x: &[Symbol]) -> Result<()> {
        match x.iter().find(|&&a| a as usize >= self.size()) {
            Some(&a) => Err(Error::SymbolOutOfRange { symbol: a as usize, size: self.size() }),
            None => Ok(()),
        }
    }

    /// `N^n`, or `None` on overflow.
    pub fn count(self, n: usize) -> Option<u128> {
        (self.0 as u128).checked_pow(u32::try_from(n).ok()?)
    }

    pub fn ensure_same(self, other: Alphabet) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch { expected: self.size(), found: other.size() })
        }
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet::BINARY
    }
}

/// A finite string. The derived order is lexicographic with proper prefixes first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Str(Vec<Symbol>);

impl Str {
    pub const fn empty() -> Self {
        Str(Vec::new())
    }

    /// Parses digits `0-9a-z` as symbols, checking them against `alphabet`.
    pub fn parse(alphabet: Alphabet, s: &str) -> Result<Self> {
        let mut v = Vec::with_capacity(s.len());
        for c in s.chars() {
            let d = c
                .to_digit(36)
                .ok_or_else(|| Error::InvalidParameter(alloc::format!("bad symbol '{c}'")))?;
            v.push(d as Symbol);
        }
        alphabet.validate(&v)?;
        Ok(Str(v))
    }

    pub fn push(&mut self, a: Symbol) {
        self.0.push(a);
    }

    pub fn pop(&mut self) -> Option<Symbol> {
        self.0.pop()
    }

    pub fn truncate(&mut self, len: usize) {
        self.0.truncate(len);
    }

    pub fn extended(&self, a: Symbol) -> Str {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(a);
        Str(v)
    }

    pub fn prefix(&self, len: usize) -> Str {
        Str(self.0[..len].to_vec())
    }

    pub fn into_vec(self) -> Vec<Symbol> {
        self.0
    }
}

impl Deref for Str {
    type Target = [Symbol];
    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl From<Vec<Symbol>> for Str {
    fn from(v: Vec<Symbol>) -> Self {
        Str(v)
    }
}

impl From<&[Symbol]> for Str {
    fn from(v: &[Symbol]) -> Self {
        Str(v.to_vec())
    }
}

impl FromIterator<Symbol> for Str {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Self {
        Str(iter.into_iter().collect())
    }
}

impl fmt::Display for Str {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for &a in &self.0 {
            let c = char::from_digit(a as u32, 36).unwrap_or('?');
            fmt::Write::write_char(f, c)?;
        }
        Ok(())
    }
}

/// Cap on the number of strings a single exhaustive pass may visit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_strings: u128,
}

impl Budget {
    pub const DEFAULT: Budget = Budget { max_strings: 1 << 20 };

    pub fn new(max_strings: u128) -> Self {
        Budget { max_strings }
    }

    pub fn check(self, requested: u128) -> Result<u128> {
        if requested <= self.max_strings {
            Ok(requested)
        } else {
            Err(Error::BudgetExceeded { requested, cap: self.max_strings })
        }
    }

    /// Checks that all `N^depth` strings of length `depth` fit.
    pub fn check_level(self, alphabet: Alphabet, depth: usize) -> Result<u128> {
        match alphabet.count(depth) {
            Some(n) => self.check(n),
            None => Err(Error::BudgetExceeded { requested: u128::MAX, cap: self.max_strings }),
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::DEFAULT
    }
}

/// Calls `f` on every string of length `n` in lexicographic order.
pub fn for_each_string(alphabet: Alphabet, n: usize, mut f: impl FnMut(&[Symbol])) {
    let top = (alphabet.size() - 1) as Symbol;
    let mut x: Vec<Symbol> = alloc::vec![0; n];
    loop {
        f(&x);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if x[i] < top {
                x[i] += 1;
                break;
            }
            x[i] = 0;
        }
    }
}

/// Position of `x` among strings of its length in lexicographic order.
pub fn rank(alphabet: Alphabet, x: &[Symbol]) -> usize {
    x.iter().fold(0usize, |acc, &a| acc * alphabet.size() + a as usize)
}
