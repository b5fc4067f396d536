//! Finite alphabets and finite words.
//!
//! A [`Word`] carries its alphabet so that block spaces are unambiguous:
//! the same symbol sequence over different alphabets denotes different
//! cylinder sets. Symbols are `u16`, which covers every alphabet built here
//! (products of small alphabets stay small).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A symbol drawn from `0..alphabet.size()`.
pub type Symbol = u16;

/// A finite alphabet `{0, 1, ..., size-1}`.
///
/// Sizes of at least 2 are the working case; size 1 is permitted for
/// degenerate constant-process tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || size > u16::MAX as usize {
            return Err(Error::InvalidModel(format!(
                "alphabet size must be in 1..={}, got {size}",
                u16::MAX
            )));
        }
        Ok(Alphabet { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Alphabet for pairs drawn from `self` and `other`, encoded as
    /// `left * other.size() + right`.
    pub fn pair(&self, other: &Alphabet) -> Result<Alphabet> {
        Alphabet::new(self.size * other.size)
    }
}

/// A finite word over an alphabet.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Word {
    symbols: Vec<Symbol>,
    alphabet: Alphabet,
}

impl Word {
    /// Builds a word, checking every symbol against the alphabet.
    pub fn new(symbols: Vec<Symbol>, alphabet: Alphabet) -> Result<Self> {
        for &s in &symbols {
            if s as usize >= alphabet.size() {
                return Err(Error::SymbolOutOfRange {
                    symbol: s,
                    alphabet: alphabet.size(),
                });
            }
        }
        Ok(Word { symbols, alphabet })
    }

    /// Parses a word from ASCII digits, for alphabets of size at most 10.
    pub fn from_digits(digits: &str, alphabet: Alphabet) -> Result<Self> {
        if alphabet.size() > 10 {
            return Err(Error::InvalidModel(
                "digit notation only covers alphabets of size <= 10".into(),
            ));
        }
        let symbols = digits
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as Symbol)
                    .ok_or_else(|| Error::InvalidModel(format!("bad digit {c:?} in word")))
            })
            .collect::<Result<Vec<_>>>()?;
        Word::new(symbols, alphabet)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The subword at `range`, over the same alphabet.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Word {
        Word {
            symbols: self.symbols[range].to_vec(),
            alphabet: self.alphabet,
        }
    }

    /// Word formed by appending `other`'s symbols (alphabets must agree).
    pub fn concat(&self, other: &Word) -> Result<Word> {
        if self.alphabet != other.alphabet {
            return Err(Error::IncompatibleDistribution(
                "cannot concatenate words over different alphabets".into(),
            ));
        }
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        Ok(Word {
            symbols,
            alphabet: self.alphabet,
        })
    }
}

impl std::fmt::Display for Word {
    /// Digits for small alphabets, dot-separated numbers otherwise.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.alphabet.size() <= 10 {
            for &s in &self.symbols {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.symbols.iter().map(|s| s.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

/// Fraction of positions where `u` and `v` disagree.
///
/// Errors on unequal lengths and on empty words.
pub fn hamming_fraction(u: &Word, v: &Word) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    if u.is_empty() {
        return Err(Error::InsufficientData(
            "hamming fraction of empty words is undefined".into(),
        ));
    }
    let differing = u
        .symbols
        .iter()
        .zip(&v.symbols)
        .filter(|(a, b)| a != b)
        .count();
    Ok(differing as f64 / u.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    #[test]
    fn word_rejects_out_of_range_symbols() {
        let err = Word::new(vec![0, 2], bin()).unwrap_err();
        assert!(matches!(err, Error::SymbolOutOfRange { symbol: 2, .. }));
    }

    #[test]
    fn hamming_fraction_counts_disagreements() {
        let u = Word::from_digits("0011", bin()).unwrap();
        let v = Word::from_digits("0111", bin()).unwrap();
        assert_eq!(hamming_fraction(&u, &v).unwrap(), 0.25);
        assert_eq!(hamming_fraction(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn hamming_fraction_rejects_mismatched_or_empty() {
        let u = Word::from_digits("01", bin()).unwrap();
        let v = Word::from_digits("011", bin()).unwrap();
        assert!(matches!(
            hamming_fraction(&u, &v),
            Err(Error::LengthMismatch { .. })
        ));
        let e = Word::new(vec![], bin()).unwrap();
        assert!(hamming_fraction(&e, &e).is_err());
    }

    #[test]
    fn display_uses_digits_for_small_alphabets() {
        let u = Word::from_digits("0101", bin()).unwrap();
        assert_eq!(u.to_string(), "0101");
    }
}
