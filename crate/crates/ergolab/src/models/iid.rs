//! Product measures: i.i.d. symbol sequences with fixed marginal weights.

use crate::dist::KahanSum;
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::word::{Alphabet, Word};

#[derive(Clone, Debug)]
pub struct IidModel {
    weights: Vec<f64>,
    alphabet: Alphabet,
}

impl IidModel {
    /// Validates that `weights` is a probability vector over the alphabet.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let alphabet = Alphabet::new(weights.len())?;
        let mut sum = KahanSum::new();
        for &w in &weights {
            if !(0.0..=1.0).contains(&w) || !w.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "weight {w} is not a probability"
                )));
            }
            sum.add(w);
        }
        if (sum.value() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!(
                "weights sum to {}, expected 1 within 1e-9",
                sum.value()
            )));
        }
        Ok(IidModel { weights, alphabet })
    }

    /// Fair or biased coin: weight of symbol 1.
    pub fn coin(p_one: f64) -> Result<Self> {
        IidModel::new(vec![1.0 - p_one, p_one])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn sample(&self, n: usize, seed: u64) -> Word {
        let mut stream = Stream::new(seed);
        let symbols = (0..n)
            .map(|_| stream.categorical(&self.weights) as u16)
            .collect();
        Word::new(symbols, self.alphabet).expect("categorical stays in range")
    }

    pub fn cylinder_measure(&self, u: &Word) -> Result<f64> {
        if u.alphabet().size() != self.alphabet.size() {
            return Err(Error::IncompatibleDistribution(format!(
                "word over alphabet {} against model over alphabet {}",
                u.alphabet().size(),
                self.alphabet.size()
            )));
        }
        Ok(u.symbols()
            .iter()
            .map(|&s| self.weights[s as usize])
            .product())
    }

    /// Shannon entropy of the marginal, which equals the entropy rate.
    pub fn exact_entropy_rate(&self) -> f64 {
        let mut h = KahanSum::new();
        for &w in &self.weights {
            if w > 0.0 {
                h.add(-w * w.log2());
            }
        }
        h.value()
    }
}
