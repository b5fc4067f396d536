//! Block distributions, the l1 metric, and the rho metric on labeled
//! partitions.
//!
//! The rho distance between two labelings P, Q of the same atoms is
//! `sum_i mu(P_i xor Q_i)`, i.e. twice the mass of atoms whose labels
//! disagree. It dominates how far empirical N-block statistics can move
//! under relabeling: if rho(P, Q) < eps then N-block distributions differ
//! by at most N * eps in l1.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::word::{Alphabet, Symbol, Word};

/// Neumaier-compensated running sum.
///
/// Used for every sum whose term count can exceed 10^4, so that entropy
/// and coverage accumulations stay accurate at path lengths of 10^6 and up.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// A probability distribution over blocks of a fixed length.
///
/// Weights are non-negative and sum to 1 within 1e-9. Iteration order is
/// lexicographic in the block, which keeps every downstream report
/// deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDistribution {
    block_len: usize,
    alphabet: Alphabet,
    weights: BTreeMap<Word, f64>,
}

impl BlockDistribution {
    /// Builds a distribution from explicit weights, validating support,
    /// non-negativity, and normalization. Repeated blocks accumulate.
    pub fn new(
        block_len: usize,
        alphabet: Alphabet,
        weights: impl IntoIterator<Item = (Word, f64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Word, f64> = BTreeMap::new();
        for (block, w) in weights {
            *map.entry(block).or_insert(0.0) += w;
        }
        let weights = map;
        let mut total = KahanSum::new();
        for (block, &w) in &weights {
            if block.len() != block_len || block.alphabet() != alphabet {
                return Err(Error::IncompatibleDistribution(format!(
                    "block {block} does not live in the {block_len}-block space"
                )));
            }
            if w < 0.0 || !w.is_finite() {
                return Err(Error::IncompatibleDistribution(format!(
                    "weight {w} of block {block} is not a probability"
                )));
            }
            total.add(w);
        }
        let total = total.value();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::IncompatibleDistribution(format!(
                "weights sum to {total}, expected 1 within 1e-9"
            )));
        }
        Ok(BlockDistribution {
            block_len,
            alphabet,
            weights,
        })
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// Weight of `block`, zero when outside the support.
    pub fn weight(&self, block: &Word) -> f64 {
        self.weights.get(block).copied().unwrap_or(0.0)
    }

    /// Blocks with positive weight, in lexicographic order.
    pub fn support(&self) -> impl Iterator<Item = (&Word, f64)> {
        self.weights.iter().map(|(w, &p)| (w, p))
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }
}

/// Empirical distribution of the overlapping N-blocks of `w`.
///
/// There are `len - N + 1` windows, each carrying weight `1 / (len - N + 1)`.
/// Errors when the word is shorter than `N`.
pub fn empirical_block_distribution(w: &Word, block_len: usize) -> Result<BlockDistribution> {
    if block_len == 0 {
        return Err(Error::InsufficientData("block length must be positive".into()));
    }
    if w.len() < block_len {
        return Err(Error::InsufficientData(format!(
            "word of length {} has no {}-blocks",
            w.len(),
            block_len
        )));
    }
    let windows = w.len() - block_len + 1;
    let mut counts: BTreeMap<Vec<Symbol>, u64> = BTreeMap::new();
    let symbols = w.symbols();
    for start in 0..windows {
        let window = &symbols[start..start + block_len];
        // Slice-keyed lookup allocates only on the first sighting of a block.
        if let Some(c) = counts.get_mut(window) {
            *c += 1;
        } else {
            counts.insert(window.to_vec(), 1);
        }
    }
    let weights = counts
        .into_iter()
        .map(|(block, c)| {
            Ok((
                Word::new(block, w.alphabet())?,
                c as f64 / windows as f64,
            ))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    BlockDistribution::new(block_len, w.alphabet(), weights)
}

/// l1 distance between two block distributions over the same block space.
pub fn l1_distance(a: &BlockDistribution, b: &BlockDistribution) -> Result<f64> {
    if a.block_len != b.block_len || a.alphabet != b.alphabet {
        return Err(Error::IncompatibleDistribution(format!(
            "cannot compare {}-blocks over alphabet {} with {}-blocks over alphabet {}",
            a.block_len,
            a.alphabet.size(),
            b.block_len,
            b.alphabet.size()
        )));
    }
    let mut total = KahanSum::new();
    for (block, p) in a.support() {
        total.add((p - b.weight(block)).abs());
    }
    for (block, q) in b.support() {
        if a.weights.get(block).is_none() {
            total.add(q);
        }
    }
    Ok(total.value())
}

/// A finite labeled partition: atoms with weights and symbol labels.
///
/// Two labelings over the identical atom list model two partitions of the
/// same measure space, which is the setting for the rho metric.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedLabeling {
    weights: Vec<f64>,
    labels: Vec<Symbol>,
    alphabet: Alphabet,
}

impl WeightedLabeling {
    pub fn new(weights: Vec<f64>, labels: Vec<Symbol>, alphabet: Alphabet) -> Result<Self> {
        if weights.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: weights.len(),
                got: labels.len(),
            });
        }
        let mut total = KahanSum::new();
        for &w in &weights {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::IncompatibleDistribution(format!(
                    "atom weight {w} is not a probability"
                )));
            }
            total.add(w);
        }
        let total = total.value();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::IncompatibleDistribution(format!(
                "atom weights sum to {total}, expected 1 within 1e-9"
            )));
        }
        for &l in &labels {
            if l as usize >= alphabet.size() {
                return Err(Error::SymbolOutOfRange {
                    symbol: l,
                    alphabet: alphabet.size(),
                });
            }
        }
        Ok(WeightedLabeling {
            weights,
            labels,
            alphabet,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> &[Symbol] {
        &self.labels
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }
}

/// rho distance `sum_l mu(P_l xor Q_l)` between two labelings of the same
/// atoms.
///
/// Requires identical atom lists (same weights in the same order); labelings
/// over distinct spaces are rejected.
pub fn rho_distance(p: &WeightedLabeling, q: &WeightedLabeling) -> Result<f64> {
    if p.weights.len() != q.weights.len() || p.weights != q.weights {
        return Err(Error::DistinctSpace(
            "rho distance needs the same atoms with the same weights".into(),
        ));
    }
    // Each atom whose labels differ lies in exactly one set of each symmetric
    // difference on each side, so it contributes its weight twice.
    let mut total = KahanSum::new();
    for i in 0..p.weights.len() {
        if p.labels[i] != q.labels[i] {
            total.add(2.0 * p.weights[i]);
        }
    }
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    #[test]
    fn rho_distance_on_four_equal_atoms() {
        // Atoms of weight 1/4 labeled (1,1,2,2) vs (1,2,2,2): one atom
        // disagrees, so rho = 2 * 1/4 = 1/2.
        let a3 = Alphabet::new(3).unwrap();
        let p = WeightedLabeling::new(vec![0.25; 4], vec![1, 1, 2, 2], a3).unwrap();
        let q = WeightedLabeling::new(vec![0.25; 4], vec![1, 2, 2, 2], a3).unwrap();
        assert!((rho_distance(&p, &q).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rho_distance_is_two_for_swapped_halves() {
        let p = WeightedLabeling::new(vec![0.5, 0.5], vec![0, 1], bin()).unwrap();
        let q = WeightedLabeling::new(vec![0.5, 0.5], vec![1, 0], bin()).unwrap();
        assert_eq!(rho_distance(&p, &q).unwrap(), 2.0);
    }

    #[test]
    fn rho_distance_rejects_distinct_spaces() {
        let p = WeightedLabeling::new(vec![0.5, 0.5], vec![0, 1], bin()).unwrap();
        let q = WeightedLabeling::new(vec![0.25, 0.25, 0.5], vec![0, 1, 1], bin()).unwrap();
        assert!(matches!(
            rho_distance(&p, &q),
            Err(Error::DistinctSpace(_))
        ));
    }

    #[test]
    fn empirical_blocks_of_0101() {
        // "0101" has three 2-windows: 01, 10, 01.
        let w = Word::from_digits("0101", bin()).unwrap();
        let d = empirical_block_distribution(&w, 2).unwrap();
        let b01 = Word::from_digits("01", bin()).unwrap();
        let b10 = Word::from_digits("10", bin()).unwrap();
        assert!((d.weight(&b01) - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.weight(&b10) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.support_size(), 2);
    }

    #[test]
    fn empirical_blocks_reject_short_words() {
        let w = Word::from_digits("01", bin()).unwrap();
        assert!(matches!(
            empirical_block_distribution(&w, 3),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn l1_distance_matches_hand_computation() {
        let w1 = Word::from_digits("0101", bin()).unwrap();
        let w2 = Word::from_digits("0011", bin()).unwrap();
        let d1 = empirical_block_distribution(&w1, 2).unwrap();
        let d2 = empirical_block_distribution(&w2, 2).unwrap();
        // d1 = {01: 2/3, 10: 1/3}; d2 = {00: 1/3, 01: 1/3, 11: 1/3}.
        let expect = (2.0 / 3.0 - 1.0 / 3.0) + 1.0 / 3.0 + 1.0 / 3.0 + 1.0 / 3.0;
        assert!((l1_distance(&d1, &d2).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn l1_distance_rejects_different_block_spaces() {
        let w = Word::from_digits("010101", bin()).unwrap();
        let d2 = empirical_block_distribution(&w, 2).unwrap();
        let d3 = empirical_block_distribution(&w, 3).unwrap();
        assert!(l1_distance(&d2, &d3).is_err());
    }

    #[test]
    fn kahan_sum_handles_many_small_terms() {
        let mut s = KahanSum::new();
        for _ in 0..1_000_000 {
            s.add(1e-6);
        }
        assert!((s.value() - 1.0).abs() < 1e-12);
    }
}
