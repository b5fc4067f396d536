//! Finite-state stationary Markov chains with a symbol labeling.
//!
//! The chain is required to be irreducible and aperiodic so that the
//! stationary vector is unique and sampling from it gives a stationary,
//! ergodic symbol process. A labeling may be injective (the symbol process
//! is the chain itself) or lumping (a hidden-Markov functional process);
//! cylinder measures are computed by the forward recursion in O(n m^2)
//! either way.

use crate::dist::KahanSum;
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::word::{Alphabet, Symbol, Word};

#[derive(Clone, Debug)]
pub struct MarkovModel {
    transition: Vec<Vec<f64>>,
    labeling: Vec<Symbol>,
    alphabet: Alphabet,
    stationary: Vec<f64>,
}

impl MarkovModel {
    /// Builds and validates a chain.
    ///
    /// Checks: square row-stochastic matrix (rows sum to 1 within 1e-12),
    /// irreducibility and aperiodicity of the positive-transition digraph,
    /// labels inside the alphabet, and the computed stationary vector
    /// satisfying pi P = pi within 1e-10.
    pub fn new(
        transition: Vec<Vec<f64>>,
        labeling: Vec<Symbol>,
        alphabet: Alphabet,
    ) -> Result<Self> {
        let m = transition.len();
        if m == 0 {
            return Err(Error::InvalidModel("chain needs at least one state".into()));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidModel(format!(
                    "transition row {i} has length {}, expected {m}",
                    row.len()
                )));
            }
            let mut sum = KahanSum::new();
            for &p in row {
                if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "transition entry {p} in row {i} is not a probability"
                    )));
                }
                sum.add(p);
            }
            if (sum.value() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidModel(format!(
                    "transition row {i} sums to {}, expected 1 within 1e-12",
                    sum.value()
                )));
            }
        }
        if labeling.len() != m {
            return Err(Error::InvalidModel(format!(
                "labeling has {} entries for {m} states",
                labeling.len()
            )));
        }
        for &l in &labeling {
            if l as usize >= alphabet.size() {
                return Err(Error::SymbolOutOfRange {
                    symbol: l,
                    alphabet: alphabet.size(),
                });
            }
        }
        check_irreducible_aperiodic(&transition)?;
        let stationary = stationary_vector(&transition)?;
        Ok(MarkovModel {
            transition,
            labeling,
            alphabet,
            stationary,
        })
    }

    /// The chain whose states emit i.i.d. symbols with the given weights.
    ///
    /// All weights must be strictly positive so the chain is irreducible.
    pub fn from_iid(weights: &[f64], alphabet: Alphabet) -> Result<Self> {
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidModel(
                "iid-as-chain requires strictly positive weights".into(),
            ));
        }
        let m = weights.len();
        let transition = vec![weights.to_vec(); m];
        let labeling = (0..m as u16).collect();
        MarkovModel::new(transition, labeling, alphabet)
    }

    /// The two-state symmetric chain that flips its symbol with the given
    /// probability.
    pub fn symmetric_flip(flip: f64) -> Result<Self> {
        MarkovModel::new(
            vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]],
            vec![0, 1],
            Alphabet::new(2)?,
        )
    }

    /// Kronecker product of two independent chains. States are pairs
    /// `(a, b)` encoded as `a * b_states + b`; labels are pair symbols
    /// encoded as `label_a * r_b + label_b`.
    pub fn product(a: &MarkovModel, b: &MarkovModel) -> Result<Self> {
        let (ma, mb) = (a.state_count(), b.state_count());
        let alphabet = a.alphabet.pair(&b.alphabet)?;
        let rb = b.alphabet.size() as u16;
        let mut transition = vec![vec![0.0; ma * mb]; ma * mb];
        let mut labeling = vec![0; ma * mb];
        for sa in 0..ma {
            for sb in 0..mb {
                let s = sa * mb + sb;
                labeling[s] = a.labeling[sa] * rb + b.labeling[sb];
                for ta in 0..ma {
                    for tb in 0..mb {
                        transition[s][ta * mb + tb] =
                            a.transition[sa][ta] * b.transition[sb][tb];
                    }
                }
            }
        }
        MarkovModel::new(transition, labeling, alphabet)
    }

    pub fn state_count(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn labeling(&self) -> &[Symbol] {
        &self.labeling
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// True when distinct states carry distinct symbols, i.e. the symbol
    /// process determines the state path.
    pub fn is_injective_labeling(&self) -> bool {
        let mut seen = vec![false; self.alphabet.size()];
        for &l in &self.labeling {
            if seen[l as usize] {
                return false;
            }
            seen[l as usize] = true;
        }
        true
    }

    /// Samples `n` symbols starting from the stationary distribution.
    pub fn sample(&self, n: usize, seed: u64) -> Word {
        let mut stream = Stream::new(seed);
        let mut symbols = Vec::with_capacity(n);
        if n == 0 {
            return Word::new(symbols, self.alphabet).expect("empty word");
        }
        let mut state = stream.categorical(&self.stationary);
        symbols.push(self.labeling[state]);
        for _ in 1..n {
            state = stream.categorical(&self.transition[state]);
            symbols.push(self.labeling[state]);
        }
        Word::new(symbols, self.alphabet).expect("labels lie in the alphabet")
    }

    /// Measure of the cylinder set of paths whose symbols read `u`, by the
    /// forward recursion over hidden states.
    pub fn cylinder_measure(&self, u: &Word) -> Result<f64> {
        if u.alphabet().size() != self.alphabet.size() {
            return Err(Error::IncompatibleDistribution(format!(
                "word over alphabet {} against model over alphabet {}",
                u.alphabet().size(),
                self.alphabet.size()
            )));
        }
        if u.is_empty() {
            return Ok(1.0);
        }
        let m = self.state_count();
        let symbols = u.symbols();
        let mut forward: Vec<f64> = (0..m)
            .map(|s| {
                if self.labeling[s] == symbols[0] {
                    self.stationary[s]
                } else {
                    0.0
                }
            })
            .collect();
        let mut next = vec![0.0; m];
        for &sym in &symbols[1..] {
            for t in next.iter_mut() {
                *t = 0.0;
            }
            for s in 0..m {
                let f = forward[s];
                if f == 0.0 {
                    continue;
                }
                for (t, &p) in self.transition[s].iter().enumerate() {
                    if p > 0.0 && self.labeling[t] == sym {
                        next[t] += f * p;
                    }
                }
            }
            std::mem::swap(&mut forward, &mut next);
        }
        Ok(forward.iter().sum())
    }

    /// Exact entropy rate for injective labelings; `None` for lumped ones.
    pub fn exact_entropy_rate(&self) -> Option<f64> {
        if !self.is_injective_labeling() {
            return None;
        }
        Some(self.state_entropy_rate())
    }

    /// Entropy rate of the state process, `-sum_i pi_i sum_j p_ij log2 p_ij`.
    pub fn state_entropy_rate(&self) -> f64 {
        let mut h = KahanSum::new();
        for (i, row) in self.transition.iter().enumerate() {
            for &p in row {
                if p > 0.0 {
                    h.add(-self.stationary[i] * p * p.log2());
                }
            }
        }
        h.value()
    }

    /// Closed-form n-block entropy `H(pi) + (n-1) h` for injective
    /// labelings.
    pub fn block_entropy_closed(&self, n: usize) -> Option<f64> {
        if n == 0 {
            return Some(0.0);
        }
        if !self.is_injective_labeling() {
            return None;
        }
        let mut h1 = KahanSum::new();
        for &p in &self.stationary {
            if p > 0.0 {
                h1.add(-p * p.log2());
            }
        }
        Some(h1.value() + (n - 1) as f64 * self.state_entropy_rate())
    }
}

/// Strong connectivity plus period-1 check on the positive-edge digraph.
fn check_irreducible_aperiodic(transition: &[Vec<f64>]) -> Result<()> {
    let m = transition.len();
    let forward_reach = reach(m, |s| {
        transition[s]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(t, _)| t)
            .collect()
    });
    let backward_reach = reach(m, |s| {
        (0..m).filter(|&t| transition[t][s] > 0.0).collect()
    });
    if forward_reach.iter().any(|&r| !r) || backward_reach.iter().any(|&r| !r) {
        return Err(Error::InvalidModel(
            "transition digraph is not strongly connected (chain reducible)".into(),
        ));
    }
    // BFS levels from state 0; the period divides depth[u] + 1 - depth[v]
    // for every positive edge (u, v).
    let mut depth = vec![usize::MAX; m];
    depth[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        for (t, &p) in transition[s].iter().enumerate() {
            if p > 0.0 && depth[t] == usize::MAX {
                depth[t] = depth[s] + 1;
                queue.push_back(t);
            }
        }
    }
    let mut period = 0u64;
    for s in 0..m {
        for (t, &p) in transition[s].iter().enumerate() {
            if p > 0.0 {
                let diff = (depth[s] as i64 + 1 - depth[t] as i64).unsigned_abs();
                period = gcd(period, diff);
            }
        }
    }
    if period != 1 {
        return Err(Error::InvalidModel(format!(
            "chain has period {period}, expected aperiodic"
        )));
    }
    Ok(())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn reach(m: usize, neighbors: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; m];
    seen[0] = true;
    let mut stack = vec![0usize];
    while let Some(s) = stack.pop() {
        for t in neighbors(s) {
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

/// Solves pi P = pi, sum pi = 1 by Gaussian elimination with partial
/// pivoting on (P^T - I) with the last equation replaced by normalization.
fn stationary_vector(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = transition.len();
    let mut a = vec![vec![0.0f64; m + 1]; m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = transition[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..m {
        a[m - 1][j] = 1.0;
    }
    a[m - 1][m] = 1.0;

    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::InvalidModel(
                "singular system while solving for the stationary vector".into(),
            ));
        }
        a.swap(col, pivot);
        for row in 0..m {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..=m {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    let pi: Vec<f64> = (0..m).map(|i| a[i][m] / a[i][i]).collect();
    // Guard against numerically negative entries and verify pi P = pi.
    let pi: Vec<f64> = pi.iter().map(|&p| p.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    let pi: Vec<f64> = pi.iter().map(|&p| p / total).collect();
    for j in 0..m {
        let mut acc = KahanSum::new();
        for i in 0..m {
            acc.add(pi[i] * transition[i][j]);
        }
        if (acc.value() - pi[j]).abs() > 1e-10 {
            return Err(Error::InvalidModel(format!(
                "stationary vector residual {} exceeds 1e-10 at state {j}",
                (acc.value() - pi[j]).abs()
            )));
        }
    }
    Ok(pi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flip_chain_has_uniform_stationary_vector() {
        let m = MarkovModel::symmetric_flip(0.1).unwrap();
        assert!((m.stationary()[0] - 0.5).abs() < 1e-12);
        assert!((m.stationary()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn flip_chain_entropy_rate_matches_hand_value() {
        // -(0.9 log2 0.9 + 0.1 log2 0.1) = 0.468995593...
        let m = MarkovModel::symmetric_flip(0.1).unwrap();
        let expect = -(0.9f64 * 0.9f64.log2() + 0.1 * 0.1f64.log2());
        let rate = m.exact_entropy_rate().unwrap();
        assert!((rate - expect).abs() < 1e-14);
        assert!((rate - 0.468996).abs() < 1e-6);
    }

    #[test]
    fn asymmetric_chain_stationary_vector_is_exact() {
        // pi for [[0.5, 0.5], [0.25, 0.75]] solves pi = pi P: (1/3, 2/3).
        let m = MarkovModel::new(
            vec![vec![0.5, 0.5], vec![0.25, 0.75]],
            vec![0, 1],
            Alphabet::new(2).unwrap(),
        )
        .unwrap();
        assert!((m.stationary()[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.stationary()[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cylinder_measure_of_01_under_flip_chain() {
        // mu(01) = pi_0 * p_01 = 0.5 * 0.1 = 0.05.
        let m = MarkovModel::symmetric_flip(0.1).unwrap();
        let u = Word::from_digits("01", Alphabet::new(2).unwrap()).unwrap();
        assert!((m.cylinder_measure(&u).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn cylinder_measures_are_stationary_and_additive() {
        let m = MarkovModel::new(
            vec![vec![0.2, 0.8], vec![0.6, 0.4]],
            vec![0, 1],
            Alphabet::new(2).unwrap(),
        )
        .unwrap();
        let bin = Alphabet::new(2).unwrap();
        let u = Word::from_digits("0110", bin).unwrap();
        let base = m.cylinder_measure(&u).unwrap();
        let mut left = 0.0;
        let mut right = 0.0;
        for s in 0..2u16 {
            let mut pre = vec![s];
            pre.extend_from_slice(u.symbols());
            left += m.cylinder_measure(&Word::new(pre, bin).unwrap()).unwrap();
            let mut post = u.symbols().to_vec();
            post.push(s);
            right += m.cylinder_measure(&Word::new(post, bin).unwrap()).unwrap();
        }
        assert!((left - base).abs() < 1e-12, "prepend additivity");
        assert!((right - base).abs() < 1e-12, "append additivity");
    }

    #[test]
    fn reducible_and_periodic_chains_are_rejected() {
        let reducible = MarkovModel::new(
            vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            vec![0, 1],
            Alphabet::new(2).unwrap(),
        );
        assert!(matches!(reducible, Err(Error::InvalidModel(_))));
        let periodic = MarkovModel::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0, 1],
            Alphabet::new(2).unwrap(),
        );
        assert!(matches!(periodic, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn product_chain_multiplies_measures() {
        let a = MarkovModel::symmetric_flip(0.1).unwrap();
        let b = MarkovModel::symmetric_flip(0.25).unwrap();
        let prod = MarkovModel::product(&a, &b).unwrap();
        assert_eq!(prod.state_count(), 4);
        // Pair word ((0,0), (1,1)) = symbols 0, 3.
        let u = Word::new(vec![0, 3], Alphabet::new(4).unwrap()).unwrap();
        let ua = Word::from_digits("01", Alphabet::new(2).unwrap()).unwrap();
        let expect =
            a.cylinder_measure(&ua).unwrap() * b.cylinder_measure(&ua).unwrap();
        assert!((prod.cylinder_measure(&u).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn closed_form_block_entropy_for_injective_labelings() {
        let m = MarkovModel::symmetric_flip(0.1).unwrap();
        let h = m.state_entropy_rate();
        let h4 = m.block_entropy_closed(4).unwrap();
        assert!((h4 - (1.0 + 3.0 * h)).abs() < 1e-12);
        let lumped = MarkovModel::new(
            vec![
                vec![0.5, 0.5, 0.0],
                vec![0.0, 0.5, 0.5],
                vec![0.5, 0.0, 0.5],
            ],
            vec![0, 0, 1],
            Alphabet::new(2).unwrap(),
        )
        .unwrap();
        assert!(lumped.block_entropy_closed(4).is_none());
        assert!(lumped.exact_entropy_rate().is_none());
    }

    #[test]
    fn sample_is_deterministic_and_roughly_balanced() {
        let m = MarkovModel::symmetric_flip(0.1).unwrap();
        let w1 = m.sample(100_000, 7);
        let w2 = m.sample(100_000, 7);
        assert_eq!(w1, w2);
        let ones = w1.symbols().iter().filter(|&&s| s == 1).count();
        let frac = ones as f64 / w1.len() as f64;
        assert!((frac - 0.5).abs() < 0.02, "one-fraction {frac}");
    }
}
