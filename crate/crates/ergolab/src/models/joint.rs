//! Jointly observed factor pairs: one Markov base with two labelings.
//!
//! A `JointModel` reads a hidden chain through two symbol maps at once,
//! giving a stationary coupling of the processes P (labels `p`) and Q
//! (labels `q`) in which Q-words can be conditioned on P-words. Products
//! `P x R` observed jointly with their P coordinate and identity couplings
//! `(P, P)` are the two standard constructions.

use crate::dist::KahanSum;
use crate::error::{Error, Result};
use crate::models::{MarkovModel, ENUMERATION_GUARD};
use crate::rng::Stream;
use crate::word::{Alphabet, Symbol, Word};

#[derive(Clone, Debug)]
pub struct JointModel {
    base: MarkovModel,
    labeling_p: Vec<Symbol>,
    alphabet_p: Alphabet,
    labeling_q: Vec<Symbol>,
    alphabet_q: Alphabet,
}

/// A Q-word drawn conditionally on a P-word, with the number of positions
/// where the P-word had to be repaired to stay on positive-measure paths.
#[derive(Clone, Debug)]
pub struct ConditionalDraw {
    pub v: Word,
    pub repaired_positions: usize,
}

impl JointModel {
    pub fn new(
        base: MarkovModel,
        labeling_p: Vec<Symbol>,
        alphabet_p: Alphabet,
        labeling_q: Vec<Symbol>,
        alphabet_q: Alphabet,
    ) -> Result<Self> {
        for (name, labeling, alphabet) in [
            ("p", &labeling_p, alphabet_p),
            ("q", &labeling_q, alphabet_q),
        ] {
            if labeling.len() != base.state_count() {
                return Err(Error::InvalidModel(format!(
                    "labeling {name} has {} entries for {} states",
                    labeling.len(),
                    base.state_count()
                )));
            }
            for &l in labeling.iter() {
                if l as usize >= alphabet.size() {
                    return Err(Error::SymbolOutOfRange {
                        symbol: l,
                        alphabet: alphabet.size(),
                    });
                }
            }
        }
        Ok(JointModel {
            base,
            labeling_p,
            alphabet_p,
            labeling_q,
            alphabet_q,
        })
    }

    /// The identity coupling (P, P) of a labeled chain with itself.
    pub fn identity(base: MarkovModel) -> Self {
        let labeling = base.labeling().to_vec();
        let alphabet = base.alphabet();
        JointModel {
            labeling_p: labeling.clone(),
            alphabet_p: alphabet,
            labeling_q: labeling,
            alphabet_q: alphabet,
            base,
        }
    }

    /// The product chain `left x right` observed through its left
    /// coordinate (P) and the full pair symbol (Q), i.e. X = P x R over P.
    pub fn over_left_factor(left: &MarkovModel, right: &MarkovModel) -> Result<Self> {
        let base = MarkovModel::product(left, right)?;
        let mb = right.state_count();
        let labeling_p: Vec<Symbol> = (0..base.state_count())
            .map(|s| left.labeling()[s / mb])
            .collect();
        let labeling_q = base.labeling().to_vec();
        let alphabet_q = base.alphabet();
        JointModel::new(base, labeling_p, left.alphabet(), labeling_q, alphabet_q)
    }

    pub fn base(&self) -> &MarkovModel {
        &self.base
    }

    pub fn labeling_p(&self) -> &[Symbol] {
        &self.labeling_p
    }

    pub fn labeling_q(&self) -> &[Symbol] {
        &self.labeling_q
    }

    pub fn alphabet_p(&self) -> Alphabet {
        self.alphabet_p
    }

    pub fn alphabet_q(&self) -> Alphabet {
        self.alphabet_q
    }

    /// Short human-readable tag.
    pub fn describe(&self) -> String {
        format!(
            "joint(states={}, p={}, q={})",
            self.base.state_count(),
            self.alphabet_p.size(),
            self.alphabet_q.size()
        )
    }

    /// One stationary walk of the base read through both labelings.
    pub fn sample_pair(&self, n: usize, seed: u64) -> (Word, Word) {
        let mut stream = Stream::new(seed);
        let mut ps = Vec::with_capacity(n);
        let mut qs = Vec::with_capacity(n);
        if n > 0 {
            let mut state = stream.categorical(self.base.stationary());
            ps.push(self.labeling_p[state]);
            qs.push(self.labeling_q[state]);
            for _ in 1..n {
                state = stream.categorical(&self.base.transition()[state]);
                ps.push(self.labeling_p[state]);
                qs.push(self.labeling_q[state]);
            }
        }
        (
            Word::new(ps, self.alphabet_p).expect("p labels lie in the alphabet"),
            Word::new(qs, self.alphabet_q).expect("q labels lie in the alphabet"),
        )
    }

    fn check_pair_lengths(&self, u: &Word, v: &Word) -> Result<()> {
        if u.len() != v.len() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                got: v.len(),
            });
        }
        self.check_p_word(u)?;
        if v.alphabet().size() != self.alphabet_q.size() {
            return Err(Error::IncompatibleDistribution(format!(
                "q-word over alphabet {} against labeling over alphabet {}",
                v.alphabet().size(),
                self.alphabet_q.size()
            )));
        }
        Ok(())
    }

    fn check_p_word(&self, u: &Word) -> Result<()> {
        if u.alphabet().size() != self.alphabet_p.size() {
            return Err(Error::IncompatibleDistribution(format!(
                "p-word over alphabet {} against labeling over alphabet {}",
                u.alphabet().size(),
                self.alphabet_p.size()
            )));
        }
        Ok(())
    }

    /// Measure of the P-cylinder `[u]` by the forward recursion.
    pub fn p_measure(&self, u: &Word) -> Result<f64> {
        self.check_p_word(u)?;
        Ok(self
            .forward_pass(u.symbols(), None)
            .iter()
            .sum())
    }

    /// Measure of the joint cylinder `[u] x [v]`.
    pub fn joint_measure(&self, u: &Word, v: &Word) -> Result<f64> {
        self.check_pair_lengths(u, v)?;
        Ok(self
            .forward_pass(u.symbols(), Some(v.symbols()))
            .iter()
            .sum())
    }

    /// Conditional measure `mu(v | u)`; errors when `mu(u) = 0`.
    pub fn conditional_measure(&self, u: &Word, v: &Word) -> Result<f64> {
        let pu = self.p_measure(u)?;
        if pu <= 0.0 {
            return Err(Error::NullConditioning(format!(
                "conditioning word {u} has measure zero"
            )));
        }
        Ok(self.joint_measure(u, v)? / pu)
    }

    /// Forward state-mass vector after reading `u` (and `v` when given).
    fn forward_pass(&self, u: &[Symbol], v: Option<&[Symbol]>) -> Vec<f64> {
        let m = self.base.state_count();
        if u.is_empty() {
            return self.base.stationary().to_vec();
        }
        let keep = |s: usize, i: usize| {
            self.labeling_p[s] == u[i]
                && v.map_or(true, |v| self.labeling_q[s] == v[i])
        };
        let mut forward: Vec<f64> = (0..m)
            .map(|s| {
                if keep(s, 0) {
                    self.base.stationary()[s]
                } else {
                    0.0
                }
            })
            .collect();
        let mut next = vec![0.0; m];
        for i in 1..u.len() {
            for t in next.iter_mut() {
                *t = 0.0;
            }
            for s in 0..m {
                let f = forward[s];
                if f == 0.0 {
                    continue;
                }
                for (t, &p) in self.base.transition()[s].iter().enumerate() {
                    if p > 0.0 && keep(t, i) {
                        next[t] += f * p;
                    }
                }
            }
            std::mem::swap(&mut forward, &mut next);
        }
        forward
    }

    /// Exact n-block entropy of the P process. Uses the closed form
    /// `H(pi) + (n-1) h` when `labeling_p` is injective, otherwise
    /// enumerates positive blocks under the guard.
    pub fn p_block_entropy(&self, n: usize) -> Result<f64> {
        labeled_block_entropy(&self.base, &self.labeling_p, n)
    }

    /// Exact n-block entropy of the joint (P, Q) process.
    pub fn pq_block_entropy(&self, n: usize) -> Result<f64> {
        let rq = self.alphabet_q.size() as u16;
        let pair_labels: Vec<Symbol> = (0..self.base.state_count())
            .map(|s| self.labeling_p[s] * rq + self.labeling_q[s])
            .collect();
        labeled_block_entropy(&self.base, &pair_labels, n)
    }

    /// Samples `v ~ mu(. | u)` by filtering the hidden state forward.
    ///
    /// When the given `u` leaves a step with no positive-measure
    /// continuation, the offending symbol is repaired to the
    /// maximal-mass label (nearest by Hamming distance among words that
    /// extend) and the repair is counted in the draw.
    pub fn sample_q_given_p(&self, u: &Word, seed: u64) -> Result<ConditionalDraw> {
        self.check_p_word(u)?;
        let m = self.base.state_count();
        let mut stream = Stream::new(seed);
        let mut v = Vec::with_capacity(u.len());
        let mut repaired = 0usize;
        // `weights` is the state distribution given everything emitted and
        // conditioned so far, before reading the current position.
        let mut weights = self.base.stationary().to_vec();
        let mut scratch = vec![0.0; m];
        for (i, &pu) in u.symbols().iter().enumerate() {
            if i > 0 {
                for t in scratch.iter_mut() {
                    *t = 0.0;
                }
                for s in 0..m {
                    let f = weights[s];
                    if f == 0.0 {
                        continue;
                    }
                    for (t, &p) in self.base.transition()[s].iter().enumerate() {
                        scratch[t] += f * p;
                    }
                }
                std::mem::swap(&mut weights, &mut scratch);
            }
            // Condition on the p-symbol, repairing it when impossible.
            let mass_of = |label: Symbol, w: &[f64]| -> f64 {
                (0..m)
                    .filter(|&s| self.labeling_p[s] == label)
                    .map(|s| w[s])
                    .sum()
            };
            let mut symbol = pu;
            if mass_of(symbol, &weights) <= 0.0 {
                let best = (0..self.alphabet_p.size() as u16)
                    .max_by(|&a, &b| {
                        mass_of(a, &weights).total_cmp(&mass_of(b, &weights))
                    })
                    .expect("nonempty alphabet");
                symbol = best;
                repaired += 1;
            }
            for s in 0..m {
                if self.labeling_p[s] != symbol {
                    weights[s] = 0.0;
                }
            }
            // Draw the q-symbol from the filtered state mass.
            let q_weights: Vec<f64> = (0..self.alphabet_q.size() as u16)
                .map(|a| {
                    (0..m)
                        .filter(|&s| self.labeling_q[s] == a)
                        .map(|s| weights[s])
                        .sum()
                })
                .collect();
            let total: f64 = q_weights.iter().sum();
            if total <= 0.0 {
                return Err(Error::InternalConsistency(format!(
                    "filtered state mass vanished at position {i}"
                )));
            }
            let normalized: Vec<f64> =
                q_weights.iter().map(|&w| w / total).collect();
            let a = stream.categorical(&normalized) as Symbol;
            v.push(a);
            for s in 0..m {
                if self.labeling_q[s] != a {
                    weights[s] = 0.0;
                }
            }
            // Renormalize to keep the filter away from underflow.
            let norm: f64 = weights.iter().sum();
            for w in weights.iter_mut() {
                *w /= norm;
            }
        }
        Ok(ConditionalDraw {
            v: Word::new(v, self.alphabet_q)?,
            repaired_positions: repaired,
        })
    }
}

/// Exact n-block entropy of a chain observed through `labels`.
fn labeled_block_entropy(
    base: &MarkovModel,
    labels: &[Symbol],
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let mut seen = std::collections::BTreeSet::new();
    let injective = labels.iter().all(|&l| seen.insert(l));
    if injective {
        let mut h1 = KahanSum::new();
        for &p in base.stationary() {
            if p > 0.0 {
                h1.add(-p * p.log2());
            }
        }
        return Ok(h1.value() + (n - 1) as f64 * base.state_entropy_rate());
    }
    // Enumerate positive label blocks by DFS on forward vectors.
    let r = labels.iter().copied().max().unwrap_or(0) + 1;
    let states = base.state_count();
    let mut entropy = KahanSum::new();
    let mut count = 0usize;
    let mut stack: Vec<(usize, Vec<f64>)> = Vec::new();
    for sym in 0..r {
        let forward: Vec<f64> = (0..states)
            .map(|s| {
                if labels[s] == sym {
                    base.stationary()[s]
                } else {
                    0.0
                }
            })
            .collect();
        if forward.iter().any(|&f| f > 0.0) {
            stack.push((1, forward));
        }
    }
    while let Some((depth, forward)) = stack.pop() {
        if depth == n {
            count += 1;
            if count > ENUMERATION_GUARD {
                return Err(Error::CapacityExceeded(format!(
                    "positive {n}-blocks exceed the enumeration guard {ENUMERATION_GUARD}"
                )));
            }
            let mu: f64 = forward.iter().sum();
            if mu > 0.0 {
                entropy.add(-mu * mu.log2());
            }
            continue;
        }
        for sym in 0..r {
            let mut next = vec![0.0; states];
            let mut any = false;
            for s in 0..states {
                let f = forward[s];
                if f == 0.0 {
                    continue;
                }
                for (t, &p) in base.transition()[s].iter().enumerate() {
                    if p > 0.0 && labels[t] == sym {
                        next[t] += f * p;
                        any = true;
                    }
                }
            }
            if any {
                stack.push((depth + 1, next));
            }
        }
    }
    Ok(entropy.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::IidModel;

    fn flip_identity() -> JointModel {
        JointModel::identity(MarkovModel::symmetric_flip(0.1).unwrap())
    }

    #[test]
    fn identity_coupling_concentrates_on_the_diagonal() {
        let j = flip_identity();
        let bin = Alphabet::new(2).unwrap();
        let u = Word::from_digits("0110", bin).unwrap();
        let mu = j.base().cylinder_measure(&u).unwrap();
        assert!((j.p_measure(&u).unwrap() - mu).abs() < 1e-15);
        assert!((j.joint_measure(&u, &u).unwrap() - mu).abs() < 1e-15);
        assert!((j.conditional_measure(&u, &u).unwrap() - 1.0).abs() < 1e-12);
        let other = Word::from_digits("0111", bin).unwrap();
        assert_eq!(j.joint_measure(&u, &other).unwrap(), 0.0);
    }

    #[test]
    fn product_joint_measures_factorize() {
        let left = MarkovModel::symmetric_flip(0.1).unwrap();
        let right =
            MarkovModel::from_iid(&[0.75, 0.25], Alphabet::new(2).unwrap()).unwrap();
        let j = JointModel::over_left_factor(&left, &right).unwrap();
        let bin = Alphabet::new(2).unwrap();
        let u = Word::from_digits("01", bin).unwrap();
        // v = pair word with right component 10: symbols (0,1), (1,0) = 1, 2.
        let v = Word::new(vec![1, 2], Alphabet::new(4).unwrap()).unwrap();
        let rw = Word::from_digits("10", bin).unwrap();
        let expect = left.cylinder_measure(&u).unwrap()
            * right.cylinder_measure(&rw).unwrap();
        assert!((j.joint_measure(&u, &v).unwrap() - expect).abs() < 1e-15);
        // Conditional on u is the right-component law alone.
        let cond = j.conditional_measure(&u, &v).unwrap();
        assert!((cond - right.cylinder_measure(&rw).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pair_words_disagreeing_with_u_have_zero_joint_measure() {
        let left = MarkovModel::symmetric_flip(0.1).unwrap();
        let right =
            MarkovModel::from_iid(&[0.5, 0.5], Alphabet::new(2).unwrap()).unwrap();
        let j = JointModel::over_left_factor(&left, &right).unwrap();
        let bin = Alphabet::new(2).unwrap();
        let u = Word::from_digits("00", bin).unwrap();
        // Pair symbol 2 = (1, 0) contradicts u_0 = 0.
        let v = Word::new(vec![2, 0], Alphabet::new(4).unwrap()).unwrap();
        assert_eq!(j.joint_measure(&u, &v).unwrap(), 0.0);
    }

    #[test]
    fn block_entropies_closed_form_and_enumeration_agree() {
        let left = MarkovModel::symmetric_flip(0.1).unwrap();
        let right =
            MarkovModel::from_iid(&[0.98, 0.02], Alphabet::new(2).unwrap()).unwrap();
        let j = JointModel::over_left_factor(&left, &right).unwrap();
        // P = left coordinate: lumped (4 states, 2 labels) -> enumeration.
        // Joint = injective -> closed form. Their difference at n vs n-1
        // recovers the component rates.
        let n = 6;
        let sp = j.p_block_entropy(n).unwrap() - j.p_block_entropy(n - 1).unwrap();
        let st = j.pq_block_entropy(n).unwrap() - j.pq_block_entropy(n - 1).unwrap();
        let h_left = left.exact_entropy_rate().unwrap();
        let h_right = -(0.98f64 * 0.98f64.log2() + 0.02 * 0.02f64.log2());
        assert!((sp - h_left).abs() < 1e-9, "p increment {sp}");
        assert!((st - (h_left + h_right)).abs() < 1e-9, "joint increment {st}");
    }

    #[test]
    fn iid_joint_entropy_is_linear() {
        let base =
            MarkovModel::from_iid(&[0.5, 0.5], Alphabet::new(2).unwrap()).unwrap();
        let j = JointModel::identity(base);
        for n in 1..=8 {
            assert!((j.p_block_entropy(n).unwrap() - n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_sampler_reproduces_the_right_factor_law() {
        let left = MarkovModel::symmetric_flip(0.1).unwrap();
        let right =
            MarkovModel::from_iid(&[0.75, 0.25], Alphabet::new(2).unwrap()).unwrap();
        let j = JointModel::over_left_factor(&left, &right).unwrap();
        let (u, _) = j.sample_pair(20_000, 3);
        let draw = j.sample_q_given_p(&u, 17).unwrap();
        assert_eq!(draw.repaired_positions, 0);
        // The right component of v must be 25% ones.
        let ones = draw
            .v
            .symbols()
            .iter()
            .filter(|&&s| s % 2 == 1)
            .count();
        let frac = ones as f64 / draw.v.len() as f64;
        assert!((frac - 0.25).abs() < 0.02, "right-ones fraction {frac}");
        // The left component of v must reproduce u exactly.
        for (i, &s) in draw.v.symbols().iter().enumerate() {
            assert_eq!(s / 2, u.symbols()[i], "left coordinate at {i}");
        }
        // Determinism.
        assert_eq!(j.sample_q_given_p(&u, 17).unwrap().v, draw.v);
    }

    #[test]
    fn impossible_p_words_get_repaired_and_counted() {
        // Near-alternating chain: after a 0 the chain strongly prefers 1,
        // but 0 stays possible (p = 0.1), so an all-zero word needs no
        // repair even though it is exponentially unlikely.
        let base = MarkovModel::new(
            vec![vec![0.1, 0.9], vec![0.9, 0.1]],
            vec![0, 1],
            Alphabet::new(2).unwrap(),
        )
        .unwrap();
        let j = JointModel::identity(base);
        let u = Word::new(vec![0; 8], Alphabet::new(2).unwrap()).unwrap();
        let draw = j.sample_q_given_p(&u, 5).unwrap();
        assert_eq!(draw.repaired_positions, 0);
        assert_eq!(draw.v, u, "identity coupling returns u itself");

        // A chain where 0 -> 0 is truly impossible.
        let base = MarkovModel::new(
            vec![vec![0.0, 1.0], vec![0.5, 0.5]],
            vec![0, 1],
            Alphabet::new(2).unwrap(),
        )
        .unwrap();
        let j = JointModel::identity(base);
        let u = Word::new(vec![0, 0, 1, 0], Alphabet::new(2).unwrap()).unwrap();
        let draw = j.sample_q_given_p(&u, 5).unwrap();
        assert_eq!(draw.repaired_positions, 1);
        // Repaired word: 0 1 1 0 (second symbol forced to 1).
        assert_eq!(draw.v.symbols(), &[0, 1, 1, 0]);
    }

    #[test]
    fn iid_model_and_identity_joint_agree() {
        let iid = IidModel::coin(0.3).unwrap();
        let chain =
            MarkovModel::from_iid(iid.weights(), iid.alphabet()).unwrap();
        let j = JointModel::identity(chain);
        let u = Word::from_digits("0110", Alphabet::new(2).unwrap()).unwrap();
        assert!(
            (j.p_measure(&u).unwrap() - iid.cylinder_measure(&u).unwrap()).abs()
                < 1e-15
        );
    }
}
