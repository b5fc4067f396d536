//! Relative Shannon-McMillan-Breiman level sets.
//!
//! For a jointly observed pair (P, Q) and a block length `n`, the level
//! set collects the pairs `(u, v)` whose measures clear the exponential
//! thresholds
//!
//! ```text
//! mu(u) > 2^{-(s + eps) n},    mu(v | u) > 2^{-(t - s + eps) n},
//! ```
//!
//! where `s = H_n(P) - H_{n-1}(P)` and `t = H_n(P,Q) - H_{n-1}(P,Q)` are
//! the conditional-entropy increments. Whatever the values of `s` and `t`,
//! a mass argument forces the counting bounds: fewer than `2^{(s+eps)n}`
//! distinct `u`, and fewer than `2^{(t-s+eps)n}` values of `v` for each
//! `u`. As `n` grows the set captures all but a vanishing fraction of the
//! joint mass; the captured mass is reported as `coverage`.

use std::collections::BTreeMap;

use crate::dist::KahanSum;
use crate::error::{Error, Result};
use crate::models::JointModel;
use crate::word::{Symbol, Word};

/// Pair-space cap `r_p^n * r_q^n` for level-set enumeration.
pub const PAIR_ENUMERATION_GUARD: f64 = (1u64 << 24) as f64;

#[derive(Clone, Debug)]
pub struct RelativeSmbSet {
    n: usize,
    epsilon: f64,
    s: f64,
    t: f64,
    /// Kept pairs in lexicographic order, grouped by `u`.
    lists: BTreeMap<Word, Vec<Word>>,
    pair_count: usize,
    coverage: f64,
}

impl RelativeSmbSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Conditional-entropy increment of P at `n`.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Conditional-entropy increment of (P, Q) at `n`.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Kept `u`-words with their `v`-lists, lexicographically ordered.
    pub fn lists(&self) -> &BTreeMap<Word, Vec<Word>> {
        &self.lists
    }

    pub fn u_count(&self) -> usize {
        self.lists.len()
    }

    pub fn pair_count(&self) -> usize {
        self.pair_count
    }

    pub fn max_v_count(&self) -> usize {
        self.lists.values().map(Vec::len).max().unwrap_or(0)
    }

    /// Joint mass captured by the kept pairs.
    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    /// The counting bound `2^{(s+eps)n}` on distinct `u`.
    pub fn u_bound(&self) -> f64 {
        2f64.powf((self.s + self.epsilon) * self.n as f64)
    }

    /// The counting bound `2^{(t-s+eps)n}` on each `v`-list.
    pub fn v_bound(&self) -> f64 {
        2f64.powf((self.t - self.s + self.epsilon) * self.n as f64)
    }
}

/// Computes the level set at block length `n` and margin `epsilon`.
pub fn relative_smb_set(
    joint: &JointModel,
    n: usize,
    epsilon: f64,
) -> Result<RelativeSmbSet> {
    if n == 0 {
        return Err(Error::InsufficientData("level set needs n >= 1".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    let rp = joint.alphabet_p().size() as f64;
    let rq = joint.alphabet_q().size() as f64;
    let pair_space = (rp * rq).powi(n as i32);
    if pair_space > PAIR_ENUMERATION_GUARD {
        return Err(Error::CapacityExceeded(format!(
            "pair space (r_p r_q)^n = {pair_space:.3e} exceeds the guard \
             {PAIR_ENUMERATION_GUARD:.3e}"
        )));
    }
    let s = joint.p_block_entropy(n)? - joint.p_block_entropy(n - 1)?;
    let t = joint.pq_block_entropy(n)? - joint.pq_block_entropy(n - 1)?;
    let nf = n as f64;
    let theta_u = 2f64.powf(-(s + epsilon) * nf);
    let theta_v = 2f64.powf(-(t - s + epsilon) * nf);

    let mut lists: BTreeMap<Word, Vec<Word>> = BTreeMap::new();
    let mut pair_count = 0usize;
    let mut coverage = KahanSum::new();
    for (u, mu_u) in enumerate_u(joint, n, theta_u) {
        let vs = enumerate_v(joint, &u, mu_u, theta_v);
        if vs.is_empty() {
            continue;
        }
        for (_, mu_joint) in &vs {
            coverage.add(*mu_joint);
        }
        pair_count += vs.len();
        lists.insert(u, vs.into_iter().map(|(v, _)| v).collect());
    }

    let set = RelativeSmbSet {
        n,
        epsilon,
        s,
        t,
        lists,
        pair_count,
        coverage: coverage.value(),
    };
    // The mass argument makes these impossible to violate; treat any
    // excess as an internal inconsistency rather than a data error. The
    // tiny slack absorbs float rounding in the bound itself.
    if (set.u_count() as f64) >= set.u_bound() * (1.0 + 1e-9) {
        return Err(Error::InternalConsistency(format!(
            "{} u-words exceed the counting bound {}",
            set.u_count(),
            set.u_bound()
        )));
    }
    if (set.max_v_count() as f64) >= set.v_bound() * (1.0 + 1e-9) {
        return Err(Error::InternalConsistency(format!(
            "a v-list of length {} exceeds the counting bound {}",
            set.max_v_count(),
            set.v_bound()
        )));
    }
    Ok(set)
}

/// Coverage of the level set along a grid of block lengths.
pub fn coverage_growth(
    joint: &JointModel,
    epsilon: f64,
    ns: &[usize],
) -> Result<Vec<(usize, f64)>> {
    ns.iter()
        .map(|&n| Ok((n, relative_smb_set(joint, n, epsilon)?.coverage())))
        .collect()
}

/// All `u` with `mu(u) > theta_u`, found by depth-first search with
/// prefix-mass pruning (extending a word can only shrink its measure).
fn enumerate_u(joint: &JointModel, n: usize, theta_u: f64) -> Vec<(Word, f64)> {
    let base = joint.base();
    let states = base.state_count();
    let rp = joint.alphabet_p().size() as Symbol;
    let mut kept = Vec::new();
    let mut stack: Vec<(Vec<Symbol>, Vec<f64>)> = Vec::new();
    for sym in (0..rp).rev() {
        let forward: Vec<f64> = (0..states)
            .map(|s| {
                if joint.labeling_p()[s] == sym {
                    base.stationary()[s]
                } else {
                    0.0
                }
            })
            .collect();
        if forward.iter().sum::<f64>() > theta_u {
            stack.push((vec![sym], forward));
        }
    }
    while let Some((prefix, forward)) = stack.pop() {
        if prefix.len() == n {
            let mu: f64 = forward.iter().sum();
            let word = Word::new(prefix, joint.alphabet_p())
                .expect("enumerated symbols lie in the alphabet");
            kept.push((word, mu));
            continue;
        }
        for sym in (0..rp).rev() {
            let mut next = vec![0.0; states];
            for s in 0..states {
                let f = forward[s];
                if f == 0.0 {
                    continue;
                }
                for (tgt, &p) in base.transition()[s].iter().enumerate() {
                    if p > 0.0 && joint.labeling_p()[tgt] == sym {
                        next[tgt] += f * p;
                    }
                }
            }
            if next.iter().sum::<f64>() > theta_u {
                let mut word = prefix.clone();
                word.push(sym);
                stack.push((word, next));
            }
        }
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0));
    kept
}

/// All `v` with `mu(v | u) > theta_v` for a fixed `u`, by depth-first
/// search. The prune bound multiplies the joint forward mass by the
/// probability that the rest of the path still matches `u` with `v` left
/// free (computed once as a backward pass), which dominates every
/// completion of the current `v`-prefix.
fn enumerate_v(
    joint: &JointModel,
    u: &Word,
    mu_u: f64,
    theta_v: f64,
) -> Vec<(Word, f64)> {
    let base = joint.base();
    let states = base.state_count();
    let n = u.len();
    let us = u.symbols();
    let rq = joint.alphabet_q().size() as Symbol;
    let cutoff = theta_v * mu_u;

    // backward[i][s] = P(p-labels at positions i+1..n-1 match u | state s
    // at position i).
    let mut backward = vec![vec![1.0; states]; n];
    for i in (0..n - 1).rev() {
        for s in 0..states {
            let mut acc = 0.0;
            for (tgt, &p) in base.transition()[s].iter().enumerate() {
                if p > 0.0 && joint.labeling_p()[tgt] == us[i + 1] {
                    acc += p * backward[i + 1][tgt];
                }
            }
            backward[i][s] = acc;
        }
    }
    let bound = |i: usize, forward: &[f64]| -> f64 {
        (0..states).map(|s| forward[s] * backward[i][s]).sum()
    };

    let mut kept = Vec::new();
    let mut stack: Vec<(Vec<Symbol>, Vec<f64>)> = Vec::new();
    for sym in (0..rq).rev() {
        let forward: Vec<f64> = (0..states)
            .map(|s| {
                if joint.labeling_p()[s] == us[0] && joint.labeling_q()[s] == sym {
                    base.stationary()[s]
                } else {
                    0.0
                }
            })
            .collect();
        if bound(0, &forward) > cutoff {
            stack.push((vec![sym], forward));
        }
    }
    while let Some((prefix, forward)) = stack.pop() {
        let i = prefix.len();
        if i == n {
            let mu_joint: f64 = forward.iter().sum();
            let word = Word::new(prefix, joint.alphabet_q())
                .expect("enumerated symbols lie in the alphabet");
            kept.push((word, mu_joint));
            continue;
        }
        for sym in (0..rq).rev() {
            let mut next = vec![0.0; states];
            for s in 0..states {
                let f = forward[s];
                if f == 0.0 {
                    continue;
                }
                for (tgt, &p) in base.transition()[s].iter().enumerate() {
                    if p > 0.0
                        && joint.labeling_p()[tgt] == us[i]
                        && joint.labeling_q()[tgt] == sym
                    {
                        next[tgt] += f * p;
                    }
                }
            }
            if bound(i, &next) > cutoff {
                let mut word = prefix.clone();
                word.push(sym);
                stack.push((word, next));
            }
        }
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0));
    kept
}
