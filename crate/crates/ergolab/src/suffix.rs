//! Suffix automaton over small alphabets.
//!
//! One linear-size index answers every substring question the estimation
//! schemes ask: occurrence counts of all blocks, the number of distinct
//! blocks of each length, empirical block entropies, and longest-match
//! queries against the indexed prefix. Transitions are stored flat
//! (`state * r + symbol`), which caps the alphabet at [`MAX_ALPHABET`].

use crate::error::{Error, Result};
use crate::word::{Symbol, Word};

/// Alphabet cap for the flat transition table.
pub const MAX_ALPHABET: usize = 8;

const NONE: u32 = u32::MAX;

pub struct SuffixAutomaton {
    r: usize,
    /// Flat transition table, `NONE` for missing edges.
    trans: Vec<u32>,
    link: Vec<u32>,
    len: Vec<u32>,
    /// States created as primaries (not clones), in creation order; each
    /// marks one end position of the indexed word.
    primary: Vec<bool>,
    last: u32,
    word_len: usize,
}

impl SuffixAutomaton {
    pub fn new(r: usize) -> Result<Self> {
        if r == 0 || r > MAX_ALPHABET {
            return Err(Error::CapacityExceeded(format!(
                "suffix automaton supports alphabets of size 1..={MAX_ALPHABET}, got {r}"
            )));
        }
        Ok(SuffixAutomaton {
            r,
            trans: vec![NONE; r],
            link: vec![NONE],
            len: vec![0],
            primary: vec![false],
            last: 0,
            word_len: 0,
        })
    }

    pub fn from_word(w: &Word) -> Result<Self> {
        let mut automaton = SuffixAutomaton::new(w.alphabet().size())?;
        for &sym in w.symbols() {
            automaton.extend(sym);
        }
        Ok(automaton)
    }

    pub fn state_count(&self) -> usize {
        self.len.len()
    }

    pub fn word_len(&self) -> usize {
        self.word_len
    }

    fn edge(&self, state: u32, sym: Symbol) -> u32 {
        self.trans[state as usize * self.r + sym as usize]
    }

    fn set_edge(&mut self, state: u32, sym: Symbol, target: u32) {
        self.trans[state as usize * self.r + sym as usize] = target;
    }

    fn new_state(&mut self, len: u32, primary: bool) -> u32 {
        let id = self.len.len() as u32;
        self.trans.extend(std::iter::repeat_n(NONE, self.r));
        self.link.push(NONE);
        self.len.push(len);
        self.primary.push(primary);
        id
    }

    /// Online extension by one symbol (standard suffix-automaton step).
    pub fn extend(&mut self, sym: Symbol) {
        debug_assert!((sym as usize) < self.r);
        self.word_len += 1;
        let cur = self.new_state(self.len[self.last as usize] + 1, true);
        let mut p = self.last;
        while p != NONE && self.edge(p, sym) == NONE {
            self.set_edge(p, sym, cur);
            p = self.link[p as usize];
        }
        if p == NONE {
            self.link[cur as usize] = 0;
        } else {
            let q = self.edge(p, sym);
            if self.len[q as usize] == self.len[p as usize] + 1 {
                self.link[cur as usize] = q;
            } else {
                let clone = self.new_state(self.len[p as usize] + 1, false);
                for s in 0..self.r as Symbol {
                    let t = self.edge(q, s);
                    self.set_edge(clone, s, t);
                }
                self.link[clone as usize] = self.link[q as usize];
                while p != NONE && self.edge(p, sym) == q {
                    self.set_edge(p, sym, clone);
                    p = self.link[p as usize];
                }
                self.link[q as usize] = clone;
                self.link[cur as usize] = clone;
            }
        }
        self.last = cur;
    }

    /// Length of the longest prefix of `tail` occurring in the indexed
    /// word.
    pub fn match_length(&self, tail: &[Symbol]) -> usize {
        let mut state = 0u32;
        for (i, &sym) in tail.iter().enumerate() {
            if (sym as usize) >= self.r {
                return i;
            }
            let next = self.edge(state, sym);
            if next == NONE {
                return i;
            }
            state = next;
        }
        tail.len()
    }

    /// States sorted by `len` ascending (counting sort; root first).
    fn states_by_len(&self) -> Vec<u32> {
        let max_len = self.word_len + 1;
        let mut buckets = vec![0usize; max_len + 1];
        for &l in &self.len {
            buckets[l as usize] += 1;
        }
        let mut starts = vec![0usize; max_len + 1];
        for i in 1..=max_len {
            starts[i] = starts[i - 1] + buckets[i - 1];
        }
        let mut order = vec![0u32; self.len.len()];
        for (state, &l) in self.len.iter().enumerate() {
            order[starts[l as usize]] = state as u32;
            starts[l as usize] += 1;
        }
        order
    }

    /// Occurrence count (number of end positions) of each state's blocks.
    pub fn occurrence_counts(&self) -> Vec<u32> {
        let mut counts: Vec<u32> = self
            .primary
            .iter()
            .map(|&p| if p { 1 } else { 0 })
            .collect();
        for &state in self.states_by_len().iter().rev() {
            let parent = self.link[state as usize];
            if parent != NONE {
                counts[parent as usize] += counts[state as usize];
            }
        }
        counts
    }

    /// `distinct[k - 1]` = number of distinct k-blocks, for `k = 1..=len`.
    ///
    /// Each non-root state represents the block lengths
    /// `(len(link) , len(state)]`, one distinct block per length.
    pub fn distinct_by_length(&self) -> Vec<u64> {
        let mut diff = vec![0i64; self.word_len + 2];
        for state in 1..self.state_count() {
            let lo = self.len[self.link[state] as usize] as usize + 1;
            let hi = self.len[state] as usize;
            diff[lo] += 1;
            diff[hi + 1] -= 1;
        }
        let mut out = Vec::with_capacity(self.word_len);
        let mut acc = 0i64;
        for k in 1..=self.word_len {
            acc += diff[k];
            out.push(acc as u64);
        }
        out
    }

    /// Empirical entropy of the overlapping k-block distribution,
    /// `log2 W - (1/W) sum_w c_w log2 c_w` over the `W = len - k + 1`
    /// windows.
    pub fn empirical_block_entropy(&self, k: usize, counts: &[u32]) -> Result<f64> {
        if k == 0 || k > self.word_len {
            return Err(Error::InsufficientData(format!(
                "block length {k} outside 1..={}",
                self.word_len
            )));
        }
        let windows = (self.word_len - k + 1) as f64;
        let mut acc = 0.0f64;
        let mut covered = 0u64;
        for state in 1..self.state_count() {
            let min_len = self.len[self.link[state] as usize] as usize + 1;
            if min_len <= k && k <= self.len[state] as usize {
                let c = counts[state] as f64;
                acc += c * c.log2();
                covered += counts[state] as u64;
            }
        }
        debug_assert_eq!(covered as f64, windows, "window count mismatch");
        Ok(windows.log2() - acc / windows)
    }
}
