//! Process models with exact cylinder measures.
//!
//! Every model is a stationary ergodic symbol process that can sample
//! finite paths deterministically from a seed and evaluate the measure of
//! any cylinder set exactly (up to float rounding), independently of
//! sampling. The closed class: i.i.d. products, irreducible aperiodic
//! Markov chains with (possibly lumping) labelings, coded irrational
//! rotations, and direct products of the above.

pub mod file;
pub mod iid;
pub mod joint;
pub mod markov;
pub mod rotation;

pub use file::{load_model, model_to_file, save_model, JointFile, ModelFile};
pub(crate) use file::read_input;
pub use iid::IidModel;
pub use joint::{ConditionalDraw, JointModel};
pub use markov::MarkovModel;
pub use rotation::RotationModel;

use crate::dist::BlockDistribution;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::word::{Alphabet, Symbol, Word};

/// Support-size cap for exact block-distribution enumeration.
pub const ENUMERATION_GUARD: usize = 1 << 22;

#[derive(Clone, Debug)]
pub enum Model {
    Iid(IidModel),
    Markov(MarkovModel),
    Rotation(RotationModel),
    Product(Box<ProductModel>),
}

/// Direct product of two component processes; the pair symbol `(a, b)` is
/// encoded as `a * r_right + b`.
#[derive(Clone, Debug)]
pub struct ProductModel {
    left: Model,
    right: Model,
    alphabet: Alphabet,
}

impl ProductModel {
    pub fn new(left: Model, right: Model) -> Result<Self> {
        let alphabet = left.alphabet().pair(&right.alphabet())?;
        Ok(ProductModel {
            left,
            right,
            alphabet,
        })
    }

    pub fn left(&self) -> &Model {
        &self.left
    }

    pub fn right(&self) -> &Model {
        &self.right
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// Splits a pair word into its component words.
    pub fn split(&self, u: &Word) -> Result<(Word, Word)> {
        if u.alphabet().size() != self.alphabet.size() {
            return Err(Error::IncompatibleDistribution(format!(
                "word over alphabet {} against product over alphabet {}",
                u.alphabet().size(),
                self.alphabet.size()
            )));
        }
        let rr = self.right.alphabet().size() as u16;
        let (mut ls, mut rs) = (Vec::with_capacity(u.len()), Vec::with_capacity(u.len()));
        for &s in u.symbols() {
            ls.push(s / rr);
            rs.push(s % rr);
        }
        Ok((
            Word::new(ls, self.left.alphabet())?,
            Word::new(rs, self.right.alphabet())?,
        ))
    }

    /// Joins component words into the pair word.
    pub fn join(&self, l: &Word, r: &Word) -> Result<Word> {
        if l.len() != r.len() {
            return Err(Error::LengthMismatch {
                expected: l.len(),
                got: r.len(),
            });
        }
        let rr = self.right.alphabet().size() as u16;
        let symbols = l
            .symbols()
            .iter()
            .zip(r.symbols())
            .map(|(&a, &b)| a * rr + b)
            .collect();
        Word::new(symbols, self.alphabet)
    }
}

impl Model {
    pub fn alphabet(&self) -> Alphabet {
        match self {
            Model::Iid(m) => m.alphabet(),
            Model::Markov(m) => m.alphabet(),
            Model::Rotation(m) => m.alphabet(),
            Model::Product(m) => m.alphabet(),
        }
    }

    /// Short human-readable designation used in reports.
    pub fn describe(&self) -> String {
        match self {
            Model::Iid(m) => format!("iid(r={})", m.alphabet().size()),
            Model::Markov(m) => format!(
                "{}(states={}, r={})",
                if m.is_injective_labeling() {
                    "markov"
                } else {
                    "lumped-markov"
                },
                m.state_count(),
                m.alphabet().size()
            ),
            Model::Rotation(m) => {
                format!("rotation(intervals={})", m.breakpoints().len())
            }
            Model::Product(m) => {
                format!("product({} x {})", m.left.describe(), m.right.describe())
            }
        }
    }

    /// Deterministic stationary sample of length `n`. Product components
    /// draw from independent streams derived from the seed.
    pub fn sample(&self, n: usize, seed: u64) -> Word {
        match self {
            Model::Iid(m) => m.sample(n, seed),
            Model::Markov(m) => m.sample(n, seed),
            Model::Rotation(m) => m.sample(n, seed),
            Model::Product(m) => {
                let l = m.left.sample(n, derive_seed(seed, 0));
                let r = m.right.sample(n, derive_seed(seed, 1));
                m.join(&l, &r).expect("components have equal length")
            }
        }
    }

    /// Exact measure of the cylinder `[u]`.
    pub fn cylinder_measure(&self, u: &Word) -> Result<f64> {
        match self {
            Model::Iid(m) => m.cylinder_measure(u),
            Model::Markov(m) => m.cylinder_measure(u),
            Model::Rotation(m) => m.cylinder_measure(u),
            Model::Product(m) => {
                let (l, r) = m.split(u)?;
                Ok(m.left.cylinder_measure(&l)? * m.right.cylinder_measure(&r)?)
            }
        }
    }

    /// Exact entropy rate when a closed form exists.
    pub fn exact_entropy_rate(&self) -> Option<f64> {
        match self {
            Model::Iid(m) => Some(m.exact_entropy_rate()),
            Model::Markov(m) => m.exact_entropy_rate(),
            Model::Rotation(m) => Some(m.exact_entropy_rate()),
            Model::Product(m) => {
                Some(m.left.exact_entropy_rate()? + m.right.exact_entropy_rate()?)
            }
        }
    }

    /// Exact n-block distribution by enumeration of the positive support,
    /// guarded by [`ENUMERATION_GUARD`].
    pub fn block_distribution_exact(&self, n: usize) -> Result<BlockDistribution> {
        if n == 0 {
            return Err(Error::InsufficientData("block length must be positive".into()));
        }
        match self {
            Model::Iid(m) => iid_block_distribution(m, n),
            Model::Markov(m) => markov_block_distribution(m, n),
            Model::Rotation(m) => m.block_distribution_exact(n),
            Model::Product(m) => {
                let dl = m.left.block_distribution_exact(n)?;
                let dr = m.right.block_distribution_exact(n)?;
                if dl
                    .support_size()
                    .saturating_mul(dr.support_size())
                    > ENUMERATION_GUARD
                {
                    return Err(Error::CapacityExceeded(format!(
                        "product support {} x {} exceeds the enumeration guard {}",
                        dl.support_size(),
                        dr.support_size(),
                        ENUMERATION_GUARD
                    )));
                }
                let mut weights = Vec::new();
                for (lw, lp) in dl.support() {
                    for (rw, rp) in dr.support() {
                        weights.push((m.join(lw, rw)?, lp * rp));
                    }
                }
                BlockDistribution::new(n, m.alphabet, weights)
            }
        }
    }
}

fn iid_block_distribution(m: &IidModel, n: usize) -> Result<BlockDistribution> {
    let positive: Vec<(Symbol, f64)> = m
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(s, &w)| (s as Symbol, w))
        .collect();
    let count = (positive.len() as f64).powi(n as i32);
    if count > ENUMERATION_GUARD as f64 {
        return Err(Error::CapacityExceeded(format!(
            "{}^{n} positive blocks exceed the enumeration guard {}",
            positive.len(),
            ENUMERATION_GUARD
        )));
    }
    let mut weights = Vec::new();
    let mut stack: Vec<(Vec<Symbol>, f64)> = vec![(Vec::new(), 1.0)];
    while let Some((prefix, p)) = stack.pop() {
        if prefix.len() == n {
            weights.push((Word::new(prefix, m.alphabet())?, p));
            continue;
        }
        for &(s, w) in positive.iter().rev() {
            let mut next = prefix.clone();
            next.push(s);
            stack.push((next, p * w));
        }
    }
    BlockDistribution::new(n, m.alphabet(), weights)
}

fn markov_block_distribution(m: &MarkovModel, n: usize) -> Result<BlockDistribution> {
    let r = m.alphabet().size() as Symbol;
    let states = m.state_count();
    let mut weights = Vec::new();
    // DFS over measure-positive prefixes carrying the forward state vector.
    let mut stack: Vec<(Vec<Symbol>, Vec<f64>)> = Vec::new();
    for sym in (0..r).rev() {
        let forward: Vec<f64> = (0..states)
            .map(|s| {
                if m.labeling()[s] == sym {
                    m.stationary()[s]
                } else {
                    0.0
                }
            })
            .collect();
        if forward.iter().any(|&f| f > 0.0) {
            stack.push((vec![sym], forward));
        }
    }
    while let Some((prefix, forward)) = stack.pop() {
        if prefix.len() == n {
            if weights.len() >= ENUMERATION_GUARD {
                return Err(Error::CapacityExceeded(format!(
                    "positive {n}-blocks exceed the enumeration guard {ENUMERATION_GUARD}"
                )));
            }
            weights.push((Word::new(prefix, m.alphabet())?, forward.iter().sum()));
            continue;
        }
        for sym in (0..r).rev() {
            let mut next = vec![0.0; states];
            for s in 0..states {
                let f = forward[s];
                if f == 0.0 {
                    continue;
                }
                for (t, &p) in m.transition()[s].iter().enumerate() {
                    if p > 0.0 && m.labeling()[t] == sym {
                        next[t] += f * p;
                    }
                }
            }
            if next.iter().any(|&f| f > 0.0) {
                let mut word = prefix.clone();
                word.push(sym);
                stack.push((word, next));
            }
        }
    }
    weights.sort_by(|a, b| a.0.cmp(&b.0));
    BlockDistribution::new(n, m.alphabet(), weights)
}
