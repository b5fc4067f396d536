//! Block transplantation: lifting a path of a factor process to a path
//! of a richer process, one tower at a time.
//!
//! Given a decomposition of a `Y`-path into towers of height at least
//! `L`, each column name `u` is replaced by a draw from the conditional
//! law of the richer process above `u`. Towers are long relative to the
//! block length `N` under inspection, so the empirical `N`-block
//! statistics of the assembled path approach those of the richer
//! process even though the draws are independent across towers.

use crate::error::{Error, Result};
use crate::models::{ConditionalDraw, JointModel, Model};
use crate::rng::derive_seed;
use crate::towers::TowerDecomposition;
use crate::word::{Alphabet, Word};

/// Geometry of a transplant experiment.
#[derive(Clone, Copy, Debug)]
pub struct TransplantParams {
    n_block: usize,
    delta: f64,
    l: usize,
    beta: f64,
}

impl TransplantParams {
    /// `n_block`: block length under inspection; `delta`: total-variation
    /// slack; `l`: minimum tower height; `beta`: boundary-effect budget.
    /// Towers must dominate blocks: `l > 8 n_block / beta`.
    pub fn new(
        n_block: usize,
        delta: f64,
        l: usize,
        beta: f64,
    ) -> Result<Self> {
        if n_block == 0 {
            return Err(Error::InvalidConfig(
                "block length must be positive".into(),
            ));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidConfig(
                "delta must lie in (0, 1)".into(),
            ));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidConfig(
                "beta must lie in (0, 1)".into(),
            ));
        }
        if (l as f64) <= 8.0 * n_block as f64 / beta {
            return Err(Error::InvalidConfig(format!(
                "tower height {l} must exceed 8 N / beta = {}",
                8.0 * n_block as f64 / beta
            )));
        }
        Ok(TransplantParams {
            n_block,
            delta,
            l,
            beta,
        })
    }

    pub fn n_block(&self) -> usize {
        self.n_block
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn min_height(&self) -> usize {
        self.l
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The l1 tolerance for comparing an empirical `n_block`
    /// distribution over `windows` windows against the exact law:
    /// `delta + 3 sqrt(2^N / windows)`.
    pub fn l1_tolerance(&self, windows: usize) -> f64 {
        self.delta
            + 3.0 * ((1u64 << self.n_block) as f64 / windows as f64).sqrt()
    }
}

/// A law for drawing the richer column name above a factor column name.
pub trait ColumnConditional {
    /// Alphabet the factor names use.
    fn u_alphabet(&self) -> Alphabet;
    /// Alphabet the drawn names use.
    fn v_alphabet(&self) -> Alphabet;
    /// Draw a name above `u`, deterministically in `seed`.
    fn sample(&self, u: &Word, seed: u64) -> Result<ConditionalDraw>;
}

/// The trivial lift: the richer process is the factor itself.
pub struct IdentityConditional {
    alphabet: Alphabet,
}

impl IdentityConditional {
    pub fn new(alphabet: Alphabet) -> Self {
        IdentityConditional { alphabet }
    }
}

impl ColumnConditional for IdentityConditional {
    fn u_alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn v_alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn sample(&self, u: &Word, _seed: u64) -> Result<ConditionalDraw> {
        Ok(ConditionalDraw {
            v: u.clone(),
            repaired_positions: 0,
        })
    }
}

/// Conditional sampling through a joint model's q-given-p law.
pub struct JointConditional<'a> {
    joint: &'a JointModel,
}

impl<'a> JointConditional<'a> {
    pub fn new(joint: &'a JointModel) -> Self {
        JointConditional { joint }
    }
}

impl ColumnConditional for JointConditional<'_> {
    fn u_alphabet(&self) -> Alphabet {
        self.joint.alphabet_p()
    }

    fn v_alphabet(&self) -> Alphabet {
        self.joint.alphabet_q()
    }

    fn sample(&self, u: &Word, seed: u64) -> Result<ConditionalDraw> {
        self.joint.sample_q_given_p(u, seed)
    }
}

/// Lift over an independent right factor: the drawn name pairs each
/// `u`-symbol with a fresh sample of `right`, using the left-major pair
/// convention `v = u * r_right + s`.
pub struct ProductPairConditional {
    left_alphabet: Alphabet,
    right: Model,
    pair_alphabet: Alphabet,
}

impl ProductPairConditional {
    pub fn new(left_alphabet: Alphabet, right: Model) -> Result<Self> {
        let pair_alphabet =
            Alphabet::new(left_alphabet.size() * right.alphabet().size())?;
        Ok(ProductPairConditional {
            left_alphabet,
            right,
            pair_alphabet,
        })
    }
}

impl ColumnConditional for ProductPairConditional {
    fn u_alphabet(&self) -> Alphabet {
        self.left_alphabet
    }

    fn v_alphabet(&self) -> Alphabet {
        self.pair_alphabet
    }

    fn sample(&self, u: &Word, seed: u64) -> Result<ConditionalDraw> {
        let right_run = self.right.sample(u.len(), seed);
        let r_right = self.right.alphabet().size() as u16;
        let symbols = u
            .symbols()
            .iter()
            .zip(right_run.symbols())
            .map(|(&a, &b)| a * r_right + b)
            .collect();
        Ok(ConditionalDraw {
            v: Word::new(symbols, self.pair_alphabet)?,
            repaired_positions: 0,
        })
    }
}

/// A transplanted path.
#[derive(Clone, Debug)]
pub struct TransplantOutcome {
    /// The assembled path over the richer alphabet.
    pub word: Word,
    /// Towers whose draw needed at least one repair.
    pub repaired_columns: usize,
    /// Total repaired positions across towers.
    pub repaired_positions: usize,
}

/// Replace every tower of `decomp` by an independent conditional draw
/// above its factor name; leftover positions copy the factor path.
pub fn transplant_blocks(
    params: &TransplantParams,
    path_y: &Word,
    decomp: &TowerDecomposition,
    conditional: &dyn ColumnConditional,
    master_seed: u64,
) -> Result<TransplantOutcome> {
    if path_y.len() != decomp.path_len() {
        return Err(Error::LengthMismatch {
            expected: decomp.path_len(),
            got: path_y.len(),
        });
    }
    if path_y.alphabet() != conditional.u_alphabet() {
        return Err(Error::InvalidConfig(
            "factor path alphabet does not match the conditional law".into(),
        ));
    }
    let v_alphabet = conditional.v_alphabet();
    if conditional.u_alphabet().size() > v_alphabet.size() {
        return Err(Error::InvalidConfig(
            "factor alphabet must embed into the richer alphabet".into(),
        ));
    }
    for tower in decomp.towers() {
        if tower.height < params.min_height() {
            return Err(Error::InvalidConfig(format!(
                "tower of height {} under the floor L = {}",
                tower.height,
                params.min_height()
            )));
        }
    }
    let mut symbols = path_y.symbols().to_vec();
    let mut repaired_columns = 0usize;
    let mut repaired_positions = 0usize;
    for (index, tower) in decomp.towers().iter().enumerate() {
        let u = path_y.slice(tower.range());
        let draw =
            conditional.sample(&u, derive_seed(master_seed, index as u64))?;
        if draw.v.len() != tower.height {
            return Err(Error::InternalConsistency(
                "conditional draw has the wrong length".into(),
            ));
        }
        symbols[tower.range()].copy_from_slice(draw.v.symbols());
        if draw.repaired_positions > 0 {
            repaired_columns += 1;
            repaired_positions += draw.repaired_positions;
        }
    }
    Ok(TransplantOutcome {
        word: Word::new(symbols, v_alphabet)?,
        repaired_columns,
        repaired_positions,
    })
}
