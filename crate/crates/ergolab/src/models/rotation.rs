//! Irrational circle rotations coded by interval partitions.
//!
//! Points live on the circle [0, 1) represented exactly as `Frac128`
//! (multiples of 2^-128); the rotation adds a fixed irrational angle each
//! step and the emitted symbol is the label of the partition interval
//! containing the point. All cylinder measures are computed exactly as
//! interval-set intersections, so zero-entropy behaviour is available
//! without sampling error. These are the canonical zero-entropy, strictly
//! ergodic examples.
//!
//! Breakpoints `b_0 = 0 < b_1 < ... < b_{k-1}` cut the circle into the
//! intervals `[b_i, b_{i+1})` (the last wraps to the top); interval `i`
//! carries `symbols[i]`.

use std::collections::BTreeMap;

use crate::dist::BlockDistribution;
use crate::error::{Error, Result};
use crate::frac::Frac128;
use crate::rng::Stream;
use crate::word::{Alphabet, Symbol, Word};

/// Half-open subinterval of [0, 2^128) over raw `Frac128` bits.
/// `hi == 0` encodes the top of the circle (2^128); pieces are nonempty.
type Piece = (u128, u128);

/// Denominator bound below which rotation angles must not be rational.
pub const MIN_ANGLE_DENOMINATOR: u64 = 1_000_000;

#[derive(Clone, Debug)]
pub struct RotationModel {
    alpha: Frac128,
    breakpoints: Vec<Frac128>,
    symbols: Vec<Symbol>,
    alphabet: Alphabet,
}

impl RotationModel {
    /// Builds and validates a coded rotation.
    ///
    /// Checks: the angle is at distance from every rational with
    /// denominator below [`MIN_ANGLE_DENOMINATOR`], breakpoints start at 0
    /// and strictly increase, one symbol per interval, and consecutive
    /// intervals carry distinct symbols (merged canonical form).
    pub fn new(
        alpha: Frac128,
        breakpoints: Vec<Frac128>,
        symbols: Vec<Symbol>,
    ) -> Result<Self> {
        alpha.check_rational_distance(MIN_ANGLE_DENOMINATOR)?;
        if breakpoints.len() < 2 {
            return Err(Error::InvalidModel(
                "a coded rotation needs at least two intervals; a one-interval \
                 coding is the constant process"
                    .into(),
            ));
        }
        if breakpoints[0] != Frac128::ZERO {
            return Err(Error::InvalidModel(
                "first breakpoint must be 0 so intervals cover [0,1) exactly".into(),
            ));
        }
        for pair in breakpoints.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::InvalidModel(
                    "breakpoints must be strictly increasing".into(),
                ));
            }
        }
        if symbols.len() != breakpoints.len() {
            return Err(Error::InvalidModel(format!(
                "{} symbols for {} intervals",
                symbols.len(),
                breakpoints.len()
            )));
        }
        for pair in symbols.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::InvalidModel(
                    "consecutive intervals carry the same symbol; merge them".into(),
                ));
            }
        }
        let r = symbols.iter().copied().max().unwrap_or(0) as usize + 1;
        let alphabet = Alphabet::new(r)?;
        Ok(RotationModel {
            alpha,
            breakpoints,
            symbols,
            alphabet,
        })
    }

    /// Binary coding by the single cut `c`: `[0, c) -> 0`, `[c, 1) -> 1`.
    pub fn binary_cut(alpha: Frac128, cut: Frac128) -> Result<Self> {
        if cut == Frac128::ZERO {
            return Err(Error::InvalidModel("cut must be nonzero".into()));
        }
        RotationModel::new(alpha, vec![Frac128::ZERO, cut], vec![0, 1])
    }

    /// The Sturmian coding of angle `alpha`: cut at `1 - alpha`, so the
    /// positive-block count is exactly `n + 1` for every `n`.
    pub fn sturmian(alpha: Frac128) -> Result<Self> {
        RotationModel::binary_cut(alpha, Frac128::ZERO.sub(alpha))
    }

    pub fn alpha(&self) -> Frac128 {
        self.alpha
    }

    pub fn breakpoints(&self) -> &[Frac128] {
        &self.breakpoints
    }

    pub fn interval_symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// All rotations are zero-entropy processes.
    pub fn exact_entropy_rate(&self) -> f64 {
        0.0
    }

    /// Index of the partition interval containing `x`: largest `i` with
    /// `b_i <= x`.
    pub fn interval_of(&self, x: Frac128) -> usize {
        self.breakpoints.partition_point(|&b| b <= x) - 1
    }

    pub fn symbol_at(&self, x: Frac128) -> Symbol {
        self.symbols[self.interval_of(x)]
    }

    /// Codes the orbit of `x` for `n` steps.
    pub fn code_orbit(&self, mut x: Frac128, n: usize) -> Word {
        let mut symbols = Vec::with_capacity(n);
        for _ in 0..n {
            symbols.push(self.symbol_at(x));
            x = x.add(self.alpha);
        }
        Word::new(symbols, self.alphabet).expect("interval symbols lie in the alphabet")
    }

    /// Samples by coding the orbit of a uniformly random starting point.
    pub fn sample(&self, n: usize, seed: u64) -> Word {
        let mut stream = Stream::new(seed);
        self.code_orbit(Frac128::from_raw(stream.uniform_u128()), n)
    }

    /// Linear pieces of the interval class carrying symbol `sym`, each
    /// shifted by `-delta` on the circle (so that `x + delta` lies in the
    /// class iff `x` lies in a piece).
    fn shifted_class_pieces(&self, sym: Symbol, delta: Frac128) -> Vec<Piece> {
        let k = self.breakpoints.len();
        let mut pieces = Vec::new();
        for i in 0..k {
            if self.symbols[i] != sym {
                continue;
            }
            let s = self.breakpoints[i].raw().wrapping_sub(delta.raw());
            let e_point = if i + 1 < k {
                self.breakpoints[i + 1].raw()
            } else {
                0
            };
            let e = e_point.wrapping_sub(delta.raw());
            // Circle interval [s, e), s != e, split at the top.
            if s < e {
                pieces.push((s, e));
            } else {
                if e != 0 {
                    pieces.push((0, e));
                }
                pieces.push((s, 0));
            }
        }
        pieces.sort_unstable();
        pieces
    }

    /// Incremental tracker for the cylinder measure of a growing word.
    pub fn cylinder_tracker(&self) -> CylinderTracker<'_> {
        CylinderTracker {
            model: self,
            current: Vec::new(),
            delta: Frac128::ZERO,
            started: false,
        }
    }

    /// Exact measure (as raw 2^-128 units) of the set of starting points
    /// whose coded orbit begins with `u`.
    pub fn cylinder_measure_raw(&self, u: &Word) -> Result<u128> {
        if u.alphabet().size() != self.alphabet.size() {
            return Err(Error::IncompatibleDistribution(format!(
                "word over alphabet {} against model over alphabet {}",
                u.alphabet().size(),
                self.alphabet.size()
            )));
        }
        if u.is_empty() {
            return Err(Error::InsufficientData(
                "cylinder of the empty word is the whole circle".into(),
            ));
        }
        let mut tracker = self.cylinder_tracker();
        let mut raw = 0;
        for &sym in u.symbols() {
            raw = tracker.push(sym);
        }
        Ok(raw)
    }

    /// Cylinder measure as a float in [0, 1].
    pub fn cylinder_measure(&self, u: &Word) -> Result<f64> {
        Ok(Frac128::from_raw(self.cylinder_measure_raw(u)?).to_f64())
    }

    /// All length-`n` words of positive measure with their exact raw
    /// measures, via the arcs cut by `{b_j - t alpha}`.
    pub fn positive_blocks_raw(&self, n: usize) -> Result<BTreeMap<Word, u128>> {
        if n == 0 {
            return Err(Error::InsufficientData("block length must be positive".into()));
        }
        let mut points = Vec::with_capacity(self.breakpoints.len() * n);
        let mut delta = Frac128::ZERO;
        for t in 0..n {
            for &b in &self.breakpoints {
                points.push(b.raw().wrapping_sub(delta.raw()));
            }
            if t + 1 < n {
                delta = delta.add(self.alpha);
            }
        }
        points.sort_unstable();
        points.dedup();
        let mut blocks: BTreeMap<Word, u128> = BTreeMap::new();
        for (idx, &start) in points.iter().enumerate() {
            let next = if idx + 1 < points.len() {
                points[idx + 1]
            } else {
                points[0]
            };
            let len = next.wrapping_sub(start);
            if len == 0 {
                continue;
            }
            // Any interior point of the arc has the arc's name; the
            // midpoint is safely interior (or the start itself if len = 1).
            let rep = Frac128::from_raw(start.wrapping_add(len >> 1));
            let name = self.code_orbit(rep, n);
            *blocks.entry(name).or_insert(0) += len;
        }
        Ok(blocks)
    }

    /// Number of distinct length-`n` words of positive measure.
    pub fn complexity(&self, n: usize) -> Result<usize> {
        Ok(self.positive_blocks_raw(n)?.len())
    }

    /// Exact n-block distribution.
    pub fn block_distribution_exact(&self, n: usize) -> Result<BlockDistribution> {
        let blocks = self.positive_blocks_raw(n)?;
        let weights = blocks
            .into_iter()
            .map(|(w, raw)| (w, Frac128::from_raw(raw).to_f64()));
        BlockDistribution::new(n, self.alphabet, weights)
    }
}

/// Streaming cylinder measure: push symbols one at a time and read off the
/// exact measure of the word so far.
pub struct CylinderTracker<'a> {
    model: &'a RotationModel,
    current: Vec<Piece>,
    delta: Frac128,
    started: bool,
}

impl CylinderTracker<'_> {
    /// Extends the tracked word by `sym` and returns the raw measure of
    /// the extended cylinder.
    pub fn push(&mut self, sym: Symbol) -> u128 {
        if !self.started {
            self.current = self.model.shifted_class_pieces(sym, Frac128::ZERO);
            self.started = true;
        } else {
            self.delta = self.delta.add(self.model.alpha);
            if !self.current.is_empty() {
                let step = self.model.shifted_class_pieces(sym, self.delta);
                self.current = intersect_pieces(&self.current, &step);
            }
        }
        self.current
            .iter()
            .map(|&(lo, hi)| hi.wrapping_sub(lo))
            .fold(0u128, |acc, len| {
                acc.checked_add(len).expect("class unions are proper subsets")
            })
    }
}

/// Intersection of two sorted disjoint piece lists.
fn intersect_pieces(a: &[Piece], b: &[Piece]) -> Vec<Piece> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = min_end(a[i].1, b[j].1);
        if hi == 0 || lo < hi {
            out.push((lo, hi));
        }
        // Advance whichever piece ends first; top (0) ends last.
        match (a[i].1, b[j].1) {
            (0, 0) => break,
            (0, _) => j += 1,
            (_, 0) => i += 1,
            (x, y) if x <= y => i += 1,
            _ => j += 1,
        }
    }
    out
}

/// Minimum of two piece ends under the `0 = top` encoding.
fn min_end(x: u128, y: u128) -> u128 {
    match (x, y) {
        (0, e) | (e, 0) => e,
        (x, y) => x.min(y),
    }
}
