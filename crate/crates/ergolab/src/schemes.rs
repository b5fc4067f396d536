//! Finitary observation schemes: maps from finite words to entropy
//! estimates.
//!
//! Every scheme here is a pure function of the input word, clamped to the
//! a-priori range `[0, log2 r + 1]`, so sequences of estimates along
//! growing prefixes are well-defined random variables. Convergence in
//! probability is probed empirically by [`convergence_report`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::Model;
use crate::rng::derive_seed;
use crate::suffix::SuffixAutomaton;
use crate::word::{Symbol, Word};

/// Block-length policy for the plug-in scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PluginPolicy {
    /// Grow the block length until the number of distinct blocks seen
    /// crosses `floor(sqrt(len))`, then step back one. Tracks the longest
    /// scale at which the empirical block statistics are still dense.
    #[default]
    Adaptive,
    /// Fixed `k = floor(log2 len / (2 log2 r))`.
    FixedLog,
}

/// A named observation scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum SchemeDescriptor {
    /// Conditional empirical block entropy `H_emp(k) - H_emp(k - 1)`.
    Plugin {
        #[serde(default)]
        policy: PluginPolicy,
    },
    /// Incremental-parsing codelength `log2(c!) / len`.
    Lz78,
    /// Sliding-window parsing codelength (experimental).
    Lz77,
    /// Recurrence-time estimator `log2 i / match length`, averaged over
    /// probes in the final quarter.
    Returntime,
    /// Empirical frequency of one symbol: observable, but converges to a
    /// non-entropy invariant. Kept as a control.
    Freq { symbol: Symbol },
}

impl SchemeDescriptor {
    pub fn plugin() -> Self {
        SchemeDescriptor::Plugin {
            policy: PluginPolicy::Adaptive,
        }
    }

    /// Upper end of the estimate range for alphabet size `r`.
    pub fn range_cap(r: usize) -> f64 {
        (r as f64).log2() + 1.0
    }

    /// Evaluate the scheme on a word.
    pub fn evaluate(&self, w: &Word) -> Result<f64> {
        if w.is_empty() {
            return Err(Error::InsufficientData(
                "schemes need a nonempty word".into(),
            ));
        }
        let raw = match self {
            SchemeDescriptor::Plugin {
                policy: PluginPolicy::Adaptive,
            } => plugin_adaptive(w)?,
            SchemeDescriptor::Plugin {
                policy: PluginPolicy::FixedLog,
            } => plugin_fixed_log(w)?,
            SchemeDescriptor::Lz78 => lz78(w),
            SchemeDescriptor::Lz77 => lz77(w)?,
            SchemeDescriptor::Returntime => returntime(w)?,
            SchemeDescriptor::Freq { symbol } => freq(w, *symbol)?,
        };
        Ok(raw.clamp(0.0, Self::range_cap(w.alphabet().size())))
    }
}

impl fmt::Display for SchemeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeDescriptor::Plugin {
                policy: PluginPolicy::Adaptive,
            } => write!(f, "plugin"),
            SchemeDescriptor::Plugin {
                policy: PluginPolicy::FixedLog,
            } => write!(f, "plugin:fixed-log"),
            SchemeDescriptor::Lz78 => write!(f, "lz78"),
            SchemeDescriptor::Lz77 => write!(f, "lz77"),
            SchemeDescriptor::Returntime => write!(f, "returntime"),
            SchemeDescriptor::Freq { symbol } => write!(f, "freq:{symbol}"),
        }
    }
}

impl FromStr for SchemeDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plugin" => Ok(SchemeDescriptor::plugin()),
            "plugin:adaptive" => Ok(SchemeDescriptor::plugin()),
            "plugin:fixed-log" => Ok(SchemeDescriptor::Plugin {
                policy: PluginPolicy::FixedLog,
            }),
            "lz78" => Ok(SchemeDescriptor::Lz78),
            "lz77" => Ok(SchemeDescriptor::Lz77),
            "returntime" => Ok(SchemeDescriptor::Returntime),
            _ => match s.strip_prefix("freq:") {
                Some(digits) => {
                    let symbol = digits.parse::<Symbol>().map_err(|_| {
                        Error::InvalidConfig(format!(
                            "bad symbol in scheme name {s:?}"
                        ))
                    })?;
                    Ok(SchemeDescriptor::Freq { symbol })
                }
                None => Err(Error::InvalidConfig(format!(
                    "unknown scheme {s:?}"
                ))),
            },
        }
    }
}

/// Adaptive plug-in: pick `k*` from the distinct-block profile, then
/// return `H_emp(k*) - H_emp(k* - 1)` (with `H_emp(0) = 0`).
fn plugin_adaptive(w: &Word) -> Result<f64> {
    let r = w.alphabet().size();
    if r == 1 {
        return Ok(0.0);
    }
    if w.len() < 2 {
        return Err(Error::InsufficientData(
            "adaptive plug-in needs at least 2 symbols".into(),
        ));
    }
    let automaton = SuffixAutomaton::from_word(w)?;
    let distinct = automaton.distinct_by_length();
    let budget = (w.len() as f64).sqrt().floor() as u64;
    // First k at which the distinct-block count overruns the budget;
    // everything below that scale is observed with high multiplicity.
    let crossing = distinct
        .iter()
        .position(|&d| d > budget)
        .map(|idx| idx + 1)
        .unwrap_or(w.len());
    let k_star = (crossing.saturating_sub(1)).clamp(1, w.len() / 2);
    let counts = automaton.occurrence_counts();
    let high = automaton.empirical_block_entropy(k_star, &counts)?;
    let low = if k_star == 1 {
        0.0
    } else {
        automaton.empirical_block_entropy(k_star - 1, &counts)?
    };
    Ok(high - low)
}

/// Plug-in with the fixed logarithmic block length
/// `k = max(1, floor(log2 len / (2 log2 r)))`, returning `H_emp(k)/k`.
fn plugin_fixed_log(w: &Word) -> Result<f64> {
    let r = w.alphabet().size();
    if r == 1 {
        return Ok(0.0);
    }
    if w.len() < 2 {
        return Err(Error::InsufficientData(
            "plug-in needs at least 2 symbols".into(),
        ));
    }
    let k = ((w.len() as f64).log2() / (2.0 * (r as f64).log2())).floor()
        as usize;
    let k = k.clamp(1, w.len());
    // Direct window hashing; k is logarithmic so u64 packing suffices.
    let mut counts: HashMap<u64, u32> = HashMap::new();
    let symbols = w.symbols();
    for i in 0..=(w.len() - k) {
        let mut key = 0u64;
        for &sym in &symbols[i..i + k] {
            key = key * r as u64 + sym as u64;
        }
        *counts.entry(key).or_insert(0) += 1;
    }
    let windows = (w.len() - k + 1) as f64;
    // Hash-map order is unstable; sort so the float sum is reproducible.
    let mut sorted: Vec<u32> = counts.into_values().collect();
    sorted.sort_unstable();
    let mut acc = 0.0;
    for c in sorted {
        let c = c as f64;
        acc += c * c.log2();
    }
    Ok((windows.log2() - acc / windows) / k as f64)
}

/// Incremental parsing: the word is split into `c` phrases by the greedy
/// shortest-new-phrase parse, and the estimate is the dictionary-index
/// codelength per symbol, `(Σ_{j=1..c} log2 j)/len = log2(c!)/len` — phrase
/// `j` is charged the cost of naming its parent in a dictionary of size `j`.
/// The cruder `c·log2(c)/len` envelope exceeds this by the Stirling gap
/// `c·log2(e)/len`, a finite-length overshoot of about `0.11` at `n = 2^20`
/// on unit-entropy input, which would swamp the oracle tolerances used here.
fn lz78(w: &Word) -> f64 {
    // Trie over dictionary phrases; node 0 is the empty phrase.
    let mut children: HashMap<(u32, Symbol), u32> = HashMap::new();
    let mut next_node = 1u32;
    let mut phrases = 0u64;
    let mut node = 0u32;
    for &sym in w.symbols() {
        match children.get(&(node, sym)) {
            Some(&child) => node = child,
            None => {
                children.insert((node, sym), next_node);
                next_node += 1;
                phrases += 1;
                node = 0;
            }
        }
    }
    if node != 0 {
        // Trailing partial phrase.
        phrases += 1;
    }
    log2_factorial(phrases) / w.len() as f64
}

/// `log2(c!)` by direct summation (ascending, so the value is reproducible).
fn log2_factorial(c: u64) -> f64 {
    (2..=c).map(|j| (j as f64).log2()).sum()
}

/// Sliding-window parsing: each phrase is the longest match into the
/// already-consumed prefix (minimum length 1), scored with the same
/// dictionary-index codelength `log2(c!)/len` as the incremental parse.
fn lz77(w: &Word) -> Result<f64> {
    let mut automaton = SuffixAutomaton::new(w.alphabet().size())?;
    let symbols = w.symbols();
    let mut phrases = 0u64;
    let mut pos = 0usize;
    while pos < w.len() {
        let matched = automaton.match_length(&symbols[pos..]);
        let step = matched.max(1);
        for &sym in &symbols[pos..pos + step] {
            automaton.extend(sym);
        }
        pos += step;
        phrases += 1;
    }
    Ok(log2_factorial(phrases) / w.len() as f64)
}

/// Recurrence-time estimate: for probes `i` in the final quarter, the
/// longest match `l_i` of the suffix starting at `i` into `w[0..i)` gives
/// the term `log2 i / max(l_i, 1)`; the estimate is the probe average.
///
/// Matches are truncated at `max(64 * ceil(log2 n), ceil(sqrt n))` symbols.
/// Matches anywhere near that long never occur on positive-entropy paths
/// (they concentrate at `log2(i) / h`), so the truncation changes nothing
/// there; on low-complexity paths, where matches can run for a constant
/// fraction of the word, it keeps the total work subquadratic.  Truncation
/// can only shorten a match, so the reported estimate is an upper bound on
/// the untruncated one and a small reported value remains trustworthy.
fn returntime(w: &Word) -> Result<f64> {
    if w.len() < 16 {
        return Err(Error::InsufficientData(
            "returntime needs at least 16 symbols".into(),
        ));
    }
    let symbols = w.symbols();
    let probe_start = 3 * w.len() / 4;
    let n = w.len() as f64;
    let cap = ((64.0 * n.log2().ceil()) as usize).max(n.sqrt().ceil() as usize);
    let mut automaton = SuffixAutomaton::new(w.alphabet().size())?;
    for &sym in &symbols[..probe_start] {
        automaton.extend(sym);
    }
    let mut acc = 0.0f64;
    for i in probe_start..w.len() {
        let end = (i + cap).min(w.len());
        let matched = automaton.match_length(&symbols[i..end]);
        acc += (i as f64).log2() / matched.max(1) as f64;
        automaton.extend(symbols[i]);
    }
    Ok(acc / (w.len() - probe_start) as f64)
}

/// Empirical frequency of `symbol`.
fn freq(w: &Word, symbol: Symbol) -> Result<f64> {
    if (symbol as usize) >= w.alphabet().size() {
        return Err(Error::SymbolOutOfRange {
            symbol,
            alphabet: w.alphabet().size(),
        });
    }
    let hits = w.symbols().iter().filter(|&&s| s == symbol).count();
    Ok(hits as f64 / w.len() as f64)
}

/// Median of a nonempty slice (mean of the middle two for even lengths).
pub(crate) fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("median of NaN"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

/// Empirical convergence data for one scheme on one model.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub scheme: String,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub epsilon: f64,
    /// `estimates[trial][grid index]`.
    pub estimates: Vec<Vec<f64>>,
    /// Per-grid-point median across trials.
    pub medians: Vec<f64>,
    /// Median estimate at the largest length: the empirical limit.
    pub limit_estimate: f64,
    /// Fraction of trials whose final estimate is within `epsilon` of the
    /// empirical limit.
    pub in_probability_fraction: f64,
}

/// Evaluate `scheme` on independent sample paths of `model` along the
/// length grid; trials run in parallel.
pub fn convergence_report(
    scheme: SchemeDescriptor,
    model: &Model,
    n_grid: &[usize],
    trials: usize,
    epsilon: f64,
    master_seed: u64,
) -> Result<ConvergenceReport> {
    if n_grid.is_empty() || n_grid.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidConfig(
            "length grid must be nonempty and strictly increasing".into(),
        ));
    }
    if trials < 10 {
        return Err(Error::InvalidConfig(
            "convergence reports need at least 10 trials".into(),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }
    let n_max = *n_grid.last().expect("nonempty grid");
    let estimates: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let path =
                model.sample(n_max, derive_seed(master_seed, trial as u64));
            n_grid
                .iter()
                .map(|&n| scheme.evaluate(&path.slice(0..n)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let medians: Vec<f64> = (0..n_grid.len())
        .map(|g| {
            median(
                &estimates
                    .iter()
                    .map(|row| row[g])
                    .collect::<Vec<f64>>(),
            )
        })
        .collect();
    let limit_estimate = *medians.last().expect("nonempty grid");
    let finals: Vec<f64> =
        estimates.iter().map(|row| *row.last().unwrap()).collect();
    let hits = finals
        .iter()
        .filter(|&&v| (v - limit_estimate).abs() <= epsilon)
        .count();
    Ok(ConvergenceReport {
        scheme: scheme.to_string(),
        n_grid: n_grid.to_vec(),
        trials,
        epsilon,
        estimates,
        medians,
        limit_estimate,
        in_probability_fraction: hits as f64 / trials as f64,
    })
}
