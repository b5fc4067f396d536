//! Tower decompositions of finite sample paths.
//!
//! A decomposition cuts `[0, path_len)` into disjoint towers (intervals a
//! column construction will treat as units) plus leftover positions. Two
//! constructions are provided: Kakutani skyscrapers over the return times
//! of a marker pattern (towers of varying height, each at least the
//! requested minimum), and Rohlin towers of one fixed height with leftover
//! fraction at most a prescribed epsilon.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::word::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tower {
    pub base: usize,
    pub height: usize,
}

impl Tower {
    pub fn top(&self) -> usize {
        self.base + self.height
    }

    pub fn range(&self) -> Range<usize> {
        self.base..self.top()
    }
}

#[derive(Clone, Debug)]
pub struct TowerDecomposition {
    path_len: usize,
    towers: Vec<Tower>,
    leftover: Vec<Range<usize>>,
}

impl TowerDecomposition {
    pub fn path_len(&self) -> usize {
        self.path_len
    }

    /// Towers in increasing base order.
    pub fn towers(&self) -> &[Tower] {
        &self.towers
    }

    /// Positions outside every tower, as sorted disjoint ranges.
    pub fn leftover(&self) -> &[Range<usize>] {
        &self.leftover
    }

    pub fn leftover_len(&self) -> usize {
        self.leftover.iter().map(|r| r.len()).sum()
    }

    pub fn leftover_fraction(&self) -> f64 {
        if self.path_len == 0 {
            0.0
        } else {
            self.leftover_len() as f64 / self.path_len as f64
        }
    }

    /// Checks the partition invariant: towers and leftover ranges are
    /// nonempty, sorted, disjoint, and cover `[0, path_len)` exactly.
    pub fn validate(&self) -> Result<()> {
        let mut pieces: Vec<(Range<usize>, &str)> = self
            .towers
            .iter()
            .map(|t| (t.range(), "tower"))
            .chain(self.leftover.iter().map(|r| (r.clone(), "leftover")))
            .collect();
        pieces.sort_by_key(|(r, _)| r.start);
        let mut cursor = 0usize;
        for (range, kind) in &pieces {
            if range.is_empty() {
                return Err(Error::InternalConsistency(format!(
                    "empty {kind} range at {}",
                    range.start
                )));
            }
            if range.start != cursor {
                return Err(Error::InternalConsistency(format!(
                    "{kind} at {} leaves a gap or overlap after {cursor}",
                    range.start
                )));
            }
            cursor = range.end;
        }
        if cursor != self.path_len {
            return Err(Error::InternalConsistency(format!(
                "decomposition covers [0, {cursor}) of a path of length {}",
                self.path_len
            )));
        }
        Ok(())
    }
}

/// Kakutani skyscraper over the return times of `pattern`.
///
/// Every occurrence of `pattern` marks a candidate base; candidates closer
/// than `min_height` to the last kept base are thinned out greedily. Each
/// tower runs from its base to the next kept base; the final tower runs to
/// the end of the path when that leaves it tall enough, otherwise its
/// segment joins the leftover. The prefix before the first base is
/// leftover. Requires `pattern.len() <= min_height` so a tower always
/// contains the occurrence that spawned it.
pub fn kakutani_decompose(
    path: &Word,
    pattern: &Word,
    min_height: usize,
) -> Result<TowerDecomposition> {
    if pattern.is_empty() {
        return Err(Error::InsufficientData("marker pattern is empty".into()));
    }
    if min_height < pattern.len() {
        return Err(Error::InfeasibleTower(format!(
            "min_height {min_height} is shorter than the pattern ({})",
            pattern.len()
        )));
    }
    if path.alphabet().size() != pattern.alphabet().size() {
        return Err(Error::IncompatibleDistribution(
            "pattern and path alphabets differ".into(),
        ));
    }
    let symbols = path.symbols();
    let target = pattern.symbols();
    let mut kept: Vec<usize> = Vec::new();
    let mut i = 0usize;
    while i + target.len() <= symbols.len() {
        if &symbols[i..i + target.len()] == target
            && kept.last().is_none_or(|&last| i - last >= min_height)
        {
            kept.push(i);
        }
        i += 1;
    }
    let mut towers = Vec::with_capacity(kept.len());
    let mut leftover = Vec::new();
    if let Some(&first) = kept.first() {
        if first > 0 {
            leftover.push(0..first);
        }
        for pair in kept.windows(2) {
            towers.push(Tower {
                base: pair[0],
                height: pair[1] - pair[0],
            });
        }
        let last = *kept.last().expect("nonempty");
        let tail = path.len() - last;
        if tail >= min_height {
            towers.push(Tower {
                base: last,
                height: tail,
            });
        } else {
            leftover.push(last..path.len());
        }
    } else if path.len() > 0 {
        leftover.push(0..path.len());
    }
    let decomposition = TowerDecomposition {
        path_len: path.len(),
        towers,
        leftover,
    };
    decomposition.validate()?;
    Ok(decomposition)
}

/// Rohlin tower of fixed `height` with leftover fraction at most
/// `epsilon`: `floor(path_len / height)` towers and the short tail as
/// leftover. Infeasible when `height > epsilon * path_len`.
pub fn rohlin_tower(
    path_len: usize,
    height: usize,
    epsilon: f64,
) -> Result<TowerDecomposition> {
    if height == 0 {
        return Err(Error::InfeasibleTower("height must be positive".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    if height as f64 > epsilon * path_len as f64 {
        return Err(Error::InfeasibleTower(format!(
            "height {height} exceeds epsilon * path_len = {}",
            epsilon * path_len as f64
        )));
    }
    let full = path_len / height;
    let towers = (0..full)
        .map(|k| Tower {
            base: k * height,
            height,
        })
        .collect();
    let mut leftover = Vec::new();
    if full * height < path_len {
        leftover.push(full * height..path_len);
    }
    let decomposition = TowerDecomposition {
        path_len,
        towers,
        leftover,
    };
    decomposition.validate()?;
    Ok(decomposition)
}

/// Towers of one decomposition grouped by height and column names.
#[derive(Clone, Debug)]
pub struct Column {
    pub height: usize,
    /// The p-word read up the column.
    pub name_p: Word,
    /// The q-word read up the column, when a q-path was supplied.
    pub name_q: Option<Word>,
    /// Bases of the member towers, increasing.
    pub bases: Vec<usize>,
}

/// Groups towers into columns keyed by `(height, name_p, name_q)`, in
/// lexicographic key order.
pub fn extract_columns(
    decomposition: &TowerDecomposition,
    path_p: &Word,
    path_q: Option<&Word>,
) -> Result<Vec<Column>> {
    if path_p.len() != decomposition.path_len() {
        return Err(Error::LengthMismatch {
            expected: decomposition.path_len(),
            got: path_p.len(),
        });
    }
    if let Some(q) = path_q {
        if q.len() != decomposition.path_len() {
            return Err(Error::LengthMismatch {
                expected: decomposition.path_len(),
                got: q.len(),
            });
        }
    }
    let mut groups: BTreeMap<(usize, Word, Option<Word>), Vec<usize>> = BTreeMap::new();
    for tower in decomposition.towers() {
        let name_p = path_p.slice(tower.range());
        let name_q = path_q.map(|q| q.slice(tower.range()));
        groups
            .entry((tower.height, name_p, name_q))
            .or_default()
            .push(tower.base);
    }
    Ok(groups
        .into_iter()
        .map(|((height, name_p, name_q), bases)| Column {
            height,
            name_p,
            name_q,
            bases,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{MarkovModel, Model};
    use crate::word::Alphabet;

    fn word(digits: &str) -> Word {
        Word::from_digits(digits, Alphabet::new(2).unwrap()).unwrap()
    }

    #[test]
    fn kakutani_hand_example() {
        // Pattern 01 occurs at 0, 3, 6, 8; thinning at min height 3 keeps
        // 0, 3, 6; the tail [6, 10) is tall enough to stand.
        let decomposition =
            kakutani_decompose(&word("0100100101"), &word("01"), 3).unwrap();
        let towers = decomposition.towers();
        assert_eq!(
            towers,
            &[
                Tower { base: 0, height: 3 },
                Tower { base: 3, height: 3 },
                Tower { base: 6, height: 4 },
            ]
        );
        assert!(decomposition.leftover().is_empty());
    }

    #[test]
    fn kakutani_prefix_and_short_tail_become_leftover() {
        // Pattern 11 occurs at 1 and 4 in 0110110.
        let decomposition =
            kakutani_decompose(&word("0110110"), &word("11"), 2).unwrap();
        assert_eq!(
            decomposition.towers(),
            &[
                Tower { base: 1, height: 3 },
                Tower { base: 4, height: 3 },
            ]
        );
        assert_eq!(decomposition.leftover(), &[0..1]);

        // In 010101 the kept bases are 0 and 4 (2 is thinned); the tail
        // [4, 6) is too short for min height 3.
        let decomposition =
            kakutani_decompose(&word("010101"), &word("01"), 3).unwrap();
        assert_eq!(decomposition.towers(), &[Tower { base: 0, height: 4 }]);
        assert_eq!(decomposition.leftover(), &[4..6]);
        assert!((decomposition.leftover_fraction() - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn kakutani_without_occurrences_is_all_leftover() {
        let decomposition =
            kakutani_decompose(&word("000000"), &word("11"), 2).unwrap();
        assert!(decomposition.towers().is_empty());
        assert_eq!(decomposition.leftover(), &[0..6]);
        assert_eq!(decomposition.leftover_fraction(), 1.0);
    }

    #[test]
    fn kakutani_preconditions() {
        assert!(kakutani_decompose(&word("0101"), &word("01"), 1).is_err());
        let empty = Word::new(vec![], Alphabet::new(2).unwrap()).unwrap();
        assert!(kakutani_decompose(&word("0101"), &empty, 2).is_err());
    }

    #[test]
    fn rohlin_towers_have_fixed_height_and_small_leftover() {
        let decomposition = rohlin_tower(100, 7, 0.1).unwrap();
        assert_eq!(decomposition.towers().len(), 14);
        for tower in decomposition.towers() {
            assert_eq!(tower.height, 7);
        }
        assert_eq!(decomposition.leftover(), &[98..100]);
        assert!(decomposition.leftover_fraction() <= 0.1);
        assert!(matches!(
            rohlin_tower(100, 7, 0.05),
            Err(Error::InfeasibleTower(_))
        ));
    }

    #[test]
    fn validate_rejects_overlaps_gaps_and_bad_cover() {
        let overlap = TowerDecomposition {
            path_len: 10,
            towers: vec![
                Tower { base: 0, height: 6 },
                Tower { base: 4, height: 6 },
            ],
            leftover: vec![],
        };
        assert!(overlap.validate().is_err());
        let gap = TowerDecomposition {
            path_len: 10,
            towers: vec![Tower { base: 0, height: 4 }],
            leftover: vec![6..10],
        };
        assert!(gap.validate().is_err());
        let short = TowerDecomposition {
            path_len: 10,
            towers: vec![Tower { base: 0, height: 4 }],
            leftover: vec![4..8],
        };
        assert!(short.validate().is_err());
    }

    #[test]
    fn columns_group_by_height_and_names() {
        let path = word("01010101");
        let decomposition = rohlin_tower(8, 2, 0.5).unwrap();
        let columns = extract_columns(&decomposition, &path, None).unwrap();
        assert_eq!(columns.len(), 1);
        assert_eq!(columns[0].name_p, word("01"));
        assert_eq!(columns[0].bases, vec![0, 2, 4, 6]);
        assert!(columns[0].name_q.is_none());

        // A second path splits the towers into two named columns:
        // q-blocks 01, 10, 10, 01.
        let q = word("01101001");
        let columns = extract_columns(&decomposition, &path, Some(&q)).unwrap();
        assert_eq!(columns.len(), 2);
        assert_eq!(columns[0].name_q.as_ref().unwrap(), &word("01"));
        assert_eq!(columns[0].bases, vec![0, 6]);
        assert_eq!(columns[1].name_q.as_ref().unwrap(), &word("10"));
        assert_eq!(columns[1].bases, vec![2, 4]);
        for column in &columns {
            assert_eq!(column.name_p, word("01"));
        }
    }

    #[test]
    fn sampled_path_decomposition_validates() {
        let model = Model::Markov(MarkovModel::symmetric_flip(0.1).unwrap());
        let path = model.sample(4096, 31);
        let pattern = path.slice(0..3);
        let decomposition = kakutani_decompose(&path, &pattern, 16).unwrap();
        decomposition.validate().unwrap();
        for tower in decomposition.towers() {
            assert!(tower.height >= 16);
            // Each tower's base carries the pattern.
            assert_eq!(
                path.slice(tower.base..tower.base + 3).symbols(),
                pattern.symbols()
            );
        }
    }
}
