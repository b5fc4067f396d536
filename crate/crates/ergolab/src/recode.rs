//! Three-stage column recoding and its inverse.
//!
//! Stage 1 stamps a synchronisation pattern: a run of `2m` ones followed
//! by a zero at every later multiple of `m`. Inside a column no other
//! position is forced, yet no interior window of `2m` positions can be
//! all ones (it always contains a forced zero), so the run betrays the
//! base. Stage 2 writes the conditional index of the full name `v` in
//! the shared list `A(u)`; stage 3 writes the rank of `u`'s header
//! prefix in the shared codebook plus the `u`-symbols displaced by tail
//! markers. Everything past the header copies `u` literally, so the
//! output disagrees with `u` on at most `M + ceil(n/m)` positions.

use crate::codebook::{RecodeBook, RecodeBooks, StageLayout};
use crate::error::{Error, Result};
use crate::towers::{Tower, TowerDecomposition};
use crate::word::{Alphabet, Symbol, Word};

/// One recoded column.
#[derive(Clone, Debug)]
pub struct RecodedColumn {
    /// The rewritten word, over the output alphabet.
    pub output: Word,
    /// Positions where the output disagrees with the factor name.
    pub modified: usize,
    /// Stage assignment of every position.
    pub layout: StageLayout,
}

/// Big-endian base-k digits of `value`, exactly `width` of them.
fn digits(value: usize, width: usize, k: usize) -> Result<Vec<Symbol>> {
    let mut out = vec![0 as Symbol; width];
    let mut rest = value;
    for slot in out.iter_mut().rev() {
        *slot = (rest % k) as Symbol;
        rest /= k;
    }
    if rest != 0 {
        return Err(Error::InternalConsistency(format!(
            "value {value} does not fit {width} base-{k} digits"
        )));
    }
    Ok(out)
}

/// Read back a base-k digit block as a number.
fn number(digits: &[Symbol], k: usize) -> Result<usize> {
    let mut acc = 0u128;
    for &d in digits {
        acc = acc * k as u128 + d as u128;
    }
    usize::try_from(acc).map_err(|_| {
        Error::Corruption("digit block overflows an index".into())
    })
}

/// Rewrite one column name pair through the book's three stages.
pub fn recode_column(
    book: &RecodeBook,
    u: &Word,
    v: &Word,
) -> Result<RecodedColumn> {
    let params = book.params();
    let n = params.height();
    let k = params.output_alphabet();
    if u.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: u.len(),
        });
    }
    if v.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: v.len(),
        });
    }
    if u.alphabet() != book.alphabet_p() || v.alphabet() != book.alphabet_q()
    {
        return Err(Error::InvalidConfig(
            "column names use alphabets the book was not built for".into(),
        ));
    }
    let prefix = u.slice(0..params.header_len());
    let rank = book.prefix_rank(&prefix).ok_or_else(|| {
        Error::Codebook("column prefix missing from the shared codebook".into())
    })?;
    let list = book.lists().get(u).ok_or_else(|| {
        Error::Codebook("column name missing from the shared book".into())
    })?;
    let q_index = list.binary_search(v).map_err(|_| {
        Error::Codebook("conditional name missing from its shared list".into())
    })?;

    let mut symbols = vec![0 as Symbol; n];
    for (p, slot) in symbols.iter_mut().enumerate() {
        if params.is_marker(p) {
            *slot = params.marker_symbol(p);
        }
    }
    let mut header_values = digits(q_index, book.index_width(), k)?;
    header_values.extend(digits(rank, book.rank_width(), k)?);
    for p in params.tail_marker_positions() {
        header_values.push(u.symbols()[p]);
    }
    let header_positions = params.header_data_positions();
    if header_values.len() > header_positions.len() {
        return Err(Error::InternalConsistency(format!(
            "{} header digits into {} free positions",
            header_values.len(),
            header_positions.len()
        )));
    }
    for (&p, &value) in header_positions.iter().zip(&header_values) {
        symbols[p] = value;
    }
    for p in params.tail_data_positions() {
        symbols[p] = u.symbols()[p];
    }
    let modified = symbols
        .iter()
        .zip(u.symbols())
        .filter(|(a, b)| a != b)
        .count();
    let output = Word::new(symbols, Alphabet::new(k)?)?;
    Ok(RecodedColumn {
        output,
        modified,
        layout: book.layout(),
    })
}

/// Invert [`recode_column`]: recover the `(u, v)` name pair.
pub fn decode_column(book: &RecodeBook, w: &Word) -> Result<(Word, Word)> {
    let params = book.params();
    let n = params.height();
    if w.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: w.len(),
        });
    }
    if w.alphabet().size() != params.output_alphabet() {
        return Err(Error::InvalidConfig(
            "recoded word uses the wrong output alphabet".into(),
        ));
    }
    let symbols = w.symbols();
    for p in 0..n {
        if params.is_marker(p) && symbols[p] != params.marker_symbol(p) {
            return Err(Error::Desync(format!(
                "marker at position {p} reads {} instead of {}",
                symbols[p],
                params.marker_symbol(p)
            )));
        }
    }
    let header_positions = params.header_data_positions();
    let header: Vec<Symbol> =
        header_positions.iter().map(|&p| symbols[p]).collect();
    let k = params.output_alphabet();
    let q_index = number(&header[..book.index_width()], k)?;
    let rank = number(
        &header[book.index_width()..book.index_width() + book.rank_width()],
        k,
    )?;
    let literal_start = book.index_width() + book.rank_width();
    let tail_markers = params.tail_marker_positions();
    let literals = &header[literal_start..literal_start + tail_markers.len()];

    if rank >= book.prefixes().len() {
        return Err(Error::Corruption(format!(
            "prefix rank {rank} outside a codebook of {}",
            book.prefixes().len()
        )));
    }
    let alphabet_p = book.alphabet_p();
    let mut u_symbols = book.prefixes()[rank].symbols().to_vec();
    let mut literal_iter = literals.iter();
    for p in params.header_len()..n {
        let sym = if params.is_marker(p) {
            *literal_iter.next().expect("one literal per tail marker")
        } else {
            symbols[p]
        };
        if (sym as usize) >= alphabet_p.size() {
            return Err(Error::Corruption(format!(
                "recovered factor symbol {sym} at position {p} is outside \
                 its alphabet"
            )));
        }
        u_symbols.push(sym);
    }
    let u = Word::new(u_symbols, alphabet_p)?;
    let list = book.lists().get(&u).ok_or_else(|| {
        Error::Codebook("decoded factor name missing from the shared book".into())
    })?;
    if q_index >= list.len() {
        return Err(Error::Corruption(format!(
            "conditional index {q_index} outside a list of {}",
            list.len()
        )));
    }
    Ok((u, list[q_index].clone()))
}

/// A whole path recoded tower by tower.
#[derive(Clone, Debug)]
pub struct RecodedPath {
    /// The rewritten path: recoded columns on towers, the factor path
    /// copied on leftover positions.
    pub word: Word,
    /// Total positions changed relative to the factor path.
    pub modified: usize,
    /// Per-tower modified counts, in tower order.
    pub tower_modified: Vec<usize>,
}

/// Recode every tower of `decomp` through the matching book.
pub fn recode_path(
    books: &RecodeBooks,
    decomp: &TowerDecomposition,
    path_p: &Word,
    path_q: &Word,
) -> Result<RecodedPath> {
    if path_p.len() != decomp.path_len() {
        return Err(Error::LengthMismatch {
            expected: decomp.path_len(),
            got: path_p.len(),
        });
    }
    if path_q.len() != decomp.path_len() {
        return Err(Error::LengthMismatch {
            expected: decomp.path_len(),
            got: path_q.len(),
        });
    }
    if path_p.alphabet() != books.alphabet_p() {
        return Err(Error::InvalidConfig(
            "factor path alphabet does not match the books".into(),
        ));
    }
    let mut symbols = path_p.symbols().to_vec();
    let mut tower_modified = Vec::with_capacity(decomp.towers().len());
    let mut modified = 0usize;
    for tower in decomp.towers() {
        let book = books.get(tower.height).ok_or_else(|| {
            Error::AtypicalColumn {
                base: tower.base,
                height: tower.height,
                detail: "no shared book for this height".into(),
            }
        })?;
        let u = path_p.slice(tower.range());
        let v = path_q.slice(tower.range());
        let column =
            recode_column(book, &u, &v).map_err(|e| match e {
                Error::Codebook(detail) => Error::AtypicalColumn {
                    base: tower.base,
                    height: tower.height,
                    detail,
                },
                other => other,
            })?;
        symbols[tower.range()]
            .copy_from_slice(column.output.symbols());
        tower_modified.push(column.modified);
        modified += column.modified;
    }
    let word =
        Word::new(symbols, Alphabet::new(books.output_alphabet())?)?;
    Ok(RecodedPath {
        word,
        modified,
        tower_modified,
    })
}

/// A path decoded back into names.
#[derive(Clone, Debug)]
pub struct DecodedPath {
    /// The reconstructed factor path (towers decoded, leftover copied).
    pub path_p: Word,
    /// Per-tower `(tower, u, v)` name pairs.
    pub towers: Vec<(Tower, Word, Word)>,
}

/// Invert [`recode_path`] against the same decomposition and books.
pub fn decode_path(
    books: &RecodeBooks,
    decomp: &TowerDecomposition,
    word: &Word,
) -> Result<DecodedPath> {
    if word.len() != decomp.path_len() {
        return Err(Error::LengthMismatch {
            expected: decomp.path_len(),
            got: word.len(),
        });
    }
    let alphabet_p = books.alphabet_p();
    let mut symbols = word.symbols().to_vec();
    let mut towers = Vec::with_capacity(decomp.towers().len());
    for tower in decomp.towers() {
        let book = books.get(tower.height).ok_or_else(|| {
            Error::AtypicalColumn {
                base: tower.base,
                height: tower.height,
                detail: "no shared book for this height".into(),
            }
        })?;
        let (u, v) = decode_column(book, &word.slice(tower.range()))?;
        symbols[tower.range()].copy_from_slice(u.symbols());
        towers.push((*tower, u, v));
    }
    for range in decomp.leftover() {
        for p in range.clone() {
            if (symbols[p] as usize) >= alphabet_p.size() {
                return Err(Error::Corruption(format!(
                    "leftover symbol {} at position {p} is outside the \
                     factor alphabet",
                    symbols[p]
                )));
            }
        }
    }
    Ok(DecodedPath {
        path_p: Word::new(symbols, alphabet_p)?,
        towers,
    })
}

/// Find the column base at or before `pos`: the start of the latest run
/// of `2m` ones that is terminated by a zero marker.
pub fn detect_base(word: &Word, pos: usize, m: usize) -> Option<usize> {
    let symbols = word.symbols();
    let run = 2 * m;
    if word.len() < run {
        return None;
    }
    let latest = pos.min(word.len() - run);
    (0..=latest).rev().find(|&j| {
        symbols[j..j + run].iter().all(|&s| s == 1)
            && symbols.get(j + run) == Some(&0)
    })
}

/// Marker-detection accuracy over a recoded path.
#[derive(Clone, Copy, Debug)]
pub struct BaseDetectionReport {
    /// One probe per tower, from its top position.
    pub probes: usize,
    /// Probes whose detected base equals the tower base.
    pub correct: usize,
}

impl BaseDetectionReport {
    pub fn accuracy(&self) -> f64 {
        if self.probes == 0 {
            1.0
        } else {
            self.correct as f64 / self.probes as f64
        }
    }
}

/// Probe [`detect_base`] from the top of every tower of `decomp`.
pub fn base_detection_report(
    word: &Word,
    decomp: &TowerDecomposition,
    m: usize,
) -> BaseDetectionReport {
    let mut correct = 0usize;
    for tower in decomp.towers() {
        if detect_base(word, tower.top() - 1, m) == Some(tower.base) {
            correct += 1;
        }
    }
    BaseDetectionReport {
        probes: decomp.towers().len(),
        correct,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{RecodeBook, RecodeBooks, RecodingParams};
    use crate::models::{JointModel, MarkovModel};
    use crate::towers::{extract_columns, kakutani_decompose};
    use crate::word::Alphabet;

    const H_PRIME: f64 = 0.4689955935892812;
    const H_FULL: f64 = 0.6104361361311017;

    fn acceptance_joint() -> JointModel {
        let left = MarkovModel::symmetric_flip(0.1).unwrap();
        let right = MarkovModel::symmetric_flip(0.02).unwrap();
        JointModel::over_left_factor(&left, &right).unwrap()
    }

    fn sampled_books(
        joint: &JointModel,
        path_len: usize,
        min_height: usize,
        seed: u64,
    ) -> (TowerDecomposition, Word, Word, RecodeBooks) {
        let (path_p, path_q) = joint.sample_pair(path_len, seed);
        let pattern = Word::from_digits("01", Alphabet::new(2).unwrap())
            .unwrap();
        let decomp =
            kakutani_decompose(&path_p, &pattern, min_height).unwrap();
        let columns =
            extract_columns(&decomp, &path_p, Some(&path_q)).unwrap();
        let books =
            RecodeBooks::from_columns(0.15, 16, H_FULL, H_PRIME, &columns)
                .unwrap();
        (decomp, path_p, path_q, books)
    }

    #[test]
    fn digit_helpers_round_trip() {
        for value in [0usize, 1, 15, 16, 255, 256, 4095] {
            let d = digits(value, 3, 16).unwrap();
            assert_eq!(number(&d, 16).unwrap(), value);
        }
        assert!(digits(4096, 3, 16).is_err());
    }

    #[test]
    fn column_round_trip_restores_both_names() {
        let (decomp, path_p, path_q, books) =
            sampled_books(&acceptance_joint(), 4096, 28, 5);
        let columns =
            extract_columns(&decomp, &path_p, Some(&path_q)).unwrap();
        assert!(!columns.is_empty());
        for column in &columns {
            let book = books.get(column.height).unwrap();
            let u = &column.name_p;
            let v = column.name_q.as_ref().unwrap();
            let recoded = recode_column(book, u, v).unwrap();
            assert!(
                recoded.modified <= book.params().modified_bound(),
                "modified {} over bound {}",
                recoded.modified,
                book.params().modified_bound()
            );
            assert_eq!(
                recoded.layout.positions_covered(),
                column.height
            );
            let (back_u, back_v) = decode_column(book, &recoded.output).unwrap();
            assert_eq!(&back_u, u);
            assert_eq!(&back_v, v);
        }
    }

    #[test]
    fn recoded_column_agrees_with_factor_name_past_header() {
        let (decomp, path_p, path_q, books) =
            sampled_books(&acceptance_joint(), 4096, 28, 11);
        let columns =
            extract_columns(&decomp, &path_p, Some(&path_q)).unwrap();
        let column = &columns[0];
        let book = books.get(column.height).unwrap();
        let recoded = recode_column(
            book,
            &column.name_p,
            column.name_q.as_ref().unwrap(),
        )
        .unwrap();
        let params = book.params();
        for p in params.header_len()..column.height {
            if !params.is_marker(p) {
                assert_eq!(
                    recoded.output.symbols()[p],
                    column.name_p.symbols()[p],
                    "tail position {p} must copy u"
                );
            }
        }
        // Markers are in place.
        for p in 0..column.height {
            if params.is_marker(p) {
                assert_eq!(
                    recoded.output.symbols()[p],
                    params.marker_symbol(p)
                );
            }
        }
    }

    #[test]
    fn unknown_names_are_reported_against_the_book() {
        let (decomp, path_p, path_q, books) =
            sampled_books(&acceptance_joint(), 4096, 28, 7);
        let columns =
            extract_columns(&decomp, &path_p, Some(&path_q)).unwrap();
        let column = &columns[0];
        let book = books.get(column.height).unwrap();
        // A fresh constant name is (almost surely) not in the book.
        let stranger = Word::new(
            vec![1; column.height],
            Alphabet::new(2).unwrap(),
        )
        .unwrap();
        let err = recode_column(
            book,
            &stranger,
            column.name_q.as_ref().unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Codebook(_)), "{err}");
        // A q-name outside the list is also a codebook miss.
        let wrong_v = Word::new(
            vec![3; column.height],
            Alphabet::new(4).unwrap(),
        )
        .unwrap();
        let err =
            recode_column(book, &column.name_p, &wrong_v).unwrap_err();
        assert!(matches!(err, Error::Codebook(_)), "{err}");
    }

    #[test]
    fn tampering_is_detected() {
        let (decomp, path_p, path_q, books) =
            sampled_books(&acceptance_joint(), 4096, 28, 13);
        let columns =
            extract_columns(&decomp, &path_p, Some(&path_q)).unwrap();
        let column = &columns[0];
        let book = books.get(column.height).unwrap();
        let recoded = recode_column(
            book,
            &column.name_p,
            column.name_q.as_ref().unwrap(),
        )
        .unwrap();
        // Break a ones-marker.
        let mut broken = recoded.output.symbols().to_vec();
        broken[0] = 0;
        let w = Word::new(broken, recoded.output.alphabet()).unwrap();
        assert!(matches!(
            decode_column(book, &w).unwrap_err(),
            Error::Desync(_)
        ));
        // Point the rank digits past the codebook.
        let mut oversized = recoded.output.symbols().to_vec();
        for &p in &recoded.layout.rank_digits {
            oversized[p] = 15;
        }
        let w = Word::new(oversized, recoded.output.alphabet()).unwrap();
        assert!(matches!(
            decode_column(book, &w).unwrap_err(),
            Error::Corruption(_)
        ));
        // Wrong length.
        let short = recoded.output.slice(0..column.height - 1);
        assert!(matches!(
            decode_column(book, &short).unwrap_err(),
            Error::LengthMismatch { .. }
        ));
    }

    #[test]
    fn path_round_trip_restores_factor_path_and_pairs() {
        let joint = acceptance_joint();
        let (decomp, path_p, path_q, books) =
            sampled_books(&joint, 4096, 28, 17);
        let recoded =
            recode_path(&books, &decomp, &path_p, &path_q).unwrap();
        assert_eq!(recoded.word.len(), path_p.len());
        assert_eq!(
            recoded.tower_modified.len(),
            decomp.towers().len()
        );
        // Modified positions stay within the per-tower bounds.
        for (tower, &modified) in
            decomp.towers().iter().zip(&recoded.tower_modified)
        {
            let bound = books.get(tower.height).unwrap().params()
                .modified_bound();
            assert!(modified <= bound);
        }
        // Leftover positions are untouched.
        for range in decomp.leftover() {
            assert_eq!(
                &recoded.word.symbols()[range.clone()],
                &path_p.symbols()[range.clone()]
            );
        }
        let decoded = decode_path(&books, &decomp, &recoded.word).unwrap();
        assert_eq!(decoded.path_p, path_p);
        for (tower, u, v) in &decoded.towers {
            assert_eq!(u, &path_p.slice(tower.range()));
            assert_eq!(v, &path_q.slice(tower.range()));
        }
    }

    #[test]
    fn base_detection_finds_every_tower() {
        let joint = acceptance_joint();
        let (decomp, path_p, path_q, books) =
            sampled_books(&joint, 4096, 28, 23);
        let recoded =
            recode_path(&books, &decomp, &path_p, &path_q).unwrap();
        let m = books.get(decomp.towers()[0].height).unwrap().params()
            .marker_spacing();
        let report = base_detection_report(&recoded.word, &decomp, m);
        assert_eq!(report.probes, decomp.towers().len());
        assert_eq!(report.correct, report.probes, "accuracy {}", report.accuracy());
        assert_eq!(report.accuracy(), 1.0);
    }

    #[test]
    fn detect_base_hand_cases() {
        // 2m = 4 ones then a zero at position 4: base at 0.
        let w = Word::from_digits("111101101", Alphabet::new(2).unwrap())
            .unwrap();
        assert_eq!(detect_base(&w, 8, 2), Some(0));
        // A later ones-run not followed by a zero is not a base.
        let w = Word::from_digits("111101111", Alphabet::new(2).unwrap())
            .unwrap();
        assert_eq!(detect_base(&w, 8, 2), Some(0));
        // No run at all.
        let w = Word::from_digits("010101010", Alphabet::new(2).unwrap())
            .unwrap();
        assert_eq!(detect_base(&w, 8, 2), None);
    }

    #[test]
    fn relative_set_route_works_over_a_trivial_factor() {
        // Constant factor: the relative set at epsilon = 0.2 over a
        // flip-0.1 chain is the plain entropy-typical set; recoding it
        // over alphabet 256 is pure compression.
        let base = MarkovModel::symmetric_flip(0.1).unwrap();
        let joint = JointModel::new(
            base,
            vec![0, 0],
            Alphabet::new(1).unwrap(),
            vec![0, 1],
            Alphabet::new(2).unwrap(),
        )
        .unwrap();
        let set =
            crate::relative::relative_smb_set(&joint, 24, 0.2).unwrap();
        let book = RecodeBook::from_relative_set(&set, 256).unwrap();
        assert_eq!(book.prefixes().len(), 1);
        for (u, vs) in book.lists() {
            for v in vs {
                let recoded = recode_column(&book, u, v).unwrap();
                let (bu, bv) =
                    decode_column(&book, &recoded.output).unwrap();
                assert_eq!(&bu, u);
                assert_eq!(&bv, v);
            }
        }
    }

    #[test]
    fn infeasible_heights_surface_the_minimal_height() {
        let err = RecodingParams::new(0.15, 16, 12, H_FULL, H_PRIME)
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("27"), "message should name 27: {msg}");
    }
}
