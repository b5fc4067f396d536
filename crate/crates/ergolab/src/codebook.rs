//! Parameter arithmetic and shared codebooks for the marker recoding.
//!
//! A column of height `n` with factor name `u` (entropy near `h'`) and
//! full name `v` (entropy near `h`) is rewritten over an output alphabet
//! of size `k`. The rewritten word spends a header of length
//! `M = ceil(max(epsilon, C) * n)` on synchronisation markers, the index
//! of `v` in the shared conditional list `A(u)`, the rank of `u`'s
//! `M`-prefix in a shared prefix codebook, and the `u`-symbols displaced
//! by markers; past the header it copies `u` literally. The density
//! constant
//!
//! ```text
//! C = ((h - h' + eps) log_k 2 + 4 eps) / (1 - (h' + eps) log_k 2)
//! ```
//!
//! must fall below 1 for the header to vanish asymptotically; the
//! counting bounds `|codebook| <= 2^((h'+eps)M)` and
//! `|A(u)| <= 2^((h-h'+eps)n)` keep the stored indices inside the header
//! budget.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::relative::RelativeSmbSet;
use crate::towers::Column;
use crate::word::{Alphabet, Symbol, Word};

/// On-disk format version for serialized books.
pub const BOOK_FORMAT_VERSION: u32 = 1;

/// Search cap for [`minimal_feasible_height`].
const MAX_HEIGHT_SEARCH: usize = 1 << 22;

/// Derived geometry of a recoding at one column height.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RecodingParams {
    epsilon: f64,
    k: usize,
    n: usize,
    h: f64,
    h_prime: f64,
    m: usize,
    big_m: usize,
    c: f64,
}

/// Marker-free arithmetic shared by the constructor and the feasibility
/// search: marker spacing, header length, a-priori digit widths and the
/// exact header capacity.
struct Geometry {
    m: usize,
    big_m: usize,
    c: f64,
    index_width_bound: usize,
    rank_width_bound: usize,
    literal_count: usize,
    header_capacity: usize,
}

fn geometry(
    epsilon: f64,
    k: usize,
    n: usize,
    h: f64,
    h_prime: f64,
) -> Result<Geometry> {
    if k < 2 {
        return Err(Error::InvalidConfig(
            "recoding needs an output alphabet of size at least 2".into(),
        ));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig(
            "recoding epsilon must lie in (0, 1)".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidConfig(
            "column height must be positive".into(),
        ));
    }
    if !h.is_finite() || !h_prime.is_finite() || h_prime < 0.0 || h < h_prime
    {
        return Err(Error::InvalidConfig(
            "entropies must satisfy 0 <= h' <= h".into(),
        ));
    }
    let log2_k = (k as f64).log2();
    if h >= log2_k {
        return Err(Error::InvalidConfig(format!(
            "entropy {h} does not sit below log2 {k} = {log2_k}"
        )));
    }
    let log_k2 = 1.0 / log2_k;
    let denom = 1.0 - (h_prime + epsilon) * log_k2;
    if denom <= 0.0 {
        return Err(Error::EpsilonTooLarge(format!(
            "h' + epsilon = {} reaches log2 {k}",
            h_prime + epsilon
        )));
    }
    let c = ((h - h_prime + epsilon) * log_k2 + 4.0 * epsilon) / denom;
    if c >= 1.0 {
        return Err(Error::EpsilonTooLarge(format!(
            "density constant C = {c:.6} is not below 1; shrink epsilon \
             or enlarge the output alphabet"
        )));
    }
    let m = (1.0 / epsilon).ceil() as usize;
    let big_m = (epsilon.max(c) * n as f64).ceil() as usize;
    let index_width_bound =
        (((h - h_prime + epsilon) * n as f64 * log_k2).ceil() as usize).max(1);
    let rank_width_bound =
        (((h_prime + epsilon) * big_m as f64 * log_k2).ceil() as usize).max(1);
    let literal_count = (big_m..n).filter(|p| p % m == 0).count();
    let header_capacity = if big_m > 2 * m + 1 {
        (2 * m + 1..big_m).filter(|p| p % m != 0).count()
    } else {
        0
    };
    Ok(Geometry {
        m,
        big_m,
        c,
        index_width_bound,
        rank_width_bound,
        literal_count,
        header_capacity,
    })
}

impl Geometry {
    fn fits(&self) -> bool {
        self.big_m > 2 * self.m + 1
            && self.index_width_bound + self.rank_width_bound
                + self.literal_count
                <= self.header_capacity
    }
}

/// Smallest column height at which the header budget closes for these
/// parameters.
pub fn minimal_feasible_height(
    epsilon: f64,
    k: usize,
    h: f64,
    h_prime: f64,
) -> Result<usize> {
    geometry(epsilon, k, 1, h, h_prime)?;
    (1..=MAX_HEIGHT_SEARCH)
        .find(|&n| {
            geometry(epsilon, k, n, h, h_prime)
                .map(|g| g.fits())
                .unwrap_or(false)
        })
        .ok_or_else(|| {
            Error::InfeasibleTower(format!(
                "no feasible recoding height up to {MAX_HEIGHT_SEARCH}"
            ))
        })
}

impl RecodingParams {
    pub fn new(
        epsilon: f64,
        k: usize,
        n: usize,
        h: f64,
        h_prime: f64,
    ) -> Result<Self> {
        let geo = geometry(epsilon, k, n, h, h_prime)?;
        if !geo.fits() {
            let minimal = minimal_feasible_height(epsilon, k, h, h_prime)
                .map(|n| n.to_string())
                .unwrap_or_else(|_| "none".into());
            return Err(Error::BudgetExceeded(format!(
                "height {n} cannot host the header ({} + {} + {} digits \
                 into {} free positions below M = {}); smallest feasible \
                 height: {minimal}",
                geo.index_width_bound,
                geo.rank_width_bound,
                geo.literal_count,
                geo.header_capacity,
                geo.big_m,
            )));
        }
        Ok(RecodingParams {
            epsilon,
            k,
            n,
            h,
            h_prime,
            m: geo.m,
            big_m: geo.big_m,
            c: geo.c,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Output alphabet size.
    pub fn output_alphabet(&self) -> usize {
        self.k
    }

    /// Column height.
    pub fn height(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn h_prime(&self) -> f64 {
        self.h_prime
    }

    /// Marker spacing `ceil(1/epsilon)`.
    pub fn marker_spacing(&self) -> usize {
        self.m
    }

    /// Header length `ceil(max(epsilon, C) * n)`.
    pub fn header_len(&self) -> usize {
        self.big_m
    }

    /// The density constant `C`.
    pub fn density_constant(&self) -> f64 {
        self.c
    }

    /// True at marker positions (the initial ones-run and every later
    /// multiple of the spacing).
    pub fn is_marker(&self, p: usize) -> bool {
        p < 2 * self.m || p % self.m == 0
    }

    /// The symbol a marker position carries.
    pub fn marker_symbol(&self, p: usize) -> Symbol {
        if p < 2 * self.m {
            1
        } else {
            0
        }
    }

    /// Header positions free for digits, in increasing order.
    pub fn header_data_positions(&self) -> Vec<usize> {
        (2 * self.m + 1..self.big_m)
            .filter(|p| p % self.m != 0)
            .collect()
    }

    /// Marker positions past the header whose `u`-symbols get stashed.
    pub fn tail_marker_positions(&self) -> Vec<usize> {
        (self.big_m..self.n).filter(|p| p % self.m == 0).collect()
    }

    /// Tail positions that copy `u` literally.
    pub fn tail_data_positions(&self) -> Vec<usize> {
        (self.big_m..self.n).filter(|p| p % self.m != 0).collect()
    }

    /// A-priori cap on positions where a recoded column may disagree
    /// with its factor name: the header plus the tail markers.
    pub fn modified_bound(&self) -> usize {
        self.big_m + self.n.div_ceil(self.m)
    }
}

/// Who owns each position of a recoded column.
#[derive(Clone, Debug, Serialize)]
pub struct StageLayout {
    /// Stage 1: synchronisation markers.
    pub markers: Vec<usize>,
    /// Stage 2: base-k digits of the conditional index.
    pub index_digits: Vec<usize>,
    /// Stage 3: base-k digits of the prefix rank.
    pub rank_digits: Vec<usize>,
    /// Stage 3: stashed `u`-symbols from tail marker positions.
    pub literals: Vec<usize>,
    /// Unused header positions, written as zeros.
    pub padding: Vec<usize>,
    /// Tail positions copying `u` literally.
    pub copied: Vec<usize>,
}

impl StageLayout {
    /// Total positions assigned (must equal the column height).
    pub fn positions_covered(&self) -> usize {
        self.markers.len()
            + self.index_digits.len()
            + self.rank_digits.len()
            + self.literals.len()
            + self.padding.len()
            + self.copied.len()
    }
}

/// Smallest width `w >= 1` with `k^w >= max(2, count)`.
fn width_for(k: usize, count: usize) -> usize {
    let need = count.max(2) as u128;
    let mut width = 1usize;
    let mut capacity = k as u128;
    while capacity < need {
        capacity = capacity.saturating_mul(k as u128);
        width += 1;
    }
    width
}

/// Shared tables for one column height: the prefix codebook and the
/// conditional lists, with book-global digit widths so every column
/// decodes against the same layout.
#[derive(Clone, Debug)]
pub struct RecodeBook {
    params: RecodingParams,
    alphabet_p: Alphabet,
    alphabet_q: Alphabet,
    /// Sorted distinct `M`-prefixes of the factor names.
    prefixes: Vec<Word>,
    /// Factor name -> sorted distinct full names above it.
    lists: BTreeMap<Word, Vec<Word>>,
    index_width: usize,
    rank_width: usize,
}

impl RecodeBook {
    /// Build a book from observed `(u, v)` column name pairs. Duplicates
    /// collapse; the counting bounds are enforced, nothing else is
    /// assumed about the pairs.
    pub fn from_pairs(
        params: RecodingParams,
        pairs: impl IntoIterator<Item = (Word, Word)>,
    ) -> Result<Self> {
        let n = params.height();
        let mut sets: BTreeMap<Word, BTreeSet<Word>> = BTreeMap::new();
        let mut alphabets: Option<(Alphabet, Alphabet)> = None;
        for (u, v) in pairs {
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
            match alphabets {
                None => alphabets = Some((u.alphabet(), v.alphabet())),
                Some((ap, aq)) => {
                    if u.alphabet() != ap || v.alphabet() != aq {
                        return Err(Error::InvalidConfig(
                            "column pairs mix alphabets".into(),
                        ));
                    }
                }
            }
            sets.entry(u).or_default().insert(v);
        }
        let Some((alphabet_p, alphabet_q)) = alphabets else {
            return Err(Error::InsufficientData(
                "a recode book needs at least one column pair".into(),
            ));
        };
        if alphabet_p.size() > params.output_alphabet() {
            return Err(Error::InvalidConfig(format!(
                "factor alphabet of size {} does not embed into the \
                 output alphabet of size {}",
                alphabet_p.size(),
                params.output_alphabet()
            )));
        }
        let prefixes: Vec<Word> = sets
            .keys()
            .map(|u| u.slice(0..params.header_len()))
            .collect::<BTreeSet<Word>>()
            .into_iter()
            .collect();
        let prefix_bound = ((params.h_prime() + params.epsilon())
            * params.header_len() as f64)
            .exp2();
        if prefixes.len() as f64 > prefix_bound * (1.0 + 1e-9) {
            return Err(Error::CapacityExceeded(format!(
                "{} prefixes exceed the codebook bound 2^((h'+eps)M) = \
                 {prefix_bound:.3}",
                prefixes.len()
            )));
        }
        let list_bound =
            ((params.h() - params.h_prime() + params.epsilon()) * n as f64)
                .exp2();
        let max_list = sets.values().map(BTreeSet::len).max().unwrap_or(0);
        if max_list as f64 > list_bound * (1.0 + 1e-9) {
            return Err(Error::CapacityExceeded(format!(
                "a conditional list of {max_list} names exceeds the bound \
                 2^((h-h'+eps)n) = {list_bound:.3}"
            )));
        }
        let lists: BTreeMap<Word, Vec<Word>> = sets
            .into_iter()
            .map(|(u, vs)| (u, vs.into_iter().collect()))
            .collect();
        let index_width = width_for(params.output_alphabet(), max_list);
        let rank_width =
            width_for(params.output_alphabet(), prefixes.len());
        let geo = geometry(
            params.epsilon(),
            params.output_alphabet(),
            n,
            params.h(),
            params.h_prime(),
        )?;
        if index_width + rank_width + geo.literal_count > geo.header_capacity
        {
            return Err(Error::InternalConsistency(format!(
                "actual widths {index_width}+{rank_width}+{} broke the \
                 header capacity {} certified at construction",
                geo.literal_count, geo.header_capacity
            )));
        }
        Ok(RecodeBook {
            params,
            alphabet_p,
            alphabet_q,
            prefixes,
            lists,
            index_width,
            rank_width,
        })
    }

    /// Build a book from the name pairs of extracted tower columns (all
    /// of height `params.height()`, all carrying q-names).
    pub fn from_columns<'a>(
        params: RecodingParams,
        columns: impl IntoIterator<Item = &'a Column>,
    ) -> Result<Self> {
        let pairs = columns
            .into_iter()
            .map(|col| {
                let v = col.name_q.clone().ok_or_else(|| {
                    Error::InvalidConfig(
                        "recode books need columns with q-names".into(),
                    )
                })?;
                Ok((col.name_p.clone(), v))
            })
            .collect::<Result<Vec<_>>>()?;
        RecodeBook::from_pairs(params, pairs)
    }

    /// Build a book straight from a relative typical set, taking the
    /// finite-scale conditional entropies `s, t` for `h', h`.
    pub fn from_relative_set(set: &RelativeSmbSet, k: usize) -> Result<Self> {
        let params = RecodingParams::new(
            set.epsilon(),
            k,
            set.n(),
            set.t(),
            set.s(),
        )?;
        let pairs = set.lists().iter().flat_map(|(u, vs)| {
            vs.iter().map(move |v| (u.clone(), v.clone()))
        });
        RecodeBook::from_pairs(params, pairs)
    }

    pub fn params(&self) -> &RecodingParams {
        &self.params
    }

    pub fn alphabet_p(&self) -> Alphabet {
        self.alphabet_p
    }

    pub fn alphabet_q(&self) -> Alphabet {
        self.alphabet_q
    }

    /// Book-global digit width of the conditional index.
    pub fn index_width(&self) -> usize {
        self.index_width
    }

    /// Book-global digit width of the prefix rank.
    pub fn rank_width(&self) -> usize {
        self.rank_width
    }

    pub fn prefixes(&self) -> &[Word] {
        &self.prefixes
    }

    pub fn lists(&self) -> &BTreeMap<Word, Vec<Word>> {
        &self.lists
    }

    /// Number of distinct `(u, v)` pairs the book can express.
    pub fn pair_count(&self) -> usize {
        self.lists.values().map(Vec::len).sum()
    }

    pub fn prefix_rank(&self, prefix: &Word) -> Option<usize> {
        self.prefixes.binary_search(prefix).ok()
    }

    /// Position assignment of a recoded column under this book.
    pub fn layout(&self) -> StageLayout {
        let params = &self.params;
        let n = params.height();
        let markers: Vec<usize> =
            (0..n).filter(|&p| params.is_marker(p)).collect();
        let header = params.header_data_positions();
        let literal_count = params.tail_marker_positions().len();
        let index_digits = header[..self.index_width].to_vec();
        let rank_digits =
            header[self.index_width..self.index_width + self.rank_width]
                .to_vec();
        let lit_start = self.index_width + self.rank_width;
        let literals = header[lit_start..lit_start + literal_count].to_vec();
        let padding = header[lit_start + literal_count..].to_vec();
        let copied = params.tail_data_positions();
        StageLayout {
            markers,
            index_digits,
            rank_digits,
            literals,
            padding,
            copied,
        }
    }

    fn to_record(&self) -> BookRecord {
        BookRecord {
            height: self.params.height(),
            epsilon: self.params.epsilon(),
            output_alphabet: self.params.output_alphabet(),
            h: self.params.h(),
            h_prime: self.params.h_prime(),
            alphabet_p: self.alphabet_p.size(),
            alphabet_q: self.alphabet_q.size(),
            lists: self
                .lists
                .iter()
                .map(|(u, vs)| ListRecord {
                    u: u.symbols().to_vec(),
                    vs: vs.iter().map(|v| v.symbols().to_vec()).collect(),
                })
                .collect(),
        }
    }

    fn from_record(record: &BookRecord) -> Result<Self> {
        let params = RecodingParams::new(
            record.epsilon,
            record.output_alphabet,
            record.height,
            record.h,
            record.h_prime,
        )?;
        let ap = Alphabet::new(record.alphabet_p)?;
        let aq = Alphabet::new(record.alphabet_q)?;
        let mut pairs = Vec::new();
        for entry in &record.lists {
            let u = Word::new(entry.u.clone(), ap)?;
            for v in &entry.vs {
                pairs.push((u.clone(), Word::new(v.clone(), aq)?));
            }
        }
        RecodeBook::from_pairs(params, pairs)
    }
}

#[derive(Serialize, Deserialize)]
struct ListRecord {
    u: Vec<Symbol>,
    vs: Vec<Vec<Symbol>>,
}

#[derive(Serialize, Deserialize)]
struct BookRecord {
    height: usize,
    epsilon: f64,
    output_alphabet: usize,
    h: f64,
    h_prime: f64,
    alphabet_p: usize,
    alphabet_q: usize,
    lists: Vec<ListRecord>,
}

#[derive(Serialize, Deserialize)]
struct BooksFile {
    version: u32,
    books: Vec<BookRecord>,
}

/// One book per occurring column height, sharing all scalar parameters.
#[derive(Clone, Debug)]
pub struct RecodeBooks {
    books: BTreeMap<usize, RecodeBook>,
}

impl RecodeBooks {
    pub fn new(books: Vec<RecodeBook>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut shared: Option<(f64, usize, Alphabet, Alphabet)> = None;
        for book in books {
            let key = (
                book.params.epsilon(),
                book.params.output_alphabet(),
                book.alphabet_p,
                book.alphabet_q,
            );
            match shared {
                None => shared = Some(key),
                Some(existing) => {
                    if existing != key {
                        return Err(Error::InvalidConfig(
                            "books in one collection must share epsilon \
                             and alphabets"
                                .into(),
                        ));
                    }
                }
            }
            if map.insert(book.params.height(), book).is_some() {
                return Err(Error::InvalidConfig(
                    "two books for the same height".into(),
                ));
            }
        }
        if map.is_empty() {
            return Err(Error::InsufficientData(
                "a book collection needs at least one book".into(),
            ));
        }
        Ok(RecodeBooks { books: map })
    }

    /// Build one book per height from extracted columns.
    pub fn from_columns(
        epsilon: f64,
        k: usize,
        h: f64,
        h_prime: f64,
        columns: &[Column],
    ) -> Result<Self> {
        let mut by_height: BTreeMap<usize, Vec<&Column>> = BTreeMap::new();
        for col in columns {
            by_height.entry(col.height).or_default().push(col);
        }
        let books = by_height
            .into_iter()
            .map(|(height, cols)| {
                let params =
                    RecodingParams::new(epsilon, k, height, h, h_prime)?;
                RecodeBook::from_columns(params, cols)
            })
            .collect::<Result<Vec<_>>>()?;
        RecodeBooks::new(books)
    }

    pub fn get(&self, height: usize) -> Option<&RecodeBook> {
        self.books.get(&height)
    }

    pub fn heights(&self) -> impl Iterator<Item = usize> + '_ {
        self.books.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.books.len()
    }

    pub fn is_empty(&self) -> bool {
        self.books.is_empty()
    }

    /// Output alphabet size shared by every book.
    pub fn output_alphabet(&self) -> usize {
        self.books
            .values()
            .next()
            .expect("collections are nonempty")
            .params
            .output_alphabet()
    }

    /// Factor alphabet shared by every book.
    pub fn alphabet_p(&self) -> Alphabet {
        self.books
            .values()
            .next()
            .expect("collections are nonempty")
            .alphabet_p
    }

    pub fn to_json(&self) -> Result<String> {
        let file = BooksFile {
            version: BOOK_FORMAT_VERSION,
            books: self.books.values().map(RecodeBook::to_record).collect(),
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: BooksFile = serde_json::from_str(text)?;
        if file.version != BOOK_FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported book format version {} (expected {})",
                file.version, BOOK_FORMAT_VERSION
            )));
        }
        let books = file
            .books
            .iter()
            .map(RecodeBook::from_record)
            .collect::<Result<Vec<_>>>()?;
        RecodeBooks::new(books)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        RecodeBooks::from_json(&std::fs::read_to_string(path)?)
    }
}
