//! Return-word tower decompositions of sample paths.
//!
//! Marking every occurrence of a pattern in a sample path and cutting at
//! marks whose spacing reaches a floor `N` partitions the positions into
//! disjoint towers of height >= N plus a small leftover — a Kakutani
//! skyscraper over the return words of the pattern.  A Rohlin tower is the
//! constant-height variant: equal floors, leftover below an explicit
//! budget.  Columns then group towers that read the same word.

use std::collections::BTreeMap;

use ergolab::{
    extract_columns, kakutani_decompose, rohlin_tower, MarkovModel, Model,
    Word,
};

fn main() {
    let model = Model::Markov(MarkovModel::symmetric_flip(0.1).unwrap());
    let n = 1 << 14;
    let path = model.sample(n, 2);
    let pattern = Word::from_digits("01", path.alphabet()).unwrap();

    for min_height in [8usize, 32, 128] {
        let decomp = kakutani_decompose(&path, &pattern, min_height).unwrap();
        decomp.validate().unwrap();
        let heights: Vec<usize> =
            decomp.towers().iter().map(|t| t.height).collect();
        let shortest = *heights.iter().min().unwrap();
        let tallest = *heights.iter().max().unwrap();
        println!(
            "kakutani over pattern 01, floor {min_height:>3}: {:>4} towers, \
             heights {shortest}..{tallest}, leftover fraction {:.4}",
            decomp.towers().len(),
            decomp.leftover_fraction(),
        );
    }

    // Columns of the floor-32 decomposition: towers sharing a name.
    let decomp = kakutani_decompose(&path, &pattern, 32).unwrap();
    let columns = extract_columns(&decomp, &path, None).unwrap();
    let mut by_height: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for column in &columns {
        let slot = by_height.entry(column.height).or_insert((0, 0));
        slot.0 += 1;
        slot.1 += column.bases.len();
    }
    println!(
        "\nfloor-32 columns: {} distinct (height, name) classes over {} \
         towers",
        columns.len(),
        decomp.towers().len()
    );
    for (height, (classes, towers)) in by_height.iter().take(6) {
        println!(
            "  height {height:>3}: {classes:>3} distinct names across \
             {towers:>3} towers"
        );
    }
    if by_height.len() > 6 {
        println!("  ... and {} taller height classes", by_height.len() - 6);
    }

    // The Rohlin variant: constant height, leftover under epsilon.
    let height = 128;
    let epsilon = 0.05;
    let rohlin = rohlin_tower(n, height, epsilon).unwrap();
    rohlin.validate().unwrap();
    println!(
        "\nrohlin tower of constant height {height}: {} towers, leftover \
         fraction {:.4} (budget {epsilon})",
        rohlin.towers().len(),
        rohlin.leftover_fraction(),
    );
}
