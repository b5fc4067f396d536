//! Marker/index/prefix recoding of towered paths and its exact decoding.
//!
//! Above a factor path P, a richer path Q is rewritten tower by tower into
//! a k-letter alphabet: periodic marker positions carry a sync pattern and
//! a fixed-width header naming the tower's P-word rank, and the remaining
//! positions carry an enumerative code for Q's conditional name.  The
//! counting bounds of the relative level sets guarantee the header and
//! payload fit, every rewrite touches at most a budgeted fraction of
//! positions, and decoding recovers P and Q exactly.

use ergolab::{
    decode_path, extract_columns, kakutani_decompose,
    minimal_feasible_height, recode_path, JointModel, MarkovModel,
    RecodeBooks, Word,
};

fn main() {
    let left = MarkovModel::symmetric_flip(0.1).unwrap();
    let right = MarkovModel::symmetric_flip(0.02).unwrap();
    let joint = JointModel::over_left_factor(&left, &right).unwrap();

    // Finite-scale conditional entropies stand in for the rates.
    let scale = 12;
    let h_prime = joint.p_block_entropy(scale).unwrap()
        - joint.p_block_entropy(scale - 1).unwrap();
    let h = joint.pq_block_entropy(scale).unwrap()
        - joint.pq_block_entropy(scale - 1).unwrap();
    let epsilon = 0.15;
    let k = 16;
    let floor = minimal_feasible_height(epsilon, k, h, h_prime).unwrap();
    println!(
        "joint model {}, h = {h:.4}, h' = {h_prime:.4}",
        joint.describe()
    );
    println!(
        "recoding into k = {k} letters with epsilon = {epsilon}: minimal \
         feasible tower height {floor}\n"
    );

    let n = 1 << 12;
    let (path_p, path_q) = joint.sample_pair(n, 5);
    let pattern = Word::from_digits("01", path_p.alphabet()).unwrap();
    let decomp = kakutani_decompose(&path_p, &pattern, floor.max(28)).unwrap();
    let columns = extract_columns(&decomp, &path_p, Some(&path_q)).unwrap();
    println!(
        "path of length {n}: {} towers, {} columns, leftover fraction {:.4}",
        decomp.towers().len(),
        columns.len(),
        decomp.leftover_fraction()
    );

    let books =
        RecodeBooks::from_columns(epsilon, k, h, h_prime, &columns).unwrap();
    for height in books.heights().take(3) {
        let book = books.get(height).unwrap();
        let params = book.params();
        println!(
            "  book for height {height:>3}: marker spacing {}, header \
             {} symbols, index width {}, rank width {}, modified-count \
             bound {}",
            params.marker_spacing(),
            params.header_len(),
            book.index_width(),
            book.rank_width(),
            params.modified_bound(),
        );
    }
    if books.len() > 3 {
        println!("  ... and {} more height classes", books.len() - 3);
    }

    let recoded = recode_path(&books, &decomp, &path_p, &path_q).unwrap();
    let covered = n - decomp.leftover_len();
    let density = recoded.modified as f64 / covered as f64;
    let c = books
        .get(decomp.towers()[0].height)
        .unwrap()
        .params()
        .density_constant();
    let budget = epsilon.max(c) + epsilon + 2.0 / decomp.towers()[0].height as f64;
    println!(
        "\nrecoded: {} of {covered} covered positions changed \
         (density {density:.4}, budget {budget:.4})",
        recoded.modified
    );

    let decoded = decode_path(&books, &decomp, &recoded.word).unwrap();
    assert_eq!(decoded.path_p, path_p, "factor path recovered exactly");
    for (tower, _, v) in &decoded.towers {
        assert_eq!(
            *v,
            path_q.slice(tower.range()),
            "tower name recovered exactly"
        );
    }
    println!(
        "decoded: factor path and all {} tower names recovered exactly",
        decoded.towers.len()
    );
}
