//! Coded irrational rotations: exact block statistics and entropy
//! estimates collapsing to zero.
//!
//! A circle rotation by an irrational angle, coded through the two-interval
//! partition with breakpoint `1 - alpha`, emits paths of block complexity
//! `n + 1` — the slowest possible growth short of eventual periodicity —
//! so every entropy estimator must head to zero.  The angle is tracked in
//! fixed-point arithmetic with 2^-128 resolution, which keeps cylinder
//! measures exact at every block length used here.

use ergolab::frac::{
    GOLDEN_CONJUGATE_DECIMAL, PI_MINUS_3_DECIMAL, SQRT2_MINUS_1_DECIMAL,
};
use ergolab::{
    partition_entropy, Frac128, Model, RotationModel, SchemeDescriptor,
};

fn main() {
    let angles = [
        ("golden conjugate", GOLDEN_CONJUGATE_DECIMAL),
        ("sqrt(2) - 1", SQRT2_MINUS_1_DECIMAL),
        ("pi - 3", PI_MINUS_3_DECIMAL),
    ];

    for (name, decimal) in angles {
        let alpha = Frac128::parse_decimal(decimal).unwrap();
        let rotation = RotationModel::sturmian(alpha).unwrap();
        println!("rotation by {name}");

        // Exact combinatorics: block counts and exact block entropies.
        for n in [4usize, 8, 16] {
            let distribution = rotation.block_distribution_exact(n).unwrap();
            let weights: Vec<f64> =
                distribution.support().map(|(_, w)| w).collect();
            let h = partition_entropy(&weights).unwrap();
            println!(
                "  n = {n:>2}: {} positive blocks of {} possible, \
                 H_n / n = {:.4}",
                distribution.support_size(),
                (2usize).pow(n as u32),
                h / n as f64,
            );
        }

        // Estimates from a single long sample path.
        let model = Model::Rotation(rotation);
        let path = model.sample(1 << 18, 11);
        for (label, scheme) in [
            ("plugin", SchemeDescriptor::plugin()),
            ("lz78", SchemeDescriptor::Lz78),
            ("returntime", SchemeDescriptor::Returntime),
        ] {
            let estimate = scheme.evaluate(&path).unwrap();
            println!("  {label:<10} estimate at 2^18: {estimate:.4}");
        }
        println!();
    }

    println!(
        "block complexity n + 1 forces the exact rate to zero; the \
         estimators follow, each at its own speed (lz78 is the slow one \
         on these low-complexity paths)."
    );
}
