//! Randomized invariants: metric axioms, the block-statistics stability
//! lemma, cylinder consistency across every model kind, and sampling
//! consistency against exact block distributions.

use ergolab::{
    empirical_block_distribution, l1_distance, rho_distance, Alphabet,
    Frac128, IidModel, MarkovModel, Model, ProductModel, RotationModel,
    Stream, WeightedLabeling, Word,
};
use proptest::prelude::*;

fn labeling(
    weights: &[f64],
    labels: &[u16],
    r: usize,
) -> WeightedLabeling {
    WeightedLabeling::new(
        weights.to_vec(),
        labels.to_vec(),
        Alphabet::new(r).unwrap(),
    )
    .unwrap()
}

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    // Kahan-exact renormalization so the constructor's 1e-9 gate passes.
    let drift: f64 = weights.iter().sum::<f64>() - 1.0;
    weights[0] -= drift;
    weights
}

proptest! {
    #[test]
    fn rho_satisfies_the_metric_axioms(
        raw in prop::collection::vec(0.05f64..1.0, 2..10),
        seed in 0u64..1_000,
    ) {
        let atoms = raw.len();
        let weights = normalized(raw);
        let r = 4usize;
        let mut stream = Stream::new(seed);
        let mut draw = || -> Vec<u16> {
            (0..atoms).map(|_| (stream.next_u64() % r as u64) as u16).collect()
        };
        let (a, b, c) = (draw(), draw(), draw());
        let p = labeling(&weights, &a, r);
        let q = labeling(&weights, &b, r);
        let s = labeling(&weights, &c, r);

        // Symmetry holds exactly: the same atom terms in the same order.
        prop_assert_eq!(
            rho_distance(&p, &q).unwrap(),
            rho_distance(&q, &p).unwrap()
        );
        // Triangle inequality within float slack.
        let pq = rho_distance(&p, &q).unwrap();
        let qs = rho_distance(&q, &s).unwrap();
        let ps = rho_distance(&p, &s).unwrap();
        prop_assert!(ps <= pq + qs + 1e-12);
        // Identity of indiscernibles: zero distance forces equal labels on
        // the strictly positive atoms (all atoms here), and conversely.
        prop_assert_eq!(rho_distance(&p, &p).unwrap(), 0.0);
        if pq == 0.0 {
            prop_assert_eq!(&a, &b);
        }
    }

    #[test]
    fn l1_shift_of_d_positions_is_bounded(
        n in 40usize..400,
        block in 2usize..6,
        flips in prop::collection::vec((0usize..10_000, 0u16..2), 0..12),
        seed in 0u64..1_000,
    ) {
        let model = Model::Iid(IidModel::coin(0.5).unwrap());
        let original = model.sample(n, seed);
        let mut symbols = original.symbols().to_vec();
        for (position, value) in flips {
            symbols[position % n] = value;
        }
        let altered = Word::new(symbols, original.alphabet()).unwrap();
        let d = original
            .symbols()
            .iter()
            .zip(altered.symbols())
            .filter(|(x, y)| x != y)
            .count();
        let p = empirical_block_distribution(&original, block).unwrap();
        let q = empirical_block_distribution(&altered, block).unwrap();
        let distance = l1_distance(&p, &q).unwrap();
        let bound = 2.0 * (block * d) as f64 / (n - block + 1) as f64;
        prop_assert!(
            distance <= bound + 1e-9,
            "l1 {} over the 2Nd/(n-N+1) bound {} (d = {})",
            distance, bound, d
        );
    }
}

fn model_zoo() -> Vec<(&'static str, Model)> {
    let golden =
        Frac128::parse_decimal(ergolab::frac::GOLDEN_CONJUGATE_DECIMAL)
            .unwrap();
    let markov = MarkovModel::symmetric_flip(0.1).unwrap();
    let rotation = RotationModel::sturmian(golden).unwrap();
    let lumped: ergolab::models::ModelFile = serde_json::from_str(
        r#"{
            "kind": "lumped-markov",
            "transition": [
                ["0.6", "0.2", "0.2"],
                ["0.3", "0.5", "0.2"],
                ["0.1", "0.3", "0.6"]
            ],
            "labeling": [0, 1, 1]
        }"#,
    )
    .unwrap();
    vec![
        ("iid", Model::Iid(IidModel::new(vec![0.3, 0.2, 0.5]).unwrap())),
        ("markov", Model::Markov(markov.clone())),
        ("lumped-markov", lumped.to_model().unwrap()),
        ("rotation", Model::Rotation(rotation.clone())),
        (
            "product",
            Model::Product(Box::new(
                ProductModel::new(
                    Model::Markov(markov),
                    Model::Rotation(rotation),
                )
                .unwrap(),
            )),
        ),
    ]
}

#[test]
fn cylinders_are_shift_consistent_for_every_model_kind() {
    for (name, model) in model_zoo() {
        let r = model.alphabet().size() as u64;
        let mut stream = Stream::new(31);
        for trial in 0..40 {
            let len = 1 + (stream.next_u64() % 12) as usize;
            let symbols: Vec<u16> =
                (0..len).map(|_| (stream.next_u64() % r) as u16).collect();
            let u = Word::new(symbols.clone(), model.alphabet()).unwrap();
            let mu = model.cylinder_measure(&u).unwrap();
            let mut append = 0.0;
            let mut prepend = 0.0;
            for a in 0..r as u16 {
                let mut right = symbols.clone();
                right.push(a);
                append += model
                    .cylinder_measure(
                        &Word::new(right, model.alphabet()).unwrap(),
                    )
                    .unwrap();
                let mut left = vec![a];
                left.extend_from_slice(&symbols);
                prepend += model
                    .cylinder_measure(
                        &Word::new(left, model.alphabet()).unwrap(),
                    )
                    .unwrap();
            }
            assert!(
                (append - mu).abs() <= 1e-9,
                "{name}: appended mass {append} != mu = {mu} (trial {trial})"
            );
            assert!(
                (prepend - mu).abs() <= 1e-9,
                "{name}: prepended mass {prepend} != mu = {mu} \
                 (trial {trial})"
            );
        }
    }
}

#[test]
fn sampling_matches_exact_block_distributions() {
    let n = 1_000_000;
    for (name, model) in model_zoo() {
        // Exact enumeration over the pair alphabet is capped; skip block
        // lengths whose space the model guards against.
        for block in [2usize, 5, 8] {
            let exact = match model.block_distribution_exact(block) {
                Ok(d) => d,
                Err(_) => continue,
            };
            let path = model.sample(n, 77);
            let empirical =
                empirical_block_distribution(&path, block).unwrap();
            let distance = l1_distance(&exact, &empirical).unwrap();
            let r = model.alphabet().size() as f64;
            let bound = 3.0 * (r.powi(block as i32) / n as f64).sqrt();
            assert!(
                distance <= bound,
                "{name}: empirical {block}-blocks at n = 10^6 drift \
                 {distance:.5}, bound {bound:.5}"
            );
        }
    }
}
