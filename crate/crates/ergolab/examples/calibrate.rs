//! Dev-only calibration sweep used to freeze oracle constants; prints
//! measured scheme values at acceptance scales.  Deleted before shipping.

use std::time::Instant;

use ergolab::frac::{
    GOLDEN_CONJUGATE_DECIMAL, PI_MINUS_3_DECIMAL, SQRT2_MINUS_1_DECIMAL,
};
use ergolab::{
    convergence_report, smb_trajectory, Alphabet, Frac128, IidModel,
    MarkovModel, Model, PluginPolicy, RotationModel, SchemeDescriptor, Word,
};

fn timed(label: &str, f: impl FnOnce() -> f64) {
    let t = Instant::now();
    let v = f();
    println!("{label}: {v:.6}  [{:.2}s]", t.elapsed().as_secs_f64());
}

fn main() {
    let plugin = SchemeDescriptor::plugin();
    let fixed = SchemeDescriptor::Plugin {
        policy: PluginPolicy::FixedLog,
    };
    let lz78 = SchemeDescriptor::Lz78;
    let rt = SchemeDescriptor::Returntime;
    let freq0 = SchemeDescriptor::Freq { symbol: 0 };

    let angles = [
        ("golden ", GOLDEN_CONJUGATE_DECIMAL),
        ("sqrt2m1", SQRT2_MINUS_1_DECIMAL),
        ("pim3   ", PI_MINUS_3_DECIMAL),
    ];

    println!("== rotations (sturmian coding) ==");
    for (name, dec) in angles {
        let alpha = Frac128::parse_decimal(dec).unwrap();
        let m = Model::Rotation(RotationModel::sturmian(alpha).unwrap());
        let w13 = m.sample(1 << 13, 1);
        timed(&format!("{name} lz78   2^13"), || {
            lz78.evaluate(&w13).unwrap()
        });
        let w20 = m.sample(1 << 20, 1);
        timed(&format!("{name} plugin 2^20"), || {
            plugin.evaluate(&w20).unwrap()
        });
        timed(&format!("{name} return 2^20"), || rt.evaluate(&w20).unwrap());
        timed(&format!("{name} lz78   2^20"), || {
            lz78.evaluate(&w20).unwrap()
        });
        if name.starts_with("golden") {
            timed("golden  fixlog 2^20", || fixed.evaluate(&w20).unwrap());
            for seed in [2u64, 3] {
                let w = m.sample(1 << 20, seed);
                timed(&format!("golden  lz78   2^20 s{seed}"), || {
                    lz78.evaluate(&w).unwrap()
                });
            }
        }
        let t = Instant::now();
        let w26 = m.sample(1 << 26, 1);
        println!("{name} sample 2^26 took {:.2}s", t.elapsed().as_secs_f64());
        timed(&format!("{name} lz78   2^26"), || {
            lz78.evaluate(&w26).unwrap()
        });
    }

    println!("== breakpoint codings of the golden angle ==");
    let alpha = Frac128::parse_decimal(GOLDEN_CONJUGATE_DECIMAL).unwrap();
    let half = Frac128::parse_decimal("0.5").unwrap();
    let third = Frac128::parse_decimal(
        "0.333333333333333333333333333333333333333333333333",
    )
    .unwrap();
    for (name, cut) in [("half ", half), ("third", third)] {
        let m = Model::Rotation(
            RotationModel::binary_cut(alpha, cut).unwrap(),
        );
        let w = m.sample(1 << 20, 5);
        timed(&format!("{name} plugin 2^20"), || {
            plugin.evaluate(&w).unwrap()
        });
        timed(&format!("{name} return 2^20"), || rt.evaluate(&w).unwrap());
        timed(&format!("{name} lz78   2^20"), || lz78.evaluate(&w).unwrap());
        timed(&format!("{name} freq0  2^20"), || freq0.evaluate(&w).unwrap());
    }

    println!("== markov flip-0.1, criterion-1 dry run (30 trials, 2^20) ==");
    let flip = Model::Markov(MarkovModel::symmetric_flip(0.1).unwrap());
    let rate = flip.exact_entropy_rate().unwrap();
    println!("exact rate: {rate:.9}");
    for (label, scheme) in
        [("plugin", plugin), ("lz78  ", lz78), ("return", rt)]
    {
        let t = Instant::now();
        let report =
            convergence_report(scheme, &flip, &[1 << 20], 30, 0.05, 42)
                .unwrap();
        println!(
            "{label} median 2^20x30: {:.6} (|d|={:.4})  [{:.1}s]",
            report.limit_estimate,
            (report.limit_estimate - rate).abs(),
            t.elapsed().as_secs_f64()
        );
    }

    println!("== iid fair coin at 2^20 ==");
    let coin = Model::Iid(IidModel::coin(0.5).unwrap());
    let w = coin.sample(1 << 20, 9);
    timed("coin plugin 2^20", || plugin.evaluate(&w).unwrap());
    timed("coin fixlog 2^20", || fixed.evaluate(&w).unwrap());
    timed("coin lz78   2^20", || lz78.evaluate(&w).unwrap());
    timed("coin return 2^20", || rt.evaluate(&w).unwrap());

    println!("== deterministic words at 2^20 ==");
    let bits = Alphabet::new(2).unwrap();
    let n = 1usize << 20;
    let alternating =
        Word::new((0..n).map(|i| (i % 2) as u16).collect(), bits).unwrap();
    timed("alternating lz78", || lz78.evaluate(&alternating).unwrap());
    let zeros = Word::new(vec![0u16; n], bits).unwrap();
    timed("zeros returntime", || rt.evaluate(&zeros).unwrap());
    timed("zeros lz78      ", || lz78.evaluate(&zeros).unwrap());

    println!("== smb criterion-5 dry run (50 x 10^4 flip-0.1) ==");
    let t = Instant::now();
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let path = flip.sample(10_000, seed);
        let traj = smb_trajectory(&flip, &path).unwrap();
        let gap = (traj.final_value() - rate).abs();
        worst = worst.max(gap);
        if gap <= 0.05 {
            hits += 1;
        }
    }
    println!(
        "finals within 0.05: {hits}/50 (worst gap {worst:.4})  [{:.1}s]",
        t.elapsed().as_secs_f64()
    );
}
