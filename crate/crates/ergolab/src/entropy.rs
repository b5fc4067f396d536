//! Exact block entropies and per-path Shannon-McMillan-Breiman sums.
//!
//! Block entropies are computed from exact block distributions, so they
//! serve as ground truth for the estimation schemes. SMB trajectories
//! evaluate `-log2 mu(x_1..x_n) / n` along a fixed sample path with
//! incremental cylinder tracking, giving the pathwise picture whose
//! almost-everywhere limit is the entropy rate.

use crate::dist::{BlockDistribution, KahanSum};
use crate::error::{Error, Result};
use crate::models::{IidModel, MarkovModel, Model, ProductModel};
use crate::word::{Symbol, Word};

/// Shannon entropy `-sum p log2 p` of a probability vector.
pub fn partition_entropy(probs: &[f64]) -> Result<f64> {
    let mut total = KahanSum::new();
    let mut h = KahanSum::new();
    for &p in probs {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::IncompatibleDistribution(format!(
                "entry {p} is not a probability"
            )));
        }
        total.add(p);
        if p > 0.0 {
            h.add(-p * p.log2());
        }
    }
    if (total.value() - 1.0).abs() > 1e-9 {
        return Err(Error::IncompatibleDistribution(format!(
            "entries sum to {}, expected 1 within 1e-9",
            total.value()
        )));
    }
    Ok(h.value())
}

/// Entropy of a block distribution.
pub fn distribution_entropy(d: &BlockDistribution) -> f64 {
    let mut h = KahanSum::new();
    for (_, p) in d.support() {
        if p > 0.0 {
            h.add(-p * p.log2());
        }
    }
    h.value()
}

/// Exact n-block entropy `H_n` by support enumeration.
pub fn block_entropy(model: &Model, n: usize) -> Result<f64> {
    Ok(distribution_entropy(&model.block_distribution_exact(n)?))
}

/// Exact entropies `H_1 .. H_n` with the two standard rate estimates.
#[derive(Clone, Debug)]
pub struct EntropyReport {
    /// `block_entropies[i]` is `H_{i+1}`.
    pub block_entropies: Vec<f64>,
    /// `H_n / n`: converges to the rate from above.
    pub rate_upper: Vec<f64>,
    /// `H_n - H_{n-1}` (with `H_0 = 0`): the conditional-entropy route,
    /// also converging to the rate and below `H_n / n` pointwise.
    pub rate_conditional: Vec<f64>,
}

pub fn entropy_report(model: &Model, n_max: usize) -> Result<EntropyReport> {
    if n_max == 0 {
        return Err(Error::InsufficientData(
            "entropy report needs n_max >= 1".into(),
        ));
    }
    let mut block_entropies = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        block_entropies.push(block_entropy(model, n)?);
    }
    let rate_upper = block_entropies
        .iter()
        .enumerate()
        .map(|(i, &h)| h / (i + 1) as f64)
        .collect();
    let rate_conditional = block_entropies
        .iter()
        .enumerate()
        .map(|(i, &h)| if i == 0 { h } else { h - block_entropies[i - 1] })
        .collect();
    Ok(EntropyReport {
        block_entropies,
        rate_upper,
        rate_conditional,
    })
}

/// The running SMB sums `-log2 mu(x_1..x_k) / k` for `k = 1..n`.
#[derive(Clone, Debug)]
pub struct SmbTrajectory {
    values: Vec<f64>,
}

impl SmbTrajectory {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("trajectories are nonempty")
    }
}

/// Evaluates the SMB trajectory of `path` under `model` incrementally.
///
/// Errors with [`Error::ImpossiblePath`] at the first position where the
/// prefix has measure zero.
pub fn smb_trajectory(model: &Model, path: &Word) -> Result<SmbTrajectory> {
    if path.is_empty() {
        return Err(Error::InsufficientData(
            "SMB trajectory needs a nonempty path".into(),
        ));
    }
    if path.alphabet().size() != model.alphabet().size() {
        return Err(Error::IncompatibleDistribution(format!(
            "path over alphabet {} against model over alphabet {}",
            path.alphabet().size(),
            model.alphabet().size()
        )));
    }
    let mut tracker = Tracker::new(model);
    let mut values = Vec::with_capacity(path.len());
    for (i, &sym) in path.symbols().iter().enumerate() {
        let log_mass = tracker.push(sym).ok_or(Error::ImpossiblePath(i))?;
        values.push(-log_mass / (i + 1) as f64);
    }
    Ok(SmbTrajectory { values })
}

/// Incremental `log2 mu(prefix)` tracker, recursive over products.
enum Tracker<'a> {
    Iid {
        model: &'a IidModel,
        log_mass: f64,
    },
    Markov {
        model: &'a MarkovModel,
        forward: Vec<f64>,
        scratch: Vec<f64>,
        log_mass: f64,
        started: bool,
    },
    Rotation(crate::models::rotation::CylinderTracker<'a>),
    Product {
        parts: Box<(Tracker<'a>, Tracker<'a>)>,
        model: &'a ProductModel,
    },
}

impl<'a> Tracker<'a> {
    fn new(model: &'a Model) -> Self {
        match model {
            Model::Iid(m) => Tracker::Iid {
                model: m,
                log_mass: 0.0,
            },
            Model::Markov(m) => Tracker::Markov {
                model: m,
                forward: vec![0.0; m.state_count()],
                scratch: vec![0.0; m.state_count()],
                log_mass: 0.0,
                started: false,
            },
            Model::Rotation(m) => Tracker::Rotation(m.cylinder_tracker()),
            Model::Product(m) => Tracker::Product {
                parts: Box::new((Tracker::new(m.left()), Tracker::new(m.right()))),
                model: m,
            },
        }
    }

    /// Extends the prefix by `sym`; returns `log2 mu(prefix)`, or `None`
    /// once the prefix has measure zero.
    fn push(&mut self, sym: Symbol) -> Option<f64> {
        match self {
            Tracker::Iid { model, log_mass } => {
                let w = model.weights()[sym as usize];
                if w <= 0.0 {
                    return None;
                }
                *log_mass += w.log2();
                Some(*log_mass)
            }
            Tracker::Markov {
                model,
                forward,
                scratch,
                log_mass,
                started,
            } => {
                if !*started {
                    for (s, f) in forward.iter_mut().enumerate() {
                        *f = if model.labeling()[s] == sym {
                            model.stationary()[s]
                        } else {
                            0.0
                        };
                    }
                    *started = true;
                } else {
                    for t in scratch.iter_mut() {
                        *t = 0.0;
                    }
                    for s in 0..forward.len() {
                        let f = forward[s];
                        if f == 0.0 {
                            continue;
                        }
                        for (t, &p) in model.transition()[s].iter().enumerate() {
                            if p > 0.0 && model.labeling()[t] == sym {
                                scratch[t] += f * p;
                            }
                        }
                    }
                    std::mem::swap(forward, scratch);
                }
                let mass: f64 = forward.iter().sum();
                if mass <= 0.0 {
                    return None;
                }
                // Rescale so the forward vector never underflows; the log
                // accumulates the factored-out mass.
                *log_mass += mass.log2();
                for f in forward.iter_mut() {
                    *f /= mass;
                }
                Some(*log_mass)
            }
            Tracker::Rotation(tracker) => {
                let raw = tracker.push(sym);
                if raw == 0 {
                    return None;
                }
                Some((raw as f64).log2() - 128.0)
            }
            Tracker::Product { parts, model } => {
                let rr = model.right().alphabet().size() as Symbol;
                let l = parts.0.push(sym / rr)?;
                let r = parts.1.push(sym % rr)?;
                Some(l + r)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac::{Frac128, GOLDEN_CONJUGATE_DECIMAL};
    use crate::models::RotationModel;
    use crate::word::Alphabet;

    fn flip(p: f64) -> Model {
        Model::Markov(MarkovModel::symmetric_flip(p).unwrap())
    }

    #[test]
    fn partition_entropy_hand_values() {
        assert_eq!(partition_entropy(&[1.0]).unwrap(), 0.0);
        assert!((partition_entropy(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert!(
            (partition_entropy(&[0.25; 4]).unwrap() - 2.0).abs() < 1e-15
        );
        // 0 log 0 = 0 by convention.
        assert!((partition_entropy(&[0.5, 0.5, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(partition_entropy(&[0.5, 0.4]).is_err());
    }

    #[test]
    fn block_entropy_increment_matches_closed_form() {
        // Two independent routes to the flip-0.1 rate: enumeration of the
        // exact 4- and 3-block distributions vs the closed form.
        let model = flip(0.1);
        let increment =
            block_entropy(&model, 4).unwrap() - block_entropy(&model, 3).unwrap();
        assert!((increment - 0.468995593).abs() < 1e-6);
        let Model::Markov(chain) = &model else { unreachable!() };
        let closed =
            chain.block_entropy_closed(4).unwrap() - chain.block_entropy_closed(3).unwrap();
        assert!((increment - closed).abs() < 1e-9);
    }

    #[test]
    fn entropy_report_rates_bracket_the_true_rate() {
        let model = flip(0.1);
        let report = entropy_report(&model, 8).unwrap();
        let rate = model.exact_entropy_rate().unwrap();
        for i in 1..8 {
            assert!(
                report.rate_upper[i] <= report.rate_upper[i - 1] + 1e-12,
                "H_n/n must be nonincreasing"
            );
            assert!(
                report.rate_conditional[i] <= report.rate_upper[i] + 1e-12,
                "conditional route lies below H_n/n"
            );
            assert!(report.rate_conditional[i] >= rate - 1e-12);
        }
        // The conditional route is exact from n = 2 for a Markov chain.
        assert!((report.rate_conditional[3] - rate).abs() < 1e-12);
    }

    #[test]
    fn sturmian_block_entropy_is_logarithmically_small() {
        let alpha = Frac128::parse_decimal(GOLDEN_CONJUGATE_DECIMAL).unwrap();
        let model = Model::Rotation(RotationModel::sturmian(alpha).unwrap());
        for n in [4usize, 8, 16] {
            let h = block_entropy(&model, n).unwrap();
            assert!(
                h <= ((n + 1) as f64).log2() + 1e-12,
                "H_{n} = {h} exceeds log2({})",
                n + 1
            );
        }
    }

    #[test]
    fn fair_coin_smb_is_identically_one() {
        let model = Model::Iid(IidModel::coin(0.5).unwrap());
        let path = model.sample(64, 3);
        let traj = smb_trajectory(&model, &path).unwrap();
        for &v in traj.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn smb_values_match_direct_cylinder_measures() {
        let alpha = Frac128::parse_decimal(GOLDEN_CONJUGATE_DECIMAL).unwrap();
        let rot = Model::Rotation(RotationModel::sturmian(alpha).unwrap());
        let models = [
            flip(0.1),
            rot.clone(),
            Model::Product(Box::new(
                ProductModel::new(flip(0.25), rot).unwrap(),
            )),
        ];
        for model in &models {
            let path = model.sample(12, 9);
            let traj = smb_trajectory(model, &path).unwrap();
            for k in 1..=path.len() {
                let prefix = path.slice(0..k);
                let mu = model.cylinder_measure(&prefix).unwrap();
                let expect = -mu.log2() / k as f64;
                assert!(
                    (traj.values()[k - 1] - expect).abs() < 1e-9,
                    "{} at k = {k}: {} vs {expect}",
                    model.describe(),
                    traj.values()[k - 1]
                );
            }
        }
    }

    #[test]
    fn flip_chain_smb_converges_to_the_rate() {
        let model = flip(0.1);
        let path = model.sample(10_000, 2024);
        let traj = smb_trajectory(&model, &path).unwrap();
        let rate = model.exact_entropy_rate().unwrap();
        assert!(
            (traj.final_value() - rate).abs() < 0.05,
            "final SMB value {} vs rate {rate}",
            traj.final_value()
        );
    }

    #[test]
    fn sturmian_smb_collapses_to_zero() {
        let alpha = Frac128::parse_decimal(GOLDEN_CONJUGATE_DECIMAL).unwrap();
        let model = Model::Rotation(RotationModel::sturmian(alpha).unwrap());
        let path = model.sample(4096, 5);
        let traj = smb_trajectory(&model, &path).unwrap();
        assert!(
            traj.final_value() < 0.02,
            "zero-entropy SMB value {}",
            traj.final_value()
        );
    }

    #[test]
    fn impossible_paths_report_their_position() {
        let alpha = Frac128::parse_decimal(GOLDEN_CONJUGATE_DECIMAL).unwrap();
        let model = Model::Rotation(RotationModel::sturmian(alpha).unwrap());
        // "00" has measure zero: [0, 1-alpha) + alpha lands in [alpha, 1),
        // which is coded 1 since alpha > 1 - alpha.
        let path = Word::from_digits("000", Alphabet::new(2).unwrap()).unwrap();
        match smb_trajectory(&model, &path) {
            Err(Error::ImpossiblePath(at)) => assert_eq!(at, 1),
            other => panic!("expected ImpossiblePath, got {other:?}"),
        }
    }
}
