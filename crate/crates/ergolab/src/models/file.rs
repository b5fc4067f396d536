//! JSON model files.
//!
//! Models are described by a tagged JSON object with `kind` one of `iid`,
//! `markov`, `lumped-markov`, `rotation`, or `product`. Probabilities are
//! decimal strings (parsed to the nearest float, so files are
//! platform-independent); rotation fractions are decimal strings with at
//! least 30 significant digits so the 2^-128 circle grid is meaningfully
//! resolved. `markov` requires an injective labeling; a lumping labeling
//! must be declared as `lumped-markov`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac::Frac128;
use crate::models::{
    IidModel, JointModel, MarkovModel, Model, ProductModel, RotationModel,
};
use crate::word::{Alphabet, Symbol};

/// Minimum number of significant digits for rotation angle strings.
pub const MIN_ANGLE_DIGITS: usize = 30;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelFile {
    Iid {
        weights: Vec<String>,
    },
    Markov {
        transition: Vec<Vec<String>>,
        labeling: Vec<Symbol>,
    },
    LumpedMarkov {
        transition: Vec<Vec<String>>,
        labeling: Vec<Symbol>,
        #[serde(skip_serializing_if = "Option::is_none")]
        alphabet: Option<usize>,
    },
    Rotation {
        alpha: String,
        breakpoints: Vec<String>,
        symbols: Vec<Symbol>,
    },
    Product {
        left: Box<ModelFile>,
        right: Box<ModelFile>,
    },
}

fn parse_probability(text: &str) -> Result<f64> {
    let p: f64 = text.trim().parse().map_err(|_| {
        Error::InvalidModel(format!("unparseable probability {text:?}"))
    })?;
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidModel(format!(
            "probability {text:?} is outside [0, 1]"
        )));
    }
    Ok(p)
}

fn significant_digits(text: &str) -> usize {
    text.chars()
        .filter(|c| c.is_ascii_digit())
        .skip_while(|&c| c == '0')
        .count()
}

fn parse_angle(text: &str) -> Result<Frac128> {
    if significant_digits(text) < MIN_ANGLE_DIGITS {
        return Err(Error::InvalidModel(format!(
            "rotation angle {text:?} has fewer than {MIN_ANGLE_DIGITS} \
             significant digits"
        )));
    }
    Frac128::parse_decimal(text)
}

impl ModelFile {
    pub fn to_model(&self) -> Result<Model> {
        match self {
            ModelFile::Iid { weights } => {
                let w = weights
                    .iter()
                    .map(|s| parse_probability(s))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Model::Iid(IidModel::new(w)?))
            }
            ModelFile::Markov {
                transition,
                labeling,
            } => {
                let chain = build_chain(transition, labeling, None)?;
                if !chain.is_injective_labeling() {
                    return Err(Error::InvalidModel(
                        "markov labeling is not injective; declare the model \
                         as lumped-markov"
                            .into(),
                    ));
                }
                Ok(Model::Markov(chain))
            }
            ModelFile::LumpedMarkov {
                transition,
                labeling,
                alphabet,
            } => {
                let chain = build_chain(transition, labeling, *alphabet)?;
                if chain.is_injective_labeling() {
                    return Err(Error::InvalidModel(
                        "lumped-markov labeling is injective; declare the \
                         model as markov"
                            .into(),
                    ));
                }
                Ok(Model::Markov(chain))
            }
            ModelFile::Rotation {
                alpha,
                breakpoints,
                symbols,
            } => {
                let alpha = parse_angle(alpha)?;
                let bps = breakpoints
                    .iter()
                    .map(|s| Frac128::parse_decimal(s))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Model::Rotation(RotationModel::new(
                    alpha,
                    bps,
                    symbols.clone(),
                )?))
            }
            ModelFile::Product { left, right } => {
                Ok(Model::Product(Box::new(ProductModel::new(
                    left.to_model()?,
                    right.to_model()?,
                )?)))
            }
        }
    }
}

fn build_chain(
    transition: &[Vec<String>],
    labeling: &[Symbol],
    alphabet: Option<usize>,
) -> Result<MarkovModel> {
    let rows = transition
        .iter()
        .map(|row| row.iter().map(|s| parse_probability(s)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let max_label = labeling.iter().copied().max().ok_or_else(|| {
        Error::InvalidModel("chain needs at least one state".into())
    })?;
    let r = alphabet.unwrap_or(max_label as usize + 1);
    MarkovModel::new(rows, labeling.to_vec(), Alphabet::new(r)?)
}

/// The file representation of an in-memory model.
pub fn model_to_file(model: &Model) -> ModelFile {
    match model {
        Model::Iid(m) => ModelFile::Iid {
            weights: m.weights().iter().map(|w| w.to_string()).collect(),
        },
        Model::Markov(m) => {
            let transition = m
                .transition()
                .iter()
                .map(|row| row.iter().map(|p| p.to_string()).collect())
                .collect();
            let labeling = m.labeling().to_vec();
            if m.is_injective_labeling() {
                ModelFile::Markov {
                    transition,
                    labeling,
                }
            } else {
                ModelFile::LumpedMarkov {
                    transition,
                    labeling,
                    alphabet: Some(m.alphabet().size()),
                }
            }
        }
        Model::Rotation(m) => ModelFile::Rotation {
            alpha: m.alpha().to_decimal_string(40),
            breakpoints: m
                .breakpoints()
                .iter()
                .map(|b| b.to_decimal_string(40))
                .collect(),
            symbols: m.interval_symbols().to_vec(),
        },
        Model::Product(m) => ModelFile::Product {
            left: Box::new(model_to_file(m.left())),
            right: Box::new(model_to_file(m.right())),
        },
    }
}

/// JSON description of a joint model: a base chain (given the identity
/// labeling) with two label maps on its states.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointFile {
    pub transition: Vec<Vec<String>>,
    pub labeling_p: Vec<Symbol>,
    pub alphabet_p: usize,
    pub labeling_q: Vec<Symbol>,
    pub alphabet_q: usize,
}

impl JointFile {
    pub fn to_joint(&self) -> Result<JointModel> {
        let states = self.transition.len() as Symbol;
        let base = build_chain(
            &self.transition,
            &(0..states).collect::<Vec<Symbol>>(),
            None,
        )?;
        JointModel::new(
            base,
            self.labeling_p.clone(),
            Alphabet::new(self.alphabet_p)?,
            self.labeling_q.clone(),
            Alphabet::new(self.alphabet_q)?,
        )
    }
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = read_input(path, "model")?;
    let file: ModelFile = serde_json::from_str(&text)?;
    file.to_model()
}

/// Read an input file, turning a missing path into a validation error.
pub(crate) fn read_input(path: &Path, what: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::InvalidConfig(format!(
                "{what} file {} does not exist",
                path.display()
            ))
        } else {
            Error::Io(e)
        }
    })
}

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    let file = model_to_file(model);
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac::GOLDEN_CONJUGATE_DECIMAL;
    use crate::word::Word;

    fn round_trip(json: &str) -> Model {
        let file: ModelFile = serde_json::from_str(json).unwrap();
        let model = file.to_model().unwrap();
        let again = model_to_file(&model).to_model().unwrap();
        // Spot-check equality through a cylinder measure.
        let w = model.sample(16, 1);
        assert_eq!(again.sample(16, 1), w);
        let mu = model.cylinder_measure(&w).unwrap();
        assert!((again.cylinder_measure(&w).unwrap() - mu).abs() < 1e-15);
        model
    }

    #[test]
    fn iid_and_markov_files_round_trip() {
        round_trip(r#"{"kind": "iid", "weights": ["0.5", "0.25", "0.25"]}"#);
        let m = round_trip(
            r#"{
                "kind": "markov",
                "transition": [["0.9", "0.1"], ["0.1", "0.9"]],
                "labeling": [0, 1]
            }"#,
        );
        let u = Word::from_digits("01", Alphabet::new(2).unwrap()).unwrap();
        assert!((m.cylinder_measure(&u).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn lumped_markov_round_trips_with_explicit_alphabet() {
        let m = round_trip(
            r#"{
                "kind": "lumped-markov",
                "transition": [
                    ["0.5", "0.5", "0"],
                    ["0", "0.5", "0.5"],
                    ["0.5", "0", "0.5"]
                ],
                "labeling": [0, 0, 1],
                "alphabet": 2
            }"#,
        );
        assert_eq!(m.alphabet().size(), 2);
    }

    #[test]
    fn kind_must_match_labeling_injectivity() {
        let lumped_as_markov = r#"{
            "kind": "markov",
            "transition": [["0.5", "0.5"], ["0.5", "0.5"]],
            "labeling": [0, 0]
        }"#;
        let file: ModelFile = serde_json::from_str(lumped_as_markov).unwrap();
        assert!(file.to_model().is_err());
        let injective_as_lumped = r#"{
            "kind": "lumped-markov",
            "transition": [["0.9", "0.1"], ["0.1", "0.9"]],
            "labeling": [0, 1]
        }"#;
        let file: ModelFile = serde_json::from_str(injective_as_lumped).unwrap();
        assert!(file.to_model().is_err());
    }

    #[test]
    fn rotation_files_round_trip_exactly() {
        let json = format!(
            r#"{{
                "kind": "rotation",
                "alpha": "{GOLDEN_CONJUGATE_DECIMAL}",
                "breakpoints": ["0", "0.5"],
                "symbols": [0, 1]
            }}"#
        );
        let file: ModelFile = serde_json::from_str(&json).unwrap();
        let model = file.to_model().unwrap();
        let again = model_to_file(&model).to_model().unwrap();
        let (Model::Rotation(a), Model::Rotation(b)) = (&model, &again) else {
            panic!("expected rotations");
        };
        assert_eq!(a.alpha(), b.alpha(), "angle survives the file format");
        assert_eq!(a.breakpoints(), b.breakpoints());
    }

    #[test]
    fn short_angles_are_rejected() {
        let json = r#"{
            "kind": "rotation",
            "alpha": "0.618034",
            "breakpoints": ["0", "0.5"],
            "symbols": [0, 1]
        }"#;
        let file: ModelFile = serde_json::from_str(json).unwrap();
        assert!(matches!(file.to_model(), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn product_files_nest() {
        let json = format!(
            r#"{{
                "kind": "product",
                "left": {{
                    "kind": "markov",
                    "transition": [["0.9", "0.1"], ["0.1", "0.9"]],
                    "labeling": [0, 1]
                }},
                "right": {{
                    "kind": "rotation",
                    "alpha": "{GOLDEN_CONJUGATE_DECIMAL}",
                    "breakpoints": ["0", "{}"],
                    "symbols": [0, 1]
                }}
            }}"#,
            Frac128::ZERO
                .sub(Frac128::parse_decimal(GOLDEN_CONJUGATE_DECIMAL).unwrap())
                .to_decimal_string(40)
        );
        let file: ModelFile = serde_json::from_str(&json).unwrap();
        let model = file.to_model().unwrap();
        assert_eq!(model.alphabet().size(), 4);
        assert!(
            (model.exact_entropy_rate().unwrap() - 0.468995593).abs() < 1e-9
        );
    }

    #[test]
    fn save_and_load_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = Model::Markov(MarkovModel::symmetric_flip(0.1).unwrap());
        save_model(&path, &model).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded.sample(32, 4), model.sample(32, 4));
    }

    #[test]
    fn joint_files_build_joint_models() {
        let json = r#"{
            "transition": [["0.9", "0.1"], ["0.1", "0.9"]],
            "labeling_p": [0, 0],
            "alphabet_p": 1,
            "labeling_q": [0, 1],
            "alphabet_q": 2
        }"#;
        let file: JointFile = serde_json::from_str(json).unwrap();
        let joint = file.to_joint().unwrap();
        assert_eq!(joint.alphabet_p().size(), 1);
        assert_eq!(joint.alphabet_q().size(), 2);
        let (p, q) = joint.sample_pair(64, 9);
        assert!(p.symbols().iter().all(|&s| s == 0));
        assert_eq!(q.len(), 64);
        let again: JointFile =
            serde_json::from_str(&serde_json::to_string(&file).unwrap())
                .unwrap();
        assert_eq!(again.labeling_q, file.labeling_q);
        let bad = r#"{
            "transition": [["1.0"]],
            "labeling_p": [0],
            "alphabet_p": 1,
            "labeling_q": [0],
            "alphabet_q": 1,
            "extra": true
        }"#;
        assert!(serde_json::from_str::<JointFile>(bad).is_err());
    }
}
