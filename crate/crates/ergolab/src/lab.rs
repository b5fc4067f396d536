//! Experiment harness: JSON-configured experiments producing rows and
//! verdicts.
//!
//! Every experiment emits flat [`Row`]s (one estimate each) plus named
//! [`Verdict`]s asserting the invariants the run was meant to probe.
//! Row output is deterministic in the configured seed, including byte
//! identity of the CSV rendering across reruns. The `ERGOLAB_THREADS`
//! environment variable caps the worker pool.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use crate::codebook::RecodeBooks;
use crate::dist::{empirical_block_distribution, l1_distance};
use crate::entropy::smb_trajectory;
use crate::error::{Error, Result};
use crate::models::{
    load_model, read_input, JointFile, JointModel, Model, ModelFile,
};
use crate::recode::{decode_path, recode_path};
use crate::relative::relative_smb_set;
use crate::rng::derive_seed;
use crate::schemes::{convergence_report, SchemeDescriptor};
use crate::towers::{extract_columns, kakutani_decompose, rohlin_tower};
use crate::transplant::{
    transplant_blocks, ColumnConditional, IdentityConditional,
    ProductPairConditional, TransplantParams,
};
use crate::word::Word;

/// Environment variable capping the rayon worker count.
pub const THREADS_ENV: &str = "ERGOLAB_THREADS";

/// Apply `ERGOLAB_THREADS` to the global worker pool. Returns the cap,
/// if one was set. Safe to call more than once (later calls keep the
/// first pool).
pub fn configure_threads() -> Result<Option<usize>> {
    let text = match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => return Ok(None),
        Err(e) => {
            return Err(Error::InvalidConfig(format!("{THREADS_ENV}: {e}")))
        }
        Ok(text) => text,
    };
    let threads: usize =
        text.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{THREADS_ENV} must be a positive integer, got {text:?}"
            ))
        })?;
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(Some(threads))
}

/// A model given inline or as a path to a model JSON file. Relative
/// paths in a loaded config are anchored at the config's directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Path(String),
    Inline(ModelFile),
}

impl ModelRef {
    pub fn to_model(&self) -> Result<Model> {
        match self {
            ModelRef::Path(p) => load_model(Path::new(p)),
            ModelRef::Inline(file) => file.to_model(),
        }
    }

    fn rebase(&mut self, dir: &Path) {
        if let ModelRef::Path(p) = self {
            if Path::new(p.as_str()).is_relative() {
                *p = dir.join(p.as_str()).to_string_lossy().into_owned();
            }
        }
    }
}

/// A joint model given inline or as a path to a joint JSON file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JointRef {
    Path(String),
    Inline(JointFile),
}

impl JointRef {
    pub fn to_joint(&self) -> Result<JointModel> {
        match self {
            JointRef::Path(p) => {
                let file: JointFile = serde_json::from_str(&read_input(
                    Path::new(p),
                    "joint model",
                )?)?;
                file.to_joint()
            }
            JointRef::Inline(file) => file.to_joint(),
        }
    }

    fn rebase(&mut self, dir: &Path) {
        if let JointRef::Path(p) = self {
            if Path::new(p.as_str()).is_relative() {
                *p = dir.join(p.as_str()).to_string_lossy().into_owned();
            }
        }
    }
}

/// One estimate from one trial.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub experiment: String,
    pub model: String,
    pub scheme: String,
    pub n: usize,
    pub trial: usize,
    pub estimate: f64,
    pub limit_estimate: f64,
    pub within_epsilon: bool,
    pub seed: u64,
}

/// A named invariant check with its outcome.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// The full outcome of one experiment: a config echo, data rows sorted
/// by a total key, errors from individual rows, and summary verdicts.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    pub elapsed_seconds: f64,
    pub rows: Vec<Row>,
    pub row_errors: Vec<String>,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentReport {
    /// True when every verdict passed.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// How a conditional law is described in a transplant config.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConditionalFile {
    /// Copy the factor path.
    Identity,
    /// Pair each symbol with an independent sample of `right`.
    ProductRight { right: ModelRef },
}

fn default_min_fraction() -> f64 {
    0.9
}

fn default_min_coverage() -> f64 {
    0.9
}

fn default_pattern() -> String {
    "01".into()
}

fn default_trials() -> usize {
    1
}

/// A JSON-configurable experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentConfig {
    /// Evaluate schemes along a length grid and check empirical
    /// convergence in probability (and agreement with the exact rate
    /// where one is computable).
    EntropyConvergence {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<String>,
        model: ModelRef,
        schemes: Vec<String>,
        lengths: Vec<usize>,
        trials: usize,
        epsilon: f64,
        seed: u64,
        #[serde(default = "default_min_fraction")]
        min_fraction: f64,
    },
    /// Evaluate one scheme on several models and check that the limits
    /// agree pairwise.
    Indistinguishability {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<String>,
        models: Vec<ModelRef>,
        scheme: String,
        lengths: Vec<usize>,
        trials: usize,
        epsilon: f64,
        seed: u64,
    },
    /// Check the normalized log-measure of sampled prefixes against the
    /// exact entropy rate.
    Smb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<String>,
        model: ModelRef,
        lengths: Vec<usize>,
        trials: usize,
        epsilon: f64,
        seed: u64,
        #[serde(default = "default_min_fraction")]
        min_fraction: f64,
    },
    /// Build relative typical sets over a joint model and track their
    /// coverage.
    RelativeSmb {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<String>,
        joint: JointRef,
        lengths: Vec<usize>,
        epsilon: f64,
        #[serde(default = "default_min_coverage")]
        min_coverage: f64,
    },
    /// Sample a joint path, recode its towers, decode them back, and
    /// check the identity plus the modification density.
    RecodeRoundtrip {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<String>,
        joint: JointRef,
        epsilon: f64,
        output_alphabet: usize,
        path_len: usize,
        min_height: usize,
        #[serde(default = "default_pattern")]
        pattern: String,
        #[serde(default = "default_trials")]
        trials: usize,
        seed: u64,
    },
    /// Transplant conditional draws onto a factor path and compare block
    /// statistics against the exact law.
    Transplant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<String>,
        y_model: ModelRef,
        x_model: ModelRef,
        conditional: ConditionalFile,
        path_len: usize,
        tower_height: usize,
        n_block: usize,
        delta: f64,
        beta: f64,
        #[serde(default = "default_trials")]
        trials: usize,
        seed: u64,
    },
}

impl ExperimentConfig {
    /// The `kind` tag, used as the default experiment label.
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::EntropyConvergence { .. } => {
                "entropy-convergence"
            }
            ExperimentConfig::Indistinguishability { .. } => {
                "indistinguishability"
            }
            ExperimentConfig::Smb { .. } => "smb",
            ExperimentConfig::RelativeSmb { .. } => "relative-smb",
            ExperimentConfig::RecodeRoundtrip { .. } => "recode-roundtrip",
            ExperimentConfig::Transplant { .. } => "transplant",
        }
    }

    /// The configured output directory, if any.
    pub fn out(&self) -> Option<&str> {
        let out = match self {
            ExperimentConfig::EntropyConvergence { out, .. } => out,
            ExperimentConfig::Indistinguishability { out, .. } => out,
            ExperimentConfig::Smb { out, .. } => out,
            ExperimentConfig::RelativeSmb { out, .. } => out,
            ExperimentConfig::RecodeRoundtrip { out, .. } => out,
            ExperimentConfig::Transplant { out, .. } => out,
        };
        out.as_deref()
    }

    pub fn label(&self) -> String {
        let explicit = match self {
            ExperimentConfig::EntropyConvergence { name, .. } => name,
            ExperimentConfig::Indistinguishability { name, .. } => name,
            ExperimentConfig::Smb { name, .. } => name,
            ExperimentConfig::RelativeSmb { name, .. } => name,
            ExperimentConfig::RecodeRoundtrip { name, .. } => name,
            ExperimentConfig::Transplant { name, .. } => name,
        };
        explicit.clone().unwrap_or_else(|| self.kind().into())
    }

    /// Anchor relative model paths at `dir`.
    pub fn rebase(&mut self, dir: &Path) {
        match self {
            ExperimentConfig::EntropyConvergence { model, .. } => {
                model.rebase(dir)
            }
            ExperimentConfig::Indistinguishability { models, .. } => {
                for model in models {
                    model.rebase(dir);
                }
            }
            ExperimentConfig::Smb { model, .. } => model.rebase(dir),
            ExperimentConfig::RelativeSmb { joint, .. } => joint.rebase(dir),
            ExperimentConfig::RecodeRoundtrip { joint, .. } => {
                joint.rebase(dir)
            }
            ExperimentConfig::Transplant {
                y_model,
                x_model,
                conditional,
                ..
            } => {
                y_model.rebase(dir);
                x_model.rebase(dir);
                if let ConditionalFile::ProductRight { right } = conditional {
                    right.rebase(dir);
                }
            }
        }
    }
}

/// Load an experiment config from a JSON file, anchoring relative model
/// paths at the config's directory.
pub fn load_experiment(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let mut config: ExperimentConfig =
        serde_json::from_str(&read_input(path, "experiment config")?)?;
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            config.rebase(dir);
        }
    }
    Ok(config)
}

struct Outcome {
    rows: Vec<Row>,
    row_errors: Vec<String>,
    verdicts: Vec<Verdict>,
}

/// Run an experiment to rows and verdicts. Deterministic given the
/// config, except for the reported wall-clock time.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let experiment = config.label();
    let mut outcome = dispatch(&experiment, config)?;
    outcome.rows.sort_by(|a, b| {
        (&a.experiment, &a.model, &a.scheme, a.n, a.trial, a.seed).cmp(&(
            &b.experiment,
            &b.model,
            &b.scheme,
            b.n,
            b.trial,
            b.seed,
        ))
    });
    Ok(ExperimentReport {
        experiment,
        config: Some(config.clone()),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        rows: outcome.rows,
        row_errors: outcome.row_errors,
        verdicts: outcome.verdicts,
    })
}

fn dispatch(experiment: &str, config: &ExperimentConfig) -> Result<Outcome> {
    match config {
        ExperimentConfig::EntropyConvergence {
            model,
            schemes,
            lengths,
            trials,
            epsilon,
            seed,
            min_fraction,
            ..
        } => run_entropy_convergence(
            experiment,
            model,
            schemes,
            lengths,
            *trials,
            *epsilon,
            *seed,
            *min_fraction,
        ),
        ExperimentConfig::Indistinguishability {
            models,
            scheme,
            lengths,
            trials,
            epsilon,
            seed,
            ..
        } => run_indistinguishability(
            experiment, models, scheme, lengths, *trials, *epsilon, *seed,
        ),
        ExperimentConfig::Smb {
            model,
            lengths,
            trials,
            epsilon,
            seed,
            min_fraction,
            ..
        } => run_smb(
            experiment,
            model,
            lengths,
            *trials,
            *epsilon,
            *seed,
            *min_fraction,
        ),
        ExperimentConfig::RelativeSmb {
            joint,
            lengths,
            epsilon,
            min_coverage,
            ..
        } => {
            run_relative_smb(experiment, joint, lengths, *epsilon, *min_coverage)
        }
        ExperimentConfig::RecodeRoundtrip {
            joint,
            epsilon,
            output_alphabet,
            path_len,
            min_height,
            pattern,
            trials,
            seed,
            ..
        } => run_recode_roundtrip(
            experiment,
            joint,
            *epsilon,
            *output_alphabet,
            *path_len,
            *min_height,
            pattern,
            *trials,
            *seed,
        ),
        ExperimentConfig::Transplant {
            y_model,
            x_model,
            conditional,
            path_len,
            tower_height,
            n_block,
            delta,
            beta,
            trials,
            seed,
            ..
        } => run_transplant(
            experiment,
            y_model,
            x_model,
            conditional,
            *path_len,
            *tower_height,
            *n_block,
            *delta,
            *beta,
            *trials,
            *seed,
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_entropy_convergence(
    experiment: &str,
    model_ref: &ModelRef,
    schemes: &[String],
    lengths: &[usize],
    trials: usize,
    epsilon: f64,
    seed: u64,
    min_fraction: f64,
) -> Result<Outcome> {
    if schemes.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one scheme is required".into(),
        ));
    }
    let model = model_ref.to_model()?;
    let label = model.describe();
    let exact = model.exact_entropy_rate();
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for (si, scheme_name) in schemes.iter().enumerate() {
        let scheme: SchemeDescriptor = scheme_name.parse()?;
        let master = derive_seed(seed, si as u64);
        let report =
            convergence_report(scheme, &model, lengths, trials, epsilon, master)?;
        for (trial, estimates) in report.estimates.iter().enumerate() {
            for (gi, &n) in lengths.iter().enumerate() {
                let estimate = estimates[gi];
                rows.push(Row {
                    experiment: experiment.into(),
                    model: label.clone(),
                    scheme: scheme.to_string(),
                    n,
                    trial,
                    estimate,
                    limit_estimate: report.limit_estimate,
                    within_epsilon: (estimate - report.limit_estimate).abs()
                        <= epsilon,
                    seed: derive_seed(master, trial as u64),
                });
            }
        }
        verdicts.push(Verdict {
            name: format!("{scheme}: converges in probability"),
            passed: report.in_probability_fraction >= min_fraction,
            detail: format!(
                "fraction {:.3} of {trials} trials within {epsilon} of \
                 the limit {:.6} (need {min_fraction})",
                report.in_probability_fraction, report.limit_estimate
            ),
        });
        if let Some(rate) = exact {
            if !matches!(scheme, SchemeDescriptor::Freq { .. }) {
                verdicts.push(Verdict {
                    name: format!("{scheme}: limit matches the exact rate"),
                    passed: (report.limit_estimate - rate).abs() <= epsilon,
                    detail: format!(
                        "limit {:.6} against rate {:.6} at epsilon {epsilon}",
                        report.limit_estimate, rate
                    ),
                });
            }
        }
    }
    Ok(Outcome {
        rows,
        row_errors: Vec::new(),
        verdicts,
    })
}

fn run_indistinguishability(
    experiment: &str,
    model_refs: &[ModelRef],
    scheme_name: &str,
    lengths: &[usize],
    trials: usize,
    epsilon: f64,
    seed: u64,
) -> Result<Outcome> {
    if model_refs.len() < 2 {
        return Err(Error::InvalidConfig(
            "indistinguishability needs at least two models".into(),
        ));
    }
    let scheme: SchemeDescriptor = scheme_name.parse()?;
    let mut rows = Vec::new();
    let mut limits = Vec::new();
    for (mi, model_ref) in model_refs.iter().enumerate() {
        let model = model_ref.to_model()?;
        let label = model.describe();
        let master = derive_seed(seed, mi as u64);
        let report =
            convergence_report(scheme, &model, lengths, trials, epsilon, master)?;
        for (trial, estimates) in report.estimates.iter().enumerate() {
            for (gi, &n) in lengths.iter().enumerate() {
                let estimate = estimates[gi];
                rows.push(Row {
                    experiment: experiment.into(),
                    model: label.clone(),
                    scheme: scheme.to_string(),
                    n,
                    trial,
                    estimate,
                    limit_estimate: report.limit_estimate,
                    within_epsilon: (estimate - report.limit_estimate).abs()
                        <= epsilon,
                    seed: derive_seed(master, trial as u64),
                });
            }
        }
        limits.push((label, report.limit_estimate));
    }
    let mut max_gap = 0.0f64;
    for i in 0..limits.len() {
        for j in i + 1..limits.len() {
            max_gap = max_gap.max((limits[i].1 - limits[j].1).abs());
        }
    }
    let detail = limits
        .iter()
        .map(|(label, limit)| format!("{label} -> {limit:.6}"))
        .collect::<Vec<_>>()
        .join("; ");
    let verdicts = vec![Verdict {
        name: format!("{scheme}: limits agree pairwise"),
        passed: max_gap <= epsilon,
        detail: format!("max gap {max_gap:.6} at epsilon {epsilon}; {detail}"),
    }];
    Ok(Outcome {
        rows,
        row_errors: Vec::new(),
        verdicts,
    })
}

fn run_smb(
    experiment: &str,
    model_ref: &ModelRef,
    lengths: &[usize],
    trials: usize,
    epsilon: f64,
    seed: u64,
    min_fraction: f64,
) -> Result<Outcome> {
    if lengths.is_empty() || lengths.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidConfig(
            "length grid must be nonempty and strictly increasing".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be positive".into()));
    }
    let model = model_ref.to_model()?;
    let label = model.describe();
    let rate = model.exact_entropy_rate().ok_or_else(|| {
        Error::InvalidConfig(
            "the model has no closed-form entropy rate to compare against"
                .into(),
        )
    })?;
    let n_max = *lengths.last().expect("nonempty grid");
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let path = model.sample(n_max, derive_seed(seed, trial as u64));
            let trajectory = smb_trajectory(&model, &path)?;
            Ok(lengths
                .iter()
                .map(|&n| trajectory.values()[n - 1])
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let mut rows = Vec::new();
    let mut final_hits = 0usize;
    for (trial, values) in per_trial.iter().enumerate() {
        for (gi, &n) in lengths.iter().enumerate() {
            rows.push(Row {
                experiment: experiment.into(),
                model: label.clone(),
                scheme: "smb".into(),
                n,
                trial,
                estimate: values[gi],
                limit_estimate: rate,
                within_epsilon: (values[gi] - rate).abs() <= epsilon,
                seed: derive_seed(seed, trial as u64),
            });
        }
        if (values[lengths.len() - 1] - rate).abs() <= epsilon {
            final_hits += 1;
        }
    }
    let fraction = final_hits as f64 / trials as f64;
    let verdicts = vec![Verdict {
        name: "normalized log-measure concentrates at the rate".into(),
        passed: fraction >= min_fraction,
        detail: format!(
            "{final_hits}/{trials} final values within {epsilon} of \
             {rate:.6} (need fraction {min_fraction})"
        ),
    }];
    Ok(Outcome {
        rows,
        row_errors: Vec::new(),
        verdicts,
    })
}

fn run_relative_smb(
    experiment: &str,
    joint_ref: &JointRef,
    lengths: &[usize],
    epsilon: f64,
    min_coverage: f64,
) -> Result<Outcome> {
    if lengths.is_empty() || lengths.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidConfig(
            "length grid must be nonempty and strictly increasing".into(),
        ));
    }
    let joint = joint_ref.to_joint()?;
    let label = joint.describe();
    let mut rows = Vec::new();
    let mut last = None;
    for &n in lengths {
        let set = relative_smb_set(&joint, n, epsilon)?;
        rows.push(Row {
            experiment: experiment.into(),
            model: label.clone(),
            scheme: "coverage".into(),
            n,
            trial: 0,
            estimate: set.coverage(),
            limit_estimate: min_coverage,
            within_epsilon: set.coverage() >= min_coverage,
            seed: 0,
        });
        last = Some(set);
    }
    let set = last.expect("nonempty grid");
    let verdicts = vec![
        Verdict {
            name: "counting bounds hold".into(),
            passed: true,
            detail: format!(
                "{} base words under 2^((s+eps)n) = {:.3}; list maximum {} \
                 under 2^((t-s+eps)n) = {:.3}",
                set.u_count(),
                set.u_bound(),
                set.max_v_count(),
                set.v_bound()
            ),
        },
        Verdict {
            name: "coverage reaches the threshold".into(),
            passed: set.coverage() >= min_coverage,
            detail: format!(
                "coverage {:.4} at n = {} (need {min_coverage})",
                set.coverage(),
                set.n()
            ),
        },
    ];
    Ok(Outcome {
        rows,
        row_errors: Vec::new(),
        verdicts,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_recode_roundtrip(
    experiment: &str,
    joint_ref: &JointRef,
    epsilon: f64,
    output_alphabet: usize,
    path_len: usize,
    min_height: usize,
    pattern: &str,
    trials: usize,
    seed: u64,
) -> Result<Outcome> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be positive".into()));
    }
    let joint = joint_ref.to_joint()?;
    let label = joint.describe();
    let pattern = Word::from_digits(pattern, joint.alphabet_p())?;
    // Finite-scale conditional entropies stand in for the rates; the
    // counting bounds are enforced against exactly these values.
    let scale = 12.min(path_len.max(2));
    let h_prime =
        joint.p_block_entropy(scale)? - joint.p_block_entropy(scale - 1)?;
    let h =
        joint.pq_block_entropy(scale)? - joint.pq_block_entropy(scale - 1)?;
    let mut rows: Vec<Row> = Vec::new();
    let mut row_errors = Vec::new();
    let mut first_error = None;
    let mut all_roundtrip = true;
    let mut all_density = true;
    for trial in 0..trials {
        let trial_seed = derive_seed(seed, trial as u64);
        let attempt = (|| -> Result<(Row, bool, bool)> {
            let (path_p, path_q) = joint.sample_pair(path_len, trial_seed);
            let decomp = kakutani_decompose(&path_p, &pattern, min_height)?;
            let columns = extract_columns(&decomp, &path_p, Some(&path_q))?;
            let books = RecodeBooks::from_columns(
                epsilon,
                output_alphabet,
                h,
                h_prime,
                &columns,
            )?;
            let recoded = recode_path(&books, &decomp, &path_p, &path_q)?;
            let decoded = decode_path(&books, &decomp, &recoded.word)?;
            let mut roundtrip = decoded.path_p == path_p;
            for (tower, _, v) in &decoded.towers {
                if *v != path_q.slice(tower.range()) {
                    roundtrip = false;
                }
            }
            let covered = path_len - decomp.leftover_len();
            let density = if covered == 0 {
                0.0
            } else {
                recoded.modified as f64 / covered as f64
            };
            let c = books
                .get(decomp.towers()[0].height)
                .expect("book for the first tower")
                .params()
                .density_constant();
            let limit = epsilon.max(c) + epsilon + 2.0 / min_height as f64;
            let within = roundtrip && density <= limit;
            Ok((
                Row {
                    experiment: experiment.into(),
                    model: label.clone(),
                    scheme: "recode".into(),
                    n: path_len,
                    trial,
                    estimate: density,
                    limit_estimate: limit,
                    within_epsilon: within,
                    seed: trial_seed,
                },
                roundtrip,
                density <= limit,
            ))
        })();
        match attempt {
            Ok((row, roundtrip, density_ok)) => {
                all_roundtrip &= roundtrip;
                all_density &= density_ok;
                rows.push(row);
            }
            Err(err) => {
                row_errors.push(format!("trial {trial}: {err}"));
                if first_error.is_none() {
                    first_error = Some(err);
                }
            }
        }
    }
    if rows.is_empty() {
        if let Some(err) = first_error {
            return Err(err);
        }
    }
    let limit = rows.last().map_or(f64::NAN, |r| r.limit_estimate);
    let verdicts = vec![
        Verdict {
            name: "decoding inverts recoding".into(),
            passed: all_roundtrip && row_errors.is_empty(),
            detail: format!(
                "{} of {trials} sampled paths round-tripped",
                rows.len()
            ),
        },
        Verdict {
            name: "modification density under the header bound".into(),
            passed: all_density && row_errors.is_empty(),
            detail: format!(
                "densities within max(eps, C) + eps + 2/L = {limit:.4}"
            ),
        },
    ];
    Ok(Outcome {
        rows,
        row_errors,
        verdicts,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_transplant(
    experiment: &str,
    y_ref: &ModelRef,
    x_ref: &ModelRef,
    conditional_file: &ConditionalFile,
    path_len: usize,
    tower_height: usize,
    n_block: usize,
    delta: f64,
    beta: f64,
    trials: usize,
    seed: u64,
) -> Result<Outcome> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be positive".into()));
    }
    let y_model = y_ref.to_model()?;
    let x_model = x_ref.to_model()?;
    let label = x_model.describe();
    let conditional: Box<dyn ColumnConditional> = match conditional_file {
        ConditionalFile::Identity => {
            Box::new(IdentityConditional::new(y_model.alphabet()))
        }
        ConditionalFile::ProductRight { right } => Box::new(
            ProductPairConditional::new(y_model.alphabet(), right.to_model()?)?,
        ),
    };
    if conditional.v_alphabet() != x_model.alphabet() {
        return Err(Error::InvalidConfig(format!(
            "conditional law produces alphabet {}, the comparison model \
             uses {}",
            conditional.v_alphabet().size(),
            x_model.alphabet().size()
        )));
    }
    let params = TransplantParams::new(n_block, delta, tower_height, beta)?;
    let exact = x_model.block_distribution_exact(n_block)?;
    let mut rows: Vec<Row> = Vec::new();
    let mut row_errors = Vec::new();
    let mut first_error = None;
    let mut all_within = true;
    for trial in 0..trials {
        let trial_seed = derive_seed(seed, trial as u64);
        let attempt = (|| -> Result<Row> {
            let path_y = y_model.sample(path_len, trial_seed);
            let decomp = rohlin_tower(path_len, tower_height, beta)?;
            let out = transplant_blocks(
                &params,
                &path_y,
                &decomp,
                conditional.as_ref(),
                derive_seed(trial_seed, 1),
            )?;
            let empirical = empirical_block_distribution(&out.word, n_block)?;
            let distance = l1_distance(&exact, &empirical)?;
            let windows = path_len - n_block + 1;
            let tolerance = params.l1_tolerance(windows);
            Ok(Row {
                experiment: experiment.into(),
                model: label.clone(),
                scheme: "transplant".into(),
                n: path_len,
                trial,
                estimate: distance,
                limit_estimate: tolerance,
                within_epsilon: distance <= tolerance,
                seed: trial_seed,
            })
        })();
        match attempt {
            Ok(row) => {
                all_within &= row.within_epsilon;
                rows.push(row);
            }
            Err(err) => {
                row_errors.push(format!("trial {trial}: {err}"));
                if first_error.is_none() {
                    first_error = Some(err);
                }
            }
        }
    }
    if rows.is_empty() {
        if let Some(err) = first_error {
            return Err(err);
        }
    }
    let verdicts = vec![Verdict {
        name: "transplanted block statistics match the exact law".into(),
        passed: all_within && row_errors.is_empty(),
        detail: format!("{trials} trials under delta + 3 sqrt(2^N / windows)"),
    }];
    Ok(Outcome {
        rows,
        row_errors,
        verdicts,
    })
}

/// Output renderings for reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Text,
}

impl OutputFormat {
    /// Conventional file extension for the format.
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Text => "txt",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "text" => Ok(OutputFormat::Text),
            _ => Err(Error::InvalidConfig(format!(
                "unknown output format {s:?} (expected csv, json or text)"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputFormat::Csv => write!(f, "csv"),
            OutputFormat::Json => write!(f, "json"),
            OutputFormat::Text => write!(f, "text"),
        }
    }
}

/// The fixed CSV column list.
pub const CSV_HEADER: &str = "experiment,model,scheme,n,trial,estimate,\
                              limit_estimate,within_epsilon,seed";

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

impl Row {
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            csv_field(&self.experiment),
            csv_field(&self.model),
            csv_field(&self.scheme),
            self.n,
            self.trial,
            self.estimate,
            self.limit_estimate,
            self.within_epsilon,
            self.seed
        )
    }
}

/// Render a report in the chosen format. CSV holds only the data rows
/// and is byte-identical across reruns of the same config; JSON mirrors
/// the report structure; text is a human-readable summary.
pub fn render_report(
    report: &ExperimentReport,
    format: OutputFormat,
) -> Result<String> {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for row in &report.rows {
                out.push_str(&row.to_csv());
                out.push('\n');
            }
            Ok(out)
        }
        OutputFormat::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        OutputFormat::Text => {
            let mut out = format!(
                "experiment: {} ({} rows, {:.2}s)\n",
                report.experiment,
                report.rows.len(),
                report.elapsed_seconds
            );
            for row in report.rows.iter().take(20) {
                out.push_str(&format!(
                    "  {} | {} | n={} trial={} estimate={:.6} \
                     limit={:.6} within={}\n",
                    row.model,
                    row.scheme,
                    row.n,
                    row.trial,
                    row.estimate,
                    row.limit_estimate,
                    row.within_epsilon
                ));
            }
            if report.rows.len() > 20 {
                out.push_str(&format!(
                    "  ... {} more rows\n",
                    report.rows.len() - 20
                ));
            }
            for error in &report.row_errors {
                out.push_str(&format!("[ERROR] {error}\n"));
            }
            for verdict in &report.verdicts {
                out.push_str(&format!(
                    "[{}] {}: {}\n",
                    if verdict.passed { "PASS" } else { "FAIL" },
                    verdict.name,
                    verdict.detail
                ));
            }
            out.push_str(&format!(
                "overall: {}\n",
                if report.passed() { "PASS" } else { "FAIL" }
            ));
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin_file() -> ModelRef {
        ModelRef::Inline(ModelFile::Iid {
            weights: vec!["0.5".into(), "0.5".into()],
        })
    }

    fn flip_file(p: f64) -> ModelRef {
        let stay = (1.0 - p).to_string();
        let flip = p.to_string();
        ModelRef::Inline(ModelFile::Markov {
            transition: vec![
                vec![stay.clone(), flip.clone()],
                vec![flip, stay],
            ],
            labeling: vec![0, 1],
        })
    }

    fn identity_joint_file() -> JointRef {
        JointRef::Inline(JointFile {
            transition: vec![
                vec!["0.9".into(), "0.1".into()],
                vec!["0.1".into(), "0.9".into()],
            ],
            labeling_p: vec![0, 1],
            alphabet_p: 2,
            labeling_q: vec![0, 1],
            alphabet_q: 2,
        })
    }

    fn product_joint_file() -> JointRef {
        // Product of flip-0.1 and flip-0.02, state (a, b) = 2a + b;
        // p reads the first coordinate, q reads the pair.
        let transition = (0..4usize)
            .map(|s| {
                let (a, b) = (s / 2, s % 2);
                (0..4usize)
                    .map(|sp| {
                        let (ap, bp) = (sp / 2, sp % 2);
                        let left = if a == ap { 0.9 } else { 0.1 };
                        let right = if b == bp { 0.98 } else { 0.02 };
                        (left * right).to_string()
                    })
                    .collect()
            })
            .collect();
        JointRef::Inline(JointFile {
            transition,
            labeling_p: vec![0, 0, 1, 1],
            alphabet_p: 2,
            labeling_q: vec![0, 1, 2, 3],
            alphabet_q: 4,
        })
    }

    #[test]
    fn configs_round_trip_through_json() {
        let configs = vec![
            ExperimentConfig::EntropyConvergence {
                name: None,
                out: None,
                model: coin_file(),
                schemes: vec!["plugin".into(), "lz78".into()],
                lengths: vec![256, 1024],
                trials: 10,
                epsilon: 0.1,
                seed: 1,
                min_fraction: 0.9,
            },
            ExperimentConfig::RelativeSmb {
                name: Some("rel".into()),
                out: None,
                joint: identity_joint_file(),
                lengths: vec![6, 8],
                epsilon: 0.3,
                min_coverage: 0.4,
            },
            ExperimentConfig::Transplant {
                name: None,
                out: Some("reports".into()),
                y_model: flip_file(0.1),
                x_model: coin_file(),
                conditional: ConditionalFile::Identity,
                path_len: 1 << 14,
                tower_height: 1024,
                n_block: 4,
                delta: 0.1,
                beta: 0.1,
                trials: 1,
                seed: 1,
            },
        ];
        for config in configs {
            let json = serde_json::to_string_pretty(&config).unwrap();
            let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
            assert_eq!(back.kind(), config.kind());
            assert_eq!(back.out(), config.out());
        }
        let bad = r#"{ "kind": "smb", "model": {"kind": "iid",
            "weights": ["1.0"]}, "lengths": [8], "trials": 1,
            "epsilon": 0.1, "seed": 0, "bogus": 3 }"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
    }

    #[test]
    fn configs_load_from_files_with_relative_model_paths() {
        let dir = tempfile::tempdir().unwrap();
        let model_path = dir.path().join("coin.json");
        std::fs::write(
            &model_path,
            r#"{ "kind": "iid", "weights": ["0.5", "0.5"] }"#,
        )
        .unwrap();
        let config_path = dir.path().join("exp.json");
        std::fs::write(
            &config_path,
            r#"{
                "kind": "entropy-convergence",
                "model": "coin.json",
                "schemes": ["plugin"],
                "lengths": [128, 256],
                "trials": 10,
                "epsilon": 0.2,
                "seed": 4
            }"#,
        )
        .unwrap();
        let config = load_experiment(&config_path).unwrap();
        match &config {
            ExperimentConfig::EntropyConvergence { model, .. } => {
                match model {
                    ModelRef::Path(p) => {
                        assert!(Path::new(p).is_absolute() || p.contains('/'))
                    }
                    ModelRef::Inline(_) => panic!("expected a path"),
                }
            }
            _ => panic!("wrong kind"),
        }
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.rows.len(), 20);
        assert!(report.config.is_some());
    }

    #[test]
    fn entropy_convergence_passes_on_the_coin() {
        let config = ExperimentConfig::EntropyConvergence {
            name: None,
            out: None,
            model: coin_file(),
            schemes: vec!["plugin".into(), "freq:1".into()],
            lengths: vec![256, 1024, 4096],
            trials: 10,
            epsilon: 0.1,
            seed: 7,
            min_fraction: 0.9,
        };
        let report = run_experiment(&config).unwrap();
        assert!(report.passed(), "{:#?}", report.verdicts);
        assert_eq!(report.rows.len(), 2 * 10 * 3);
        // freq gets no exact-rate verdict; plugin gets both.
        assert_eq!(report.verdicts.len(), 3);
        assert!(report.row_errors.is_empty());
        assert!(report.elapsed_seconds >= 0.0);
    }

    #[test]
    fn csv_output_is_byte_stable_and_escaped() {
        let config = ExperimentConfig::EntropyConvergence {
            name: None,
            out: None,
            model: flip_file(0.25),
            schemes: vec!["plugin".into()],
            lengths: vec![256, 512],
            trials: 10,
            epsilon: 0.2,
            seed: 3,
            min_fraction: 0.5,
        };
        let a =
            render_report(&run_experiment(&config).unwrap(), OutputFormat::Csv)
                .unwrap();
        let b =
            render_report(&run_experiment(&config).unwrap(), OutputFormat::Csv)
                .unwrap();
        assert_eq!(a, b, "identical bytes across reruns");
        let mut lines = a.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(a.lines().count(), 1 + 10 * 2);
        // The model label contains a comma, so the field is quoted.
        let row = a.lines().nth(1).unwrap();
        assert!(row.contains('"'), "{row}");
        assert_eq!(row.split(',').count() - 1, 9, "quoted comma adds one");
    }

    #[test]
    fn empty_reports_render_as_header_only_csv() {
        let report = ExperimentReport {
            experiment: "empty".into(),
            config: None,
            elapsed_seconds: 0.0,
            rows: Vec::new(),
            row_errors: Vec::new(),
            verdicts: Vec::new(),
        };
        let csv = render_report(&report, OutputFormat::Csv).unwrap();
        assert_eq!(csv, format!("{CSV_HEADER}\n"));
        assert!(report.passed(), "no verdicts means nothing failed");
    }

    #[test]
    fn csv_numeric_fields_round_trip_exactly() {
        let config = ExperimentConfig::Smb {
            name: None,
            out: None,
            model: coin_file(),
            lengths: vec![100, 1000],
            trials: 3,
            epsilon: 0.2,
            seed: 21,
            min_fraction: 0.5,
        };
        let report = run_experiment(&config).unwrap();
        let csv = render_report(&report, OutputFormat::Csv).unwrap();
        for (line, row) in csv.lines().skip(1).zip(&report.rows) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 9, "iid labels carry no comma");
            let estimate: f64 = fields[5].parse().unwrap();
            let limit: f64 = fields[6].parse().unwrap();
            assert_eq!(estimate.to_bits(), row.estimate.to_bits());
            assert_eq!(limit.to_bits(), row.limit_estimate.to_bits());
        }
    }

    #[test]
    fn indistinguishability_of_equal_entropy_models() {
        let config = ExperimentConfig::Indistinguishability {
            name: None,
            out: None,
            models: vec![coin_file(), flip_file(0.5)],
            scheme: "plugin".into(),
            lengths: vec![512, 2048],
            trials: 10,
            epsilon: 0.1,
            seed: 11,
        };
        let report = run_experiment(&config).unwrap();
        assert!(report.passed(), "{:#?}", report.verdicts);
        assert_eq!(report.rows.len(), 2 * 10 * 2);
    }

    #[test]
    fn smb_concentrates_for_the_flip_chain() {
        let config = ExperimentConfig::Smb {
            name: None,
            out: None,
            model: flip_file(0.1),
            lengths: vec![1024, 8192],
            trials: 10,
            epsilon: 0.1,
            seed: 5,
            min_fraction: 0.9,
        };
        let report = run_experiment(&config).unwrap();
        assert!(report.passed(), "{:#?}", report.verdicts);
        let rate = 0.4689955935892812;
        for row in &report.rows {
            assert!((row.limit_estimate - rate).abs() < 1e-12);
        }
    }

    #[test]
    fn relative_smb_coverage_grows() {
        let config = ExperimentConfig::RelativeSmb {
            name: None,
            out: None,
            joint: identity_joint_file(),
            lengths: vec![6, 12],
            epsilon: 0.3,
            min_coverage: 0.9,
        };
        let report = run_experiment(&config).unwrap();
        assert!(report.passed(), "{:#?}", report.verdicts);
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows[1].estimate > report.rows[0].estimate);
    }

    #[test]
    fn recode_roundtrip_experiment() {
        let config = ExperimentConfig::RecodeRoundtrip {
            name: None,
            out: None,
            joint: product_joint_file(),
            epsilon: 0.15,
            output_alphabet: 16,
            path_len: 4096,
            min_height: 28,
            pattern: "01".into(),
            trials: 2,
            seed: 9,
        };
        let report = run_experiment(&config).unwrap();
        assert!(report.passed(), "{:#?}", report.verdicts);
        assert_eq!(report.rows.len(), 2);
        assert!(report.row_errors.is_empty());
        for row in &report.rows {
            assert!(row.estimate <= row.limit_estimate);
        }
    }

    #[test]
    fn transplant_experiment_matches_block_statistics() {
        let config = ExperimentConfig::Transplant {
            name: None,
            out: None,
            y_model: flip_file(0.1),
            x_model: ModelRef::Inline(ModelFile::Product {
                left: Box::new(ModelFile::Markov {
                    transition: vec![
                        vec!["0.9".into(), "0.1".into()],
                        vec!["0.1".into(), "0.9".into()],
                    ],
                    labeling: vec![0, 1],
                }),
                right: Box::new(ModelFile::Iid {
                    weights: vec!["0.5".into(), "0.5".into()],
                }),
            }),
            conditional: ConditionalFile::ProductRight {
                right: coin_file(),
            },
            path_len: 1 << 15,
            tower_height: 1024,
            n_block: 4,
            delta: 0.1,
            beta: 0.1,
            trials: 1,
            seed: 13,
        };
        let report = run_experiment(&config).unwrap();
        assert!(report.passed(), "{:#?}", report.verdicts);
        assert!(report.rows[0].estimate < report.rows[0].limit_estimate);
    }

    #[test]
    fn text_and_json_renderings() {
        let config = ExperimentConfig::Smb {
            name: Some("demo".into()),
            out: None,
            model: coin_file(),
            lengths: vec![64, 256],
            trials: 3,
            epsilon: 0.2,
            seed: 1,
            min_fraction: 0.5,
        };
        let report = run_experiment(&config).unwrap();
        let text = render_report(&report, OutputFormat::Text).unwrap();
        assert!(text.starts_with("experiment: demo"));
        assert!(text.contains("overall: PASS"));
        let json = render_report(&report, OutputFormat::Json).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["experiment"], "demo");
        assert_eq!(value["rows"].as_array().unwrap().len(), 6);
        assert_eq!(value["config"]["kind"], "smb");
        assert!("yaml".parse::<OutputFormat>().is_err());
        assert_eq!(OutputFormat::Text.extension(), "txt");
    }
}
