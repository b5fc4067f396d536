//! A laboratory for finitary observation of stationary ergodic processes.
//!
//! The crate answers experimental questions of the form: which asymptotic
//! invariants of a stationary process can be read off from longer and
//! longer finite samples by a fixed estimator, and which constructions
//! (towers, recodings, transplants) realize the limits of that
//! observability? Models expose exact cylinder measures so estimators can
//! be judged against ground truth rather than against other estimators.
//!
//! Start from the runnable examples, one per capability:
//!
//! - `entropy_convergence` — scheme estimates against exact entropy rates
//!   on growing samples.
//! - `zero_entropy_rotations` — coded irrational rotations, exact block
//!   statistics, and entropy estimates collapsing to zero.
//! - `two_codings_one_rotation` — distinct codings of one rotation that
//!   finitary observation cannot tell apart.
//! - `smb_trajectory` — per-path convergence of `-log mu(x_1..x_n)/n`.
//! - `relative_smb` — conditional-measure level sets and their counting
//!   bounds.
//! - `kakutani_towers` — return-word tower decompositions of sample paths.
//! - `recode_roundtrip` — the marker/index/prefix recoding of towered
//!   paths and its exact decoding.
//! - `transplant` — splicing conditionally sampled blocks over a common
//!   factor and measuring the block-distribution drift.
//!
//! The `ergolab` binary drives the same machinery from configuration
//! files; see the crate README.

pub mod codebook;
pub mod dist;
pub mod entropy;
pub mod error;
pub mod frac;
pub mod lab;
pub mod models;
pub mod recode;
pub mod relative;
pub mod rng;
pub mod schemes;
pub mod suffix;
pub mod towers;
pub mod transplant;
pub mod word;

pub use codebook::{
    minimal_feasible_height, RecodeBook, RecodeBooks, RecodingParams,
    StageLayout,
};
pub use dist::{
    empirical_block_distribution, l1_distance, rho_distance, BlockDistribution,
    KahanSum, WeightedLabeling,
};
pub use entropy::{
    block_entropy, entropy_report, partition_entropy, smb_trajectory,
    EntropyReport, SmbTrajectory,
};
pub use error::{Error, Result};
pub use frac::Frac128;
pub use lab::{
    configure_threads, load_experiment, render_report, run_experiment,
    ConditionalFile, ExperimentConfig, ExperimentReport, JointRef, ModelRef,
    OutputFormat, Row, Verdict, CSV_HEADER, THREADS_ENV,
};
pub use models::{
    load_model, save_model, IidModel, JointModel, MarkovModel, Model,
    ProductModel, RotationModel,
};
pub use recode::{
    base_detection_report, decode_column, decode_path, detect_base,
    recode_column, recode_path, BaseDetectionReport, DecodedPath,
    RecodedColumn, RecodedPath,
};
pub use relative::{coverage_growth, relative_smb_set, RelativeSmbSet};
pub use schemes::{
    convergence_report, ConvergenceReport, PluginPolicy, SchemeDescriptor,
};
pub use suffix::SuffixAutomaton;
pub use towers::{
    extract_columns, kakutani_decompose, rohlin_tower, Column, Tower,
    TowerDecomposition,
};
pub use rng::{derive_seed, Stream};
pub use transplant::{
    transplant_blocks, ColumnConditional, IdentityConditional,
    JointConditional, ProductPairConditional, TransplantOutcome,
    TransplantParams,
};
pub use word::{hamming_fraction, Alphabet, Symbol, Word};
